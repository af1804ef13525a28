//! Events and timers.
//!
//! Events follow the observer pattern: a script defines an event with a
//! unique name, public functions register themselves against it, and
//! triggering the event calls one registrant (`single()`) or all of them in
//! registration order (`multi()`). The event body's locals are copied into
//! every called function's fresh frame under the same names.
//!
//! Timers re-run a block on a millisecond interval for a fixed number of
//! iterations. They snapshot the creating frame's locals at creation time
//! and fire serially on the VM thread; the clock source is injectable so
//! tests can drive a virtual clock deterministically.

use crate::compiler::Invocation;
use crate::error::{msg, SourceSpan};
use crate::value::Value;
use crate::vm::{CallPayload, ExecOutcome, Interp, VarTable};
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

/// Dispatch type of an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Calls exactly one registered function, chosen by the VM's seeded
    /// dispatch generator.
    Single,
    /// Calls every registered function in registration order.
    Multi,
}

/// A compiled event definition.
#[derive(Debug, Clone)]
pub struct EventDef {
    pub name: String,
    pub kind: EventKind,
    pub body: Vec<Invocation>,
    /// Names declared by the body's `args` command, when present.
    pub declared_args: Vec<String>,
    pub span: SourceSpan,
    pub module: Option<String>,
}

/// Millisecond clock driving the timer scheduler.
pub trait Clock {
    fn now_ms(&self) -> u64;
}

/// Monotonic wall clock, measured from construction.
pub struct WallClock {
    start: Instant,
}

impl WallClock {
    pub fn new() -> Self {
        WallClock { start: Instant::now() }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now_ms(&self) -> u64 {
        self.start.elapsed().as_millis() as u64
    }
}

/// Deterministic clock for tests: time moves only when advanced.
#[derive(Clone, Default)]
pub struct VirtualClock(Arc<AtomicU64>);

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn advance(&self, ms: u64) {
        self.0.fetch_add(ms, Ordering::SeqCst);
    }

    pub fn set(&self, ms: u64) {
        self.0.store(ms, Ordering::SeqCst);
    }
}

impl Clock for VirtualClock {
    fn now_ms(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

pub(crate) struct Timer {
    pub name: String,
    pub interval_ms: u64,
    pub remaining: u64,
    pub next_due: u64,
    pub body: Rc<Vec<Invocation>>,
    pub locals: VarTable,
    pub module: Option<String>,
    pub seq: u64,
}

/// Live timer descriptor for watch lists and the `listtimers` command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimerInfo {
    pub name: String,
    pub interval_ms: u64,
    pub remaining: u64,
    pub next_due_ms: u64,
}

#[derive(Default)]
pub struct TimerSet {
    timers: Vec<Timer>,
    seq: u64,
}

impl TimerSet {
    pub(crate) fn insert(&mut self, mut timer: Timer) {
        timer.seq = self.seq;
        self.seq += 1;
        self.timers.push(timer);
    }

    pub(crate) fn contains(&self, name: &str) -> bool {
        self.timers.iter().any(|t| t.name == name)
    }

    pub(crate) fn cancel(&mut self, name: &str) -> bool {
        let before = self.timers.len();
        self.timers.retain(|t| t.name != name);
        self.timers.len() != before
    }

    pub(crate) fn remove_module(&mut self, module: &str) {
        self.timers.retain(|t| t.module.as_deref() != Some(module));
    }

    pub fn is_empty(&self) -> bool {
        self.timers.is_empty()
    }

    pub fn len(&self) -> usize {
        self.timers.len()
    }

    /// Earliest scheduled firing, in clock milliseconds.
    pub fn next_deadline(&self) -> Option<u64> {
        self.timers.iter().map(|t| t.next_due).min()
    }

    pub fn infos(&self) -> Vec<TimerInfo> {
        let mut v: Vec<TimerInfo> = self
            .timers
            .iter()
            .map(|t| TimerInfo {
                name: t.name.clone(),
                interval_ms: t.interval_ms,
                remaining: t.remaining,
                next_due_ms: t.next_due,
            })
            .collect();
        v.sort_by(|a, b| a.name.cmp(&b.name));
        v
    }

    fn take_due(&mut self, now: u64) -> Option<Timer> {
        let idx = self
            .timers
            .iter()
            .enumerate()
            .filter(|(_, t)| t.next_due <= now)
            .min_by_key(|(_, t)| (t.next_due, t.seq))
            .map(|(i, _)| i)?;
        Some(self.timers.remove(idx))
    }
}

/// Calls an event's registered functions with a copy of the event frame's
/// locals, per the event's dispatch kind. Returns the registrants' results
/// in call order, or the first propagating outcome.
pub(crate) fn dispatch(
    interp: &mut Interp,
    event_name: &str,
    event_locals: &VarTable,
) -> Result<Vec<Value>, ExecOutcome> {
    let (kind, registrants) = match interp.events.get(event_name) {
        Some(e) => (e.kind, e.registrants.clone()),
        None => return Err(ExecOutcome::error(format!("unknown event: {event_name}"))),
    };
    let chosen: Vec<String> = match kind {
        EventKind::Multi => registrants,
        EventKind::Single => {
            if registrants.is_empty() {
                Vec::new()
            } else {
                let idx = (interp.rng.next() % registrants.len() as u64) as usize;
                vec![registrants[idx].clone()]
            }
        }
    };
    let mut results = Vec::with_capacity(chosen.len());
    for fname in chosen {
        match interp.call_function(&fname, CallPayload::Locals(event_locals.clone())) {
            Ok(v) => results.push(v),
            Err(e) => return Err(ExecOutcome::error(e.0)),
        }
    }
    Ok(results)
}

impl Interp {
    /// Registers and schedules a timer. `name` must be unique among live
    /// timers and must not contain `#`, which is reserved for generated
    /// names; pass `auto` to let the VM generate one.
    pub(crate) fn create_timer(
        &mut self,
        name: &str,
        interval_ms: u64,
        iterations: u64,
        body: Rc<Vec<Invocation>>,
        locals: VarTable,
        module: Option<String>,
    ) -> Result<String, String> {
        let name = if name == "auto" {
            self.timer_counter += 1;
            format!("timer#{}", self.timer_counter)
        } else {
            if name.contains('#') {
                return Err(msg::invalid_timer_name(name));
            }
            name.to_string()
        };
        if self.timers.contains(&name) || self.firing_timer.as_deref() == Some(&name) {
            return Err(msg::duplicate_timer(&name));
        }
        if iterations == 0 {
            // Registers and immediately expires: zero firings.
            return Ok(name);
        }
        let next_due = self.clock.now_ms() + interval_ms;
        self.timers.insert(Timer {
            name: name.clone(),
            interval_ms,
            remaining: iterations,
            next_due,
            body,
            locals,
            module,
            seq: 0,
        });
        Ok(name)
    }

    pub fn cancel_timer(&mut self, name: &str) -> bool {
        if self.timers.cancel(name) {
            return true;
        }
        if self.firing_timer.as_deref() == Some(name) {
            self.firing_cancelled = true;
            return true;
        }
        false
    }

    pub fn live_timers(&self) -> Vec<TimerInfo> {
        self.timers.infos()
    }

    pub fn next_timer_deadline(&self) -> Option<u64> {
        self.timers.next_deadline()
    }

    pub fn clock_now_ms(&self) -> u64 {
        self.clock.now_ms()
    }

    /// Fires every timer due at the current clock reading, serially, in
    /// deadline order. Each firing runs the timer body in a fresh frame
    /// seeded from the locals captured at creation. A plain error escaping
    /// a body is reported through the error sink and the timer keeps its
    /// remaining iterations. Returns the number of firings.
    pub fn fire_due_timers(&mut self) -> usize {
        let now = self.clock.now_ms();
        let mut fired = 0;
        while let Some(mut timer) = self.timers.take_due(now) {
            self.firing_timer = Some(timer.name.clone());
            self.firing_cancelled = false;

            // Every firing gets a fresh frame seeded from the snapshot, so
            // body mutations never leak into later firings.
            let frame = crate::vm::Frame {
                function_name: timer.name.clone(),
                locals: timer.locals.clone(),
                result: Value::empty(),
                event: None,
                module: timer.module.clone(),
                args_used: false,
            };
            let body = timer.body.clone();
            self.scope.frames.push(frame);
            let outcome = self.run_sequence(&body, crate::vm::ContextId::DEFAULT);
            self.scope.frames.pop().expect("timer frame pushed above");

            if outcome.is_plain_error() {
                let text = outcome.error.as_deref().unwrap_or("");
                self.report_error(&format!("timer {}: {text}", timer.name));
            }

            fired += 1;
            timer.remaining -= 1;
            let cancelled = self.firing_cancelled;
            self.firing_timer = None;
            self.firing_cancelled = false;
            if timer.remaining > 0 && !cancelled {
                timer.next_due += timer.interval_ms;
                if timer.next_due <= now {
                    // Backlogged firings are skipped, not burst-fired.
                    timer.next_due = now + timer.interval_ms;
                }
                self.timers.insert(timer);
            }
        }
        fired
    }
}
