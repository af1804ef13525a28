//! The embedding surface.
//!
//! [`HostConfig`] collects everything an application configures up front:
//! custom commands, constants (literal or function-backed), contexts,
//! host-defined events, the output sink, the clock, and the subprocess
//! policy. `HostConfig::build` produces a single-threaded [`Interp`] for
//! direct embedding; [`Host::spawn`] moves the interpreter onto its own
//! thread behind a run queue, so submissions, reservoir mutations, and
//! event triggers are safe from any thread while scripts and timers stay
//! fully serialized.
//!
//! This module also implements `envrs`: run another interpreter, pipe text
//! through it, and evaluate its standard output through minimal
//! compilation under the default context.

use crate::error::{msg, LoadError};
use crate::events::{EventKind, TimerInfo, VirtualClock};
use crate::value::Value;
use crate::vm::{
    CommandCtx, CommandFilter, CommandSpec, Context, ContextId, DebugEvent, ExecOutcome, Interp,
    RegisterError, StepDecision, SubmitResult, TriggerResult,
};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

pub use crate::vm::EnvrsPolicy;

/// A host-supplied command definition.
pub struct HostCommand {
    pub spec: CommandSpec,
    pub handler: Box<dyn Fn(&mut CommandCtx<'_>) -> ExecOutcome + Send>,
}

/// A host-supplied constant: a literal, or a callable invoked per read.
pub enum HostConstant {
    Literal(String),
    Callable(Box<dyn Fn() -> String + Send>),
}

/// A host-supplied execution context.
pub struct HostContext {
    pub name: String,
    pub constants: Vec<(String, HostConstant)>,
    pub filter: CommandFilter,
}

impl HostContext {
    pub fn new(name: &str) -> Self {
        HostContext { name: name.to_string(), constants: Vec::new(), filter: CommandFilter::All }
    }

    pub fn with_constant(mut self, name: &str, value: &str) -> Self {
        self.constants.push((name.to_string(), HostConstant::Literal(value.to_string())));
        self
    }

    pub fn with_constant_fn(mut self, name: &str, f: impl Fn() -> String + Send + 'static) -> Self {
        self.constants.push((name.to_string(), HostConstant::Callable(Box::new(f))));
        self
    }

    pub fn with_filter(mut self, filter: CommandFilter) -> Self {
        self.filter = filter;
        self
    }
}

/// Where command output (`textout` and friends) goes.
pub enum OutputMode {
    /// Buffered inside the interpreter; drained with `take_output`.
    /// Submission output is always returned with the submission.
    Capture,
    Stdout,
    Writer(Box<dyn Write + Send>),
}

pub enum ClockSource {
    Wall,
    Virtual(VirtualClock),
}

/// Everything the application programmer configures before the VM starts.
pub struct HostConfig {
    pub commands: Vec<HostCommand>,
    pub constants: Vec<(String, HostConstant)>,
    pub contexts: Vec<HostContext>,
    pub host_events: Vec<(String, EventKind)>,
    pub events_enabled: bool,
    pub script_root: PathBuf,
    pub disabled_commands: Vec<String>,
    pub output: OutputMode,
    pub errors_to_stderr: bool,
    pub clock: ClockSource,
    pub seed: Option<u64>,
    pub envrs: EnvrsPolicy,
    pub time_format: Option<String>,
    pub date_format: Option<String>,
}

impl Default for HostConfig {
    fn default() -> Self {
        HostConfig {
            commands: Vec::new(),
            constants: Vec::new(),
            contexts: Vec::new(),
            host_events: Vec::new(),
            events_enabled: true,
            script_root: PathBuf::from("."),
            disabled_commands: Vec::new(),
            output: OutputMode::Capture,
            errors_to_stderr: false,
            clock: ClockSource::Wall,
            seed: None,
            envrs: EnvrsPolicy::default(),
            time_format: None,
            date_format: None,
        }
    }
}

impl HostConfig {
    /// Builds a configured interpreter for direct, single-threaded use.
    pub fn build(self) -> Result<Interp, RegisterError> {
        let mut interp = Interp::new();
        interp.set_events_enabled(self.events_enabled);
        interp.set_script_root(self.script_root);
        interp.set_envrs_policy(self.envrs);
        interp.set_errors_to_stderr(self.errors_to_stderr);
        if let Some(seed) = self.seed {
            interp.set_seed(seed);
        }
        if let Some(f) = &self.time_format {
            interp.set_time_format(f);
        }
        if let Some(f) = &self.date_format {
            interp.set_date_format(f);
        }
        match self.output {
            OutputMode::Capture => {}
            OutputMode::Stdout => interp.set_output_writer(Box::new(std::io::stdout())),
            OutputMode::Writer(w) => interp.set_output_writer(w),
        }
        if let ClockSource::Virtual(clock) = self.clock {
            interp.set_clock(Box::new(clock));
        }
        for command in self.commands {
            let handler = command.handler;
            interp.register_command(command.spec, move |c| handler(c))?;
        }
        for (name, constant) in self.constants {
            match constant {
                HostConstant::Literal(v) => interp.register_constant(&name, &v),
                HostConstant::Callable(f) => {
                    interp.register_constant_fn(&name, move || Value::new(f()))
                }
            }
        }
        for host_ctx in self.contexts {
            let mut context = Context::new(&host_ctx.name).with_filter(host_ctx.filter);
            for (name, constant) in host_ctx.constants {
                context = match constant {
                    HostConstant::Literal(v) => context.with_constant(&name, &v),
                    HostConstant::Callable(f) => {
                        context.with_constant_fn(&name, move || Value::new(f()))
                    }
                };
            }
            interp.register_context(context);
        }
        for (name, kind) in self.host_events {
            interp
                .define_host_event(&name, kind)
                .map_err(|_| RegisterError::Duplicate(name.clone()))?;
        }
        for name in &self.disabled_commands {
            interp.disable_command(name);
        }
        Ok(interp)
    }
}

enum Msg {
    Run(Box<dyn FnOnce(&mut Interp) + Send>),
    WaitTimersIdle(mpsc::Sender<()>),
    Shutdown,
}

/// Pending result of an asynchronous submission.
pub struct Submission(mpsc::Receiver<SubmitResult>);

impl Submission {
    pub fn wait(self) -> SubmitResult {
        self.0.recv().expect("vm thread delivers every submission")
    }

    pub fn wait_timeout(&self, timeout: Duration) -> Option<SubmitResult> {
        self.0.recv_timeout(timeout).ok()
    }
}

/// A T2Script VM running on its own thread behind a run queue.
///
/// All mutation and execution requests are serialized through the queue,
/// so they are safe to issue from any thread; scripts never observe torn
/// state. Timers fire on the VM thread between queued requests.
///
/// ```
/// use t2script::embed::{Host, HostConfig};
///
/// let host = Host::spawn(HostConfig::default()).unwrap();
/// let result = host.submit("textout hello");
/// assert_eq!(result.output, "hello\n");
/// host.shutdown();
/// ```
pub struct Host {
    tx: mpsc::Sender<Msg>,
    join: Option<JoinHandle<()>>,
}

impl Host {
    pub fn spawn(config: HostConfig) -> Result<Host, RegisterError> {
        let (tx, rx) = mpsc::channel::<Msg>();
        let (ready_tx, ready_rx) = mpsc::channel::<Result<(), RegisterError>>();
        let join = thread::Builder::new()
            .name("t2script-vm".to_string())
            // headroom for the bounded execution and expression nesting
            .stack_size(16 * 1024 * 1024)
            .spawn(move || {
                let mut interp = match config.build() {
                    Ok(i) => {
                        let _ = ready_tx.send(Ok(()));
                        i
                    }
                    Err(e) => {
                        let _ = ready_tx.send(Err(e));
                        return;
                    }
                };
                run_loop(&mut interp, rx);
            })
            .expect("spawning the vm thread");
        ready_rx.recv().expect("vm thread reports readiness")?;
        Ok(Host { tx, join: Some(join) })
    }

    /// Runs a closure on the VM thread and returns its result.
    pub fn with<R: Send + 'static>(
        &self,
        f: impl FnOnce(&mut Interp) -> R + Send + 'static,
    ) -> R {
        let (tx, rx) = mpsc::channel();
        self.tx
            .send(Msg::Run(Box::new(move |interp| {
                let _ = tx.send(f(interp));
            })))
            .expect("vm thread alive");
        rx.recv().expect("vm thread alive")
    }

    /// Compiles and executes one single command under the default context,
    /// waiting for the outcome and the captured output.
    pub fn submit(&self, text: &str) -> SubmitResult {
        self.submit_in(text, None)
    }

    pub fn submit_in(&self, text: &str, context: Option<ContextId>) -> SubmitResult {
        let text = text.to_string();
        self.with(move |i| match context {
            Some(ctx) => i.submit_with_context(&text, ctx),
            None => i.submit(&text),
        })
    }

    /// Enqueues a single command without waiting.
    pub fn submit_async(&self, text: &str, context: Option<ContextId>) -> Submission {
        let (tx, rx) = mpsc::channel();
        let text = text.to_string();
        self.tx
            .send(Msg::Run(Box::new(move |interp| {
                let result = match context {
                    Some(ctx) => interp.submit_with_context(&text, ctx),
                    None => interp.submit(&text),
                };
                let _ = tx.send(result);
            })))
            .expect("vm thread alive");
        Submission(rx)
    }

    pub fn load_module(&self, module: &str, path: &str) -> Result<(), LoadError> {
        let module = module.to_string();
        let path = path.to_string();
        self.with(move |i| i.load_module_file(&module, &path).map(|_| ()))
    }

    pub fn load_module_source(&self, module: &str, source: &str) -> Result<(), LoadError> {
        let module = module.to_string();
        let source = source.to_string();
        let label = format!("<{module}>");
        self.with(move |i| i.load_module_source(&module, &source, &label).map(|_| ()))
    }

    pub fn unload_module(&self, module: &str) -> Result<(), LoadError> {
        let module = module.to_string();
        self.with(move |i| i.unload_module(&module))
    }

    pub fn run_script_file(&self, module: &str, path: &str, args: &str) -> ExecOutcome {
        let (module, path, args) = (module.to_string(), path.to_string(), args.to_string());
        self.with(move |i| i.run_script_file(&module, &path, &args))
    }

    pub fn trigger_event(&self, name: &str, vars: Vec<(String, String)>) -> TriggerResult {
        let name = name.to_string();
        self.with(move |i| {
            let borrowed: Vec<(&str, &str)> =
                vars.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
            i.trigger_host_event(&name, &borrowed)
        })
    }

    pub fn take_output(&self) -> String {
        self.with(|i| i.take_output())
    }

    pub fn take_errors(&self) -> Vec<String> {
        self.with(|i| i.take_errors())
    }

    pub fn live_timers(&self) -> Vec<TimerInfo> {
        self.with(|i| i.live_timers())
    }

    pub fn disable_command(&self, name: &str) -> bool {
        let name = name.to_string();
        self.with(move |i| i.disable_command(&name))
    }

    pub fn enable_command(&self, name: &str) -> bool {
        let name = name.to_string();
        self.with(move |i| i.enable_command(&name))
    }

    pub fn remove_command(&self, name: &str) -> bool {
        let name = name.to_string();
        self.with(move |i| i.remove_command(&name))
    }

    pub fn context_id(&self, name: &str) -> Option<ContextId> {
        let name = name.to_string();
        self.with(move |i| i.context_id_by_name(&name))
    }

    pub fn attach_debug_hook(
        &self,
        hook: Box<dyn FnMut(&DebugEvent<'_>) -> StepDecision + Send>,
    ) {
        self.with(move |i| i.attach_debug_hook(hook));
    }

    pub fn detach_debug_hook(&self) {
        self.with(|i| i.detach_debug_hook());
    }

    /// Wakes the VM thread so due timers fire (useful with virtual clocks).
    pub fn pump(&self) {
        self.with(|_| ());
    }

    /// Blocks until no live timers remain, or until the timeout elapses.
    /// Returns true when the timer set drained.
    pub fn wait_timers_idle(&self, timeout: Option<Duration>) -> bool {
        let (tx, rx) = mpsc::channel();
        if self.tx.send(Msg::WaitTimersIdle(tx)).is_err() {
            return false;
        }
        match timeout {
            Some(t) => rx.recv_timeout(t).is_ok(),
            None => rx.recv().is_ok(),
        }
    }

    pub fn shutdown(mut self) {
        self.shutdown_inner();
    }

    fn shutdown_inner(&mut self) {
        let _ = self.tx.send(Msg::Shutdown);
        if let Some(join) = self.join.take() {
            let _ = join.join();
        }
    }
}

impl Drop for Host {
    fn drop(&mut self) {
        self.shutdown_inner();
    }
}

fn run_loop(interp: &mut Interp, rx: mpsc::Receiver<Msg>) {
    let mut idle_waiters: Vec<mpsc::Sender<()>> = Vec::new();
    loop {
        interp.fire_due_timers();
        if interp.next_timer_deadline().is_none() {
            for waiter in idle_waiters.drain(..) {
                let _ = waiter.send(());
            }
        }
        let msg = match interp.next_timer_deadline() {
            None => match rx.recv() {
                Ok(m) => m,
                Err(_) => break,
            },
            Some(deadline) => {
                let wait = deadline.saturating_sub(interp.clock_now_ms()).max(1);
                match rx.recv_timeout(Duration::from_millis(wait)) {
                    Ok(m) => m,
                    Err(mpsc::RecvTimeoutError::Timeout) => continue,
                    Err(mpsc::RecvTimeoutError::Disconnected) => break,
                }
            }
        };
        match msg {
            Msg::Run(f) => f(interp),
            Msg::WaitTimersIdle(tx) => idle_waiters.push(tx),
            Msg::Shutdown => break,
        }
    }
}

// ----------------------------------------------------------------------
// envrs: metaprogramming through an external interpreter

/// Splits an argument string on whitespace, honoring double- and
/// single-quoted segments (no escape processing).
pub(crate) fn split_args(s: &str) -> Vec<String> {
    let mut args = Vec::new();
    let mut current = String::new();
    let mut quote: Option<char> = None;
    let mut quoted = false;
    for ch in s.chars() {
        match quote {
            Some(q) if ch == q => quote = None,
            Some(_) => current.push(ch),
            None => match ch {
                '"' | '\'' => {
                    quote = Some(ch);
                    quoted = true;
                }
                c if c.is_whitespace() => {
                    if quoted || !current.is_empty() {
                        args.push(std::mem::take(&mut current));
                        quoted = false;
                    }
                }
                c => current.push(c),
            },
        }
    }
    if quoted || !current.is_empty() {
        args.push(current);
    }
    args
}

fn run_subprocess(
    program: &str,
    argv: &[String],
    input: &str,
    timeout: Duration,
) -> Result<String, String> {
    let mut child = Command::new(program)
        .args(argv)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| msg::spawn_failure(program, &e.to_string()))?;

    let mut stdin = child.stdin.take().expect("stdin piped");
    let mut stdout = child.stdout.take().expect("stdout piped");
    let mut stderr = child.stderr.take().expect("stderr piped");
    let input = input.to_string();
    let writer = thread::spawn(move || {
        let _ = stdin.write_all(input.as_bytes());
    });
    let (tx, rx) = mpsc::channel();
    let reader = thread::spawn(move || {
        let mut out = String::new();
        let _ = stdout.read_to_string(&mut out);
        let mut err = String::new();
        let _ = stderr.read_to_string(&mut err);
        let _ = tx.send((out, err));
    });

    let (out, err_text) = match rx.recv_timeout(timeout) {
        Ok(pair) => pair,
        Err(_) => {
            let _ = child.kill();
            let _ = child.wait();
            // The reader and writer threads are left to finish on their
            // own: orphaned grandchildren may hold the pipes open well
            // past the timeout, and joining would block on them.
            drop(writer);
            drop(reader);
            return Err(msg::envrs_timeout(timeout.as_millis()));
        }
    };
    let status = child.wait().map_err(|e| msg::spawn_failure(program, &e.to_string()))?;
    let _ = writer.join();
    let _ = reader.join();
    if !status.success() {
        let code = status
            .code()
            .map(|c| c.to_string())
            .unwrap_or_else(|| "terminated by signal".to_string());
        return Err(msg::envrs_exit(&code, err_text.trim()));
    }
    Ok(out)
}

/// `envrs <interpreter> <arguments> <input>`: runs the interpreter with the
/// given arguments, writes `input` to its standard input, and evaluates the
/// captured standard output through minimal compilation under the default
/// context.
pub(crate) fn cmd_envrs(c: &mut CommandCtx) -> ExecOutcome {
    let interpreter = c.param(0).as_str().to_string();
    let arguments = c.param(1).as_str().to_string();
    let input = c.param(2).as_str().to_string();
    let policy = c.interp.envrs.clone();
    if let Some(allow) = &policy.allow {
        if !allow.iter().any(|p| p.as_path() == Path::new(&interpreter)) {
            return ExecOutcome::error(msg::envrs_not_allowed(&interpreter));
        }
    }
    let argv = split_args(&arguments);
    let stdout = match run_subprocess(&interpreter, &argv, &input, policy.timeout) {
        Ok(s) => s,
        Err(e) => return ExecOutcome::error(e),
    };
    c.interp.run_minimal_source(&stdout, "<envrs>", ContextId::DEFAULT)
}
