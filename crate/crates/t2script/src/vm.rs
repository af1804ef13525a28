//! The virtual machine: command reservoir, scopes, contexts, frames, and
//! the execution engine.
//!
//! Execution is driven by the command result protocol: every command yields
//! an [`ExecOutcome`] of a boolean result and an optional error text.
//! A false result with no error is a function return; the special codes
//! `` `continue `` and `` `break `` steer the innermost loop; any other
//! error text propagates outward until a `catch` block (or the top level)
//! absorbs it. Error texts beginning with a backtick are internal control
//! signals: they are never displayed and never caught.
//!
//! The [`Interp`] owns all runtime state and executes on a single logical
//! thread. Hosts that need cross-thread submission wrap it in
//! [`embed::Host`](crate::embed::Host), which serializes work through a run
//! queue.

use crate::builtins;
use crate::compiler::{self, FunctionDef, Invocation, Program};
use crate::error::{msg, EvalError, LoadError, SourceSpan};
use crate::events::{Clock, EventDef, EventKind, TimerSet, WallClock};
use crate::expr;
use crate::reader::{self, SourceOrigin};
use crate::value::Value;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::rc::Rc;
use std::time::Duration;

/// The special error code consumed by loops to continue with the next
/// iteration.
pub const SPECIAL_CONTINUE: &str = "`continue";
/// The special error code consumed by loops to terminate.
pub const SPECIAL_BREAK: &str = "`break";

/// The (result, error code) pair every command execution produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecOutcome {
    pub ok: bool,
    pub error: Option<String>,
}

impl ExecOutcome {
    pub fn success() -> Self {
        ExecOutcome { ok: true, error: None }
    }

    /// False result without an error: a function return.
    pub fn func_return() -> Self {
        ExecOutcome { ok: false, error: None }
    }

    pub fn error(text: impl Into<String>) -> Self {
        ExecOutcome { ok: false, error: Some(text.into()) }
    }

    pub fn continue_loop() -> Self {
        ExecOutcome::error(SPECIAL_CONTINUE)
    }

    pub fn break_loop() -> Self {
        ExecOutcome::error(SPECIAL_BREAK)
    }

    pub fn is_success(&self) -> bool {
        self.ok
    }

    pub fn is_func_return(&self) -> bool {
        !self.ok && self.error.is_none()
    }

    /// True for backtick-prefixed error codes (internal control signals).
    pub fn is_special(&self) -> bool {
        matches!(&self.error, Some(e) if e.starts_with('`'))
    }

    pub fn is_continue(&self) -> bool {
        self.error.as_deref() == Some(SPECIAL_CONTINUE)
    }

    pub fn is_break(&self) -> bool {
        self.error.as_deref() == Some(SPECIAL_BREAK)
    }

    /// True for a displayable, catchable error.
    pub fn is_plain_error(&self) -> bool {
        matches!(&self.error, Some(e) if !e.starts_with('`'))
    }
}

impl From<EvalError> for ExecOutcome {
    fn from(e: EvalError) -> Self {
        ExecOutcome::error(e.0)
    }
}

/// Handle of a resolved reservoir entry. Compiled programs store these;
/// a later removal or disable turns execution of the handle into a
/// `disabled command` error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CommandId(pub(crate) u32);

/// Parameter count rule of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Fixed(usize),
    AtLeast(usize),
    Range(usize, usize),
}

/// Block shape of a command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockSpec {
    None,
    One,
    Two { keyword: String, second_required: bool },
}

/// How the VM treats expressions in the parameters before the handler runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExprMode {
    /// All parameters are interpolated before the handler sees them.
    Automatic,
    /// Parameters reach the handler in raw form; the handler interpolates
    /// whatever it needs, whenever it needs it (eval-type commands, loop
    /// conditions).
    OnDemand,
}

/// Which contexts a command is available under, from the command's side.
/// Contexts additionally carry their own command filter.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ContextRule {
    #[default]
    All,
    Only(HashSet<ContextId>),
}

impl ContextRule {
    fn allows(&self, ctx: ContextId) -> bool {
        match self {
            ContextRule::All => true,
            ContextRule::Only(set) => set.contains(&ctx),
        }
    }
}

/// One Commands Reservoir entry: everything the compiler and the engine
/// need to know about a command, minus the handler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandSpec {
    pub name: String,
    pub arity: Arity,
    /// For `AtLeast`/`Range` arities: keep the trailing text as one final
    /// parameter instead of splitting it into words. Fixed-arity commands
    /// always deliver the final parameter verbatim.
    pub tail_param: bool,
    pub blocks: BlockSpec,
    /// Whether the command also has an inline form, where the final extra
    /// parameter is one complete command text to evaluate instead of a
    /// block.
    pub inline_form: bool,
    pub expr_mode: ExprMode,
    pub availability: ContextRule,
}

impl CommandSpec {
    pub fn new(name: &str, arity: Arity) -> Self {
        CommandSpec {
            name: name.to_lowercase(),
            arity,
            tail_param: matches!(arity, Arity::Fixed(_) | Arity::Range(..)),
            blocks: BlockSpec::None,
            inline_form: false,
            expr_mode: ExprMode::Automatic,
            availability: ContextRule::All,
        }
    }

    pub fn blocks(mut self, blocks: BlockSpec) -> Self {
        self.blocks = blocks;
        self
    }

    pub fn inline_form(mut self) -> Self {
        self.inline_form = true;
        self
    }

    pub fn on_demand(mut self) -> Self {
        self.expr_mode = ExprMode::OnDemand;
        self
    }

    pub fn words_only(mut self) -> Self {
        self.tail_param = false;
        self
    }

    pub fn tail(mut self) -> Self {
        self.tail_param = true;
        self
    }

    pub fn availability(mut self, rule: ContextRule) -> Self {
        self.availability = rule;
        self
    }
}

type HostCommandFn = dyn Fn(&mut CommandCtx<'_>) -> ExecOutcome;
pub(crate) type BuiltinFn = fn(&mut CommandCtx<'_>) -> ExecOutcome;

#[derive(Clone)]
pub(crate) enum Handler {
    Builtin(BuiltinFn),
    Host(Rc<HostCommandFn>),
}

pub(crate) struct ReservoirEntry {
    pub spec: CommandSpec,
    pub handler: Handler,
    pub enabled: bool,
    pub removed: bool,
}

/// The runtime-mutable command set constituting the VM's API.
#[derive(Default)]
pub struct Reservoir {
    entries: Vec<ReservoirEntry>,
    by_name: HashMap<String, CommandId>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegisterError {
    #[error("command already registered: {0}")]
    Duplicate(String),
    #[error("invalid command name: {0}")]
    InvalidName(String),
}

impl Reservoir {
    pub(crate) fn add(
        &mut self,
        spec: CommandSpec,
        handler: Handler,
    ) -> Result<CommandId, RegisterError> {
        if !compiler::is_valid_command_name(&spec.name) {
            return Err(RegisterError::InvalidName(spec.name.clone()));
        }
        if let Some(id) = self.by_name.get(&spec.name).copied() {
            let live = &mut self.entries[id.0 as usize];
            if live.enabled && !live.removed {
                return Err(RegisterError::Duplicate(spec.name.clone()));
            }
            // A disabled entry may be shadowed by a new registration.
            // Programs compiled against the old handle keep getting the
            // disabled-command error; new compilations resolve the
            // replacement.
            live.removed = true;
            live.enabled = false;
        }
        let id = CommandId(self.entries.len() as u32);
        self.by_name.insert(spec.name.clone(), id);
        self.entries.push(ReservoirEntry { spec, handler, enabled: true, removed: false });
        Ok(id)
    }

    pub fn resolve(&self, name: &str) -> Option<CommandId> {
        let folded = name.to_lowercase();
        let id = *self.by_name.get(&folded)?;
        if self.entries[id.0 as usize].removed {
            None
        } else {
            Some(id)
        }
    }

    pub(crate) fn entry(&self, id: CommandId) -> Option<&ReservoirEntry> {
        self.entries.get(id.0 as usize).filter(|e| !e.removed)
    }

    pub fn spec(&self, id: CommandId) -> Option<&CommandSpec> {
        self.entry(id).map(|e| &e.spec)
    }

    /// Disables a command: it still resolves at compile time but raises a
    /// `disabled command` error when executed. Unknown names are ignored.
    pub fn disable(&mut self, name: &str) -> bool {
        if let Some(id) = self.resolve(name) {
            self.entries[id.0 as usize].enabled = false;
            true
        } else {
            false
        }
    }

    pub fn enable(&mut self, name: &str) -> bool {
        if let Some(id) = self.resolve(name) {
            self.entries[id.0 as usize].enabled = true;
            true
        } else {
            false
        }
    }

    /// Removes a command from the name table. Compiled programs holding the
    /// old handle get a `disabled command` error at execution. Removing an
    /// unknown name is a no-op.
    pub fn remove(&mut self, name: &str) -> bool {
        if let Some(id) = self.resolve(name) {
            let entry = &mut self.entries[id.0 as usize];
            entry.removed = true;
            entry.enabled = false;
            self.by_name.remove(&entry.spec.name);
            true
        } else {
            false
        }
    }

    pub fn is_enabled(&self, name: &str) -> bool {
        self.resolve(name)
            .map(|id| self.entries[id.0 as usize].enabled)
            .unwrap_or(false)
    }

    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .entries
            .iter()
            .filter(|e| !e.removed)
            .map(|e| e.spec.name.clone())
            .collect();
        names.sort();
        names
    }
}

/// One-dimensional array variable: numeric indices plus associative keys.
/// Iteration yields numeric entries in ascending index order, then
/// associative entries in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValueArray {
    numeric: BTreeMap<i64, Value>,
    assoc: Vec<(String, Value)>,
}

impl ValueArray {
    pub fn set(&mut self, key: &str, value: Value) {
        if let Ok(i) = key.trim().parse::<i64>() {
            self.numeric.insert(i, value);
        } else if let Some(slot) = self.assoc.iter_mut().find(|(k, _)| k == key) {
            slot.1 = value;
        } else {
            self.assoc.push((key.to_string(), value));
        }
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        if let Ok(i) = key.trim().parse::<i64>() {
            self.numeric.get(&i)
        } else {
            self.assoc.iter().find(|(k, _)| k == key).map(|(_, v)| v)
        }
    }

    pub fn len(&self) -> usize {
        self.numeric.len() + self.assoc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (String, &Value)> {
        self.numeric
            .iter()
            .map(|(k, v)| (k.to_string(), v))
            .chain(self.assoc.iter().map(|(k, v)| (k.clone(), v)))
    }
}

/// Scalars and arrays of one storage level (globals or one frame).
#[derive(Debug, Clone, Default)]
pub struct VarTable {
    pub(crate) scalars: HashMap<String, Value>,
    pub(crate) arrays: HashMap<String, ValueArray>,
}

impl VarTable {
    pub fn new() -> Self {
        VarTable::default()
    }

    pub fn set_scalar(&mut self, name: &str, v: Value) {
        self.scalars.insert(name.to_string(), v);
    }

    pub fn set_element(&mut self, name: &str, key: &str, v: Value) {
        self.arrays.entry(name.to_string()).or_default().set(key, v);
    }
}

/// One function/event/timer activation.
#[derive(Debug, Clone)]
pub struct Frame {
    pub function_name: String,
    pub locals: VarTable,
    pub result: Value,
    /// Set while executing an event body; enables `trigger`.
    pub(crate) event: Option<String>,
    pub(crate) module: Option<String>,
    pub(crate) args_used: bool,
}

impl Frame {
    fn new(name: &str) -> Self {
        Frame {
            function_name: name.to_string(),
            locals: VarTable::new(),
            result: Value::empty(),
            event: None,
            module: None,
            args_used: false,
        }
    }
}

/// Variable storage: globals plus the frame stack. A root frame always
/// exists, so frame locals (`@name`) work at the top level too.
#[derive(Debug)]
pub struct Scope {
    pub(crate) globals: VarTable,
    pub(crate) frames: Vec<Frame>,
}

fn split_local(name: &str) -> (bool, &str) {
    match name.strip_prefix('@') {
        Some(bare) => (true, bare),
        None => (false, name),
    }
}

impl Scope {
    fn new() -> Self {
        Scope { globals: VarTable::new(), frames: vec![Frame::new("<root>")] }
    }

    pub(crate) fn frame(&self) -> &Frame {
        self.frames.last().expect("root frame always present")
    }

    pub(crate) fn frame_mut(&mut self) -> &mut Frame {
        self.frames.last_mut().expect("root frame always present")
    }

    fn table(&self, local: bool) -> &VarTable {
        if local {
            &self.frame().locals
        } else {
            &self.globals
        }
    }

    fn table_mut(&mut self, local: bool) -> &mut VarTable {
        if local {
            &mut self.frame_mut().locals
        } else {
            &mut self.globals
        }
    }

    /// Reads a scalar; `name` may carry a leading `@` for frame locals.
    pub fn get(&self, name: &str) -> Option<&Value> {
        let (local, bare) = split_local(name);
        self.table(local).scalars.get(bare)
    }

    pub fn set(&mut self, name: &str, v: Value) {
        let (local, bare) = split_local(name);
        self.table_mut(local).scalars.insert(bare.to_string(), v);
    }

    pub fn remove(&mut self, name: &str) {
        let (local, bare) = split_local(name);
        let t = self.table_mut(local);
        t.scalars.remove(bare);
        t.arrays.remove(bare);
    }

    pub fn array(&self, name: &str) -> Option<&ValueArray> {
        let (local, bare) = split_local(name);
        self.table(local).arrays.get(bare)
    }

    pub fn set_element(&mut self, name: &str, key: &str, v: Value) {
        let (local, bare) = split_local(name);
        self.table_mut(local).arrays.entry(bare.to_string()).or_default().set(key, v);
    }

    pub fn set_array(&mut self, name: &str, array: ValueArray) {
        let (local, bare) = split_local(name);
        self.table_mut(local).arrays.insert(bare.to_string(), array);
    }

    pub fn remove_array(&mut self, name: &str) {
        let (local, bare) = split_local(name);
        self.table_mut(local).arrays.remove(bare);
    }

    pub fn has_scalar(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    /// True when the name is set as a scalar or as an array.
    pub fn exists(&self, name: &str) -> bool {
        let (local, bare) = split_local(name);
        let t = self.table(local);
        t.scalars.contains_key(bare) || t.arrays.contains_key(bare)
    }
}

/// A binding behind a constant name: a literal, or a callable invoked on
/// every read.
#[derive(Clone)]
pub enum ConstantBinding {
    Literal(Value),
    Callable(Rc<dyn Fn() -> Value>),
}

impl ConstantBinding {
    pub(crate) fn read(&self) -> Value {
        match self {
            ConstantBinding::Literal(v) => v.clone(),
            ConstantBinding::Callable(f) => f(),
        }
    }
}

impl fmt::Debug for ConstantBinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstantBinding::Literal(v) => write!(f, "Literal({v:?})"),
            ConstantBinding::Callable(_) => write!(f, "Callable(..)"),
        }
    }
}

/// Identifier of an execution context. Context 0 is the default context and
/// always exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContextId(pub u32);

impl ContextId {
    pub const DEFAULT: ContextId = ContextId(0);
}

/// Which commands a context admits.
#[derive(Debug, Clone, Default)]
pub enum CommandFilter {
    #[default]
    All,
    Only(HashSet<String>),
    Except(HashSet<String>),
}

impl CommandFilter {
    fn allows(&self, folded_name: &str) -> bool {
        match self {
            CommandFilter::All => true,
            CommandFilter::Only(set) => set.contains(folded_name),
            CommandFilter::Except(set) => !set.contains(folded_name),
        }
    }
}

/// Background information of a command execution: per-context constants and
/// a command availability filter.
#[derive(Debug, Clone, Default)]
pub struct Context {
    pub name: String,
    pub(crate) constants: HashMap<String, ConstantBinding>,
    pub(crate) filter: CommandFilter,
}

impl Context {
    pub fn new(name: &str) -> Self {
        Context { name: name.to_string(), ..Default::default() }
    }

    pub fn with_constant(mut self, name: &str, value: &str) -> Self {
        self.constants
            .insert(name.to_string(), ConstantBinding::Literal(Value::new(value)));
        self
    }

    pub fn with_constant_fn(mut self, name: &str, f: impl Fn() -> Value + 'static) -> Self {
        self.constants
            .insert(name.to_string(), ConstantBinding::Callable(Rc::new(f)));
        self
    }

    pub fn with_filter(mut self, filter: CommandFilter) -> Self {
        self.filter = filter;
        self
    }
}

/// Step decision of a debug hook.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepDecision {
    Continue,
    /// Park the VM: the hook is invoked again with the same event until it
    /// answers `Continue`.
    StepStop,
}

/// Snapshot handed to the debug hook before every command execution.
pub struct DebugEvent<'a> {
    pub command: &'a str,
    pub raw_params: &'a [String],
    pub span: &'a SourceSpan,
    scope: &'a Scope,
    functions: &'a HashMap<String, Rc<FunctionDef>>,
    timers: &'a TimerSet,
}

impl DebugEvent<'_> {
    pub fn globals(&self) -> Vec<(String, Value)> {
        let mut v: Vec<_> = self
            .scope
            .globals
            .scalars
            .iter()
            .map(|(k, val)| (k.clone(), val.clone()))
            .collect();
        v.sort();
        v
    }

    /// Locals of the innermost frame, evaluated in place.
    pub fn locals(&self) -> Vec<(String, Value)> {
        let mut v: Vec<_> = self
            .scope
            .frame()
            .locals
            .scalars
            .iter()
            .map(|(k, val)| (k.clone(), val.clone()))
            .collect();
        v.sort();
        v
    }

    pub fn functions(&self) -> Vec<String> {
        let mut v: Vec<_> = self.functions.keys().cloned().collect();
        v.sort();
        v
    }

    pub fn timers(&self) -> Vec<crate::events::TimerInfo> {
        self.timers.infos()
    }

    pub fn frame_depth(&self) -> usize {
        self.scope.frames.len()
    }
}

pub type DebugHookFn = Box<dyn FnMut(&DebugEvent<'_>) -> StepDecision>;

/// A registered script event (or a host-defined, body-less one) plus its
/// registered public functions in registration order.
pub(crate) struct EventEntry {
    pub kind: EventKind,
    pub body: Option<Rc<EventDef>>,
    pub module: Option<String>,
    pub registrants: Vec<String>,
}

/// Payload shapes for calling a function.
pub(crate) enum CallPayload {
    /// Mode 1: one argument string, split into words; word i becomes
    /// `@arg[i]`.
    Words(String),
    /// Mode 2: whole values; value i becomes `@arg[i]` even when it
    /// contains spaces or is empty.
    Values(Vec<Value>),
    /// Pre-built locals (event dispatch, timers).
    Locals(VarTable),
}

struct InvRecord {
    name: String,
    params: String,
}

struct OutputBuf {
    base: Option<Box<dyn Write + Send>>,
    global: String,
    submission: Option<String>,
}

impl OutputBuf {
    fn write_text(&mut self, s: &str) {
        if let Some(sub) = &mut self.submission {
            sub.push_str(s);
        } else if self.base.is_none() {
            self.global.push_str(s);
        }
        if let Some(w) = &mut self.base {
            let _ = w.write_all(s.as_bytes());
            let _ = w.flush();
        }
    }
}

struct ErrorSink {
    to_stderr: bool,
    entries: Vec<String>,
}

/// Subprocess policy for the `envrs` metaprogramming command.
#[derive(Debug, Clone)]
pub struct EnvrsPolicy {
    pub timeout: Duration,
    /// When set, only the listed interpreter paths may run.
    pub allow: Option<Vec<PathBuf>>,
}

impl Default for EnvrsPolicy {
    fn default() -> Self {
        EnvrsPolicy { timeout: Duration::from_secs(30), allow: None }
    }
}

pub(crate) struct SplitMix64(u64);

impl SplitMix64 {
    pub(crate) fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    pub(crate) fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }
}

/// Result of submitting a single command: the outcome plus the output the
/// command wrote while it ran.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubmitResult {
    pub outcome: ExecOutcome,
    pub output: String,
}

/// Result of triggering an event from the host side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerResult {
    pub outcome: ExecOutcome,
    /// The event body's result, when the event has a body.
    pub result: Value,
    /// Results of the called registrants, for body-less host events.
    pub results: Vec<Value>,
}

/// The T2Script virtual machine.
///
/// An `Interp` owns the command reservoir, variables, functions, events,
/// timers, and contexts, and executes compiled programs. It is built for
/// single-threaded use; see [`embed::Host`](crate::embed::Host) for the
/// thread-safe run queue wrapper.
pub struct Interp {
    pub(crate) reservoir: Reservoir,
    pub(crate) scope: Scope,
    pub(crate) functions: HashMap<String, Rc<FunctionDef>>,
    pub(crate) events: HashMap<String, EventEntry>,
    pub(crate) modules: HashSet<String>,
    pub(crate) pending_puts: HashMap<String, Vec<(String, Value)>>,
    pub(crate) constants: HashMap<String, ConstantBinding>,
    pub(crate) contexts: Vec<Context>,
    pub(crate) timers: TimerSet,
    pub(crate) clock: Box<dyn Clock>,
    out: OutputBuf,
    errors: ErrorSink,
    hook: Option<DebugHookFn>,
    pub(crate) rng: SplitMix64,
    pub(crate) script_root: PathBuf,
    pub(crate) envrs: EnvrsPolicy,
    pub(crate) events_enabled: bool,
    pub(crate) time_format: String,
    pub(crate) date_format: String,
    inv_stack: Vec<InvRecord>,
    recursion_limit: usize,
    pub(crate) expr_depth: usize,
    exec_depth: usize,
    pub(crate) timer_counter: u64,
    pub(crate) firing_timer: Option<String>,
    pub(crate) firing_cancelled: bool,
}

impl Default for Interp {
    fn default() -> Self {
        Self::new()
    }
}

impl Interp {
    /// A fresh interpreter with the full built-in command set, the default
    /// context, a wall clock, and a capturing output sink.
    pub fn new() -> Self {
        let seed = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0x5EED);
        let mut interp = Interp {
            reservoir: Reservoir::default(),
            scope: Scope::new(),
            functions: HashMap::new(),
            events: HashMap::new(),
            modules: HashSet::new(),
            pending_puts: HashMap::new(),
            constants: HashMap::new(),
            contexts: vec![Context::new("default")],
            timers: TimerSet::default(),
            clock: Box::new(WallClock::new()),
            out: OutputBuf { base: None, global: String::new(), submission: None },
            errors: ErrorSink { to_stderr: false, entries: Vec::new() },
            hook: None,
            rng: SplitMix64::new(seed),
            script_root: PathBuf::from("."),
            envrs: EnvrsPolicy::default(),
            events_enabled: true,
            time_format: "%H:%M:%S".to_string(),
            date_format: "%Y-%m-%d".to_string(),
            inv_stack: Vec::new(),
            recursion_limit: 256,
            expr_depth: 0,
            exec_depth: 0,
            timer_counter: 0,
            firing_timer: None,
            firing_cancelled: false,
        };
        builtins::install(&mut interp);
        interp
    }

    // ----------------------------------------------------------------
    // Configuration

    pub fn set_output_writer(&mut self, w: Box<dyn Write + Send>) {
        self.out.base = Some(w);
    }

    pub fn set_errors_to_stderr(&mut self, yes: bool) {
        self.errors.to_stderr = yes;
    }

    pub fn set_clock(&mut self, clock: Box<dyn Clock>) {
        self.clock = clock;
    }

    pub fn set_script_root(&mut self, root: PathBuf) {
        self.script_root = root;
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.rng = SplitMix64::new(seed);
    }

    pub fn set_events_enabled(&mut self, yes: bool) {
        self.events_enabled = yes;
    }

    pub fn set_envrs_policy(&mut self, policy: EnvrsPolicy) {
        self.envrs = policy;
    }

    pub fn set_recursion_limit(&mut self, limit: usize) {
        self.recursion_limit = limit.max(8);
    }

    pub fn set_time_format(&mut self, fmt: &str) {
        self.time_format = fmt.to_string();
    }

    pub fn set_date_format(&mut self, fmt: &str) {
        self.date_format = fmt.to_string();
    }

    // ----------------------------------------------------------------
    // Reservoir and constants

    pub fn register_command(
        &mut self,
        spec: CommandSpec,
        handler: impl Fn(&mut CommandCtx<'_>) -> ExecOutcome + 'static,
    ) -> Result<CommandId, RegisterError> {
        self.reservoir.add(spec, Handler::Host(Rc::new(handler)))
    }

    pub(crate) fn register_builtin(
        &mut self,
        spec: CommandSpec,
        handler: BuiltinFn,
    ) -> CommandId {
        self.reservoir
            .add(spec, Handler::Builtin(handler))
            .expect("built-in command table is consistent")
    }

    pub fn disable_command(&mut self, name: &str) -> bool {
        self.reservoir.disable(name)
    }

    pub fn enable_command(&mut self, name: &str) -> bool {
        self.reservoir.enable(name)
    }

    pub fn remove_command(&mut self, name: &str) -> bool {
        self.reservoir.remove(name)
    }

    pub fn reservoir(&self) -> &Reservoir {
        &self.reservoir
    }

    pub fn register_constant(&mut self, name: &str, value: &str) {
        self.constants
            .insert(name.to_string(), ConstantBinding::Literal(Value::new(value)));
    }

    pub fn register_constant_fn(&mut self, name: &str, f: impl Fn() -> Value + 'static) {
        self.constants
            .insert(name.to_string(), ConstantBinding::Callable(Rc::new(f)));
    }

    pub fn register_context(&mut self, context: Context) -> ContextId {
        let id = ContextId(self.contexts.len() as u32);
        self.contexts.push(context);
        id
    }

    pub(crate) fn context(&self, id: ContextId) -> Option<&Context> {
        self.contexts.get(id.0 as usize)
    }

    pub fn context_id_by_name(&self, name: &str) -> Option<ContextId> {
        self.contexts
            .iter()
            .position(|c| c.name == name)
            .map(|i| ContextId(i as u32))
    }

    /// Defines a body-less event owned by the host. Scripts may register
    /// public functions against it but cannot call it; only the host can
    /// trigger it.
    pub fn define_host_event(&mut self, name: &str, kind: EventKind) -> Result<(), LoadError> {
        if self.events.contains_key(name) || self.functions.contains_key(name) {
            return Err(LoadError::RedefinedEvent(name.to_string()));
        }
        self.events.insert(
            name.to_string(),
            EventEntry { kind, body: None, module: None, registrants: Vec::new() },
        );
        Ok(())
    }

    // ----------------------------------------------------------------
    // Variables (host-side scope access)

    pub fn get_var(&self, name: &str) -> Option<Value> {
        self.scope.get(name).cloned()
    }

    pub fn set_var(&mut self, name: &str, value: impl Into<Value>) {
        self.scope.set(name, value.into());
    }

    pub fn var_exists(&self, name: &str) -> bool {
        self.scope.exists(name)
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn scope_mut(&mut self) -> &mut Scope {
        &mut self.scope
    }

    // ----------------------------------------------------------------
    // Output and error sinks

    pub(crate) fn write_output(&mut self, text: &str) {
        self.out.write_text(text);
    }

    /// Drains output captured outside submissions (timer firings, event
    /// triggers). Empty when a base writer is installed.
    pub fn take_output(&mut self) -> String {
        std::mem::take(&mut self.out.global)
    }

    pub(crate) fn report_error(&mut self, text: &str) {
        if self.errors.to_stderr {
            eprintln!("{text}");
        } else {
            self.errors.entries.push(text.to_string());
        }
    }

    /// Drains errors reported outside submissions (timer bodies).
    pub fn take_errors(&mut self) -> Vec<String> {
        std::mem::take(&mut self.errors.entries)
    }

    // ----------------------------------------------------------------
    // Debug hook

    pub fn attach_debug_hook(&mut self, hook: DebugHookFn) {
        self.hook = Some(hook);
    }

    pub fn detach_debug_hook(&mut self) {
        self.hook = None;
    }

    fn fire_hook(&mut self, inv: &Invocation) {
        let Some(mut hook) = self.hook.take() else { return };
        {
            let event = DebugEvent {
                command: &inv.name,
                raw_params: &inv.params,
                span: &inv.span,
                scope: &self.scope,
                functions: &self.functions,
                timers: &self.timers,
            };
            // Step-stop parks the VM thread: the hook is re-invoked with
            // the same event until it releases with Continue.
            while hook(&event) == StepDecision::StepStop {}
        }
        if self.hook.is_none() {
            self.hook = Some(hook);
        }
    }

    // ----------------------------------------------------------------
    // Execution engine

    /// Command nesting bound: blocks, inline bodies, and eval-type commands
    /// recurse through `execute_invocation`, so pathological nesting in
    /// untrusted scripts turns into a catchable error instead of exhausting
    /// the thread stack.
    const EXEC_DEPTH_LIMIT: usize = 384;

    pub(crate) fn execute_invocation(&mut self, inv: &Invocation, ctx: ContextId) -> ExecOutcome {
        if self.exec_depth >= Self::EXEC_DEPTH_LIMIT {
            return ExecOutcome::error(msg::nesting_limit("command", Self::EXEC_DEPTH_LIMIT));
        }
        self.exec_depth += 1;
        let outcome = self.execute_invocation_inner(inv, ctx);
        self.exec_depth -= 1;
        outcome
    }

    fn execute_invocation_inner(&mut self, inv: &Invocation, ctx: ContextId) -> ExecOutcome {
        let (handler, mode) = match self.reservoir.entry(inv.command) {
            Some(e) if e.enabled => {
                if !e.spec.availability.allows(ctx) {
                    return ExecOutcome::error(msg::not_in_context(&inv.name));
                }
                (e.handler.clone(), e.spec.expr_mode)
            }
            _ => return ExecOutcome::error(msg::disabled_command(&inv.name)),
        };
        match self.context(ctx) {
            Some(c) if c.filter.allows(&inv.name) => {}
            Some(_) => return ExecOutcome::error(msg::not_in_context(&inv.name)),
            None => return ExecOutcome::error(format!("unknown context: {}", ctx.0)),
        }

        if self.hook.is_some() {
            self.fire_hook(inv);
        }

        self.inv_stack.push(InvRecord { name: inv.name.clone(), params: inv.params.join(" ") });

        let mut params = Vec::with_capacity(inv.params.len());
        match mode {
            ExprMode::Automatic => {
                for raw in &inv.params {
                    match expr::interpolate(self, raw, ctx) {
                        Ok(v) => params.push(v),
                        Err(e) => {
                            self.inv_stack.pop();
                            return e.into();
                        }
                    }
                }
            }
            ExprMode::OnDemand => {
                params.extend(inv.params.iter().map(|p| Value::new(p.as_str())));
            }
        }

        let mut outcome = {
            let mut cctx = CommandCtx { interp: self, inv, params, context: ctx };
            match handler {
                Handler::Builtin(f) => f(&mut cctx),
                Handler::Host(f) => f(&mut cctx),
            }
        };
        self.inv_stack.pop();
        // protocol invariant: a true result never carries an error code
        if outcome.ok {
            outcome.error = None;
        }
        outcome
    }

    /// Runs invocations in order; the first non-ok outcome stops the
    /// sequence and is returned to the enclosing construct.
    pub(crate) fn run_sequence(&mut self, body: &[Invocation], ctx: ContextId) -> ExecOutcome {
        for inv in body {
            let outcome = self.execute_invocation(inv, ctx);
            if !outcome.ok {
                return outcome;
            }
        }
        ExecOutcome::success()
    }

    /// Calls a function (or a script event used as a callable) in a fresh
    /// frame. Function bodies always run under the default context. A
    /// plain-false outcome and stray `` `continue ``/`` `break `` codes are
    /// absorbed at the frame boundary; everything else propagates.
    pub(crate) fn call_function(
        &mut self,
        name: &str,
        payload: CallPayload,
    ) -> Result<Value, EvalError> {
        enum Callee {
            Function(Rc<FunctionDef>),
            Event(Rc<EventDef>),
        }
        let callee = if let Some(f) = self.functions.get(name) {
            Callee::Function(f.clone())
        } else if let Some(e) = self.events.get(name) {
            match &e.body {
                Some(def) => Callee::Event(def.clone()),
                None => return Err(EvalError::new(msg::builtin_event(name))),
            }
        } else {
            return Err(EvalError::new(msg::unknown_function(name)));
        };

        if self.scope.frames.len() >= self.recursion_limit {
            return Err(EvalError::new(msg::recursion_limit(self.recursion_limit)));
        }

        let mut locals = match payload {
            CallPayload::Locals(table) => table,
            CallPayload::Words(text) => {
                let mut t = VarTable::new();
                let words: Vec<&str> = text.split_whitespace().collect();
                if !words.is_empty() {
                    let arr = t.arrays.entry("arg".to_string()).or_default();
                    for (i, w) in words.iter().enumerate() {
                        arr.set(&i.to_string(), Value::new(*w));
                    }
                }
                t
            }
            CallPayload::Values(values) => {
                let mut t = VarTable::new();
                if !values.is_empty() {
                    let arr = t.arrays.entry("arg".to_string()).or_default();
                    for (i, v) in values.iter().enumerate() {
                        arr.set(&i.to_string(), v.clone());
                    }
                }
                t
            }
        };
        if let Some(puts) = self.pending_puts.remove(name) {
            for (n, v) in puts {
                locals.scalars.insert(n, v);
            }
        }

        let mut frame = Frame::new(name);
        frame.locals = locals;
        match &callee {
            Callee::Function(f) => frame.module = f.module.clone(),
            Callee::Event(e) => {
                frame.module = e.module.clone();
                frame.event = Some(name.to_string());
            }
        }
        self.scope.frames.push(frame);

        let outcome = match &callee {
            Callee::Function(f) => self.run_sequence(&f.body, ContextId::DEFAULT),
            Callee::Event(e) => self.run_sequence(&e.body, ContextId::DEFAULT),
        };

        let frame = self.scope.frames.pop().expect("frame pushed above");
        if outcome.ok || outcome.is_func_return() || outcome.is_continue() || outcome.is_break() {
            Ok(frame.result)
        } else {
            Err(EvalError::new(outcome.error.expect("non-ok outcome carries an error")))
        }
    }

    /// Evaluates one command text the way `mechanize` does: interpolate the
    /// text, compile it as a single command, execute it with the given
    /// context.
    pub(crate) fn eval_command_text(&mut self, raw: &str, ctx: ContextId) -> ExecOutcome {
        let text = match expr::interpolate(self, raw, ctx) {
            Ok(v) => v,
            Err(e) => return e.into(),
        };
        if text.as_str().trim().is_empty() {
            // Evaluating nothing does nothing (empty mlc pieces, generated
            // text that interpolates away).
            return ExecOutcome::success();
        }
        self.run_single_compiled(text.as_str(), ctx)
    }

    pub(crate) fn run_single_compiled(&mut self, text: &str, ctx: ContextId) -> ExecOutcome {
        let unit = match reader::read_source(text, SourceOrigin::SingleCommand, "<command>") {
            Ok(u) => u,
            Err(e) => return ExecOutcome::error(e.to_string()),
        };
        let program = match compiler::compile_single(&unit, &self.reservoir) {
            Ok(p) => p,
            Err(e) => return ExecOutcome::error(e.to_string()),
        };
        let instructions = program.instructions.clone();
        self.run_sequence(&instructions, ctx)
    }

    /// Runs generated source through minimal compilation: plain commands
    /// only, no definitions, no blocks.
    pub(crate) fn run_minimal_source(
        &mut self,
        source: &str,
        label: &str,
        ctx: ContextId,
    ) -> ExecOutcome {
        let unit = match reader::read_source(source, SourceOrigin::MetaGenerated, label) {
            Ok(u) => u,
            Err(e) => return ExecOutcome::error(e.to_string()),
        };
        let program = match compiler::compile_single(&unit, &self.reservoir) {
            Ok(p) => p,
            Err(e) => return ExecOutcome::error(e.to_string()),
        };
        let instructions = program.instructions.clone();
        self.run_sequence(&instructions, ctx)
    }

    /// Runs host-supplied generated code through minimal compilation: a
    /// plain command sequence, no definitions, no blocks, default context.
    /// This is the same path `envrs` feeds subprocess output through.
    pub fn run_generated(&mut self, source: &str) -> ExecOutcome {
        let outcome = self.run_minimal_source(source, "<generated>", ContextId::DEFAULT);
        Self::map_top(outcome)
    }

    /// Maps an outcome escaping a whole top-level run: a plain false is a
    /// silent normal termination, special codes are dropped silently, plain
    /// errors stay visible.
    fn map_top(outcome: ExecOutcome) -> ExecOutcome {
        if outcome.is_func_return() || outcome.is_special() {
            ExecOutcome::success()
        } else {
            outcome
        }
    }

    // ----------------------------------------------------------------
    // Top-level entry points

    /// Compiles and executes one single command under the default context.
    pub fn submit(&mut self, text: &str) -> SubmitResult {
        self.submit_with_context(text, ContextId::DEFAULT)
    }

    /// Compiles and executes one single command under the given context,
    /// capturing the output it produces.
    pub fn submit_with_context(&mut self, text: &str, ctx: ContextId) -> SubmitResult {
        debug_assert_eq!(self.expr_depth, 0, "expression depth unwinds between runs");
        debug_assert_eq!(self.exec_depth, 0, "command depth unwinds between runs");
        self.out.submission = Some(String::new());
        let outcome = Self::map_top(self.run_single_compiled(text, ctx));
        let output = self.out.submission.take().unwrap_or_default();
        SubmitResult { outcome, output }
    }

    /// Triggers an event from the host side. Events with a body run the
    /// body (with the supplied variables as frame locals); body-less host
    /// events dispatch directly to their registrants.
    pub fn trigger_host_event(&mut self, name: &str, vars: &[(&str, &str)]) -> TriggerResult {
        let mut locals = VarTable::new();
        for (k, v) in vars {
            locals.scalars.insert(k.to_string(), Value::new(*v));
        }
        let Some(entry) = self.events.get(name) else {
            return TriggerResult {
                outcome: ExecOutcome::error(format!("unknown event: {name}")),
                result: Value::empty(),
                results: Vec::new(),
            };
        };
        if entry.body.is_some() {
            match self.call_function(name, CallPayload::Locals(locals)) {
                Ok(result) => TriggerResult {
                    outcome: ExecOutcome::success(),
                    result,
                    results: Vec::new(),
                },
                Err(e) => TriggerResult {
                    outcome: Self::map_top(ExecOutcome::error(e.0)),
                    result: Value::empty(),
                    results: Vec::new(),
                },
            }
        } else {
            match crate::events::dispatch(self, name, &locals) {
                Ok(results) => TriggerResult {
                    outcome: ExecOutcome::success(),
                    result: Value::empty(),
                    results,
                },
                Err(outcome) => TriggerResult {
                    outcome: Self::map_top(outcome),
                    result: Value::empty(),
                    results: Vec::new(),
                },
            }
        }
    }

    // ----------------------------------------------------------------
    // Modules

    pub(crate) fn resolve_script_path(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.script_root.join(p)
        }
    }

    /// Compiles script source and registers its functions and events under
    /// the module name. Returns the script's top-level instructions.
    pub fn load_module_source(
        &mut self,
        module: &str,
        source: &str,
        label: &str,
    ) -> Result<Rc<Vec<Invocation>>, LoadError> {
        if self.modules.contains(module) {
            return Err(LoadError::DuplicateModule(module.to_string()));
        }
        let unit = reader::read_source(source, SourceOrigin::ScriptFile, label)?;
        let program = compiler::compile_script(&unit, &self.reservoir)?;
        self.link_program(module, program)
    }

    fn link_program(
        &mut self,
        module: &str,
        program: Program,
    ) -> Result<Rc<Vec<Invocation>>, LoadError> {
        if !program.events.is_empty() && !self.events_enabled {
            return Err(LoadError::EventsDisabled);
        }
        // Validate everything before touching interpreter state, so a
        // failed load leaves no partial registrations behind.
        for f in &program.functions {
            if self.functions.contains_key(&f.name) || self.events.contains_key(&f.name) {
                return Err(LoadError::RedefinedFunction(f.name.clone()));
            }
        }
        for e in &program.events {
            if self.events.contains_key(&e.name) || self.functions.contains_key(&e.name) {
                return Err(LoadError::RedefinedEvent(e.name.clone()));
            }
        }
        for f in &program.functions {
            if let crate::compiler::FnKind::Public { event } = &f.kind {
                let in_program = program.events.iter().any(|e| &e.name == event);
                if !in_program && !self.events.contains_key(event) {
                    return Err(LoadError::UnknownEventBinding {
                        function: f.name.clone(),
                        event: event.clone(),
                    });
                }
            }
        }

        for mut e in program.events {
            e.module = Some(module.to_string());
            self.events.insert(
                e.name.clone(),
                EventEntry {
                    kind: e.kind,
                    module: e.module.clone(),
                    body: Some(Rc::new(e)),
                    registrants: Vec::new(),
                },
            );
        }
        // Register public functions against their events in definition
        // order; dispatch order follows registration order.
        for mut f in program.functions {
            f.module = Some(module.to_string());
            let binding = match &f.kind {
                crate::compiler::FnKind::Public { event } => Some(event.clone()),
                _ => None,
            };
            let name = f.name.clone();
            self.functions.insert(name.clone(), Rc::new(f));
            if let Some(event) = binding {
                let entry = self.events.get_mut(&event).expect("binding validated above");
                entry.registrants.push(name);
            }
        }
        self.modules.insert(module.to_string());
        Ok(program.instructions)
    }

    /// Reads, decodes, compiles, and links a script file.
    pub fn load_module_file(
        &mut self,
        module: &str,
        path: &str,
    ) -> Result<Rc<Vec<Invocation>>, LoadError> {
        let full = self.resolve_script_path(path);
        let bytes = std::fs::read(&full)
            .map_err(|source| LoadError::Io { path: full.clone(), source })?;
        let text = reader::decode_script_bytes(&bytes, &full)?;
        self.load_module_source(module, &text, &full.to_string_lossy())
    }

    /// Removes a module's functions, events, event registrations, and live
    /// timers.
    pub fn unload_module(&mut self, module: &str) -> Result<(), LoadError> {
        if !self.modules.remove(module) {
            return Err(LoadError::UnknownModule(module.to_string()));
        }
        let removed_fns: Vec<String> = self
            .functions
            .iter()
            .filter(|(_, f)| f.module.as_deref() == Some(module))
            .map(|(n, _)| n.clone())
            .collect();
        for name in &removed_fns {
            self.functions.remove(name);
            self.pending_puts.remove(name);
        }
        self.events
            .retain(|_, e| e.module.as_deref() != Some(module));
        for entry in self.events.values_mut() {
            entry.registrants.retain(|r| !removed_fns.contains(r));
        }
        self.timers.remove_module(module);
        Ok(())
    }

    /// Loads a script file and then executes its top-level instructions in
    /// a synthetic frame, exposing `args` word-split as `@arg`.
    pub fn run_script_file(&mut self, module: &str, path: &str, args: &str) -> ExecOutcome {
        let instructions = match self.load_module_file(module, path) {
            Ok(i) => i,
            Err(e) => return ExecOutcome::error(e.to_string()),
        };
        let mut frame = Frame::new("<script>");
        frame.module = Some(module.to_string());
        let words: Vec<&str> = args.split_whitespace().collect();
        if !words.is_empty() {
            let arr = frame.locals.arrays.entry("arg".to_string()).or_default();
            for (i, w) in words.iter().enumerate() {
                arr.set(&i.to_string(), Value::new(*w));
            }
        }
        self.scope.frames.push(frame);
        let outcome = self.run_sequence(&instructions.clone(), ContextId::DEFAULT);
        self.scope.frames.pop();
        Self::map_top(outcome)
    }

    pub fn modules(&self) -> Vec<String> {
        let mut v: Vec<String> = self.modules.iter().cloned().collect();
        v.sort();
        v
    }

    pub fn function_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.functions.keys().cloned().collect();
        v.sort();
        v
    }

    pub(crate) fn parent_record(&self) -> Option<(String, String)> {
        let n = self.inv_stack.len();
        let rec = if n >= 2 { &self.inv_stack[n - 2] } else { self.inv_stack.last()? };
        Some((rec.name.clone(), rec.params.clone()))
    }

    pub(crate) fn owner_record(&self) -> Option<(String, String)> {
        let rec = self.inv_stack.last()?;
        Some((rec.name.clone(), rec.params.clone()))
    }
}

/// Arguments handed to a command handler: interpolated (or raw) parameters,
/// executable blocks, the execution context, and scope access. Handlers
/// must not retain any of it beyond the call; the borrow makes sure.
pub struct CommandCtx<'a> {
    pub(crate) interp: &'a mut Interp,
    pub(crate) inv: &'a Invocation,
    pub(crate) params: Vec<Value>,
    pub(crate) context: ContextId,
}

impl<'a> CommandCtx<'a> {
    pub fn command_name(&self) -> &'a str {
        &self.inv.name
    }

    /// Parameters, interpolated when the command's mode is automatic and
    /// raw when it is on-demand.
    pub fn params(&self) -> &[Value] {
        &self.params
    }

    pub fn param(&self, i: usize) -> &Value {
        &self.params[i]
    }

    /// Raw parameter text, untouched by interpolation. The lifetime is the
    /// invocation's, so the text stays usable across mutating calls.
    pub fn raw_param(&self, i: usize) -> &'a str {
        &self.inv.params[i]
    }

    pub fn context(&self) -> ContextId {
        self.context
    }

    pub fn span(&self) -> &SourceSpan {
        &self.inv.span
    }

    pub fn block_count(&self) -> usize {
        self.inv.blocks.len()
    }

    /// Runs block `i` (missing blocks succeed trivially).
    pub fn run_block(&mut self, i: usize) -> ExecOutcome {
        match self.inv.blocks.get(i) {
            Some(body) => self.interp.run_sequence(body, self.context),
            None => ExecOutcome::success(),
        }
    }

    pub fn get(&self, name: &str) -> Option<Value> {
        self.interp.scope.get(name).cloned()
    }

    pub fn set(&mut self, name: &str, value: impl Into<Value>) {
        self.interp.scope.set(name, value.into());
    }

    pub fn exists(&self, name: &str) -> bool {
        self.interp.scope.exists(name)
    }

    pub fn write_output(&mut self, text: &str) {
        self.interp.write_output(text);
    }

    /// Interpolates raw text in the current scope and context.
    pub fn interpolate(&mut self, raw: &str) -> Result<Value, String> {
        expr::interpolate(self.interp, raw, self.context).map_err(|e| e.0)
    }

    /// Evaluates one command text the way `mechanize` does, under the
    /// current context.
    pub fn eval_command_text(&mut self, raw: &str) -> ExecOutcome {
        self.interp.eval_command_text(raw, self.context)
    }

    /// Compiles and runs one command text without pre-interpolating it;
    /// expressions in its parameters evaluate when the command executes.
    /// Inline loop bodies run through here so their expressions are fresh
    /// on every iteration.
    pub fn run_command_text(&mut self, text: &str) -> ExecOutcome {
        self.interp.run_single_compiled(text, self.context)
    }
}
