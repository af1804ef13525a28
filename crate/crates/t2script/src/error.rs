//! Compile-time error types and runtime error message constructors.
//!
//! Compilation failures are structured (`CompileError`, `LoadError`).
//! Runtime failures follow the language's own exception model: an error is
//! a piece of text carried in an [`ExecOutcome`](crate::vm::ExecOutcome),
//! catchable from scripts with `catch`. The `msg` module keeps all runtime
//! message shapes in one place so tests can rely on them.

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

/// Location of a logical line: source label plus first/last physical line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: Arc<str>,
    pub first_line: u32,
    pub last_line: u32,
}

impl SourceSpan {
    pub fn new(file: Arc<str>, first_line: u32, last_line: u32) -> Self {
        debug_assert!(first_line <= last_line);
        SourceSpan { file, first_line, last_line }
    }

    pub fn synthetic(label: &str) -> Self {
        SourceSpan { file: Arc::from(label), first_line: 0, last_line: 0 }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.first_line == self.last_line {
            write!(f, "{}:{}", self.file, self.first_line)
        } else {
            write!(f, "{}:{}-{}", self.file, self.first_line, self.last_line)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {kind}")]
pub struct CompileError {
    pub span: SourceSpan,
    pub kind: CompileErrorKind,
}

impl CompileError {
    pub(crate) fn new(span: SourceSpan, kind: CompileErrorKind) -> Self {
        CompileError { span, kind }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileErrorKind {
    #[error("hash directive must not end with a semicolon")]
    HashLineSemicolon,
    #[error("unknown command: {0}")]
    UnknownCommand(String),
    #[error("command {command} expects {expected} parameter(s), got {got}")]
    ArityMismatch { command: String, expected: String, got: usize },
    #[error("command {command} expects at least {expected} parameter(s), got {got}")]
    TooFewParams { command: String, expected: usize, got: usize },
    #[error("function redefined: {0}")]
    RedefinedFunction(String),
    #[error("event redefined: {0}")]
    RedefinedEvent(String),
    #[error("#end names {found} but the open definition is {expected}")]
    EndNameMismatch { expected: String, found: String },
    #[error("missing #end for {0}")]
    MissingEnd(String),
    #[error("command {0} requires a block")]
    MissingRequiredBlock(String),
    #[error("command {0} does not take a block")]
    UnexpectedBlock(String),
    #[error("unexpected separation keyword {keyword} after a {command} block")]
    UnexpectedSeparationKeyword { command: String, keyword: String },
    #[error("a block must contain at least one command ({0})")]
    EmptyBlock(String),
    #[error("block opened without a command")]
    BlockOpenWithoutCommand,
    #[error("unmatched closing brace")]
    UnmatchedBlockClose,
    #[error("malformed text after closing brace: {0}")]
    MalformedBlockClose(String),
    #[error("block not closed before end of definition or file")]
    UnterminatedBlock,
    #[error("block nesting exceeds {0} levels")]
    BlockNestingTooDeep(usize),
    #[error("definitions cannot nest (while defining {0})")]
    NestedDefinition(String),
    #[error("unknown hash directive: {0}")]
    UnknownDirective(String),
    #[error("malformed directive: {0}")]
    MalformedDirective(String),
    #[error("block-commands are allowed only in script files")]
    BlockInSingleCommand,
    #[error("expected a single command")]
    MultipleCommands,
    #[error("generated code must not contain function or event definitions")]
    FunctionDefInMinimal,
    #[error("no command in input")]
    EmptySource,
    #[error("invalid command name: {0}")]
    InvalidCommandName(String),
}

/// Errors surfaced when loading a script module into a running interpreter.
#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{0}")]
    Compile(#[from] CompileError),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: unsupported encoding (expected UTF-8, or UTF-16 with BOM)")]
    Encoding { path: PathBuf },
    #[error("module already loaded: {0}")]
    DuplicateModule(String),
    #[error("unknown module: {0}")]
    UnknownModule(String),
    #[error("function redefined: {0}")]
    RedefinedFunction(String),
    #[error("event redefined: {0}")]
    RedefinedEvent(String),
    #[error("function {function} binds unknown event {event}")]
    UnknownEventBinding { function: String, event: String },
    #[error("event definitions are disabled by the host")]
    EventsDisabled,
}

impl LoadError {
    pub fn is_compile(&self) -> bool {
        !matches!(self, LoadError::Io { .. })
    }
}

/// An aborted expression evaluation. Carries the error text of the pending
/// outcome, which may be a backtick-prefixed special code when a function
/// called from the expression propagated one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct EvalError(pub String);

impl EvalError {
    pub(crate) fn new(text: impl Into<String>) -> Self {
        EvalError(text.into())
    }
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Runtime error message constructors. Scripts observe these through `catch`.
pub mod msg {
    pub fn unset_variable(name: &str) -> String {
        format!("unset variable: {name}")
    }

    pub fn unset_array_element(name: &str, index: &str) -> String {
        format!("unset variable: {name}[{index}]")
    }

    pub fn unknown_constant(name: &str) -> String {
        format!("unknown constant: {name}")
    }

    pub fn unknown_function(name: &str) -> String {
        format!("unknown function: {name}")
    }

    pub fn unknown_operator(name: &str) -> String {
        format!("unknown operator: {name}")
    }

    pub fn unimplemented_operator(name: &str) -> String {
        format!("reserved operator not implemented: {name}")
    }

    pub fn operator_arity(name: &str, detail: &str) -> String {
        format!("operator {name} expects {detail}")
    }

    pub fn disabled_command(name: &str) -> String {
        format!("disabled command: {name}")
    }

    pub fn not_in_context(name: &str) -> String {
        format!("command not available in this context: {name}")
    }

    pub fn division_by_zero() -> String {
        "division by zero".to_string()
    }

    pub fn non_numeric(what: &str) -> String {
        format!("not a number: {what}")
    }

    pub fn non_integer(what: &str) -> String {
        format!("not an integer: {what}")
    }

    pub fn numeric_overflow(op: &str) -> String {
        format!("numeric overflow in {op}")
    }

    pub fn math_domain(op: &str, arg: &str) -> String {
        format!("domain error: {op} {arg}")
    }

    pub fn bad_regex(pattern: &str, detail: &str) -> String {
        format!("bad regular expression {pattern}: {detail}")
    }

    pub fn index_out_of_range(op: &str, index: &str) -> String {
        format!("index out of range in {op}: {index}")
    }

    pub fn unbalanced_index() -> String {
        "unbalanced index bracket in expression".to_string()
    }

    pub fn empty_name() -> String {
        "expression with empty name".to_string()
    }

    pub fn malformed_expression(detail: &str) -> String {
        format!("malformed expression: {detail}")
    }

    pub fn too_few_arguments(expected: usize, got: usize) -> String {
        format!("too few arguments: expected {expected}, got {got}")
    }

    pub fn args_reused() -> String {
        "args may be used only once per call".to_string()
    }

    pub fn trigger_outside_event() -> String {
        "trigger is valid only inside an event body".to_string()
    }

    pub fn builtin_event(name: &str) -> String {
        format!("built-in event cannot be called from a script: {name}")
    }

    pub fn not_an_array(name: &str) -> String {
        format!("not an array: {name}")
    }

    pub fn malformed_foreach(got: &str) -> String {
        format!("foreach expects the keyword in, got: {got}")
    }

    pub fn duplicate_timer(name: &str) -> String {
        format!("timer name already in use: {name}")
    }

    pub fn unknown_timer(name: &str) -> String {
        format!("unknown timer: {name}")
    }

    pub fn invalid_timer_name(name: &str) -> String {
        format!("invalid timer name: {name}")
    }

    pub fn timer_interval(got: &str) -> String {
        format!("timer interval must be a positive integer, got: {got}")
    }

    pub fn recursion_limit(limit: usize) -> String {
        format!("recursion limit exceeded ({limit} frames)")
    }

    pub fn nesting_limit(what: &str, limit: usize) -> String {
        format!("{what} nesting exceeds {limit} levels")
    }

    pub fn spawn_failure(what: &str, detail: &str) -> String {
        format!("envrs: failed to run {what}: {detail}")
    }

    pub fn envrs_timeout(ms: u128) -> String {
        format!("envrs: interpreter timed out after {ms} ms")
    }

    pub fn envrs_exit(status: &str, stderr: &str) -> String {
        if stderr.is_empty() {
            format!("envrs: interpreter exited with status {status}")
        } else {
            format!("envrs: interpreter exited with status {status}: {stderr}")
        }
    }

    pub fn envrs_not_allowed(what: &str) -> String {
        format!("envrs: interpreter not on the allow list: {what}")
    }
}
