//! An embeddable interpreter for T2Script 4.0, a command-event driven
//! scripting language for string handling.
//!
//! Everything in T2Script is a command: a case-insensitive name followed by
//! space-separated parameters, of which only the last may contain spaces.
//! Script files add `{}` block-commands plus `#function`/`#event`
//! definitions; user input is restricted to single commands. Parameter text
//! carries `$`-introduced expressions (variables, constants, function
//! calls, and prefix-notation complex expressions) that the VM interpolates
//! before or during command execution.
//!
//! The command set lives in a runtime-mutable reservoir: the embedding
//! application adds, disables, or removes commands at configuration time
//! and at run time, which is also the contract-enforcement mechanism for
//! running untrusted scripts. Events follow the observer pattern with
//! `single()`/`multi()` dispatch, timers re-run blocks on an injectable
//! clock, and exceptions are plain error texts that propagate until a
//! `catch` block or the top level.
//!
//! # Quick start
//!
//! ```
//! use t2script::Interp;
//!
//! let mut interp = Interp::new();
//! let result = interp.submit("textout hello");
//! assert!(result.outcome.ok);
//! assert_eq!(result.output, "hello\n");
//!
//! interp.submit("setvar total $?[+ 2 (- 7 8) 100]");
//! assert_eq!(interp.get_var("total").unwrap(), "101");
//! ```
//!
//! For script files with functions and events, load a module and trigger
//! events; for cross-thread embedding, see [`embed::Host`].

#![forbid(unsafe_code)]

pub mod builtins;
pub mod compiler;
mod constants;
pub mod embed;
pub mod error;
pub mod events;
pub mod expr;
mod ops;
pub mod reader;
pub mod value;
pub mod vm;

pub use error::{CompileError, CompileErrorKind, LoadError, SourceSpan};
pub use events::{Clock, EventKind, TimerInfo, VirtualClock, WallClock};
pub use value::Value;
pub use vm::{
    Arity, BlockSpec, CommandCtx, CommandFilter, CommandSpec, Context, ContextId, ContextRule,
    DebugEvent, EnvrsPolicy, ExecOutcome, ExprMode, Interp, RegisterError, Reservoir, Scope,
    StepDecision, SubmitResult, TriggerResult, ValueArray, VarTable, SPECIAL_BREAK,
    SPECIAL_CONTINUE,
};
