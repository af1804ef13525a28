//! Compilation of logical lines into directly interpretable programs.
//!
//! Command names are case-insensitive and are resolved against the
//! Commands Reservoir here, at compile time; everything else in the
//! language (variables, functions, events) is case-sensitive. Parameters
//! are split at compile time: all but the last are single space-delimited
//! tokens, the last takes the remaining text verbatim, and spaces inside
//! expression index brackets never separate.

use crate::error::{CompileError, CompileErrorKind, SourceSpan};
use crate::events::EventKind;
use crate::reader::{LineKind, SourceOrigin, SourceUnit};
use crate::vm::{Arity, BlockSpec, CommandId, Reservoir};
use std::collections::HashSet;
use std::rc::Rc;

/// One resolved command invocation: reservoir handle, raw parameter texts,
/// and up to two nested blocks.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub(crate) command: CommandId,
    /// Folded command name, kept for messages, hooks, and audits.
    pub name: String,
    /// Raw, un-interpreted parameter texts.
    pub params: Vec<String>,
    pub blocks: Vec<Vec<Invocation>>,
    pub keyword: Option<String>,
    pub span: SourceSpan,
}

impl Invocation {
    /// Renders the invocation back to canonical single-line text (blocks
    /// excluded). Recompiling the result yields a structurally identical
    /// invocation.
    pub fn canonical_text(&self) -> String {
        if self.params.is_empty() {
            self.name.clone()
        } else {
            format!("{} {}", self.name, self.params.join(" "))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FnKind {
    Private,
    Operator,
    Public { event: String },
}

#[derive(Debug, Clone)]
pub struct FunctionDef {
    pub name: String,
    pub kind: FnKind,
    pub body: Vec<Invocation>,
    pub span: SourceSpan,
    pub module: Option<String>,
}

/// A compiled unit: top-level instructions plus function and event
/// definitions.
#[derive(Debug, Clone)]
pub struct Program {
    pub instructions: Rc<Vec<Invocation>>,
    pub functions: Vec<FunctionDef>,
    pub events: Vec<crate::events::EventDef>,
    pub module_name: String,
}

/// True iff `name` is usable as a command name: nonempty text without
/// space, `#`, `;`, `` ` ``, `|`, or `/`.
pub fn is_valid_command_name(name: &str) -> bool {
    !name.is_empty() && !name.chars().any(|c| matches!(c, ' ' | '#' | ';' | '`' | '|' | '/'))
}

/// Splits parameter text after the command name. Head parameters are
/// bracket-aware space-delimited tokens; the final parameter of a
/// fixed-arity command is the remaining text verbatim.
pub fn split_params(
    rest: &str,
    arity: Arity,
    tail_param: bool,
    command: &str,
    span: &SourceSpan,
) -> Result<Vec<String>, CompileError> {
    let chars: Vec<char> = rest.chars().collect();
    let mut i = 0usize;

    let skip_spaces = |i: &mut usize| {
        while *i < chars.len() && chars[*i].is_whitespace() {
            *i += 1;
        }
    };
    let next_token = |i: &mut usize| -> Option<String> {
        skip_spaces(i);
        if *i >= chars.len() {
            return None;
        }
        let mut token = String::new();
        let mut depth = 0usize;
        while *i < chars.len() {
            let c = chars[*i];
            if c == '[' {
                depth += 1;
            } else if c == ']' {
                depth = depth.saturating_sub(1);
            } else if c.is_whitespace() && depth == 0 {
                break;
            }
            token.push(c);
            *i += 1;
        }
        Some(token)
    };
    let remainder = |i: &mut usize| -> String {
        skip_spaces(i);
        chars[*i..].iter().collect::<String>().trim_end().to_string()
    };
    let count_all = |mut i: usize| -> usize {
        let mut n = 0;
        while next_token(&mut i).is_some() {
            n += 1;
        }
        n
    };
    let err = |kind: CompileErrorKind| Err(CompileError::new(span.clone(), kind));

    match arity {
        Arity::Fixed(0) => {
            if rest.trim().is_empty() {
                Ok(Vec::new())
            } else {
                err(CompileErrorKind::ArityMismatch {
                    command: command.to_string(),
                    expected: "0".to_string(),
                    got: count_all(0),
                })
            }
        }
        Arity::Fixed(n) => {
            let mut params = Vec::with_capacity(n);
            for k in 0..n - 1 {
                match next_token(&mut i) {
                    Some(t) => params.push(t),
                    None => {
                        return err(CompileErrorKind::TooFewParams {
                            command: command.to_string(),
                            expected: n,
                            got: k,
                        })
                    }
                }
            }
            let tail = remainder(&mut i);
            if tail.is_empty() {
                return err(CompileErrorKind::TooFewParams {
                    command: command.to_string(),
                    expected: n,
                    got: n - 1,
                });
            }
            params.push(tail);
            Ok(params)
        }
        Arity::AtLeast(min) => {
            if tail_param && min > 0 {
                let mut params = Vec::new();
                for _ in 0..min - 1 {
                    match next_token(&mut i) {
                        Some(t) => params.push(t),
                        None => break,
                    }
                }
                let tail = remainder(&mut i);
                if !tail.is_empty() {
                    params.push(tail);
                }
                if params.len() < min {
                    return err(CompileErrorKind::TooFewParams {
                        command: command.to_string(),
                        expected: min,
                        got: params.len(),
                    });
                }
                Ok(params)
            } else {
                let mut params = Vec::new();
                while let Some(t) = next_token(&mut i) {
                    params.push(t);
                }
                if params.len() < min {
                    return err(CompileErrorKind::TooFewParams {
                        command: command.to_string(),
                        expected: min,
                        got: params.len(),
                    });
                }
                Ok(params)
            }
        }
        Arity::Range(lo, hi) => {
            let mut params = Vec::new();
            for _ in 0..hi.saturating_sub(1) {
                match next_token(&mut i) {
                    Some(t) => params.push(t),
                    None => break,
                }
            }
            if params.len() + 1 == hi || !tail_param {
                let tail = remainder(&mut i);
                if !tail.is_empty() {
                    params.push(tail);
                }
            }
            if params.len() < lo {
                return err(CompileErrorKind::TooFewParams {
                    command: command.to_string(),
                    expected: lo,
                    got: params.len(),
                });
            }
            if params.len() > hi {
                return err(CompileErrorKind::ArityMismatch {
                    command: command.to_string(),
                    expected: format!("{lo}..{hi}"),
                    got: params.len(),
                });
            }
            Ok(params)
        }
    }
}

/// Parses one command line, resolving the name and splitting parameters.
/// `has_block` says whether a `{` followed this line; commands that take
/// blocks but appear without one compile to their inline form when they
/// have one, where the final extra parameter is one complete command text.
fn parse_invocation(
    text: &str,
    reservoir: &Reservoir,
    span: &SourceSpan,
    has_block: bool,
) -> Result<Invocation, CompileError> {
    let name_end = text.find(char::is_whitespace).unwrap_or(text.len());
    let (name, rest) = text.split_at(name_end);
    if name.is_empty() {
        return Err(CompileError::new(span.clone(), CompileErrorKind::BlockOpenWithoutCommand));
    }
    let folded = name.to_lowercase();
    let Some(id) = reservoir.resolve(&folded) else {
        return Err(CompileError::new(
            span.clone(),
            CompileErrorKind::UnknownCommand(name.to_string()),
        ));
    };
    let spec = reservoir.spec(id).expect("resolved id is live");

    let arity = if has_block {
        if spec.blocks == BlockSpec::None {
            return Err(CompileError::new(
                span.clone(),
                CompileErrorKind::UnexpectedBlock(folded),
            ));
        }
        spec.arity
    } else if spec.blocks != BlockSpec::None {
        if !spec.inline_form {
            return Err(CompileError::new(
                span.clone(),
                CompileErrorKind::MissingRequiredBlock(folded),
            ));
        }
        match spec.arity {
            Arity::Fixed(n) => Arity::Fixed(n + 1),
            other => other,
        }
    } else {
        spec.arity
    };

    let params = split_params(rest, arity, spec.tail_param, &folded, span)?;
    Ok(Invocation {
        command: id,
        name: folded,
        params,
        blocks: Vec::new(),
        keyword: None,
        span: span.clone(),
    })
}

enum Directive {
    Function { name: String, kind: FnKind },
    Event { name: String, kind: EventKind },
    End { name: String },
}

fn valid_definition_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with(['@', '_', '=', '?', '$'])
        && !name.chars().any(|c| matches!(c, '[' | ']' | '.' | '(' | ')'))
}

fn parse_directive(text: &str, span: &SourceSpan) -> Result<Directive, CompileError> {
    let err = |kind: CompileErrorKind| Err(CompileError::new(span.clone(), kind));
    let tokens: Vec<&str> = text.split_whitespace().collect();
    match tokens.first().copied() {
        Some("#function") => {
            if tokens.len() != 3 && tokens.len() != 5 {
                return err(CompileErrorKind::MalformedDirective(text.to_string()));
            }
            let name = tokens[1].to_string();
            if !valid_definition_name(&name) {
                return err(CompileErrorKind::MalformedDirective(text.to_string()));
            }
            let kind = match (tokens[2], tokens.len()) {
                ("private()", 3) => FnKind::Private,
                ("operator()", 3) => FnKind::Operator,
                ("public()", 5) if tokens[3] == "<<" => {
                    FnKind::Public { event: tokens[4].to_string() }
                }
                _ => return err(CompileErrorKind::MalformedDirective(text.to_string())),
            };
            Ok(Directive::Function { name, kind })
        }
        Some("#event") => {
            if tokens.len() != 3 {
                return err(CompileErrorKind::MalformedDirective(text.to_string()));
            }
            let name = tokens[1].to_string();
            if !valid_definition_name(&name) {
                return err(CompileErrorKind::MalformedDirective(text.to_string()));
            }
            let kind = match tokens[2] {
                "single()" => EventKind::Single,
                "multi()" => EventKind::Multi,
                _ => return err(CompileErrorKind::MalformedDirective(text.to_string())),
            };
            Ok(Directive::Event { name, kind })
        }
        Some("#end") => {
            if tokens.len() != 2 {
                return err(CompileErrorKind::MalformedDirective(text.to_string()));
            }
            Ok(Directive::End { name: tokens[1].to_string() })
        }
        Some(other) => err(CompileErrorKind::UnknownDirective(other.to_string())),
        None => err(CompileErrorKind::MalformedDirective(text.to_string())),
    }
}

enum OpenDef {
    Function { name: String, kind: FnKind, span: SourceSpan },
    Event { name: String, kind: EventKind, span: SourceSpan },
}

/// Compiled block trees are bounded so that pathological nesting in
/// hostile scripts is rejected up front; execution applies its own,
/// tighter runtime guard.
const BLOCK_NESTING_LIMIT: usize = 1000;

/// Compiles a whole script file: definitions plus top-level instructions.
pub fn compile_script(unit: &SourceUnit, reservoir: &Reservoir) -> Result<Program, CompileError> {
    debug_assert_eq!(unit.origin, SourceOrigin::ScriptFile);
    let mut functions: Vec<FunctionDef> = Vec::new();
    let mut events: Vec<crate::events::EventDef> = Vec::new();
    let mut defined: HashSet<String> = HashSet::new();
    let mut open_def: Option<OpenDef> = None;
    let mut seq_stack: Vec<Vec<Invocation>> = vec![Vec::new()];
    let mut block_stack: Vec<Invocation> = Vec::new();
    let mut last_span = SourceSpan::synthetic("<empty>");

    for line in &unit.lines {
        last_span = line.span.clone();
        match &line.kind {
            LineKind::HashDirective => {
                if !block_stack.is_empty() {
                    return Err(CompileError::new(
                        line.span.clone(),
                        CompileErrorKind::UnterminatedBlock,
                    ));
                }
                match parse_directive(&line.text, &line.span)? {
                    Directive::Function { name, kind } => {
                        if let Some(open) = &open_def {
                            let open_name = match open {
                                OpenDef::Function { name, .. } | OpenDef::Event { name, .. } => name,
                            };
                            return Err(CompileError::new(
                                line.span.clone(),
                                CompileErrorKind::NestedDefinition(open_name.clone()),
                            ));
                        }
                        open_def =
                            Some(OpenDef::Function { name, kind, span: line.span.clone() });
                        seq_stack.push(Vec::new());
                    }
                    Directive::Event { name, kind } => {
                        if let Some(open) = &open_def {
                            let open_name = match open {
                                OpenDef::Function { name, .. } | OpenDef::Event { name, .. } => name,
                            };
                            return Err(CompileError::new(
                                line.span.clone(),
                                CompileErrorKind::NestedDefinition(open_name.clone()),
                            ));
                        }
                        open_def = Some(OpenDef::Event { name, kind, span: line.span.clone() });
                        seq_stack.push(Vec::new());
                    }
                    Directive::End { name } => {
                        let Some(open) = open_def.take() else {
                            return Err(CompileError::new(
                                line.span.clone(),
                                CompileErrorKind::MalformedDirective(line.text.clone()),
                            ));
                        };
                        let body = seq_stack.pop().expect("definition body pushed at open");
                        match open {
                            OpenDef::Function { name: fname, kind, span } => {
                                if fname != name {
                                    return Err(CompileError::new(
                                        line.span.clone(),
                                        CompileErrorKind::EndNameMismatch {
                                            expected: fname,
                                            found: name,
                                        },
                                    ));
                                }
                                if !defined.insert(fname.clone()) {
                                    return Err(CompileError::new(
                                        span,
                                        CompileErrorKind::RedefinedFunction(fname),
                                    ));
                                }
                                functions.push(FunctionDef {
                                    name: fname,
                                    kind,
                                    body,
                                    span,
                                    module: None,
                                });
                            }
                            OpenDef::Event { name: ename, kind, span } => {
                                if ename != name {
                                    return Err(CompileError::new(
                                        line.span.clone(),
                                        CompileErrorKind::EndNameMismatch {
                                            expected: ename,
                                            found: name,
                                        },
                                    ));
                                }
                                if !defined.insert(ename.clone()) {
                                    return Err(CompileError::new(
                                        span,
                                        CompileErrorKind::RedefinedEvent(ename),
                                    ));
                                }
                                let declared_args = body
                                    .iter()
                                    .find(|inv| inv.name == "args")
                                    .map(|inv| inv.params.clone())
                                    .unwrap_or_default();
                                events.push(crate::events::EventDef {
                                    name: ename,
                                    kind,
                                    body,
                                    declared_args,
                                    span,
                                    module: None,
                                });
                            }
                        }
                    }
                }
            }
            LineKind::Command => {
                let inv = parse_invocation(&line.text, reservoir, &line.span, false)?;
                seq_stack.last_mut().expect("sequence stack never empty").push(inv);
            }
            LineKind::BlockOpen => {
                if line.text.is_empty() {
                    return Err(CompileError::new(
                        line.span.clone(),
                        CompileErrorKind::BlockOpenWithoutCommand,
                    ));
                }
                if block_stack.len() >= BLOCK_NESTING_LIMIT {
                    return Err(CompileError::new(
                        line.span.clone(),
                        CompileErrorKind::BlockNestingTooDeep(BLOCK_NESTING_LIMIT),
                    ));
                }
                let inv = parse_invocation(&line.text, reservoir, &line.span, true)?;
                block_stack.push(inv);
                seq_stack.push(Vec::new());
            }
            LineKind::BlockClose { keyword } => {
                let Some(mut inv) = block_stack.pop() else {
                    return Err(CompileError::new(
                        line.span.clone(),
                        CompileErrorKind::UnmatchedBlockClose,
                    ));
                };
                let body = seq_stack.pop().expect("block body pushed at open");
                if body.is_empty() {
                    return Err(CompileError::new(
                        line.span.clone(),
                        CompileErrorKind::EmptyBlock(inv.name),
                    ));
                }
                inv.blocks.push(body);
                let spec = reservoir.spec(inv.command).expect("resolved id is live");
                match keyword {
                    Some(kw) => {
                        let folded_kw = kw.to_lowercase();
                        let accepts = matches!(
                            &spec.blocks,
                            BlockSpec::Two { keyword, .. } if *keyword == folded_kw
                        );
                        if !accepts || inv.blocks.len() != 1 {
                            return Err(CompileError::new(
                                line.span.clone(),
                                CompileErrorKind::UnexpectedSeparationKeyword {
                                    command: inv.name,
                                    keyword: kw.clone(),
                                },
                            ));
                        }
                        inv.keyword = Some(folded_kw);
                        block_stack.push(inv);
                        seq_stack.push(Vec::new());
                    }
                    None => {
                        if let BlockSpec::Two { second_required: true, keyword } = &spec.blocks {
                            if inv.blocks.len() != 2 {
                                return Err(CompileError::new(
                                    line.span.clone(),
                                    CompileErrorKind::UnexpectedSeparationKeyword {
                                        command: inv.name,
                                        keyword: format!("{keyword} (required)"),
                                    },
                                ));
                            }
                        }
                        seq_stack.last_mut().expect("sequence stack never empty").push(inv);
                    }
                }
            }
        }
    }

    if !block_stack.is_empty() {
        return Err(CompileError::new(last_span, CompileErrorKind::UnterminatedBlock));
    }
    if let Some(open) = open_def {
        let name = match open {
            OpenDef::Function { name, .. } | OpenDef::Event { name, .. } => name,
        };
        return Err(CompileError::new(last_span, CompileErrorKind::MissingEnd(name)));
    }

    let instructions = seq_stack.pop().expect("top-level sequence");
    debug_assert!(seq_stack.is_empty());
    Ok(Program {
        instructions: Rc::new(instructions),
        functions,
        events,
        module_name: String::new(),
    })
}

/// Compiles a single command (user input) or a generated command sequence
/// (minimal compilation). Blocks and definitions are rejected on both
/// paths; single-command input must contain exactly one command.
pub fn compile_single(unit: &SourceUnit, reservoir: &Reservoir) -> Result<Program, CompileError> {
    let mut instructions = Vec::new();
    for line in &unit.lines {
        match &line.kind {
            LineKind::Command => {
                let inv = parse_invocation(&line.text, reservoir, &line.span, false)?;
                instructions.push(inv);
            }
            LineKind::BlockOpen | LineKind::BlockClose { .. } => {
                return Err(CompileError::new(
                    line.span.clone(),
                    CompileErrorKind::BlockInSingleCommand,
                ));
            }
            LineKind::HashDirective => {
                return Err(CompileError::new(
                    line.span.clone(),
                    CompileErrorKind::FunctionDefInMinimal,
                ));
            }
        }
    }
    match unit.origin {
        SourceOrigin::SingleCommand => {
            if instructions.is_empty() {
                return Err(CompileError::new(
                    SourceSpan::synthetic("<input>"),
                    CompileErrorKind::EmptySource,
                ));
            }
            if instructions.len() > 1 {
                return Err(CompileError::new(
                    instructions[1].span.clone(),
                    CompileErrorKind::MultipleCommands,
                ));
            }
        }
        SourceOrigin::MetaGenerated => {}
        SourceOrigin::ScriptFile => {
            debug_assert!(false, "script files go through compile_script");
        }
    }
    Ok(Program {
        instructions: Rc::new(instructions),
        functions: Vec::new(),
        events: Vec::new(),
        module_name: String::new(),
    })
}
