//! Expression parsing and interpolation.
//!
//! Expressions live inside parameter text and are introduced by the `$`
//! preamble, optionally closed by a `.` terminator that splices the value
//! against the following text:
//!
//! * `$name` / `$@name` — global / frame-local variable, with an optional
//!   `[index]` whose text is itself interpolated before the lookup;
//! * `$_name` — constant (built-in, host-registered, or context-supplied);
//! * `$=name[args]` — function call; the index text is interpolated and
//!   then split on spaces into `@arg[0..k]` (mode 1);
//! * `$?[op args]` — complex expression: an operator call in prefix form,
//!   with parenthesized arguments recursing into nested operator calls.
//!
//! Evaluation is strict: every argument of every operator call is evaluated
//! exactly once, innermost parenthesized calls first, left to right.

use crate::constants;
use crate::error::{msg, EvalError};
use crate::ops;
use crate::value::Value;
use crate::vm::{CallPayload, ContextId, Interp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Modifier {
    Global,
    Local,
    Constant,
    Call,
    Complex,
}

/// One parsed expression occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct ExprNode {
    pub modifier: Modifier,
    pub name: String,
    /// Raw index text (content between balanced brackets).
    pub index: Option<String>,
    pub had_terminator: bool,
    /// Char offset just past the expression (terminator included).
    pub end: usize,
}

/// Parses one expression starting at `chars[start] == '$'`.
///
/// A name ends, without consuming, at whitespace, `;`, `{`, `}`, `)` (at
/// paren depth zero), `[`, `]`, `.`, or end of text. Parentheses inside a
/// name must balance.
pub(crate) fn parse_expression(chars: &[char], start: usize) -> Result<ExprNode, EvalError> {
    debug_assert_eq!(chars.get(start), Some(&'$'));
    let mut i = start + 1;
    let modifier = match chars.get(i) {
        Some('@') => {
            i += 1;
            Modifier::Local
        }
        Some('_') => {
            i += 1;
            Modifier::Constant
        }
        Some('=') => {
            i += 1;
            Modifier::Call
        }
        Some('?') => {
            i += 1;
            Modifier::Complex
        }
        _ => Modifier::Global,
    };

    let mut name = String::new();
    if modifier != Modifier::Complex {
        let mut paren_depth = 0usize;
        while i < chars.len() {
            let c = chars[i];
            match c {
                '[' | ']' | '.' => break,
                ';' | '{' | '}' => break,
                '(' => {
                    paren_depth += 1;
                    name.push(c);
                    i += 1;
                }
                ')' => {
                    if paren_depth == 0 {
                        break;
                    }
                    paren_depth -= 1;
                    name.push(c);
                    i += 1;
                }
                c if c.is_whitespace() => break,
                c => {
                    name.push(c);
                    i += 1;
                }
            }
        }
        if paren_depth != 0 {
            return Err(EvalError::new(msg::malformed_expression(
                "unbalanced parentheses in expression name",
            )));
        }
        if name.is_empty() {
            return Err(EvalError::new(msg::empty_name()));
        }
    } else if chars.get(i) != Some(&'[') {
        return Err(EvalError::new(msg::malformed_expression(
            "complex expression requires an index",
        )));
    }

    let mut index = None;
    if chars.get(i) == Some(&'[') {
        i += 1;
        let mut depth = 1usize;
        let mut inner = String::new();
        loop {
            match chars.get(i) {
                Some('[') => {
                    depth += 1;
                    inner.push('[');
                    i += 1;
                }
                Some(']') => {
                    depth -= 1;
                    i += 1;
                    if depth == 0 {
                        break;
                    }
                    inner.push(']');
                }
                Some(&c) => {
                    inner.push(c);
                    i += 1;
                }
                None => return Err(EvalError::new(msg::unbalanced_index())),
            }
        }
        index = Some(inner);
    }

    let had_terminator = chars.get(i) == Some(&'.');
    if had_terminator {
        i += 1;
    }

    if modifier == Modifier::Complex && index.is_none() {
        return Err(EvalError::new(msg::malformed_expression(
            "complex expression requires an index",
        )));
    }

    Ok(ExprNode { modifier, name, index, had_terminator, end: i })
}

/// Expression nesting bound: nested indices, operator groups, and call
/// expressions recurse through evaluation, so runaway nesting becomes a
/// catchable error rather than a stack overflow.
const EXPR_DEPTH_LIMIT: usize = 192;

fn enter_nesting(interp: &mut Interp) -> Result<(), EvalError> {
    if interp.expr_depth >= EXPR_DEPTH_LIMIT {
        return Err(EvalError::new(crate::error::msg::nesting_limit(
            "expression",
            EXPR_DEPTH_LIMIT,
        )));
    }
    interp.expr_depth += 1;
    Ok(())
}

fn eval_node(interp: &mut Interp, node: &ExprNode, ctx: ContextId) -> Result<Value, EvalError> {
    enter_nesting(interp)?;
    let result = eval_node_inner(interp, node, ctx);
    interp.expr_depth -= 1;
    result
}

fn eval_node_inner(
    interp: &mut Interp,
    node: &ExprNode,
    ctx: ContextId,
) -> Result<Value, EvalError> {
    match node.modifier {
        Modifier::Global | Modifier::Local => {
            let stored = if node.modifier == Modifier::Local {
                format!("@{}", node.name)
            } else {
                node.name.clone()
            };
            match &node.index {
                Some(raw_key) => {
                    let key = interpolate(interp, raw_key, ctx)?;
                    match interp.scope.array(&stored).and_then(|a| a.get(key.as_str())) {
                        Some(v) => Ok(v.clone()),
                        None => Err(EvalError::new(msg::unset_array_element(
                            &stored,
                            key.as_str(),
                        ))),
                    }
                }
                None => match interp.scope.get(&stored) {
                    Some(v) => Ok(v.clone()),
                    None => Err(EvalError::new(msg::unset_variable(&stored))),
                },
            }
        }
        Modifier::Constant => {
            if node.index.is_some() {
                return Err(EvalError::new(msg::malformed_expression(
                    "constants do not take an index",
                )));
            }
            constants::resolve(interp, &node.name, ctx)
        }
        Modifier::Call => {
            let arg_text = match &node.index {
                Some(raw) => interpolate(interp, raw, ctx)?.into_string(),
                None => String::new(),
            };
            interp.call_function(&node.name, CallPayload::Words(arg_text))
        }
        Modifier::Complex => {
            let inner = node.index.as_deref().expect("validated at parse time");
            eval_complex_text(interp, inner, ctx)
        }
    }
}

/// Replaces every `$`-expression in `text` with its evaluated value. Plain
/// text passes through unchanged; a consumed `.` terminator splices with
/// nothing in between.
pub(crate) fn interpolate(
    interp: &mut Interp,
    text: &str,
    ctx: ContextId,
) -> Result<Value, EvalError> {
    if !text.contains('$') {
        return Ok(Value::new(text));
    }
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '$' {
            let node = parse_expression(&chars, i)?;
            let value = eval_node(interp, &node, ctx)?;
            out.push_str(value.as_str());
            i = node.end;
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    Ok(Value::new(out))
}

/// One element of an operator call: plain text (possibly containing
/// expressions) or a parenthesized nested call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Element {
    Text(String),
    Nested(String),
}

/// Splits the index of a complex expression into space-separated elements.
/// Spaces inside `[...]` never separate; an element that starts with `(`
/// consumes its balanced group and recurses as a nested operator call.
pub(crate) fn split_operator_elements(inner: &str) -> Result<Vec<Element>, EvalError> {
    let chars: Vec<char> = inner.chars().collect();
    let mut elements = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        while i < chars.len() && chars[i].is_whitespace() {
            i += 1;
        }
        if i >= chars.len() {
            break;
        }
        if chars[i] == '(' {
            let mut depth = 1usize;
            let mut group = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    Some('(') => {
                        depth += 1;
                        group.push('(');
                        i += 1;
                    }
                    Some(')') => {
                        depth -= 1;
                        i += 1;
                        if depth == 0 {
                            break;
                        }
                        group.push(')');
                    }
                    Some(&c) => {
                        group.push(c);
                        i += 1;
                    }
                    None => {
                        return Err(EvalError::new(msg::malformed_expression(
                            "unbalanced parentheses in operator call",
                        )))
                    }
                }
            }
            if i < chars.len() && !chars[i].is_whitespace() {
                return Err(EvalError::new(msg::malformed_expression(
                    "text after a parenthesized argument",
                )));
            }
            elements.push(Element::Nested(group));
        } else {
            let mut text = String::new();
            let mut bracket = 0usize;
            while i < chars.len() {
                let c = chars[i];
                if c == '[' {
                    bracket += 1;
                } else if c == ']' {
                    bracket = bracket.saturating_sub(1);
                } else if c.is_whitespace() && bracket == 0 {
                    break;
                }
                text.push(c);
                i += 1;
            }
            elements.push(Element::Text(text));
        }
    }
    Ok(elements)
}

/// Evaluates the index of a `$?[...]` expression: an operator applied to
/// fully evaluated arguments.
pub(crate) fn eval_complex_text(
    interp: &mut Interp,
    inner: &str,
    ctx: ContextId,
) -> Result<Value, EvalError> {
    enter_nesting(interp)?;
    let result = eval_complex_inner(interp, inner, ctx);
    interp.expr_depth -= 1;
    result
}

fn eval_complex_inner(
    interp: &mut Interp,
    inner: &str,
    ctx: ContextId,
) -> Result<Value, EvalError> {
    let elements = split_operator_elements(inner)?;
    if elements.is_empty() {
        return Err(EvalError::new(msg::malformed_expression(
            "empty complex expression",
        )));
    }
    let mut values = Vec::with_capacity(elements.len());
    for element in &elements {
        let v = match element {
            Element::Nested(group) => eval_complex_text(interp, group, ctx)?,
            Element::Text(text) => interpolate(interp, text, ctx)?,
        };
        values.push(v);
    }
    let operator = values.remove(0);
    ops::apply_operator(interp, operator.as_str(), &values, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExprNode, EvalError> {
        let chars: Vec<char> = text.chars().collect();
        parse_expression(&chars, 0)
    }

    #[test]
    fn parses_local_with_index_at_boundary() {
        let node = parse("$@arg[0];").unwrap();
        assert_eq!(node.modifier, Modifier::Local);
        assert_eq!(node.name, "arg");
        assert_eq!(node.index.as_deref(), Some("0"));
        assert!(!node.had_terminator);
        assert_eq!(node.end, 8); // stops at the ';' without consuming it
    }

    #[test]
    fn parses_constant_with_balanced_parens() {
        let node = parse("$_\\u(65)").unwrap();
        assert_eq!(node.modifier, Modifier::Constant);
        assert_eq!(node.name, "\\u(65)");
    }

    #[test]
    fn unbalanced_index_is_rejected() {
        let err = parse("$?[+ 1 2").unwrap_err();
        assert_eq!(err.0, msg::unbalanced_index());
    }

    #[test]
    fn terminator_is_consumed() {
        let node = parse("$prog. John").unwrap();
        assert_eq!(node.name, "prog");
        assert!(node.had_terminator);
        assert_eq!(node.end, 6);
    }

    #[test]
    fn nested_index_text_is_kept_raw() {
        let node = parse("$sinus[$@angle[5]]").unwrap();
        assert_eq!(node.name, "sinus");
        assert_eq!(node.index.as_deref(), Some("$@angle[5]"));
    }

    #[test]
    fn empty_name_is_an_error() {
        assert_eq!(parse("$ x").unwrap_err().0, msg::empty_name());
        assert_eq!(parse("$@.").unwrap_err().0, msg::empty_name());
    }

    #[test]
    fn complex_requires_bracket() {
        let err = parse("$?x").unwrap_err();
        assert!(err.0.contains("complex expression requires an index"));
    }

    #[test]
    fn operator_elements_split() {
        let elements = split_operator_elements("+ 2 (- 7 8) 100").unwrap();
        assert_eq!(
            elements,
            vec![
                Element::Text("+".into()),
                Element::Text("2".into()),
                Element::Nested("- 7 8".into()),
                Element::Text("100".into()),
            ]
        );
    }

    #[test]
    fn operator_elements_respect_brackets() {
        let elements = split_operator_elements("len $=f[a b]").unwrap();
        assert_eq!(
            elements,
            vec![Element::Text("len".into()), Element::Text("$=f[a b]".into())]
        );
    }
}
