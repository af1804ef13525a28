//! The built-in operator library for complex expressions.
//!
//! Operators are grouped the way the command reference groups them:
//! integer and float arithmetic, extended arithmetic, bitwise, rounding,
//! logical, relational (including regular expressions), string handling,
//! and the advanced assignment/execution operators. Alternative names map
//! to the same implementation (`eq` for `==`, `concat` for `:+`, ...).
//!
//! A name that matches no built-in falls through to a user-defined
//! function of that name, called in mode 2: each operator argument becomes
//! one `@arg` element even when it contains spaces or is empty.

use crate::error::{msg, EvalError};
use crate::value::{format_float, format_integral_float, Value};
use crate::vm::{CallPayload, ContextId, Interp};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use std::cmp::Ordering;

const MAX_SHIFT_BITS: u64 = 1 << 20;
const MAX_EXPONENT: u32 = 1_000_000;

fn int_arg(op: &str, v: &Value) -> Result<BigInt, EvalError> {
    v.as_int()
        .ok_or_else(|| EvalError::new(format!("{}: {}", msg::non_integer(v.as_str()), op)))
}

fn float_arg(op: &str, v: &Value) -> Result<f64, EvalError> {
    v.as_float()
        .ok_or_else(|| EvalError::new(format!("{}: {}", msg::non_numeric(v.as_str()), op)))
}

fn finite(op: &str, x: f64) -> Result<Value, EvalError> {
    if x.is_finite() {
        Ok(Value::new(format_float(x)))
    } else {
        Err(EvalError::new(msg::numeric_overflow(op)))
    }
}

fn need(op: &str, _args: &[Value], detail: &str, ok: bool) -> Result<(), EvalError> {
    if ok {
        Ok(())
    } else {
        Err(EvalError::new(msg::operator_arity(op, detail)))
    }
}

fn int_fold(
    op: &str,
    args: &[Value],
    f: impl Fn(BigInt, BigInt) -> Result<BigInt, EvalError>,
) -> Result<Value, EvalError> {
    need(op, args, "at least 1 argument", !args.is_empty())?;
    let mut acc = int_arg(op, &args[0])?;
    for v in &args[1..] {
        acc = f(acc, int_arg(op, v)?)?;
    }
    Ok(acc.into())
}

fn float_fold(
    op: &str,
    args: &[Value],
    f: impl Fn(f64, f64) -> Result<f64, EvalError>,
) -> Result<Value, EvalError> {
    need(op, args, "at least 1 argument", !args.is_empty())?;
    let mut acc = float_arg(op, &args[0])?;
    for v in &args[1..] {
        acc = f(acc, float_arg(op, v)?)?;
    }
    finite(op, acc)
}

/// Total-order comparison with the numeric ladder: integers when both
/// arguments parse as integers, floats when both parse as floats, byte
/// comparison of the text otherwise.
fn compare_values(a: &Value, b: &Value, case_insensitive: bool) -> Ordering {
    if let (Some(x), Some(y)) = (a.as_int(), b.as_int()) {
        return x.cmp(&y);
    }
    if let (Some(x), Some(y)) = (a.as_float(), b.as_float()) {
        return x.partial_cmp(&y).expect("finite floats compare totally");
    }
    if case_insensitive {
        a.as_str().to_lowercase().cmp(&b.as_str().to_lowercase())
    } else {
        a.as_str().cmp(b.as_str())
    }
}

fn cmp_op(
    op: &str,
    args: &[Value],
    ci: bool,
    f: impl Fn(Ordering) -> bool,
) -> Result<Value, EvalError> {
    need(op, args, "2 arguments", args.len() == 2)?;
    Ok(Value::from_bool(f(compare_values(&args[0], &args[1], ci))))
}

fn regex_of(pattern: &str) -> Result<regex::Regex, EvalError> {
    regex::Regex::new(pattern)
        .map_err(|e| EvalError::new(msg::bad_regex(pattern, &e.to_string())))
}

fn numeric_pick(op: &str, args: &[Value], want_max: bool) -> Result<Value, EvalError> {
    need(op, args, "at least 1 argument", !args.is_empty())?;
    let all_int = args.iter().all(|v| v.as_int().is_some());
    let mut best = 0usize;
    for i in 1..args.len() {
        let ord = if all_int {
            int_arg(op, &args[i])?.cmp(&int_arg(op, &args[best])?)
        } else {
            let x = float_arg(op, &args[i])?;
            let y = float_arg(op, &args[best])?;
            x.partial_cmp(&y).expect("finite floats compare totally")
        };
        let better = if want_max { ord == Ordering::Greater } else { ord == Ordering::Less };
        if better {
            best = i;
        }
    }
    Ok(args[best].clone())
}

/// Applies a built-in operator, or falls back to a user-defined function
/// of the same name (mode-2 call).
pub(crate) fn apply_operator(
    interp: &mut Interp,
    op: &str,
    args: &[Value],
    ctx: ContextId,
) -> Result<Value, EvalError> {
    match op {
        // 1. basic arithmetic, integer and float
        "+" => int_fold(op, args, |a, b| Ok(a + b)),
        "-" => int_fold(op, args, |a, b| Ok(a - b)),
        "*" => int_fold(op, args, |a, b| Ok(a * b)),
        "/" => int_fold(op, args, |a, b| {
            if b.is_zero() {
                Err(EvalError::new(msg::division_by_zero()))
            } else {
                Ok(a / b)
            }
        }),
        "+." => float_fold(op, args, |a, b| Ok(a + b)),
        "-." => float_fold(op, args, |a, b| Ok(a - b)),
        "*." => float_fold(op, args, |a, b| Ok(a * b)),
        "/." => float_fold(op, args, |a, b| {
            if b == 0.0 {
                Err(EvalError::new(msg::division_by_zero()))
            } else {
                Ok(a / b)
            }
        }),

        // 2. other arithmetic
        "%" => {
            need(op, args, "2 arguments", args.len() == 2)?;
            let a = int_arg(op, &args[0])?;
            let b = int_arg(op, &args[1])?;
            if b.is_zero() {
                return Err(EvalError::new(msg::division_by_zero()));
            }
            Ok((a % b).into())
        }
        "**" => {
            need(op, args, "2 arguments", args.len() == 2)?;
            let base = int_arg(op, &args[0])?;
            let exp = int_arg(op, &args[1])?;
            if exp.is_negative() {
                return Err(EvalError::new(msg::math_domain(op, args[1].as_str())));
            }
            let exp = exp
                .to_u32()
                .filter(|&e| e <= MAX_EXPONENT)
                .ok_or_else(|| EvalError::new(msg::numeric_overflow(op)))?;
            Ok(base.pow(exp).into())
        }
        "sqrt" => {
            need(op, args, "1 argument", args.len() == 1)?;
            let x = float_arg(op, &args[0])?;
            if x < 0.0 {
                return Err(EvalError::new(msg::math_domain(op, args[0].as_str())));
            }
            finite(op, x.sqrt())
        }
        "ln" => {
            need(op, args, "1 argument", args.len() == 1)?;
            let x = float_arg(op, &args[0])?;
            if x <= 0.0 {
                return Err(EvalError::new(msg::math_domain(op, args[0].as_str())));
            }
            finite(op, x.ln())
        }
        "logn" => {
            need(op, args, "2 arguments (base, x)", args.len() == 2)?;
            let base = float_arg(op, &args[0])?;
            let x = float_arg(op, &args[1])?;
            if x <= 0.0 || base <= 0.0 || base == 1.0 {
                return Err(EvalError::new(msg::math_domain(op, args[1].as_str())));
            }
            finite(op, x.log(base))
        }
        "exp" => {
            need(op, args, "1 argument", args.len() == 1)?;
            finite(op, float_arg(op, &args[0])?.exp())
        }
        "abs" => {
            need(op, args, "1 argument", args.len() == 1)?;
            if let Some(i) = args[0].as_int() {
                Ok(i.abs().into())
            } else {
                finite(op, float_arg(op, &args[0])?.abs())
            }
        }
        "min" => numeric_pick(op, args, false),
        "max" => numeric_pick(op, args, true),
        "tohex" => {
            need(op, args, "1 argument", args.len() == 1)?;
            Ok(Value::new(int_arg(op, &args[0])?.to_str_radix(16)))
        }

        // 3. bitwise
        "~" => {
            need(op, args, "1 argument", args.len() == 1)?;
            let x = int_arg(op, &args[0])?;
            Ok((-(x + BigInt::from(1))).into())
        }
        "&" => int_fold(op, args, |a, b| Ok(a & b)),
        "|" => int_fold(op, args, |a, b| Ok(a | b)),
        "^" => int_fold(op, args, |a, b| Ok(a ^ b)),
        "<<" | ">>" => {
            need(op, args, "2 arguments", args.len() == 2)?;
            let x = int_arg(op, &args[0])?;
            let by = int_arg(op, &args[1])?;
            if by.is_negative() {
                return Err(EvalError::new(msg::math_domain(op, args[1].as_str())));
            }
            let by = by
                .to_u64()
                .filter(|&b| b <= MAX_SHIFT_BITS)
                .ok_or_else(|| EvalError::new(msg::numeric_overflow(op)))?
                as usize;
            Ok(if op == "<<" { x << by } else { x >> by }.into())
        }

        // 4. rounding
        "round" => {
            need(op, args, "1 argument", args.len() == 1)?;
            Ok(Value::new(format_integral_float(float_arg(op, &args[0])?.round())))
        }
        "ceil" => {
            need(op, args, "1 argument", args.len() == 1)?;
            Ok(Value::new(format_integral_float(float_arg(op, &args[0])?.ceil())))
        }
        "floor" => {
            need(op, args, "1 argument", args.len() == 1)?;
            Ok(Value::new(format_integral_float(float_arg(op, &args[0])?.floor())))
        }
        "roundto" => {
            need(op, args, "2 arguments (places, x)", args.len() == 2)?;
            let places = int_arg(op, &args[0])?
                .to_u32()
                .filter(|&p| p <= 15)
                .ok_or_else(|| EvalError::new(msg::math_domain(op, args[0].as_str())))?;
            let x = float_arg(op, &args[1])?;
            let scale = 10f64.powi(places as i32);
            finite(op, (x * scale).round() / scale)
        }

        // 5. logical (strict; arguments are already evaluated)
        "!" | "not" => {
            need(op, args, "1 argument", args.len() == 1)?;
            Ok(Value::from_bool(!args[0].is_truthy()))
        }
        "?|" | "or" => {
            need(op, args, "at least 1 argument", !args.is_empty())?;
            Ok(Value::from_bool(args.iter().any(Value::is_truthy)))
        }
        "?&" | "and" => {
            need(op, args, "at least 1 argument", !args.is_empty())?;
            Ok(Value::from_bool(args.iter().all(Value::is_truthy)))
        }

        // 6. relational
        "==" | "eq" => cmp_op(op, args, false, |o| o == Ordering::Equal),
        "!=" | "ne" => cmp_op(op, args, false, |o| o != Ordering::Equal),
        "<=" | "le" => cmp_op(op, args, false, |o| o != Ordering::Greater),
        ">=" | "ge" => cmp_op(op, args, false, |o| o != Ordering::Less),
        "<" | "lt" => cmp_op(op, args, false, |o| o == Ordering::Less),
        ">" | "gt" => cmp_op(op, args, false, |o| o == Ordering::Greater),
        ":==" | "eqic" => cmp_op(op, args, true, |o| o == Ordering::Equal),
        ":!=" | "neic" => cmp_op(op, args, true, |o| o != Ordering::Equal),
        "=~" => {
            need(op, args, "2 arguments (pattern, text)", args.len() == 2)?;
            let re = regex_of(args[0].as_str())?;
            Ok(Value::from_bool(re.is_match(args[1].as_str())))
        }
        "=~~" => {
            need(op, args, "2 arguments (pattern, text)", args.len() == 2)?;
            let re = regex_of(args[0].as_str())?;
            Ok(match re.find(args[1].as_str()) {
                Some(m) => Value::new(m.as_str()),
                None => Value::empty(),
            })
        }
        "comp" => {
            need(op, args, "2 arguments", args.len() == 2)?;
            Ok(Value::new(match compare_values(&args[0], &args[1], false) {
                Ordering::Less => "-1",
                Ordering::Equal => "0",
                Ordering::Greater => "1",
            }))
        }

        // 7. strings
        ":+" | "concat" => {
            let mut out = String::new();
            for v in args {
                out.push_str(v.as_str());
            }
            Ok(Value::new(out))
        }
        "empty?" => {
            need(op, args, "1 argument", args.len() == 1)?;
            Ok(Value::from_bool(args[0].is_empty()))
        }
        "len" => {
            need(op, args, "1 argument", args.len() == 1)?;
            Ok(Value::new(args[0].as_str().chars().count().to_string()))
        }
        "num?" => {
            need(op, args, "1 argument", args.len() == 1)?;
            Ok(Value::from_bool(args[0].as_int().is_some()))
        }
        "float?" => {
            need(op, args, "1 argument", args.len() == 1)?;
            Ok(Value::from_bool(args[0].as_float().is_some()))
        }
        "substr" => {
            need(op, args, "3 arguments (text, start, len)", args.len() == 3)?;
            let chars: Vec<char> = args[0].as_str().chars().collect();
            let start = int_arg(op, &args[1])?
                .to_usize()
                .ok_or_else(|| EvalError::new(msg::index_out_of_range(op, args[1].as_str())))?;
            let len = int_arg(op, &args[2])?
                .to_usize()
                .ok_or_else(|| EvalError::new(msg::index_out_of_range(op, args[2].as_str())))?;
            if start > chars.len() {
                return Err(EvalError::new(msg::index_out_of_range(op, args[1].as_str())));
            }
            Ok(Value::new(chars[start..(start + len).min(chars.len())].iter().collect::<String>()))
        }
        "strpos" | "strposic" => {
            need(op, args, "2 arguments (needle, haystack)", args.len() == 2)?;
            let (needle, haystack) = if op == "strposic" {
                (args[0].as_str().to_lowercase(), args[1].as_str().to_lowercase())
            } else {
                (args[0].as_str().to_string(), args[1].as_str().to_string())
            };
            Ok(Value::new(match haystack.find(&needle) {
                Some(byte_pos) => haystack[..byte_pos].chars().count().to_string(),
                None => "-1".to_string(),
            }))
        }
        "word" => {
            need(op, args, "2 arguments (n, text)", args.len() == 2)?;
            let n = int_arg(op, &args[0])?
                .to_usize()
                .ok_or_else(|| EvalError::new(msg::index_out_of_range(op, args[0].as_str())))?;
            match args[1].as_str().split_whitespace().nth(n) {
                Some(w) => Ok(Value::new(w)),
                None => Err(EvalError::new(msg::index_out_of_range(op, args[0].as_str()))),
            }
        }
        "char" => {
            need(op, args, "2 arguments (n, text)", args.len() == 2)?;
            let n = int_arg(op, &args[0])?
                .to_usize()
                .ok_or_else(|| EvalError::new(msg::index_out_of_range(op, args[0].as_str())))?;
            match args[1].as_str().chars().nth(n) {
                Some(c) => Ok(Value::new(c.to_string())),
                None => Err(EvalError::new(msg::index_out_of_range(op, args[0].as_str()))),
            }
        }
        "upcase" => {
            need(op, args, "1 argument", args.len() == 1)?;
            Ok(Value::new(args[0].as_str().to_uppercase()))
        }
        "downcase" => {
            need(op, args, "1 argument", args.len() == 1)?;
            Ok(Value::new(args[0].as_str().to_lowercase()))
        }

        // 8. advanced
        "=" => {
            need(op, args, "2 arguments (name, value)", args.len() == 2)?;
            interp.scope.set(args[0].as_str(), args[1].clone());
            Ok(args[1].clone())
        }
        "exists?" => {
            need(op, args, "1 argument", args.len() == 1)?;
            Ok(Value::from_bool(interp.scope.exists(args[0].as_str())))
        }
        "!!" => {
            need(op, args, "1 argument (command text)", args.len() == 1)?;
            let outcome = interp.run_single_compiled(args[0].as_str(), ctx);
            Ok(if outcome.is_plain_error() {
                Value::new(outcome.error.unwrap_or_default())
            } else {
                Value::empty()
            })
        }
        "@@" | "??" => Err(EvalError::new(msg::unimplemented_operator(op))),

        // user-defined operator functions (mode-2 call)
        _ => {
            if interp.functions.contains_key(op)
                || interp.events.get(op).is_some_and(|e| e.body.is_some())
            {
                interp.call_function(op, CallPayload::Values(args.to_vec()))
            } else {
                Err(EvalError::new(msg::unknown_operator(op)))
            }
        }
    }
}
