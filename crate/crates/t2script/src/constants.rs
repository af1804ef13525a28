//! Constant resolution: `$_name` expressions.
//!
//! Lookup order is context constants, then host-registered constants, then
//! the built-in table. Function-backed constants invoke their callable on
//! every read, so their value may change between reads; constancy means
//! scripts cannot rebind them, not that the value never changes.

use crate::error::{msg, EvalError};
use crate::value::Value;
use crate::vm::{ContextId, Interp};
use std::time::{SystemTime, UNIX_EPOCH};

pub(crate) fn resolve(
    interp: &mut Interp,
    name: &str,
    ctx: ContextId,
) -> Result<Value, EvalError> {
    if let Some(context) = interp.context(ctx) {
        if let Some(binding) = context.constants.get(name) {
            return Ok(binding.read());
        }
    }
    if let Some(binding) = interp.constants.get(name) {
        return Ok(binding.read());
    }
    builtin(interp, name).ok_or_else(|| EvalError::new(msg::unknown_constant(name)))
}

fn builtin(interp: &Interp, name: &str) -> Option<Value> {
    let text = match name {
        "true" => "1",
        "false" => "0",
        "empty" => "",
        "Pi" => "3.14159265358979",
        "\\n" => "\n",
        "\\r\\n" => "\r\n",
        "\\r" => "\r",
        "\\t" => "\t",
        "\\$" => "$",
        "\\s" => " ",
        "lparen" => "(",
        "rparen" => ")",
        "ltabparen" => "[",
        "rtabparen" => "]",
        "lcurlparen" => "{",
        "rcurlparen" => "}",
        "parent_name" => return Some(Value::new(interp.parent_record()?.0)),
        "parent_param" => return Some(Value::new(interp.parent_record()?.1)),
        "owner_name" => return Some(Value::new(interp.owner_record()?.0)),
        "owner_param" => return Some(Value::new(interp.owner_record()?.1)),
        "time" => return Some(Value::new(format_clock(&interp.time_format))),
        "date" => return Some(Value::new(format_clock(&interp.date_format))),
        _ => {
            if let Some(rest) = name.strip_prefix("\\u(") {
                let digits = rest.strip_suffix(')')?;
                let code: u32 = digits.parse().ok()?;
                return Some(Value::new(char::from_u32(code)?.to_string()));
            }
            return None;
        }
    };
    Some(Value::new(text))
}

/// Civil date/time from the system clock (UTC), rendered through a small
/// strftime-style pattern: `%H %M %S %Y %m %d %%`.
fn format_clock(pattern: &str) -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let (year, month, day) = civil_from_days((secs / 86_400) as i64);
    let of_day = secs % 86_400;
    let (hh, mm, ss) = (of_day / 3600, (of_day % 3600) / 60, of_day % 60);
    format_pattern(pattern, year, month, day, hh, mm, ss)
}

pub(crate) fn format_pattern(
    pattern: &str,
    year: i64,
    month: u32,
    day: u32,
    hh: u64,
    mm: u64,
    ss: u64,
) -> String {
    let mut out = String::new();
    let mut chars = pattern.chars();
    while let Some(c) = chars.next() {
        if c != '%' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('H') => out.push_str(&format!("{hh:02}")),
            Some('M') => out.push_str(&format!("{mm:02}")),
            Some('S') => out.push_str(&format!("{ss:02}")),
            Some('Y') => out.push_str(&format!("{year:04}")),
            Some('m') => out.push_str(&format!("{month:02}")),
            Some('d') => out.push_str(&format!("{day:02}")),
            Some('%') => out.push('%'),
            Some(other) => {
                out.push('%');
                out.push(other);
            }
            None => out.push('%'),
        }
    }
    out
}

/// Days-since-epoch to civil (year, month, day), days algorithm over the
/// proleptic Gregorian calendar.
fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (if m <= 2 { y + 1 } else { y }, m, d)
}
