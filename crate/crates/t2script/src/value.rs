//! Values and the numeric model.
//!
//! Every datum in T2Script is Unicode text. Numeric and boolean meaning is
//! assigned at the point of use: undotted arithmetic operators parse their
//! arguments as arbitrary-precision integers, dotted operators parse them as
//! 64-bit floats, and conditions treat the single character `0` as false and
//! everything else (including the empty string) as true.

use num_bigint::BigInt;
use std::fmt;
use std::str::FromStr;

/// A T2Script value: a piece of Unicode text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Value(String);

impl Value {
    pub fn new(text: impl Into<String>) -> Self {
        Value(text.into())
    }

    pub fn empty() -> Self {
        Value(String::new())
    }

    /// Canonical boolean: `1` for true, `0` for false.
    pub fn from_bool(b: bool) -> Self {
        Value(if b { "1" } else { "0" }.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// False is exactly the single character `0`; anything else, including
    /// the empty string, is true.
    pub fn is_truthy(&self) -> bool {
        self.0 != "0"
    }

    /// Parses the value as an arbitrary-precision integer.
    pub fn as_int(&self) -> Option<BigInt> {
        BigInt::from_str(self.0.trim()).ok()
    }

    /// Parses the value as a finite 64-bit float.
    pub fn as_float(&self) -> Option<f64> {
        f64::from_str(self.0.trim()).ok().filter(|x| x.is_finite())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value(s)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value(s.to_string())
    }
}

impl From<BigInt> for Value {
    fn from(i: BigInt) -> Self {
        Value(i.to_string())
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::from_bool(b)
    }
}

impl AsRef<str> for Value {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl PartialEq<str> for Value {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for Value {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

/// Renders a float with up to 15 significant digits and no trailing zeros.
///
/// Values in `[1e-5, 1e15)` (by magnitude) print in plain decimal notation,
/// everything else in exponent notation. The output always parses back with
/// `f64::from_str`.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let formatted = format!("{:.14e}", x);
    let (mantissa, exp) = formatted
        .split_once('e')
        .expect("{:e} always contains an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };

    // `point` is the number of digits that sit before the decimal point.
    let point = exp + 1;
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if point <= -5 || point > 15 {
        // Exponent notation: d.ddd e(point-1)
        out.push_str(&digits[..1]);
        if digits.len() > 1 {
            out.push('.');
            out.push_str(&digits[1..]);
        }
        out.push('e');
        out.push_str(&(point - 1).to_string());
    } else if point <= 0 {
        out.push_str("0.");
        for _ in point..0 {
            out.push('0');
        }
        out.push_str(digits);
    } else if (point as usize) >= digits.len() {
        out.push_str(digits);
        for _ in digits.len()..point as usize {
            out.push('0');
        }
    } else {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    }
    out
}

/// Renders a float that is known to hold an integral value, without a
/// fractional part (used by the rounding operators).
pub(crate) fn format_integral_float(x: f64) -> String {
    format!("{:.0}", x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truthiness_is_exactly_zero() {
        assert!(!Value::from("0").is_truthy());
        assert!(Value::from("").is_truthy());
        assert!(Value::from("false").is_truthy());
        assert!(Value::from("00").is_truthy());
        assert!(Value::from(" 0").is_truthy());
    }

    #[test]
    fn int_parsing() {
        assert_eq!(Value::from("42").as_int().unwrap().to_string(), "42");
        assert_eq!(Value::from("-7").as_int().unwrap().to_string(), "-7");
        assert!(Value::from("4.2").as_int().is_none());
        assert!(Value::from("x").as_int().is_none());
        // big enough to overflow machine integers
        let big = "123456789012345678901234567890";
        assert_eq!(Value::from(big).as_int().unwrap().to_string(), big);
    }

    #[test]
    fn float_parsing_rejects_non_finite() {
        assert_eq!(Value::from("1.5").as_float(), Some(1.5));
        assert!(Value::from("nan").as_float().is_none());
        assert!(Value::from("inf").as_float().is_none());
    }

    #[test]
    fn float_formatting() {
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(3.0), "3");
        assert_eq!(format_float(0.1 + 0.2), "0.3");
        assert_eq!(format_float(-1.5), "-1.5");
        assert_eq!(format_float(101.0), "101");
        assert_eq!(format_float(0.00001), "0.00001");
        assert_eq!(format_float(1e20), "1e20");
        assert_eq!(format_float(2.5e-9), "2.5e-9");
        // round-trips through the standard parser
        for x in [1.0 / 3.0, 2f64.sqrt(), 1e-7, 123456.789] {
            let parsed: f64 = format_float(x).parse().unwrap();
            assert!((parsed - x).abs() <= x.abs() * 1e-14);
        }
    }
}
