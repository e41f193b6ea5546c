//! Runtime values.
//!
//! `Int` is 64-bit with a symmetric range: `i64::MIN` is never a valid value,
//! so negation is total. `Decimal` is an exact integer scaled by 10^4.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub const INT_MAX: i64 = i64::MAX;
pub const INT_MIN: i64 = -i64::MAX;

pub const DECIMAL_SCALE: i64 = 10_000;
pub const DECIMAL_DIGITS: usize = 4;

/// Returns `Some(v)` when `v` lies in the symmetric Int range.
pub fn int_in_range(v: i128) -> Option<i64> {
    if v >= INT_MIN as i128 && v <= INT_MAX as i128 {
        Some(v as i64)
    } else {
        None
    }
}

pub fn int_neg(a: i64) -> i64 {
    debug_assert!(a != i64::MIN);
    -a
}

pub fn int_add(a: i64, b: i64) -> Option<i64> {
    int_in_range(a as i128 + b as i128)
}

pub fn int_sub(a: i64, b: i64) -> Option<i64> {
    int_in_range(a as i128 - b as i128)
}

pub fn int_mul(a: i64, b: i64) -> Option<i64> {
    int_in_range(a as i128 * b as i128)
}

/// Truncating division; `None` on a zero divisor.
pub fn int_div(a: i64, b: i64) -> Option<i64> {
    if b == 0 {
        return None;
    }
    int_in_range(a as i128 / b as i128)
}

/// Exact decimal: the wrapped integer is the value times 10^4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Decimal(i64);

impl Decimal {
    pub const ZERO: Decimal = Decimal(0);

    pub fn from_scaled(scaled: i64) -> Option<Decimal> {
        int_in_range(scaled as i128).map(Decimal)
    }

    pub fn scaled(self) -> i64 {
        self.0
    }

    pub fn neg(self) -> Decimal {
        Decimal(-self.0)
    }

    pub fn add(self, o: Decimal) -> Option<Decimal> {
        int_add(self.0, o.0).map(Decimal)
    }

    pub fn sub(self, o: Decimal) -> Option<Decimal> {
        int_sub(self.0, o.0).map(Decimal)
    }

    pub fn mul(self, o: Decimal) -> Option<Decimal> {
        int_in_range(self.0 as i128 * o.0 as i128 / DECIMAL_SCALE as i128).map(Decimal)
    }

    pub fn div(self, o: Decimal) -> Option<Decimal> {
        if o.0 == 0 {
            return None;
        }
        int_in_range(self.0 as i128 * DECIMAL_SCALE as i128 / o.0 as i128).map(Decimal)
    }

    /// Number of significant decimal digits in the scaled representation.
    pub fn significant_digits(self) -> usize {
        let s = self.to_string();
        s.trim_start_matches('-')
            .chars()
            .filter(char::is_ascii_digit)
            .skip_while(|c| *c == '0')
            .count()
    }
}

impl fmt::Display for Decimal {
    /// Canonical text: at least two fractional digits, further trailing
    /// zeros dropped (`45.50`, `22.75`, `0.0001`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let neg = self.0 < 0;
        let mag = (self.0 as i128).unsigned_abs();
        let int = mag / DECIMAL_SCALE as u128;
        let frac = mag % DECIMAL_SCALE as u128;
        let mut frac_s = format!("{:0width$}", frac, width = DECIMAL_DIGITS);
        while frac_s.len() > 2 && frac_s.ends_with('0') {
            frac_s.pop();
        }
        if neg {
            f.write_str("-")?;
        }
        write!(f, "{int}.{frac_s}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecimalParseError {
    #[error("invalid decimal literal `{0}`")]
    Syntax(String),
    #[error("decimal literal `{0}` has more than four fractional digits")]
    Precision(String),
    #[error("decimal literal `{0}` is out of range")]
    Range(String),
}

impl FromStr for Decimal {
    type Err = DecimalParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        let all_digits = |t: &str| t.chars().all(|c| c.is_ascii_digit());
        if int_part.is_empty() || !all_digits(int_part) || !all_digits(frac_part) {
            return Err(DecimalParseError::Syntax(s.to_string()));
        }
        if body.contains('.') && frac_part.is_empty() {
            return Err(DecimalParseError::Syntax(s.to_string()));
        }
        let frac_trim = frac_part.trim_end_matches('0');
        if frac_trim.len() > DECIMAL_DIGITS {
            return Err(DecimalParseError::Precision(s.to_string()));
        }
        let int: i128 = int_part
            .parse()
            .map_err(|_| DecimalParseError::Range(s.to_string()))?;
        let mut frac: i128 = 0;
        for (i, c) in frac_trim.chars().enumerate() {
            frac += (c as i128 - '0' as i128) * 10i128.pow((DECIMAL_DIGITS - 1 - i) as u32);
        }
        let mag = int
            .checked_mul(DECIMAL_SCALE as i128)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(|| DecimalParseError::Range(s.to_string()))?;
        let v = if neg { -mag } else { mag };
        int_in_range(v)
            .map(Decimal)
            .ok_or_else(|| DecimalParseError::Range(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    /// The single value of type `None`.
    Unit,
    Bool(bool),
    Int(i64),
    Decimal(Decimal),
    CString(String),
    String(String),
    Alias {
        name: String,
        inner: Box<Value>,
        sensitive: bool,
    },
    Entity {
        name: String,
        fields: Vec<(String, Value)>,
    },
    List(Vec<Value>),
    Option(Option<Box<Value>>),
}

impl Value {
    pub fn alias(name: impl Into<String>, inner: Value, sensitive: bool) -> Value {
        Value::Alias {
            name: name.into(),
            inner: Box::new(inner),
            sensitive,
        }
    }

    pub fn some(v: Value) -> Value {
        Value::Option(Some(Box::new(v)))
    }

    pub fn none() -> Value {
        Value::Option(None)
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Strips alias wrappers.
    pub fn base(&self) -> &Value {
        match self {
            Value::Alias { inner, .. } => inner.base(),
            v => v,
        }
    }

    pub fn field(&self, name: &str) -> Option<&Value> {
        match self {
            Value::Entity { fields, .. } => fields.iter().find(|(n, _)| n == name).map(|(_, v)| v),
            _ => None,
        }
    }

    /// Text of a primitive leaf, used for permission interpolation.
    pub fn leaf_text(&self) -> Option<String> {
        match self.base() {
            Value::Int(i) => Some(i.to_string()),
            Value::Decimal(d) => Some(d.to_string()),
            Value::Bool(b) => Some(b.to_string()),
            Value::CString(s) | Value::String(s) => Some(s.clone()),
            _ => None,
        }
    }

    /// Every string (or numeric) leaf sitting under a sensitive alias.
    pub fn sensitive_leaves(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_sensitive(false, &mut out);
        out
    }

    fn collect_sensitive(&self, under: bool, out: &mut Vec<String>) {
        match self {
            Value::Alias {
                inner, sensitive, ..
            } => inner.collect_sensitive(under || *sensitive, out),
            Value::Entity { fields, .. } => {
                for (_, v) in fields {
                    v.collect_sensitive(under, out);
                }
            }
            Value::List(items) => {
                for v in items {
                    v.collect_sensitive(under, out);
                }
            }
            Value::Option(Some(v)) => v.collect_sensitive(under, out),
            leaf if under => {
                if let Some(t) = leaf.leaf_text() {
                    if !t.is_empty() {
                        out.push(t);
                    }
                }
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decimal_canonical_text() {
        let d: Decimal = "45.5".parse().unwrap();
        assert_eq!(d.to_string(), "45.50");
        assert_eq!("22.75".parse::<Decimal>().unwrap().to_string(), "22.75");
        assert_eq!("0.0001".parse::<Decimal>().unwrap().to_string(), "0.0001");
        assert_eq!("-3".parse::<Decimal>().unwrap().to_string(), "-3.00");
        assert_eq!("0.0".parse::<Decimal>().unwrap(), Decimal::ZERO);
    }

    #[test]
    fn decimal_rejects_excess_precision() {
        assert!(matches!(
            "1.00001".parse::<Decimal>(),
            Err(DecimalParseError::Precision(_))
        ));
        assert!("1.".parse::<Decimal>().is_err());
        assert!(".5".parse::<Decimal>().is_err());
    }

    #[test]
    fn decimal_mul_div_are_exact() {
        let a: Decimal = "45.50".parse().unwrap();
        let two: Decimal = "2".parse().unwrap();
        assert_eq!(a.div(two).unwrap().to_string(), "22.75");
        assert_eq!(a.mul(two).unwrap().to_string(), "91.00");
        assert!(a.div(Decimal::ZERO).is_none());
    }

    #[test]
    fn int_boundaries() {
        assert_eq!(int_add(INT_MAX, 1), None);
        assert_eq!(int_sub(INT_MIN, 1), None);
        assert_eq!(int_add(INT_MAX, 0), Some(INT_MAX));
        assert_eq!(int_neg(INT_MIN), INT_MAX);
        assert_eq!(int_div(-7, 2), Some(-3));
        assert_eq!(int_div(1, 0), None);
    }

    proptest! {
        #[test]
        fn decimal_text_round_trips(scaled in (INT_MIN..=INT_MAX)) {
            let d = Decimal::from_scaled(scaled).unwrap();
            prop_assert_eq!(d.to_string().parse::<Decimal>().unwrap(), d);
        }
    }
}
