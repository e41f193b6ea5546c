//! JSON bridge.
//!
//! Ints beyond 2^53-1 and Decimals with more than 15 significant digits do
//! not survive IEEE doubles, so they travel as `"#n:<digits>"` strings.
//! A `some` directly wrapping another option is written `{"#some": x}`.

use std::fmt::Write;

use serde_json::{Map, Value as Json};

use crate::eval::{construct_entity, make_alias, FaultKind};
use crate::syntax::ast::Type;
use crate::types::TypedModule;
use crate::value::{int_in_range, Decimal, Value};

use super::DecodeError;

pub const JSON_INT_LIMIT: i64 = (1 << 53) - 1;
pub const NUM_SENTINEL: &str = "#n:";
const SOME_KEY: &str = "#some";
const DECIMAL_JSON_DIGITS: usize = 15;

pub fn encode_json(v: &Value) -> String {
    let mut out = String::new();
    write_json(v, &mut out);
    out
}

fn json_str(s: &str, out: &mut String) {
    out.push_str(&serde_json::to_string(s).expect("strings always serialize"));
}

fn write_json(v: &Value, out: &mut String) {
    match v {
        Value::Unit | Value::Option(None) => out.push_str("null"),
        Value::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Value::Int(i) => {
            if i.abs() <= JSON_INT_LIMIT {
                let _ = write!(out, "{i}");
            } else {
                json_str(&format!("{NUM_SENTINEL}{i}"), out);
            }
        }
        Value::Decimal(d) => {
            if d.significant_digits() <= DECIMAL_JSON_DIGITS {
                let _ = write!(out, "{d}");
            } else {
                json_str(&format!("{NUM_SENTINEL}{d}"), out);
            }
        }
        Value::CString(s) | Value::String(s) => json_str(s, out),
        Value::Alias { inner, .. } => write_json(inner, out),
        Value::Entity { fields, .. } => {
            out.push('{');
            for (i, (n, f)) in fields.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                json_str(n, out);
                out.push(':');
                write_json(f, out);
            }
            out.push('}');
        }
        Value::List(items) => {
            out.push('[');
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_json(it, out);
            }
            out.push(']');
        }
        Value::Option(Some(inner)) => {
            if matches!(inner.as_ref(), Value::Option(_) | Value::Unit) {
                out.push('{');
                json_str(SOME_KEY, out);
                out.push(':');
                write_json(inner, out);
                out.push('}');
            } else {
                write_json(inner, out);
            }
        }
    }
}

pub fn decode_json(tm: &TypedModule, text: &str, expected: &Type) -> Result<Value, DecodeError> {
    let j: Json = serde_json::from_str(text).map_err(|e| DecodeError::Json(e.to_string()))?;
    from_json(tm, &j, expected, "$")
}

fn err(path: &str, msg: impl std::fmt::Display) -> DecodeError {
    DecodeError::Json(format!("{path}: {msg}"))
}

fn number_text(j: &Json, path: &str) -> Result<String, DecodeError> {
    match j {
        Json::Number(n) => Ok(n.to_string()),
        Json::String(s) => s
            .strip_prefix(NUM_SENTINEL)
            .map(str::to_string)
            .ok_or_else(|| err(path, "expected a number")),
        _ => Err(err(path, "expected a number")),
    }
}

fn from_json(tm: &TypedModule, j: &Json, ty: &Type, path: &str) -> Result<Value, DecodeError> {
    match ty {
        Type::None => match j {
            Json::Null => Ok(Value::Unit),
            _ => Err(err(path, "expected null")),
        },
        Type::Bool => j.as_bool().map(Value::Bool).ok_or_else(|| err(path, "expected a boolean")),
        Type::Int => {
            let t = number_text(j, path)?;
            let n: i128 = t.parse().map_err(|_| err(path, format!("`{t}` is not an Int")))?;
            int_in_range(n).map(Value::Int).ok_or_else(|| err(path, "Int out of range"))
        }
        Type::Decimal => {
            let t = number_text(j, path)?;
            if t.contains(['e', 'E']) {
                return Err(err(path, "exponent notation is not a Decimal"));
            }
            t.parse::<Decimal>().map(Value::Decimal).map_err(|e| err(path, e))
        }
        Type::CString => match j {
            Json::String(s) if s.chars().all(|c| (' '..='~').contains(&c)) => Ok(Value::CString(s.clone())),
            Json::String(_) => Err(err(path, "CString must be printable ASCII")),
            _ => Err(err(path, "expected a string")),
        },
        Type::String => match j {
            Json::String(s) => Ok(Value::String(s.clone())),
            _ => Err(err(path, "expected a string")),
        },
        Type::List(elem) => match j {
            Json::Array(items) => items
                .iter()
                .enumerate()
                .map(|(i, it)| from_json(tm, it, elem, &format!("{path}[{i}]")))
                .collect::<Result<_, _>>()
                .map(Value::List),
            _ => Err(err(path, "expected an array")),
        },
        Type::Option(inner) => match j {
            Json::Null => Ok(Value::none()),
            Json::Object(m) if m.len() == 1 && m.contains_key(SOME_KEY) => {
                Ok(Value::some(from_json(tm, &m[SOME_KEY], inner, path)?))
            }
            other => Ok(Value::some(from_json(tm, other, inner, path)?)),
        },
        Type::Named(n) => {
            if let Some(a) = tm.alias(n) {
                let inner = from_json(tm, j, &a.base.clone(), path)?;
                return make_alias(tm, n, inner).map_err(|_| DecodeError::Constraint {
                    alias: n.clone(),
                    pattern: tm.alias_regex(n).map(|r| r.to_string()).unwrap_or_default(),
                    offset: 0,
                });
            }
            let Some(decl) = tm.entity(n) else {
                return Err(DecodeError::UnknownType(n.clone()));
            };
            let Json::Object(m) = j else {
                return Err(err(path, format!("expected a `{n}` object")));
            };
            entity(tm, n, m, decl.fields.iter().map(|f| (f.name.clone(), f.ty.clone())).collect(), path)
        }
        Type::Never => Err(err(path, "no value has type `Never`")),
    }
}

fn entity(
    tm: &TypedModule,
    name: &str,
    m: &Map<String, Json>,
    fields: Vec<(String, Type)>,
    path: &str,
) -> Result<Value, DecodeError> {
    if let Some(k) = m.keys().find(|k| !fields.iter().any(|(f, _)| f == *k)) {
        return Err(err(path, format!("`{name}` has no field `{k}`")));
    }
    let mut out = Vec::with_capacity(fields.len());
    for (f, t) in fields {
        let v = match m.get(&f) {
            Some(v) => from_json(tm, v, &t, &format!("{path}.{f}"))?,
            // An absent key reads as null for optional fields.
            None if matches!(t, Type::Option(_)) => Value::Option(None),
            None => return Err(err(path, format!("`{name}` is missing field `{f}`"))),
        };
        out.push((f, v));
    }
    construct_entity(tm, name, out).map_err(|f| match f.kind {
        FaultKind::Invariant => DecodeError::Invariant {
            entity: name.into(),
            clause: f.clause.unwrap_or(f.message),
            offset: 0,
        },
        _ => err(path, f.message),
    })
}

