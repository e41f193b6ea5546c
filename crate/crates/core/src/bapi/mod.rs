//! BAPI wire forms.
//!
//! Every form is generated from the module's declarations:
//!
//! * verbose: `Order{ orderid = 'A53'<OrderId>, amount = 45.50d, customer = '123456789'<TIN> }`
//! * minimal: `Order{ 'A53', 45.50d, '123456789' }`, fields by position
//! * redacted: verbose with sensitive leaves masked
//! * json: plain objects keyed by declared field names
//!
//! Verbose and minimal text share one decoder, so the two may be mixed at
//! any nesting boundary.

mod json;
mod reader;

use std::fmt;
use std::fmt::Write;

use crate::syntax::ast::{EntityDecl, FieldDecl, Type};
use crate::syntax::printer::quote;
use crate::types::TypedModule;
use crate::value::Value;
use crate::Span;

pub use json::{decode_json, encode_json, JSON_INT_LIMIT, NUM_SENTINEL};
pub use reader::decode_text;

pub const MEDIA_VERBOSE: &str = "application/bapi+verbose";
pub const MEDIA_MINIMAL: &str = "application/bapi+min";
pub const MEDIA_JSON: &str = "application/json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WireForm {
    Verbose,
    Minimal,
    Redacted,
    Json,
}

impl WireForm {
    pub fn name(self) -> &'static str {
        match self {
            WireForm::Verbose => "verbose",
            WireForm::Minimal => "minimal",
            WireForm::Redacted => "redacted",
            WireForm::Json => "json",
        }
    }

    pub fn from_name(s: &str) -> Option<WireForm> {
        Some(match s {
            "verbose" => WireForm::Verbose,
            "minimal" | "min" => WireForm::Minimal,
            "redacted" => WireForm::Redacted,
            "json" => WireForm::Json,
            _ => return None,
        })
    }

    /// Media type for HTTP negotiation. Redacted is server policy and has none.
    pub fn media_type(self) -> Option<&'static str> {
        match self {
            WireForm::Verbose => Some(MEDIA_VERBOSE),
            WireForm::Minimal => Some(MEDIA_MINIMAL),
            WireForm::Json => Some(MEDIA_JSON),
            WireForm::Redacted => None,
        }
    }

    pub fn from_media_type(m: &str) -> Option<WireForm> {
        let essence = m.split(';').next().unwrap_or_default().trim().to_ascii_lowercase();
        Some(match essence.as_str() {
            MEDIA_VERBOSE => WireForm::Verbose,
            MEDIA_MINIMAL => WireForm::Minimal,
            MEDIA_JSON => WireForm::Json,
            _ => return None,
        })
    }
}

impl fmt::Display for WireForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { message: String, offset: usize },
    #[error("value at offset {offset} does not match `{alias}` pattern {pattern}")]
    Constraint {
        alias: String,
        pattern: String,
        offset: usize,
    },
    #[error("`{entity}` invariant violated at offset {offset}: {clause}")]
    Invariant {
        entity: String,
        clause: String,
        offset: usize,
    },
    #[error("`{entity}` has {expected} field(s) but {found} were given at offset {offset}")]
    FieldCount {
        entity: String,
        expected: usize,
        found: usize,
        offset: usize,
    },
    #[error("redacted value at offset {offset} cannot be decoded")]
    Redacted { offset: usize },
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("json: {0}")]
    Json(String),
}

/// Decodes `text` in `form` against `expected`. Redacted text is read as
/// verbose; masked leaves usually fail their constraints.
pub fn decode(tm: &TypedModule, text: &str, expected: &Type, form: WireForm) -> Result<Value, DecodeError> {
    match form {
        WireForm::Json => decode_json(tm, text, expected),
        _ => decode_text(tm, text, expected),
    }
}

pub fn encode(tm: &TypedModule, v: &Value, ty: &Type, form: WireForm) -> String {
    match form {
        WireForm::Json => encode_json(v),
        _ => {
            let mut out = String::new();
            Encoder { tm, form, out: &mut out }.value(v, Some(ty), true);
            out
        }
    }
}

/// Structure-preserving mask: sensitive string leaves become `*` of equal
/// length and sensitive numeric leaves become zero.
pub fn redact(v: &Value) -> Value {
    fn go(v: &Value, under: bool) -> Value {
        match v {
            Value::Alias {
                name,
                inner,
                sensitive,
            } => Value::Alias {
                name: name.clone(),
                inner: Box::new(go(inner, under || *sensitive)),
                sensitive: *sensitive,
            },
            Value::Entity { name, fields } => Value::Entity {
                name: name.clone(),
                fields: fields.iter().map(|(n, f)| (n.clone(), go(f, under))).collect(),
            },
            Value::List(items) => Value::List(items.iter().map(|i| go(i, under)).collect()),
            Value::Option(Some(i)) => Value::some(go(i, under)),
            Value::CString(s) if under => Value::CString(mask(s)),
            Value::String(s) if under => Value::String(mask(s)),
            Value::Int(_) if under => Value::Int(0),
            Value::Decimal(_) if under => Value::Decimal(crate::Decimal::ZERO),
            Value::Bool(_) if under => Value::Bool(false),
            other => other.clone(),
        }
    }
    go(v, false)
}

fn mask(s: &str) -> String {
    "*".repeat(s.chars().count())
}

/// Redacted text for any value, for logs and fault records.
pub fn redacted_text(tm: &TypedModule, v: &Value) -> String {
    let mut out = String::new();
    Encoder {
        tm,
        form: WireForm::Redacted,
        out: &mut out,
    }
    .value(v, None, true);
    out
}

struct Encoder<'a> {
    tm: &'a TypedModule,
    form: WireForm,
    out: &'a mut String,
}

impl Encoder<'_> {
    fn field_types(&self, entity: &str) -> Vec<Option<Type>> {
        match self.tm.entity(entity) {
            Some(e) => e.fields.iter().map(|f| Some(f.ty.clone())).collect(),
            None => Vec::new(),
        }
    }

    fn value(&mut self, v: &Value, ty: Option<&Type>, top: bool) {
        self.value_in(v, ty, top, false)
    }

    fn value_in(&mut self, v: &Value, ty: Option<&Type>, top: bool, sensitive: bool) {
        let verbose = self.form != WireForm::Minimal;
        match v {
            Value::Unit => self.out.push_str("none"),
            Value::Bool(b) => {
                if sensitive && self.form == WireForm::Redacted {
                    self.out.push_str("#redacted");
                } else {
                    let _ = write!(self.out, "{b}");
                }
            }
            Value::Int(i) => {
                if sensitive && self.form == WireForm::Redacted {
                    self.out.push_str("#redacted");
                } else {
                    let _ = write!(self.out, "{i}i");
                }
            }
            Value::Decimal(d) => {
                if sensitive && self.form == WireForm::Redacted {
                    self.out.push_str("#redacted");
                } else {
                    let _ = write!(self.out, "{d}d");
                }
            }
            Value::CString(s) => {
                let s = if sensitive && self.form == WireForm::Redacted { mask(s) } else { s.clone() };
                self.out.push_str(&quote(&s, '\''));
            }
            Value::String(s) => {
                let s = if sensitive && self.form == WireForm::Redacted { mask(s) } else { s.clone() };
                self.out.push_str(&quote(&s, '"'));
            }
            Value::Alias {
                name,
                inner,
                sensitive: s,
            } => {
                let masked = (*s || sensitive) && self.form == WireForm::Redacted;
                if verbose {
                    match inner.as_ref() {
                        Value::Int(i) if !masked => {
                            let _ = write!(self.out, "{i}");
                        }
                        Value::Decimal(d) if !masked => {
                            let _ = write!(self.out, "{d}");
                        }
                        other => self.value_in(other, None, false, *s || sensitive),
                    }
                    let _ = write!(self.out, "<{name}>");
                } else {
                    self.value_in(inner, None, false, *s || sensitive);
                }
            }
            Value::Entity { name, fields } => {
                if verbose || top {
                    self.out.push_str(name);
                }
                if fields.is_empty() {
                    self.out.push_str("{}");
                    return;
                }
                self.out.push_str("{ ");
                let tys = self.field_types(name);
                for (i, (fname, fv)) in fields.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    if verbose {
                        let _ = write!(self.out, "{fname} = ");
                    }
                    let t = tys.get(i).cloned().flatten();
                    self.value_in(fv, t.as_ref(), false, sensitive);
                }
                self.out.push_str(" }");
            }
            Value::List(items) => {
                let elem = match ty {
                    Some(Type::List(t)) => Some((**t).clone()),
                    _ => None,
                };
                if verbose {
                    let name = match &elem {
                        Some(t) => t.to_string(),
                        None => items.first().map(type_of).unwrap_or(Type::Never).to_string(),
                    };
                    let _ = write!(self.out, "List<{name}>");
                }
                if items.is_empty() {
                    self.out.push_str("{}");
                    return;
                }
                self.out.push_str("{ ");
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.value_in(it, elem.as_ref(), false, sensitive);
                }
                self.out.push_str(" }");
            }
            Value::Option(None) => self.out.push_str("none"),
            Value::Option(Some(inner)) => {
                let t = match ty {
                    Some(Type::Option(t)) => Some((**t).clone()),
                    _ => None,
                };
                self.out.push_str("some(");
                self.value_in(inner, t.as_ref(), false, sensitive);
                self.out.push(')');
            }
        }
    }
}

/// Best-effort type of a value; element types of empty containers are unknown.
pub fn type_of(v: &Value) -> Type {
    match v {
        Value::Unit => Type::None,
        Value::Bool(_) => Type::Bool,
        Value::Int(_) => Type::Int,
        Value::Decimal(_) => Type::Decimal,
        Value::CString(_) => Type::CString,
        Value::String(_) => Type::String,
        Value::Alias { name, .. } | Value::Entity { name, .. } => Type::Named(name.clone()),
        Value::List(items) => Type::list(items.first().map(type_of).unwrap_or(Type::Never)),
        Value::Option(inner) => Type::option(inner.as_deref().map(type_of).unwrap_or(Type::Never)),
    }
}

/// An entity declaration that exists only on the wire, such as an argument
/// record. It has no invariants.
pub fn synthetic_entity(name: &str, fields: &[(String, Type)]) -> EntityDecl {
    EntityDecl {
        name: name.to_string(),
        fields: fields
            .iter()
            .map(|(n, t)| FieldDecl {
                name: n.clone(),
                ty: t.clone(),
                span: Span::default(),
            })
            .collect(),
        invariants: Vec::new(),
        doc: None,
        span: Span::default(),
    }
}

/// Name of the synthetic record carrying the arguments of `endpoint`.
pub fn args_entity_name(endpoint: &str) -> String {
    let mut cs = endpoint.chars();
    match cs.next() {
        Some(c) => format!("{}{}Args", c.to_ascii_uppercase(), cs.as_str()),
        None => "Args".into(),
    }
}

#[cfg(test)]
mod tests;
