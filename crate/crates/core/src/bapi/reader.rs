//! Single-pass decoder for verbose and minimal text.

use crate::eval::{construct_entity, make_alias, FaultKind};
use crate::syntax::ast::Type;
use crate::types::TypedModule;
use crate::value::{Decimal, Value};

use super::DecodeError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Eq,
    Lt,
    Gt,
    Ident(String),
    /// Digits with optional sign and fraction, plus an optional `i`/`d` suffix.
    Num { text: String, suffix: Option<char> },
    CStr(String),
    Str(String),
    Redacted,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num { text, .. } => format!("number `{text}`"),
            Tok::CStr(_) | Tok::Str(_) => "string".into(),
            Tok::Redacted => "`#redacted`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    peeked: Option<(Tok, usize)>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            pos: 0,
            peeked: None,
        }
    }

    fn err(&self, message: impl Into<String>, offset: usize) -> DecodeError {
        DecodeError::Syntax {
            message: message.into(),
            offset,
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn bump_char(&mut self) -> Option<char> {
        let c = self.rest().chars().next()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn scan(&mut self) -> Result<(Tok, usize), DecodeError> {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
        let start = self.pos;
        let Some(c) = self.bump_char() else {
            return Ok((Tok::Eof, start));
        };
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '=' => Tok::Eq,
            '<' => Tok::Lt,
            '>' => Tok::Gt,
            '#' => {
                if self.rest().starts_with("redacted") {
                    self.pos += "redacted".len();
                    Tok::Redacted
                } else {
                    return Err(self.err("unexpected `#`", start));
                }
            }
            '\'' | '"' => {
                let mut out = String::new();
                loop {
                    match self.bump_char() {
                        None => return Err(self.err("unterminated string", start)),
                        Some(ch) if ch == c => break,
                        Some('\\') => {
                            let e = self.bump_char().ok_or_else(|| self.err("unterminated string", start))?;
                            let ch = crate::syntax::lexer::unescape_char(e)
                                .ok_or_else(|| self.err(format!("unknown escape `\\{e}`"), self.pos - 1))?;
                            out.push(ch);
                        }
                        Some(ch) => out.push(ch),
                    }
                }
                if c == '\'' {
                    Tok::CStr(out)
                } else {
                    Tok::Str(out)
                }
            }
            c if c == '-' || c == '+' || c.is_ascii_digit() => {
                let mut text = String::new();
                if c != '+' {
                    text.push(c);
                }
                let mut seen_dot = false;
                while let Some(n) = self.rest().chars().next() {
                    if n.is_ascii_digit() {
                        text.push(n);
                    } else if n == '.' && !seen_dot {
                        seen_dot = true;
                        text.push(n);
                    } else {
                        break;
                    }
                    self.pos += 1;
                }
                if !text.chars().any(|d| d.is_ascii_digit()) {
                    return Err(self.err("expected digits", start));
                }
                let suffix = match self.rest().chars().next() {
                    Some(s @ ('i' | 'd')) => {
                        self.pos += 1;
                        Some(s)
                    }
                    _ => None,
                };
                if matches!(self.rest().chars().next(), Some(n) if n.is_alphanumeric() || n == '_') {
                    return Err(self.err("malformed number", start));
                }
                Tok::Num { text, suffix }
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::from(c);
                while let Some(n) = self.rest().chars().next() {
                    if n.is_alphanumeric() || n == '_' {
                        s.push(n);
                        self.pos += n.len_utf8();
                    } else if n == ':' && self.rest().starts_with("::") {
                        s.push_str("::");
                        self.pos += 2;
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            other => return Err(self.err(format!("unexpected character `{other}`"), start)),
        };
        Ok((tok, start))
    }

    fn peek(&mut self) -> Result<&Tok, DecodeError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.scan()?);
        }
        Ok(&self.peeked.as_ref().unwrap().0)
    }

    fn offset(&mut self) -> Result<usize, DecodeError> {
        self.peek()?;
        Ok(self.peeked.as_ref().unwrap().1)
    }

    fn next(&mut self) -> Result<(Tok, usize), DecodeError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.scan(),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), DecodeError> {
        let (t, off) = self.next()?;
        if t == want {
            Ok(())
        } else {
            Err(self.err(format!("expected {}, found {}", want.describe(), t.describe()), off))
        }
    }
}

pub fn decode_text(tm: &TypedModule, text: &str, expected: &Type) -> Result<Value, DecodeError> {
    let mut d = Decoder {
        tm,
        lx: Lexer::new(text),
    };
    let v = d.value(expected, true)?;
    let (t, off) = d.lx.next()?;
    if t != Tok::Eof {
        return Err(d.lx.err(format!("trailing {} after value", t.describe()), off));
    }
    Ok(v)
}

struct Decoder<'a> {
    tm: &'a TypedModule,
    lx: Lexer<'a>,
}

fn printable_ascii(s: &str) -> bool {
    s.chars().all(|c| (' '..='~').contains(&c))
}

impl Decoder<'_> {
    fn mismatch(&self, want: &Type, found: &Tok, offset: usize) -> DecodeError {
        DecodeError::Syntax {
            message: format!("expected a `{want}` value, found {}", found.describe()),
            offset,
        }
    }

    fn value(&mut self, ty: &Type, top: bool) -> Result<Value, DecodeError> {
        let off = self.lx.offset()?;
        if *self.lx.peek()? == Tok::Redacted {
            return Err(DecodeError::Redacted { offset: off });
        }
        match ty {
            Type::Int | Type::Decimal | Type::Bool | Type::CString | Type::String | Type::None => self.primitive(ty),
            Type::Named(n) => {
                if let Some(a) = self.tm.alias(n) {
                    let base = a.base.clone();
                    let inner = self.primitive(&base)?;
                    if *self.lx.peek()? == Tok::Lt {
                        self.lx.next()?;
                        let (t, aoff) = self.lx.next()?;
                        match t {
                            Tok::Ident(name) if &name == n => {}
                            other => {
                                return Err(self.lx.err(
                                    format!("expected annotation `<{n}>`, found {}", other.describe()),
                                    aoff,
                                ))
                            }
                        }
                        self.lx.expect(Tok::Gt)?;
                    }
                    make_alias(self.tm, n, inner).map_err(|_| DecodeError::Constraint {
                        alias: n.clone(),
                        pattern: self
                            .tm
                            .alias_regex(n)
                            .map(|r| r.to_string())
                            .unwrap_or_default(),
                        offset: off,
                    })
                } else if self.tm.entity(n).is_some() {
                    self.entity(n, top)
                } else {
                    Err(DecodeError::UnknownType(n.clone()))
                }
            }
            Type::List(elem) => {
                if let Tok::Ident(s) = self.lx.peek()? {
                    if s == "List" {
                        self.lx.next()?;
                        self.lx.expect(Tok::Lt)?;
                        let toff = self.lx.offset()?;
                        let written = self.ty()?;
                        if written != **elem && written != Type::Never {
                            return Err(self.lx.err(
                                format!("expected `List<{elem}>`, found `List<{written}>`"),
                                toff,
                            ));
                        }
                        self.lx.expect(Tok::Gt)?;
                    }
                }
                self.lx.expect(Tok::LBrace)?;
                let mut items = Vec::new();
                loop {
                    if *self.lx.peek()? == Tok::RBrace {
                        self.lx.next()?;
                        break;
                    }
                    items.push(self.value(elem, false)?);
                    let (t, o) = self.lx.next()?;
                    match t {
                        Tok::Comma => {}
                        Tok::RBrace => break,
                        other => {
                            return Err(self.lx.err(format!("expected `,` or `}}`, found {}", other.describe()), o))
                        }
                    }
                }
                Ok(Value::List(items))
            }
            Type::Option(inner) => match self.lx.peek()? {
                Tok::Ident(s) if s == "none" => {
                    self.lx.next()?;
                    Ok(Value::none())
                }
                Tok::Ident(s) if s == "some" => {
                    self.lx.next()?;
                    self.lx.expect(Tok::LParen)?;
                    let v = self.value(inner, false)?;
                    self.lx.expect(Tok::RParen)?;
                    Ok(Value::some(v))
                }
                _ => Ok(Value::some(self.value(inner, top)?)),
            },
            Type::Never => Err(self.lx.err("no value has type `Never`", off)),
        }
    }

    fn ty(&mut self) -> Result<Type, DecodeError> {
        let (t, off) = self.lx.next()?;
        let Tok::Ident(name) = t else {
            return Err(self.lx.err(format!("expected a type, found {}", t.describe()), off));
        };
        if let Some(p) = Type::from_primitive_name(&name) {
            return Ok(p);
        }
        if name == "Never" {
            return Ok(Type::Never);
        }
        if name == "List" || name == "Option" {
            self.lx.expect(Tok::Lt)?;
            let inner = self.ty()?;
            self.lx.expect(Tok::Gt)?;
            return Ok(if name == "List" {
                Type::list(inner)
            } else {
                Type::option(inner)
            });
        }
        Ok(Type::Named(name))
    }

    fn primitive(&mut self, ty: &Type) -> Result<Value, DecodeError> {
        let (t, off) = self.lx.next()?;
        let v = match (ty, &t) {
            (Type::Int, Tok::Num { text, suffix }) if *suffix != Some('d') && !text.contains('.') => {
                let n: i128 = text.parse().map_err(|_| self.lx.err("malformed Int", off))?;
                Value::Int(crate::value::int_in_range(n).ok_or_else(|| self.lx.err("Int out of range", off))?)
            }
            (Type::Decimal, Tok::Num { text, suffix }) if *suffix != Some('i') => Value::Decimal(
                text.parse::<Decimal>()
                    .map_err(|e| self.lx.err(e.to_string(), off))?,
            ),
            (Type::Bool, Tok::Ident(s)) if s == "true" || s == "false" => Value::Bool(s == "true"),
            (Type::CString, Tok::CStr(s)) => {
                if !printable_ascii(s) {
                    return Err(self.lx.err("CString must be printable ASCII", off));
                }
                Value::CString(s.clone())
            }
            (Type::String, Tok::Str(s) | Tok::CStr(s)) => Value::String(s.clone()),
            (Type::None, Tok::Ident(s)) if s == "none" => Value::Unit,
            _ => return Err(self.mismatch(ty, &t, off)),
        };
        Ok(v)
    }

    fn entity(&mut self, name: &str, top: bool) -> Result<Value, DecodeError> {
        let decl = self.tm.entity(name).expect("caller checked").clone();
        let start = self.lx.offset()?;
        if let Tok::Ident(s) = self.lx.peek()? {
            if s == name {
                self.lx.next()?;
            } else {
                let found = s.clone();
                return Err(self.lx.err(format!("expected `{name}`, found `{found}`"), start));
            }
        } else if top && *self.lx.peek()? != Tok::LBrace {
            let t = self.lx.peek()?.clone();
            return Err(self.mismatch(&Type::Named(name.into()), &t, start));
        }
        self.lx.expect(Tok::LBrace)?;
        let named = matches!(self.lx.peek()?, Tok::Ident(s) if decl.field(s).is_some());
        let mut given: Vec<(String, Value)> = Vec::new();
        loop {
            if *self.lx.peek()? == Tok::RBrace {
                self.lx.next()?;
                break;
            }
            let foff = self.lx.offset()?;
            if named {
                let (t, o) = self.lx.next()?;
                let Tok::Ident(f) = t else {
                    return Err(self.lx.err(format!("expected a field name, found {}", t.describe()), o));
                };
                let Some(fd) = decl.field(&f) else {
                    return Err(self.lx.err(format!("`{name}` has no field `{f}`"), o));
                };
                if given.iter().any(|(g, _)| *g == f) {
                    return Err(self.lx.err(format!("field `{f}` given twice"), o));
                }
                let fty = fd.ty.clone();
                self.lx.expect(Tok::Eq)?;
                let v = self.value(&fty, false)?;
                given.push((f, v));
            } else {
                let Some(fd) = decl.fields.get(given.len()) else {
                    return Err(DecodeError::FieldCount {
                        entity: name.into(),
                        expected: decl.fields.len(),
                        found: given.len() + 1,
                        offset: foff,
                    });
                };
                let (fname, fty) = (fd.name.clone(), fd.ty.clone());
                let v = self.value(&fty, false)?;
                given.push((fname, v));
            }
            let (t, o) = self.lx.next()?;
            match t {
                Tok::Comma => {}
                Tok::RBrace => break,
                other => return Err(self.lx.err(format!("expected `,` or `}}`, found {}", other.describe()), o)),
            }
        }
        if given.len() != decl.fields.len() {
            if named {
                let missing = decl
                    .fields
                    .iter()
                    .find(|f| !given.iter().any(|(g, _)| *g == f.name))
                    .map(|f| f.name.clone())
                    .unwrap_or_default();
                return Err(self.lx.err(format!("`{name}` is missing field `{missing}`"), start));
            }
            return Err(DecodeError::FieldCount {
                entity: name.into(),
                expected: decl.fields.len(),
                found: given.len(),
                offset: start,
            });
        }
        let ordered = decl
            .fields
            .iter()
            .map(|f| {
                let i = given.iter().position(|(g, _)| *g == f.name).unwrap();
                (f.name.clone(), given[i].1.clone())
            })
            .collect();
        construct_entity(self.tm, name, ordered).map_err(|f| match f.kind {
            FaultKind::Invariant => DecodeError::Invariant {
                entity: name.into(),
                clause: f.clause.unwrap_or(f.message),
                offset: start,
            },
            _ => DecodeError::Syntax {
                message: f.message,
                offset: start,
            },
        })
    }
}
