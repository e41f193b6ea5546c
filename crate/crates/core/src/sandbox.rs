//! URI glob allowlists.
//!
//! `*` matches within one path segment, `**` matches across segments, and
//! everything else (scheme included) is literal and case-sensitive.

use std::fmt;

use crate::regex::SafeRegex;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GlobError {
    #[error("empty glob")]
    Empty,
    #[error("glob `{0}` has no URI scheme")]
    NoScheme(String),
    #[error("route glob `{0}` must start with `/`")]
    NotAPath(String),
    #[error("glob `{glob}` contains whitespace at offset {offset}")]
    Whitespace { glob: String, offset: usize },
    #[error("glob `{glob}` has a run of more than two `*` at offset {offset}")]
    Stars { glob: String, offset: usize },
    #[error("glob `{glob}` has an unterminated `${{` slot at offset {offset}")]
    Slot { glob: String, offset: usize },
    #[error("cannot fill `${{{slot}}}`: {reason}")]
    Interpolation { slot: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Lit(String),
    /// `*`
    Segment,
    /// `**`
    Any,
    /// `${path}`, only present in templates.
    Slot(String),
}

#[derive(Debug, Clone)]
pub struct Glob {
    text: String,
    pieces: Vec<Piece>,
    re: SafeRegex,
}

impl PartialEq for Glob {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl fmt::Display for Glob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

fn split(text: &str, slots: bool) -> Result<Vec<Piece>, GlobError> {
    if text.is_empty() {
        return Err(GlobError::Empty);
    }
    let mut pieces = Vec::new();
    let mut lit = String::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (off, c) = chars[i];
        if c.is_whitespace() {
            return Err(GlobError::Whitespace {
                glob: text.into(),
                offset: off,
            });
        }
        if c == '*' {
            let mut n = 0;
            while i < chars.len() && chars[i].1 == '*' {
                n += 1;
                i += 1;
            }
            if n > 2 {
                return Err(GlobError::Stars {
                    glob: text.into(),
                    offset: off,
                });
            }
            if !lit.is_empty() {
                pieces.push(Piece::Lit(std::mem::take(&mut lit)));
            }
            pieces.push(if n == 1 { Piece::Segment } else { Piece::Any });
            continue;
        }
        if slots && c == '$' && chars.get(i + 1).map(|p| p.1) == Some('{') {
            let rest = &text[off + 2..];
            let Some(end) = rest.find('}') else {
                return Err(GlobError::Slot {
                    glob: text.into(),
                    offset: off,
                });
            };
            if !lit.is_empty() {
                pieces.push(Piece::Lit(std::mem::take(&mut lit)));
            }
            let path = &rest[..end];
            pieces.push(Piece::Slot(path.to_string()));
            let stop = off + 2 + end + 1;
            while i < chars.len() && chars[i].0 < stop {
                i += 1;
            }
            continue;
        }
        lit.push(c);
        i += 1;
    }
    if !lit.is_empty() {
        pieces.push(Piece::Lit(lit));
    }
    Ok(pieces)
}

fn require_scheme(text: &str, pieces: &[Piece]) -> Result<(), GlobError> {
    match pieces.first() {
        Some(Piece::Lit(l)) if scheme_of(l).is_some() => Ok(()),
        _ => Err(GlobError::NoScheme(text.into())),
    }
}

fn scheme_of(s: &str) -> Option<&str> {
    let (scheme, _) = s.split_once(':')?;
    let mut cs = scheme.chars();
    let first = cs.next()?;
    (first.is_ascii_alphabetic() && cs.all(|c| c.is_ascii_alphanumeric() || "+-.".contains(c))).then_some(scheme)
}

fn render(pieces: &[Piece]) -> String {
    let mut out = String::new();
    for p in pieces {
        match p {
            Piece::Lit(l) => out.push_str(l),
            Piece::Segment => out.push('*'),
            Piece::Any => out.push_str("**"),
            Piece::Slot(s) => {
                out.push_str("${");
                out.push_str(s);
                out.push('}');
            }
        }
    }
    out
}

fn compile(pieces: &[Piece]) -> SafeRegex {
    let mut pat = String::new();
    for p in pieces {
        match p {
            Piece::Lit(l) => {
                for c in l.chars() {
                    if !c.is_ascii_alphanumeric() {
                        pat.push('\\');
                    }
                    pat.push(c);
                }
            }
            Piece::Segment => pat.push_str("[^/]*"),
            Piece::Any => pat.push_str(".*"),
            Piece::Slot(_) => unreachable!("slots are filled before compiling"),
        }
    }
    SafeRegex::compile(&pat, false).expect("escaped glob is a valid regex")
}

impl Glob {
    pub fn parse(text: &str) -> Result<Glob, GlobError> {
        let pieces = split(text, false)?;
        require_scheme(text, &pieces)?;
        Ok(Glob {
            text: text.to_string(),
            re: compile(&pieces),
            pieces,
        })
    }

    /// A glob over HTTP request paths, such as `/pay/*`.
    pub fn parse_path(text: &str) -> Result<Glob, GlobError> {
        let pieces = split(text, false)?;
        if !text.starts_with('/') {
            return Err(GlobError::NotAPath(text.into()));
        }
        Ok(Glob {
            text: text.to_string(),
            re: compile(&pieces),
            pieces,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn matches(&self, uri: &str) -> bool {
        self.re.matches(uri)
    }

    /// Length of the literal text before the first wildcard.
    pub fn literal_prefix_len(&self) -> usize {
        match self.pieces.first() {
            Some(Piece::Lit(l)) => l.chars().count(),
            _ => 0,
        }
    }

    /// A URI accepted by both globs, if any.
    pub fn overlap(&self, other: &Glob) -> Option<String> {
        self.re.overlap(&other.re)
    }
}

/// A permission glob with `${param.field}` slots.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobTemplate {
    text: String,
    pieces: Vec<Piece>,
}

impl GlobTemplate {
    pub fn parse(text: &str) -> Result<GlobTemplate, GlobError> {
        let pieces = split(text, true)?;
        require_scheme(text, &pieces)?;
        Ok(GlobTemplate {
            text: text.to_string(),
            pieces,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// Slot paths in order of appearance.
    pub fn slots(&self) -> Vec<&str> {
        self.pieces
            .iter()
            .filter_map(|p| match p {
                Piece::Slot(s) => Some(s.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Fills every slot from named argument values. Filled text is always
    /// literal, so an argument containing `*` cannot widen the glob.
    pub fn interpolate(&self, args: &[(String, Value)]) -> Result<Glob, GlobError> {
        let mut pieces: Vec<Piece> = Vec::new();
        for p in &self.pieces {
            let piece = match p {
                Piece::Slot(path) => Piece::Lit(lookup(path, args)?),
                other => other.clone(),
            };
            match (pieces.last_mut(), piece) {
                (Some(Piece::Lit(prev)), Piece::Lit(next)) => prev.push_str(&next),
                (_, piece) => pieces.push(piece),
            }
        }
        Ok(Glob {
            text: render(&pieces),
            re: compile(&pieces),
            pieces,
        })
    }
}

fn lookup(path: &str, args: &[(String, Value)]) -> Result<String, GlobError> {
    let fail = |reason: &str| GlobError::Interpolation {
        slot: path.to_string(),
        reason: reason.to_string(),
    };
    let mut parts = path.split('.');
    let head = parts.next().unwrap_or_default();
    let mut v = args
        .iter()
        .find(|(n, _)| n == head)
        .map(|(_, v)| v)
        .ok_or_else(|| fail("no such parameter"))?;
    for f in parts {
        v = v.base().field(f).ok_or_else(|| fail("no such field"))?;
    }
    let text = v.leaf_text().ok_or_else(|| fail("not a primitive value"))?;
    if text.contains('/') {
        return Err(fail("value contains a path separator"));
    }
    Ok(text)
}

/// Outcome of a denied access.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Denial {
    pub uri: String,
    /// The allowlist that was consulted, for the fault record.
    pub allowed: Vec<String>,
}

impl fmt::Display for Denial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.allowed.is_empty() {
            write!(f, "access to `{}` denied: the policy allows nothing", self.uri)
        } else {
            write!(
                f,
                "access to `{}` denied: matched none of [{}]",
                self.uri,
                self.allowed.join(", ")
            )
        }
    }
}

/// Deny-by-default allowlist.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SandboxPolicy {
    allowed: Vec<Glob>,
}

impl SandboxPolicy {
    pub fn new(allowed: Vec<Glob>) -> Self {
        Self { allowed }
    }

    pub fn allowed(&self) -> &[Glob] {
        &self.allowed
    }

    pub fn allow(&mut self, g: Glob) {
        self.allowed.push(g);
    }

    pub fn check(&self, uri: &str) -> Result<(), Denial> {
        let valid = scheme_of(uri).is_some() && !uri.chars().any(char::is_whitespace);
        if valid && self.allowed.iter().any(|g| g.matches(uri)) {
            return Ok(());
        }
        Err(Denial {
            uri: uri.to_string(),
            allowed: self.allowed.iter().map(|g| g.text.clone()).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy(gs: &[&str]) -> SandboxPolicy {
        SandboxPolicy::new(gs.iter().map(|g| Glob::parse(g).unwrap()).collect())
    }

    #[test]
    fn double_star_spans_segments() {
        let p = policy(&["file:///tmp/app_name/**"]);
        assert!(p.check("file:///tmp/app_name/x/y").is_ok());
        assert!(p.check("file:///home/user/data").is_err());
        assert!(p.check("file:///tmp/app_name_other/x").is_err());
    }

    #[test]
    fn single_star_stays_in_segment() {
        let p = policy(&["db://orders/*"]);
        assert!(p.check("db://orders/17").is_ok());
        assert!(p.check("db://orders/17/items").is_err());
    }

    #[test]
    fn scheme_and_case_are_literal() {
        let p = policy(&["account:111/222"]);
        assert!(p.check("account:111/222").is_ok());
        assert!(p.check("account:111/333").is_err());
        assert!(p.check("Account:111/222").is_err());
    }

    #[test]
    fn empty_policy_denies() {
        let d = SandboxPolicy::default().check("file:///tmp/x").unwrap_err();
        assert!(d.to_string().contains("allows nothing"));
    }

    #[test]
    fn interpolation_is_literal() {
        let t = GlobTemplate::parse("account:${payer.routing}/${payer.account}").unwrap();
        assert_eq!(t.slots(), vec!["payer.routing", "payer.account"]);
        let payer = Value::Entity {
            name: "Account".into(),
            fields: vec![
                ("routing".into(), Value::CString("111".into())),
                ("account".into(), Value::CString("2*".into())),
            ],
        };
        let g = t.interpolate(&[("payer".into(), payer)]).unwrap();
        assert!(g.matches("account:111/2*"));
        assert!(!g.matches("account:111/22"));
    }

    #[test]
    fn syntax_errors() {
        assert_eq!(Glob::parse(""), Err(GlobError::Empty));
        assert!(matches!(Glob::parse("/tmp/x"), Err(GlobError::NoScheme(_))));
        assert!(matches!(Glob::parse("file:///a b"), Err(GlobError::Whitespace { .. })));
        assert!(matches!(Glob::parse("file:///***"), Err(GlobError::Stars { .. })));
        assert!(matches!(
            GlobTemplate::parse("account:${payer"),
            Err(GlobError::Slot { .. })
        ));
    }
}
