//! Linear-time regular expressions for alias constraints.
//!
//! Patterns compile to a DFA up front; matching is one table lookup per input
//! character, so no pattern can trigger backtracking blowup. Matching is
//! always whole-string.

mod automaton;
mod parse;

use std::fmt;
use std::fmt::Write;

pub use automaton::Dfa;
pub use parse::Node;

pub const DEFAULT_STATE_CAP: usize = 10_000;

pub const PRINTABLE_ASCII: &[(u32, u32)] = &[(0x20, 0x7E)];
pub const UNICODE: &[(u32, u32)] = &[(0, 0xD7FF), (0xE000, parse::MAX_CHAR)];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegexError {
    #[error("unsupported regex construct: {construct} (at offset {offset})")]
    Unsupported { construct: String, offset: usize },
    #[error("malformed regex: {message} (at offset {offset})")]
    Malformed { message: String, offset: usize },
    #[error("regex automaton exceeds {cap} states")]
    TooManyStates { cap: usize },
}

#[derive(Debug, Clone)]
pub struct SafeRegex {
    pattern: String,
    cstring: bool,
    node: Node,
    dfa: Dfa,
}

impl PartialEq for SafeRegex {
    fn eq(&self, other: &Self) -> bool {
        self.pattern == other.pattern && self.cstring == other.cstring
    }
}

impl SafeRegex {
    /// Compiles `pattern`. `cstring` selects the printable-ASCII alphabet
    /// (the `/c` flag).
    pub fn compile(pattern: &str, cstring: bool) -> Result<SafeRegex, RegexError> {
        Self::compile_with_cap(pattern, cstring, DEFAULT_STATE_CAP)
    }

    pub fn compile_with_cap(pattern: &str, cstring: bool, cap: usize) -> Result<SafeRegex, RegexError> {
        let alphabet = if cstring { PRINTABLE_ASCII } else { UNICODE };
        let node = parse::Parser::new(pattern, alphabet).parse()?;
        let dfa = Dfa::build(&node, alphabet, cap)?;
        Ok(SafeRegex {
            pattern: pattern.to_string(),
            cstring,
            node,
            dfa,
        })
    }

    /// Builds a regex directly from a syntax tree.
    pub fn from_node(pattern: String, node: Node, cstring: bool) -> Result<SafeRegex, RegexError> {
        let alphabet = if cstring { PRINTABLE_ASCII } else { UNICODE };
        let dfa = Dfa::build(&node, alphabet, DEFAULT_STATE_CAP)?;
        Ok(SafeRegex {
            pattern,
            cstring,
            node,
            dfa,
        })
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    pub fn is_cstring(&self) -> bool {
        self.cstring
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn state_count(&self) -> usize {
        self.dfa.states.len()
    }

    pub fn matches(&self, input: &str) -> bool {
        self.dfa.accepts(input)
    }

    /// Shortest string matched by both regexes.
    pub fn overlap(&self, other: &SafeRegex) -> Option<String> {
        self.dfa.intersection_witness(&other.dfa)
    }

    /// SMT-LIB regular expression term for the pattern.
    pub fn to_smt(&self) -> String {
        let mut out = String::new();
        smt_node(&self.node, &mut out);
        out
    }
}

impl fmt::Display for SafeRegex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "/{}/{}", self.pattern, if self.cstring { "c" } else { "" })
    }
}

/// SMT-LIB string literal for a single code point.
pub fn smt_char(c: u32) -> String {
    match char::from_u32(c) {
        Some(ch) if (0x20..0x7f).contains(&c) && ch != '"' && ch != '\\' => format!("\"{ch}\""),
        _ => format!("\"\\u{{{c:x}}}\""),
    }
}

fn smt_node(n: &Node, out: &mut String) {
    match n {
        Node::Empty => out.push_str("(str.to_re \"\")"),
        Node::Class(rs) => {
            if rs.is_empty() {
                out.push_str("re.none");
                return;
            }
            let parts: Vec<String> = rs
                .iter()
                .map(|&(lo, hi)| {
                    if lo == hi {
                        format!("(str.to_re {})", smt_char(lo))
                    } else {
                        format!("(re.range {} {})", smt_char(lo), smt_char(hi))
                    }
                })
                .collect();
            if parts.len() == 1 {
                out.push_str(&parts[0]);
            } else {
                let _ = write!(out, "(re.union {})", parts.join(" "));
            }
        }
        Node::Concat(items) => {
            out.push_str("(re.++");
            for i in items {
                out.push(' ');
                smt_node(i, out);
            }
            out.push(')');
        }
        Node::Alt(items) => {
            out.push_str("(re.union");
            for i in items {
                out.push(' ');
                smt_node(i, out);
            }
            out.push(')');
        }
        Node::Star(i) => {
            out.push_str("(re.* ");
            smt_node(i, out);
            out.push(')');
        }
        Node::Plus(i) => {
            out.push_str("(re.+ ");
            smt_node(i, out);
            out.push(')');
        }
        Node::Opt(i) => {
            out.push_str("(re.opt ");
            smt_node(i, out);
            out.push(')');
        }
        Node::Repeat { node, min, max } => match max {
            Some(max) => {
                let _ = write!(out, "((_ re.loop {min} {max}) ");
                smt_node(node, out);
                out.push(')');
            }
            None => {
                let _ = write!(out, "(re.++ ((_ re.^ {min}) ");
                smt_node(node, out);
                out.push_str(") (re.* ");
                smt_node(node, out);
                out.push_str("))");
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::{Duration, Instant};

    #[test]
    fn zipcode() {
        let re = SafeRegex::compile("[0-9]{5}('-'[0-9]{4})?", true).unwrap();
        assert!(re.matches("40506"));
        assert!(re.matches("40506-1234"));
        assert!(!re.matches("4050"));
        assert!(!re.matches("40506-12"));
        assert!(!re.matches(""));
    }

    #[test]
    fn order_id_with_trailing_dollar() {
        let re = SafeRegex::compile("[A-Z][0-9]+$", false).unwrap();
        assert!(re.matches("A53"));
        assert!(!re.matches("53A"));
    }

    #[test]
    fn rejects_backtracking_constructs() {
        let err = SafeRegex::compile("(a)\\1", false).unwrap_err();
        assert!(matches!(&err, RegexError::Unsupported { construct, .. } if construct == "backreference"));
        assert!(matches!(
            SafeRegex::compile("a(?=b)", false),
            Err(RegexError::Unsupported { .. })
        ));
        assert!(matches!(
            SafeRegex::compile("a*?", false),
            Err(RegexError::Unsupported { .. })
        ));
    }

    #[test]
    fn malformed_patterns() {
        for p in ["(a", "a)", "*a", "[a", "a{3,1}", "a{2"] {
            assert!(
                matches!(SafeRegex::compile(p, false), Err(RegexError::Malformed { .. })),
                "{p}"
            );
        }
    }

    #[test]
    fn empty_input_follows_automaton() {
        assert!(SafeRegex::compile("a*", false).unwrap().matches(""));
        assert!(!SafeRegex::compile("a+", false).unwrap().matches(""));
        assert!(SafeRegex::compile("", false).unwrap().matches(""));
    }

    #[test]
    fn cstring_alphabet() {
        let re = SafeRegex::compile(".*", true).unwrap();
        assert!(re.matches("hello world"));
        assert!(!re.matches("caf\u{e9}"));
        assert!(!re.matches("tab\there"));
        assert!(SafeRegex::compile(".*", false).unwrap().matches("caf\u{e9}"));
    }

    #[test]
    fn negated_class() {
        let re = SafeRegex::compile("[^/]*", true).unwrap();
        assert!(re.matches("abc"));
        assert!(!re.matches("a/b"));
    }

    #[test]
    fn state_cap_enforced() {
        let err = SafeRegex::compile_with_cap("(a|b)*a(a|b){12}", false, 100).unwrap_err();
        assert_eq!(err, RegexError::TooManyStates { cap: 100 });
    }

    #[test]
    fn linear_on_pathological_pattern() {
        let re = SafeRegex::compile("(a|a)*b", false).unwrap();
        let input = "a".repeat(10_000);
        let t = Instant::now();
        assert!(!re.matches(&input));
        assert!(t.elapsed() < Duration::from_millis(100));
    }

    #[test]
    fn overlap_witness() {
        let a = SafeRegex::compile("x[0-9]+", false).unwrap();
        let b = SafeRegex::compile("[a-z]5.*", false).unwrap();
        assert_eq!(a.overlap(&b).as_deref(), Some("x5"));
        let c = SafeRegex::compile("y.*", false).unwrap();
        assert_eq!(a.overlap(&c), None);
    }

    #[test]
    fn smt_rendering() {
        let re = SafeRegex::compile("[0-9]{5}('-'[0-9]{4})?", true).unwrap();
        assert_eq!(
            re.to_smt(),
            "(re.++ ((_ re.loop 5 5) (re.range \"0\" \"9\")) (re.opt (re.++ (str.to_re \"-\") ((_ re.loop 4 4) (re.range \"0\" \"9\")))))"
        );
    }
}
