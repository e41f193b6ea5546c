//! One solver process per query, SMT-LIB 2 over stdio.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use crate::SundewError;

pub const DEFAULT_SOLVER: &str = "z3";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);
/// Extra wall-clock time granted past the solver's own timeout before the
/// process is killed.
const KILL_GRACE: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    pub command: String,
    pub args: Vec<String>,
    pub timeout: Duration,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            command: DEFAULT_SOLVER.into(),
            args: vec!["-in".into(), "-smt2".into()],
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

impl SolverConfig {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            ..Self::default()
        }
    }

    pub fn with_timeout(mut self, t: Duration) -> Self {
        self.timeout = t;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Answer {
    /// Values of the requested terms, in request order.
    Sat(Vec<Sexp>),
    Unsat,
    Unknown(String),
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    Str(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn as_int(&self) -> Option<i128> {
        match self {
            Sexp::Atom(a) => a.parse().ok(),
            Sexp::List(items) => match items.as_slice() {
                [Sexp::Atom(m), x] if m == "-" => x.as_int().map(|v| -v),
                _ => None,
            },
            Sexp::Str(_) => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Sexp::Atom(a) if a == "true" => Some(true),
            Sexp::Atom(a) if a == "false" => Some(false),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Sexp::Str(s) => Some(s),
            _ => None,
        }
    }
}

/// Reads every s-expression in `text`. String literals are unescaped using
/// SMT-LIB 2.6 rules (`""` and `\u{..}`).
pub fn parse_sexps(text: &str) -> Result<Vec<Sexp>, String> {
    let cs: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    let mut stack: Vec<Vec<Sexp>> = Vec::new();
    let push = |stack: &mut Vec<Vec<Sexp>>, out: &mut Vec<Sexp>, s: Sexp| match stack.last_mut() {
        Some(top) => top.push(s),
        None => out.push(s),
    };
    while i < cs.len() {
        let c = cs[i];
        match c {
            c if c.is_whitespace() => i += 1,
            ';' => {
                while i < cs.len() && cs[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                stack.push(Vec::new());
                i += 1;
            }
            ')' => {
                let items = stack.pop().ok_or("unbalanced `)`")?;
                push(&mut stack, &mut out, Sexp::List(items));
                i += 1;
            }
            '"' => {
                i += 1;
                let mut s = String::new();
                loop {
                    let Some(&c) = cs.get(i) else {
                        return Err("unterminated string".into());
                    };
                    i += 1;
                    if c == '"' {
                        if cs.get(i) == Some(&'"') {
                            s.push('"');
                            i += 1;
                            continue;
                        }
                        break;
                    }
                    if c == '\\' && cs.get(i) == Some(&'u') {
                        if let Some((ch, used)) = unicode_escape(&cs[i + 1..]) {
                            s.push(ch);
                            i += 1 + used;
                            continue;
                        }
                    }
                    s.push(c);
                }
                push(&mut stack, &mut out, Sexp::Str(s));
            }
            '|' => {
                let start = i + 1;
                i = start;
                while i < cs.len() && cs[i] != '|' {
                    i += 1;
                }
                let name: String = cs[start..i].iter().collect();
                i += 1;
                push(&mut stack, &mut out, Sexp::Atom(format!("|{name}|")));
            }
            _ => {
                let start = i;
                while i < cs.len() && !cs[i].is_whitespace() && !matches!(cs[i], '(' | ')' | '"') {
                    i += 1;
                }
                push(&mut stack, &mut out, Sexp::Atom(cs[start..i].iter().collect()));
            }
        }
    }
    if !stack.is_empty() {
        return Err("unbalanced `(`".into());
    }
    Ok(out)
}

/// `{hex}` or 4 hex digits after `\u`; returns the char and chars consumed.
fn unicode_escape(cs: &[char]) -> Option<(char, usize)> {
    if cs.first() == Some(&'{') {
        let end = cs.iter().position(|c| *c == '}')?;
        let hex: String = cs[1..end].iter().collect();
        let v = u32::from_str_radix(&hex, 16).ok()?;
        return char::from_u32(v).map(|c| (c, end + 1));
    }
    if cs.len() >= 4 && cs[..4].iter().all(char::is_ascii_hexdigit) {
        let hex: String = cs[..4].iter().collect();
        let v = u32::from_str_radix(&hex, 16).ok()?;
        return char::from_u32(v).map(|c| (c, 4));
    }
    None
}

impl SolverConfig {
    /// Runs `script` (which must end in `(check-sat)`) and, when satisfiable,
    /// fetches the values of `terms`.
    pub fn check(&self, script: &str, terms: &[String]) -> Result<Answer, SundewError> {
        if self.timeout.is_zero() {
            return Ok(Answer::Timeout);
        }
        let mut text = format!("(set-option :timeout {})\n", self.timeout.as_millis());
        text.push_str(script);
        text.push_str("(get-info :reason-unknown)\n");
        if !terms.is_empty() {
            text.push_str("(get-value (");
            text.push_str(&terms.join(" "));
            text.push_str("))\n");
        }
        text.push_str("(exit)\n");

        let mut child = Command::new(&self.command)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => SundewError::SolverNotFound(self.command.clone()),
                _ => SundewError::Solver(format!("cannot start `{}`: {e}", self.command)),
            })?;
        let mut stdin = child.stdin.take().expect("stdin is piped");
        let mut stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut out = String::new();
            let r = stdout.read_to_string(&mut out).map(|_| out);
            let _ = tx.send(r);
        });
        stdin
            .write_all(text.as_bytes())
            .map_err(|e| SundewError::Solver(format!("write to solver failed: {e}")))?;
        drop(stdin);
        let out = match rx.recv_timeout(self.timeout + KILL_GRACE) {
            Ok(r) => r.map_err(|e| SundewError::Solver(e.to_string()))?,
            Err(_) => {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(Answer::Timeout);
            }
        };
        let _ = child.wait();
        interpret(&out, terms.len())
    }
}

fn interpret(out: &str, n_terms: usize) -> Result<Answer, SundewError> {
    let sexps = parse_sexps(out).map_err(|e| SundewError::Protocol(format!("{e} in solver output: {out}")))?;
    let mut it = sexps.iter();
    let status = loop {
        match it.next() {
            Some(Sexp::Atom(a)) => break a.as_str(),
            Some(Sexp::List(items)) if is_error(items) => {
                return Err(SundewError::Protocol(format!("solver reported: {}", error_text(items))));
            }
            Some(_) => continue,
            None => return Err(SundewError::Protocol(format!("no check-sat answer in: {out}"))),
        }
    };
    let rest: Vec<&Sexp> = it.collect();
    let reason = rest.iter().find_map(|s| match s {
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(k), v] if k == ":reason-unknown" => Some(match v {
                Sexp::Str(s) | Sexp::Atom(s) => s.clone(),
                Sexp::List(_) => String::new(),
            }),
            _ => None,
        },
        _ => None,
    });
    match status {
        "unsat" => Ok(Answer::Unsat),
        "unknown" => {
            let r = reason.unwrap_or_default();
            if r.contains("timeout") || r.contains("canceled") {
                Ok(Answer::Timeout)
            } else {
                Ok(Answer::Unknown(if r.is_empty() { "unknown".into() } else { r }))
            }
        }
        "sat" => {
            if n_terms == 0 {
                return Ok(Answer::Sat(Vec::new()));
            }
            let values = rest
                .iter()
                .find_map(|s| match s {
                    Sexp::List(pairs) if pairs.len() == n_terms && pairs.iter().all(is_pair) => Some(pairs),
                    _ => None,
                })
                .ok_or_else(|| SundewError::Protocol(format!("missing model values in: {out}")))?;
            Ok(Answer::Sat(
                values
                    .iter()
                    .map(|p| match p {
                        Sexp::List(kv) => kv[1].clone(),
                        _ => unreachable!("checked by is_pair"),
                    })
                    .collect(),
            ))
        }
        other => Err(SundewError::Protocol(format!("unexpected solver answer `{other}`"))),
    }
}

fn is_pair(s: &Sexp) -> bool {
    matches!(s, Sexp::List(kv) if kv.len() == 2)
}

fn is_error(items: &[Sexp]) -> bool {
    matches!(items.first(), Some(Sexp::Atom(a)) if a == "error")
}

fn error_text(items: &[Sexp]) -> String {
    match items.get(1) {
        Some(Sexp::Str(s)) => s.clone(),
        _ => "error".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_model_values() {
        let s = parse_sexps("sat\n((x (- 5)) (|p.s| \"a\"\"b\\u{e9}\") (b true))").unwrap();
        assert_eq!(s[0], Sexp::Atom("sat".into()));
        let Sexp::List(pairs) = &s[1] else { panic!() };
        let vals: Vec<&Sexp> = pairs
            .iter()
            .map(|p| match p {
                Sexp::List(kv) => &kv[1],
                _ => panic!(),
            })
            .collect();
        assert_eq!(vals[0].as_int(), Some(-5));
        assert_eq!(vals[1].as_str(), Some("a\"bé"));
        assert_eq!(vals[2].as_bool(), Some(true));
    }

    #[test]
    fn interprets_answers() {
        assert_eq!(interpret("unsat\n(error \"model is not available\")", 1).unwrap(), Answer::Unsat);
        assert_eq!(interpret("unknown\n(:reason-unknown \"timeout\")", 0).unwrap(), Answer::Timeout);
        assert_eq!(
            interpret("sat\n(:reason-unknown \"\")\n((x 3))", 1).unwrap(),
            Answer::Sat(vec![Sexp::Atom("3".into())])
        );
        assert!(matches!(interpret("(error \"line 1: bad\")", 0), Err(SundewError::Protocol(_))));
    }

    #[test]
    fn zero_timeout_never_spawns() {
        let s = SolverConfig::new("/nonexistent/solver").with_timeout(Duration::ZERO);
        assert_eq!(s.check("(check-sat)\n", &[]).unwrap(), Answer::Timeout);
    }

    #[test]
    fn missing_solver_is_reported() {
        let s = SolverConfig::new("/nonexistent/solver");
        assert!(matches!(s.check("(check-sat)\n", &[]), Err(SundewError::SolverNotFound(_))));
    }
}
