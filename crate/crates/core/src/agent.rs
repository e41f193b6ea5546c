//! Agent bindings and typed output shaping.
//!
//! A binding sees only the [`EnvRecord`] the caller built. Its raw text reply
//! is decoded against the call's shape type.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::Arc;

use crate::bapi::{self, encode_json};
use crate::eval::{env_read, make_alias, EnvRecord, Fault, FaultKind};
use crate::regex::{RegexError, SafeRegex};
use crate::syntax::ast::Type;
use crate::syntax::printer::quote;
use crate::types::TypedModule;
use crate::value::Value;

/// One invocation as a binding sees it.
pub struct AgentRequest<'a> {
    pub agent: &'a str,
    pub env: &'a EnvRecord,
    pub input: &'a str,
    pub prompt: &'a str,
    pub shape: &'a Type,
}

impl AgentRequest<'_> {
    pub fn env(&self, name: &str) -> Result<&Value, Fault> {
        env_read(self.env, name)
    }

    /// The request as one JSON object `{env, input, prompt, shape}`.
    pub fn to_json(&self) -> String {
        let mut env = String::from("{");
        for (i, (k, v)) in self.env.iter().enumerate() {
            if i > 0 {
                env.push(',');
            }
            env.push_str(&serde_json::to_string(k).expect("strings serialize"));
            env.push(':');
            env.push_str(&encode_json(v));
        }
        env.push('}');
        format!(
            "{{\"agent\":{},\"env\":{env},\"input\":{},\"prompt\":{},\"shape\":{}}}",
            serde_json::to_string(self.agent).expect("strings serialize"),
            serde_json::to_string(self.input).expect("strings serialize"),
            serde_json::to_string(self.prompt).expect("strings serialize"),
            serde_json::to_string(&self.shape.to_string()).expect("strings serialize"),
        )
    }
}

pub trait AgentBinding: Send + Sync {
    /// Raw reply text, or `None` when the binding has no answer.
    fn invoke(&self, req: &AgentRequest<'_>) -> Result<Option<String>, Fault>;

    /// Names the binding requires in its env record.
    fn env_clause(&self) -> &[String] {
        &[]
    }
}

impl<F> AgentBinding for F
where
    F: Fn(&AgentRequest<'_>) -> Result<Option<String>, Fault> + Send + Sync,
{
    fn invoke(&self, req: &AgentRequest<'_>) -> Result<Option<String>, Fault> {
        self(req)
    }
}

#[derive(Clone, Default)]
pub struct AgentRegistry {
    bindings: BTreeMap<String, Arc<dyn AgentBinding>>,
}

impl AgentRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: impl Into<String>, b: Arc<dyn AgentBinding>) {
        self.bindings.insert(name.into(), b);
    }

    pub fn with(mut self, name: impl Into<String>, b: Arc<dyn AgentBinding>) -> Self {
        self.register(name, b);
        self
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn AgentBinding>> {
        self.bindings.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.bindings.keys().map(String::as_str)
    }
}

impl fmt::Debug for AgentRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.bindings.keys()).finish()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TableError {
    #[error("line {line}: expected `input TAB prompt TAB response`")]
    Shape { line: usize },
    #[error("line {line}: {source}")]
    Regex { line: usize, source: RegexError },
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone)]
struct Rule {
    input: SafeRegex,
    prompt: SafeRegex,
    response: String,
}

/// Deterministic stub: ordered `(input, prompt) -> response` rules.
#[derive(Debug, Clone, Default)]
pub struct ScriptedTable {
    rules: Vec<Rule>,
}

impl ScriptedTable {
    /// One rule per line, `input TAB prompt TAB response`. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<ScriptedTable, TableError> {
        let mut rules = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let (Some(inp), Some(prm), Some(resp)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(TableError::Shape { line: line_no });
            };
            let re = |p: &str| SafeRegex::compile(p, false).map_err(|source| TableError::Regex { line: line_no, source });
            rules.push(Rule {
                input: re(inp)?,
                prompt: re(prm)?,
                response: resp.to_string(),
            });
        }
        Ok(ScriptedTable { rules })
    }

    pub fn load(path: &Path) -> Result<ScriptedTable, TableError> {
        let text = std::fs::read_to_string(path).map_err(|e| TableError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn push(&mut self, input: SafeRegex, prompt: SafeRegex, response: impl Into<String>) {
        self.rules.push(Rule {
            input,
            prompt,
            response: response.into(),
        });
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn lookup(&self, input: &str, prompt: &str) -> Option<&str> {
        self.rules
            .iter()
            .find(|r| r.input.matches(input) && r.prompt.matches(prompt))
            .map(|r| r.response.as_str())
    }
}

impl AgentBinding for ScriptedTable {
    fn invoke(&self, req: &AgentRequest<'_>) -> Result<Option<String>, Fault> {
        Ok(self.lookup(req.input, req.prompt).map(str::to_string))
    }
}

/// Runs a program per call: request JSON on stdin, reply text on stdout.
/// The child starts with an empty process environment.
#[derive(Debug, Clone)]
pub struct ChildProcess {
    pub program: String,
    pub args: Vec<String>,
    pub env: Vec<String>,
}

impl ChildProcess {
    pub fn new(program: impl Into<String>) -> Self {
        Self {
            program: program.into(),
            args: Vec::new(),
            env: Vec::new(),
        }
    }
}

impl AgentBinding for ChildProcess {
    fn invoke(&self, req: &AgentRequest<'_>) -> Result<Option<String>, Fault> {
        let transport = |m: String| Fault::new(FaultKind::Transport, format!("agent `{}`: {m}", req.agent));
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .env_clear()
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| transport(format!("cannot start `{}`: {e}", self.program)))?;
        if let Some(mut stdin) = child.stdin.take() {
            stdin
                .write_all(req.to_json().as_bytes())
                .map_err(|e| transport(format!("write failed: {e}")))?;
        }
        let out = child.wait_with_output().map_err(|e| transport(e.to_string()))?;
        if !out.status.success() {
            return Err(transport(format!("exited with {}", out.status)));
        }
        let text = String::from_utf8(out.stdout).map_err(|_| transport("reply is not UTF-8".into()))?;
        let text = text.trim_end_matches(['\n', '\r']).to_string();
        Ok(if text.is_empty() { None } else { Some(text) })
    }

    fn env_clause(&self) -> &[String] {
        &self.env
    }
}

/// POSTs the request JSON to `url`; the response body is the reply.
#[derive(Debug, Clone)]
pub struct HttpAgent {
    pub url: String,
    pub env: Vec<String>,
}

impl AgentBinding for HttpAgent {
    fn invoke(&self, req: &AgentRequest<'_>) -> Result<Option<String>, Fault> {
        let transport = |m: String| Fault::new(FaultKind::Transport, format!("agent `{}`: {m}", req.agent));
        let mut resp = ureq::post(&self.url)
            .header("content-type", "application/json")
            .send(req.to_json())
            .map_err(|e| transport(e.to_string()))?;
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| transport(e.to_string()))?;
        Ok(if text.trim().is_empty() { None } else { Some(text) })
    }

    fn env_clause(&self) -> &[String] {
        &self.env
    }
}

/// Invokes `binding` and shapes its reply. Option shapes turn a miss or an
/// undecodable reply into `none`.
pub fn invoke_agent(
    tm: &TypedModule,
    binding: &dyn AgentBinding,
    agent: &str,
    env: &EnvRecord,
    input: &str,
    prompt: &str,
    shape: &Type,
) -> Result<Value, Fault> {
    for name in binding.env_clause() {
        env_read(env, name)?;
    }
    let req = AgentRequest {
        agent,
        env,
        input,
        prompt,
        shape,
    };
    let reply = binding.invoke(&req)?;
    match shape {
        Type::Option(inner) => Ok(reply
            .and_then(|t| shape_text(tm, &t, inner).ok())
            .map(Value::some)
            .unwrap_or_else(Value::none)),
        _ => {
            let text = reply
                .ok_or_else(|| Fault::new(FaultKind::Shape, format!("agent `{agent}` gave no answer")))?;
            shape_text(tm, &text, shape).map_err(|m| {
                Fault::new(FaultKind::Shape, format!("agent `{agent}` reply does not decode as `{shape}`: {m}"))
            })
        }
    }
}

/// Decodes reply text against `shape`, accepting unframed text for
/// primitive and alias shapes.
pub fn shape_text(tm: &TypedModule, text: &str, shape: &Type) -> Result<Value, String> {
    let t = text.trim();
    let framed = bapi::decode_text(tm, t, shape).map_err(|e| e.to_string());
    if framed.is_ok() {
        return framed;
    }
    if t.starts_with(['{', '[']) {
        if let Ok(v) = bapi::decode_json(tm, t, shape) {
            return Ok(v);
        }
    }
    let base = tm.base_type(shape);
    if base.is_string() {
        let q = if base == Type::CString { '\'' } else { '"' };
        let leaf = match bapi::decode_text(tm, &quote(t, q), &base) {
            Ok(v) => v,
            Err(_) => return framed,
        };
        return match shape {
            Type::Named(n) if tm.alias(n).is_some() => make_alias(tm, n, leaf).map_err(|f| f.message),
            _ => Ok(leaf),
        };
    }
    framed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::check_source;

    const SRC: &str = r#"
type USD = Decimal;
type Name = CString of /[A-Z][a-z]+/;
"#;

    fn tm() -> TypedModule {
        check_source(SRC).expect("module checks")
    }

    fn usd(s: &str) -> Value {
        Value::alias("USD", Value::Decimal(s.parse().unwrap()), false)
    }

    fn table() -> ScriptedTable {
        ScriptedTable::parse(".*\\$45\\.50.*\tWhat is half of the bill\\?\t22.75\n").unwrap()
    }

    fn ask(b: &dyn AgentBinding, input: &str, shape: &Type) -> Result<Value, Fault> {
        invoke_agent(&tm(), b, "Chat::compute", &EnvRecord::new(), input, "What is half of the bill?", shape)
    }

    #[test]
    fn scripted_hit_shapes_to_some() {
        let t = table();
        let v = ask(&t, "Dinner was $45.50 for two", &Type::option(Type::Named("USD".into()))).unwrap();
        assert_eq!(v, Value::some(usd("22.75")));
    }

    #[test]
    fn scripted_miss_is_none_for_option_shape() {
        let t = table();
        let v = ask(&t, "no amount here", &Type::option(Type::Named("USD".into()))).unwrap();
        assert_eq!(v, Value::none());
        assert!(t.lookup("no amount here", "What is half of the bill?").is_none());
    }

    #[test]
    fn miss_faults_for_plain_shape() {
        let f = ask(&table(), "nothing", &Type::Named("USD".into())).unwrap_err();
        assert_eq!(f.kind, FaultKind::Shape);
    }

    #[test]
    fn undecodable_reply_is_none_or_shape_fault() {
        let b = |_: &AgentRequest<'_>| Ok(Some("around twenty".to_string()));
        let opt = ask(&b, "x", &Type::option(Type::Named("USD".into()))).unwrap();
        assert_eq!(opt, Value::none());
        let f = ask(&b, "x", &Type::Named("USD".into())).unwrap_err();
        assert_eq!(f.kind, FaultKind::Shape);
    }

    #[test]
    fn first_rule_wins() {
        let t = ScriptedTable::parse("a.*\t.*\tfirst\na.*\t.*\tsecond\n").unwrap();
        assert_eq!(t.lookup("abc", ""), Some("first"));
    }

    #[test]
    fn unframed_strings_shape_through_alias() {
        let b = |_: &AgentRequest<'_>| Ok(Some("Tom\n".to_string()));
        let v = ask(&b, "", &Type::Named("Name".into())).unwrap();
        assert_eq!(v, Value::alias("Name", Value::CString("Tom".into()), false));
        let bad = |_: &AgentRequest<'_>| Ok(Some("tom".to_string()));
        assert_eq!(ask(&bad, "", &Type::Named("Name".into())).unwrap_err().kind, FaultKind::Shape);
    }

    #[test]
    fn probe_binding_sees_no_names_through_empty_env() {
        let probe = |req: &AgentRequest<'_>| {
            for name in ["PAYMENT_AUTHORIZATION", "HOME", "PATH", "USER"] {
                if req.env(name).is_ok() {
                    return Ok(Some(format!("leaked {name}")));
                }
            }
            Err(req.env("PAYMENT_AUTHORIZATION").unwrap_err())
        };
        let f = ask(&probe, "", &Type::option(Type::Named("USD".into()))).unwrap_err();
        assert_eq!(f.kind, FaultKind::EnvMissing);
    }

    #[test]
    fn binding_env_clause_is_checked() {
        let c = ChildProcess {
            program: "/bin/cat".into(),
            args: vec![],
            env: vec!["TOKEN".into()],
        };
        let f = ask(&c, "", &Type::String).unwrap_err();
        assert_eq!(f.kind, FaultKind::EnvMissing);
    }

    #[test]
    fn child_process_gets_request_and_no_ambient_env() {
        let c = ChildProcess {
            program: "/bin/sh".into(),
            args: vec!["-c".into(), "cat >/dev/null; printf '%s' \"${HOME:-unset}\"".into()],
            env: vec![],
        };
        let v = ask(&c, "", &Type::String).unwrap();
        assert_eq!(v, Value::String("unset".into()));
    }

    #[test]
    fn bad_table_line_is_reported() {
        assert_eq!(ScriptedTable::parse("only one column").unwrap_err(), TableError::Shape { line: 1 });
    }
}
