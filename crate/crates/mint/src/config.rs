//! Server configuration, itself a BAPI value of type `MintConfig`.

use std::path::{Path, PathBuf};

use aisette_core::ast::Type;
use aisette_core::bapi::{self, WireForm};
use aisette_core::types::{check_source, TypedModule};
use aisette_core::Value;

use crate::MintError;

/// Declarations every config file is decoded against.
pub const CONFIG_SCHEMA: &str = r#"
sensitive type Secret = String;

entity Route {
  field glob: CString;
  field task: Option<CString>;
  field file: Option<String>;
  field visibility: CString;
  field ceiling: Option<CString>;
}

entity EnvBinding {
  field name: CString;
  field value: String;
}

entity MintConfig {
  field listen: CString;
  field module: Option<String>;
  field routes: List<Route>;
  field bindings: List<EnvBinding>;
  field logging: Bool;
  field auth: Bool;
  field secret: Option<Secret>;
  field solver: Option<String>;
  field agents: Option<String>;
  field examples: Option<String>;
  field faultLog: Option<String>;
}
"#;

pub fn schema() -> TypedModule {
    check_source(CONFIG_SCHEMA).expect("config schema typechecks")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visibility {
    Public,
    Private,
}

impl Visibility {
    pub fn as_str(self) -> &'static str {
        match self {
            Visibility::Public => "public",
            Visibility::Private => "private",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RouteTarget {
    Task(String),
    File(PathBuf),
}

/// Highest sensitivity a route may carry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ceiling {
    /// No sensitive alias may cross the route.
    NoneSensitive,
    /// Only aliases tagged with this level (`sensitive` for untagged ones).
    Level(String),
    Any,
}

impl Ceiling {
    pub fn parse(s: &str) -> Ceiling {
        match s {
            "none" | "none-sensitive" => Ceiling::NoneSensitive,
            "any" => Ceiling::Any,
            other => Ceiling::Level(other.to_string()),
        }
    }

    pub fn allows(&self, tag: &str) -> bool {
        match self {
            Ceiling::NoneSensitive => false,
            Ceiling::Level(l) => l == tag,
            Ceiling::Any => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteConfig {
    pub glob: String,
    pub target: RouteTarget,
    pub visibility: Visibility,
    pub ceiling: Ceiling,
}

impl RouteConfig {
    pub fn task(glob: &str, task: &str, visibility: Visibility) -> Self {
        Self {
            glob: glob.into(),
            target: RouteTarget::Task(task.into()),
            visibility,
            ceiling: Ceiling::Any,
        }
    }

    pub fn with_ceiling(mut self, c: Ceiling) -> Self {
        self.ceiling = c;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MintConfig {
    pub listen: String,
    pub module: Option<PathBuf>,
    pub routes: Vec<RouteConfig>,
    /// Env names and their values as BAPI verbose text, decoded against the
    /// type each task declares.
    pub env: Vec<(String, String)>,
    pub logging: bool,
    pub auth: bool,
    pub secret: Option<String>,
    pub solver: Option<String>,
    pub agents: Option<PathBuf>,
    pub examples: Option<PathBuf>,
    pub fault_log: Option<PathBuf>,
}

impl Default for MintConfig {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:8080".into(),
            module: None,
            routes: Vec::new(),
            env: Vec::new(),
            logging: true,
            auth: false,
            secret: None,
            solver: None,
            agents: None,
            examples: None,
            fault_log: None,
        }
    }
}

fn text(v: &Value) -> Option<String> {
    match v.base() {
        Value::CString(s) | Value::String(s) => Some(s.clone()),
        Value::Alias { inner, .. } => text(inner),
        _ => None,
    }
}

fn opt_text(v: Option<&Value>) -> Option<String> {
    match v? {
        Value::Option(Some(x)) => text(x),
        _ => None,
    }
}

fn req_text(v: &Value, field: &str) -> Result<String, MintError> {
    v.field(field)
        .and_then(text)
        .ok_or_else(|| MintError::Config(format!("field `{field}` is missing")))
}

fn list<'v>(v: &'v Value, field: &str) -> &'v [Value] {
    match v.field(field) {
        Some(Value::List(items)) => items,
        _ => &[],
    }
}

impl MintConfig {
    /// Parses config text, JSON when it starts with `{`, BAPI otherwise.
    /// Relative paths resolve against `base`.
    pub fn parse(src: &str, base: Option<&Path>) -> Result<MintConfig, MintError> {
        let schema = schema();
        let ty = Type::Named("MintConfig".into());
        let trimmed = src.trim_start();
        let form = if trimmed.starts_with('{') { WireForm::Json } else { WireForm::Verbose };
        let v = bapi::decode(&schema, trimmed, &ty, form).map_err(|e| MintError::Config(e.to_string()))?;
        Self::from_value(&v, base)
    }

    pub fn from_value(v: &Value, base: Option<&Path>) -> Result<MintConfig, MintError> {
        let path = |p: String| match base {
            Some(b) if Path::new(&p).is_relative() => b.join(p),
            _ => PathBuf::from(p),
        };
        let mut routes = Vec::new();
        for r in list(v, "routes") {
            let glob = req_text(r, "glob")?;
            let target = match (opt_text(r.field("task")), opt_text(r.field("file"))) {
                (Some(t), None) => RouteTarget::Task(t),
                (None, Some(f)) => RouteTarget::File(path(f)),
                _ => {
                    return Err(MintError::Config(format!(
                        "route `{glob}` needs exactly one of `task` or `file`"
                    )))
                }
            };
            let visibility = match req_text(r, "visibility")?.as_str() {
                "public" => Visibility::Public,
                "private" => Visibility::Private,
                other => {
                    return Err(MintError::Config(format!(
                        "route `{glob}` visibility must be `public` or `private`, not `{other}`"
                    )))
                }
            };
            let ceiling = opt_text(r.field("ceiling")).map(|c| Ceiling::parse(&c)).unwrap_or(Ceiling::Any);
            routes.push(RouteConfig {
                glob,
                target,
                visibility,
                ceiling,
            });
        }
        let mut env = Vec::new();
        for b in list(v, "bindings") {
            env.push((req_text(b, "name")?, req_text(b, "value")?));
        }
        let flag = |f: &str| v.field(f).and_then(Value::as_bool).unwrap_or(false);
        Ok(MintConfig {
            listen: req_text(v, "listen")?,
            module: opt_text(v.field("module")).map(path),
            routes,
            env,
            logging: flag("logging"),
            auth: flag("auth"),
            secret: opt_text(v.field("secret")),
            solver: opt_text(v.field("solver")),
            agents: opt_text(v.field("agents")).map(path),
            examples: opt_text(v.field("examples")).map(path),
            fault_log: opt_text(v.field("faultLog")).map(path),
        })
    }
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<MintConfig, MintError> {
    let src = std::fs::read_to_string(path).map_err(|e| MintError::Io(format!("{}: {e}", path.display())))?;
    MintConfig::parse(&src, path.parent())
}

#[cfg(test)]
mod tests {
    use super::*;

    const VERBOSE: &str = r#"MintConfig{
  listen = '127.0.0.1:0',
  module = some("payments.bsq"),
  routes = List<Route>{
    Route{ glob = '/pay/transfer', task = some('transfer'), file = none, visibility = 'private', ceiling = none },
    Route{ glob = '/docs/**', task = none, file = some("/srv/docs"), visibility = 'public', ceiling = some('none') }
  },
  bindings = List<EnvBinding>{ EnvBinding{ name = 'PAYMENT_LIMIT', value = "100.00<USD>" } },
  logging = true,
  auth = true,
  secret = some("k3y"<Secret>),
  solver = none,
  agents = none,
  examples = none,
  faultLog = none
}"#;

    #[test]
    fn verbose_config_loads() {
        let c = MintConfig::parse(VERBOSE, Some(Path::new("/etc/mint"))).unwrap();
        assert_eq!(c.module, Some(PathBuf::from("/etc/mint/payments.bsq")));
        assert_eq!(c.routes.len(), 2);
        assert_eq!(c.routes[0].target, RouteTarget::Task("transfer".into()));
        assert_eq!(c.routes[0].visibility, Visibility::Private);
        assert_eq!(c.routes[1].ceiling, Ceiling::NoneSensitive);
        assert_eq!(c.env, vec![("PAYMENT_LIMIT".to_string(), "100.00<USD>".to_string())]);
        assert_eq!(c.secret.as_deref(), Some("k3y"));
    }

    #[test]
    fn json_config_loads() {
        let j = r#"{"listen":"0.0.0.0:9000","module":null,"routes":[],"bindings":[],"logging":false,
            "auth":false,"secret":null,"solver":"z3","agents":null,"examples":null,"faultLog":null}"#;
        let c = MintConfig::parse(j, None).unwrap();
        assert_eq!(c.listen, "0.0.0.0:9000");
        assert_eq!(c.solver.as_deref(), Some("z3"));
        assert!(c.routes.is_empty());
    }

    #[test]
    fn bad_visibility_is_rejected() {
        let bad = VERBOSE.replace("visibility = 'private'", "visibility = 'secret'");
        assert!(matches!(MintConfig::parse(&bad, None), Err(MintError::Config(_))));
    }
}
