//! Big-step interpreter.
//!
//! Contracts run in the order requires, body, invariants, ensures. Every
//! failure is a [`Fault`] carrying the clause text and span.

mod fault;
mod holes;
mod interp;

use std::collections::BTreeMap;
use std::sync::Arc;

pub use fault::{Fault, FaultKind};
pub use holes::{HoleRequest, HoleResolver, HoleStore, HOLE_ARGS_ENTITY, HOLE_EXAMPLE_ENTITY};

use crate::agent::AgentRegistry;
use crate::sandbox::{GlobTemplate, SandboxPolicy};
use crate::syntax::ast::{ApiDecl, Type};
use crate::types::{TypedModule, TASK_ABORTED, TASK_COMPLETED};
use crate::value::Value;

/// Names visible through `env.NAME`, fixed at invocation.
pub type EnvRecord = BTreeMap<String, Value>;

/// Reads `name`, faulting when the caller did not supply it.
pub fn env_read<'e>(env: &'e EnvRecord, name: &str) -> Result<&'e Value, Fault> {
    env.get(name)
        .ok_or_else(|| Fault::new(FaultKind::EnvMissing, format!("environment has no binding for `{name}`")))
}

/// Append-only sequence of entity values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    entries: Vec<Value>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[Value] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// System hook; user code has no way to reach this.
    pub fn append(&mut self, event: Value) {
        self.entries.push(event);
    }

    /// True iff some entry is a `entity` whose named fields all equal `fields`.
    pub fn contains(&self, entity: &str, fields: &[(String, Value)]) -> bool {
        self.entries.iter().any(|e| match e {
            Value::Entity { name, .. } if name == entity => {
                fields.iter().all(|(f, v)| e.field(f) == Some(v))
            }
            _ => false,
        })
    }
}

/// A call that reached an api body or host.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiCallRecord {
    pub api: String,
    pub args: Vec<(String, Value)>,
    pub policy: Vec<String>,
}

/// What an externally bound api sees.
pub struct HostCall<'a> {
    pub api: &'a ApiDecl,
    pub args: &'a [(String, Value)],
    pub env: &'a EnvRecord,
    pub sandbox: &'a SandboxPolicy,
}

impl HostCall<'_> {
    /// Checks `uri` against the installed policy.
    pub fn access(&self, uri: &str) -> Result<(), Fault> {
        self.sandbox.check(uri).map_err(|d| {
            Fault::new(FaultKind::PermissionDenied, d.to_string()).in_decl(&self.api.name)
        })
    }

    pub fn arg(&self, name: &str) -> Option<&Value> {
        self.args.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

/// Implementation of an api declared without a body.
pub trait ApiHost: Send + Sync {
    fn call(&self, call: &HostCall<'_>) -> Result<Value, Fault>;
}

impl<F> ApiHost for F
where
    F: Fn(&HostCall<'_>) -> Result<Value, Fault> + Send + Sync,
{
    fn call(&self, call: &HostCall<'_>) -> Result<Value, Fault> {
        self(call)
    }
}

/// Accepts calls to `None`-returning apis and does nothing else.
pub struct NullHost;

impl ApiHost for NullHost {
    fn call(&self, call: &HostCall<'_>) -> Result<Value, Fault> {
        if call.api.ret == Type::None {
            Ok(Value::Unit)
        } else {
            Err(Fault::new(
                FaultKind::Unbound,
                format!("api `{}` has no implementation bound", call.api.name),
            ))
        }
    }
}

pub struct Runtime<'m> {
    pub(crate) module: &'m TypedModule,
    pub events: EventLog,
    pub holes: HoleStore,
    pub calls: Vec<ApiCallRecord>,
    resolver: Option<Box<dyn HoleResolver + 'm>>,
    hosts: BTreeMap<String, Arc<dyn ApiHost>>,
    default_host: Option<Arc<dyn ApiHost>>,
    agents: AgentRegistry,
}

impl<'m> Runtime<'m> {
    pub fn new(module: &'m TypedModule) -> Self {
        Self {
            module,
            events: EventLog::new(),
            holes: HoleStore::default(),
            calls: Vec::new(),
            resolver: None,
            hosts: BTreeMap::new(),
            default_host: None,
            agents: AgentRegistry::default(),
        }
    }

    pub fn module(&self) -> &'m TypedModule {
        self.module
    }

    pub fn with_events(mut self, events: EventLog) -> Self {
        self.events = events;
        self
    }

    pub fn with_holes(mut self, holes: HoleStore) -> Self {
        self.holes = holes;
        self
    }

    pub fn with_resolver(mut self, r: impl HoleResolver + 'm) -> Self {
        self.resolver = Some(Box::new(r));
        self
    }

    pub fn with_agents(mut self, agents: AgentRegistry) -> Self {
        self.agents = agents;
        self
    }

    pub fn bind_api(mut self, name: &str, host: Arc<dyn ApiHost>) -> Self {
        self.hosts.insert(name.to_string(), host);
        self
    }

    /// Host used for bodiless apis with no specific binding.
    pub fn with_default_host(mut self, host: Arc<dyn ApiHost>) -> Self {
        self.default_host = Some(host);
        self
    }

    /// Calls a function or action. Actions read `env`; functions ignore it.
    pub fn call(&mut self, name: &str, env: &EnvRecord, args: Vec<Value>) -> Result<Value, Fault> {
        let f = self
            .module
            .function(name)
            .ok_or_else(|| Fault::new(FaultKind::Unbound, format!("no function or action named `{name}`")))?;
        self.check_args(name, &f.params.iter().map(|p| p.ty.clone()).collect::<Vec<_>>(), &args)?;
        let mut env = env.clone();
        env.retain(|k, _| f.env.iter().any(|e| &e.name == k));
        for e in &f.env {
            let v = env_read(&env, &e.name).map_err(|f| f.in_decl(name))?;
            conforms(self.module, v, &e.ty)
                .map_err(|m| Fault::new(FaultKind::EnvMissing, format!("env `{}`: {m}", e.name)).in_decl(name))?;
        }
        interp::call_function(self, f, env, args)
    }

    pub fn call_function(&mut self, name: &str, args: Vec<Value>) -> Result<Value, Fault> {
        self.call(name, &EnvRecord::new(), args)
    }

    /// Runs `api` with `env` and positional `args`.
    pub fn invoke_api(&mut self, name: &str, env: &EnvRecord, args: Vec<Value>) -> Result<Value, Fault> {
        let api = self
            .module
            .api(name)
            .ok_or_else(|| Fault::new(FaultKind::Unbound, format!("no api named `{name}`")))?;
        interp::invoke_api(self, api, env, args)
    }

    /// Runs a chktest body on concrete inputs.
    pub fn run_chktest(&mut self, name: &str, args: Vec<Value>) -> Result<(), Fault> {
        let t = self
            .module
            .chktest(name)
            .ok_or_else(|| Fault::new(FaultKind::Unbound, format!("no chktest named `{name}`")))?;
        self.check_args(name, &t.params.iter().map(|p| p.ty.clone()).collect::<Vec<_>>(), &args)?;
        interp::run_chktest(self, t, args)
    }

    /// Runs an api, action or function as a top-level task and records the
    /// outcome in the event log.
    pub fn run_task(&mut self, name: &str, env: &EnvRecord, args: Vec<Value>) -> Result<Value, Fault> {
        let r = if self.module.api(name).is_some() {
            self.invoke_api(name, env, args)
        } else {
            self.call(name, env, args)
        };
        let task = Value::CString(name.to_string());
        let event = match &r {
            Ok(_) => Value::Entity {
                name: TASK_COMPLETED.into(),
                fields: vec![("task".into(), task)],
            },
            Err(f) => Value::Entity {
                name: TASK_ABORTED.into(),
                fields: vec![
                    ("task".into(), task),
                    ("code".into(), Value::CString(f.kind.code().into())),
                    ("reason".into(), Value::String(f.message.clone())),
                ],
            },
        };
        self.events.append(event);
        r
    }

    fn check_args(&self, owner: &str, params: &[Type], args: &[Value]) -> Result<(), Fault> {
        if params.len() != args.len() {
            return Err(Fault::new(
                FaultKind::Type,
                format!("`{owner}` takes {} argument(s), given {}", params.len(), args.len()),
            ));
        }
        for (i, (t, v)) in params.iter().zip(args).enumerate() {
            conforms(self.module, v, t)
                .map_err(|m| Fault::new(FaultKind::Type, format!("argument {}: {m}", i + 1)).in_decl(owner))?;
        }
        Ok(())
    }

    pub(crate) fn host_for(&self, api: &str) -> Option<Arc<dyn ApiHost>> {
        self.hosts.get(api).cloned().or_else(|| self.default_host.clone())
    }

    pub(crate) fn agents(&self) -> &AgentRegistry {
        &self.agents
    }

    pub(crate) fn resolver(&mut self) -> Option<&mut (dyn HoleResolver + 'm)> {
        self.resolver.as_deref_mut()
    }
}

/// Builds the sandbox policy of `api` for concrete arguments.
pub fn api_policy(api: &ApiDecl, args: &[(String, Value)]) -> Result<SandboxPolicy, Fault> {
    let mut policy = SandboxPolicy::default();
    for p in &api.permissions {
        let g = GlobTemplate::parse(&p.text)
            .and_then(|t| t.interpolate(args))
            .map_err(|e| Fault::new(FaultKind::PermissionDenied, e.to_string()).in_decl(&api.name).at(p.span))?;
        policy.allow(g);
    }
    Ok(policy)
}

/// Wraps `inner` in alias `name`, checking its base type and pattern.
pub fn make_alias(tm: &TypedModule, name: &str, inner: Value) -> Result<Value, Fault> {
    let decl = tm
        .alias(name)
        .ok_or_else(|| Fault::new(FaultKind::Type, format!("unknown alias `{name}`")))?;
    conforms(tm, &inner, &decl.base).map_err(|m| Fault::new(FaultKind::Type, m))?;
    if let Some(re) = tm.alias_regex(name) {
        let text = inner.leaf_text().unwrap_or_default();
        if !re.matches(&text) {
            let shown = if decl.sensitive {
                "value".to_string()
            } else {
                format!("'{text}'")
            };
            return Err(Fault::new(
                FaultKind::Constraint,
                format!("{shown} does not match the `{name}` pattern {re}"),
            ));
        }
    }
    Ok(Value::alias(name, inner, decl.sensitive))
}

/// Builds an entity from fields in declaration order, checking invariants.
pub fn construct_entity(tm: &TypedModule, name: &str, fields: Vec<(String, Value)>) -> Result<Value, Fault> {
    let mut rt = Runtime::new(tm);
    interp::construct(&mut rt, name, fields)
}

/// Checks that `v` is a well-formed value of type `ty`. Entity invariants
/// are not re-evaluated; entities only come from [`construct_entity`].
pub fn conforms(tm: &TypedModule, v: &Value, ty: &Type) -> Result<(), String> {
    let bad = || Err(format!("expected a `{ty}` value"));
    match (ty, v) {
        (Type::Int, Value::Int(i)) if *i != i64::MIN => Ok(()),
        (Type::Decimal, Value::Decimal(_)) | (Type::Bool, Value::Bool(_)) | (Type::None, Value::Unit) => Ok(()),
        (Type::CString, Value::CString(s)) => {
            if s.chars().all(|c| (' '..='~').contains(&c)) {
                Ok(())
            } else {
                Err("CString must be printable ASCII".into())
            }
        }
        (Type::String, Value::String(_)) => Ok(()),
        (Type::List(t), Value::List(items)) => items.iter().try_for_each(|i| conforms(tm, i, t)),
        (Type::Option(_), Value::Option(None)) => Ok(()),
        (Type::Option(t), Value::Option(Some(i))) => conforms(tm, i, t),
        (Type::Named(n), Value::Alias { name, inner, .. }) if n == name => {
            let a = tm.alias(n).ok_or_else(|| format!("unknown alias `{n}`"))?;
            conforms(tm, inner, &a.base)?;
            match tm.alias_regex(n) {
                Some(re) if !re.matches(&inner.leaf_text().unwrap_or_default()) => {
                    Err(format!("value does not match the `{n}` pattern {re}"))
                }
                _ => Ok(()),
            }
        }
        (Type::Named(n), Value::Entity { name, fields }) if n == name => {
            let e = tm.entity(n).ok_or_else(|| format!("unknown entity `{n}`"))?;
            if e.fields.len() != fields.len() || e.fields.iter().zip(fields).any(|(d, (f, _))| d.name != *f) {
                return Err(format!("`{n}` fields do not match the declaration"));
            }
            e.fields
                .iter()
                .zip(fields)
                .try_for_each(|(d, (_, fv))| conforms(tm, fv, &d.ty))
        }
        _ => bad(),
    }
}

#[cfg(test)]
mod tests;
