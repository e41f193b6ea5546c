//! Shared state, request dispatch and the axum router.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::{Body, Bytes};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use serde::Serialize;

use aisette_core::agent::{AgentRegistry, ScriptedTable};
use aisette_core::ast::Type;
use aisette_core::bapi::{self, args_entity_name, synthetic_entity, WireForm, MEDIA_JSON};
use aisette_core::eval::{ApiHost, EnvRecord, EventLog, Fault, FaultKind, HoleStore, NullHost, Runtime};
use aisette_core::sandbox::Glob;
use aisette_core::types::TypedModule;
use aisette_core::{Severity, Value};

use crate::auth::{self, Caller};
use crate::config::{MintConfig, RouteTarget, Visibility};
use crate::index::{self, Endpoint, Searcher, TokenOverlap};
use crate::lint::{lint_sensitive_exposure, LintFinding};
use crate::MintError;

/// Redacted record of an aborted task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FaultRecord {
    pub request: String,
    pub task: String,
    pub kind: String,
    pub status: u16,
    pub clause: Option<String>,
    pub span: Option<String>,
    pub owner: Option<String>,
    pub message: String,
    /// Arguments in redacted form.
    pub args: String,
}

/// Mitigations run when a task aborts. Errors are logged, never raised.
pub trait AbortHook: Send + Sync {
    fn rollback(&self, _record: &FaultRecord) -> Result<(), String> {
        Ok(())
    }

    fn dump(&self, _record: &FaultRecord) -> Result<(), String> {
        Ok(())
    }
}

pub struct NoopHook;

impl AbortHook for NoopHook {}

struct Route {
    glob: Glob,
    target: RouteTarget,
    visibility: Visibility,
    endpoint: Option<usize>,
}

struct Shared {
    tm: TypedModule,
    /// `tm` plus the argument record of every routed task.
    wire: TypedModule,
    docs: TypedModule,
    config: MintConfig,
    routes: Vec<Route>,
    endpoints: Vec<Endpoint>,
    env: BTreeMap<String, EnvRecord>,
    /// Sensitive leaves of configured env values, masked in every log.
    env_secrets: Vec<String>,
    hosts: Vec<(String, Arc<dyn ApiHost>)>,
    default_host: Arc<dyn ApiHost>,
    agents: AgentRegistry,
    searcher: Box<dyn Searcher>,
    hook: Box<dyn AbortHook>,
    events: Mutex<EventLog>,
    faults: Mutex<Vec<FaultRecord>>,
    log: Mutex<Vec<String>>,
    next_id: AtomicU64,
    lint: Vec<LintFinding>,
    echo_log: bool,
}

pub struct MintBuilder {
    tm: TypedModule,
    config: MintConfig,
    hosts: Vec<(String, Arc<dyn ApiHost>)>,
    default_host: Arc<dyn ApiHost>,
    agents: AgentRegistry,
    searcher: Box<dyn Searcher>,
    hook: Box<dyn AbortHook>,
    events: EventLog,
    allow_lint_warnings: bool,
    echo_log: bool,
}

impl MintBuilder {
    pub fn bind_api(mut self, name: &str, host: Arc<dyn ApiHost>) -> Self {
        self.hosts.push((name.to_string(), host));
        self
    }

    pub fn default_host(mut self, host: Arc<dyn ApiHost>) -> Self {
        self.default_host = host;
        self
    }

    pub fn agents(mut self, agents: AgentRegistry) -> Self {
        self.agents = agents;
        self
    }

    pub fn searcher(mut self, s: impl Searcher + 'static) -> Self {
        self.searcher = Box::new(s);
        self
    }

    pub fn abort_hook(mut self, h: impl AbortHook + 'static) -> Self {
        self.hook = Box::new(h);
        self
    }

    /// Events present before the first request.
    pub fn events(mut self, events: EventLog) -> Self {
        self.events = events;
        self
    }

    pub fn allow_lint_warnings(mut self, allow: bool) -> Self {
        self.allow_lint_warnings = allow;
        self
    }

    /// Also write request log lines to stderr.
    pub fn echo_log(mut self, echo: bool) -> Self {
        self.echo_log = echo;
        self
    }

    pub fn build(self) -> Result<Mint, MintError> {
        let cfg = &self.config;
        if cfg.auth && cfg.secret.is_none() {
            return Err(MintError::Config("auth is enabled but no secret is configured".into()));
        }
        let mut routes: Vec<Route> = Vec::new();
        let mut endpoints: Vec<Endpoint> = Vec::new();
        let mut env = BTreeMap::new();
        let mut env_secrets = Vec::new();
        let mut arg_entities = Vec::new();
        for r in &cfg.routes {
            let glob = Glob::parse_path(&r.glob).map_err(|e| MintError::Config(e.to_string()))?;
            let mut endpoint = None;
            if let RouteTarget::Task(task) = &r.target {
                let ep = Endpoint::from_task(&self.tm, task, &r.glob, r.visibility)
                    .ok_or_else(|| MintError::Config(format!("route `{}` names unknown task `{task}`", r.glob)))?;
                if endpoints.iter().any(|e| e.name == ep.name) {
                    return Err(MintError::Config(format!("task `{task}` is bound to more than one route")));
                }
                let mut rec = EnvRecord::new();
                for (name, ty) in &ep.env {
                    let text = cfg
                        .env
                        .iter()
                        .find(|(n, _)| n == name)
                        .map(|(_, t)| t)
                        .ok_or_else(|| MintError::Config(format!("task `{task}` needs env `{name}`, which the config does not bind")))?;
                    let v = bapi::decode(&self.tm, text, ty, WireForm::Verbose)
                        .map_err(|e| MintError::Config(format!("env `{name}` for task `{task}`: {e}")))?;
                    env_secrets.extend(v.sensitive_leaves());
                    rec.insert(name.clone(), v);
                }
                env.insert(ep.name.clone(), rec);
                arg_entities.push(synthetic_entity(&args_entity_name(&ep.name), &ep.params));
                endpoint = Some(endpoints.len());
                endpoints.push(ep);
            }
            for other in &routes {
                if other.glob.overlap(&glob).is_some()
                    && other.glob.literal_prefix_len() == glob.literal_prefix_len()
                {
                    return Err(MintError::Config(format!(
                        "route globs `{}` and `{}` overlap with equal literal prefixes",
                        other.glob, glob
                    )));
                }
            }
            routes.push(Route {
                glob,
                target: r.target.clone(),
                visibility: r.visibility,
                endpoint,
            });
        }
        let mut agents = self.agents;
        if let Some(path) = &cfg.agents {
            let table = Arc::new(ScriptedTable::load(path).map_err(|e| MintError::Config(e.to_string()))?);
            for a in &self.tm.module.agents {
                if agents.get(&a.name).is_none() {
                    agents.register(a.name.clone(), table.clone());
                }
            }
        }
        let lint = lint_sensitive_exposure(cfg, &self.tm);
        if !self.allow_lint_warnings && lint.iter().any(|f| f.severity == Severity::Error) {
            return Err(MintError::LintBlocked(lint));
        }
        env_secrets.sort_by_key(|s| std::cmp::Reverse(s.len()));
        env_secrets.dedup();
        let wire = self.tm.with_entities(arg_entities);
        Ok(Mint {
            shared: Arc::new(Shared {
                tm: self.tm,
                wire,
                docs: index::schema(),
                config: self.config,
                routes,
                endpoints,
                env,
                env_secrets,
                hosts: self.hosts,
                default_host: self.default_host,
                agents,
                searcher: self.searcher,
                hook: self.hook,
                events: Mutex::new(self.events),
                faults: Mutex::new(Vec::new()),
                log: Mutex::new(Vec::new()),
                next_id: AtomicU64::new(1),
                lint,
                echo_log: self.echo_log,
            }),
        })
    }
}

/// A configured server. Cloning shares state.
#[derive(Clone)]
pub struct Mint {
    shared: Arc<Shared>,
}

impl Mint {
    pub fn builder(tm: TypedModule, config: MintConfig) -> MintBuilder {
        MintBuilder {
            tm,
            config,
            hosts: Vec::new(),
            default_host: Arc::new(NullHost),
            agents: AgentRegistry::new(),
            searcher: Box::new(TokenOverlap),
            hook: Box::new(NoopHook),
            events: EventLog::new(),
            allow_lint_warnings: false,
            echo_log: false,
        }
    }

    pub fn router(&self) -> Router {
        Router::new()
            .route("/actions", get(actions))
            .route("/actions/{endpoint}", get(action_detail))
            .route("/search", get(search))
            .fallback(fallback)
            .with_state(self.shared.clone())
    }

    pub async fn serve(self, listener: tokio::net::TcpListener) -> std::io::Result<()> {
        axum::serve(listener, self.router()).await
    }

    pub fn config(&self) -> &MintConfig {
        &self.shared.config
    }

    pub fn lint(&self) -> &[LintFinding] {
        &self.shared.lint
    }

    pub fn endpoints(&self) -> &[Endpoint] {
        &self.shared.endpoints
    }

    /// Type module the wire forms are decoded against.
    pub fn wire_module(&self) -> &TypedModule {
        &self.shared.wire
    }

    pub fn events(&self) -> EventLog {
        self.shared.events.lock().expect("event log lock").clone()
    }

    pub fn append_event(&self, event: Value) {
        self.shared.events.lock().expect("event log lock").append(event);
    }

    pub fn faults(&self) -> Vec<FaultRecord> {
        self.shared.faults.lock().expect("fault log lock").clone()
    }

    pub fn request_log(&self) -> Vec<String> {
        self.shared.log.lock().expect("request log lock").clone()
    }
}

impl Shared {
    fn caller(&self, headers: &HeaderMap) -> Result<Caller, Response> {
        if !self.config.auth {
            return Ok(Caller::Unchecked);
        }
        let Some(h) = headers.get(header::AUTHORIZATION) else {
            return Ok(Caller::Anonymous);
        };
        let token = h
            .to_str()
            .ok()
            .and_then(|s| s.strip_prefix("Bearer "))
            .ok_or_else(|| error(StatusCode::UNAUTHORIZED, "expected `Authorization: Bearer <token>`"))?;
        let secret = self.config.secret.as_deref().unwrap_or_default();
        auth::verify(secret, token.trim()).map_err(|e| error(StatusCode::UNAUTHORIZED, &e.to_string()))
    }

    fn visible(&self, caller: &Caller) -> Vec<&Endpoint> {
        self.endpoints.iter().filter(|e| can_see(caller, e)).collect()
    }

    fn request_id(&self) -> String {
        format!("req-{}", self.next_id.fetch_add(1, Ordering::Relaxed))
    }

    fn log_line(&self, line: String) {
        if !self.config.logging {
            return;
        }
        if self.echo_log {
            eprintln!("{line}");
        }
        self.log.lock().expect("request log lock").push(line);
    }

    /// Masks every sensitive leaf of `extra` and of the configured env.
    fn scrub(&self, text: &str, extra: &[String]) -> String {
        let mut out = text.to_string();
        let mut all: Vec<&String> = extra.iter().chain(&self.env_secrets).filter(|s| !s.is_empty()).collect();
        all.sort_by_key(|s| std::cmp::Reverse(s.len()));
        for s in all {
            out = out.replace(s.as_str(), &"*".repeat(s.chars().count()));
        }
        out
    }

    fn encode_doc(&self, v: &Value, ty: &str, form: WireForm) -> Response {
        let text = bapi::encode(&self.docs, v, &Type::Named(ty.into()), form);
        typed(StatusCode::OK, form, text)
    }

    /// Runs a task against a snapshot of the event log and appends the
    /// events it produced.
    fn run(&self, ep: &Endpoint, args: Vec<Value>) -> Result<Value, Fault> {
        let snapshot = self.events.lock().expect("event log lock").clone();
        let start = snapshot.len();
        let mut rt = Runtime::new(&self.tm)
            .with_events(snapshot)
            .with_agents(self.agents.clone())
            .with_default_host(self.default_host.clone());
        for (name, host) in &self.hosts {
            rt = rt.bind_api(name, host.clone());
        }
        if let Some(dir) = &self.config.examples {
            rt = rt.with_holes(HoleStore::with_dir(dir));
        }
        let empty = EnvRecord::new();
        let env = self.env.get(&ep.name).unwrap_or(&empty);
        let secrets: Vec<String> = args.iter().flat_map(Value::sensitive_leaves).collect();
        let r = rt.run_task(&ep.name, env, args);
        let fresh: Vec<Value> = rt.events.entries()[start..]
            .iter()
            .map(|e| self.scrub_event(e, &secrets))
            .collect();
        let mut log = self.events.lock().expect("event log lock");
        for e in fresh {
            log.append(e);
        }
        r
    }

    fn scrub_event(&self, e: &Value, secrets: &[String]) -> Value {
        match e {
            Value::Entity { name, fields } => Value::Entity {
                name: name.clone(),
                fields: fields
                    .iter()
                    .map(|(f, v)| match v {
                        Value::String(s) => (f.clone(), Value::String(self.scrub(s, secrets))),
                        _ => (f.clone(), v.clone()),
                    })
                    .collect(),
            },
            other => other.clone(),
        }
    }

    /// Records an aborted task. Never fails; hook errors land in the log.
    fn safe_abort(&self, request: &str, ep: &Endpoint, args: &Value, fault: &Fault, status: StatusCode) -> FaultRecord {
        let secrets = args.sensitive_leaves();
        let record = FaultRecord {
            request: request.to_string(),
            task: ep.name.clone(),
            kind: fault.kind.code().to_string(),
            status: status.as_u16(),
            clause: fault.clause.clone(),
            span: fault.span.map(|s| s.to_string()),
            owner: fault.owner.clone(),
            message: self.scrub(&fault.message, &secrets),
            args: self.scrub(&bapi::redacted_text(&self.wire, args), &secrets),
        };
        for (what, r) in [("rollback", self.hook.rollback(&record)), ("dump", self.hook.dump(&record))] {
            if let Err(e) = r {
                self.log_line(format!("{request} {what} hook failed: {}", self.scrub(&e, &secrets)));
            }
        }
        let json = serde_json::to_string(&record).expect("fault record serializes");
        if let Some(path) = &self.config.fault_log {
            let written = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .and_then(|mut f| writeln!(f, "{json}"));
            if let Err(e) = written {
                self.log_line(format!("{request} fault log write failed: {e}"));
            }
        }
        self.faults.lock().expect("fault log lock").push(record.clone());
        record
    }

    fn route_for(&self, path: &str) -> Option<&Route> {
        self.routes
            .iter()
            .filter(|r| r.glob.matches(path))
            .max_by_key(|r| r.glob.literal_prefix_len())
    }
}

fn can_see(caller: &Caller, e: &Endpoint) -> bool {
    e.visibility == Visibility::Public || caller.holds(&e.permission_uri())
}

fn error(status: StatusCode, message: &str) -> Response {
    let body = serde_json::json!({ "error": message }).to_string();
    (status, [(header::CONTENT_TYPE, HeaderValue::from_static(MEDIA_JSON))], body).into_response()
}

fn typed(status: StatusCode, form: WireForm, text: String) -> Response {
    let media = form.media_type().unwrap_or(MEDIA_JSON);
    (status, [(header::CONTENT_TYPE, HeaderValue::from_static(media))], text).into_response()
}

/// Picks a response form from `Accept`. Missing or wildcard means JSON.
pub fn negotiate(headers: &HeaderMap) -> Option<WireForm> {
    let Some(accept) = headers.get(header::ACCEPT).and_then(|h| h.to_str().ok()) else {
        return Some(WireForm::Json);
    };
    if accept.trim().is_empty() {
        return Some(WireForm::Json);
    }
    let mut offers: Vec<(f32, WireForm)> = Vec::new();
    for part in accept.split(',') {
        let mut bits = part.split(';');
        let media = bits.next().unwrap_or_default().trim().to_ascii_lowercase();
        let q = bits
            .filter_map(|b| b.trim().strip_prefix("q="))
            .find_map(|q| q.trim().parse::<f32>().ok())
            .unwrap_or(1.0);
        if q <= 0.0 {
            continue;
        }
        let form = match media.as_str() {
            "*/*" | "application/*" => Some(WireForm::Json),
            m => WireForm::from_media_type(m),
        };
        if let Some(f) = form {
            offers.push((q, f));
        }
    }
    offers.sort_by(|a, b| b.0.total_cmp(&a.0));
    offers.first().map(|(_, f)| *f)
}

fn content_form(headers: &HeaderMap) -> Result<WireForm, Response> {
    match headers.get(header::CONTENT_TYPE).and_then(|h| h.to_str().ok()) {
        None => Ok(WireForm::Json),
        Some(ct) => WireForm::from_media_type(ct)
            .ok_or_else(|| error(StatusCode::UNSUPPORTED_MEDIA_TYPE, &format!("unsupported content type `{ct}`"))),
    }
}

/// Status for a fault raised by a dispatched task.
pub fn fault_status(kind: FaultKind) -> StatusCode {
    match kind {
        FaultKind::Precondition => StatusCode::PRECONDITION_FAILED,
        FaultKind::PermissionDenied => StatusCode::FORBIDDEN,
        FaultKind::Type => StatusCode::BAD_REQUEST,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

type AppState = State<Arc<Shared>>;

async fn actions(State(s): AppState, headers: HeaderMap) -> Response {
    let caller = match s.caller(&headers) {
        Ok(c) => c,
        Err(r) => return r,
    };
    let Some(form) = negotiate(&headers) else {
        return error(StatusCode::NOT_ACCEPTABLE, "no acceptable response form");
    };
    s.encode_doc(&index::index_value(&s.visible(&caller)), "ActionsIndex", form)
}

async fn action_detail(State(s): AppState, Path(endpoint): Path<String>, headers: HeaderMap) -> Response {
    let caller = match s.caller(&headers) {
        Ok(c) => c,
        Err(r) => return r,
    };
    let visible = s.visible(&caller);
    let Some(ep) = visible.iter().find(|e| e.name == endpoint) else {
        return error(StatusCode::NOT_FOUND, &format!("no endpoint named `{endpoint}`"));
    };
    let Some(form) = negotiate(&headers) else {
        return error(StatusCode::NOT_ACCEPTABLE, "no acceptable response form");
    };
    let related: Vec<&Endpoint> = visible.iter().copied().filter(|e| e.name != ep.name).collect();
    s.encode_doc(&ep.detail(s.config.examples.as_deref(), &related), "ActionDetail", form)
}

#[derive(serde::Deserialize)]
struct SearchParams {
    #[serde(default)]
    q: String,
}

async fn search(State(s): AppState, Query(p): Query<SearchParams>, headers: HeaderMap) -> Response {
    let caller = match s.caller(&headers) {
        Ok(c) => c,
        Err(r) => return r,
    };
    let Some(form) = negotiate(&headers) else {
        return error(StatusCode::NOT_ACCEPTABLE, "no acceptable response form");
    };
    let docs: Vec<(String, Vec<String>)> = s
        .visible(&caller)
        .iter()
        .map(|e| (e.name.clone(), e.search_text()))
        .collect();
    let hits = s.searcher.rank(&p.q, &docs);
    s.encode_doc(&index::search_value(&p.q, &hits), "SearchResults", form)
}

async fn fallback(State(s): AppState, method: Method, uri: Uri, headers: HeaderMap, body: Bytes) -> Response {
    let caller = match s.caller(&headers) {
        Ok(c) => c,
        Err(r) => return r,
    };
    let path = uri.path().to_string();
    let Some(route) = s.route_for(&path) else {
        return error(StatusCode::NOT_FOUND, &format!("no route for `{path}`"));
    };
    match (&route.target, route.endpoint) {
        (RouteTarget::Task(_), Some(i)) => {
            let ep = &s.endpoints[i];
            if !can_see(&caller, ep) {
                return error(StatusCode::NOT_FOUND, &format!("no route for `{path}`"));
            }
            if method != Method::POST {
                return error(StatusCode::METHOD_NOT_ALLOWED, "task routes accept POST only");
            }
            dispatch(s.clone(), i, caller, path, headers, body).await
        }
        (RouteTarget::File(file), _) => {
            let allowed = route.visibility == Visibility::Public || caller.holds(&format!("route:{}", route.glob));
            if !allowed {
                return error(StatusCode::NOT_FOUND, &format!("no route for `{path}`"));
            }
            if method != Method::GET && method != Method::HEAD {
                return error(StatusCode::METHOD_NOT_ALLOWED, "file routes accept GET only");
            }
            serve_file(file, &route.glob, &path, method == Method::HEAD)
        }
        _ => error(StatusCode::NOT_FOUND, &format!("no route for `{path}`")),
    }
}

fn serve_file(target: &std::path::Path, glob: &Glob, path: &str, head: bool) -> Response {
    let file: PathBuf = if target.is_dir() {
        let rest: String = path.chars().skip(glob.literal_prefix_len()).collect();
        let rest = rest.trim_start_matches('/');
        if rest.split('/').any(|seg| seg == ".." || seg == ".") {
            return error(StatusCode::NOT_FOUND, "no such file");
        }
        target.join(rest)
    } else {
        target.to_path_buf()
    };
    let Ok(bytes) = std::fs::read(&file) else {
        return error(StatusCode::NOT_FOUND, "no such file");
    };
    let media = match file.extension().and_then(|e| e.to_str()) {
        Some("json") => "application/json",
        Some("html") => "text/html; charset=utf-8",
        Some("bapi" | "bsq" | "txt" | "md") => "text/plain; charset=utf-8",
        _ => "application/octet-stream",
    };
    let body = if head { Body::empty() } else { Body::from(bytes) };
    (StatusCode::OK, [(header::CONTENT_TYPE, HeaderValue::from_static(media))], body).into_response()
}

async fn dispatch(s: Arc<Shared>, i: usize, caller: Caller, path: String, headers: HeaderMap, body: Bytes) -> Response {
    let request = s.request_id();
    let ep = &s.endpoints[i];
    let who = caller.subject().to_string();
    let refuse = |status: StatusCode, msg: &str| {
        s.log_line(format!("{request} {who} POST {path} {} {}", ep.name, status.as_u16()));
        error(status, msg)
    };
    let Some(out_form) = negotiate(&headers) else {
        return refuse(StatusCode::NOT_ACCEPTABLE, "no acceptable response form");
    };
    let in_form = match content_form(&headers) {
        Ok(f) => f,
        Err(r) => {
            s.log_line(format!("{request} {who} POST {path} {} 415", ep.name));
            return r;
        }
    };
    let Ok(text) = std::str::from_utf8(&body) else {
        return refuse(StatusCode::BAD_REQUEST, "request body is not UTF-8");
    };
    let args_ty = Type::Named(args_entity_name(&ep.name));
    let record = match bapi::decode(&s.wire, text, &args_ty, in_form) {
        Ok(v) => v,
        Err(e) => return refuse(StatusCode::BAD_REQUEST, &e.to_string()),
    };
    let args: Vec<Value> = match &record {
        Value::Entity { fields, .. } => fields.iter().map(|(_, v)| v.clone()).collect(),
        _ => Vec::new(),
    };
    let worker = s.clone();
    let joined = tokio::task::spawn_blocking(move || {
        let ep = &worker.endpoints[i];
        worker.run(ep, args)
    })
    .await;
    let outcome = match joined {
        Ok(r) => r,
        Err(_) => Err(Fault::new(FaultKind::Io, "task worker panicked")),
    };
    let shown = s.scrub(&bapi::redacted_text(&s.wire, &record), &record.sensitive_leaves());
    match outcome {
        Ok(v) => {
            s.log_line(format!("{request} {who} POST {path} {} 200 args={shown}", ep.name));
            typed(StatusCode::OK, out_form, bapi::encode(&s.wire, &v, &ep.ret, out_form))
        }
        Err(fault) => {
            let status = fault_status(fault.kind);
            let rec = s.safe_abort(&request, ep, &record, &fault, status);
            s.log_line(format!(
                "{request} {who} POST {path} {} {} fault={} args={shown}",
                ep.name,
                status.as_u16(),
                rec.kind
            ));
            let body = serde_json::to_string(&rec).expect("fault record serializes");
            (status, [(header::CONTENT_TYPE, HeaderValue::from_static(MEDIA_JSON))], body).into_response()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn accept(v: &str) -> HeaderMap {
        let mut h = HeaderMap::new();
        h.insert(header::ACCEPT, HeaderValue::from_str(v).unwrap());
        h
    }

    #[test]
    fn negotiation_prefers_quality() {
        assert_eq!(negotiate(&HeaderMap::new()), Some(WireForm::Json));
        assert_eq!(negotiate(&accept("application/bapi+min")), Some(WireForm::Minimal));
        assert_eq!(
            negotiate(&accept("application/json;q=0.5, application/bapi+verbose")),
            Some(WireForm::Verbose)
        );
        assert_eq!(negotiate(&accept("*/*")), Some(WireForm::Json));
        assert_eq!(negotiate(&accept("text/html")), None);
        assert_eq!(negotiate(&accept("application/json;q=0")), None);
    }

    #[test]
    fn fault_statuses() {
        assert_eq!(fault_status(FaultKind::Precondition), StatusCode::PRECONDITION_FAILED);
        assert_eq!(fault_status(FaultKind::PermissionDenied), StatusCode::FORBIDDEN);
        assert_eq!(fault_status(FaultKind::Type), StatusCode::BAD_REQUEST);
        assert_eq!(fault_status(FaultKind::User), StatusCode::INTERNAL_SERVER_ERROR);
    }
}
