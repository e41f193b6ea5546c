//! Subcommand implementations. Each returns an [`Outcome`] or a [`Failure`]
//! and never prints directly, so `--format json` stays well formed.

use std::io::{BufRead, Read};
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value as Json};

use aisette_core::agent::{AgentRegistry, ScriptedTable};
use aisette_core::ast::{FunctionKind, Type};
use aisette_core::bapi::{self, args_entity_name, synthetic_entity, DecodeError, WireForm};
use aisette_core::eval::{EnvRecord, EventLog, Fault, HoleRequest, HoleStore, NullHost, Runtime};
use aisette_core::syntax::parse_module;
use aisette_core::types::{check_source, TypedModule};
use aisette_core::{Diagnostic, Severity, Value};
use aisette_mint::{load_config, lint_sensitive_exposure, FaultRecord, Mint, MintConfig, MintError};
use aisette_sundew::{close_prefix, module_with_prefix, Bounds, SolverConfig, Sundew, SundewError, ValidationResult};

use crate::{BoundsProfile, Cli, Command, Form, Format, RunArgs, ServeArgs};

pub struct Outcome {
    code: u8,
    text: String,
    json: Json,
}

impl Outcome {
    fn new(code: u8, text: String, json: Json) -> Self {
        Self { code, text, json }
    }
}

pub struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn domain(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

pub fn run(cli: Cli) -> u8 {
    let format = cli.format;
    let r = match &cli.command {
        Command::Check { paths } => check(paths),
        Command::Test { module, filter } => test(&cli, module, filter.as_deref()),
        Command::Run(a) => run_task(a),
        Command::Encode {
            module,
            type_name,
            from,
            to,
        } => encode(module, type_name, *from, *to),
        Command::Decode { module, type_name, form } => decode(module, type_name, *form),
        Command::Lint(a) => lint(a),
        Command::Introspect {
            module,
            prefix,
            api,
            action,
            facts,
        } => introspect(&cli, module, prefix, api, action.as_deref(), facts),
        Command::Serve(a) => serve(a),
    };
    match r {
        Ok(o) => {
            match format {
                Format::Text => print!("{}", o.text),
                Format::Json => println!("{}", o.json),
            }
            o.code
        }
        Err(f) => {
            match format {
                Format::Text => eprintln!("error: {}", f.message.trim_end()),
                Format::Json => println!("{}", json!({ "error": f.message, "exit": f.code })),
            }
            f.code
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn render_diag(path: &Path, d: &Diagnostic) -> String {
    let sev = match d.severity {
        Severity::Error => "error",
        Severity::Warning => "warning",
    };
    format!("{}:{}: {sev}[{}]: {}\n", path.display(), d.span, d.code, d.message)
}

fn load_module(path: &Path) -> Result<TypedModule, Failure> {
    let src = read(path)?;
    check_source(&src).map_err(|ds| domain(ds.iter().map(|d| render_diag(path, d)).collect::<String>()))
}

fn wire_form(f: Form) -> WireForm {
    match f {
        Form::Verbose => WireForm::Verbose,
        Form::Minimal => WireForm::Minimal,
        Form::Json => WireForm::Json,
        Form::Redacted => WireForm::Redacted,
    }
}

fn type_named(tm: &TypedModule, name: &str) -> Result<Type, Failure> {
    if let Some(t) = Type::from_primitive_name(name) {
        return Ok(t);
    }
    if tm.alias(name).is_some() || tm.entity(name).is_some() {
        return Ok(Type::Named(name.to_string()));
    }
    Err(usage(format!("unknown type `{name}`")))
}

/// Verbose literal, or bare text for primitive and alias types.
fn literal(tm: &TypedModule, text: &str, ty: &Type) -> Result<Value, String> {
    aisette_core::agent::shape_text(tm, text, ty)
}

/// An entity literal whose type is named by its leading identifier.
fn entity_literal(tm: &TypedModule, text: &str) -> Result<Value, String> {
    let name = text.split('{').next().unwrap_or_default().trim();
    if tm.entity(name).is_none() {
        return Err(format!("`{}` is not an entity literal", text.trim()));
    }
    bapi::decode(tm, text, &Type::Named(name.to_string()), WireForm::Verbose).map_err(|e| e.to_string())
}

fn json_of(v: &Value) -> Json {
    let text = bapi::encode_json(v);
    serde_json::from_str(&text).unwrap_or(Json::String(text))
}

fn check(paths: &[std::path::PathBuf]) -> Result<Outcome, Failure> {
    let mut text = String::new();
    let mut files = Vec::new();
    let mut failed = false;
    for p in paths {
        let src = read(p)?;
        let (ok, diags) = match check_source(&src) {
            Ok(tm) => (true, tm.warnings.clone()),
            Err(ds) => (false, ds),
        };
        failed |= !ok;
        for d in &diags {
            text.push_str(&render_diag(p, d));
        }
        if ok {
            text.push_str(&format!("{}: ok\n", p.display()));
        }
        files.push(json!({ "path": p.display().to_string(), "ok": ok, "diagnostics": diags }));
    }
    Ok(Outcome::new(u8::from(failed), text, json!({ "files": files })))
}

fn sundew(cli: &Cli) -> Sundew {
    let bounds = match cli.bounds {
        BoundsProfile::Small => Bounds {
            string_len: 16,
            list_len: 4,
            events_len: 4,
        },
        BoundsProfile::Default => Bounds::default(),
        BoundsProfile::Large => Bounds {
            string_len: 256,
            list_len: 16,
            events_len: 16,
        },
    };
    let solver = SolverConfig::new(cli.solver.clone()).with_timeout(Duration::from_millis(cli.timeout));
    Sundew::new(solver).with_bounds(bounds)
}

fn solver_failure(e: SundewError) -> Failure {
    match e {
        SundewError::SolverNotFound(_) | SundewError::Bounds(_) | SundewError::UnknownTarget(_) => usage(e.to_string()),
        other => domain(other.to_string()),
    }
}

fn test(cli: &Cli, module: &Path, filter: Option<&str>) -> Result<Outcome, Failure> {
    let tm = load_module(module)?;
    let sd = sundew(cli);
    let mut text = String::new();
    let mut results = Vec::new();
    let mut failed = false;
    let names: Vec<String> = tm
        .module
        .chktests
        .iter()
        .map(|t| t.name.clone())
        .filter(|n| filter.is_none_or(|f| n.contains(f)))
        .collect();
    for name in &names {
        let r = sd.run_chktest(&tm, name).map_err(solver_failure)?;
        let entry = match &r {
            ValidationResult::Valid => {
                text.push_str(&format!("VALID {name}\n"));
                json!({ "name": name, "verdict": "valid" })
            }
            ValidationResult::Counterexample(w) => {
                failed = true;
                text.push_str(&format!("COUNTEREXAMPLE {name} {}\n", w.render(&tm)));
                let bindings: serde_json::Map<String, Json> = w
                    .bindings
                    .iter()
                    .map(|b| (b.name.clone(), json_of(&bapi::redact(&b.value))))
                    .collect();
                json!({ "name": name, "verdict": "counterexample", "witness": bindings, "fault": w.site.kind.code() })
            }
            ValidationResult::Unknown(reason) => {
                failed = true;
                text.push_str(&format!("UNKNOWN {name} ({reason})\n"));
                json!({ "name": name, "verdict": "unknown", "reason": reason.to_string() })
            }
        };
        results.push(entry);
    }
    let n = names.len();
    text.push_str(&format!("{n} {} run\n", if n == 1 { "test" } else { "tests" }));
    Ok(Outcome::new(u8::from(failed), text, json!({ "tests": results, "run": n })))
}

/// Parameters, return type and env declarations of a task.
type Signature = (Vec<(String, Type)>, Type, Vec<(String, Type)>);

fn signature(tm: &TypedModule, task: &str) -> Option<Signature> {
    let pairs = |ps: &[aisette_core::ast::Param]| ps.iter().map(|p| (p.name.clone(), p.ty.clone())).collect();
    let env = |es: &[aisette_core::ast::EnvDecl]| es.iter().map(|e| (e.name.clone(), e.ty.clone())).collect();
    if let Some(a) = tm.api(task) {
        return Some((pairs(&a.params), a.ret.clone(), env(&a.env)));
    }
    tm.function(task).map(|f| (pairs(&f.params), f.ret.clone(), env(&f.env)))
}

fn scrub(text: &str, secrets: &[String]) -> String {
    let mut s: Vec<&String> = secrets.iter().filter(|s| !s.is_empty()).collect();
    s.sort_by_key(|s| std::cmp::Reverse(s.len()));
    let mut out = text.to_string();
    for x in s {
        out = out.replace(x.as_str(), &"*".repeat(x.chars().count()));
    }
    out
}

fn fault_record(task: &str, fault: &Fault, args_text: String, secrets: &[String]) -> FaultRecord {
    FaultRecord {
        request: "cli".into(),
        task: task.to_string(),
        kind: fault.kind.code().to_string(),
        status: 1,
        clause: fault.clause.clone(),
        span: fault.span.map(|s| s.to_string()),
        owner: fault.owner.clone(),
        message: scrub(&fault.message, secrets),
        args: scrub(&args_text, secrets),
    }
}

fn prompt_resolver(tm: &TypedModule) -> impl FnMut(&HoleRequest<'_>) -> Option<Value> + '_ {
    move |req: &HoleRequest<'_>| {
        let args: Vec<String> = req
            .args
            .iter()
            .map(|(n, v)| format!("{n} = {}", bapi::redacted_text(tm, v)))
            .collect();
        eprint!("hole {} : {} [{}]", req.id, req.ty, args.join(", "));
        if let Some(doc) = req.doc {
            eprint!(" ({})", doc.trim());
        }
        eprint!("\n> ");
        let mut line = String::new();
        if std::io::stdin().lock().read_line(&mut line).ok()? == 0 || line.trim().is_empty() {
            return None;
        }
        match literal(tm, line.trim(), req.ty) {
            Ok(v) => Some(v),
            Err(e) => {
                eprintln!("not a `{}`: {e}", req.ty);
                None
            }
        }
    }
}

fn run_task(a: &RunArgs) -> Result<Outcome, Failure> {
    let tm = load_module(&a.module)?;
    let (params, ret, env_decls) =
        signature(&tm, &a.task).ok_or_else(|| usage(format!("no function, action or api named `{}`", a.task)))?;
    if params.len() != a.args.len() {
        return Err(usage(format!("`{}` takes {} argument(s), given {}", a.task, params.len(), a.args.len())));
    }
    let mut args = Vec::new();
    for ((name, ty), text) in params.iter().zip(&a.args) {
        args.push(literal(&tm, text, ty).map_err(|e| usage(format!("argument `{name}`: {e}")))?);
    }
    let mut env = EnvRecord::new();
    for binding in &a.env {
        let (name, text) = binding
            .split_once('=')
            .ok_or_else(|| usage(format!("--env `{binding}` is not NAME=LITERAL")))?;
        let ty = env_decls
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| usage(format!("`{}` declares no env `{name}`", a.task)))?;
        env.insert(name.to_string(), literal(&tm, text, ty).map_err(|e| usage(format!("env `{name}`: {e}")))?);
    }
    let mut events = EventLog::new();
    if let Some(p) = &a.events {
        for (i, line) in read(p)?.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            events.append(entity_literal(&tm, line).map_err(|e| usage(format!("{}:{}: {e}", p.display(), i + 1)))?);
        }
    }
    let mut agents = AgentRegistry::new();
    if let Some(p) = &a.stub {
        let table = Arc::new(ScriptedTable::load(p).map_err(|e| usage(e.to_string()))?);
        for ag in &tm.module.agents {
            agents.register(ag.name.clone(), table.clone());
        }
    }
    let mut secrets: Vec<String> = args.iter().flat_map(Value::sensitive_leaves).collect();
    secrets.extend(env.values().flat_map(Value::sensitive_leaves));
    let wire = tm.with_entities(vec![synthetic_entity(&args_entity_name(&a.task), &params)]);
    let args_value = Value::Entity {
        name: args_entity_name(&a.task),
        fields: params.iter().map(|(n, _)| n.clone()).zip(args.iter().cloned()).collect(),
    };

    let mut rt = Runtime::new(&tm)
        .with_events(events)
        .with_agents(agents)
        .with_default_host(Arc::new(NullHost));
    if let Some(dir) = &a.examples {
        rt = rt.with_holes(HoleStore::with_dir(dir));
    }
    if !a.no_prompt {
        rt = rt.with_resolver(prompt_resolver(&tm));
    }
    let r = rt.run_task(&a.task, &env, args);
    let calls: Vec<String> = rt
        .calls
        .iter()
        .map(|c| {
            let fields: Vec<String> = c
                .args
                .iter()
                .map(|(n, v)| format!("{n} = {}", scrub(&bapi::redacted_text(&tm, v), &secrets)))
                .collect();
            format!("api {}({})", c.api, fields.join(", "))
        })
        .collect();
    drop(rt);
    match r {
        Ok(v) => {
            let form = wire_form(a.form);
            let shown = bapi::encode(&tm, &v, &ret, form);
            let mut text = format!("{shown}\n");
            for c in &calls {
                text.push_str(&format!("{c}\n"));
            }
            let result = match form {
                WireForm::Json => json_of(&v),
                _ => Json::String(shown),
            };
            Ok(Outcome::new(0, text, json!({ "ok": true, "result": result, "calls": calls })))
        }
        Err(fault) => {
            let rec = fault_record(&a.task, &fault, bapi::redacted_text(&wire, &args_value), &secrets);
            let mut text = format!("FAULT {} in {}", rec.kind, rec.owner.as_deref().unwrap_or(&a.task));
            if let Some(s) = &rec.span {
                text.push_str(&format!(" at {s}"));
            }
            text.push('\n');
            match &rec.clause {
                Some(c) => text.push_str(&format!("  clause: {c}\n")),
                None => text.push_str(&format!("  message: {}\n", rec.message)),
            }
            text.push_str(&format!("  args: {}\n", rec.args));
            for c in &calls {
                text.push_str(&format!("  {c}\n"));
            }
            Ok(Outcome::new(1, text, json!({ "ok": false, "fault": rec, "calls": calls })))
        }
    }
}

fn stdin_text() -> Result<String, Failure> {
    let mut s = String::new();
    std::io::stdin().read_to_string(&mut s).map_err(|e| usage(format!("stdin: {e}")))?;
    Ok(s)
}

fn decode_failure(e: DecodeError) -> Failure {
    match e {
        DecodeError::UnknownType(_) => usage(e.to_string()),
        other => domain(other.to_string()),
    }
}

fn encode(module: &Path, type_name: &str, from: Form, to: Form) -> Result<Outcome, Failure> {
    let tm = load_module(module)?;
    let ty = type_named(&tm, type_name)?;
    let input = stdin_text()?;
    let v = bapi::decode(&tm, input.trim(), &ty, wire_form(from)).map_err(decode_failure)?;
    let out = bapi::encode(&tm, &v, &ty, wire_form(to));
    let json = json!({ "form": wire_form(to).name(), "text": out });
    Ok(Outcome::new(0, format!("{out}\n"), json))
}

fn decode(module: &Path, type_name: &str, form: Form) -> Result<Outcome, Failure> {
    let tm = load_module(module)?;
    let ty = type_named(&tm, type_name)?;
    let input = stdin_text()?;
    let v = bapi::decode(&tm, input.trim(), &ty, wire_form(form)).map_err(decode_failure)?;
    let out = bapi::encode(&tm, &v, &ty, WireForm::Verbose);
    Ok(Outcome::new(0, format!("{out}\n"), json!({ "valid": true, "value": out })))
}

fn config_and_module(a: &ServeArgs) -> Result<(MintConfig, TypedModule), Failure> {
    let mut config = load_config(&a.config).map_err(|e| usage(e.to_string()))?;
    if let Some(l) = &a.listen {
        config.listen = l.clone();
    }
    let path = a
        .module
        .clone()
        .or_else(|| config.module.clone())
        .ok_or_else(|| usage("no module: pass --module or set `module` in the config"))?;
    let tm = load_module(&path).map_err(|f| usage(f.message))?;
    Ok((config, tm))
}

fn lint(a: &ServeArgs) -> Result<Outcome, Failure> {
    let (config, tm) = config_and_module(a)?;
    let findings = lint_sensitive_exposure(&config, &tm);
    Mint::builder(tm, config).allow_lint_warnings(true).build().map_err(|e| usage(e.to_string()))?;
    let text: String = if findings.is_empty() {
        "no findings\n".into()
    } else {
        findings.iter().map(|f| format!("{f}\n")).collect()
    };
    let json = json!({
        "findings": findings.iter().map(|f| json!({
            "severity": f.severity, "route": f.route, "task": f.task, "message": f.message
        })).collect::<Vec<_>>()
    });
    Ok(Outcome::new(u8::from(!findings.is_empty()), text, json))
}

fn serve(a: &ServeArgs) -> Result<Outcome, Failure> {
    let (config, tm) = config_and_module(a)?;
    let listen = config.listen.clone();
    let mint = match Mint::builder(tm, config)
        .allow_lint_warnings(a.allow_lint_warnings)
        .echo_log(true)
        .build()
    {
        Ok(m) => m,
        Err(MintError::LintBlocked(fs)) => {
            let list: String = fs.iter().map(|f| format!("{f}\n")).collect();
            return Err(usage(format!("startup blocked by the sensitivity lint:\n{list}")));
        }
        Err(e) => return Err(usage(e.to_string())),
    };
    for f in mint.lint() {
        eprintln!("{f}");
    }
    let rt = tokio::runtime::Runtime::new().map_err(|e| usage(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(&listen)
            .await
            .map_err(|e| usage(format!("cannot listen on {listen}: {e}")))?;
        let addr = listener.local_addr().map(|a| a.to_string()).unwrap_or(listen.clone());
        eprintln!("listening on {addr}");
        mint.serve(listener).await.map_err(|e| domain(e.to_string()))
    })?;
    Ok(Outcome::new(0, String::new(), json!({ "stopped": true })))
}

fn introspect(
    cli: &Cli,
    module: &Path,
    prefix: &Path,
    api: &str,
    action: Option<&str>,
    facts: &[String],
) -> Result<Outcome, Failure> {
    let base = read(module)?;
    let pre = read(prefix)?;
    let tm = module_with_prefix(&base, &pre)
        .map_err(|ds| domain(ds.iter().map(|d| render_diag(prefix, d)).collect::<String>()))?;
    if tm.api(api).is_none() {
        return Err(usage(format!("no api named `{api}`")));
    }
    let action = match action {
        Some(a) => a.to_string(),
        None => {
            let closed = close_prefix(&pre).map_err(|_| usage("prefix does not tokenize"))?;
            let m = parse_module(&closed).map_err(|_| usage("prefix does not parse"))?;
            m.functions
                .iter()
                .rev()
                .find(|f| f.kind == FunctionKind::Action)
                .map(|f| f.name.clone())
                .ok_or_else(|| usage("the prefix declares no action; pass --action"))?
        }
    };
    let facts = facts
        .iter()
        .map(|f| entity_literal(&tm, f).map_err(|e| usage(format!("--fact: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let report = sundew(cli)
        .check_api_call_site(&tm, &action, api, &facts)
        .map_err(solver_failure)?;
    Ok(Outcome::new(u8::from(!report.satisfied), report.render(&tm), report.to_json()))
}
