//! Bounded SMT validation for aisette modules.
//!
//! [`emit_smt`] translates a function, chktest or api call site into an
//! SMT-LIB script. [`Sundew`] runs such scripts through an external solver
//! and turns models back into [`Value`]s that replay through the evaluator.

mod solver;
mod sym;
mod term;

use std::collections::BTreeMap;
use std::fmt;

use aisette_core::ast::{BinOp, Expr, ExprKind, FunctionKind, Type};
use aisette_core::bapi::{self, WireForm};
use aisette_core::eval::{self, EnvRecord, Fault, FaultKind, Runtime};
use aisette_core::syntax::print_expr;
use aisette_core::syntax::{parse_module, tokenize, TokenKind};
use aisette_core::types::{typecheck_with, CheckOptions, TypedModule};
use aisette_core::value::{int_in_range, Decimal};
use aisette_core::{Diagnostic, Span, Value};
use serde_json::json;
use thiserror::Error;

pub use solver::{parse_sexps, Answer, Sexp, SolverConfig, DEFAULT_SOLVER, DEFAULT_TIMEOUT};
pub use sym::{Shape, SymbolInfo};

use sym::{Exec, Mode, Site};

#[derive(Debug, Error)]
pub enum SundewError {
    #[error("solver `{0}` not found; install z3 or pass --solver")]
    SolverNotFound(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("solver protocol error: {0}")]
    Protocol(String),
    #[error("{span}: unsupported construct: {what}")]
    Unsupported { what: String, span: Span },
    #[error("invalid bounds: {0}")]
    Bounds(String),
    #[error("unknown target: {0}")]
    UnknownTarget(String),
}

/// Caps used when unrolling strings, lists and the event log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub string_len: usize,
    pub list_len: usize,
    pub events_len: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            string_len: 64,
            list_len: 8,
            events_len: 8,
        }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<(), SundewError> {
        for (name, v) in [
            ("string length", self.string_len),
            ("list length", self.list_len),
            ("event log length", self.events_len),
        ] {
            if v == 0 {
                return Err(SundewError::Bounds(format!("{name} bound must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Function(String),
    ChkTest(String),
    /// The last call to `api` inside the (prefix of) `action`.
    CallSite { action: String, api: String },
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Function(n) | Target::ChkTest(n) => f.write_str(n),
            Target::CallSite { action, api } => write!(f, "{action} -> {api}"),
        }
    }
}

/// A place where evaluation can fault.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteInfo {
    pub kind: FaultKind,
    pub span: Span,
    pub clause: Option<String>,
    pub owner: String,
    pub message: String,
}

impl SiteInfo {
    fn from_site(s: &Site) -> Self {
        Self {
            kind: s.kind,
            span: s.span,
            clause: s.clause.clone(),
            owner: s.owner.clone(),
            message: s.message.clone(),
        }
    }

    /// The fault the evaluator raises at this site.
    pub fn fault(&self) -> Fault {
        Fault {
            kind: self.kind,
            message: self.message.clone(),
            clause: self.clause.clone(),
            span: Some(self.span),
            owner: Some(self.owner.clone()),
        }
    }
}

impl fmt::Display for SiteInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} in {} at {}", self.kind, self.owner, self.span)?;
        if let Some(c) = &self.clause {
            write!(f, ": {c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmtScript {
    pub text: String,
    pub logic: String,
    /// Every free symbol in `text`.
    pub symbols: BTreeMap<String, SymbolInfo>,
    pub bounds: Bounds,
    pub sites: Vec<SiteInfo>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindingKind {
    Arg,
    Env,
    /// Reply of an agent call.
    Agent,
    /// Argument at the checked api call site.
    CallArg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub name: String,
    pub kind: BindingKind,
    pub ty: Type,
    pub value: Value,
}

impl Binding {
    pub fn render(&self, tm: &TypedModule) -> String {
        format!("{} = {}", self.name, bapi::encode(tm, &self.value, &self.ty, WireForm::Redacted))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub target: Target,
    pub bindings: Vec<Binding>,
    pub site: SiteInfo,
}

impl Witness {
    pub fn args(&self) -> Vec<Value> {
        self.of(BindingKind::Arg).map(|b| b.value.clone()).collect()
    }

    pub fn env(&self) -> EnvRecord {
        self.of(BindingKind::Env)
            .map(|b| (b.name.trim_start_matches("env.").to_string(), b.value.clone()))
            .collect()
    }

    fn of(&self, kind: BindingKind) -> impl Iterator<Item = &Binding> {
        self.bindings.iter().filter(move |b| b.kind == kind)
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.bindings.iter().find(|b| b.name == name).map(|b| &b.value)
    }

    pub fn render(&self, tm: &TypedModule) -> String {
        self.bindings.iter().map(|b| b.render(tm)).collect::<Vec<_>>().join(", ")
    }
}

/// Runs the witness through the evaluator and returns the fault it raises.
pub fn replay(tm: &TypedModule, w: &Witness) -> Result<Fault, String> {
    let mut rt = Runtime::new(tm);
    let r = match &w.target {
        Target::Function(n) => rt.call(n, &w.env(), w.args()).map(|_| ()),
        Target::ChkTest(n) => rt.run_chktest(n, w.args()),
        Target::CallSite { .. } => return Err("call-site witnesses do not replay on their own".into()),
    };
    match r {
        Ok(()) => Err("evaluation finished without a fault".into()),
        Err(f) => Ok(f),
    }
}

/// Whether replaying `w` raises exactly the fault at its site.
pub fn reproduces(tm: &TypedModule, w: &Witness) -> bool {
    matches!(replay(tm, w), Ok(f) if f.same_site(&w.site.fault()) && f.owner.as_deref() == Some(w.site.owner.as_str()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnknownReason {
    Timeout,
    BoundExhausted,
    Solver(String),
    /// The model did not reproduce the fault when replayed.
    Replay(String),
}

impl fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnknownReason::Timeout => f.write_str("timeout"),
            UnknownReason::BoundExhausted => f.write_str("bound exhausted"),
            UnknownReason::Solver(m) => write!(f, "solver: {m}"),
            UnknownReason::Replay(m) => write!(f, "witness did not replay: {m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationResult {
    Valid,
    Counterexample(Witness),
    Unknown(UnknownReason),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reachability {
    Impossible,
    Witness(Witness),
    Unknown(UnknownReason),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteReport {
    pub site: SiteInfo,
    pub verdict: Reachability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissingObligation {
    /// Requires clause, verbatim.
    pub clause: String,
    pub summary: String,
    pub witness: Vec<Binding>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObligationReport {
    pub api: String,
    pub satisfied: bool,
    pub missing: Vec<MissingObligation>,
    /// Clauses the solver could not decide, with the reason.
    pub unknown: Vec<(String, UnknownReason)>,
}

impl ObligationReport {
    pub fn render(&self, tm: &TypedModule) -> String {
        if self.satisfied {
            return format!("SATISFIED {}\n", self.api);
        }
        let mut out = String::new();
        for m in &self.missing {
            out.push_str(&format!("MISSING {}: requires {}\n", self.api, m.clause));
            out.push_str(&format!("  {}\n", m.summary));
            let w: Vec<String> = m.witness.iter().map(|b| b.render(tm)).collect();
            out.push_str(&format!("  witness: {}\n", w.join(", ")));
        }
        for (c, r) in &self.unknown {
            out.push_str(&format!("UNKNOWN {}: requires {c} ({r})\n", self.api));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let bindings = |bs: &[Binding]| {
            bs.iter()
                .map(|b| {
                    let v = bapi::encode_json(&bapi::redact(&b.value));
                    let v: serde_json::Value = serde_json::from_str(&v).unwrap_or(serde_json::Value::String(v));
                    (b.name.clone(), v)
                })
                .collect::<serde_json::Map<_, _>>()
        };
        json!({
            "api": self.api,
            "satisfied": self.satisfied,
            "missing": self.missing.iter().map(|m| json!({
                "clause": m.clause,
                "summary": m.summary,
                "witness": bindings(&m.witness),
            })).collect::<Vec<_>>(),
            "unknown": self.unknown.iter().map(|(c, r)| json!({
                "clause": c,
                "reason": r.to_string(),
            })).collect::<Vec<_>>(),
        })
    }
}

struct Input {
    name: String,
    kind: BindingKind,
    ty: Type,
    shape: Shape,
}

struct Prepared<'m> {
    exec: Exec<'m>,
    inputs: Vec<Input>,
}

impl Prepared<'_> {
    fn script(&self, goal: &str) -> String {
        let mut out = String::from("(set-option :produce-models true)\n(set-logic ALL)\n");
        out.push_str(&self.exec.script_body());
        out.push_str(&format!("(assert {goal})\n(check-sat)\n"));
        out
    }

    fn terms(&self, extra: &[(String, Type, Shape)]) -> Vec<String> {
        let mut out = Vec::new();
        for i in &self.inputs {
            i.shape.terms(&mut out);
        }
        for (_, _, s) in extra {
            s.terms(&mut out);
        }
        out
    }

    fn live_sites(&self) -> impl Iterator<Item = &Site> {
        self.exec.sites.iter().filter(|s| s.guard != term::FALSE)
    }

    fn goal(&self) -> String {
        let gs: Vec<&str> = self.live_sites().map(|s| s.guard.as_str()).collect();
        term::or(&gs)
    }
}

fn param_path(tm: &TypedModule, name: &str) -> String {
    if tm.function(name).is_some() {
        format!("arg.{name}")
    } else {
        name.to_string()
    }
}

fn prepare<'m>(
    tm: &'m TypedModule,
    target: &Target,
    bounds: Bounds,
    mode: Mode,
    facts: &[Value],
) -> Result<Prepared<'m>, SundewError> {
    bounds.validate()?;
    if facts.len() > bounds.events_len {
        return Err(SundewError::Bounds(format!(
            "{} event facts exceed the event log bound of {}",
            facts.len(),
            bounds.events_len
        )));
    }
    let mut exec = Exec::new(tm, bounds, mode);
    exec.facts = facts.to_vec();
    let mut inputs = Vec::new();
    let args = |exec: &mut Exec<'m>, params: &[aisette_core::ast::Param], inputs: &mut Vec<Input>| {
        let mut out = Vec::new();
        for p in params {
            let (s, shape) = exec.input(&param_path(tm, &p.name), &p.ty, Some(p.span))?;
            inputs.push(Input {
                name: p.name.clone(),
                kind: BindingKind::Arg,
                ty: p.ty.clone(),
                shape,
            });
            out.push(s);
        }
        Ok::<_, SundewError>(out)
    };
    match target {
        Target::ChkTest(name) => {
            let t = tm
                .chktest(name)
                .ok_or_else(|| SundewError::UnknownTarget(format!("no chktest named `{name}`")))?;
            let a = args(&mut exec, &t.params, &mut inputs)?;
            exec.chktest(t, a)?;
        }
        Target::Function(name) | Target::CallSite { action: name, .. } => {
            let f = tm
                .function(name)
                .ok_or_else(|| SundewError::UnknownTarget(format!("no function or action named `{name}`")))?;
            if let Target::CallSite { api, .. } = target {
                if tm.api(api).is_none() {
                    return Err(SundewError::UnknownTarget(format!("no api named `{api}`")));
                }
                exec.target_api = Some(api.clone());
            }
            let a = args(&mut exec, &f.params, &mut inputs)?;
            let mut env = BTreeMap::new();
            for d in &f.env {
                let path = format!("env.{}", d.name);
                let (s, shape) = exec.input(&path, &d.ty, Some(d.span))?;
                inputs.push(Input {
                    name: path,
                    kind: BindingKind::Env,
                    ty: d.ty.clone(),
                    shape,
                });
                env.insert(d.name.clone(), s);
            }
            exec.entry(f, a, env)?;
            if let Target::CallSite { api, .. } = target {
                if exec.obligations.is_empty() && tm.api(api).is_some_and(|d| !d.requires.is_empty()) {
                    return Err(SundewError::UnknownTarget(format!("`{name}` never calls `{api}`")));
                }
            }
        }
    }
    for (label, ty, shape) in std::mem::take(&mut exec.inputs) {
        inputs.push(Input {
            name: label,
            kind: BindingKind::Agent,
            ty,
            shape,
        });
    }
    Ok(Prepared { exec, inputs })
}

/// Translates `target` into a self-contained SMT-LIB script whose
/// satisfiability means "some input makes the target fault".
pub fn emit_smt(tm: &TypedModule, target: &Target, bounds: Bounds) -> Result<SmtScript, SundewError> {
    let p = prepare(tm, target, bounds, Mode::Assume, &[])?;
    let goal = match target {
        Target::CallSite { .. } => {
            let parts: Vec<String> = p.exec.obligations.iter().map(|o| term::and(&[&o.pc, &o.clear, &term::not(&o.holds)])).collect();
            term::or(&parts.iter().map(String::as_str).collect::<Vec<_>>())
        }
        _ => p.goal(),
    };
    Ok(SmtScript {
        text: p.script(&goal),
        logic: "ALL".into(),
        symbols: p.exec.symbols.clone(),
        bounds,
        sites: p.exec.sites.iter().map(SiteInfo::from_site).collect(),
    })
}

/// Closes any braces left open by a source prefix.
pub fn close_prefix(prefix: &str) -> Result<String, Vec<Diagnostic>> {
    let depth = tokenize(prefix)?.iter().fold(0i64, |d, t| match t.kind {
        TokenKind::LBrace => d + 1,
        TokenKind::RBrace => d - 1,
        _ => d,
    });
    let mut out = prefix.trim_end().to_string();
    for _ in 0..depth.max(0) {
        out.push_str("\n}");
    }
    out.push('\n');
    Ok(out)
}

/// Typechecks `base` with the declarations of `prefix` replacing any of the
/// same name. The prefix may stop right after the call site being checked.
pub fn module_with_prefix(base: &str, prefix: &str) -> Result<TypedModule, Vec<Diagnostic>> {
    let mut m = parse_module(base)?;
    let p = parse_module(&close_prefix(prefix)?)?;
    m.functions.retain(|f| p.functions.iter().all(|g| g.name != f.name));
    m.merge(p);
    typecheck_with(m, CheckOptions { require_returns: false })
}

/// Rebuilds a value of `shape` from model values in `terms` order.
fn decode_shape<'a>(
    tm: &TypedModule,
    shape: &Shape,
    vals: &mut impl Iterator<Item = &'a Sexp>,
) -> Result<Value, UnknownReason> {
    let bad = |what: &str| UnknownReason::Solver(format!("unreadable model value for {what}"));
    Ok(match shape {
        Shape::Unit => Value::Unit,
        Shape::Leaf { ty, term } => {
            let v = vals.next().ok_or_else(|| bad(term))?;
            match ty {
                Type::Bool => Value::Bool(v.as_bool().ok_or_else(|| bad(term))?),
                Type::Int => Value::Int(v.as_int().and_then(int_in_range).ok_or(UnknownReason::BoundExhausted)?),
                Type::Decimal => Value::Decimal(
                    v.as_int()
                        .and_then(int_in_range)
                        .and_then(Decimal::from_scaled)
                        .ok_or(UnknownReason::BoundExhausted)?,
                ),
                Type::CString => Value::CString(v.as_str().ok_or_else(|| bad(term))?.to_string()),
                _ => Value::String(v.as_str().ok_or_else(|| bad(term))?.to_string()),
            }
        }
        Shape::Alias { name, inner } => {
            let v = decode_shape(tm, inner, vals)?;
            eval::make_alias(tm, name, v).map_err(|f| UnknownReason::Solver(f.message))?
        }
        Shape::Entity { name, fields } => {
            let mut out = Vec::with_capacity(fields.len());
            for (f, s) in fields {
                out.push((f.clone(), decode_shape(tm, s, vals)?));
            }
            eval::construct_entity(tm, name, out).map_err(|f| UnknownReason::Solver(f.message))?
        }
        Shape::Opt { some, val } => {
            let present = vals.next().and_then(Sexp::as_bool).ok_or_else(|| bad(some))?;
            let v = decode_shape(tm, val, vals)?;
            Value::Option(present.then(|| Box::new(v)))
        }
        Shape::List { len, items } => {
            let n = vals.next().and_then(Sexp::as_int).ok_or_else(|| bad(len))?;
            let mut out = Vec::new();
            for (i, s) in items.iter().enumerate() {
                let v = decode_shape(tm, s, vals)?;
                if (i as i128) < n {
                    out.push(v);
                }
            }
            Value::List(out)
        }
    })
}

fn decode_bindings(
    tm: &TypedModule,
    p: &Prepared<'_>,
    extra: &[(String, Type, Shape)],
    vals: &[Sexp],
) -> Result<Vec<Binding>, UnknownReason> {
    let mut it = vals.iter();
    let mut out = Vec::new();
    for i in &p.inputs {
        out.push(Binding {
            name: i.name.clone(),
            kind: i.kind,
            ty: i.ty.clone(),
            value: decode_shape(tm, &i.shape, &mut it)?,
        });
    }
    for (name, ty, shape) in extra {
        out.push(Binding {
            name: name.clone(),
            kind: BindingKind::CallArg,
            ty: ty.clone(),
            value: decode_shape(tm, shape, &mut it)?,
        });
    }
    Ok(out)
}

fn unknown_of(a: &Answer) -> Option<UnknownReason> {
    match a {
        Answer::Timeout => Some(UnknownReason::Timeout),
        Answer::Unknown(m) => Some(UnknownReason::Solver(m.clone())),
        _ => None,
    }
}

/// Solver-backed checks over a typed module.
#[derive(Debug, Clone, Default)]
pub struct Sundew {
    pub solver: SolverConfig,
    pub bounds: Bounds,
}

impl Sundew {
    pub fn new(solver: SolverConfig) -> Self {
        Self {
            solver,
            bounds: Bounds::default(),
        }
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Self {
        self.bounds = bounds;
        self
    }

    /// Proves a chktest for every input within bounds, or finds a
    /// counterexample that replays to the same fault.
    pub fn run_chktest(&self, tm: &TypedModule, name: &str) -> Result<ValidationResult, SundewError> {
        let target = Target::ChkTest(name.to_string());
        let p = prepare(tm, &target, self.bounds, Mode::Assume, &[])?;
        let live: Vec<&Site> = p.live_sites().collect();
        let mut terms = p.terms(&[]);
        let n_inputs = terms.len();
        terms.extend(live.iter().map(|s| s.guard.clone()));
        let answer = self.solver.check(&p.script(&p.goal()), &terms)?;
        let vals = match answer {
            Answer::Unsat => return Ok(ValidationResult::Valid),
            Answer::Sat(v) => v,
            other => return Ok(ValidationResult::Unknown(unknown_of(&other).expect("not sat or unsat"))),
        };
        let Some(site) = live
            .iter()
            .zip(&vals[n_inputs..])
            .find(|(_, v)| v.as_bool() == Some(true))
            .map(|(s, _)| SiteInfo::from_site(s))
        else {
            return Ok(ValidationResult::Unknown(UnknownReason::Solver("model selects no fault".into())));
        };
        let bindings = match decode_bindings(tm, &p, &[], &vals[..n_inputs]) {
            Ok(b) => b,
            Err(r) => return Ok(ValidationResult::Unknown(r)),
        };
        let w = Witness { target, bindings, site };
        Ok(check_replay(tm, w, ValidationResult::Counterexample))
    }

    /// Classifies every fault site reachable from `name`.
    pub fn check_function(&self, tm: &TypedModule, name: &str) -> Result<Vec<SiteReport>, SundewError> {
        let target = Target::Function(name.to_string());
        let p = prepare(tm, &target, self.bounds, Mode::Reach, &[])?;
        let terms = p.terms(&[]);
        let mut out = Vec::new();
        for s in &p.exec.sites {
            let site = SiteInfo::from_site(s);
            if s.guard == term::FALSE {
                out.push(SiteReport {
                    site,
                    verdict: Reachability::Impossible,
                });
                continue;
            }
            let verdict = match self.solver.check(&p.script(&s.guard), &terms)? {
                Answer::Unsat => Reachability::Impossible,
                Answer::Sat(vals) => match decode_bindings(tm, &p, &[], &vals) {
                    Ok(bindings) => check_replay(
                        tm,
                        Witness {
                            target: target.clone(),
                            bindings,
                            site: site.clone(),
                        },
                        Reachability::Witness,
                    ),
                    Err(r) => Reachability::Unknown(r),
                },
                other => Reachability::Unknown(unknown_of(&other).expect("not sat or unsat")),
            };
            out.push(SiteReport { site, verdict });
        }
        Ok(out)
    }

    /// Runs [`Sundew::check_function`] over every pure function.
    pub fn check_error_reachability(&self, tm: &TypedModule) -> Result<Vec<(String, Vec<SiteReport>)>, SundewError> {
        let mut out = Vec::new();
        for f in &tm.module.functions {
            if f.kind == FunctionKind::Function {
                out.push((f.name.clone(), self.check_function(tm, &f.name)?));
            }
        }
        Ok(out)
    }

    /// Checks each requires clause of `api` at its call site in `action`.
    /// Agent replies are unconstrained; `facts` are the known event log.
    pub fn check_api_call_site(
        &self,
        tm: &TypedModule,
        action: &str,
        api: &str,
        facts: &[Value],
    ) -> Result<ObligationReport, SundewError> {
        let target = Target::CallSite {
            action: action.to_string(),
            api: api.to_string(),
        };
        let p = prepare(tm, &target, self.bounds, Mode::Assume, facts)?;
        let mut missing: Vec<MissingObligation> = Vec::new();
        let mut unknown: Vec<(String, UnknownReason)> = Vec::new();
        for o in &p.exec.obligations {
            let text = &o.clause.text;
            if missing.iter().any(|m| &m.clause == text) {
                continue;
            }
            let goal = term::and(&[&o.pc, &o.clear, &term::not(&o.holds)]);
            if goal == term::FALSE {
                continue;
            }
            let terms = p.terms(&o.args);
            match self.solver.check(&p.script(&goal), &terms)? {
                Answer::Unsat => {}
                Answer::Sat(vals) => match decode_bindings(tm, &p, &o.args, &vals) {
                    Ok(witness) => missing.push(MissingObligation {
                        clause: text.clone(),
                        summary: summarize(&o.clause.expr),
                        witness,
                    }),
                    Err(r) => unknown.push((text.clone(), r)),
                },
                other => unknown.push((text.clone(), unknown_of(&other).expect("not sat or unsat"))),
            }
        }
        unknown.retain(|(c, _)| !missing.iter().any(|m| &m.clause == c));
        Ok(ObligationReport {
            api: api.to_string(),
            satisfied: missing.is_empty() && unknown.is_empty(),
            missing,
            unknown,
        })
    }
}

fn check_replay<T>(tm: &TypedModule, w: Witness, wrap: impl FnOnce(Witness) -> T) -> T
where
    T: From<UnknownReason>,
{
    match replay(tm, &w) {
        Ok(f) if f.same_site(&w.site.fault()) => wrap(w),
        Ok(f) => T::from(UnknownReason::Replay(format!("raised {f} instead of {}", w.site))),
        Err(m) => T::from(UnknownReason::Replay(m)),
    }
}

impl From<UnknownReason> for ValidationResult {
    fn from(r: UnknownReason) -> Self {
        ValidationResult::Unknown(r)
    }
}

impl From<UnknownReason> for Reachability {
    fn from(r: UnknownReason) -> Self {
        Reachability::Unknown(r)
    }
}

fn is_literal(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Lit(_) | ExprKind::AliasLit { .. })
}

/// Operand text; env reads drop their prefix and report where they live.
fn operand(e: &Expr) -> (String, bool) {
    match &e.kind {
        ExprKind::EnvRead(n) => (n.clone(), true),
        _ => (print_expr(e), false),
    }
}

fn flip(op: BinOp) -> BinOp {
    match op {
        BinOp::Lt => BinOp::Gt,
        BinOp::Le => BinOp::Ge,
        BinOp::Gt => BinOp::Lt,
        BinOp::Ge => BinOp::Le,
        other => other,
    }
}

/// Reads the negation of a clause as a short English sentence.
pub fn summarize(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Binary { op: BinOp::Or, lhs, rhs } => format!("{} and {}", summarize(lhs), summarize(rhs)),
        ExprKind::Binary { op: BinOp::And, lhs, rhs } => format!("{} or {}", summarize(lhs), summarize(rhs)),
        ExprKind::Binary { op, lhs, rhs } if op.is_compare() || matches!(op, BinOp::Eq | BinOp::Ne) => {
            let (op, l, r) = if is_literal(lhs) && !is_literal(rhs) {
                (flip(*op), rhs, lhs)
            } else {
                (*op, lhs, rhs)
            };
            let (l, _) = operand(l);
            let (r, in_env) = operand(r);
            let verb = match op {
                BinOp::Le => "may exceed",
                BinOp::Lt => "may be at least",
                BinOp::Ge => "may be below",
                BinOp::Gt => "may be at most",
                BinOp::Eq => "may differ from",
                _ => "may equal",
            };
            format!("{l} {verb} {r}{}", if in_env { " in env" } else { "" })
        }
        ExprKind::EventsContains(p) => match &p.kind {
            ExprKind::Pattern { entity, .. } | ExprKind::Construct { entity, .. } => {
                format!("no matching `{entity}` event is recorded")
            }
            _ => "no matching event is recorded".into(),
        },
        ExprKind::Unary { operand: inner, .. } => format!("{} may hold", print_expr(inner)),
        _ => format!("{} may be false", print_expr(e)),
    }
}

#[cfg(test)]
mod tests;
