//! Symbolic execution of typed declarations into SMT terms.
//!
//! Programs are loop-free and non-recursive, so every call is inlined and
//! every branch is explored. Each place the evaluator can fault becomes a
//! [`Site`] whose guard says "this fault is the first one raised".

use std::collections::{BTreeMap, BTreeSet};

use aisette_core::ast::*;
use aisette_core::eval::FaultKind;
use aisette_core::types::TypedModule;
use aisette_core::{Span, Value};

use crate::term::{self, and, and2, app, eq, implies, int, ite, not, or, symbol};
use crate::{Bounds, SundewError};

const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Sym {
    Int(String),
    Bool(String),
    Str(String),
    Unit,
    Entity(String, Vec<(String, Sym)>),
    Opt(String, Box<Sym>),
    /// Bounded list as `(present, element)` pairs. `prefix` lists have all
    /// present elements before all absent ones.
    List { items: Vec<(String, Sym)>, prefix: bool },
    /// Value of an expression that always faults.
    Bottom,
}

impl Sym {
    fn scalar(&self) -> Option<&str> {
        match self {
            Sym::Int(t) | Sym::Bool(t) | Sym::Str(t) => Some(t),
            _ => None,
        }
    }
}

/// How an input is laid out in solver symbols, for reading models back.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Leaf { term: String, ty: Type },
    Alias { name: String, inner: Box<Shape> },
    Entity { name: String, fields: Vec<(String, Shape)> },
    Opt { some: String, val: Box<Shape> },
    List { len: String, items: Vec<Shape> },
    Unit,
}

impl Shape {
    /// Every term whose model value is needed to rebuild the input.
    pub fn terms(&self, out: &mut Vec<String>) {
        match self {
            Shape::Leaf { term, .. } => out.push(term.clone()),
            Shape::Alias { inner, .. } => inner.terms(out),
            Shape::Entity { fields, .. } => fields.iter().for_each(|(_, s)| s.terms(out)),
            Shape::Opt { some, val } => {
                out.push(some.clone());
                val.terms(out);
            }
            Shape::List { len, items } => {
                out.push(len.clone());
                items.iter().for_each(|s| s.terms(out));
            }
            Shape::Unit => {}
        }
    }
}

/// Where a declared solver symbol came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolInfo {
    pub source: String,
    pub sort: String,
    pub span: Option<Span>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub kind: FaultKind,
    pub span: Span,
    pub clause: Option<String>,
    pub owner: String,
    pub message: String,
    /// Name of the `Bool` definition that holds iff this is the first fault.
    pub guard: String,
}

#[derive(Debug, Clone)]
pub(crate) struct Obligation {
    pub clause: Clause,
    pub pc: String,
    pub clear: String,
    pub holds: String,
    pub args: Vec<(String, Type, Shape)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Unfilled holes fault, as they do in a plain evaluator run.
    Reach,
    /// Holes are trusted to meet their contracts.
    Assume,
}

struct Ctx {
    owner: String,
    env: BTreeMap<String, Sym>,
    dollars: Vec<(String, Sym)>,
    result: Option<Sym>,
}

impl Ctx {
    fn new(owner: &str) -> Self {
        Self {
            owner: owner.to_string(),
            env: BTreeMap::new(),
            dollars: Vec::new(),
            result: None,
        }
    }
}

struct St {
    pc: String,
    vars: Vec<(String, Sym)>,
}

pub(crate) struct Exec<'m> {
    tm: &'m TypedModule,
    bounds: Bounds,
    mode: Mode,
    /// Declarations and definitions in dependency order.
    pub items: Vec<String>,
    pub assumes: Vec<String>,
    pub symbols: BTreeMap<String, SymbolInfo>,
    pub sites: Vec<Site>,
    pub obligations: Vec<Obligation>,
    /// Inputs the solver chooses besides parameters: env, agent replies.
    pub inputs: Vec<(String, Type, Shape)>,
    pub target_api: Option<String>,
    pub facts: Vec<Value>,
    pub hole_used: bool,
    clear: String,
    funs: BTreeMap<String, Option<String>>,
    holes: BTreeSet<String>,
    fresh: usize,
    naming: bool,
    record: bool,
    depth: usize,
    agent_label: Option<String>,
    agents_seen: usize,
    apis_seen: usize,
}

fn unsupported(what: impl Into<String>, span: Span) -> SundewError {
    SundewError::Unsupported {
        what: what.into(),
        span,
    }
}

pub(crate) fn merge(c: &str, a: Sym, b: Sym) -> Sym {
    match (a, b) {
        (Sym::Bottom, x) | (x, Sym::Bottom) => x,
        (Sym::Int(x), Sym::Int(y)) => Sym::Int(ite(c, &x, &y)),
        (Sym::Bool(x), Sym::Bool(y)) => Sym::Bool(ite(c, &x, &y)),
        (Sym::Str(x), Sym::Str(y)) => Sym::Str(ite(c, &x, &y)),
        (Sym::Entity(n, fa), Sym::Entity(_, fb)) => Sym::Entity(
            n,
            fa.into_iter()
                .zip(fb)
                .map(|((f, x), (_, y))| (f, merge(c, x, y)))
                .collect(),
        ),
        (Sym::Opt(sa, va), Sym::Opt(sb, vb)) => Sym::Opt(ite(c, &sa, &sb), Box::new(merge(c, *va, *vb))),
        (Sym::List { items: a, prefix: pa }, Sym::List { items: b, prefix: pb }) => {
            let n = a.len().max(b.len());
            let pad = |mut v: Vec<(String, Sym)>| {
                v.resize(n, (term::FALSE.to_string(), Sym::Bottom));
                v
            };
            Sym::List {
                items: pad(a)
                    .into_iter()
                    .zip(pad(b))
                    .map(|((p, x), (q, y))| (ite(c, &p, &q), merge(c, x, y)))
                    .collect(),
                prefix: pa && pb,
            }
        }
        (x, _) => x,
    }
}

pub(crate) fn sym_eq(a: &Sym, b: &Sym, span: Span) -> Result<String, SundewError> {
    Ok(match (a, b) {
        (Sym::Bottom, _) | (_, Sym::Bottom) | (Sym::Unit, Sym::Unit) => term::TRUE.into(),
        (Sym::Int(x), Sym::Int(y)) | (Sym::Bool(x), Sym::Bool(y)) | (Sym::Str(x), Sym::Str(y)) => eq(x, y),
        (Sym::Entity(_, fa), Sym::Entity(_, fb)) => {
            let parts = fa
                .iter()
                .zip(fb)
                .map(|((_, x), (_, y))| sym_eq(x, y, span))
                .collect::<Result<Vec<_>, _>>()?;
            and(&parts.iter().map(String::as_str).collect::<Vec<_>>())
        }
        (Sym::Opt(sa, va), Sym::Opt(sb, vb)) => {
            let both_none = and2(&not(sa), &not(sb));
            let inner = sym_eq(va, vb, span)?;
            or(&[&both_none, &and(&[sa, sb, &inner])])
        }
        (Sym::List { items: a, prefix: true }, Sym::List { items: b, prefix: true }) => {
            let n = a.len().max(b.len());
            let absent = (term::FALSE.to_string(), Sym::Bottom);
            let mut parts = Vec::new();
            for i in 0..n {
                let (p, x) = a.get(i).unwrap_or(&absent);
                let (q, y) = b.get(i).unwrap_or(&absent);
                parts.push(and2(&eq(p, q), &implies(p, &sym_eq(x, y, span)?)));
            }
            and(&parts.iter().map(String::as_str).collect::<Vec<_>>())
        }
        (Sym::List { .. }, Sym::List { .. }) => return Err(unsupported("equality on filtered lists", span)),
        _ => return Err(unsupported("equality between values of different shapes", span)),
    })
}

/// Constant symbolic value for a concrete one.
pub(crate) fn const_sym(v: &Value) -> Sym {
    match v {
        Value::Unit => Sym::Unit,
        Value::Bool(b) => Sym::Bool(b.to_string()),
        Value::Int(i) => Sym::Int(int(*i)),
        Value::Decimal(d) => Sym::Int(int(d.scaled())),
        Value::CString(s) | Value::String(s) => Sym::Str(term::string(s)),
        Value::Alias { inner, .. } => const_sym(inner),
        Value::Entity { name, fields } => {
            Sym::Entity(name.clone(), fields.iter().map(|(f, x)| (f.clone(), const_sym(x))).collect())
        }
        Value::List(items) => Sym::List {
            items: items.iter().map(|x| (term::TRUE.to_string(), const_sym(x))).collect(),
            prefix: true,
        },
        Value::Option(None) => Sym::Opt(term::FALSE.into(), Box::new(Sym::Bottom)),
        Value::Option(Some(x)) => Sym::Opt(term::TRUE.into(), Box::new(const_sym(x))),
    }
}

fn sort_of(base: &Type) -> Option<&'static str> {
    match base {
        Type::Int | Type::Decimal => Some("Int"),
        Type::Bool => Some("Bool"),
        Type::CString | Type::String => Some("String"),
        _ => None,
    }
}

fn leaf_sym(base: &Type, t: String) -> Sym {
    match base {
        Type::Bool => Sym::Bool(t),
        Type::CString | Type::String => Sym::Str(t),
        _ => Sym::Int(t),
    }
}

impl<'m> Exec<'m> {
    pub fn new(tm: &'m TypedModule, bounds: Bounds, mode: Mode) -> Self {
        Self {
            tm,
            bounds,
            mode,
            items: Vec::new(),
            assumes: Vec::new(),
            symbols: BTreeMap::new(),
            sites: Vec::new(),
            obligations: Vec::new(),
            inputs: Vec::new(),
            target_api: None,
            facts: Vec::new(),
            hole_used: false,
            clear: term::TRUE.into(),
            funs: BTreeMap::new(),
            holes: BTreeSet::new(),
            fresh: 0,
            naming: true,
            record: true,
            depth: 0,
            agent_label: None,
            agents_seen: 0,
            apis_seen: 0,
        }
    }

    fn declare(&mut self, name: &str, sort: &str, source: &str, span: Option<Span>) -> String {
        let s = symbol(name);
        self.items.push(format!("(declare-const {s} {sort})"));
        self.symbols.insert(
            s.clone(),
            SymbolInfo {
                source: source.to_string(),
                sort: sort.to_string(),
                span,
            },
        );
        s
    }

    fn define(&mut self, prefix: &str, sort: &str, body: &str) -> String {
        let s = symbol(&format!("{prefix}.{}", self.fresh));
        self.fresh += 1;
        self.items.push(format!("(define-fun {s} () {sort} {body})"));
        s
    }

    fn name_bool(&mut self, t: String) -> String {
        if self.naming && t.contains('(') {
            self.define("c", "Bool", &t)
        } else {
            t
        }
    }

    fn name_sym(&mut self, s: Sym) -> Sym {
        if !self.naming {
            return s;
        }
        match s {
            Sym::Int(t) if t.contains('(') && !t.starts_with("(- ") => Sym::Int(self.define("v", "Int", &t)),
            Sym::Bool(t) if t.contains('(') => Sym::Bool(self.define("v", "Bool", &t)),
            Sym::Str(t) if t.contains('(') => Sym::Str(self.define("v", "String", &t)),
            Sym::Entity(n, fs) => Sym::Entity(n, fs.into_iter().map(|(f, x)| (f, self.name_sym(x))).collect()),
            Sym::Opt(s, v) => {
                let s = self.name_bool(s);
                Sym::Opt(s, Box::new(self.name_sym(*v)))
            }
            Sym::List { items, prefix } => Sym::List {
                items: items
                    .into_iter()
                    .map(|(p, x)| (self.name_bool(p), self.name_sym(x)))
                    .collect(),
                prefix,
            },
            other => other,
        }
    }

    /// Assumptions made while building a `define-fun` body would mention its
    /// bound variables, so they are dropped there.
    fn assume(&mut self, t: String) {
        if self.record {
            self.assumes.push(t);
        }
    }

    fn site(&mut self, kind: FaultKind, span: Span, clause: Option<&str>, owner: &str, pc: &str, viol: &str, message: String) {
        if !self.record {
            return;
        }
        let raw = and2(pc, viol);
        if raw == term::FALSE {
            self.sites.push(Site {
                kind,
                span,
                clause: clause.map(str::to_string),
                owner: owner.to_string(),
                message,
                guard: term::FALSE.into(),
            });
            return;
        }
        let fault = self.define("fault", "Bool", &raw);
        let guard = self.define("first", "Bool", &and2(&fault, &self.clear.clone()));
        self.clear = self.define("clear", "Bool", &and2(&self.clear.clone(), &not(&fault)));
        self.sites.push(Site {
            kind,
            span,
            clause: clause.map(str::to_string),
            owner: owner.to_string(),
            message,
            guard,
        });
    }

    /// Declares solver symbols for an input of type `ty` named `path`, with
    /// its domain constraints as assumptions.
    pub fn input(&mut self, path: &str, ty: &Type, span: Option<Span>) -> Result<(Sym, Shape), SundewError> {
        let sp = span.unwrap_or_default();
        match ty {
            Type::None => Ok((Sym::Unit, Shape::Unit)),
            Type::Never => Err(unsupported("input of type Never", sp)),
            Type::Int | Type::Decimal | Type::Bool | Type::CString | Type::String => {
                let sort = sort_of(ty).expect("primitive");
                let s = self.declare(path, sort, path, span);
                match ty {
                    Type::Int | Type::Decimal => self.assumes.push(term::in_int_range(&s)),
                    Type::CString => {
                        self.assumes.push(app("<=", &[&app("str.len", &[&s]), &self.bounds.string_len.to_string()]));
                        self.assumes
                            .push(app("str.in_re", &[&s, "(re.* (re.range \" \" \"~\"))"]));
                    }
                    Type::String => {
                        self.assumes.push(app("<=", &[&app("str.len", &[&s]), &self.bounds.string_len.to_string()]));
                    }
                    _ => {}
                }
                Ok((leaf_sym(ty, s.clone()), Shape::Leaf { term: s, ty: ty.clone() }))
            }
            Type::Named(n) => {
                if let Some(a) = self.tm.alias(n) {
                    let base = a.base.clone();
                    let (sym, shape) = self.input(path, &base, span)?;
                    if let (Some(re), Some(t)) = (self.tm.alias_regex(n), sym.scalar()) {
                        self.assumes.push(app("str.in_re", &[t, &re.to_smt()]));
                    }
                    return Ok((
                        sym,
                        Shape::Alias {
                            name: n.clone(),
                            inner: Box::new(shape),
                        },
                    ));
                }
                let decl = self
                    .tm
                    .entity(n)
                    .ok_or_else(|| unsupported(format!("unknown type `{n}`"), sp))?;
                let mut syms = Vec::new();
                let mut shapes = Vec::new();
                for f in &decl.fields {
                    let (s, sh) = self.input(&format!("{path}.{}", f.name), &f.ty, span)?;
                    syms.push((f.name.clone(), s));
                    shapes.push((f.name.clone(), sh));
                }
                self.assume_invariants(n, &syms)?;
                Ok((
                    Sym::Entity(n.clone(), syms),
                    Shape::Entity {
                        name: n.clone(),
                        fields: shapes,
                    },
                ))
            }
            Type::Option(inner) => {
                let some = self.declare(&format!("{path}.some"), "Bool", path, span);
                let (v, sh) = self.input(&format!("{path}.val"), inner, span)?;
                Ok((
                    Sym::Opt(some.clone(), Box::new(v)),
                    Shape::Opt {
                        some,
                        val: Box::new(sh),
                    },
                ))
            }
            Type::List(elem) => {
                let len = self.declare(&format!("{path}.len"), "Int", path, span);
                self.assumes.push(and2(
                    &app(">=", &[&len, "0"]),
                    &app("<=", &[&len, &self.bounds.list_len.to_string()]),
                ));
                let mut items = Vec::new();
                let mut shapes = Vec::new();
                for i in 0..self.bounds.list_len {
                    let (s, sh) = self.input(&format!("{path}.{i}"), elem, span)?;
                    items.push((app(">", &[&len, &i.to_string()]), s));
                    shapes.push(sh);
                }
                Ok((Sym::List { items, prefix: true }, Shape::List { len, items: shapes }))
            }
        }
    }

    /// Shape for reading back an arbitrary symbolic value of type `ty`.
    pub fn shape_of(&self, sym: &Sym, ty: &Type) -> Option<Shape> {
        match (ty, sym) {
            (Type::Named(n), _) if self.tm.alias(n).is_some() => {
                let base = self.tm.alias(n)?.base.clone();
                Some(Shape::Alias {
                    name: n.clone(),
                    inner: Box::new(self.shape_of(sym, &base)?),
                })
            }
            (Type::Named(_), Sym::Entity(n, fields)) => {
                let decl = self.tm.entity(n)?;
                let mut out = Vec::new();
                for (d, (f, s)) in decl.fields.iter().zip(fields) {
                    out.push((f.clone(), self.shape_of(s, &d.ty)?));
                }
                Some(Shape::Entity {
                    name: n.clone(),
                    fields: out,
                })
            }
            (Type::Option(inner), Sym::Opt(s, v)) => Some(Shape::Opt {
                some: s.clone(),
                val: Box::new(match v.as_ref() {
                    Sym::Bottom => Shape::Unit,
                    v => self.shape_of(v, inner)?,
                }),
            }),
            (Type::None, _) => Some(Shape::Unit),
            (t, s) if t.is_primitive() => Some(Shape::Leaf {
                term: s.scalar()?.to_string(),
                ty: t.clone(),
            }),
            _ => None,
        }
    }

    fn assume_invariants(&mut self, entity: &str, fields: &[(String, Sym)]) -> Result<(), SundewError> {
        let decl = match self.tm.entity(entity) {
            Some(d) if !d.invariants.is_empty() => d,
            _ => return Ok(()),
        };
        let mut cx = Ctx::new(entity);
        cx.dollars = fields.to_vec();
        let saved = (self.record, self.naming);
        self.record = false;
        self.naming = false;
        let mut out = Vec::new();
        for c in &decl.invariants {
            let r = self.eval(&mut cx, &mut Vec::new(), &c.expr, term::TRUE);
            match r {
                Ok(Sym::Bool(t)) => out.push(t),
                Ok(_) => {}
                Err(e) => {
                    (self.record, self.naming) = saved;
                    return Err(e);
                }
            }
        }
        (self.record, self.naming) = saved;
        self.assumes.extend(out);
        Ok(())
    }

    fn bool_of(&self, s: Sym, span: Span) -> Result<String, SundewError> {
        match s {
            Sym::Bool(t) => Ok(t),
            Sym::Bottom => Ok(term::TRUE.into()),
            _ => Err(unsupported("non-boolean condition", span)),
        }
    }

    /// Runs a function or action body with `args` under `pc`.
    pub fn call(
        &mut self,
        f: &FunctionDecl,
        args: Vec<Sym>,
        env: BTreeMap<String, Sym>,
        pc: &str,
    ) -> Result<Sym, SundewError> {
        if self.depth >= MAX_DEPTH {
            return Err(unsupported("call nesting too deep", f.span));
        }
        self.depth += 1;
        let r = self.call_inner(f, args, env, pc);
        self.depth -= 1;
        r
    }

    fn call_inner(
        &mut self,
        f: &FunctionDecl,
        args: Vec<Sym>,
        env: BTreeMap<String, Sym>,
        pc: &str,
    ) -> Result<Sym, SundewError> {
        let mut cx = Ctx::new(&f.name);
        cx.env = env;
        let params: Vec<(String, Sym)> = f.params.iter().map(|p| p.name.clone()).zip(args).collect();
        let mut vars = params.clone();
        for c in &f.requires {
            let v = self.eval(&mut cx, &mut vars, &c.expr, pc)?;
            let v = self.bool_of(v, c.expr.span)?;
            let msg = format!("precondition failed: {}", c.text);
            self.site(FaultKind::Precondition, c.expr.span, Some(&c.text), &f.name, pc, &not(&v), msg);
        }
        let (result, trusted) = match &f.body {
            Body::Block(b) => {
                let mut rets = Vec::new();
                let st = St {
                    pc: pc.to_string(),
                    vars,
                };
                if let Some(end) = self.exec_block(&mut cx, st, b, &mut rets)? {
                    rets.push((end.pc, Sym::Unit));
                }
                (fold_returns(rets), false)
            }
            Body::Hole(h) => {
                let args: Vec<Sym> = params.iter().map(|(_, s)| s.clone()).collect();
                (self.hole(&cx.owner, h, &f.ret, args, pc, f.span)?, true)
            }
        };
        let result = self.name_sym(result);
        cx.result = Some(result.clone());
        for c in &f.ensures {
            let v = self.eval(&mut cx, &mut params.clone(), &c.expr, pc)?;
            let v = self.bool_of(v, c.expr.span)?;
            if trusted && self.mode == Mode::Assume {
                self.assume(implies(pc, &v));
            } else {
                let msg = format!("postcondition failed: {}", c.text);
                self.site(FaultKind::Postcondition, c.expr.span, Some(&c.text), &f.name, pc, &not(&v), msg);
            }
        }
        if !trusted && f.kind == FunctionKind::Function {
            if let Some(name) = self.fun_def(f) {
                let terms: Vec<String> = params.iter().filter_map(|(_, s)| s.scalar().map(str::to_string)).collect();
                if terms.len() == params.len() {
                    let t = if terms.is_empty() {
                        name
                    } else {
                        app(&name, &terms.iter().map(String::as_str).collect::<Vec<_>>())
                    };
                    let base = self.tm.base_type(&f.ret);
                    return Ok(leaf_sym(&base, t));
                }
            }
        }
        Ok(result)
    }

    /// `define-fun` for a function over scalar types, if it has one.
    pub fn fun_def(&mut self, f: &FunctionDecl) -> Option<String> {
        if let Some(c) = self.funs.get(&f.name) {
            return c.clone();
        }
        let scalar = |t: &Type| sort_of(&self.tm.base_type(t));
        let Body::Block(b) = &f.body else {
            self.funs.insert(f.name.clone(), None);
            return None;
        };
        let mut sig = Vec::new();
        for p in &f.params {
            sig.push((p.name.clone(), scalar(&p.ty)?, self.tm.base_type(&p.ty)));
        }
        let ret = scalar(&f.ret)?;
        let saved = (self.record, self.naming, self.hole_used);
        self.record = false;
        self.naming = false;
        self.hole_used = false;
        let mut cx = Ctx::new(&f.name);
        let vars: Vec<(String, Sym)> = sig.iter().map(|(n, _, t)| (n.clone(), leaf_sym(t, symbol(n)))).collect();
        let mut rets = Vec::new();
        let r = self.exec_block(
            &mut cx,
            St {
                pc: term::TRUE.into(),
                vars,
            },
            b,
            &mut rets,
        );
        let used_hole = self.hole_used;
        (self.record, self.naming, self.hole_used) = saved;
        let name = match (r, used_hole, fold_returns(rets).scalar()) {
            (Ok(_), false, Some(body)) => {
                let s = symbol(&f.name);
                let params: Vec<String> = sig.iter().map(|(n, sort, _)| format!("({} {sort})", symbol(n))).collect();
                self.items
                    .push(format!("(define-fun {s} ({}) {ret} {body})", params.join(" ")));
                Some(s)
            }
            _ => None,
        };
        self.funs.insert(f.name.clone(), name.clone());
        name
    }

    fn hole(&mut self, owner: &str, h: &HoleExpr, ty: &Type, args: Vec<Sym>, pc: &str, span: Span) -> Result<Sym, SundewError> {
        self.hole_used = true;
        if self.mode == Mode::Reach {
            self.site(
                FaultKind::UnfilledHole,
                span,
                None,
                owner,
                pc,
                term::TRUE,
                format!("hole `{}` is unfilled", h.id),
            );
        }
        let base = self.tm.base_type(ty);
        let ret = sort_of(&base).ok_or_else(|| unsupported(format!("hole of type `{ty}`"), span))?;
        let mut sorts = Vec::new();
        let mut terms = Vec::new();
        for a in &args {
            let t = a.scalar().ok_or_else(|| unsupported("hole over a non-scalar variable", span))?;
            sorts.push(match a {
                Sym::Int(_) => "Int",
                Sym::Bool(_) => "Bool",
                _ => "String",
            });
            terms.push(t.to_string());
        }
        let name = symbol(&format!("hole.{}", h.id));
        if self.holes.insert(name.clone()) {
            self.items
                .push(format!("(declare-fun {name} ({}) {ret})", sorts.join(" ")));
            self.symbols.insert(
                name.clone(),
                SymbolInfo {
                    source: format!("hole {}", h.id),
                    sort: ret.into(),
                    span: Some(span),
                },
            );
        }
        let t = if terms.is_empty() {
            name
        } else {
            app(&name, &terms.iter().map(String::as_str).collect::<Vec<_>>())
        };
        if matches!(base, Type::Int | Type::Decimal) {
            self.assume(term::in_int_range(&t));
        }
        Ok(leaf_sym(&base, t))
    }

    fn exec_block(
        &mut self,
        cx: &mut Ctx,
        mut st: St,
        b: &Block,
        rets: &mut Vec<(String, Sym)>,
    ) -> Result<Option<St>, SundewError> {
        let mark = st.vars.len();
        for s in b {
            match &s.kind {
                StmtKind::VarDecl { name, init, .. } => {
                    if matches!(init.kind, ExprKind::AgentCall { .. }) {
                        self.agent_label = Some(name.clone());
                    }
                    let v = self.eval(cx, &mut st.vars, init, &st.pc.clone())?;
                    let v = self.name_sym(v);
                    st.vars.push((name.clone(), v));
                }
                StmtKind::Assign { name, value } => {
                    let v = self.eval(cx, &mut st.vars, value, &st.pc.clone())?;
                    let v = self.name_sym(v);
                    match st.vars.iter_mut().rev().find(|(n, _)| n == name) {
                        Some(slot) => slot.1 = v,
                        None => return Err(unsupported(format!("assignment to unbound `{name}`"), s.span)),
                    }
                }
                StmtKind::If { cond, then, els } => {
                    let c = self.eval(cx, &mut st.vars, cond, &st.pc.clone())?;
                    let c = self.bool_of(c, cond.span)?;
                    let c = self.name_bool(c);
                    let tpc = self.name_bool(and2(&st.pc, &c));
                    let epc = self.name_bool(and2(&st.pc, &not(&c)));
                    let t = self.exec_block(
                        cx,
                        St {
                            pc: tpc.clone(),
                            vars: st.vars.clone(),
                        },
                        then,
                        rets,
                    )?;
                    let e = match els {
                        Some(eb) => self.exec_block(
                            cx,
                            St {
                                pc: epc.clone(),
                                vars: st.vars.clone(),
                            },
                            eb,
                            rets,
                        )?,
                        None => Some(St {
                            pc: epc.clone(),
                            vars: st.vars.clone(),
                        }),
                    };
                    st = match (t, e) {
                        (None, None) => return Ok(None),
                        (Some(t), None) => t,
                        (None, Some(e)) => e,
                        (Some(t), Some(e)) => {
                            let (sel, pc) = if t.pc == tpc && e.pc == epc {
                                (c.clone(), st.pc.clone())
                            } else {
                                let pc = self.name_bool(or(&[&t.pc, &e.pc]));
                                (t.pc.clone(), pc)
                            };
                            let mut vars = Vec::with_capacity(t.vars.len());
                            for ((n, a), (_, b)) in t.vars.into_iter().zip(e.vars) {
                                let m = merge(&sel, a, b);
                                vars.push((n, self.name_sym(m)));
                            }
                            St { pc, vars }
                        }
                    };
                }
                StmtKind::Return(e) => {
                    let v = match e {
                        Some(e) => self.eval(cx, &mut st.vars, e, &st.pc.clone())?,
                        None => Sym::Unit,
                    };
                    if v != Sym::Bottom {
                        rets.push((st.pc.clone(), v));
                    }
                    return Ok(None);
                }
                StmtKind::Assert(c) => {
                    let v = self.eval(cx, &mut st.vars, &c.expr, &st.pc.clone())?;
                    let v = self.bool_of(v, c.expr.span)?;
                    let msg = format!("assertion failed: {}", c.text);
                    let owner = cx.owner.clone();
                    self.site(FaultKind::Assertion, c.expr.span, Some(&c.text), &owner, &st.pc.clone(), &not(&v), msg);
                }
                StmtKind::Expr(e) => {
                    self.eval(cx, &mut st.vars, e, &st.pc.clone())?;
                    if matches!(e.kind, ExprKind::Fail(_)) {
                        return Ok(None);
                    }
                }
            }
        }
        st.vars.truncate(mark);
        Ok(Some(st))
    }

    fn env_arg(&mut self, cx: &mut Ctx, vars: &mut Vec<(String, Sym)>, e: &EnvArg, pc: &str) -> Result<BTreeMap<String, Sym>, SundewError> {
        Ok(match e {
            EnvArg::Empty => BTreeMap::new(),
            EnvArg::Spread => cx.env.clone(),
            EnvArg::Bindings(bs) => {
                let mut out = BTreeMap::new();
                for (n, x) in bs {
                    let v = self.eval(cx, vars, x, pc)?;
                    out.insert(n.clone(), v);
                }
                out
            }
        })
    }

    fn is_decimal(&self, e: &Expr) -> bool {
        e.ty.as_ref().is_some_and(|t| self.tm.base_type(t) == Type::Decimal)
    }

    fn eval(&mut self, cx: &mut Ctx, vars: &mut Vec<(String, Sym)>, e: &Expr, pc: &str) -> Result<Sym, SundewError> {
        let span = e.span;
        match &e.kind {
            ExprKind::Lit(l) | ExprKind::AliasLit { lit: l, .. } => Ok(match l {
                Literal::Int(i) => Sym::Int(int(*i)),
                Literal::Decimal(d) => Sym::Int(int(d.scaled())),
                Literal::Bool(b) => Sym::Bool(b.to_string()),
                Literal::CString(s) | Literal::String(s) => Sym::Str(term::string(s)),
                Literal::None => Sym::Opt(term::FALSE.into(), Box::new(Sym::Bottom)),
            }),
            ExprKind::Var { name, unwrap } => {
                let v = vars
                    .iter()
                    .rev()
                    .find(|(n, _)| n == name)
                    .map(|(_, v)| v.clone())
                    .ok_or_else(|| unsupported(format!("unbound variable `{name}`"), span))?;
                match (unwrap, v) {
                    (true, Sym::Opt(_, inner)) => Ok(*inner),
                    (_, v) => Ok(v),
                }
            }
            ExprKind::Dollar(name) => {
                let v = if name == "result" {
                    cx.result.clone()
                } else {
                    cx.dollars.iter().find(|(n, _)| n == name).map(|(_, v)| v.clone())
                };
                v.ok_or_else(|| unsupported(format!("`${name}` outside its clause"), span))
            }
            ExprKind::EnvRead(name) => match cx.env.get(name) {
                Some(v) => Ok(v.clone()),
                None => {
                    let owner = cx.owner.clone();
                    self.site(
                        FaultKind::EnvMissing,
                        span,
                        None,
                        &owner,
                        pc,
                        term::TRUE,
                        format!("environment has no binding for `{name}`"),
                    );
                    Ok(Sym::Bottom)
                }
            },
            ExprKind::Unary { op, operand } => {
                let v = self.eval(cx, vars, operand, pc)?;
                match (op, v) {
                    (UnOp::Not, Sym::Bool(t)) => Ok(Sym::Bool(not(&t))),
                    (UnOp::Neg, Sym::Int(t)) => {
                        let r = app("-", &[&t]);
                        let owner = cx.owner.clone();
                        self.site(
                            FaultKind::Overflow,
                            span,
                            None,
                            &owner,
                            pc,
                            &term::out_of_int_range(&r),
                            "overflow in negation".into(),
                        );
                        Ok(Sym::Int(r))
                    }
                    (_, Sym::Bottom) => Ok(Sym::Bottom),
                    _ => Err(unsupported("bad unary operand", span)),
                }
            }
            ExprKind::Binary { op, lhs, rhs } => self.binary(cx, vars, *op, lhs, rhs, pc, span),
            ExprKind::If { cond, then, els } => {
                let c = self.eval(cx, vars, cond, pc)?;
                let c = self.bool_of(c, cond.span)?;
                let c = self.name_bool(c);
                let tpc = and2(pc, &c);
                let epc = and2(pc, &not(&c));
                let t = self.eval(cx, vars, then, &tpc)?;
                let f = self.eval(cx, vars, els, &epc)?;
                Ok(merge(&c, t, f))
            }
            ExprKind::Field { base, name } => match self.eval(cx, vars, base, pc)? {
                Sym::Entity(_, fs) => fs
                    .into_iter()
                    .find(|(f, _)| f == name)
                    .map(|(_, v)| v)
                    .ok_or_else(|| unsupported(format!("no field `{name}`"), span)),
                Sym::Bottom => Ok(Sym::Bottom),
                _ => Err(unsupported("field access on a non-entity", span)),
            },
            ExprKind::Call { name, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(cx, vars, a, pc)?);
                }
                let tm = self.tm;
                let f = tm
                    .function(name)
                    .ok_or_else(|| unsupported(format!("unknown function `{name}`"), span))?;
                let env: BTreeMap<String, Sym> = cx
                    .env
                    .iter()
                    .filter(|(k, _)| f.env.iter().any(|d| &d.name == *k))
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                self.call(f, vals, env, pc)
            }
            ExprKind::Construct { entity, args } => {
                let tm = self.tm;
                let decl = tm
                    .entity(entity)
                    .ok_or_else(|| unsupported(format!("unknown entity `{entity}`"), span))?;
                let fields: Vec<(String, Sym)> = match args {
                    CtorArgs::Named(given) => {
                        let mut vals = Vec::new();
                        for (n, x) in given {
                            vals.push((n.clone(), self.eval(cx, vars, x, pc)?));
                        }
                        decl.fields
                            .iter()
                            .map(|d| {
                                let v = vals.iter().find(|(n, _)| *n == d.name).map(|(_, v)| v.clone());
                                (d.name.clone(), v.unwrap_or(Sym::Bottom))
                            })
                            .collect()
                    }
                    CtorArgs::Positional(items) => {
                        let mut out = Vec::new();
                        for (d, x) in decl.fields.iter().zip(items) {
                            out.push((d.name.clone(), self.eval(cx, vars, x, pc)?));
                        }
                        out
                    }
                };
                if !decl.invariants.is_empty() {
                    let mut icx = Ctx::new(entity);
                    icx.dollars = fields.clone();
                    for c in &decl.invariants {
                        let v = self.eval(&mut icx, &mut Vec::new(), &c.expr, pc)?;
                        let v = self.bool_of(v, c.expr.span)?;
                        let msg = format!("invariant violated: {}", c.text);
                        self.site(FaultKind::Invariant, c.expr.span, Some(&c.text), entity, pc, &not(&v), msg);
                    }
                }
                Ok(Sym::Entity(entity.clone(), fields))
            }
            ExprKind::Pattern { .. } | ExprKind::EnvRecord(_) => Err(unsupported("pattern used as a value", span)),
            ExprKind::ListLit { items, .. } => {
                let mut out = Vec::new();
                for i in items {
                    out.push((term::TRUE.to_string(), self.eval(cx, vars, i, pc)?));
                }
                Ok(Sym::List {
                    items: out,
                    prefix: true,
                })
            }
            ExprKind::Some(inner) => Ok(Sym::Opt(term::TRUE.into(), Box::new(self.eval(cx, vars, inner, pc)?))),
            ExprKind::Collection {
                op,
                receiver,
                lambda,
                ..
            } => self.collection(cx, vars, *op, receiver, lambda.as_ref(), pc, span),
            ExprKind::ApiCall { api, env, args } => self.api_call(cx, vars, api, env, args, pc, span),
            ExprKind::AgentCall {
                agent,
                shape,
                env,
                args,
            } => {
                let env = self.env_arg(cx, vars, env, pc)?;
                for a in args {
                    self.eval(cx, vars, a, pc)?;
                }
                let tm = self.tm;
                if let Some(decl) = tm.agent(agent) {
                    for d in &decl.env {
                        if !env.contains_key(&d.name) {
                            let owner = cx.owner.clone();
                            self.site(
                                FaultKind::EnvMissing,
                                span,
                                None,
                                &owner,
                                pc,
                                term::TRUE,
                                format!("environment has no binding for `{}`", d.name),
                            );
                        }
                    }
                }
                self.agents_seen += 1;
                let label = self
                    .agent_label
                    .take()
                    .unwrap_or_else(|| format!("{agent}#{}", self.agents_seen));
                let (sym, sh) = self.input(&format!("agent.{}", self.agents_seen), shape, Some(span))?;
                self.inputs.push((label, shape.clone(), sh));
                Ok(sym)
            }
            ExprKind::EventsContains(pat) => {
                let (entity, fields) = match &pat.kind {
                    ExprKind::Pattern { entity, fields } => {
                        let mut out = Vec::new();
                        for (n, x) in fields {
                            out.push((n.clone(), self.eval(cx, vars, x, pc)?));
                        }
                        (entity.clone(), out)
                    }
                    ExprKind::Construct { entity, .. } => match self.eval(cx, vars, pat, pc)? {
                        Sym::Entity(_, fs) => (entity.clone(), fs),
                        _ => return Err(unsupported("event pattern", span)),
                    },
                    _ => return Err(unsupported("event pattern", span)),
                };
                let mut alts = Vec::new();
                for fact in self.facts.clone() {
                    let Value::Entity { name, .. } = &fact else { continue };
                    if *name != entity {
                        continue;
                    }
                    let mut parts = Vec::new();
                    for (f, s) in &fields {
                        match fact.field(f) {
                            Some(v) => parts.push(sym_eq(s, &const_sym(v), span)?),
                            None => parts.push(term::FALSE.into()),
                        }
                    }
                    alts.push(and(&parts.iter().map(String::as_str).collect::<Vec<_>>()));
                }
                Ok(Sym::Bool(or(&alts.iter().map(String::as_str).collect::<Vec<_>>())))
            }
            ExprKind::Hole(h) => {
                let args: Vec<Sym> = h
                    .scope
                    .iter()
                    .map(|(n, t)| {
                        let v = vars.iter().rev().find(|(m, _)| m == n).map(|(_, v)| v.clone());
                        match (t, v) {
                            (Type::Option(_), Some(v)) => v,
                            (_, Some(Sym::Opt(_, inner))) => *inner,
                            (_, Some(v)) => v,
                            (_, None) => Sym::Bottom,
                        }
                    })
                    .collect();
                let ty = h.ty.clone().or_else(|| e.ty.clone()).unwrap_or(Type::Never);
                let owner = cx.owner.clone();
                self.hole(&owner, h, &ty, args, pc, span)
            }
            ExprKind::Fail(msg) => {
                self.eval(cx, vars, msg, pc)?;
                let text = match &msg.kind {
                    ExprKind::Lit(Literal::String(s) | Literal::CString(s)) => s.clone(),
                    _ => "fail".into(),
                };
                let owner = cx.owner.clone();
                self.site(FaultKind::User, span, None, &owner, pc, term::TRUE, text);
                Ok(Sym::Bottom)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn binary(
        &mut self,
        cx: &mut Ctx,
        vars: &mut Vec<(String, Sym)>,
        op: BinOp,
        lhs: &Expr,
        rhs: &Expr,
        pc: &str,
        span: Span,
    ) -> Result<Sym, SundewError> {
        let l = self.eval(cx, vars, lhs, pc)?;
        if matches!(op, BinOp::And | BinOp::Or) {
            let a = self.bool_of(l, lhs.span)?;
            let a = self.name_bool(a);
            let rpc = if op == BinOp::And { and2(pc, &a) } else { and2(pc, &not(&a)) };
            let r = self.eval(cx, vars, rhs, &rpc)?;
            let b = self.bool_of(r, rhs.span)?;
            return Ok(Sym::Bool(if op == BinOp::And { and2(&a, &b) } else { or(&[&a, &b]) }));
        }
        let r = self.eval(cx, vars, rhs, pc)?;
        if l == Sym::Bottom || r == Sym::Bottom {
            return Ok(Sym::Bottom);
        }
        match op {
            BinOp::Eq => return Ok(Sym::Bool(sym_eq(&l, &r, span)?)),
            BinOp::Ne => return Ok(Sym::Bool(not(&sym_eq(&l, &r, span)?))),
            _ => {}
        }
        let (Sym::Int(a), Sym::Int(b)) = (&l, &r) else {
            return Err(unsupported(format!("`{}` on non-numeric values", op.symbol()), span));
        };
        if op.is_compare() {
            return Ok(Sym::Bool(app(op.symbol(), &[a, b])));
        }
        let owner = cx.owner.clone();
        let decimal = self.is_decimal(lhs);
        if op == BinOp::Div {
            self.site(FaultKind::DivByZero, span, None, &owner, pc, &eq(b, "0"), "division by zero".into());
        }
        let scale = term::scale();
        let raw = match (op, decimal) {
            (BinOp::Add, _) => app("+", &[a, b]),
            (BinOp::Sub, _) => app("-", &[a, b]),
            (BinOp::Mul, false) => app("*", &[a, b]),
            (BinOp::Mul, true) => term::tdiv(&app("*", &[a, b]), &scale),
            (_, false) => term::tdiv(a, b),
            (_, true) => term::tdiv(&app("*", &[a, &scale]), b),
        };
        let raw = match self.name_sym(Sym::Int(raw)) {
            Sym::Int(t) => t,
            _ => unreachable!("naming keeps the sort"),
        };
        if !(op == BinOp::Div && !decimal) {
            let what = if decimal { "Decimal" } else { "Int" };
            self.site(
                FaultKind::Overflow,
                span,
                None,
                &owner,
                pc,
                &term::out_of_int_range(&raw),
                format!("{what} overflow in `{}`", op.symbol()),
            );
        }
        Ok(Sym::Int(raw))
    }

    #[allow(clippy::too_many_arguments)]
    fn collection(
        &mut self,
        cx: &mut Ctx,
        vars: &mut Vec<(String, Sym)>,
        op: CollectionOp,
        receiver: &Expr,
        lambda: Option<&Lambda>,
        pc: &str,
        span: Span,
    ) -> Result<Sym, SundewError> {
        let Sym::List { items, prefix } = self.eval(cx, vars, receiver, pc)? else {
            return Err(unsupported("collection receiver is not a list", span));
        };
        let owner = cx.owner.clone();
        if op == CollectionOp::Sum {
            let mut acc = "0".to_string();
            for (p, x) in &items {
                let Sym::Int(x) = x else {
                    return Err(unsupported("sum over non-numeric elements", span));
                };
                let raw = app("+", &[&acc, x]);
                let ipc = and2(pc, p);
                self.site(
                    FaultKind::Overflow,
                    span,
                    None,
                    &owner,
                    &ipc,
                    &term::out_of_int_range(&raw),
                    "overflow in `sum`".into(),
                );
                acc = match self.name_sym(Sym::Int(ite(p, &raw, &acc))) {
                    Sym::Int(t) => t,
                    _ => unreachable!("naming keeps the sort"),
                };
            }
            return Ok(Sym::Int(acc));
        }
        let l = lambda.ok_or_else(|| unsupported("collection call without a function", span))?;
        let mut out = Vec::new();
        let mut running = term::TRUE.to_string();
        for (p, x) in items {
            let ipc = and(&[pc, &p, &running]);
            vars.push((l.param.clone(), x.clone()));
            let r = self.eval(cx, vars, &l.body, &ipc);
            vars.pop();
            let r = r?;
            match op {
                CollectionOp::Map => out.push((p, r)),
                CollectionOp::Filter => {
                    let keep = self.bool_of(r, l.body.span)?;
                    out.push((and2(&p, &keep), x));
                }
                CollectionOp::AllOf => {
                    let ok = self.bool_of(r, l.body.span)?;
                    running = self.name_bool(and2(&running, &implies(&p, &ok)));
                }
                CollectionOp::NoneOf => {
                    let hit = self.bool_of(r, l.body.span)?;
                    running = self.name_bool(and2(&running, &implies(&p, &not(&hit))));
                }
                CollectionOp::Sum => unreachable!("handled above"),
            }
        }
        Ok(match op {
            CollectionOp::AllOf | CollectionOp::NoneOf => Sym::Bool(running),
            CollectionOp::Map => Sym::List { items: out, prefix },
            _ => Sym::List {
                items: out,
                prefix: false,
            },
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn api_call(
        &mut self,
        cx: &mut Ctx,
        vars: &mut Vec<(String, Sym)>,
        api: &str,
        env: &EnvArg,
        args: &[Expr],
        pc: &str,
        span: Span,
    ) -> Result<Sym, SundewError> {
        let env = self.env_arg(cx, vars, env, pc)?;
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            vals.push(self.eval(cx, vars, a, pc)?);
        }
        let tm = self.tm;
        let decl = tm.api(api).ok_or_else(|| unsupported(format!("unknown api `{api}`"), span))?;
        let mut own = BTreeMap::new();
        for d in &decl.env {
            match env.get(&d.name) {
                Some(v) => {
                    own.insert(d.name.clone(), v.clone());
                }
                None => self.site(
                    FaultKind::EnvMissing,
                    d.span,
                    None,
                    api,
                    pc,
                    term::TRUE,
                    format!("environment has no binding for `{}`", d.name),
                ),
            }
        }
        let mut acx = Ctx::new(api);
        acx.env = own;
        let mut avars: Vec<(String, Sym)> = decl.params.iter().map(|p| p.name.clone()).zip(vals).collect();
        let is_target = self.target_api.as_deref() == Some(api);
        for c in &decl.requires {
            let clear = self.clear.clone();
            let v = self.eval(&mut acx, &mut avars, &c.expr, pc)?;
            let v = self.bool_of(v, c.expr.span)?;
            let v = if is_target { self.name_bool(v) } else { v };
            if is_target {
                let args = decl
                    .params
                    .iter()
                    .zip(&avars)
                    .filter_map(|(p, (n, s))| self.shape_of(s, &p.ty).map(|sh| (format!("{api}.{n}"), p.ty.clone(), sh)))
                    .collect();
                self.obligations.push(Obligation {
                    clause: c.clone(),
                    pc: pc.to_string(),
                    clear,
                    holds: v.clone(),
                    args,
                });
            }
            let msg = format!("precondition failed: {}", c.text);
            self.site(FaultKind::Precondition, c.expr.span, Some(&c.text), api, pc, &not(&v), msg);
        }
        self.apis_seen += 1;
        let result = match &decl.body {
            Some(b) => {
                let mut rets = Vec::new();
                let st = St {
                    pc: pc.to_string(),
                    vars: avars.clone(),
                };
                if let Some(end) = self.exec_block(&mut acx, st, b, &mut rets)? {
                    rets.push((end.pc, Sym::Unit));
                }
                fold_returns(rets)
            }
            None => self.input(&format!("api.{}.{api}", self.apis_seen), &decl.ret, Some(span))?.0,
        };
        acx.result = Some(result.clone());
        for c in &decl.ensures {
            let v = self.eval(&mut acx, &mut avars, &c.expr, pc)?;
            let v = self.bool_of(v, c.expr.span)?;
            if decl.body.is_some() {
                let msg = format!("postcondition failed: {}", c.text);
                self.site(FaultKind::Postcondition, c.expr.span, Some(&c.text), api, pc, &not(&v), msg);
            } else {
                self.assume(implies(pc, &v));
            }
        }
        Ok(result)
    }

    /// Runs a chktest body; returns the site for a `false` return, if any.
    pub fn chktest(&mut self, t: &ChkTestDecl, args: Vec<Sym>) -> Result<(), SundewError> {
        let mut cx = Ctx::new(&t.name);
        let vars: Vec<(String, Sym)> = t.params.iter().map(|p| p.name.clone()).zip(args).collect();
        let mut rets = Vec::new();
        self.exec_block(
            &mut cx,
            St {
                pc: term::TRUE.into(),
                vars,
            },
            &t.body,
            &mut rets,
        )?;
        if !rets.is_empty() {
            if let Sym::Bool(r) = fold_returns(rets) {
                self.site(
                    FaultKind::Assertion,
                    t.span,
                    None,
                    &t.name,
                    term::TRUE,
                    &not(&r),
                    "chktest returned false".into(),
                );
            }
        }
        Ok(())
    }

    /// Assumes a top-level precondition and that evaluating it is fault-free.
    pub fn assume_requires(&mut self, owner: &str, c: &Clause, vars: &[(String, Sym)], env: &BTreeMap<String, Sym>) -> Result<(), SundewError> {
        let mut cx = Ctx::new(owner);
        cx.env = env.clone();
        let start = self.sites.len();
        let v = self.eval(&mut cx, &mut vars.to_vec(), &c.expr, term::TRUE)?;
        let v = self.bool_of(v, c.expr.span)?;
        let extra: Vec<String> = self.sites.drain(start..).map(|s| not(&s.guard)).collect();
        self.assumes.extend(extra);
        self.assumes.push(v);
        Ok(())
    }

    /// Runs `f` as the top-level entry with its requires assumed.
    pub fn entry(&mut self, f: &FunctionDecl, args: Vec<Sym>, env: BTreeMap<String, Sym>) -> Result<Sym, SundewError> {
        let named: Vec<(String, Sym)> = f.params.iter().map(|p| p.name.clone()).zip(args.clone()).collect();
        for c in &f.requires {
            self.assume_requires(&f.name, c, &named, &env)?;
        }
        let stripped = FunctionDecl {
            requires: Vec::new(),
            ..f.clone()
        };
        self.call(&stripped, args, env, term::TRUE)
    }

    pub fn script_body(&self) -> String {
        let mut out = String::new();
        for i in &self.items {
            out.push_str(i);
            out.push('\n');
        }
        for a in &self.assumes {
            if a != term::TRUE {
                out.push_str(&format!("(assert {a})\n"));
            }
        }
        out
    }
}

fn fold_returns(rets: Vec<(String, Sym)>) -> Sym {
    let mut it = rets.into_iter().rev();
    let Some((_, mut acc)) = it.next() else {
        return Sym::Bottom;
    };
    for (pc, v) in it {
        acc = merge(&pc, v, acc);
    }
    acc
}

