//! Type checking.
//!
//! Aliases are opaque: `Fahrenheit` is not `Int` and `USD` is not `Decimal`.
//! The only way into an alias is the annotated literal form or a value that
//! already has the alias type.

use std::collections::{BTreeMap, BTreeSet};

use crate::regex::SafeRegex;
use crate::sandbox::GlobTemplate;
use crate::span::{Diagnostic, Span};
use crate::syntax::ast::*;
use crate::syntax::parse_module;

pub const TASK_COMPLETED: &str = "TaskCompleted";
pub const TASK_ABORTED: &str = "TaskAborted";

/// Entities the runtime writes to the event log.
pub fn system_entities() -> Vec<EntityDecl> {
    let f = |name: &str, ty: Type| FieldDecl {
        name: name.into(),
        ty,
        span: Span::default(),
    };
    vec![
        EntityDecl {
            name: TASK_COMPLETED.into(),
            fields: vec![f("task", Type::CString)],
            invariants: vec![],
            doc: Some("Appended after a task finishes successfully.".into()),
            span: Span::default(),
        },
        EntityDecl {
            name: TASK_ABORTED.into(),
            fields: vec![
                f("task", Type::CString),
                f("code", Type::CString),
                f("reason", Type::String),
            ],
            invariants: vec![],
            doc: Some("Appended when a task is aborted by a fault.".into()),
            span: Span::default(),
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    /// Report functions whose body can fall off the end without returning.
    pub require_returns: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            require_returns: true,
        }
    }
}

/// A module whose expressions all carry resolved types.
#[derive(Debug, Clone)]
pub struct TypedModule {
    pub module: SourceModule,
    regexes: BTreeMap<String, SafeRegex>,
    pub warnings: Vec<Diagnostic>,
}

impl TypedModule {
    pub fn alias(&self, name: &str) -> Option<&TypeAliasDecl> {
        self.module.alias(name)
    }

    pub fn alias_regex(&self, name: &str) -> Option<&SafeRegex> {
        self.regexes.get(name)
    }

    pub fn entity(&self, name: &str) -> Option<&EntityDecl> {
        self.module.entity(name)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.module.function(name)
    }

    pub fn api(&self, name: &str) -> Option<&ApiDecl> {
        self.module.api(name)
    }

    pub fn agent(&self, name: &str) -> Option<&AgentDecl> {
        self.module.agent(name)
    }

    pub fn chktest(&self, name: &str) -> Option<&ChkTestDecl> {
        self.module.chktest(name)
    }

    /// Primitive underlying `t` after stripping aliases.
    pub fn base_type(&self, t: &Type) -> Type {
        match t {
            Type::Named(n) => match self.alias(n) {
                Some(a) => a.base.clone(),
                None => t.clone(),
            },
            _ => t.clone(),
        }
    }

    pub fn is_numeric(&self, t: &Type) -> bool {
        matches!(self.base_type(t), Type::Int | Type::Decimal)
    }

    /// True when a value of type `t` can contain a sensitive alias.
    pub fn is_sensitive(&self, t: &Type) -> bool {
        !self.sensitivity_tags(t).is_empty()
    }

    /// Sensitivity tags reachable from `t`. Untagged sensitive aliases
    /// report the tag `sensitive`.
    pub fn sensitivity_tags(&self, t: &Type) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut seen = BTreeSet::new();
        self.collect_tags(t, &mut out, &mut seen);
        out
    }

    fn collect_tags(&self, t: &Type, out: &mut BTreeSet<String>, seen: &mut BTreeSet<String>) {
        match t {
            Type::List(i) | Type::Option(i) => self.collect_tags(i, out, seen),
            Type::Named(n) => {
                if !seen.insert(n.clone()) {
                    return;
                }
                if let Some(a) = self.alias(n) {
                    if a.sensitive {
                        out.insert(a.level.clone().unwrap_or_else(|| "sensitive".into()));
                    }
                } else if let Some(e) = self.entity(n) {
                    for f in &e.fields {
                        self.collect_tags(&f.ty, out, seen);
                    }
                }
            }
            _ => {}
        }
    }

    /// Adds entity declarations that exist only for serialization, such as
    /// argument records. Invariant-free entities are assumed.
    pub fn with_entities(&self, extra: Vec<EntityDecl>) -> TypedModule {
        let mut m = self.clone();
        for e in extra {
            if m.module.entity(&e.name).is_none() {
                m.module.entities.push(e);
            }
        }
        m
    }
}

/// Parses and type checks a source text.
pub fn check_source(src: &str) -> Result<TypedModule, Vec<Diagnostic>> {
    typecheck(parse_module(src)?)
}

pub fn typecheck(module: SourceModule) -> Result<TypedModule, Vec<Diagnostic>> {
    typecheck_with(module, CheckOptions::default())
}

pub fn typecheck_with(mut module: SourceModule, opts: CheckOptions) -> Result<TypedModule, Vec<Diagnostic>> {
    for e in system_entities() {
        if module.entity(&e.name).is_none() {
            module.entities.push(e);
        }
    }
    let sigs = Sigs::collect(&module);
    let mut ck = Checker {
        sigs: &sigs,
        diags: Vec::new(),
        warnings: Vec::new(),
        opts,
        regexes: BTreeMap::new(),
        calls: BTreeMap::new(),
    };
    ck.declarations(&module);
    ck.bodies(&mut module);
    ck.recursion(&module);
    if ck.diags.is_empty() {
        Ok(TypedModule {
            module,
            regexes: ck.regexes,
            warnings: ck.warnings,
        })
    } else {
        Err(ck.diags)
    }
}

#[derive(Clone)]
struct FnSig {
    kind: FunctionKind,
    params: Vec<Type>,
    ret: Type,
}

struct ApiSig {
    params: Vec<Type>,
    ret: Type,
    env: Vec<(String, Type)>,
}

#[derive(Default)]
struct Sigs {
    aliases: BTreeMap<String, (Type, Option<RegexLit>)>,
    entities: BTreeMap<String, Vec<(String, Type)>>,
    functions: BTreeMap<String, FnSig>,
    apis: BTreeMap<String, ApiSig>,
    agents: BTreeSet<String>,
}

impl Sigs {
    fn collect(m: &SourceModule) -> Sigs {
        let mut s = Sigs::default();
        for a in &m.aliases {
            s.aliases
                .entry(a.name.clone())
                .or_insert((a.base.clone(), a.constraint.clone()));
        }
        for e in &m.entities {
            s.entities
                .entry(e.name.clone())
                .or_insert(e.fields.iter().map(|f| (f.name.clone(), f.ty.clone())).collect());
        }
        for f in &m.functions {
            s.functions.entry(f.name.clone()).or_insert(FnSig {
                kind: f.kind,
                params: f.params.iter().map(|p| p.ty.clone()).collect(),
                ret: f.ret.clone(),
            });
        }
        for a in &m.apis {
            s.apis.entry(a.name.clone()).or_insert(ApiSig {
                params: a.params.iter().map(|p| p.ty.clone()).collect(),
                ret: a.ret.clone(),
                env: a.env.iter().map(|e| (e.name.clone(), e.ty.clone())).collect(),
            });
        }
        for a in &m.agents {
            s.agents.insert(a.name.clone());
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Place {
    Body,
    Requires,
    Ensures,
    Invariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Owner {
    Function,
    Action,
    Api,
    ChkTest,
    Entity,
}

impl Owner {
    fn effectful(self) -> bool {
        matches!(self, Owner::Action | Owner::Api)
    }
}

#[derive(Debug, Clone)]
struct Binding {
    ty: Type,
    mutable: bool,
    narrowed: bool,
}

struct Ctx {
    owner: Owner,
    owner_name: String,
    place: Place,
    ret: Type,
    env: Vec<(String, Type)>,
    fields: Vec<(String, Type)>,
    scopes: Vec<BTreeMap<String, Binding>>,
}

impl Ctx {
    fn lookup(&self, name: &str) -> Option<&Binding> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn lookup_mut(&mut self, name: &str) -> Option<&mut Binding> {
        self.scopes.iter_mut().rev().find_map(|s| s.get_mut(name))
    }

    fn in_scope(&self) -> Vec<(String, Type)> {
        let mut seen = BTreeMap::new();
        for s in &self.scopes {
            for (n, b) in s {
                let ty = match (&b.ty, b.narrowed) {
                    (Type::Option(inner), true) => (**inner).clone(),
                    (t, _) => t.clone(),
                };
                seen.insert(n.clone(), ty);
            }
        }
        seen.into_iter().collect()
    }
}

struct Checker<'s> {
    sigs: &'s Sigs,
    diags: Vec<Diagnostic>,
    warnings: Vec<Diagnostic>,
    opts: CheckOptions,
    regexes: BTreeMap<String, SafeRegex>,
    calls: BTreeMap<String, BTreeSet<String>>,
}

fn none_type() -> Type {
    Type::option(Type::Never)
}

/// Whether a value of type `src` may flow into a slot of type `dst`.
pub fn assignable(src: &Type, dst: &Type) -> bool {
    match (src, dst) {
        (Type::Never, _) => true,
        (Type::List(a), Type::List(b)) | (Type::Option(a), Type::Option(b)) => assignable(a, b),
        (a, b) => a == b,
    }
}

/// Least type covering both branches of a conditional.
fn join(a: &Type, b: &Type) -> Option<Type> {
    if assignable(a, b) {
        Some(b.clone())
    } else if assignable(b, a) {
        Some(a.clone())
    } else {
        None
    }
}

fn always_returns(b: &Block) -> bool {
    b.iter().any(|s| match &s.kind {
        StmtKind::Return(_) => true,
        StmtKind::If {
            then,
            els: Some(els),
            ..
        } => always_returns(then) && always_returns(els),
        StmtKind::Expr(e) => matches!(e.kind, ExprKind::Fail(_)),
        _ => false,
    })
}

/// `${a.b.c}` slots in a permission template.
pub fn template_slots(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut rest = text;
    let mut off = 0;
    while let Some(i) = rest.find("${") {
        match rest[i + 2..].find('}') {
            Some(j) => {
                out.push((off + i, rest[i + 2..i + 2 + j].to_string()));
                off += i + 2 + j + 1;
                rest = &text[off..];
            }
            None => break,
        }
    }
    out
}

impl<'s> Checker<'s> {
    fn err(&mut self, code: &str, msg: impl Into<String>, span: Span) {
        self.diags.push(Diagnostic::error(code, msg, span));
    }

    fn resolve(&mut self, t: &Type, span: Span) {
        match t {
            Type::Named(n) => {
                if !self.sigs.aliases.contains_key(n) && !self.sigs.entities.contains_key(n) {
                    self.err("unknown-type", format!("unknown type `{n}`"), span);
                }
            }
            Type::List(i) | Type::Option(i) => self.resolve(i, span),
            _ => {}
        }
    }

    fn is_alias(&self, t: &Type) -> bool {
        matches!(t, Type::Named(n) if self.sigs.aliases.contains_key(n))
    }

    fn base(&self, t: &Type) -> Type {
        match t {
            Type::Named(n) => match self.sigs.aliases.get(n) {
                Some((b, _)) => b.clone(),
                None => t.clone(),
            },
            _ => t.clone(),
        }
    }

    fn numeric(&self, t: &Type) -> bool {
        matches!(self.base(t), Type::Int | Type::Decimal)
    }

    fn mismatch(&mut self, expected: &Type, found: &Type, span: Span) {
        let (code, msg) = if self.is_alias(expected) || self.is_alias(found) {
            (
                "alias-confusion",
                format!("expected `{expected}`, found `{found}`; aliases do not convert implicitly"),
            )
        } else {
            ("type-mismatch", format!("expected `{expected}`, found `{found}`"))
        };
        self.err(code, msg, span);
    }

    fn expect(&mut self, e: &Expr, want: &Type) {
        let got = e.ty().clone();
        if !assignable(&got, want) {
            self.mismatch(want, &got, e.span);
        }
    }

    fn declarations(&mut self, m: &SourceModule) {
        let mut types = BTreeSet::new();
        for (n, s) in m
            .aliases
            .iter()
            .map(|a| (&a.name, a.span))
            .chain(m.entities.iter().map(|e| (&e.name, e.span)))
        {
            if Type::from_primitive_name(n).is_some() || matches!(n.as_str(), "List" | "Option") {
                self.err("reserved-name", format!("`{n}` is a built-in type name"), s);
            }
            if !types.insert(n.clone()) {
                self.err("duplicate-name", format!("type `{n}` is declared more than once"), s);
            }
        }
        let mut seen = BTreeSet::new();
        for (n, s) in m.functions.iter().map(|f| (&f.name, f.span)) {
            if !seen.insert(n.clone()) {
                self.err("duplicate-name", format!("function `{n}` is declared more than once"), s);
            }
        }
        let mut seen = BTreeSet::new();
        for (n, s) in m.apis.iter().map(|a| (&a.name, a.span)) {
            if !seen.insert(n.clone()) {
                self.err("duplicate-name", format!("api `{n}` is declared more than once"), s);
            }
        }
        let mut seen = BTreeSet::new();
        for (n, s) in m.agents.iter().map(|a| (&a.name, a.span)) {
            if !seen.insert(n.clone()) {
                self.err("duplicate-name", format!("agent `{n}` is declared more than once"), s);
            }
        }
        let mut seen = BTreeSet::new();
        for (n, s) in m.chktests.iter().map(|c| (&c.name, c.span)) {
            if !seen.insert(n.clone()) {
                self.err("duplicate-name", format!("chktest `{n}` is declared more than once"), s);
            }
        }

        for a in &m.aliases {
            if !a.base.is_primitive() {
                self.err(
                    "alias-base",
                    format!("alias `{}` must wrap a primitive type, found `{}`", a.name, a.base),
                    a.span,
                );
            }
            if let Some(c) = &a.constraint {
                if !a.base.is_string() {
                    self.err(
                        "alias-constraint",
                        format!("alias `{}` has a pattern but its base `{}` is not a string type", a.name, a.base),
                        a.span,
                    );
                }
                match SafeRegex::compile(&c.pattern, c.cstring || a.base == Type::CString) {
                    Ok(re) => {
                        self.regexes.insert(a.name.clone(), re);
                    }
                    Err(e) => self.err("regex", format!("in alias `{}`: {e}", a.name), a.span),
                }
            }
        }
        for e in &m.entities {
            let mut names = BTreeSet::new();
            for f in &e.fields {
                self.resolve(&f.ty, f.span);
                if !names.insert(&f.name) {
                    self.err("duplicate-field", format!("field `{}` is declared more than once", f.name), f.span);
                }
            }
        }
        for f in &m.functions {
            for p in &f.params {
                self.resolve(&p.ty, p.span);
            }
            for en in &f.env {
                self.resolve(&en.ty, en.span);
            }
            self.resolve(&f.ret, f.span);
        }
        for a in &m.apis {
            for p in &a.params {
                self.resolve(&p.ty, p.span);
            }
            for en in &a.env {
                self.resolve(&en.ty, en.span);
            }
            self.resolve(&a.ret, a.span);
            for perm in &a.permissions {
                self.permission_slots(a, perm);
            }
        }
        for a in &m.agents {
            for en in &a.env {
                self.resolve(&en.ty, en.span);
            }
        }
        for c in &m.chktests {
            for p in &c.params {
                self.resolve(&p.ty, p.span);
            }
        }
    }

    fn permission_slots(&mut self, api: &ApiDecl, perm: &PermissionTemplate) {
        if let Err(e) = GlobTemplate::parse(&perm.text) {
            self.err("permission-glob", e.to_string(), perm.span);
            return;
        }
        for (_, path) in template_slots(&perm.text) {
            let mut parts = path.split('.');
            let head = parts.next().unwrap_or_default();
            let Some(p) = api.params.iter().find(|p| p.name == head) else {
                self.err(
                    "permission-slot",
                    format!("permission slot `${{{path}}}` does not name a parameter of `{}`", api.name),
                    perm.span,
                );
                continue;
            };
            let mut ty = p.ty.clone();
            for field in parts {
                let next = match &ty {
                    Type::Named(n) => self
                        .sigs
                        .entities
                        .get(n)
                        .and_then(|fs| fs.iter().find(|(f, _)| f == field))
                        .map(|(_, t)| t.clone()),
                    _ => None,
                };
                match next {
                    Some(t) => ty = t,
                    None => {
                        self.err(
                            "permission-slot",
                            format!("permission slot `${{{path}}}`: `{ty}` has no field `{field}`"),
                            perm.span,
                        );
                        return;
                    }
                }
            }
            if !self.base(&ty).is_primitive() {
                self.err(
                    "permission-slot",
                    format!("permission slot `${{{path}}}` must reach a primitive value, found `{ty}`"),
                    perm.span,
                );
            }
        }
    }

    fn bodies(&mut self, m: &mut SourceModule) {
        for e in &mut m.entities {
            let mut ctx = Ctx {
                owner: Owner::Entity,
                owner_name: e.name.clone(),
                place: Place::Invariant,
                ret: Type::Bool,
                env: vec![],
                fields: e.fields.iter().map(|f| (f.name.clone(), f.ty.clone())).collect(),
                scopes: vec![BTreeMap::new()],
            };
            for inv in &mut e.invariants {
                self.expr(&mut inv.expr, &mut ctx, Some(&Type::Bool));
                if inv.expr.ty() != &Type::Bool {
                    self.err(
                        "invariant-type",
                        format!("invariant must be Bool, found `{}`", inv.expr.ty()),
                        inv.expr.span,
                    );
                }
            }
        }
        for f in &mut m.functions {
            let owner = match f.kind {
                FunctionKind::Function => Owner::Function,
                FunctionKind::Action => Owner::Action,
            };
            let env = f.env.iter().map(|e| (e.name.clone(), e.ty.clone())).collect();
            let mut ctx = self.ctx(owner, &f.name, &f.params, f.ret.clone(), env);
            self.contracts(&mut f.requires, &mut f.ensures, &mut ctx);
            ctx.place = Place::Body;
            match &mut f.body {
                Body::Block(b) => {
                    self.block(b, &mut ctx);
                    if self.opts.require_returns && f.ret != Type::None && !always_returns(b) {
                        self.err(
                            "missing-return",
                            format!("`{}` may finish without returning a `{}`", f.name, f.ret),
                            f.span,
                        );
                    }
                }
                Body::Hole(h) => {
                    h.ty = Some(f.ret.clone());
                    h.scope = ctx.in_scope();
                }
            }
        }
        for a in &mut m.apis {
            let env = a.env.iter().map(|e| (e.name.clone(), e.ty.clone())).collect();
            let mut ctx = self.ctx(Owner::Api, &a.name, &a.params, a.ret.clone(), env);
            self.contracts(&mut a.requires, &mut a.ensures, &mut ctx);
            ctx.place = Place::Body;
            if let Some(b) = &mut a.body {
                self.block(b, &mut ctx);
                if self.opts.require_returns && a.ret != Type::None && !always_returns(b) {
                    self.err(
                        "missing-return",
                        format!("`{}` may finish without returning a `{}`", a.name, a.ret),
                        a.span,
                    );
                }
            }
        }
        for c in &mut m.chktests {
            let mut ctx = self.ctx(Owner::ChkTest, &c.name, &c.params, c.ret.clone(), vec![]);
            self.block(&mut c.body, &mut ctx);
        }
    }

    fn ctx(&self, owner: Owner, name: &str, params: &[Param], ret: Type, env: Vec<(String, Type)>) -> Ctx {
        let scope = params
            .iter()
            .map(|p| {
                (
                    p.name.clone(),
                    Binding {
                        ty: p.ty.clone(),
                        mutable: false,
                        narrowed: false,
                    },
                )
            })
            .collect();
        Ctx {
            owner,
            owner_name: name.to_string(),
            place: Place::Requires,
            ret,
            env,
            fields: vec![],
            scopes: vec![scope],
        }
    }

    fn contracts(&mut self, requires: &mut [Clause], ensures: &mut [Clause], ctx: &mut Ctx) {
        ctx.place = Place::Requires;
        for c in requires {
            self.expr(&mut c.expr, ctx, Some(&Type::Bool));
            self.expect(&c.expr, &Type::Bool);
        }
        ctx.place = Place::Ensures;
        for c in ensures {
            self.expr(&mut c.expr, ctx, Some(&Type::Bool));
            self.expect(&c.expr, &Type::Bool);
        }
    }

    fn block(&mut self, b: &mut Block, ctx: &mut Ctx) {
        ctx.scopes.push(BTreeMap::new());
        for s in b.iter_mut() {
            self.stmt(s, ctx);
        }
        ctx.scopes.pop();
    }

    fn stmt(&mut self, s: &mut Stmt, ctx: &mut Ctx) {
        match &mut s.kind {
            StmtKind::VarDecl {
                mutable,
                name,
                ty,
                init,
            } => {
                if let Some(t) = ty {
                    self.resolve(t, s.span);
                }
                self.expr(init, ctx, ty.as_ref());
                let bound = match ty {
                    Some(t) => {
                        self.expect(init, t);
                        t.clone()
                    }
                    None => {
                        let t = init.ty().clone();
                        if contains_never(&t) {
                            self.err(
                                "cannot-infer",
                                format!("cannot infer a type for `{name}`; add an annotation"),
                                init.span,
                            );
                        }
                        t
                    }
                };
                if ctx.lookup(name).is_some() {
                    self.err("duplicate-binding", format!("`{name}` is already bound in this scope"), s.span);
                }
                ctx.scopes.last_mut().unwrap().insert(
                    name.clone(),
                    Binding {
                        ty: bound,
                        mutable: *mutable,
                        narrowed: false,
                    },
                );
            }
            StmtKind::Assign { name, value } => {
                let target = ctx.lookup(name).cloned();
                self.expr(value, ctx, target.as_ref().map(|b| &b.ty));
                match target {
                    None => self.err("unknown-identifier", format!("unknown identifier `{name}`"), s.span),
                    Some(b) if !b.mutable => self.err(
                        "immutable-binding",
                        format!("cannot assign to `{name}`: immutable binding (declared with `let`)"),
                        s.span,
                    ),
                    Some(b) => {
                        self.expect(value, &b.ty);
                        if let Some(b) = ctx.lookup_mut(name) {
                            b.narrowed = false;
                        }
                    }
                }
            }
            StmtKind::If { cond, then, els } => {
                self.expr(cond, ctx, Some(&Type::Bool));
                self.expect(cond, &Type::Bool);
                let (is_none, is_some) = none_test(cond);
                ctx.scopes.push(BTreeMap::new());
                if let Some(v) = &is_some {
                    self.narrow(ctx, v);
                }
                self.block(then, ctx);
                ctx.scopes.pop();
                if let Some(els) = els {
                    ctx.scopes.push(BTreeMap::new());
                    if let Some(v) = &is_none {
                        self.narrow(ctx, v);
                    }
                    self.block(els, ctx);
                    ctx.scopes.pop();
                }
                if let Some(v) = is_none {
                    if always_returns(then) {
                        self.narrow_outer(ctx, &v);
                    }
                }
                if let (Some(v), Some(els)) = (is_some, els) {
                    if always_returns(els) {
                        self.narrow_outer(ctx, &v);
                    }
                }
            }
            StmtKind::Return(v) => {
                let ret = ctx.ret.clone();
                match v {
                    Some(e) => {
                        self.expr(e, ctx, Some(&ret));
                        if ctx.owner == Owner::ChkTest {
                            self.expect(e, &Type::Bool);
                        } else {
                            self.expect(e, &ret);
                        }
                    }
                    None if ret != Type::None && ctx.owner != Owner::ChkTest => {
                        self.err("missing-value", format!("return needs a `{ret}` value"), s.span);
                    }
                    None => {}
                }
            }
            StmtKind::Assert(c) => {
                self.expr(&mut c.expr, ctx, Some(&Type::Bool));
                self.expect(&c.expr, &Type::Bool);
            }
            StmtKind::Expr(e) => {
                self.expr(e, ctx, None);
            }
        }
    }

    /// Shadows `name` in the innermost scope with its narrowed form.
    fn narrow(&mut self, ctx: &mut Ctx, name: &str) {
        if let Some(b) = ctx.lookup(name).cloned() {
            if matches!(b.ty, Type::Option(_)) {
                ctx.scopes.last_mut().unwrap().insert(
                    name.to_string(),
                    Binding {
                        narrowed: true,
                        ..b
                    },
                );
            }
        }
    }

    fn narrow_outer(&mut self, ctx: &mut Ctx, name: &str) {
        if let Some(b) = ctx.lookup_mut(name) {
            if matches!(b.ty, Type::Option(_)) {
                b.narrowed = true;
            }
        }
    }

    fn env_arg(&mut self, env: &mut EnvArg, ctx: &mut Ctx, target: &[(String, Type)], span: Span) {
        match env {
            EnvArg::Empty => {}
            EnvArg::Spread => {
                if ctx.env.is_empty() && !ctx.owner.effectful() {
                    self.err("env-spread", "`env{...}` needs an enclosing env clause", span);
                }
                for (n, t) in target {
                    match ctx.env.iter().find(|(cn, _)| cn == n) {
                        Some((_, ct)) if !assignable(ct, t) => {
                            let ct = ct.clone();
                            self.mismatch(t, &ct, span)
                        }
                        _ => {}
                    }
                }
            }
            EnvArg::Bindings(bs) => {
                for (n, e) in bs {
                    let want = target.iter().find(|(tn, _)| tn == n).map(|(_, t)| t.clone());
                    self.expr(e, ctx, want.as_ref());
                    if let Some(w) = want {
                        self.expect(e, &w);
                    }
                }
            }
        }
    }

    fn args(&mut self, args: &mut [Expr], params: &[Type], ctx: &mut Ctx, what: &str, span: Span) {
        if args.len() != params.len() {
            self.err(
                "arity",
                format!("{what} takes {} argument(s), found {}", params.len(), args.len()),
                span,
            );
        }
        for (i, a) in args.iter_mut().enumerate() {
            let want = params.get(i).cloned();
            self.expr(a, ctx, want.as_ref());
            if let Some(w) = want {
                self.expect(a, &w);
            }
        }
    }

    fn expr(&mut self, e: &mut Expr, ctx: &mut Ctx, want: Option<&Type>) {
        let span = e.span;
        let ty = match &mut e.kind {
            ExprKind::Lit(l) => match l {
                Literal::Int(_) => Type::Int,
                Literal::Decimal(_) => Type::Decimal,
                Literal::Bool(_) => Type::Bool,
                Literal::CString(_) => Type::CString,
                Literal::String(_) => Type::String,
                Literal::None => match want {
                    Some(t @ Type::Option(_)) => t.clone(),
                    _ => none_type(),
                },
            },
            ExprKind::AliasLit { lit, alias } => self.alias_lit(lit, alias, span),
            ExprKind::Var { name, unwrap } => match ctx.lookup(name) {
                Some(b) => match (&b.ty, b.narrowed) {
                    (Type::Option(inner), true) => {
                        *unwrap = true;
                        (**inner).clone()
                    }
                    (t, _) => t.clone(),
                },
                None => {
                    let msg = if self.sigs.functions.contains_key(name.as_str()) {
                        format!("`{name}` is a function; call it with arguments")
                    } else {
                        format!("unknown identifier `{name}`")
                    };
                    self.err("unknown-identifier", msg, span);
                    Type::Never
                }
            },
            ExprKind::Dollar(name) => self.dollar(name, ctx, span),
            ExprKind::EnvRead(name) => match ctx.env.iter().find(|(n, _)| n == name) {
                Some((_, t)) => t.clone(),
                None => {
                    self.err(
                        "unknown-env",
                        format!("`env.{name}` is not declared in the env clause of `{}`", ctx.owner_name),
                        span,
                    );
                    Type::Never
                }
            },
            ExprKind::EnvRecord(_) => {
                self.err("env-record", "environment records may only appear as call arguments", span);
                Type::Never
            }
            ExprKind::Unary { op, operand } => {
                self.expr(operand, ctx, want);
                let t = operand.ty().clone();
                match op {
                    UnOp::Neg if self.numeric(&t) || t == Type::Never => t,
                    UnOp::Not if t == Type::Bool || t == Type::Never => Type::Bool,
                    _ => {
                        self.err(
                            "operand-type",
                            format!("operator `{}` does not apply to `{t}`", if *op == UnOp::Neg { "-" } else { "!" }),
                            span,
                        );
                        Type::Never
                    }
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let op = *op;
                self.binary(op, lhs, rhs, ctx, span)
            }
            ExprKind::If { cond, then, els } => {
                self.expr(cond, ctx, Some(&Type::Bool));
                self.expect(cond, &Type::Bool);
                self.expr(then, ctx, want);
                self.expr(els, ctx, want);
                match join(then.ty(), els.ty()) {
                    Some(t) => t,
                    None => {
                        let (a, b) = (then.ty().clone(), els.ty().clone());
                        self.mismatch(&a, &b, els.span);
                        Type::Never
                    }
                }
            }
            ExprKind::Field { base, name } => {
                self.expr(base, ctx, None);
                let bt = base.ty().clone();
                let found = match &bt {
                    Type::Named(n) => self
                        .sigs
                        .entities
                        .get(n)
                        .and_then(|fs| fs.iter().find(|(f, _)| f == name))
                        .map(|(_, t)| t.clone()),
                    _ => None,
                };
                match found {
                    Some(t) => t,
                    None if bt == Type::Never => Type::Never,
                    None => {
                        self.err("unknown-field", format!("`{bt}` has no field `{name}`"), span);
                        Type::Never
                    }
                }
            }
            ExprKind::Call { name, args } => {
                let Some(sig) = self.sigs.functions.get(name.as_str()).cloned() else {
                    self.err("unknown-function", format!("unknown function `{name}`"), span);
                    for a in args.iter_mut() {
                        self.expr(a, ctx, None);
                    }
                    return e.ty = Some(Type::Never);
                };
                if sig.kind == FunctionKind::Action && !(ctx.owner.effectful() && ctx.place == Place::Body) {
                    self.err(
                        "purity",
                        format!("action `{name}` cannot be called from pure code"),
                        span,
                    );
                }
                self.calls
                    .entry(ctx.owner_name.clone())
                    .or_default()
                    .insert(name.clone());
                let what = format!("`{name}`");
                self.args(args, &sig.params, ctx, &what, span);
                sig.ret
            }
            ExprKind::Construct { entity, args } => self.construct(entity, args, ctx, span),
            ExprKind::Pattern { entity, .. } => {
                self.err(
                    "pattern-position",
                    format!("partial pattern `{entity}{{|...|}}` is only allowed inside `$events.contains`"),
                    span,
                );
                Type::Never
            }
            ExprKind::ListLit { elem, items } => {
                self.resolve(elem, span);
                let elem = elem.clone();
                for it in items.iter_mut() {
                    self.expr(it, ctx, Some(&elem));
                    self.expect(it, &elem);
                }
                Type::list(elem)
            }
            ExprKind::Some(inner) => {
                let w = match want {
                    Some(Type::Option(t)) => Some((**t).clone()),
                    _ => None,
                };
                self.expr(inner, ctx, w.as_ref());
                Type::option(inner.ty().clone())
            }
            ExprKind::Collection {
                op,
                receiver,
                type_arg,
                lambda,
            } => {
                let op = *op;
                self.collection(op, receiver, type_arg, lambda, ctx, span)
            }
            ExprKind::ApiCall { api, env, args } => {
                if !(ctx.owner.effectful() && ctx.place == Place::Body) {
                    self.err("purity", format!("api `{api}` can only be called from an action or api body"), span);
                }
                match self.sigs.apis.get(api.as_str()) {
                    Some(sig) => {
                        let (params, ret, target) = (sig.params.clone(), sig.ret.clone(), sig.env.clone());
                        self.env_arg(env, ctx, &target, span);
                        let what = format!("api `{api}`");
                        self.args(args, &params, ctx, &what, span);
                        ret
                    }
                    None => {
                        self.err("unknown-api", format!("unknown api `{api}`"), span);
                        Type::Never
                    }
                }
            }
            ExprKind::AgentCall {
                agent,
                shape,
                env,
                args,
            } => {
                if !(ctx.owner.effectful() && ctx.place == Place::Body) {
                    self.err("purity", format!("agent `{agent}` can only be called from an action or api body"), span);
                }
                if !self.sigs.agents.contains(agent.as_str()) {
                    self.err("unknown-agent", format!("unknown agent `{agent}`"), span);
                }
                let shape = shape.clone();
                self.resolve(&shape, span);
                self.env_arg(env, ctx, &[], span);
                if args.len() != 2 {
                    self.err("arity", "agent calls take an input and a prompt", span);
                }
                for a in args.iter_mut() {
                    self.expr(a, ctx, None);
                    let t = self.base(a.ty());
                    if !t.is_string() && t != Type::Never {
                        let found = a.ty().clone();
                        self.mismatch(&Type::String, &found, a.span);
                    }
                }
                shape
            }
            ExprKind::EventsContains(pat) => {
                if !(ctx.owner == Owner::Api && ctx.place == Place::Requires) {
                    self.err("events-position", "`$events` may only be used in api requires clauses", span);
                }
                self.event_pattern(pat, ctx);
                Type::Bool
            }
            ExprKind::Hole(h) => {
                h.scope = ctx.in_scope();
                match (&h.ty, want) {
                    (Some(t), _) => {
                        let t = t.clone();
                        self.resolve(&t, span);
                        t
                    }
                    (None, Some(w)) => {
                        h.ty = Some(w.clone());
                        w.clone()
                    }
                    (None, None) => {
                        self.err("hole-type", "hole needs a declared type such as `?_ -> Int`", span);
                        Type::Never
                    }
                }
            }
            ExprKind::Fail(msg) => {
                self.expr(msg, ctx, Some(&Type::String));
                if !msg.ty().is_string() {
                    let found = msg.ty().clone();
                    self.mismatch(&Type::String, &found, msg.span);
                }
                Type::Never
            }
        };
        e.ty = Some(ty);
    }

    fn alias_lit(&mut self, lit: &Literal, alias: &str, span: Span) -> Type {
        let Some((base, constraint)) = self.sigs.aliases.get(alias).cloned() else {
            self.err("unknown-type", format!("unknown alias `{alias}`"), span);
            return Type::Never;
        };
        let lit_ty = match lit {
            Literal::Int(_) => Type::Int,
            Literal::Decimal(_) => Type::Decimal,
            Literal::Bool(_) => Type::Bool,
            Literal::CString(_) => Type::CString,
            Literal::String(_) => Type::String,
            Literal::None => Type::None,
        };
        // An unsuffixed `0.0<USD>` parses as Decimal; `10<Fahrenheit>` as Int.
        if lit_ty != base && !(base == Type::String && lit_ty == Type::CString) {
            self.err(
                "alias-literal",
                format!("`{alias}` wraps `{base}` but the literal is `{lit_ty}`"),
                span,
            );
            return Type::Named(alias.to_string());
        }
        if let (Some(c), Literal::CString(s) | Literal::String(s)) = (constraint, lit) {
            if let Ok(re) = SafeRegex::compile(&c.pattern, c.cstring || base == Type::CString) {
                if !re.matches(s) {
                    self.err(
                        "constraint",
                        format!("'{s}' does not match the `{alias}` pattern {c}"),
                        span,
                    );
                }
            }
        }
        Type::Named(alias.to_string())
    }

    fn dollar(&mut self, name: &str, ctx: &Ctx, span: Span) -> Type {
        match name {
            "result" => {
                if ctx.place == Place::Ensures {
                    ctx.ret.clone()
                } else {
                    self.err("result-position", "`$result` may only be used in ensures clauses", span);
                    Type::Never
                }
            }
            "events" => {
                self.err(
                    "events-position",
                    "`$events` may only be used as `$events.contains(...)` in api requires clauses",
                    span,
                );
                Type::Never
            }
            _ => match ctx.fields.iter().find(|(f, _)| f == name) {
                Some((_, t)) if ctx.place == Place::Invariant => t.clone(),
                _ => {
                    self.err("unknown-identifier", format!("unknown identifier `${name}`"), span);
                    Type::Never
                }
            },
        }
    }

    fn binary(&mut self, op: BinOp, lhs: &mut Expr, rhs: &mut Expr, ctx: &mut Ctx, span: Span) -> Type {
        match op {
            BinOp::And | BinOp::Or => {
                self.expr(lhs, ctx, Some(&Type::Bool));
                self.expect(lhs, &Type::Bool);
                // `x === none || ...` style guards narrow the right operand.
                ctx.scopes.push(BTreeMap::new());
                let (is_none, is_some) = none_test(lhs);
                let narrowed = if op == BinOp::Or { is_none } else { is_some };
                if let Some(v) = narrowed {
                    self.narrow(ctx, &v);
                }
                self.expr(rhs, ctx, Some(&Type::Bool));
                ctx.scopes.pop();
                self.expect(rhs, &Type::Bool);
                Type::Bool
            }
            _ => {
                self.expr(lhs, ctx, None);
                let lt = lhs.ty().clone();
                self.expr(rhs, ctx, Some(&lt));
                let mut rt = rhs.ty().clone();
                if lt == none_type() && matches!(rt, Type::Option(_)) {
                    self.expr(lhs, ctx, Some(&rt.clone()));
                } else if rt == none_type() {
                    rt = lt.clone();
                }
                let lt = lhs.ty().clone();
                if lt == Type::Never || rt == Type::Never {
                    return if op.is_arith() { Type::Never } else { Type::Bool };
                }
                if join(&lt, &rt).is_none() {
                    self.mismatch(&lt, &rt, rhs.span);
                    return if op.is_arith() { lt } else { Type::Bool };
                }
                match op {
                    BinOp::Eq | BinOp::Ne => Type::Bool,
                    _ if !self.numeric(&lt) => {
                        self.err(
                            "operand-type",
                            format!("operator `{}` does not apply to `{lt}`", op.symbol()),
                            span,
                        );
                        if op.is_arith() {
                            Type::Never
                        } else {
                            Type::Bool
                        }
                    }
                    _ if op.is_compare() => Type::Bool,
                    _ => lt,
                }
            }
        }
    }

    fn construct(&mut self, entity: &str, args: &mut CtorArgs, ctx: &mut Ctx, span: Span) -> Type {
        let Some(fields) = self.sigs.entities.get(entity).cloned() else {
            let msg = if self.sigs.aliases.contains_key(entity) {
                format!("`{entity}` is an alias; use the literal form such as `'...'<{entity}>`")
            } else {
                format!("unknown entity `{entity}`")
            };
            self.err("unknown-type", msg, span);
            return Type::Never;
        };
        match args {
            CtorArgs::Named(given) => {
                let mut seen = BTreeSet::new();
                for (n, e) in given.iter_mut() {
                    let want = fields.iter().find(|(f, _)| f == n).map(|(_, t)| t.clone());
                    self.expr(e, ctx, want.as_ref());
                    match want {
                        Some(w) => self.expect(e, &w),
                        None => self.err("unknown-field", format!("`{entity}` has no field `{n}`"), e.span),
                    }
                    if !seen.insert(n.clone()) {
                        self.err("duplicate-field", format!("field `{n}` is given more than once"), e.span);
                    }
                }
                for (f, _) in &fields {
                    if !seen.contains(f) {
                        self.err("missing-field", format!("`{entity}` construction is missing field `{f}`"), span);
                    }
                }
            }
            CtorArgs::Positional(items) => {
                if items.len() != fields.len() {
                    self.err(
                        "arity",
                        format!("`{entity}` has {} field(s), found {}", fields.len(), items.len()),
                        span,
                    );
                }
                for (i, e) in items.iter_mut().enumerate() {
                    let want = fields.get(i).map(|(_, t)| t.clone());
                    self.expr(e, ctx, want.as_ref());
                    if let Some(w) = want {
                        self.expect(e, &w);
                    }
                }
            }
        }
        Type::Named(entity.to_string())
    }

    fn event_pattern(&mut self, pat: &mut Expr, ctx: &mut Ctx) {
        let span = pat.span;
        match &mut pat.kind {
            ExprKind::Pattern { entity, fields } => {
                let Some(decl) = self.sigs.entities.get(entity.as_str()).cloned() else {
                    self.err("unknown-type", format!("unknown entity `{entity}`"), span);
                    pat.ty = Some(Type::Never);
                    return;
                };
                for (n, e) in fields.iter_mut() {
                    let want = decl.iter().find(|(f, _)| f == n).map(|(_, t)| t.clone());
                    self.expr(e, ctx, want.as_ref());
                    match want {
                        Some(w) => self.expect(e, &w),
                        None => self.err("unknown-field", format!("`{entity}` has no field `{n}`"), e.span),
                    }
                }
                pat.ty = Some(Type::Named(entity.clone()));
            }
            ExprKind::Construct { .. } => self.expr(pat, ctx, None),
            _ => {
                self.err("event-pattern", "`$events.contains` expects an entity pattern", span);
                pat.ty = Some(Type::Never);
            }
        }
    }

    fn collection(
        &mut self,
        op: CollectionOp,
        receiver: &mut Expr,
        type_arg: &Option<Type>,
        lambda: &mut Option<Lambda>,
        ctx: &mut Ctx,
        span: Span,
    ) -> Type {
        self.expr(receiver, ctx, None);
        let elem = match receiver.ty() {
            Type::List(t) => (**t).clone(),
            Type::Never => return Type::Never,
            other => {
                let other = other.clone();
                self.err(
                    "operand-type",
                    format!("`{}` needs a list receiver, found `{other}`", op.name()),
                    receiver.span,
                );
                return Type::Never;
            }
        };
        if op == CollectionOp::Sum {
            if lambda.is_some() {
                self.err("arity", "`sum` takes no function argument", span);
            }
            if !self.numeric(&elem) {
                self.err("operand-type", format!("`sum` needs numeric elements, found `{elem}`"), span);
            }
            return elem;
        }
        let Some(l) = lambda else {
            self.err("arity", format!("`{}` needs a function argument", op.name()), span);
            return Type::Never;
        };
        if let Some(pt) = &l.param_ty {
            if pt != &elem {
                self.mismatch(&elem, &pt.clone(), span);
            }
        }
        ctx.scopes.push(BTreeMap::from([(
            l.param.clone(),
            Binding {
                ty: elem.clone(),
                mutable: false,
                narrowed: false,
            },
        )]));
        let body_want = match op {
            CollectionOp::Map => type_arg.clone(),
            _ => Some(Type::Bool),
        };
        self.expr(&mut l.body, ctx, body_want.as_ref());
        ctx.scopes.pop();
        match op {
            CollectionOp::Map => {
                let out = match type_arg {
                    Some(t) => {
                        self.resolve(t, span);
                        self.expect(&l.body, t);
                        t.clone()
                    }
                    None => l.body.ty().clone(),
                };
                Type::list(out)
            }
            CollectionOp::Filter => {
                self.expect(&l.body, &Type::Bool);
                Type::list(elem)
            }
            _ => {
                self.expect(&l.body, &Type::Bool);
                Type::Bool
            }
        }
    }

    fn recursion(&mut self, m: &SourceModule) {
        for f in &m.functions {
            let mut stack = vec![f.name.clone()];
            let mut seen = BTreeSet::new();
            while let Some(n) = stack.pop() {
                for callee in self.calls.get(&n).into_iter().flatten() {
                    if callee == &f.name {
                        self.diags.push(Diagnostic::error(
                            "recursion",
                            format!("`{}` is recursive; recursion is not supported", f.name),
                            f.span,
                        ));
                        stack.clear();
                        break;
                    }
                    if seen.insert(callee.clone()) {
                        stack.push(callee.clone());
                    }
                }
            }
        }
    }
}

fn contains_never(t: &Type) -> bool {
    match t {
        Type::Never => true,
        Type::List(i) | Type::Option(i) => contains_never(i),
        _ => false,
    }
}

/// For `x === none` returns `(Some(x), None)`; for `x !== none` returns
/// `(None, Some(x))`.
fn none_test(cond: &Expr) -> (Option<String>, Option<String>) {
    if let ExprKind::Binary { op, lhs, rhs } = &cond.kind {
        let var = match (&lhs.kind, &rhs.kind) {
            (ExprKind::Var { name, .. }, ExprKind::Lit(Literal::None))
            | (ExprKind::Lit(Literal::None), ExprKind::Var { name, .. }) => Some(name.clone()),
            _ => None,
        };
        match op {
            BinOp::Eq => return (var, None),
            BinOp::Ne => return (None, var),
            _ => {}
        }
    }
    (None, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errs(src: &str) -> Vec<Diagnostic> {
        check_source(src).unwrap_err()
    }

    #[test]
    fn sign_typechecks() {
        let m = check_source(include_str!("../../../corpus/sign.bsq")).unwrap();
        assert_eq!(m.function("sign").unwrap().ret, Type::Int);
    }

    #[test]
    fn corpus_typechecks() {
        for src in [
            include_str!("../../../corpus/collections.bsq"),
            include_str!("../../../corpus/temps.bsq"),
            include_str!("../../../corpus/holes.bsq"),
            include_str!("../../../corpus/order.bsq"),
            include_str!("../../../corpus/payments.bsq"),
        ] {
            if let Err(d) = check_source(src) {
                panic!("{d:?}");
            }
        }
    }

    #[test]
    fn alias_is_not_its_base() {
        let d = errs(
            "type MilliSeconds = Int;
             function wait(duration: MilliSeconds): Int { return 0i; }
             function go(): Int { return wait(5i); }",
        );
        assert_eq!(d[0].code, "alias-confusion");
        let ok = check_source(
            "type MilliSeconds = Int;
             function wait(duration: MilliSeconds): Int { return 0i; }
             function go(): Int { return wait(5<MilliSeconds>); }",
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn distinct_aliases_do_not_mix() {
        let d = errs(
            "type F = Int; type C = Int;
             function f(a: F, b: C): F { return a + b; }",
        );
        assert_eq!(d[0].code, "alias-confusion");
    }

    #[test]
    fn let_is_immutable() {
        let d = errs("function f(): Int { let x = 1i; x = 2i; return x; }");
        assert!(d[0].message.contains("immutable binding"));
    }

    #[test]
    fn unknown_identifier() {
        let d = errs("function f(): Int { return y; }");
        assert_eq!(d[0].code, "unknown-identifier");
        assert!(d[0].span.is_within(32));
    }

    #[test]
    fn events_only_in_api_requires() {
        let d = errs(
            "entity E { field a: Int; }
             function f(): Bool { return $events.contains(E{|a=1i|}); }",
        );
        assert_eq!(d[0].code, "events-position");
    }

    #[test]
    fn result_only_in_ensures() {
        let d = errs("function f(): Int requires $result > 0i; { return 1i; }");
        assert_eq!(d[0].code, "result-position");
    }

    #[test]
    fn invariant_must_be_bool() {
        let d = errs("entity E { field a: Int; invariant $a + 1i; }");
        assert!(d.iter().any(|d| d.code == "invariant-type" || d.code == "type-mismatch"));
    }

    #[test]
    fn pure_functions_cannot_call_apis() {
        let d = errs(
            "api ping(): Int { return 1i; }
             function f(): Int { return api ping(env{}); }",
        );
        assert_eq!(d[0].code, "purity");
    }

    #[test]
    fn recursion_rejected() {
        let d = errs("function f(x: Int): Int { return f(x); }");
        assert_eq!(d[0].code, "recursion");
    }

    #[test]
    fn missing_return() {
        let d = errs("function f(x: Int): Int { if (x < 0i) { return 1i; } }");
        assert_eq!(d[0].code, "missing-return");
    }

    #[test]
    fn literal_constraint_checked() {
        let d = errs(
            "type Zip = CString of /[0-9]{5}/c;
             function f(): Zip { return '4050'<Zip>; }",
        );
        assert_eq!(d[0].code, "constraint");
    }

    #[test]
    fn none_check_narrows() {
        let m = check_source(
            "function f(x: Option<Int>): Int {
               if (x === none) { return 0i; }
               return x + 1i;
             }",
        )
        .unwrap();
        let Body::Block(b) = &m.function("f").unwrap().body else { panic!() };
        let StmtKind::Return(Some(e)) = &b[1].kind else { panic!() };
        let ExprKind::Binary { lhs, .. } = &e.kind else { panic!() };
        assert!(matches!(lhs.kind, ExprKind::Var { unwrap: true, .. }));
    }

    #[test]
    fn hole_scope_collects_variables() {
        let m = check_source(include_str!("../../../corpus/holes.bsq")).unwrap();
        let Body::Hole(h) = &m.function("abs").unwrap().body else { panic!() };
        assert_eq!(h.scope, vec![("x".to_string(), Type::Int)]);
        assert_eq!(h.ty, Some(Type::Int));
    }

    #[test]
    fn sensitivity_is_transitive() {
        let m = check_source(include_str!("../../../corpus/order.bsq")).unwrap();
        assert!(m.is_sensitive(&Type::Named("Order".into())));
        assert!(m.is_sensitive(&Type::list(Type::Named("TIN".into()))));
        assert!(!m.is_sensitive(&Type::Named("OrderId".into())));
    }

    #[test]
    fn permission_slots_resolve() {
        let d = errs(
            "entity A { field r: CString; }
             api t(p: A): Int permissions={\\acct:${p.q}\\} { return 1i; }",
        );
        assert_eq!(d[0].code, "permission-slot");
    }

    #[test]
    fn duplicate_names() {
        let d = errs("type A = Int; entity A { field x: Int; }");
        assert_eq!(d[0].code, "duplicate-name");
    }
}
