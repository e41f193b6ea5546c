use crate::syntax::ast::*;
use crate::types::TypedModule;
use crate::value::{int_add, int_div, int_mul, int_neg, int_sub, Decimal, Value};

use super::holes;
use super::{api_policy, conforms, env_read, make_alias, ApiCallRecord, EnvRecord, Fault, FaultKind, HostCall, Runtime};

enum Flow {
    Next,
    Return(Value),
}

struct Frame<'d> {
    owner: &'d str,
    vars: Vec<(String, Value)>,
    marks: Vec<usize>,
    env: EnvRecord,
    fields: Vec<(String, Value)>,
    result: Option<Value>,
}

impl<'d> Frame<'d> {
    fn new(owner: &'d str, env: EnvRecord) -> Self {
        Self {
            owner,
            vars: Vec::new(),
            marks: Vec::new(),
            env,
            fields: Vec::new(),
            result: None,
        }
    }

    fn bind(&mut self, name: &str, v: Value) {
        self.vars.push((name.to_string(), v));
    }

    fn get(&self, name: &str) -> Option<&Value> {
        self.vars.iter().rev().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    fn set(&mut self, name: &str, v: Value) -> bool {
        match self.vars.iter_mut().rev().find(|(n, _)| n == name) {
            Some(slot) => {
                slot.1 = v;
                true
            }
            None => false,
        }
    }

    fn push(&mut self) {
        self.marks.push(self.vars.len());
    }

    fn pop(&mut self) {
        let m = self.marks.pop().unwrap_or(0);
        self.vars.truncate(m);
    }

    fn fault(&self, kind: FaultKind, msg: impl Into<String>, span: Span) -> Fault {
        Fault::new(kind, msg).at(span).in_decl(self.owner)
    }
}

use crate::span::Span;

fn check(rt: &mut Runtime<'_>, fr: &mut Frame<'_>, c: &Clause, kind: FaultKind) -> Result<(), Fault> {
    let v = eval(rt, fr, &c.expr)?;
    if v.as_bool() == Some(true) {
        Ok(())
    } else {
        Err(Fault::clause(kind, &c.text, c.expr.span, fr.owner))
    }
}

pub(super) fn call_function<'m>(
    rt: &mut Runtime<'m>,
    f: &'m FunctionDecl,
    env: EnvRecord,
    args: Vec<Value>,
) -> Result<Value, Fault> {
    let mut fr = Frame::new(&f.name, env);
    for (p, a) in f.params.iter().zip(args) {
        fr.bind(&p.name, a);
    }
    for c in &f.requires {
        check(rt, &mut fr, c, FaultKind::Precondition)?;
    }
    let result = match &f.body {
        Body::Block(b) => match exec_block(rt, &mut fr, b)? {
            Flow::Return(v) => v,
            Flow::Next => Value::Unit,
        },
        Body::Hole(h) => {
            let args = f
                .params
                .iter()
                .map(|p| (p.name.clone(), fr.get(&p.name).cloned().unwrap_or(Value::Unit)))
                .collect();
            holes::execute(rt, h, &f.ret, args).map_err(|e| e.at(f.span).in_decl(&f.name))?
        }
    };
    fr.result = Some(result.clone());
    for c in &f.ensures {
        check(rt, &mut fr, c, FaultKind::Postcondition)?;
    }
    Ok(result)
}

pub(super) fn invoke_api<'m>(
    rt: &mut Runtime<'m>,
    api: &'m ApiDecl,
    env: &EnvRecord,
    args: Vec<Value>,
) -> Result<Value, Fault> {
    rt.check_args(&api.name, &api.params.iter().map(|p| p.ty.clone()).collect::<Vec<_>>(), &args)?;
    let mut own_env = EnvRecord::new();
    for e in &api.env {
        let v = env_read(env, &e.name).map_err(|f| f.in_decl(&api.name).at(e.span))?;
        conforms(rt.module, v, &e.ty).map_err(|m| {
            Fault::new(FaultKind::EnvMissing, format!("env `{}`: {m}", e.name))
                .in_decl(&api.name)
                .at(e.span)
        })?;
        own_env.insert(e.name.clone(), v.clone());
    }
    let named: Vec<(String, Value)> = api.params.iter().map(|p| p.name.clone()).zip(args).collect();
    let policy = api_policy(api, &named)?;
    let mut fr = Frame::new(&api.name, own_env);
    for (n, v) in &named {
        fr.bind(n, v.clone());
    }
    for c in &api.requires {
        check(rt, &mut fr, c, FaultKind::Precondition)?;
    }
    rt.calls.push(ApiCallRecord {
        api: api.name.clone(),
        args: named.clone(),
        policy: policy.allowed().iter().map(|g| g.to_string()).collect(),
    });
    let result = match &api.body {
        Some(b) => match exec_block(rt, &mut fr, b)? {
            Flow::Return(v) => v,
            Flow::Next => Value::Unit,
        },
        None => {
            let host = rt.host_for(&api.name).ok_or_else(|| {
                Fault::new(FaultKind::Unbound, format!("api `{}` has no implementation bound", api.name))
                    .in_decl(&api.name)
            })?;
            let call = HostCall {
                api,
                args: &named,
                env: &fr.env,
                sandbox: &policy,
            };
            let v = host.call(&call).map_err(|f| f.in_decl(&api.name))?;
            conforms(rt.module, &v, &api.ret)
                .map_err(|m| Fault::new(FaultKind::Type, format!("host result: {m}")).in_decl(&api.name))?;
            v
        }
    };
    fr.result = Some(result.clone());
    for c in &api.ensures {
        check(rt, &mut fr, c, FaultKind::Postcondition)?;
    }
    Ok(result)
}

pub(super) fn run_chktest<'m>(rt: &mut Runtime<'m>, t: &'m ChkTestDecl, args: Vec<Value>) -> Result<(), Fault> {
    let mut fr = Frame::new(&t.name, EnvRecord::new());
    for (p, a) in t.params.iter().zip(args) {
        fr.bind(&p.name, a);
    }
    match exec_block(rt, &mut fr, &t.body)? {
        Flow::Return(Value::Bool(false)) => Err(Fault::new(FaultKind::Assertion, "chktest returned false")
            .at(t.span)
            .in_decl(&t.name)),
        _ => Ok(()),
    }
}

pub(super) fn construct(rt: &mut Runtime<'_>, name: &str, fields: Vec<(String, Value)>) -> Result<Value, Fault> {
    let m: &TypedModule = rt.module;
    let decl = m
        .entity(name)
        .ok_or_else(|| Fault::new(FaultKind::Type, format!("unknown entity `{name}`")))?;
    if decl.fields.len() != fields.len() {
        return Err(Fault::new(
            FaultKind::Type,
            format!("`{name}` has {} field(s), given {}", decl.fields.len(), fields.len()),
        ));
    }
    for (d, (f, v)) in decl.fields.iter().zip(&fields) {
        if d.name != *f {
            return Err(Fault::new(FaultKind::Type, format!("`{name}` field `{}` given as `{f}`", d.name)));
        }
        conforms(m, v, &d.ty).map_err(|msg| Fault::new(FaultKind::Type, format!("field `{f}`: {msg}")))?;
    }
    if !decl.invariants.is_empty() {
        let mut fr = Frame::new(&decl.name, EnvRecord::new());
        fr.fields = fields.clone();
        for c in &decl.invariants {
            check(rt, &mut fr, c, FaultKind::Invariant)?;
        }
    }
    Ok(Value::Entity {
        name: name.to_string(),
        fields,
    })
}

fn exec_block(rt: &mut Runtime<'_>, fr: &mut Frame<'_>, b: &Block) -> Result<Flow, Fault> {
    fr.push();
    let r = exec_stmts(rt, fr, b);
    fr.pop();
    r
}

fn exec_stmts(rt: &mut Runtime<'_>, fr: &mut Frame<'_>, b: &Block) -> Result<Flow, Fault> {
    for s in b {
        match &s.kind {
            StmtKind::VarDecl { name, init, .. } => {
                let v = eval(rt, fr, init)?;
                fr.bind(name, v);
            }
            StmtKind::Assign { name, value } => {
                let v = eval(rt, fr, value)?;
                if !fr.set(name, v) {
                    return Err(fr.fault(FaultKind::Type, format!("assignment to unbound `{name}`"), s.span));
                }
            }
            StmtKind::If { cond, then, els } => {
                let c = eval(rt, fr, cond)?;
                let flow = if c.as_bool() == Some(true) {
                    exec_block(rt, fr, then)?
                } else if let Some(e) = els {
                    exec_block(rt, fr, e)?
                } else {
                    Flow::Next
                };
                if let Flow::Return(_) = flow {
                    return Ok(flow);
                }
            }
            StmtKind::Return(v) => {
                let v = match v {
                    Some(e) => eval(rt, fr, e)?,
                    None => Value::Unit,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Assert(c) => check(rt, fr, c, FaultKind::Assertion)?,
            StmtKind::Expr(e) => {
                eval(rt, fr, e)?;
            }
        }
    }
    Ok(Flow::Next)
}

fn lit_value(l: &Literal) -> Value {
    match l {
        Literal::Int(i) => Value::Int(*i),
        Literal::Decimal(d) => Value::Decimal(*d),
        Literal::Bool(b) => Value::Bool(*b),
        Literal::CString(s) => Value::CString(s.clone()),
        Literal::String(s) => Value::String(s.clone()),
        Literal::None => Value::none(),
    }
}

/// Re-wraps a numeric result in the alias of the operand it came from.
fn rewrap(like: &Value, v: Value) -> Value {
    match like {
        Value::Alias { name, sensitive, .. } => Value::alias(name.clone(), v, *sensitive),
        _ => v,
    }
}

fn env_arg(rt: &mut Runtime<'_>, fr: &mut Frame<'_>, e: &EnvArg) -> Result<EnvRecord, Fault> {
    Ok(match e {
        EnvArg::Empty => EnvRecord::new(),
        EnvArg::Spread => fr.env.clone(),
        EnvArg::Bindings(bs) => {
            let mut out = EnvRecord::new();
            for (n, x) in bs {
                let v = eval(rt, fr, x)?;
                out.insert(n.clone(), v);
            }
            out
        }
    })
}

fn eval(rt: &mut Runtime<'_>, fr: &mut Frame<'_>, e: &Expr) -> Result<Value, Fault> {
    let span = e.span;
    match &e.kind {
        ExprKind::Lit(l) => Ok(lit_value(l)),
        ExprKind::AliasLit { lit, alias } => {
            make_alias(rt.module, alias, lit_value(lit)).map_err(|f| f.at(span).in_decl(fr.owner))
        }
        ExprKind::Var { name, unwrap } => {
            let v = fr
                .get(name)
                .cloned()
                .ok_or_else(|| fr.fault(FaultKind::Type, format!("unbound variable `{name}`"), span))?;
            if *unwrap {
                match v {
                    Value::Option(Some(inner)) => Ok(*inner),
                    _ => Err(fr.fault(FaultKind::Type, format!("`{name}` is none"), span)),
                }
            } else {
                Ok(v)
            }
        }
        ExprKind::Dollar(name) => {
            let v = if name == "result" {
                fr.result.clone()
            } else {
                fr.fields.iter().find(|(f, _)| f == name).map(|(_, v)| v.clone())
            };
            v.ok_or_else(|| fr.fault(FaultKind::Type, format!("`${name}` is not available here"), span))
        }
        ExprKind::EnvRead(name) => env_read(&fr.env, name)
            .cloned()
            .map_err(|f| f.at(span).in_decl(fr.owner)),
        ExprKind::EnvRecord(_) => Err(fr.fault(FaultKind::Type, "environment record used as a value", span)),
        ExprKind::Unary { op, operand } => {
            let v = eval(rt, fr, operand)?;
            match (op, v.base()) {
                (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                (UnOp::Neg, Value::Int(i)) => Ok(rewrap(&v, Value::Int(int_neg(*i)))),
                (UnOp::Neg, Value::Decimal(d)) => Ok(rewrap(&v, Value::Decimal(d.neg()))),
                _ => Err(fr.fault(FaultKind::Type, "bad operand", span)),
            }
        }
        ExprKind::Binary { op, lhs, rhs } => binary(rt, fr, *op, lhs, rhs, span),
        ExprKind::If { cond, then, els } => {
            if eval(rt, fr, cond)?.as_bool() == Some(true) {
                eval(rt, fr, then)
            } else {
                eval(rt, fr, els)
            }
        }
        ExprKind::Field { base, name } => {
            let b = eval(rt, fr, base)?;
            b.base()
                .field(name)
                .cloned()
                .ok_or_else(|| fr.fault(FaultKind::Type, format!("no field `{name}`"), span))
        }
        ExprKind::Call { name, args } => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval(rt, fr, a)?);
            }
            let m: &TypedModule = rt.module;
            let f = m
                .function(name)
                .ok_or_else(|| fr.fault(FaultKind::Unbound, format!("no function `{name}`"), span))?;
            let mut env = fr.env.clone();
            env.retain(|k, _| f.env.iter().any(|d| &d.name == k));
            call_function(rt, f, env, vals)
        }
        ExprKind::Construct { entity, args } => {
            let m: &TypedModule = rt.module;
            let decl = m
                .entity(entity)
                .ok_or_else(|| fr.fault(FaultKind::Type, format!("unknown entity `{entity}`"), span))?;
            let fields = match args {
                CtorArgs::Named(given) => {
                    let mut vals = Vec::with_capacity(given.len());
                    for (n, x) in given {
                        vals.push((n.clone(), eval(rt, fr, x)?));
                    }
                    decl.fields
                        .iter()
                        .map(|d| {
                            let v = vals.iter().find(|(n, _)| *n == d.name).map(|(_, v)| v.clone());
                            (d.name.clone(), v.unwrap_or(Value::Unit))
                        })
                        .collect()
                }
                CtorArgs::Positional(items) => {
                    let mut out = Vec::with_capacity(items.len());
                    for (d, x) in decl.fields.iter().zip(items) {
                        out.push((d.name.clone(), eval(rt, fr, x)?));
                    }
                    out
                }
            };
            construct(rt, entity, fields)
        }
        ExprKind::Pattern { .. } => Err(fr.fault(FaultKind::Type, "pattern used as a value", span)),
        ExprKind::ListLit { items, .. } => {
            let mut out = Vec::with_capacity(items.len());
            for i in items {
                out.push(eval(rt, fr, i)?);
            }
            Ok(Value::List(out))
        }
        ExprKind::Some(inner) => Ok(Value::some(eval(rt, fr, inner)?)),
        ExprKind::Collection {
            op,
            receiver,
            lambda,
            ..
        } => {
            let Value::List(items) = eval(rt, fr, receiver)? else {
                return Err(fr.fault(FaultKind::Type, "collection receiver is not a list", span));
            };
            if *op == CollectionOp::Sum {
                let elem = match receiver.ty.as_ref() {
                    Some(Type::List(t)) => (**t).clone(),
                    _ => Type::Int,
                };
                return sum(rt.module, fr, &elem, items, span);
            }
            let l = lambda
                .as_ref()
                .ok_or_else(|| fr.fault(FaultKind::Type, "missing function argument", span))?;
            let mut out = Vec::new();
            for it in items {
                fr.push();
                fr.bind(&l.param, it.clone());
                let r = eval(rt, fr, &l.body);
                fr.pop();
                let r = r?;
                match op {
                    CollectionOp::AllOf if r.as_bool() != Some(true) => return Ok(Value::Bool(false)),
                    CollectionOp::NoneOf if r.as_bool() == Some(true) => return Ok(Value::Bool(false)),
                    CollectionOp::Map => out.push(r),
                    CollectionOp::Filter if r.as_bool() == Some(true) => out.push(it),
                    _ => {}
                }
            }
            Ok(match op {
                CollectionOp::AllOf | CollectionOp::NoneOf => Value::Bool(true),
                _ => Value::List(out),
            })
        }
        ExprKind::ApiCall { api, env, args } => {
            let env = env_arg(rt, fr, env)?;
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval(rt, fr, a)?);
            }
            let m: &TypedModule = rt.module;
            let decl = m
                .api(api)
                .ok_or_else(|| fr.fault(FaultKind::Unbound, format!("no api `{api}`"), span))?;
            invoke_api(rt, decl, &env, vals).map_err(|f| if f.span.is_none() { f.at(span) } else { f })
        }
        ExprKind::AgentCall {
            agent,
            shape,
            env,
            args,
        } => {
            let env = env_arg(rt, fr, env)?;
            let mut texts = Vec::with_capacity(args.len());
            for a in args {
                texts.push(eval(rt, fr, a)?.leaf_text().unwrap_or_default());
            }
            let m: &TypedModule = rt.module;
            if let Some(decl) = m.agent(agent) {
                for d in &decl.env {
                    env_read(&env, &d.name).map_err(|f| f.at(span).in_decl(fr.owner))?;
                }
            }
            let binding = rt.agents().get(agent).ok_or_else(|| {
                fr.fault(FaultKind::Transport, format!("no binding registered for agent `{agent}`"), span)
            })?;
            let input = texts.first().cloned().unwrap_or_default();
            let prompt = texts.get(1).cloned().unwrap_or_default();
            crate::agent::invoke_agent(m, binding.as_ref(), agent, &env, &input, &prompt, shape)
                .map_err(|f| f.at(span).in_decl(fr.owner))
        }
        ExprKind::EventsContains(pat) => match &pat.kind {
            ExprKind::Pattern { entity, fields } => {
                let mut vals = Vec::with_capacity(fields.len());
                for (n, x) in fields {
                    vals.push((n.clone(), eval(rt, fr, x)?));
                }
                Ok(Value::Bool(rt.events.contains(entity, &vals)))
            }
            _ => {
                let v = eval(rt, fr, pat)?;
                Ok(Value::Bool(rt.events.entries().contains(&v)))
            }
        },
        ExprKind::Hole(h) => {
            let args = h
                .scope
                .iter()
                .map(|(n, t)| {
                    let v = fr.get(n).cloned().unwrap_or(Value::Unit);
                    let v = match (t, v) {
                        (Type::Option(_), v) => v,
                        (_, Value::Option(Some(inner))) => *inner,
                        (_, v) => v,
                    };
                    (n.clone(), v)
                })
                .collect();
            let ty = h.ty.clone().or_else(|| e.ty.clone()).unwrap_or(Type::Never);
            holes::execute(rt, h, &ty, args).map_err(|f| f.at(span).in_decl(fr.owner))
        }
        ExprKind::Fail(msg) => {
            let m = eval(rt, fr, msg)?;
            Err(fr.fault(FaultKind::User, m.leaf_text().unwrap_or_default(), span))
        }
    }
}

fn sum(m: &TypedModule, fr: &Frame<'_>, elem: &Type, items: Vec<Value>, span: Span) -> Result<Value, Fault> {
    let base = m.base_type(elem);
    let mut acc = match base {
        Type::Decimal => Value::Decimal(Decimal::ZERO),
        _ => Value::Int(0),
    };
    for it in &items {
        acc = match (acc.base(), it.base()) {
            (Value::Int(a), Value::Int(b)) => Value::Int(
                int_add(*a, *b).ok_or_else(|| fr.fault(FaultKind::Overflow, "Int overflow in `sum`", span))?,
            ),
            (Value::Decimal(a), Value::Decimal(b)) => Value::Decimal(
                a.add(*b)
                    .ok_or_else(|| fr.fault(FaultKind::Overflow, "Decimal overflow in `sum`", span))?,
            ),
            _ => return Err(fr.fault(FaultKind::Type, "non-numeric element in `sum`", span)),
        };
    }
    Ok(match (elem, m.alias(&elem.to_string())) {
        (Type::Named(n), Some(a)) => Value::alias(n.clone(), acc, a.sensitive),
        _ => acc,
    })
}

fn binary(
    rt: &mut Runtime<'_>,
    fr: &mut Frame<'_>,
    op: BinOp,
    lhs: &Expr,
    rhs: &Expr,
    span: Span,
) -> Result<Value, Fault> {
    let l = eval(rt, fr, lhs)?;
    match op {
        BinOp::And if l.as_bool() != Some(true) => return Ok(Value::Bool(false)),
        BinOp::Or if l.as_bool() == Some(true) => return Ok(Value::Bool(true)),
        BinOp::And | BinOp::Or => return eval(rt, fr, rhs),
        _ => {}
    }
    let r = eval(rt, fr, rhs)?;
    match op {
        BinOp::Eq => return Ok(Value::Bool(l == r)),
        BinOp::Ne => return Ok(Value::Bool(l != r)),
        _ => {}
    }
    let (a, b) = (l.base(), r.base());
    if op.is_compare() {
        let ord = match (a, b) {
            (Value::Int(x), Value::Int(y)) => x.cmp(y),
            (Value::Decimal(x), Value::Decimal(y)) => x.cmp(y),
            _ => return Err(fr.fault(FaultKind::Type, "comparison of non-numeric values", span)),
        };
        let res = match op {
            BinOp::Lt => ord.is_lt(),
            BinOp::Le => ord.is_le(),
            BinOp::Gt => ord.is_gt(),
            _ => ord.is_ge(),
        };
        return Ok(Value::Bool(res));
    }
    let sym = op.symbol();
    let v = match (a, b) {
        (Value::Int(x), Value::Int(y)) => {
            if op == BinOp::Div && *y == 0 {
                return Err(fr.fault(FaultKind::DivByZero, "division by zero", span));
            }
            let r = match op {
                BinOp::Add => int_add(*x, *y),
                BinOp::Sub => int_sub(*x, *y),
                BinOp::Mul => int_mul(*x, *y),
                _ => int_div(*x, *y),
            };
            Value::Int(r.ok_or_else(|| fr.fault(FaultKind::Overflow, format!("Int overflow in `{sym}`"), span))?)
        }
        (Value::Decimal(x), Value::Decimal(y)) => {
            if op == BinOp::Div && y.scaled() == 0 {
                return Err(fr.fault(FaultKind::DivByZero, "division by zero", span));
            }
            let r = match op {
                BinOp::Add => x.add(*y),
                BinOp::Sub => x.sub(*y),
                BinOp::Mul => x.mul(*y),
                _ => x.div(*y),
            };
            Value::Decimal(
                r.ok_or_else(|| fr.fault(FaultKind::Overflow, format!("Decimal overflow in `{sym}`"), span))?,
            )
        }
        _ => return Err(fr.fault(FaultKind::Type, "arithmetic on non-numeric values", span)),
    };
    Ok(rewrap(&l, v))
}
