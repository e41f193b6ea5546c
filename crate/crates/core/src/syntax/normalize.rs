//! Strips positions and checker annotations so two modules can be compared
//! structurally.

use super::ast::*;
use crate::span::Span;

pub fn strip_module(m: &mut SourceModule) {
    for a in &mut m.aliases {
        a.span = Span::default();
    }
    for e in &mut m.entities {
        e.span = Span::default();
        for f in &mut e.fields {
            f.span = Span::default();
        }
        e.invariants.iter_mut().for_each(clause);
    }
    for f in &mut m.functions {
        f.span = Span::default();
        params(&mut f.params);
        env(&mut f.env);
        f.requires.iter_mut().for_each(clause);
        f.ensures.iter_mut().for_each(clause);
        match &mut f.body {
            Body::Block(b) => block(b),
            Body::Hole(h) => h.scope.clear(),
        }
    }
    for a in &mut m.apis {
        a.span = Span::default();
        params(&mut a.params);
        env(&mut a.env);
        for p in &mut a.permissions {
            p.span = Span::default();
        }
        a.requires.iter_mut().for_each(clause);
        a.ensures.iter_mut().for_each(clause);
        if let Some(b) = &mut a.body {
            block(b);
        }
    }
    for a in &mut m.agents {
        a.span = Span::default();
        env(&mut a.env);
    }
    for t in &mut m.chktests {
        t.span = Span::default();
        params(&mut t.params);
        block(&mut t.body);
    }
}

fn params(ps: &mut [Param]) {
    for p in ps {
        p.span = Span::default();
    }
}

fn env(es: &mut [EnvDecl]) {
    for e in es {
        e.span = Span::default();
    }
}

fn clause(c: &mut Clause) {
    c.text.clear();
    strip_expr(&mut c.expr);
}

pub fn block(b: &mut Block) {
    for s in b {
        s.span = Span::default();
        match &mut s.kind {
            StmtKind::VarDecl { init, .. } => strip_expr(init),
            StmtKind::Assign { value, .. } => strip_expr(value),
            StmtKind::If { cond, then, els } => {
                strip_expr(cond);
                block(then);
                if let Some(e) = els {
                    block(e);
                }
            }
            StmtKind::Return(v) => {
                if let Some(v) = v {
                    strip_expr(v);
                }
            }
            StmtKind::Assert(c) => clause(c),
            StmtKind::Expr(e) => strip_expr(e),
        }
    }
}

fn env_arg(e: &mut EnvArg) {
    if let EnvArg::Bindings(bs) = e {
        for (_, x) in bs {
            strip_expr(x);
        }
    }
}

pub fn strip_expr(e: &mut Expr) {
    e.span = Span::default();
    e.ty = None;
    match &mut e.kind {
        ExprKind::Lit(_)
        | ExprKind::AliasLit { .. }
        | ExprKind::Dollar(_)
        | ExprKind::EnvRead(_) => {}
        ExprKind::Var { unwrap, .. } => *unwrap = false,
        ExprKind::EnvRecord(env) => env_arg(env),
        ExprKind::Unary { operand, .. } => strip_expr(operand),
        ExprKind::Binary { lhs, rhs, .. } => {
            strip_expr(lhs);
            strip_expr(rhs);
        }
        ExprKind::If { cond, then, els } => {
            strip_expr(cond);
            strip_expr(then);
            strip_expr(els);
        }
        ExprKind::Field { base, .. } => strip_expr(base),
        ExprKind::Call { args, .. } | ExprKind::ListLit { items: args, .. } => {
            args.iter_mut().for_each(strip_expr)
        }
        ExprKind::Construct { args, .. } => match args {
            CtorArgs::Named(fs) => fs.iter_mut().for_each(|(_, x)| strip_expr(x)),
            CtorArgs::Positional(xs) => xs.iter_mut().for_each(strip_expr),
        },
        ExprKind::Pattern { fields, .. } => fields.iter_mut().for_each(|(_, x)| strip_expr(x)),
        ExprKind::Some(x) | ExprKind::EventsContains(x) | ExprKind::Fail(x) => strip_expr(x),
        ExprKind::Collection {
            receiver, lambda, ..
        } => {
            strip_expr(receiver);
            if let Some(l) = lambda {
                strip_expr(&mut l.body);
            }
        }
        ExprKind::ApiCall { env, args, .. } | ExprKind::AgentCall { env, args, .. } => {
            env_arg(env);
            args.iter_mut().for_each(strip_expr);
        }
        ExprKind::Hole(h) => h.scope.clear(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_module, print_module};

    fn round_trip(src: &str) {
        let mut a = parse_module(src).unwrap();
        let printed = print_module(&a);
        let mut b = parse_module(&printed).unwrap_or_else(|d| panic!("{printed}\n{d:?}"));
        strip_module(&mut a);
        strip_module(&mut b);
        assert_eq!(a, b, "{printed}");
    }

    #[test]
    fn corpus_round_trips() {
        for src in [
            include_str!("../../../../corpus/sign.bsq"),
            include_str!("../../../../corpus/collections.bsq"),
            include_str!("../../../../corpus/temps.bsq"),
            include_str!("../../../../corpus/holes.bsq"),
            include_str!("../../../../corpus/order.bsq"),
            include_str!("../../../../corpus/payments.bsq"),
        ] {
            round_trip(src);
        }
    }

    #[test]
    fn precedence_survives_printing() {
        round_trip(
            "function f(a: Int, b: Int): Bool { return (a - b) - (a - b) * 2i < -(a + b) || !(a === b) && true; }",
        );
        round_trip("function g(a: Int): Int { return if (a < 0i) then (-a) else a; }");
    }
}
