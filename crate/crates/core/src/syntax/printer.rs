//! Pretty printer producing source that reparses to a structurally equal module.

use std::fmt::Write;

use super::ast::*;

pub fn print_module(m: &SourceModule) -> String {
    let mut p = Printer::default();
    for a in &m.aliases {
        p.alias(a);
    }
    for e in &m.entities {
        p.entity(e);
    }
    for a in &m.apis {
        p.api(a);
    }
    for a in &m.agents {
        p.doc(&a.doc, 0);
        p.out.push_str("agent ");
        p.out.push_str(&a.name);
        p.env_decls(&a.env);
        p.out.push_str(";\n\n");
    }
    for f in &m.functions {
        p.function(f);
    }
    for t in &m.chktests {
        p.doc(&t.doc, 0);
        let _ = write!(p.out, "chktest {}(", t.name);
        p.params(&t.params);
        let _ = write!(p.out, "): {} ", t.ret);
        p.block(&t.body, 0);
        p.out.push_str("\n\n");
    }
    p.out
}

pub fn print_expr(e: &Expr) -> String {
    let mut p = Printer::default();
    p.expr(e, 0);
    p.out
}

#[derive(Default)]
struct Printer {
    out: String,
}

pub(crate) fn quote(s: &str, q: char) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push(q);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            '\0' => out.push_str("\\0"),
            c if c == q => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out.push(q);
    out
}

pub fn literal_text(l: &Literal, with_suffix: bool) -> String {
    match l {
        Literal::Int(i) if with_suffix => format!("{i}i"),
        Literal::Int(i) => i.to_string(),
        Literal::Decimal(d) if with_suffix => format!("{d}d"),
        Literal::Decimal(d) => d.to_string(),
        Literal::Bool(b) => b.to_string(),
        Literal::CString(s) => quote(s, '\''),
        Literal::String(s) => quote(s, '"'),
        Literal::None => "none".into(),
    }
}

impl Printer {
    fn indent(&mut self, n: usize) {
        for _ in 0..n {
            self.out.push_str("  ");
        }
    }

    fn doc(&mut self, doc: &Option<String>, ind: usize) {
        if let Some(d) = doc {
            self.indent(ind);
            if d.contains('\n') {
                self.out.push_str("%**\n");
                for line in d.lines() {
                    self.indent(ind);
                    let _ = writeln!(self.out, " * {line}");
                }
                self.indent(ind);
                self.out.push_str(" **%\n");
            } else {
                let _ = writeln!(self.out, "%** {d} **%");
            }
        }
    }

    fn alias(&mut self, a: &TypeAliasDecl) {
        self.doc(&a.doc, 0);
        if a.sensitive {
            self.out.push_str("sensitive");
            if let Some(l) = &a.level {
                let _ = write!(self.out, "({l})");
            }
            self.out.push(' ');
        }
        let _ = write!(self.out, "type {} = {}", a.name, a.base);
        if let Some(c) = &a.constraint {
            let _ = write!(self.out, " of {c}");
        }
        self.out.push_str(";\n");
    }

    fn entity(&mut self, e: &EntityDecl) {
        self.doc(&e.doc, 0);
        let _ = writeln!(self.out, "entity {} {{", e.name);
        for f in &e.fields {
            let _ = writeln!(self.out, "  field {}: {};", f.name, f.ty);
        }
        for inv in &e.invariants {
            self.out.push_str("  invariant ");
            self.expr(&inv.expr, 0);
            self.out.push_str(";\n");
        }
        self.out.push_str("}\n\n");
    }

    fn params(&mut self, ps: &[Param]) {
        for (i, p) in ps.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            let _ = write!(self.out, "{}: {}", p.name, p.ty);
        }
    }

    fn env_decls(&mut self, env: &[EnvDecl]) {
        if env.is_empty() {
            return;
        }
        self.out.push_str(" env={");
        for (i, e) in env.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            let _ = write!(self.out, "{}: {}", e.name, e.ty);
        }
        self.out.push('}');
    }

    fn contracts(&mut self, requires: &[Clause], ensures: &[Clause]) {
        for (kw, cs) in [("requires", requires), ("ensures", ensures)] {
            for c in cs {
                let _ = write!(self.out, "\n  {kw} ");
                self.expr(&c.expr, 0);
                self.out.push(';');
            }
        }
    }

    fn api(&mut self, a: &ApiDecl) {
        self.doc(&a.doc, 0);
        let _ = write!(self.out, "api {}(", a.name);
        self.params(&a.params);
        let _ = write!(self.out, "): {}", a.ret);
        self.env_decls(&a.env);
        if !a.permissions.is_empty() {
            self.out.push_str(" permissions={");
            for (i, p) in a.permissions.iter().enumerate() {
                if i > 0 {
                    self.out.push_str(", ");
                }
                let _ = write!(self.out, "\\{}\\", p.text);
            }
            self.out.push('}');
        }
        self.contracts(&a.requires, &a.ensures);
        match &a.body {
            None => self.out.push_str("\n;\n\n"),
            Some(b) => {
                self.out.push('\n');
                self.block(b, 0);
                self.out.push_str("\n\n");
            }
        }
    }

    fn function(&mut self, f: &FunctionDecl) {
        self.doc(&f.doc, 0);
        let kw = match f.kind {
            FunctionKind::Function => "function",
            FunctionKind::Action => "action",
        };
        let _ = write!(self.out, "{kw} {}(", f.name);
        self.params(&f.params);
        let _ = write!(self.out, "): {}", f.ret);
        self.env_decls(&f.env);
        self.contracts(&f.requires, &f.ensures);
        self.out.push('\n');
        match &f.body {
            Body::Block(b) => self.block(b, 0),
            Body::Hole(h) => {
                self.out.push_str("{\n");
                self.doc(&h.doc, 1);
                self.indent(1);
                self.hole(&HoleExpr { doc: None, ..h.clone() });
                self.out.push_str(";\n}");
            }
        }
        self.out.push_str("\n\n");
    }

    fn block(&mut self, b: &Block, ind: usize) {
        self.out.push_str("{\n");
        for s in b {
            self.stmt(s, ind + 1);
        }
        self.indent(ind);
        self.out.push('}');
    }

    fn stmt(&mut self, s: &Stmt, ind: usize) {
        if let StmtKind::Expr(Expr {
            kind: ExprKind::Hole(h),
            ..
        }) = &s.kind
        {
            self.doc(&h.doc, ind);
            self.indent(ind);
            self.hole(&HoleExpr { doc: None, ..h.clone() });
            self.out.push_str(";\n");
            return;
        }
        self.indent(ind);
        match &s.kind {
            StmtKind::VarDecl {
                mutable,
                name,
                ty,
                init,
            } => {
                let _ = write!(self.out, "{} {name}", if *mutable { "var" } else { "let" });
                if let Some(t) = ty {
                    let _ = write!(self.out, ": {t}");
                }
                self.out.push_str(" = ");
                self.expr(init, 0);
                self.out.push_str(";\n");
            }
            StmtKind::Assign { name, value } => {
                let _ = write!(self.out, "{name} = ");
                self.expr(value, 0);
                self.out.push_str(";\n");
            }
            StmtKind::If { .. } => {
                self.if_stmt(s, ind);
                self.out.push('\n');
            }
            StmtKind::Return(v) => {
                self.out.push_str("return");
                if let Some(v) = v {
                    self.out.push(' ');
                    self.expr(v, 0);
                }
                self.out.push_str(";\n");
            }
            StmtKind::Assert(c) => {
                self.out.push_str("assert ");
                self.expr(&c.expr, 0);
                self.out.push_str(";\n");
            }
            StmtKind::Expr(e) => {
                self.expr(e, 0);
                self.out.push_str(";\n");
            }
        }
    }

    fn if_stmt(&mut self, s: &Stmt, ind: usize) {
        let StmtKind::If { cond, then, els } = &s.kind else {
            return;
        };
        self.out.push_str("if (");
        self.expr(cond, 0);
        self.out.push_str(") ");
        self.block(then, ind);
        if let Some(els) = els {
            self.out.push_str(" else ");
            match els.as_slice() {
                [inner] if matches!(inner.kind, StmtKind::If { .. }) => self.if_stmt(inner, ind),
                _ => self.block(els, ind),
            }
        }
    }

    fn env_arg(&mut self, env: &EnvArg) {
        match env {
            EnvArg::Empty => self.out.push_str("env{}"),
            EnvArg::Spread => self.out.push_str("env{...}"),
            EnvArg::Bindings(bs) => {
                self.out.push_str("env{");
                self.named(bs);
                self.out.push('}');
            }
        }
    }

    fn named(&mut self, fields: &[(String, Expr)]) {
        for (i, (n, e)) in fields.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            let _ = write!(self.out, "{n}=");
            self.expr(e, 0);
        }
    }

    fn list(&mut self, items: &[Expr]) {
        for (i, e) in items.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.expr(e, 0);
        }
    }

    fn hole(&mut self, h: &HoleExpr) {
        self.out.push('?');
        self.out.push_str(h.name.as_deref().unwrap_or("_"));
        if h.examples {
            self.out.push_str("(examples = true)");
        }
        if let Some(t) = &h.ty {
            let _ = write!(self.out, " -> {t}");
        }
    }

    /// `ctx` is the binding strength required of `e`; looser expressions
    /// are parenthesized.
    fn expr(&mut self, e: &Expr, ctx: u8) {
        match &e.kind {
            ExprKind::Lit(Literal::Int(i)) if *i < 0 => {
                let _ = write!(self.out, "(-{}i)", i.unsigned_abs());
            }
            ExprKind::Lit(l) => self.out.push_str(&literal_text(l, true)),
            ExprKind::AliasLit { lit, alias } => {
                let _ = write!(self.out, "{}<{alias}>", literal_text(lit, false));
            }
            ExprKind::Var { name, .. } => self.out.push_str(name),
            ExprKind::Dollar(n) => {
                let _ = write!(self.out, "${n}");
            }
            ExprKind::EnvRead(n) => {
                let _ = write!(self.out, "env.{n}");
            }
            ExprKind::EnvRecord(env) => self.env_arg(env),
            ExprKind::Unary { op, operand } => {
                if ctx > 7 {
                    self.out.push('(');
                }
                self.out.push_str(match op {
                    UnOp::Neg => "-",
                    UnOp::Not => "!",
                });
                self.expr(operand, 7);
                if ctx > 7 {
                    self.out.push(')');
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let prec = op.precedence();
                let paren = prec < ctx;
                if paren {
                    self.out.push('(');
                }
                self.expr(lhs, if op.is_compare() { prec + 1 } else { prec });
                let _ = write!(self.out, " {} ", op.symbol());
                self.expr(rhs, prec + 1);
                if paren {
                    self.out.push(')');
                }
            }
            ExprKind::If { cond, then, els } => {
                if ctx > 0 {
                    self.out.push('(');
                }
                self.out.push_str("if (");
                self.expr(cond, 0);
                self.out.push_str(") then ");
                self.expr(then, 0);
                self.out.push_str(" else ");
                self.expr(els, 0);
                if ctx > 0 {
                    self.out.push(')');
                }
            }
            ExprKind::Field { base, name } => {
                self.expr(base, 8);
                let _ = write!(self.out, ".{name}");
            }
            ExprKind::Call { name, args } => {
                let _ = write!(self.out, "{name}(");
                self.list(args);
                self.out.push(')');
            }
            ExprKind::Construct { entity, args } => {
                let _ = write!(self.out, "{entity}{{");
                match args {
                    CtorArgs::Named(f) => self.named(f),
                    CtorArgs::Positional(items) => self.list(items),
                }
                self.out.push('}');
            }
            ExprKind::Pattern { entity, fields } => {
                let _ = write!(self.out, "{entity}{{|");
                self.named(fields);
                self.out.push_str("|}");
            }
            ExprKind::ListLit { elem, items } => {
                let _ = write!(self.out, "List<{elem}>{{");
                self.list(items);
                self.out.push('}');
            }
            ExprKind::Some(inner) => {
                self.out.push_str("some(");
                self.expr(inner, 0);
                self.out.push(')');
            }
            ExprKind::Collection {
                op,
                receiver,
                type_arg,
                lambda,
            } => {
                self.expr(receiver, 8);
                let _ = write!(self.out, ".{}", op.name());
                if let Some(t) = type_arg {
                    let _ = write!(self.out, "<{t}>");
                }
                self.out.push('(');
                if let Some(l) = lambda {
                    let kw = match l.kind {
                        LambdaKind::Pred => "pred",
                        LambdaKind::Fn => "fn",
                    };
                    let _ = write!(self.out, "{kw}({}", l.param);
                    if let Some(t) = &l.param_ty {
                        let _ = write!(self.out, ": {t}");
                    }
                    self.out.push_str(") => ");
                    self.expr(&l.body, 0);
                }
                self.out.push(')');
            }
            ExprKind::ApiCall { api, env, args } => {
                let _ = write!(self.out, "api {api}(");
                self.env_arg(env);
                for a in args {
                    self.out.push_str(", ");
                    self.expr(a, 0);
                }
                self.out.push(')');
            }
            ExprKind::AgentCall {
                agent,
                shape,
                env,
                args,
            } => {
                let _ = write!(self.out, "agent {agent}<{shape}>(");
                self.env_arg(env);
                for a in args {
                    self.out.push_str(", ");
                    self.expr(a, 0);
                }
                self.out.push(')');
            }
            ExprKind::EventsContains(p) => {
                self.out.push_str("$events.contains(");
                self.expr(p, 0);
                self.out.push(')');
            }
            ExprKind::Hole(h) => {
                if h.doc.is_some() || ctx > 0 {
                    self.out.push('(');
                }
                if let Some(d) = &h.doc {
                    let _ = write!(self.out, "%** {d} **% ");
                }
                self.hole(h);
                if h.doc.is_some() || ctx > 0 {
                    self.out.push(')');
                }
            }
            ExprKind::Fail(m) => {
                self.out.push_str("fail(");
                self.expr(m, 0);
                self.out.push(')');
            }
        }
    }
}
