use std::collections::BTreeSet;

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use crate::span::{Diagnostic, Span};
use crate::value::Decimal;

/// Parses a complete module.
pub fn parse_module(src: &str) -> Result<SourceModule, Vec<Diagnostic>> {
    let tokens = tokenize(src)?;
    let mut p = Parser::new(src, tokens);
    match p.module() {
        Ok(m) => Ok(m),
        Err(d) => Err(vec![d]),
    }
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser<'s> {
    src: &'s str,
    toks: Vec<Token>,
    pos: usize,
    /// Expected-token set accumulated since the last consumed token.
    expected: BTreeSet<String>,
    /// Name of the declaration being parsed, for anonymous hole ids.
    decl_name: String,
    hole_counter: usize,
}

impl<'s> Parser<'s> {
    fn new(src: &'s str, toks: Vec<Token>) -> Self {
        Self {
            src,
            toks,
            pos: 0,
            expected: BTreeSet::new(),
            decl_name: String::new(),
            hole_counter: 0,
        }
    }

    fn peek(&self) -> Option<&TokenKind> {
        self.toks.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, n: usize) -> Option<&TokenKind> {
        self.toks.get(self.pos + n).map(|t| &t.kind)
    }

    fn at(&mut self, k: &TokenKind) -> bool {
        self.expected.insert(k.describe());
        self.peek() == Some(k)
    }

    fn eat(&mut self, k: &TokenKind) -> bool {
        if self.at(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        self.pos += 1;
        self.expected.clear();
        t
    }

    fn cur_span(&self) -> Span {
        match self.toks.get(self.pos) {
            Some(t) => t.span,
            None => {
                let end = self.src.len();
                let line = self.src.matches('\n').count() as u32 + 1;
                let col = self.src[self.src.rfind('\n').map_or(0, |i| i + 1)..]
                    .chars()
                    .count() as u32
                    + 1;
                Span::new(end, end, line, col)
            }
        }
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos - 1].span
    }

    fn error_here(&self) -> Diagnostic {
        let found = match self.peek() {
            Some(k) => k.describe(),
            None => "end of input".to_string(),
        };
        let expected: Vec<_> = self.expected.iter().cloned().collect();
        let msg = if expected.is_empty() {
            format!("unexpected {found}")
        } else if expected.len() == 1 {
            format!("expected {}, found {found}", expected[0])
        } else {
            format!("expected one of {}, found {found}", expected.join(", "))
        };
        Diagnostic::error("parse-syntax", msg, self.cur_span())
    }

    fn expect(&mut self, k: &TokenKind) -> PResult<Token> {
        if self.at(k) {
            Ok(self.bump())
        } else {
            Err(self.error_here())
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        self.expected.insert("identifier".into());
        match self.peek() {
            Some(TokenKind::Ident(_)) => {
                let t = self.bump();
                match t.kind {
                    TokenKind::Ident(n) => Ok((n, t.span)),
                    _ => unreachable!(),
                }
            }
            _ => Err(self.error_here()),
        }
    }

    fn doc(&mut self) -> Option<String> {
        let mut doc = None;
        while let Some(TokenKind::Doc(_)) = self.peek() {
            if let TokenKind::Doc(d) = self.bump().kind {
                doc = Some(d);
            }
        }
        doc
    }

    fn text(&self, span: Span) -> String {
        self.src[span.start..span.end].to_string()
    }

    // ---------------------------------------------------------------- module

    fn module(&mut self) -> PResult<SourceModule> {
        let mut m = SourceModule::default();
        loop {
            let doc = self.doc();
            if self.peek().is_none() {
                break;
            }
            self.hole_counter = 0;
            if self.at(&TokenKind::KwType) || self.at(&TokenKind::KwSensitive) {
                m.aliases.push(self.alias_decl(doc)?);
            } else if self.at(&TokenKind::KwEntity) {
                m.entities.push(self.entity_decl(doc)?);
            } else if self.at(&TokenKind::KwFunction) {
                m.functions.push(self.function_decl(doc, FunctionKind::Function)?);
            } else if self.at(&TokenKind::KwAction) {
                m.functions.push(self.function_decl(doc, FunctionKind::Action)?);
            } else if self.at(&TokenKind::KwApi) {
                m.apis.push(self.api_decl(doc)?);
            } else if self.at(&TokenKind::KwAgent) {
                m.agents.push(self.agent_decl(doc)?);
            } else if self.at(&TokenKind::KwChktest) {
                m.chktests.push(self.chktest_decl(doc)?);
            } else {
                return Err(self.error_here());
            }
        }
        Ok(m)
    }

    fn alias_decl(&mut self, doc: Option<String>) -> PResult<TypeAliasDecl> {
        let start = self.cur_span();
        let sensitive = self.eat(&TokenKind::KwSensitive);
        let mut level = None;
        if sensitive && self.eat(&TokenKind::LParen) {
            level = Some(self.ident()?.0);
            self.expect(&TokenKind::RParen)?;
        }
        self.expect(&TokenKind::KwType)?;
        let (name, _) = self.ident()?;
        self.expect(&TokenKind::Eq)?;
        let base = self.type_ref()?;
        let mut constraint = None;
        if self.eat(&TokenKind::KwOf) {
            self.expected.insert("regex literal".into());
            match self.peek() {
                Some(TokenKind::Regex { .. }) => {
                    if let TokenKind::Regex { pattern, cstring } = self.bump().kind {
                        constraint = Some(RegexLit { pattern, cstring });
                    }
                }
                _ => return Err(self.error_here()),
            }
        }
        self.expect(&TokenKind::Semi)?;
        Ok(TypeAliasDecl {
            name,
            base,
            constraint,
            sensitive,
            level,
            doc,
            span: start.to(self.prev_span()),
        })
    }

    fn entity_decl(&mut self, doc: Option<String>) -> PResult<EntityDecl> {
        let start = self.cur_span();
        self.expect(&TokenKind::KwEntity)?;
        let (name, _) = self.ident()?;
        self.decl_name = name.clone();
        self.expect(&TokenKind::LBrace)?;
        let mut fields = Vec::new();
        let mut invariants = Vec::new();
        while !self.at(&TokenKind::RBrace) {
            if self.eat(&TokenKind::KwInvariant) {
                invariants.push(self.clause()?);
                self.expect(&TokenKind::Semi)?;
                continue;
            }
            let fstart = self.cur_span();
            self.eat(&TokenKind::KwField);
            let (fname, _) = self.ident()?;
            self.expect(&TokenKind::Colon)?;
            let ty = self.type_ref()?;
            self.expect(&TokenKind::Semi)?;
            fields.push(FieldDecl {
                name: fname,
                ty,
                span: fstart.to(self.prev_span()),
            });
        }
        self.bump();
        Ok(EntityDecl {
            name,
            fields,
            invariants,
            doc,
            span: start.to(self.prev_span()),
        })
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect(&TokenKind::LParen)?;
        let mut params = Vec::new();
        if !self.eat(&TokenKind::RParen) {
            loop {
                let (name, s) = self.ident()?;
                self.expect(&TokenKind::Colon)?;
                let ty = self.type_ref()?;
                params.push(Param {
                    name,
                    ty,
                    span: s.to(self.prev_span()),
                });
                if self.eat(&TokenKind::RParen) {
                    break;
                }
                self.expect(&TokenKind::Comma)?;
            }
        }
        Ok(params)
    }

    fn env_decls(&mut self) -> PResult<Vec<EnvDecl>> {
        let mut env = Vec::new();
        if !self.eat(&TokenKind::KwEnv) {
            return Ok(env);
        }
        self.expect(&TokenKind::Eq)?;
        self.expect(&TokenKind::LBrace)?;
        while !self.eat(&TokenKind::RBrace) {
            let (name, s) = self.ident()?;
            self.expect(&TokenKind::Colon)?;
            let ty = self.type_ref()?;
            env.push(EnvDecl {
                name,
                ty,
                span: s.to(self.prev_span()),
            });
            if !self.eat(&TokenKind::Comma) {
                self.expect(&TokenKind::RBrace)?;
                break;
            }
        }
        Ok(env)
    }

    fn contracts(&mut self) -> PResult<(Vec<Clause>, Vec<Clause>)> {
        let mut requires = Vec::new();
        let mut ensures = Vec::new();
        loop {
            if self.eat(&TokenKind::KwRequires) {
                requires.push(self.clause()?);
                self.expect(&TokenKind::Semi)?;
            } else if self.eat(&TokenKind::KwEnsures) {
                ensures.push(self.clause()?);
                self.expect(&TokenKind::Semi)?;
            } else {
                return Ok((requires, ensures));
            }
        }
    }

    fn clause(&mut self) -> PResult<Clause> {
        let expr = self.expr()?;
        let text = self.text(expr.span);
        Ok(Clause { expr, text })
    }

    fn function_decl(&mut self, doc: Option<String>, kind: FunctionKind) -> PResult<FunctionDecl> {
        let start = self.cur_span();
        self.bump();
        let (name, _) = self.ident()?;
        self.decl_name = name.clone();
        let params = self.params()?;
        let ret = if kind == FunctionKind::Function || self.at(&TokenKind::Colon) {
            self.expect(&TokenKind::Colon)?;
            self.type_ref()?
        } else {
            Type::None
        };
        let env = if kind == FunctionKind::Action {
            self.env_decls()?
        } else {
            Vec::new()
        };
        let (requires, ensures) = self.contracts()?;
        let body = self.body()?;
        Ok(FunctionDecl {
            kind,
            name,
            params,
            ret,
            env,
            requires,
            ensures,
            body,
            doc,
            span: start.to(self.prev_span()),
        })
    }

    /// A block, or a block whose only statement is a hole (a body hole).
    fn body(&mut self) -> PResult<Body> {
        let block = self.block()?;
        if block.len() == 1 {
            if let StmtKind::Expr(Expr {
                kind: ExprKind::Hole(h),
                ..
            }) = &block[0].kind
            {
                if h.ty.is_none() {
                    return Ok(Body::Hole(h.clone()));
                }
            }
        }
        Ok(Body::Block(block))
    }

    fn api_decl(&mut self, doc: Option<String>) -> PResult<ApiDecl> {
        let start = self.cur_span();
        self.expect(&TokenKind::KwApi)?;
        let (name, _) = self.ident()?;
        self.decl_name = name.clone();
        let params = self.params()?;
        let ret = if self.eat(&TokenKind::Colon) {
            self.type_ref()?
        } else {
            Type::None
        };
        let env = self.env_decls()?;
        let mut permissions = Vec::new();
        if self.eat(&TokenKind::KwPermissions) {
            self.expect(&TokenKind::Eq)?;
            self.expect(&TokenKind::LBrace)?;
            while !self.eat(&TokenKind::RBrace) {
                self.expected.insert("permission glob".into());
                match self.peek() {
                    Some(TokenKind::Glob(_)) => {
                        let t = self.bump();
                        if let TokenKind::Glob(text) = t.kind {
                            permissions.push(PermissionTemplate { text, span: t.span });
                        }
                    }
                    _ => return Err(self.error_here()),
                }
                if !self.eat(&TokenKind::Comma) {
                    self.expect(&TokenKind::RBrace)?;
                    break;
                }
            }
        }
        let (requires, ensures) = self.contracts()?;
        let body = if self.eat(&TokenKind::Semi) {
            None
        } else {
            Some(self.block()?)
        };
        Ok(ApiDecl {
            name,
            params,
            ret,
            env,
            permissions,
            requires,
            ensures,
            body,
            doc,
            span: start.to(self.prev_span()),
        })
    }

    fn agent_name(&mut self) -> PResult<String> {
        let (mut name, _) = self.ident()?;
        while self.eat(&TokenKind::ColonColon) {
            name.push_str("::");
            name.push_str(&self.ident()?.0);
        }
        Ok(name)
    }

    fn agent_decl(&mut self, doc: Option<String>) -> PResult<AgentDecl> {
        let start = self.cur_span();
        self.expect(&TokenKind::KwAgent)?;
        let name = self.agent_name()?;
        let env = self.env_decls()?;
        self.expect(&TokenKind::Semi)?;
        Ok(AgentDecl {
            name,
            env,
            doc,
            span: start.to(self.prev_span()),
        })
    }

    fn chktest_decl(&mut self, doc: Option<String>) -> PResult<ChkTestDecl> {
        let start = self.cur_span();
        self.expect(&TokenKind::KwChktest)?;
        let (name, _) = self.ident()?;
        self.decl_name = name.clone();
        let params = self.params()?;
        self.expect(&TokenKind::Colon)?;
        let ret = self.type_ref()?;
        let body = self.block()?;
        Ok(ChkTestDecl {
            name,
            params,
            ret,
            body,
            doc,
            span: start.to(self.prev_span()),
        })
    }

    fn type_ref(&mut self) -> PResult<Type> {
        let (name, _) = self.ident()?;
        if let Some(t) = Type::from_primitive_name(&name) {
            return Ok(t);
        }
        match name.as_str() {
            "List" | "Option" => {
                self.expect(&TokenKind::Lt)?;
                let inner = self.type_ref()?;
                self.expect(&TokenKind::Gt)?;
                Ok(if name == "List" {
                    Type::list(inner)
                } else {
                    Type::option(inner)
                })
            }
            _ => Ok(Type::Named(name)),
        }
    }

    // ------------------------------------------------------------ statements

    fn block(&mut self) -> PResult<Block> {
        self.expect(&TokenKind::LBrace)?;
        let mut stmts = Vec::new();
        while !self.eat(&TokenKind::RBrace) {
            if self.peek().is_none() {
                return Err(self.error_here());
            }
            if let Some(s) = self.stmt()? {
                stmts.push(s);
            }
        }
        Ok(stmts)
    }

    fn stmt(&mut self) -> PResult<Option<Stmt>> {
        let doc = self.doc();
        let start = self.cur_span();
        if self.eat(&TokenKind::Ellipsis) {
            self.eat(&TokenKind::Semi);
            return Ok(None);
        }
        if self.at(&TokenKind::KwVar) || self.at(&TokenKind::KwLet) {
            let mutable = self.bump().kind == TokenKind::KwVar;
            let (name, _) = self.ident()?;
            let ty = if self.eat(&TokenKind::Colon) {
                Some(self.type_ref()?)
            } else {
                None
            };
            self.expect(&TokenKind::Eq)?;
            let init = self.expr()?;
            self.expect(&TokenKind::Semi)?;
            return Ok(Some(Stmt {
                kind: StmtKind::VarDecl {
                    mutable,
                    name,
                    ty,
                    init,
                },
                span: start.to(self.prev_span()),
            }));
        }
        if self.at(&TokenKind::KwIf) {
            return self.if_stmt().map(Some);
        }
        if self.eat(&TokenKind::KwReturn) {
            let value = if self.at(&TokenKind::Semi) {
                None
            } else {
                Some(self.expr()?)
            };
            self.expect(&TokenKind::Semi)?;
            return Ok(Some(Stmt {
                kind: StmtKind::Return(value),
                span: start.to(self.prev_span()),
            }));
        }
        if self.eat(&TokenKind::KwAssert) {
            let c = self.clause()?;
            self.expect(&TokenKind::Semi)?;
            return Ok(Some(Stmt {
                kind: StmtKind::Assert(c),
                span: start.to(self.prev_span()),
            }));
        }
        if let (Some(TokenKind::Ident(_)), Some(TokenKind::Eq)) = (self.peek(), self.peek_at(1)) {
            let (name, _) = self.ident()?;
            self.bump();
            let value = self.expr()?;
            self.expect(&TokenKind::Semi)?;
            return Ok(Some(Stmt {
                kind: StmtKind::Assign { name, value },
                span: start.to(self.prev_span()),
            }));
        }
        let mut e = self.expr()?;
        if let (Some(d), ExprKind::Hole(h)) = (doc, &mut e.kind) {
            h.doc = Some(d);
        }
        self.expect(&TokenKind::Semi)?;
        Ok(Some(Stmt {
            kind: StmtKind::Expr(e),
            span: start.to(self.prev_span()),
        }))
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let start = self.cur_span();
        self.expect(&TokenKind::KwIf)?;
        self.expect(&TokenKind::LParen)?;
        let cond = self.expr()?;
        self.expect(&TokenKind::RParen)?;
        let then = self.block()?;
        let els = if self.eat(&TokenKind::KwElse) {
            if self.at(&TokenKind::KwIf) {
                Some(vec![self.if_stmt()?])
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(Stmt {
            kind: StmtKind::If { cond, then, els },
            span: start.to(self.prev_span()),
        })
    }

    // ----------------------------------------------------------- expressions

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&mut self) -> Option<BinOp> {
        for (k, op) in [
            (TokenKind::OrOr, BinOp::Or),
            (TokenKind::AndAnd, BinOp::And),
            (TokenKind::EqEqEq, BinOp::Eq),
            (TokenKind::NotEqEq, BinOp::Ne),
            (TokenKind::Lt, BinOp::Lt),
            (TokenKind::Le, BinOp::Le),
            (TokenKind::Gt, BinOp::Gt),
            (TokenKind::Ge, BinOp::Ge),
            (TokenKind::Plus, BinOp::Add),
            (TokenKind::Minus, BinOp::Sub),
            (TokenKind::Star, BinOp::Mul),
            (TokenKind::Slash, BinOp::Div),
        ] {
            if self.at(&k) {
                return Some(op);
            }
        }
        None
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr::new(
                ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            );
            if op.is_compare() && self.binop().is_some_and(|o| o.is_compare()) {
                self.expected.clear();
                return Err(Diagnostic::error(
                    "parse-chained-compare",
                    "comparison operators cannot be chained; use `&&`",
                    self.cur_span(),
                ));
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.cur_span();
        let op = if self.eat(&TokenKind::Minus) {
            Some(UnOp::Neg)
        } else if self.eat(&TokenKind::Bang) {
            Some(UnOp::Not)
        } else {
            None
        };
        match op {
            Some(op) => {
                let operand = self.unary()?;
                let span = start.to(operand.span);
                Ok(Expr::new(
                    ExprKind::Unary {
                        op,
                        operand: Box::new(operand),
                    },
                    span,
                ))
            }
            None => self.postfix(),
        }
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.eat(&TokenKind::Dot) {
            let (name, nspan) = self.ident()?;
            if let Some(op) = CollectionOp::from_name(&name) {
                let type_arg = if self.eat(&TokenKind::Lt) {
                    let t = self.type_ref()?;
                    self.expect(&TokenKind::Gt)?;
                    Some(t)
                } else {
                    None
                };
                self.expect(&TokenKind::LParen)?;
                let lambda = if self.at(&TokenKind::RParen) {
                    None
                } else {
                    Some(self.lambda()?)
                };
                self.expect(&TokenKind::RParen)?;
                let span = e.span.to(self.prev_span());
                e = Expr::new(
                    ExprKind::Collection {
                        op,
                        receiver: Box::new(e),
                        type_arg,
                        lambda,
                    },
                    span,
                );
            } else if name == "contains" && matches!(e.kind, ExprKind::Dollar(ref d) if d == "events") {
                self.expect(&TokenKind::LParen)?;
                let pat = self.expr()?;
                self.expect(&TokenKind::RParen)?;
                let span = e.span.to(self.prev_span());
                e = Expr::new(ExprKind::EventsContains(Box::new(pat)), span);
            } else {
                let span = e.span.to(nspan);
                e = Expr::new(
                    ExprKind::Field {
                        base: Box::new(e),
                        name,
                    },
                    span,
                );
            }
        }
        Ok(e)
    }

    fn lambda(&mut self) -> PResult<Lambda> {
        let kind = if self.eat(&TokenKind::KwPred) {
            LambdaKind::Pred
        } else if self.eat(&TokenKind::KwFn) {
            LambdaKind::Fn
        } else {
            return Err(self.error_here());
        };
        self.expect(&TokenKind::LParen)?;
        let (param, _) = self.ident()?;
        let param_ty = if self.eat(&TokenKind::Colon) {
            Some(self.type_ref()?)
        } else {
            None
        };
        self.expect(&TokenKind::RParen)?;
        self.expect(&TokenKind::FatArrow)?;
        let body = self.expr()?;
        Ok(Lambda {
            kind,
            param,
            param_ty,
            body: Box::new(body),
        })
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        if self.eat(&TokenKind::RParen) {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat(&TokenKind::RParen) {
                return Ok(args);
            }
            self.expect(&TokenKind::Comma)?;
        }
    }

    /// `<Alias>` immediately following a literal.
    fn alias_annotation(&mut self) -> PResult<Option<String>> {
        if let (Some(TokenKind::Lt), Some(TokenKind::Ident(_)), Some(TokenKind::Gt)) =
            (self.peek(), self.peek_at(1), self.peek_at(2))
        {
            self.bump();
            let (name, _) = self.ident()?;
            self.bump();
            return Ok(Some(name));
        }
        Ok(None)
    }

    fn literal_expr(&mut self, lit: Literal, start: Span, needs_alias: bool) -> PResult<Expr> {
        match self.alias_annotation()? {
            Some(alias) => Ok(Expr::new(
                ExprKind::AliasLit { lit, alias },
                start.to(self.prev_span()),
            )),
            None if needs_alias => Err(Diagnostic::error(
                "parse-missing-suffix",
                "numeric literal without a type suffix must carry an alias annotation such as `<USD>`",
                start,
            )),
            None => Ok(Expr::new(ExprKind::Lit(lit), start)),
        }
    }

    fn env_arg(&mut self) -> PResult<EnvArg> {
        self.expect(&TokenKind::KwEnv)?;
        self.expect(&TokenKind::LBrace)?;
        if self.eat(&TokenKind::RBrace) {
            return Ok(EnvArg::Empty);
        }
        if self.eat(&TokenKind::Ellipsis) {
            self.expect(&TokenKind::RBrace)?;
            return Ok(EnvArg::Spread);
        }
        let mut binds = Vec::new();
        loop {
            let (name, _) = self.ident()?;
            self.expect(&TokenKind::Eq)?;
            binds.push((name, self.expr()?));
            if self.eat(&TokenKind::RBrace) {
                return Ok(EnvArg::Bindings(binds));
            }
            self.expect(&TokenKind::Comma)?;
        }
    }

    fn call_args_with_env(&mut self) -> PResult<(EnvArg, Vec<Expr>)> {
        self.expect(&TokenKind::LParen)?;
        let env = self.env_arg()?;
        let args = if self.eat(&TokenKind::Comma) {
            self.args()?
        } else {
            self.expect(&TokenKind::RParen)?;
            Vec::new()
        };
        Ok((env, args))
    }

    fn ctor_args(&mut self, close: &TokenKind) -> PResult<CtorArgs> {
        if self.eat(close) {
            return Ok(CtorArgs::Named(Vec::new()));
        }
        let named = matches!(
            (self.peek(), self.peek_at(1)),
            (Some(TokenKind::Ident(_)), Some(TokenKind::Eq))
        );
        if named {
            let mut fields = Vec::new();
            loop {
                let (name, _) = self.ident()?;
                self.expect(&TokenKind::Eq)?;
                fields.push((name, self.expr()?));
                if self.eat(close) {
                    return Ok(CtorArgs::Named(fields));
                }
                self.expect(&TokenKind::Comma)?;
            }
        }
        let mut items = Vec::new();
        loop {
            items.push(self.expr()?);
            if self.eat(close) {
                return Ok(CtorArgs::Positional(items));
            }
            self.expect(&TokenKind::Comma)?;
        }
    }

    fn hole(&mut self, doc: Option<String>) -> PResult<Expr> {
        let start = self.cur_span();
        self.expect(&TokenKind::Question)?;
        let (raw, _) = self.ident()?;
        if !raw.starts_with('_') {
            return Err(Diagnostic::error(
                "parse-hole-name",
                format!("hole names start with `_`, found `{raw}`"),
                self.prev_span(),
            ));
        }
        let name = if raw == "_" { None } else { Some(raw.clone()) };
        let mut examples = false;
        if self.eat(&TokenKind::LParen) {
            while !self.eat(&TokenKind::RParen) {
                let (opt, ospan) = self.ident()?;
                self.expect(&TokenKind::Eq)?;
                let value = if self.eat(&TokenKind::KwTrue) {
                    true
                } else if self.eat(&TokenKind::KwFalse) {
                    false
                } else {
                    return Err(self.error_here());
                };
                match opt.as_str() {
                    "examples" => examples = value,
                    _ => {
                        return Err(Diagnostic::error(
                            "parse-hole-option",
                            format!("unknown hole option `{opt}`"),
                            ospan,
                        ))
                    }
                }
                if !self.eat(&TokenKind::Comma) {
                    self.expect(&TokenKind::RParen)?;
                    break;
                }
            }
        }
        let ty = if self.eat(&TokenKind::Arrow) {
            Some(self.type_ref()?)
        } else {
            None
        };
        let id = match &name {
            Some(n) => n.clone(),
            None => {
                let id = format!("{}#{}", self.decl_name, self.hole_counter);
                self.hole_counter += 1;
                id
            }
        };
        Ok(Expr::new(
            ExprKind::Hole(HoleExpr {
                id,
                name,
                ty,
                doc,
                examples,
                scope: Vec::new(),
            }),
            start.to(self.prev_span()),
        ))
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.cur_span();
        self.expected.insert("expression".into());
        let Some(kind) = self.peek().cloned() else {
            return Err(self.error_here());
        };
        match kind {
            TokenKind::IntLit(t) => {
                self.bump();
                let v: i64 = t.parse().map_err(|_| {
                    Diagnostic::error("parse-int-range", format!("integer literal `{t}i` is out of range"), start)
                })?;
                self.literal_expr(Literal::Int(v), start, false)
            }
            TokenKind::DecLit(t) => {
                self.bump();
                let d: Decimal = t
                    .parse()
                    .map_err(|e| Diagnostic::error("parse-decimal", format!("{e}"), start))?;
                self.literal_expr(Literal::Decimal(d), start, false)
            }
            TokenKind::NumLit(t) => {
                self.bump();
                let lit = if t.contains('.') {
                    Literal::Decimal(
                        t.parse()
                            .map_err(|e| Diagnostic::error("parse-decimal", format!("{e}"), start))?,
                    )
                } else {
                    Literal::Int(t.parse().map_err(|_| {
                        Diagnostic::error("parse-int-range", format!("integer literal `{t}` is out of range"), start)
                    })?)
                };
                self.literal_expr(lit, start, true)
            }
            TokenKind::CStrLit(s) => {
                self.bump();
                self.literal_expr(Literal::CString(s), start, false)
            }
            TokenKind::StrLit(s) => {
                self.bump();
                self.literal_expr(Literal::String(s), start, false)
            }
            TokenKind::KwTrue | TokenKind::KwFalse => {
                self.bump();
                Ok(Expr::new(
                    ExprKind::Lit(Literal::Bool(kind == TokenKind::KwTrue)),
                    start,
                ))
            }
            TokenKind::KwNone => {
                self.bump();
                Ok(Expr::new(ExprKind::Lit(Literal::None), start))
            }
            TokenKind::KwSome => {
                self.bump();
                self.expect(&TokenKind::LParen)?;
                let inner = self.expr()?;
                self.expect(&TokenKind::RParen)?;
                Ok(Expr::new(
                    ExprKind::Some(Box::new(inner)),
                    start.to(self.prev_span()),
                ))
            }
            TokenKind::KwFail => {
                self.bump();
                self.expect(&TokenKind::LParen)?;
                let msg = self.expr()?;
                self.expect(&TokenKind::RParen)?;
                Ok(Expr::new(
                    ExprKind::Fail(Box::new(msg)),
                    start.to(self.prev_span()),
                ))
            }
            TokenKind::LParen => {
                self.bump();
                let mut e = self.expr()?;
                self.expect(&TokenKind::RParen)?;
                e.span = start.to(self.prev_span());
                Ok(e)
            }
            TokenKind::KwIf => {
                self.bump();
                self.expect(&TokenKind::LParen)?;
                let cond = self.expr()?;
                self.expect(&TokenKind::RParen)?;
                self.expect(&TokenKind::KwThen)?;
                let then = self.expr()?;
                self.expect(&TokenKind::KwElse)?;
                let els = self.expr()?;
                let span = start.to(els.span);
                Ok(Expr::new(
                    ExprKind::If {
                        cond: Box::new(cond),
                        then: Box::new(then),
                        els: Box::new(els),
                    },
                    span,
                ))
            }
            TokenKind::Dollar(name) => {
                self.bump();
                Ok(Expr::new(ExprKind::Dollar(name), start))
            }
            TokenKind::KwEnv => {
                if self.peek_at(1) == Some(&TokenKind::Dot) {
                    self.bump();
                    self.bump();
                    let (name, nspan) = self.ident()?;
                    Ok(Expr::new(ExprKind::EnvRead(name), start.to(nspan)))
                } else {
                    let env = self.env_arg()?;
                    Ok(Expr::new(ExprKind::EnvRecord(env), start.to(self.prev_span())))
                }
            }
            TokenKind::KwApi => {
                self.bump();
                let (api, _) = self.ident()?;
                let (env, args) = self.call_args_with_env()?;
                Ok(Expr::new(
                    ExprKind::ApiCall { api, env, args },
                    start.to(self.prev_span()),
                ))
            }
            TokenKind::KwAgent => {
                self.bump();
                let agent = self.agent_name()?;
                self.expect(&TokenKind::Lt)?;
                let shape = self.type_ref()?;
                self.expect(&TokenKind::Gt)?;
                let (env, args) = self.call_args_with_env()?;
                Ok(Expr::new(
                    ExprKind::AgentCall {
                        agent,
                        shape,
                        env,
                        args,
                    },
                    start.to(self.prev_span()),
                ))
            }
            TokenKind::Doc(_) => {
                let doc = self.doc();
                self.hole(doc)
            }
            TokenKind::Question => self.hole(None),
            TokenKind::Ident(name) => {
                if name == "List" && self.peek_at(1) == Some(&TokenKind::Lt) {
                    let elem = match self.type_ref()? {
                        Type::List(t) => *t,
                        _ => unreachable!(),
                    };
                    self.expect(&TokenKind::LBrace)?;
                    let mut items = Vec::new();
                    if !self.eat(&TokenKind::RBrace) {
                        loop {
                            items.push(self.expr()?);
                            if self.eat(&TokenKind::RBrace) {
                                break;
                            }
                            self.expect(&TokenKind::Comma)?;
                        }
                    }
                    return Ok(Expr::new(
                        ExprKind::ListLit { elem, items },
                        start.to(self.prev_span()),
                    ));
                }
                self.bump();
                match self.peek() {
                    Some(TokenKind::LParen) => {
                        self.bump();
                        let args = self.args()?;
                        Ok(Expr::new(
                            ExprKind::Call { name, args },
                            start.to(self.prev_span()),
                        ))
                    }
                    Some(TokenKind::LBrace) => {
                        self.bump();
                        let args = self.ctor_args(&TokenKind::RBrace)?;
                        Ok(Expr::new(
                            ExprKind::Construct { entity: name, args },
                            start.to(self.prev_span()),
                        ))
                    }
                    Some(TokenKind::LBracePipe) => {
                        self.bump();
                        let fields = match self.ctor_args(&TokenKind::PipeRBrace)? {
                            CtorArgs::Named(f) => f,
                            CtorArgs::Positional(_) => {
                                return Err(Diagnostic::error(
                                    "parse-pattern",
                                    "entity patterns must name their fields",
                                    start,
                                ))
                            }
                        };
                        Ok(Expr::new(
                            ExprKind::Pattern {
                                entity: name,
                                fields,
                            },
                            start.to(self.prev_span()),
                        ))
                    }
                    _ => Ok(Expr::new(ExprKind::Var { name, unwrap: false }, start)),
                }
            }
            _ => Err(self.error_here()),
        }
    }
}

/// Parses a single standalone expression, used by tools that accept
/// expression snippets.
pub fn parse_expr(src: &str) -> Result<Expr, Vec<Diagnostic>> {
    let tokens = tokenize(src)?;
    let mut p = Parser::new(src, tokens);
    let e = p.expr().map_err(|d| vec![d])?;
    if p.peek().is_some() {
        return Err(vec![p.error_here()]);
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIGN: &str = include_str!("../../../../corpus/sign.bsq");
    const TEMPS: &str = include_str!("../../../../corpus/temps.bsq");
    const HOLES: &str = include_str!("../../../../corpus/holes.bsq");
    const PAYMENTS: &str = include_str!("../../../../corpus/payments.bsq");
    const ORDER: &str = include_str!("../../../../corpus/order.bsq");

    #[test]
    fn sign_function_shape() {
        let m = parse_module(SIGN).unwrap();
        assert_eq!(m.functions.len(), 1);
        let f = &m.functions[0];
        assert_eq!(f.name, "sign");
        assert_eq!(f.ret, Type::Int);
        let Body::Block(b) = &f.body else {
            panic!("expected block body")
        };
        assert!(matches!(b[0].kind, StmtKind::VarDecl { mutable: true, .. }));
        assert!(matches!(b[1].kind, StmtKind::If { .. }));
        assert!(matches!(b[2].kind, StmtKind::Return(Some(_))));
        assert_eq!(m.chktests.len(), 1);
    }

    #[test]
    fn aliases_and_invariants() {
        let m = parse_module(TEMPS).unwrap();
        assert_eq!(m.aliases.len(), 2);
        assert_eq!(m.entities.len(), 2);
        let tr = m.entity("TempRange").unwrap();
        assert_eq!(tr.invariants.len(), 1);
        assert_eq!(tr.invariants[0].text, "$low <= $high");
        let zip = m.alias("ZipCode").unwrap();
        assert!(zip.constraint.as_ref().unwrap().cstring);
    }

    #[test]
    fn body_hole_with_examples() {
        let m = parse_module(HOLES).unwrap();
        let abs = m.function("abs").unwrap();
        let Body::Hole(h) = &abs.body else {
            panic!("expected hole body")
        };
        assert_eq!(h.name.as_deref(), Some("_absbody"));
        assert!(h.examples);
        assert_eq!(abs.ensures[0].text, "$result >= 0i");
        let sign = m.function("sign").unwrap();
        let Body::Block(b) = &sign.body else { panic!() };
        let StmtKind::If { then, .. } = &b[1].kind else { panic!() };
        let StmtKind::Assign { value, .. } = &then[0].kind else { panic!() };
        let ExprKind::Hole(h) = &value.kind else { panic!() };
        assert_eq!(h.id, "sign#0");
        assert_eq!(h.ty, Some(Type::Int));
    }

    #[test]
    fn api_declaration() {
        let m = parse_module(PAYMENTS).unwrap();
        let t = m.api("transfer").unwrap();
        assert!(t.body.is_none());
        assert_eq!(t.env.len(), 2);
        assert_eq!(t.permissions[0].text, "account:${payer.routing}/${payer.account}");
        assert_eq!(t.requires[0].text, "0.0<USD> < amt");
        assert!(t.requires[1].text.starts_with("amt <= env.PAYMENT_LIMIT ||"));
        let split = m.function("splitBill").unwrap();
        assert_eq!(split.kind, FunctionKind::Action);
        assert!(split.doc.as_deref().unwrap().starts_with("Given a natural language"));
    }

    #[test]
    fn entity_fields_without_keyword() {
        let m = parse_module(ORDER).unwrap();
        let o = m.entity("Order").unwrap();
        let names: Vec<_> = o.fields.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["orderid", "amount", "customer"]);
        assert!(m.alias("TIN").unwrap().sensitive);
    }

    #[test]
    fn syntax_error_reports_expected_set() {
        let err = parse_module("function f(x: Int): Int { return x }").unwrap_err();
        assert_eq!(err[0].code, "parse-syntax");
        assert!(err[0].message.contains("`;`"), "{}", err[0].message);
    }

    #[test]
    fn bare_literal_in_expression() {
        let err = parse_module("function f(): Int { return 1; }").unwrap_err();
        assert!(err[0].message.contains("missing type suffix"));
    }

    #[test]
    fn chained_comparison_rejected() {
        let err = parse_expr("1i < 2i < 3i").unwrap_err();
        assert_eq!(err[0].code, "parse-chained-compare");
    }
}
