use std::fmt;

use serde::{Deserialize, Serialize};

use crate::span::Span;
use crate::value::Decimal;

/// A type as written in source. `Named` refers to an alias or an entity;
/// which one is decided by the type checker.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Type {
    Int,
    Decimal,
    Bool,
    CString,
    String,
    /// The unit type of actions and apis that return nothing.
    None,
    Named(String),
    List(Box<Type>),
    Option(Box<Type>),
    /// Type of `fail(...)`; compatible with every type. Never written in source.
    Never,
}

impl Type {
    pub fn list(elem: Type) -> Type {
        Type::List(Box::new(elem))
    }

    pub fn option(inner: Type) -> Type {
        Type::Option(Box::new(inner))
    }

    pub fn is_primitive(&self) -> bool {
        matches!(
            self,
            Type::Int | Type::Decimal | Type::Bool | Type::CString | Type::String
        )
    }

    pub fn is_string(&self) -> bool {
        matches!(self, Type::CString | Type::String)
    }

    pub fn from_primitive_name(name: &str) -> Option<Type> {
        Some(match name {
            "Int" => Type::Int,
            "Decimal" => Type::Decimal,
            "Bool" => Type::Bool,
            "CString" => Type::CString,
            "String" => Type::String,
            "None" => Type::None,
            _ => return None,
        })
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("Int"),
            Type::Decimal => f.write_str("Decimal"),
            Type::Bool => f.write_str("Bool"),
            Type::CString => f.write_str("CString"),
            Type::String => f.write_str("String"),
            Type::None => f.write_str("None"),
            Type::Named(n) => f.write_str(n),
            Type::List(t) => write!(f, "List<{t}>"),
            Type::Option(t) => write!(f, "Option<{t}>"),
            Type::Never => f.write_str("Never"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Int(i64),
    Decimal(Decimal),
    Bool(bool),
    CString(String),
    String(String),
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "===",
            BinOp::Ne => "!==",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }

    pub fn is_arith(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div)
    }

    pub fn is_compare(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CollectionOp {
    AllOf,
    NoneOf,
    Map,
    Filter,
    Sum,
}

impl CollectionOp {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "allOf" => CollectionOp::AllOf,
            "noneOf" => CollectionOp::NoneOf,
            "map" => CollectionOp::Map,
            "filter" => CollectionOp::Filter,
            "sum" => CollectionOp::Sum,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            CollectionOp::AllOf => "allOf",
            CollectionOp::NoneOf => "noneOf",
            CollectionOp::Map => "map",
            CollectionOp::Filter => "filter",
            CollectionOp::Sum => "sum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaKind {
    Pred,
    Fn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lambda {
    pub kind: LambdaKind,
    pub param: String,
    pub param_ty: Option<Type>,
    pub body: Box<Expr>,
}

/// The environment record passed as the first argument of api and agent calls.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvArg {
    /// `env{}`
    Empty,
    /// `env{...}` forwards the caller's declared environment.
    Spread,
    /// `env{ NAME = expr, ... }`
    Bindings(Vec<(String, Expr)>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CtorArgs {
    Named(Vec<(String, Expr)>),
    Positional(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoleExpr {
    /// Stable identity: the hole's name, or `<decl>#<n>` for anonymous holes.
    pub id: String,
    pub name: Option<String>,
    /// Declared result type. Body holes take the enclosing return type.
    pub ty: Option<Type>,
    pub doc: Option<String>,
    pub examples: bool,
    /// Variables in scope at the hole, filled by the type checker.
    pub scope: Vec<(String, Type)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Lit(Literal),
    /// `'A53'<OrderId>`, `0.0<USD>`, `10i<Fahrenheit>`.
    AliasLit {
        lit: Literal,
        alias: String,
    },
    /// A variable read. `unwrap` is set by the type checker when flow
    /// narrowing has proven an `Option` variable to be `some`.
    Var {
        name: String,
        unwrap: bool,
    },
    /// `$result` or `$field` inside contracts.
    Dollar(String),
    EnvRead(String),
    EnvRecord(EnvArg),
    Unary {
        op: UnOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    If {
        cond: Box<Expr>,
        then: Box<Expr>,
        els: Box<Expr>,
    },
    Field {
        base: Box<Expr>,
        name: String,
    },
    Call {
        name: String,
        args: Vec<Expr>,
    },
    Construct {
        entity: String,
        args: CtorArgs,
    },
    /// Partial entity pattern `E{| f = e |}` used by `$events.contains`.
    Pattern {
        entity: String,
        fields: Vec<(String, Expr)>,
    },
    ListLit {
        elem: Type,
        items: Vec<Expr>,
    },
    Some(Box<Expr>),
    Collection {
        op: CollectionOp,
        receiver: Box<Expr>,
        type_arg: Option<Type>,
        lambda: Option<Lambda>,
    },
    ApiCall {
        api: String,
        env: EnvArg,
        args: Vec<Expr>,
    },
    AgentCall {
        agent: String,
        shape: Type,
        env: EnvArg,
        args: Vec<Expr>,
    },
    EventsContains(Box<Expr>),
    Hole(HoleExpr),
    Fail(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
    /// Resolved type, filled by the type checker.
    pub ty: Option<Type>,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Self {
            kind,
            span,
            ty: None,
        }
    }

    pub fn ty(&self) -> &Type {
        self.ty.as_ref().expect("expression has not been type checked")
    }
}

/// A contract clause with its verbatim source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub expr: Expr,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    VarDecl {
        mutable: bool,
        name: String,
        ty: Option<Type>,
        init: Expr,
    },
    Assign {
        name: String,
        value: Expr,
    },
    If {
        cond: Expr,
        then: Block,
        els: Option<Block>,
    },
    Return(Option<Expr>),
    Assert(Clause),
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

pub type Block = Vec<Stmt>;

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvDecl {
    pub name: String,
    pub ty: Type,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegexLit {
    pub pattern: String,
    pub cstring: bool,
}

impl fmt::Display for RegexLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "/{}/{}", self.pattern, if self.cstring { "c" } else { "" })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeAliasDecl {
    pub name: String,
    pub base: Type,
    pub constraint: Option<RegexLit>,
    pub sensitive: bool,
    /// Optional sensitivity level, `sensitive(pii) type ...`.
    pub level: Option<String>,
    pub doc: Option<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDecl {
    pub name: String,
    pub ty: Type,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityDecl {
    pub name: String,
    pub fields: Vec<FieldDecl>,
    pub invariants: Vec<Clause>,
    pub doc: Option<String>,
    pub span: Span,
}

impl EntityDecl {
    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionKind {
    /// Pure function.
    Function,
    /// May call apis and agents.
    Action,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Block(Block),
    Hole(HoleExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDecl {
    pub kind: FunctionKind,
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Type,
    pub env: Vec<EnvDecl>,
    pub requires: Vec<Clause>,
    pub ensures: Vec<Clause>,
    pub body: Body,
    pub doc: Option<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermissionTemplate {
    pub text: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Type,
    pub env: Vec<EnvDecl>,
    pub permissions: Vec<PermissionTemplate>,
    pub requires: Vec<Clause>,
    pub ensures: Vec<Clause>,
    /// `None` means the api is bound externally.
    pub body: Option<Block>,
    pub doc: Option<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentDecl {
    pub name: String,
    pub env: Vec<EnvDecl>,
    pub doc: Option<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChkTestDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Type,
    pub body: Block,
    pub doc: Option<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceModule {
    pub aliases: Vec<TypeAliasDecl>,
    pub entities: Vec<EntityDecl>,
    pub functions: Vec<FunctionDecl>,
    pub apis: Vec<ApiDecl>,
    pub agents: Vec<AgentDecl>,
    pub chktests: Vec<ChkTestDecl>,
}

impl SourceModule {
    pub fn alias(&self, name: &str) -> Option<&TypeAliasDecl> {
        self.aliases.iter().find(|a| a.name == name)
    }

    pub fn entity(&self, name: &str) -> Option<&EntityDecl> {
        self.entities.iter().find(|e| e.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn api(&self, name: &str) -> Option<&ApiDecl> {
        self.apis.iter().find(|a| a.name == name)
    }

    pub fn agent(&self, name: &str) -> Option<&AgentDecl> {
        self.agents.iter().find(|a| a.name == name)
    }

    pub fn chktest(&self, name: &str) -> Option<&ChkTestDecl> {
        self.chktests.iter().find(|c| c.name == name)
    }

    /// Appends every declaration of `other`.
    pub fn merge(&mut self, other: SourceModule) {
        self.aliases.extend(other.aliases);
        self.entities.extend(other.entities);
        self.functions.extend(other.functions);
        self.apis.extend(other.apis);
        self.agents.extend(other.agents);
        self.chktests.extend(other.chktests);
    }
}
