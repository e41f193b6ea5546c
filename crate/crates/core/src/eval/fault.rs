use std::fmt;

use serde::{Deserialize, Serialize};

use crate::span::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    Precondition,
    Postcondition,
    Invariant,
    Constraint,
    Overflow,
    DivByZero,
    UnfilledHole,
    HoleType,
    EnvMissing,
    PermissionDenied,
    /// Raised by `fail(...)`.
    User,
    Assertion,
    /// An agent reply that does not decode against its non-Option shape.
    Shape,
    Transport,
    /// An api with no body and no host binding.
    Unbound,
    /// A runtime value of the wrong type crossed a boundary.
    Type,
    Io,
}

impl FaultKind {
    pub fn code(self) -> &'static str {
        match self {
            FaultKind::Precondition => "precondition",
            FaultKind::Postcondition => "postcondition",
            FaultKind::Invariant => "invariant",
            FaultKind::Constraint => "constraint",
            FaultKind::Overflow => "overflow",
            FaultKind::DivByZero => "div-by-zero",
            FaultKind::UnfilledHole => "unfilled-hole",
            FaultKind::HoleType => "hole-type",
            FaultKind::EnvMissing => "env-missing",
            FaultKind::PermissionDenied => "permission-denied",
            FaultKind::User => "user",
            FaultKind::Assertion => "assertion",
            FaultKind::Shape => "shape",
            FaultKind::Transport => "transport",
            FaultKind::Unbound => "unbound",
            FaultKind::Type => "type",
            FaultKind::Io => "io",
        }
    }

    /// Contract-style faults: the task was refused before doing anything.
    pub fn is_contract(self) -> bool {
        matches!(
            self,
            FaultKind::Precondition | FaultKind::Postcondition | FaultKind::Invariant | FaultKind::Constraint
        )
    }
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Why an evaluation stopped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fault {
    pub kind: FaultKind,
    pub message: String,
    /// Source text of the failing clause, when a clause failed.
    pub clause: Option<String>,
    pub span: Option<Span>,
    /// Declaration the fault was raised in.
    pub owner: Option<String>,
}

impl Fault {
    pub fn new(kind: FaultKind, message: impl Into<String>) -> Fault {
        Fault {
            kind,
            message: message.into(),
            clause: None,
            span: None,
            owner: None,
        }
    }

    pub fn at(mut self, span: Span) -> Fault {
        self.span = Some(span);
        self
    }

    pub fn in_decl(mut self, owner: &str) -> Fault {
        if self.owner.is_none() {
            self.owner = Some(owner.to_string());
        }
        self
    }

    pub fn clause(kind: FaultKind, text: &str, span: Span, owner: &str) -> Fault {
        let what = match kind {
            FaultKind::Precondition => "precondition failed",
            FaultKind::Postcondition => "postcondition failed",
            FaultKind::Invariant => "invariant violated",
            FaultKind::Assertion => "assertion failed",
            _ => "check failed",
        };
        Fault {
            kind,
            message: format!("{what}: {text}"),
            clause: Some(text.to_string()),
            span: Some(span),
            owner: Some(owner.to_string()),
        }
    }

    /// True when both faults are the same failure at the same site.
    pub fn same_site(&self, other: &Fault) -> bool {
        self.kind == other.kind && self.span == other.span && self.clause == other.clause
    }
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} fault", self.kind)?;
        if let Some(o) = &self.owner {
            write!(f, " in `{o}`")?;
        }
        if let Some(s) = &self.span {
            if s.line > 0 {
                write!(f, " at {s}")?;
            }
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for Fault {}
