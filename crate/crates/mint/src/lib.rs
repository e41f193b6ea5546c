//! HTTP runtime hosting aisette apis and actions.
//!
//! Discovery lives at `/actions`, `/actions/{endpoint}` and `/search`;
//! configured routes dispatch POSTed argument records to tasks under their
//! contracts and sandbox policies.

pub mod auth;
pub mod config;
pub mod index;
pub mod lint;
pub mod server;

pub use auth::{Caller, Claims};
pub use config::{load_config, Ceiling, MintConfig, RouteConfig, RouteTarget, Visibility};
pub use index::{Endpoint, Searcher, TokenOverlap};
pub use lint::{lint_sensitive_exposure, LintFinding};
pub use server::{AbortHook, FaultRecord, Mint, MintBuilder, NoopHook};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MintError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("startup blocked by {} lint finding(s)", .0.len())]
    LintBlocked(Vec<LintFinding>),
}
