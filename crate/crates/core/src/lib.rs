//! Front end, interpreter, safe regex engine, and BAPI codec for the aisette
//! language.

pub mod agent;
pub mod bapi;
pub mod eval;
pub mod regex;
pub mod sandbox;
pub mod span;
pub mod syntax;
pub mod types;
pub mod value;

pub use span::{Diagnostic, Severity, Span};
pub use syntax::ast;
pub use value::{Decimal, Value};
