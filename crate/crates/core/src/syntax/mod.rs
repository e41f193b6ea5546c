pub mod ast;
pub mod lexer;
pub mod normalize;
pub mod parser;
pub mod printer;

pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse_expr, parse_module};
pub use printer::{print_expr, print_module};
