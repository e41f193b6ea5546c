use std::fmt;

use crate::span::{Diagnostic, LineIndex, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    /// `$name`
    Dollar(String),
    /// Integer literal with an `i` suffix. The text excludes the suffix.
    IntLit(String),
    /// Decimal literal with a `d` suffix.
    DecLit(String),
    /// Numeric literal with no suffix; only legal when followed by `<Alias>`.
    NumLit(String),
    /// `'...'`
    CStrLit(String),
    /// `"..."`
    StrLit(String),
    /// `/.../` with the trailing `c` flag recorded.
    Regex { pattern: String, cstring: bool },
    /// `\...\` permission glob template.
    Glob(String),
    Doc(String),

    KwFunction,
    KwAction,
    KwApi,
    KwAgent,
    KwEntity,
    KwType,
    KwSensitive,
    KwOf,
    KwField,
    KwInvariant,
    KwRequires,
    KwEnsures,
    KwVar,
    KwLet,
    KwIf,
    KwThen,
    KwElse,
    KwReturn,
    KwAssert,
    KwChktest,
    KwEnv,
    KwPermissions,
    KwTrue,
    KwFalse,
    KwNone,
    KwSome,
    KwFail,
    KwPred,
    KwFn,

    LParen,
    RParen,
    LBrace,
    RBrace,
    /// `{|`
    LBracePipe,
    /// `|}`
    PipeRBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    ColonColon,
    Dot,
    Ellipsis,
    Eq,
    EqEqEq,
    NotEqEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    AndAnd,
    OrOr,
    Bang,
    FatArrow,
    Arrow,
    Question,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        use TokenKind::*;
        let s = match self {
            Ident(n) => return format!("identifier `{n}`"),
            Dollar(n) => return format!("`${n}`"),
            IntLit(t) => return format!("`{t}i`"),
            DecLit(t) => return format!("`{t}d`"),
            NumLit(t) => return format!("`{t}`"),
            CStrLit(_) => "string literal",
            StrLit(_) => "string literal",
            Regex { .. } => "regex literal",
            Glob(_) => "permission glob",
            Doc(_) => "doc comment",
            KwFunction => "`function`",
            KwAction => "`action`",
            KwApi => "`api`",
            KwAgent => "`agent`",
            KwEntity => "`entity`",
            KwType => "`type`",
            KwSensitive => "`sensitive`",
            KwOf => "`of`",
            KwField => "`field`",
            KwInvariant => "`invariant`",
            KwRequires => "`requires`",
            KwEnsures => "`ensures`",
            KwVar => "`var`",
            KwLet => "`let`",
            KwIf => "`if`",
            KwThen => "`then`",
            KwElse => "`else`",
            KwReturn => "`return`",
            KwAssert => "`assert`",
            KwChktest => "`chktest`",
            KwEnv => "`env`",
            KwPermissions => "`permissions`",
            KwTrue => "`true`",
            KwFalse => "`false`",
            KwNone => "`none`",
            KwSome => "`some`",
            KwFail => "`fail`",
            KwPred => "`pred`",
            KwFn => "`fn`",
            LParen => "`(`",
            RParen => "`)`",
            LBrace => "`{`",
            RBrace => "`}`",
            LBracePipe => "`{|`",
            PipeRBrace => "`|}`",
            LBracket => "`[`",
            RBracket => "`]`",
            Comma => "`,`",
            Semi => "`;`",
            Colon => "`:`",
            ColonColon => "`::`",
            Dot => "`.`",
            Ellipsis => "`...`",
            Eq => "`=`",
            EqEqEq => "`===`",
            NotEqEq => "`!==`",
            Lt => "`<`",
            Le => "`<=`",
            Gt => "`>`",
            Ge => "`>=`",
            Plus => "`+`",
            Minus => "`-`",
            Star => "`*`",
            Slash => "`/`",
            AndAnd => "`&&`",
            OrOr => "`||`",
            Bang => "`!`",
            FatArrow => "`=>`",
            Arrow => "`->`",
            Question => "`?`",
        };
        s.to_string()
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

fn keyword(word: &str) -> Option<TokenKind> {
    use TokenKind::*;
    Some(match word {
        "function" => KwFunction,
        "action" => KwAction,
        "api" => KwApi,
        "agent" => KwAgent,
        "entity" => KwEntity,
        "type" => KwType,
        "sensitive" => KwSensitive,
        "of" => KwOf,
        "field" => KwField,
        "invariant" => KwInvariant,
        "requires" => KwRequires,
        "ensures" => KwEnsures,
        "var" => KwVar,
        "let" => KwLet,
        "if" => KwIf,
        "then" => KwThen,
        "else" => KwElse,
        "return" => KwReturn,
        "assert" => KwAssert,
        "chktest" => KwChktest,
        "env" => KwEnv,
        "permissions" => KwPermissions,
        "true" => KwTrue,
        "false" => KwFalse,
        "none" => KwNone,
        "some" => KwSome,
        "fail" => KwFail,
        "pred" => KwPred,
        "fn" => KwFn,
        _ => return None,
    })
}

pub fn is_keyword(word: &str) -> bool {
    keyword(word).is_some()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    lines: LineIndex,
    tokens: Vec<Token>,
    diags: Vec<Diagnostic>,
}

/// Splits source text into tokens. Comments (`%% ...`) are dropped; doc
/// comments (`%** ... **%`) are kept as tokens.
pub fn tokenize(src: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let mut lx = Lexer {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        lines: LineIndex::new(src),
        tokens: Vec::new(),
        diags: Vec::new(),
    };
    lx.run();
    if lx.diags.is_empty() {
        Ok(lx.tokens)
    } else {
        Err(lx.diags)
    }
}

impl<'a> Lexer<'a> {
    fn span(&self, start: usize, end: usize) -> Span {
        self.lines.span(self.src, start, end)
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, off: usize) -> Option<u8> {
        self.bytes.get(self.pos + off).copied()
    }

    fn push(&mut self, kind: TokenKind, start: usize) {
        let span = self.span(start, self.pos);
        self.tokens.push(Token { kind, span });
    }

    fn error(&mut self, code: &str, msg: impl Into<String>, start: usize, end: usize) {
        let span = self.span(start, end);
        self.diags.push(Diagnostic::error(code, msg, span));
    }

    fn prev_is_of(&self) -> bool {
        matches!(self.tokens.last(), Some(Token { kind: TokenKind::KwOf, .. }))
    }

    fn run(&mut self) {
        while let Some(c) = self.peek() {
            let start = self.pos;
            if c.is_whitespace() {
                self.pos += c.len_utf8();
                continue;
            }
            if c == '%' {
                self.comment(start);
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                self.word(start);
                continue;
            }
            if c.is_ascii_digit() {
                self.number(start);
                continue;
            }
            match c {
                '$' => {
                    self.pos += 1;
                    let id_start = self.pos;
                    while let Some(ch) = self.peek() {
                        if ch.is_ascii_alphanumeric() || ch == '_' {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                    if id_start == self.pos {
                        self.error("lex-dollar", "expected identifier after `$`", start, self.pos);
                    } else {
                        let name = self.src[id_start..self.pos].to_string();
                        self.push(TokenKind::Dollar(name), start);
                    }
                }
                '\'' => self.string(start, '\''),
                '"' => self.string(start, '"'),
                '\\' => self.glob(start),
                '/' if self.prev_is_of() => self.regex(start),
                _ => self.punct(start, c),
            }
        }
    }

    fn comment(&mut self, start: usize) {
        if self.src[self.pos..].starts_with("%**") {
            match self.src[self.pos + 3..].find("**%") {
                Some(rel) => {
                    let body = &self.src[self.pos + 3..self.pos + 3 + rel];
                    self.pos += 3 + rel + 3;
                    let text = normalize_doc(body);
                    self.push(TokenKind::Doc(text), start);
                }
                None => {
                    self.pos = self.src.len();
                    self.error("lex-unterminated-doc", "unterminated doc comment", start, self.pos);
                }
            }
        } else if self.src[self.pos..].starts_with("%%") {
            while let Some(c) = self.peek() {
                if c == '\n' {
                    break;
                }
                self.pos += c.len_utf8();
            }
        } else {
            self.pos += 1;
            self.error("lex-char", "unknown character `%`", start, self.pos);
        }
    }

    fn word(&mut self, start: usize) {
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = &self.src[start..self.pos];
        let kind = keyword(text).unwrap_or_else(|| TokenKind::Ident(text.to_string()));
        self.push(kind, start);
    }

    fn number(&mut self, start: usize) {
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        let mut fractional = false;
        if self.peek() == Some('.') && matches!(self.peek_at(1), Some(b) if b.is_ascii_digit()) {
            fractional = true;
            self.pos += 1;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        let text = self.src[start..self.pos].to_string();
        match self.peek() {
            Some('i') if !self.ident_continues(1) => {
                self.pos += 1;
                if fractional {
                    self.error(
                        "lex-int-fraction",
                        format!("integer literal `{text}i` cannot have a fractional part"),
                        start,
                        self.pos,
                    );
                } else {
                    self.push(TokenKind::IntLit(text), start);
                }
            }
            Some('d') if !self.ident_continues(1) => {
                self.pos += 1;
                self.push(TokenKind::DecLit(text), start);
            }
            _ => {
                if self.ident_continues(0) {
                    let bad_start = self.pos;
                    while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                        self.pos += 1;
                    }
                    self.error(
                        "lex-suffix",
                        format!("unknown numeric suffix `{}`", &self.src[bad_start..self.pos]),
                        start,
                        self.pos,
                    );
                    return;
                }
                // Only legal as the prefix of an alias literal such as `0.0<USD>`.
                let rest = self.src[self.pos..].trim_start();
                if rest.starts_with('<') {
                    self.push(TokenKind::NumLit(text), start);
                } else {
                    self.error(
                        "lex-missing-suffix",
                        format!("missing type suffix on numeric literal `{text}` (use `{text}i` or `{text}d`)"),
                        start,
                        self.pos,
                    );
                }
            }
        }
    }

    fn ident_continues(&self, off: usize) -> bool {
        matches!(self.peek_at(off), Some(b) if b.is_ascii_alphanumeric() || b == b'_')
    }

    fn string(&mut self, start: usize, quote: char) {
        self.pos += 1;
        let mut out = String::new();
        loop {
            let Some(c) = self.peek() else {
                self.error("lex-unterminated-string", "unterminated string literal", start, self.pos);
                return;
            };
            self.pos += c.len_utf8();
            if c == quote {
                break;
            }
            if c == '\n' {
                self.error("lex-unterminated-string", "unterminated string literal", start, self.pos - 1);
                return;
            }
            if c == '\\' {
                let Some(e) = self.peek() else {
                    continue;
                };
                self.pos += e.len_utf8();
                match unescape_char(e) {
                    Some(ch) => out.push(ch),
                    None => self.error(
                        "lex-escape",
                        format!("unknown escape `\\{e}`"),
                        self.pos - e.len_utf8() - 1,
                        self.pos,
                    ),
                }
            } else {
                out.push(c);
            }
        }
        let kind = if quote == '\'' {
            TokenKind::CStrLit(out)
        } else {
            TokenKind::StrLit(out)
        };
        self.push(kind, start);
    }

    fn glob(&mut self, start: usize) {
        self.pos += 1;
        match self.src[self.pos..].find(['\\', '\n']) {
            Some(rel) if self.bytes[self.pos + rel] == b'\\' => {
                let text = self.src[self.pos..self.pos + rel].to_string();
                self.pos += rel + 1;
                self.push(TokenKind::Glob(text), start);
            }
            _ => {
                let end = self.src[self.pos..].find('\n').map_or(self.src.len(), |r| self.pos + r);
                self.pos = end;
                self.error("lex-unterminated-glob", "unterminated permission glob", start, end);
            }
        }
    }

    fn regex(&mut self, start: usize) {
        self.pos += 1;
        let mut in_class = false;
        let mut in_quote = false;
        loop {
            let Some(c) = self.peek() else {
                self.error("lex-unterminated-regex", "unterminated regex literal", start, self.pos);
                return;
            };
            if c == '\n' {
                self.error("lex-unterminated-regex", "unterminated regex literal", start, self.pos);
                return;
            }
            self.pos += c.len_utf8();
            match c {
                '\\' => {
                    if let Some(e) = self.peek() {
                        self.pos += e.len_utf8();
                    }
                }
                '\'' if !in_class => in_quote = !in_quote,
                '[' if !in_quote => in_class = true,
                ']' if !in_quote => in_class = false,
                '/' if !in_class && !in_quote => break,
                _ => {}
            }
        }
        let pattern = self.src[start + 1..self.pos - 1].to_string();
        let cstring = self.peek() == Some('c') && !self.ident_continues(1);
        if cstring {
            self.pos += 1;
        }
        self.push(TokenKind::Regex { pattern, cstring }, start);
    }

    fn punct(&mut self, start: usize, c: char) {
        use TokenKind::*;
        let rest = &self.src[self.pos..];
        let (kind, len) = if rest.starts_with("===") {
            (EqEqEq, 3)
        } else if rest.starts_with("!==") {
            (NotEqEq, 3)
        } else if rest.starts_with("...") {
            (Ellipsis, 3)
        } else if rest.starts_with("{|") {
            (LBracePipe, 2)
        } else if rest.starts_with("|}") {
            (PipeRBrace, 2)
        } else if rest.starts_with("::") {
            (ColonColon, 2)
        } else if rest.starts_with("<=") {
            (Le, 2)
        } else if rest.starts_with(">=") {
            (Ge, 2)
        } else if rest.starts_with("&&") {
            (AndAnd, 2)
        } else if rest.starts_with("||") {
            (OrOr, 2)
        } else if rest.starts_with("=>") {
            (FatArrow, 2)
        } else if rest.starts_with("->") {
            (Arrow, 2)
        } else {
            let k = match c {
                '(' => LParen,
                ')' => RParen,
                '{' => LBrace,
                '}' => RBrace,
                '[' => LBracket,
                ']' => RBracket,
                ',' => Comma,
                ';' => Semi,
                ':' => Colon,
                '.' => Dot,
                '=' => Eq,
                '<' => Lt,
                '>' => Gt,
                '+' => Plus,
                '-' => Minus,
                '*' => Star,
                '/' => Slash,
                '!' => Bang,
                '?' => Question,
                other => {
                    self.pos += other.len_utf8();
                    self.error("lex-char", format!("unknown character `{other}`"), start, self.pos);
                    return;
                }
            };
            (k, 1)
        };
        self.pos += len;
        self.push(kind, start);
    }
}

pub(crate) fn unescape_char(e: char) -> Option<char> {
    Some(match e {
        'n' => '\n',
        't' => '\t',
        'r' => '\r',
        '\\' => '\\',
        '\'' => '\'',
        '"' => '"',
        '0' => '\0',
        _ => return None,
    })
}

/// Strips the leading `*` gutter from multi-line doc comments.
fn normalize_doc(body: &str) -> String {
    body.lines()
        .map(|l| {
            let t = l.trim();
            t.strip_prefix('*').map(str::trim_start).unwrap_or(t)
        })
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn var_decl_line() {
        assert_eq!(
            kinds("var y = 1i;"),
            vec![KwVar, Ident("y".into()), Eq, IntLit("1".into()), Semi]
        );
    }

    #[test]
    fn empty_input() {
        assert!(kinds("").is_empty());
    }

    #[test]
    fn bare_literal_is_rejected() {
        let diags = tokenize("1").unwrap_err();
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("missing type suffix"));
        assert_eq!(diags[0].span.start, 0);
        assert_eq!(diags[0].span.end, 1);
    }

    #[test]
    fn alias_literal_prefix_is_allowed() {
        assert_eq!(
            kinds("0.0<USD>"),
            vec![NumLit("0.0".into()), Lt, Ident("USD".into()), Gt]
        );
    }

    #[test]
    fn regex_after_of() {
        let toks = kinds("type Z = CString of /[0-9]{5}('-'[0-9]{4})?/c;");
        assert!(toks.contains(&Regex {
            pattern: "[0-9]{5}('-'[0-9]{4})?".into(),
            cstring: true
        }));
    }

    #[test]
    fn glob_and_pattern_braces() {
        let toks = kinds(r"\account:${payer.routing}\ Approve{|payee=payee|}");
        assert_eq!(toks[0], Glob("account:${payer.routing}".into()));
        assert!(toks.contains(&LBracePipe));
        assert!(toks.contains(&PipeRBrace));
    }

    #[test]
    fn doc_comment_gutter() {
        let toks = kinds("%**\n * Given a message,\n * compute it.\n **%");
        assert_eq!(toks, vec![Doc("Given a message,\ncompute it.".into())]);
    }

    #[test]
    fn line_comment_is_skipped() {
        assert_eq!(kinds("true %% trailing"), vec![KwTrue]);
    }

    #[test]
    fn unterminated_string_has_span() {
        let diags = tokenize("let s = 'abc").unwrap_err();
        assert_eq!(diags[0].code, "lex-unterminated-string");
        assert!(diags[0].span.is_within(12));
    }

    #[test]
    fn spans_track_lines() {
        let toks = tokenize("a\n  b").unwrap();
        assert_eq!((toks[1].span.line, toks[1].span.col), (2, 3));
        assert_eq!(toks[1].span.start, 4);
    }
}
