use super::RegexError;

pub const MAX_CHAR: u32 = 0x10FFFF;
/// Upper bound on `{m,n}` counts; larger values are rejected.
pub const MAX_REPEAT: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Empty,
    /// Sorted, disjoint, inclusive code point ranges.
    Class(Vec<(u32, u32)>),
    Concat(Vec<Node>),
    Alt(Vec<Node>),
    Star(Box<Node>),
    Plus(Box<Node>),
    Opt(Box<Node>),
    Repeat {
        node: Box<Node>,
        min: u32,
        max: Option<u32>,
    },
}

impl Node {
    pub fn literal(c: char) -> Node {
        Node::Class(vec![(c as u32, c as u32)])
    }
}

pub fn normalize_ranges(mut rs: Vec<(u32, u32)>) -> Vec<(u32, u32)> {
    rs.sort_unstable();
    let mut out: Vec<(u32, u32)> = Vec::with_capacity(rs.len());
    for (lo, hi) in rs {
        match out.last_mut() {
            Some(last) if lo <= last.1.saturating_add(1) => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Complement of `rs` within `alphabet` (both normalized).
pub fn complement(rs: &[(u32, u32)], alphabet: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for &(alo, ahi) in alphabet {
        let mut cur = alo;
        for &(lo, hi) in rs {
            if hi < cur || lo > ahi {
                continue;
            }
            if lo > cur {
                out.push((cur, lo - 1));
            }
            cur = hi.saturating_add(1);
            if cur > ahi {
                break;
            }
        }
        if cur <= ahi {
            out.push((cur, ahi));
        }
    }
    out
}

pub fn intersect(a: &[(u32, u32)], b: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for &(alo, ahi) in a {
        for &(blo, bhi) in b {
            let lo = alo.max(blo);
            let hi = ahi.min(bhi);
            if lo <= hi {
                out.push((lo, hi));
            }
        }
    }
    normalize_ranges(out)
}

pub struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    alphabet: &'a [(u32, u32)],
}

impl<'a> Parser<'a> {
    pub fn new(pattern: &str, alphabet: &'a [(u32, u32)]) -> Self {
        Self {
            chars: pattern.chars().collect(),
            pos: 0,
            alphabet,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.pos + 1).copied()
    }

    fn malformed(&self, msg: impl Into<String>) -> RegexError {
        RegexError::Malformed {
            message: msg.into(),
            offset: self.pos,
        }
    }

    fn unsupported(&self, what: &str) -> RegexError {
        RegexError::Unsupported {
            construct: what.to_string(),
            offset: self.pos,
        }
    }

    pub fn parse(mut self) -> Result<Node, RegexError> {
        if self.peek() == Some('^') {
            self.pos += 1;
        }
        let node = self.alt()?;
        if self.pos < self.chars.len() {
            return Err(match self.peek() {
                Some(')') => self.malformed("unbalanced `)`"),
                _ => self.malformed("unexpected character"),
            });
        }
        Ok(node)
    }

    fn alt(&mut self) -> Result<Node, RegexError> {
        let mut branches = vec![self.concat()?];
        while self.peek() == Some('|') {
            self.pos += 1;
            branches.push(self.concat()?);
        }
        Ok(if branches.len() == 1 {
            branches.pop().unwrap()
        } else {
            Node::Alt(branches)
        })
    }

    fn concat(&mut self) -> Result<Node, RegexError> {
        let mut items = Vec::new();
        while let Some(c) = self.peek() {
            if c == '|' || c == ')' {
                break;
            }
            if c == '$' && self.pos + 1 == self.chars.len() {
                self.pos += 1;
                break;
            }
            let atom = self.atom()?;
            items.push(self.quantified(atom)?);
        }
        Ok(match items.len() {
            0 => Node::Empty,
            1 => items.pop().unwrap(),
            _ => Node::Concat(items),
        })
    }

    fn quantified(&mut self, mut atom: Node) -> Result<Node, RegexError> {
        loop {
            let q = match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    Node::Star(Box::new(atom))
                }
                Some('+') => {
                    self.pos += 1;
                    Node::Plus(Box::new(atom))
                }
                Some('?') => {
                    self.pos += 1;
                    Node::Opt(Box::new(atom))
                }
                Some('{') if matches!(self.peek2(), Some(d) if d.is_ascii_digit()) => {
                    self.pos += 1;
                    let (min, max) = self.counts()?;
                    Node::Repeat {
                        node: Box::new(atom),
                        min,
                        max,
                    }
                }
                _ => return Ok(atom),
            };
            if self.peek() == Some('?') {
                return Err(self.unsupported("lazy quantifier"));
            }
            if self.peek() == Some('+') {
                return Err(self.unsupported("possessive quantifier"));
            }
            atom = q;
        }
    }

    fn number(&mut self) -> Result<u32, RegexError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        let n: u32 = text
            .parse()
            .map_err(|_| self.malformed("expected a repetition count"))?;
        if n > MAX_REPEAT {
            return Err(self.malformed(format!("repetition count {n} exceeds {MAX_REPEAT}")));
        }
        Ok(n)
    }

    fn counts(&mut self) -> Result<(u32, Option<u32>), RegexError> {
        let min = self.number()?;
        let max = if self.peek() == Some(',') {
            self.pos += 1;
            if self.peek() == Some('}') {
                None
            } else {
                Some(self.number()?)
            }
        } else {
            Some(min)
        };
        if self.peek() != Some('}') {
            return Err(self.malformed("unterminated repetition"));
        }
        self.pos += 1;
        if let Some(max) = max {
            if max < min {
                return Err(self.malformed("repetition maximum is below its minimum"));
            }
        }
        Ok((min, max))
    }

    fn atom(&mut self) -> Result<Node, RegexError> {
        let c = self.peek().unwrap();
        match c {
            '(' => {
                self.pos += 1;
                if self.peek() == Some('?') {
                    match (self.peek2(), self.chars.get(self.pos + 2)) {
                        (Some(':'), _) => self.pos += 2,
                        (Some('=' | '!'), _) | (Some('<'), Some('=' | '!')) => {
                            return Err(self.unsupported("lookaround"))
                        }
                        _ => return Err(self.unsupported("group flag")),
                    }
                }
                let inner = self.alt()?;
                if self.peek() != Some(')') {
                    return Err(self.malformed("unbalanced `(`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            '[' => self.class(),
            '\'' => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    match self.peek() {
                        None => return Err(self.malformed("unterminated quoted literal")),
                        Some('\'') => {
                            self.pos += 1;
                            break;
                        }
                        Some('\\') => {
                            self.pos += 1;
                            let e = self.peek().ok_or_else(|| self.malformed("dangling escape"))?;
                            self.pos += 1;
                            items.push(Node::literal(e));
                        }
                        Some(ch) => {
                            self.pos += 1;
                            items.push(Node::literal(ch));
                        }
                    }
                }
                Ok(match items.len() {
                    0 => Node::Empty,
                    1 => items.pop().unwrap(),
                    _ => Node::Concat(items),
                })
            }
            '.' => {
                self.pos += 1;
                Ok(Node::Class(self.alphabet.to_vec()))
            }
            '\\' => {
                self.pos += 1;
                let ranges = self.escape()?;
                Ok(Node::Class(ranges))
            }
            '*' | '+' | '?' => Err(self.malformed(format!("quantifier `{c}` has nothing to repeat"))),
            '^' => Err(self.unsupported("inner anchor `^`")),
            '$' => Err(self.unsupported("inner anchor `$`")),
            _ => {
                self.pos += 1;
                Ok(Node::literal(c))
            }
        }
    }

    /// Escape after the backslash; returns the matched ranges.
    fn escape(&mut self) -> Result<Vec<(u32, u32)>, RegexError> {
        let e = self.peek().ok_or_else(|| self.malformed("dangling escape"))?;
        self.pos += 1;
        let digit = vec![('0' as u32, '9' as u32)];
        let word = normalize_ranges(vec![
            ('0' as u32, '9' as u32),
            ('A' as u32, 'Z' as u32),
            ('_' as u32, '_' as u32),
            ('a' as u32, 'z' as u32),
        ]);
        let space = normalize_ranges(vec![(9, 13), (32, 32)]);
        Ok(match e {
            '1'..='9' => {
                self.pos -= 2;
                return Err(self.unsupported("backreference"));
            }
            'd' => digit,
            'D' => complement(&digit, self.alphabet),
            'w' => word,
            'W' => complement(&word, self.alphabet),
            's' => space,
            'S' => complement(&space, self.alphabet),
            'n' => vec![(10, 10)],
            't' => vec![(9, 9)],
            'r' => vec![(13, 13)],
            'b' | 'B' | 'A' | 'z' | 'Z' => {
                self.pos -= 2;
                return Err(self.unsupported("assertion escape"));
            }
            c if c.is_ascii_alphanumeric() => {
                self.pos -= 2;
                return Err(self.malformed(format!("unknown escape `\\{c}`")));
            }
            c => vec![(c as u32, c as u32)],
        })
    }

    fn class(&mut self) -> Result<Node, RegexError> {
        self.pos += 1;
        let negated = self.peek() == Some('^');
        if negated {
            self.pos += 1;
        }
        let mut ranges = Vec::new();
        let mut first = true;
        loop {
            let c = self.peek().ok_or_else(|| self.malformed("unterminated class"))?;
            if c == ']' && !first {
                self.pos += 1;
                break;
            }
            first = false;
            let lo = if c == '\\' {
                self.pos += 1;
                let r = self.escape()?;
                if r.len() != 1 || r[0].0 != r[0].1 {
                    ranges.extend(r);
                    continue;
                }
                r[0].0
            } else {
                self.pos += 1;
                c as u32
            };
            if self.peek() == Some('-') && !matches!(self.peek2(), Some(']') | None) {
                self.pos += 1;
                let hc = self.peek().unwrap();
                self.pos += 1;
                let hi = if hc == '\\' {
                    let r = self.escape()?;
                    if r.len() != 1 || r[0].0 != r[0].1 {
                        return Err(self.malformed("class escape cannot end a range"));
                    }
                    r[0].0
                } else {
                    hc as u32
                };
                if hi < lo {
                    return Err(self.malformed("range end is below its start"));
                }
                ranges.push((lo, hi));
            } else {
                ranges.push((lo, lo));
            }
        }
        let ranges = normalize_ranges(ranges);
        Ok(Node::Class(if negated {
            complement(&ranges, self.alphabet)
        } else {
            ranges
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_within_alphabet() {
        let ab = vec![(0x20, 0x7e)];
        assert_eq!(
            complement(&[(0x30, 0x39)], &ab),
            vec![(0x20, 0x2f), (0x3a, 0x7e)]
        );
        assert_eq!(complement(&[], &ab), ab);
    }

    #[test]
    fn ranges_merge() {
        assert_eq!(normalize_ranges(vec![(5, 9), (1, 3), (4, 4)]), vec![(1, 9)]);
    }
}
