//! SMT-LIB term text.

use aisette_core::value::{DECIMAL_SCALE, INT_MAX};

pub const TRUE: &str = "true";
pub const FALSE: &str = "false";

pub fn int(i: i64) -> String {
    if i < 0 {
        format!("(- {})", (i as i128).unsigned_abs())
    } else {
        i.to_string()
    }
}

pub fn string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\"\""),
            ' '..='~' if c != '\\' => out.push(c),
            _ => out.push_str(&format!("\\u{{{:x}}}", c as u32)),
        }
    }
    out.push('"');
    out
}

pub fn app(f: &str, args: &[&str]) -> String {
    let mut out = format!("({f}");
    for a in args {
        out.push(' ');
        out.push_str(a);
    }
    out.push(')');
    out
}

pub fn not(a: &str) -> String {
    match a {
        TRUE => FALSE.into(),
        FALSE => TRUE.into(),
        _ => app("not", &[a]),
    }
}

pub fn and(items: &[&str]) -> String {
    if items.contains(&FALSE) {
        return FALSE.into();
    }
    let kept: Vec<&str> = items.iter().copied().filter(|t| *t != TRUE).collect();
    match kept.len() {
        0 => TRUE.into(),
        1 => kept[0].into(),
        _ => app("and", &kept),
    }
}

pub fn or(items: &[&str]) -> String {
    if items.contains(&TRUE) {
        return TRUE.into();
    }
    let kept: Vec<&str> = items.iter().copied().filter(|t| *t != FALSE).collect();
    match kept.len() {
        0 => FALSE.into(),
        1 => kept[0].into(),
        _ => app("or", &kept),
    }
}

pub fn and2(a: &str, b: &str) -> String {
    and(&[a, b])
}

pub fn implies(a: &str, b: &str) -> String {
    match (a, b) {
        (TRUE, _) => b.into(),
        (FALSE, _) | (_, TRUE) => TRUE.into(),
        _ => app("=>", &[a, b]),
    }
}

pub fn ite(c: &str, t: &str, e: &str) -> String {
    match c {
        _ if t == e => t.into(),
        TRUE => t.into(),
        FALSE => e.into(),
        _ => app("ite", &[c, t, e]),
    }
}

pub fn eq(a: &str, b: &str) -> String {
    if a == b {
        TRUE.into()
    } else {
        app("=", &[a, b])
    }
}

/// Integer division truncating toward zero, as the evaluator does.
pub fn tdiv(a: &str, b: &str) -> String {
    let q = app("div", &[&app("abs", &[a]), &app("abs", &[b])]);
    let neg = app("not", &[&eq(&app(">=", &[a, "0"]), &app(">=", &[b, "0"]))]);
    ite(&neg, &app("-", &[&q]), &q)
}

pub fn in_int_range(t: &str) -> String {
    and(&[&app("<=", &[t, &int(INT_MAX)]), &app(">=", &[t, &int(-INT_MAX)])])
}

pub fn out_of_int_range(t: &str) -> String {
    or(&[&app(">", &[t, &int(INT_MAX)]), &app("<", &[t, &int(-INT_MAX)])])
}

pub fn scale() -> String {
    int(DECIMAL_SCALE)
}

/// Symbol text, quoted unless it is a plain identifier. Names the solver
/// already defines get a `'` prefix, since quoting alone does not rename.
pub fn symbol(name: &str) -> String {
    const RESERVED: &[&str] = &[
        "abs", "and", "assert", "distinct", "div", "exists", "false", "forall", "ite", "let", "mod", "not", "or",
        "true", "xor", "par", "as", "_", "!", "rem", "to_real", "to_int", "is_int", "select", "store", "pi", "e",
    ];
    if RESERVED.contains(&name) {
        return format!("|'{name}|");
    }
    let plain = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}
