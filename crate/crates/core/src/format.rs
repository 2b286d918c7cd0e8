//! The `.apa` text format.
//!
//! ```text
//! # comment
//! pointers 3 a b c      # optional; the leading count is optional too
//! b = &a
//! c = b
//! a = *c
//! *c = b
//! ```
//!
//! Pointers are numbered in order of first appearance (header names first).
//! Repeated statements are dropped. A trailing `# query a b` comment names
//! an on-demand query and can be read back with [`parse_query_comment`].

use crate::error::{Error, Result};
use crate::instance::{ApaInstance, Statement, StatementKind};

fn is_identifier(tok: &str) -> bool {
    if let Some(digits) = tok.strip_prefix("$aux") {
        return !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit());
    }
    let mut bytes = tok.bytes();
    match bytes.next() {
        Some(b) if b.is_ascii_alphabetic() || b == b'_' => {}
        _ => return false,
    }
    bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn identifier(tok: &str, line: usize) -> Result<&str> {
    if is_identifier(tok) {
        Ok(tok)
    } else {
        Err(parse_err(line, format!("malformed identifier `{tok}`")))
    }
}

pub fn parse_instance(text: &str) -> Result<ApaInstance> {
    let mut inst = ApaInstance::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw.strip_suffix('\r').unwrap_or(raw)).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = header_body(line) {
            parse_header(rest, lineno, &mut inst)?;
            continue;
        }
        let (kind, lhs, rhs) = parse_statement(line, lineno)?;
        inst.add_named(kind, lhs, rhs);
    }
    Ok(inst)
}

fn header_body(line: &str) -> Option<&str> {
    if line.contains('=') {
        return None;
    }
    let rest = line.strip_prefix("pointers")?;
    if rest.is_empty() || rest.starts_with(char::is_whitespace) {
        Some(rest)
    } else {
        None
    }
}

fn parse_header(rest: &str, lineno: usize, inst: &mut ApaInstance) -> Result<()> {
    let mut tokens = rest.split_whitespace().peekable();
    let declared = match tokens.peek() {
        Some(tok) if tok.bytes().all(|b| b.is_ascii_digit()) => {
            let count = tok
                .parse::<usize>()
                .map_err(|_| parse_err(lineno, format!("bad pointer count `{tok}`")))?;
            tokens.next();
            Some(count)
        }
        _ => None,
    };
    let mut listed = 0;
    for tok in tokens {
        inst.intern(identifier(tok, lineno)?);
        listed += 1;
    }
    if let Some(count) = declared {
        if count != listed {
            return Err(parse_err(
                lineno,
                format!("header declares {count} pointers but lists {listed}"),
            ));
        }
    }
    Ok(())
}

fn parse_statement(line: &str, lineno: usize) -> Result<(StatementKind, &str, &str)> {
    let (left, right) = line
        .split_once('=')
        .ok_or_else(|| parse_err(lineno, format!("expected a statement, found `{line}`")))?;
    let (left, right) = (left.trim(), right.trim());
    if right.contains('=') {
        return Err(parse_err(lineno, "more than one `=`"));
    }
    let (store, lhs) = match left.strip_prefix('*') {
        Some(rest) => (true, rest.trim_start()),
        None => (false, left),
    };
    let lhs = identifier(lhs, lineno)?;
    let (kind, rhs) = if let Some(rest) = right.strip_prefix('&') {
        (StatementKind::AddressOf, rest.trim_start())
    } else if let Some(rest) = right.strip_prefix('*') {
        (StatementKind::LoadDeref, rest.trim_start())
    } else {
        (StatementKind::Assign, right)
    };
    let rhs = identifier(rhs, lineno)?;
    match (store, kind) {
        (false, k) => Ok((k, lhs, rhs)),
        (true, StatementKind::Assign) => Ok((StatementKind::StoreDeref, lhs, rhs)),
        (true, _) => Err(parse_err(
            lineno,
            "a store `*x = …` must have a plain identifier on the right",
        )),
    }
}

/// Canonical text: a `pointers <n> <names…>` header, then one statement
/// per line in instance order.
pub fn serialize_instance(inst: &ApaInstance) -> String {
    let mut out = format!("pointers {}", inst.n());
    for name in inst.names() {
        out.push(' ');
        out.push_str(name);
    }
    out.push('\n');
    for s in inst.statements() {
        out.push_str(&inst.display_statement(s));
        out.push('\n');
    }
    out
}

pub fn statement_line(inst: &ApaInstance, s: &Statement) -> String {
    inst.display_statement(s)
}

/// Extracts the last `# query a b` comment, if any.
pub fn parse_query_comment(text: &str) -> Option<(String, String)> {
    text.lines().rev().find_map(|line| {
        let comment = line.trim().strip_prefix('#')?.trim();
        let rest = comment.strip_prefix("query")?;
        let mut toks = rest.split_whitespace();
        let a = toks.next()?;
        let b = toks.next()?;
        if toks.next().is_some() || !is_identifier(a) || !is_identifier(b) {
            return None;
        }
        Some((a.to_string(), b.to_string()))
    })
}
