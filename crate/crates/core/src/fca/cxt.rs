//! Burmeister `.cxt` text format for dyadic contexts.
//!
//! ```text
//! B
//! <context name, may be empty>
//! <object count>
//! <attribute count>
//!
//! <object names, one per line>
//! <attribute names, one per line>
//! <one row per object, `X` for a cross and `.` otherwise>
//! ```

use std::fmt::Write as _;

use super::dyadic::DyadicContext;
use crate::error::{Error, Result};

pub fn write_cxt(ctx: &DyadicContext, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "B");
    let _ = writeln!(out, "{name}");
    let _ = writeln!(out, "{}", ctx.n_objects());
    let _ = writeln!(out, "{}", ctx.n_attributes());
    out.push('\n');
    for g in ctx.object_names() {
        let _ = writeln!(out, "{g}");
    }
    for m in ctx.attribute_names() {
        let _ = writeln!(out, "{m}");
    }
    for g in 0..ctx.n_objects() {
        let row: String = (0..ctx.n_attributes())
            .map(|m| if ctx.has(g, m) { 'X' } else { '.' })
            .collect();
        let _ = writeln!(out, "{row}");
    }
    out
}

/// Parses a `.cxt` document, returning the context and its name line.
pub fn parse_cxt(text: &str) -> Result<(DyadicContext, String)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let parse_err = |line: usize, message: &str| Error::Parse {
        line,
        message: message.to_string(),
    };

    match lines.next() {
        Some((_, "B")) => {}
        Some((line, _)) => return Err(parse_err(line, "expected `B` header")),
        None => return Err(parse_err(1, "empty document")),
    }
    let (_, name) = lines.next().ok_or_else(|| parse_err(2, "missing name line"))?;
    let mut count = |what: &str| -> Result<usize> {
        let (line, text) = lines
            .next()
            .ok_or_else(|| parse_err(0, &format!("missing {what} count")))?;
        text.trim()
            .parse()
            .map_err(|_| parse_err(line, &format!("invalid {what} count `{text}`")))
    };
    let n_objects = count("object")?;
    let n_attributes = count("attribute")?;

    // names and rows follow after optional blank lines
    let mut rest = lines.skip_while(|(_, l)| l.trim().is_empty());
    let mut take = |n: usize, what: &str| -> Result<Vec<(usize, String)>> {
        (0..n)
            .map(|_| {
                rest.next()
                    .map(|(i, l)| (i, l.to_string()))
                    .ok_or_else(|| parse_err(0, &format!("missing {what}")))
            })
            .collect()
    };
    let objects: Vec<String> = take(n_objects, "object name")?.into_iter().map(|x| x.1).collect();
    let attributes: Vec<String> = take(n_attributes, "attribute name")?.into_iter().map(|x| x.1).collect();
    let rows = take(n_objects, "incidence row")?;

    let mut ctx = DyadicContext::with_names(objects, attributes);
    for (g, (line, row)) in rows.iter().enumerate() {
        let row = row.trim();
        if row.chars().count() != n_attributes {
            return Err(parse_err(
                *line,
                &format!("expected {n_attributes} marks, found {}", row.chars().count()),
            ));
        }
        for (m, ch) in row.chars().enumerate() {
            match ch {
                'X' | 'x' => ctx.insert(g, m)?,
                '.' => {}
                _ => return Err(parse_err(*line, &format!("unexpected mark `{ch}`"))),
            }
        }
    }
    Ok((ctx, name.to_string()))
}
