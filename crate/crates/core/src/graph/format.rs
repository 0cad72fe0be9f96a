//! Plain-text graph format.
//!
//! ```text
//! # comment
//! p spanner <n> <m> <unit|weighted>
//! a <source> <target> <length> [cost]
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use super::{DiGraph, Edge, GraphError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing `p spanner` header")]
    MissingHeader,
    #[error("header declares {declared} edges but {found} were given")]
    EdgeCount { declared: usize, found: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, msg: msg.into() }
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, ParseError> {
    let tok = tok.ok_or_else(|| syntax(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| syntax(line, format!("bad {what} `{tok}`")))
}

pub fn parse_graph(text: &str) -> Result<DiGraph, ParseError> {
    let mut header: Option<(usize, usize, bool)> = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut toks = body.split_whitespace();
        match toks.next() {
            Some("p") => {
                if header.is_some() {
                    return Err(syntax(line, "duplicate header"));
                }
                if toks.next() != Some("spanner") {
                    return Err(syntax(line, "expected `p spanner`"));
                }
                let n = num(toks.next(), line, "vertex count")?;
                let m = num(toks.next(), line, "edge count")?;
                let unit = match toks.next() {
                    Some("unit") => true,
                    Some("weighted") => false,
                    other => return Err(syntax(line, format!("expected unit or weighted, got {other:?}"))),
                };
                header = Some((n, m, unit));
            }
            Some("a") => {
                let Some((_, _, unit)) = header else {
                    return Err(ParseError::MissingHeader);
                };
                let source = num(toks.next(), line, "source")?;
                let target = num(toks.next(), line, "target")?;
                let length: f64 = num(toks.next(), line, "length")?;
                let cost: f64 = match toks.next() {
                    Some(t) => num(Some(t), line, "cost")?,
                    None => 1.0,
                };
                if unit && length != 1.0 {
                    return Err(syntax(line, "unit graph with length other than 1"));
                }
                edges.push(Edge { source, target, length, cost });
            }
            Some(other) => return Err(syntax(line, format!("unknown line type `{other}`"))),
            None => {}
        }
        if body.split_whitespace().count() > 6 {
            return Err(syntax(line, "too many fields"));
        }
    }
    let (n, m, _) = header.ok_or(ParseError::MissingHeader)?;
    if edges.len() != m {
        return Err(ParseError::EdgeCount { declared: m, found: edges.len() });
    }
    Ok(DiGraph::new(n, edges)?)
}

/// Writes the graph; costs are emitted only when some cost differs from 1.
pub fn write_graph(g: &DiGraph) -> String {
    let mut s = String::new();
    let kind = if g.is_unit_length() { "unit" } else { "weighted" };
    let _ = writeln!(s, "p spanner {} {} {}", g.n(), g.m(), kind);
    let with_cost = g.edges().iter().any(|e| e.cost != 1.0);
    for e in g.edges() {
        if with_cost {
            let _ = writeln!(s, "a {} {} {} {}", e.source, e.target, e.length, e.cost);
        } else {
            let _ = writeln!(s, "a {} {} {}", e.source, e.target, e.length);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "# tri\np spanner 3 3 weighted\na 0 1 1.5\na 1 2 2 3\na 0 2 4\n";
        let g = parse_graph(text).unwrap();
        assert_eq!(g.m(), 3);
        assert_eq!(g.edge(1).cost, 3.0);
        let again = parse_graph(&write_graph(&g)).unwrap();
        assert_eq!(again.edges(), g.edges());
    }

    #[test]
    fn unit_header_rejects_other_lengths() {
        assert!(matches!(parse_graph("p spanner 2 1 unit\na 0 1 2\n"), Err(ParseError::Syntax { line: 2, .. })));
    }

    #[test]
    fn edge_count_checked() {
        assert_eq!(
            parse_graph("p spanner 2 2 unit\na 0 1 1\n"),
            Err(ParseError::EdgeCount { declared: 2, found: 1 })
        );
    }

    #[test]
    fn header_required() {
        assert_eq!(parse_graph("a 0 1 1\n"), Err(ParseError::MissingHeader));
        assert_eq!(parse_graph("# nothing\n"), Err(ParseError::MissingHeader));
    }
}
