//! Edge-list files.
//!
//! ```text
//! # comment
//! n=3
//! 1 2 0.5
//! ```
//!
//! Columns are `influenced`, `influencer`, `weight` with 1-based agent ids,
//! so the line above sets `g_12 = 0.5`: agent 2 influences agent 1. Fields
//! are tab-separated on output; any whitespace is accepted on input.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::graph::{Edge, WeightedDigraph};

#[derive(Debug, Error)]
pub enum EdgeListError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {kind}")]
    Parse { line: usize, kind: ParseErrorKind },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseErrorKind {
    #[error("expected header `n=<count>`, found `{0}`")]
    MissingHeader(String),
    #[error("malformed edge `{0}`: expected `influenced<TAB>influencer<TAB>weight`")]
    Malformed(String),
    #[error("node id {id} outside 1..={n}")]
    NodeOutOfRange { id: usize, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({influenced}, {influencer}), first seen on line {first_line}")]
    DuplicateEdge {
        influenced: usize,
        influencer: usize,
        first_line: usize,
    },
    #[error("negative weight {0}")]
    NegativeWeight(f64),
    #[error("non-finite weight")]
    NonFiniteWeight,
    #[error("file ended before the `n=<count>` header")]
    Empty,
}

fn parse_err(line: usize, kind: ParseErrorKind) -> EdgeListError {
    EdgeListError::Parse { line, kind }
}

pub fn parse_edge_list(text: &str) -> Result<WeightedDigraph, EdgeListError> {
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some(count) = n else {
            let parsed = content
                .strip_prefix("n=")
                .and_then(|v| v.trim().parse::<usize>().ok());
            match parsed {
                Some(c) => n = Some(c),
                None => {
                    return Err(parse_err(
                        line_no,
                        ParseErrorKind::MissingHeader(content.to_string()),
                    ))
                }
            }
            continue;
        };
        let fields: Vec<&str> = content.split_whitespace().collect();
        let malformed = || parse_err(line_no, ParseErrorKind::Malformed(content.to_string()));
        if fields.len() != 3 {
            return Err(malformed());
        }
        let influenced: usize = fields[0].parse().map_err(|_| malformed())?;
        let influencer: usize = fields[1].parse().map_err(|_| malformed())?;
        let weight: f64 = fields[2].parse().map_err(|_| malformed())?;
        for id in [influenced, influencer] {
            if id == 0 || id > count {
                return Err(parse_err(
                    line_no,
                    ParseErrorKind::NodeOutOfRange { id, n: count },
                ));
            }
        }
        if influenced == influencer {
            return Err(parse_err(line_no, ParseErrorKind::SelfLoop(influenced)));
        }
        if !weight.is_finite() {
            return Err(parse_err(line_no, ParseErrorKind::NonFiniteWeight));
        }
        if weight < 0.0 {
            return Err(parse_err(line_no, ParseErrorKind::NegativeWeight(weight)));
        }
        if let Some(&first_line) = seen.get(&(influenced, influencer)) {
            return Err(parse_err(
                line_no,
                ParseErrorKind::DuplicateEdge {
                    influenced,
                    influencer,
                    first_line,
                },
            ));
        }
        seen.insert((influenced, influencer), line_no);
        edges.push(Edge::new(influenced - 1, influencer - 1, weight));
    }
    let n = n.ok_or_else(|| parse_err(last_line.max(1), ParseErrorKind::Empty))?;
    Ok(WeightedDigraph::new(n, edges).expect("edges were validated while parsing"))
}

/// Canonical text: header, then edges sorted by (influenced, influencer).
/// Weights use the shortest representation that parses back exactly.
pub fn format_edge_list(graph: &WeightedDigraph) -> String {
    let mut out = String::new();
    out.push_str("# influenced\tinfluencer\tweight\n");
    let _ = writeln!(out, "n={}", graph.node_count());
    for e in graph.edges() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}",
            e.influenced + 1,
            e.influencer + 1,
            e.weight
        );
    }
    out
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<WeightedDigraph, EdgeListError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| EdgeListError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_edge_list(&text)
}

pub fn save_edge_list(
    graph: &WeightedDigraph,
    path: impl AsRef<Path>,
) -> Result<(), EdgeListError> {
    let path = path.as_ref();
    std::fs::write(path, format_edge_list(graph)).map_err(|source| EdgeListError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(text: &str) -> (usize, ParseErrorKind) {
        match parse_edge_list(text).unwrap_err() {
            EdgeListError::Parse { line, kind } => (line, kind),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn parses_the_adjacency_convention() {
        let g = parse_edge_list("n=2\n1\t2\t0.5\n").unwrap();
        assert_eq!(g.weight(0, 1), 0.5);
        assert_eq!(g.weight(1, 0), 0.0);
    }

    #[test]
    fn header_only_is_an_empty_graph() {
        let g = parse_edge_list("# nothing here\nn=7\n").unwrap();
        assert_eq!(g.node_count(), 7);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn distinct_errors_with_line_numbers() {
        assert_eq!(kind("n=3\n3 3 1.0\n"), (2, ParseErrorKind::SelfLoop(3)));
        assert_eq!(
            kind("n=3\n1\t2\t0.5\n# c\n1\t2\t0.1\n"),
            (
                4,
                ParseErrorKind::DuplicateEdge {
                    influenced: 1,
                    influencer: 2,
                    first_line: 2
                }
            )
        );
        assert_eq!(
            kind("n=3\n1\t2\t-0.5\n"),
            (2, ParseErrorKind::NegativeWeight(-0.5))
        );
        assert!(matches!(
            kind("n=3\n1\t2\n"),
            (2, ParseErrorKind::Malformed(_))
        ));
        assert!(matches!(
            kind("n=3\n1\tx\t0.2\n"),
            (2, ParseErrorKind::Malformed(_))
        ));
        assert_eq!(
            kind("n=3\n1\t4\t0.2\n"),
            (2, ParseErrorKind::NodeOutOfRange { id: 4, n: 3 })
        );
        assert!(matches!(
            kind("1\t2\t0.2\n"),
            (1, ParseErrorKind::MissingHeader(_))
        ));
        assert_eq!(kind("# only a comment\n"), (1, ParseErrorKind::Empty));
    }

    #[test]
    fn save_then_load() {
        let g = WeightedDigraph::new(
            4,
            [
                Edge::new(3, 0, 0.1),
                Edge::new(0, 2, 1.0 / 3.0),
                Edge::new(1, 0, 2.5e-17),
            ],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.tsv");
        save_edge_list(&g, &path).unwrap();
        assert_eq!(load_edge_list(&path).unwrap(), g);
    }
}
