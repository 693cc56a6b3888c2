//! Plain edge-list text: a header line `N M` followed by `M` lines `u v`
//! with 0-indexed endpoints. Blank lines and `#` comments are ignored.

use thiserror::Error;

use super::{Graph, GraphError};

#[derive(Debug, Error, PartialEq)]
pub enum EdgeListError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("header announces {expected} edges but {found} were listed")]
    EdgeCount { expected: usize, found: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn parse_pair(line: &str, number: usize) -> Result<(usize, usize), EdgeListError> {
    let malformed = |reason: &str| EdgeListError::Malformed {
        line: number,
        reason: reason.to_string(),
    };
    let mut it = line.split_whitespace();
    let a = it.next().ok_or_else(|| malformed("expected two integers"))?;
    let b = it.next().ok_or_else(|| malformed("expected two integers"))?;
    if it.next().is_some() {
        return Err(malformed("trailing tokens"));
    }
    let a = a.parse().map_err(|_| malformed("not a non-negative integer"))?;
    let b = b.parse().map_err(|_| malformed("not a non-negative integer"))?;
    Ok((a, b))
}

/// Parses the edge-list format into a graph with unit node features.
pub fn parse_edge_list(text: &str) -> Result<Graph, EdgeListError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (header_line, header) = lines.next().ok_or(EdgeListError::Malformed {
        line: 1,
        reason: "missing `N M` header".into(),
    })?;
    let (n, m) = parse_pair(header, header_line)?;
    let mut edges = Vec::with_capacity(m);
    for (number, line) in lines {
        edges.push(parse_pair(line, number)?);
    }
    if edges.len() != m {
        return Err(EdgeListError::EdgeCount {
            expected: m,
            found: edges.len(),
        });
    }
    Ok(Graph::with_unit_features(n, edges)?)
}

/// Writes the canonical edge list of `g`.
pub fn to_edge_list(g: &Graph) -> String {
    let mut out = format!("{} {}\n", g.node_count(), g.edge_count());
    for (u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generators::cycle;

    #[test]
    fn parses_and_round_trips() {
        let g = parse_edge_list("# a path\n3 2\n0 1\n1 2\n").unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        let c = cycle(5);
        assert_eq!(parse_edge_list(&to_edge_list(&c)).unwrap(), c);
    }

    #[test]
    fn reports_bad_input() {
        assert!(matches!(
            parse_edge_list("3 1\n0 x\n"),
            Err(EdgeListError::Malformed { line: 2, .. })
        ));
        assert!(matches!(
            parse_edge_list("3 2\n0 1\n"),
            Err(EdgeListError::EdgeCount { expected: 2, found: 1 })
        ));
        assert!(matches!(parse_edge_list("2 1\n0 5\n"), Err(EdgeListError::Graph(_))));
        assert!(parse_edge_list("").is_err());
    }
}
