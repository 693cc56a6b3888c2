use std::fs;
use std::path::{Path, PathBuf};

use super::{DataError, Dataset};
use crate::graph::Graph;
use crate::nn::DenseMatrix;

fn file_path(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}_{suffix}.txt"))
}

fn read_required(path: &Path) -> Result<String, DataError> {
    if !path.is_file() {
        return Err(DataError::MissingFile(path.to_path_buf()));
    }
    Ok(fs::read_to_string(path)?)
}

fn read_optional(path: &Path) -> Result<Option<String>, DataError> {
    if path.is_file() {
        Ok(Some(fs::read_to_string(path)?))
    } else {
        Ok(None)
    }
}

/// Non-blank lines with their 1-based line numbers; tolerates CR and surrounding whitespace.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn malformed(path: &Path, line: usize, reason: impl Into<String>) -> DataError {
    DataError::MalformedLine {
        file: path
            .file_name()
            .map_or_else(String::new, |f| f.to_string_lossy().into_owned()),
        line,
        reason: reason.into(),
    }
}

fn parse_fields<T: std::str::FromStr>(path: &Path, line: usize, text: &str) -> Result<Vec<T>, DataError> {
    text.split(',')
        .map(|f| {
            let f = f.trim();
            f.parse::<T>()
                .map_err(|_| malformed(path, line, format!("cannot parse `{f}`")))
        })
        .collect()
}

fn parse_column<T: std::str::FromStr>(path: &Path, text: &str) -> Result<Vec<T>, DataError> {
    content_lines(text)
        .map(|(line, l)| {
            let mut fields = parse_fields::<T>(path, line, l)?;
            if fields.len() != 1 {
                return Err(malformed(path, line, "expected a single value"));
            }
            Ok(fields.remove(0))
        })
        .collect()
}

/// Loads `{name}_A.txt`, `{name}_graph_indicator.txt`, `{name}_graph_labels.txt`
/// and, when present, `{name}_node_labels.txt` and `{name}_node_attributes.txt`
/// from `dir`. Graphs carry empty (`N x 0`) features until [`super::build_features`].
pub fn load_tu_dataset(dir: &Path, name: &str) -> Result<Dataset, DataError> {
    let a_path = file_path(dir, name, "A");
    let ind_path = file_path(dir, name, "graph_indicator");
    let lab_path = file_path(dir, name, "graph_labels");
    let edges_text = read_required(&a_path)?;
    let indicator_text = read_required(&ind_path)?;
    let labels_text = read_required(&lab_path)?;

    let indicator: Vec<usize> = parse_column(&ind_path, &indicator_text)?;
    let raw_labels: Vec<i64> = parse_column(&lab_path, &labels_text)?;
    let graph_count = raw_labels.len();

    // global node (0-based) -> (graph, local index)
    let mut sizes = vec![0usize; graph_count];
    let mut local = Vec::with_capacity(indicator.len());
    for (node, &gid) in indicator.iter().enumerate() {
        if gid == 0 || gid > graph_count {
            return Err(DataError::Inconsistent(format!(
                "node {} belongs to graph {gid} but there are {graph_count} graph labels",
                node + 1
            )));
        }
        local.push((gid - 1, sizes[gid - 1]));
        sizes[gid - 1] += 1;
    }
    if let Some(g) = sizes.iter().position(|&s| s == 0) {
        return Err(DataError::Inconsistent(format!("graph {} has no nodes", g + 1)));
    }

    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); graph_count];
    for (line, l) in content_lines(&edges_text) {
        let pair: Vec<usize> = parse_fields(&a_path, line, l)?;
        let [u, v] = pair[..] else {
            return Err(malformed(&a_path, line, "expected `u, v`"));
        };
        let lookup = |x: usize| x.checked_sub(1).and_then(|i| local.get(i).copied());
        match (lookup(u), lookup(v)) {
            (Some((gu, lu)), Some((gv, lv))) if gu == gv => edges[gu].push((lu, lv)),
            _ => return Err(DataError::DanglingEdge { line, u, v }),
        }
    }

    let node_labels = match read_optional(&file_path(dir, name, "node_labels"))? {
        None => None,
        Some(text) => {
            let path = file_path(dir, name, "node_labels");
            let flat: Vec<i64> = parse_column(&path, &text)?;
            if flat.len() != indicator.len() {
                return Err(DataError::Inconsistent(format!(
                    "{} node labels for {} nodes",
                    flat.len(),
                    indicator.len()
                )));
            }
            let mut per_graph: Vec<Vec<i64>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
            for (&(g, _), &l) in local.iter().zip(&flat) {
                per_graph[g].push(l);
            }
            Some(per_graph)
        }
    };

    let node_attributes = match read_optional(&file_path(dir, name, "node_attributes"))? {
        None => None,
        Some(text) => {
            let path = file_path(dir, name, "node_attributes");
            let rows: Vec<(usize, Vec<f64>)> = content_lines(&text)
                .map(|(line, l)| Ok((line, parse_fields::<f64>(&path, line, l)?)))
                .collect::<Result<_, DataError>>()?;
            if rows.len() != indicator.len() {
                return Err(DataError::Inconsistent(format!(
                    "{} attribute rows for {} nodes",
                    rows.len(),
                    indicator.len()
                )));
            }
            let width = rows.first().map_or(0, |r| r.1.len());
            let mut per_graph: Vec<Vec<f64>> = sizes.iter().map(|&s| Vec::with_capacity(s * width)).collect();
            for (&(g, _), (line, row)) in local.iter().zip(rows) {
                if row.len() != width {
                    return Err(malformed(&path, line, format!("expected {width} attributes")));
                }
                per_graph[g].extend(row);
            }
            Some(
                per_graph
                    .into_iter()
                    .zip(&sizes)
                    .map(|(data, &n)| DenseMatrix::from_vec(n, width, data))
                    .collect(),
            )
        }
    };

    let mut class_values = raw_labels.clone();
    class_values.sort_unstable();
    class_values.dedup();
    let graphs = sizes
        .iter()
        .zip(edges)
        .zip(&raw_labels)
        .map(|((&n, e), raw)| {
            let class = class_values.binary_search(raw).expect("label is in the vocabulary");
            Graph::new(n, e, DenseMatrix::zeros(n, 0))
                .map(|g| g.with_label(class))
                .map_err(|err| DataError::Inconsistent(err.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(Dataset {
        name: name.to_string(),
        graphs,
        num_classes: class_values.len(),
        class_values,
        node_labels,
        node_attributes,
        feature_scheme: None,
    })
}

/// Writes `ds` back in TU text format; raw node labels and attributes are written when present.
pub fn write_tu_dataset(dir: &Path, ds: &Dataset) -> Result<(), DataError> {
    use std::fmt::Write as _;
    let mut a = String::new();
    let mut indicator = String::new();
    let mut labels = String::new();
    let mut offset = 0;
    for (gi, g) in ds.graphs.iter().enumerate() {
        for &(u, v) in g.edges() {
            let _ = writeln!(a, "{}, {}", u + offset + 1, v + offset + 1);
            let _ = writeln!(a, "{}, {}", v + offset + 1, u + offset + 1);
        }
        for _ in 0..g.node_count() {
            let _ = writeln!(indicator, "{}", gi + 1);
        }
        let class = g.label.expect("dataset graphs are labeled");
        let _ = writeln!(labels, "{}", ds.class_values[class]);
        offset += g.node_count();
    }
    fs::write(file_path(dir, &ds.name, "A"), a)?;
    fs::write(file_path(dir, &ds.name, "graph_indicator"), indicator)?;
    fs::write(file_path(dir, &ds.name, "graph_labels"), labels)?;
    if let Some(nl) = &ds.node_labels {
        let text: String = nl.iter().flatten().map(|l| format!("{l}\n")).collect();
        fs::write(file_path(dir, &ds.name, "node_labels"), text)?;
    }
    if let Some(attrs) = &ds.node_attributes {
        let mut text = String::new();
        for m in attrs {
            for row in m.row_iter() {
                let fields: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
                let _ = writeln!(text, "{}", fields.join(", "));
            }
        }
        fs::write(file_path(dir, &ds.name, "node_attributes"), text)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_files(dir: &Path, name: &str, files: &[(&str, &str)]) {
        for (suffix, body) in files {
            fs::write(file_path(dir, name, suffix), body).unwrap();
        }
    }

    #[test]
    fn labels_are_remapped_contiguously() {
        let dir = tempfile::tempdir().unwrap();
        write_files(
            dir.path(),
            "T",
            &[
                ("A", "1, 2\r\n2, 1\r\n"),
                ("graph_indicator", "1\n1\n2\n"),
                ("graph_labels", "1\n-1\n"),
            ],
        );
        let ds = load_tu_dataset(dir.path(), "T").unwrap();
        assert_eq!(ds.class_values, vec![-1, 1]);
        assert_eq!(ds.labels(), vec![1, 0]);
        assert_eq!(ds.graphs[0].edges(), &[(0, 1)]);
        assert_eq!(ds.graphs[1].node_count(), 1);
    }

    #[test]
    fn zero_indexed_edges_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_files(
            dir.path(),
            "T",
            &[("A", "0, 1\n"), ("graph_indicator", "1\n1\n"), ("graph_labels", "0\n")],
        );
        assert!(matches!(
            load_tu_dataset(dir.path(), "T"),
            Err(DataError::DanglingEdge { line: 1, u: 0, v: 1 })
        ));
    }

    #[test]
    fn cross_graph_edges_and_bad_lines() {
        let dir = tempfile::tempdir().unwrap();
        write_files(
            dir.path(),
            "T",
            &[
                ("A", "1, 3\n"),
                ("graph_indicator", "1\n1\n2\n"),
                ("graph_labels", "0\n1\n"),
            ],
        );
        assert!(matches!(
            load_tu_dataset(dir.path(), "T"),
            Err(DataError::DanglingEdge { .. })
        ));
        write_files(dir.path(), "T", &[("A", "1, 2\n1 2\n")]);
        assert!(matches!(
            load_tu_dataset(dir.path(), "T"),
            Err(DataError::MalformedLine { line: 2, .. })
        ));
        write_files(dir.path(), "T", &[("A", "1, 2, 3\n")]);
        assert!(matches!(
            load_tu_dataset(dir.path(), "T"),
            Err(DataError::MalformedLine { .. })
        ));
    }

    #[test]
    fn missing_files_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_tu_dataset(dir.path(), "NOPE"),
            Err(DataError::MissingFile(_))
        ));
    }
}
