//! Undirected graphs, sparse aggregation operators and the precomputed
//! operator-power feature bank.

mod csr;
pub mod edgelist;
pub mod generators;
mod operator;

pub use csr::CsrMatrix;
pub use operator::{build_operator, degree_feature, operator_bank, FeatureBank, OperatorKind};

use crate::nn::DenseMatrix;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("edge ({u}, {v}) references a node outside 0..{node_count}")]
    EndpointOutOfRange { u: usize, v: usize, node_count: usize },
    #[error("feature matrix has {rows} rows but the graph has {node_count} nodes")]
    FeatureRows { rows: usize, node_count: usize },
    #[error("permutation length {len} does not match node count {node_count}")]
    BadPermutation { len: usize, node_count: usize },
}

/// An undirected simple graph with dense node features and an optional class label.
///
/// Edges are stored canonically: each pair as `(min, max)`, sorted, without
/// duplicates or self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    features: DenseMatrix,
    pub label: Option<usize>,
}

impl Graph {
    /// Canonicalizes `edges` (orientation, duplicates, self-loops) and checks
    /// that endpoints and feature rows fit `node_count`.
    pub fn new(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        features: DenseMatrix,
    ) -> Result<Self, GraphError> {
        if features.rows() != node_count {
            return Err(GraphError::FeatureRows {
                rows: features.rows(),
                node_count,
            });
        }
        let mut canon = Vec::new();
        for (u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(GraphError::EndpointOutOfRange { u, v, node_count });
            }
            if u != v {
                canon.push((u.min(v), u.max(v)));
            }
        }
        canon.sort_unstable();
        canon.dedup();
        Ok(Self {
            node_count,
            edges: canon,
            features,
            label: None,
        })
    }

    /// Graph with a single constant feature equal to 1 on every node.
    pub fn with_unit_features(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        Self::new(node_count, edges, DenseMatrix::filled(node_count, 1, 1.0))
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    /// Replaces the feature matrix; the row count must match the node count.
    pub fn set_features(&mut self, features: DenseMatrix) -> Result<(), GraphError> {
        if features.rows() != self.node_count {
            return Err(GraphError::FeatureRows {
                rows: features.rows(),
                node_count: self.node_count,
            });
        }
        self.features = features;
        Ok(())
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// Sorted adjacency lists.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Relabels nodes so that old node `v` becomes node `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, GraphError> {
        if perm.len() != self.node_count {
            return Err(GraphError::BadPermutation {
                len: perm.len(),
                node_count: self.node_count,
            });
        }
        let mut inverse = vec![usize::MAX; self.node_count];
        for (old, &new) in perm.iter().enumerate() {
            if new >= self.node_count || inverse[new] != usize::MAX {
                return Err(GraphError::BadPermutation {
                    len: perm.len(),
                    node_count: self.node_count,
                });
            }
            inverse[new] = old;
        }
        let features = self.features.select_rows(&inverse);
        let edges = self.edges.iter().map(|&(u, v)| (perm[u], perm[v]));
        let mut g = Self::new(self.node_count, edges, features)?;
        g.label = self.label;
        Ok(g)
    }

    /// Disjoint union; nodes of `other` are shifted after the nodes of `self`.
    pub fn disjoint_union(&self, other: &Graph) -> Result<Self, GraphError> {
        let shift = self.node_count;
        let edges = self
            .edges
            .iter()
            .copied()
            .chain(other.edges.iter().map(|&(u, v)| (u + shift, v + shift)));
        let mut rows: Vec<&[f64]> = self.features.row_iter().collect();
        rows.extend(other.features.row_iter());
        let features = if rows.is_empty() {
            DenseMatrix::zeros(0, self.feature_dim())
        } else {
            DenseMatrix::from_rows(&rows)
        };
        Self::new(self.node_count + other.node_count, edges, features)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalization_drops_loops_and_duplicates() {
        let g = Graph::with_unit_features(3, [(1, 0), (0, 1), (2, 2), (2, 1)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(g.degrees(), vec![1, 2, 1]);
    }

    #[test]
    fn rejects_bad_endpoints_and_feature_rows() {
        assert!(matches!(
            Graph::with_unit_features(2, [(0, 2)]),
            Err(GraphError::EndpointOutOfRange { .. })
        ));
        assert!(matches!(
            Graph::new(3, [], DenseMatrix::zeros(2, 1)),
            Err(GraphError::FeatureRows { .. })
        ));
    }

    #[test]
    fn permutation_moves_features_with_nodes() {
        let feats = DenseMatrix::from_rows(&[[0.0], [1.0], [2.0]]);
        let g = Graph::new(3, [(0, 1)], feats).unwrap();
        let p = g.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.edges(), &[(0, 2)]);
        assert_eq!(p.features().get(2, 0), 0.0);
        assert_eq!(p.features().get(0, 0), 1.0);
        assert!(g.permuted(&[0, 0, 1]).is_err());
    }
}
