use std::fmt;
use std::str::FromStr;

use super::{CsrMatrix, Graph};
use crate::nn::DenseMatrix;

/// Aggregation operator whose powers produce the branch features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum OperatorKind {
    /// Plain adjacency `A` (sum aggregator).
    Adjacency,
    /// Symmetric normalization `D^{-1/2} A D^{-1/2}`.
    #[default]
    NormalizedAdjacency,
    /// Unscaled sum `D^{-1/2} A D^{-1/2} + A`, which keeps the degree information.
    NormalizedPlusAdjacency,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 3] = [
        OperatorKind::Adjacency,
        OperatorKind::NormalizedAdjacency,
        OperatorKind::NormalizedPlusAdjacency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Adjacency => "adjacency",
            OperatorKind::NormalizedAdjacency => "normalized",
            OperatorKind::NormalizedPlusAdjacency => "normalized-plus-adjacency",
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "adjacency" | "a" | "adj" => Ok(OperatorKind::Adjacency),
            "normalized" | "normalized-adjacency" | "norm" => Ok(OperatorKind::NormalizedAdjacency),
            "normalized-plus-adjacency" | "norm+adj" | "normalized+adjacency" => {
                Ok(OperatorKind::NormalizedPlusAdjacency)
            }
            other => Err(format!(
                "unknown operator `{other}` (expected adjacency, normalized or normalized-plus-adjacency)"
            )),
        }
    }
}

/// Builds the symmetric aggregation operator of `g`.
///
/// Degree-zero nodes produce empty rows; the normalization never divides by
/// a zero degree because such nodes have no incident entries.
pub fn build_operator(g: &Graph, kind: OperatorKind) -> CsrMatrix {
    let n = g.node_count();
    let deg = g.degrees();
    let mut triplets = Vec::with_capacity(2 * g.edge_count());
    for &(u, v) in g.edges() {
        let normalized = || 1.0 / ((deg[u] * deg[v]) as f64).sqrt();
        let value = match kind {
            OperatorKind::Adjacency => 1.0,
            OperatorKind::NormalizedAdjacency => normalized(),
            OperatorKind::NormalizedPlusAdjacency => normalized() + 1.0,
        };
        triplets.push((u, v, value));
        triplets.push((v, u, value));
    }
    CsrMatrix::from_triplets(n, n, triplets)
}

/// The matrices `B^(0..=R)` with `B^(0) = X` and `B^(r) = Ā B^(r-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBank {
    matrices: Vec<DenseMatrix>,
}

impl FeatureBank {
    /// Panics if `matrices` is empty or the shapes differ.
    pub fn from_matrices(matrices: Vec<DenseMatrix>) -> Self {
        assert!(!matrices.is_empty(), "a feature bank needs at least B^(0)");
        let shape = matrices[0].shape();
        assert!(
            matrices.iter().all(|m| m.shape() == shape),
            "feature bank matrices must share a shape"
        );
        Self { matrices }
    }

    /// Largest available power `R`.
    pub fn max_power(&self) -> usize {
        self.matrices.len() - 1
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.matrices[0].rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.matrices[0].cols()
    }

    pub fn matrices(&self) -> &[DenseMatrix] {
        &self.matrices
    }

    pub fn branch(&self, r: usize) -> &DenseMatrix {
        &self.matrices[r]
    }

    /// Bank with rows reordered so that new row `i` is old row `order[i]`.
    pub fn permute_rows(&self, order: &[usize]) -> FeatureBank {
        FeatureBank {
            matrices: self.matrices.iter().map(|m| m.select_rows(order)).collect(),
        }
    }

    /// Keeps only `B^(0..=r)`.
    pub fn truncated(&self, r: usize) -> FeatureBank {
        FeatureBank {
            matrices: self.matrices[..=r.min(self.max_power())].to_vec(),
        }
    }
}

/// Precomputes `B^(r) = Ā^r X` for `r = 0..=max_power` by repeated sparse products.
pub fn operator_bank(g: &Graph, kind: OperatorKind, max_power: usize) -> FeatureBank {
    let op = build_operator(g, kind);
    let mut matrices = Vec::with_capacity(max_power + 1);
    matrices.push(g.features().clone());
    for r in 1..=max_power {
        let next = op.spmm(&matrices[r - 1]);
        matrices.push(next);
    }
    FeatureBank { matrices }
}

/// One-hot degree encoding with `max_degree + 1` bins; larger degrees are clamped.
pub fn degree_feature(g: &Graph, max_degree: usize) -> DenseMatrix {
    assert!(max_degree >= 1, "max_degree must be at least 1");
    let deg = g.degrees();
    let mut out = DenseMatrix::zeros(g.node_count(), max_degree + 1);
    for (v, &d) in deg.iter().enumerate() {
        out.set(v, d.min(max_degree), 1.0);
    }
    out
}
