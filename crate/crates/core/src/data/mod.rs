//! Dataset ingestion (TU text format), input feature schemes, stratified
//! folds and the binary cache of precomputed operator banks.

mod cache;
mod features;
mod folds;
mod tu;

pub use cache::{precompute_dataset, read_bank_cache, write_bank_cache, BANK_CACHE_VERSION};
pub use features::{build_features, default_scheme, FeatureScheme, MAX_DEGREE_WIDTH};
pub use folds::{stratified_kfold, Fold, FoldPlan};
pub use tu::{load_tu_dataset, write_tu_dataset};

use std::path::PathBuf;

use thiserror::Error;

use crate::graph::Graph;
use crate::nn::DenseMatrix;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing dataset file {0}")]
    MissingFile(PathBuf),
    #[error("{file}:{line}: {reason}")]
    MalformedLine { file: String, line: usize, reason: String },
    #[error("edge ({u}, {v}) on line {line} crosses graphs or names an unknown node")]
    DanglingEdge { line: usize, u: usize, v: usize },
    #[error("inconsistent dataset: {0}")]
    Inconsistent(String),
    #[error("feature scheme {scheme:?} needs {missing}")]
    SchemeUnavailable {
        scheme: FeatureScheme,
        missing: &'static str,
    },
    #[error("class {class} has {count} samples, fewer than the {k} folds")]
    TooFewSamples { class: usize, count: usize, k: usize },
    #[error("features must be built before precomputation")]
    FeaturesMissing,
    #[error("cache is not a bank file")]
    BadMagic,
    #[error("cache version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt cache: {0}")]
    CorruptCache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A labeled graph collection. Graph labels are contiguous class indices;
/// `class_values[c]` is the original label of class `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub graphs: Vec<Graph>,
    pub num_classes: usize,
    pub class_values: Vec<i64>,
    /// Raw integer node labels per graph, when the corpus provides them.
    pub node_labels: Option<Vec<Vec<i64>>>,
    /// Raw continuous node attributes per graph, when the corpus provides them.
    pub node_attributes: Option<Vec<DenseMatrix>>,
    /// Scheme the current graph features were built with; `None` before [`build_features`].
    pub feature_scheme: Option<FeatureScheme>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Class index of every graph.
    pub fn labels(&self) -> Vec<usize> {
        self.graphs
            .iter()
            .map(|g| g.label.expect("dataset graphs are labeled"))
            .collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for c in self.labels() {
            counts[c] += 1;
        }
        counts
    }

    pub fn feature_dim(&self) -> usize {
        self.graphs.first().map_or(0, Graph::feature_dim)
    }
}
