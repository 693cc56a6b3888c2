//! Parallel neighborhood-aggregation graph classification.
//!
//! Node features are aggregated ahead of training with powers of a graph
//! operator (`B^(r) = Ā^r X`); each branch is transformed by its own MLP,
//! pooled with an optional attention-weighted sum, and the branch embeddings
//! are concatenated into the graph embedding fed to a classifier.
//!
//! The crate also ships a 1-WL color refinement engine and a set of
//! experiments that probe the discriminative power of the model against it.

pub mod bench;
pub mod data;
pub mod graph;
pub mod kv;
pub mod lab;
pub mod model;
pub mod nn;
pub mod train;
pub mod wl;
