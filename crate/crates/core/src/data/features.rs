use super::{DataError, Dataset};
use crate::graph::degree_feature;
use crate::nn::DenseMatrix;

/// Upper bound on the width of the degree one-hot encoding (bins `0..=500`).
pub const MAX_DEGREE_WIDTH: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureScheme {
    /// One-hot over the dataset-wide node-label vocabulary.
    OneHotNodeLabel,
    /// One-hot node degree, width set by the dataset's maximum degree.
    DegreeOneHot,
    /// Continuous node attributes followed by the node-label one-hot.
    AttributesPlusOneHot,
}

impl std::str::FromStr for FeatureScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "node-label" => Ok(FeatureScheme::OneHotNodeLabel),
            "degree" => Ok(FeatureScheme::DegreeOneHot),
            "attributes" => Ok(FeatureScheme::AttributesPlusOneHot),
            other => Err(format!("unknown feature scheme `{other}`")),
        }
    }
}

/// Social corpora get degrees, ENZYMES gets attributes plus labels, and any
/// other corpus with node labels gets the label one-hot.
pub fn default_scheme(ds: &Dataset) -> FeatureScheme {
    let upper = ds.name.to_ascii_uppercase();
    let social = ["IMDB", "REDDIT", "COLLAB"].iter().any(|p| upper.starts_with(p));
    if social {
        FeatureScheme::DegreeOneHot
    } else if upper == "ENZYMES" && ds.node_attributes.is_some() && ds.node_labels.is_some() {
        FeatureScheme::AttributesPlusOneHot
    } else if ds.node_labels.is_some() {
        FeatureScheme::OneHotNodeLabel
    } else {
        FeatureScheme::DegreeOneHot
    }
}

fn label_one_hot(labels: &[i64], vocab: &[i64]) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(labels.len(), vocab.len());
    for (v, l) in labels.iter().enumerate() {
        let c = vocab.binary_search(l).expect("label is in the vocabulary");
        out.set(v, c, 1.0);
    }
    out
}

/// Replaces every graph's features according to `scheme`.
pub fn build_features(mut ds: Dataset, scheme: FeatureScheme) -> Result<Dataset, DataError> {
    let vocab = || -> Result<Vec<i64>, DataError> {
        let labels = ds.node_labels.as_ref().ok_or(DataError::SchemeUnavailable {
            scheme,
            missing: "node labels",
        })?;
        let mut v: Vec<i64> = labels.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        Ok(v)
    };
    let features: Vec<DenseMatrix> = match scheme {
        FeatureScheme::OneHotNodeLabel => {
            let vocab = vocab()?;
            let labels = ds.node_labels.as_ref().expect("checked above");
            labels.iter().map(|l| label_one_hot(l, &vocab)).collect()
        }
        FeatureScheme::AttributesPlusOneHot => {
            let vocab = vocab()?;
            let attrs = ds.node_attributes.as_ref().ok_or(DataError::SchemeUnavailable {
                scheme,
                missing: "node attributes",
            })?;
            let labels = ds.node_labels.as_ref().expect("checked above");
            attrs
                .iter()
                .zip(labels)
                .map(|(a, l)| a.hconcat(&label_one_hot(l, &vocab)))
                .collect()
        }
        FeatureScheme::DegreeOneHot => {
            let width = ds
                .graphs
                .iter()
                .map(|g| g.max_degree())
                .max()
                .unwrap_or(0)
                .clamp(1, MAX_DEGREE_WIDTH);
            ds.graphs.iter().map(|g| degree_feature(g, width)).collect()
        }
    };
    for (g, f) in ds.graphs.iter_mut().zip(features) {
        g.set_features(f).map_err(|e| DataError::Inconsistent(e.to_string()))?;
    }
    ds.feature_scheme = Some(scheme);
    Ok(ds)
}
