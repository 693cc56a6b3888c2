use rayon::prelude::*;

use super::TrainError;
use crate::model::{PrecomputedGraph, SpinConfig, SpinParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub auroc: Option<f64>,
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Area under the ROC curve via the Mann-Whitney rank statistic with tied
/// scores given their average rank. `None` when either class is absent.
pub fn auroc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), positive.len());
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their mean
        let mean_rank = (i + j + 2) as f64 / 2.0;
        rank_sum += mean_rank * order[i..=j].iter().filter(|&&k| positive[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

/// Accuracy of argmax predictions, plus AUROC of the class-1 logit margin when
/// requested. AUROC is refused for more than two classes.
pub fn evaluate(
    params: &SpinParams,
    cfg: &SpinConfig,
    set: &[PrecomputedGraph],
    with_auroc: bool,
) -> Result<Metrics, TrainError> {
    if with_auroc && cfg.num_classes != 2 {
        return Err(TrainError::AurocMulticlass(cfg.num_classes));
    }
    if set.is_empty() {
        return Err(TrainError::EmptySet);
    }
    let logits: Vec<Vec<f64>> = set.par_iter().map(|g| params.predict(cfg, &g.bank)).collect();
    let correct = logits.iter().zip(set).filter(|(l, g)| argmax(l) == g.label).count();
    let auroc = if with_auroc {
        let scores: Vec<f64> = logits.iter().map(|l| l[1] - l[0]).collect();
        let positive: Vec<bool> = set.iter().map(|g| g.label == 1).collect();
        auroc(&scores, &positive)
    } else {
        None
    };
    Ok(Metrics {
        accuracy: correct as f64 / set.len() as f64,
        auroc,
    })
}
