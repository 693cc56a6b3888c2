use std::fmt::Write as _;

use rayon::prelude::*;

use super::{evaluate, train_model, EpochRecord, Metrics, TrainConfig, TrainError};
use crate::data::FoldPlan;
use crate::model::{PrecomputedGraph, SpinConfig, SpinParams};
use crate::nn::{derive_seed, rng_from_seed};

/// One point of a model-selection grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub batch_size: usize,
    pub r: usize,
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Candidate {
    fn from_base(cfg: &SpinConfig, tc: &TrainConfig) -> Self {
        Self {
            batch_size: tc.batch_size,
            r: cfg.r,
            hidden_dim: cfg.hidden_dim,
            learning_rate: tc.learning_rate,
            l2: tc.l2,
        }
    }

    fn apply(&self, cfg: &SpinConfig, tc: &TrainConfig) -> (SpinConfig, TrainConfig) {
        let cfg = SpinConfig {
            r: self.r,
            hidden_dim: self.hidden_dim,
            ..cfg.clone()
        };
        let tc = TrainConfig {
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            l2: self.l2,
            ..tc.clone()
        };
        (cfg, tc)
    }
}

fn product(batch: &[usize], r: &[usize], hidden: &[usize], lr: f64, l2: f64) -> Vec<Candidate> {
    let mut out = Vec::new();
    for &batch_size in batch {
        for &r in r {
            for &hidden_dim in hidden {
                out.push(Candidate {
                    batch_size,
                    r,
                    hidden_dim,
                    learning_rate: lr,
                    l2,
                });
            }
        }
    }
    out
}

/// Published best-hyperparameter ranges per corpus (batch size, branches,
/// intermediate width, learning rate, L2). `None` for unknown corpora.
pub fn table_grid(dataset: &str) -> Option<Vec<Candidate>> {
    let grid = match dataset.to_ascii_uppercase().as_str() {
        "DD" | "D&D" => product(&[16, 32], &[2, 3, 4], &[16, 32, 64], 5e-3, 0.0),
        "NCI1" => product(&[64, 128], &[1, 2], &[16, 32], 1e-3, 0.0),
        "PROTEINS" => product(&[16, 32, 64], &[2, 3], &[8, 16], 1e-3, 0.0),
        "ENZYMES" => product(&[8, 16, 32], &[2, 3], &[8, 16], 1e-3, 1e-3),
        "OGBG-MOLHIV" => product(&[32, 64, 128], &[2, 3], &[16, 32, 64, 128], 1e-4, 0.0),
        "IMDB-BINARY" => product(&[16, 32], &[2, 3, 4], &[8, 16, 32], 5e-3, 0.0),
        "IMDB-MULTI" => product(&[16, 32, 64], &[2, 3, 4], &[8, 16, 32], 5e-3, 0.0),
        "REDDIT-BINARY" => product(&[32, 64, 128], &[3, 4], &[8, 16], 5e-3, 0.0),
        "REDDIT-MULTI-5K" | "REDDIT-MULTI" => product(&[64, 128], &[3, 4], &[8, 16], 5e-3, 0.0),
        "COLLAB" => product(&[32, 64, 128], &[2, 3, 4], &[8, 16, 32, 64], 5e-3, 5e-4),
        _ => return None,
    };
    Some(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingCurve {
    pub fold: usize,
    pub repeat: usize,
    pub records: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub fold: usize,
    pub selected: Candidate,
    /// Test metrics of each repeat.
    pub repeats: Vec<Metrics>,
    pub mean_accuracy: f64,
    pub mean_auroc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub folds: Vec<FoldOutcome>,
    /// Mean over folds of the repeat-averaged test accuracy.
    pub mean_accuracy: f64,
    /// Population standard deviation of the fold accuracies.
    pub std_accuracy: f64,
    pub mean_auroc: Option<f64>,
    pub std_auroc: Option<f64>,
    pub curves: Vec<TrainingCurve>,
    /// Number of `train_model` calls, selection runs included.
    pub trainings: usize,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl CvResult {
    /// `fold,repeat,accuracy[,auroc]`.
    pub fn to_csv(&self) -> String {
        let with_auroc = self.mean_auroc.is_some();
        let mut out = String::from(if with_auroc {
            "fold,repeat,accuracy,auroc\n"
        } else {
            "fold,repeat,accuracy\n"
        });
        for f in &self.folds {
            for (r, m) in f.repeats.iter().enumerate() {
                let _ = write!(out, "{},{},{}", f.fold, r, m.accuracy);
                if with_auroc {
                    let _ = write!(out, ",{}", m.auroc.map_or(String::from("nan"), |a| a.to_string()));
                }
                out.push('\n');
            }
        }
        out
    }

    /// `fold,repeat,epoch,train_loss,val_accuracy`.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("fold,repeat,epoch,train_loss,val_accuracy\n");
        for c in &self.curves {
            for e in &c.records {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    c.fold, c.repeat, e.epoch, e.train_loss, e.val_accuracy
                );
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        let repeats = self.folds.first().map_or(0, |f| f.repeats.len());
        let mut s = format!(
            "accuracy {:.2} ± {:.2} ({} folds x {} repeats)",
            100.0 * self.mean_accuracy,
            100.0 * self.std_accuracy,
            self.folds.len(),
            repeats
        );
        if let (Some(m), Some(sd)) = (self.mean_auroc, self.std_auroc) {
            let _ = write!(s, ", auroc {:.2} ± {:.2}", 100.0 * m, 100.0 * sd);
        }
        s
    }
}

fn pick(graphs: &[PrecomputedGraph], idx: &[usize]) -> Vec<PrecomputedGraph> {
    idx.iter().map(|&i| graphs[i].clone()).collect()
}

fn run_fold(
    fold: usize,
    graphs: &[PrecomputedGraph],
    plan: &FoldPlan,
    cfg: &SpinConfig,
    tc: &TrainConfig,
    grid: Option<&[Candidate]>,
    with_auroc: bool,
) -> Result<(FoldOutcome, Vec<TrainingCurve>), TrainError> {
    let f = &plan.folds[fold];
    let train = pick(graphs, &f.train);
    let val = pick(graphs, &f.validation);
    let test = pick(graphs, &f.test);

    let selected = match grid {
        None => Candidate::from_base(cfg, tc),
        Some(grid) => {
            let mut best: Option<(f64, Candidate)> = None;
            for (ci, cand) in grid.iter().enumerate() {
                let (c, mut t) = cand.apply(cfg, tc);
                t.seed = derive_seed(tc.seed, &[fold as u64, 1 << 20 | ci as u64]);
                let params = SpinParams::init(&c, &mut rng_from_seed(t.seed));
                let out = train_model(&c, params, &train, &val, &t)?;
                if best.is_none_or(|(score, _)| out.best_val_accuracy > score) {
                    best = Some((out.best_val_accuracy, *cand));
                }
            }
            best.expect("grid is non-empty").1
        }
    };

    let (c, base_tc) = selected.apply(cfg, tc);
    let mut repeats = Vec::with_capacity(tc.repeats_per_fold);
    let mut curves = Vec::with_capacity(tc.repeats_per_fold);
    for repeat in 0..tc.repeats_per_fold {
        let seed = derive_seed(tc.seed, &[fold as u64, repeat as u64]);
        let t = TrainConfig {
            seed,
            ..base_tc.clone()
        };
        let params = SpinParams::init(&c, &mut rng_from_seed(seed));
        let out = train_model(&c, params, &train, &val, &t)?;
        repeats.push(evaluate(&out.params, &c, &test, with_auroc)?);
        curves.push(TrainingCurve {
            fold,
            repeat,
            records: out.curve,
        });
    }
    let accs: Vec<f64> = repeats.iter().map(|m| m.accuracy).collect();
    let aurocs: Option<Vec<f64>> = repeats.iter().map(|m| m.auroc).collect();
    Ok((
        FoldOutcome {
            fold,
            selected,
            mean_accuracy: mean_std(&accs).0,
            mean_auroc: aurocs.map(|a| mean_std(&a).0),
            repeats,
        },
        curves,
    ))
}

/// Runs the fold plan: optional grid selection on each fold's validation set,
/// then `repeats_per_fold` seeded retrainings of the selected configuration,
/// each scored on the fold's test set. Folds run in parallel.
pub fn cross_validate(
    graphs: &[PrecomputedGraph],
    plan: &FoldPlan,
    cfg: &SpinConfig,
    tc: &TrainConfig,
    grid: Option<&[Candidate]>,
    with_auroc: bool,
) -> Result<CvResult, TrainError> {
    tc.validate()?;
    if matches!(grid, Some(g) if g.is_empty()) {
        return Err(TrainError::InvalidConfig("empty selection grid".into()));
    }
    let results: Vec<(FoldOutcome, Vec<TrainingCurve>)> = (0..plan.folds.len())
        .into_par_iter()
        .map(|fold| run_fold(fold, graphs, plan, cfg, tc, grid, with_auroc))
        .collect::<Result<_, _>>()?;
    let (folds, curves): (Vec<FoldOutcome>, Vec<Vec<TrainingCurve>>) = results.into_iter().unzip();
    let accs: Vec<f64> = folds.iter().map(|f| f.mean_accuracy).collect();
    let (mean_accuracy, std_accuracy) = mean_std(&accs);
    let aurocs: Option<Vec<f64>> = folds.iter().map(|f| f.mean_auroc).collect();
    let (mean_auroc, std_auroc) = match aurocs {
        Some(a) if !a.is_empty() => {
            let (m, s) = mean_std(&a);
            (Some(m), Some(s))
        }
        _ => (None, None),
    };
    let per_fold = tc.repeats_per_fold + grid.map_or(0, <[Candidate]>::len);
    Ok(CvResult {
        trainings: folds.len() * per_fold,
        folds,
        mean_accuracy,
        std_accuracy,
        mean_auroc,
        std_auroc,
        curves: curves.into_iter().flatten().collect(),
    })
}
