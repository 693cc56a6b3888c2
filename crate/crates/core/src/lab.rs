//! Executable checks of the model's discriminative power: counterexamples for
//! single-layer transforms and for mean/max readouts, an injectivity probe for
//! the attention weights, and a statistical comparison against 1-WL.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::generators::{self, RegularGraphError};
use crate::graph::{operator_bank, Graph, OperatorKind};
use crate::model::{attention_weights, Readout, SpinConfig, SpinParams};
use crate::nn::{derive_seed, rng_from_seed, Activation, DenseMatrix};
use crate::wl::wl_distinguish;

/// Collision threshold for the counterexample demos.
pub const COLLISION_TOLERANCE: f64 = 1e-12;
/// Entrywise tolerance of the attention injectivity probe.
pub const PROBE_TOLERANCE: f64 = 1e-9;
/// Default separation threshold `τ` of the WL comparison.
pub const DEFAULT_TAU: f64 = 1e-6;

const COLLISION_X1: [f64; 3] = [2.0, 1.0, 4.0];
const COLLISION_ALPHA: [f64; 3] = [1.0, -1.0, 0.25];
const COLLISION_X2: [f64; 2] = [6.0, 4.0];
const COLLISION_BETA: [f64; 2] = [1.0, -1.0];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LabError {
    #[error(transparent)]
    Regular(#[from] RegularGraphError),
    #[error("graphs of a pair must have the same feature width")]
    FeatureWidth,
    #[error("max_nodes must lie in 2..=8, got {0}")]
    MaxNodes(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lemma {
    SingleLayerCollision,
    AttentionInjectivity,
    RegularReadoutCollision,
}

impl Lemma {
    pub fn name(self) -> &'static str {
        match self {
            Lemma::SingleLayerCollision => "single-layer-collision",
            Lemma::AttentionInjectivity => "attention-injectivity",
            Lemma::RegularReadoutCollision => "regular-readout-collision",
        }
    }
}

/// One evaluated instance: the two outputs being compared and `delta = ‖left − right‖∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub case: String,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub delta: f64,
}

/// Outcome of a demo or probe; `violations == 0` is the pass condition.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub lemma: Lemma,
    pub instances: usize,
    pub violations: usize,
    pub witnesses: Vec<Witness>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn max_delta(&self) -> f64 {
        self.witnesses.iter().map(|w| w.delta).fold(0.0, f64::max)
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {} instances, {} violations, max delta {:.3e}",
            self.lemma.name(),
            self.instances,
            self.violations,
            self.max_delta()
        )
    }

    /// `lemma,case,delta,left,right` with vectors joined by `;`.
    pub fn to_csv(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(";");
        let mut out = String::from("lemma,case,delta,left,right\n");
        for w in &self.witnesses {
            let _ = writeln!(
                out,
                "{},{},{:e},{},{}",
                self.lemma.name(),
                w.case,
                w.delta,
                join(&w.left),
                join(&w.right)
            );
        }
        out
    }
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn weighted_activation_sum(w: &[f64], xs: &[f64], weights: &[f64], act: Activation) -> Vec<f64> {
    let mut out = vec![0.0; w.len()];
    for (&x, &a) in xs.iter().zip(weights) {
        for (o, &wi) in out.iter_mut().zip(w) {
            *o += a * act.apply(wi * x);
        }
    }
    out
}

/// Evaluates `Σ α_i σ(W x_i)` on `{2, 1, 4}` with `α = {1, −1, 0.25}` and
/// `Σ β_i σ(W x_i)` on `{6, 4}` with `β = {1, −1}` for every column `W` in
/// `ws`. A violation is an instance where the two sums differ.
pub fn single_layer_collision_demo(ws: &[Vec<f64>], act: Activation) -> LemmaReport {
    let witnesses: Vec<Witness> = ws
        .iter()
        .map(|w| {
            let left = weighted_activation_sum(w, &COLLISION_X1, &COLLISION_ALPHA, act);
            let right = weighted_activation_sum(w, &COLLISION_X2, &COLLISION_BETA, act);
            let delta = linf(&left, &right);
            Witness {
                case: format!("W={w:?} {act:?}").replace(',', " "),
                left,
                right,
                delta,
            }
        })
        .collect();
    let violations = witnesses.iter().filter(|w| w.delta >= COLLISION_TOLERANCE).count();
    LemmaReport {
        lemma: Lemma::SingleLayerCollision,
        instances: witnesses.len(),
        violations,
        witnesses,
    }
}

/// `(α_1 z_1, α_2 z_2)` for a two-node graph with rows `z_1, z_2` sharing one softmax.
pub fn attended_pair(w: &[f64], z1: &[f64], z2: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let z = DenseMatrix::from_rows(&[z1, z2]);
    let alpha = attention_weights(w, &z);
    (
        z1.iter().map(|x| alpha[0] * x).collect(),
        z2.iter().map(|x| alpha[1] * x).collect(),
    )
}

/// Samples `trials` attention vectors and row pairs: generic pairs, positive
/// and negative multiples, and identical rows. A violation is either distinct
/// rows whose attended outputs coincide, or identical rows whose outputs differ.
pub fn attention_injectivity_probe(trials: usize, dim: usize, seed: u64) -> LemmaReport {
    assert!(trials >= 1 && dim >= 1);
    let witnesses: Vec<Witness> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, &[t as u64]));
            let draw =
                |rng: &mut crate::nn::SpinRng| -> Vec<f64> { (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect() };
            let w = draw(&mut rng);
            let z1 = draw(&mut rng);
            let (case, z2) = match t % 4 {
                0 => ("independent", draw(&mut rng)),
                1 => {
                    let mut p: f64 = rng.gen_range(0.1..10.0);
                    while (p - 1.0).abs() < 1e-3 {
                        p = rng.gen_range(0.1..10.0);
                    }
                    ("positive-multiple", z1.iter().map(|x| p * x).collect())
                }
                2 => {
                    let p: f64 = rng.gen_range(-10.0..-0.1);
                    ("negative-multiple", z1.iter().map(|x| p * x).collect())
                }
                _ => ("identical", z1.clone()),
            };
            let (left, right) = attended_pair(&w, &z1, &z2);
            Witness {
                case: format!("{case}#{t}"),
                delta: linf(&left, &right),
                left,
                right,
            }
        })
        .collect();
    let violations = witnesses
        .iter()
        .filter(|w| {
            let identical = w.case.starts_with("identical");
            if identical {
                w.delta != 0.0
            } else {
                w.delta < PROBE_TOLERANCE
            }
        })
        .count();
    LemmaReport {
        lemma: Lemma::AttentionInjectivity,
        instances: trials,
        violations,
        witnesses,
    }
}

/// Model used by the readout demos: untrained, normalized adjacency, no attention.
pub fn readout_demo_config(input_dim: usize, readout: Readout) -> SpinConfig {
    SpinConfig {
        r: 2,
        operator: OperatorKind::NormalizedAdjacency,
        input_dim,
        hidden_dim: 8,
        attention: false,
        readout,
        ..SpinConfig::default()
    }
}

/// Embeds both graphs with one random untrained model. For mean and max a
/// violation means the embeddings differ; for sum it means they coincide.
pub fn readout_collision_pair(g1: &Graph, g2: &Graph, readout: Readout, seed: u64) -> Result<LemmaReport, LabError> {
    if g1.feature_dim() != g2.feature_dim() {
        return Err(LabError::FeatureWidth);
    }
    let cfg = readout_demo_config(g1.feature_dim(), readout);
    let params = SpinParams::init(&cfg, &mut rng_from_seed(seed));
    let e1 = params.embed(&cfg, &operator_bank(g1, cfg.operator, cfg.r)).global;
    let e2 = params.embed(&cfg, &operator_bank(g2, cfg.operator, cfg.r)).global;
    let delta = linf(&e1, &e2);
    let collided = delta < COLLISION_TOLERANCE;
    let violation = match readout {
        Readout::Mean | Readout::Max => !collided,
        Readout::Sum => collided,
    };
    Ok(LemmaReport {
        lemma: Lemma::RegularReadoutCollision,
        instances: 1,
        violations: usize::from(violation),
        witnesses: vec![Witness {
            case: format!("n={}vs{} {readout}", g1.node_count(), g2.node_count()),
            left: e1,
            right: e2,
            delta,
        }],
    })
}

/// [`readout_collision_pair`] on the `k`-regular circulant graphs with `n1` and `n2` nodes.
pub fn regular_readout_demo(
    n1: usize,
    n2: usize,
    k: usize,
    readout: Readout,
    seed: u64,
) -> Result<LemmaReport, LabError> {
    let g1 = generators::circulant(n1, k)?;
    let g2 = generators::circulant(n2, k)?;
    readout_collision_pair(&g1, &g2, readout, seed)
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Outcome of the 1-WL comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerReport {
    pub pairs_sampled: usize,
    pub wl_distinguished: usize,
    /// WL-distinguished pairs whose embeddings differ by more than `τ`.
    pub model_distinguished: usize,
    pub wl_blind: usize,
    /// WL-blind pairs the model nevertheless separates; nonzero would contradict the upper bound.
    pub model_only: usize,
    pub tau: f64,
}

impl PowerReport {
    pub fn agreement_rate(&self) -> f64 {
        if self.wl_distinguished == 0 {
            return 1.0;
        }
        self.model_distinguished as f64 / self.wl_distinguished as f64
    }

    pub fn to_csv(&self) -> String {
        format!(
            "pairs_sampled,wl_distinguished,model_distinguished,agreement_rate,wl_blind,model_only,tau\n{},{},{},{},{},{},{:e}\n",
            self.pairs_sampled,
            self.wl_distinguished,
            self.model_distinguished,
            self.agreement_rate(),
            self.wl_blind,
            self.model_only,
            self.tau
        )
    }

    pub fn summary(&self) -> String {
        format!(
            "{} of {} WL-distinguished pairs separated (rate {:.4}, tau {:e}); {} WL-blind pairs, {} separated by the model",
            self.model_distinguished,
            self.wl_distinguished,
            self.agreement_rate(),
            self.tau,
            self.wl_blind,
            self.model_only
        )
    }
}

/// Model used for the WL comparison on graphs of at most `max_nodes` nodes.
pub fn power_config(max_nodes: usize) -> SpinConfig {
    SpinConfig {
        r: max_nodes.saturating_sub(1),
        operator: OperatorKind::Adjacency,
        input_dim: 1,
        hidden_dim: 32,
        g_layers: 2,
        attention: false,
        readout: Readout::Sum,
        ..SpinConfig::default()
    }
}

/// Random parameters for [`power_config`]. First-layer biases of branch `r`
/// place each hidden unit's breakpoint uniformly inside `[0, (max_nodes-1)^r]`,
/// the range of walk counts that branch can see.
pub fn power_params<R: Rng + ?Sized>(cfg: &SpinConfig, max_nodes: usize, rng: &mut R) -> SpinParams {
    let mut params = SpinParams::init(cfg, rng);
    let span_base = max_nodes.saturating_sub(1).max(1) as f64;
    for (r, mlp) in params.branch_mlps.iter_mut().enumerate() {
        let span = span_base.powi(r as i32);
        let layers = mlp.layers_mut();
        let first = &mut layers[0];
        for j in 0..first.d_out() {
            let w = first.weight.get(0, j);
            first.bias[j] = -w * rng.gen_range(0.0..=span);
        }
        for layer in layers.iter_mut().skip(1) {
            layer.bias.iter_mut().for_each(|b| *b = rng.gen_range(-1.0..1.0));
        }
    }
    params
}

/// `‖e_G1 − e_G2‖∞` under one parameter draw.
pub fn embedding_gap(g1: &Graph, g2: &Graph, cfg: &SpinConfig, params: &SpinParams) -> f64 {
    let e1 = params.embed(cfg, &operator_bank(g1, cfg.operator, cfg.r)).global;
    let e2 = params.embed(cfg, &operator_bank(g2, cfg.operator, cfg.r)).global;
    linf(&e1, &e2)
}

fn sample_pair(max_nodes: usize, rng: &mut crate::nn::SpinRng) -> (Graph, Graph) {
    let n = rng.gen_range(2..=max_nodes);
    let er = |rng: &mut crate::nn::SpinRng| {
        let p = *[0.3, 0.5, 0.7].choose(rng).unwrap();
        generators::erdos_renyi(n, p, rng)
    };
    let g1 = er(rng);
    let g2 = er(rng);
    (g1, g2)
}

struct PairOutcome {
    wl: bool,
    model: bool,
}

fn pair_outcome(max_nodes: usize, tau: f64, seed: u64, index: u64) -> PairOutcome {
    let mut rng = rng_from_seed(derive_seed(seed, &[index]));
    let (g1, g2) = sample_pair(max_nodes, &mut rng);
    let cfg = power_config(max_nodes);
    let params = power_params(&cfg, max_nodes, &mut rng);
    PairOutcome {
        wl: wl_distinguish(&g1, &g2, None, true).is_distinguished(),
        model: embedding_gap(&g1, &g2, &cfg, &params) > tau,
    }
}

/// Samples same-size Erdős–Rényi pairs with fresh model parameters per pair
/// until `num_pairs` WL-distinguished pairs have been tested. Every sampled
/// pair also feeds the converse count.
pub fn wl_power_experiment(num_pairs: usize, max_nodes: usize, tau: f64, seed: u64) -> Result<PowerReport, LabError> {
    if !(2..=8).contains(&max_nodes) {
        return Err(LabError::MaxNodes(max_nodes));
    }
    let mut report = PowerReport {
        pairs_sampled: 0,
        wl_distinguished: 0,
        model_distinguished: 0,
        wl_blind: 0,
        model_only: 0,
        tau,
    };
    const CHUNK: u64 = 256;
    let mut start = 0u64;
    while report.wl_distinguished < num_pairs {
        let outcomes: Vec<PairOutcome> = (start..start + CHUNK)
            .into_par_iter()
            .map(|i| pair_outcome(max_nodes, tau, seed, i))
            .collect();
        for o in outcomes {
            if report.wl_distinguished == num_pairs {
                break;
            }
            report.pairs_sampled += 1;
            if o.wl {
                report.wl_distinguished += 1;
                report.model_distinguished += usize::from(o.model);
            } else {
                report.wl_blind += 1;
                report.model_only += usize::from(o.model);
            }
        }
        start += CHUNK;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_layer_unit_weights_collide_at_two() {
        let r = single_layer_collision_demo(&[vec![1.0]], Activation::Relu);
        assert_eq!(r.witnesses[0].left, vec![2.0]);
        assert_eq!(r.witnesses[0].right, vec![2.0]);
        assert!(r.passed());
        let r = single_layer_collision_demo(&[vec![-1.0]], Activation::Relu);
        assert_eq!(r.witnesses[0].left, vec![0.0]);
        assert_eq!(r.witnesses[0].right, vec![0.0]);
    }

    #[test]
    fn single_layer_collision_holds_for_random_scalars_and_leaky() {
        let mut rng = rng_from_seed(9);
        let ws: Vec<Vec<f64>> = (0..10).map(|_| vec![rng.gen_range(-5.0..5.0)]).collect();
        for act in [Activation::Relu, Activation::LeakyRelu(0.1)] {
            let r = single_layer_collision_demo(&ws, act);
            assert!(r.passed(), "{}", r.summary());
        }
        let wide = vec![vec![0.3, -2.0, 1.5]];
        assert!(single_layer_collision_demo(&wide, Activation::LeakyRelu(0.2)).passed());
    }

    #[test]
    fn attention_on_identical_rows_is_exact() {
        let z = [0.5, -1.0, 2.0];
        let (a, b) = attended_pair(&[1.0, 1.0, 1.0], &z, &z);
        assert_eq!(a, b);
    }

    #[test]
    fn attention_separates_a_doubled_row() {
        let z1 = [1.0, 0.5];
        let z2 = [2.0, 1.0];
        let w = [0.7, 0.2];
        assert!(crate::nn::dot(&w, &z1) > 0.0);
        let (a, b) = attended_pair(&w, &z1, &z2);
        assert!(linf(&a, &b) > 1e-3);
    }

    #[test]
    fn attention_injectivity_probe_small_run() {
        let r = attention_injectivity_probe(400, 8, 1);
        assert_eq!(r.instances, 400);
        assert!(r.passed(), "{}", r.summary());
    }

    #[test]
    fn regular_readout_mean_and_max_collide_sum_scales() {
        for readout in [Readout::Mean, Readout::Max] {
            let r = regular_readout_demo(6, 3, 2, readout, 4).unwrap();
            assert!(r.passed(), "{}", r.summary());
        }
        let r = regular_readout_demo(6, 3, 2, Readout::Sum, 4).unwrap();
        assert!(r.passed());
        let w = &r.witnesses[0];
        assert!((l2_norm(&w.left) / l2_norm(&w.right) - 2.0).abs() < 1e-9);
        assert!(matches!(
            regular_readout_demo(5, 3, 3, Readout::Mean, 0),
            Err(LabError::Regular(RegularGraphError::OddDegreeSum { .. }))
        ));
    }

    #[test]
    fn identical_and_wl_blind_pairs_are_not_separated() {
        let cfg = power_config(6);
        let params = power_params(&cfg, 6, &mut rng_from_seed(2));
        let g = generators::path(5);
        assert_eq!(embedding_gap(&g, &g, &cfg, &params), 0.0);
        let c6 = generators::cycle(6);
        let two = generators::cycle(3).disjoint_union(&generators::cycle(3)).unwrap();
        assert!(!wl_distinguish(&c6, &two, None, true).is_distinguished());
        assert!(embedding_gap(&c6, &two, &cfg, &params) <= DEFAULT_TAU);
    }

    #[test]
    fn power_small_run_is_reproducible() {
        let a = wl_power_experiment(40, 6, DEFAULT_TAU, 3).unwrap();
        let b = wl_power_experiment(40, 6, DEFAULT_TAU, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.wl_distinguished, 40);
        assert!(a.model_distinguished <= a.wl_distinguished);
        assert_eq!(a.pairs_sampled, a.wl_distinguished + a.wl_blind);
        assert!(wl_power_experiment(1, 9, DEFAULT_TAU, 0).is_err());
    }
}
