//! Epoch-time benchmark on synthetic graphs of fixed size and varying density.
//!
//! Banks are precomputed first and timed on their own; training epochs then
//! touch only dense `N x d` blocks, so their cost should not follow the edge count.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::graph::{generators, operator_bank, Graph, OperatorKind};
use crate::model::{PrecomputedGraph, SpinConfig, SpinParams};
use crate::nn::{adam_step, derive_seed, rng_from_seed, AdamState, DenseMatrix};
use crate::train::batch_gradient;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub nodes: usize,
    pub feature_dim: usize,
    pub r: usize,
    pub densities: Vec<f64>,
    /// Timed epochs per density, after one warm-up epoch.
    pub epochs: usize,
    pub graphs_per_set: usize,
    pub hidden_dim: usize,
    pub batch_size: usize,
    pub attention: bool,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            nodes: 200,
            feature_dim: 16,
            r: 3,
            densities: vec![0.05, 0.5],
            epochs: 5,
            graphs_per_set: 32,
            hidden_dim: 16,
            batch_size: 32,
            attention: true,
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn model_config(&self) -> SpinConfig {
        SpinConfig {
            r: self.r,
            operator: OperatorKind::NormalizedAdjacency,
            input_dim: self.feature_dim,
            hidden_dim: self.hidden_dim,
            attention: self.attention,
            num_classes: 2,
            ..SpinConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityTiming {
    pub density: f64,
    pub mean_edges: f64,
    pub precompute: Duration,
    pub warmup: Duration,
    pub epochs: Vec<Duration>,
}

impl DensityTiming {
    pub fn median_epoch(&self) -> Duration {
        median(&self.epochs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub timings: Vec<DensityTiming>,
}

impl BenchReport {
    /// Median epoch time of the densest set over that of the sparsest.
    pub fn ratio(&self) -> f64 {
        let by = |pick: fn(f64, f64) -> bool| {
            self.timings
                .iter()
                .reduce(|a, b| if pick(b.density, a.density) { b } else { a })
                .expect("at least one density")
        };
        let dense = by(|x, y| x > y);
        let sparse = by(|x, y| x < y);
        dense.median_epoch().as_secs_f64() / sparse.median_epoch().as_secs_f64()
    }

    /// `density,mean_edges,phase,index,seconds` with phases `precompute`,
    /// `warmup` and `epoch`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("density,mean_edges,phase,index,seconds\n");
        for t in &self.timings {
            let mut row = |phase: &str, i: usize, d: Duration| {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{:.9}",
                    t.density,
                    t.mean_edges,
                    phase,
                    i,
                    d.as_secs_f64()
                );
            };
            row("precompute", 0, t.precompute);
            row("warmup", 0, t.warmup);
            for (i, &d) in t.epochs.iter().enumerate() {
                row("epoch", i, d);
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for t in &self.timings {
            let _ = writeln!(
                s,
                "density {}: {:.0} edges, precompute {:.4}s, median epoch {:.4}s",
                t.density,
                t.mean_edges,
                t.precompute.as_secs_f64(),
                t.median_epoch().as_secs_f64()
            );
        }
        let _ = write!(s, "epoch-time ratio densest/sparsest {:.3}", self.ratio());
        s
    }
}

fn median(xs: &[Duration]) -> Duration {
    let mut v = xs.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n == 0 {
        Duration::ZERO
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2
    }
}

/// Erdős–Rényi graphs with uniform `[-1, 1)` node features and random binary labels.
pub fn synthetic_set(nodes: usize, feature_dim: usize, density: f64, count: usize, seed: u64) -> Vec<Graph> {
    (0..count)
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, &[i as u64]));
            let skeleton = generators::erdos_renyi(nodes, density, &mut rng);
            let x: Vec<f64> = (0..nodes * feature_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            Graph::new(
                nodes,
                skeleton.edges().iter().copied(),
                DenseMatrix::from_vec(nodes, feature_dim, x),
            )
            .expect("generated edges fit")
            .with_label(rng.gen_range(0..2))
        })
        .collect()
}

struct Run {
    graphs: Vec<PrecomputedGraph>,
    params: SpinParams,
    adam: AdamState,
}

impl Run {
    fn epoch(&mut self, cfg: &SpinConfig, batch_size: usize) -> Duration {
        let start = Instant::now();
        for chunk in self.graphs.chunks(batch_size) {
            let batch: Vec<&PrecomputedGraph> = chunk.iter().collect();
            let (_, grads) = batch_gradient(&self.params, cfg, &batch, None);
            adam_step(&mut self.params, &grads, &mut self.adam, 1e-3, 0.0);
        }
        start.elapsed()
    }
}

/// Precomputes every density's banks, then times training epochs with the
/// densities interleaved so that drift in machine load hits them alike.
pub fn bench_edge_independence(bc: &BenchConfig) -> BenchReport {
    assert!(
        !bc.densities.is_empty() && bc.batch_size > 0,
        "bench needs densities and a batch size"
    );
    let cfg = bc.model_config();
    let mut timings = Vec::with_capacity(bc.densities.len());
    let mut runs = Vec::with_capacity(bc.densities.len());
    for (di, &density) in bc.densities.iter().enumerate() {
        let raw = synthetic_set(
            bc.nodes,
            bc.feature_dim,
            density,
            bc.graphs_per_set,
            derive_seed(bc.seed, &[di as u64]),
        );
        let mean_edges = raw.iter().map(|g| g.edge_count() as f64).sum::<f64>() / raw.len().max(1) as f64;
        let start = Instant::now();
        let graphs: Vec<PrecomputedGraph> = raw
            .iter()
            .map(|g| PrecomputedGraph {
                bank: operator_bank(g, cfg.operator, cfg.r),
                label: g.label.expect("synthetic graphs are labeled"),
            })
            .collect();
        let precompute = start.elapsed();
        let params = SpinParams::init(&cfg, &mut rng_from_seed(bc.seed));
        let adam = AdamState::new(&params);
        runs.push(Run { graphs, params, adam });
        timings.push(DensityTiming {
            density,
            mean_edges,
            precompute,
            warmup: Duration::ZERO,
            epochs: Vec::with_capacity(bc.epochs),
        });
    }
    for round in 0..=bc.epochs {
        for (run, t) in runs.iter_mut().zip(&mut timings) {
            let d = run.epoch(&cfg, bc.batch_size);
            if round == 0 {
                t.warmup = d;
            } else {
                t.epochs.push(d);
            }
        }
    }
    BenchReport { timings }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd_counts() {
        let ms = Duration::from_millis;
        assert_eq!(median(&[ms(3), ms(1), ms(2)]), ms(2));
        assert_eq!(median(&[ms(4), ms(1), ms(2), ms(3)]), Duration::from_micros(2500));
    }

    #[test]
    fn synthetic_sets_follow_density() {
        let sparse = synthetic_set(60, 4, 0.05, 4, 1);
        let dense = synthetic_set(60, 4, 0.5, 4, 1);
        let edges = |s: &[Graph]| s.iter().map(Graph::edge_count).sum::<usize>();
        assert!(edges(&dense) > 5 * edges(&sparse));
        assert!(dense.iter().all(|g| g.feature_dim() == 4 && g.node_count() == 60));
        assert_eq!(synthetic_set(60, 4, 0.5, 4, 1), dense);
    }

    #[test]
    fn report_has_one_row_per_measurement() {
        let bc = BenchConfig {
            nodes: 20,
            feature_dim: 3,
            r: 1,
            epochs: 3,
            graphs_per_set: 4,
            hidden_dim: 4,
            batch_size: 2,
            ..BenchConfig::default()
        };
        let rep = bench_edge_independence(&bc);
        assert_eq!(rep.timings.len(), 2);
        assert_eq!(rep.to_csv().lines().count(), 1 + 2 * (2 + 3));
        assert!(rep.ratio().is_finite() && rep.ratio() > 0.0);
        assert!(rep.summary().ends_with(&format!("{:.3}", rep.ratio())));
    }
}
