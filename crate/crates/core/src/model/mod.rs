//! The branch-parallel graph classifier.
//!
//! For a graph with precomputed bank `B^(0..=R)`:
//!
//! ```text
//! Z_r = g_r(B_r)                      row-wise MLP, N x d'
//! α_r = softmax_v(ReLU(<w_r, z_v>))   only with attention, else α_v = 1
//! s_r = Σ_v α_v z_v                   branch readout
//! e_G = [s_0; s_1; ...; s_R]          global readout
//! logits = classifier(e_G)
//! ```

mod config;

pub use config::{ModelError, Readout, SpinConfig};

use rand::Rng;

use crate::graph::FeatureBank;
use crate::nn::{
    checkpoint, dot, dropout, layer_tensors, layer_tensors_mut, Activation, DenseMatrix, Dropout, Layer, Mlp, MlpCache,
    Parameters,
};

/// A graph after precomputation: its operator bank and class label.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecomputedGraph {
    pub bank: FeatureBank,
    pub label: usize,
}

/// Learnable parameters: one MLP per branch, optional attention vectors and the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinParams {
    pub branch_mlps: Vec<Mlp>,
    /// One vector of length `hidden_dim` per branch; empty when attention is off.
    pub attention: Vec<Vec<f64>>,
    pub classifier: Mlp,
}

/// Gradients with the same layout as [`SpinParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpinGradients {
    pub branches: Vec<Vec<Layer>>,
    pub attention: Vec<Vec<f64>>,
    pub classifier: Vec<Layer>,
}

/// Branch embeddings `s_r` and their concatenation `e_G`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphEmbedding {
    pub branches: Vec<Vec<f64>>,
    pub global: Vec<f64>,
}

#[derive(Debug, Clone)]
struct BranchCache {
    mlp: MlpCache,
    dropout: Dropout,
    /// Rows after dropout; what the readout actually saw.
    z: DenseMatrix,
    scores: Vec<f64>,
    alpha: Vec<f64>,
    /// Row that won each column under the max readout.
    argmax: Vec<usize>,
}

/// Intermediates retained by [`SpinParams::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    branches: Vec<BranchCache>,
    embedding: GraphEmbedding,
    embedding_dropout: Dropout,
    classifier: MlpCache,
}

impl ForwardCache {
    pub fn embedding(&self) -> &GraphEmbedding {
        &self.embedding
    }

    /// Distance of the cached point from the nearest ReLU kink or max-readout
    /// tie, measured on the pre-activations, attention scores and readout gaps.
    pub fn kink_distance(&self, params: &SpinParams) -> f64 {
        let mut d = params.classifier.kink_distance(&self.classifier);
        for (bc, mlp) in self.branches.iter().zip(&params.branch_mlps) {
            d = d.min(mlp.kink_distance(&bc.mlp));
            d = bc.scores.iter().map(|s| s.abs()).fold(d, f64::min);
            for (c, &winner) in bc.argmax.iter().enumerate() {
                for v in (0..bc.z.rows()).filter(|&v| v != winner) {
                    let gap = bc.alpha[winner] * bc.z.get(winner, c) - bc.alpha[v] * bc.z.get(v, c);
                    d = d.min(gap);
                }
            }
        }
        d
    }

    /// Attention weights of branch `r` (all ones without attention).
    pub fn alpha(&self, r: usize) -> &[f64] {
        &self.branches[r].alpha
    }
}

/// `Z_r = g_r(B_r)`.
pub fn branch_transform(params: &SpinParams, r: usize, bank_r: &DenseMatrix) -> DenseMatrix {
    params.branch_mlps[r].apply(bank_r)
}

fn attention_scores(w: &[f64], z: &DenseMatrix) -> Vec<f64> {
    z.row_iter().map(|row| dot(w, row)).collect()
}

fn softmax_of_relu(scores: &[f64]) -> Vec<f64> {
    let beta: Vec<f64> = scores.iter().map(|&p| p.max(0.0)).collect();
    let max = beta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = beta.iter().map(|&b| (b - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

/// `α_v = exp(β_v) / Σ_u exp(β_u)` with `β_v = ReLU(<w, z_v>)`, over the rows of one graph.
pub fn attention_weights(w: &[f64], z: &DenseMatrix) -> Vec<f64> {
    assert!(z.rows() > 0, "attention over an empty graph");
    assert_eq!(w.len(), z.cols(), "attention vector width mismatch");
    softmax_of_relu(&attention_scores(w, z))
}

fn readout_with_argmax(z: &DenseMatrix, alpha: Option<&[f64]>, readout: Readout) -> (Vec<f64>, Vec<usize>) {
    let n = z.rows();
    if let Some(a) = alpha {
        assert_eq!(a.len(), n, "one weight per node");
    }
    let weight = |v: usize| alpha.map_or(1.0, |a| a[v]);
    let d = z.cols();
    match readout {
        Readout::Sum | Readout::Mean => {
            let mut s = vec![0.0; d];
            for (v, row) in z.row_iter().enumerate() {
                let a = weight(v);
                for (o, &x) in s.iter_mut().zip(row) {
                    *o += a * x;
                }
            }
            if readout == Readout::Mean && n > 0 {
                s.iter_mut().for_each(|x| *x /= n as f64);
            }
            (s, Vec::new())
        }
        Readout::Max => {
            let mut s = vec![f64::NEG_INFINITY; d];
            let mut arg = vec![0; d];
            for (v, row) in z.row_iter().enumerate() {
                let a = weight(v);
                for c in 0..d {
                    let y = a * row[c];
                    if y > s[c] {
                        s[c] = y;
                        arg[c] = v;
                    }
                }
            }
            if n == 0 {
                s.iter_mut().for_each(|x| *x = 0.0);
            }
            (s, arg)
        }
    }
}

/// Pools node rows into one vector: `Σ_v α_v z_v` for the sum readout (α = 1
/// when `alpha` is `None`); mean and max apply to the same weighted rows.
pub fn branch_readout(z: &DenseMatrix, alpha: Option<&[f64]>, readout: Readout) -> Vec<f64> {
    readout_with_argmax(z, alpha, readout).0
}

/// Gradients of a branch readout w.r.t. the rows of `z` and the weights `α`.
pub(crate) fn readout_backward(
    z: &DenseMatrix,
    alpha: &[f64],
    argmax: &[usize],
    readout: Readout,
    upstream: &[f64],
) -> (DenseMatrix, Vec<f64>) {
    let n = z.rows();
    // dY: gradient w.r.t. the weighted rows y_v = α_v z_v
    let mut dy = DenseMatrix::zeros(n, z.cols());
    match readout {
        Readout::Sum | Readout::Mean => {
            let scale = if readout == Readout::Mean { 1.0 / n as f64 } else { 1.0 };
            for v in 0..n {
                for (o, &g) in dy.row_mut(v).iter_mut().zip(upstream) {
                    *o = g * scale;
                }
            }
        }
        Readout::Max => {
            for (c, &v) in argmax.iter().enumerate() {
                dy.set(v, c, upstream[c]);
            }
        }
    }
    let d_alpha = (0..n).map(|v| dot(dy.row(v), z.row(v))).collect();
    let mut dz = dy;
    for (v, &a) in alpha.iter().enumerate() {
        dz.row_mut(v).iter_mut().for_each(|x| *x *= a);
    }
    (dz, d_alpha)
}

/// `e_G = [s_0; ...; s_R]` in branch order.
pub fn global_readout(branches: &[Vec<f64>]) -> Vec<f64> {
    branches.iter().flatten().copied().collect()
}

/// Node-level combination of the per-branch rows of one node: their
/// concatenation, optionally followed by an MLP. Not used for graph classification.
pub fn node_embedding_combine(rows: &[&[f64]], mlp: Option<&Mlp>) -> Vec<f64> {
    let concat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
    match mlp {
        None => concat,
        Some(m) => {
            let len = concat.len();
            m.apply(&DenseMatrix::from_vec(1, len, concat)).into_vec()
        }
    }
}

impl SpinParams {
    /// Glorot-initialized parameters for `cfg`.
    pub fn init<R: Rng + ?Sized>(cfg: &SpinConfig, rng: &mut R) -> Self {
        let mut g_dims = vec![cfg.input_dim];
        g_dims.extend(std::iter::repeat_n(cfg.hidden_dim, cfg.g_layers));
        let branch_mlps = (0..cfg.branches())
            .map(|_| Mlp::new(&g_dims, Activation::Relu, Activation::Identity, rng))
            .collect();
        let attention = if cfg.attention {
            let bound = (6.0 / (cfg.hidden_dim + 1) as f64).sqrt();
            (0..cfg.branches())
                .map(|_| (0..cfg.hidden_dim).map(|_| rng.gen_range(-bound..=bound)).collect())
                .collect()
        } else {
            Vec::new()
        };
        let mut c_dims = vec![cfg.embedding_dim()];
        c_dims.extend(std::iter::repeat_n(cfg.hidden_dim, cfg.classifier_layers - 1));
        c_dims.push(cfg.num_classes);
        let classifier = Mlp::new(&c_dims, Activation::Relu, Activation::Identity, rng);
        Self {
            branch_mlps,
            attention,
            classifier,
        }
    }

    fn check_bank(&self, cfg: &SpinConfig, bank: &FeatureBank) {
        assert!(
            bank.len() > cfg.r,
            "bank has {} matrices but the model needs {}",
            bank.len(),
            cfg.branches()
        );
        assert_eq!(bank.feature_dim(), cfg.input_dim, "bank feature width mismatch");
        assert!(bank.node_count() > 0, "empty graph");
    }

    /// Graph embedding in evaluation mode (no dropout).
    pub fn embed(&self, cfg: &SpinConfig, bank: &FeatureBank) -> GraphEmbedding {
        self.check_bank(cfg, bank);
        let branches: Vec<Vec<f64>> = (0..cfg.branches())
            .map(|r| {
                let z = branch_transform(self, r, bank.branch(r));
                let alpha = cfg.attention.then(|| attention_weights(&self.attention[r], &z));
                branch_readout(&z, alpha.as_deref(), cfg.readout)
            })
            .collect();
        let global = global_readout(&branches);
        GraphEmbedding { branches, global }
    }

    /// Logits in evaluation mode.
    pub fn predict(&self, cfg: &SpinConfig, bank: &FeatureBank) -> Vec<f64> {
        let e = self.embed(cfg, bank).global;
        let len = e.len();
        self.classifier.apply(&DenseMatrix::from_vec(1, len, e)).into_vec()
    }

    /// Full forward pass retaining intermediates. Dropout is active iff `rng` is given.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        cfg: &SpinConfig,
        bank: &FeatureBank,
        mut rng: Option<&mut R>,
    ) -> (Vec<f64>, ForwardCache) {
        self.check_bank(cfg, bank);
        let training = rng.is_some();
        let mut branches = Vec::with_capacity(cfg.branches());
        let mut pooled = Vec::with_capacity(cfg.branches());
        for r in 0..cfg.branches() {
            let (z_raw, mlp) = self.branch_mlps[r].forward(bank.branch(r));
            let dropped = match rng.as_deref_mut() {
                Some(g) => dropout(&z_raw, cfg.dropout, g, training),
                None => Dropout {
                    output: z_raw,
                    mask: None,
                },
            };
            let z = dropped.output.clone();
            let (scores, alpha) = if cfg.attention {
                let scores = attention_scores(&self.attention[r], &z);
                let alpha = softmax_of_relu(&scores);
                (scores, alpha)
            } else {
                (Vec::new(), vec![1.0; z.rows()])
            };
            let weights = cfg.attention.then_some(alpha.as_slice());
            let (s, argmax) = readout_with_argmax(&z, weights, cfg.readout);
            pooled.push(s);
            branches.push(BranchCache {
                mlp,
                dropout: Dropout {
                    output: DenseMatrix::zeros(0, 0),
                    mask: dropped.mask,
                },
                z,
                scores,
                alpha,
                argmax,
            });
        }
        let global = global_readout(&pooled);
        let e = DenseMatrix::from_vec(1, global.len(), global.clone());
        let embedding_dropout = match rng {
            Some(g) => dropout(&e, cfg.dropout, g, training),
            None => Dropout { output: e, mask: None },
        };
        let (logits, classifier) = self.classifier.forward(&embedding_dropout.output);
        let cache = ForwardCache {
            branches,
            embedding: GraphEmbedding {
                branches: pooled,
                global,
            },
            embedding_dropout: Dropout {
                output: DenseMatrix::zeros(0, 0),
                mask: embedding_dropout.mask,
            },
            classifier,
        };
        (logits.into_vec(), cache)
    }

    /// Exact gradients of `<grad_logits, logits>` through the whole model.
    pub fn backward(&self, cfg: &SpinConfig, cache: &ForwardCache, grad_logits: &[f64]) -> SpinGradients {
        let upstream = DenseMatrix::from_vec(1, grad_logits.len(), grad_logits.to_vec());
        let cls = self.classifier.backward(&cache.classifier, &upstream);
        let mut d_embedding = cls.input;
        cache.embedding_dropout.backward_in_place(&mut d_embedding);
        let d_embedding = d_embedding.into_vec();
        let h = cfg.hidden_dim;

        let mut branches = Vec::with_capacity(cfg.branches());
        let mut attention = Vec::new();
        for (r, bc) in cache.branches.iter().enumerate() {
            let ds = &d_embedding[r * h..(r + 1) * h];
            let (mut dz, d_alpha) = readout_backward(&bc.z, &bc.alpha, &bc.argmax, cfg.readout, ds);
            if cfg.attention {
                let w = &self.attention[r];
                let weighted: f64 = bc.alpha.iter().zip(&d_alpha).map(|(a, g)| a * g).sum();
                let mut dw = vec![0.0; h];
                for v in 0..bc.z.rows() {
                    // softmax then ReLU (derivative 0 at the kink)
                    let d_beta = bc.alpha[v] * (d_alpha[v] - weighted);
                    let d_score = if bc.scores[v] > 0.0 { d_beta } else { 0.0 };
                    for (o, &x) in dw.iter_mut().zip(bc.z.row(v)) {
                        *o += d_score * x;
                    }
                    for (o, &wi) in dz.row_mut(v).iter_mut().zip(w) {
                        *o += d_score * wi;
                    }
                }
                attention.push(dw);
            }
            bc.dropout.backward_in_place(&mut dz);
            let g = self.branch_mlps[r].backward_with(&bc.mlp, &dz, false);
            branches.push(g.layers);
        }
        SpinGradients {
            branches,
            attention,
            classifier: cls.layers,
        }
    }

    pub fn zero_gradients(&self) -> SpinGradients {
        let zeros = |m: &Mlp| {
            m.layers()
                .iter()
                .map(|l| Layer::zeros(l.d_in(), l.d_out()))
                .collect::<Vec<_>>()
        };
        SpinGradients {
            branches: self.branch_mlps.iter().map(zeros).collect(),
            attention: self.attention.iter().map(|w| vec![0.0; w.len()]).collect(),
            classifier: zeros(&self.classifier),
        }
    }

    /// Writes a checkpoint carrying `cfg` as its config echo.
    pub fn save<W: std::io::Write>(&self, cfg: &SpinConfig, w: W) -> Result<(), checkpoint::CheckpointError> {
        checkpoint::write_checkpoint(w, &cfg.to_kv(), &self.tensors())
    }

    /// Reads a checkpoint written by [`SpinParams::save`].
    pub fn load<R: std::io::Read>(r: R) -> Result<(SpinConfig, SpinParams), checkpoint::CheckpointError> {
        use checkpoint::CheckpointError;
        let ck = checkpoint::read_checkpoint(r)?;
        let cfg = SpinConfig::from_kv(&ck.config).map_err(|e| CheckpointError::Layout(e.to_string()))?;
        let mut params = SpinParams::init(&cfg, &mut crate::nn::rng_from_seed(0));
        let mut slots = params.tensors_mut();
        if slots.len() != ck.tensors.len() {
            return Err(CheckpointError::Layout(format!(
                "{} tensors stored, model has {}",
                ck.tensors.len(),
                slots.len()
            )));
        }
        for (i, (slot, stored)) in slots.iter_mut().zip(&ck.tensors).enumerate() {
            if slot.len() != stored.len() {
                return Err(CheckpointError::Layout(format!(
                    "tensor {i} has {} values, model expects {}",
                    stored.len(),
                    slot.len()
                )));
            }
            slot.copy_from_slice(stored);
        }
        drop(slots);
        Ok((cfg, params))
    }
}

impl SpinGradients {
    /// Adds `other` into `self`.
    pub fn accumulate(&mut self, other: &SpinGradients) {
        let theirs = other.tensors();
        for (mine, t) in self.tensors_mut().into_iter().zip(theirs) {
            for (a, &b) in mine.iter_mut().zip(t) {
                *a += b;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= s);
        }
    }
}

impl Parameters for SpinParams {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.branch_mlps.iter().flat_map(|m| m.tensors()).collect();
        out.extend(self.attention.iter().map(|w| w.as_slice()));
        out.extend(self.classifier.tensors());
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self.branch_mlps.iter_mut().flat_map(|m| m.tensors_mut()).collect();
        out.extend(self.attention.iter_mut().map(|w| w.as_mut_slice()));
        out.extend(self.classifier.tensors_mut());
        out
    }
}

impl Parameters for SpinGradients {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.branches.iter().flat_map(|l| layer_tensors(l)).collect();
        out.extend(self.attention.iter().map(|w| w.as_slice()));
        out.extend(layer_tensors(&self.classifier));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self.branches.iter_mut().flat_map(|l| layer_tensors_mut(l)).collect();
        out.extend(self.attention.iter_mut().map(|w| w.as_mut_slice()));
        out.extend(layer_tensors_mut(&mut self.classifier));
        out
    }
}
