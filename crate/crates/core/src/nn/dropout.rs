use rand::Rng;

use super::DenseMatrix;

/// Output of [`dropout`]; `mask` holds the per-entry scale (0 or `1/(1-rate)`)
/// and is absent when the layer acted as the identity.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub output: DenseMatrix,
    pub mask: Option<Vec<f64>>,
}

impl Dropout {
    /// Applies the stored mask to an upstream gradient in place.
    pub fn backward_in_place(&self, grad: &mut DenseMatrix) {
        if let Some(mask) = &self.mask {
            for (g, &m) in grad.as_mut_slice().iter_mut().zip(mask) {
                *g *= m;
            }
        }
    }
}

/// Inverted dropout: kept entries are scaled by `1 / (1 - rate)` during training.
pub fn dropout<R: Rng + ?Sized>(x: &DenseMatrix, rate: f64, rng: &mut R, training: bool) -> Dropout {
    assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0, 1)");
    if !training || rate == 0.0 {
        return Dropout {
            output: x.clone(),
            mask: None,
        };
    }
    let keep = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = (0..x.as_slice().len())
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect();
    let mut output = x.clone();
    for (o, &m) in output.as_mut_slice().iter_mut().zip(&mask) {
        *o *= m;
    }
    Dropout {
        output,
        mask: Some(mask),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::rng_from_seed;

    #[test]
    fn zero_rate_and_eval_are_identity() {
        let x = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let mut rng = rng_from_seed(0);
        assert_eq!(dropout(&x, 0.0, &mut rng, true).output, x);
        assert_eq!(dropout(&x, 0.9, &mut rng, false).output, x);
    }

    #[test]
    fn half_rate_keeps_about_half() {
        let x = DenseMatrix::filled(200, 100, 1.0);
        let mut rng = rng_from_seed(42);
        let d = dropout(&x, 0.5, &mut rng, true);
        let kept = d.output.as_slice().iter().filter(|&&v| v != 0.0).count() as f64 / 20000.0;
        assert!((kept - 0.5).abs() < 0.05, "kept fraction {kept}");
        assert!(d.output.as_slice().iter().all(|&v| v == 0.0 || v == 2.0));
    }
}
