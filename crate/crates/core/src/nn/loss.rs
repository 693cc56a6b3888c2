use super::DenseMatrix;

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &DenseMatrix) -> DenseMatrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            total += *x;
        }
        for x in row.iter_mut() {
            *x /= total;
        }
    }
    out
}

/// Mean cross-entropy over the rows of `logits` against one-hot targets.
///
/// Returns the loss and `dL/dlogits = (softmax - y) / M`.
pub fn softmax_cross_entropy(logits: &DenseMatrix, one_hot: &DenseMatrix) -> (f64, DenseMatrix) {
    assert_eq!(logits.shape(), one_hot.shape(), "logits/labels shape mismatch");
    let m = logits.rows();
    assert!(m > 0, "empty batch");
    let mut loss = 0.0;
    for r in 0..m {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
        for (&x, &y) in row.iter().zip(one_hot.row(r)) {
            if y != 0.0 {
                loss -= y * (x - log_z);
            }
        }
    }
    let mut grad = softmax_rows(logits);
    for (g, &y) in grad.as_mut_slice().iter_mut().zip(one_hot.as_slice()) {
        *g = (*g - y) / m as f64;
    }
    (loss / m as f64, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::rng_from_seed;
    use rand::Rng;

    fn one_hot(labels: &[usize], k: usize) -> DenseMatrix {
        let mut y = DenseMatrix::zeros(labels.len(), k);
        for (i, &l) in labels.iter().enumerate() {
            y.set(i, l, 1.0);
        }
        y
    }

    #[test]
    fn uniform_logits_give_log_k() {
        let (loss, _) = softmax_cross_entropy(&DenseMatrix::zeros(3, 4), &one_hot(&[0, 1, 3], 4));
        assert!((loss - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn large_margin_drives_loss_to_zero() {
        let logits = DenseMatrix::from_rows(&[[800.0, 0.0, -800.0]]);
        let (loss, grad) = softmax_cross_entropy(&logits, &one_hot(&[0], 3));
        assert!(loss.abs() < 1e-300 && loss >= 0.0);
        assert!(grad.is_finite());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = rng_from_seed(11);
        let logits = DenseMatrix::from_vec(3, 5, (0..15).map(|_| rng.gen_range(-2.0..2.0)).collect());
        let y = one_hot(&[4, 0, 2], 5);
        let (_, grad) = softmax_cross_entropy(&logits, &y);
        let eps = 1e-5;
        for i in 0..15 {
            let mut plus = logits.clone();
            plus.as_mut_slice()[i] += eps;
            let mut minus = logits.clone();
            minus.as_mut_slice()[i] -= eps;
            let numeric = (softmax_cross_entropy(&plus, &y).0 - softmax_cross_entropy(&minus, &y).0) / (2.0 * eps);
            let analytic = grad.as_slice()[i];
            let rel = (numeric - analytic).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            assert!(rel < 1e-6, "entry {i}: {analytic} vs {numeric}");
        }
    }

    #[test]
    fn softmax_rows_sum_to_one_and_loss_nonnegative() {
        let mut rng = rng_from_seed(5);
        for _ in 0..50 {
            let logits = DenseMatrix::from_vec(4, 6, (0..24).map(|_| rng.gen_range(-50.0..50.0)).collect());
            let p = softmax_rows(&logits);
            for row in p.row_iter() {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            let (loss, _) = softmax_cross_entropy(&logits, &one_hot(&[0, 1, 2, 5], 6));
            assert!(loss >= 0.0);
        }
    }
}
