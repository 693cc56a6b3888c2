//! Central finite differences over every scalar of a [`Parameters`] set.

use super::Parameters;

/// Denominator floor of the relative error; below it errors are effectively absolute.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

/// Numeric gradient `(f(θ + ε) - f(θ - ε)) / 2ε` for every parameter scalar, in
/// declaration order. `params` is restored exactly before returning.
pub fn central_difference<P, F>(params: &mut P, mut loss: F, eps: f64) -> Vec<Vec<f64>>
where
    P: Parameters + ?Sized,
    F: FnMut(&P) -> f64,
{
    let shapes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
    let mut out = Vec::with_capacity(shapes.len());
    for (t, &len) in shapes.iter().enumerate() {
        let mut grad = Vec::with_capacity(len);
        for i in 0..len {
            let original = params.tensors()[t][i];
            params.tensors_mut()[t][i] = original + eps;
            let plus = loss(params);
            params.tensors_mut()[t][i] = original - eps;
            let minus = loss(params);
            params.tensors_mut()[t][i] = original;
            grad.push((plus - minus) / (2.0 * eps));
        }
        out.push(grad);
    }
    out
}

/// `max |a - n| / max(|a|, |n|, floor)` across all entries.
pub fn max_relative_error<G: Parameters + ?Sized>(analytic: &G, numeric: &[Vec<f64>]) -> f64 {
    let tensors = analytic.tensors();
    assert_eq!(tensors.len(), numeric.len(), "gradient layout mismatch");
    let mut worst: f64 = 0.0;
    for (a, n) in tensors.iter().zip(numeric) {
        assert_eq!(a.len(), n.len(), "gradient tensor length mismatch");
        for (&a, &n) in a.iter().zip(n) {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(RELATIVE_ERROR_FLOOR);
            worst = worst.max(rel);
        }
    }
    worst
}
