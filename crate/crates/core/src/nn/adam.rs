use super::Parameters;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// First and second moment estimates mirroring a parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new<P: Parameters + ?Sized>(params: &P) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }
}

/// One Adam update. The L2 penalty enters the gradient as `l2 * theta`.
pub fn adam_step<P, G>(params: &mut P, grads: &G, state: &mut AdamState, lr: f64, l2: f64)
where
    P: Parameters + ?Sized,
    G: Parameters + ?Sized,
{
    state.step += 1;
    let bias1 = 1.0 - ADAM_BETA1.powi(state.step as i32);
    let bias2 = 1.0 - ADAM_BETA2.powi(state.step as i32);
    let grad_tensors = grads.tensors();
    let mut param_tensors = params.tensors_mut();
    assert_eq!(
        param_tensors.len(),
        grad_tensors.len(),
        "gradient/parameter layout mismatch"
    );
    assert_eq!(param_tensors.len(), state.m.len(), "optimizer state layout mismatch");
    for (t, (theta, g)) in param_tensors.iter_mut().zip(&grad_tensors).enumerate() {
        assert_eq!(theta.len(), g.len(), "gradient tensor {t} has the wrong length");
        let m = &mut state.m[t];
        let v = &mut state.v[t];
        for i in 0..theta.len() {
            let grad = g[i] + l2 * theta[i];
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * grad;
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * grad * grad;
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            theta[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Scalar(Vec<f64>);

    impl Parameters for Scalar {
        fn tensors(&self) -> Vec<&[f64]> {
            vec![&self.0]
        }
        fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.0]
        }
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut p = Scalar(vec![1.5, -2.0, 0.25]);
        let g = Scalar(vec![0.0; 3]);
        let mut state = AdamState::new(&p);
        for _ in 0..10 {
            adam_step(&mut p, &g, &mut state, 0.1, 0.0);
        }
        assert_eq!(p.0, vec![1.5, -2.0, 0.25]);
    }

    #[test]
    fn single_step_descends_quadratic() {
        let mut p = Scalar(vec![1.0]);
        let mut state = AdamState::new(&p);
        let g = Scalar(vec![2.0 * p.0[0]]);
        adam_step(&mut p, &g, &mut state, 0.1, 0.0);
        assert!(p.0[0] < 1.0);
    }

    #[test]
    fn converges_on_quadratic_bowl() {
        let mut p = Scalar(vec![1.0]);
        let mut state = AdamState::new(&p);
        for _ in 0..200 {
            let g = Scalar(vec![2.0 * p.0[0]]);
            adam_step(&mut p, &g, &mut state, 0.1, 0.0);
        }
        assert!(p.0[0].abs() < 1e-2, "theta = {}", p.0[0]);
    }

    #[test]
    fn l2_pulls_towards_zero() {
        let mut p = Scalar(vec![3.0]);
        let mut state = AdamState::new(&p);
        adam_step(&mut p, &Scalar(vec![0.0]), &mut state, 0.01, 0.1);
        assert!(p.0[0] < 3.0);
    }
}
