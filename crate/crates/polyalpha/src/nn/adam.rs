//! Bias-corrected Adam.

use super::model::{Gradients, ModelParams, TensorSet};
use super::Scalar;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second gradient moments plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<S> {
    pub m1: TensorSet<S>,
    pub m2: TensorSet<S>,
    pub t: u64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(n: usize, d: usize) -> Self {
        Self { m1: TensorSet::zeros(n, d), m2: TensorSet::zeros(n, d), t: 0 }
    }
}

/// One Adam update in place: `p -= lr * m1_hat / (sqrt(m2_hat) + eps)`
/// with bias corrections `1 - beta^t` computed in f64.
pub fn adam_step<S: Scalar>(
    params: &mut ModelParams<S>,
    grads: &Gradients<S>,
    adam: &mut AdamState<S>,
    lr: f64,
) {
    adam.t += 1;
    let t = adam.t as i32;
    let c1 = S::from_f64(1.0 / (1.0 - BETA1.powi(t)));
    let c2 = S::from_f64(1.0 / (1.0 - BETA2.powi(t)));
    let b1 = S::from_f64(BETA1);
    let b2 = S::from_f64(BETA2);
    let one_minus_b1 = S::from_f64(1.0 - BETA1);
    let one_minus_b2 = S::from_f64(1.0 - BETA2);
    let lr_s = S::from_f64(lr);
    let eps = S::from_f64(EPSILON);

    let params_parts = params.tensors.parts_mut();
    let grad_parts = grads.parts();
    let m1_parts = adam.m1.parts_mut();
    let m2_parts = adam.m2.parts_mut();
    for (((p, g), m1), m2) in
        params_parts.into_iter().zip(grad_parts).zip(m1_parts).zip(m2_parts)
    {
        for k in 0..p.len() {
            let gk = g[k];
            m1[k] = b1 * m1[k] + one_minus_b1 * gk;
            m2[k] = b2 * m2[k] + one_minus_b2 * gk * gk;
            let m_hat = m1[k] * c1;
            let v_hat = m2[k] * c2;
            p[k] = p[k] - lr_s * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::model::ModelParams;
    use crate::rng::SplitMix64;

    fn tiny() -> (ModelParams<f64>, AdamState<f64>) {
        let mut rng = SplitMix64::new(8);
        (crate::nn::xavier_init(4, 27, &mut rng), AdamState::new(4, 27))
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let (mut p, mut adam) = tiny();
        let before = p.clone();
        let zero = TensorSet::zeros(4, 27);
        adam_step(&mut p, &zero, &mut adam, 1e-3);
        assert_eq!(p, before);
        assert_eq!(adam.t, 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let (mut p, mut adam) = tiny();
        let before = p.clone();
        let mut g = TensorSet::zeros(4, 27);
        for (k, v) in g.w_gate.iter_mut().enumerate() {
            *v = if k % 2 == 0 { 0.5 } else { -2.0 };
        }
        let lr = 1e-3;
        adam_step(&mut p, &g, &mut adam, lr);
        for k in 0..g.w_gate.len() {
            let moved = p.tensors.w_gate[k] - before.tensors.w_gate[k];
            let expect = -lr * g.w_gate[k].signum();
            assert!((moved - expect).abs() < 1e-7, "step {moved} vs {expect}");
        }
        // Tensors with zero gradient must not move.
        assert_eq!(p.tensors.w_out, before.tensors.w_out);
    }

    #[test]
    fn first_moment_decays_once_gradients_stop() {
        let (mut p, mut adam) = tiny();
        let mut g = TensorSet::zeros(4, 27);
        g.b_out[0] = 1.0;
        adam_step(&mut p, &g, &mut adam, 1e-3);
        let zero = TensorSet::zeros(4, 27);
        let mut prev = adam.m1.b_out[0];
        for _ in 0..5 {
            adam_step(&mut p, &zero, &mut adam, 1e-3);
            let now = adam.m1.b_out[0];
            assert!((now - prev * BETA1).abs() < 1e-15);
            prev = now;
        }
    }

    #[test]
    fn second_moments_stay_nonnegative() {
        let (mut p, mut adam) = tiny();
        let mut rng = SplitMix64::new(44);
        for _ in 0..20 {
            let mut g = TensorSet::zeros(4, 27);
            for part in g.parts_mut() {
                for v in part.iter_mut() {
                    *v = rng.uniform(-3.0, 3.0);
                }
            }
            adam_step(&mut p, &g, &mut adam, 1e-3);
        }
        assert!(adam.m2.parts().iter().all(|p| p.iter().all(|&v| v >= 0.0)));
    }
}
