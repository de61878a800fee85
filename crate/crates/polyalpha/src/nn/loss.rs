//! Loss, exact backward pass, and accuracy metrics.

use crate::encoding::KEY_STEPS;
use crate::error::{Error, Result};

use super::kernels::axpy;
use super::model::{ForwardCache, Gradients, ModelParams, TensorSet, OUT_WIDTH};
use super::Scalar;

/// Mean over time steps of the squared Euclidean distance between each
/// softmax row and its one-hot target row.
pub fn l2_loss<S: Scalar>(probs: &[S], y: &[S], steps: usize) -> Result<S> {
    if probs.len() != steps * OUT_WIDTH || y.len() != probs.len() {
        return Err(Error::ShapeMismatch(format!(
            "loss expects {steps} rows of {OUT_WIDTH}; got probs {} and targets {}",
            probs.len(),
            y.len()
        )));
    }
    let mut total = S::zero();
    for (&p, &t) in probs.iter().zip(y) {
        let diff = p - t;
        total = total + diff * diff;
    }
    Ok(total / S::from_f64(steps as f64))
}

/// Exact gradient of `l2_loss` with respect to every parameter, by
/// backpropagation through time. The head derivative runs through the
/// full softmax Jacobian: `dz = p ⊙ dp − p (p·dp)` with
/// `dp = (2/T)(p − y)`.
pub fn backward<S: Scalar>(
    params: &ModelParams<S>,
    cache: &ForwardCache<S>,
    y: &[S],
) -> Result<Gradients<S>> {
    let (n, d, steps) = (cache.n, cache.d, cache.steps);
    if params.n != n || params.d != d {
        return Err(Error::ShapeMismatch(format!(
            "cache built for n={n}, d={d} but params are n={}, d={}",
            params.n, params.d
        )));
    }
    if y.len() != steps * OUT_WIDTH {
        return Err(Error::ShapeMismatch(format!(
            "target length {} != {steps} x {OUT_WIDTH}",
            y.len()
        )));
    }

    let width = d + n;
    let w_gate = &params.tensors.w_gate;
    let w_out = &params.tensors.w_out;
    let mut grads = TensorSet::zeros(n, d);

    let two_over_t = S::from_f64(2.0 / steps as f64);
    let mut dh = vec![S::zero(); n];
    let mut dh_prev = vec![S::zero(); n];
    let mut dc = vec![S::zero(); n];
    let mut dz_out = [S::zero(); OUT_WIDTH];
    let mut dz4 = vec![S::zero(); 4 * n];
    let mut nz = Vec::with_capacity(2);

    for t in (0..steps).rev() {
        let p = &cache.probs[t * OUT_WIDTH..(t + 1) * OUT_WIDTH];
        let yt = &y[t * OUT_WIDTH..(t + 1) * OUT_WIDTH];

        // Softmax Jacobian of the squared-distance head.
        let mut p_dot_dp = S::zero();
        for k in 0..OUT_WIDTH {
            let dp = two_over_t * (p[k] - yt[k]);
            dz_out[k] = dp;
            p_dot_dp = p_dot_dp + p[k] * dp;
        }
        for k in 0..OUT_WIDTH {
            dz_out[k] = p[k] * (dz_out[k] - p_dot_dp);
        }

        // Head gradients; dh accumulates on top of the carry from t+1.
        let h_t = &cache.hs[(t + 1) * n..(t + 2) * n];
        for k in 0..OUT_WIDTH {
            let s = dz_out[k];
            grads.b_out[k] = grads.b_out[k] + s;
            axpy(s, h_t, &mut grads.w_out[k * n..(k + 1) * n]);
            axpy(s, &w_out[k * n..(k + 1) * n], &mut dh);
        }

        // Through h = o ⊙ tanh(c) and c = f ⊙ c_prev + i ⊙ g.
        let gates = &cache.gates[t * 4 * n..(t + 1) * 4 * n];
        let (gi, gf, go, gg) =
            (&gates[..n], &gates[n..2 * n], &gates[2 * n..3 * n], &gates[3 * n..]);
        let tanh_c = &cache.tanh_c[t * n..(t + 1) * n];
        let c_prev = &cache.cs[t * n..(t + 1) * n];
        let one = S::one();
        for k in 0..n {
            let do_ = dh[k] * tanh_c[k];
            let dck = dc[k] + dh[k] * go[k] * (one - tanh_c[k] * tanh_c[k]);
            let di = dck * gg[k];
            let df = dck * c_prev[k];
            let dg = dck * gi[k];
            dz4[k] = di * gi[k] * (one - gi[k]);
            dz4[n + k] = df * gf[k] * (one - gf[k]);
            dz4[2 * n + k] = do_ * go[k] * (one - go[k]);
            dz4[3 * n + k] = dg * (one - gg[k] * gg[k]);
            dc[k] = dck * gf[k];
        }

        // Gate-weight gradients and the hidden carry to step t-1.
        super::model::nonzeros(&cache.x[t * d..(t + 1) * d], &mut nz);
        let h_prev = &cache.hs[t * n..(t + 1) * n];
        for v in dh_prev.iter_mut() {
            *v = S::zero();
        }
        for r in 0..4 * n {
            let s = dz4[r];
            grads.b_gate[r] = grads.b_gate[r] + s;
            let g_row = &mut grads.w_gate[r * width..(r + 1) * width];
            for &(j, v) in &nz {
                g_row[j] = g_row[j] + s * v;
            }
            axpy(s, h_prev, &mut g_row[d..]);
            axpy(s, &w_gate[r * width + d..(r + 1) * width], &mut dh_prev);
        }
        std::mem::swap(&mut dh, &mut dh_prev);
    }
    Ok(grads)
}

/// Which output steps a metric covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Every step.
    All,
    /// Steps after the 6-slot key prefix.
    Message,
    /// The first 6 steps.
    Key,
}

impl Region {
    fn range(self, steps: usize) -> std::ops::Range<usize> {
        match self {
            Region::All => 0..steps,
            Region::Message => KEY_STEPS.min(steps)..steps,
            Region::Key => 0..KEY_STEPS.min(steps),
        }
    }
}

fn argmax<S: Scalar>(row: &[S]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}

/// (matching steps, region steps) between prediction and target argmaxes.
pub fn region_counts<S: Scalar>(
    probs: &[S],
    y: &[S],
    steps: usize,
    region: Region,
) -> Result<(usize, usize)> {
    if probs.len() != steps * OUT_WIDTH || y.len() != probs.len() {
        return Err(Error::ShapeMismatch("prediction/target shape mismatch".into()));
    }
    let range = region.range(steps);
    if range.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "empty {region:?} region for a {steps}-step sequence"
        )));
    }
    let mut correct = 0;
    for t in range.clone() {
        let p = &probs[t * OUT_WIDTH..(t + 1) * OUT_WIDTH];
        let yt = &y[t * OUT_WIDTH..(t + 1) * OUT_WIDTH];
        if argmax(p) == argmax(yt) {
            correct += 1;
        }
    }
    Ok((correct, range.len()))
}

/// Fraction of steps in the region where prediction and target agree.
pub fn accuracy<S: Scalar>(probs: &[S], y: &[S], steps: usize, region: Region) -> Result<f64> {
    let (correct, total) = region_counts(probs, y, steps, region)?;
    Ok(correct as f64 / total as f64)
}
