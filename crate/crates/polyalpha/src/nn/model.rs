//! Model parameters, initialization, and the forward pass.

use crate::alphabet::ALPHABET_LEN;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

use super::kernels::dot8;
use super::Scalar;

/// Output distribution width (alphabet size).
pub const OUT_WIDTH: usize = ALPHABET_LEN;

/// The four learnable tensors. Gate weights are row-major `4n x (d+n)`,
/// rows grouped `[input, forget, output, candidate]`; the head is
/// row-major `27 x n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSet<S> {
    pub w_gate: Vec<S>,
    pub b_gate: Vec<S>,
    pub w_out: Vec<S>,
    pub b_out: Vec<S>,
}

/// Gradients share the parameter layout.
pub type Gradients<S> = TensorSet<S>;

impl<S: Scalar> TensorSet<S> {
    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            w_gate: vec![S::zero(); 4 * n * (d + n)],
            b_gate: vec![S::zero(); 4 * n],
            w_out: vec![S::zero(); OUT_WIDTH * n],
            b_out: vec![S::zero(); OUT_WIDTH],
        }
    }

    pub fn parts(&self) -> [&[S]; 4] {
        [&self.w_gate, &self.b_gate, &self.w_out, &self.b_out]
    }

    pub fn parts_mut(&mut self) -> [&mut [S]; 4] {
        let Self { w_gate, b_gate, w_out, b_out } = self;
        [w_gate, b_gate, w_out, b_out]
    }

    pub fn len(&self) -> usize {
        self.parts().iter().map(|p| p.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Elementwise `self += other`.
    pub fn add_assign(&mut self, other: &Self) {
        for (mine, theirs) in self.parts_mut().into_iter().zip(other.parts()) {
            for (a, &b) in mine.iter_mut().zip(theirs) {
                *a = *a + b;
            }
        }
    }

    /// Elementwise `self *= factor`.
    pub fn scale(&mut self, factor: S) {
        for part in self.parts_mut() {
            for a in part.iter_mut() {
                *a = *a * factor;
            }
        }
    }

    /// Squared Euclidean norm, accumulated in f64.
    pub fn sq_norm(&self) -> f64 {
        self.parts()
            .iter()
            .flat_map(|p| p.iter())
            .map(|&x| {
                let v = x.to_f64();
                v * v
            })
            .sum()
    }

    pub fn all_finite(&self) -> bool {
        self.parts().iter().all(|p| p.iter().all(|x| x.is_finite()))
    }
}

/// LSTM cell plus softmax head for hidden size `n` and input width `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<S> {
    pub n: usize,
    pub d: usize,
    pub tensors: TensorSet<S>,
}

impl<S: Scalar> ModelParams<S> {
    pub fn zeros(n: usize, d: usize) -> Self {
        Self { n, d, tensors: TensorSet::zeros(n, d) }
    }

    pub fn num_params(&self) -> usize {
        self.tensors.len()
    }

    pub const TENSOR_NAMES: [&'static str; 4] = ["w_gate", "b_gate", "w_out", "b_out"];

    pub fn tensor_shapes(&self) -> [Vec<usize>; 4] {
        [
            vec![4 * self.n, self.d + self.n],
            vec![4 * self.n],
            vec![OUT_WIDTH, self.n],
            vec![OUT_WIDTH],
        ]
    }

    pub fn validate_finite(&self) -> Result<()> {
        if self.tensors.all_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite("model parameters contain a non-finite value".into()))
        }
    }
}

/// Uniform Xavier initialization: weights in ±sqrt(6/(fan_in+fan_out)),
/// biases zero except the forget gate, which starts at 1 so early
/// gradients flow through the memory cell.
pub fn xavier_init<S: Scalar>(n: usize, d: usize, rng: &mut SplitMix64) -> ModelParams<S> {
    let mut params = ModelParams::zeros(n, d);
    let gate_limit = (6.0 / ((d + n) + 4 * n) as f64).sqrt();
    for w in params.tensors.w_gate.iter_mut() {
        *w = S::from_f64(rng.uniform(-gate_limit, gate_limit));
    }
    let head_limit = (6.0 / (n + OUT_WIDTH) as f64).sqrt();
    for w in params.tensors.w_out.iter_mut() {
        *w = S::from_f64(rng.uniform(-head_limit, head_limit));
    }
    for b in params.tensors.b_gate[n..2 * n].iter_mut() {
        *b = S::one();
    }
    params
}

/// Recurrent state: hidden vector and memory cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState<S> {
    pub h: Vec<S>,
    pub c: Vec<S>,
}

impl<S: Scalar> ModelState<S> {
    pub fn zeros(n: usize) -> Self {
        Self { h: vec![S::zero(); n], c: vec![S::zero(); n] }
    }
}

/// Post-activation gate values for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct GateActivations<S> {
    pub i: Vec<S>,
    pub f: Vec<S>,
    pub o: Vec<S>,
    pub g: Vec<S>,
}

#[inline]
fn sigmoid<S: Scalar>(z: S) -> S {
    S::one() / (S::one() + (-z).exp())
}

/// Indices and values of the nonzero input entries. Inputs are one-hot
/// blocks, so this is one or two entries; skipping exact zeros changes
/// nothing in the sum but avoids almost all of the input-column work.
pub(super) fn nonzeros<S: Scalar>(x_t: &[S], out: &mut Vec<(usize, S)>) {
    out.clear();
    for (j, &v) in x_t.iter().enumerate() {
        if v != S::zero() {
            out.push((j, v));
        }
    }
}

/// One LSTM step writing gates (post-activation, `[i,f,o,g]` layout),
/// cell, tanh(cell), and hidden output into caller buffers.
#[allow(clippy::too_many_arguments)]
fn step_core<S: Scalar>(
    params: &ModelParams<S>,
    nz_x: &[(usize, S)],
    h_prev: &[S],
    c_prev: &[S],
    gates: &mut [S],
    c_out: &mut [S],
    tanh_c_out: &mut [S],
    h_out: &mut [S],
) {
    let (n, d) = (params.n, params.d);
    let width = d + n;
    let w = &params.tensors.w_gate;
    for r in 0..4 * n {
        let row = &w[r * width..(r + 1) * width];
        let mut z = params.tensors.b_gate[r];
        for &(j, v) in nz_x {
            z = z + row[j] * v;
        }
        gates[r] = z + dot8(&row[d..], h_prev);
    }
    for z in gates[..3 * n].iter_mut() {
        *z = sigmoid(*z);
    }
    for z in gates[3 * n..4 * n].iter_mut() {
        *z = z.tanh();
    }
    for k in 0..n {
        let c = gates[n + k] * c_prev[k] + gates[k] * gates[3 * n + k];
        c_out[k] = c;
        let tc = c.tanh();
        tanh_c_out[k] = tc;
        h_out[k] = gates[2 * n + k] * tc;
    }
}

/// Single cell update exposed for inspection and tracing.
pub fn lstm_step<S: Scalar>(
    params: &ModelParams<S>,
    x_t: &[S],
    state: &ModelState<S>,
) -> Result<(ModelState<S>, GateActivations<S>)> {
    let (n, d) = (params.n, params.d);
    if x_t.len() != d || state.h.len() != n || state.c.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "lstm_step expects x of width {d} and state of size {n}"
        )));
    }
    if !x_t.iter().chain(&state.h).chain(&state.c).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("non-finite input to lstm_step".into()));
    }
    let mut nz = Vec::new();
    nonzeros(x_t, &mut nz);
    let mut gates = vec![S::zero(); 4 * n];
    let mut next = ModelState::zeros(n);
    let mut tanh_c = vec![S::zero(); n];
    step_core(params, &nz, &state.h, &state.c, &mut gates, &mut next.c, &mut tanh_c, &mut next.h);
    let g = gates.split_off(3 * n);
    let o = gates.split_off(2 * n);
    let f = gates.split_off(n);
    Ok((next, GateActivations { i: gates, f, o, g }))
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<S> {
    pub n: usize,
    pub d: usize,
    pub steps: usize,
    /// Input copy, `T x d`.
    pub x: Vec<S>,
    /// Hidden states, `(T+1) x n`; row 0 is the zero initial state.
    pub hs: Vec<S>,
    /// Memory cells, `(T+1) x n`; row 0 is the zero initial state.
    pub cs: Vec<S>,
    /// Post-activation gates per step, `T x 4n`, `[i,f,o,g]` layout.
    pub gates: Vec<S>,
    /// tanh of each memory cell, `T x n`.
    pub tanh_c: Vec<S>,
    /// Softmax output rows, `T x 27`.
    pub probs: Vec<S>,
}

impl<S: Scalar> ForwardCache<S> {
    /// Memory-cell row for step `t` (0-based).
    pub fn cell(&self, t: usize) -> &[S] {
        &self.cs[(t + 1) * self.n..(t + 2) * self.n]
    }
}

/// Run the model over a `T x d` input from the zero state, producing
/// softmax rows and all intermediates.
///
/// Panics if `x.len()` is not a multiple of the input width.
pub fn forward<S: Scalar>(params: &ModelParams<S>, x: &[S]) -> ForwardCache<S> {
    let (n, d) = (params.n, params.d);
    assert_eq!(x.len() % d, 0, "input length {} is not a multiple of width {d}", x.len());
    let steps = x.len() / d;
    let mut cache = ForwardCache {
        n,
        d,
        steps,
        x: x.to_vec(),
        hs: vec![S::zero(); (steps + 1) * n],
        cs: vec![S::zero(); (steps + 1) * n],
        gates: vec![S::zero(); steps * 4 * n],
        tanh_c: vec![S::zero(); steps * n],
        probs: vec![S::zero(); steps * OUT_WIDTH],
    };
    let w_out = &params.tensors.w_out;
    let b_out = &params.tensors.b_out;
    let mut nz = Vec::with_capacity(2);
    for t in 0..steps {
        nonzeros(&x[t * d..(t + 1) * d], &mut nz);
        let (prev_rows, next_rows) = cache.hs.split_at_mut((t + 1) * n);
        let h_prev = &prev_rows[t * n..];
        let h_out = &mut next_rows[..n];
        let (prev_cells, next_cells) = cache.cs.split_at_mut((t + 1) * n);
        let c_prev = &prev_cells[t * n..];
        let c_out = &mut next_cells[..n];
        step_core(
            params,
            &nz,
            h_prev,
            c_prev,
            &mut cache.gates[t * 4 * n..(t + 1) * 4 * n],
            c_out,
            &mut cache.tanh_c[t * n..(t + 1) * n],
            h_out,
        );
        let h_t: &[S] = h_out;
        let logits = &mut cache.probs[t * OUT_WIDTH..(t + 1) * OUT_WIDTH];
        for (k, logit) in logits.iter_mut().enumerate() {
            *logit = b_out[k] + dot8(&w_out[k * n..(k + 1) * n], h_t);
        }
        softmax_in_place(logits);
    }
    cache
}

/// Numerically stable in-place softmax.
pub fn softmax_in_place<S: Scalar>(row: &mut [S]) {
    let mut max = row[0];
    for &z in &row[1..] {
        if z > max {
            max = z;
        }
    }
    let mut sum = S::zero();
    for z in row.iter_mut() {
        *z = (*z - max).exp();
        sum = sum + *z;
    }
    for z in row.iter_mut() {
        *z = *z / sum;
    }
}
