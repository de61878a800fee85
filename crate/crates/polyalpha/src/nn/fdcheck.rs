//! Self-contained finite-difference verification of the analytic
//! gradients, suitable for driving from a command line.
//!
//! Random one-hot instances are checked at 64-bit precision with central
//! differences. The `perturb` hook deliberately corrupts one analytic
//! gradient entry so callers can confirm the check really can fail.

use super::{backward, forward, l2_loss, xavier_init, ModelParams, OUT_WIDTH};
use crate::error::{Error, Result};
use crate::rng::{substream, tag};

/// Central-difference step size.
pub const FD_STEP: f64 = 1e-5;

/// Largest acceptable relative error between analytic and numeric
/// derivatives.
pub const FD_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy)]
pub struct FdCheckConfig {
    pub n: usize,
    /// Input width; a multiple of 27 so inputs stay one-hot per block.
    pub d: usize,
    pub steps: usize,
    pub trials: usize,
    pub seed: u64,
    /// Offset added to one analytic gradient entry before comparison.
    /// Zero checks the real gradients; anything else is a negative
    /// control that must fail.
    pub perturb: f64,
}

impl Default for FdCheckConfig {
    fn default() -> Self {
        Self { n: 8, d: 27, steps: 5, trials: 5, seed: 0, perturb: 0.0 }
    }
}

/// Worst relative error seen per tensor, across all trials.
#[derive(Debug, Clone)]
pub struct FdCheckReport {
    pub per_tensor: Vec<(&'static str, f64)>,
    pub tolerance: f64,
}

impl FdCheckReport {
    pub fn passed(&self) -> bool {
        self.per_tensor.iter().all(|&(_, err)| err < self.tolerance)
    }
}

fn tensor_mut(params: &mut ModelParams<f64>, which: usize) -> &mut Vec<f64> {
    match which {
        0 => &mut params.tensors.w_gate,
        1 => &mut params.tensors.b_gate,
        2 => &mut params.tensors.w_out,
        _ => &mut params.tensors.b_out,
    }
}

/// Compare analytic gradients against central finite differences on
/// random one-hot instances.
pub fn finite_difference_check(config: FdCheckConfig) -> Result<FdCheckReport> {
    let FdCheckConfig { n, d, steps, trials, seed, perturb } = config;
    if n == 0 || steps == 0 || trials == 0 {
        return Err(Error::InvalidConfig("n, steps, and trials must be positive".into()));
    }
    if d == 0 || d % OUT_WIDTH != 0 {
        return Err(Error::InvalidConfig(format!(
            "input width must be a positive multiple of {OUT_WIDTH}, got {d}"
        )));
    }
    let mut worst = [0.0f64; 4];
    for trial in 0..trials {
        let mut rng = substream(seed, tag::INIT, trial as u64);
        let mut params: ModelParams<f64> = xavier_init(n, d, &mut rng);

        let mut x = vec![0.0f64; steps * d];
        for t in 0..steps {
            for block in 0..d / OUT_WIDTH {
                let sym = rng.below(OUT_WIDTH as u64) as usize;
                x[t * d + block * OUT_WIDTH + sym] = 1.0;
            }
        }
        let mut y = vec![0.0f64; steps * OUT_WIDTH];
        for t in 0..steps {
            let sym = rng.below(OUT_WIDTH as u64) as usize;
            y[t * OUT_WIDTH + sym] = 1.0;
        }

        let cache = forward(&params, &x);
        let mut grads = backward(&params, &cache, &y)?;
        grads.w_gate[0] += perturb;

        let analytic = [
            grads.w_gate.clone(),
            grads.b_gate.clone(),
            grads.w_out.clone(),
            grads.b_out.clone(),
        ];
        for which in 0..4 {
            for idx in 0..analytic[which].len() {
                let original = tensor_mut(&mut params, which)[idx];
                tensor_mut(&mut params, which)[idx] = original + FD_STEP;
                let plus = loss_of(&params, &x, &y, steps)?;
                tensor_mut(&mut params, which)[idx] = original - FD_STEP;
                let minus = loss_of(&params, &x, &y, steps)?;
                tensor_mut(&mut params, which)[idx] = original;
                let numeric = (plus - minus) / (2.0 * FD_STEP);
                let a = analytic[which][idx];
                let scale = a.abs().max(numeric.abs()).max(1e-6);
                let rel = (a - numeric).abs() / scale;
                if rel > worst[which] {
                    worst[which] = rel;
                }
            }
        }
    }
    Ok(FdCheckReport {
        per_tensor: ModelParams::<f64>::TENSOR_NAMES.iter().copied().zip(worst).collect(),
        tolerance: FD_TOLERANCE,
    })
}

fn loss_of(params: &ModelParams<f64>, x: &[f64], y: &[f64], steps: usize) -> Result<f64> {
    l2_loss(&forward(params, x).probs, y, steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_check_passes() {
        let report = finite_difference_check(FdCheckConfig::default()).unwrap();
        assert_eq!(report.per_tensor.len(), 4);
        assert!(report.passed(), "{:?}", report.per_tensor);
    }

    #[test]
    fn attack_width_passes() {
        let config = FdCheckConfig { n: 4, d: 54, steps: 4, trials: 2, ..Default::default() };
        let report = finite_difference_check(config).unwrap();
        assert!(report.passed(), "{:?}", report.per_tensor);
    }

    #[test]
    fn perturbed_gradient_fails() {
        let config = FdCheckConfig { perturb: 1e-2, trials: 1, ..Default::default() };
        let report = finite_difference_check(config).unwrap();
        assert!(!report.passed());
        assert!(report.per_tensor[0].1 >= FD_TOLERANCE, "{:?}", report.per_tensor);
    }

    #[test]
    fn rejects_bad_widths() {
        assert!(finite_difference_check(FdCheckConfig { d: 26, ..Default::default() }).is_err());
        assert!(finite_difference_check(FdCheckConfig { trials: 0, ..Default::default() })
            .is_err());
    }
}
