//! Batched training and evaluation passes.
//!
//! Batch elements run in parallel, but losses and gradients are reduced
//! sequentially in example order, so results are bit-identical regardless
//! of thread count.

use rayon::prelude::*;

use crate::encoding::{Batch, Sample};
use crate::error::Result;

use super::loss::{backward, l2_loss, region_counts, Region};
use super::model::{forward, Gradients, ModelParams, TensorSet};

/// Mean loss and mean gradients over a batch, plus all-steps accuracy
/// counts of the forward predictions.
pub struct BatchPass {
    pub loss: f32,
    pub grads: Gradients<f32>,
    pub correct_all: usize,
    pub total_all: usize,
}

/// Forward + backward over every example, averaged.
pub fn batch_forward_backward(params: &ModelParams<f32>, batch: &Batch) -> Result<BatchPass> {
    let per_example: Vec<(f32, Gradients<f32>, (usize, usize))> = (0..batch.size)
        .into_par_iter()
        .map(|b| -> Result<_> {
            let x = batch.x_of(b);
            let y = batch.y_of(b);
            let cache = forward(params, x);
            let loss = l2_loss(&cache.probs, y, cache.steps)?;
            let counts = region_counts(&cache.probs, y, cache.steps, Region::All)?;
            let grads = backward(params, &cache, y)?;
            Ok((loss, grads, counts))
        })
        .collect::<Result<_>>()?;

    let mut total = TensorSet::zeros(params.n, params.d);
    let mut loss_sum = 0.0f32;
    let (mut correct_all, mut total_all) = (0, 0);
    for (loss, grads, (correct, steps)) in &per_example {
        loss_sum += loss;
        total.add_assign(grads);
        correct_all += correct;
        total_all += steps;
    }
    let inv_b = 1.0 / batch.size as f32;
    total.scale(inv_b);
    Ok(BatchPass { loss: loss_sum * inv_b, grads: total, correct_all, total_all })
}

/// Accumulated evaluation results over a sample set.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalAccum {
    pub samples: usize,
    pub loss_sum: f64,
    pub key: (usize, usize),
    pub message: (usize, usize),
    pub all: (usize, usize),
}

impl EvalAccum {
    pub fn mean_loss(&self) -> f64 {
        self.loss_sum / self.samples.max(1) as f64
    }

    fn ratio((correct, total): (usize, usize)) -> f64 {
        correct as f64 / total.max(1) as f64
    }

    pub fn acc_key(&self) -> f64 {
        Self::ratio(self.key)
    }

    pub fn acc_message(&self) -> f64 {
        Self::ratio(self.message)
    }

    pub fn acc_all(&self) -> f64 {
        Self::ratio(self.all)
    }

    /// Accuracy over the steps this task is scored on.
    pub fn acc_region(&self, region: Region) -> f64 {
        match region {
            Region::Key => self.acc_key(),
            Region::Message => self.acc_message(),
            Region::All => self.acc_all(),
        }
    }
}

/// Greedy-decoding evaluation over a sample set. Character counts are
/// pooled across samples, so the result is a per-character accuracy.
/// Message-region counts stay (0, 0) when no sample extends past the key
/// prefix.
pub fn evaluate_samples(params: &ModelParams<f32>, samples: &[Sample]) -> Result<EvalAccum> {
    let per_sample: Vec<(f64, [(usize, usize); 3])> = samples
        .par_iter()
        .map(|s| -> Result<_> {
            let cache = forward(params, &s.x.data);
            let y = &s.y.data;
            let loss = l2_loss(&cache.probs, y, cache.steps)? as f64;
            let key = region_counts(&cache.probs, y, cache.steps, Region::Key)?;
            let message = if cache.steps > crate::encoding::KEY_STEPS {
                region_counts(&cache.probs, y, cache.steps, Region::Message)?
            } else {
                (0, 0)
            };
            let all = region_counts(&cache.probs, y, cache.steps, Region::All)?;
            Ok((loss, [key, message, all]))
        })
        .collect::<Result<_>>()?;

    let mut accum = EvalAccum::default();
    for (loss, [key, message, all]) in per_sample {
        accum.samples += 1;
        accum.loss_sum += loss;
        accum.key = (accum.key.0 + key.0, accum.key.1 + key.1);
        accum.message = (accum.message.0 + message.0, accum.message.1 + message.1);
        accum.all = (accum.all.0 + all.0, accum.all.1 + all.1);
    }
    Ok(accum)
}
