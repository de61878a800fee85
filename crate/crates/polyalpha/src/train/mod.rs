//! Training orchestration: the step loop, periodic evaluation, metrics,
//! and early stopping.
//!
//! A run is a pure function of its configuration: data comes from
//! counter-based streams, initialization from the seed's init stream, and
//! batch reduction is order-fixed, so the metrics log reproduces
//! bit-identically for a fixed seed, configuration, and thread count
//! (wallclock excepted). Checkpoints restore mid-run training exactly
//! when taken at record boundaries, which is the only place the trainer
//! writes them.

mod checkpoint;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::alphabet::KeyPhrase;
use crate::datagen::{eval_set, GenConfig, SampleStream, Task};
use crate::encoding::Sample;
use crate::error::{Error, Result};
use crate::nn::{
    adam_step, batch_forward_backward, evaluate_samples, xavier_init, AdamState, EvalAccum,
    ModelParams, Region,
};
use crate::rng::{substream, tag};

/// Everything a training run needs. Serializes flat (data-generation
/// fields sit beside the trainer's own) so config files stay shallow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    #[serde(flatten)]
    pub gen: GenConfig,
    pub hidden_size: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub max_steps: u64,
    /// Steps between evaluations and metric records.
    pub eval_every: u64,
    /// Samples per evaluation set.
    pub eval_count: usize,
    /// Stop at the first evaluation whose scored-region accuracy reaches
    /// this value.
    pub target_accuracy: f64,
    /// Optional max gradient norm; exceeding gradients are rescaled.
    pub clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gen: GenConfig::default(),
            hidden_size: 128,
            batch_size: 50,
            lr: 5e-4,
            max_steps: 50_000,
            eval_every: 500,
            eval_count: 50,
            target_accuracy: 0.99,
            clip: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.gen.validate()?;
        if self.hidden_size == 0 || self.batch_size == 0 || self.max_steps == 0 {
            return Err(Error::InvalidConfig(
                "hidden_size, batch_size, and max_steps must be positive".into(),
            ));
        }
        if self.eval_every == 0 || self.eval_every > self.max_steps {
            return Err(Error::InvalidConfig(format!(
                "eval_every ({}) must be in 1..=max_steps ({})",
                self.eval_every, self.max_steps
            )));
        }
        if self.eval_count == 0 {
            return Err(Error::InvalidConfig("eval_count must be positive".into()));
        }
        if !(self.lr > 0.0) || !(self.target_accuracy > 0.0) {
            return Err(Error::InvalidConfig("lr and target_accuracy must be positive".into()));
        }
        if let Some(clip) = self.clip {
            if !(clip > 0.0) {
                return Err(Error::InvalidConfig("clip must be positive when set".into()));
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.gen.seed
    }

    /// The region training is scored on: recovered message characters for
    /// decryption, key slots for the attack task.
    pub fn scored_region(&self) -> Region {
        match self.gen.task {
            Task::Decrypt => Region::Message,
            Task::Attack => Region::Key,
        }
    }

    /// The held-out key used for the unseen-key evaluation column, if any.
    pub fn unseen_key(&self) -> Option<KeyPhrase> {
        let text = self.gen.holdout_keys.first()?;
        let key: KeyPhrase = text.parse().ok()?;
        (self.gen.key_len_min..=self.gen.key_len_max)
            .contains(&key.len())
            .then_some(key)
    }
}

/// One metrics row. Training columns are means over the steps since the
/// previous record; evaluation columns come from fixed eval sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRecord {
    pub step: u64,
    pub train_loss: f64,
    pub train_acc_all: f64,
    pub eval_acc_message: f64,
    pub eval_acc_all: f64,
    pub eval_acc_unseen_key: f64,
    pub grad_norm: f64,
    pub wallclock_seconds: f64,
}

pub const METRICS_HEADER: &str =
    "step,train_loss,train_acc_all,eval_acc_message,eval_acc_all,eval_acc_unseen_key,grad_norm,wallclock_seconds";

impl MetricsRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.step,
            self.train_loss,
            self.train_acc_all,
            self.eval_acc_message,
            self.eval_acc_all,
            self.eval_acc_unseen_key,
            self.grad_norm,
            self.wallclock_seconds
        )
    }
}

/// Final state of a finished run.
pub struct RunSummary {
    pub steps: u64,
    pub stopped_early: bool,
    pub final_eval: EvalAccum,
}

struct Window {
    loss_sum: f64,
    acc_sum: f64,
    grad_norm_sum: f64,
    steps: u64,
}

impl Window {
    fn new() -> Self {
        Self { loss_sum: 0.0, acc_sum: 0.0, grad_norm_sum: 0.0, steps: 0 }
    }
}

/// A live training run.
pub struct Trainer {
    config: TrainConfig,
    params: ModelParams<f32>,
    adam: AdamState<f32>,
    stream: SampleStream,
    step: u64,
    eval_seen: Vec<Sample>,
    eval_unseen: Option<Vec<Sample>>,
    window: Window,
    started: Instant,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let mut init_rng = substream(config.seed(), tag::INIT, 0);
        let params = xavier_init(config.hidden_size, config.gen.input_width(), &mut init_rng);
        let adam = AdamState::new(config.hidden_size, config.gen.input_width());
        Self::assemble(config, params, adam, 0, 0)
    }

    /// Resume from a record-boundary checkpoint.
    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        Self::assemble(ck.config, ck.params, ck.adam, ck.step, ck.data_cursor)
    }

    fn assemble(
        config: TrainConfig,
        params: ModelParams<f32>,
        adam: AdamState<f32>,
        step: u64,
        cursor: u64,
    ) -> Result<Self> {
        config.validate()?;
        let expect_d = config.gen.input_width();
        if params.n != config.hidden_size || params.d != expect_d {
            return Err(Error::ShapeMismatch(format!(
                "model is {}x{} but config wants hidden {} and input {}",
                params.n, params.d, config.hidden_size, expect_d
            )));
        }
        let eval_seen = eval_set(&config.gen, config.eval_count, None)?;
        let eval_unseen = match config.unseen_key() {
            Some(key) => Some(eval_set(&config.gen, config.eval_count, Some(&key))?),
            None => None,
        };
        let mut stream = SampleStream::new(config.gen.clone())?;
        stream.seek(cursor);
        Ok(Self {
            config,
            params,
            adam,
            stream,
            step,
            eval_seen,
            eval_unseen,
            window: Window::new(),
            started: Instant::now(),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn params(&self) -> &ModelParams<f32> {
        &self.params
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.clone(),
            params: self.params.clone(),
            adam: self.adam.clone(),
            step: self.step,
            data_cursor: self.stream.cursor(),
        }
    }

    fn evaluate(&self) -> Result<(EvalAccum, f64)> {
        let seen = evaluate_samples(&self.params, &self.eval_seen)?;
        let unseen = match &self.eval_unseen {
            Some(samples) => {
                evaluate_samples(&self.params, samples)?.acc_region(self.config.scored_region())
            }
            None => f64::NAN,
        };
        Ok((seen, unseen))
    }

    fn record(&self, seen: EvalAccum, unseen_acc: f64) -> MetricsRecord {
        let steps = self.window.steps.max(1) as f64;
        MetricsRecord {
            step: self.step,
            train_loss: self.window.loss_sum / steps,
            train_acc_all: self.window.acc_sum / steps,
            eval_acc_message: seen.acc_message(),
            eval_acc_all: seen.acc_all(),
            eval_acc_unseen_key: unseen_acc,
            grad_norm: self.window.grad_norm_sum / steps,
            wallclock_seconds: self.started.elapsed().as_secs_f64(),
        }
    }

    /// Train until the accuracy target or `max_steps`, emitting one
    /// record per `eval_every` steps. A non-finite loss emits a final
    /// diagnostic record and fails.
    pub fn run(&mut self, on_record: impl FnMut(&MetricsRecord)) -> Result<RunSummary> {
        let remaining = self.config.max_steps - self.step;
        self.run_for(remaining, on_record)
    }

    /// Like [`run`](Self::run) but stops after at most `max_new_steps`
    /// further steps, for interrupting a run at a record boundary.
    pub fn run_for(
        &mut self,
        max_new_steps: u64,
        mut on_record: impl FnMut(&MetricsRecord),
    ) -> Result<RunSummary> {
        let mut stopped_early = false;
        let limit = self.config.max_steps.min(self.step + max_new_steps);
        while self.step < limit {
            let batch = self.stream.next_batch(self.config.batch_size)?;
            let pass = batch_forward_backward(&self.params, &batch)?;
            if !pass.loss.is_finite() {
                let diagnostic = MetricsRecord {
                    step: self.step + 1,
                    train_loss: pass.loss as f64,
                    train_acc_all: f64::NAN,
                    eval_acc_message: f64::NAN,
                    eval_acc_all: f64::NAN,
                    eval_acc_unseen_key: f64::NAN,
                    grad_norm: pass.grads.sq_norm().sqrt(),
                    wallclock_seconds: self.started.elapsed().as_secs_f64(),
                };
                on_record(&diagnostic);
                return Err(Error::NonFinite(format!(
                    "loss became non-finite at step {}",
                    self.step + 1
                )));
            }
            let mut grads = pass.grads;
            let grad_norm = grads.sq_norm().sqrt();
            if let Some(clip) = self.config.clip {
                if grad_norm > clip {
                    grads.scale((clip / grad_norm) as f32);
                    eprintln!(
                        "step {}: gradient norm {grad_norm:.3} clipped to {clip}",
                        self.step + 1
                    );
                }
            }
            adam_step(&mut self.params, &grads, &mut self.adam, self.config.lr);
            self.step += 1;

            self.window.loss_sum += pass.loss as f64;
            self.window.acc_sum += pass.correct_all as f64 / pass.total_all as f64;
            self.window.grad_norm_sum += grad_norm;
            self.window.steps += 1;

            if self.step % self.config.eval_every == 0 {
                let (seen, unseen_acc) = self.evaluate()?;
                let record = self.record(seen, unseen_acc);
                on_record(&record);
                self.window = Window::new();
                if seen.acc_region(self.config.scored_region()) >= self.config.target_accuracy {
                    stopped_early = true;
                    break;
                }
            }
        }
        let (final_eval, _) = self.evaluate()?;
        Ok(RunSummary { steps: self.step, stopped_early, final_eval })
    }
}

/// Accuracy of a trained model over a fresh fixed-seed evaluation set.
pub fn evaluate_model(
    params: &ModelParams<f32>,
    gen: &GenConfig,
    count: usize,
    fixed_key: Option<&KeyPhrase>,
) -> Result<EvalAccum> {
    if params.d != gen.input_width() {
        return Err(Error::ShapeMismatch(format!(
            "model input width {} does not fit task width {}",
            params.d,
            gen.input_width()
        )));
    }
    let samples = eval_set(gen, count, fixed_key)?;
    evaluate_samples(params, &samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            gen: GenConfig { seed: 7, message_len: 5, key_len_min: 1, key_len_max: 2, ..GenConfig::default() },
            hidden_size: 16,
            batch_size: 4,
            max_steps: 40,
            eval_every: 10,
            eval_count: 5,
            lr: 2e-3,
            ..TrainConfig::default()
        }
    }

    /// CSV row with the wallclock column removed; also sidesteps NaN
    /// comparisons in the unseen-key column when no holdout applies.
    fn csv_without_wallclock(r: &MetricsRecord) -> String {
        r.to_csv_row().rsplit_once(',').unwrap().0.to_string()
    }

    #[test]
    fn identical_runs_produce_identical_records() {
        let mut records_a = Vec::new();
        let mut records_b = Vec::new();
        Trainer::new(tiny_config()).unwrap().run(|r| records_a.push(*r)).unwrap();
        Trainer::new(tiny_config()).unwrap().run(|r| records_b.push(*r)).unwrap();
        assert_eq!(records_a.len(), 4);
        for (a, b) in records_a.iter().zip(&records_b) {
            assert_eq!(csv_without_wallclock(a), csv_without_wallclock(b));
        }
    }

    #[test]
    fn loss_window_decreases_during_overfit_phase() {
        let mut records = Vec::new();
        Trainer::new(tiny_config()).unwrap().run(|r| records.push(*r)).unwrap();
        assert!(records.last().unwrap().train_loss < records.first().unwrap().train_loss);
    }

    #[test]
    fn resume_from_checkpoint_matches_uninterrupted_run() {
        let config = tiny_config();
        let mut full = Vec::new();
        Trainer::new(config.clone()).unwrap().run(|r| full.push(*r)).unwrap();

        // Stop at the second record boundary, checkpoint, resume.
        let mut trainer = Trainer::new(config).unwrap();
        let mut head = Vec::new();
        trainer.run_for(20, |r| head.push(*r)).unwrap();
        assert_eq!(trainer.step(), 20);
        assert_eq!(head.len(), 2);

        let mut resumed = Trainer::from_checkpoint(trainer.checkpoint()).unwrap();
        let mut tail = Vec::new();
        resumed.run(|r| tail.push(*r)).unwrap();

        let merged: Vec<String> = head.iter().chain(&tail).map(csv_without_wallclock).collect();
        let expect: Vec<String> = full.iter().map(csv_without_wallclock).collect();
        assert_eq!(merged, expect);
    }

    #[test]
    fn validates_configs() {
        let mut c = tiny_config();
        c.eval_every = 100;
        assert!(c.validate().is_err());
        c = tiny_config();
        c.hidden_size = 0;
        assert!(c.validate().is_err());
        c = tiny_config();
        c.lr = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn unseen_key_respects_length_range() {
        let mut c = tiny_config();
        assert!(c.unseen_key().is_none(), "KEY is outside the 1..=2 length range");
        c.gen.key_len_max = 6;
        assert_eq!(c.unseen_key().unwrap().as_str(), "KEY");
        c.gen.holdout_keys.clear();
        assert!(c.unseen_key().is_none());
    }
}
