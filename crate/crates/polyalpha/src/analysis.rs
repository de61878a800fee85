//! Post-training analysis: length-generalization curves, memory-cell
//! inspection, hidden-size sweeps, and key-recovery scoring.
//!
//! Every function here is a pure function of a parameter snapshot and a
//! configuration, so outputs reproduce bit-identically. Rendering stops at
//! CSV strings; callers decide where files go.

use rayon::prelude::*;

use crate::alphabet::letter_index;
use crate::datagen::{eval_set, GenConfig, Task};
use crate::encoding::{argmax, Sample, ATTACK_WIDTH, KEY_STEPS};
use crate::error::{Error, Result};
use crate::nn::{evaluate_samples, forward, ModelParams, OUT_WIDTH};
use crate::train::{MetricsRecord, TrainConfig, Trainer, METRICS_HEADER};

/// Message-region accuracy at each evaluated message length.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizationCurve {
    /// `(message_length, message-region accuracy)` rows, lengths increasing.
    pub rows: Vec<(usize, f64)>,
}

impl GeneralizationCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("length,accuracy\n");
        for &(len, acc) in &self.rows {
            out.push_str(&format!("{len},{acc}\n"));
        }
        out
    }
}

/// Evaluate one model at several message lengths, `count` fresh samples
/// per length, holding everything else in `gen` fixed.
pub fn generalization_curve(
    params: &ModelParams<f32>,
    gen: &GenConfig,
    lengths: &[usize],
    count: usize,
) -> Result<GeneralizationCurve> {
    if lengths.is_empty() || lengths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "lengths must be nonempty and strictly increasing".into(),
        ));
    }
    if count == 0 {
        return Err(Error::InvalidConfig("count must be positive".into()));
    }
    if params.d != gen.input_width() {
        return Err(Error::ShapeMismatch(format!(
            "model input width {} does not fit task width {}",
            params.d,
            gen.input_width()
        )));
    }
    let mut rows = Vec::with_capacity(lengths.len());
    for &len in lengths {
        let mut at_len = gen.clone();
        at_len.message_len = len;
        let eval = evaluate_samples(params, &eval_set(&at_len, count, None)?)?;
        rows.push((len, eval.acc_message()));
    }
    Ok(GeneralizationCurve { rows })
}

/// Euclidean norm of the memory cell at every step of one sample, with a
/// least-squares line fitted to norm versus step.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryNormCurve {
    pub norms: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Fraction of norm variance the line explains; a flat series that the
    /// line matches exactly reports 1.
    pub r_squared: f64,
}

impl MemoryNormCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,norm\n");
        for (t, norm) in self.norms.iter().enumerate() {
            out.push_str(&format!("{t},{norm}\n"));
        }
        out
    }
}

/// Ordinary least squares of `ys` against `0..len`, returning
/// `(slope, intercept, r_squared)`.
fn linear_fit(ys: &[f64]) -> (f64, f64, f64) {
    let n = ys.len() as f64;
    let mean_t = (ys.len() - 1) as f64 / 2.0;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_t = 0.0;
    for (t, &y) in ys.iter().enumerate() {
        let dt = t as f64 - mean_t;
        cov += dt * (y - mean_y);
        var_t += dt * dt;
    }
    let slope = cov / var_t;
    let intercept = mean_y - slope * mean_t;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (t, &y) in ys.iter().enumerate() {
        let fit = intercept + slope * t as f64;
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r_squared = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    (slope, intercept, r_squared)
}

/// Run one sample through the model and report how the memory-cell norm
/// grows over time.
pub fn memory_norm_curve(params: &ModelParams<f32>, sample: &Sample) -> Result<MemoryNormCurve> {
    if sample.x.width != params.d {
        return Err(Error::ShapeMismatch(format!(
            "sample width {} does not fit model input width {}",
            sample.x.width, params.d
        )));
    }
    if sample.steps() < 2 {
        return Err(Error::InvalidConfig("need at least two steps to fit a line".into()));
    }
    let cache = forward(params, &sample.x.data);
    let norms: Vec<f64> = (0..cache.steps)
        .map(|t| cache.cell(t).iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>().sqrt())
        .collect();
    let (slope, intercept, r_squared) = linear_fit(&norms);
    Ok(MemoryNormCurve { norms, slope, intercept, r_squared })
}

/// Per-step view of selected memory-cell units alongside the characters
/// flowing through the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrace {
    pub unit_ids: Vec<usize>,
    pub steps: Vec<TraceStep>,
}

/// One timestep of an [`ActivationTrace`].
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub t: usize,
    /// Decoded input character(s): one character for decryption rows, the
    /// plaintext and ciphertext pair for attack rows.
    pub input: String,
    /// The model's argmax output character.
    pub output: char,
    /// Caesar distance from plaintext to ciphertext at this step — the
    /// keystream value the cipher applied there. Empty on key-prefix and
    /// padding steps, which carry no message pair.
    pub net_shift: Option<u8>,
    /// Memory-cell values for `unit_ids`, in order.
    pub memory: Vec<f32>,
}

impl ActivationTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,input_char,output_char,net_shift");
        for id in &self.unit_ids {
            out.push_str(&format!(",unit_{id}"));
        }
        out.push('\n');
        for step in &self.steps {
            out.push_str(&format!("{},{},{}", step.t, step.input, step.output));
            match step.net_shift {
                Some(shift) => out.push_str(&format!(",{shift}")),
                None => out.push(','),
            }
            for v in &step.memory {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

fn shift_between(plain: char, cipher: char) -> u8 {
    let p = letter_index(plain).expect("validated sample plaintext");
    let c = letter_index(cipher).expect("validated sample ciphertext");
    ((c + 26 - p) % 26) as u8
}

/// Net shift for step `t` of a sample, when that step carries a
/// plaintext/ciphertext pair.
fn net_shift_at(sample: &Sample, t: usize) -> Option<u8> {
    let chars = |s: &str, i: usize| s.chars().nth(i);
    if sample.x.width == ATTACK_WIDTH {
        Some(shift_between(chars(&sample.plaintext, t)?, chars(&sample.ciphertext, t)?))
    } else {
        let i = t.checked_sub(KEY_STEPS)?;
        Some(shift_between(chars(&sample.plaintext, i)?, chars(&sample.ciphertext, i)?))
    }
}

/// Record the chosen memory-cell units at every step of one sample. An
/// empty `unit_ids` selects all units.
pub fn trace_activations(
    params: &ModelParams<f32>,
    sample: &Sample,
    unit_ids: &[usize],
) -> Result<ActivationTrace> {
    if sample.x.width != params.d {
        return Err(Error::ShapeMismatch(format!(
            "sample width {} does not fit model input width {}",
            sample.x.width, params.d
        )));
    }
    if let Some(&bad) = unit_ids.iter().find(|&&id| id >= params.n) {
        return Err(Error::InvalidConfig(format!(
            "unit id {bad} out of range for hidden size {}",
            params.n
        )));
    }
    let unit_ids: Vec<usize> =
        if unit_ids.is_empty() { (0..params.n).collect() } else { unit_ids.to_vec() };
    let cache = forward(params, &sample.x.data);
    let steps = (0..cache.steps)
        .map(|t| {
            let cell = cache.cell(t);
            let probs = &cache.probs[t * OUT_WIDTH..(t + 1) * OUT_WIDTH];
            TraceStep {
                t,
                input: sample
                    .x
                    .row(t)
                    .chunks_exact(OUT_WIDTH)
                    .map(crate::encoding::decode_symbol)
                    .collect(),
                output: crate::encoding::decode_symbol(probs),
                net_shift: net_shift_at(sample, t),
                memory: unit_ids.iter().map(|&id| cell[id]).collect(),
            }
        })
        .collect();
    Ok(ActivationTrace { unit_ids, steps })
}

/// One hidden size's training outcome within a sweep.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub hidden_size: usize,
    pub records: Vec<MetricsRecord>,
    /// Step of the first evaluation that reached the configured accuracy
    /// target, or `None` if the run exhausted its steps first.
    pub steps_to_threshold: Option<u64>,
    /// Scored-region accuracy of the final evaluation.
    pub final_accuracy: f64,
}

impl SweepEntry {
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from(METRICS_HEADER);
        out.push('\n');
        for record in &self.records {
            out.push_str(&record.to_csv_row());
            out.push('\n');
        }
        out
    }
}

/// Results of [`memory_sweep`], one entry per hidden size.
#[derive(Debug, Clone)]
pub struct MemorySweep {
    pub entries: Vec<SweepEntry>,
}

impl MemorySweep {
    /// One line per size; runs that never reached the accuracy target get
    /// a `did_not_reach` marker instead of a step count.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("hidden_size,steps_to_threshold,final_accuracy\n");
        for entry in &self.entries {
            let steps = match entry.steps_to_threshold {
                Some(s) => s.to_string(),
                None => "did_not_reach".to_string(),
            };
            out.push_str(&format!("{},{},{}\n", entry.hidden_size, steps, entry.final_accuracy));
        }
        out
    }
}

/// Train one model per hidden size from the same base configuration. The
/// shared seed means every size sees identical training batches; the
/// threshold is the base config's accuracy target.
pub fn memory_sweep(base: &TrainConfig, sizes: &[usize]) -> Result<MemorySweep> {
    if sizes.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one hidden size".into()));
    }
    let mut entries = Vec::with_capacity(sizes.len());
    for &hidden_size in sizes {
        let mut config = base.clone();
        config.hidden_size = hidden_size;
        let mut trainer = Trainer::new(config.clone())?;
        let mut records = Vec::new();
        let summary = trainer.run(|r| records.push(*r))?;
        entries.push(SweepEntry {
            hidden_size,
            records,
            steps_to_threshold: summary.stopped_early.then_some(summary.steps),
            final_accuracy: summary.final_eval.acc_region(config.scored_region()),
        });
    }
    Ok(MemorySweep { entries })
}

/// Key-recovery quality over an attack-task evaluation set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackReport {
    pub samples: usize,
    /// Fraction of correct predictions over the six key slots of every
    /// sample. Null padding slots count: the model must get the key's
    /// length right, not just its letters.
    pub per_char_accuracy: f64,
    /// Fraction of samples whose six slots are all correct.
    pub exact_key_rate: f64,
}

/// Score a model trained on the attack task against `count` fresh samples.
pub fn attack_eval(
    params: &ModelParams<f32>,
    gen: &GenConfig,
    count: usize,
) -> Result<AttackReport> {
    if gen.task != Task::Attack {
        return Err(Error::InvalidConfig("attack_eval needs an attack-task config".into()));
    }
    if params.d != ATTACK_WIDTH {
        return Err(Error::ShapeMismatch(format!(
            "model input width {} but attack samples are {ATTACK_WIDTH} wide",
            params.d
        )));
    }
    if count == 0 {
        return Err(Error::InvalidConfig("count must be positive".into()));
    }
    let samples = eval_set(gen, count, None)?;
    let (char_hits, exact_hits) = samples
        .par_iter()
        .map(|sample| {
            let cache = forward(params, &sample.x.data);
            let mut hits = 0usize;
            for t in 0..KEY_STEPS {
                let probs = &cache.probs[t * OUT_WIDTH..(t + 1) * OUT_WIDTH];
                if argmax(probs) == argmax(sample.y.row(t)) {
                    hits += 1;
                }
            }
            (hits, usize::from(hits == KEY_STEPS))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(AttackReport {
        samples: count,
        per_char_accuracy: char_hits as f64 / (count * KEY_STEPS) as f64,
        exact_key_rate: exact_hits as f64 / count as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::KeyPhrase;
    use crate::cipher::{autokey_encrypt, vigenere_encrypt};
    use crate::encoding::build_decryption_sample;
    use crate::nn::xavier_init;
    use crate::rng::{substream, tag};

    fn untrained(n: usize, d: usize) -> ModelParams<f32> {
        let mut rng = substream(5, tag::INIT, 0);
        xavier_init(n, d, &mut rng)
    }

    #[test]
    fn untrained_curve_sits_at_chance_at_every_length() {
        let params = untrained(8, 27);
        let gen = GenConfig { seed: 5, ..GenConfig::default() };
        let curve = generalization_curve(&params, &gen, &[10, 20], 50).unwrap();
        assert_eq!(curve.rows.len(), 2);
        for &(_, acc) in &curve.rows {
            assert!((0.0..0.12).contains(&acc), "chance-level accuracy, got {acc}");
        }
        let again = generalization_curve(&params, &gen, &[10, 20], 50).unwrap();
        assert_eq!(curve, again);
    }

    #[test]
    fn curve_at_training_length_matches_plain_evaluation() {
        let params = untrained(8, 27);
        let gen = GenConfig { seed: 9, message_len: 14, ..GenConfig::default() };
        let curve = generalization_curve(&params, &gen, &[14], 30).unwrap();
        let eval = evaluate_samples(&params, &eval_set(&gen, 30, None).unwrap()).unwrap();
        assert_eq!(curve.rows[0].1, eval.acc_message());
        assert!(curve.to_csv().starts_with("length,accuracy\n14,"));
    }

    #[test]
    fn curve_rejects_bad_requests() {
        let params = untrained(8, 27);
        let gen = GenConfig::default();
        assert!(generalization_curve(&params, &gen, &[], 10).is_err());
        assert!(generalization_curve(&params, &gen, &[20, 10], 10).is_err());
        assert!(generalization_curve(&params, &gen, &[10, 10], 10).is_err());
        let wide = untrained(8, 54);
        assert!(generalization_curve(&wide, &gen, &[10], 10).is_err());
    }

    #[test]
    fn zero_model_has_zero_norms_and_exact_flat_fit() {
        let params = ModelParams::<f32>::zeros(8, 27);
        let key: KeyPhrase = "B".parse().unwrap();
        let cipher = vigenere_encrypt(&key, "HELLOWORLD").unwrap();
        let sample = build_decryption_sample(&key, "HELLOWORLD", &cipher).unwrap();
        let curve = memory_norm_curve(&params, &sample).unwrap();
        assert!(curve.norms.iter().all(|&v| v == 0.0));
        assert_eq!(curve.slope, 0.0);
        assert_eq!(curve.r_squared, 1.0);
        assert_eq!(curve.norms.len(), sample.steps());
    }

    #[test]
    fn norms_nonnegative_on_random_model() {
        let params = untrained(12, 27);
        let key: KeyPhrase = "KEY".parse().unwrap();
        let cipher = vigenere_encrypt(&key, "ATTACKATDAWN").unwrap();
        let sample = build_decryption_sample(&key, "ATTACKATDAWN", &cipher).unwrap();
        let curve = memory_norm_curve(&params, &sample).unwrap();
        assert!(curve.norms.iter().all(|&v| v >= 0.0));
        assert!(curve.to_csv().starts_with("t,norm\n0,"));
    }

    #[test]
    fn linear_fit_recovers_exact_line() {
        let (slope, intercept, r2) = linear_fit(&[1.0, 3.0, 5.0, 7.0]);
        assert!((slope - 2.0).abs() < 1e-12);
        assert!((intercept - 1.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
        let (_, _, r2_noisy) = linear_fit(&[0.0, 5.0, 1.0, 6.0]);
        assert!(r2_noisy < 1.0);
    }

    #[test]
    fn vigenere_single_letter_key_has_constant_net_shift() {
        let params = untrained(6, 27);
        let key: KeyPhrase = "B".parse().unwrap();
        let cipher = vigenere_encrypt(&key, "HELLO").unwrap();
        let sample = build_decryption_sample(&key, "HELLO", &cipher).unwrap();
        let trace = trace_activations(&params, &sample, &[]).unwrap();
        assert_eq!(trace.unit_ids, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(trace.steps.len(), sample.steps());
        for step in &trace.steps {
            if step.t < KEY_STEPS {
                assert_eq!(step.net_shift, None);
            } else {
                assert_eq!(step.net_shift, Some(1));
            }
            assert_eq!(step.memory.len(), 6);
        }
        assert_eq!(trace.steps[0].input, "B");
        assert_eq!(trace.steps[1].input, "-");
        assert_eq!(trace.steps[6].input, cipher.chars().next().unwrap().to_string());
    }

    #[test]
    fn autokey_net_shift_tracks_the_plaintext() {
        let params = untrained(4, 27);
        let key: KeyPhrase = "B".parse().unwrap();
        let cipher = autokey_encrypt(&key, "HELLO").unwrap();
        let sample = build_decryption_sample(&key, "HELLO", &cipher).unwrap();
        let trace = trace_activations(&params, &sample, &[1, 3]).unwrap();
        let shifts: Vec<u8> =
            trace.steps.iter().filter_map(|s| s.net_shift).collect();
        // Keystream is the key then the plaintext itself: B,H,E,L,L.
        assert_eq!(shifts, vec![1, 7, 4, 11, 11]);
        assert_eq!(trace.unit_ids, vec![1, 3]);
        assert!(trace.to_csv().lines().next().unwrap().ends_with("net_shift,unit_1,unit_3"));
    }

    #[test]
    fn trace_rejects_out_of_range_units() {
        let params = untrained(4, 27);
        let key: KeyPhrase = "B".parse().unwrap();
        let cipher = vigenere_encrypt(&key, "HI").unwrap();
        let sample = build_decryption_sample(&key, "HI", &cipher).unwrap();
        assert!(trace_activations(&params, &sample, &[4]).is_err());
    }

    #[test]
    fn sweep_reports_thresholds_and_shares_data_streams() {
        let base = TrainConfig {
            gen: GenConfig { seed: 11, message_len: 4, key_len_max: 2, ..GenConfig::default() },
            batch_size: 4,
            max_steps: 20,
            eval_every: 10,
            eval_count: 5,
            target_accuracy: 0.995,
            ..TrainConfig::default()
        };
        let sweep = memory_sweep(&base, &[4, 8]).unwrap();
        assert_eq!(sweep.entries.len(), 2);
        for entry in &sweep.entries {
            assert_eq!(entry.records.len(), 2);
            assert_eq!(entry.steps_to_threshold, None);
            assert_eq!(entry.metrics_csv().lines().count(), 3);
        }
        let summary = sweep.summary_csv();
        assert!(summary.contains("did_not_reach"));

        // An easily-reached threshold stops at the first evaluation; the
        // larger eval set keeps chance accuracy clear of the threshold.
        let mut easy = base.clone();
        easy.target_accuracy = 0.005;
        easy.eval_count = 50;
        let stopped = memory_sweep(&easy, &[4]).unwrap();
        assert_eq!(stopped.entries[0].steps_to_threshold, Some(10));
        assert!(stopped.summary_csv().contains("\n4,10,"));
    }

    #[test]
    fn attack_eval_scores_untrained_model_near_chance() {
        let params = untrained(8, 54);
        let gen = GenConfig { task: Task::Attack, seed: 3, ..GenConfig::default() };
        let report = attack_eval(&params, &gen, 60).unwrap();
        assert_eq!(report.samples, 60);
        assert!(report.exact_key_rate <= report.per_char_accuracy);
        assert!((0.0..=0.5).contains(&report.per_char_accuracy));

        // The slot metric agrees with the pooled key-region evaluation.
        let eval = evaluate_samples(&params, &eval_set(&gen, 60, None).unwrap()).unwrap();
        assert_eq!(report.per_char_accuracy, eval.acc_region(crate::nn::Region::Key));

        let again = attack_eval(&params, &gen, 60).unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn attack_eval_rejects_mismatched_setups() {
        let gen = GenConfig { task: Task::Attack, ..GenConfig::default() };
        assert!(attack_eval(&untrained(8, 27), &gen, 10).is_err());
        let decrypt = GenConfig::default();
        assert!(attack_eval(&untrained(8, 54), &decrypt, 10).is_err());
        assert!(attack_eval(&untrained(8, 54), &gen, 0).is_err());
    }
}
