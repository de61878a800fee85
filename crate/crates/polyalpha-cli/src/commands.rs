//! Implementations of the subcommands.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use polyalpha::alphabet::KeyPhrase;
use polyalpha::analysis::{
    attack_eval, generalization_curve, memory_norm_curve, memory_sweep, trace_activations,
    MemorySweep,
};
use polyalpha::datagen::{eval_set, CipherKind};
use polyalpha::nn::{finite_difference_check, FdCheckConfig};
use polyalpha::train::{
    evaluate_model, load_checkpoint, save_checkpoint, Trainer, METRICS_HEADER,
};

use crate::config::{load_train_config, override_config, parse_list};
use crate::manifest::{OutDir, RunManifest};
use crate::{
    AttackArgs, CipherArgs, CliError, EvalArgs, GradcheckArgs, SweepArgs, TraceArgs, TrainArgs,
};

pub fn cipher(args: CipherArgs) -> Result<(), CliError> {
    let kind = match args.cipher.to_ascii_lowercase().as_str() {
        "vigenere" => CipherKind::Vigenere,
        "autokey" => CipherKind::Autokey,
        "enigma" => CipherKind::Enigma,
        other => {
            return Err(CliError::Config(format!(
                "unknown cipher {other:?}; expected vigenere, autokey, or enigma"
            )))
        }
    };
    let key: KeyPhrase = args.key.to_ascii_uppercase().parse()?;
    let text = args.text.to_ascii_uppercase();
    let output =
        if args.encrypt { kind.encrypt(&key, &text) } else { kind.decrypt(&key, &text) }?;
    println!("{output}");
    Ok(())
}

fn open_metrics(path: &Path, resume: bool) -> Result<File, CliError> {
    if resume && path.exists() {
        Ok(OpenOptions::new().append(true).open(path)?)
    } else {
        let mut file = File::create(path)?;
        writeln!(file, "{METRICS_HEADER}")?;
        Ok(file)
    }
}

pub fn train(args: TrainArgs) -> Result<(), CliError> {
    let (mut trainer, resumed) = match &args.resume {
        Some(path) => {
            let mut ck = load_checkpoint(path)?;
            if !args.set.is_empty() {
                ck.config = override_config(&ck.config, &args.set)?;
            }
            (Trainer::from_checkpoint(ck)?, true)
        }
        None => {
            let config = load_train_config(args.config.as_deref(), args.seed, &args.set)?;
            (Trainer::new(config)?, false)
        }
    };

    let out = OutDir::create(&args.out)?;
    let config_json = serde_json::to_value(trainer.config()).expect("config serializes");
    let mut manifest = RunManifest::start("train", config_json);
    manifest.write(out.path())?;

    let mut metrics = open_metrics(&out.join("metrics.csv"), resumed)?;
    let eval_every = trainer.config().eval_every;
    let max_steps = trainer.config().max_steps;
    let ckpt_path = out.join("model.ckpt");

    // One chunk per record: rows land in the CSV and the checkpoint
    // refreshes at every record boundary, so an interrupted run resumes
    // exactly where its log ends.
    let summary = loop {
        let mut write_err = None;
        let result = trainer.run_for(eval_every, |r| {
            let line = r.to_csv_row();
            eprintln!("{line}");
            if let Err(e) = writeln!(metrics, "{line}") {
                write_err = Some(e);
            }
        });
        if let Some(e) = write_err {
            return Err(e.into());
        }
        let summary = result?;
        metrics.flush()?;
        save_checkpoint(&ckpt_path, &trainer.checkpoint())?;
        if summary.stopped_early || trainer.step() >= max_steps {
            break summary;
        }
    };

    manifest.finish(vec!["metrics.csv".into(), "model.ckpt".into()]);
    manifest.write(out.path())?;
    let eval = &summary.final_eval;
    println!(
        "train: steps={} stopped_early={} acc_message={:.4} acc_all={:.4}",
        summary.steps,
        summary.stopped_early,
        eval.acc_message(),
        eval.acc_all()
    );
    Ok(())
}

pub fn eval(args: EvalArgs) -> Result<(), CliError> {
    let ck = load_checkpoint(&args.checkpoint)?;
    let mut gen = ck.config.gen.clone();
    if let Some(seed) = args.seed {
        gen.seed = seed;
    }
    let fixed = match &args.key {
        Some(k) => Some(k.to_ascii_uppercase().parse::<KeyPhrase>()?),
        None => None,
    };
    let eval = evaluate_model(&ck.params, &gen, args.count, fixed.as_ref())?;
    let key_label = fixed.as_ref().map(|k| k.as_str().to_string()).unwrap_or_default();
    let key_suffix =
        if key_label.is_empty() { String::new() } else { format!(" fixed_key={key_label}") };
    println!(
        "eval: samples={} acc_message={:.4} acc_all={:.4} acc_key={:.4}{key_suffix}",
        args.count,
        eval.acc_message(),
        eval.acc_all(),
        eval.acc_key()
    );

    if let Some(dir) = &args.out {
        let out = OutDir::create(dir)?;
        let mut manifest =
            RunManifest::start("eval", serde_json::to_value(&ck.config).expect("serializes"));
        manifest.write(out.path())?;
        let mut artifacts = vec![out.write(
            "eval.csv",
            &format!(
                "samples,acc_message,acc_all,acc_key,fixed_key\n{},{},{},{},{key_label}\n",
                args.count,
                eval.acc_message(),
                eval.acc_all(),
                eval.acc_key()
            ),
        )?];
        if let Some(list) = &args.lengths {
            let lengths: Vec<usize> = parse_list(list, "length")?;
            let curve = generalization_curve(&ck.params, &gen, &lengths, args.count)?;
            artifacts.push(out.write("curve.csv", &curve.to_csv())?);
        }
        manifest.finish(artifacts);
        manifest.write(out.path())?;
    }
    Ok(())
}

pub fn attack(args: AttackArgs) -> Result<(), CliError> {
    let ck = load_checkpoint(&args.checkpoint)?;
    let mut gen = ck.config.gen.clone();
    if let Some(seed) = args.seed {
        gen.seed = seed;
    }
    let report = attack_eval(&ck.params, &gen, args.count)?;
    println!(
        "attack: samples={} per_char_accuracy={:.4} exact_key_rate={:.4}",
        report.samples, report.per_char_accuracy, report.exact_key_rate
    );
    if let Some(dir) = &args.out {
        let out = OutDir::create(dir)?;
        let mut manifest =
            RunManifest::start("attack", serde_json::to_value(&ck.config).expect("serializes"));
        manifest.write(out.path())?;
        let artifact = out.write(
            "attack.csv",
            &format!(
                "samples,per_char_accuracy,exact_key_rate\n{},{},{}\n",
                report.samples, report.per_char_accuracy, report.exact_key_rate
            ),
        )?;
        manifest.finish(vec![artifact]);
        manifest.write(out.path())?;
    }
    Ok(())
}

pub fn trace(args: TraceArgs) -> Result<(), CliError> {
    let ck = load_checkpoint(&args.checkpoint)?;
    let mut gen = ck.config.gen.clone();
    if let Some(seed) = args.seed {
        gen.seed = seed;
    }
    if let Some(length) = args.length {
        gen.message_len = length;
    }
    let fixed = match &args.key {
        Some(k) => Some(k.to_ascii_uppercase().parse::<KeyPhrase>()?),
        None => None,
    };
    let count = args.index as usize + 1;
    let sample = eval_set(&gen, count, fixed.as_ref())?
        .into_iter()
        .last()
        .expect("count is at least one");
    let units: Vec<usize> = match &args.units {
        Some(list) => parse_list(list, "unit")?,
        None => Vec::new(),
    };
    let trace = trace_activations(&ck.params, &sample, &units)?;
    let norm = memory_norm_curve(&ck.params, &sample)?;

    let out = OutDir::create(&args.out)?;
    let mut manifest =
        RunManifest::start("trace", serde_json::to_value(&ck.config).expect("serializes"));
    manifest.write(out.path())?;
    let artifacts = vec![
        out.write("trace.csv", &trace.to_csv())?,
        out.write("memory_norm.csv", &norm.to_csv())?,
    ];
    manifest.finish(artifacts);
    manifest.write(out.path())?;
    println!(
        "trace: steps={} key={} slope={:.4} r_squared={:.4}",
        trace.steps.len(),
        sample.key,
        norm.slope,
        norm.r_squared
    );
    Ok(())
}

pub fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let base = load_train_config(args.config.as_deref(), args.seed, &args.set)?;
    let sizes: Vec<usize> = parse_list(&args.sizes, "size")?;
    let out = OutDir::create(&args.out)?;
    let mut manifest = RunManifest::start(
        "sweep",
        serde_json::json!({
            "base": serde_json::to_value(&base).expect("serializes"),
            "sizes": sizes,
        }),
    );
    manifest.write(out.path())?;

    let mut entries = Vec::with_capacity(sizes.len());
    for &size in &sizes {
        eprintln!("sweep: training hidden_size={size}");
        let result = memory_sweep(&base, &[size])?;
        entries.extend(result.entries);
    }
    let sweep = MemorySweep { entries };

    let mut artifacts = Vec::new();
    for entry in &sweep.entries {
        artifacts
            .push(out.write(&format!("sweep_n{}.csv", entry.hidden_size), &entry.metrics_csv())?);
    }
    artifacts.push(out.write("summary.csv", &sweep.summary_csv())?);
    manifest.finish(artifacts);
    manifest.write(out.path())?;

    for entry in &sweep.entries {
        let steps = match entry.steps_to_threshold {
            Some(s) => s.to_string(),
            None => "did_not_reach".to_string(),
        };
        println!(
            "sweep: hidden_size={} steps_to_threshold={steps} final_accuracy={:.4}",
            entry.hidden_size, entry.final_accuracy
        );
    }
    Ok(())
}

pub fn gradcheck(args: GradcheckArgs) -> Result<(), CliError> {
    let config = FdCheckConfig {
        n: args.n,
        d: args.d,
        steps: args.steps,
        trials: args.trials,
        seed: args.seed,
        perturb: args.perturb,
    };
    let report = finite_difference_check(config)?;
    for (name, err) in &report.per_tensor {
        println!("{name} max_rel_err={err:.3e}");
    }
    if report.passed() {
        println!("gradcheck: PASS tolerance={}", report.tolerance);
        Ok(())
    } else {
        println!("gradcheck: FAIL tolerance={}", report.tolerance);
        Err(CliError::CheckFailed)
    }
}
