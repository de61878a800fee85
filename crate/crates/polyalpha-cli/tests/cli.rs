//! End-to-end tests of the binary: real process spawns, real artifacts.

use std::path::Path;
use std::process::{Command, Output};

fn polyalpha(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyalpha"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Flags shared by the fast training configs used throughout.
const TINY: &[&str] = &[
    "--set",
    "hidden_size=16",
    "--set",
    "batch_size=4",
    "--set",
    "eval_every=10",
    "--set",
    "eval_count=5",
    "--set",
    "message_len=5",
    "--set",
    "key_len_max=2",
    "--seed",
    "7",
];

fn train_tiny(out_dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["train", "--out", out_dir.to_str().unwrap()];
    args.extend_from_slice(TINY);
    args.extend_from_slice(extra);
    polyalpha(&args)
}

#[test]
fn cipher_matches_worked_examples() {
    let out = polyalpha(&[
        "cipher",
        "--cipher",
        "autokey",
        "--key",
        "KEY",
        "--encrypt",
        "--text",
        "YOUKNOWNOTHINGJONSNOW",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout_of(&out).trim(), "ISSIBIGACPUWGNRBTBBBO");

    let out = polyalpha(&[
        "cipher", "--cipher", "vigenere", "--key", "AAA", "--encrypt", "--text", "HELLO",
    ]);
    assert_eq!(stdout_of(&out).trim(), "HELLO");
}

#[test]
fn enigma_encryption_is_self_inverse() {
    let first = polyalpha(&[
        "cipher", "--cipher", "enigma", "--key", "QRV", "--encrypt", "--text", "MEETATDAWN",
    ]);
    assert!(first.status.success());
    let ciphertext = stdout_of(&first).trim().to_string();
    assert_ne!(ciphertext, "MEETATDAWN");
    let second = polyalpha(&[
        "cipher", "--cipher", "enigma", "--key", "QRV", "--encrypt", "--text", &ciphertext,
    ]);
    assert_eq!(stdout_of(&second).trim(), "MEETATDAWN");
}

#[test]
fn invalid_cipher_input_exits_with_config_code() {
    let out = polyalpha(&[
        "cipher", "--cipher", "vigenere", "--key", "K3Y", "--encrypt", "--text", "HELLO",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());

    let out = polyalpha(&[
        "cipher", "--cipher", "rot13", "--key", "A", "--encrypt", "--text", "HELLO",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gradcheck_passes_and_negative_control_fails() {
    let out = polyalpha(&["gradcheck", "--trials", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_of(&out);
    assert!(text.contains("w_gate max_rel_err="));
    assert!(text.contains("gradcheck: PASS"));

    let out = polyalpha(&["gradcheck", "--trials", "1", "--perturb", "0.01"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout_of(&out).contains("gradcheck: FAIL"));
}

#[test]
fn train_writes_all_artifacts_and_checkpoint_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = train_tiny(&run, &["--set", "max_steps=40"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout_of(&out).starts_with("train: steps=40 "));

    let metrics = std::fs::read_to_string(run.join("metrics.csv")).unwrap();
    let mut lines = metrics.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,train_loss,train_acc_all,eval_acc_message,eval_acc_all,eval_acc_unseen_key,grad_norm,wallclock_seconds"
    );
    assert_eq!(lines.count(), 4);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "train");
    assert!(manifest["finished_unix_ms"].is_u64());
    assert_eq!(manifest["artifacts"][0], "metrics.csv");
    assert_eq!(manifest["artifacts"][1], "model.ckpt");
    assert_eq!(manifest["config"]["hidden_size"], 16);

    let ck = run.join("model.ckpt");
    let out = polyalpha(&["eval", "--checkpoint", ck.to_str().unwrap(), "--count", "10"]);
    assert!(out.status.success());
    assert!(stdout_of(&out).starts_with("eval: samples=10 acc_message="));

    let out = polyalpha(&[
        "eval",
        "--checkpoint",
        ck.to_str().unwrap(),
        "--count",
        "5",
        "--key",
        "KEY",
        "--lengths",
        "5,10",
        "--out",
        dir.path().join("ev").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout_of(&out).contains("fixed_key=KEY"));
    let curve = std::fs::read_to_string(dir.path().join("ev/curve.csv")).unwrap();
    assert!(curve.starts_with("length,accuracy\n5,"));

    let trace_dir = dir.path().join("tr");
    let out = polyalpha(&[
        "trace",
        "--checkpoint",
        ck.to_str().unwrap(),
        "--units",
        "0,3",
        "--out",
        trace_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout_of(&out).starts_with("trace: steps=11 "));
    let trace = std::fs::read_to_string(trace_dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("t,input_char,output_char,net_shift,unit_0,unit_3\n"));
    assert_eq!(trace.lines().count(), 12, "header plus 6 key steps plus 5 message steps");
    assert!(trace_dir.join("memory_norm.csv").exists());
}

#[test]
fn resumed_training_reproduces_the_uninterrupted_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full");
    let halves = dir.path().join("halves");
    assert!(train_tiny(&full, &["--set", "max_steps=40"]).status.success());
    assert!(train_tiny(&halves, &["--set", "max_steps=20"]).status.success());
    let resume = polyalpha(&[
        "train",
        "--out",
        halves.to_str().unwrap(),
        "--resume",
        halves.join("model.ckpt").to_str().unwrap(),
        "--set",
        "max_steps=40",
    ]);
    assert!(resume.status.success(), "{}", String::from_utf8_lossy(&resume.stderr));

    // Identical modulo the wallclock column.
    let strip = |path: &Path| -> Vec<String> {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    assert_eq!(strip(&full.join("metrics.csv")), strip(&halves.join("metrics.csv")));
}

#[test]
fn sweep_writes_one_log_per_size_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = polyalpha(&[
        "sweep",
        "--out",
        dir.path().to_str().unwrap(),
        "--sizes",
        "4,8",
        "--set",
        "batch_size=4",
        "--set",
        "max_steps=20",
        "--set",
        "eval_every=10",
        "--set",
        "eval_count=5",
        "--set",
        "message_len=4",
        "--seed",
        "11",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_of(&out);
    assert!(text.contains("sweep: hidden_size=4 "));
    assert!(text.contains("sweep: hidden_size=8 "));
    assert!(dir.path().join("sweep_n4.csv").exists());
    assert!(dir.path().join("sweep_n8.csv").exists());
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("hidden_size,steps_to_threshold,final_accuracy\n"));
    assert!(summary.contains("did_not_reach"));
}

#[test]
fn unknown_config_field_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let out = train_tiny(&dir.path().join("x"), &["--set", "learning_rate=0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown config field"));
}

#[test]
fn attack_command_scores_an_attack_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = train_tiny(&run, &["--set", "max_steps=20", "--set", "task=attack"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = polyalpha(&[
        "attack",
        "--checkpoint",
        run.join("model.ckpt").to_str().unwrap(),
        "--count",
        "50",
        "--out",
        dir.path().join("report").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout_of(&out).starts_with("attack: samples=50 per_char_accuracy="));
    let csv = std::fs::read_to_string(dir.path().join("report/attack.csv")).unwrap();
    assert!(csv.starts_with("samples,per_char_accuracy,exact_key_rate\n50,"));

    // A decryption checkpoint is the wrong shape for the attack task.
    let decrypt_run = dir.path().join("decrypt");
    assert!(train_tiny(&decrypt_run, &["--set", "max_steps=10"]).status.success());
    let out = polyalpha(&[
        "attack",
        "--checkpoint",
        decrypt_run.join("model.ckpt").to_str().unwrap(),
        "--count",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
