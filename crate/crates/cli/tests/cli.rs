use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fact_core::augment::amplitude_swap;
use fact_core::tensor::load_image;

fn fact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fact"))
        .args(args)
        .env_remove("FACT_SEED")
        .output()
        .unwrap()
}

fn fact_env(args: &[&str], seed: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fact"))
        .args(args)
        .env("FACT_SEED", seed)
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small synthetic corpus on disk.
fn synth(dir: &Path) -> PathBuf {
    let data = dir.join("data");
    ok(&fact(&[
        "synth",
        "--out",
        s(&data),
        "--n-per-cell",
        "6",
        "--size",
        "8",
        "--seed",
        "1",
    ]));
    data
}

fn read_toml(path: &Path) -> toml::Table {
    fs::read_to_string(path).unwrap().parse().unwrap()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = fact(&["train", "--out", "/tmp/x", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_data_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fact(&["train", "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_value_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let out = fact(&[
        "train",
        "--data",
        s(&data),
        "--out",
        s(&dir.path().join("o")),
        "--lr=-1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_image_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fact(&[
        "augment",
        "--pair",
        "/nonexistent/a.png",
        "/nonexistent/b.png",
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn divergence_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let out = fact(&[
        "train",
        "--data",
        s(&data),
        "--out",
        s(&dir.path().join("o")),
        "--lr",
        "1e200",
        "--epochs",
        "2",
        "--hidden",
        "8",
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn flag_overrides_config_and_seed_falls_back_to_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[synth]\nn_per_cell = 3\nheight = 8\nwidth = 8\n").unwrap();
    let out = dir.path().join("o");
    ok(&fact_env(
        &["synth", "--config", s(&cfg), "--out", s(&out), "--n-per-cell", "4"],
        "77",
    ));
    let echo = read_toml(&out.join("config.toml"));
    let synth = echo["synth"].as_table().unwrap();
    assert_eq!(synth["n_per_cell"].as_integer(), Some(4));
    assert_eq!(synth["height"].as_integer(), Some(8));
    assert_eq!(synth["seed"].as_integer(), Some(77));

    // A seed in the config file wins over the environment.
    fs::write(&cfg, "[synth]\nn_per_cell = 3\nheight = 8\nwidth = 8\nseed = 5\n").unwrap();
    let out2 = dir.path().join("o2");
    ok(&fact_env(&["synth", "--config", s(&cfg), "--out", s(&out2)], "77"));
    assert_eq!(
        read_toml(&out2.join("config.toml"))["synth"]["seed"].as_integer(),
        Some(5)
    );
}

#[test]
fn mixing_with_zero_eta_writes_the_inputs_back() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let class_dir = data.join("domain0/bar");
    let out = dir.path().join("o");
    ok(&fact(&[
        "augment",
        "--input",
        s(&class_dir),
        "--strategy",
        "am",
        "--eta",
        "0",
        "--out",
        s(&out),
    ]));
    let prov = read_toml(&out.join("provenance.toml"));
    let outputs = prov["outputs"].as_array().unwrap();
    assert!(!outputs.is_empty());
    for entry in outputs {
        let written = fs::read(out.join(entry["output"].as_str().unwrap())).unwrap();
        let source = load_image(Path::new(entry["source"].as_str().unwrap())).unwrap();
        let reread = load_image(&out.join(entry["output"].as_str().unwrap())).unwrap();
        assert!(!written.is_empty());
        assert_eq!(reread.to_u8(), source.to_u8());
    }
}

#[test]
fn full_swap_exchanges_amplitudes() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let a = data
        .join("domain0/bar")
        .read_dir()
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let b = data
        .join("domain2/ring")
        .read_dir()
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let out = dir.path().join("o");
    ok(&fact(&[
        "augment",
        "--pair",
        s(&a),
        s(&b),
        "--strategy",
        "as",
        "--r",
        "1",
        "--out",
        s(&out),
    ]));
    let (x1, x2) = (load_image(&a).unwrap(), load_image(&b).unwrap());
    let expected = amplitude_swap(&x1, &x2, 1.0).unwrap();
    let stem = |p: &Path| p.file_stem().unwrap().to_str().unwrap().to_string();
    let first = load_image(&out.join(format!("0000_{}.png", stem(&a)))).unwrap();
    let second = load_image(&out.join(format!("0001_{}.png", stem(&b)))).unwrap();
    assert_eq!(first.to_u8(), expected.first.to_u8());
    assert_eq!(second.to_u8(), expected.second.to_u8());
    assert_ne!(first.to_u8(), x1.to_u8());
}

#[test]
fn eval_reproduces_selected_validation_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let run = dir.path().join("run");
    ok(&fact(&[
        "train",
        "--data",
        s(&data),
        "--out",
        s(&run),
        "--epochs",
        "3",
        "--batch-size",
        "4",
        "--hidden",
        "16",
        "--seed",
        "3",
    ]));
    let ev = dir.path().join("eval");
    ok(&fact(&[
        "eval",
        "--checkpoint",
        s(&run.join("student.ckpt")),
        "--data",
        s(&data),
        "--split",
        "val",
        "--out",
        s(&ev),
    ]));
    let summary = read_toml(&run.join("summary.toml"));
    let table = fs::read_to_string(ev.join("accuracy.csv")).unwrap();
    for entry in summary["val"].as_array().unwrap() {
        let domain = entry["domain"].as_str().unwrap();
        let line = table.lines().find(|l| l.starts_with(&format!("{domain},"))).unwrap();
        let acc: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(acc, entry["accuracy"].as_float().unwrap(), "{domain}");
    }
}

#[test]
fn eval_rejects_mismatched_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let run = dir.path().join("run");
    ok(&fact(&[
        "train",
        "--data",
        s(&data),
        "--out",
        s(&run),
        "--epochs",
        "1",
        "--hidden",
        "4",
    ]));
    let other = dir.path().join("other");
    ok(&fact(&[
        "synth",
        "--out",
        s(&other),
        "--n-per-cell",
        "2",
        "--size",
        "12",
    ]));
    let out = fact(&[
        "eval",
        "--checkpoint",
        s(&run.join("student.ckpt")),
        "--data",
        s(&other),
        "--out",
        s(&dir.path().join("e")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ablation_preset_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let run = dir.path().join("run");
    ok(&fact(&[
        "train",
        "--data",
        s(&data),
        "--out",
        s(&run),
        "--epochs",
        "1",
        "--hidden",
        "4",
        "--ablation",
        "D",
    ]));
    let echo = read_toml(&run.join("config.toml"));
    let comp = echo["fact"]["components"].as_table().unwrap();
    assert_eq!(comp["o2a"].as_bool(), Some(false));
    assert_eq!(comp["a2o"].as_bool(), Some(true));
    assert_eq!(comp["teacher"].as_bool(), Some(true));
}

#[test]
fn held_out_domain_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let run = dir.path().join("run");
    ok(&fact(&[
        "train",
        "--data",
        s(&data),
        "--out",
        s(&run),
        "--epochs",
        "1",
        "--hidden",
        "4",
        "--held-out",
        "2",
    ]));
    let summary = read_toml(&run.join("summary.toml"));
    assert_eq!(summary["held_out"]["domain"].as_str(), Some("domain2"));
    assert_eq!(summary["val"].as_array().unwrap().len(), 2);
}
