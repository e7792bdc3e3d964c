use std::path::Path;
use std::process::{Command, Output};

use billocr::cnn::{extract_patches, make_training_pair, save_model, train, TrainConfig};
use billocr::imagecore::io;
use billocr::synth::{generate, SynthConfig};

fn billocr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_billocr"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "error")
        .env("RUST_BACKTRACE", "0")
        .output()
        .unwrap()
}

#[test]
fn synth_writes_image_transcript_pairs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = billocr(tmp.path(), &["synth", "--out", "c", "--count", "3", "--seed", "1"]);
    assert!(out.status.success());
    for sub in ["clean", "degraded"] {
        for i in 0..3 {
            assert!(tmp.path().join(format!("c/{sub}/bill_{i:04}.png")).is_file());
            assert!(tmp.path().join(format!("c/{sub}/bill_{i:04}.txt")).is_file());
        }
    }
}

#[test]
fn enhance_writes_same_size_image() {
    let tmp = tempfile::tempdir().unwrap();
    let samples = generate(&SynthConfig { count: 1, seed: 4, ..SynthConfig::default() }).unwrap();
    let pairs = vec![make_training_pair(&samples[0].clean)];
    let patches: Vec<_> = extract_patches(&pairs, 32).into_iter().take(4).collect();
    let (model, _) = train(&patches, &TrainConfig { max_epochs: 1, val_fraction: 0.25, ..TrainConfig::default() }).unwrap();
    save_model(&model, &tmp.path().join("m.bfn")).unwrap();
    io::save(&samples[0].degraded, &tmp.path().join("in.png")).unwrap();

    let out = billocr(tmp.path(), &["enhance", "--model", "m.bfn", "--input", "in.png", "--output", "out.png"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("tier"), "{stdout}");
    let enhanced = io::load(&tmp.path().join("out.png")).unwrap();
    assert_eq!((enhanced.width(), enhanced.height()), (samples[0].degraded.width(), samples[0].degraded.height()));
}

#[test]
fn bench_without_ground_truth_fails() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(billocr(tmp.path(), &["synth", "--out", "c", "--count", "1"]).status.success());
    std::fs::write(
        tmp.path().join("run.toml"),
        "dataset_dir = \"c/degraded\"\nmethods = [\"raw_tesseract\"]\n[tesseract]\nkind = \"mock\"\n",
    )
    .unwrap();
    let out = billocr(tmp.path(), &["bench", "--config", "run.toml"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("run `gt` first"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("run.toml"), "hig_threshold = 400.0\n").unwrap();
    let out = billocr(tmp.path(), &["gt", "--config", "run.toml"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("hig_threshold"));
}
