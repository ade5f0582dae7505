mod common;

use common::{run_cli, tree_bytes, PIPELINE};

#[test]
fn rerunning_the_pipeline_reproduces_every_artifact() {
    let runs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &runs {
        for command in PIPELINE {
            let out = run_cli(dir.path(), command);
            assert!(out.status.success(), "{command}: {}", String::from_utf8_lossy(&out.stderr));
        }
    }
    let a = tree_bytes(runs[0].path());
    let b = tree_bytes(runs[1].path());
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (path, bytes) in &a {
        assert!(bytes == &b[path], "{} differs", path.display());
    }
    let eval = String::from_utf8(a[std::path::Path::new("out/evaluation.txt")].clone()).unwrap();
    for model in ["Transformer", "NLinear", "HA", "AR"] {
        assert!(eval.contains(model));
    }
}

#[test]
fn evaluating_before_training_exits_with_the_prerequisite_code() {
    let dir = tempfile::tempdir().unwrap();
    for command in ["synth", "cluster", "fuse"] {
        assert!(run_cli(dir.path(), command).status.success());
    }
    let out = run_cli(dir.path(), "evaluate");
    assert_eq!(out.status.code(), Some(5));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("model.json") && msg.contains("train"), "{msg}");
}

#[test]
fn bad_overrides_exit_with_the_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_parkcast"))
        .current_dir(dir.path())
        .args(["--set", "model.no_such_key=1", "synth"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn clustering_without_data_exits_with_the_prerequisite_code() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_cli(dir.path(), "cluster").status.code(), Some(5));
}

#[test]
fn shipped_configs_load() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["quick.toml", "acceptance.toml"] {
        let cfg = parkcast::experiment::ExperimentConfig::load(Some(&dir.join(name)), &[]).unwrap();
        assert!(cfg.preprocess.window % cfg.model.patch_len == 0, "{name}");
    }
}
