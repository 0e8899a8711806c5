//! End-to-end runs of the `sphkit` binary: command flow, exit codes,
//! determinism, and the documented error surface.

use std::path::Path;
use std::process::Command;

fn sphkit() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sphkit"))
}

fn generate_tiny_with_frames(dir: &Path, seed: u64, frames: usize) {
    let status = sphkit()
        .args([
            "generate",
            "--case",
            "rpf2d",
            "--frames",
            &frames.to_string(),
            "--seed",
            &seed.to_string(),
            "--set",
            "warmup=none",
            "--set",
            "dx=0.05",
            "--out",
        ])
        .arg(dir)
        .status()
        .unwrap();
    assert!(status.success());
}

fn generate_tiny(dir: &Path, seed: u64) {
    generate_tiny_with_frames(dir, seed, 8);
}

#[test]
fn generate_inspect_evaluate_flow() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("rpf-tiny");
    generate_tiny_with_frames(&data, 5, 32);
    for name in [
        "train.h5",
        "valid.h5",
        "test.h5",
        "metadata.json",
        "run_config.yaml",
    ] {
        assert!(data.join(name).exists(), "{name} missing");
    }

    let output = sphkit()
        .args(["inspect", "--dataset"])
        .arg(&data)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("case: rpf2d"));

    let eval_dir = tmp.path().join("eval");
    let output = sphkit()
        .args([
            "evaluate",
            "--predictor",
            "ground-truth",
            "--steps",
            "1",
            "--dataset",
        ])
        .arg(&data)
        .arg("--out")
        .arg(&eval_dir)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let aggregate: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(eval_dir.join("aggregate.json")).unwrap())
            .unwrap();
    assert_eq!(aggregate["mse_n"]["1"], 0.0);
    assert!(eval_dir.join("rollout_00000.csv").exists());
}

#[test]
fn equal_seeds_write_identical_payloads() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    generate_tiny(&a, 9);
    generate_tiny(&b, 9);
    for split in ["train", "valid", "test"] {
        let ta = sphkit::dataio::read_split(&a.join(format!("{split}.h5")), 1.0).unwrap();
        let tb = sphkit::dataio::read_split(&b.join(format!("{split}.h5")), 1.0).unwrap();
        assert_eq!(ta.len(), tb.len());
        for (x, y) in ta.iter().zip(&tb) {
            assert_eq!(x.positions, y.positions, "{split} payload differs");
            assert_eq!(x.particle_types, y.particle_types);
        }
    }
}

#[test]
fn missing_input_exits_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let status = sphkit()
        .args(["inspect", "--dataset"])
        .arg(tmp.path().join("not-there"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // unknown case id is bad input too
    let status = sphkit()
        .args(["generate", "--case", "nope", "--out"])
        .arg(tmp.path().join("x"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn tampered_shape_is_reported_with_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    generate_tiny(&data, 1);
    // tamper: replace test.h5 with a rank-2 "position"
    {
        let file = hdf5::File::create(data.join("test.h5")).unwrap();
        let g = file.create_group("00000").unwrap();
        g.new_dataset::<f32>()
            .shape((3, 2))
            .create("position")
            .unwrap();
        g.new_dataset::<i64>()
            .shape(2)
            .create("particle_type")
            .unwrap();
    }
    let output = sphkit()
        .args(["inspect", "--dataset"])
        .arg(&data)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("position"), "error names the key: {stderr}");
}

#[test]
fn solver_instability_exits_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    // a grossly oversized step blows the run up immediately
    let output = sphkit()
        .args([
            "generate",
            "--case",
            "rpf2d",
            "--frames",
            "4",
            "--set",
            "warmup=none",
            "--set",
            "dx=0.05",
            "--set",
            "dt_solver=0.5",
            "--out",
        ])
        .arg(tmp.path().join("boom"))
        .output()
        .unwrap();
    assert_eq!(
        output.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(String::from_utf8_lossy(&output.stderr).contains("instability"));
}

#[test]
fn catalog_prints_machine_readable_json() {
    let output = sphkit().args(["inspect", "--catalog"]).output().unwrap();
    assert!(output.status.success());
    let value: serde_json::Value =
        serde_json::from_slice(&output.stdout).expect("catalog is valid JSON");
    assert_eq!(value["cases"].as_array().unwrap().len(), 7);
}

#[test]
fn validate_conservation_suite_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let status = sphkit()
        .args(["validate", "--suite", "conservation", "--out"])
        .arg(tmp.path().join("v"))
        .status()
        .unwrap();
    assert!(status.success());
    assert!(tmp.path().join("v").join("conservation.json").exists());
}

#[test]
fn config_file_round_trips_to_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    generate_tiny(&first, 11);
    // re-run from the serialized effective config
    let second = tmp.path().join("second");
    let status = sphkit()
        .args(["generate", "--config"])
        .arg(first.join("run_config.yaml"))
        .arg("--out")
        .arg(&second)
        .status()
        .unwrap();
    assert!(status.success());
    for split in ["train", "valid", "test"] {
        let ta = sphkit::dataio::read_split(&first.join(format!("{split}.h5")), 1.0).unwrap();
        let tb = sphkit::dataio::read_split(&second.join(format!("{split}.h5")), 1.0).unwrap();
        for (x, y) in ta.iter().zip(&tb) {
            assert_eq!(x.positions, y.positions);
        }
    }
}
