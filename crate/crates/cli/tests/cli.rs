//! End-to-end command tests driving the compiled binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rrv(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rrv"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, contents: &str) {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).unwrap();
    }
    fs::write(path, contents).unwrap();
}

fn count_files(dir: &Path, ext: &str) -> usize {
    fs::read_dir(dir)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|x| x == ext)
        })
        .count()
}

#[test]
fn shipped_configs_parse() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(configs).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let text = fs::read_to_string(&path).unwrap();
            let parsed: Result<rrv_core::eval::RunConfig, _> = serde_json::from_str(&text);
            assert!(parsed.is_ok(), "{path:?}: {parsed:?}");
            seen += 1;
        }
    }
    assert!(seen >= 4);
}

#[test]
fn synth_writes_expected_files_and_regenerates_identically() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    write(
        &spec,
        r#"{ "payload": "rigid", "class_count": 3, "subjects": 5, "samples_per_subject": 4, "seed": 9 }"#,
    );

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let output = rrv(
            &["synth", "--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap()],
            dir.path(),
        );
        assert!(output.status.success(), "{output:?}");
    }
    assert_eq!(count_files(&out_a, "json"), 60 + 1); // samples + manifest
    assert!(out_a.join("manifest.json").exists());

    for entry in fs::read_dir(&out_a).unwrap() {
        let name = entry.unwrap().file_name();
        let a = fs::read(out_a.join(&name)).unwrap();
        let b = fs::read(out_b.join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs between regenerations");
    }
}

#[test]
fn synth_noise_sweep_emits_copies_per_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    write(
        &spec,
        r#"{ "payload": "rigid", "class_count": 1, "subjects": 1, "samples_per_subject": 1,
             "seed": 3, "noise_sweep": [10, 20, 30, 40, 50] }"#,
    );
    let out = dir.path().join("out");
    let output = rrv(
        &["synth", "--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert!(output.status.success(), "{output:?}");
    // 1 clean + 5 noisy + manifest.
    assert_eq!(count_files(&out, "json"), 7);
    let noisy = fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .contains("_snr")
        })
        .count();
    assert_eq!(noisy, 5);
}

fn synth_one_rigid_sample(dir: &Path) -> std::path::PathBuf {
    let spec = dir.join("one.json");
    write(
        &spec,
        r#"{ "payload": "rigid", "class_count": 1, "subjects": 1, "samples_per_subject": 1, "seed": 5 }"#,
    );
    let out = dir.join("data");
    let output = rrv(
        &["synth", "--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap()],
        dir,
    );
    assert!(output.status.success(), "{output:?}");
    fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap() != "manifest.json")
        .unwrap()
}

#[test]
fn describe_rigid_sample_writes_seven_columns() {
    let dir = tempfile::tempdir().unwrap();
    let sample = synth_one_rigid_sample(dir.path());
    let out = dir.path().join("desc");
    let output = rrv(
        &[
            "describe",
            "--input",
            sample.to_str().unwrap(),
            "--format",
            "json",
            "--out",
            out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(output.status.success(), "{output:?}");
    let csv_path = fs::read_dir(&out).unwrap().next().unwrap().unwrap().path();
    let text = fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "qw,qx,qy,qz,tx,ty,tz");
    let rows: Vec<&str> = lines.collect();
    // Default synthetic clips have 60 samples: 59 descriptor rows.
    assert_eq!(rows.len(), 59);
    for row in rows {
        assert_eq!(row.split(',').count(), 7);
    }
}

#[test]
fn describe_binary_stream_is_length_prefixed() {
    let dir = tempfile::tempdir().unwrap();
    let sample = synth_one_rigid_sample(dir.path());
    let out = dir.path().join("desc");
    let output = rrv(
        &[
            "describe",
            "--input",
            sample.to_str().unwrap(),
            "--format",
            "json",
            "--binary",
            "--out",
            out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(output.status.success(), "{output:?}");
    let bin_path = fs::read_dir(&out).unwrap().next().unwrap().unwrap().path();
    let bytes = fs::read(&bin_path).unwrap();
    let n = u64::from_le_bytes(bytes[..8].try_into().unwrap());
    assert_eq!(n, 59);
    assert_eq!(bytes.len(), 8 + 59 * 7 * 8);
}

#[test]
fn describe_skeleton_sample_has_63_columns() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    write(
        &spec,
        r#"{ "payload": "skeleton", "class_count": 1, "subjects": 1, "samples_per_subject": 1, "seed": 2 }"#,
    );
    let data = dir.path().join("data");
    assert!(rrv(
        &["synth", "--spec", spec.to_str().unwrap(), "--out", data.to_str().unwrap()],
        dir.path()
    )
    .status
    .success());
    let sample = fs::read_dir(&data)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap() != "manifest.json")
        .unwrap();

    let out = dir.path().join("desc");
    let output = rrv(
        &[
            "describe",
            "--input",
            sample.to_str().unwrap(),
            "--format",
            "json",
            "--out",
            out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(output.status.success(), "{output:?}");
    let csv_path = fs::read_dir(&out).unwrap().next().unwrap().unwrap().path();
    let text = fs::read_to_string(&csv_path).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 63);
    assert!(header.starts_with("la1_qw,"));
    assert!(header.contains("ts1_qw"));
}

#[test]
fn malformed_input_names_the_file_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("broken.txt");
    write(&bad, "0 0 0 0 0 0\n0 0 nonsense 0 0 0\n");
    let output = rrv(
        &[
            "describe",
            "--input",
            bad.to_str().unwrap(),
            "--format",
            "rigid",
            "--out",
            dir.path().join("x").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("broken.txt"), "stderr: {stderr}");
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = rrv(&["evaluate", "--frobnicate"], dir.path());
    assert_eq!(output.status.code(), Some(1));
}

fn eval_config(dir: &Path) -> std::path::PathBuf {
    let config = dir.join("run.json");
    write(
        &config,
        r#"{
  "dataset": { "kind": "synthetic",
               "synthetic": { "class_count": 3, "subjects": 4, "samples_per_subject": 2, "seed": 11 } },
  "recognizer": { "backend": "dtw", "k_r": 12, "k_t": 12 }
}"#,
    );
    config
}

#[test]
fn evaluate_writes_a_deterministic_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let config = eval_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let output = rrv(
            &[
                "evaluate",
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ],
            dir.path(),
        );
        assert!(output.status.success(), "{output:?}");
    }
    for file in ["summary.json", "predictions.csv", "confusion.csv", "metadata.json"] {
        let a = fs::read(out_a.join(file)).unwrap();
        let b = fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between runs");
    }
    assert!(out_a.join("timing.json").exists());

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_a.join("summary.json")).unwrap()).unwrap();
    assert!(summary["mean_accuracy"].as_f64().unwrap() > 0.9);
}

#[test]
fn train_bow_then_classify_reproduces_training_labels() {
    let dir = tempfile::tempdir().unwrap();
    // Train on every subject.
    let config = dir.path().join("run.json");
    write(
        &config,
        r#"{
  "dataset": { "kind": "synthetic",
               "synthetic": { "class_count": 3, "subjects": 4, "samples_per_subject": 2, "seed": 11 } },
  "recognizer": { "backend": "bow", "k_r": 12, "k_t": 12 },
  "protocol": { "protocol": "cross-subject", "train": [1, 2, 3, 4] }
}"#,
    );
    let model_dir = dir.path().join("model");
    let output = rrv(
        &[
            "train-bow",
            "--config",
            config.to_str().unwrap(),
            "--out",
            model_dir.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(output.status.success(), "{output:?}");
    assert!(model_dir.join("model.rrvm").exists());
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(model_dir.join("model.json")).unwrap()).unwrap();
    assert_eq!(sidecar["k_r"], 12);
    assert_eq!(sidecar["classes"].as_array().unwrap().len(), 3);

    // Materialize the same dataset and classify it with the saved model.
    let spec = dir.path().join("spec.json");
    write(
        &spec,
        r#"{ "payload": "rigid", "class_count": 3, "subjects": 4, "samples_per_subject": 2, "seed": 11 }"#,
    );
    let data = dir.path().join("data");
    assert!(rrv(
        &["synth", "--spec", spec.to_str().unwrap(), "--out", data.to_str().unwrap()],
        dir.path()
    )
    .status
    .success());

    let pred_a = dir.path().join("pred-a");
    let pred_b = dir.path().join("pred-b");
    for out in [&pred_a, &pred_b] {
        let output = rrv(
            &[
                "classify",
                "--model",
                model_dir.join("model.rrvm").to_str().unwrap(),
                "--input",
                data.to_str().unwrap(),
                "--format",
                "json",
                "--out",
                out.to_str().unwrap(),
            ],
            dir.path(),
        );
        assert!(output.status.success(), "{output:?}");
    }
    let a = fs::read_to_string(pred_a.join("predictions.csv")).unwrap();
    let b = fs::read_to_string(pred_b.join("predictions.csv")).unwrap();
    assert_eq!(a, b);

    // Separable training data: every training sample gets its own label.
    for line in a.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1], fields[2], "row {line}");
    }
}

#[test]
fn oversized_dictionary_request_is_surfaced() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    write(
        &config,
        r#"{
  "dataset": { "kind": "synthetic",
               "synthetic": { "class_count": 2, "subjects": 2, "samples_per_subject": 1, "seed": 1 } },
  "recognizer": { "backend": "bow", "k_r": 100000, "k_t": 12 },
  "protocol": { "protocol": "cross-subject", "train": [1, 2] }
}"#,
    );
    let output = rrv(
        &[
            "train-bow",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.path().join("m").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("patches"), "stderr: {stderr}");
}

#[test]
fn classify_without_model_needs_dtw_backend() {
    let dir = tempfile::tempdir().unwrap();
    let sample = synth_one_rigid_sample(dir.path());
    let output = rrv(
        &[
            "classify",
            "--backend",
            "bow",
            "--input",
            sample.to_str().unwrap(),
            "--format",
            "json",
        ],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(1));
}
