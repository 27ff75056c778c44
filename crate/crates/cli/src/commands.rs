use std::collections::BTreeSet;
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use rrv_core::data::synth::{add_noise, derive_seed, NoiseSpec};
use rrv_core::data::{
    load_exclusions, load_json_dataset, load_rigid_dataset, load_rigid_file, load_sample_json,
    load_skeleton_dataset, load_skeleton_file, make_splits, subject_universe, LabeledSample,
    SamplePayload, SKELETON_JOINTS,
};
use rrv_core::eval::{
    describe_sample, train_bow as train_bow_model, RunConfig, SampleDescriptor, SyntheticSpec,
};
use rrv_core::io::{
    load_model, save_json, save_model, write_multi_csv, write_rrv_binary, write_rrv_csv,
    write_skeleton_csv,
};
use rrv_core::recognize::svm::EPS_CHI;
use rrv_core::rrv::RrvSequence;
use rrv_core::skeleton::MultiRrvSequence;

use crate::{CliError, FormatArg};

fn load_input(
    config: &RunConfig,
    input: &Path,
    format: FormatArg,
) -> Result<Vec<LabeledSample>, CliError> {
    if input.is_file() {
        let stem = input
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("sample")
            .to_string();
        let sample = match format {
            FormatArg::Rigid => LabeledSample {
                id: stem,
                label: "unknown".into(),
                subject: 0,
                payload: load_rigid_file(input, &config.dataset.rigid_format)?,
            },
            FormatArg::Skeleton => LabeledSample {
                id: stem,
                label: "unknown".into(),
                subject: 0,
                payload: SamplePayload::Skeleton {
                    sequence: load_skeleton_file(input, SKELETON_JOINTS)?,
                },
            },
            FormatArg::Json => load_sample_json(input)?,
        };
        return Ok(vec![sample]);
    }
    let samples = match format {
        FormatArg::Rigid => load_rigid_dataset(input, &config.dataset.rigid_format)?,
        FormatArg::Skeleton => {
            let exclusions = match &config.dataset.exclusions {
                Some(path) => load_exclusions(path)?,
                None => BTreeSet::new(),
            };
            load_skeleton_dataset(input, &exclusions)?
        }
        FormatArg::Json => load_json_dataset(input)?,
    };
    Ok(samples)
}

fn single_stream(seq: &MultiRrvSequence<f64>) -> RrvSequence<f64> {
    RrvSequence {
        descriptors: seq.frames().iter().map(|f| f[0]).collect(),
        degenerate_spectrum: false,
    }
}

pub fn describe(
    config: &RunConfig,
    input: &Path,
    format: FormatArg,
    binary: bool,
    out: &Path,
) -> Result<(), CliError> {
    let samples = load_input(config, input, format)?;
    fs::create_dir_all(out)?;
    let mut written = 0usize;
    for sample in &samples {
        let descriptor = describe_sample(sample, config)?;
        match (&descriptor, binary) {
            (SampleDescriptor::Rigid(seq), false) => {
                let mut w = BufWriter::new(fs::File::create(out.join(format!("{}.csv", sample.id)))?);
                write_rrv_csv(&mut w, &single_stream(seq))?;
            }
            (SampleDescriptor::Rigid(seq), true) => {
                let mut w = BufWriter::new(fs::File::create(out.join(format!("{}.bin", sample.id)))?);
                write_rrv_binary(&mut w, &single_stream(seq))?;
            }
            (SampleDescriptor::Pair { left, right }, false) => {
                let combined = MultiRrvSequence::from_streams(vec![
                    single_stream(left),
                    single_stream(right),
                ])
                .map_err(rrv_core::eval::EvalError::from)?;
                let mut w = BufWriter::new(fs::File::create(out.join(format!("{}.csv", sample.id)))?);
                write_multi_csv(&mut w, &combined, &["lh", "rh"])?;
            }
            (SampleDescriptor::Pair { left, right }, true) => {
                for (tag, seq) in [("lh", left), ("rh", right)] {
                    let mut w = BufWriter::new(fs::File::create(
                        out.join(format!("{}_{tag}.bin", sample.id)),
                    )?);
                    write_rrv_binary(&mut w, &single_stream(seq))?;
                }
            }
            (SampleDescriptor::Skeleton(desc), false) => {
                let mut w = BufWriter::new(fs::File::create(out.join(format!("{}.csv", sample.id)))?);
                write_skeleton_csv(&mut w, desc)?;
            }
            (SampleDescriptor::Skeleton(_), true) => {
                return Err(CliError::Usage(
                    "binary output supports rigid-body descriptors only".into(),
                ));
            }
        }
        written += 1;
    }
    println!("wrote {written} descriptor file(s) to {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct SynthManifest<'a> {
    spec: &'a SyntheticSpec,
    files: Vec<String>,
}

fn format_snr(snr: f64) -> String {
    // Shortest float formatting: "10" for 10.0.
    format!("{snr}").replace('.', "p").replace('-', "m")
}

pub fn synth(
    config: &RunConfig,
    spec_path: Option<&Path>,
    seed_override: Option<u64>,
    out: &Path,
) -> Result<(), CliError> {
    let mut spec = match spec_path {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str::<SyntheticSpec>(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        }
        None => config.dataset.synthetic.clone(),
    };
    if let Some(seed) = seed_override {
        spec.seed = seed;
    }

    let samples = spec.generate();
    fs::create_dir_all(out)?;
    let mut files = Vec::new();
    for sample in &samples {
        let name = format!("{}.json", sample.id);
        rrv_core::data::save_sample_json(&out.join(&name), sample)?;
        files.push(name);
    }
    if let Some(sweep) = &spec.noise_sweep {
        for (i, sample) in samples.iter().enumerate() {
            for &snr in sweep {
                let noisy = add_noise(
                    sample,
                    &NoiseSpec {
                        snr_db: snr,
                        seed: derive_seed(spec.seed ^ 0x5EED_0F0F_u64, snr.to_bits() as usize, 0, i as u32),
                    },
                );
                let name = format!("{}_snr{}.json", sample.id, format_snr(snr));
                let on_disk = LabeledSample {
                    id: format!("{}_snr{}", sample.id, format_snr(snr)),
                    ..noisy
                };
                rrv_core::data::save_sample_json(&out.join(&name), &on_disk)?;
                files.push(name);
            }
        }
    }
    files.sort();
    save_json(&out.join("manifest.json"), &SynthManifest { spec: &spec, files })?;
    println!(
        "wrote {} sample(s) and manifest.json to {}",
        samples.len(),
        out.display()
    );
    Ok(())
}

pub fn evaluate(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let report = rrv_core::eval::evaluate(config)?;
    report.write_bundle(out)?;
    println!(
        "accuracy {:.4} ± {:.4} over {} split(s); bundle at {}",
        report.summary.mean_accuracy,
        report.summary.std_accuracy,
        report.summary.splits,
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ModelSidecar {
    k_r: usize,
    k_t: usize,
    kmeans_seed: u64,
    svm_c: f64,
    svm_tol: f64,
    chi_square_gamma: f64,
    epsilon_chi: f64,
    parts: u32,
    classes: Vec<String>,
    train_subjects: Vec<u32>,
}

pub fn train_bow(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let (model, splits) = train_bow_model(config)?;
    fs::create_dir_all(out)?;
    let model_path = out.join("model.rrvm");
    save_model(&model_path, &model)?;
    let sidecar = ModelSidecar {
        k_r: config.recognizer.k_r,
        k_t: config.recognizer.k_t,
        kmeans_seed: config.recognizer.kmeans_seed,
        svm_c: config.recognizer.svm_c,
        svm_tol: config.recognizer.svm_tol,
        chi_square_gamma: model.svm.gamma,
        epsilon_chi: EPS_CHI,
        parts: model.parts,
        classes: model.svm.classes.clone(),
        train_subjects: splits
            .first()
            .map(|p| p.train.iter().copied().collect())
            .unwrap_or_default(),
    };
    save_json(&out.join("model.json"), &sidecar)?;
    println!(
        "trained {} classes; model at {}",
        model.svm.classes.len(),
        model_path.display()
    );
    Ok(())
}

pub fn classify(
    config: &RunConfig,
    model_path: Option<&Path>,
    input: &Path,
    format: FormatArg,
    out: &Path,
) -> Result<(), CliError> {
    let samples = load_input(config, input, format)?;
    let mut rows: Vec<(String, String, String)> = Vec::new();

    match (model_path, config.recognizer.backend) {
        (Some(path), _) => {
            let model = load_model(path)?;
            for sample in &samples {
                let descriptor = describe_sample(sample, config)?;
                let predicted = rrv_core::eval::classify_with_model(&model, &descriptor)?;
                rows.push((sample.id.clone(), sample.label.clone(), predicted));
            }
        }
        (None, rrv_core::eval::Backend::Dtw) => {
            let train_samples = rrv_core::eval::load_dataset(&config.dataset)?;
            let subjects = subject_universe(&train_samples);
            let plan = make_splits(&subjects, &config.protocol)?
                .into_iter()
                .next()
                .ok_or_else(|| CliError::Data("protocol yields no splits".into()))?;
            let mut pool: Vec<(SampleDescriptor, String)> = Vec::new();
            for s in &train_samples {
                if plan.train.contains(&s.subject) {
                    pool.push((describe_sample(s, config)?, s.label.clone()));
                }
            }
            if pool.is_empty() {
                return Err(CliError::Data("training split is empty".into()));
            }
            for sample in &samples {
                let descriptor = describe_sample(sample, config)?;
                let mut best: Option<(f64, &str)> = None;
                for (train_desc, label) in &pool {
                    let cost = descriptor
                        .cost_to(train_desc, config.descriptor.metric)
                        .map_err(rrv_core::eval::EvalError::from)?;
                    if best.is_none_or(|(b, _)| cost < b) {
                        best = Some((cost, label));
                    }
                }
                let predicted = best.expect("nonempty pool").1.to_string();
                rows.push((sample.id.clone(), sample.label.clone(), predicted));
            }
        }
        (None, rrv_core::eval::Backend::Bow) => {
            return Err(CliError::Usage(
                "the bow back-end classifies with a trained model; pass --model".into(),
            ));
        }
    }

    fs::create_dir_all(out)?;
    let mut csv = String::from("id,label,predicted\n");
    for (id, label, predicted) in &rows {
        csv.push_str(&format!("{id},{label},{predicted}\n"));
    }
    fs::write(out.join("predictions.csv"), csv)?;

    let labeled: Vec<_> = rows.iter().filter(|(_, l, _)| l != "unknown").collect();
    if !labeled.is_empty() {
        let correct = labeled.iter().filter(|(_, l, p)| l == p).count();
        println!(
            "classified {} sample(s); accuracy {:.4} on labeled inputs",
            rows.len(),
            correct as f64 / labeled.len() as f64
        );
    } else {
        println!("classified {} sample(s)", rows.len());
    }
    Ok(())
}
