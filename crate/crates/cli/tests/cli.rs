use std::path::Path;
use std::process::{Command, Output};

use esc_core::audio::{encode_wav_pcm16, AudioClip};
use esc_core::dataset::GroupLabel;

const SUBS: usize = 2;
const PER_CATEGORY: usize = 10;

fn esc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esc"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Seven tone families of two sub-tones, ten short clips each, plus a matching taxonomy CSV.
fn write_corpus(root: &Path) {
    std::fs::create_dir_all(root.join("meta")).unwrap();
    std::fs::create_dir_all(root.join("audio")).unwrap();
    let mut meta = String::from("filename,fold,target,category,esc10,src_file,take\n");
    let mut taxonomy = String::from("category,group\n");
    let mut i = 0;
    for g in GroupLabel::ALL {
        for sub in 0..SUBS {
            let category = format!("family{}_tone{sub}", g.index());
            let target = g.index() * SUBS + sub;
            taxonomy.push_str(&format!("{category},{}\n", g.name()));
            let freq = 200.0 * 2f64.powi(g.index() as i32) * (1.0 + 0.3 * sub as f64);
            for k in 0..PER_CATEGORY {
                let phase = k as f64 * 0.7;
                let amp = 0.3 + 0.04 * k as f64;
                let samples = (0..8_820)
                    .map(|n| amp * (2.0 * std::f64::consts::PI * freq * n as f64 / 44_100.0 + phase).sin())
                    .collect();
                let clip = AudioClip::new(samples, 44_100).unwrap();
                let name = format!("{}-{i:05}-A-{target}.wav", k % 5 + 1);
                std::fs::write(root.join("audio").join(&name), encode_wav_pcm16(&clip)).unwrap();
                meta.push_str(&format!("{name},{},{target},{category},False,{i},A\n", k % 5 + 1));
                i += 1;
            }
        }
    }
    std::fs::write(root.join("meta/esc50.csv"), meta).unwrap();
    std::fs::write(root.join("taxonomy.csv"), taxonomy).unwrap();
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

struct Prepared {
    _dir: tempfile::TempDir,
    data: std::path::PathBuf,
    features: std::path::PathBuf,
    splits: std::path::PathBuf,
}

fn prepared(keep_spectrograms: bool) -> Prepared {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let features = dir.path().join("features");
    let splits = dir.path().join("splits.json");
    write_corpus(&data);
    let taxonomy = data.join("taxonomy.csv");
    let mut args = vec![
        "prep",
        "--dataset",
        path(&data),
        "--mode",
        "No Filter",
        "--out",
        path(&features),
        "--taxonomy",
        path(&taxonomy),
    ];
    if keep_spectrograms {
        args.push("--keep-spectrograms");
    }
    ok(&esc(&args));
    ok(&esc(&[
        "split",
        "--dataset",
        path(&data),
        "--seed",
        "3",
        "--taxonomy",
        path(&taxonomy),
        "--out",
        path(&splits),
    ]));
    Prepared {
        data,
        features,
        splits,
        _dir: dir,
    }
}

fn train(p: &Prepared, model: &Path, level: &str) -> Output {
    esc(&[
        "train",
        "--features",
        path(&p.features),
        "--splits",
        path(&p.splits),
        "--level",
        level,
        "--epochs",
        "40",
        "--lr",
        "0.05",
        "--batch",
        "16",
        "--out",
        path(model),
    ])
}

#[test]
fn full_workflow() {
    let p = prepared(true);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(p.features.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["entries"].as_array().unwrap().len(), 7 * SUBS * PER_CATEGORY);
    let splits: serde_json::Value = serde_json::from_slice(&std::fs::read(&p.splits).unwrap()).unwrap();
    assert_eq!(splits["seed"], 3);
    // A custom taxonomy is not compared against the published table.
    assert!(splits["warnings"].as_array().unwrap().is_empty());

    let model = p.features.parent().unwrap().join("model.escm");
    ok(&train(&p, &model, "1"));
    ok(&train(&p, &model, "2:Birds"));

    // A partial model evaluates the heads it has.
    let report = p.features.parent().unwrap().join("partial.json");
    ok(&esc(&[
        "eval",
        "--model",
        path(&model),
        "--features",
        path(&p.features),
        "--splits",
        path(&p.splits),
        "--report",
        path(&report),
    ]));
    let partial: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(partial["levels"].as_array().unwrap().len(), 2);

    // Classification needs all eight classifiers.
    let wav = p.data.join("audio").join(manifest["entries"][0]["filename"].as_str().unwrap());
    let out = esc(&["classify", "--model", path(&model), "--wav", path(&wav)]);
    assert_eq!(out.status.code(), Some(2));

    ok(&train(&p, &model, "all"));
    let report = p.features.parent().unwrap().join("report.json");
    let out = esc(&[
        "eval",
        "--model",
        path(&model),
        "--features",
        path(&p.features),
        "--splits",
        path(&p.splits),
        "--end-to-end",
        "--report",
        path(&report),
    ]);
    ok(&out);
    let full: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(full["levels"].as_array().unwrap().len(), 8);
    assert!(full["end_to_end"]["accuracy"].as_f64().unwrap() > 0.5);
    let md = std::fs::read_to_string(report.with_extension("md")).unwrap();
    assert!(md.contains("| Classification Accuracy |"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Highest Validation Accuracy"));

    let out = esc(&["classify", "--model", path(&model), "--wav", path(&wav)]);
    ok(&out);
    let prediction: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let expected = manifest["entries"][0]["category"].as_str().unwrap();
    assert_eq!(prediction["category"], expected);
    assert_eq!(prediction["group_probs"].as_array().unwrap().len(), 7);

    let png = p.features.parent().unwrap().join("png");
    ok(&esc(&["export", "--features", path(&p.features), "--png", path(&png)]));
    assert_eq!(std::fs::read_dir(&png).unwrap().count(), 7 * SUBS * PER_CATEGORY);
}

#[test]
fn export_recomputes_missing_spectrograms() {
    let p = prepared(false);
    let png = p.features.parent().unwrap().join("png");
    ok(&esc(&["export", "--features", path(&p.features), "--png", path(&png)]));
    let first = std::fs::read_dir(&png).unwrap().next().unwrap().unwrap().path();
    assert_eq!(&std::fs::read(first).unwrap()[1..4], b"PNG");
}

#[test]
fn divergence_exits_with_three() {
    let p = prepared(false);
    let model = p.features.parent().unwrap().join("model.escm");
    let out = esc(&[
        "train",
        "--features",
        path(&p.features),
        "--splits",
        path(&p.splits),
        "--level",
        "1",
        "--lr",
        "1e30",
        "--out",
        path(&model),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!model.exists());
}

#[test]
fn usage_and_data_errors() {
    assert_eq!(esc(&[]).status.code(), Some(1));
    assert_eq!(esc(&["prep", "--dataset", "x", "--mode", "nonsense", "--out", "y"]).status.code(), Some(1));
    assert_eq!(esc(&["train", "--level", "3", "--features", "f", "--splits", "s", "--out", "m"]).status.code(), Some(1));
    assert_eq!(esc(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere");
    let out = esc(&["split", "--dataset", path(&missing), "--seed", "0", "--out", path(&dir.path().join("s.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));

    let bogus = dir.path().join("bogus.escm");
    std::fs::write(&bogus, b"ESCM\x01\x00garbage").unwrap();
    let out = esc(&["classify", "--model", path(&bogus), "--wav", path(&missing)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn builtin_taxonomy_split_records_domestic_warning() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    std::fs::create_dir_all(data.join("meta")).unwrap();
    let mut meta = String::from("filename,fold,target,category,esc10,src_file,take\n");
    for (i, category) in ["dog", "rain", "crow", "laughing", "airplane", "clock_tick", "siren"].iter().enumerate() {
        for k in 0..5 {
            meta.push_str(&format!("{}-{i}{k}-A-0.wav,{},0,{category},False,0,A\n", k + 1, k + 1));
        }
    }
    std::fs::write(data.join("meta/esc50.csv"), meta).unwrap();
    let splits = dir.path().join("splits.json");
    ok(&esc(&["split", "--dataset", path(&data), "--seed", "1", "--out", path(&splits)]));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&splits).unwrap()).unwrap();
    let warnings = v["warnings"].as_array().unwrap();
    assert_eq!(warnings.len(), 1);
    assert!(warnings[0].as_str().unwrap().starts_with("Domestic"));
}
