use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mbem::pipeline::idx::IdxImageSet;
use mbem::pipeline::{write_idx_images, write_idx_labels};

fn iris() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/iris.csv")
}

fn mbem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbem")).args(args).output().expect("binary runs")
}

fn simulate(out: &Path, extra: &[&str]) -> Output {
    let template = iris();
    let mut args = vec![
        "simulate",
        "--template",
        template.to_str().unwrap(),
        "-n",
        "1500",
        "--seed",
        "7",
        "--epochs",
        "3",
        "--repetitions",
        "2",
        "--out-dir",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    mbem(&args)
}

#[test]
fn simulate_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), &["--variant", "batch-em,minibatch,minibatch-truncated", "--batch-frac", "0.1,0.2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["results.csv", "results_notiming.csv", "summary.csv", "summary.json", "meta.json", "boxplot_loglik.csv", "boxplot_ari.csv"] {
        assert!(dir.path().join(file).exists(), "missing {file}");
    }
    let results = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let mut lines = results.lines();
    assert_eq!(
        lines.next().unwrap(),
        "variant,repetition,seed,status,loglik,se,ari,iterations,data_visits,truncation_events,wall_seconds,cpu_seconds"
    );
    // batch-em plus two fractions of two mini-batch kinds, two repetitions each.
    assert_eq!(lines.count(), 10);
    let meta = std::fs::read_to_string(dir.path().join("meta.json")).unwrap();
    assert!(meta.contains("splitmix64"), "{meta}");
}

#[test]
fn reruns_and_worker_counts_agree() {
    let read = |workers: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = simulate(dir.path(), &["--workers", workers]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(dir.path().join("results_notiming.csv")).unwrap()
    };
    let one = read("1");
    assert_eq!(one, read("1"));
    assert_eq!(one, read("2"));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    let json = format!(
        r#"{{"source": {{"kind": "template_csv", "path": {:?}, "n": 800}}, "variants": ["minibatch"], "batch_fractions": [0.5], "epochs": 2, "seed": 3}}"#,
        iris()
    );
    std::fs::write(&config, json).unwrap();
    let out_dir = dir.path().join("out");
    let out = mbem(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--batch-frac",
        "0.25",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = std::fs::read_to_string(out_dir.join("results_notiming.csv")).unwrap();
    let row = results.lines().nth(1).unwrap();
    assert!(row.starts_with("minibatch@0.25,0,"), "{row}");
    // Two epochs of 800 points at N = 200.
    assert!(row.ends_with(",8,1600,0"), "{row}");
}

#[test]
fn bench_prints_a_single_run() {
    let out = mbem(&["bench", "--template", iris().to_str().unwrap(), "-n", "2000", "--seed", "1", "--epochs", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 2, "{stdout}");
    assert!(stdout.lines().nth(1).unwrap().starts_with("minibatch@0.1,0,"));
}

#[test]
fn mnist_pipeline_on_synthetic_idx() {
    let dir = tempfile::tempdir().unwrap();
    // Two bright blobs on 6x6 images; the border pixels are always zero.
    let write = |prefix: &str, n: usize| {
        let mut pixels = Vec::with_capacity(n * 36);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let class = (i % 2) as u8;
            labels.push(class);
            for p in 0..36 {
                let (r, c) = (p / 6, p % 6);
                let border = r == 0 || c == 0 || r == 5 || c == 5;
                let lit = if class == 0 { c < 3 } else { c >= 3 };
                let noise = ((i * 31 + p * 17) % 23) as u8;
                pixels.push(if border { 0 } else if lit { 200 + noise } else { noise });
            }
        }
        let set = IdxImageSet { n, rows: 6, cols: 6, pixels, labels: None };
        write_idx_images(&set, std::fs::File::create(dir.path().join(format!("{prefix}-images-idx3-ubyte"))).unwrap()).unwrap();
        write_idx_labels(&labels, std::fs::File::create(dir.path().join(format!("{prefix}-labels-idx1-ubyte"))).unwrap()).unwrap();
    };
    write("train", 300);
    write("t10k", 100);
    let out_dir = dir.path().join("out");
    let out = mbem(&[
        "mnist",
        "--mnist-dir",
        dir.path().to_str().unwrap(),
        "--d-pc",
        "2",
        "-g",
        "2",
        "--seed",
        "5",
        "--epochs",
        "5",
        "--init",
        "seeded-partition",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = std::fs::read_to_string(out_dir.join("results_notiming.csv")).unwrap();
    let variants: Vec<&str> = results.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(variants, ["batch-em", "minibatch@0.1", "kmeans"]);
    for line in results.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[3], "ok", "{line}");
        let ari: f64 = cols[6].parse().unwrap();
        assert!(ari > 0.9, "{line}");
    }
}

#[test]
fn missing_inputs_are_reported() {
    let out = mbem(&["simulate", "--template", iris().to_str().unwrap(), "-n", "100"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--out-dir"));

    let dir = tempfile::tempdir().unwrap();
    let out = mbem(&["mnist", "--mnist-dir", dir.path().to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());

    let out = simulate(dir.path(), &["--variant", "no-such-variant"]);
    assert!(!out.status.success());
}
