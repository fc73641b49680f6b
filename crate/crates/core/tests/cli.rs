mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use volclust::{FeatureMatrix, HardClustering};

const BIN: &str = env!("CARGO_BIN_EXE_volclust");

fn fixture_copy() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/market");
    for entry in fs::read_dir(src).unwrap() {
        let entry = entry.unwrap();
        fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
    }
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn ingest_writes_nine_standardized_columns() {
    let dir = fixture_copy();
    let config = dir.path().join("volclust.toml");
    let out = run(&["ingest", "--config", path_str(&config)]);
    assert!(out.status.success(), "{}", stderr(&out));

    let text = fs::read_to_string(dir.path().join("out/features.csv")).unwrap();
    let data = FeatureMatrix::read_csv(text.as_bytes(), "features.csv").unwrap();
    assert_eq!(data.n_features(), 9);
    assert_eq!(data.names()[0], "INDIAVIX");
    assert!(data.n_rows() > 400);
    for j in 0..9 {
        let mean = data.column(j).iter().sum::<f64>() / data.n_rows() as f64;
        assert!(mean.abs() < 1e-6);
    }
}

#[test]
fn missing_series_file_is_a_data_error_naming_it() {
    let dir = fixture_copy();
    fs::remove_file(dir.path().join("nifty.csv")).unwrap();
    let out = run(&["ingest", "--config", path_str(&dir.path().join("volclust.toml"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nifty.csv"), "{}", stderr(&out));
}

#[test]
fn corrupted_series_names_file_and_line() {
    let dir = fixture_copy();
    let path = dir.path().join("crude.csv");
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("2015-01-02,not-a-number\n");
    fs::write(&path, text).unwrap();
    let out = run(&["ingest", "--config", path_str(&dir.path().join("volclust.toml"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("crude.csv") && err.contains("line"), "{err}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["cluster", "--algorithm", "gmm", "--k", "1"]).status.code(), Some(1));
    let out = run(&["cluster", "--algorithm", "gmm", "--k", "1"]);
    assert!(stderr(&out).contains("k ≥ 2"));
    assert_eq!(run(&["sweep", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&[]).status.code(), Some(1));
}

fn write_blobs(dir: &Path) -> (PathBuf, Vec<usize>) {
    let (data, truth) = common::three_blobs(5);
    let path = dir.join("blobs.csv");
    let mut buf = Vec::new();
    data.write_csv(&mut buf).unwrap();
    fs::write(&path, buf).unwrap();
    (path, truth)
}

fn labels_of(path: &Path) -> Vec<usize> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect()
}

#[test]
fn cluster_recovers_blobs_and_reports_matching_silhouette() {
    let dir = tempfile::tempdir().unwrap();
    let (features, truth) = write_blobs(dir.path());
    for alg in ["gmm", "som", "kernel_kmeans"] {
        let out_dir = dir.path().join(alg);
        let out = run(&[
            "cluster", "--algorithm", alg, "--k", "3", "--features", path_str(&features), "--out", path_str(&out_dir),
        ]);
        assert!(out.status.success(), "{alg}: {}", stderr(&out));

        let labels = labels_of(&out_dir.join("assignments.csv"));
        assert!(common::adjusted_rand(&labels, &truth) > 0.99, "{alg}");

        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out_dir.join("validity.json")).unwrap()).unwrap();
        let reported = summary["silhouette"].as_f64().unwrap();
        let data = FeatureMatrix::read_csv(fs::read(&features).unwrap().as_slice(), "blobs").unwrap();
        let (oracle, _) = common::brute_silhouette(&data, &labels, 3);
        assert!(reported >= 0.7);
        assert!((reported - oracle).abs() < 1e-9, "{reported} vs {oracle}");
        HardClustering::new(labels, 3).unwrap();
    }
    assert!(dir.path().join("gmm/gmm_model.json").exists());
    assert!(dir.path().join("som/som_grid.csv").exists());
}

#[test]
fn cluster_is_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (features, _) = write_blobs(dir.path());
    let outputs: Vec<String> = ["a", "b"]
        .iter()
        .map(|name| {
            let out_dir = dir.path().join(name);
            let out = run(&[
                "cluster", "--algorithm", "gmm", "--k", "4", "--seed", "7", "--features", path_str(&features), "--out", path_str(&out_dir),
            ]);
            assert!(out.status.success());
            fs::read_to_string(out_dir.join("assignments.csv")).unwrap()
                + &fs::read_to_string(out_dir.join("gmm_model.json")).unwrap()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn small_sweep_then_report() {
    let dir = fixture_copy();
    let config = dir.path().join("volclust.toml");
    let mut text = fs::read_to_string(&config).unwrap();
    text.push_str("\n[sweep]\nclusters = { min = 2, max = 3 }\nfeatures = { min = 2, max = 3 }\nrestarts = 1\n");
    fs::write(&config, text).unwrap();
    let cfg = path_str(&config);

    assert!(run(&["ingest", "--config", cfg]).status.success());
    let out = run(&["sweep", "--config", cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out_dir = dir.path().join("out");
    for alg in ["kernel_kmeans", "som", "gmm"] {
        for idx in ["dunn", "silhouette"] {
            let table = fs::read_to_string(out_dir.join(format!("{alg}_{idx}.csv"))).unwrap();
            assert!(table.starts_with("clusters,2,3\n"), "{table}");
            assert_eq!(table.lines().count(), 3);
        }
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["tables"].as_array().unwrap().len(), 6);

    let out = run(&["report", "--config", cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    let svgs = fs::read_dir(&out_dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg"))
        .count();
    assert_eq!(svgs, 12);

    // a damaged table is reported by name
    fs::write(out_dir.join("som_dunn.csv"), "clusters,2,3\n2,0.1\n").unwrap();
    let out = run(&["report", "--config", cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("som_dunn.csv"));
}
