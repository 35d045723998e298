use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use adeval::data::load_cache;
use adeval::metrics::{write_score_file, Orientation, ScoreFile, ScoreRow};
use adeval::rng::SplitMix64;
use adeval::split::read_index_list;
use tempfile::TempDir;

fn adeval(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adeval"))
        .args(args)
        .current_dir(cwd)
        .env_remove("ADEVAL_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// 240 normals around the origin and 16 anomalies shifted by 3.
fn write_toy(dir: &Path) {
    let mut rng = SplitMix64::new(99);
    let mut s = String::from("f0,f1,proto,class\n");
    for i in 0..256 {
        let anomalous = i % 16 == 0;
        let shift = if anomalous { 3.0 } else { 0.0 };
        let proto = ["tcp", "udp"][(rng.next_u64() % 2) as usize];
        s += &format!(
            "{:.6},{:.6},{},{}\n",
            shift + rng.next_f64(),
            shift + rng.next_f64(),
            proto,
            if anomalous { "attack" } else { "normal" }
        );
    }
    fs::write(dir.join("toy.csv"), s).unwrap();
}

const CONFIG: &str = r#"
data_dir = "."

[dataset.toy]
path = "toy.csv"
label = "class"
anomaly_classes = ["attack"]
categorical = ["proto"]

[experiment.toy_lof]
dataset = "toy"
n_runs = 3

[experiment.toy_lof.split]
strategy = "proposed"
seed = 3
reshuffle_each_run = true

[experiment.toy_lof.detector]
kind = "lof"
k = 10

[experiment.toy_ext]
dataset = "toy"
n_runs = 3
label = "Centroid"

[experiment.toy_ext.split]
strategy = "proposed"
seed = 3
reshuffle_each_run = true

[experiment.toy_ext.detector]
kind = "external"
name = "Centroid"
scores = "scores/run-{run}.csv"
"#;

fn setup() -> TempDir {
    let tmp = tempfile::tempdir().unwrap();
    write_toy(tmp.path());
    fs::write(tmp.path().join("toy.toml"), CONFIG).unwrap();
    tmp
}

#[test]
fn run_writes_aggregate_with_f1_and_is_reproducible() {
    let tmp = setup();
    let dir = tmp.path();
    let o = adeval(&["run", "-c", "toy.toml", "-e", "toy_lof", "-o", "out"], dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.join("out/aggregate.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert!(header.contains(&"f1_mean") && header.contains(&"f1_std"), "{csv}");
    assert!(csv.lines().nth(1).unwrap().starts_with("toy,LOF,3,"));
    assert!(dir.join("out/resolved-config.toml").is_file());
    assert!(dir.join("out/results/toy/LOF/run-2.json").is_file());
    let report = fs::read_to_string(dir.join("out/report.md")).unwrap();
    assert!(report.contains("| LOF |"));

    let again = adeval(&["run", "-c", "toy.toml", "-e", "toy_lof", "-o", "again"], dir);
    assert!(again.status.success());
    for f in ["aggregate.csv", "report.md", "results/toy/LOF/run-1.json", "results/toy/LOF/aggregate.json"] {
        assert_eq!(fs::read(dir.join("out").join(f)).unwrap(), fs::read(dir.join("again").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn missing_label_column_is_a_data_error() {
    let tmp = setup();
    let o = adeval(&["ingest", "-c", "toy.toml", "--set", "dataset.toy.label=\"target\""], tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let err: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(err["error"], "data");
    assert!(err["message"].as_str().unwrap().contains("`target`"));
}

#[test]
fn config_problems_exit_2() {
    let tmp = setup();
    let unknown = adeval(&["run", "-c", "toy.toml", "--set", "experiment.toy_lof.detector.neighbours=4"], tmp.path());
    assert_eq!(unknown.status.code(), Some(2), "{}", stderr(&unknown));
    let missing = adeval(&["run", "-c", "toy.toml", "-e", "nope"], tmp.path());
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("nope"));
}

#[test]
fn detector_failure_exits_4() {
    let tmp = setup();
    let o = adeval(&["run", "-c", "toy.toml", "-e", "toy_lof", "--set", "experiment.toy_lof.detector.k=5000"], tmp.path());
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("\"detector\""));
}

#[test]
fn ingest_writes_cache() {
    let tmp = setup();
    let o = adeval(&["ingest", "-c", "toy.toml", "-o", "out"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let ds = load_cache(&tmp.path().join("out/cache"), "toy").unwrap();
    assert_eq!(ds.n_samples(), 256);
    assert_eq!(ds.n_anomalies(), 16);
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary[0]["n_features"], 4);
}

#[test]
fn exported_splits_round_trip_through_external_scores() {
    let tmp = setup();
    let dir = tmp.path();
    let o = adeval(&["export-split", "-c", "toy.toml", "-e", "toy_ext", "-o", "export"], dir);
    assert!(o.status.success(), "{}", stderr(&o));

    // Stand-in for an external detector: distance from the training centroid.
    let ds = load_cache(&dir.join("export"), "toy").unwrap();
    let x = ds.features();
    fs::create_dir_all(dir.join("scores")).unwrap();
    let mut test_sets = Vec::new();
    for run in 0..3 {
        let train = read_index_list(&dir.join(format!("export/run-{run}/train.csv"))).unwrap();
        let test = read_index_list(&dir.join(format!("export/run-{run}/test.csv"))).unwrap();
        assert!(train.iter().all(|&i| !ds.labels()[i]));
        let centroid: Vec<f64> = (0..x.ncols())
            .map(|j| train.iter().map(|&i| x[[i, j]]).sum::<f64>() / train.len() as f64)
            .collect();
        let rows = test
            .iter()
            .map(|&i| ScoreRow {
                index: i,
                // Negated so the file exercises orientation normalisation.
                score: -(0..x.ncols()).map(|j| (x[[i, j]] - centroid[j]).powi(2)).sum::<f64>(),
                label: ds.labels()[i],
            })
            .collect();
        let file = ScoreFile {
            orientation: Orientation::LowIsAnomalous,
            rows,
        };
        write_score_file(&dir.join(format!("scores/run-{run}.csv")), &file).unwrap();
        test_sets.push(test);
    }
    assert_ne!(test_sets[0], test_sets[1], "reshuffled runs should differ");

    let o = adeval(&["run", "-c", "toy.toml", "-e", "toy_ext", "-o", "out"], dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.join("out/aggregate.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..3], &["toy", "Centroid", "3"]);
    let auroc: f64 = row[9].parse().unwrap();
    assert!(auroc > 0.9, "{csv}");

    // A stray file for a run beyond n_runs is refused.
    fs::copy(dir.join("scores/run-0.csv"), dir.join("scores/run-3.csv")).unwrap();
    let o = adeval(&["run", "-c", "toy.toml", "-e", "toy_ext", "-o", "out2"], dir);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn report_rerenders_from_stored_results() {
    let tmp = setup();
    let dir = tmp.path();
    assert!(adeval(&["run", "-c", "toy.toml", "-e", "toy_lof", "-o", "out"], dir).status.success());
    let before = fs::read(dir.join("out/aggregate.csv")).unwrap();
    fs::remove_file(dir.join("out/aggregate.csv")).unwrap();
    let o = adeval(&["report", "-o", "out"], dir);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(dir.join("out/aggregate.csv")).unwrap(), before);
}

#[test]
fn audits_write_json() {
    let tmp = setup();
    let dir = tmp.path();
    for (kind, file) in [("split-bias", "split-bias.json"), ("class-swap", "class-swap.json"), ("ratio", "ratio.json")] {
        let o = adeval(&["audit", "-c", "toy.toml", kind, "-e", "toy_lof", "-o", "out"], dir);
        assert!(o.status.success(), "{kind}: {}", stderr(&o));
        let text = fs::read_to_string(dir.join("out/audit/toy_lof").join(file)).unwrap();
        serde_json::from_str::<serde_json::Value>(&text).unwrap();
    }
}
