use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use causal_filter::anneal::{markers_from_json, read_curve_csv};
use causal_filter::{
    Builtin, HiddenMarkovProcess, JointSource, Partition, SelectionTable, SoftModel, WordJoint,
};
use tempfile::TempDir;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_causal-filter"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = cli(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn text(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_golden_mean_obeys_grammar() {
    let dir = TempDir::new().unwrap();
    ok(&[
        "generate",
        "--process",
        "golden_mean",
        "--length",
        "100",
        "--seed",
        "1",
        "--out",
        s(dir.path()),
    ]);
    let series = text(dir.path(), "series.txt");
    assert!(series.ends_with('\n'));
    let body = series.trim_end();
    assert_eq!(body.len(), 100);
    assert!(!body.contains("00"));
}

#[test]
fn generate_period4_is_a_rotation() {
    let dir = TempDir::new().unwrap();
    ok(&[
        "generate",
        "--process",
        "period4",
        "--length",
        "8",
        "--seed",
        "0",
        "--out",
        s(dir.path()),
    ]);
    let body = text(dir.path(), "series.txt").trim_end().to_string();
    let rotations = ["00110011", "01100110", "11001100", "10011001"];
    assert!(rotations.contains(&body.as_str()), "{body}");
}

#[test]
fn unknown_process_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let out = cli(&[
        "generate",
        "--process",
        "nope",
        "--length",
        "8",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

#[test]
fn exact_summary_and_round_trips() {
    let dir = TempDir::new().unwrap();
    ok(&["exact", "--process", "golden_mean", "--out", s(dir.path())]);
    let summary: serde_json::Value =
        serde_json::from_str(&text(dir.path(), "summary.json")).unwrap();
    assert!((summary["E"].as_f64().unwrap() - 0.25).abs() < 0.01);
    assert!((summary["C_mu"].as_f64().unwrap() - 0.92).abs() < 0.01);
    assert!((summary["H_past"].as_f64().unwrap() - 2.25).abs() < 0.01);
    assert_eq!(summary["states"], 2);

    let expected = HiddenMarkovProcess::builtin(Builtin::GoldenMean)
        .exact_joint(3, 2)
        .unwrap();
    let joint = WordJoint::read_csv(
        fs::File::open(dir.path().join("joint.csv")).unwrap(),
        Some(2),
        JointSource::Exact,
    )
    .unwrap();
    assert_eq!(joint.matrix(), expected.matrix());
    let p = Partition::from_json(&text(dir.path(), "partition.json"), joint.shape()).unwrap();
    assert_eq!(p.n_states(), 2);
}

#[test]
fn exact_rrxor_has_eight_states() {
    let dir = TempDir::new().unwrap();
    ok(&["exact", "--process", "rrxor", "--out", s(dir.path())]);
    let summary: serde_json::Value =
        serde_json::from_str(&text(dir.path(), "summary.json")).unwrap();
    assert_eq!(summary["states"], 8);
    assert!((summary["E"].as_f64().unwrap() - 0.230).abs() < 0.005);
}

#[test]
fn spec_file_matches_builtin() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("even.json");
    let process = HiddenMarkovProcess::builtin(Builtin::Even);
    fs::write(&spec, serde_json::to_string(&process.to_spec()).unwrap()).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["exact", "--spec", s(&spec), "--out", s(&a)]);
    ok(&["exact", "--process", "even", "--out", s(&b)]);
    for name in ["joint.csv", "partition.json", "summary.json"] {
        assert_eq!(text(&a, name), text(&b, name), "{name}");
    }
}

#[test]
fn malformed_spec_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("bad.json");
    fs::write(
        &spec,
        r#"{"name":"x","n_states":1,"alphabet_size":2,"transitions":[[[0.5]],[[0.2]]]}"#,
    )
    .unwrap();
    let out = cli(&["exact", "--spec", s(&spec), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ocf_recovers_the_exact_partition() {
    let dir = TempDir::new().unwrap();
    let exact = dir.path().join("exact");
    let ocf = dir.path().join("ocf");
    ok(&["exact", "--process", "golden_mean", "--out", s(&exact)]);
    ok(&["ocf", "--process", "golden_mean", "--out", s(&ocf)]);
    let shape = HiddenMarkovProcess::builtin(Builtin::GoldenMean)
        .exact_joint(3, 2)
        .unwrap()
        .shape();
    let a = Partition::from_json(&text(&exact, "partition.json"), shape).unwrap();
    let b = Partition::from_json(&text(&ocf, "partition.json"), shape).unwrap();
    assert!(a.same_grouping(&b));
    assert!(a.max_morph_deviation(&b) < 1e-6);
}

#[test]
fn ocf_outputs_round_trip() {
    let dir = TempDir::new().unwrap();
    ok(&["ocf", "--process", "rrxor", "--out", s(dir.path())]);
    let markers = markers_from_json(&text(dir.path(), "markers.json")).unwrap();
    assert!(
        markers.contains_key(&4) && markers.contains_key(&8),
        "{markers:?}"
    );
    let points = read_curve_csv(fs::File::open(dir.path().join("curve.csv")).unwrap()).unwrap();
    for m in markers.values() {
        assert_eq!(points[m.index].lambda, m.lambda);
    }
    let j = HiddenMarkovProcess::builtin(Builtin::Rrxor)
        .exact_joint(3, 2)
        .unwrap();
    let model = SoftModel::from_json(&text(dir.path(), "model.json"), &j).unwrap();
    let (rate, _) = model.information(&j);
    assert!((rate - points.last().unwrap().i_past_s).abs() < 1e-12);
}

#[test]
fn ocf_period4_stays_on_the_diagonal() {
    let dir = TempDir::new().unwrap();
    ok(&["ocf", "--process", "period4", "--out", s(dir.path())]);
    let points = read_curve_csv(fs::File::open(dir.path().join("curve.csv")).unwrap()).unwrap();
    assert!(points
        .iter()
        .all(|p| (p.i_s_future - p.i_past_s).abs() < 0.02));
}

#[test]
fn ocf_is_deterministic_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["ocf", "--process", "even", "--seed", "3", "--out", s(&a)]);
    let out = Command::new(env!("CARGO_BIN_EXE_causal-filter"))
        .env("CAUSAL_FILTER_THREADS", "1")
        .args(["ocf", "--process", "even", "--seed", "3", "--out", s(&b)])
        .output()
        .unwrap();
    assert!(out.status.success());
    for name in ["curve.csv", "markers.json", "partition.json", "model.json"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let leftovers: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n.to_string_lossy().ends_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_causal-filter"))
        .env("CAUSAL_FILTER_THREADS", "zero")
        .args(["exact", "--process", "even", "--out", s(dir.path())])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oce_selection_table_is_consistent() {
    let dir = TempDir::new().unwrap();
    ok(&[
        "oce",
        "--process",
        "golden_mean",
        "--length",
        "100",
        "--seed",
        "2",
        "--out",
        s(dir.path()),
    ]);
    let (rows, chosen) =
        SelectionTable::read_csv(fs::File::open(dir.path().join("selection.csv")).unwrap())
            .unwrap();
    assert_eq!(
        rows.iter().map(|r| r.n_c).collect::<Vec<_>>(),
        vec![1, 2, 3, 4, 5, 6]
    );
    let best = rows
        .iter()
        .max_by(|a, b| a.i_corrected.total_cmp(&b.i_corrected))
        .unwrap();
    assert_eq!(best.n_c, chosen);
    assert!(rows.windows(2).all(|w| w[1].i_raw >= w[0].i_raw));
    let shape = HiddenMarkovProcess::builtin(Builtin::GoldenMean)
        .exact_joint(3, 2)
        .unwrap()
        .shape();
    let p = Partition::from_json(&text(dir.path(), "partition.json"), shape).unwrap();
    assert!(p.n_states() <= chosen);
}

#[test]
fn oce_golden_mean_mostly_selects_two_states() {
    let dir = TempDir::new().unwrap();
    let mut twos = 0;
    for seed in 0..5 {
        let out = dir.path().join(seed.to_string());
        let seed = seed.to_string();
        ok(&[
            "oce",
            "--process",
            "golden_mean",
            "--length",
            "100",
            "--seed",
            &seed,
            "--out",
            s(&out),
        ]);
        let (_, chosen) =
            SelectionTable::read_csv(fs::File::open(out.join("selection.csv")).unwrap()).unwrap();
        twos += usize::from(chosen == 2);
    }
    assert!(twos >= 3, "{twos} of 5 samples chose N_c = 2");
}

#[test]
fn oce_from_data_file_matches_sampling() {
    let dir = TempDir::new().unwrap();
    let gen = dir.path().join("gen");
    let sampled = dir.path().join("sampled");
    let loaded = dir.path().join("loaded");
    ok(&[
        "generate",
        "--process",
        "even",
        "--length",
        "300",
        "--seed",
        "4",
        "--out",
        s(&gen),
    ]);
    ok(&[
        "oce",
        "--process",
        "even",
        "--length",
        "300",
        "--seed",
        "4",
        "--out",
        s(&sampled),
    ]);
    let data = gen.join("series.txt");
    ok(&[
        "oce",
        "--data",
        s(&data),
        "--seed",
        "4",
        "--out",
        s(&loaded),
    ]);
    assert_eq!(
        text(&sampled, "selection.csv"),
        text(&loaded, "selection.csv")
    );
}

#[test]
fn oce_short_series_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let out = cli(&[
        "oce",
        "--process",
        "golden_mean",
        "--length",
        "4",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too short"));
}

#[test]
fn oce_rejects_bad_symbols_in_data() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("series.txt");
    fs::write(&data, "0101x0110\n").unwrap();
    let out = cli(&["oce", "--data", s(&data), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
}
