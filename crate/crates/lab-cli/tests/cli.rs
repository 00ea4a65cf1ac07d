use std::path::{Path, PathBuf};
use std::process::Command;

use ergolab::curve::read_csv;
use ergolab_cli::{
    plot_csv, run, Cache, ExperimentConfig, LabError, PlotStyle, RunOptions, EXIT_CONFIG_INVALID, EXIT_GATE_FAILED,
    EXIT_OK,
};

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&config_path(name)).unwrap()
}

#[test]
fn spectrum_csv_has_the_peak_row() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::new(dir.path().join("cache"));
    let opts = RunOptions {
        no_cache: false,
        output_dir: Some(dir.path().join("out")),
    };
    let report = run(&load("spectrum-full2.json"), &cache, &opts).unwrap();
    report.check().unwrap();
    let out = report.output.clone().unwrap();
    let csv = std::fs::read_to_string(out.join("spectrum.csv")).unwrap();
    let curves = read_csv(&csv).unwrap();
    assert_eq!(curves[0].points.len(), 41);
    let peak = curves[0].max_point().unwrap();
    assert_eq!(peak.x, 0.5);
    assert!((peak.value - 2f64.ln()).abs() < 1e-12);
    assert!(out.join("spectrum.svg").exists() && out.join("report.json").exists());
}

#[test]
fn repeated_run_hits_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::new(dir.path());
    let cfg = load("pressure-golden.json");
    let first = run(&cfg, &cache, &RunOptions::default()).unwrap();
    let second = run(&cfg, &cache, &RunOptions::default()).unwrap();
    assert!(!first.cache_hit && second.cache_hit);
    assert_eq!(first.payload_hash, second.payload_hash);
    assert_eq!(second.payload.hash(), second.payload_hash);
    assert_eq!(cache.ls().unwrap().len(), 1);
    assert_eq!(cache.clear().unwrap(), 1);
    assert!(cache.ls().unwrap().is_empty());
}

#[test]
fn thread_count_does_not_change_the_payload() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::new(dir.path());
    let text = std::fs::read_to_string(config_path("ldp-level2.json")).unwrap();
    let one = ExperimentConfig::parse(&text.replace(r#""threads": 4"#, r#""threads": 1"#), None).unwrap();
    let four = ExperimentConfig::parse(&text, None).unwrap();
    assert_ne!(one.hash(), four.hash());
    let opts = RunOptions {
        no_cache: true,
        output_dir: None,
    };
    let a = run(&one, &cache, &opts).unwrap();
    let b = run(&four, &cache, &opts).unwrap();
    assert_eq!(a.payload_hash, b.payload_hash);
}

#[test]
fn unsorted_grid_is_rejected_with_a_pointer() {
    let text = r#"{"kind": "spectrum", "system": {"full": 2},
        "params": {"observable": {"indicator": 1}, "grid": [0.1, 0.3, 0.2]}}"#;
    match ExperimentConfig::parse(text, None) {
        Err(e @ LabError::ConfigInvalid { .. }) => {
            assert_eq!(e.exit_code(), EXIT_CONFIG_INVALID);
            assert!(e.to_string().contains("/params/grid/2"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn file_system_reference_is_resolved_before_hashing() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("sys.json"), r#""golden_mean""#).unwrap();
    let cfg_path = dir.path().join("run.json");
    std::fs::write(
        &cfg_path,
        r#"{"kind": "entropy", "system": {"file": "sys.json"}, "params": {"max_word_len": 4}}"#,
    )
    .unwrap();
    let by_file = ExperimentConfig::load(&cfg_path).unwrap();
    let inline = ExperimentConfig::parse(
        r#"{"kind": "entropy", "system": "golden_mean", "params": {"max_word_len": 4}}"#,
        None,
    )
    .unwrap();
    assert_eq!(by_file.hash(), inline.hash());
}

#[test]
fn empty_csv_is_a_schema_mismatch() {
    assert!(matches!(plot_csv("", &PlotStyle::default()), Err(LabError::SchemaMismatch(_))));
}

#[test]
fn overlay_plot_has_a_legend_entry_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(
        &load("spectrum-golden.json"),
        &Cache::new(dir.path()),
        &RunOptions {
            no_cache: true,
            output_dir: None,
        },
    )
    .unwrap();
    let csv = &report.payload.artifacts["spectrum.csv"];
    let svg = plot_csv(csv, &PlotStyle::default()).unwrap();
    assert_eq!(svg.matches(r#"class="legend""#).count(), 2);
    assert!(svg.contains(">legendre<") && svg.contains(">oracle<"));
    assert_eq!(svg, plot_csv(csv, &PlotStyle::default()).unwrap());
}

#[test]
fn bad_schedule_is_a_compute_error() {
    let text = r#"{"kind": "entropy", "system": {"full": 2}, "params": {"irregular": {"ratio": 1.0, "blocks": 10}}}"#;
    let cfg = ExperimentConfig::parse(text, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        run(&cfg, &Cache::new(dir.path()), &RunOptions::default()),
        Err(LabError::Compute(ergolab::Error::BadSchedule(_)))
    ));
}

fn binary(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ergolab"))
        .args(args)
        .env("ERGOLAB_CACHE_DIR", dir.join("cache"))
        .current_dir(dir)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr),
    )
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let good = config_path("pressure-full2.json");
    let (code, out) = binary(d, &["validate", good.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{out}");

    std::fs::write(d.join("bad.json"), r#"{"kind": "pressure", "system": {"full": 2}, "params": {}}"#).unwrap();
    let (code, out) = binary(d, &["run", "bad.json"]);
    assert_eq!(code, EXIT_CONFIG_INVALID, "{out}");

    // depth-3 marginals leave a d* truncation bound of 1/4, far above ε
    std::fs::write(
        d.join("gate.json"),
        r#"{"kind": "approx", "system": {"full": 2}, "params": {"target": [
            {"weight": 0.5, "component": {"periodic": [0]}},
            {"weight": 0.5, "component": {"periodic": [1]}}], "depth": 3, "epsilon": 0.001}}"#,
    )
    .unwrap();
    let (code, out) = binary(d, &["run", "gate.json", "--out", "out"]);
    assert_eq!(code, EXIT_GATE_FAILED, "{out}");
    assert!(out.contains("certificate"));
    assert!(std::fs::read_dir(d.join("out")).unwrap().next().is_some());

    let (code, out) = binary(d, &["cache", "ls"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("approx"));
    let (code, _) = binary(d, &["cache", "clear"]);
    assert_eq!(code, EXIT_OK);

    std::fs::write(d.join("empty.csv"), "").unwrap();
    let (code, out) = binary(d, &["plot", "empty.csv"]);
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("schema"));
}
