//! End-to-end command tests: file outputs, determinism, error mapping.

use std::fs;
use std::str::FromStr;

use tempfile::tempdir;

use ladpm::cli::{cmd_convergence, cmd_sample, cmd_sweep_lambda};
use ladpm::config::ExperimentConfig;
use ladpm::error::Error;

fn point_mass_config(num_samples: usize) -> ExperimentConfig {
    let text = format!(
        r#"{{
            "oracle": {{ "point-mass": {{ "x0": [0.7] }} }},
            "sampler": {{ "method": "ddim", "n": 10, "r": 2, "lambda": 0.0,
                          "spacing": "uniform-t", "seed": 12, "num_samples": {num_samples},
                          "record_trajectory": false }}
        }}"#
    );
    ExperimentConfig::from_str(&text).unwrap()
}

#[test]
fn sample_writes_exact_point_mass_rows() {
    let dir = tempdir().unwrap();
    cmd_sample(&point_mass_config(16), dir.path()).unwrap();

    let csv = fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x0"));
    let mut rows = 0;
    for line in lines {
        let v: f64 = line.parse().unwrap();
        assert!((v - 0.7).abs() < 1e-6, "row {v}");
        rows += 1;
    }
    assert_eq!(rows, 16);

    // binary dump agrees with the CSV
    let bin = fs::read(dir.path().join("samples.bin")).unwrap();
    assert_eq!(bin.len(), 16 + 16 * 8);
    assert_eq!(u64::from_le_bytes(bin[0..8].try_into().unwrap()), 16);
    assert_eq!(u64::from_le_bytes(bin[8..16].try_into().unwrap()), 1);
    let first = f64::from_le_bytes(bin[16..24].try_into().unwrap());
    assert!((first - 0.7).abs() < 1e-6);

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "sample");
    assert_eq!(report["seed"], 12);
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
    assert!(report["metrics"]["wasserstein1"].as_f64().unwrap() < 1e-6);
}

#[test]
fn sample_is_byte_identical_across_runs() {
    let cfg = point_mass_config(32);
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    cmd_sample(&cfg, a.path()).unwrap();
    cmd_sample(&cfg, b.path()).unwrap();
    for name in ["samples.csv", "samples.bin"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn trajectory_file_appears_when_requested() {
    let mut cfg = point_mass_config(2);
    cfg.sampler.record_trajectory = true;
    let dir = tempdir().unwrap();
    cmd_sample(&cfg, dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("chain,step,t,z0,xhat0,xtilde0"));
    // 2 chains x 10 steps
    assert_eq!(lines.count(), 20);
}

#[test]
fn sweep_with_single_zero_strength_matches_sample_metric() {
    let cfg = point_mass_config(64);
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    let sample = cmd_sample(&cfg, a.path()).unwrap();
    let sweep = cmd_sweep_lambda(&cfg, &[0.0], b.path()).unwrap();
    let w1 = sample.metrics["wasserstein1"].as_f64().unwrap();
    let row = sweep.metrics["metric"].as_array().unwrap()[0]
        .as_f64()
        .unwrap();
    assert_eq!(w1, row);
}

#[test]
fn sweep_metric_is_constant_for_point_mass() {
    // stationary estimates: extrapolation is a no-op at every strength
    let cfg = point_mass_config(64);
    let dir = tempdir().unwrap();
    let sweep = cmd_sweep_lambda(&cfg, &[0.0, 0.1, 0.3], dir.path()).unwrap();
    let metric: Vec<f64> = sweep.metrics["metric"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for w in &metric {
        assert!((w - metric[0]).abs() < 1e-9, "{metric:?}");
    }
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with("lambda,metric,xhat_mse\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn convergence_rejects_stochastic_methods() {
    let text = r#"{
        "oracle": { "point-mass": { "x0": [0.7] } },
        "sampler": { "method": "ddpm", "n": 10, "r": 2, "lambda": 0.0,
                     "spacing": "uniform-t", "seed": 0, "num_samples": 1,
                     "record_trajectory": false }
    }"#;
    let cfg = ExperimentConfig::from_str(text).unwrap();
    let dir = tempdir().unwrap();
    let err = cmd_convergence(&cfg, &[10, 20], dir.path()).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn config_errors_carry_location_information() {
    let err = ExperimentConfig::from_str("{\n  \"oracle\": 3\n}").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("line"), "{msg}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn missing_config_file_maps_to_io_exit_code() {
    let err = ExperimentConfig::from_path(std::path::Path::new("/nonexistent/x.json")).unwrap_err();
    assert_eq!(err.exit_code(), 4);
}
