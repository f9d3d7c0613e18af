//! Empirical convergence order of each deterministic family.
//!
//! With standard-normal data the deterministic flow is the identity map,
//! so `|z_terminal - z_initial|` is pure discretization error and its
//! log-log slope against the step count is the order of the method.
//! Run with `cargo run --example convergence_orders`.

use ladpm::cli::cmd_convergence;
use ladpm::config::ExperimentConfig;
use std::str::FromStr;

fn main() -> ladpm::Result<()> {
    let dir = std::env::temp_dir().join("ladpm_convergence");
    let base = r#"{
        "oracle": { "gaussian": { "mean": [0.0, 0.0], "std": 1.0 } },
        "sampler": { "method": "METHOD", "n": 10, "r": 2, "lambda": 0.0,
                     "spacing": "uniform-log-snr", "seed": 0, "num_samples": 4,
                     "record_trajectory": false }
    }"#;

    println!(
        "{:<14} {:>8}   errors over N = 10, 20, 40, 80",
        "method", "slope"
    );
    for name in ["ddim", "s-pndm", "dpm-solver2", "dpm-solver3", "deis-tab"] {
        let cfg = ExperimentConfig::from_str(&base.replace("METHOD", name))?;
        let report = cmd_convergence(&cfg, &[10, 20, 40, 80], &dir.join(name))?;
        let slope = report.metrics["slope"].as_f64().unwrap();
        let errors: Vec<String> = report.metrics["error"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| format!("{:.2e}", v.as_f64().unwrap()))
            .collect();
        println!("{name:<14} {slope:>8.3}   {}", errors.join("  "));
    }
    Ok(())
}
