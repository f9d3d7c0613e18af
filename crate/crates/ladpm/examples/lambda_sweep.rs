//! Sweep of the lookahead strength on a Gaussian mixture with a noisy
//! predictor. With an exact predictor zero strength is already optimal;
//! predictor noise moves the best strength into the interior of the grid.
//! Run with `cargo run --example lambda_sweep`.

use ladpm::cli::cmd_sweep_lambda;
use ladpm::config::ExperimentConfig;
use std::str::FromStr;

fn main() -> ladpm::Result<()> {
    let dir = std::env::temp_dir().join("ladpm_sweep");
    let text = r#"{
        "oracle": { "gmm": {
            "weights": [0.5, 0.5],
            "means": [[-1.0], [1.0]],
            "stds": [0.2, 0.2],
            "noise_scale": 0.4
        } },
        "sampler": { "method": "ddim", "n": 10, "r": 2, "lambda": 0.0,
                     "spacing": "uniform-t", "seed": 5, "num_samples": 4000,
                     "record_trajectory": false },
        "metrics": { "wasserstein1": true, "moments": false,
                     "reference_samples": 20000 }
    }"#;
    let cfg = ExperimentConfig::from_str(text)?;
    let lambdas: Vec<f64> = (0..=8).map(|i| i as f64 * 0.05).collect();
    let report = cmd_sweep_lambda(&cfg, &lambdas, &dir)?;

    println!("ddim on a bimodal mixture, N = 10, predictor noise scale 0.4\n");
    println!("{:>8} {:>10}", "lambda", "W1");
    let metric = report.metrics["metric"].as_array().unwrap();
    for (lam, w1) in lambdas.iter().zip(metric) {
        println!("{lam:>8.2} {:>10.5}", w1.as_f64().unwrap());
    }
    if let Some(best) = report.metrics.get("best_lambda") {
        println!("\nbest strength: {best}");
    }
    Ok(())
}
