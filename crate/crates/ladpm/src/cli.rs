//! Experiment commands: run, sweep, convergence fit, theory validation.
//!
//! Every command computes first and writes second, so partial output never
//! appears; every command emits `report.json` carrying the config hash, the
//! tool version, the seed and the computed summary values. All numeric CSV
//! fields round-trip double precision exactly.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{
    default_lambda_grid, expected_sq_error, optimal_lambda, positivity_condition,
    simulate_assumption1, stationarity_residual, xhat_mse_trace, Assumption1Params,
};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::metrics::{moment_report, sliced_wasserstein, wasserstein1_1d, SampleSet};
use crate::oracle::GaussianOracle;
use crate::samplers::{run_sampler, LambdaSchedule, RunOutput, Trajectory};
use crate::stream::aux_stream;

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exact decimal round-trip of an f64.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub wall_clock_secs: f64,
    pub metrics: Map<String, Value>,
}

fn config_hash(canonical: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    format!("{:x}", hasher.finalize())
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(content.as_bytes())?;
    Ok(())
}

fn write_report(out_dir: &Path, report: &Report) -> Result<()> {
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    write_file(&out_dir.join("report.json"), &text)
}

fn samples_csv(set: &SampleSet) -> String {
    let header: Vec<String> = (0..set.dim()).map(|j| format!("x{j}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for row in set.samples() {
        let cells: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn samples_bin(set: &SampleSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * set.len() * set.dim());
    out.extend_from_slice(&(set.len() as u64).to_le_bytes());
    out.extend_from_slice(&(set.dim() as u64).to_le_bytes());
    for row in set.samples() {
        for &v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn trajectory_csv(trajectories: &[Trajectory], dim: usize) -> String {
    let mut header = vec!["chain".to_string(), "step".to_string(), "t".to_string()];
    for name in ["z", "xhat", "xtilde"] {
        for j in 0..dim {
            header.push(format!("{name}{j}"));
        }
    }
    let mut out = header.join(",");
    out.push('\n');
    for (chain, traj) in trajectories.iter().enumerate() {
        for rec in &traj.records {
            let mut cells = vec![chain.to_string(), rec.step.to_string(), fmt(rec.t)];
            for vs in [&rec.z, &rec.xhat, &rec.xtilde] {
                cells.extend(vs.iter().map(|&v| fmt(v)));
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
    out
}

/// Configured metrics of a sample set against the analytic target.
fn compute_metrics(cfg: &ExperimentConfig, set: &SampleSet) -> Result<Map<String, Value>> {
    let mut metrics = Map::new();
    let target = cfg.oracle.target()?;
    let ref_n = cfg
        .metrics
        .reference_samples
        .unwrap_or(cfg.sampler.num_samples);
    if (cfg.metrics.wasserstein1 && set.dim() == 1) || cfg.metrics.sliced_projections > 0 {
        let reference =
            SampleSet::from_target(&target, ref_n, &mut aux_stream(cfg.sampler.seed, 1))?;
        if cfg.metrics.wasserstein1 && set.dim() == 1 {
            metrics.insert(
                "wasserstein1".into(),
                json!(wasserstein1_1d(set, &reference)?),
            );
        }
        if cfg.metrics.sliced_projections > 0 {
            let sw = sliced_wasserstein(
                set,
                &reference,
                cfg.metrics.sliced_projections,
                &mut aux_stream(cfg.sampler.seed, 2),
            )?;
            metrics.insert("sliced_wasserstein".into(), json!(sw));
        }
    }
    if cfg.metrics.moments {
        let report = moment_report(set, &target)?;
        metrics.insert("mean_error".into(), json!(report.mean_error));
        metrics.insert("variance_error".into(), json!(report.variance_error));
    }
    Ok(metrics)
}

fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let sched = cfg.schedule.build()?;
    let seed = cfg.sampler.seed;
    let oracle_cfg = &cfg.oracle;
    run_sampler(&cfg.sampler, &sched, &|chain| oracle_cfg.build(seed, chain))
}

/// Sample, measure, and write `samples.csv`, `samples.bin`, an optional
/// `trajectory.csv`, and `report.json` into the output directory.
pub fn cmd_sample(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let run = run_experiment(cfg)?;
    let metrics = compute_metrics(cfg, &run.samples)?;

    fs::create_dir_all(out_dir)?;
    write_file(&out_dir.join("samples.csv"), &samples_csv(&run.samples))?;
    fs::write(out_dir.join("samples.bin"), samples_bin(&run.samples))?;
    if let Some(trajectories) = &run.trajectories {
        write_file(
            &out_dir.join("trajectory.csv"),
            &trajectory_csv(trajectories, run.samples.dim()),
        )?;
    }
    let report = Report {
        command: "sample".into(),
        version: VERSION.into(),
        config_hash: config_hash(&cfg.to_canonical_json()),
        seed: cfg.sampler.seed,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        metrics,
    };
    write_report(out_dir, &report)?;
    Ok(report)
}

/// One run per strength value, each on its own offset seed; emits
/// `sweep.csv` with columns (lambda, metric, xhat_mse) plus `report.json`.
pub fn cmd_sweep_lambda(cfg: &ExperimentConfig, lambdas: &[f64], out_dir: &Path) -> Result<Report> {
    cfg.validate()?;
    if lambdas.is_empty() {
        return Err(Error::Config("lambda list must be non-empty".into()));
    }
    if lambdas.iter().any(|&l| l < 0.0 || !l.is_finite()) {
        return Err(Error::Config(
            "lambda values must be finite and non-negative".into(),
        ));
    }
    let start = Instant::now();
    let x_true = cfg.oracle.x_true();

    let mut rows = Vec::with_capacity(lambdas.len());
    for (k, &lam) in lambdas.iter().enumerate() {
        let mut point = cfg.clone();
        point.sampler.lambda = LambdaSchedule::Constant(lam);
        point.sampler.seed = cfg.sampler.seed + k as u64;
        point.sampler.record_trajectory = x_true.is_some();
        let run = run_experiment(&point)?;
        let metrics = compute_metrics(&point, &run.samples)?;
        let metric = metrics
            .get("wasserstein1")
            .or_else(|| metrics.get("sliced_wasserstein"))
            .and_then(Value::as_f64)
            .unwrap_or(f64::NAN);

        // mean squared estimate error over all chains and steps, when the
        // clean sample is known
        let xhat_mse = match (&x_true, &run.trajectories) {
            (Some(x), Some(trajectories)) => {
                let (mut total, mut count) = (0.0, 0usize);
                for traj in trajectories {
                    for (err, _) in xhat_mse_trace(traj, x)? {
                        total += err;
                        count += 1;
                    }
                }
                total / count as f64
            }
            _ => f64::NAN,
        };
        rows.push((lam, metric, xhat_mse));
    }

    let mut csv = String::from("lambda,metric,xhat_mse\n");
    for &(lam, metric, mse) in &rows {
        csv.push_str(&format!("{},{},{}\n", fmt(lam), fmt(metric), fmt(mse)));
    }
    fs::create_dir_all(out_dir)?;
    write_file(&out_dir.join("sweep.csv"), &csv)?;

    // soft observation: is the best metric value strictly inside the grid?
    let best = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.1.is_finite())
        .min_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .map(|(i, _)| i);
    let mut metrics = Map::new();
    metrics.insert(
        "lambdas".into(),
        json!(rows.iter().map(|r| r.0).collect::<Vec<_>>()),
    );
    metrics.insert(
        "metric".into(),
        json!(rows.iter().map(|r| r.1).collect::<Vec<_>>()),
    );
    metrics.insert(
        "xhat_mse".into(),
        json!(rows.iter().map(|r| r.2).collect::<Vec<_>>()),
    );
    if let Some(i) = best {
        metrics.insert("best_lambda".into(), json!(rows[i].0));
        metrics.insert(
            "interior_minimum".into(),
            json!(i > 0 && i + 1 < rows.len()),
        );
    }
    let report = Report {
        command: "sweep-lambda".into(),
        version: VERSION.into(),
        config_hash: config_hash(&cfg.to_canonical_json()),
        seed: cfg.sampler.seed,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        metrics,
    };
    write_report(out_dir, &report)?;
    Ok(report)
}

/// Fitted log-log slope of `error = |z_terminal - z_initial|` versus step
/// count, under standard-normal data where the deterministic flow is the
/// identity map. Emits `convergence.csv` plus `report.json`.
pub fn cmd_convergence(cfg: &ExperimentConfig, ns: &[usize], out_dir: &Path) -> Result<Report> {
    cfg.validate()?;
    if cfg.sampler.method.is_stochastic() {
        return Err(Error::Config(
            "convergence fitting requires a deterministic method".into(),
        ));
    }
    if ns.len() < 2 || ns.contains(&0) {
        return Err(Error::Config(
            "need at least two positive step counts".into(),
        ));
    }
    let start = Instant::now();
    let sched = cfg.schedule.build()?;
    let dim = cfg.oracle.dim();

    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let mut point = cfg.sampler.clone();
        point.n = n;
        point.lambda = LambdaSchedule::Constant(0.0);
        point.record_trajectory = true;
        let run = run_sampler(&point, &sched, &|_| {
            Ok(Box::new(GaussianOracle::standard_normal(dim)))
        })?;
        let trajectories = run.trajectories.expect("trajectories were requested");
        let mut err = 0.0;
        for traj in &trajectories {
            let z_init = &traj.records[0].z;
            err += traj
                .z_final
                .iter()
                .zip(z_init)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
        }
        rows.push((n, err / trajectories.len() as f64));
    }

    let slope = {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .map(|&(n, e)| ((n as f64).ln(), e.max(1e-300).ln()))
            .collect();
        let m = pts.len() as f64;
        let (sx, sy): (f64, f64) = pts
            .iter()
            .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
        let (sxx, sxy): (f64, f64) = pts
            .iter()
            .fold((0.0, 0.0), |acc, p| (acc.0 + p.0 * p.0, acc.1 + p.0 * p.1));
        -((m * sxy - sx * sy) / (m * sxx - sx * sx))
    };

    let mut csv = String::from("n,error\n");
    for &(n, e) in &rows {
        csv.push_str(&format!("{n},{}\n", fmt(e)));
    }
    fs::create_dir_all(out_dir)?;
    write_file(&out_dir.join("convergence.csv"), &csv)?;

    let mut metrics = Map::new();
    metrics.insert(
        "n".into(),
        json!(rows.iter().map(|r| r.0).collect::<Vec<_>>()),
    );
    metrics.insert(
        "error".into(),
        json!(rows.iter().map(|r| r.1).collect::<Vec<_>>()),
    );
    metrics.insert("slope".into(), json!(slope));
    let report = Report {
        command: "convergence".into(),
        version: VERSION.into(),
        config_hash: config_hash(&cfg.to_canonical_json()),
        seed: cfg.sampler.seed,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        metrics,
    };
    write_report(out_dir, &report)?;
    Ok(report)
}

/// Parameters of [`cmd_validate_theory`].
#[derive(Debug, Clone, Serialize)]
pub struct TheoryCheckConfig {
    /// Grid resolution per axis over (gamma_i, ratio, phi_i, phi_cond).
    pub grid_points_per_axis: usize,
    /// Monte-Carlo trials at the reference parameter point.
    pub trials: usize,
    pub seed: u64,
}

impl Default for TheoryCheckConfig {
    fn default() -> Self {
        Self {
            grid_points_per_axis: 10,
            trials: 100_000,
            seed: 0,
        }
    }
}

fn linspace(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..m)
        .map(|i| lo + i as f64 / (m - 1) as f64 * (hi - lo))
        .collect()
}

/// Closed-form strength checks on a parameter grid, plus a Monte-Carlo
/// confirmation at the reference point. Fails (exit 3) on any violation.
pub fn cmd_validate_theory(check: &TheoryCheckConfig, out_dir: &Path) -> Result<Report> {
    if check.grid_points_per_axis == 0 || check.trials == 0 {
        return Err(Error::Config(
            "grid points and trials must be positive".into(),
        ));
    }
    let start = Instant::now();
    let m = check.grid_points_per_axis;

    // stationarity of the closed-form minimizer and the positivity
    // equivalence, at every grid point
    let mut max_residual = 0.0f64;
    let mut grid_points = 0usize;
    let mut violations = Vec::new();
    for &gamma_i in &linspace(0.05, 0.95, m) {
        for &ratio in &linspace(0.1, 0.99, m) {
            for &phi_i in &linspace(0.0, 0.6, m) {
                for &phi_cond in &linspace(1e-3, 0.6, m) {
                    let phi_next = (ratio * ratio * phi_i * phi_i + phi_cond * phi_cond).sqrt();
                    let p = Assumption1Params::new(gamma_i, ratio * gamma_i, phi_i, phi_next, 1.0)?;
                    grid_points += 1;
                    let lam = optimal_lambda(&p);
                    let residual = stationarity_residual(lam, &p);
                    max_residual = max_residual.max(residual);
                    if residual >= 1e-10 {
                        violations.push(format!("stationarity residual {residual} at {p:?}"));
                    }
                    if positivity_condition(&p) != (lam > 0.0) {
                        violations.push(format!("positivity sign mismatch at {p:?}"));
                    }
                }
            }
        }
    }

    // boundary point: noise exactly at the threshold makes the optimum zero
    let gamma = 0.8f64;
    let phi_b = (gamma * (1.0 - gamma)).sqrt();
    let boundary =
        Assumption1Params::new(gamma, 0.4, phi_b, (phi_b * phi_b * 0.25 + 0.01).sqrt(), 1.0)?;
    let boundary_lambda = optimal_lambda(&boundary);
    if boundary_lambda.abs() >= 1e-12 {
        violations.push(format!("boundary optimum {boundary_lambda} not zero"));
    }

    // Monte-Carlo confirmation at the reference parameter point
    let reference = Assumption1Params::new(0.9, 0.45, 0.1, 0.3, 1.0)?;
    let lambda_star = optimal_lambda(&reference);
    let grid = default_lambda_grid();
    let curve = simulate_assumption1(
        &reference,
        &[1.0],
        &grid,
        check.trials,
        &mut aux_stream(check.seed, 0),
    )?;
    for ((&lam, &mse), &se) in grid.iter().zip(&curve.mse).zip(&curve.stderr) {
        let want = expected_sq_error(lam, &reference);
        if (mse - want).abs() > 3.0 * se {
            violations.push(format!(
                "monte-carlo mse {mse} vs closed form {want} at lambda {lam} (se {se})"
            ));
        }
    }

    let mut csv = String::from("lambda,mse,stderr\n");
    for ((&lam, &mse), &se) in grid.iter().zip(&curve.mse).zip(&curve.stderr) {
        csv.push_str(&format!("{},{},{}\n", fmt(lam), fmt(mse), fmt(se)));
    }
    fs::create_dir_all(out_dir)?;
    write_file(&out_dir.join("theory_curve.csv"), &csv)?;

    let mut metrics = Map::new();
    metrics.insert("grid_points".into(), json!(grid_points));
    metrics.insert("max_stationarity_residual".into(), json!(max_residual));
    metrics.insert("boundary_lambda".into(), json!(boundary_lambda));
    metrics.insert("lambda_star".into(), json!(lambda_star));
    metrics.insert("mc_argmin".into(), json!(curve.argmin));
    metrics.insert("violations".into(), json!(violations));
    let report = Report {
        command: "validate-theory".into(),
        version: VERSION.into(),
        config_hash: config_hash(
            &serde_json::to_string_pretty(check).expect("check config serializes"),
        ),
        seed: check.seed,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        metrics,
    };
    write_report(out_dir, &report)?;

    if !violations.is_empty() {
        return Err(Error::Invariant(format!(
            "{} theory check(s) failed; first: {}",
            violations.len(),
            violations[0]
        )));
    }
    Ok(report)
}
