//! Backward-process steppers with lookahead extrapolation.
//!
//! Six families share one run loop: DDPM, DDIM, tAB-DEIS, S-PNDM and the
//! second/third order exponential solvers. Each stepper carries the clean-
//! sample estimate from its previous step and extrapolates
//! `x_tilde = (1 + lambda) * xhat_cur - lambda * xhat_prev` before forming
//! the next state. At `lambda = 0` every family reduces exactly to its
//! published baseline.

mod ddim;
mod ddpm;
mod deis;
mod pndm;
mod solver;

pub use deis::deis_tab_coeffs;

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Provenance, SampleSet};
use crate::oracle::EpsilonOracle;
use crate::schedule::{Schedule, Spacing, TimeGrid};
use crate::stream::chain_stream;

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ddpm,
    Ddim,
    DeisTab,
    SPndm,
    DpmSolver2,
    DpmSolver3,
}

impl Method {
    pub fn is_stochastic(self) -> bool {
        matches!(self, Method::Ddpm)
    }
}

/// Extrapolation strength per backward step index.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSchedule {
    Constant(f64),
    PerStep(Vec<f64>),
}

impl LambdaSchedule {
    pub fn at(&self, i: usize) -> f64 {
        match self {
            LambdaSchedule::Constant(v) => *v,
            LambdaSchedule::PerStep(v) => v.get(i).copied().unwrap_or(0.0),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let bad = match self {
            LambdaSchedule::Constant(v) => *v < 0.0 || !v.is_finite(),
            LambdaSchedule::PerStep(v) => {
                v.len() != n + 1 || v.iter().any(|x| *x < 0.0 || !x.is_finite())
            }
        };
        if bad {
            return Err(Error::Config(
                "lambda schedule must be non-negative (per-step form: n + 1 entries)".into(),
            ));
        }
        Ok(())
    }

    /// Representative scalar for provenance records.
    pub fn summary(&self) -> f64 {
        match self {
            LambdaSchedule::Constant(v) => *v,
            LambdaSchedule::PerStep(v) => v.iter().copied().sum::<f64>() / v.len().max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub method: Method,
    /// Backward step count N.
    pub n: usize,
    /// DEIS polynomial order (0-3); ignored by other families.
    pub r: usize,
    pub lambda: LambdaSchedule,
    pub spacing: Spacing,
    pub seed: u64,
    pub num_samples: usize,
    pub record_trajectory: bool,
}

impl SamplerConfig {
    pub fn new(method: Method, n: usize) -> Self {
        Self {
            method,
            n,
            r: 2,
            lambda: LambdaSchedule::Constant(0.0),
            spacing: Spacing::UniformT,
            seed: 0,
            num_samples: 1,
            record_trajectory: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("step count must be positive".into()));
        }
        if self.num_samples == 0 {
            return Err(Error::Config("num_samples must be positive".into()));
        }
        if self.r > 3 {
            return Err(Error::Config("DEIS order r must be in 0..=3".into()));
        }
        self.lambda.validate(self.n)
    }
}

/// One backward step as recorded in a trajectory.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub z: Vec<f64>,
    pub eps: Vec<f64>,
    pub xhat: Vec<f64>,
    pub xtilde: Vec<f64>,
}

/// Full record of one chain: N step records plus the terminal state,
/// i.e. N + 1 visited states.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    pub z_final: Vec<f64>,
    pub x_final: Vec<f64>,
}

pub(crate) struct StepOutput {
    pub z_next: Vec<f64>,
    pub eps: Vec<f64>,
    pub xhat: Vec<f64>,
    pub xtilde: Vec<f64>,
}

pub(crate) trait Stepper {
    #[allow(clippy::too_many_arguments)]
    fn step(
        &mut self,
        i: usize,
        z: &[f64],
        lambda: f64,
        oracle: &mut dyn EpsilonOracle,
        sched: &Schedule,
        grid: &TimeGrid,
        rng: &mut ChaCha8Rng,
    ) -> Result<StepOutput>;
}

/// Clean-sample estimate from a state and its predicted noise:
/// `xhat = z / alpha - sigma * eps / alpha`.
pub fn xhat(z: &[f64], eps: &[f64], alpha: f64, sigma: f64) -> Result<Vec<f64>> {
    if alpha <= 0.0 || sigma <= 0.0 {
        return Err(Error::DegenerateTime {
            t: f64::NAN,
            reason: "xhat needs alpha > 0 and sigma > 0",
        });
    }
    if z.len() != eps.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            got: eps.len(),
        });
    }
    Ok(z.iter()
        .zip(eps)
        .map(|(&zv, &ev)| (zv - sigma * ev) / alpha)
        .collect())
}

/// Extrapolate along the difference of two consecutive estimates:
/// `(1 + lambda) * cur - lambda * prev`.
pub fn lookahead(cur: &[f64], prev: &[f64], lambda: f64) -> Vec<f64> {
    debug_assert!(lambda >= 0.0);
    cur.iter()
        .zip(prev)
        .map(|(&c, &p)| (1.0 + lambda) * c - lambda * p)
        .collect()
}

pub(crate) fn lin2(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(&xv, &yv)| a * xv + b * yv).collect()
}

/// Shared per-run tables (auxiliary times, integrator coefficients) so
/// per-chain steppers stay cheap to construct.
pub(crate) struct RunTables {
    solver2_mid: Option<Arc<Vec<f64>>>,
    solver3_thirds: Option<Arc<(Vec<f64>, Vec<f64>)>>,
    deis_coeffs: Option<Arc<Vec<Vec<f64>>>>,
}

impl RunTables {
    pub fn build(cfg: &SamplerConfig, sched: &Schedule, grid: &TimeGrid) -> Result<Self> {
        let n = grid.n();
        let mut tables = Self {
            solver2_mid: None,
            solver3_thirds: None,
            deis_coeffs: None,
        };
        match cfg.method {
            Method::DpmSolver2 => {
                let mut mids = vec![0.0; n + 1];
                for (i, mid) in mids.iter_mut().enumerate().skip(1) {
                    let lp = sched.log_snr(grid.t(i - 1))?;
                    let lt = sched.log_snr(grid.t(i))?;
                    *mid = sched.t_of_log_snr(0.5 * (lp + lt))?;
                }
                tables.solver2_mid = Some(Arc::new(mids));
            }
            Method::DpmSolver3 => {
                let mut ta = vec![0.0; n + 1];
                let mut tb = vec![0.0; n + 1];
                for i in 1..=n {
                    let lp = sched.log_snr(grid.t(i - 1))?;
                    let lt = sched.log_snr(grid.t(i))?;
                    ta[i] = sched.t_of_log_snr((lp + 2.0 * lt) / 3.0)?;
                    tb[i] = sched.t_of_log_snr((2.0 * lp + lt) / 3.0)?;
                }
                tables.solver3_thirds = Some(Arc::new((ta, tb)));
            }
            Method::DeisTab => {
                let mut coeffs = vec![Vec::new(); n + 1];
                for (i, c) in coeffs.iter_mut().enumerate().skip(1) {
                    let r_eff = cfg.r.min(n - i);
                    *c = deis::deis_tab_coeffs(sched, grid, i, r_eff)?;
                }
                tables.deis_coeffs = Some(Arc::new(coeffs));
            }
            _ => {}
        }
        Ok(tables)
    }

    pub fn new_stepper(&self, method: Method, r: usize) -> Box<dyn Stepper> {
        match method {
            Method::Ddpm => Box::new(ddpm::DdpmStepper::new()),
            Method::Ddim => Box::new(ddim::DdimStepper::new()),
            Method::DpmSolver2 => Box::new(solver::Solver2Stepper::new(
                self.solver2_mid.as_ref().expect("solver2 table").clone(),
            )),
            Method::DpmSolver3 => Box::new(solver::Solver3Stepper::new(
                self.solver3_thirds.as_ref().expect("solver3 table").clone(),
            )),
            Method::DeisTab => Box::new(deis::DeisStepper::new(
                r,
                self.deis_coeffs.as_ref().expect("deis table").clone(),
            )),
            Method::SPndm => Box::new(pndm::SPndmStepper::new()),
        }
    }
}

pub struct RunOutput {
    pub samples: SampleSet,
    pub trajectories: Option<Vec<Trajectory>>,
}

/// Run one chain from a fresh `z_N ~ N(0, I)` down to the terminal sample.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_chain(
    cfg: &SamplerConfig,
    sched: &Schedule,
    grid: &TimeGrid,
    tables: &RunTables,
    oracle: &mut dyn EpsilonOracle,
    chain: u64,
    record: bool,
) -> Result<(Vec<f64>, Option<Trajectory>)> {
    let n = grid.n();
    let dim = oracle.dim();
    let mut rng = chain_stream(cfg.seed, chain);
    let mut z: Vec<f64> = (0..dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut stepper = tables.new_stepper(cfg.method, cfg.r);
    let mut records = Vec::new();

    for i in (1..=n).rev() {
        // no predecessor estimate exists at the first backward step
        let lambda = if i == n { 0.0 } else { cfg.lambda.at(i) };
        let out = stepper.step(i, &z, lambda, oracle, sched, grid, &mut rng)?;
        if record {
            records.push(StepRecord {
                step: i,
                t: grid.t(i),
                z: z.clone(),
                eps: out.eps,
                xhat: out.xhat,
                xtilde: out.xtilde,
            });
        }
        z = out.z_next;
    }

    let t0 = grid.t(0);
    let (a0, s0) = sched.alpha_sigma(t0)?;
    let eps0 = oracle.eval(&z, t0, sched)?;
    let x_final = xhat(&z, &eps0, a0, s0)?;
    let traj = record.then(|| Trajectory {
        records,
        z_final: z,
        x_final: x_final.clone(),
    });
    Ok((x_final, traj))
}

/// Run `num_samples` independent chains and collect the terminal samples.
///
/// `make_oracle` builds one oracle per chain; chains execute concurrently
/// and results depend only on `(config, seed)`.
pub fn run_sampler<F>(cfg: &SamplerConfig, sched: &Schedule, make_oracle: &F) -> Result<RunOutput>
where
    F: Fn(u64) -> Result<Box<dyn EpsilonOracle>> + Sync,
{
    cfg.validate()?;
    let grid = TimeGrid::new(sched, cfg.n, cfg.spacing)?;
    let tables = RunTables::build(cfg, sched, &grid)?;

    let results: Result<Vec<_>> = (0..cfg.num_samples as u64)
        .into_par_iter()
        .map(|chain| {
            let mut oracle = make_oracle(chain)?;
            run_chain(
                cfg,
                sched,
                &grid,
                &tables,
                oracle.as_mut(),
                chain,
                cfg.record_trajectory,
            )
        })
        .collect();
    let results = results?;

    let dim = results.first().map(|(x, _)| x.len()).unwrap_or(0);
    let mut samples = Vec::with_capacity(results.len());
    let mut trajectories = cfg.record_trajectory.then(Vec::new);
    for (x, traj) in results {
        samples.push(x);
        if let (Some(ts), Some(t)) = (trajectories.as_mut(), traj) {
            ts.push(t);
        }
    }
    let samples = SampleSet::new(dim, samples)?.with_provenance(Provenance {
        method: cfg.method,
        n: cfg.n,
        lambda: cfg.lambda.summary(),
        seed: cfg.seed,
    });
    Ok(RunOutput {
        samples,
        trajectories,
    })
}
