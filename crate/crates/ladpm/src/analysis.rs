//! Estimation theory for the lookahead strength.
//!
//! Models the sequence of clean-sample estimates as a Markov-Gaussian
//! process with per-step signal retention `gamma` and noise amplitude
//! `phi`. The expected squared error of the extrapolated estimate is a
//! convex quadratic in the strength, with a closed-form minimizer that is
//! positive exactly when the estimate noise is small relative to the
//! signal. A Monte-Carlo simulator of the same process validates both.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::samplers::Trajectory;

/// Parameters of the estimate process at one step: the cleaner estimate
/// keeps signal fraction `gamma_i` with noise `phi_i`; the coarser one
/// keeps `gamma_next < gamma_i` with noise `phi_next`, and must carry
/// strictly positive noise conditional on the cleaner estimate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Assumption1Params {
    pub gamma_i: f64,
    pub gamma_next: f64,
    pub phi_i: f64,
    pub phi_next: f64,
    pub x_norm_sq: f64,
}

impl Assumption1Params {
    pub fn new(
        gamma_i: f64,
        gamma_next: f64,
        phi_i: f64,
        phi_next: f64,
        x_norm_sq: f64,
    ) -> Result<Self> {
        let p = Self {
            gamma_i,
            gamma_next,
            phi_i,
            phi_next,
            x_norm_sq,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.gamma_next && self.gamma_next < self.gamma_i && self.gamma_i < 1.0) {
            return Err(Error::InvalidParams(format!(
                "require 1 > gamma_i > gamma_next >= 0, got ({}, {})",
                self.gamma_i, self.gamma_next
            )));
        }
        if self.phi_i < 0.0 || self.phi_next < 0.0 {
            return Err(Error::InvalidParams(format!(
                "noise amplitudes must be non-negative, got ({}, {})",
                self.phi_i, self.phi_next
            )));
        }
        if self.x_norm_sq <= 0.0 {
            return Err(Error::InvalidParams("x_norm_sq must be positive".into()));
        }
        if self.phi_cond_sq() <= 0.0 {
            return Err(Error::InvalidParams(
                "conditional noise amplitude must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Signal retention ratio of the noisier estimate given the cleaner one.
    pub fn gamma_ratio(&self) -> f64 {
        self.gamma_next / self.gamma_i
    }

    /// Conditional noise variance of the noisier estimate given the cleaner one.
    pub fn phi_cond_sq(&self) -> f64 {
        self.phi_next * self.phi_next - self.gamma_ratio().powi(2) * self.phi_i * self.phi_i
    }
}

/// Expected squared error of the extrapolated estimate at strength `lambda`.
pub fn expected_sq_error(lambda: f64, p: &Assumption1Params) -> f64 {
    let g = p.gamma_ratio();
    let w = 1.0 + lambda - lambda * g;
    (w * p.gamma_i - 1.0).powi(2) * p.x_norm_sq
        + w * w * p.phi_i * p.phi_i
        + lambda * lambda * p.phi_cond_sq()
}

/// Closed-form minimizer of [`expected_sq_error`].
pub fn optimal_lambda(p: &Assumption1Params) -> f64 {
    let g = p.gamma_ratio();
    let one_minus_g = 1.0 - g;
    let num = one_minus_g * (p.gamma_i * (1.0 - p.gamma_i) * p.x_norm_sq - p.phi_i * p.phi_i);
    let den = one_minus_g * one_minus_g * p.gamma_i * p.gamma_i * p.x_norm_sq
        + one_minus_g * one_minus_g * p.phi_i * p.phi_i
        + p.phi_cond_sq();
    num / den
}

/// Exact derivative magnitude of [`expected_sq_error`] at `lambda`;
/// vanishes at the closed-form minimizer.
pub fn stationarity_residual(lambda: f64, p: &Assumption1Params) -> f64 {
    let u = 1.0 - p.gamma_ratio();
    let w = 1.0 + lambda * u;
    (2.0 * u * p.gamma_i * (w * p.gamma_i - 1.0) * p.x_norm_sq
        + 2.0 * u * w * p.phi_i * p.phi_i
        + 2.0 * lambda * p.phi_cond_sq())
    .abs()
}

/// True iff the optimal strength is strictly positive:
/// `phi_i^2 < gamma_i (1 - gamma_i) ||x||^2`.
pub fn positivity_condition(p: &Assumption1Params) -> bool {
    p.phi_i * p.phi_i < p.gamma_i * (1.0 - p.gamma_i) * p.x_norm_sq
}

/// Empirical MSE curve over a strength grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MseCurve {
    pub lambdas: Vec<f64>,
    pub mse: Vec<f64>,
    pub stderr: Vec<f64>,
    pub argmin: f64,
}

/// Simulate the two-estimate process and measure the extrapolation MSE on
/// a strength grid. `x` must satisfy `||x||^2 = p.x_norm_sq`.
pub fn simulate_assumption1(
    p: &Assumption1Params,
    x: &[f64],
    lambda_grid: &[f64],
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<MseCurve> {
    p.validate()?;
    if trials == 0 || lambda_grid.is_empty() {
        return Err(Error::InvalidParams(
            "need trials >= 1 and a non-empty grid".into(),
        ));
    }
    let norm_sq: f64 = x.iter().map(|v| v * v).sum();
    if (norm_sq - p.x_norm_sq).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!(
            "||x||^2 = {norm_sq} does not match params ({})",
            p.x_norm_sq
        )));
    }
    let d = x.len();
    let g = p.gamma_ratio();
    let phi_cond = p.phi_cond_sq().sqrt();
    let k = lambda_grid.len();
    let mut sum = vec![0.0; k];
    let mut sumsq = vec![0.0; k];
    let mut xhat_i = vec![0.0; d];
    let mut xhat_next = vec![0.0; d];
    for _ in 0..trials {
        for j in 0..d {
            xhat_i[j] = p.gamma_i * x[j] + p.phi_i * rng.sample::<f64, _>(StandardNormal);
            xhat_next[j] = g * xhat_i[j] + phi_cond * rng.sample::<f64, _>(StandardNormal);
        }
        for (idx, &lam) in lambda_grid.iter().enumerate() {
            let mut err = 0.0;
            for j in 0..d {
                let xt = (1.0 + lam) * xhat_i[j] - lam * xhat_next[j];
                let r = xt - x[j];
                err += r * r;
            }
            sum[idx] += err;
            sumsq[idx] += err * err;
        }
    }
    let nt = trials as f64;
    let mse: Vec<f64> = sum.iter().map(|s| s / nt).collect();
    let stderr: Vec<f64> = sumsq
        .iter()
        .zip(&mse)
        .map(|(&sq, &m)| ((sq / nt - m * m).max(0.0) / nt).sqrt())
        .collect();
    let argmin = lambda_grid[mse
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap()];
    Ok(MseCurve {
        lambdas: lambda_grid.to_vec(),
        mse,
        stderr,
        argmin,
    })
}

/// Per-step squared errors of the raw and extrapolated estimates against
/// the true clean sample, ordered from the noisiest step down.
pub fn xhat_mse_trace(traj: &Trajectory, x_true: &[f64]) -> Result<Vec<(f64, f64)>> {
    traj.records
        .iter()
        .map(|rec| {
            if rec.xhat.len() != x_true.len() {
                return Err(Error::DimensionMismatch {
                    expected: x_true.len(),
                    got: rec.xhat.len(),
                });
            }
            let sq = |v: &[f64]| {
                v.iter()
                    .zip(x_true)
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum::<f64>()
            };
            Ok((sq(&rec.xhat), sq(&rec.xtilde)))
        })
        .collect()
}

/// Default strength grid: [0, 0.5] with spacing 0.01.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=50).map(|i| i as f64 * 0.01).collect()
}
