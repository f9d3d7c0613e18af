//! Variance-preserving noise schedules and time reparameterizations.
//!
//! A schedule fixes the signal amplitude `alpha(t)` and noise amplitude
//! `sigma(t)` of the forward process `z_t = alpha_t * x + sigma_t * eps`
//! with `alpha_t^2 + sigma_t^2 = 1`. All samplers consume the same
//! continuous-time interface; the discrete-VP kind interpolates the
//! classic linear-beta cumulative product between its grid points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor on usable times. Quantities like `1/sigma_t` blow up at `t = 0`;
/// the floor keeps every sampler away from the singularity without
/// affecting convergence measurements.
pub const T_MIN: f64 = 1e-3;

const VP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    DiscreteVp,
    ContinuousVp,
}

/// Immutable after construction; shareable across concurrent chains.
#[derive(Debug, Clone)]
pub struct Schedule {
    kind: ScheduleKind,
    resolution: usize,
    beta_min: f64,
    beta_max: f64,
    // Discrete kind only: log alpha_j at grid points t_j = j / resolution,
    // with alpha_j = sqrt(prod_{k<=j} (1 - beta_k)).
    log_alpha_grid: Vec<f64>,
}

impl Schedule {
    /// Linear-beta discrete schedule, beta in [1e-4, 0.02] at resolution 1000
    /// and rescaled proportionally for other resolutions.
    pub fn discrete_vp(resolution: usize) -> Result<Self> {
        Self::discrete_vp_with(resolution, 1e-4, 0.02)
    }

    /// Discrete schedule with explicit beta endpoints, stated at the
    /// reference resolution of 1000 steps.
    pub fn discrete_vp_with(resolution: usize, beta_min: f64, beta_max: f64) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::ScheduleInvalid(
                "discrete schedule needs at least 2 steps".into(),
            ));
        }
        if !(0.0 < beta_min && beta_min <= beta_max) {
            return Err(Error::ScheduleInvalid(format!(
                "require 0 < beta_min <= beta_max, got ({beta_min}, {beta_max})"
            )));
        }
        let scale = 1000.0 / resolution as f64;
        let mut log_alpha_grid = Vec::with_capacity(resolution + 1);
        log_alpha_grid.push(0.0);
        let mut acc = 0.0;
        for j in 1..=resolution {
            let frac = (j - 1) as f64 / (resolution - 1) as f64;
            let beta = (beta_min + frac * (beta_max - beta_min)) * scale;
            if beta >= 1.0 {
                return Err(Error::ScheduleInvalid(format!(
                    "rescaled beta_{j} = {beta} >= 1; increase the resolution"
                )));
            }
            acc += 0.5 * (1.0 - beta).ln();
            log_alpha_grid.push(acc);
        }
        Ok(Self {
            kind: ScheduleKind::DiscreteVp,
            resolution,
            beta_min,
            beta_max,
            log_alpha_grid,
        })
    }

    /// Continuous schedule with rate beta(t) = beta_min + t (beta_max - beta_min)
    /// and alpha_t = exp(-1/2 int_0^t beta). Defaults match the discrete
    /// schedule's continuous limit (0.1, 20).
    pub fn continuous_vp() -> Self {
        Self::continuous_vp_with(0.1, 20.0).expect("default endpoints are valid")
    }

    pub fn continuous_vp_with(beta_min: f64, beta_max: f64) -> Result<Self> {
        if !(0.0 < beta_min && beta_min <= beta_max) {
            return Err(Error::ScheduleInvalid(format!(
                "require 0 < beta_min <= beta_max, got ({beta_min}, {beta_max})"
            )));
        }
        Ok(Self {
            kind: ScheduleKind::ContinuousVp,
            resolution: 0,
            beta_min,
            beta_max,
            log_alpha_grid: Vec::new(),
        })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn t_min(&self) -> f64 {
        T_MIN
    }

    fn log_alpha(&self, t: f64) -> f64 {
        match self.kind {
            ScheduleKind::ContinuousVp => {
                -0.5 * self.beta_min * t - 0.25 * (self.beta_max - self.beta_min) * t * t
            }
            ScheduleKind::DiscreteVp => {
                // piecewise-linear in log alpha between grid points
                let pos = t * self.resolution as f64;
                let j = (pos.floor() as usize).min(self.resolution - 1);
                let frac = pos - j as f64;
                let lo = self.log_alpha_grid[j];
                let hi = self.log_alpha_grid[j + 1];
                lo + frac * (hi - lo)
            }
        }
    }

    pub fn alpha(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) || !t.is_finite() {
            return Err(Error::Domain { t });
        }
        Ok(self.log_alpha(t).exp())
    }

    pub fn sigma(&self, t: f64) -> Result<f64> {
        let a = self.alpha(t)?;
        Ok((1.0 - a * a).max(0.0).sqrt())
    }

    /// `(alpha_t, sigma_t)` of the forward process marginal.
    pub fn alpha_sigma(&self, t: f64) -> Result<(f64, f64)> {
        let a = self.alpha(t)?;
        Ok((a, (1.0 - a * a).max(0.0).sqrt()))
    }

    /// `(alpha_{t|s}, sigma_{t|s}^2)` of the transition from s to t, s <= t.
    pub fn conditional_coeffs(&self, s: f64, t: f64) -> Result<(f64, f64)> {
        if s > t {
            return Err(Error::Ordering { s, t });
        }
        let (a_s, sig_s) = self.alpha_sigma(s)?;
        let (a_t, sig_t) = self.alpha_sigma(t)?;
        let a_ts = a_t / a_s;
        let var = sig_t * sig_t - a_ts * a_ts * sig_s * sig_s;
        if var < -VP_TOL {
            return Err(Error::ScheduleInvalid(format!(
                "negative conditional variance {var} for (s, t) = ({s}, {t})"
            )));
        }
        Ok((a_ts, var.max(0.0)))
    }

    /// Mean and variance of `q(z_s | z_t, x)` for s < t.
    /// The variance is the backward-injection scale of the DDPM step.
    pub fn posterior_params(
        &self,
        z_t: &[f64],
        x: &[f64],
        s: f64,
        t: f64,
    ) -> Result<(Vec<f64>, f64)> {
        if z_t.len() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: z_t.len(),
                got: x.len(),
            });
        }
        let (a_ts, var_ts) = self.conditional_coeffs(s, t)?;
        let (a_s, sig_s) = self.alpha_sigma(s)?;
        let sig_t = self.sigma(t)?;
        if sig_t == 0.0 {
            return Err(Error::DegenerateTime {
                t,
                reason: "posterior undefined at sigma_t = 0",
            });
        }
        let st2 = sig_t * sig_t;
        let cz = sig_s * sig_s / st2 * a_ts;
        let cx = var_ts / st2 * a_s;
        let mean = z_t
            .iter()
            .zip(x)
            .map(|(&z, &xv)| cz * z + cx * xv)
            .collect();
        let variance = sig_s * sig_s * var_ts / st2;
        Ok((mean, variance))
    }

    /// log(alpha_t / sigma_t); strictly decreasing on [T_MIN, 1].
    pub fn log_snr(&self, t: f64) -> Result<f64> {
        if !(T_MIN..=1.0).contains(&t) {
            return Err(Error::Domain { t });
        }
        let (a, s) = self.alpha_sigma(t)?;
        Ok((a / s).ln())
    }

    /// Inverse of `log_snr`, by bracketed bisection on [T_MIN, 1].
    pub fn t_of_log_snr(&self, lambda: f64) -> Result<f64> {
        let hi_l = self.log_snr(T_MIN)?;
        let lo_l = self.log_snr(1.0)?;
        // tiny slack for round-trips of endpoint values
        if lambda > hi_l + 1e-9 || lambda < lo_l - 1e-9 {
            return Err(Error::LogSnrRange {
                value: lambda,
                lo: lo_l,
                hi: hi_l,
            });
        }
        let (mut lo, mut hi) = (T_MIN, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let lm = self.log_snr(mid)?;
            if (lm - lambda).abs() < 1e-15 {
                return Ok(mid);
            }
            if lm > lambda {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < f64::EPSILON * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Timestep spacing of a sampler grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    UniformT,
    UniformLogSnr,
}

/// Strictly increasing times `t_0 = T_MIN < t_1 < ... < t_N = 1`,
/// indexed by the backward-process step index i.
#[derive(Debug, Clone)]
pub struct TimeGrid {
    times: Vec<f64>,
    spacing: Spacing,
}

impl TimeGrid {
    pub fn new(sched: &Schedule, n: usize, spacing: Spacing) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("step count must be positive".into()));
        }
        let times = match spacing {
            Spacing::UniformT => (0..=n)
                .map(|i| T_MIN + i as f64 / n as f64 * (1.0 - T_MIN))
                .collect(),
            Spacing::UniformLogSnr => {
                let l0 = sched.log_snr(T_MIN)?;
                let l1 = sched.log_snr(1.0)?;
                let mut ts = Vec::with_capacity(n + 1);
                ts.push(T_MIN);
                for i in 1..n {
                    let lam = l0 + i as f64 / n as f64 * (l1 - l0);
                    ts.push(sched.t_of_log_snr(lam)?);
                }
                ts.push(1.0);
                ts
            }
        };
        for w in times.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::ScheduleInvalid(
                    "time grid is not strictly increasing".into(),
                ));
            }
        }
        Ok(Self { times, spacing })
    }

    pub fn n(&self) -> usize {
        self.times.len() - 1
    }

    /// Time at step index i (i = 0 is the clean end).
    pub fn t(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }
}
