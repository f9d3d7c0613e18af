//! Exponential-integrator steppers of order two and three.
//!
//! Intermediate states sit at log-SNR fractions of the step; the lookahead
//! extrapolation is applied to the clean-sample estimate feeding the first
//! intermediate state, exactly where the midpoint update coincides with the
//! deterministic one-step form. The outer updates are untouched.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::oracle::EpsilonOracle;
use crate::schedule::{Schedule, TimeGrid};

use super::{lin2, lookahead, xhat, StepOutput, Stepper};

pub(crate) struct Solver2Stepper {
    t_mid: Arc<Vec<f64>>,
    xhat_mid_prev: Option<Vec<f64>>,
}

impl Solver2Stepper {
    pub fn new(t_mid: Arc<Vec<f64>>) -> Self {
        Self {
            t_mid,
            xhat_mid_prev: None,
        }
    }
}

impl Stepper for Solver2Stepper {
    fn step(
        &mut self,
        i: usize,
        z: &[f64],
        lambda: f64,
        oracle: &mut dyn EpsilonOracle,
        sched: &Schedule,
        grid: &TimeGrid,
        _rng: &mut ChaCha8Rng,
    ) -> Result<StepOutput> {
        let (t, tp) = (grid.t(i), grid.t(i - 1));
        let (a_t, s_t) = sched.alpha_sigma(t)?;
        let (a_p, s_p) = sched.alpha_sigma(tp)?;
        let h = sched.log_snr(tp)? - sched.log_snr(t)?;

        let t_mid = self.t_mid[i];
        let (a_m, s_m) = sched.alpha_sigma(t_mid)?;

        let eps = oracle.eval(z, t, sched)?;
        let xh = xhat(z, &eps, a_t, s_t)?;
        let xt = match &self.xhat_mid_prev {
            Some(prev) => lookahead(&xh, prev, lambda),
            None => xh.clone(),
        };
        let z_mid = lin2(a_m, &xt, s_m, &eps);
        let eps_mid = oracle.eval(&z_mid, t_mid, sched)?;

        let z_next = lin2(a_p / a_t, z, -s_p * (h.exp() - 1.0), &eps_mid);
        self.xhat_mid_prev = Some(xhat(&z_mid, &eps_mid, a_m, s_m)?);
        Ok(StepOutput {
            z_next,
            eps,
            xhat: xh,
            xtilde: xt,
        })
    }
}

pub(crate) struct Solver3Stepper {
    thirds: Arc<(Vec<f64>, Vec<f64>)>,
    xhat_third_prev: Option<Vec<f64>>,
}

impl Solver3Stepper {
    pub fn new(thirds: Arc<(Vec<f64>, Vec<f64>)>) -> Self {
        Self {
            thirds,
            xhat_third_prev: None,
        }
    }
}

impl Stepper for Solver3Stepper {
    fn step(
        &mut self,
        i: usize,
        z: &[f64],
        lambda: f64,
        oracle: &mut dyn EpsilonOracle,
        sched: &Schedule,
        grid: &TimeGrid,
        _rng: &mut ChaCha8Rng,
    ) -> Result<StepOutput> {
        let (t, tp) = (grid.t(i), grid.t(i - 1));
        let (a_t, s_t) = sched.alpha_sigma(t)?;
        let (a_p, s_p) = sched.alpha_sigma(tp)?;
        let h = sched.log_snr(tp)? - sched.log_snr(t)?;

        let t_a = self.thirds.0[i];
        let t_b = self.thirds.1[i];
        let (a_a, s_a) = sched.alpha_sigma(t_a)?;
        let (a_b, s_b) = sched.alpha_sigma(t_b)?;

        let eps = oracle.eval(z, t, sched)?;
        let xh = xhat(z, &eps, a_t, s_t)?;
        let xt = match &self.xhat_third_prev {
            Some(prev) => lookahead(&xh, prev, lambda),
            None => xh.clone(),
        };
        let z_a = lin2(a_a, &xt, s_a, &eps);
        let eps_a = oracle.eval(&z_a, t_a, sched)?;
        let r_a: Vec<f64> = eps_a.iter().zip(&eps).map(|(&x, &y)| x - y).collect();

        let h23 = 2.0 * h / 3.0;
        let e23 = h23.exp();
        let mut z_b = lin2(a_b / a_t, z, -s_b * (e23 - 1.0), &eps);
        let cb = -2.0 * s_b * ((e23 - 1.0) / h23 - 1.0);
        for (zv, &rv) in z_b.iter_mut().zip(&r_a) {
            *zv += cb * rv;
        }
        let eps_b = oracle.eval(&z_b, t_b, sched)?;
        let r_b: Vec<f64> = eps_b.iter().zip(&eps).map(|(&x, &y)| x - y).collect();

        let eh = h.exp();
        let mut z_next = lin2(a_p / a_t, z, -s_p * (eh - 1.0), &eps);
        let cn = -1.5 * s_p * ((eh - 1.0) / h - 1.0);
        for (zv, &rv) in z_next.iter_mut().zip(&r_b) {
            *zv += cn * rv;
        }

        self.xhat_third_prev = Some(xhat(&z_a, &eps_a, a_a, s_a)?);
        Ok(StepOutput {
            z_next,
            eps,
            xhat: xh,
            xtilde: xt,
        })
    }
}
