//! Ancestral stepper: the extrapolated estimate replaces the clean sample
//! in the backward conditional Gaussian, then noise with the posterior
//! standard deviation is injected.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::oracle::EpsilonOracle;
use crate::schedule::{Schedule, TimeGrid};

use super::{lookahead, xhat, StepOutput, Stepper};

pub(crate) struct DdpmStepper {
    xhat_prev: Option<Vec<f64>>,
}

impl DdpmStepper {
    pub fn new() -> Self {
        Self { xhat_prev: None }
    }
}

impl Stepper for DdpmStepper {
    fn step(
        &mut self,
        i: usize,
        z: &[f64],
        lambda: f64,
        oracle: &mut dyn EpsilonOracle,
        sched: &Schedule,
        grid: &TimeGrid,
        rng: &mut ChaCha8Rng,
    ) -> Result<StepOutput> {
        let (t, tp) = (grid.t(i), grid.t(i - 1));
        let (a_t, s_t) = sched.alpha_sigma(t)?;
        let eps = oracle.eval(z, t, sched)?;
        let xh = xhat(z, &eps, a_t, s_t)?;
        let xt = match &self.xhat_prev {
            Some(prev) => lookahead(&xh, prev, lambda),
            None => xh.clone(),
        };
        let (mean, variance) = sched.posterior_params(z, &xt, tp, t)?;
        let std = variance.sqrt();
        let z_next = mean
            .into_iter()
            .map(|m| m + std * rng.sample::<f64, _>(StandardNormal))
            .collect();
        self.xhat_prev = Some(xh.clone());
        Ok(StepOutput {
            z_next,
            eps,
            xhat: xh,
            xtilde: xt,
        })
    }
}
