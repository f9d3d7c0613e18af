//! Deterministic stepper: `z_{i-1} = alpha_{i-1} * x_tilde + sigma_{i-1} * eps`.

use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::oracle::EpsilonOracle;
use crate::schedule::{Schedule, TimeGrid};

use super::{lin2, lookahead, xhat, StepOutput, Stepper};

pub(crate) struct DdimStepper {
    xhat_prev: Option<Vec<f64>>,
}

impl DdimStepper {
    pub fn new() -> Self {
        Self { xhat_prev: None }
    }
}

impl Stepper for DdimStepper {
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
        let eps = oracle.eval(z, t, sched)?;
        let xh = xhat(z, &eps, a_t, s_t)?;
        let xt = match &self.xhat_prev {
            Some(prev) => lookahead(&xh, prev, lambda),
            None => xh.clone(),
        };
        let z_next = lin2(a_p, &xt, s_p, &eps);
        self.xhat_prev = Some(xh.clone());
        Ok(StepOutput {
            z_next,
            eps,
            xhat: xh,
            xtilde: xt,
        })
    }
}
