//! Second-order pseudo numerical stepper.
//!
//! The first backward step is a pseudo improved-Euler step (two noise
//! predictions, averaged); every later step is a pseudo linear multistep
//! combining the current and previous predictions, with the lookahead
//! extrapolation applied to the implied clean-sample estimate. The
//! extrapolated estimate itself is carried forward.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::oracle::EpsilonOracle;
use crate::schedule::{Schedule, TimeGrid};

use super::{lin2, lookahead, StepOutput, Stepper};

pub(crate) struct SPndmStepper {
    eps_prev: Option<Vec<f64>>,
    xtilde_prev: Option<Vec<f64>>,
}

impl SPndmStepper {
    pub fn new() -> Self {
        Self {
            eps_prev: None,
            xtilde_prev: None,
        }
    }
}

impl Stepper for SPndmStepper {
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

        if i == grid.n() {
            // pseudo improved Euler: provisional deterministic step, then
            // average the two noise predictions
            let eps1 = oracle.eval(z, t, sched)?;
            let z_prov = lin2(a_p / a_t, &lin2(1.0, z, -s_t, &eps1), s_p, &eps1);
            let eps2 = oracle.eval(&z_prov, tp, sched)?;
            let eps_avg: Vec<f64> = eps1
                .iter()
                .zip(&eps2)
                .map(|(&a, &b)| 0.5 * (a + b))
                .collect();
            let xh: Vec<f64> = z
                .iter()
                .zip(&eps_avg)
                .map(|(&zv, &ev)| (zv - s_t * ev) / a_t)
                .collect();
            let z_next = lin2(a_p, &xh, s_p, &eps_avg);
            self.eps_prev = Some(eps1.clone());
            self.xtilde_prev = Some(xh.clone());
            return Ok(StepOutput {
                z_next,
                eps: eps1,
                xhat: xh.clone(),
                xtilde: xh,
            });
        }

        let (eps_prev, xtilde_prev) = match (&self.eps_prev, &self.xtilde_prev) {
            (Some(e), Some(x)) => (e.clone(), x.clone()),
            _ => {
                return Err(Error::Sequencing(
                    "pseudo linear multistep invoked before the improved Euler step",
                ))
            }
        };

        let eps = oracle.eval(z, t, sched)?;
        let eps_tilde: Vec<f64> = eps
            .iter()
            .zip(&eps_prev)
            .map(|(&cur, &prev)| 0.5 * (3.0 * cur - prev))
            .collect();
        let xh: Vec<f64> = z
            .iter()
            .zip(&eps_tilde)
            .map(|(&zv, &ev)| (zv - s_t * ev) / a_t)
            .collect();
        let xt = lookahead(&xh, &xtilde_prev, lambda);
        let z_next = lin2(a_p, &xt, s_p, &eps_tilde);

        self.eps_prev = Some(eps.clone());
        self.xtilde_prev = Some(xt.clone());
        Ok(StepOutput {
            z_next,
            eps,
            xhat: xh,
            xtilde: xt,
        })
    }
}
