//! Time-domain Adams-Bashforth exponential integrator.
//!
//! The step combines the current and up to `r` historical noise predictions
//! with precomputed coefficients, reformulated through a refined noise
//! estimate so the lookahead extrapolation applies to the implied
//! clean-sample estimate. The coefficients integrate the exponentially
//! weighted Lagrange basis over one step; with `r = 0` the step is exactly
//! the deterministic one-step update.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::oracle::EpsilonOracle;
use crate::quad;
use crate::schedule::{Schedule, TimeGrid};

use super::{lin2, lookahead, StepOutput, Stepper};

const QUAD_NODES: usize = 64;

/// Integrator coefficients `c_{i0..ir}` for the step from `t_i` to `t_{i-1}`
/// over interpolation nodes `t_i .. t_{i+r}`.
pub fn deis_tab_coeffs(sched: &Schedule, grid: &TimeGrid, i: usize, r: usize) -> Result<Vec<f64>> {
    deis_tab_coeffs_with(sched, grid, i, r, QUAD_NODES)
}

/// Same as [`deis_tab_coeffs`] with an explicit quadrature resolution,
/// for self-convergence checks.
pub fn deis_tab_coeffs_with(
    sched: &Schedule,
    grid: &TimeGrid,
    i: usize,
    r: usize,
    quad_nodes: usize,
) -> Result<Vec<f64>> {
    if i == 0 || i + r > grid.n() {
        return Err(Error::Config(format!(
            "coefficient window out of range: i = {i}, r = {r}, n = {}",
            grid.n()
        )));
    }
    let nodes: Vec<f64> = (0..=r).map(|j| grid.t(i + j)).collect();
    for a in 0..nodes.len() {
        for b in a + 1..nodes.len() {
            if nodes[a] == nodes[b] {
                return Err(Error::RepeatedNodes { a: i + a, b: i + b });
            }
        }
    }
    let a_p = sched.alpha(grid.t(i - 1))?;
    let lam_lo = sched.log_snr(grid.t(i))?;
    let lam_hi = sched.log_snr(grid.t(i - 1))?;

    // One step of the probability-flow solution in log-SNR time:
    // z/alpha changes by -int e^{-lam} eps d lam, so each coefficient is the
    // exponentially weighted integral of one Lagrange basis polynomial.
    let mut coeffs = Vec::with_capacity(r + 1);
    for j in 0..=r {
        let val = quad::integrate(
            |lam| {
                let t = sched.t_of_log_snr(lam).expect("lam within step range");
                let mut basis = 1.0;
                for (k, &node) in nodes.iter().enumerate() {
                    if k != j {
                        basis *= (t - node) / (nodes[j] - node);
                    }
                }
                (-lam).exp() * basis
            },
            lam_lo,
            lam_hi,
            quad_nodes,
        );
        coeffs.push(-a_p * val);
    }
    Ok(coeffs)
}

pub(crate) struct DeisStepper {
    r: usize,
    coeffs: Arc<Vec<Vec<f64>>>,
    // most recent first: predictions from t_{i+1}, t_{i+2}, ...
    eps_hist: Vec<Vec<f64>>,
    xddot_prev: Option<Vec<f64>>,
}

impl DeisStepper {
    pub fn new(r: usize, coeffs: Arc<Vec<Vec<f64>>>) -> Self {
        Self {
            r,
            coeffs,
            eps_hist: Vec::new(),
            xddot_prev: None,
        }
    }
}

impl Stepper for DeisStepper {
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
        // effective order shrinks near the start of the chain
        let r_eff = self.r.min(grid.n() - i).min(self.eps_hist.len());
        let c = &self.coeffs[i];
        debug_assert_eq!(c.len(), r_eff + 1);

        let denom = s_p - a_p * s_t / a_t;
        let dim = z.len();
        let mut eps_tilde = vec![0.0; dim];
        for (k, ck) in c.iter().enumerate() {
            let source = if k == 0 { &eps } else { &self.eps_hist[k - 1] };
            for (acc, &v) in eps_tilde.iter_mut().zip(source) {
                *acc += ck * v / denom;
            }
        }

        let xddot: Vec<f64> = z
            .iter()
            .zip(&eps_tilde)
            .map(|(&zv, &ev)| (zv - s_t * ev) / a_t)
            .collect();
        let xt = match &self.xddot_prev {
            Some(prev) => lookahead(&xddot, prev, lambda),
            None => xddot.clone(),
        };
        let z_next = lin2(a_p, &xt, s_p, &eps_tilde);

        self.eps_hist.insert(0, eps.clone());
        self.eps_hist.truncate(self.r);
        self.xddot_prev = Some(xddot.clone());
        Ok(StepOutput {
            z_next,
            eps,
            xhat: xddot,
            xtilde: xt,
        })
    }
}
