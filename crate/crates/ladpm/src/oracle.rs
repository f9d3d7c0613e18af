//! Noise predictors with closed forms.
//!
//! These play the role of the trained network: given a noisy state and a
//! time they return the predicted Gaussian noise. For point-mass, Gaussian
//! and Gaussian-mixture data the posterior mean of the clean sample is
//! available in closed form, so the prediction is exact and every sampler
//! can be verified without training anything.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::Schedule;

/// Predicts the noise component of `z` at time `t`.
///
/// Deterministic oracles are pure in `(z, t)`; stochastic ones own their
/// random stream, one instance per chain.
pub trait EpsilonOracle: Send {
    fn dim(&self) -> usize;

    fn eval(&mut self, z: &[f64], t: f64, sched: &Schedule) -> Result<Vec<f64>>;

    fn is_deterministic(&self) -> bool {
        true
    }
}

fn checked_alpha_sigma(sched: &Schedule, t: f64) -> Result<(f64, f64)> {
    let (a, s) = sched.alpha_sigma(t)?;
    if s == 0.0 {
        return Err(Error::DegenerateTime {
            t,
            reason: "noise prediction undefined at sigma_t = 0",
        });
    }
    Ok((a, s))
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Oracle for a point-mass data distribution at `x0`.
/// Its clean-sample estimate is `x0` exactly at every step.
#[derive(Debug, Clone)]
pub struct PointMassOracle {
    x0: Vec<f64>,
}

impl PointMassOracle {
    pub fn new(x0: Vec<f64>) -> Self {
        Self { x0 }
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }
}

impl EpsilonOracle for PointMassOracle {
    fn dim(&self) -> usize {
        self.x0.len()
    }

    fn eval(&mut self, z: &[f64], t: f64, sched: &Schedule) -> Result<Vec<f64>> {
        check_dim(self.x0.len(), z.len())?;
        let (a, s) = checked_alpha_sigma(sched, t)?;
        Ok(z.iter()
            .zip(&self.x0)
            .map(|(&zv, &xv)| (zv - a * xv) / s)
            .collect())
    }
}

/// Oracle for isotropic Gaussian data `N(mean, std^2 I)`.
#[derive(Debug, Clone)]
pub struct GaussianOracle {
    mean: Vec<f64>,
    std: f64,
}

impl GaussianOracle {
    pub fn new(mean: Vec<f64>, std: f64) -> Result<Self> {
        if std <= 0.0 {
            return Err(Error::InvalidParams("gaussian std must be positive".into()));
        }
        Ok(Self { mean, std })
    }

    /// Standard-normal data; under a VP schedule the probability-flow map
    /// is the identity, which makes this the convergence-test oracle.
    pub fn standard_normal(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: 1.0,
        }
    }
}

impl EpsilonOracle for GaussianOracle {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn eval(&mut self, z: &[f64], t: f64, sched: &Schedule) -> Result<Vec<f64>> {
        check_dim(self.mean.len(), z.len())?;
        let (a, s) = checked_alpha_sigma(sched, t)?;
        let s2 = self.std * self.std;
        let denom = a * a * s2 + s * s;
        Ok(z.iter()
            .zip(&self.mean)
            .map(|(&zv, &mv)| {
                let post_mean = (a * s2 * zv + s * s * mv) / denom;
                (zv - a * post_mean) / s
            })
            .collect())
    }
}

/// Gaussian-mixture data distribution with isotropic components.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmmTarget {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub stds: Vec<f64>,
}

impl GmmTarget {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, stds: Vec<f64>) -> Result<Self> {
        let target = Self {
            weights,
            means,
            stds,
        };
        target.validate()?;
        Ok(target)
    }

    /// Symmetric two-component mixture at +/- m with equal weights.
    pub fn bimodal_1d(m: f64, std: f64) -> Self {
        Self {
            weights: vec![0.5, 0.5],
            means: vec![vec![-m], vec![m]],
            stds: vec![std, std],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.weights.len();
        if k == 0 || self.means.len() != k || self.stds.len() != k {
            return Err(Error::InvalidParams(
                "weights, means and stds must be non-empty and equally long".into(),
            ));
        }
        if self.weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidParams(
                "mixture weights must be non-negative".into(),
            ));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        if self.stds.iter().any(|&s| s < 0.0) {
            return Err(Error::InvalidParams(
                "component stds must be non-negative".into(),
            ));
        }
        let d = self.means[0].len();
        if self.means.iter().any(|m| m.len() != d) {
            return Err(Error::InvalidParams(
                "component means differ in dimension".into(),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    /// Closed-form mixture mean per dimension.
    pub fn mean(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for (w, m) in self.weights.iter().zip(&self.means) {
            for (o, &mv) in out.iter_mut().zip(m) {
                *o += w * mv;
            }
        }
        out
    }

    /// Closed-form mixture variance per dimension.
    pub fn variance(&self) -> Vec<f64> {
        let mean = self.mean();
        let d = self.dim();
        let mut out = vec![0.0; d];
        for ((w, m), s) in self.weights.iter().zip(&self.means).zip(&self.stds) {
            for j in 0..d {
                out[j] += w * (s * s + m[j] * m[j]);
            }
        }
        for j in 0..d {
            out[j] -= mean[j] * mean[j];
        }
        out
    }

    /// Draw one i.i.d. sample.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut k = self.weights.len() - 1;
        for (idx, &w) in self.weights.iter().enumerate() {
            acc += w;
            if u <= acc {
                k = idx;
                break;
            }
        }
        self.means[k]
            .iter()
            .map(|&m| m + self.stds[k] * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }
}

/// Exact noise predictor for a [`GmmTarget`].
#[derive(Debug, Clone)]
pub struct GmmOracle {
    target: GmmTarget,
}

impl GmmOracle {
    pub fn new(target: GmmTarget) -> Result<Self> {
        target.validate()?;
        if target.stds.contains(&0.0) {
            return Err(Error::InvalidParams(
                "gmm oracle requires strictly positive component stds".into(),
            ));
        }
        Ok(Self { target })
    }

    pub fn target(&self) -> &GmmTarget {
        &self.target
    }
}

impl EpsilonOracle for GmmOracle {
    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn eval(&mut self, z: &[f64], t: f64, sched: &Schedule) -> Result<Vec<f64>> {
        check_dim(self.target.dim(), z.len())?;
        let (a, s) = checked_alpha_sigma(sched, t)?;
        let d = z.len();
        let k = self.target.weights.len();

        // responsibilities of z under the t-marginal mixture, log-domain
        let mut log_resp = Vec::with_capacity(k);
        for ((w, m), sd) in self
            .target
            .weights
            .iter()
            .zip(&self.target.means)
            .zip(&self.target.stds)
        {
            if *w == 0.0 {
                log_resp.push(f64::NEG_INFINITY);
                continue;
            }
            let var = a * a * sd * sd + s * s;
            let mut q = 0.0;
            for j in 0..d {
                let r = z[j] - a * m[j];
                q += r * r;
            }
            log_resp.push(w.ln() - 0.5 * q / var - 0.5 * d as f64 * var.ln());
        }
        let max = log_resp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut resp: Vec<f64> = log_resp.iter().map(|&l| (l - max).exp()).collect();
        let total: f64 = resp.iter().sum();
        for r in &mut resp {
            *r /= total;
        }

        // posterior mean: responsibility-weighted per-component Gaussian posteriors
        let mut post = vec![0.0; d];
        for (idx, (m, sd)) in self.target.means.iter().zip(&self.target.stds).enumerate() {
            if resp[idx] == 0.0 {
                continue;
            }
            let s2 = sd * sd;
            let denom = a * a * s2 + s * s;
            for j in 0..d {
                post[j] += resp[idx] * (a * s2 * z[j] + s * s * m[j]) / denom;
            }
        }
        Ok(z.iter()
            .zip(&post)
            .map(|(&zv, &p)| (zv - a * p) / s)
            .collect())
    }
}

/// Adds i.i.d. Gaussian perturbation to an inner oracle's output,
/// emulating an imperfectly trained predictor.
pub struct NoisyOracle {
    inner: Box<dyn EpsilonOracle>,
    noise_scale: f64,
    rng: ChaCha8Rng,
}

impl NoisyOracle {
    pub fn new(inner: Box<dyn EpsilonOracle>, noise_scale: f64, rng: ChaCha8Rng) -> Result<Self> {
        if noise_scale < 0.0 {
            return Err(Error::InvalidParams(
                "noise_scale must be non-negative".into(),
            ));
        }
        Ok(Self {
            inner,
            noise_scale,
            rng,
        })
    }
}

impl EpsilonOracle for NoisyOracle {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&mut self, z: &[f64], t: f64, sched: &Schedule) -> Result<Vec<f64>> {
        let mut out = self.inner.eval(z, t, sched)?;
        if self.noise_scale > 0.0 {
            for v in &mut out {
                *v += self.noise_scale * self.rng.sample::<f64, _>(StandardNormal);
            }
        }
        Ok(out)
    }

    fn is_deterministic(&self) -> bool {
        self.noise_scale == 0.0 && self.inner.is_deterministic()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::oracle_stream;
    use rand::Rng;

    fn sched() -> Schedule {
        Schedule::continuous_vp()
    }

    /// 1-D quadrature posterior mean: E[x | z] under data density `q`,
    /// marginal z = alpha x + sigma eps. Independent of the closed forms.
    fn quadrature_eps(
        q: impl Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        z: f64,
        t: f64,
        sched: &Schedule,
    ) -> f64 {
        let (a, s) = sched.alpha_sigma(t).unwrap();
        let n = 40_000;
        let h = (hi - lo) / n as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..=n {
            let x = lo + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            let r = (z - a * x) / s;
            let lik = (-0.5 * r * r).exp();
            num += w * x * q(x) * lik;
            den += w * q(x) * lik;
        }
        let post_mean = num / den;
        (z - a * post_mean) / s
    }

    #[test]
    fn point_mass_recovers_noise_exactly() {
        let sched = sched();
        let x0 = vec![0.4, -1.1];
        let mut oracle = PointMassOracle::new(x0.clone());
        let t = 0.5;
        let (a, s) = sched.alpha_sigma(t).unwrap();

        let z: Vec<f64> = x0.iter().map(|&x| a * x).collect();
        let eps = oracle.eval(&z, t, &sched).unwrap();
        assert!(eps.iter().all(|&e| e.abs() < 1e-12));

        let u = [0.3, -0.9];
        let z: Vec<f64> = x0.iter().zip(&u).map(|(&x, &uv)| a * x + s * uv).collect();
        let eps = oracle.eval(&z, t, &sched).unwrap();
        for (e, &uv) in eps.iter().zip(&u) {
            assert!((e - uv).abs() < 1e-12);
        }

        let mut zero = PointMassOracle::new(vec![0.0]);
        let eps = zero.eval(&[0.7], t, &sched).unwrap();
        assert!((eps[0] - 0.7 / s).abs() < 1e-12);
    }

    #[test]
    fn standard_normal_oracle_closed_form() {
        // mu = 0, s = 1 under VP: eps(z, t) = sigma_t z
        let sched = sched();
        let mut oracle = GaussianOracle::standard_normal(1);
        for &t in &[0.1, 0.5, 0.9] {
            let (_, s) = sched.alpha_sigma(t).unwrap();
            let eps = oracle.eval(&[1.7], t, &sched).unwrap();
            assert!((eps[0] - s * 1.7).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_oracle_mean_input_gives_zero() {
        let sched = sched();
        let mu = vec![0.8, -0.3];
        let mut oracle = GaussianOracle::new(mu.clone(), 0.7).unwrap();
        let t = 0.4;
        let a = sched.alpha(t).unwrap();
        let z: Vec<f64> = mu.iter().map(|&m| a * m).collect();
        let eps = oracle.eval(&z, t, &sched).unwrap();
        assert!(eps.iter().all(|&e| e.abs() < 1e-12));
    }

    #[test]
    fn gaussian_oracle_matches_quadrature() {
        let sched = sched();
        let (mu, sd) = (0.6, 0.8);
        let mut oracle = GaussianOracle::new(vec![mu], sd).unwrap();
        let q = |x: f64| (-0.5 * ((x - mu) / sd).powi(2)).exp();
        let mut rng = crate::stream::aux_stream(3, 2);
        for _ in 0..20 {
            let t = rng.gen_range(0.05..0.95);
            let z = rng.gen_range(-2.0..2.0);
            let want = quadrature_eps(q, mu - 12.0 * sd, mu + 12.0 * sd, z, t, &sched);
            let got = oracle.eval(&[z], t, &sched).unwrap()[0];
            assert!((got - want).abs() < 1e-8, "t = {t}, z = {z}");
        }
    }

    #[test]
    fn gmm_single_component_reduces_to_gaussian() {
        let sched = sched();
        let target = GmmTarget::new(vec![1.0], vec![vec![0.5, -0.2]], vec![0.6]).unwrap();
        let mut gmm = GmmOracle::new(target).unwrap();
        let mut gauss = GaussianOracle::new(vec![0.5, -0.2], 0.6).unwrap();
        let z = [1.0, -0.7];
        for &t in &[0.2, 0.7] {
            let a = gmm.eval(&z, t, &sched).unwrap();
            let b = gauss.eval(&z, t, &sched).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gmm_symmetric_mixture_zero_at_origin() {
        let sched = sched();
        let mut oracle = GmmOracle::new(GmmTarget::bimodal_1d(1.3, 0.4)).unwrap();
        let eps = oracle.eval(&[0.0], 0.5, &sched).unwrap();
        assert!(eps[0].abs() < 1e-12);
    }

    #[test]
    fn gmm_oracle_matches_quadrature() {
        let sched = sched();
        let target = GmmTarget::bimodal_1d(1.0, 0.25);
        let mut oracle = GmmOracle::new(target).unwrap();
        let q = |x: f64| {
            0.5 * (-0.5 * ((x + 1.0) / 0.25).powi(2)).exp()
                + 0.5 * (-0.5 * ((x - 1.0) / 0.25).powi(2)).exp()
        };
        let mut rng = crate::stream::aux_stream(9, 3);
        for _ in 0..20 {
            let t = rng.gen_range(0.05..0.95);
            let z = rng.gen_range(-2.0..2.0);
            let want = quadrature_eps(q, -6.0, 6.0, z, t, &sched);
            let got = oracle.eval(&[z], t, &sched).unwrap()[0];
            assert!((got - want).abs() < 1e-8, "t = {t}, z = {z}");
        }
    }

    #[test]
    fn noisy_wrapper_zero_scale_is_inner() {
        let sched = sched();
        let inner = PointMassOracle::new(vec![0.3]);
        let mut wrapped =
            NoisyOracle::new(Box::new(inner.clone()), 0.0, oracle_stream(1, 0)).unwrap();
        let mut plain = inner;
        let a = wrapped.eval(&[0.9], 0.5, &sched).unwrap();
        let b = plain.eval(&[0.9], 0.5, &sched).unwrap();
        assert_eq!(a, b);
        assert!(wrapped.is_deterministic());
    }

    #[test]
    fn noisy_wrapper_is_seed_deterministic() {
        let sched = sched();
        let make = || {
            NoisyOracle::new(
                Box::new(PointMassOracle::new(vec![0.3])),
                0.2,
                oracle_stream(5, 1),
            )
            .unwrap()
        };
        let mut a = make();
        let mut b = make();
        for _ in 0..10 {
            assert_eq!(
                a.eval(&[0.9], 0.5, &sched).unwrap(),
                b.eval(&[0.9], 0.5, &sched).unwrap()
            );
        }
        assert!(!a.is_deterministic());
    }

    #[test]
    fn noisy_wrapper_variance_matches_scale() {
        let sched = sched();
        let scale = 0.3;
        let mut inner = PointMassOracle::new(vec![0.3]);
        let mut noisy =
            NoisyOracle::new(Box::new(inner.clone()), scale, oracle_stream(7, 2)).unwrap();
        let n = 100_000usize;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..n {
            let d = noisy.eval(&[0.9], 0.5, &sched).unwrap()[0]
                - inner.eval(&[0.9], 0.5, &sched).unwrap()[0];
            sum += d;
            sumsq += d * d;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        // variance of the sample variance of N(0, s^2) is ~ 2 s^4 / n
        let se = (2.0 * scale.powi(4) / n as f64).sqrt();
        assert!((var - scale * scale).abs() < 3.0 * se);
    }
}
