//! Desk-scale sample-quality measures.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::GmmTarget;
use crate::samplers::Method;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub method: Method,
    pub n: usize,
    pub lambda: f64,
    pub seed: u64,
}

/// Collection of equally dimensioned sample vectors.
#[derive(Debug, Clone)]
pub struct SampleSet {
    dim: usize,
    samples: Vec<Vec<f64>>,
    pub provenance: Option<Provenance>,
}

impl SampleSet {
    pub fn new(dim: usize, samples: Vec<Vec<f64>>) -> Result<Self> {
        if samples.is_empty() || dim == 0 {
            return Err(Error::InvalidParams("sample set must be non-empty".into()));
        }
        if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Ok(Self {
            dim,
            samples,
            provenance: None,
        })
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = Some(p);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    /// Draw i.i.d. from a mixture target, e.g. for ground-truth references.
    pub fn from_target<R: Rng>(target: &GmmTarget, n: usize, rng: &mut R) -> Result<Self> {
        let samples = (0..n).map(|_| target.sample(rng)).collect();
        Self::new(target.dim(), samples)
    }
}

fn sorted_scalars(a: &SampleSet) -> Vec<f64> {
    let mut v: Vec<f64> = a.samples.iter().map(|s| s[0]).collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v
}

/// Exact 1-D Wasserstein-1 distance between two empirical distributions.
///
/// Equal counts reduce to the mean absolute difference of the sorted
/// samples; unequal counts are handled by integrating the quantile
/// functions over the merged quantile breakpoints.
pub fn wasserstein1_1d(a: &SampleSet, b: &SampleSet) -> Result<f64> {
    if a.dim != 1 || b.dim != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: a.dim.max(b.dim),
        });
    }
    let xs = sorted_scalars(a);
    let ys = sorted_scalars(b);
    Ok(w1_sorted(&xs, &ys))
}

fn w1_sorted(xs: &[f64], ys: &[f64]) -> f64 {
    let (n, m) = (xs.len(), ys.len());
    if n == m {
        return xs.iter().zip(ys).map(|(&x, &y)| (x - y).abs()).sum::<f64>() / n as f64;
    }
    // piecewise-constant quantile functions; integrate |F_a^-1 - F_b^-1|
    let (mut i, mut j) = (0usize, 0usize);
    let mut q = 0.0;
    let mut total = 0.0;
    while i < n && j < m {
        let qi = (i + 1) as f64 / n as f64;
        let qj = (j + 1) as f64 / m as f64;
        let q_next = qi.min(qj);
        total += (q_next - q) * (xs[i] - ys[j]).abs();
        q = q_next;
        if qi <= q_next {
            i += 1;
        }
        if qj <= q_next {
            j += 1;
        }
    }
    total
}

/// Average 1-D Wasserstein-1 distance over random unit-direction
/// projections. Deterministic given the stream.
pub fn sliced_wasserstein(
    a: &SampleSet,
    b: &SampleSet,
    projections: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    let d = a.dim;
    let mut acc = 0.0;
    for _ in 0..projections.max(1) {
        let mut dir: Vec<f64>;
        loop {
            dir = (0..d)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-12 {
                for v in &mut dir {
                    *v /= norm;
                }
                break;
            }
        }
        let project = |set: &SampleSet| {
            let mut p: Vec<f64> = set
                .samples
                .iter()
                .map(|s| s.iter().zip(&dir).map(|(&x, &u)| x * u).sum())
                .collect();
            p.sort_by(|x, y| x.partial_cmp(y).unwrap());
            p
        };
        acc += w1_sorted(&project(a), &project(b));
    }
    Ok(acc / projections.max(1) as f64)
}

/// Per-dimension deviation of sample moments from closed-form target moments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentReport {
    pub mean_error: Vec<f64>,
    pub variance_error: Vec<f64>,
}

pub fn moment_report(a: &SampleSet, target: &GmmTarget) -> Result<MomentReport> {
    if a.dim != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: a.dim,
        });
    }
    let d = a.dim;
    let n = a.len() as f64;
    let mut mean = vec![0.0; d];
    for s in &a.samples {
        for (m, &v) in mean.iter_mut().zip(s) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; d];
    for s in &a.samples {
        for j in 0..d {
            let r = s[j] - mean[j];
            var[j] += r * r / n;
        }
    }
    let tm = target.mean();
    let tv = target.variance();
    Ok(MomentReport {
        mean_error: mean.iter().zip(&tm).map(|(&m, &t)| m - t).collect(),
        variance_error: var.iter().zip(&tv).map(|(&v, &t)| v - t).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::aux_stream;
    use proptest::prelude::*;
    use rand::Rng;

    fn set1(vals: &[f64]) -> SampleSet {
        SampleSet::new(1, vals.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    #[test]
    fn w1_identical_is_zero() {
        let a = set1(&[0.3, -1.0, 2.0]);
        assert_eq!(wasserstein1_1d(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn w1_translation() {
        let a = set1(&[0.0, 1.0, -2.0, 0.4]);
        let b = set1(&[0.7, 1.7, -1.3, 1.1]);
        assert!((wasserstein1_1d(&a, &b).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn w1_hand_matched_pair() {
        let a = set1(&[0.0, 1.0]);
        let b = set1(&[0.0, 2.0]);
        assert!((wasserstein1_1d(&a, &b).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn w1_unequal_counts_quantile_form() {
        // {0, 1} vs {0, 0, 1, 1} describe the same distribution
        let a = set1(&[0.0, 1.0]);
        let b = set1(&[0.0, 0.0, 1.0, 1.0]);
        assert!(wasserstein1_1d(&a, &b).unwrap().abs() < 1e-12);
    }

    #[test]
    fn sliced_equals_w1_in_1d() {
        let a = set1(&[0.1, 0.5, -0.2]);
        let b = set1(&[0.0, 1.0, -1.0]);
        let w = wasserstein1_1d(&a, &b).unwrap();
        let s = sliced_wasserstein(&a, &b, 16, &mut aux_stream(1, 10)).unwrap();
        assert!((w - s).abs() < 1e-12);
    }

    #[test]
    fn sliced_offset_gaussians_matches_reference() {
        // isotropic sets with mean offset c: SW -> |c| E|u . c_hat|
        let mut rng = aux_stream(2, 11);
        let d = 3;
        let n = 20_000;
        let offset = [0.8, -0.4, 0.2];
        let make = |rng: &mut ChaCha8Rng, shift: bool| {
            let samples = (0..n)
                .map(|_| {
                    (0..d)
                        .map(|j| {
                            rng.sample::<f64, _>(StandardNormal)
                                + if shift { offset[j] } else { 0.0 }
                        })
                        .collect()
                })
                .collect();
            SampleSet::new(d, samples).unwrap()
        };
        let a = make(&mut rng, false);
        let b = make(&mut rng, true);
        let got = sliced_wasserstein(&a, &b, 256, &mut aux_stream(3, 12)).unwrap();

        // large-sample direct reference: E |u . c| over random unit u
        let mut reference = 0.0;
        let mut ref_rng = aux_stream(4, 13);
        let trials = 200_000;
        for _ in 0..trials {
            let u: Vec<f64> = (0..d)
                .map(|_| ref_rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            reference += (u.iter().zip(&offset).map(|(&uv, &c)| uv * c).sum::<f64>() / norm).abs();
        }
        reference /= trials as f64;
        assert!(
            (got - reference).abs() < 0.05,
            "got {got}, reference {reference}"
        );
    }

    #[test]
    fn moment_report_iid_within_clt_bound() {
        let target = GmmTarget::bimodal_1d(1.0, 0.2);
        let n = 100_000;
        let set = SampleSet::from_target(&target, n, &mut aux_stream(5, 14)).unwrap();
        let report = moment_report(&set, &target).unwrap();
        let bound = 4.0 / (n as f64).sqrt();
        assert!(report.mean_error[0].abs() < bound);
    }

    #[test]
    fn moment_report_degenerate_cases() {
        let target = GmmTarget::new(vec![1.0], vec![vec![0.7]], vec![0.5]).unwrap();
        let single = set1(&[0.7]);
        let report = moment_report(&single, &target).unwrap();
        assert_eq!(report.mean_error[0], 0.0);

        // zero-variance target: variance error equals the sample variance
        let point = GmmTarget::new(vec![1.0], vec![vec![0.0]], vec![0.0]).unwrap();
        let set = set1(&[1.0, -1.0]);
        let report = moment_report(&set, &point).unwrap();
        assert!((report.variance_error[0] - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn w1_symmetric_nonnegative(xs in prop::collection::vec(-5.0f64..5.0, 1..40),
                                    ys in prop::collection::vec(-5.0f64..5.0, 1..40)) {
            let a = set1(&xs);
            let b = set1(&ys);
            let ab = wasserstein1_1d(&a, &b).unwrap();
            let ba = wasserstein1_1d(&b, &a).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() < 1e-12);
        }
    }
}
