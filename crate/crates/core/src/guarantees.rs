//! Scenario counts that make a PCA set cover a fresh draw with probability
//! at least `1 − ε`, at confidence `1 − β`, and a Monte Carlo check.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};
use crate::scenario::{gen_correlated_normal, GaussianSampler, Rng};
use crate::usets::{default_tol, fit_pca};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeParams {
    pub epsilon: f64,
    pub beta: f64,
    pub m: usize,
}

impl GuaranteeParams {
    pub fn new(epsilon: f64, beta: f64, m: usize) -> Result<Self> {
        let p = Self { epsilon, beta, m };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let open = |v: f64| v > 0.0 && v < 1.0;
        if !open(self.epsilon) || !open(self.beta) {
            return Err(Error::InvalidInput(format!(
                "epsilon and beta must lie in (0, 1), got {} and {}",
                self.epsilon, self.beta
            )));
        }
        if self.m == 0 {
            return Err(Error::InvalidInput("m must be positive".into()));
        }
        Ok(())
    }
}

/// Value of the generic bound before the ceiling.
pub fn margellos_raw(p: &GuaranteeParams) -> f64 {
    (E / (E - 1.0)) * (2.0 * p.m as f64 - 1.0 + (1.0 / p.beta).ln()) / p.epsilon
}

pub fn nstar_margellos(p: &GuaranteeParams) -> Result<u64> {
    p.validate()?;
    Ok(margellos_raw(p).ceil() as u64)
}

/// Order-statistic bound for a single direction.
pub fn nstar_thm4(p: &GuaranteeParams) -> Result<u64> {
    p.validate()?;
    if p.m != 1 {
        return Err(Error::MRequiredOne(p.m));
    }
    let n1 = nstar_margellos(p)? as f64;
    let eps = p.epsilon;
    let raw = (p.beta.ln() - (1.0 - eps + n1 * eps).ln()) / (1.0 - eps).ln() + 1.0;
    Ok(raw.ceil() as u64)
}

/// Union bound over `m` directions, each held to `ε / m`.
pub fn nstar_corollary(p: &GuaranteeParams) -> Result<u64> {
    p.validate()?;
    let (m, eps) = (p.m as f64, p.epsilon);
    let inner = ((m / eps) * (E / (E - 1.0)) * (1.0 + (m / p.beta).ln())).ceil();
    let raw = (p.beta.ln() - (m - eps + inner * eps).ln()) / (1.0 - eps / m).ln() + 1.0;
    Ok(raw.ceil() as u64)
}

/// `(1 − ε)^{N−1} (1 − ε + Nε)`: probability that `N` draws leave more than
/// `ε` mass outside their range in one dimension.
pub fn failure_probability(n: u64, epsilon: f64) -> f64 {
    (1.0 - epsilon).powf(n as f64 - 1.0) * (1.0 - epsilon + n as f64 * epsilon)
}

/// Fraction of trials in which `U_PCA(S, m)` built from `n_scenarios` draws
/// covers at least `1 − ε` of `eval_samples` fresh draws.
///
/// Trial `k` uses `rng.child(k)`, so the result does not depend on the
/// number of worker threads.
pub fn empirical_coverage(
    mean: &[f64],
    cov: &DenseMatrix,
    p: &GuaranteeParams,
    n_scenarios: usize,
    trials: usize,
    eval_samples: usize,
    rng: &Rng,
) -> Result<f64> {
    p.validate()?;
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    if eval_samples < 1000 {
        return Err(Error::InvalidInput("eval_samples must be at least 1000".into()));
    }
    if mean.len() != p.m {
        return Err(Error::DimensionMismatch {
            expected: p.m,
            got: mean.len(),
        });
    }
    let sampler = GaussianSampler::new(mean, cov)?;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(trials);
    let chunk = trials.div_ceil(workers);
    let outcomes: Vec<Result<Vec<bool>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let sampler = &sampler;
                scope.spawn(move || {
                    (w * chunk..((w + 1) * chunk).min(trials))
                        .map(|k| coverage_trial(mean, cov, sampler, p, n_scenarios, eval_samples, rng.child(k as u64)))
                        .collect::<Result<Vec<bool>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("coverage worker panicked"))
            .collect()
    });
    let mut passed = 0usize;
    for part in outcomes {
        passed += part?.into_iter().filter(|&ok| ok).count();
    }
    Ok(passed as f64 / trials as f64)
}

fn coverage_trial(
    mean: &[f64],
    cov: &DenseMatrix,
    sampler: &GaussianSampler,
    p: &GuaranteeParams,
    n_scenarios: usize,
    eval_samples: usize,
    mut rng: Rng,
) -> Result<bool> {
    let s = gen_correlated_normal(mean, cov, n_scenarios, &mut rng)?;
    let basis = fit_pca(&s)?;
    let m = basis.dim();
    let dirs: Vec<Vec<f64>> = (0..m).map(|i| basis.unit_direction(i)).collect();
    let mut draw = vec![0.0; m];
    let mut centered = vec![0.0; m];
    let mut inside = 0usize;
    for _ in 0..eval_samples {
        sampler.sample_into(&mut rng, &mut draw);
        let tol = default_tol(&draw);
        for k in 0..m {
            centered[k] = draw[k] - basis.mean[k];
        }
        let ok = dirs.iter().enumerate().all(|(i, d)| {
            let xi = dot(d, &centered);
            xi >= basis.omega_lo[i] - tol && xi <= basis.omega_hi[i] + tol
        });
        inside += ok as usize;
    }
    Ok(inside as f64 / eval_samples as f64 >= 1.0 - p.epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(e: f64, b: f64, m: usize) -> GuaranteeParams {
        GuaranteeParams::new(e, b, m).unwrap()
    }

    #[test]
    fn stated_values() {
        assert_eq!(nstar_margellos(&params(0.1, 0.1, 1)).unwrap(), 53);
        assert_eq!(nstar_thm4(&params(0.1, 0.1, 1)).unwrap(), 41);
    }

    #[test]
    fn direct_evaluations() {
        let r = E / (E - 1.0);
        assert_eq!(nstar_margellos(&params(0.1, 0.1, 2)).unwrap(), (10.0 * r * (3.0 + 10f64.ln())).ceil() as u64);
        assert_eq!(nstar_margellos(&params(0.1, 0.1, 2)).unwrap(), 84);
        let inner = (20.0 * r * (1.0 + 20f64.ln())).ceil();
        assert_eq!(inner, 127.0);
        let expect = ((0.1f64.ln() - (2.0 - 0.1 + inner * 0.1).ln()) / 0.95f64.ln() + 1.0).ceil() as u64;
        assert_eq!(nstar_corollary(&params(0.1, 0.1, 2)).unwrap(), expect);
        assert_eq!(expect, 99);
    }

    #[test]
    fn doubling_epsilon_halves_raw_bound() {
        let a = margellos_raw(&params(0.1, 0.2, 3));
        let b = margellos_raw(&params(0.2, 0.2, 3));
        assert!((a - 2.0 * b).abs() <= 1e-12 * a);
    }

    #[test]
    fn corollary_matches_thm4_at_one() {
        for e in [0.05, 0.1, 0.2] {
            for b in [0.05, 0.1, 0.2] {
                let p = params(e, b, 1);
                assert_eq!(nstar_corollary(&p).unwrap(), nstar_thm4(&p).unwrap());
            }
        }
    }

    #[test]
    fn corollary_monotone_in_m() {
        let ns: Vec<u64> = (1..=10).map(|m| nstar_corollary(&params(0.1, 0.1, m)).unwrap()).collect();
        assert!(ns.windows(2).all(|w| w[0] <= w[1]), "{ns:?}");
    }

    #[test]
    fn thm4_exceeds_smallest_valid_count() {
        let (e, b) = (0.05, 0.05);
        let n = nstar_thm4(&params(e, b, 1)).unwrap();
        let smallest = (1..).find(|&k| failure_probability(k, e) <= b).unwrap();
        assert!(n >= smallest);
        assert!(failure_probability(n, e) <= b);
    }

    #[test]
    fn errors() {
        assert!(matches!(nstar_thm4(&params(0.1, 0.1, 2)), Err(Error::MRequiredOne(2))));
        assert!(GuaranteeParams::new(0.0, 0.1, 1).is_err());
        assert!(GuaranteeParams::new(0.1, 1.0, 1).is_err());
        let p = params(0.1, 0.1, 1);
        let cov = DenseMatrix::identity(1);
        assert!(empirical_coverage(&[0.0], &cov, &p, 10, 0, 1000, &Rng::new(1)).is_err());
        assert!(empirical_coverage(&[0.0], &cov, &p, 10, 1, 999, &Rng::new(1)).is_err());
    }

    #[test]
    fn point_mass_is_always_covered() {
        let p = params(0.1, 0.1, 2);
        let cov = DenseMatrix::zeros(2, 2);
        let f = empirical_coverage(&[3.0, -1.0], &cov, &p, 5, 20, 1000, &Rng::new(9)).unwrap();
        assert_eq!(f, 1.0);
    }

    #[test]
    fn two_scenarios_rarely_cover() {
        let p = params(0.1, 0.1, 1);
        let f = empirical_coverage(&[0.0], &DenseMatrix::identity(1), &p, 2, 100, 2000, &Rng::new(3)).unwrap();
        assert!(f < 0.5, "{f}");
    }
}
