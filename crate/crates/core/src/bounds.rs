//! Gap bound for dropping trailing principal directions from a PCA set.
//!
//! For a minimization whose inner objective is `max_k y_k⁰ + y_kᵀu`, shrinking
//! `U_PCA(S, m)` to `U_PCA(S, m1)` loses at most
//! `max_k Σ_{i ≥ m1} |y_kᵀ d̄_i| (ω̄_i − ω̲_i) / 2`.

use serde::{Deserialize, Serialize};

use crate::dispatch::solve_dispatch_with;
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::milp::MilpOptions;
use crate::scenario::{GridInstance, ScenarioSet};
use crate::usets::{fit_pca, PcaBasis, UncertaintySet};

/// `u ↦ max_k intercept_k + gradient_kᵀu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearObjective {
    pub pieces: Vec<(f64, Vec<f64>)>,
}

impl PiecewiseLinearObjective {
    pub fn new(pieces: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        let Some((_, first)) = pieces.first() else {
            return Err(Error::InvalidInput("a piecewise-linear objective needs a piece".into()));
        };
        let m = first.len();
        for (_, g) in &pieces {
            if g.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: g.len() });
            }
        }
        Ok(Self { pieces })
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.pieces.first().map_or(0, |(_, g)| g.len())
    }

    pub fn evaluate(&self, u: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|(b, g)| b + dot(g, u))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn theorem1_gap_bound(obj: &PiecewiseLinearObjective, basis: &PcaBasis, m1: usize) -> Result<f64> {
    let m = basis.dim();
    if obj.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: obj.dim(),
        });
    }
    if m1 > m {
        return Err(Error::InvalidM1 { m1, m });
    }
    let dropped: Vec<(Vec<f64>, f64)> = (m1..m)
        .map(|i| (basis.unit_direction(i), 0.5 * (basis.omega_hi[i] - basis.omega_lo[i])))
        .collect();
    Ok(obj
        .pieces
        .iter()
        .map(|(_, y)| dropped.iter().map(|(d, half)| dot(y, d).abs() * half).sum::<f64>())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub z_full: f64,
    pub z_reduced: f64,
    pub bound: f64,
}

impl GapReport {
    pub fn gap(&self) -> f64 {
        self.z_full - self.z_reduced
    }
}

/// Dispatch gradient in `u`: `x^t` repeated over the loads of period `t`.
fn broadcast(inst: &GridInstance, x: &[f64]) -> Vec<f64> {
    (0..inst.m()).map(|k| x[k / inst.l]).collect()
}

/// Worst-case dispatch cost over `U_PCA(S, m)` and `U_PCA(S, m1)` with the
/// gap bound.
///
/// The pieces are the dual solutions at both optima, each affine in demand.
/// The piece active at the full-set optimum is the one the bound's proof
/// needs, so the m1 piece alone would not give a valid bound.
pub fn empirical_gap(inst: &GridInstance, s: &ScenarioSet, m1: usize, opts: &MilpOptions) -> Result<GapReport> {
    let basis = fit_pca(s)?;
    let m = basis.dim();
    if m1 > m {
        return Err(Error::InvalidM1 { m1, m });
    }
    let solve = |k: usize| {
        let set = UncertaintySet::Pca {
            basis: basis.clone(),
            m1: k,
        };
        solve_dispatch_with(inst, &set, opts).map(|(sol, _)| sol)
    };
    let full = solve(m)?;
    let reduced = if m1 == m { full.clone() } else { solve(m1)? };
    let piece = |sol: &crate::knapsack::RobustSolution| {
        let y = broadcast(inst, &sol.x);
        (sol.objective - dot(&y, &sol.worst_case_u), y)
    };
    let obj = PiecewiseLinearObjective::new(vec![piece(&reduced), piece(&full)])?;
    Ok(GapReport {
        z_full: full.objective,
        z_reduced: reduced.objective,
        bound: theorem1_gap_bound(&obj, &basis, m1)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis2() -> PcaBasis {
        PcaBasis {
            mean: vec![0.0, 0.0],
            directions: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            eigenvalues: vec![2.0, 1.0],
            omega_hi: vec![1.0, 4.0],
            omega_lo: vec![-1.0, 0.0],
        }
    }

    #[test]
    fn formula_examples() {
        let b = basis2();
        let along = PiecewiseLinearObjective::new(vec![(0.0, vec![0.0, 1.0])]).unwrap();
        assert_eq!(theorem1_gap_bound(&along, &b, 1).unwrap(), 2.0);
        assert_eq!(theorem1_gap_bound(&along, &b, 2).unwrap(), 0.0);
        let across = PiecewiseLinearObjective::new(vec![(0.0, vec![1.0, 0.0])]).unwrap();
        assert_eq!(theorem1_gap_bound(&across, &b, 1).unwrap(), 0.0);
        assert_eq!(theorem1_gap_bound(&across, &b, 0).unwrap(), 1.0);
    }

    #[test]
    fn bound_grows_as_m1_shrinks() {
        let b = basis2();
        let obj = PiecewiseLinearObjective::new(vec![(1.0, vec![0.5, -2.0]), (0.0, vec![3.0, 0.1])]).unwrap();
        let vals: Vec<f64> = (0..=2).map(|k| theorem1_gap_bound(&obj, &b, k).unwrap()).collect();
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2]);
    }

    #[test]
    fn rejects_bad_dimensions() {
        let obj = PiecewiseLinearObjective::new(vec![(0.0, vec![1.0])]).unwrap();
        assert!(matches!(
            theorem1_gap_bound(&obj, &basis2(), 1),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(PiecewiseLinearObjective::new(vec![(0.0, vec![1.0]), (0.0, vec![1.0, 2.0])]).is_err());
        assert!(PiecewiseLinearObjective::new(vec![]).is_err());
    }

    #[test]
    fn evaluate_takes_max_piece() {
        let obj = PiecewiseLinearObjective::new(vec![(1.0, vec![1.0]), (0.0, vec![2.0])]).unwrap();
        assert_eq!(obj.evaluate(&[0.5]), 1.5);
        assert_eq!(obj.evaluate(&[3.0]), 6.0);
    }
}
