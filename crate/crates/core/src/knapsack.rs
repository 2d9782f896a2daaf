//! Robust 0/1 knapsack: `max vᵀx` subject to `uᵀx ≤ W` for every weight
//! vector `u` in an uncertainty set.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::lp::{LpProblem, RowSense, Sense};
use crate::milp::{solve_milp, MilpOptions, MilpProblem, MilpStatus};
use crate::scenario::KnapsackInstance;
use crate::usets::{axis_order, support, PcaBasis, UncertaintySet};

/// Largest item count accepted by [`oracle_knapsack`].
pub const ORACLE_MAX_ITEMS: usize = 20;

/// Objective, decision, worst-case realization and solve statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustSolution {
    pub objective: f64,
    pub x: Vec<f64>,
    pub worst_case_u: Vec<f64>,
    pub nodes: usize,
    pub millis: f64,
}

/// Column indices of each variable family in the counterpart.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KnapsackColumns {
    pub x: Vec<usize>,
    pub beta: Vec<usize>,
    pub gamma: Vec<usize>,
    pub zeta: Vec<usize>,
    pub theta: Option<usize>,
    pub p: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustKnapsackModel {
    pub instance: KnapsackInstance,
    pub set: UncertaintySet,
    pub milp: MilpProblem,
    pub columns: KnapsackColumns,
}

fn x_terms(cols: &[usize], weights: &[f64]) -> Vec<(usize, f64)> {
    cols.iter().zip(weights).map(|(&j, &w)| (j, w)).collect()
}

/// `c = Σ_{i<m1} ω̲_i d̄_i + Σ_{i≥m1} mid_i d̄_i` and the unit directions.
fn lower_corner(basis: &PcaBasis, m1: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = basis.dim();
    let dirs: Vec<Vec<f64>> = (0..m).map(|i| basis.unit_direction(i)).collect();
    let mut c = vec![0.0; m];
    for (i, d) in dirs.iter().enumerate() {
        let w = if i < m1 { basis.omega_lo[i] } else { basis.omega_mid(i) };
        for (ck, dk) in c.iter_mut().zip(d) {
            *ck += w * dk;
        }
    }
    (c, dirs)
}

/// Builds the mixed-binary counterpart of the robust capacity constraint.
pub fn build_knapsack_counterpart(inst: &KnapsackInstance, set: &UncertaintySet) -> Result<RobustKnapsackModel> {
    let n = inst.n;
    if set.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: set.dim(),
        });
    }
    if inst.values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: inst.values.len(),
        });
    }
    let w = inst.capacity;
    let mut milp = MilpProblem::new(LpProblem::new(Sense::Maximize));
    let mut cols = KnapsackColumns {
        x: inst.values.iter().map(|&v| milp.add_binary(v as f64)).collect(),
        ..KnapsackColumns::default()
    };
    let inf = f64::INFINITY;
    match set {
        UncertaintySet::Box { nominal, deviation } => {
            let worst: Vec<f64> = nominal.iter().zip(deviation).map(|(u, d)| u + d).collect();
            milp.base.add_row(x_terms(&cols.x, &worst), RowSense::Le, w);
        }
        UncertaintySet::AxisPca { lower, upper, m1 } => {
            let mut worst: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect();
            for &k in axis_order(lower, upper).iter().take(*m1) {
                worst[k] = upper[k];
            }
            milp.base.add_row(x_terms(&cols.x, &worst), RowSense::Le, w);
        }
        UncertaintySet::ConvexHull { scenarios } => {
            for s in scenarios.iter() {
                milp.base.add_row(x_terms(&cols.x, s), RowSense::Le, w);
            }
        }
        UncertaintySet::Budget {
            nominal,
            deviation,
            gamma,
        } => {
            let theta = milp.add_var(0.0, inf, 0.0);
            cols.theta = Some(theta);
            cols.p = (0..n).map(|_| milp.add_var(0.0, inf, 0.0)).collect();
            let mut cap = x_terms(&cols.x, nominal);
            cap.push((theta, *gamma));
            cap.extend(cols.p.iter().map(|&j| (j, 1.0)));
            milp.base.add_row(cap, RowSense::Le, w);
            for z in 0..n {
                milp.base.add_row(
                    vec![(theta, 1.0), (cols.p[z], 1.0), (cols.x[z], -deviation[z])],
                    RowSense::Ge,
                    0.0,
                );
            }
        }
        UncertaintySet::Pca { basis, m1 } => {
            let (c, dirs) = lower_corner(basis, *m1);
            cols.beta = (0..*m1).map(|_| milp.add_var(0.0, inf, 0.0)).collect();
            let base: Vec<f64> = basis.mean.iter().zip(&c).map(|(s, ck)| s + ck).collect();
            let mut cap = x_terms(&cols.x, &base);
            cap.extend(cols.beta.iter().map(|&j| (j, 1.0)));
            milp.base.add_row(cap, RowSense::Le, w);
            for i in 0..*m1 {
                let delta = basis.omega_hi[i] - basis.omega_lo[i];
                let mut row: Vec<(usize, f64)> = vec![(cols.beta[i], 1.0)];
                row.extend(cols.x.iter().zip(&dirs[i]).map(|(&j, d)| (j, -delta * d)));
                milp.base.add_row(row, RowSense::Ge, 0.0);
            }
        }
        UncertaintySet::Intersection {
            basis,
            lower,
            upper,
            m1,
        } => {
            let (c, dirs) = lower_corner(basis, *m1);
            // axis box with trailing coordinates pinned at their midpoints
            let mut hi = upper.clone();
            let mut lo = lower.clone();
            for &k in axis_order(lower, upper).iter().skip(*m1) {
                let mid = 0.5 * (lower[k] + upper[k]);
                hi[k] = mid;
                lo[k] = mid;
            }
            cols.beta = (0..*m1).map(|_| milp.add_var(0.0, inf, 0.0)).collect();
            cols.gamma = (0..n).map(|_| milp.add_var(0.0, inf, 0.0)).collect();
            cols.zeta = (0..n).map(|_| milp.add_var(0.0, inf, 0.0)).collect();
            let center: Vec<f64> = basis.mean.iter().zip(&c).map(|(s, ck)| s + ck).collect();
            let mut cap = x_terms(&cols.x, &center);
            cap.extend(cols.beta.iter().map(|&j| (j, 1.0)));
            for k in 0..n {
                cap.push((cols.gamma[k], hi[k] - center[k]));
                cap.push((cols.zeta[k], center[k] - lo[k]));
            }
            milp.base.add_row(cap, RowSense::Le, w);
            for i in 0..*m1 {
                let delta = basis.omega_hi[i] - basis.omega_lo[i];
                let mut row: Vec<(usize, f64)> = vec![(cols.beta[i], 1.0)];
                for k in 0..n {
                    let coef = delta * dirs[i][k];
                    row.push((cols.gamma[k], coef));
                    row.push((cols.zeta[k], -coef));
                    row.push((cols.x[k], -coef));
                }
                milp.base.add_row(row, RowSense::Ge, 0.0);
            }
        }
    }
    Ok(RobustKnapsackModel {
        instance: inst.clone(),
        set: set.clone(),
        milp,
        columns: cols,
    })
}

/// Worst-case load `max_{u ∈ set} uᵀx`; an empty set carries no load.
fn worst_case(set: &UncertaintySet, x: &[f64]) -> Result<Option<(f64, Vec<f64>)>> {
    match support(set, x) {
        Ok(v) => Ok(Some(v)),
        Err(Error::EmptySet) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn solve_robust_knapsack(inst: &KnapsackInstance, set: &UncertaintySet) -> Result<RobustSolution> {
    solve_robust_knapsack_with(inst, set, &MilpOptions::default())
}

pub fn solve_robust_knapsack_with(
    inst: &KnapsackInstance,
    set: &UncertaintySet,
    opts: &MilpOptions,
) -> Result<RobustSolution> {
    let model = build_knapsack_counterpart(inst, set)?;
    let start = Instant::now();
    let sol = solve_milp(&model.milp, opts)?;
    let millis = start.elapsed().as_secs_f64() * 1e3;
    match sol.status {
        MilpStatus::Optimal => {}
        MilpStatus::Infeasible => return Err(Error::Infeasible),
        MilpStatus::Unbounded => return Err(Error::Unbounded),
    }
    let x: Vec<f64> = model.columns.x.iter().map(|&j| sol.values[j].round()).collect();
    let objective = dot(&inst.values_f64(), &x);
    let worst_case_u = match worst_case(set, &x)? {
        Some((load, u)) => {
            if load > inst.capacity + 1e-6 * (1.0 + inst.capacity.abs()) {
                return Err(Error::Certificate(format!(
                    "worst-case load {load} exceeds capacity {}",
                    inst.capacity
                )));
            }
            u
        }
        None => Vec::new(),
    };
    Ok(RobustSolution {
        objective,
        x,
        worst_case_u,
        nodes: sol.nodes,
        millis,
    })
}

/// Exhaustive search over all `2ⁿ` packings, keeping the most valuable
/// robust-feasible one (lowest mask on ties).
pub fn oracle_knapsack(inst: &KnapsackInstance, set: &UncertaintySet) -> Result<RobustSolution> {
    let n = inst.n;
    if n > ORACLE_MAX_ITEMS {
        return Err(Error::TooLarge(n));
    }
    if set.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: set.dim(),
        });
    }
    let start = Instant::now();
    let values = inst.values_f64();
    let limit = inst.capacity + 1e-9 * (1.0 + inst.capacity.abs());
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for mask in 0u64..(1u64 << n) {
        let x: Vec<f64> = (0..n).map(|i| f64::from((mask >> i & 1) as u8)).collect();
        let value = dot(&values, &x);
        if best.as_ref().is_some_and(|(b, _, _)| value <= *b) {
            continue;
        }
        let u = match worst_case(set, &x)? {
            Some((load, _)) if load > limit => continue,
            Some((_, u)) => u,
            None => Vec::new(),
        };
        best = Some((value, x, u));
    }
    let (objective, x, worst_case_u) = best.ok_or(Error::Infeasible)?;
    Ok(RobustSolution {
        objective,
        x,
        worst_case_u,
        nodes: 1 << n,
        millis: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::scenario::ScenarioSet;
    use crate::usets::{build_set, SetKind};

    fn instance(values: &[i64], capacity: f64) -> KnapsackInstance {
        let n = values.len();
        KnapsackInstance {
            n,
            values: values.to_vec(),
            weight_means: vec![1.0; n],
            weight_cov: DenseMatrix::zeros(n, n),
            capacity,
            rho: 0.0,
        }
    }

    #[test]
    fn pca_model_row_count() {
        let s = ScenarioSet::from_rows(&[vec![0.0, 0.0], vec![2.0, 2.0], vec![1.0, 1.0], vec![3.0, 3.0]]).unwrap();
        let set = build_set(SetKind::Pca, &s, 1, None).unwrap();
        let model = build_knapsack_counterpart(&instance(&[3, 4], 10.0), &set).unwrap();
        assert_eq!(model.milp.base.num_rows(), 2);
    }

    #[test]
    fn hull_model_row_count() {
        let s = ScenarioSet::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0], vec![1.5, 1.5]]).unwrap();
        let set = build_set(SetKind::ConvexHull, &s, 0, None).unwrap();
        let model = build_knapsack_counterpart(&instance(&[3, 4], 10.0), &set).unwrap();
        assert_eq!(model.milp.base.num_rows(), 3);
    }

    #[test]
    fn zero_deviation_box_is_nominal() {
        let set = UncertaintySet::Box {
            nominal: vec![2.0, 3.0, 4.0],
            deviation: vec![0.0; 3],
        };
        let sol = solve_robust_knapsack(&instance(&[5, 4, 3], 6.0), &set).unwrap();
        assert_eq!(sol.objective, 9.0);
        assert_eq!(sol.x, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn slack_capacity_packs_everything() {
        let set = UncertaintySet::Box {
            nominal: vec![2.0, 3.0],
            deviation: vec![1.0, 1.0],
        };
        let sol = solve_robust_knapsack(&instance(&[5, 4], 100.0), &set).unwrap();
        assert_eq!(sol.objective, 9.0);
    }

    #[test]
    fn zero_capacity_packs_nothing() {
        let set = UncertaintySet::Box {
            nominal: vec![2.0, 3.0],
            deviation: vec![1.0, 1.0],
        };
        let sol = solve_robust_knapsack(&instance(&[5, 4], 0.0), &set).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.x, vec![0.0, 0.0]);
    }

    #[test]
    fn oracle_boundary_is_feasible() {
        let set = UncertaintySet::Box {
            nominal: vec![4.0],
            deviation: vec![1.0],
        };
        assert_eq!(oracle_knapsack(&instance(&[10], 5.0), &set).unwrap().objective, 10.0);
    }

    #[test]
    fn oracle_hand_instance() {
        // weights 3, 4, 5 (fixed), values 4, 5, 6, capacity 8:
        // {} 0, {1} 4, {2} 5, {3} 6, {1,2} 9, {1,3} 10, {2,3} over, {1,2,3} over
        let set = UncertaintySet::Box {
            nominal: vec![3.0, 4.0, 5.0],
            deviation: vec![0.0; 3],
        };
        let inst = instance(&[4, 5, 6], 8.0);
        let sol = oracle_knapsack(&inst, &set).unwrap();
        assert_eq!(sol.objective, 10.0);
        assert_eq!(sol.x, vec![1.0, 0.0, 1.0]);
        assert_eq!(solve_robust_knapsack(&inst, &set).unwrap().objective, 10.0);
    }

    #[test]
    fn oracle_rejects_large_instances() {
        let set = UncertaintySet::Box {
            nominal: vec![1.0; 21],
            deviation: vec![0.0; 21],
        };
        assert!(matches!(oracle_knapsack(&instance(&[1; 21], 5.0), &set), Err(Error::TooLarge(21))));
    }

    #[test]
    fn dimension_mismatch() {
        let set = UncertaintySet::Box {
            nominal: vec![1.0; 3],
            deviation: vec![0.0; 3],
        };
        assert!(matches!(
            build_knapsack_counterpart(&instance(&[1, 2], 5.0), &set),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
