//! Robust multi-period economic dispatch.
//!
//! For a fixed demand the inner dispatch LP is replaced by its dual
//!
//! ```text
//! max  Σ_t D^t x^t − Σ_t Σ_g (R̄_g ȳ_g^t + R̲_g y̲_g^t + P̄_g z_g^t)
//! s.t. x^t − ȳ_g^t + ȳ_g^{t+1} + y̲_g^t − y̲_g^{t+1} − z_g^t ≤ c_g   (t < T)
//!      x^T − ȳ_g^T + y̲_g^T − z_g^T ≤ c_g
//!      −M̲ ≤ x^t ≤ M̄,   ȳ, y̲, z ≥ 0
//! ```
//!
//! where `D^t` is the total demand of period `t`. Over a rotated-box set the
//! demand becomes affine in binaries `α_i` and the products `α_i x^t` are
//! linearized with the big-M constants `M̄`, `M̲`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knapsack::RobustSolution;
use crate::lp::{solve_lp, LpProblem, LpStatus, RowSense, Sense};
use crate::milp::{solve_milp, MilpOptions, MilpProblem, MilpStatus};
use crate::scenario::GridInstance;
use crate::usets::{PcaBasis, UncertaintySet};

/// Relative tolerance of the strong-duality certificate.
pub const CERTIFICATE_REL_TOL: f64 = 1e-5;

/// Column indices of each variable family. Per-generator families are
/// flattened period-major: entry `t * G + g`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DispatchColumns {
    pub x: Vec<usize>,
    pub ybar: Vec<usize>,
    pub yund: Vec<usize>,
    pub z: Vec<usize>,
    pub alpha: Vec<usize>,
    /// `v[i][t]` linearizes `α_i x^t`.
    pub v: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchModel {
    pub instance: GridInstance,
    pub set: Option<UncertaintySet>,
    pub demand: Option<Vec<f64>>,
    pub problem: MilpProblem,
    pub columns: DispatchColumns,
}

/// Generator outputs `output[t][g]`, shed and curtailment per period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchPlan {
    pub output: Vec<Vec<f64>>,
    pub shed: Vec<f64>,
    pub curtail: Vec<f64>,
    pub total_cost: f64,
}

impl DispatchPlan {
    /// CSV with header `t,g,mw`; generator rows first, then one `shed` and
    /// one `curtail` row per period (the `g` field holds the row kind).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,g,mw\n");
        for (t, row) in self.output.iter().enumerate() {
            for (g, p) in row.iter().enumerate() {
                out.push_str(&format!("{},{},{:.16e}\n", t + 1, g + 1, p));
            }
        }
        for t in 0..self.shed.len() {
            out.push_str(&format!("{},shed,{:.16e}\n", t + 1, self.shed[t]));
            out.push_str(&format!("{},curtail,{:.16e}\n", t + 1, self.curtail[t]));
        }
        out
    }
}

/// Adds the dual variables and rows; `x_cost[t]` is the objective
/// coefficient of `x^t`.
fn add_dual_core(milp: &mut MilpProblem, inst: &GridInstance, x_cost: &[f64]) -> DispatchColumns {
    let (g_count, t_count) = (inst.g, inst.t);
    let mut cols = DispatchColumns {
        x: x_cost
            .iter()
            .map(|&c| milp.add_var(-inst.curtail_penalty, inst.shed_penalty, c))
            .collect(),
        ..DispatchColumns::default()
    };
    let inf = f64::INFINITY;
    for _t in 0..t_count {
        for g in 0..g_count {
            cols.ybar.push(milp.add_var(0.0, inf, -inst.ramp_up[g]));
            cols.yund.push(milp.add_var(0.0, inf, -inst.ramp_down[g]));
            cols.z.push(milp.add_var(0.0, inf, -inst.cap[g]));
        }
    }
    for t in 0..t_count {
        for g in 0..g_count {
            let k = t * g_count + g;
            let mut row = vec![(cols.x[t], 1.0), (cols.ybar[k], -1.0), (cols.yund[k], 1.0), (cols.z[k], -1.0)];
            if t + 1 < t_count {
                let next = k + g_count;
                row.push((cols.ybar[next], 1.0));
                row.push((cols.yund[next], -1.0));
            }
            milp.base.add_row(row, RowSense::Le, inst.gen_cost[g]);
        }
    }
    cols
}

fn check_demand(inst: &GridInstance, demand: &[f64]) -> Result<()> {
    inst.validate()?;
    if demand.len() != inst.m() {
        return Err(Error::DimensionMismatch {
            expected: inst.m(),
            got: demand.len(),
        });
    }
    Ok(())
}

/// Dual of the inner dispatch LP at a fixed demand vector.
pub fn build_dual_lp(inst: &GridInstance, demand: &[f64]) -> Result<DispatchModel> {
    check_demand(inst, demand)?;
    let mut problem = MilpProblem::new(LpProblem::new(Sense::Maximize));
    let totals = inst.period_totals(demand);
    let columns = add_dual_core(&mut problem, inst, &totals);
    Ok(DispatchModel {
        instance: inst.clone(),
        set: None,
        demand: Some(demand.to_vec()),
        problem,
        columns,
    })
}

/// Optimal value of the fixed-demand dual LP and its `x^t` values.
pub fn dual_value(inst: &GridInstance, demand: &[f64]) -> Result<(f64, Vec<f64>)> {
    let model = build_dual_lp(inst, demand)?;
    let sol = solve_lp(&model.problem.base)?;
    match sol.status {
        LpStatus::Optimal => Ok((sol.objective, model.columns.x.iter().map(|&j| sol.x[j]).collect())),
        LpStatus::Infeasible => Err(Error::Infeasible),
        LpStatus::Unbounded => Err(Error::Unbounded),
    }
}

/// Per-period sums `a_i^t = Σ_l d̄_i[t·L + l]` of each unit direction.
fn period_sums(inst: &GridInstance, basis: &PcaBasis) -> Vec<Vec<f64>> {
    (0..basis.dim())
        .map(|i| inst.period_totals(&basis.unit_direction(i)))
        .collect()
}

/// Single-level mixed-binary model over a rotated-box set (Pca, AxisPca or Box).
pub fn build_single_level_milp(inst: &GridInstance, set: &UncertaintySet) -> Result<DispatchModel> {
    inst.validate()?;
    let (basis, m1) = set.as_rotated_box().ok_or(Error::Unsupported {
        family: set.kind().name(),
        operation: "the single-level dispatch model",
    })?;
    if basis.dim() != inst.m() {
        return Err(Error::DimensionMismatch {
            expected: inst.m(),
            got: basis.dim(),
        });
    }
    let a = period_sums(inst, &basis);
    let mean_totals = inst.period_totals(&basis.mean);
    let x_cost: Vec<f64> = (0..inst.t)
        .map(|t| {
            let mut c = mean_totals[t];
            for (i, ai) in a.iter().enumerate() {
                let w = if i < m1 { basis.omega_lo[i] } else { basis.omega_mid(i) };
                c += w * ai[t];
            }
            c
        })
        .collect();
    let mut problem = MilpProblem::new(LpProblem::new(Sense::Maximize));
    let mut columns = add_dual_core(&mut problem, inst, &x_cost);
    let (m_hi, m_lo) = (inst.shed_penalty, inst.curtail_penalty);
    for i in 0..m1 {
        let delta = basis.omega_hi[i] - basis.omega_lo[i];
        let alpha = problem.add_binary(0.0);
        columns.alpha.push(alpha);
        let mut vs = Vec::with_capacity(inst.t);
        for t in 0..inst.t {
            let v = problem.add_var(-m_lo, m_hi, delta * a[i][t]);
            let x = columns.x[t];
            problem.base.add_row(vec![(v, 1.0), (alpha, -m_hi)], RowSense::Le, 0.0);
            problem.base.add_row(vec![(v, -1.0), (alpha, -m_lo)], RowSense::Le, 0.0);
            problem
                .base
                .add_row(vec![(v, 1.0), (x, -1.0), (alpha, m_lo)], RowSense::Le, m_lo);
            problem
                .base
                .add_row(vec![(x, 1.0), (v, -1.0), (alpha, m_hi)], RowSense::Le, m_hi);
            vs.push(v);
        }
        columns.v.push(vs);
    }
    Ok(DispatchModel {
        instance: inst.clone(),
        set: Some(set.clone()),
        demand: None,
        problem,
        columns,
    })
}

/// Primal inner LP at a fixed demand: the cheapest dispatch.
pub fn recover_plan(inst: &GridInstance, demand: &[f64]) -> Result<DispatchPlan> {
    check_demand(inst, demand)?;
    let (g_count, t_count) = (inst.g, inst.t);
    let mut lp = LpProblem::new(Sense::Minimize);
    let mut p = Vec::with_capacity(g_count * t_count);
    for _t in 0..t_count {
        for g in 0..g_count {
            p.push(lp.add_var(0.0, inst.cap[g], inst.gen_cost[g]));
        }
    }
    let shed: Vec<usize> = (0..t_count).map(|_| lp.add_var(0.0, f64::INFINITY, inst.shed_penalty)).collect();
    let curtail: Vec<usize> = (0..t_count)
        .map(|_| lp.add_var(0.0, f64::INFINITY, inst.curtail_penalty))
        .collect();
    let totals = inst.period_totals(demand);
    for t in 0..t_count {
        let mut row: Vec<(usize, f64)> = (0..g_count).map(|g| (p[t * g_count + g], 1.0)).collect();
        row.push((shed[t], 1.0));
        row.push((curtail[t], -1.0));
        lp.add_row(row, RowSense::Eq, totals[t]);
    }
    for t in 0..t_count {
        for g in 0..g_count {
            let k = t * g_count + g;
            // output before the first period is zero
            let mut up = vec![(p[k], 1.0)];
            let mut down = vec![(p[k], -1.0)];
            if t > 0 {
                up.push((p[k - g_count], -1.0));
                down.push((p[k - g_count], 1.0));
            }
            lp.add_row(up, RowSense::Le, inst.ramp_up[g]);
            lp.add_row(down, RowSense::Le, inst.ramp_down[g]);
        }
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Certificate(format!("dispatch LP ended {:?}", sol.status)));
    }
    Ok(DispatchPlan {
        output: (0..t_count)
            .map(|t| (0..g_count).map(|g| sol.x[p[t * g_count + g]]).collect())
            .collect(),
        shed: shed.iter().map(|&j| sol.x[j]).collect(),
        curtail: curtail.iter().map(|&j| sol.x[j]).collect(),
        total_cost: sol.objective,
    })
}

pub fn solve_dispatch(inst: &GridInstance, set: &UncertaintySet) -> Result<(RobustSolution, DispatchPlan)> {
    solve_dispatch_with(inst, set, &MilpOptions::default())
}

/// Worst-case dispatch cost over `set`. `RobustSolution::x` holds the
/// optimal dual prices `x^t`.
pub fn solve_dispatch_with(
    inst: &GridInstance,
    set: &UncertaintySet,
    opts: &MilpOptions,
) -> Result<(RobustSolution, DispatchPlan)> {
    if set.dim() != inst.m() {
        return Err(Error::DimensionMismatch {
            expected: inst.m(),
            got: set.dim(),
        });
    }
    let start = Instant::now();
    let (objective, x, worst_case_u, nodes) = match set {
        UncertaintySet::ConvexHull { scenarios } => {
            let mut best: Option<(f64, Vec<f64>, usize)> = None;
            for (j, s) in scenarios.iter().enumerate() {
                let (value, x) = dual_value(inst, s)?;
                if best.as_ref().is_none_or(|(b, _, _)| value > *b) {
                    best = Some((value, x, j));
                }
            }
            let (value, x, j) = best.expect("scenario sets are non-empty");
            (value, x, scenarios.scenario(j).to_vec(), scenarios.len())
        }
        _ => {
            let model = build_single_level_milp(inst, set)?;
            let sol = solve_milp(&model.problem, opts)?;
            match sol.status {
                MilpStatus::Optimal => {}
                MilpStatus::Infeasible => return Err(Error::Infeasible),
                MilpStatus::Unbounded => return Err(Error::Unbounded),
            }
            let (basis, m1) = set.as_rotated_box().expect("checked by the model builder");
            let xi: Vec<f64> = (0..basis.dim())
                .map(|i| {
                    if i < m1 {
                        if sol.values[model.columns.alpha[i]] > 0.5 {
                            basis.omega_hi[i]
                        } else {
                            basis.omega_lo[i]
                        }
                    } else {
                        basis.omega_mid(i)
                    }
                })
                .collect();
            let x = model.columns.x.iter().map(|&j| sol.values[j]).collect();
            (sol.objective, x, basis.point(&xi), sol.nodes)
        }
    };
    let millis = start.elapsed().as_secs_f64() * 1e3;
    let plan = recover_plan(inst, &worst_case_u)?;
    let scale = objective.abs().max(plan.total_cost.abs()).max(1.0);
    if (objective - plan.total_cost).abs() > CERTIFICATE_REL_TOL * scale {
        return Err(Error::Certificate(format!(
            "robust objective {objective} differs from plan cost {}",
            plan.total_cost
        )));
    }
    Ok((
        RobustSolution {
            objective,
            x,
            worst_case_u,
            nodes,
            millis,
        },
        plan,
    ))
}
