//! Helpers shared by the integration test targets.
#![allow(dead_code, clippy::needless_range_loop)]

use siu::lp::{solve_lp, LpProblem, LpStatus, RowSense, Sense};
use siu::{GridInstance, Rng};

pub const INF: f64 = f64::INFINITY;

/// Solves a square system by Gaussian elimination with partial pivoting.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Best objective over all basic feasible points of a bounded LP, or `None`
/// when no vertex is feasible.
pub fn vertex_oracle(p: &LpProblem) -> Option<f64> {
    let n = p.num_vars();
    // every constraint as (coefficients, rhs, sense)
    let mut cons: Vec<(Vec<f64>, f64, RowSense)> = Vec::new();
    for row in &p.rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &row.coeffs {
            a[j] += v;
        }
        cons.push((a, row.rhs, row.sense));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cons.push((e.clone(), p.lower[j], RowSense::Ge));
        cons.push((e, p.upper[j], RowSense::Le));
    }
    let feasible = |x: &[f64]| {
        cons.iter().all(|(a, b, s)| {
            let act: f64 = a.iter().zip(x).map(|(u, v)| u * v).sum();
            let tol = 1e-7 * (1.0 + b.abs());
            match s {
                RowSense::Le => act <= b + tol,
                RowSense::Ge => act >= b - tol,
                RowSense::Eq => (act - b).abs() <= tol,
            }
        })
    };
    let mut best: Option<f64> = None;
    for subset in combinations(cons.len(), n) {
        let a: Vec<Vec<f64>> = subset.iter().map(|&i| cons[i].0.clone()).collect();
        let b: Vec<f64> = subset.iter().map(|&i| cons[i].1).collect();
        let Some(x) = solve_square(a, b) else { continue };
        if !feasible(&x) {
            continue;
        }
        let val = p.objective_value(&x);
        best = Some(match (best, p.sense) {
            (None, _) => val,
            (Some(b), Sense::Maximize) => b.max(val),
            (Some(b), Sense::Minimize) => b.min(val),
        });
    }
    best
}

pub fn random_lp(rng: &mut Rng, n: usize, m: usize) -> LpProblem {
    let sense = if rng.uniform_int(0, 1) == 0 { Sense::Minimize } else { Sense::Maximize };
    let mut p = LpProblem::new(sense);
    for _ in 0..n {
        let lo = rng.uniform_int(-5, 0) as f64;
        let hi = lo + rng.uniform_int(1, 8) as f64;
        p.add_var(lo, hi, rng.uniform(-5.0, 5.0));
    }
    for _ in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.uniform01() < 0.8 {
                coeffs.push((j, rng.uniform(-4.0, 4.0)));
            }
        }
        let sense = match rng.uniform_int(0, 4) {
            0 => RowSense::Ge,
            1 => RowSense::Eq,
            _ => RowSense::Le,
        };
        p.add_row(coeffs, sense, rng.uniform(-3.0, 6.0));
    }
    p
}

/// Fixed-demand dual written out from scratch, one column block per family.
pub fn dual_oracle(inst: &GridInstance, demand: &[f64]) -> f64 {
    let (g, t) = (inst.g, inst.t);
    let n = t + 3 * g * t;
    let ybar = |tt: usize, gg: usize| t + tt * g + gg;
    let yund = |tt: usize, gg: usize| t + g * t + tt * g + gg;
    let z = |tt: usize, gg: usize| t + 2 * g * t + tt * g + gg;
    let mut lp = LpProblem::new(Sense::Maximize);
    lp.objective = vec![0.0; n];
    lp.lower = vec![0.0; n];
    lp.upper = vec![f64::INFINITY; n];
    for tt in 0..t {
        lp.objective[tt] = demand[tt * inst.l..(tt + 1) * inst.l].iter().sum();
        lp.lower[tt] = -inst.curtail_penalty;
        lp.upper[tt] = inst.shed_penalty;
        for gg in 0..g {
            lp.objective[ybar(tt, gg)] = -inst.ramp_up[gg];
            lp.objective[yund(tt, gg)] = -inst.ramp_down[gg];
            lp.objective[z(tt, gg)] = -inst.cap[gg];
        }
    }
    for tt in 0..t {
        for gg in 0..g {
            let mut row = vec![(tt, 1.0), (ybar(tt, gg), -1.0), (yund(tt, gg), 1.0), (z(tt, gg), -1.0)];
            if tt + 1 < t {
                row.push((ybar(tt + 1, gg), 1.0));
                row.push((yund(tt + 1, gg), -1.0));
            }
            lp.add_row(row, RowSense::Le, inst.gen_cost[gg]);
        }
    }
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    sol.objective
}
