//! Dense bounded-variable primal simplex.
//!
//! The problem `A x` with row senses is rewritten as `A x − r = 0` where each
//! logical `r_i` carries the row bounds. The solver keeps a condensed tableau
//! expressing the basic variables in terms of the nonbasic ones, so the
//! starting basis is simply all logicals and no artificial columns are needed.
//! Phase 1 minimizes the sum of bound violations of the basic variables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const INF_BOUND: f64 = 1e30;
const MAX_PIVOTS: usize = 50_000;
const BLAND_AFTER_DEGENERATE: usize = 1000;
const REFACTOR_EVERY: usize = 400;
/// Pivots since the last rebuild below which an optimality or
/// infeasibility verdict is trusted without rebuilding.
const VERIFY_AFTER: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// Linear program `opt cᵀx  s.t.  a_iᵀx (≤|=|≥) b_i,  lo ≤ x ≤ hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LpProblem {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            rows: Vec::new(),
        }
    }

    /// Builds a problem from dense data; `lower`/`upper` may hold infinities.
    pub fn from_dense(
        sense: Sense,
        c: &[f64],
        a: &DenseMatrix,
        senses: &[RowSense],
        b: &[f64],
        lower: &[f64],
        upper: &[f64],
    ) -> Result<Self> {
        let n = c.len();
        if a.cols() != n || lower.len() != n || upper.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.cols(),
            });
        }
        if senses.len() != a.rows() || b.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                got: b.len(),
            });
        }
        let mut p = Self::new(sense);
        for j in 0..n {
            p.add_var(lower[j], upper[j], c[j]);
        }
        for i in 0..a.rows() {
            let coeffs: Vec<(usize, f64)> = a
                .row(i)
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, v)| (j, *v))
                .collect();
            p.add_row(coeffs, senses[i], b[i]);
        }
        Ok(p)
    }

    /// Adds a column and returns its index.
    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    /// Adds a row and returns its index. Repeated column indices are summed.
    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: RowSense, rhs: f64) -> usize {
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        let mut sorted = coeffs;
        sorted.sort_by_key(|(j, _)| *j);
        for (j, v) in sorted {
            match merged.last_mut() {
                Some((lj, lv)) if *lj == j => *lv += v,
                _ => merged.push((j, v)),
            }
        }
        merged.retain(|(_, v)| *v != 0.0);
        self.rows.push(Row {
            coeffs: merged,
            sense,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    /// Row activities `a_iᵀx`.
    pub fn activities(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.coeffs.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of a row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for (row, act) in self.rows.iter().zip(self.activities(x)) {
            let viol = match row.sense {
                RowSense::Le => act - row.rhs,
                RowSense::Ge => row.rhs - act,
                RowSense::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    pub fn dense_matrix(&self) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(self.num_rows(), self.num_vars());
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                a[(i, j)] = v;
            }
        }
        a
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.lower.len().min(self.upper.len()),
            });
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::InvalidInput(format!("variable {j} has bounds [{lo}, {hi}]")));
            }
            if !self.objective[j].is_finite() {
                return Err(Error::InvalidInput(format!("objective coefficient {j} is not finite")));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(Error::InvalidInput(format!("row {i} has a non-finite right-hand side")));
            }
            for &(j, v) in &row.coeffs {
                if j >= n {
                    return Err(Error::InvalidInput(format!("row {i} references column {j} of {n}")));
                }
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!("row {i} has a non-finite coefficient")));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump in a fixed MPS-like layout (free-form fields).
    ///
    /// ```text
    /// NAME <name>
    /// OBJSENSE MIN|MAX
    /// ROWS
    ///  N  OBJ
    ///  L|E|G  R<i>
    /// COLUMNS
    ///     X<j>  OBJ|R<i>  <value>
    /// RHS
    ///     RHS  R<i>  <value>
    /// BOUNDS
    ///  FR|MI|PL|LO|UP|FX  BND  X<j>  [<value>]
    /// ENDATA
    /// ```
    pub fn to_mps_string(&self, name: &str) -> String {
        let mut s = String::new();
        let w = &mut s;
        let _ = writeln!(w, "NAME {name}");
        let _ = writeln!(
            w,
            "OBJSENSE {}",
            match self.sense {
                Sense::Minimize => "MIN",
                Sense::Maximize => "MAX",
            }
        );
        let _ = writeln!(w, "ROWS");
        let _ = writeln!(w, " N  OBJ");
        for (i, row) in self.rows.iter().enumerate() {
            let tag = match row.sense {
                RowSense::Le => "L",
                RowSense::Eq => "E",
                RowSense::Ge => "G",
            };
            let _ = writeln!(w, " {tag}  R{i}");
        }
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.num_vars()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                columns[j].push((i, v));
            }
        }
        let _ = writeln!(w, "COLUMNS");
        for (j, col) in columns.iter().enumerate() {
            if self.objective[j] != 0.0 {
                let _ = writeln!(w, "    X{j}  OBJ  {:.16e}", self.objective[j]);
            }
            for &(i, v) in col {
                let _ = writeln!(w, "    X{j}  R{i}  {v:.16e}");
            }
        }
        let _ = writeln!(w, "RHS");
        for (i, row) in self.rows.iter().enumerate() {
            if row.rhs != 0.0 {
                let _ = writeln!(w, "    RHS  R{i}  {:.16e}", row.rhs);
            }
        }
        let _ = writeln!(w, "BOUNDS");
        for j in 0..self.num_vars() {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            let lo_inf = lo <= -INF_BOUND;
            let hi_inf = hi >= INF_BOUND;
            if lo == hi {
                let _ = writeln!(w, " FX  BND  X{j}  {lo:.16e}");
                continue;
            }
            match (lo_inf, hi_inf) {
                (true, true) => {
                    let _ = writeln!(w, " FR  BND  X{j}");
                }
                (true, false) => {
                    let _ = writeln!(w, " MI  BND  X{j}");
                    let _ = writeln!(w, " UP  BND  X{j}  {hi:.16e}");
                }
                (false, true) => {
                    if lo != 0.0 {
                        let _ = writeln!(w, " LO  BND  X{j}  {lo:.16e}");
                    }
                }
                (false, false) => {
                    if lo != 0.0 {
                        let _ = writeln!(w, " LO  BND  X{j}  {lo:.16e}");
                    }
                    let _ = writeln!(w, " UP  BND  X{j}  {hi:.16e}");
                }
            }
        }
        let _ = writeln!(w, "ENDATA");
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`solve_lp`]. `duals[i]` is the sensitivity of the optimal
/// objective to `b_i`; `reduced_costs[j] = c_j − Σ_i duals[i] a_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    solve_lp_with_bounds(p, &p.lower, &p.upper)
}

/// Solves `p` with its column bounds replaced by `lower`/`upper`.
pub fn solve_lp_with_bounds(p: &LpProblem, lower: &[f64], upper: &[f64]) -> Result<LpSolution> {
    Ok(LpWorkspace::new(p)?.solve(lower, upper, None)?.0)
}

/// Status of one variable (structurals first, then row logicals) in a basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    Free,
}

/// Final basis of a solve, reusable as a warm start after bound changes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub status: Vec<VarStatus>,
}

/// Scaled copy of a problem, shared by repeated solves that only change
/// column bounds.
#[derive(Debug, Clone)]
pub struct LpWorkspace<'a> {
    p: &'a LpProblem,
    a: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
}

impl<'a> LpWorkspace<'a> {
    pub fn new(p: &'a LpProblem) -> Result<Self> {
        p.validate()?;
        let (m, n) = (p.num_rows(), p.num_vars());
        let raw = p.dense_matrix();
        let (row_scale, col_scale) = equilibrate(raw.as_slice(), m, n);
        let mut a = raw.as_slice().to_vec();
        for i in 0..m {
            for j in 0..n {
                a[i * n + j] *= row_scale[i] * col_scale[j];
            }
        }
        Ok(Self {
            p,
            a,
            row_scale,
            col_scale,
        })
    }

    /// Solves at the given column bounds, optionally starting from `warm`.
    /// The returned basis is `None` unless the LP is optimal.
    pub fn solve(&self, lower: &[f64], upper: &[f64], warm: Option<&Basis>) -> Result<(LpSolution, Option<Basis>)> {
        let (n, m) = (self.p.num_vars(), self.p.num_rows());
        if lower.len() != n || upper.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: lower.len(),
            });
        }
        if lower.iter().zip(upper).any(|(l, u)| l > u) {
            return Ok((infeasible(n, m, 0), None));
        }
        let mut simplex = Simplex::new(self, lower, upper);
        if let Some(b) = warm {
            simplex.warm_start(b);
        }
        let outcome = simplex.run()?;
        let basis = matches!(outcome, Outcome::Optimal).then(|| simplex.basis());
        Ok((simplex.solution(self.p, outcome), basis))
    }
}

fn infeasible(n: usize, m: usize, iterations: usize) -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        objective: f64::NAN,
        x: vec![f64::NAN; n],
        duals: vec![0.0; m],
        reduced_costs: vec![0.0; n],
        iterations,
    }
}

fn clamp_inf(v: f64) -> f64 {
    if v >= INF_BOUND {
        f64::INFINITY
    } else if v <= -INF_BOUND {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Power-of-two equilibration: alternating passes that bring the geometric
/// mean of each row and column magnitude range towards one.
fn equilibrate(a: &[f64], m: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut row_exp = vec![0i32; m];
    let mut col_exp = vec![0i32; n];
    let log2 = |v: f64| v.abs().log2();
    for _ in 0..4 {
        for i in 0..m {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for j in 0..n {
                let v = a[i * n + j];
                if v != 0.0 {
                    let e = log2(v) + col_exp[j] as f64;
                    lo = lo.min(e);
                    hi = hi.max(e);
                }
            }
            if lo.is_finite() {
                row_exp[i] = -((lo + hi) / 2.0).round() as i32;
            }
        }
        for j in 0..n {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for i in 0..m {
                let v = a[i * n + j];
                if v != 0.0 {
                    let e = log2(v) + row_exp[i] as f64;
                    lo = lo.min(e);
                    hi = hi.max(e);
                }
            }
            if lo.is_finite() {
                col_exp[j] = -((lo + hi) / 2.0).round() as i32;
            }
        }
    }
    let to_scale = |e: &i32| 2f64.powi((*e).clamp(-60, 60));
    (row_exp.iter().map(to_scale).collect(), col_exp.iter().map(to_scale).collect())
}

enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Working state. Variables `0..n` are structural, `n..n+m` logical.
struct Simplex<'a> {
    m: usize,
    n: usize,
    /// Scaled constraint matrix, kept for refactorization.
    a: &'a [f64],
    /// `x_basic[i] = Σ_j t[i][j] · x_nonbasic[j]`.
    t: Vec<f64>,
    /// Reduced costs of the nonbasic columns (minimization form).
    d: Vec<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    value: Vec<f64>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    row_scale: &'a [f64],
    col_scale: &'a [f64],
    iterations: usize,
    degenerate: usize,
    bland: bool,
    since_refactor: usize,
}

impl<'a> Simplex<'a> {
    fn new(ws: &'a LpWorkspace<'_>, lower: &[f64], upper: &[f64]) -> Self {
        let p = ws.p;
        let n = p.num_vars();
        let m = p.num_rows();
        let (row_scale, col_scale) = (&ws.row_scale[..], &ws.col_scale[..]);
        let sign = match p.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut cost = vec![0.0; n + m];
        let mut lo = vec![0.0; n + m];
        let mut hi = vec![0.0; n + m];
        for j in 0..n {
            cost[j] = sign * p.objective[j] * col_scale[j];
            lo[j] = clamp_inf(lower[j]) / col_scale[j];
            hi[j] = clamp_inf(upper[j]) / col_scale[j];
        }
        for (i, row) in p.rows.iter().enumerate() {
            let b = row.rhs * row_scale[i];
            let (l, h) = match row.sense {
                RowSense::Le => (f64::NEG_INFINITY, b),
                RowSense::Ge => (b, f64::INFINITY),
                RowSense::Eq => (b, b),
            };
            lo[n + i] = l;
            hi[n + i] = h;
        }
        let mut value = vec![0.0; n + m];
        for j in 0..n {
            value[j] = initial_value(lo[j], hi[j]);
        }
        let mut s = Self {
            m,
            n,
            t: ws.a.clone(),
            a: &ws.a,
            d: vec![0.0; n],
            cost,
            lo,
            hi,
            value,
            basic: (n..n + m).collect(),
            nonbasic: (0..n).collect(),
            row_scale,
            col_scale,
            iterations: 0,
            degenerate: 0,
            bland: false,
            since_refactor: 0,
        };
        s.recompute_reduced_costs();
        s.recompute_basic_values();
        s
    }

    fn tol(&self, bound: f64) -> f64 {
        FEAS_TOL * (1.0 + bound.abs())
    }

    fn recompute_reduced_costs(&mut self) {
        let n = self.n;
        for j in 0..n {
            self.d[j] = self.cost[self.nonbasic[j]];
        }
        for i in 0..self.m {
            let cb = self.cost[self.basic[i]];
            if cb != 0.0 {
                let row = &self.t[i * n..(i + 1) * n];
                for j in 0..n {
                    self.d[j] += cb * row[j];
                }
            }
        }
    }

    fn recompute_basic_values(&mut self) {
        let n = self.n;
        for i in 0..self.m {
            let row = &self.t[i * n..(i + 1) * n];
            let v: f64 = row
                .iter()
                .zip(&self.nonbasic)
                .map(|(t, &k)| t * self.value[k])
                .sum();
            self.value[self.basic[i]] = v;
        }
    }

    /// Rebuilds the tableau for the current basis from the scaled matrix.
    fn refactor(&mut self) {
        let n = self.n;
        let m = self.m;
        let target: Vec<bool> = {
            let mut is_basic = vec![false; n + m];
            for &b in &self.basic {
                is_basic[b] = true;
            }
            is_basic
        };
        self.t.copy_from_slice(self.a);
        self.basic = (n..n + m).collect();
        self.nonbasic = (0..n).collect();
        for v in 0..n {
            if !target[v] {
                continue;
            }
            let s = self.nonbasic.iter().position(|&k| k == v).expect("structural is nonbasic");
            let mut best: Option<(usize, f64)> = None;
            for i in 0..m {
                let bi = self.basic[i];
                if bi >= n && !target[bi] {
                    let mag = self.t[i * n + s].abs();
                    if mag > best.map_or(0.0, |(_, b)| b) {
                        best = Some((i, mag));
                    }
                }
            }
            if let Some((r, _)) = best {
                self.pivot(r, s);
            }
        }
        self.since_refactor = 0;
        self.recompute_reduced_costs();
        self.recompute_basic_values();
    }

    /// Rebuilds the tableau for the basis in `b` and puts nonbasic variables
    /// at the recorded bounds. Malformed bases are ignored.
    fn warm_start(&mut self, b: &Basis) {
        let (n, m) = (self.n, self.m);
        if b.status.len() != n + m {
            return;
        }
        let basic: Vec<usize> = (0..n + m).filter(|&k| b.status[k] == VarStatus::Basic).collect();
        if basic.len() != m {
            return;
        }
        self.basic = basic;
        self.refactor();
        for &k in &self.nonbasic {
            let (lo, hi) = (self.lo[k], self.hi[k]);
            self.value[k] = match b.status[k] {
                VarStatus::AtUpper if hi.is_finite() => hi,
                VarStatus::AtLower if lo.is_finite() => lo,
                _ => initial_value(lo, hi),
            };
        }
        self.recompute_basic_values();
    }

    fn basis(&self) -> Basis {
        let mut status = vec![VarStatus::Basic; self.n + self.m];
        for &k in &self.nonbasic {
            let (lo, hi, v) = (self.lo[k], self.hi[k], self.value[k]);
            status[k] = match (lo.is_finite(), hi.is_finite()) {
                (false, false) => VarStatus::Free,
                (true, true) if (v - hi).abs() < (v - lo).abs() => VarStatus::AtUpper,
                (false, true) => VarStatus::AtUpper,
                _ => VarStatus::AtLower,
            };
        }
        Basis { status }
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let n = self.n;
        let p = self.t[r * n + s];
        let prow: Vec<f64> = self.t[r * n..(r + 1) * n].iter().map(|v| v / p).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * n + s];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * n..(i + 1) * n];
            for j in 0..n {
                row[j] -= f * prow[j];
            }
            row[s] = f / p;
        }
        {
            let row = &mut self.t[r * n..(r + 1) * n];
            for j in 0..n {
                row[j] = -prow[j];
            }
            row[s] = 1.0 / p;
        }
        let f = self.d[s];
        if f != 0.0 {
            for j in 0..n {
                self.d[j] -= f * prow[j];
            }
            self.d[s] = f / p;
        }
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[s]);
    }

    /// Signed infeasibility of basic row `i`: −1 below, +1 above, 0 inside.
    fn infeasibility_sign(&self, i: usize) -> f64 {
        let b = self.basic[i];
        let v = self.value[b];
        if v < self.lo[b] - self.tol(self.lo[b]) {
            -1.0
        } else if v > self.hi[b] + self.tol(self.hi[b]) {
            1.0
        } else {
            0.0
        }
    }

    /// Phase-1 gradient over nonbasic columns, or `None` if primal feasible.
    fn phase1_gradient(&self) -> Option<Vec<f64>> {
        let n = self.n;
        let mut g = vec![0.0; n];
        let mut any = false;
        for i in 0..self.m {
            let sigma = self.infeasibility_sign(i);
            if sigma != 0.0 {
                any = true;
                let row = &self.t[i * n..(i + 1) * n];
                for j in 0..n {
                    g[j] += sigma * row[j];
                }
            }
        }
        any.then_some(g)
    }

    /// Chooses an entering column and direction (+1 increase, −1 decrease).
    fn price(&self, g: &[f64], rejected: &[bool]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n {
            if rejected[j] {
                continue;
            }
            let k = self.nonbasic[j];
            let (lo, hi, v) = (self.lo[k], self.hi[k], self.value[k]);
            let dir = if g[j] < -OPT_TOL && v < hi {
                1.0
            } else if g[j] > OPT_TOL && v > lo {
                -1.0
            } else {
                continue;
            };
            let score = g[j].abs();
            let better = match best {
                None => true,
                Some((bj, _, bs)) => {
                    if self.bland {
                        k < self.nonbasic[bj]
                    } else {
                        score > bs
                    }
                }
            };
            if better {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Ratio test. Returns the step and the leaving row (`None` for a bound
    /// flip of the entering variable, or when the step is unbounded).
    fn ratio_test(&self, s: usize, dir: f64, phase1: bool) -> (f64, Option<(usize, f64)>) {
        let n = self.n;
        let k = self.nonbasic[s];
        let mut step = if dir > 0.0 {
            self.hi[k] - self.value[k]
        } else {
            self.value[k] - self.lo[k]
        };
        let mut leave: Option<(usize, f64)> = None;
        let mut leave_mag = 0.0;
        for i in 0..self.m {
            let rate = dir * self.t[i * n + s];
            if rate.abs() <= PIVOT_TOL {
                continue;
            }
            let b = self.basic[i];
            let (lo, hi, v) = (self.lo[b], self.hi[b], self.value[b]);
            let sigma = if phase1 { self.infeasibility_sign(i) } else { 0.0 };
            let (limit, target) = if rate > 0.0 {
                if sigma < 0.0 {
                    ((lo - v) / rate, lo)
                } else if sigma > 0.0 || hi == f64::INFINITY {
                    continue;
                } else {
                    ((hi - v) / rate, hi)
                }
            } else if sigma > 0.0 {
                ((v - hi) / -rate, hi)
            } else if sigma < 0.0 || lo == f64::NEG_INFINITY {
                continue;
            } else {
                ((v - lo) / -rate, lo)
            };
            let limit = limit.max(0.0);
            let mag = rate.abs();
            let eps = 1e-12 * (1.0 + if step.is_finite() { step.abs() } else { 0.0 });
            let replace = if limit < step - eps {
                true
            } else if limit <= step + eps {
                match leave {
                    // a tie with the entering variable's own bound keeps the flip
                    None => false,
                    Some((r, _)) if self.bland => b < self.basic[r],
                    Some(_) => mag > leave_mag,
                }
            } else {
                false
            };
            if replace {
                step = step.min(limit);
                leave = Some((i, target));
                leave_mag = mag;
            }
        }
        (step, leave)
    }

    fn run(&mut self) -> Result<Outcome> {
        let mut rejected = vec![false; self.n];
        let mut verified = false;
        loop {
            let phase1_grad = self.phase1_gradient();
            let phase1 = phase1_grad.is_some();
            let g = phase1_grad.unwrap_or_else(|| self.d.clone());
            let Some((s, dir)) = self.price(&g, &rejected) else {
                // confirm on a freshly rebuilt tableau before concluding
                if !verified && self.since_refactor > VERIFY_AFTER {
                    self.refactor();
                    verified = true;
                    rejected.iter_mut().for_each(|r| *r = false);
                    continue;
                }
                return Ok(if phase1 { Outcome::Infeasible } else { Outcome::Optimal });
            };
            let (step, leave) = self.ratio_test(s, dir, phase1);
            if step == f64::INFINITY {
                if phase1 {
                    rejected[s] = true;
                    continue;
                }
                if !verified && self.since_refactor > 0 {
                    self.refactor();
                    verified = true;
                    continue;
                }
                return Ok(Outcome::Unbounded);
            }
            if self.iterations >= MAX_PIVOTS {
                return Err(Error::IterationLimit(self.iterations));
            }
            self.iterations += 1;
            verified = false;
            rejected.iter_mut().for_each(|r| *r = false);
            if step <= 1e-12 {
                self.degenerate += 1;
                if self.degenerate >= BLAND_AFTER_DEGENERATE {
                    self.bland = true;
                }
            }
            let n = self.n;
            let k = self.nonbasic[s];
            let delta = dir * step;
            self.value[k] += delta;
            for i in 0..self.m {
                let rate = self.t[i * n + s];
                if rate != 0.0 {
                    self.value[self.basic[i]] += delta * rate;
                }
            }
            match leave {
                None => {
                    self.value[k] = if dir > 0.0 { self.hi[k] } else { self.lo[k] };
                }
                Some((r, target)) => {
                    let b = self.basic[r];
                    self.value[b] = target;
                    self.pivot(r, s);
                    self.since_refactor += 1;
                    if self.since_refactor >= REFACTOR_EVERY {
                        self.refactor();
                    }
                }
            }
        }
    }

    fn solution(&self, p: &LpProblem, outcome: Outcome) -> LpSolution {
        let (n, m) = (self.n, self.m);
        match outcome {
            Outcome::Infeasible => return infeasible(n, m, self.iterations),
            Outcome::Unbounded => {
                return LpSolution {
                    status: LpStatus::Unbounded,
                    objective: match p.sense {
                        Sense::Minimize => f64::NEG_INFINITY,
                        Sense::Maximize => f64::INFINITY,
                    },
                    x: vec![f64::NAN; n],
                    duals: vec![0.0; m],
                    reduced_costs: vec![0.0; n],
                    iterations: self.iterations,
                };
            }
            Outcome::Optimal => {}
        }
        let sign = match p.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let x: Vec<f64> = (0..n).map(|j| self.value[j] * self.col_scale[j]).collect();
        let mut duals = vec![0.0; m];
        for (pos, &k) in self.nonbasic.iter().enumerate() {
            if k >= n {
                let i = k - n;
                duals[i] = sign * self.d[pos] * self.row_scale[i];
            }
        }
        let mut reduced_costs = p.objective.clone();
        for (i, row) in p.rows.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                reduced_costs[j] -= duals[i] * v;
            }
        }
        LpSolution {
            status: LpStatus::Optimal,
            objective: p.objective_value(&x),
            x,
            duals,
            reduced_costs,
            iterations: self.iterations,
        }
    }
}

fn initial_value(lo: f64, hi: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => {
            if lo.abs() <= hi.abs() {
                lo
            } else {
                hi
            }
        }
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn simple_max() {
        let mut p = LpProblem::new(Sense::Maximize);
        let x1 = p.add_var(0.0, INF, 1.0);
        let x2 = p.add_var(0.0, INF, 1.0);
        p.add_row(vec![(x1, 1.0), (x2, 1.0)], RowSense::Le, 1.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-12);
        assert!((s.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_rows() {
        let mut p = LpProblem::new(Sense::Maximize);
        let x = p.add_var(0.0, INF, 1.0);
        p.add_row(vec![(x, 1.0)], RowSense::Ge, 2.0);
        p.add_row(vec![(x, 1.0)], RowSense::Le, 1.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded() {
        let mut p = LpProblem::new(Sense::Maximize);
        let x = p.add_var(0.0, INF, 1.0);
        let y = p.add_var(0.0, INF, 0.0);
        p.add_row(vec![(x, 1.0), (y, -1.0)], RowSense::Le, 1.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_free_variables() {
        // min x + 2y  s.t. x + y = 3, x − y ≥ −1, x free, y ≤ 10
        let mut p = LpProblem::new(Sense::Minimize);
        let x = p.add_var(-INF, INF, 1.0);
        let y = p.add_var(-INF, 10.0, 2.0);
        p.add_row(vec![(x, 1.0), (y, 1.0)], RowSense::Eq, 3.0);
        p.add_row(vec![(x, 1.0), (y, -1.0)], RowSense::Ge, -1.0);
        let s = solve_lp(&p).unwrap();
        // y as small as possible: y = −7 gives x = 10 and x−y = 17 ≥ −1; unbounded below? no: y → −∞ makes x → ∞
        assert_eq!(s.status, LpStatus::Unbounded);

        let mut p2 = p.clone();
        p2.set_bounds(y, 0.0, 10.0);
        let s = solve_lp(&p2).unwrap();
        assert!((s.objective - 3.0).abs() < 1e-9, "{s:?}");
        assert!((s.x[x] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn textbook_dantzig() {
        // max 3x + 5y  s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → 36 at (2, 6)
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]]).unwrap();
        let p = LpProblem::from_dense(
            Sense::Maximize,
            &[3.0, 5.0],
            &a,
            &[RowSense::Le; 3],
            &[4.0, 12.0, 18.0],
            &[0.0, 0.0],
            &[INF, INF],
        )
        .unwrap();
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
        // duals (0, 1.5, 1)
        assert!((s.duals[1] - 1.5).abs() < 1e-9 && (s.duals[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn crossed_variable_bounds_are_infeasible() {
        let mut p = LpProblem::new(Sense::Minimize);
        p.add_var(0.0, 1.0, 1.0);
        let s = solve_lp_with_bounds(&p, &[2.0], &[1.0]).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn rejects_bad_column_index() {
        let mut p = LpProblem::new(Sense::Minimize);
        p.add_var(0.0, 1.0, 1.0);
        p.add_row(vec![(3, 1.0)], RowSense::Le, 1.0);
        assert!(matches!(solve_lp(&p), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn mps_dump_lists_every_section() {
        let mut p = LpProblem::new(Sense::Maximize);
        let x = p.add_var(0.0, 4.0, 1.0);
        let y = p.add_var(-INF, INF, 0.0);
        p.add_row(vec![(x, 1.0), (y, 2.0)], RowSense::Eq, 3.0);
        let text = p.to_mps_string("t");
        for key in ["NAME t", "OBJSENSE MAX", " E  R0", "X1  R0", "RHS  R0", " UP  BND  X0", " FR  BND  X1", "ENDATA"] {
            assert!(text.contains(key), "missing {key:?} in\n{text}");
        }
    }

    #[test]
    fn deterministic_iterations() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 1.0], vec![3.0, -1.0, 2.0], vec![1.0, 1.0, 1.0]]).unwrap();
        let p = LpProblem::from_dense(
            Sense::Maximize,
            &[2.0, 3.0, 1.0],
            &a,
            &[RowSense::Le, RowSense::Le, RowSense::Ge],
            &[10.0, 8.0, 1.0],
            &[0.0; 3],
            &[5.0; 3],
        )
        .unwrap();
        let a1 = solve_lp(&p).unwrap();
        let a2 = solve_lp(&p).unwrap();
        assert_eq!(a1.iterations, a2.iterations);
        assert_eq!(a1.objective.to_bits(), a2.objective.to_bits());
    }
}
