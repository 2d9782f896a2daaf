//! Best-bound branch and bound over binary columns of an [`LpProblem`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{Basis, LpProblem, LpStatus, LpWorkspace, Sense};

const INT_TOL: f64 = 1e-6;
const FATHOM_ABS: f64 = 1e-9;
const FATHOM_REL: f64 = 1e-9;

/// Mixed-binary program: the LP plus a mask of binary columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpProblem {
    pub base: LpProblem,
    pub binary: Vec<bool>,
}

impl MilpProblem {
    pub fn new(base: LpProblem) -> Self {
        let n = base.num_vars();
        Self {
            base,
            binary: vec![false; n],
        }
    }

    /// Adds a `{0,1}` column.
    pub fn add_binary(&mut self, cost: f64) -> usize {
        let j = self.base.add_var(0.0, 1.0, cost);
        self.binary.resize(self.base.num_vars(), false);
        self.binary[j] = true;
        j
    }

    /// Adds a continuous column.
    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        let j = self.base.add_var(lower, upper, cost);
        self.binary.resize(self.base.num_vars(), false);
        j
    }

    pub fn num_binaries(&self) -> usize {
        self.binary.iter().filter(|b| **b).count()
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.binary.len() != self.base.num_vars() {
            return Err(Error::DimensionMismatch {
                expected: self.base.num_vars(),
                got: self.binary.len(),
            });
        }
        for (j, &b) in self.binary.iter().enumerate() {
            if b && (self.base.lower[j] < 0.0 || self.base.upper[j] > 1.0) {
                return Err(Error::InvalidInput(format!("binary column {j} has bounds outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpOptions {
    pub node_limit: usize,
    pub time_limit: Option<Duration>,
    /// Keep the global bound after every node in [`MilpSolution::bound_history`].
    pub record_bounds: bool,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            node_limit: 2_000_000,
            time_limit: None,
            record_bounds: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    pub nodes: usize,
    pub best_bound: f64,
    pub gap: f64,
    pub lp_iterations: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub bound_history: Vec<f64>,
}

struct Node {
    /// LP bound in maximization form.
    bound: f64,
    depth: usize,
    seq: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    basis: Option<Basis>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap order: best bound, then deeper, then most recently created.
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.depth.cmp(&other.depth))
            .then(self.seq.cmp(&other.seq))
    }
}

fn fathom_tol(incumbent: f64) -> f64 {
    FATHOM_ABS.max(FATHOM_REL * incumbent.abs())
}

/// Most fractional binary (lowest index on ties), if any.
fn branching_column(binary: &[bool], x: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &is_bin) in binary.iter().enumerate() {
        if !is_bin {
            continue;
        }
        let frac = x[j] - x[j].floor();
        let dist = frac.min(1.0 - frac);
        if dist > INT_TOL && best.is_none_or(|(_, d)| dist > d) {
            best = Some((j, dist));
        }
    }
    best.map(|(j, _)| j)
}

struct Search<'a> {
    p: &'a MilpProblem,
    ws: LpWorkspace<'a>,
    sign: f64,
    nodes: usize,
    lp_iterations: usize,
    seq: usize,
    incumbent: Option<(f64, Vec<f64>)>,
    heap: BinaryHeap<Node>,
}

impl Search<'_> {
    /// Solves the relaxation at the given bounds; integral solutions update
    /// the incumbent, fractional ones are queued unless fathomed.
    fn evaluate(&mut self, lower: Vec<f64>, upper: Vec<f64>, depth: usize, warm: Option<&Basis>) -> Result<LpStatus> {
        let (sol, basis) = self.ws.solve(&lower, &upper, warm)?;
        self.nodes += 1;
        self.lp_iterations += sol.iterations;
        if sol.status != LpStatus::Optimal {
            return Ok(sol.status);
        }
        let score = self.sign * sol.objective;
        if let Some((inc, _)) = &self.incumbent {
            if score <= inc + fathom_tol(*inc) {
                return Ok(LpStatus::Optimal);
            }
        }
        if branching_column(&self.p.binary, &sol.x).is_none() {
            let mut values = sol.x;
            for (j, v) in values.iter_mut().enumerate() {
                if self.p.binary[j] {
                    *v = v.round();
                }
            }
            let value = self.sign * self.p.base.objective_value(&values);
            if self.incumbent.as_ref().is_none_or(|(inc, _)| value > *inc) {
                self.incumbent = Some((value, values));
            }
            return Ok(LpStatus::Optimal);
        }
        self.seq += 1;
        self.heap.push(Node {
            bound: score,
            depth,
            seq: self.seq,
            lower,
            upper,
            x: sol.x,
            basis,
        });
        Ok(LpStatus::Optimal)
    }

    /// Best of the open bounds and the incumbent, in maximization form.
    fn global_bound(&self) -> f64 {
        let open = self.heap.peek().map_or(f64::NEG_INFINITY, |n| n.bound);
        let inc = self.incumbent.as_ref().map_or(f64::NEG_INFINITY, |(v, _)| *v);
        open.max(inc)
    }
}

pub fn solve_milp(p: &MilpProblem, opts: &MilpOptions) -> Result<MilpSolution> {
    p.validate()?;
    let start = Instant::now();
    let sign = match p.base.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let mut search = Search {
        p,
        ws: LpWorkspace::new(&p.base)?,
        sign,
        nodes: 0,
        lp_iterations: 0,
        seq: 0,
        incumbent: None,
        heap: BinaryHeap::new(),
    };
    let mut history = Vec::new();

    match search.evaluate(p.base.lower.clone(), p.base.upper.clone(), 0, None)? {
        LpStatus::Infeasible => return Ok(empty(MilpStatus::Infeasible, p, 1, sign)),
        LpStatus::Unbounded => return Ok(empty(MilpStatus::Unbounded, p, 1, sign)),
        LpStatus::Optimal => {}
    }

    while let Some(node) = search.heap.pop() {
        if let Some((inc, _)) = &search.incumbent {
            if node.bound <= inc + fathom_tol(*inc) {
                continue;
            }
        }
        let limit_hit =
            search.nodes >= opts.node_limit || opts.time_limit.is_some_and(|t| start.elapsed() >= t);
        if limit_hit {
            let bound = node.bound.max(search.global_bound());
            let incumbent = search.incumbent.take();
            return Err(Error::LimitReached {
                incumbent: incumbent.as_ref().map(|(v, _)| sign * v),
                bound: sign * bound,
                values: incumbent.map(|(_, x)| x),
            });
        }
        let j = branching_column(&p.binary, &node.x).expect("open nodes are fractional");
        let mut down_upper = node.upper.clone();
        down_upper[j] = 0.0;
        search.evaluate(node.lower.clone(), down_upper, node.depth + 1, node.basis.as_ref())?;
        let mut up_lower = node.lower;
        up_lower[j] = 1.0;
        search.evaluate(up_lower, node.upper, node.depth + 1, node.basis.as_ref())?;
        if opts.record_bounds {
            history.push(sign * search.global_bound());
        }
    }

    let nodes = search.nodes;
    match search.incumbent {
        None => Ok(MilpSolution {
            bound_history: history,
            ..empty(MilpStatus::Infeasible, p, nodes, sign)
        }),
        Some((value, values)) => Ok(MilpSolution {
            status: MilpStatus::Optimal,
            objective: sign * value,
            values,
            nodes,
            best_bound: sign * value,
            gap: 0.0,
            lp_iterations: search.lp_iterations,
            bound_history: history,
        }),
    }
}

fn empty(status: MilpStatus, p: &MilpProblem, nodes: usize, sign: f64) -> MilpSolution {
    let objective = match status {
        MilpStatus::Unbounded => sign * f64::INFINITY,
        _ => f64::NAN,
    };
    MilpSolution {
        status,
        objective,
        values: vec![f64::NAN; p.base.num_vars()],
        nodes,
        best_bound: objective,
        gap: f64::NAN,
        lp_iterations: 0,
        bound_history: Vec::new(),
    }
}
