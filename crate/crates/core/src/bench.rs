//! Sweep harness: one instance per sweep point, several scenario sets per
//! instance, every requested set family solved on each set.
//!
//! Three CSV files are produced. The summary and detail files hold only
//! seeded quantities and are byte-identical across reruns; wall-clock
//! times go to the separate timing file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dispatch::solve_dispatch_with;
use crate::error::{Error, Result};
use crate::knapsack::solve_robust_knapsack_with;
use crate::milp::MilpOptions;
use crate::scenario::{fmt_f64, gen_correlated_normal, gen_grid_instance, gen_knapsack_instance, Rng, ScenarioSet};
use crate::usets::{build_set, SetKind, UncertaintySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Knapsack,
    Dispatch,
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "knapsack" => Ok(Problem::Knapsack),
            "dispatch" => Ok(Problem::Dispatch),
            _ => Err(Error::Parse(format!("unknown problem {s:?}"))),
        }
    }
}

/// A set family with its size parameter as a fraction of `m`: `m1` for the
/// PCA families and `Γ` for the budget set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: SetKind,
    pub fraction: f64,
}

impl FamilySpec {
    pub fn new(kind: SetKind, fraction: f64) -> Self {
        Self { kind, fraction }
    }

    pub fn full(kind: SetKind) -> Self {
        let fraction = if kind == SetKind::Budget { 0.5 } else { 1.0 };
        Self { kind, fraction }
    }

    fn scaled(&self, m: usize) -> usize {
        ((self.fraction * m as f64).round() as usize).min(m)
    }

    pub fn m1(&self, m: usize) -> usize {
        match self.kind {
            SetKind::Pca | SetKind::AxisPca | SetKind::Intersection => self.scaled(m),
            _ => m,
        }
    }

    pub fn gamma(&self, m: usize) -> f64 {
        self.fraction * m as f64
    }

    /// `pca(m)`, `pca(0.875m)`, `budget(0.5m)`, `box`, `convex-hull`.
    pub fn label(&self) -> String {
        let frac = if self.fraction == 1.0 {
            "m".to_string()
        } else {
            format!("{}m", self.fraction)
        };
        match self.kind {
            SetKind::Box | SetKind::ConvexHull => self.kind.name().to_string(),
            _ => format!("{}({frac})", self.kind.name()),
        }
    }

    pub fn build(&self, s: &ScenarioSet) -> Result<UncertaintySet> {
        let m = s.dim();
        build_set(self.kind, s, self.m1(m), Some(self.gamma(m)))
    }
}

impl FromStr for FamilySpec {
    type Err = Error;

    /// `kind` or `kind:fraction`, e.g. `pca:0.875`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None => Ok(FamilySpec::full(s.parse()?)),
            Some((k, f)) => {
                let fraction: f64 = f
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad fraction in {s:?}")))?;
                if !(0.0..=1.0).contains(&fraction) {
                    return Err(Error::Parse(format!("fraction in {s:?} must lie in [0, 1]")));
                }
                Ok(FamilySpec::new(k.parse()?, fraction))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub problem: Problem,
    pub families: Vec<FamilySpec>,
    /// Index into `families` of the Gap reference. `None` picks the convex
    /// hull for knapsack (if present) and the first family otherwise.
    pub reference: Option<usize>,
    /// Knapsack capacities `W`.
    pub capacities: Vec<f64>,
    /// Knapsack pair correlations `ρ`.
    pub rhos: Vec<f64>,
    /// Dispatch temporal correlations `ρ₁`.
    pub rho1s: Vec<f64>,
    /// Dispatch spatial correlations `ρ₂`.
    pub rho2s: Vec<f64>,
    pub items: usize,
    pub generators: usize,
    pub loads: usize,
    pub periods: usize,
    pub n_scenario_sets: usize,
    pub n_scenarios: usize,
    pub seed: u64,
    /// Summary CSV path; the detail and timing files sit next to it.
    pub output: Option<PathBuf>,
    pub node_limit: usize,
    pub time_limit_secs: Option<f64>,
}

pub const KNAPSACK_RHOS: [f64; 7] = [-0.8, -0.5, -0.2, 0.0, 0.2, 0.5, 0.8];

impl BenchConfig {
    /// Desk-scale knapsack sweep over `W = n·25·{0.6, 0.8, 1.0}` and seven `ρ`.
    pub fn knapsack_default() -> Self {
        let n = 50;
        Self {
            problem: Problem::Knapsack,
            families: vec![
                FamilySpec::full(SetKind::ConvexHull),
                FamilySpec::full(SetKind::Box),
                FamilySpec::full(SetKind::Pca),
                FamilySpec::full(SetKind::Intersection),
            ],
            reference: None,
            capacities: [0.6, 0.8, 1.0].iter().map(|f| n as f64 * 25.0 * f).collect(),
            rhos: KNAPSACK_RHOS.to_vec(),
            rho1s: Vec::new(),
            rho2s: Vec::new(),
            items: n,
            generators: 0,
            loads: 0,
            periods: 0,
            n_scenario_sets: 10,
            n_scenarios: 1000,
            seed: 0,
            output: None,
            node_limit: MilpOptions::default().node_limit,
            time_limit_secs: None,
        }
    }

    /// Desk-scale dispatch sweep of `m1 ∈ {m, 0.875m, 0.75m}`.
    pub fn dispatch_default() -> Self {
        Self {
            problem: Problem::Dispatch,
            families: [1.0, 0.875, 0.75].iter().map(|&f| FamilySpec::new(SetKind::Pca, f)).collect(),
            reference: Some(0),
            capacities: Vec::new(),
            rhos: Vec::new(),
            rho1s: vec![0.5, 0.9],
            rho2s: KNAPSACK_RHOS.to_vec(),
            items: 0,
            generators: 8,
            loads: 2,
            periods: 8,
            n_scenario_sets: 10,
            n_scenarios: 1000,
            seed: 0,
            output: None,
            node_limit: MilpOptions::default().node_limit,
            time_limit_secs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.into()));
        if self.families.is_empty() {
            return bad("at least one set family is required");
        }
        if self.n_scenario_sets == 0 {
            return bad("n_scenario_sets must be positive");
        }
        if self.n_scenarios < 2 {
            return bad("each scenario set needs at least 2 scenarios");
        }
        if let Some(r) = self.reference {
            if r >= self.families.len() {
                return bad("reference index out of range");
            }
        }
        match self.problem {
            Problem::Knapsack => {
                if self.capacities.is_empty() || self.rhos.is_empty() {
                    return bad("knapsack sweeps need capacities and rhos");
                }
                if self.items == 0 || !self.items.is_multiple_of(2) {
                    return Err(Error::OddDimension(self.items));
                }
            }
            Problem::Dispatch => {
                if self.rho1s.is_empty() || self.rho2s.is_empty() {
                    return bad("dispatch sweeps need rho1s and rho2s");
                }
                if self.generators == 0 || self.loads == 0 || self.periods == 0 {
                    return bad("generators, loads and periods must be positive");
                }
            }
        }
        Ok(())
    }

    pub fn reference_index(&self) -> usize {
        self.reference.unwrap_or_else(|| match self.problem {
            Problem::Knapsack => self
                .families
                .iter()
                .position(|f| f.kind == SetKind::ConvexHull)
                .unwrap_or(0),
            Problem::Dispatch => 0,
        })
    }

    /// Sweep points in output order, paired with the index of the instance
    /// they use. Knapsack points with equal `ρ` share items and scenarios.
    pub fn sweep(&self) -> Vec<(SweepPoint, usize)> {
        let mut out = Vec::new();
        match self.problem {
            Problem::Knapsack => {
                for &w in &self.capacities {
                    for (r, &rho) in self.rhos.iter().enumerate() {
                        out.push((
                            SweepPoint {
                                capacity: Some(w),
                                rho: Some(rho),
                                rho1: None,
                                rho2: None,
                            },
                            r,
                        ));
                    }
                }
            }
            Problem::Dispatch => {
                for &rho1 in &self.rho1s {
                    for &rho2 in &self.rho2s {
                        let key = out.len();
                        out.push((
                            SweepPoint {
                                capacity: None,
                                rho: None,
                                rho1: Some(rho1),
                                rho2: Some(rho2),
                            },
                            key,
                        ));
                    }
                }
            }
        }
        out
    }

    fn milp_options(&self) -> MilpOptions {
        MilpOptions {
            node_limit: self.node_limit,
            time_limit: self.time_limit_secs.map(std::time::Duration::from_secs_f64),
            ..MilpOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub capacity: Option<f64>,
    pub rho: Option<f64>,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
}

/// Outcome of one family on one scenario set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub family: String,
    pub set_index: usize,
    pub m1: usize,
    /// `NaN` when the solve failed.
    pub value: f64,
    /// Gap against the reference family on the same scenario set.
    pub gap: f64,
    pub nodes: usize,
    pub seconds: f64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub family: String,
    pub value: f64,
    pub seconds: f64,
    pub gap: f64,
    pub solved: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub point: SweepPoint,
    pub families: Vec<FamilySummary>,
    /// Indexed `[family][set]`.
    pub cells: Vec<Vec<BenchCell>>,
}

/// `(reference − value) / max(|reference|, |value|) · 100`; zero when both vanish.
pub fn gap_percent(reference: f64, value: f64) -> f64 {
    let scale = reference.abs().max(value.abs());
    if scale == 0.0 {
        0.0
    } else {
        (reference - value) / scale * 100.0
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.filter(|v| v.is_finite()).fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn status_of(e: &Error) -> &'static str {
    match e {
        Error::LimitReached { .. } | Error::IterationLimit(_) => "limit",
        Error::Infeasible => "infeasible",
        Error::Unbounded => "unbounded",
        Error::Unsupported { .. } => "unsupported",
        _ => "error",
    }
}

/// Runs every sweep point and, if `cfg.output` is set, writes the CSVs.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let root = Rng::new(cfg.seed);
    let opts = cfg.milp_options();
    let reference = cfg.reference_index();
    let mut rows = Vec::new();
    for (point, key) in cfg.sweep() {
        let inst_rng = root.child(key as u64);
        let mut cells: Vec<Vec<BenchCell>> = vec![Vec::new(); cfg.families.len()];
        match cfg.problem {
            Problem::Knapsack => {
                let capacity = point.capacity.expect("knapsack point");
                let inst = gen_knapsack_instance(cfg.items, point.rho.expect("knapsack point"), capacity, &mut inst_rng.child(0))?;
                for k in 0..cfg.n_scenario_sets {
                    let s = gen_correlated_normal(
                        &inst.weight_means,
                        &inst.weight_cov,
                        cfg.n_scenarios,
                        &mut inst_rng.child(1 + k as u64),
                    )?;
                    for (f, fam) in cfg.families.iter().enumerate() {
                        let cell = run_cell(fam, &s, k, |set| {
                            solve_robust_knapsack_with(&inst, set, &opts).map(|r| (r.objective, r.nodes))
                        });
                        cells[f].push(cell);
                    }
                }
            }
            Problem::Dispatch => {
                let inst = gen_grid_instance(
                    cfg.generators,
                    cfg.loads,
                    cfg.periods,
                    point.rho1.expect("dispatch point"),
                    point.rho2.expect("dispatch point"),
                    &mut inst_rng.child(0),
                )?;
                for k in 0..cfg.n_scenario_sets {
                    let s = gen_correlated_normal(
                        &inst.demand_means,
                        &inst.demand_cov,
                        cfg.n_scenarios,
                        &mut inst_rng.child(1 + k as u64),
                    )?;
                    for (f, fam) in cfg.families.iter().enumerate() {
                        let cell = run_cell(fam, &s, k, |set| {
                            solve_dispatch_with(&inst, set, &opts).map(|(r, _)| (r.objective, r.nodes))
                        });
                        cells[f].push(cell);
                    }
                }
            }
        }
        for k in 0..cfg.n_scenario_sets {
            let r = cells[reference][k].value;
            for fam in cells.iter_mut() {
                let v = fam[k].value;
                fam[k].gap = if r.is_finite() && v.is_finite() { gap_percent(r, v) } else { f64::NAN };
            }
        }
        let means: Vec<f64> = cells.iter().map(|c| mean(c.iter().map(|x| x.value))).collect();
        let families = cfg
            .families
            .iter()
            .zip(&cells)
            .zip(&means)
            .map(|((fam, c), &value)| FamilySummary {
                family: fam.label(),
                value,
                seconds: mean(c.iter().map(|x| x.seconds)),
                gap: if value.is_finite() && means[reference].is_finite() {
                    gap_percent(means[reference], value)
                } else {
                    f64::NAN
                },
                solved: c.iter().filter(|x| x.status == "optimal").count(),
            })
            .collect();
        rows.push(BenchRow { point, families, cells });
    }
    if let Some(path) = &cfg.output {
        write_outputs(cfg, &rows, path)?;
    }
    Ok(rows)
}

fn run_cell(
    fam: &FamilySpec,
    s: &ScenarioSet,
    set_index: usize,
    solve: impl FnOnce(&UncertaintySet) -> Result<(f64, usize)>,
) -> BenchCell {
    let m1 = fam.m1(s.dim());
    let mut cell = BenchCell {
        family: fam.label(),
        set_index,
        m1,
        value: f64::NAN,
        gap: f64::NAN,
        nodes: 0,
        seconds: f64::NAN,
        status: String::new(),
    };
    let set = match fam.build(s) {
        Ok(set) => set,
        Err(e) => {
            cell.status = status_of(&e).into();
            return cell;
        }
    };
    let start = Instant::now();
    let outcome = solve(&set);
    cell.seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok((value, nodes)) => {
            cell.value = value;
            cell.nodes = nodes;
            cell.status = "optimal".into();
        }
        Err(e) => cell.status = status_of(&e).into(),
    }
    cell
}

/// Four significant digits.
pub fn fmt_sig4(v: f64) -> String {
    if !v.is_finite() {
        return "nan".into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let digits = 3 - v.abs().log10().floor() as i32;
    if (0..=15).contains(&digits) {
        format!("{v:.*}", digits as usize)
    } else {
        format!("{v:.3e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn point_fields(p: &SweepPoint) -> String {
    format!("{},{},{},{}", opt(p.capacity), opt(p.rho), opt(p.rho1), opt(p.rho2))
}

pub const SUMMARY_HEADER: &str = "point,capacity,rho,rho1,rho2,family,m1,value,gap_percent,solved,sets";
pub const DETAIL_HEADER: &str = "point,capacity,rho,rho1,rho2,family,set,m1,value,gap_percent,nodes,status";
pub const TIMING_HEADER: &str = "point,family,set,seconds,mean_seconds";

pub fn summary_csv(cfg: &BenchConfig, rows: &[BenchRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for (p, row) in rows.iter().enumerate() {
        for (fam, cells) in row.families.iter().zip(&row.cells) {
            let _ = writeln!(
                out,
                "{p},{},{},{},{},{},{},{}",
                point_fields(&row.point),
                fam.family,
                cells.first().map_or(0, |c| c.m1),
                fmt_sig4(fam.value),
                fmt_sig4(fam.gap),
                fam.solved,
                cfg.n_scenario_sets
            );
        }
    }
    out
}

pub fn detail_csv(rows: &[BenchRow]) -> String {
    let mut out = format!("{DETAIL_HEADER}\n");
    for (p, row) in rows.iter().enumerate() {
        for cells in &row.cells {
            for c in cells {
                let _ = writeln!(
                    out,
                    "{p},{},{},{},{},{},{},{},{}",
                    point_fields(&row.point),
                    c.family,
                    c.set_index,
                    c.m1,
                    fmt_f64(c.value),
                    fmt_f64(c.gap),
                    c.nodes,
                    c.status
                );
            }
        }
    }
    out
}

pub fn timing_csv(rows: &[BenchRow]) -> String {
    let mut out = format!("{TIMING_HEADER}\n");
    for (p, row) in rows.iter().enumerate() {
        for (fam, cells) in row.families.iter().zip(&row.cells) {
            for c in cells {
                let _ = writeln!(out, "{p},{},{},{},{}", c.family, c.set_index, fmt_f64(c.seconds), fmt_f64(fam.seconds));
            }
        }
    }
    out
}

/// `a/b.csv` → `a/b_detail.csv`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

pub fn write_outputs(cfg: &BenchConfig, rows: &[BenchRow], path: &Path) -> Result<()> {
    std::fs::write(path, summary_csv(cfg, rows))?;
    std::fs::write(sibling(path, "detail"), detail_csv(rows))?;
    std::fs::write(sibling(path, "timing"), timing_csv(rows))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_knapsack() -> BenchConfig {
        BenchConfig {
            items: 6,
            capacities: vec![90.0],
            rhos: vec![-0.8, 0.0, 0.8],
            n_scenario_sets: 2,
            n_scenarios: 30,
            seed: 5,
            ..BenchConfig::knapsack_default()
        }
    }

    #[test]
    fn gap_formula() {
        assert_eq!(gap_percent(100.0, 90.0), 10.0);
        assert_eq!(gap_percent(90.0, 100.0), -10.0);
        assert_eq!(gap_percent(0.0, 0.0), 0.0);
    }

    #[test]
    fn sig4_formatting() {
        assert_eq!(fmt_sig4(1234.5678), "1235");
        assert_eq!(fmt_sig4(0.012345), "0.01235");
        assert_eq!(fmt_sig4(-3.0), "-3.000");
        assert_eq!(fmt_sig4(123456.0), "1.235e5");
        assert_eq!(fmt_sig4(f64::NAN), "nan");
    }

    #[test]
    fn family_parsing_and_labels() {
        let f: FamilySpec = "pca:0.875".parse().unwrap();
        assert_eq!(f.label(), "pca(0.875m)");
        assert_eq!(f.m1(48), 42);
        assert_eq!("convex_hull".parse::<FamilySpec>().unwrap().label(), "convex-hull");
        assert_eq!("budget".parse::<FamilySpec>().unwrap().gamma(10), 5.0);
        assert!("pca:1.5".parse::<FamilySpec>().is_err());
        assert!("cube".parse::<FamilySpec>().is_err());
    }

    #[test]
    fn knapsack_rows_and_columns() {
        let cfg = tiny_knapsack();
        let rows = run_bench(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        let csv = summary_csv(&cfg, &rows);
        assert_eq!(csv.lines().count(), 1 + 3 * 4);
        assert_eq!(detail_csv(&rows).lines().count(), 1 + 3 * 4 * 2);
        for row in &rows {
            // the hull is the reference and the smallest set
            let hull = &row.families[0];
            assert_eq!(hull.gap, 0.0);
            for fam in &row.families {
                assert!(fam.value <= hull.value + 1e-9);
                let m = fam.value;
                let cells = &row.cells[row.families.iter().position(|f| f.family == fam.family).unwrap()];
                let avg = cells.iter().map(|c| c.value).sum::<f64>() / cells.len() as f64;
                assert!((avg - m).abs() <= 1e-12 * m.abs().max(1.0));
            }
        }
    }

    #[test]
    fn rerun_is_identical() {
        let cfg = tiny_knapsack();
        let a = run_bench(&cfg).unwrap();
        let b = run_bench(&cfg).unwrap();
        assert_eq!(summary_csv(&cfg, &a), summary_csv(&cfg, &b));
        assert_eq!(detail_csv(&a), detail_csv(&b));
    }

    #[test]
    fn dispatch_m1_sweep() {
        let cfg = BenchConfig {
            generators: 3,
            periods: 2,
            rho1s: vec![0.5],
            rho2s: vec![0.0],
            n_scenario_sets: 2,
            n_scenarios: 40,
            ..BenchConfig::dispatch_default()
        };
        let rows = run_bench(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        let v: Vec<f64> = rows[0].families.iter().map(|f| f.value).collect();
        assert!(v[0] >= v[1] - 1e-6 * v[0] && v[1] >= v[2] - 1e-6 * v[0], "{v:?}");
        assert!(rows[0].families.iter().all(|f| f.gap >= -1e-6));
    }

    #[test]
    fn validation() {
        let mut cfg = tiny_knapsack();
        cfg.families.clear();
        assert!(run_bench(&cfg).is_err());
        let mut cfg = tiny_knapsack();
        cfg.n_scenarios = 1;
        assert!(run_bench(&cfg).is_err());
        let mut cfg = tiny_knapsack();
        cfg.items = 5;
        assert!(run_bench(&cfg).is_err());
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(sibling(Path::new("out/k.csv"), "detail"), PathBuf::from("out/k_detail.csv"));
    }
}
