//! Uncertainty-set families: box, budget, convex hull, the PCA-induced
//! rotated box, its axis-aligned analogue, and the intersection of the two.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, sym_eig};
use crate::lp::{solve_lp, LpProblem, LpStatus, RowSense, Sense};
use crate::scenario::ScenarioSet;

/// Largest `m1` (or box dimension) accepted by [`vertices`].
pub const MAX_VERTEX_BITS: usize = 20;

/// Principal-component description of a scenario set.
///
/// `directions[i]` is the unit direction `d_i`; `omega_lo[i]`/`omega_hi[i]`
/// are the extreme centered projections of the scenarios onto it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaBasis {
    pub mean: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub omega_hi: Vec<f64>,
    pub omega_lo: Vec<f64>,
}

impl PcaBasis {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Coordinates `(d_iᵀ(p − s̄)) / ‖d_i‖`.
    pub fn coordinates(&self, point: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = point.iter().zip(&self.mean).map(|(p, m)| p - m).collect();
        self.directions
            .iter()
            .map(|d| dot(d, &centered) / dot(d, d).sqrt())
            .collect()
    }

    /// `s̄ + Σ ξ_i d_i / ‖d_i‖`.
    pub fn point(&self, xi: &[f64]) -> Vec<f64> {
        let mut p = self.mean.clone();
        for (d, &x) in self.directions.iter().zip(xi) {
            let scale = x / dot(d, d).sqrt();
            for (pk, dk) in p.iter_mut().zip(d) {
                *pk += scale * dk;
            }
        }
        p
    }

    pub fn omega_mid(&self, i: usize) -> f64 {
        0.5 * (self.omega_hi[i] + self.omega_lo[i])
    }

    /// Unit direction `d̄_i`.
    pub fn unit_direction(&self, i: usize) -> Vec<f64> {
        let d = &self.directions[i];
        let len = dot(d, d).sqrt();
        d.iter().map(|v| v / len).collect()
    }

    /// Coordinate interval of direction `i` for a set keeping `m1` free
    /// directions; trailing directions collapse to their midpoint.
    pub fn interval(&self, i: usize, m1: usize) -> (f64, f64) {
        if i < m1 {
            (self.omega_lo[i], self.omega_hi[i])
        } else {
            let mid = self.omega_mid(i);
            (mid, mid)
        }
    }

    fn validate(&self) -> Result<()> {
        let m = self.dim();
        for len in [
            self.directions.len(),
            self.eigenvalues.len(),
            self.omega_hi.len(),
            self.omega_lo.len(),
        ] {
            if len != m {
                return Err(Error::DimensionMismatch { expected: m, got: len });
            }
        }
        for d in &self.directions {
            if d.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: d.len() });
            }
        }
        if self.omega_lo.iter().zip(&self.omega_hi).any(|(l, h)| l > h) {
            return Err(Error::InvalidInput("omega_lo exceeds omega_hi".into()));
        }
        Ok(())
    }
}

/// Mean, covariance eigendecomposition and projection extremes of `s`.
pub fn fit_pca(s: &ScenarioSet) -> Result<PcaBasis> {
    let (centered, mean) = s.center();
    let eig = sym_eig(&s.covariance())?;
    let m = s.dim();
    let directions: Vec<Vec<f64>> = (0..m).map(|i| eig.vector(i)).collect();
    let mut omega_hi = vec![f64::NEG_INFINITY; m];
    let mut omega_lo = vec![f64::INFINITY; m];
    for row in centered.iter() {
        for (i, d) in directions.iter().enumerate() {
            let proj = dot(row, d) / dot(d, d).sqrt();
            omega_hi[i] = omega_hi[i].max(proj);
            omega_lo[i] = omega_lo[i].min(proj);
        }
    }
    Ok(PcaBasis {
        mean,
        directions,
        eigenvalues: eig.eigenvalues,
        omega_hi,
        omega_lo,
    })
}

/// Coordinate indices ranked by range `upper − lower` descending, ties by index.
pub fn axis_order(lower: &[f64], upper: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..lower.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = upper[a] - lower[a];
        let rb = upper[b] - lower[b];
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    order
}

/// Family tag used on the command line and in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    Box,
    Budget,
    ConvexHull,
    Pca,
    AxisPca,
    Intersection,
}

impl SetKind {
    pub const ALL: [SetKind; 6] = [
        SetKind::Box,
        SetKind::Budget,
        SetKind::ConvexHull,
        SetKind::Pca,
        SetKind::AxisPca,
        SetKind::Intersection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SetKind::Box => "box",
            SetKind::Budget => "budget",
            SetKind::ConvexHull => "convex-hull",
            SetKind::Pca => "pca",
            SetKind::AxisPca => "axis-pca",
            SetKind::Intersection => "intersection",
        }
    }
}

impl fmt::Display for SetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        SetKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::InvalidInput(format!("unknown set family {s:?}")))
    }
}

/// One of the six supported uncertainty-set families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum UncertaintySet {
    Box {
        nominal: Vec<f64>,
        deviation: Vec<f64>,
    },
    Budget {
        nominal: Vec<f64>,
        deviation: Vec<f64>,
        gamma: f64,
    },
    ConvexHull {
        scenarios: ScenarioSet,
    },
    Pca {
        basis: PcaBasis,
        m1: usize,
    },
    AxisPca {
        lower: Vec<f64>,
        upper: Vec<f64>,
        m1: usize,
    },
    Intersection {
        basis: PcaBasis,
        lower: Vec<f64>,
        upper: Vec<f64>,
        m1: usize,
    },
}

fn midpoint_and_radius(lower: &[f64], upper: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mid = lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect();
    let rad = lower.iter().zip(upper).map(|(l, u)| 0.5 * (u - l)).collect();
    (mid, rad)
}

/// Builds a set of family `kind` from scenarios. `m1` is used by the PCA
/// families, `gamma` only by the budget set.
pub fn build_set(kind: SetKind, s: &ScenarioSet, m1: usize, gamma: Option<f64>) -> Result<UncertaintySet> {
    let m = s.dim();
    let uses_m1 = matches!(kind, SetKind::Pca | SetKind::AxisPca | SetKind::Intersection);
    if uses_m1 && m1 > m {
        return Err(Error::InvalidM1 { m1, m });
    }
    let (lower, upper) = s.coordinate_bounds();
    Ok(match kind {
        SetKind::Box => {
            let (nominal, deviation) = midpoint_and_radius(&lower, &upper);
            UncertaintySet::Box { nominal, deviation }
        }
        SetKind::Budget => {
            let gamma = gamma.ok_or(Error::MissingGamma)?;
            if !(0.0..=m as f64).contains(&gamma) {
                return Err(Error::InvalidGamma { gamma, m });
            }
            let (nominal, deviation) = midpoint_and_radius(&lower, &upper);
            UncertaintySet::Budget {
                nominal,
                deviation,
                gamma,
            }
        }
        SetKind::ConvexHull => UncertaintySet::ConvexHull { scenarios: s.clone() },
        SetKind::Pca => UncertaintySet::Pca {
            basis: fit_pca(s)?,
            m1,
        },
        SetKind::AxisPca => UncertaintySet::AxisPca { lower, upper, m1 },
        SetKind::Intersection => UncertaintySet::Intersection {
            basis: fit_pca(s)?,
            lower,
            upper,
            m1,
        },
    })
}

/// Rotated box `{ s̄ + Σ ξ_i d̄_i : ξ_i ∈ [lo_i, hi_i] }` expressed as a PCA
/// basis whose trailing `m − m1` directions are fixed at their midpoints.
fn axis_basis(lower: &[f64], upper: &[f64]) -> PcaBasis {
    let m = lower.len();
    let (mean, radius) = midpoint_and_radius(lower, upper);
    let order = axis_order(lower, upper);
    let directions = order
        .iter()
        .map(|&k| {
            let mut e = vec![0.0; m];
            e[k] = 1.0;
            e
        })
        .collect();
    PcaBasis {
        mean,
        directions,
        eigenvalues: order.iter().map(|&k| radius[k] * radius[k]).collect(),
        omega_hi: order.iter().map(|&k| radius[k]).collect(),
        omega_lo: order.iter().map(|&k| -radius[k]).collect(),
    }
}

impl UncertaintySet {
    pub fn kind(&self) -> SetKind {
        match self {
            UncertaintySet::Box { .. } => SetKind::Box,
            UncertaintySet::Budget { .. } => SetKind::Budget,
            UncertaintySet::ConvexHull { .. } => SetKind::ConvexHull,
            UncertaintySet::Pca { .. } => SetKind::Pca,
            UncertaintySet::AxisPca { .. } => SetKind::AxisPca,
            UncertaintySet::Intersection { .. } => SetKind::Intersection,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            UncertaintySet::Box { nominal, .. } | UncertaintySet::Budget { nominal, .. } => nominal.len(),
            UncertaintySet::ConvexHull { scenarios } => scenarios.dim(),
            UncertaintySet::Pca { basis, .. } | UncertaintySet::Intersection { basis, .. } => basis.dim(),
            UncertaintySet::AxisPca { lower, .. } => lower.len(),
        }
    }

    /// Number of free principal directions for the PCA families.
    pub fn m1(&self) -> Option<usize> {
        match self {
            UncertaintySet::Pca { m1, .. }
            | UncertaintySet::AxisPca { m1, .. }
            | UncertaintySet::Intersection { m1, .. } => Some(*m1),
            _ => None,
        }
    }

    /// The set as a rotated box (basis plus number of free directions), for
    /// the families that are one: Pca, AxisPca and Box.
    pub fn as_rotated_box(&self) -> Option<(PcaBasis, usize)> {
        match self {
            UncertaintySet::Pca { basis, m1 } => Some((basis.clone(), *m1)),
            UncertaintySet::AxisPca { lower, upper, m1 } => Some((axis_basis(lower, upper), *m1)),
            UncertaintySet::Box { nominal, deviation } => {
                let m = nominal.len();
                let directions = (0..m)
                    .map(|k| {
                        let mut e = vec![0.0; m];
                        e[k] = 1.0;
                        e
                    })
                    .collect();
                Some((
                    PcaBasis {
                        mean: nominal.clone(),
                        directions,
                        eigenvalues: deviation.iter().map(|d| d * d).collect(),
                        omega_hi: deviation.clone(),
                        omega_lo: deviation.iter().map(|d| -d).collect(),
                    },
                    m,
                ))
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.dim();
        let check_len = |v: &[f64]| {
            if v.len() == m {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected: m, got: v.len() })
            }
        };
        match self {
            UncertaintySet::Box { deviation, .. } => {
                check_len(deviation)?;
                if deviation.iter().any(|d| *d < 0.0) {
                    return Err(Error::InvalidInput("negative deviation".into()));
                }
            }
            UncertaintySet::Budget { deviation, gamma, .. } => {
                check_len(deviation)?;
                if deviation.iter().any(|d| *d < 0.0) {
                    return Err(Error::InvalidInput("negative deviation".into()));
                }
                if !(0.0..=m as f64).contains(gamma) {
                    return Err(Error::InvalidGamma { gamma: *gamma, m });
                }
            }
            UncertaintySet::ConvexHull { .. } => {}
            UncertaintySet::Pca { basis, m1 } => {
                basis.validate()?;
                if *m1 > m {
                    return Err(Error::InvalidM1 { m1: *m1, m });
                }
            }
            UncertaintySet::AxisPca { upper, m1, lower } => {
                check_len(upper)?;
                if lower.iter().zip(upper).any(|(l, u)| l > u) {
                    return Err(Error::InvalidInput("lower bound exceeds upper bound".into()));
                }
                if *m1 > m {
                    return Err(Error::InvalidM1 { m1: *m1, m });
                }
            }
            UncertaintySet::Intersection { basis, lower, upper, m1 } => {
                basis.validate()?;
                check_len(lower)?;
                check_len(upper)?;
                if *m1 > m {
                    return Err(Error::InvalidM1 { m1: *m1, m });
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let set: UncertaintySet = serde_json::from_str(text)?;
        set.validate()?;
        Ok(set)
    }
}

/// Scale-aware membership tolerance `1e-8 (1 + ‖p‖∞)`.
pub fn default_tol(point: &[f64]) -> f64 {
    1e-8 * (1.0 + point.iter().fold(0.0f64, |a, v| a.max(v.abs())))
}

fn check_dim(set: &UncertaintySet, v: &[f64]) -> Result<()> {
    if v.len() == set.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: v.len(),
        })
    }
}

fn rotated_box_contains(basis: &PcaBasis, m1: usize, point: &[f64], tol: f64) -> bool {
    basis.coordinates(point).iter().enumerate().all(|(i, &xi)| {
        let (lo, hi) = basis.interval(i, m1);
        xi >= lo - tol && xi <= hi + tol
    })
}

fn axis_contains(lower: &[f64], upper: &[f64], m1: usize, point: &[f64], tol: f64) -> bool {
    rotated_box_contains(&axis_basis(lower, upper), m1, point, tol)
}

/// Whether `point` lies in the set, up to `tol`.
pub fn contains(set: &UncertaintySet, point: &[f64], tol: f64) -> Result<bool> {
    check_dim(set, point)?;
    Ok(match set {
        UncertaintySet::Box { nominal, deviation } => point
            .iter()
            .zip(nominal.iter().zip(deviation))
            .all(|(p, (u, d))| (p - u).abs() <= d + tol),
        UncertaintySet::Budget {
            nominal,
            deviation,
            gamma,
        } => {
            let mut used = 0.0;
            for (p, (u, d)) in point.iter().zip(nominal.iter().zip(deviation)) {
                let off = (p - u).abs();
                if off > d + tol {
                    return Ok(false);
                }
                if *d > 0.0 {
                    used += (off / d).min(1.0);
                }
            }
            used <= gamma + tol
        }
        UncertaintySet::ConvexHull { scenarios } => hull_distance(scenarios, point)? <= tol,
        UncertaintySet::Pca { basis, m1 } => rotated_box_contains(basis, *m1, point, tol),
        UncertaintySet::AxisPca { lower, upper, m1 } => axis_contains(lower, upper, *m1, point, tol),
        UncertaintySet::Intersection {
            basis,
            lower,
            upper,
            m1,
        } => rotated_box_contains(basis, *m1, point, tol) && axis_contains(lower, upper, *m1, point, tol),
    })
}

/// `min τ` such that some convex combination of scenarios is within `τ` of
/// `point` in every coordinate.
fn hull_distance(s: &ScenarioSet, point: &[f64]) -> Result<f64> {
    let n = s.len();
    let mut lp = LpProblem::new(Sense::Minimize);
    let alphas: Vec<usize> = (0..n).map(|_| lp.add_var(0.0, f64::INFINITY, 0.0)).collect();
    let tau = lp.add_var(0.0, f64::INFINITY, 1.0);
    for (k, &pk) in point.iter().enumerate() {
        let mut coeffs: Vec<(usize, f64)> = alphas.iter().map(|&j| (j, s.scenario(j)[k])).collect();
        coeffs.push((tau, -1.0));
        lp.add_row(coeffs.clone(), RowSense::Le, pk);
        coeffs.last_mut().expect("tau column").1 = 1.0;
        lp.add_row(coeffs, RowSense::Ge, pk);
    }
    lp.add_row(alphas.iter().map(|&j| (j, 1.0)).collect(), RowSense::Eq, 1.0);
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.x[tau]),
        _ => Err(Error::Certificate("convex-hull membership LP did not solve".into())),
    }
}

fn rotated_box_support(basis: &PcaBasis, m1: usize, c: &[f64]) -> (f64, Vec<f64>) {
    let mut value = dot(c, &basis.mean);
    let mut xi = vec![0.0; basis.dim()];
    for i in 0..basis.dim() {
        let cd = dot(c, &basis.directions[i]) / dot(&basis.directions[i], &basis.directions[i]).sqrt();
        let (lo, hi) = basis.interval(i, m1);
        xi[i] = if cd >= 0.0 { hi } else { lo };
        value += xi[i] * cd;
    }
    (value, basis.point(&xi))
}

/// `max_{u ∈ set} cᵀu` and an attaining `u`.
///
/// Fails with [`Error::EmptySet`] for an intersection with no points.
pub fn support(set: &UncertaintySet, c: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_dim(set, c)?;
    Ok(match set {
        UncertaintySet::Box { nominal, deviation } => {
            let u: Vec<f64> = nominal
                .iter()
                .zip(deviation)
                .zip(c)
                .map(|((n, d), ci)| n + ci.signum() * d * f64::from(*ci != 0.0))
                .collect();
            let value = dot(c, nominal) + c.iter().zip(deviation).map(|(ci, d)| ci.abs() * d).sum::<f64>();
            (value, u)
        }
        UncertaintySet::Budget {
            nominal,
            deviation,
            gamma,
        } => {
            let m = nominal.len();
            let mut order: Vec<usize> = (0..m).collect();
            let weight = |i: usize| (c[i] * deviation[i]).abs();
            order.sort_by(|&a, &b| weight(b).total_cmp(&weight(a)).then(a.cmp(&b)));
            let mut u = nominal.clone();
            let mut value = dot(c, nominal);
            let mut left = *gamma;
            for i in order {
                if left <= 0.0 {
                    break;
                }
                let take = left.min(1.0);
                left -= take;
                if c[i] != 0.0 {
                    u[i] += c[i].signum() * deviation[i] * take;
                }
                value += weight(i) * take;
            }
            (value, u)
        }
        UncertaintySet::ConvexHull { scenarios } => {
            let mut best = (f64::NEG_INFINITY, 0);
            for (j, s) in scenarios.iter().enumerate() {
                let v = dot(c, s);
                if v > best.0 {
                    best = (v, j);
                }
            }
            (best.0, scenarios.scenario(best.1).to_vec())
        }
        UncertaintySet::Pca { basis, m1 } => rotated_box_support(basis, *m1, c),
        UncertaintySet::AxisPca { lower, upper, m1 } => rotated_box_support(&axis_basis(lower, upper), *m1, c),
        UncertaintySet::Intersection {
            basis,
            lower,
            upper,
            m1,
        } => intersection_support(basis, lower, upper, *m1, c)?,
    })
}

/// LP over the PCA coordinates `ξ` with the axis box imposed on `u = s̄ + Σ ξ_i d̄_i`.
fn intersection_support(
    basis: &PcaBasis,
    lower: &[f64],
    upper: &[f64],
    m1: usize,
    c: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let m = basis.dim();
    let dirs: Vec<Vec<f64>> = (0..m).map(|i| basis.unit_direction(i)).collect();
    let mut lp = LpProblem::new(Sense::Maximize);
    for (i, d) in dirs.iter().enumerate() {
        let (lo, hi) = basis.interval(i, m1);
        lp.add_var(lo, hi, dot(c, d));
    }
    let axis = axis_basis(lower, upper);
    for (k, &coord) in axis_order(lower, upper).iter().enumerate() {
        let coeffs: Vec<(usize, f64)> = (0..m).map(|i| (i, dirs[i][coord])).collect();
        let (lo, hi) = axis.interval(k, m1);
        let shift = basis.mean[coord] - axis.mean[coord];
        if lo == hi {
            lp.add_row(coeffs, RowSense::Eq, lo - shift);
        } else {
            lp.add_row(coeffs.clone(), RowSense::Le, hi - shift);
            lp.add_row(coeffs, RowSense::Ge, lo - shift);
        }
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {
            let u = basis.point(&sol.x);
            Ok((sol.objective + dot(c, &basis.mean), u))
        }
        LpStatus::Infeasible => Err(Error::EmptySet),
        LpStatus::Unbounded => Err(Error::Certificate("bounded support LP reported unbounded".into())),
    }
}

/// Vertices of a rotated box (Pca, AxisPca or Box). Bit `i` of the vertex
/// index selects the upper end of free direction `i`.
pub fn vertices(set: &UncertaintySet) -> Result<Vec<Vec<f64>>> {
    let (basis, m1) = set.as_rotated_box().ok_or(Error::Unsupported {
        family: set.kind().name(),
        operation: "vertex enumeration",
    })?;
    if m1 > MAX_VERTEX_BITS {
        return Err(Error::TooManyVertices(m1));
    }
    let m = basis.dim();
    let mut out = Vec::with_capacity(1 << m1);
    for mask in 0usize..(1 << m1) {
        let xi: Vec<f64> = (0..m)
            .map(|i| {
                if i < m1 {
                    if mask >> i & 1 == 1 {
                        basis.omega_hi[i]
                    } else {
                        basis.omega_lo[i]
                    }
                } else {
                    basis.omega_mid(i)
                }
            })
            .collect();
        out.push(basis.point(&xi));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collinear() -> ScenarioSet {
        ScenarioSet::from_rows(&[vec![0.0, 0.0], vec![2.0, 2.0], vec![1.0, 1.0], vec![3.0, 3.0]]).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn fit_pca_collinear() {
        let b = fit_pca(&collinear()).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(b.mean, vec![1.5, 1.5]);
        assert!(close(b.directions[0][0], r) && close(b.directions[0][1], r));
        assert!(b.eigenvalues[1].abs() < 1e-12);
        assert!(close(b.omega_hi[0], 1.5 * 2f64.sqrt()));
        assert!(close(b.omega_lo[0], -1.5 * 2f64.sqrt()));
        assert!(b.omega_hi[1].abs() < 1e-12 && b.omega_lo[1].abs() < 1e-12);
    }

    #[test]
    fn fit_pca_identical_scenarios() {
        let s = ScenarioSet::from_rows(&[vec![2.0, 5.0], vec![2.0, 5.0], vec![2.0, 5.0]]).unwrap();
        let b = fit_pca(&s).unwrap();
        assert!(b.eigenvalues.iter().all(|l| *l == 0.0));
        assert!(b.omega_hi.iter().chain(&b.omega_lo).all(|w| *w == 0.0));
        let set = UncertaintySet::Pca { basis: b, m1: 2 };
        assert_eq!(vertices(&set).unwrap(), vec![vec![2.0, 5.0]; 4]);
    }

    #[test]
    fn fit_pca_picks_high_variance_axis() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|j| vec![(j as f64 - 9.5) * 3.0, if j % 2 == 0 { 0.5 } else { -0.5 }])
            .collect();
        let b = fit_pca(&ScenarioSet::from_rows(&rows).unwrap()).unwrap();
        assert!(b.directions[0][0].abs() > 0.999);
    }

    #[test]
    fn build_box_two_points() {
        let s = ScenarioSet::from_rows(&[vec![0.0, 0.0], vec![2.0, 4.0]]).unwrap();
        let set = build_set(SetKind::Box, &s, 0, None).unwrap();
        assert_eq!(
            set,
            UncertaintySet::Box {
                nominal: vec![1.0, 2.0],
                deviation: vec![1.0, 2.0]
            }
        );
        assert!(!contains(&set, &[3.0, 2.0], 1e-9).unwrap());
    }

    #[test]
    fn build_errors() {
        let s = collinear();
        assert!(matches!(build_set(SetKind::Pca, &s, 3, None), Err(Error::InvalidM1 { .. })));
        assert!(matches!(build_set(SetKind::Budget, &s, 0, None), Err(Error::MissingGamma)));
        assert!(matches!(build_set(SetKind::Budget, &s, 0, Some(3.0)), Err(Error::InvalidGamma { .. })));
    }

    #[test]
    fn box_support_example() {
        let set = UncertaintySet::Box {
            nominal: vec![0.0, 0.0],
            deviation: vec![1.0, 1.0],
        };
        let (v, u) = support(&set, &[1.0, -1.0]).unwrap();
        assert_eq!(v, 2.0);
        assert_eq!(u, vec![1.0, -1.0]);
    }

    #[test]
    fn budget_support_example() {
        let set = UncertaintySet::Budget {
            nominal: vec![0.0, 0.0],
            deviation: vec![1.0, 1.0],
            gamma: 1.0,
        };
        let (v, u) = support(&set, &[3.0, 1.0]).unwrap();
        assert_eq!(v, 3.0);
        assert_eq!(u, vec![1.0, 0.0]);

        let frac = UncertaintySet::Budget {
            nominal: vec![0.0, 0.0],
            deviation: vec![1.0, 1.0],
            gamma: 1.5,
        };
        assert_eq!(support(&frac, &[3.0, 1.0]).unwrap().0, 3.5);
    }

    #[test]
    fn pca_support_example() {
        let set = build_set(SetKind::Pca, &collinear(), 1, None).unwrap();
        let (v, u) = support(&set, &[1.0, 0.0]).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
        assert!((u[0] - 3.0).abs() < 1e-12 && (u[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn pca_contains_its_scenarios() {
        let s = collinear();
        let set = build_set(SetKind::Pca, &s, 2, None).unwrap();
        for p in s.iter() {
            assert!(contains(&set, p, default_tol(p)).unwrap());
        }
        assert!(!contains(&set, &[1.0, 2.0], 1e-9).unwrap());
    }

    #[test]
    fn hull_membership_example() {
        let s = ScenarioSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let set = build_set(SetKind::ConvexHull, &s, 0, None).unwrap();
        assert!(contains(&set, &[0.25, 0.25], 1e-9).unwrap());
        assert!(!contains(&set, &[0.6, 0.6], 1e-9).unwrap());
    }

    #[test]
    fn vertex_examples() {
        let b = UncertaintySet::Box {
            nominal: vec![0.0, 0.0],
            deviation: vec![1.0, 1.0],
        };
        let mut v = vertices(&b).unwrap();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(v, vec![vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]]);

        let pca = build_set(SetKind::Pca, &collinear(), 1, None).unwrap();
        let v = vertices(&pca).unwrap();
        assert_eq!(v.len(), 2);
        assert!(v[0].iter().all(|x| x.abs() < 1e-12));
        assert!(v[1].iter().all(|x| (x - 3.0).abs() < 1e-12));

        let single = build_set(SetKind::Pca, &collinear(), 0, None).unwrap();
        let v = vertices(&single).unwrap();
        assert_eq!(v.len(), 1);
        assert!(v[0].iter().all(|x| (x - 1.5).abs() < 1e-12));

        let hull = build_set(SetKind::ConvexHull, &collinear(), 0, None).unwrap();
        assert!(matches!(vertices(&hull), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn axis_pca_keeps_widest_coordinates() {
        let s = ScenarioSet::from_rows(&[vec![0.0, 0.0, 0.0], vec![1.0, 5.0, 2.0]]).unwrap();
        assert_eq!(axis_order(&[0.0; 3], &[1.0, 5.0, 2.0]), vec![1, 2, 0]);
        let set = build_set(SetKind::AxisPca, &s, 1, None).unwrap();
        assert!(contains(&set, &[0.5, 0.0, 1.0], 1e-9).unwrap());
        assert!(!contains(&set, &[0.6, 0.0, 1.0], 1e-9).unwrap());
        let (v, _) = support(&set, &[1.0, 1.0, 1.0]).unwrap();
        assert!((v - 6.5).abs() < 1e-12);
    }

    #[test]
    fn intersection_support_is_tighter() {
        let s = ScenarioSet::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let pca = build_set(SetKind::Pca, &s, 2, None).unwrap();
        let inter = build_set(SetKind::Intersection, &s, 2, None).unwrap();
        for c in [[1.0, 0.0], [1.0, 1.0], [-1.0, 2.0]] {
            let a = support(&pca, &c).unwrap().0;
            let (b, u) = support(&inter, &c).unwrap();
            assert!(b <= a + 1e-9);
            assert!(contains(&inter, &u, 1e-7).unwrap());
        }
    }

    #[test]
    fn set_kind_parsing() {
        assert_eq!("convex_hull".parse::<SetKind>().unwrap(), SetKind::ConvexHull);
        assert_eq!("Axis-PCA".parse::<SetKind>().unwrap(), SetKind::AxisPca);
        assert!("ellipsoid".parse::<SetKind>().is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let s = ScenarioSet::from_rows(&[vec![0.1, 0.7], vec![1.3, -0.2], vec![0.35, 0.05]]).unwrap();
        for kind in SetKind::ALL {
            let set = build_set(kind, &s, 1, Some(1.0)).unwrap();
            let text = set.to_json().unwrap();
            assert!(text.contains(&format!("\"family\": \"{}\"", kind.name().replace('-', "_"))));
            let back = UncertaintySet::from_json(&text).unwrap();
            assert_eq!(back, set);
        }
    }
}
