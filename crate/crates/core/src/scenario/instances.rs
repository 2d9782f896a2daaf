use serde::{Deserialize, Serialize};

use super::Rng;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_jitter, DenseMatrix};

/// Penalty per MW of unserved load.
pub const SHED_PENALTY: f64 = 500.0;
/// Penalty per MW of curtailed output.
pub const CURTAIL_PENALTY: f64 = 50.0;

/// Robust knapsack instance with correlated Gaussian item weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnapsackInstance {
    pub n: usize,
    pub values: Vec<i64>,
    pub weight_means: Vec<f64>,
    pub weight_cov: DenseMatrix,
    pub capacity: f64,
    pub rho: f64,
}

impl KnapsackInstance {
    pub fn values_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

/// Multi-period economic dispatch instance. Demand vectors are flattened with
/// the entry for load `l` in period `t` (both zero-based) at `t * l_count + l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInstance {
    pub g: usize,
    pub l: usize,
    pub t: usize,
    pub gen_cost: Vec<f64>,
    pub cap: Vec<f64>,
    pub ramp_up: Vec<f64>,
    pub ramp_down: Vec<f64>,
    pub shed_penalty: f64,
    pub curtail_penalty: f64,
    pub demand_means: Vec<f64>,
    pub demand_cov: DenseMatrix,
    pub rho_temporal: f64,
    pub rho_spatial: f64,
}

impl GridInstance {
    /// Length of the flattened demand vector, `T · L`.
    pub fn m(&self) -> usize {
        self.t * self.l
    }

    pub fn demand_index(&self, l: usize, t: usize) -> usize {
        t * self.l + l
    }

    /// Total demand of each period.
    pub fn period_totals(&self, demand: &[f64]) -> Vec<f64> {
        demand.chunks(self.l).map(|c| c.iter().sum()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.g;
        for (name, v) in [
            ("gen_cost", &self.gen_cost),
            ("cap", &self.cap),
            ("ramp_up", &self.ramp_up),
            ("ramp_down", &self.ramp_down),
        ] {
            if v.len() != g {
                return Err(Error::InvalidInput(format!("{name} has {} entries, expected {g}", v.len())));
            }
            if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(Error::InvalidInput(format!("{name} entries must be positive")));
            }
        }
        if self.g == 0 || self.l == 0 || self.t == 0 {
            return Err(Error::InvalidInput("g, l and t must be at least 1".into()));
        }
        if self.demand_means.len() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                got: self.demand_means.len(),
            });
        }
        if self.demand_cov.rows() != self.m() || self.demand_cov.cols() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                got: self.demand_cov.rows(),
            });
        }
        if !(self.shed_penalty > 0.0 && self.curtail_penalty > 0.0) {
            return Err(Error::InvalidInput("penalties must be positive".into()));
        }
        Ok(())
    }
}

fn check_rho(rho: f64, name: &str) -> Result<()> {
    if rho.is_finite() && rho > -1.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name}={rho} must lie in (-1, 1)")))
    }
}

/// Weight covariance with variances `μ_z² / 300` and correlation `ρ` inside
/// each consecutive item pair `(0,1), (2,3), …`.
pub fn knapsack_cov(means: &[f64], rho: f64) -> Result<DenseMatrix> {
    if !means.len().is_multiple_of(2) {
        return Err(Error::OddDimension(means.len()));
    }
    check_rho(rho, "rho")?;
    let n = means.len();
    let mut cov = DenseMatrix::zeros(n, n);
    for z in 0..n {
        cov[(z, z)] = means[z] * means[z] / 300.0;
    }
    for z in (0..n).step_by(2) {
        let c = rho * means[z] * means[z + 1] / 300.0;
        cov[(z, z + 1)] = c;
        cov[(z + 1, z)] = c;
    }
    Ok(cov)
}

/// Demand covariance with standard deviations `μ / 10` and separable
/// correlation `ρ₁^|t−t′| · ρ₂^[l≠l′]`.
///
/// `means` is flattened period-major with `l_count` loads per period.
pub fn grid_cov(means: &[f64], l_count: usize, rho1: f64, rho2: f64) -> Result<DenseMatrix> {
    check_rho(rho1, "rho1")?;
    check_rho(rho2, "rho2")?;
    if l_count == 0 || !means.len().is_multiple_of(l_count) {
        return Err(Error::InvalidInput(format!(
            "{} demand means do not split into {l_count} loads per period",
            means.len()
        )));
    }
    if means.iter().any(|&m| !(m.is_finite() && m > 0.0)) {
        return Err(Error::InvalidInput("demand means must be positive".into()));
    }
    let m = means.len();
    let mut cov = DenseMatrix::zeros(m, m);
    for a in 0..m {
        let (ta, la) = (a / l_count, a % l_count);
        for b in 0..m {
            let (tb, lb) = (b / l_count, b % l_count);
            let lag = ta.abs_diff(tb) as i32;
            let spatial = if la == lb { 1.0 } else { rho2 };
            let corr = rho1.powi(lag) * spatial;
            cov[(a, b)] = corr * (means[a] / 10.0) * (means[b] / 10.0);
        }
    }
    // separable structure is PD for |ρ| < 1 when l_count ≤ 2; check the rest
    cholesky_jitter(&cov)?;
    Ok(cov)
}

/// Values uniform on `{16..77}`, weight means uniform on `{20..29}`.
pub fn gen_knapsack_instance(n: usize, rho: f64, capacity: f64, rng: &mut Rng) -> Result<KnapsackInstance> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::OddDimension(n));
    }
    let values: Vec<i64> = (0..n).map(|_| rng.uniform_int(16, 77)).collect();
    let weight_means: Vec<f64> = (0..n).map(|_| rng.uniform_int(20, 29) as f64).collect();
    let weight_cov = knapsack_cov(&weight_means, rho)?;
    Ok(KnapsackInstance {
        n,
        values,
        weight_means,
        weight_cov,
        capacity,
        rho,
    })
}

/// Costs uniform on `{10..150}`, capacities on `[5, 245)`, ramps on
/// `[5, 105)`, period totals `Q^t` on `[2100, 2900)`.
///
/// With two loads `Q^t` splits 2/5 and 3/5; otherwise it splits evenly.
pub fn gen_grid_instance(
    g: usize,
    l: usize,
    t: usize,
    rho1: f64,
    rho2: f64,
    rng: &mut Rng,
) -> Result<GridInstance> {
    if g == 0 || l == 0 || t == 0 {
        return Err(Error::InvalidInput("g, l and t must be at least 1".into()));
    }
    let mut gen_cost = Vec::with_capacity(g);
    let mut cap = Vec::with_capacity(g);
    let mut ramp_up = Vec::with_capacity(g);
    let mut ramp_down = Vec::with_capacity(g);
    for _ in 0..g {
        gen_cost.push(rng.uniform_int(10, 150) as f64);
        cap.push(rng.uniform(5.0, 245.0));
        ramp_up.push(rng.uniform(5.0, 105.0));
        ramp_down.push(rng.uniform(5.0, 105.0));
    }
    let shares: Vec<f64> = if l == 2 {
        vec![0.4, 0.6]
    } else {
        vec![1.0 / l as f64; l]
    };
    let mut demand_means = Vec::with_capacity(t * l);
    for _ in 0..t {
        let q = rng.uniform(2100.0, 2900.0);
        demand_means.extend(shares.iter().map(|s| s * q));
    }
    let demand_cov = grid_cov(&demand_means, l, rho1, rho2)?;
    Ok(GridInstance {
        g,
        l,
        t,
        gen_cost,
        cap,
        ramp_up,
        ramp_down,
        shed_penalty: SHED_PENALTY,
        curtail_penalty: CURTAIL_PENALTY,
        demand_means,
        demand_cov,
        rho_temporal: rho1,
        rho_spatial: rho2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knapsack_cov_examples() {
        let c = knapsack_cov(&[20.0, 20.0], 0.0).unwrap();
        assert_eq!(c.to_rows(), vec![vec![400.0 / 300.0, 0.0], vec![0.0, 400.0 / 300.0]]);

        let c = knapsack_cov(&[30.0, 30.0], 0.999).unwrap();
        assert!((c[(0, 1)] - 3.0).abs() < 0.01);

        let c = knapsack_cov(&[20.0, 29.0], 0.5).unwrap();
        assert!((c[(0, 1)] - 29.0 / 30.0).abs() < 1e-12);
        assert_eq!(c[(0, 1)], c[(1, 0)]);

        assert!(matches!(knapsack_cov(&[1.0, 2.0, 3.0], 0.0), Err(Error::OddDimension(3))));
    }

    #[test]
    fn knapsack_cov_blocks_are_isolated() {
        let c = knapsack_cov(&[20.0, 21.0, 22.0, 23.0], 0.7).unwrap();
        assert_eq!(c[(1, 2)], 0.0);
        assert_eq!(c[(0, 3)], 0.0);
        assert!(c[(2, 3)] > 0.0);
    }

    #[test]
    fn grid_cov_examples() {
        let c = grid_cov(&[40.0, 60.0], 2, 0.3, 0.0).unwrap();
        assert_eq!(c.to_rows(), vec![vec![16.0, 0.0], vec![0.0, 36.0]]);

        let c = grid_cov(&[10.0, 10.0], 1, 0.5, 0.0).unwrap();
        assert_eq!(c.to_rows(), vec![vec![1.0, 0.5], vec![0.5, 1.0]]);

        let c = grid_cov(&[10.0, 20.0, 30.0, 40.0], 2, 0.0, 0.0).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    assert_eq!(c[(a, b)], 0.0);
                }
            }
        }
    }

    #[test]
    fn grid_cov_cross_terms_are_separable() {
        let c = grid_cov(&[10.0, 20.0, 10.0, 20.0], 2, 0.5, -0.4).unwrap();
        // load 0 at t=0 with load 1 at t=1
        assert!((c[(0, 3)] - 0.5 * -0.4 * 1.0 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn knapsack_instance_ranges_and_determinism() {
        let a = gen_knapsack_instance(200, 0.5, 3000.0, &mut Rng::new(11)).unwrap();
        assert!(a.values.iter().all(|v| (16..=77).contains(v)));
        assert!(a.weight_means.iter().all(|m| (20.0..=29.0).contains(m)));
        let b = gen_knapsack_instance(200, 0.5, 3000.0, &mut Rng::new(11)).unwrap();
        assert_eq!(a, b);

        let small = gen_knapsack_instance(2, 0.3, 40.0, &mut Rng::new(42)).unwrap();
        assert_eq!(small.weight_cov, knapsack_cov(&small.weight_means, 0.3).unwrap());
        assert!(gen_knapsack_instance(3, 0.0, 1.0, &mut Rng::new(1)).is_err());
    }

    #[test]
    fn grid_instance_split_and_ranges() {
        let inst = gen_grid_instance(32, 2, 24, 0.5, 0.2, &mut Rng::new(5)).unwrap();
        for t in 0..24 {
            let q = inst.demand_means[2 * t] + inst.demand_means[2 * t + 1];
            assert!((2100.0..2900.0).contains(&q));
            assert!((inst.demand_means[2 * t] - 0.4 * q).abs() < 1e-9);
        }
        assert!(inst.gen_cost.iter().all(|c| (10.0..=150.0).contains(c) && c.fract() == 0.0));
        assert!(inst.cap.iter().all(|c| (5.0..245.0).contains(c)));
        assert!(inst.shed_penalty > inst.curtail_penalty);
        assert_eq!(inst, gen_grid_instance(32, 2, 24, 0.5, 0.2, &mut Rng::new(5)).unwrap());
        inst.validate().unwrap();
    }

    #[test]
    fn grid_instance_single_period_cov() {
        let inst = gen_grid_instance(3, 2, 1, 0.9, 0.3, &mut Rng::new(8)).unwrap();
        assert_eq!(inst.demand_cov, grid_cov(&inst.demand_means, 2, 0.1, 0.3).unwrap());
    }
}
