//! Scenario sets, their sample statistics, and seeded generation of
//! correlated-Gaussian test instances.

mod instances;
mod rng;

pub use instances::{
    gen_grid_instance, gen_knapsack_instance, grid_cov, knapsack_cov, GridInstance,
    KnapsackInstance, SHED_PENALTY, CURTAIL_PENALTY,
};
pub use rng::{derive_seed, splitmix64, Rng};

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_jitter, DenseMatrix};

/// Default number of scenarios per generated set.
pub const DEFAULT_SCENARIOS: usize = 10_000;

/// `N × m` matrix whose rows are observed realizations of the uncertain vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenarioSet")]
pub struct ScenarioSet {
    data: DenseMatrix,
    seed: Option<u64>,
}

#[derive(Deserialize)]
struct RawScenarioSet {
    data: DenseMatrix,
    seed: Option<u64>,
}

impl TryFrom<RawScenarioSet> for ScenarioSet {
    type Error = Error;

    fn try_from(raw: RawScenarioSet) -> Result<Self> {
        let mut set = ScenarioSet::new(raw.data)?;
        set.seed = raw.seed;
        Ok(set)
    }
}

impl ScenarioSet {
    /// Requires at least two rows and finite entries.
    pub fn new(data: DenseMatrix) -> Result<Self> {
        if data.rows() < 2 {
            return Err(Error::InvalidInput(format!(
                "a scenario set needs at least 2 scenarios, got {}",
                data.rows()
            )));
        }
        if data.cols() == 0 {
            return Err(Error::InvalidInput("scenarios have zero dimension".into()));
        }
        if data.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite scenario entry".into()));
        }
        Ok(Self { data, seed: None })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(DenseMatrix::from_rows(rows)?)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Dimension of each scenario.
    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    pub fn len(&self) -> usize {
        self.data.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.rows() == 0
    }

    pub fn data(&self) -> &DenseMatrix {
        &self.data
    }

    pub fn scenario(&self, j: usize) -> &[f64] {
        self.data.row(j)
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.len()).map(move |j| self.data.row(j))
    }

    /// Sample mean `(1/N) Σ s_j`.
    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim()];
        for s in self.iter() {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v;
            }
        }
        let n = self.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Rows shifted by the sample mean, together with that mean.
    pub fn center(&self) -> (ScenarioSet, Vec<f64>) {
        let mean = self.mean();
        let mut data = self.data.clone();
        for j in 0..data.rows() {
            for (x, m) in data.row_mut(j).iter_mut().zip(&mean) {
                *x -= m;
            }
        }
        (
            ScenarioSet {
                data,
                seed: self.seed,
            },
            mean,
        )
    }

    /// Sample covariance `X₀ᵀ X₀ / (N − 1)`.
    pub fn covariance(&self) -> DenseMatrix {
        let (centered, _) = self.center();
        let m = self.dim();
        let mut cov = DenseMatrix::zeros(m, m);
        for s in centered.iter() {
            for a in 0..m {
                let sa = s[a];
                if sa == 0.0 {
                    continue;
                }
                for b in a..m {
                    cov[(a, b)] += sa * s[b];
                }
            }
        }
        let denom = (self.len() - 1) as f64;
        for a in 0..m {
            for b in a..m {
                let v = cov[(a, b)] / denom;
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
        }
        cov
    }

    /// Per-coordinate minimum and maximum over all scenarios.
    pub fn coordinate_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim()];
        let mut hi = vec![f64::NEG_INFINITY; self.dim()];
        for s in self.iter() {
            for (i, &v) in s.iter().enumerate() {
                lo[i] = lo[i].min(v);
                hi[i] = hi[i].max(v);
            }
        }
        (lo, hi)
    }

    /// Writes the CSV format: a `# m=<m> n=<N> seed=<seed>` header then one
    /// row per scenario with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let seed = self
            .seed
            .map_or_else(|| "none".to_string(), |s| s.to_string());
        writeln!(out, "# m={} n={} seed={}", self.dim(), self.len(), seed)?;
        let mut line = String::new();
        for s in self.iter() {
            line.clear();
            for (i, v) in s.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                write!(line, "{}", fmt_f64(*v)).expect("writing to a String");
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty scenario file".into()))??;
        let (m, n, seed) = parse_header(&header)?;
        let mut data = Vec::with_capacity(m * n);
        let mut rows = 0;
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let before = data.len();
            for field in line.split(',') {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number {field:?} in row {}", rows + 1)))?;
                data.push(v);
            }
            if data.len() - before != m {
                return Err(Error::Parse(format!(
                    "row {} has {} values, expected {m}",
                    rows + 1,
                    data.len() - before
                )));
            }
            rows += 1;
        }
        if rows != n {
            return Err(Error::Parse(format!("header says n={n}, found {rows} rows")));
        }
        let mut set = ScenarioSet::new(DenseMatrix::from_row_major(n, m, data)?)?;
        set.seed = seed;
        Ok(set)
    }
}

fn parse_header(header: &str) -> Result<(usize, usize, Option<u64>)> {
    let body = header
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse(format!("missing '#' header line, got {header:?}")))?;
    let (mut m, mut n, mut seed) = (None, None, None);
    for token in body.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header token {token:?}")))?;
        let bad = || Error::Parse(format!("bad header value {token:?}"));
        match key {
            "m" => m = Some(value.parse().map_err(|_| bad())?),
            "n" => n = Some(value.parse().map_err(|_| bad())?),
            "seed" if value == "none" => seed = None,
            "seed" => seed = Some(value.parse().map_err(|_| bad())?),
            _ => return Err(Error::Parse(format!("unknown header key {key:?}"))),
        }
    }
    match (m, n) {
        (Some(m), Some(n)) => Ok((m, n, seed)),
        _ => Err(Error::Parse("header must define m and n".into())),
    }
}

/// 17 significant digits in scientific notation; round-trips bit-exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `n_scenarios` draws of `mean + L z` with `L L ᵀ = cov` (jittered if
/// needed) and `z` standard normal.
pub fn gen_correlated_normal(
    mean: &[f64],
    cov: &DenseMatrix,
    n_scenarios: usize,
    rng: &mut Rng,
) -> Result<ScenarioSet> {
    let m = mean.len();
    if cov.rows() != m || cov.cols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: cov.rows(),
        });
    }
    let seed = rng.seed();
    let sampler = GaussianSampler::new(mean, cov)?;
    let mut data = Vec::with_capacity(n_scenarios * m);
    let mut row = vec![0.0; m];
    for _ in 0..n_scenarios {
        sampler.sample_into(rng, &mut row);
        data.extend_from_slice(&row);
    }
    Ok(ScenarioSet::new(DenseMatrix::from_row_major(n_scenarios, m, data)?)?.with_seed(seed))
}

/// Multivariate normal sampler with a precomputed Cholesky factor.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    mean: Vec<f64>,
    factor: DenseMatrix,
}

impl GaussianSampler {
    pub fn new(mean: &[f64], cov: &DenseMatrix) -> Result<Self> {
        if cov.rows() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: cov.rows(),
            });
        }
        // an all-zero covariance is a point mass; jitter would blur it
        let factor = if cov.max_abs() == 0.0 {
            DenseMatrix::zeros(cov.rows(), cov.cols())
        } else {
            cholesky_jitter(cov)?
        };
        Ok(Self {
            mean: mean.to_vec(),
            factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sample_into(&self, rng: &mut Rng, out: &mut [f64]) {
        let m = self.mean.len();
        let z: Vec<f64> = (0..m).map(|_| rng.standard_normal()).collect();
        for i in 0..m {
            let l = &self.factor.row(i)[..=i];
            out[i] = self.mean[i] + l.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(rows: &[&[f64]]) -> ScenarioSet {
        ScenarioSet::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn mean_examples() {
        assert_eq!(set(&[&[1.0, 1.0], &[3.0, 3.0]]).mean(), vec![2.0, 2.0]);
        assert_eq!(set(&[&[0.0, 0.0], &[0.0, 0.0]]).mean(), vec![0.0, 0.0]);
    }

    #[test]
    fn mean_of_gaussian_draws() {
        let cov = DenseMatrix::identity(2);
        let s = gen_correlated_normal(&[5.0, -2.0], &cov, 100, &mut Rng::new(7)).unwrap();
        let m = s.mean();
        assert!((m[0] - 5.0).abs() < 0.5 && (m[1] + 2.0).abs() < 0.5);
    }

    #[test]
    fn center_examples() {
        let (c, m) = set(&[&[1.0, 1.0], &[3.0, 3.0]]).center();
        assert_eq!(c.data().to_rows(), vec![vec![-1.0, -1.0], vec![1.0, 1.0]]);
        assert_eq!(m, vec![2.0, 2.0]);

        let (c, m) = set(&[&[4.0], &[4.0]]).center();
        assert_eq!(c.data().to_rows(), vec![vec![0.0], vec![0.0]]);
        assert_eq!(m, vec![4.0]);

        let (again, m2) = c.center();
        assert_eq!(again.data(), c.data());
        assert_eq!(m2, vec![0.0]);
    }

    #[test]
    fn covariance_examples() {
        assert_eq!(set(&[&[0.0], &[2.0]]).covariance().to_rows(), vec![vec![2.0]]);
        assert_eq!(
            set(&[&[1.5, 2.0], &[1.5, 2.0], &[1.5, 2.0]]).covariance(),
            DenseMatrix::zeros(2, 2)
        );
        assert_eq!(
            set(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]]).covariance().to_rows(),
            vec![vec![1.0, 1.0], vec![1.0, 1.0]]
        );
    }

    #[test]
    fn rejects_single_scenario() {
        assert!(ScenarioSet::from_rows(&[vec![1.0]]).is_err());
    }

    #[test]
    fn degenerate_covariance_draws_stay_at_mean() {
        let s = gen_correlated_normal(&[3.0, 3.0], &DenseMatrix::zeros(2, 2), 5, &mut Rng::new(1))
            .unwrap();
        for row in s.iter() {
            assert!((row[0] - 3.0).abs() < 1e-4 && (row[1] - 3.0).abs() < 1e-4);
        }
    }

    #[test]
    fn sample_covariance_matches_target() {
        let s = gen_correlated_normal(&[0.0, 0.0], &DenseMatrix::identity(2), 10_000, &mut Rng::new(1))
            .unwrap();
        let c = s.covariance();
        assert!(c.sub(&DenseMatrix::identity(2)).max_abs() < 0.1);

        let cov = DenseMatrix::from_rows(&[vec![1.0, 0.8], vec![0.8, 1.0]]).unwrap();
        let s = gen_correlated_normal(&[0.0, 0.0], &cov, 10_000, &mut Rng::new(2)).unwrap();
        let c = s.covariance();
        let corr = c[(0, 1)] / (c[(0, 0)] * c[(1, 1)]).sqrt();
        assert!((0.77..=0.83).contains(&corr), "corr {corr}");
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let s = gen_correlated_normal(&[1.0, -2.0, 3.0], &DenseMatrix::identity(3), 7, &mut Rng::new(3))
            .unwrap();
        let text = s.to_csv_string();
        assert!(text.starts_with("# m=3 n=7 seed=3\n"));
        let back = ScenarioSet::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_csv_string(), text);
    }

    #[test]
    fn csv_rejects_short_rows() {
        let text = "# m=2 n=2 seed=none\n1,2\n3\n";
        assert!(matches!(ScenarioSet::read_csv(text.as_bytes()), Err(Error::Parse(_))));
    }
}
