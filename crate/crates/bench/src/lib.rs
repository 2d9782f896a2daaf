//! Fixtures shared by the criterion benchmarks.

use siu::scenario::{gen_correlated_normal, gen_grid_instance, gen_knapsack_instance};
use siu::{GridInstance, KnapsackInstance, Rng, ScenarioSet};

pub fn knapsack_fixture(n: usize, n_scenarios: usize, seed: u64) -> (KnapsackInstance, ScenarioSet) {
    let mut rng = Rng::new(seed);
    let inst = gen_knapsack_instance(n, 0.5, n as f64 * 25.0 * 0.8, &mut rng).expect("valid knapsack parameters");
    let s = gen_correlated_normal(&inst.weight_means, &inst.weight_cov, n_scenarios, &mut rng).expect("valid covariance");
    (inst, s)
}

pub fn grid_fixture(g: usize, t: usize, n_scenarios: usize, seed: u64) -> (GridInstance, ScenarioSet) {
    let mut rng = Rng::new(seed);
    let inst = gen_grid_instance(g, 2, t, 0.5, 0.0, &mut rng).expect("valid grid parameters");
    let s = gen_correlated_normal(&inst.demand_means, &inst.demand_cov, n_scenarios, &mut rng).expect("valid covariance");
    (inst, s)
}
