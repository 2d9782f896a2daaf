use siu::knapsack::{oracle_knapsack, solve_robust_knapsack};
use siu::scenario::{gen_correlated_normal, gen_knapsack_instance};
use siu::usets::{build_set, contains, SetKind};
use siu::Rng;

#[derive(Debug, Clone, Copy)]
enum Family {
    Box,
    Budget,
    Hull,
    PcaFull,
    PcaMinus2,
    Axis,
    Intersection,
}

const FAMILIES: [Family; 7] = [
    Family::Box,
    Family::Budget,
    Family::Hull,
    Family::PcaFull,
    Family::PcaMinus2,
    Family::Axis,
    Family::Intersection,
];

fn set_for(f: Family, s: &siu::ScenarioSet) -> siu::usets::UncertaintySet {
    let m = s.dim();
    match f {
        Family::Box => build_set(SetKind::Box, s, m, None),
        Family::Budget => build_set(SetKind::Budget, s, m, Some(m as f64 / 2.0)),
        Family::Hull => build_set(SetKind::ConvexHull, s, m, None),
        Family::PcaFull => build_set(SetKind::Pca, s, m, None),
        Family::PcaMinus2 => build_set(SetKind::Pca, s, m - 2, None),
        Family::Axis => build_set(SetKind::AxisPca, s, m, None),
        Family::Intersection => build_set(SetKind::Intersection, s, m, None),
    }
    .unwrap()
}

#[test]
fn milp_matches_brute_force_on_small_instances() {
    let mut rng = Rng::new(4);
    for case in 0..25 {
        let n = 2 * rng.uniform_int(2, 5) as usize;
        let rho = rng.uniform(-0.8, 0.8);
        let capacity = n as f64 * 25.0 * rng.uniform(0.3, 0.7);
        let inst = gen_knapsack_instance(n, rho, capacity, &mut rng.child(case)).unwrap();
        let big_n = rng.uniform_int(n as i64 + 2, 50) as usize;
        let s = gen_correlated_normal(&inst.weight_means, &inst.weight_cov, big_n, &mut rng.child(1000 + case)).unwrap();
        for f in FAMILIES {
            let set = set_for(f, &s);
            let milp = solve_robust_knapsack(&inst, &set).unwrap();
            let oracle = oracle_knapsack(&inst, &set).unwrap();
            assert_eq!(milp.objective, oracle.objective, "case {case} {f:?}");
            if !milp.worst_case_u.is_empty() {
                assert!(contains(&set, &milp.worst_case_u, 1e-6).unwrap(), "case {case} {f:?}");
            }
        }
    }
}
