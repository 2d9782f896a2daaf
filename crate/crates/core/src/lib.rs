//! Data-driven polyhedral uncertainty sets built from scenario data by
//! principal component analysis, robust knapsack and economic dispatch
//! counterparts, and a dense LP/MILP engine to solve them.
// Dense numerical kernels read more clearly with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod bench;
pub mod bounds;
pub mod dispatch;
pub mod error;
pub mod guarantees;
pub mod knapsack;
pub mod linalg;
pub mod lp;
pub mod milp;
pub mod scenario;
pub mod usets;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, EigenDecomposition};
pub use dispatch::{solve_dispatch, DispatchPlan};
pub use knapsack::{solve_robust_knapsack, RobustSolution};
pub use scenario::{GridInstance, KnapsackInstance, Rng, ScenarioSet};
pub use usets::{build_set, PcaBasis, SetKind, UncertaintySet};
