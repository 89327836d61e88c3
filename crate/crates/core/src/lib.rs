//! Exact computation of EFX allocations with charity for additive
//! valuations, together with the brute-force oracles used to certify them.

pub mod alg1;
pub mod alg2;
pub mod error;
pub mod fairness;
pub mod fixtures;
pub mod graph;
pub mod instances;
pub mod model;
pub mod oracle;
pub mod rational;
pub mod seeding;
pub mod trace;
pub mod welfare;

pub use alg1::{run_alg1, Alg1Result};
pub use alg2::{
    alg2_driver, alg2_driver_with, alg2_step, augmenting_path, Alg2Outcome, Alg2Run, AugPath,
    DeltaSchedule, DriverConfig,
};
pub use error::{Error, Result};
pub use fairness::{check, check_ef, check_ef1, check_efx, Fairness, FairnessVerdict, Witness};
pub use graph::{
    build_graph, priority_matching, robust_demand, FeasibilityGraph, Matching, WorkingBundles,
};
pub use instances::{
    check_large_market, check_large_market_wrt, ef1_complete, eps_convert, lower_bound_instance,
    random_instance, random_large_market_instance, LargeMarketCheck,
};
pub use model::{AgentId, Allocation, Bundle, Instance, ItemId};
pub use rational::{format_rational, parse_rational, Rational};
pub use seeding::{
    local_search_seed, oracle_seed, perturbed_seed, round_robin_seed, SeedMethod, SeedReport,
};
pub use trace::RunTrace;
