//! Hybrid genetic search for vehicle routing problems.

pub mod cost;
pub mod evolved;
pub mod hgs;
pub mod instance;
pub mod local_search;
pub mod metrics;
pub mod registry;
pub mod rng;
pub mod solution;

pub use cost::{CostError, CostEvaluator, RouteStats};
pub use hgs::{solve, HgsError, SolveParams, SolveResult};
pub use instance::{ProblemData, Variant};
pub use rng::Rng;
pub use solution::{Route, Solution};
