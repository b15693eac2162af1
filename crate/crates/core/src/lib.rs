//! Constrained multiobjective derivative-free optimization with mesh adaptive
//! direct search, quadratic-model and Nelder-Mead search steps, a benchmark
//! suite and hypervolume-based profiles.

pub mod barrier;
pub mod cli;
pub mod driver;
pub mod error;
pub mod formulations;
pub mod mesh;
pub mod metrics;
pub mod models;
pub mod points;
pub mod problems;
pub mod search;
pub mod subsolvers;

pub use driver::{solve, RunHistory, SolveResult, Solver, SolverConfig};
pub use error::{Error, Result};
pub use points::{EvalStatus, EvaluatedPoint, EvaluationResult};
pub use problems::{find_problem, Problem};
pub use search::{Variant, VariantConfig};
