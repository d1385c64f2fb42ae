//! Optimal stopping of Brownian motion absorbed at the ends of `[0, 1]`,
//! where gains are evaluated by a nonlinear expectation (risk mapping).
//!
//! The value function is computed two ways: by solving smooth-fit tangency
//! conditions ([`solver`]) and by a direct search over two-point exit
//! functions ([`majorant`]). Closed forms for the built-in mappings
//! ([`closed_forms`]) and a Monte Carlo estimator ([`mc_oracle`]) serve as
//! independent checks.

pub mod closed_forms;
pub mod error;
pub mod gain;
pub mod grid;
pub mod h_family;
pub mod majorant;
pub mod mc_oracle;
pub mod risk_mapping;
pub mod solver;

pub use closed_forms::{oracle_value, ValueTable};
pub use error::{Error, Result};
pub use gain::GainSpec;
pub use grid::Grid;
pub use h_family::{h_eval, HParams};
pub use majorant::{compute_majorant, MajorantOptions, MajorantResult};
pub use mc_oracle::{simulate_rule, verify_solution, MCConfig, MCEstimate, StoppingRule, VerificationReport};
pub use risk_mapping::{DiscreteLaw, RiskKind, RiskMapping, TwoPointLaw};
pub use solver::{
    extend_to_h, find_tangency_pairs, solve, Component, Solution, SolutionMode, SolveOptions, TangencyPair,
};
