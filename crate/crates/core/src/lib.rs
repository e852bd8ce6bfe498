//! Exact design and analysis of nonparametric Kiefer-Weiss sequential tests
//! on finite alphabets.
//!
//! The pipeline is: [`bellman::backward_recursion`] builds the cost slices
//! of the finite-horizon minimax problem, [`policy::extract_tree`] turns
//! them into a randomized stopping policy together with its least
//! favorable distribution, and [`policy::evaluate`] and the verifiers
//! check the result. [`baselines`] holds the SPRT, fixed-sample-size and
//! Kiefer-Weiss comparison tests.

pub mod baselines;
pub mod bellman;
pub mod export;
pub mod policy;
pub mod pwl;
pub mod rational;

pub use bellman::{backward_recursion, CostTable, DesignState, NominalModel, Threshold};
pub use policy::{evaluate, evaluate_many, extract_tree, EvalReport, PolicyTree};
pub use pwl::{supconv, PwlConcave, Segment, SplitMap, SuperDiff};
pub use rational::Rational;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("out of domain: {0}")]
    OutOfDomain(String),
    #[error("invalid piecewise-linear function: {0}")]
    InvalidPwl(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("inconsistent cost table: {0}")]
    Inconsistent(String),
    #[error("empty tree")]
    EmptyTree,
    #[error("tree is cut at depth {0}; a full-horizon tree is required")]
    TruncatedTree(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("design search failed: {0}")]
    Design(String),
}
