//! Constrained Goldstein subgradient method.
//!
//! Minimizes a Lipschitz `f` subject to Lipschitz constraints `g_i(x) <= 0`
//! by running an unconstrained Goldstein minimal-norm search on the anchored
//! max `h_x(z) = max{f(z) - f(x), g(z)}` at each iterate. Every run ends with
//! a [`GoldsteinCertificate`]: a convex combination of sampled subgradients
//! with small norm, split into objective and constraint mass, from which a
//! Fritz-John or KKT multiplier is read off.
//!
//! Two inner searches are provided: a randomized one driven by gradients
//! almost everywhere ([`rand_search`]) and a deterministic bisection search
//! driven by directional subgradients ([`bisect_search`]). [`verify`] holds
//! independent brute-force checks.

// Negated comparisons are deliberate: they send NaN down the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod inner;
pub mod problem;
pub mod problems;
pub mod sampling;
pub mod segment;
pub mod solver;
pub mod subproblem;
pub mod vector;
pub mod verify;

pub use bounds::InnerKind;
pub use error::{Error, Result};
pub use inner::{
    bisect_negative_slope, bisect_search, rand_search, recompute_zeta, InnerOutcome, InnerParams, InnerResult,
    RayRestriction, WeightedSubgradient,
};
pub use problem::{reduce_constraints, BranchTag, Function, OracleMode, ProblemSpec, Query, SharedFunction};
pub use problems::{get_problem, ProblemParams, ProblemRecord, PROBLEM_NAMES};
pub use segment::min_norm_on_segment;
pub use solver::{
    certify, extract_multiplier, solve, GoldsteinCertificate, Multipliers, Solution, SolveError, SolveTrace,
    SolverConfig,
};
pub use subproblem::{eval_h, h_subgradient, OracleCounter, Subproblem};
pub use vector::Vector;
pub use verify::{check_certificate, check_gcq, goldstein_estimate, min_norm_over_hull, GcqOutcome, HullEstimate};
