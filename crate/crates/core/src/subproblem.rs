//! The anchored max `h_x(z) = max{f(z) - f(x), g(z)}` and its branch-selecting
//! subgradient oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{BranchTag, OracleMode, ProblemSpec, Query, ReducedConstraint};
use crate::vector::{dot, Vector};

/// Oracle usage of one inner-search invocation.
///
/// A subgradient call is one joint evaluation of `h_x` and the subgradient
/// of its selected branch. Value evaluations are zeroth-order `h_x` lookups
/// (descent tests, bisection interval updates) and are tracked separately.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCounter {
    pub subgradient_calls: u64,
    pub value_evals: u64,
}

/// One evaluation of the subgradient oracle of `h_x`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubgradientEval {
    pub vector: Vector,
    pub branch: BranchTag,
    /// `h_x(z)` at the evaluated point.
    pub value: f64,
}

/// `h_x` for a fixed anchor `x`, with `f(x)` computed once.
#[derive(Debug)]
pub struct Subproblem<'a> {
    problem: &'a ProblemSpec,
    constraint: ReducedConstraint<'a>,
    anchor: &'a Vector,
    f_anchor: f64,
    counter: OracleCounter,
}

impl<'a> Subproblem<'a> {
    pub fn new(problem: &'a ProblemSpec, anchor: &'a Vector) -> Result<Self> {
        if anchor.len() != problem.dim {
            return Err(Error::usage("anchor has the wrong dimension"));
        }
        let f_anchor = problem.objective_value(anchor)?;
        Ok(Self::with_objective_value(problem, anchor, f_anchor))
    }

    /// Build with a cached `f(anchor)`.
    pub fn with_objective_value(problem: &'a ProblemSpec, anchor: &'a Vector, f_anchor: f64) -> Self {
        Self {
            problem,
            constraint: problem.reduced(),
            anchor,
            f_anchor,
            counter: OracleCounter::default(),
        }
    }

    pub fn problem(&self) -> &'a ProblemSpec {
        self.problem
    }

    pub fn anchor(&self) -> &'a Vector {
        self.anchor
    }

    pub fn objective_at_anchor(&self) -> f64 {
        self.f_anchor
    }

    pub fn counter(&self) -> OracleCounter {
        self.counter
    }

    pub fn reset_counter(&mut self) {
        self.counter = OracleCounter::default();
    }

    /// `h_x(z)`, counted as one value evaluation.
    pub fn value(&mut self, z: &[f64]) -> Result<f64> {
        self.counter.value_evals += 1;
        let f = self.problem.objective_value(z)?;
        let g = self.constraint.value(z)?;
        Ok((f - self.f_anchor).max(g.value))
    }

    /// A subgradient of `h_x` at `z` following the branch case split.
    ///
    /// Strict cases return the winning branch. At an exact tie the gradient
    /// oracle returns the objective branch; the directional oracle compares
    /// `<F(z,v), v>` against `<G(z,v), v>` and returns the larger (objective
    /// on equality).
    pub fn subgradient(&mut self, z: &[f64], query: Query<'_>) -> Result<SubgradientEval> {
        self.counter.subgradient_calls += 1;
        let f_diff = self.problem.objective_value(z)? - self.f_anchor;
        let g = self.constraint.value(z)?;
        let value = f_diff.max(g.value);
        if f_diff > g.value {
            let vector = self.problem.objective_subgradient(z, query)?;
            return Ok(SubgradientEval { vector, branch: BranchTag::Objective, value });
        }
        if f_diff < g.value {
            let (vector, top) = self.constraint.subgradient(z, query)?;
            return Ok(SubgradientEval { vector, branch: BranchTag::Constraint(top.index), value });
        }
        match query {
            Query::Gradient => {
                let vector = self.problem.objective_subgradient(z, query)?;
                Ok(SubgradientEval { vector, branch: BranchTag::Objective, value })
            }
            Query::Directional(dir) => {
                let fv = self.problem.objective_subgradient(z, query)?;
                let (gv, top) = self.constraint.subgradient(z, query)?;
                if dot(&fv, dir) >= dot(&gv, dir) {
                    Ok(SubgradientEval { vector: fv, branch: BranchTag::Objective, value })
                } else {
                    Ok(SubgradientEval { vector: gv, branch: BranchTag::Constraint(top.index), value })
                }
            }
        }
    }
}

/// `h_anchor(z) = max{f(z) - f(anchor), g(z)}`.
pub fn eval_h(anchor: &Vector, z: &[f64], problem: &ProblemSpec) -> Result<f64> {
    Subproblem::new(problem, anchor)?.value(z)
}

/// One subgradient of `h_anchor` at `z`. Directional mode needs a direction.
pub fn h_subgradient(
    anchor: &Vector,
    z: &[f64],
    problem: &ProblemSpec,
    mode: OracleMode,
    direction: Option<&[f64]>,
) -> Result<(Vector, BranchTag)> {
    let query = match (mode, direction) {
        (OracleMode::AlmostEverywhereGradient, _) => Query::Gradient,
        (OracleMode::DirectionalSubgradient, Some(v)) => Query::Directional(v),
        (OracleMode::DirectionalSubgradient, None) => {
            return Err(Error::usage("directional subgradient mode needs a direction"))
        }
    };
    let eval = Subproblem::new(problem, anchor)?.subgradient(z, query)?;
    Ok((eval.vector, eval.branch))
}
