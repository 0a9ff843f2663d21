//! Problem description: oracles for the objective and constraints plus the
//! metadata needed to check the method's bounds.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{dot, Vector};

/// A Lipschitz function with first-order oracles.
///
/// `gradient` must be the gradient wherever the function is differentiable
/// and some deterministic selection elsewhere. `directional_subgradient(x, v)`
/// must return a vector `F` with `<F, v>` equal to the one-sided directional
/// derivative of the function at `x` along `v`.
///
/// Implementations are shared across concurrent runs and must be reentrant.
pub trait Function: Send + Sync + fmt::Debug {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vector;
    fn directional_subgradient(&self, x: &[f64], v: &[f64]) -> Vector;
}

/// Which first-order oracle the inner search consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    /// Gradients almost everywhere. Required by the randomized search.
    AlmostEverywhereGradient,
    /// Directional subgradient maps `F(x, v)`. Required by the bisection search.
    DirectionalSubgradient,
}

/// Which underlying function produced a subgradient of the anchored max.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchTag {
    Objective,
    /// One-based index of the attaining constraint.
    Constraint(usize),
}

impl BranchTag {
    pub fn is_objective(self) -> bool {
        matches!(self, BranchTag::Objective)
    }
}

/// How a subgradient is requested from an oracle.
#[derive(Clone, Copy, Debug)]
pub enum Query<'a> {
    Gradient,
    Directional(&'a [f64]),
}

impl Query<'_> {
    pub fn mode(&self) -> OracleMode {
        match self {
            Query::Gradient => OracleMode::AlmostEverywhereGradient,
            Query::Directional(_) => OracleMode::DirectionalSubgradient,
        }
    }
}

pub type SharedFunction = Arc<dyn Function>;

/// `min f(x) s.t. g_i(x) <= 0` with oracles and metadata.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub dim: usize,
    pub objective: SharedFunction,
    pub constraints: Vec<SharedFunction>,
    /// Common Lipschitz constant of `f` and every `g_i` near the feasible region.
    pub lipschitz_m: f64,
    /// Radius of the neighborhood of the feasible region where `lipschitz_m` holds.
    pub neighborhood_delta: f64,
    /// Nonconvexity modulus of `f`, if known.
    pub nonconvexity_f: Option<f64>,
    /// Nonconvexity modulus of the reduced constraint `max_i g_i`, if known.
    pub nonconvexity_g: Option<f64>,
    pub p_star: Option<f64>,
    pub known_optimum: Option<Vector>,
    /// A known feasible starting point.
    pub initial_point: Vector,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::usage("problem dimension must be positive"));
        }
        if self.constraints.is_empty() {
            return Err(Error::usage(
                "at least one constraint is required; model unconstrained problems with g = -1",
            ));
        }
        if !(self.lipschitz_m > 0.0 && self.lipschitz_m.is_finite()) {
            return Err(Error::usage("lipschitz_m must be positive and finite"));
        }
        if !(self.neighborhood_delta > 0.0) {
            return Err(Error::usage("neighborhood_delta must be positive"));
        }
        if self.initial_point.len() != self.dim {
            return Err(Error::usage("initial point has the wrong dimension"));
        }
        Ok(())
    }

    /// Sum of the nonconvexity moduli, when both are known.
    pub fn nonconvexity(&self) -> Option<f64> {
        Some(self.nonconvexity_f? + self.nonconvexity_g?)
    }

    pub fn objective_value(&self, x: &[f64]) -> Result<f64> {
        finite_value(self.objective.value(x), x)
    }

    pub fn objective_subgradient(&self, x: &[f64], query: Query<'_>) -> Result<Vector> {
        let v = match query {
            Query::Gradient => self.objective.gradient(x),
            Query::Directional(dir) => self.objective.directional_subgradient(x, dir),
        };
        finite_vector(v, x)
    }

    /// View of the constraints as the single function `g = max_i g_i`.
    pub fn reduced(&self) -> ReducedConstraint<'_> {
        reduce_constraints(self)
    }
}

pub(crate) fn finite_value(v: f64, x: &[f64]) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Oracle { what: "value", point: x.to_vec() })
    }
}

pub(crate) fn finite_vector(v: Vector, x: &[f64]) -> Result<Vector> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Oracle { what: "subgradient", point: x.to_vec() })
    }
}

/// Value of the reduced constraint together with the attaining index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstraintValue {
    pub value: f64,
    /// One-based index of the lowest constraint attaining the max.
    pub index: usize,
}

/// `g(x) = max_i g_i(x)` over the constraints of a problem.
#[derive(Clone, Copy, Debug)]
pub struct ReducedConstraint<'a> {
    constraints: &'a [SharedFunction],
}

pub fn reduce_constraints(problem: &ProblemSpec) -> ReducedConstraint<'_> {
    ReducedConstraint { constraints: &problem.constraints }
}

impl<'a> ReducedConstraint<'a> {
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Individual constraint values `g_1(x), ..., g_m(x)`.
    pub fn values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.constraints
            .iter()
            .map(|g| finite_value(g.value(x), x))
            .collect()
    }

    pub fn value(&self, x: &[f64]) -> Result<ConstraintValue> {
        let values = self.values(x)?;
        Ok(max_lowest_index(&values))
    }

    /// Subgradient of an attaining constraint.
    ///
    /// In gradient mode the lowest attaining index is used. In directional
    /// mode the attaining constraint with the largest directional derivative
    /// along `v` is used (lowest index among equals), so that `<G, v>` is the
    /// directional derivative of the max.
    pub fn subgradient(&self, x: &[f64], query: Query<'_>) -> Result<(Vector, ConstraintValue)> {
        let values = self.values(x)?;
        let top = max_lowest_index(&values);
        match query {
            Query::Gradient => {
                let grad = finite_vector(self.constraints[top.index - 1].gradient(x), x)?;
                Ok((grad, top))
            }
            Query::Directional(dir) => {
                let mut best: Option<(Vector, f64, usize)> = None;
                for (i, g) in self.constraints.iter().enumerate() {
                    if values[i] != top.value {
                        continue;
                    }
                    let sub = finite_vector(g.directional_subgradient(x, dir), x)?;
                    let slope = dot(&sub, dir);
                    if best.as_ref().is_none_or(|(_, s, _)| slope > *s) {
                        best = Some((sub, slope, i + 1));
                    }
                }
                let (sub, _, index) = best.expect("the maximum is attained by some constraint");
                Ok((sub, ConstraintValue { value: top.value, index }))
            }
        }
    }
}

fn max_lowest_index(values: &[f64]) -> ConstraintValue {
    let mut top = ConstraintValue { value: values[0], index: 1 };
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > top.value {
            top = ConstraintValue { value: v, index: i + 1 };
        }
    }
    top
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::functions::{Coordinate, NormBall};

    fn two_coordinate_constraints() -> ProblemSpec {
        ProblemSpec {
            dim: 2,
            objective: Arc::new(Coordinate::new(2, 0, 1.0)),
            constraints: vec![
                Arc::new(Coordinate::new(2, 0, 1.0)),
                Arc::new(Coordinate::new(2, 1, 1.0)),
            ],
            lipschitz_m: 1.0,
            neighborhood_delta: 1.0,
            nonconvexity_f: Some(0.0),
            nonconvexity_g: Some(0.0),
            p_star: None,
            known_optimum: None,
            initial_point: Vector::from([-1.0, -1.0]),
        }
    }

    #[test]
    fn single_constraint_is_identity() {
        let mut p = two_coordinate_constraints();
        p.constraints = vec![Arc::new(NormBall::new(1.0))];
        let g = p.reduced();
        let v = g.value(&[0.0, 0.0]).unwrap();
        assert_eq!(v, ConstraintValue { value: -1.0, index: 1 });
        let (sub, _) = g.subgradient(&[0.0, 0.0], Query::Gradient).unwrap();
        assert_eq!(sub, p.constraints[0].gradient(&[0.0, 0.0]));
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let p = two_coordinate_constraints();
        let (sub, v) = p.reduced().subgradient(&[3.0, 3.0], Query::Gradient).unwrap();
        assert_eq!(v, ConstraintValue { value: 3.0, index: 1 });
        assert_eq!(sub, Vector::from([1.0, 0.0]));
    }

    #[test]
    fn strict_max_picks_attaining_constraint() {
        let p = two_coordinate_constraints();
        let (sub, v) = p.reduced().subgradient(&[1.0, 2.0], Query::Gradient).unwrap();
        assert_eq!(v, ConstraintValue { value: 2.0, index: 2 });
        assert_eq!(sub, Vector::from([0.0, 1.0]));
    }

    #[test]
    fn directional_tie_uses_larger_slope() {
        let p = two_coordinate_constraints();
        let dir = [0.0, 1.0];
        let (sub, v) = p.reduced().subgradient(&[3.0, 3.0], Query::Directional(&dir)).unwrap();
        assert_eq!(v.index, 2);
        assert_eq!(sub, Vector::from([0.0, 1.0]));
    }

    #[test]
    fn non_finite_values_are_errors() {
        #[derive(Debug)]
        struct Broken;
        impl Function for Broken {
            fn value(&self, _: &[f64]) -> f64 {
                f64::NAN
            }
            fn gradient(&self, x: &[f64]) -> Vector {
                Vector::zeros(x.len())
            }
            fn directional_subgradient(&self, x: &[f64], _: &[f64]) -> Vector {
                Vector::zeros(x.len())
            }
        }
        let mut p = two_coordinate_constraints();
        p.constraints.push(Arc::new(Broken));
        assert!(matches!(p.reduced().value(&[0.0, 0.0]), Err(Error::Oracle { .. })));
    }
}
