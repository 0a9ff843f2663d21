//! Inner searches for an approximate minimal-norm element of the Goldstein
//! subdifferential of `h_x` at `x`.
//!
//! Both searches return either a short combination (`|zeta| <= eps`) or a
//! direction whose unit step of length `delta` decreases `h_x` by at least
//! `C * delta * eps`, with `C = 1/4` for [`rand_search`] and `C = 1/3` for
//! [`bisect_search`].

mod bisect;
mod rand;

use serde::{Deserialize, Serialize};

pub use self::bisect::{bisect_negative_slope, bisect_search, default_max_steps, BisectionHit, RayRestriction};
pub use self::rand::{rand_search, sampling_radius};

use crate::error::{Error, Result};
use crate::problem::BranchTag;
use crate::subproblem::SubgradientEval;
use crate::vector::Vector;

/// One term `w_i * G(z_i)` of a Goldstein combination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSubgradient {
    /// Sample point `z_i`, within `delta` of the anchor.
    pub point: Vector,
    /// Subgradient of `h_x` returned at `point`.
    pub vector: Vector,
    pub branch: BranchTag,
    pub weight: f64,
    /// Query direction for directional-subgradient evaluations, so the
    /// vector can be replayed from the oracles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vector>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerOutcome {
    /// `|zeta| > eps` and the step `-delta * zeta / |zeta|` decreases `h_x`.
    Descent,
    /// `|zeta| <= eps`.
    Stationary,
    /// Only in partial states carried by a budget error.
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerResult {
    pub outcome: InnerOutcome,
    pub zeta: Vector,
    pub combination: Vec<WeightedSubgradient>,
    pub oracle_calls: u64,
    pub value_evals: u64,
    /// Number of segment updates performed.
    pub iterations: usize,
    /// `h_x(x) - h_x(x - delta * zeta / |zeta|)` for a descent outcome.
    pub descent_amount: Option<f64>,
    /// The trial point `x - delta * zeta / |zeta|` the descent was measured at.
    pub descent_point: Option<Vector>,
    /// `|zeta_0|, |zeta_1|, ...`.
    pub norm_history: Vec<f64>,
    /// Bisection probes used by each iteration; empty for the randomized search.
    pub probes: Vec<usize>,
}

/// Parameters shared by both inner searches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerParams {
    pub delta: f64,
    pub eps: f64,
    pub lipschitz_m: f64,
    /// Hard cap on subgradient calls per invocation.
    pub call_cap: u64,
}

impl InnerParams {
    pub(crate) fn validate(&self, neighborhood_delta: f64) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < neighborhood_delta) {
            return Err(Error::usage(format!(
                "delta must lie in (0, {neighborhood_delta}), got {}",
                self.delta
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::usage("eps must be positive"));
        }
        if !(self.lipschitz_m > 0.0) {
            return Err(Error::usage("lipschitz constant must be positive"));
        }
        if self.call_cap == 0 {
            return Err(Error::usage("call cap must be positive"));
        }
        Ok(())
    }
}

/// `sum_i w_i * vector_i`.
pub fn recompute_zeta(combination: &[WeightedSubgradient]) -> Option<Vector> {
    let first = combination.first()?;
    let mut zeta = Vector::zeros(first.vector.len());
    for term in combination {
        zeta.axpy(term.weight, &term.vector);
    }
    Some(zeta)
}

/// Convex-combination bookkeeping under repeated segment updates.
///
/// Mixing in a new term with coefficient `t` rescales every existing weight
/// by `1 - t` and appends the new term with weight `t`. The rescaling is
/// kept as a common factor so each update is O(1).
#[derive(Clone, Debug)]
pub(crate) struct CombinationBuilder {
    terms: Vec<WeightedSubgradient>,
    scale: f64,
}

impl CombinationBuilder {
    pub fn new(point: Vector, eval: SubgradientEval, direction: Option<Vector>) -> Self {
        Self { terms: vec![term(point, eval, direction, 1.0)], scale: 1.0 }
    }

    pub fn mix(&mut self, t: f64, point: Vector, eval: SubgradientEval, direction: Option<Vector>) {
        if t <= 0.0 {
            return;
        }
        if t >= 1.0 {
            self.terms.clear();
            self.scale = 1.0;
            self.terms.push(term(point, eval, direction, 1.0));
            return;
        }
        self.scale *= 1.0 - t;
        self.terms.push(term(point, eval, direction, t / self.scale));
        if self.scale < 1e-200 {
            for w in &mut self.terms {
                w.weight *= self.scale;
            }
            self.scale = 1.0;
        }
    }

    pub fn finish(&self) -> Vec<WeightedSubgradient> {
        let mut out: Vec<WeightedSubgradient> = self
            .terms
            .iter()
            .filter_map(|w| {
                let weight = w.weight * self.scale;
                (weight > 0.0).then(|| WeightedSubgradient { weight, ..w.clone() })
            })
            .collect();
        let total: f64 = out.iter().map(|w| w.weight).sum();
        for w in &mut out {
            w.weight /= total;
        }
        out
    }
}

fn term(point: Vector, eval: SubgradientEval, direction: Option<Vector>, weight: f64) -> WeightedSubgradient {
    WeightedSubgradient { point, vector: eval.vector, branch: eval.branch, weight, direction }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(v: [f64; 2]) -> SubgradientEval {
        SubgradientEval { vector: Vector::from(v), branch: BranchTag::Objective, value: 0.0 }
    }

    #[test]
    fn builder_tracks_segment_updates() {
        let mut b = CombinationBuilder::new(Vector::zeros(2), eval([2.0, 0.0]), None);
        let mut zeta = Vector::from([2.0, 0.0]);
        let others = [[0.0, 1.0], [-1.0, 0.5], [0.3, -2.0], [0.0, 0.0]];
        for g in others {
            let seg = crate::segment::min_norm_on_segment(&zeta, &g);
            b.mix(seg.t, Vector::zeros(2), eval(g), None);
            zeta = seg.point;
            let comb = b.finish();
            let sum: f64 = comb.iter().map(|w| w.weight).sum();
            assert!((sum - 1.0).abs() < 1e-12);
            let re = recompute_zeta(&comb).unwrap();
            assert!(re.distance(&zeta) < 1e-12, "{re:?} vs {zeta:?}");
        }
    }

    #[test]
    fn builder_survives_long_runs() {
        let mut b = CombinationBuilder::new(Vector::zeros(2), eval([1.0, 0.0]), None);
        for _ in 0..5_000 {
            b.mix(0.3, Vector::zeros(2), eval([1.0, 0.0]), None);
        }
        let comb = b.finish();
        let sum: f64 = comb.iter().map(|w| w.weight).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(comb.iter().all(|w| w.weight > 0.0));
    }
}
