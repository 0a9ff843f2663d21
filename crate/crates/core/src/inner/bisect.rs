//! Deterministic bisection-based minimal-norm search.
//!
//! Along the ray `z(r) = x + (r - delta) * zhat`, `r in [0, delta]`, the
//! function `l(r) = h_x(z(r)) - eps * r / 2` has `l(0) > l(delta)` whenever
//! the search has not yet found descent. Bisection locates a point where the
//! right derivative of `l` is negative, i.e. where the directional
//! subgradient `H` has `<H, zhat> < eps / 2`, and `H` is then mixed into
//! `zeta`.

use super::{CombinationBuilder, InnerOutcome, InnerParams, InnerResult};
use crate::error::{Error, Result};
use crate::problem::Query;
use crate::segment::min_norm_on_segment;
use crate::subproblem::{SubgradientEval, Subproblem};
use crate::vector::{dot, Vector};

/// The one-dimensional restriction searched by [`bisect_negative_slope`].
#[derive(Clone, Debug, PartialEq)]
pub struct RayRestriction {
    pub anchor: Vector,
    pub direction_hat: Vector,
    pub delta: f64,
    pub eps: f64,
}

impl RayRestriction {
    pub fn new(anchor: Vector, direction_hat: Vector, delta: f64, eps: f64) -> Result<Self> {
        if (direction_hat.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::usage("ray direction must be a unit vector"));
        }
        if anchor.len() != direction_hat.len() {
            return Err(Error::usage("ray anchor and direction differ in dimension"));
        }
        if !(delta > 0.0 && eps > 0.0) {
            return Err(Error::usage("ray needs positive delta and eps"));
        }
        Ok(Self { anchor, direction_hat, delta, eps })
    }

    /// `z(r) = x + (r - delta) * zhat`.
    pub fn point(&self, r: f64) -> Vector {
        self.anchor.add_scaled(r - self.delta, &self.direction_hat)
    }

    fn tilt(&self, h: f64, r: f64) -> f64 {
        h - self.eps * r / 2.0
    }
}

/// The successful probe of a bisection.
#[derive(Clone, Debug, PartialEq)]
pub struct BisectionHit {
    pub r: f64,
    pub point: Vector,
    /// `H(z(r), zhat)`, with `<H, zhat> - eps/2 < 0`.
    pub eval: SubgradientEval,
    pub probes: usize,
}

/// Step cap for the bisection: `64 + ceil(log2(delta / machine_step))`,
/// where the machine step is the spacing of doubles at the anchor's scale.
pub fn default_max_steps(delta: f64, anchor: &[f64]) -> usize {
    let scale = anchor.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let step = f64::EPSILON * scale;
    64 + (delta / step).log2().ceil().max(0.0) as usize
}

/// Finds `r` in `[0, delta]` whose directional probe satisfies
/// `<H(z(r), zhat), zhat> - eps/2 < 0`.
///
/// Keeps an interval `[a, b]` whose average `l`-slope is at most the
/// initial one. Each step probes the midpoint; on failure (equality counts
/// as failure) it keeps whichever half has the smaller average slope.
pub fn bisect_negative_slope(
    ray: &RayRestriction,
    sub: &mut Subproblem<'_>,
    max_steps: usize,
) -> Result<BisectionHit> {
    let delta = ray.delta;
    let mut a = 0.0;
    let mut b = delta;
    let mut la = ray.tilt(sub.value(&ray.point(a))?, a);
    let mut lb = ray.tilt(sub.value(&ray.point(b))?, b);
    if !(la > lb) {
        return Err(Error::usage(format!(
            "bisection needs l(0) > l(delta), got l(0) = {la}, l(delta) = {lb}"
        )));
    }
    let zhat = ray.direction_hat.as_slice();
    for step in 1..=max_steps {
        let m = 0.5 * (a + b);
        if !(m > a && m < b) {
            break;
        }
        let point = ray.point(m);
        let eval = sub.subgradient(&point, Query::Directional(zhat))?;
        if dot(&eval.vector, zhat) - ray.eps / 2.0 < 0.0 {
            return Ok(BisectionHit { r: m, point, eval, probes: step });
        }
        let lm = ray.tilt(eval.value, m);
        let left = (lm - la) / (m - a);
        let right = (lb - lm) / (b - m);
        if left <= right {
            b = m;
            lb = lm;
        } else {
            a = m;
            la = lm;
        }
    }
    Err(Error::Modulus { steps: max_steps })
}

/// Deterministic search under the directional-subgradient oracle.
///
/// `initial_direction` is the query direction for `zeta_0 = H(x, v0)`;
/// without one the first basis vector is used.
pub fn bisect_search(
    sub: &mut Subproblem<'_>,
    params: &InnerParams,
    initial_direction: Option<&[f64]>,
) -> Result<InnerResult> {
    params.validate(sub.problem().neighborhood_delta)?;
    let InnerParams { delta, eps, call_cap, .. } = *params;
    let anchor = sub.anchor();
    let h_anchor = sub.value(anchor)?;
    if h_anchor > 0.0 {
        return Err(Error::usage(format!("anchor is infeasible: g(x) = {h_anchor}")));
    }
    let v0 = initial_direction
        .and_then(|v| Vector::from(v).normalized())
        .unwrap_or_else(|| Vector::basis(anchor.len(), 0));
    let first = sub.subgradient(anchor, Query::Directional(&v0))?;
    let mut zeta = first.vector.clone();
    let mut builder = CombinationBuilder::new(anchor.clone(), first, Some(v0));
    let mut history = vec![zeta.norm()];
    let mut probes = Vec::new();
    let max_steps = default_max_steps(delta, anchor);

    let finish = |sub: &Subproblem<'_>,
                  builder: &CombinationBuilder,
                  zeta: Vector,
                  history: Vec<f64>,
                  probes: Vec<usize>,
                  outcome: InnerOutcome,
                  descent: Option<(f64, Vector)>| {
        let counter = sub.counter();
        let iterations = probes.len();
        let (descent_amount, descent_point) = match descent {
            Some((a, p)) => (Some(a), Some(p)),
            None => (None, None),
        };
        InnerResult {
            outcome,
            zeta,
            combination: builder.finish(),
            oracle_calls: counter.subgradient_calls,
            value_evals: counter.value_evals,
            iterations,
            descent_amount,
            descent_point,
            norm_history: history,
            probes,
        }
    };

    loop {
        let norm = zeta.norm();
        if norm <= eps {
            return Ok(finish(sub, &builder, zeta, history, probes, InnerOutcome::Stationary, None));
        }
        let zhat = zeta.scaled(1.0 / norm);
        let trial = anchor.add_scaled(-delta, &zhat);
        let decrease = h_anchor - sub.value(&trial)?;
        if !(delta * eps / 3.0 > decrease) {
            return Ok(finish(
                sub,
                &builder,
                zeta,
                history,
                probes,
                InnerOutcome::Descent,
                Some((decrease, trial)),
            ));
        }
        let used = sub.counter().subgradient_calls;
        if used >= call_cap {
            let partial = finish(sub, &builder, zeta, history, probes, InnerOutcome::Exhausted, None);
            return Err(Error::InnerBudgetExceeded { cap: call_cap, partial: Box::new(partial) });
        }
        let remaining = (call_cap - used).min(usize::MAX as u64) as usize;
        let ray = RayRestriction::new(anchor.clone(), zhat.clone(), delta, eps)?;
        let hit = match bisect_negative_slope(&ray, sub, max_steps.min(remaining)) {
            Ok(hit) => hit,
            Err(Error::Modulus { .. }) if remaining < max_steps => {
                let partial = finish(sub, &builder, zeta, history, probes, InnerOutcome::Exhausted, None);
                return Err(Error::InnerBudgetExceeded { cap: call_cap, partial: Box::new(partial) });
            }
            Err(e) => return Err(e),
        };
        let seg = min_norm_on_segment(&zeta, &hit.eval.vector);
        builder.mix(seg.t, hit.point, hit.eval, Some(zhat));
        zeta = seg.point;
        history.push(zeta.norm());
        probes.push(hit.probes);
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::problem::{Function, ProblemSpec};
    use crate::problems::functions::{Constant, Coordinate};
    use crate::problems::{get_problem, ProblemParams};

    /// A function of the first coordinate only, given as a piecewise-linear
    /// profile `phi` with knots; the ray runs along `e1` so `h` along the
    /// ray is `phi`.
    #[derive(Debug)]
    struct Profile {
        knots: Vec<(f64, f64)>,
    }

    impl Profile {
        fn segment(&self, t: f64, v: f64) -> usize {
            // Segment used for the right (v >= 0) or left (v < 0) derivative.
            let k = &self.knots;
            for i in 0..k.len() - 1 {
                let (lo, hi) = (k[i].0, k[i + 1].0);
                if (v >= 0.0 && t >= lo && t < hi) || (v < 0.0 && t > lo && t <= hi) {
                    return i;
                }
            }
            if t < k[0].0 || (v < 0.0 && t <= k[0].0) {
                0
            } else {
                k.len() - 2
            }
        }
        fn slope(&self, i: usize) -> f64 {
            let (a, b) = (self.knots[i], self.knots[i + 1]);
            (b.1 - a.1) / (b.0 - a.0)
        }
    }

    impl Function for Profile {
        fn value(&self, x: &[f64]) -> f64 {
            let t = x[0];
            let i = self.segment(t, 1.0);
            let (a, _) = (self.knots[i], self.knots[i + 1]);
            a.1 + self.slope(i) * (t - a.0)
        }
        fn gradient(&self, x: &[f64]) -> Vector {
            Vector::from(vec![self.slope(self.segment(x[0], 1.0))])
        }
        fn directional_subgradient(&self, x: &[f64], v: &[f64]) -> Vector {
            Vector::from(vec![self.slope(self.segment(x[0], v[0]))])
        }
    }

    /// Problem in R^1 with objective = profile and inactive constraint, and
    /// anchor chosen so z(r) = r - delta + anchor maps onto the profile.
    fn profile_problem(knots: Vec<(f64, f64)>) -> ProblemSpec {
        ProblemSpec {
            dim: 1,
            objective: Arc::new(Profile { knots }),
            constraints: vec![Arc::new(Constant::new(-1.0))],
            lipschitz_m: 1.0,
            neighborhood_delta: 10.0,
            nonconvexity_f: None,
            nonconvexity_g: Some(0.0),
            p_star: None,
            known_optimum: None,
            initial_point: Vector::zeros(1),
        }
    }

    #[test]
    fn piecewise_linear_hit_on_first_probe() {
        // h along the ray (as a function of r on [0, 1]): +0.2 slope then -0.4.
        let p = profile_problem(vec![(-1.0, 0.0), (-0.5, 0.1), (0.0, -0.1)]);
        let x = Vector::zeros(1);
        let mut sub = Subproblem::new(&p, &x).unwrap();
        let ray = RayRestriction::new(x.clone(), Vector::from(vec![1.0]), 1.0, 1.0).unwrap();
        let hit = bisect_negative_slope(&ray, &mut sub, 100).unwrap();
        assert_eq!(hit.r, 0.5);
        assert_eq!(hit.probes, 1);
        assert_eq!(hit.eval.vector[0], -0.4);
    }

    #[test]
    fn constant_profile_returns_midpoint() {
        let p = profile_problem(vec![(-2.0, 0.0), (1.0, 0.0)]);
        let x = Vector::zeros(1);
        let mut sub = Subproblem::new(&p, &x).unwrap();
        let ray = RayRestriction::new(x.clone(), Vector::from(vec![1.0]), 1.0, 0.5).unwrap();
        let hit = bisect_negative_slope(&ray, &mut sub, 100).unwrap();
        assert_eq!(hit.r, 0.5);
        assert_eq!(hit.probes, 1);
    }

    #[test]
    fn convex_profiles_hit_within_the_lipschitz_depth() {
        // Convex profiles, checked against dense sampling of l: the hit has a
        // negative right slope, and the probe count stays within
        // 1 + log2((M + eps/2) / sigma) with sigma = eps/6: a convex l with
        // average slope <= -sigma reaches its minimum only after
        // r* >= sigma * delta / (M + eps/2), and every midpoint left of r*
        // succeeds.
        let eps = 0.5;
        let profiles: Vec<Vec<(f64, f64)>> = vec![
            vec![(-1.0, 0.0), (-0.9, -0.3), (0.0, -0.21)],
            vec![(-1.0, 0.0), (-0.5, -0.3), (0.0, -0.1)],
            vec![(-1.0, 0.0), (-0.97, -0.03), (-0.5, -0.0), (0.0, 0.1), (1.0, 0.5)],
            vec![(-1.0, 1.0), (0.0, 0.7)],
        ];
        let sigma = eps / 6.0;
        for knots in profiles {
            let steepest = knots
                .windows(2)
                .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
                .fold(0.0, f64::max);
            let depth = 1 + ((steepest + eps / 2.0) / sigma).log2().ceil() as usize;
            let p = profile_problem(knots);
            let x = Vector::zeros(1);
            let ray = RayRestriction::new(x.clone(), Vector::from(vec![1.0]), 1.0, eps).unwrap();
            let mut sub = Subproblem::new(&p, &x).unwrap();
            let l = |r: f64| p.objective.value(&[r - 1.0]) - eps * r / 2.0;
            if !(l(0.0) > l(1.0)) {
                continue;
            }
            let hit = bisect_negative_slope(&ray, &mut sub, 100).unwrap();
            assert!(hit.probes <= depth, "{} probes", hit.probes);
            let step = 1e-6;
            let right_slope = (l(hit.r + step) - l(hit.r)) / step;
            assert!(right_slope < 0.0);
        }
    }

    #[test]
    fn precondition_is_checked() {
        let p = profile_problem(vec![(-2.0, 0.0), (1.0, 3.0)]);
        let x = Vector::zeros(1);
        let mut sub = Subproblem::new(&p, &x).unwrap();
        let ray = RayRestriction::new(x.clone(), Vector::from(vec![1.0]), 1.0, 0.5).unwrap();
        assert!(matches!(bisect_negative_slope(&ray, &mut sub, 100), Err(Error::Usage(_))));
    }

    #[test]
    fn non_unit_direction_is_rejected() {
        let r = RayRestriction::new(Vector::zeros(2), Vector::from([1.0, 1.0]), 0.1, 0.1);
        assert!(matches!(r, Err(Error::Usage(_))));
    }

    #[test]
    fn immediate_descent_on_ball_linear() {
        let rec = get_problem("ball-linear", &ProblemParams::default()).unwrap();
        let x = Vector::zeros(2);
        let mut sub = Subproblem::new(&rec.spec, &x).unwrap();
        let p = InnerParams { delta: 0.25, eps: 0.5, lipschitz_m: 1.0, call_cap: 1000 };
        let res = bisect_search(&mut sub, &p, None).unwrap();
        assert_eq!(res.outcome, InnerOutcome::Descent);
        assert_eq!(res.zeta, Vector::from([1.0, 0.0]));
        assert_eq!(res.iterations, 0);
        assert_eq!(res.oracle_calls, 1);
    }

    #[test]
    fn eps_at_least_m_is_stationary() {
        let rec = get_problem("linf-nonconvex", &ProblemParams::default()).unwrap();
        let m = rec.spec.lipschitz_m;
        let x = rec.spec.initial_point.clone();
        let mut sub = Subproblem::new(&rec.spec, &x).unwrap();
        let p = InnerParams { delta: 0.05, eps: m, lipschitz_m: m, call_cap: 1000 };
        let res = bisect_search(&mut sub, &p, None).unwrap();
        assert_eq!(res.outcome, InnerOutcome::Stationary);
        assert_eq!(res.oracle_calls, 1);
    }

    #[test]
    fn repeated_runs_are_identical_and_points_stay_in_ball() {
        let rec = get_problem("ball-linear", &ProblemParams::default()).unwrap();
        let x = Vector::from([-0.96, 0.01]);
        let p = InnerParams { delta: 0.05, eps: 0.01, lipschitz_m: 1.0, call_cap: 100_000 };
        let run = || {
            let mut sub = Subproblem::new(&rec.spec, &x).unwrap();
            bisect_search(&mut sub, &p, None).unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        for w in a.norm_history.windows(2) {
            assert!(w[1] <= w[0]);
        }
        for t in &a.combination {
            assert!(t.point.distance(&x) <= 0.05 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn descent_exit_meets_one_third_constant() {
        let p = ProblemSpec {
            dim: 2,
            objective: Arc::new(Coordinate::new(2, 1, 1.0)),
            constraints: vec![Arc::new(Constant::new(-1.0))],
            lipschitz_m: 1.0,
            neighborhood_delta: 1.0,
            nonconvexity_f: Some(0.0),
            nonconvexity_g: Some(0.0),
            p_star: None,
            known_optimum: None,
            initial_point: Vector::zeros(2),
        };
        let x = Vector::from([0.2, 0.3]);
        let mut sub = Subproblem::new(&p, &x).unwrap();
        let params = InnerParams { delta: 0.1, eps: 0.1, lipschitz_m: 1.0, call_cap: 100 };
        let res = bisect_search(&mut sub, &params, None).unwrap();
        assert_eq!(res.outcome, InnerOutcome::Descent);
        assert!(res.descent_amount.unwrap() >= 0.1 * 0.1 / 3.0);
    }
}
