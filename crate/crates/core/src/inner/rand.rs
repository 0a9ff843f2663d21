//! Randomized minimal-norm Goldstein subgradient search.

use ::rand::Rng;

use super::{CombinationBuilder, InnerOutcome, InnerParams, InnerResult};
use crate::error::{Error, Result};
use crate::problem::Query;
use crate::sampling::uniform_in_ball;
use crate::segment::min_norm_on_segment;
use crate::subproblem::Subproblem;
use crate::vector::Vector;

/// Radius of the perturbation ball around `zeta`: half of the admissible
/// upper bound `|zeta| * sqrt(1 - (1 - |zeta|^2 / (128 M^2))^2)`.
pub fn sampling_radius(zeta_norm: f64, lipschitz_m: f64) -> f64 {
    // 1 - (1 - a)^2 = a (2 - a); clamped so an oracle breaking the Lipschitz
    // bound cannot produce a NaN radius.
    let a = (zeta_norm * zeta_norm / (128.0 * lipschitz_m * lipschitz_m)).min(1.0);
    0.5 * zeta_norm * (a * (2.0 - a)).sqrt()
}

/// Randomized search under the almost-everywhere gradient oracle.
///
/// Starts from the gradient at a uniform point of `B(x, delta)`. While
/// `|zeta| > eps` and the trial step fails to decrease `h_x` by more than
/// `delta |zeta| / 4`, it perturbs `zeta` inside a small ball, samples a
/// point uniformly on the segment from `x` along the negated perturbation,
/// and replaces `zeta` by the minimal-norm point between `zeta` and the new
/// gradient.
pub fn rand_search<R: Rng + ?Sized>(
    sub: &mut Subproblem<'_>,
    params: &InnerParams,
    rng: &mut R,
) -> Result<InnerResult> {
    params.validate(sub.problem().neighborhood_delta)?;
    let InnerParams { delta, eps, lipschitz_m, call_cap } = *params;
    let anchor = sub.anchor();
    let h_anchor = sub.value(anchor)?;
    if h_anchor > 0.0 {
        return Err(Error::usage(format!("anchor is infeasible: g(x) = {h_anchor}")));
    }

    let y0 = uniform_in_ball(rng, anchor, delta);
    let first = sub.subgradient(&y0, Query::Gradient)?;
    let mut zeta = first.vector.clone();
    let mut builder = CombinationBuilder::new(y0, first, None);
    let mut history = vec![zeta.norm()];
    let mut iterations = 0;

    let finish = |sub: &Subproblem<'_>,
                  builder: &CombinationBuilder,
                  zeta: Vector,
                  history: Vec<f64>,
                  iterations: usize,
                  outcome: InnerOutcome,
                  descent: Option<(f64, Vector)>| {
        let counter = sub.counter();
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
            probes: Vec::new(),
        }
    };

    loop {
        let norm = zeta.norm();
        if norm <= eps {
            return Ok(finish(sub, &builder, zeta, history, iterations, InnerOutcome::Stationary, None));
        }
        let trial = anchor.add_scaled(-delta / norm, &zeta);
        let decrease = h_anchor - sub.value(&trial)?;
        if !(delta * norm / 4.0 >= decrease) {
            return Ok(finish(
                sub,
                &builder,
                zeta,
                history,
                iterations,
                InnerOutcome::Descent,
                Some((decrease, trial)),
            ));
        }
        if sub.counter().subgradient_calls >= call_cap {
            let partial = finish(sub, &builder, zeta, history, iterations, InnerOutcome::Exhausted, None);
            return Err(Error::InnerBudgetExceeded { cap: call_cap, partial: Box::new(partial) });
        }

        let radius = sampling_radius(norm, lipschitz_m);
        let y = uniform_in_ball(rng, &zeta, radius);
        let y_norm = y.norm();
        let u: f64 = rng.random();
        let s = anchor.add_scaled(-u * delta / y_norm, &y);
        let eval = sub.subgradient(&s, Query::Gradient)?;
        let seg = min_norm_on_segment(&zeta, &eval.vector);
        builder.mix(seg.t, s, eval, None);
        zeta = seg.point;
        history.push(zeta.norm());
        iterations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inner::recompute_zeta;
    use crate::problems::{get_problem, ProblemParams};
    use crate::sampling::rng_from_seed;

    fn params(delta: f64, eps: f64, m: f64) -> InnerParams {
        InnerParams { delta, eps, lipschitz_m: m, call_cap: 1_000_000 }
    }

    #[test]
    fn constant_gradient_ball_gives_descent_in_one_call() {
        let rec = get_problem("ball-linear", &ProblemParams::default()).unwrap();
        let x = Vector::zeros(2);
        let mut sub = Subproblem::new(&rec.spec, &x).unwrap();
        let res = rand_search(&mut sub, &params(0.25, 0.5, 1.0), &mut rng_from_seed(1)).unwrap();
        assert_eq!(res.outcome, InnerOutcome::Descent);
        assert_eq!(res.zeta, Vector::from([1.0, 0.0]));
        assert_eq!(res.oracle_calls, 1);
        assert_eq!(res.descent_amount, Some(0.25));
    }

    #[test]
    fn eps_at_least_m_is_immediately_stationary() {
        let rec = get_problem("l1-ball", &ProblemParams::default()).unwrap();
        let m = rec.spec.lipschitz_m;
        let x = rec.spec.initial_point.clone();
        let mut sub = Subproblem::new(&rec.spec, &x).unwrap();
        let res = rand_search(&mut sub, &params(0.05, m, m), &mut rng_from_seed(4)).unwrap();
        assert_eq!(res.outcome, InnerOutcome::Stationary);
        assert_eq!(res.oracle_calls, 1);
    }

    #[test]
    fn radius_is_inside_the_admissible_range() {
        for &(n, m) in &[(1.0, 1.0), (0.01, 1.0), (2.4, 2.5), (1e-6, 3.0)] {
            let r = sampling_radius(n, m);
            let bound = n * (1.0 - (1.0 - n * n / (128.0 * m * m)).powi(2)).sqrt();
            assert!(r > 0.0 && r < bound, "r={r} bound={bound}");
        }
    }

    #[test]
    fn norms_decrease_and_combination_is_consistent() {
        let rec = get_problem("ball-linear", &ProblemParams::default()).unwrap();
        let x = Vector::from([-0.96, 0.0]);
        for seed in 0..20 {
            let mut sub = Subproblem::new(&rec.spec, &x).unwrap();
            let res = rand_search(&mut sub, &params(0.05, 0.02, 1.0), &mut rng_from_seed(seed)).unwrap();
            for w in res.norm_history.windows(2) {
                assert!(w[1] <= w[0]);
            }
            let sum: f64 = res.combination.iter().map(|w| w.weight).sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(res.combination.iter().all(|w| w.point.distance(&x) <= 0.05 * (1.0 + 1e-12)));
            let re = recompute_zeta(&res.combination).unwrap();
            assert!(re.distance(&res.zeta) <= 1e-9);
        }
    }

    #[test]
    fn budget_error_carries_consistent_partial_state() {
        let rec = get_problem("ball-linear", &ProblemParams::default()).unwrap();
        // h >= 0 = h(x) near the optimum, so no step can descend.
        let x = Vector::from([-1.0, 0.0]);
        let mut sub = Subproblem::new(&rec.spec, &x).unwrap();
        let p = InnerParams { call_cap: 3, ..params(0.05, 1e-9, 1.0) };
        match rand_search(&mut sub, &p, &mut rng_from_seed(2)) {
            Err(Error::InnerBudgetExceeded { cap, partial }) => {
                assert_eq!(cap, 3);
                assert_eq!(partial.oracle_calls, 3);
                let re = recompute_zeta(&partial.combination).unwrap();
                assert!(re.distance(&partial.zeta) <= 1e-12);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn infeasible_anchor_is_rejected() {
        let rec = get_problem("ball-linear", &ProblemParams::default()).unwrap();
        let x = Vector::from([2.0, 0.0]);
        let mut sub = Subproblem::new(&rec.spec, &x).unwrap();
        let err = rand_search(&mut sub, &params(0.05, 0.05, 1.0), &mut rng_from_seed(0));
        assert!(matches!(err, Err(Error::Usage(_))));
    }

    #[test]
    fn deterministic_given_seed() {
        let rec = get_problem("l1-ball", &ProblemParams::default()).unwrap();
        let x = Vector::from([0.01, -0.02]);
        let run = || {
            let mut sub = Subproblem::new(&rec.spec, &x).unwrap();
            rand_search(&mut sub, &params(0.05, 0.05, rec.spec.lipschitz_m), &mut rng_from_seed(11)).unwrap()
        };
        assert_eq!(run(), run());
    }
}
