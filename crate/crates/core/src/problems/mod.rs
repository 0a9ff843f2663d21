//! Built-in corpus of Lipschitz test problems with exact metadata.
//!
//! | name                      | objective              | constraints                     | optimum              |
//! |---------------------------|------------------------|---------------------------------|----------------------|
//! | `ball-linear`             | `s x1`                 | `|x| - 1`                       | `(-1, 0, ..)`, λ = s |
//! | `l1-ball`                 | `s |x|_1`              | `|x|^2 - 1`                     | origin, λ = 0        |
//! | `footnote-1d`             | `s x`                  | `x^2 - 1`                       | `-1`, λ = s/2        |
//! | `footnote-two-constraint` | `s x`                  | `x^2 - 1`, clipped `|x| - 1`    | `-1`                 |
//! | `linf-nonconvex`          | `s (|x|_inf - μ|x|_2)` | `0.5 - x1`                      | `(0.5, .., 0.5)`     |
//! | `l1-unconstrained`        | `s |x|_1`              | `-1`                            | origin               |
//!
//! `s` is the `scale` parameter (default 1).

pub mod functions;

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use self::functions::{ClippedAbs, Constant, Coordinate, L1Norm, LinfMinusNorm, NormBall, Scaled, SquaredNormBall};
use crate::error::{Error, Result};
use crate::problem::{ProblemSpec, SharedFunction};
use crate::sampling::uniform_in_ball;
use crate::vector::Vector;

pub const PROBLEM_NAMES: &[&str] = &[
    "ball-linear",
    "l1-ball",
    "footnote-1d",
    "footnote-two-constraint",
    "linf-nonconvex",
    "l1-unconstrained",
];

/// Neighborhood radius used by every corpus problem.
const NEIGHBORHOOD: f64 = 0.5;
/// `μ` of `linf-nonconvex`.
const LINF_MU: f64 = 0.2;

/// Constructor arguments of a corpus problem.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl ProblemParams {
    pub fn dim(dim: usize) -> Self {
        Self { dim: Some(dim), scale: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemTags {
    pub convex: bool,
    pub smooth: bool,
    pub active_at_optimum: bool,
}

/// An `(a, b, c)` Goldstein constraint qualification triple.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcqTriple {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Closed-form GCQ lower bound `b(a, c)` for a problem's constraints.
#[derive(Clone, Copy, Debug, PartialEq)]
enum GcqFamily {
    /// `|x| - 1`: near-active gradients are unit vectors in a cap of
    /// half-angle `asin(a / (1 - c))`, so `b = cos` of that angle.
    UnitSphere,
    /// `|x|^2 - 1`: gradients `2y` over `B(x, a)` with `|x| >= sqrt(1 - c)`,
    /// so `b = 2 (sqrt(1 - c) - a)` for `a < sqrt(1 - c)`.
    SquaredBall,
    /// The squared constraint plus the clipped `|x| - 1`:
    /// `b = min{2 (sqrt(1 - c) - a), 1}` for `a < min{1 - c, 0.5}`.
    SquaredPlusClipped,
    /// A single affine constraint with unit normal.
    Affine,
    /// No constraint is ever near-active for `c < 1`.
    Vacuous,
}

impl GcqFamily {
    fn lower_bound(self, a: f64, c: f64) -> Option<f64> {
        if !(a > 0.0 && c > 0.0 && c < 1.0) {
            return None;
        }
        match self {
            GcqFamily::UnitSphere => {
                let s = a / (1.0 - c);
                (s < 1.0).then(|| (1.0 - s * s).sqrt())
            }
            GcqFamily::SquaredBall => {
                let r = (1.0 - c).sqrt();
                (a < r).then_some(2.0 * (r - a))
            }
            GcqFamily::SquaredPlusClipped => {
                let r = (1.0 - c).sqrt();
                (a < (1.0 - c).min(0.5)).then(|| (2.0 * (r - a)).min(1.0))
            }
            GcqFamily::Affine => Some(1.0),
            GcqFamily::Vacuous => Some(f64::INFINITY),
        }
    }
}

/// A subset of the problem's Lipschitz neighborhood used for empirical checks.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Ball { center: Vector, radius: f64 },
    Box { lo: Vector, hi: Vector },
}

impl Region {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        match self {
            Region::Ball { center, radius } => uniform_in_ball(rng, center, *radius),
            Region::Box { lo, hi } => lo
                .iter()
                .zip(hi.iter())
                .map(|(l, h)| l + (h - l) * rng.random::<f64>())
                .collect::<Vec<_>>()
                .into(),
        }
    }
}

/// A corpus problem and everything known about it.
#[derive(Clone, Debug)]
pub struct ProblemRecord {
    pub name: String,
    pub params: ProblemParams,
    pub spec: ProblemSpec,
    pub tags: ProblemTags,
    /// A GCQ triple that holds everywhere on the feasible region, if known.
    pub gcq_params: Option<GcqTriple>,
    /// Multiplier of the reduced problem at `known_optimum`, when unique.
    pub multiplier_star: Option<f64>,
    pub region: Region,
    gcq_family: GcqFamily,
}

impl ProblemRecord {
    /// `b` such that `(delta, b, 2 M delta)`-GCQ holds on the feasible region.
    ///
    /// Infinite when no constraint can be near-active (GCQ holds vacuously).
    pub fn gcq_sigma(&self, delta: f64) -> Option<f64> {
        self.gcq_family.lower_bound(delta, 2.0 * self.spec.lipschitz_m * delta)
    }

    /// `b` for an arbitrary `(a, c)` pair.
    pub fn gcq_bound(&self, a: f64, c: f64) -> Option<f64> {
        self.gcq_family.lower_bound(a, c)
    }

    /// Rejection sample of a feasible point of `region`.
    pub fn sample_feasible<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let reduced = self.spec.reduced();
        loop {
            let x = self.region.sample(rng);
            if reduced.value(&x).is_ok_and(|g| g.value <= 0.0) {
                return x;
            }
        }
    }

    /// `f(x*) = p*` within `1e-9` and `g(x*) <= 1e-9`.
    pub fn check_optimum_metadata(&self) -> Result<()> {
        let (Some(x), Some(p)) = (&self.spec.known_optimum, self.spec.p_star) else {
            return Ok(());
        };
        let f = self.spec.objective_value(x)?;
        let g = self.spec.reduced().value(x)?.value;
        if (f - p).abs() > 1e-9 || g > 1e-9 {
            return Err(Error::Internal(format!(
                "{}: inconsistent optimum metadata (f = {f}, p* = {p}, g = {g})",
                self.name
            )));
        }
        Ok(())
    }
}

/// Looks up a corpus problem by name.
pub fn get_problem(name: &str, params: &ProblemParams) -> Result<ProblemRecord> {
    let scale = params.scale.unwrap_or(1.0);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::usage("problem scale must be positive"));
    }
    let dim = params.dim;
    let fixed_1d = |n: Option<usize>| match n {
        None | Some(1) => Ok(1),
        Some(n) => Err(Error::usage(format!("{name} is one-dimensional, got dim = {n}"))),
    };
    let n = match name {
        "footnote-1d" | "footnote-two-constraint" => fixed_1d(dim)?,
        _ => dim.unwrap_or(2),
    };
    if n == 0 {
        return Err(Error::usage("dimension must be positive"));
    }
    let sqrt_n = (n as f64).sqrt();

    let rec = match name {
        "ball-linear" => {
            let mut optimum = Vector::zeros(n);
            let mut x = optimum.clone().into_inner();
            x[0] = -1.0;
            optimum = x.into();
            build(
                name,
                params,
                n,
                Arc::new(Coordinate::new(n, 0, scale)),
                vec![Arc::new(NormBall::new(1.0))],
                scale.max(1.0),
                Some(0.0),
                Some(-scale),
                Some(optimum),
                Vector::zeros(n),
                ProblemTags { convex: true, smooth: false, active_at_optimum: true },
                None,
                Some(scale),
                Region::Ball { center: Vector::zeros(n), radius: 1.0 + NEIGHBORHOOD },
                GcqFamily::UnitSphere,
            )
        }
        "l1-ball" | "l1-unconstrained" => {
            let constrained = name == "l1-ball";
            let (constraint, m_g, family): (SharedFunction, f64, _) = if constrained {
                (Arc::new(SquaredNormBall::new(1.0)), 2.0 * (1.0 + NEIGHBORHOOD), GcqFamily::SquaredBall)
            } else {
                (Arc::new(Constant::new(-1.0)), 0.0, GcqFamily::Vacuous)
            };
            build(
                name,
                params,
                n,
                Arc::new(Scaled::new(L1Norm, scale)),
                vec![constraint],
                (scale * sqrt_n).max(m_g),
                Some(0.0),
                Some(0.0),
                Some(Vector::zeros(n)),
                alternating_start(n),
                ProblemTags { convex: true, smooth: false, active_at_optimum: false },
                None,
                Some(0.0),
                Region::Ball { center: Vector::zeros(n), radius: 1.0 + NEIGHBORHOOD },
                family,
            )
        }
        "footnote-1d" | "footnote-two-constraint" => {
            let two = name == "footnote-two-constraint";
            let mut constraints: Vec<SharedFunction> = vec![Arc::new(SquaredNormBall::new(1.0))];
            if two {
                constraints.push(Arc::new(ClippedAbs));
            }
            // c = 0.75 with the largest round a each closed form admits.
            let family = if two { GcqFamily::SquaredPlusClipped } else { GcqFamily::SquaredBall };
            let (a, c) = if two { (0.1, 0.75) } else { (0.25, 0.75) };
            let b = family.lower_bound(a, c);
            let m = scale.max(2.0 * (1.0 + NEIGHBORHOOD));
            build(
                name,
                params,
                1,
                Arc::new(Coordinate::new(1, 0, scale)),
                constraints,
                m,
                Some(0.0),
                Some(-scale),
                Some(Vector::from(vec![-1.0])),
                Vector::zeros(1),
                ProblemTags { convex: true, smooth: !two, active_at_optimum: true },
                b.map(|b| GcqTriple { a, b, c }),
                // With the clipped constraint the subdifferential of the max
                // at -1 is [-2, -1], so any multiplier in [s/2, s] works.
                (!two).then_some(scale / 2.0),
                Region::Box {
                    lo: Vector::from(vec![-1.0 - NEIGHBORHOOD]),
                    hi: Vector::from(vec![1.0 + NEIGHBORHOOD]),
                },
                family,
            )
        }
        "linf-nonconvex" => {
            let mu = LINF_MU;
            if mu * sqrt_n >= 1.0 {
                return Err(Error::usage(format!("linf-nonconvex needs dim < {}", 1.0 / (mu * mu))));
            }
            let mut start = vec![0.0; n];
            start[0] = 1.0;
            for (i, s) in start.iter_mut().enumerate().skip(1) {
                *s = 0.3 * if i % 2 == 0 { -1.0 } else { 1.0 } / i as f64;
            }
            let mut lo = vec![-2.0; n];
            lo[0] = 0.5 - NEIGHBORHOOD;
            build(
                name,
                params,
                n,
                Arc::new(Scaled::new(LinfMinusNorm::new(mu), scale)),
                vec![Arc::new(Coordinate::new(n, 0, -1.0).with_offset(0.5))],
                (scale * (1.0 + mu)).max(1.0),
                Some(scale * mu),
                Some(0.5 * scale * (1.0 - mu * sqrt_n)),
                Some(Vector::from(vec![0.5; n])),
                start.into(),
                ProblemTags { convex: false, smooth: false, active_at_optimum: true },
                None,
                Some(scale * (1.0 - sqrt_n * mu)),
                Region::Box { lo: lo.into(), hi: Vector::from(vec![2.0; n]) },
                GcqFamily::Affine,
            )
        }
        _ => {
            return Err(Error::usage(format!(
                "unknown problem {name:?}; known problems: {}",
                PROBLEM_NAMES.join(", ")
            )))
        }
    };
    rec.spec.validate()?;
    rec.check_optimum_metadata()?;
    Ok(rec)
}

/// Feasible start `x_i = (-1)^i (0.3 + 0.2 i / n) / sqrt(n)`, norm below 0.5.
fn alternating_start(n: usize) -> Vector {
    let s = (n as f64).sqrt();
    (0..n)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * (0.3 + 0.2 * i as f64 / n as f64) / s
        })
        .collect::<Vec<_>>()
        .into()
}

#[allow(clippy::too_many_arguments)]
fn build(
    name: &str,
    params: &ProblemParams,
    dim: usize,
    objective: SharedFunction,
    constraints: Vec<SharedFunction>,
    lipschitz_m: f64,
    nonconvexity_f: Option<f64>,
    p_star: Option<f64>,
    known_optimum: Option<Vector>,
    initial_point: Vector,
    tags: ProblemTags,
    gcq_params: Option<GcqTriple>,
    multiplier_star: Option<f64>,
    region: Region,
    gcq_family: GcqFamily,
) -> ProblemRecord {
    ProblemRecord {
        name: name.to_string(),
        params: params.clone(),
        spec: ProblemSpec {
            dim,
            objective,
            constraints,
            lipschitz_m,
            neighborhood_delta: NEIGHBORHOOD,
            nonconvexity_f,
            // Every corpus constraint reduces to a convex max.
            nonconvexity_g: Some(0.0),
            p_star,
            known_optimum,
            initial_point,
        },
        tags,
        gcq_params,
        multiplier_star,
        region,
        gcq_family,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng_from_seed;

    #[test]
    fn every_problem_builds_with_consistent_metadata() {
        for name in PROBLEM_NAMES {
            let rec = get_problem(name, &ProblemParams::default()).unwrap();
            let g0 = rec.spec.reduced().value(&rec.spec.initial_point).unwrap().value;
            assert!(g0 <= 0.0, "{name}: infeasible start");
            rec.check_optimum_metadata().unwrap();
        }
    }

    #[test]
    fn ball_linear_metadata() {
        let rec = get_problem("ball-linear", &ProblemParams::dim(2)).unwrap();
        assert_eq!(rec.spec.p_star, Some(-1.0));
        assert_eq!(rec.spec.lipschitz_m, 1.0);
        assert_eq!(rec.spec.known_optimum, Some(Vector::from([-1.0, 0.0])));
        assert_eq!(rec.multiplier_star, Some(1.0));
    }

    #[test]
    fn footnote_triple() {
        let rec = get_problem("footnote-1d", &ProblemParams::default()).unwrap();
        let t = rec.gcq_params.unwrap();
        assert_eq!((t.a, t.c), (0.25, 0.75));
        assert!((t.b - 2.0 * (0.25f64.sqrt() - 0.25)).abs() < 1e-15);
        assert!((t.b - 0.5).abs() < 1e-15);
        let two = get_problem("footnote-two-constraint", &ProblemParams::default()).unwrap();
        let t = two.gcq_params.unwrap();
        assert_eq!((t.a, t.c), (0.1, 0.75));
        assert!((t.b - 0.8).abs() < 1e-15);
        // a < min{1 - c, 0.5} and b capped at 1
        assert_eq!(two.gcq_bound(0.05, 0.1), Some(1.0));
        assert_eq!(two.gcq_bound(0.95, 0.1), None);
    }

    #[test]
    fn l1_ball_interior_optimum() {
        let rec = get_problem("l1-ball", &ProblemParams::dim(2)).unwrap();
        assert_eq!(rec.spec.known_optimum, Some(Vector::zeros(2)));
        assert_eq!(rec.multiplier_star, Some(0.0));
        assert!(!rec.tags.active_at_optimum);
    }

    #[test]
    fn unknown_names_and_bad_dims_are_usage_errors() {
        assert!(matches!(get_problem("nope", &ProblemParams::default()), Err(Error::Usage(_))));
        assert!(matches!(get_problem("footnote-1d", &ProblemParams::dim(3)), Err(Error::Usage(_))));
    }

    #[test]
    fn scaling_updates_metadata() {
        let p = ProblemParams { dim: Some(3), scale: Some(2.0) };
        let rec = get_problem("ball-linear", &p).unwrap();
        assert_eq!(rec.spec.p_star, Some(-2.0));
        assert_eq!(rec.spec.lipschitz_m, 2.0);
        let rec = get_problem("linf-nonconvex", &p).unwrap();
        assert_eq!(rec.spec.nonconvexity_f, Some(0.4));
    }

    #[test]
    fn linf_optimum_is_a_lower_bound_on_samples() {
        for n in [1, 2, 3, 5] {
            let rec = get_problem("linf-nonconvex", &ProblemParams::dim(n)).unwrap();
            let p = rec.spec.p_star.unwrap();
            let mut rng = rng_from_seed(n as u64);
            for _ in 0..5000 {
                let x = rec.region.sample(&mut rng);
                if rec.spec.reduced().value(&x).unwrap().value <= 0.0 {
                    assert!(rec.spec.objective_value(&x).unwrap() >= p - 1e-12);
                }
            }
        }
    }

    #[test]
    fn unit_sphere_gcq_matches_cap_geometry() {
        let rec = get_problem("ball-linear", &ProblemParams::default()).unwrap();
        let s = rec.gcq_sigma(0.01).unwrap();
        let angle = (0.01f64 / (1.0 - 0.02)).asin();
        assert!((s - angle.cos()).abs() < 1e-15);
    }
}
