//! Brute-force checks that do not trust solver internals: minimal-norm
//! points of finite hulls, sampled Goldstein estimates, empirical GCQ, and
//! replay of certificates against the problem oracles.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};
use crate::inner::recompute_zeta;
use crate::problem::{finite_vector, OracleMode, ProblemSpec, Query};
use crate::sampling::{rng_from_seed, uniform_in_ball};
use crate::solver::{GoldsteinCertificate, CS_TOLERANCE};
use crate::subproblem::Subproblem;
use crate::vector::{dot, Vector};

/// Duality-gap tolerance of the hull solver, relative to `max |p|^2`.
pub const HULL_TOL: f64 = 1e-8;
/// Samples per near-active constraint in the GCQ check.
pub const GCQ_SAMPLES: usize = 1_000;

const MAX_MAJOR: usize = 10_000;

/// Minimal-norm point of the convex hull of a finite point set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullEstimate {
    pub points: Vec<Vector>,
    /// Convex coefficients of `min_norm_point`, one per entry of `points`.
    pub weights: Vec<f64>,
    pub min_norm_point: Vector,
    pub min_norm: f64,
    /// Final Frank-Wolfe gap `|x|^2 - min_j <x, p_j>`.
    pub gap: f64,
    pub sample_count: usize,
}

/// Wolfe's minimal-norm-point algorithm with duality-gap stopping
/// (`gap <= tol * max |p|^2`).
pub fn min_norm_over_hull(points: &[Vector], tol: f64) -> Result<HullEstimate> {
    let Some(first) = points.first() else {
        return Err(Error::usage("hull of an empty point set"));
    };
    let dim = first.len();
    if points.iter().any(|p| p.len() != dim || !p.is_finite()) {
        return Err(Error::usage("hull points must be finite and of equal length"));
    }

    // Exact duplicates make the affine systems singular.
    let mut unique: Vec<usize> = Vec::new();
    let mut owner = vec![0usize; points.len()];
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        let key: Vec<u64> = p.iter().map(|v| (v + 0.0).to_bits()).collect();
        let slot = *seen.entry(key).or_insert_with(|| {
            unique.push(i);
            unique.len() - 1
        });
        owner[i] = slot;
    }
    let pts: Vec<&Vector> = unique.iter().map(|&i| &points[i]).collect();
    let scale = pts.iter().map(|p| p.norm_squared()).fold(0.0, f64::max);
    let start = (0..pts.len())
        .min_by(|&a, &b| pts[a].norm_squared().total_cmp(&pts[b].norm_squared()))
        .unwrap_or(0);

    let mut corral = vec![start];
    let mut lam = vec![1.0];
    let mut x = pts[start].clone();
    let mut gap = 0.0;
    if scale > 0.0 {
        for _ in 0..MAX_MAJOR {
            let (j, best) = (0..pts.len())
                .map(|j| (j, dot(pts[j], &x)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap_or((start, 0.0));
            gap = x.norm_squared() - best;
            if gap <= tol * scale || corral.contains(&j) {
                break;
            }
            corral.push(j);
            lam.push(0.0);
            loop {
                let Some(alpha) = affine_minimizer(&pts, &corral) else {
                    corral.pop();
                    lam.pop();
                    break;
                };
                if alpha.iter().all(|&a| a > 0.0) {
                    lam = alpha;
                    break;
                }
                let mut theta = 1.0;
                let mut drop = 0;
                for (i, (&l, &a)) in lam.iter().zip(&alpha).enumerate() {
                    if a <= 0.0 && l - a > 0.0 {
                        let t = l / (l - a);
                        if t < theta {
                            theta = t;
                            drop = i;
                        }
                    }
                }
                for (l, a) in lam.iter_mut().zip(&alpha) {
                    *l = (1.0 - theta) * *l + theta * a;
                }
                lam[drop] = 0.0;
                let keep: Vec<bool> = lam.iter().map(|&l| l > 0.0).collect();
                let mut it = keep.iter();
                corral.retain(|_| *it.next().unwrap());
                lam.retain(|&l| l > 0.0);
                if corral.is_empty() {
                    corral.push(start);
                    lam.push(1.0);
                    break;
                }
            }
            let total: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|l| *l /= total);
            let next = combine(&pts, &corral, &lam, dim);
            if next.norm_squared() > x.norm_squared() {
                break;
            }
            x = next;
        }
    }

    let mut local = vec![0.0; pts.len()];
    for (&c, &l) in corral.iter().zip(&lam) {
        local[c] = l;
    }
    // Weight of each unique point goes to its first occurrence.
    let mut weights = vec![0.0; points.len()];
    for (slot, &i) in unique.iter().enumerate() {
        weights[i] = local[slot];
    }
    let _ = owner;
    let mut min_norm_point = Vector::zeros(dim);
    for (p, &w) in points.iter().zip(&weights) {
        if w > 0.0 {
            min_norm_point.axpy(w, p);
        }
    }
    let min_norm = min_norm_point.norm();
    Ok(HullEstimate {
        points: points.to_vec(),
        weights,
        min_norm_point,
        min_norm,
        gap: gap.max(0.0),
        sample_count: points.len(),
    })
}

fn combine(pts: &[&Vector], corral: &[usize], lam: &[f64], dim: usize) -> Vector {
    let mut x = Vector::zeros(dim);
    for (&c, &l) in corral.iter().zip(lam) {
        x.axpy(l, pts[c]);
    }
    x
}

/// Minimizer of `|sum a_i p_i|` over the affine hull of the corral.
fn affine_minimizer(pts: &[&Vector], corral: &[usize]) -> Option<Vec<f64>> {
    let k = corral.len();
    let mut m = DMatrix::<f64>::zeros(k + 1, k + 1);
    for (r, &i) in corral.iter().enumerate() {
        for (c, &j) in corral.iter().enumerate() {
            m[(r, c)] = dot(pts[i], pts[j]);
        }
        m[(r, k)] = 1.0;
        m[(k, r)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = m.lu().solve(&rhs)?;
    let alpha: Vec<f64> = sol.iter().take(k).copied().collect();
    let sum: f64 = alpha.iter().sum();
    (alpha.iter().all(|a| a.is_finite()) && (sum - 1.0).abs() < 1e-6).then_some(alpha)
}

/// Minimal norm over the hull of `h_anchor` gradients at `n_samples`
/// uniform points of `B(anchor, delta)`. The sampled hull lies inside the
/// Goldstein subdifferential, so the result bounds the true distance from above.
pub fn goldstein_estimate(
    anchor: &Vector,
    problem: &ProblemSpec,
    delta: f64,
    n_samples: usize,
    seed: u64,
) -> Result<HullEstimate> {
    if n_samples == 0 {
        return Err(Error::usage("goldstein_estimate needs at least one sample"));
    }
    if !(delta > 0.0) {
        return Err(Error::usage("delta must be positive"));
    }
    let mut sub = Subproblem::new(problem, anchor)?;
    let mut rng = rng_from_seed(seed);
    let mut points = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let z = uniform_in_ball(&mut rng, anchor, delta);
        points.push(sub.subgradient(&z, Query::Gradient)?.vector);
    }
    min_norm_over_hull(&points, HULL_TOL)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum GcqOutcome {
    /// No sampled combination fell below `b`. Sampling cannot prove this.
    HoldsEmpirically { near_active: Vec<usize>, min_norm: Option<f64> },
    Violated { near_active: Vec<usize>, witness: HullEstimate },
}

impl GcqOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, GcqOutcome::HoldsEmpirically { .. })
    }
}

/// Empirical `(a, b, c)` constraint qualification at a feasible anchor.
///
/// Constraints with `g_i(x) >= -c` are near-active. Their gradients at
/// `n_samples` points of `B(x, a)` each are pooled; a hull point of norm
/// below `b` is a violation witness.
pub fn check_gcq(
    anchor: &Vector,
    problem: &ProblemSpec,
    a: f64,
    b: f64,
    c: f64,
    n_samples: usize,
    seed: u64,
) -> Result<GcqOutcome> {
    let values = problem.reduced().values(anchor)?;
    if values.iter().any(|&v| v > 0.0) {
        return Err(Error::usage("GCQ is checked at feasible points only"));
    }
    let near_active: Vec<usize> = values.iter().enumerate().filter(|(_, &v)| v >= -c).map(|(i, _)| i + 1).collect();
    if near_active.is_empty() {
        return Ok(GcqOutcome::HoldsEmpirically { near_active, min_norm: None });
    }
    let mut rng = rng_from_seed(seed);
    let mut points = Vec::with_capacity(near_active.len() * n_samples.max(1));
    for &i in &near_active {
        let g = &problem.constraints[i - 1];
        for _ in 0..n_samples.max(1) {
            let z = uniform_in_ball(&mut rng, anchor, a);
            points.push(finite_vector(g.gradient(&z), &z)?);
        }
    }
    let hull = min_norm_over_hull(&points, HULL_TOL)?;
    if hull.min_norm < b {
        Ok(GcqOutcome::Violated { near_active, witness: hull })
    } else {
        Ok(GcqOutcome::HoldsEmpirically { near_active, min_norm: Some(hull.min_norm) })
    }
}

/// Certificate checks, in the order they run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Structure,
    WeightSimplex,
    BallMembership,
    AnchorFeasible,
    VectorReplay,
    ZetaRecompute,
    ZetaNorm,
    Multipliers,
    Slackness,
    KktBounds,
}

impl CheckKind {
    pub const ALL: [CheckKind; 10] = [
        CheckKind::Structure,
        CheckKind::WeightSimplex,
        CheckKind::BallMembership,
        CheckKind::AnchorFeasible,
        CheckKind::VectorReplay,
        CheckKind::ZetaRecompute,
        CheckKind::ZetaNorm,
        CheckKind::Multipliers,
        CheckKind::Slackness,
        CheckKind::KktBounds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Structure => "structure",
            CheckKind::WeightSimplex => "weight_simplex",
            CheckKind::BallMembership => "ball_membership",
            CheckKind::AnchorFeasible => "anchor_feasible",
            CheckKind::VectorReplay => "vector_replay",
            CheckKind::ZetaRecompute => "zeta_recompute",
            CheckKind::ZetaNorm => "zeta_norm",
            CheckKind::Multipliers => "multipliers",
            CheckKind::Slackness => "slackness",
            CheckKind::KktBounds => "kkt_bounds",
        }
    }

    /// Failures meaning the stored data disagrees with the oracles, as
    /// opposed to a well-formed certificate that does not certify.
    pub fn is_corruption(self) -> bool {
        matches!(self, CheckKind::Structure | CheckKind::VectorReplay)
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: CheckKind,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub samples: usize,
    pub min_norm: f64,
    /// `min_norm / eps_effective`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    /// First failing check, if any.
    pub failure: Option<CheckKind>,
    /// Advisory sampled estimate; never affects `failure`.
    pub estimate: Option<EstimateSummary>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub n_samples: usize,
    pub seed: u64,
    pub run_estimate: bool,
    /// `eps~` the run was configured with, if known independently.
    pub expected_eps: Option<f64>,
    pub expected_delta: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { n_samples: 10_000, seed: 0, run_estimate: true, expected_eps: None, expected_delta: None }
    }
}

const WEIGHT_TOL: f64 = 1e-12;
const BALL_SLACK: f64 = 1e-12;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

struct Checks {
    items: Vec<CheckResult>,
}

impl Checks {
    fn record(&mut self, check: CheckKind, passed: bool, detail: impl Into<String>) -> bool {
        let detail = if passed { String::new() } else { detail.into() };
        self.items.push(CheckResult { check, passed, detail });
        passed
    }
}

/// Replays a certificate against the problem oracles.
///
/// Checks run in [`CheckKind::ALL`] order. A structural failure stops the
/// run; all other checks run regardless so the report is complete.
pub fn check_certificate(
    cert: &GoldsteinCertificate,
    problem: &ProblemSpec,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    let mut checks = Checks { items: Vec::new() };
    let m = problem.lipschitz_m;
    let delta = cert.delta;
    let anchor = &cert.anchor;

    let structure = structure_problems(cert, problem, opts);
    if !checks.record(CheckKind::Structure, structure.is_empty(), structure.join("; ")) {
        return Ok(finish(checks, None));
    }

    let sum: f64 = cert.combination.iter().map(|w| w.weight).sum();
    let negative = cert.combination.iter().position(|w| !(w.weight >= 0.0));
    checks.record(
        CheckKind::WeightSimplex,
        negative.is_none() && (sum - 1.0).abs() <= WEIGHT_TOL,
        match negative {
            Some(i) => format!("weight {i} is {}", cert.combination[i].weight),
            None => format!("weights sum to {sum}"),
        },
    );

    let radius = delta * (1.0 + BALL_SLACK);
    let outside = cert.combination.iter().enumerate().find(|(_, w)| !(w.point.distance(anchor) <= radius));
    checks.record(
        CheckKind::BallMembership,
        outside.is_none(),
        outside
            .map(|(i, w)| format!("point {i} lies {} from the anchor, delta = {delta}", w.point.distance(anchor)))
            .unwrap_or_default(),
    );

    let g_anchor = problem.reduced().value(anchor)?.value;
    checks.record(CheckKind::AnchorFeasible, g_anchor <= 0.0, format!("g(anchor) = {g_anchor}"));

    let mut sub = Subproblem::new(problem, anchor)?;
    let mut mismatch = None;
    for (i, w) in cert.combination.iter().enumerate() {
        let query = match (cert.oracle_mode, &w.direction) {
            (OracleMode::AlmostEverywhereGradient, _) => Query::Gradient,
            (OracleMode::DirectionalSubgradient, Some(v)) => Query::Directional(v),
            (OracleMode::DirectionalSubgradient, None) => {
                mismatch = Some(format!("term {i} has no query direction"));
                break;
            }
        };
        let eval = sub.subgradient(&w.point, query)?;
        if eval.vector != w.vector || eval.branch != w.branch {
            mismatch = Some(format!(
                "term {i}: stored {:?} ({:?}), oracle gives {:?} ({:?})",
                w.vector, w.branch, eval.vector, eval.branch
            ));
            break;
        }
    }
    checks.record(CheckKind::VectorReplay, mismatch.is_none(), mismatch.unwrap_or_default());

    let zeta = recompute_zeta(&cert.combination).unwrap_or_else(|| Vector::zeros(problem.dim));
    let zeta_err = zeta.distance(&cert.zeta);
    let norm_err = (cert.zeta_norm - cert.zeta.norm()).abs();
    checks.record(
        CheckKind::ZetaRecompute,
        zeta_err <= 1e-9 * m && norm_err <= 1e-9 * m,
        format!("recomputed zeta differs by {zeta_err}, stored norm by {norm_err}"),
    );

    let eps_ok = opts.expected_eps.is_none_or(|e| rel_close(e, cert.eps_effective, 1e-12));
    checks.record(
        CheckKind::ZetaNorm,
        zeta.norm() <= cert.eps_effective && eps_ok,
        format!("|zeta| = {} against eps = {}", zeta.norm(), cert.eps_effective),
    );

    let gamma0: f64 = cert.combination.iter().filter(|w| w.branch.is_objective()).map(|w| w.weight).sum();
    let gamma: f64 = cert.combination.iter().filter(|w| !w.branch.is_objective()).map(|w| w.weight).sum();
    let lambda_ok = match cert.lambda {
        Some(l) => gamma0 > 0.0 && rel_close(l, cert.gamma / cert.gamma0, 1e-12) && l >= 0.0,
        None => gamma0 == 0.0 || cert.gamma0 == 0.0,
    };
    checks.record(
        CheckKind::Multipliers,
        (gamma0 - cert.gamma0).abs() <= WEIGHT_TOL
            && (gamma - cert.gamma).abs() <= WEIGHT_TOL
            && (cert.gamma0 + cert.gamma - 1.0).abs() <= WEIGHT_TOL
            && lambda_ok,
        format!(
            "gamma0 = {} (recomputed {gamma0}), gamma = {} (recomputed {gamma}), lambda = {:?}",
            cert.gamma0, cert.gamma, cert.lambda
        ),
    );

    let fj = bounds::fj_eta(m, delta);
    let mut max_g = 0.0f64;
    if gamma > 0.0 {
        let reduced = problem.reduced();
        let mut rng = rng_from_seed(opts.seed);
        for _ in 0..opts.n_samples {
            let z = uniform_in_ball(&mut rng, anchor, delta);
            max_g = max_g.max(reduced.value(&z)?.value.abs());
        }
    }
    let max_gamma_g = gamma.max(0.0) * max_g;
    checks.record(
        CheckKind::Slackness,
        rel_close(cert.fj_eta_bound, fj, 1e-12) && max_gamma_g <= fj + CS_TOLERANCE,
        format!("sampled |gamma g| = {max_gamma_g} against 3 M delta = {fj} (stored {})", cert.fj_eta_bound),
    );

    let kkt = kkt_problems(cert, m, delta, max_g);
    checks.record(CheckKind::KktBounds, kkt.is_empty(), kkt.join("; "));

    let estimate = if opts.run_estimate && opts.n_samples > 0 {
        let est = goldstein_estimate(anchor, problem, delta, opts.n_samples, opts.seed)?;
        Some(EstimateSummary {
            samples: est.sample_count,
            min_norm: est.min_norm,
            ratio: est.min_norm / cert.eps_effective,
        })
    } else {
        None
    };
    Ok(finish(checks, estimate))
}

fn finish(checks: Checks, estimate: Option<EstimateSummary>) -> VerifyReport {
    let failure = checks.items.iter().find(|c| !c.passed).map(|c| c.check);
    VerifyReport { checks: checks.items, failure, estimate }
}

fn structure_problems(cert: &GoldsteinCertificate, problem: &ProblemSpec, opts: &VerifyOptions) -> Vec<String> {
    let n = problem.dim;
    let mut out = Vec::new();
    if cert.anchor.len() != n || !cert.anchor.is_finite() {
        out.push("anchor has the wrong length or non-finite entries".to_string());
    }
    if cert.zeta.len() != n || !cert.zeta.is_finite() {
        out.push("zeta has the wrong length or non-finite entries".to_string());
    }
    if cert.combination.is_empty() {
        out.push("empty combination".to_string());
    }
    for (i, w) in cert.combination.iter().enumerate() {
        if w.point.len() != n || w.vector.len() != n || !w.point.is_finite() || !w.vector.is_finite() {
            out.push(format!("term {i} has malformed vectors"));
        }
        if w.direction.as_ref().is_some_and(|d| d.len() != n || !d.is_finite()) {
            out.push(format!("term {i} has a malformed direction"));
        }
        if let crate::problem::BranchTag::Constraint(j) = w.branch {
            if j == 0 || j > problem.constraints.len() {
                out.push(format!("term {i} names constraint {j}"));
            }
        }
    }
    if !(cert.delta > 0.0 && cert.delta < problem.neighborhood_delta) {
        out.push(format!("delta = {} outside (0, {})", cert.delta, problem.neighborhood_delta));
    }
    if opts.expected_delta.is_some_and(|d| d != cert.delta) {
        out.push(format!("delta = {} but the run used {:?}", cert.delta, opts.expected_delta));
    }
    if cert.lipschitz_m != problem.lipschitz_m {
        out.push(format!("M = {} but the problem has {}", cert.lipschitz_m, problem.lipschitz_m));
    }
    out
}

fn kkt_problems(cert: &GoldsteinCertificate, m: f64, delta: f64, max_g: f64) -> Vec<String> {
    let mut out = Vec::new();
    let any = cert.kkt_eps.is_some() || cert.kkt_eta.is_some() || cert.lambda_bound.is_some();
    if !any {
        return out;
    }
    let Some(sigma) = cert.gcq_sigma else {
        out.push("KKT residuals without a GCQ constant".to_string());
        return out;
    };
    let e = cert.eps_effective;
    let expect = [
        ("kkt_eps", cert.kkt_eps, bounds::kkt_eps(e, sigma, m)),
        ("kkt_eta", cert.kkt_eta, bounds::kkt_eta(e, sigma, m, delta)),
        ("lambda_bound", cert.lambda_bound, bounds::multiplier_bound(e, sigma, m)),
    ];
    for (name, stored, want) in expect {
        match (stored, want) {
            (Some(s), Some(w)) if rel_close(s, w, 1e-12) => {}
            _ => out.push(format!("{name} = {stored:?}, expected {want:?}")),
        }
    }
    if let (Some(l), Some(b)) = (cert.lambda, cert.lambda_bound) {
        if !(l <= b) {
            out.push(format!("lambda = {l} exceeds its bound {b}"));
        }
        if let Some(eta) = cert.kkt_eta {
            if !(l * max_g <= eta + CS_TOLERANCE) {
                out.push(format!("sampled |lambda g| = {} exceeds {eta}", l * max_g));
            }
        }
    }
    out
}
