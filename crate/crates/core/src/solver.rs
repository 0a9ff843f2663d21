//! Outer loop, multiplier extraction and certificate assembly.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bounds::{self, InnerKind};
use crate::error::{Error, Result};
use crate::inner::{bisect_search, rand_search, recompute_zeta, InnerOutcome, InnerParams, InnerResult, WeightedSubgradient};
use crate::problem::{OracleMode, ProblemSpec};
use crate::sampling::{rng_from_seed, uniform_in_ball};
use crate::subproblem::Subproblem;
use crate::vector::Vector;

/// ChaCha stream used for complementary-slackness samples, kept apart from
/// the stream the inner searches draw from.
const CS_STREAM: u64 = 1;

fn default_tau() -> f64 {
    0.1
}
fn default_outer_cap() -> usize {
    100_000
}
fn default_cs_samples() -> usize {
    10_000
}
fn default_inner() -> InnerKind {
    InnerKind::Rand
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub delta: f64,
    /// `eps` of the Fritz-John target; in KKT mode the final KKT residual.
    pub target_eps: f64,
    #[serde(default)]
    pub kkt_mode: bool,
    /// Constraint-qualification constant `sigma`, required in KKT mode.
    #[serde(default)]
    pub gcq_sigma: Option<f64>,
    /// Total failure probability of the randomized inner search.
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_inner")]
    pub inner: InnerKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_outer_cap")]
    pub outer_cap: usize,
    /// Hard cap per inner invocation; defaults to four times the per-call budget.
    #[serde(default)]
    pub inner_call_cap: Option<u64>,
    /// Ball samples for the complementary-slackness check.
    #[serde(default = "default_cs_samples")]
    pub cs_samples: usize,
}

impl SolverConfig {
    pub fn new(delta: f64, target_eps: f64, inner: InnerKind) -> Self {
        Self {
            delta,
            target_eps,
            kkt_mode: false,
            gcq_sigma: None,
            tau: default_tau(),
            inner,
            seed: 0,
            outer_cap: default_outer_cap(),
            inner_call_cap: None,
            cs_samples: default_cs_samples(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_kkt(mut self, sigma: f64) -> Self {
        self.kkt_mode = true;
        self.gcq_sigma = Some(sigma);
        self
    }

    pub fn validate(&self, problem: &ProblemSpec) -> Result<()> {
        let big_delta = problem.neighborhood_delta;
        if !(self.delta > 0.0 && self.delta < big_delta) {
            return Err(Error::usage(format!("delta must lie in (0, {big_delta}), got {}", self.delta)));
        }
        if !(self.target_eps > 0.0 && self.target_eps.is_finite()) {
            return Err(Error::usage("target_eps must be positive"));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::usage("tau must lie in [0, 1)"));
        }
        if self.outer_cap == 0 {
            return Err(Error::usage("outer_cap must be positive"));
        }
        if self.inner_call_cap == Some(0) {
            return Err(Error::usage("inner_call_cap must be positive"));
        }
        if self.kkt_mode {
            match self.gcq_sigma {
                Some(s) if s > 0.0 && s.is_finite() => {}
                Some(_) => return Err(Error::usage("gcq_sigma must be positive")),
                None => return Err(Error::usage("kkt_mode requires gcq_sigma")),
            }
        }
        Ok(())
    }

    /// The stationarity target handed to the inner search.
    pub fn eps_tilde(&self, lipschitz_m: f64) -> f64 {
        match (self.kkt_mode, self.gcq_sigma) {
            (true, Some(sigma)) => bounds::kkt_eps_tilde(sigma, self.target_eps, lipschitz_m),
            _ => self.target_eps,
        }
    }

    pub fn oracle_mode(&self) -> OracleMode {
        match self.inner {
            InnerKind::Rand => OracleMode::AlmostEverywhereGradient,
            InnerKind::Bisect => OracleMode::DirectionalSubgradient,
        }
    }
}

/// Objective and constraint weight mass of a combination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub gamma0: f64,
    pub gamma: f64,
    /// `gamma / gamma0`; `None` when `gamma0 = 0`.
    pub lambda: Option<f64>,
}

pub fn extract_multiplier(combination: &[WeightedSubgradient]) -> Multipliers {
    let gamma0: f64 = combination.iter().filter(|w| w.branch.is_objective()).map(|w| w.weight).sum();
    // Summed directly: `1 - gamma0` can round below zero.
    let gamma: f64 = combination.iter().filter(|w| !w.branch.is_objective()).map(|w| w.weight).sum();
    let lambda = if gamma0 > 0.0 {
        Some(if gamma == 0.0 { 0.0 } else { gamma / gamma0 })
    } else {
        None
    };
    Multipliers { gamma0, gamma, lambda }
}

/// Sampled complementary-slackness residuals over `B(x, delta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlacknessCheck {
    pub samples: usize,
    pub seed: u64,
    /// `max |gamma g(z)|` over the samples.
    pub max_gamma_g: f64,
    /// `max |lambda g(z)|` when the multiplier is defined.
    pub max_lambda_g: Option<f64>,
    /// `max |gamma g_i(z)|` per constraint, informational.
    pub per_constraint: Vec<f64>,
    pub bound: f64,
    pub passed: bool,
}

/// Absolute slack on the sampled `3 M delta` check.
pub const CS_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldsteinCertificate {
    pub anchor: Vector,
    pub zeta: Vector,
    pub zeta_norm: f64,
    pub combination: Vec<WeightedSubgradient>,
    pub gamma0: f64,
    pub gamma: f64,
    pub lambda: Option<f64>,
    pub eps_effective: f64,
    pub fj_eta_bound: f64,
    pub kkt_eps: Option<f64>,
    pub kkt_eta: Option<f64>,
    /// `(sigma + M)/(sigma - eps~) - 1` in KKT mode.
    pub lambda_bound: Option<f64>,
    pub gcq_sigma: Option<f64>,
    pub delta: f64,
    pub lipschitz_m: f64,
    pub oracle_mode: OracleMode,
    pub objective_value: f64,
    pub constraint_value: f64,
    pub constraint_values: Vec<f64>,
    pub slackness: SlacknessCheck,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Builds a certificate for a feasible anchor and a combination whose
/// weighted sum has norm at most `eps~`.
pub fn certify(
    anchor: &Vector,
    combination: &[WeightedSubgradient],
    problem: &ProblemSpec,
    config: &SolverConfig,
) -> Result<GoldsteinCertificate> {
    let m = problem.lipschitz_m;
    let delta = config.delta;
    let eps_tilde = config.eps_tilde(m);
    let reduced = problem.reduced();
    let constraint_values = reduced.values(anchor)?;
    let g_anchor = reduced.value(anchor)?.value;
    if g_anchor > 0.0 {
        return Err(Error::Internal(format!("certified anchor is infeasible: g = {g_anchor}")));
    }
    let zeta = recompute_zeta(combination).ok_or_else(|| Error::Internal("empty combination".into()))?;
    let zeta_norm = zeta.norm();
    if !(zeta_norm <= eps_tilde) {
        return Err(Error::Internal(format!("combination norm {zeta_norm} exceeds {eps_tilde}")));
    }

    let mult = extract_multiplier(combination);
    let mut warnings = Vec::new();
    let mut lambda = mult.lambda;
    let (mut kkt_eps, mut kkt_eta, mut lambda_bound) = (None, None, None);
    if config.kkt_mode {
        let sigma = config.gcq_sigma.ok_or_else(|| Error::usage("kkt_mode requires gcq_sigma"))?;
        if mult.gamma0 > 0.0 {
            kkt_eps = bounds::kkt_eps(eps_tilde, sigma, m);
            kkt_eta = bounds::kkt_eta(eps_tilde, sigma, m, delta);
            lambda_bound = bounds::multiplier_bound(eps_tilde, sigma, m);
        } else {
            warnings.push(
                "objective weight is zero: the constraint qualification fails here, returning a Fritz-John certificate"
                    .to_string(),
            );
            lambda = None;
        }
    }

    let fj_eta_bound = bounds::fj_eta(m, delta);
    let slackness = slackness_check(anchor, problem, delta, mult.gamma, lambda, fj_eta_bound, config)?;
    if !slackness.passed {
        warnings.push(format!(
            "sampled |gamma g| = {} exceeds 3 M delta = {fj_eta_bound}: Lipschitz metadata is understated",
            slackness.max_gamma_g
        ));
    }

    Ok(GoldsteinCertificate {
        anchor: anchor.clone(),
        zeta,
        zeta_norm,
        combination: combination.to_vec(),
        gamma0: mult.gamma0,
        gamma: mult.gamma,
        lambda,
        eps_effective: eps_tilde,
        fj_eta_bound,
        kkt_eps,
        kkt_eta,
        lambda_bound,
        gcq_sigma: if config.kkt_mode { config.gcq_sigma } else { None },
        delta,
        lipschitz_m: m,
        oracle_mode: config.oracle_mode(),
        objective_value: problem.objective_value(anchor)?,
        constraint_value: g_anchor,
        constraint_values,
        slackness,
        warnings,
    })
}

/// `max |gamma g(z)|`, `max |lambda g(z)|` and per-constraint maxima over
/// uniform samples of `B(anchor, delta)`.
pub fn slackness_check(
    anchor: &Vector,
    problem: &ProblemSpec,
    delta: f64,
    gamma: f64,
    lambda: Option<f64>,
    bound: f64,
    config: &SolverConfig,
) -> Result<SlacknessCheck> {
    let reduced = problem.reduced();
    let mut per_constraint = vec![0.0f64; reduced.len()];
    let mut max_g = 0.0f64;
    if gamma > 0.0 {
        let mut rng = rng_from_seed(config.seed);
        rng.set_stream(CS_STREAM);
        for _ in 0..config.cs_samples {
            let z = uniform_in_ball(&mut rng, anchor, delta);
            let values = reduced.values(&z)?;
            let mut top = f64::NEG_INFINITY;
            for (slot, v) in per_constraint.iter_mut().zip(&values) {
                *slot = slot.max((gamma * v).abs());
                top = top.max(*v);
            }
            max_g = max_g.max(top.abs());
        }
    }
    let max_gamma_g = gamma * max_g;
    Ok(SlacknessCheck {
        samples: config.cs_samples,
        seed: config.seed,
        max_gamma_g,
        max_lambda_g: lambda.map(|l| l * max_g),
        per_constraint,
        bound,
        passed: max_gamma_g <= bound + CS_TOLERANCE,
    })
}

/// One outer iteration as recorded in the trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub k: usize,
    pub x: Vector,
    pub f: f64,
    pub g: f64,
    pub zeta_norm: f64,
    pub inner_outcome: InnerOutcome,
    pub oracle_calls: u64,
    pub value_evals: u64,
    pub inner_iterations: usize,
    /// `h(x_k) - h(x_{k+1})` on descent steps.
    pub descent_amount: Option<f64>,
}

/// Per-run record of the outer loop. Oracle calls count subgradient
/// evaluations of `h`; value-only evaluations are counted separately.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub records: Vec<OuterRecord>,
    pub outer_iterations: usize,
    pub total_oracle_calls: u64,
    pub total_value_evals: u64,
    pub eps_tilde: f64,
    pub descent_constant: f64,
    pub inner_call_cap: u64,
    /// Per-call failure probability (randomized search).
    pub tau_prime: Option<f64>,
    /// Per-call oracle budget, when computable.
    pub inner_call_budget: Option<u64>,
    pub outer_bound: Option<u64>,
    pub total_call_budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SolveTrace {
    fn push(&mut self, record: OuterRecord) {
        self.total_oracle_calls += record.oracle_calls;
        self.total_value_evals += record.value_evals;
        self.records.push(record);
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub certificate: GoldsteinCertificate,
    pub trace: SolveTrace,
}

/// A failed solve with the trace up to the failure.
#[derive(Debug)]
pub struct SolveError {
    pub error: Error,
    pub trace: SolveTrace,
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} outer iterations)", self.error, self.trace.outer_iterations)
    }
}

impl std::error::Error for SolveError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<Error> for SolveError {
    fn from(error: Error) -> Self {
        SolveError { error, trace: SolveTrace::default() }
    }
}

/// Budgets and caps derived from problem metadata before the first step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunBudgets {
    pub eps_tilde: f64,
    pub tau_prime: Option<f64>,
    pub inner_call_budget: Option<u64>,
    pub inner_call_cap: u64,
    pub outer_bound: Option<u64>,
    pub total_call_budget: Option<u64>,
}

pub fn run_budgets(problem: &ProblemSpec, config: &SolverConfig, f0: f64) -> RunBudgets {
    let m = problem.lipschitz_m;
    let delta = config.delta;
    let eps = config.eps_tilde(m);
    let c = config.inner.descent_constant();
    let outer_bound = problem.p_star.map(|p| bounds::outer_iteration_bound(f0, p, c, delta, eps));
    let (tau_prime, budget, total) = match config.inner {
        InnerKind::Rand => {
            let t = bounds::per_call_tau(config.tau, f0, problem.p_star, delta, eps, config.outer_cap);
            let total = problem.p_star.map(|p| bounds::rand_total_budget(f0 - p, m, delta, eps, config.tau));
            (Some(t), Some(bounds::rand_call_budget(m, eps, t)), total)
        }
        InnerKind::Bisect => {
            let lam = problem.nonconvexity();
            let budget = lam.map(|l| bounds::bisect_call_budget(m, eps, l));
            let total = match (problem.p_star, lam) {
                (Some(p), Some(l)) => Some(bounds::bisect_total_budget(f0 - p, m, delta, eps, l)),
                _ => None,
            };
            (None, budget, total)
        }
    };
    // Without a known modulus the bisection cap falls back to the budget at
    // Lambda = M.
    let reference = budget.unwrap_or_else(|| bounds::bisect_call_budget(m, eps, m));
    let inner_call_cap = config.inner_call_cap.unwrap_or_else(|| reference.saturating_mul(4));
    RunBudgets {
        eps_tilde: eps,
        tau_prime,
        inner_call_budget: budget,
        inner_call_cap,
        outer_bound,
        total_call_budget: total,
    }
}

/// Runs the outer loop from `x0` (or the problem's initial point) until the
/// inner search reports `|zeta| <= eps~`.
// The error carries the partial trace on purpose.
#[allow(clippy::result_large_err)]
pub fn solve(
    problem: &ProblemSpec,
    config: &SolverConfig,
    x0: Option<&Vector>,
) -> std::result::Result<Solution, SolveError> {
    problem.validate()?;
    config.validate(problem)?;
    let x0 = x0.unwrap_or(&problem.initial_point);
    if x0.len() != problem.dim {
        return Err(Error::usage(format!("x0 has length {}, problem dimension is {}", x0.len(), problem.dim)).into());
    }
    if !x0.is_finite() {
        return Err(Error::usage("x0 has non-finite entries").into());
    }
    let g0 = problem.reduced().value(x0)?.value;
    if g0 > 0.0 {
        return Err(Error::InfeasibleStart(g0).into());
    }
    let f0 = problem.objective_value(x0)?;
    let budgets = run_budgets(problem, config, f0);
    let mut trace = SolveTrace {
        eps_tilde: budgets.eps_tilde,
        descent_constant: config.inner.descent_constant(),
        inner_call_cap: budgets.inner_call_cap,
        tau_prime: budgets.tau_prime,
        inner_call_budget: budgets.inner_call_budget,
        outer_bound: budgets.outer_bound,
        total_call_budget: budgets.total_call_budget,
        ..SolveTrace::default()
    };
    if config.inner == InnerKind::Bisect && problem.nonconvexity().is_none() {
        trace.warnings.push("nonconvexity modulus unknown: bisection budget not checked".into());
    }
    let params = InnerParams {
        delta: config.delta,
        eps: budgets.eps_tilde,
        lipschitz_m: problem.lipschitz_m,
        call_cap: budgets.inner_call_cap,
    };

    let mut rng = rng_from_seed(config.seed);
    let mut x = x0.clone();
    let mut f = f0;
    let mut step_direction: Option<Vector> = None;
    for k in 0.. {
        let g = match problem.reduced().value(&x) {
            Ok(v) => v.value,
            Err(error) => return Err(SolveError { error, trace }),
        };
        if k >= config.outer_cap {
            return Err(SolveError { error: Error::OuterBudgetExceeded { cap: config.outer_cap }, trace });
        }
        let mut sub = Subproblem::with_objective_value(problem, &x, f);
        let run = match config.inner {
            InnerKind::Rand => rand_search(&mut sub, &params, &mut rng),
            InnerKind::Bisect => bisect_search(&mut sub, &params, step_direction.as_deref()),
        };
        let result: InnerResult = match run {
            Ok(r) => r,
            Err(error) => {
                if let Error::InnerBudgetExceeded { partial, .. } = &error {
                    trace.push(record(k, &x, f, g, partial));
                }
                return Err(SolveError { error, trace });
            }
        };
        trace.push(record(k, &x, f, g, &result));
        match result.outcome {
            InnerOutcome::Stationary => {
                trace.outer_iterations = k;
                return match certify(&x, &result.combination, problem, config) {
                    Ok(certificate) => {
                        trace.warnings.extend(certificate.warnings.iter().cloned());
                        Ok(Solution { certificate, trace })
                    }
                    Err(error) => Err(SolveError { error, trace }),
                };
            }
            InnerOutcome::Descent => {
                let Some(next) = result.descent_point else {
                    return Err(SolveError { error: Error::Internal("descent without a point".into()), trace });
                };
                step_direction = next.sub(&x).normalized();
                x = next;
                f = match problem.objective_value(&x) {
                    Ok(v) => v,
                    Err(error) => return Err(SolveError { error, trace }),
                };
                trace.outer_iterations = k + 1;
            }
            InnerOutcome::Exhausted => {
                return Err(SolveError { error: Error::Internal("inner search returned a partial state".into()), trace })
            }
        }
    }
    unreachable!()
}

fn record(k: usize, x: &Vector, f: f64, g: f64, result: &InnerResult) -> OuterRecord {
    OuterRecord {
        k,
        x: x.clone(),
        f,
        g,
        zeta_norm: result.zeta.norm(),
        inner_outcome: result.outcome,
        oracle_calls: result.oracle_calls,
        value_evals: result.value_evals,
        inner_iterations: result.iterations,
        descent_amount: result.descent_amount,
    }
}
