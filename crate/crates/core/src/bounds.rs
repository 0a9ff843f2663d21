//! Closed-form iteration, oracle-call and residual bounds.

use crate::error::{Error, Result};

/// Inner-loop variant, which fixes the guaranteed descent constant `C`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerKind {
    Rand,
    Bisect,
}

impl InnerKind {
    /// `C` in `h(x) - h(x - delta zhat) >= C delta eps`.
    pub fn descent_constant(self) -> f64 {
        match self {
            InnerKind::Rand => 0.25,
            InnerKind::Bisect => 1.0 / 3.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InnerKind::Rand => "rand",
            InnerKind::Bisect => "bisect",
        }
    }
}

impl std::str::FromStr for InnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rand" => Ok(InnerKind::Rand),
            "bisect" => Ok(InnerKind::Bisect),
            _ => Err(Error::usage(format!("unknown inner search {s:?} (expected rand or bisect)"))),
        }
    }
}

fn ceil_u64(x: f64) -> u64 {
    if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        x.ceil().max(0.0) as u64
    }
}

/// `ceil((f0 - p*) / (C delta eps))`.
pub fn outer_iteration_bound(f0: f64, p_star: f64, c: f64, delta: f64, eps: f64) -> u64 {
    ceil_u64((f0 - p_star) / (c * delta * eps))
}

/// Per-call failure probability for the randomized search.
///
/// With `p*` known the union bound runs over `ceil(4 (f0 - p*) / (delta eps))`
/// outer iterations; otherwise over `outer_cap`.
pub fn per_call_tau(tau: f64, f0: f64, p_star: Option<f64>, delta: f64, eps: f64, outer_cap: usize) -> f64 {
    let calls = match p_star {
        Some(p) => ceil_u64(4.0 * (f0 - p) / (delta * eps)).max(1) as f64,
        None => outer_cap.max(1) as f64,
    };
    tau / calls
}

/// `ceil(64 M^2 / eps^2) ceil(2 ln(1/tau'))`.
pub fn rand_call_budget(lipschitz_m: f64, eps: f64, tau_prime: f64) -> u64 {
    let per = ceil_u64(64.0 * lipschitz_m * lipschitz_m / (eps * eps));
    let rounds = ceil_u64(2.0 * (1.0 / tau_prime).ln()).max(1);
    per.saturating_mul(rounds)
}

/// `ceil(16 M^2 / eps^2) (1 + floor(12 Lambda / eps))`.
pub fn bisect_call_budget(lipschitz_m: f64, eps: f64, nonconvexity: f64) -> u64 {
    let per = ceil_u64(16.0 * lipschitz_m * lipschitz_m / (eps * eps));
    let factor = 1 + (12.0 * nonconvexity / eps).floor().max(0.0) as u64;
    per.saturating_mul(factor)
}

/// Total oracle-call bound for a whole randomized solve,
/// `ceil(4 gap/(delta eps)) ceil(64 M^2/eps^2) ceil(2 ln(4 gap/(tau delta eps)))`.
pub fn rand_total_budget(gap: f64, lipschitz_m: f64, delta: f64, eps: f64, tau: f64) -> u64 {
    let outer = ceil_u64(4.0 * gap / (delta * eps));
    let per = ceil_u64(64.0 * lipschitz_m * lipschitz_m / (eps * eps));
    let rounds = ceil_u64(2.0 * (4.0 * gap / (tau * delta * eps)).ln()).max(1);
    outer.saturating_mul(per).saturating_mul(rounds)
}

/// Total oracle-call bound for a whole deterministic solve,
/// `ceil(3 gap/(delta eps)) ceil(16 M^2/eps^2) (1 + floor(12 Lambda/eps))`.
pub fn bisect_total_budget(gap: f64, lipschitz_m: f64, delta: f64, eps: f64, nonconvexity: f64) -> u64 {
    ceil_u64(3.0 * gap / (delta * eps)).saturating_mul(bisect_call_budget(lipschitz_m, eps, nonconvexity))
}

/// Complementary-slackness bound `3 M delta` of a Fritz-John certificate.
pub fn fj_eta(lipschitz_m: f64, delta: f64) -> f64 {
    3.0 * lipschitz_m * delta
}

/// Stationarity target `sigma eps / (eps + sigma + M)` that yields an
/// `eps`-KKT point under a `sigma` constraint qualification.
pub fn kkt_eps_tilde(sigma: f64, eps: f64, lipschitz_m: f64) -> f64 {
    sigma * eps / (eps + sigma + lipschitz_m)
}

/// `eps~ (sigma + M) / (sigma - eps~)`; requires `eps~ < sigma`.
pub fn kkt_eps(eps_tilde: f64, sigma: f64, lipschitz_m: f64) -> Option<f64> {
    (eps_tilde < sigma).then(|| eps_tilde * (sigma + lipschitz_m) / (sigma - eps_tilde))
}

/// `3 M delta (sigma + M) / (sigma - eps~)`.
pub fn kkt_eta(eps_tilde: f64, sigma: f64, lipschitz_m: f64, delta: f64) -> Option<f64> {
    (eps_tilde < sigma).then(|| fj_eta(lipschitz_m, delta) * (sigma + lipschitz_m) / (sigma - eps_tilde))
}

/// Upper bound `(sigma + M) / (sigma - eps~) - 1` on the extracted multiplier.
pub fn multiplier_bound(eps_tilde: f64, sigma: f64, lipschitz_m: f64) -> Option<f64> {
    (eps_tilde < sigma).then(|| (sigma + lipschitz_m) / (sigma - eps_tilde) - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outer_bound_example() {
        assert_eq!(outer_iteration_bound(1.0, 0.0, 0.25, 0.1, 0.1), 400);
        assert_eq!(outer_iteration_bound(1.0, 0.0, 1.0 / 3.0, 0.1, 0.1), 300);
    }

    #[test]
    fn kkt_arithmetic() {
        let et = kkt_eps_tilde(0.5, 0.1, 1.0);
        assert!((et - 0.03125).abs() < 1e-15);
        assert!((kkt_eps(et, 0.5, 1.0).unwrap() - 0.1).abs() < 1e-15);
        // eta identity: 3 M delta (eps + sigma + M) / sigma
        let eta = kkt_eta(et, 0.5, 1.0, 0.1).unwrap();
        assert!((eta - 0.3 * 1.6 / 0.5).abs() < 1e-12);
        assert!((fj_eta(1.0, 0.1) - 0.3).abs() < 1e-15);
        assert_eq!(kkt_eps(0.6, 0.5, 1.0), None);
    }

    #[test]
    fn multiplier_bound_matches_ratio_form() {
        // (sigma + M)/(sigma - e) - 1 = (M + e)/(sigma - e)
        let b = multiplier_bound(0.1, 0.5, 1.0).unwrap();
        assert!((b - 1.1 / 0.4).abs() < 1e-12);
    }

    #[test]
    fn call_budgets() {
        assert_eq!(bisect_call_budget(1.0, 0.5, 0.0), 64);
        assert_eq!(bisect_call_budget(1.0, 0.5, 0.1), 64 * 3);
        // tau' = 0.1: ceil(2 ln 10) = 5
        assert_eq!(rand_call_budget(1.0, 1.0, 0.1), 64 * 5);
        let t = per_call_tau(0.1, 1.0, Some(0.0), 0.1, 0.1, 10);
        assert!((t - 0.1 / 400.0).abs() < 1e-18);
        assert_eq!(per_call_tau(0.1, 1.0, None, 0.1, 0.1, 10), 0.01);
    }

    #[test]
    fn totals_are_products_of_per_call_counts() {
        let gap = 1.0;
        let t = per_call_tau(0.1, gap, Some(0.0), 0.1, 0.1, 1);
        assert_eq!(rand_total_budget(gap, 1.0, 0.1, 0.1, 0.1), 400 * rand_call_budget(1.0, 0.1, t));
        assert_eq!(bisect_total_budget(gap, 1.0, 0.1, 0.1, 0.0), 300 * 1600);
    }
}
