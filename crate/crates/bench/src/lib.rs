//! Fixed workloads shared by the criterion benchmarks in `benches/`.

use goldstein_core::sampling::{rng_from_seed, uniform_in_ball};
use goldstein_core::{get_problem, InnerKind, ProblemParams, ProblemRecord, SolverConfig, Vector};

/// Problems and dimensions timed by the solver benchmarks.
pub const CASES: [(&str, usize); 4] = [("ball-linear", 2), ("ball-linear", 10), ("l1-ball", 10), ("linf-nonconvex", 10)];

pub fn problem(name: &str, dim: usize) -> ProblemRecord {
    get_problem(name, &ProblemParams::dim(dim)).expect("corpus problem")
}

pub fn config(inner: InnerKind) -> SolverConfig {
    let mut c = SolverConfig::new(0.05, 0.05, inner);
    // Slackness sampling is timed separately from the solve.
    c.cs_samples = 0;
    c
}

/// `count` seeded points in a ball of radius `radius` around the origin.
pub fn cloud(dim: usize, count: usize, radius: f64, seed: u64) -> Vec<Vector> {
    let mut rng = rng_from_seed(seed);
    let origin = Vector::zeros(dim);
    (0..count).map(|_| uniform_in_ball(&mut rng, &origin, radius).add_scaled(1.0, &Vector::basis(dim, 0))).collect()
}
