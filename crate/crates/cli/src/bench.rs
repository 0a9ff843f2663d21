//! `bench`: runs a matrix of problems, inner searches, seeds and
//! `(delta, eps)` pairs, and reports observed counts against the bounds.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use goldstein_core::{solve, InnerKind, SolverConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{to_json, write_atomic, write_json};
use crate::config::{resolve_sigma, ProblemRef, RunConfig};
use crate::exit::{CliError, CliResult, ExitCode};

fn default_inners() -> Vec<InnerKind> {
    vec![InnerKind::Rand, InnerKind::Bisect]
}
fn default_seeds() -> u64 {
    1
}
fn default_tau() -> f64 {
    0.1
}
fn default_outer_cap() -> usize {
    100_000
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    pub delta: f64,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    pub problems: Vec<ProblemRef>,
    #[serde(default = "default_inners")]
    pub inners: Vec<InnerKind>,
    /// Seeds `first_seed .. first_seed + seeds`.
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default)]
    pub first_seed: u64,
    pub grid: Vec<GridPoint>,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub kkt: bool,
    #[serde(default = "default_outer_cap")]
    pub outer_cap: usize,
    /// Complementary-slackness samples per certificate.
    #[serde(default)]
    pub cs_samples: usize,
}

impl SuiteSpec {
    pub fn validate(&self) -> CliResult<()> {
        if self.problems.is_empty() || self.inners.is_empty() || self.grid.is_empty() || self.seeds == 0 {
            return Err(CliError::usage("suite needs at least one problem, inner search, seed and grid point"));
        }
        for p in &self.problems {
            p.load()?;
        }
        Ok(())
    }

    fn cells(&self) -> Vec<(usize, RunConfig)> {
        let mut out = Vec::new();
        for p in &self.problems {
            for &inner in &self.inners {
                for g in &self.grid {
                    for seed in self.first_seed..self.first_seed + self.seeds {
                        let mut solver = SolverConfig::new(g.delta, g.eps, inner).with_seed(seed);
                        solver.tau = self.tau;
                        solver.kkt_mode = self.kkt;
                        solver.outer_cap = self.outer_cap;
                        solver.cs_samples = self.cs_samples;
                        out.push((out.len(), RunConfig { problem: p.clone(), solver, x0: None }));
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub id: String,
    pub problem: ProblemRef,
    pub inner: InnerKind,
    pub seed: u64,
    pub delta: f64,
    pub eps: f64,
    /// Unset when the problem failed to load.
    pub eps_tilde: Option<f64>,
    pub outcome: ExitCode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub outer_iterations: usize,
    pub total_oracle_calls: u64,
    pub outer_bound: Option<u64>,
    /// Observed outer iterations over the outer-iteration bound.
    pub outer_ratio: Option<f64>,
    pub total_call_budget: Option<u64>,
    /// Observed oracle calls over the whole-run budget.
    pub budget_ratio: Option<f64>,
    pub inner_call_budget: Option<u64>,
    pub invocations: usize,
    pub invocations_over_budget: usize,
    pub max_inner_calls: u64,
    pub final_f: Option<f64>,
    pub final_zeta_norm: Option<f64>,
    pub lambda: Option<f64>,
}

/// Per-iteration `(k, f, g, zeta_norm, oracle_calls)`.
type Series = Vec<(usize, f64, f64, f64, u64)>;

fn run_cell(index: usize, mut cfg: RunConfig) -> (CellResult, Series) {
    let id = format!(
        "{:05}-{}-{}-d{}-e{}-s{}",
        index,
        cfg.problem.name,
        cfg.solver.inner.name(),
        cfg.solver.delta,
        cfg.solver.target_eps,
        cfg.solver.seed
    );
    let mut cell = CellResult {
        id,
        problem: cfg.problem.clone(),
        inner: cfg.solver.inner,
        seed: cfg.solver.seed,
        delta: cfg.solver.delta,
        eps: cfg.solver.target_eps,
        eps_tilde: None,
        outcome: ExitCode::Ok,
        error: None,
        outer_iterations: 0,
        total_oracle_calls: 0,
        outer_bound: None,
        outer_ratio: None,
        total_call_budget: None,
        budget_ratio: None,
        inner_call_budget: None,
        invocations: 0,
        invocations_over_budget: 0,
        max_inner_calls: 0,
        final_f: None,
        final_zeta_norm: None,
        lambda: None,
    };
    let record = match cfg.problem.load().and_then(|r| resolve_sigma(&mut cfg, &r).map(|_| r)) {
        Ok(r) => r,
        Err(e) => {
            cell.outcome = e.code;
            cell.error = Some(e.message);
            return (cell, Vec::new());
        }
    };
    cell.eps_tilde = Some(cfg.solver.eps_tilde(record.spec.lipschitz_m));
    let (trace, cert) = match solve(&record.spec, &cfg.solver, None) {
        Ok(sol) => (sol.trace, Some(sol.certificate)),
        Err(e) => {
            cell.outcome = ExitCode::from(&e.error);
            cell.error = Some(e.error.to_string());
            (e.trace, None)
        }
    };
    cell.outer_iterations = trace.outer_iterations;
    cell.total_oracle_calls = trace.total_oracle_calls;
    cell.outer_bound = trace.outer_bound;
    cell.outer_ratio = trace.outer_bound.map(|b| trace.outer_iterations as f64 / b.max(1) as f64);
    cell.total_call_budget = trace.total_call_budget;
    cell.budget_ratio = trace.total_call_budget.map(|b| trace.total_oracle_calls as f64 / b.max(1) as f64);
    cell.inner_call_budget = trace.inner_call_budget;
    cell.invocations = trace.records.len();
    cell.max_inner_calls = trace.records.iter().map(|r| r.oracle_calls).max().unwrap_or(0);
    if let Some(b) = trace.inner_call_budget {
        cell.invocations_over_budget = trace.records.iter().filter(|r| r.oracle_calls > b).count();
    }
    if let Some(c) = cert {
        cell.final_f = Some(c.objective_value);
        cell.final_zeta_norm = Some(c.zeta_norm);
        cell.lambda = c.lambda;
    }
    let series = trace.records.iter().map(|r| (r.k, r.f, r.g, r.zeta_norm, r.oracle_calls)).collect();
    (cell, series)
}

/// Aggregate over the seeds of one `(problem, inner, delta, eps)` group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub problem: String,
    pub inner: InnerKind,
    pub delta: f64,
    pub eps: f64,
    pub cells: usize,
    pub failures: usize,
    pub max_outer_ratio: Option<f64>,
    pub max_budget_ratio: Option<f64>,
    pub mean_calls: f64,
    pub calls_std: f64,
    /// Fraction of cells with any inner invocation over its per-call budget.
    pub cells_over_budget: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub cells: Vec<CellResult>,
    pub groups: Vec<GroupSummary>,
    pub wall_time_s: f64,
}

fn summarize(cells: &[CellResult]) -> Vec<GroupSummary> {
    let mut groups: Vec<GroupSummary> = Vec::new();
    let mut members: Vec<Vec<&CellResult>> = Vec::new();
    for c in cells {
        let key = |g: &GroupSummary| {
            g.problem == label(&c.problem) && g.inner == c.inner && g.delta == c.delta && g.eps == c.eps
        };
        match groups.iter().position(key) {
            Some(i) => members[i].push(c),
            None => {
                groups.push(GroupSummary {
                    problem: label(&c.problem),
                    inner: c.inner,
                    delta: c.delta,
                    eps: c.eps,
                    cells: 0,
                    failures: 0,
                    max_outer_ratio: None,
                    max_budget_ratio: None,
                    mean_calls: 0.0,
                    calls_std: 0.0,
                    cells_over_budget: 0.0,
                });
                members.push(vec![c]);
            }
        }
    }
    for (g, ms) in groups.iter_mut().zip(&members) {
        let n = ms.len() as f64;
        g.cells = ms.len();
        g.failures = ms.iter().filter(|c| c.outcome != ExitCode::Ok).count();
        g.max_outer_ratio = ms.iter().filter_map(|c| c.outer_ratio).reduce(f64::max);
        g.max_budget_ratio = ms.iter().filter_map(|c| c.budget_ratio).reduce(f64::max);
        g.mean_calls = ms.iter().map(|c| c.total_oracle_calls as f64).sum::<f64>() / n;
        let var = ms.iter().map(|c| (c.total_oracle_calls as f64 - g.mean_calls).powi(2)).sum::<f64>() / n;
        g.calls_std = var.sqrt();
        g.cells_over_budget = ms.iter().filter(|c| c.invocations_over_budget > 0).count() as f64 / n;
    }
    groups
}

fn label(p: &ProblemRef) -> String {
    let mut s = p.name.clone();
    if let Some(d) = p.dim {
        let _ = write!(s, "[n={d}]");
    }
    if let Some(k) = p.scale {
        let _ = write!(s, "[s={k}]");
    }
    s
}

fn opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4}"))
}

pub fn format_table(groups: &[GroupSummary]) -> String {
    let mut s = format!(
        "{:<36} {:<6} {:>6} {:>6} {:>5} {:>5} {:>9} {:>9} {:>12} {:>10} {:>8}\n",
        "problem", "inner", "delta", "eps", "cells", "fail", "outer/bd", "calls/bd", "mean calls", "std", "over/bd"
    );
    for g in groups {
        let _ = writeln!(
            s,
            "{:<36} {:<6} {:>6} {:>6} {:>5} {:>5} {:>9} {:>9} {:>12.1} {:>10.1} {:>8.3}",
            g.problem,
            g.inner.name(),
            g.delta,
            g.eps,
            g.cells,
            g.failures,
            opt(g.max_outer_ratio),
            opt(g.max_budget_ratio),
            g.mean_calls,
            g.calls_std,
            g.cells_over_budget
        );
    }
    s
}

/// Runs the suite, writing per-cell JSON and series CSV files, then
/// `cells.json`, `summary.csv` and `table.txt` under `out_dir`.
pub fn cmd_bench(suite: &SuiteSpec, out_dir: &Path) -> CliResult<BenchReport> {
    suite.validate()?;
    let clock = Instant::now();
    let cells_dir = out_dir.join("cells");
    let series_dir = out_dir.join("series");
    std::fs::create_dir_all(&cells_dir)?;
    std::fs::create_dir_all(&series_dir)?;

    let results: Vec<CliResult<CellResult>> = suite
        .cells()
        .into_par_iter()
        .map(|(i, cfg)| {
            let (cell, series) = run_cell(i, cfg);
            write_json(&cells_dir.join(format!("{}.json", cell.id)), &cell)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["k", "f", "g", "zeta_norm", "oracle_calls"]).map_err(csv_err)?;
            for (k, f, g, z, c) in series {
                w.serialize((k, f, g, z, c)).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::new(ExitCode::Internal, e.to_string()))?;
            write_atomic(&series_dir.join(format!("{}.csv", cell.id)), &bytes)?;
            Ok(cell)
        })
        .collect();
    let cells = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    let groups = summarize(&cells);

    let mut w = csv::Writer::from_writer(Vec::new());
    for g in &groups {
        w.serialize(g).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::new(ExitCode::Internal, e.to_string()))?;
    write_atomic(&out_dir.join("summary.csv"), &bytes)?;
    write_atomic(&out_dir.join("table.txt"), format_table(&groups).as_bytes())?;
    let report = BenchReport { cells, groups, wall_time_s: clock.elapsed().as_secs_f64() };
    write_atomic(&out_dir.join("cells.json"), to_json(&report.cells)?.as_bytes())?;
    Ok(report)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::new(ExitCode::Internal, format!("csv: {e}"))
}
