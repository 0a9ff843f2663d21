//! Run configuration files and command-line overrides.

use std::path::Path;

use clap::Args;
use goldstein_core::{get_problem, InnerKind, ProblemParams, ProblemRecord, SolverConfig, Vector};
use serde::{Deserialize, Serialize};

use crate::exit::{CliError, CliResult};

/// A corpus problem by name and constructor arguments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemRef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl ProblemRef {
    pub fn new(name: &str) -> Self {
        Self { name: name.to_string(), dim: None, scale: None }
    }

    pub fn params(&self) -> ProblemParams {
        ProblemParams { dim: self.dim, scale: self.scale }
    }

    pub fn load(&self) -> CliResult<ProblemRecord> {
        Ok(get_problem(&self.name, &self.params())?)
    }
}

/// Everything needed to reproduce a solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemRef,
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vector>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
    }
}

#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    /// Corpus problem name.
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Objective scale factor.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Stationarity target (the final KKT residual in KKT mode).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Inner search: rand or bisect.
    #[arg(long)]
    pub inner: Option<InnerKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// KKT mode. Without --sigma the problem's closed-form GCQ constant is used.
    #[arg(long)]
    pub kkt: bool,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub outer_cap: Option<usize>,
    #[arg(long)]
    pub inner_call_cap: Option<u64>,
    #[arg(long)]
    pub cs_samples: Option<usize>,
    /// Starting point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
}

impl Overrides {
    /// Merges overrides into an optional base config.
    pub fn apply(&self, base: Option<RunConfig>) -> CliResult<RunConfig> {
        let mut cfg = match base {
            Some(c) => c,
            None => {
                let name = self.problem.as_deref().ok_or_else(|| CliError::usage("no config file and no --problem"))?;
                let (Some(delta), Some(eps)) = (self.delta, self.eps) else {
                    return Err(CliError::usage("without a config file both --delta and --eps are required"));
                };
                RunConfig {
                    problem: ProblemRef::new(name),
                    solver: SolverConfig::new(delta, eps, self.inner.unwrap_or(InnerKind::Rand)),
                    x0: None,
                }
            }
        };
        if let Some(p) = &self.problem {
            cfg.problem.name = p.clone();
        }
        set(&mut cfg.problem.dim, self.dim.map(Some));
        set(&mut cfg.problem.scale, self.scale.map(Some));
        let s = &mut cfg.solver;
        set(&mut s.delta, self.delta);
        set(&mut s.target_eps, self.eps);
        set(&mut s.inner, self.inner);
        set(&mut s.seed, self.seed);
        set(&mut s.tau, self.tau);
        set(&mut s.outer_cap, self.outer_cap);
        set(&mut s.inner_call_cap, self.inner_call_cap.map(Some));
        set(&mut s.cs_samples, self.cs_samples);
        if self.kkt {
            s.kkt_mode = true;
        }
        set(&mut s.gcq_sigma, self.sigma.map(Some));
        if let Some(x) = &self.x0 {
            cfg.x0 = Some(Vector::new(x.clone()));
        }
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Fills a missing KKT-mode `sigma` from the problem's closed form.
pub fn resolve_sigma(cfg: &mut RunConfig, record: &ProblemRecord) -> CliResult<()> {
    let s = &mut cfg.solver;
    if s.kkt_mode && s.gcq_sigma.is_none() {
        match record.gcq_sigma(s.delta) {
            Some(sigma) if sigma.is_finite() => s.gcq_sigma = Some(sigma),
            _ => {
                return Err(CliError::usage(format!(
                    "{} has no finite closed-form GCQ constant at delta = {}; pass --sigma",
                    record.name, s.delta
                )))
            }
        }
    }
    Ok(())
}
