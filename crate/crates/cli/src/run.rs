//! `solve` and `verify` commands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use goldstein_core::verify::{check_certificate, VerifyOptions, VerifyReport};
use goldstein_core::{solve, Solution, SolveTrace};

use crate::artifacts::{
    read_json, write_json, CertificateFile, RunManifest, TraceFile, CERTIFICATE_FILE, CERTIFICATE_SCHEMA,
    MANIFEST_FILE, MANIFEST_SCHEMA, TRACE_FILE, TRACE_SCHEMA, VERSION,
};
use crate::config::{resolve_sigma, RunConfig};
use crate::exit::{CliError, CliResult, ExitCode};

/// Result of a `solve` run after its files are written.
#[derive(Debug)]
pub struct SolveOutcome {
    pub code: ExitCode,
    pub message: String,
    pub solution: Option<Solution>,
    pub trace: SolveTrace,
    pub files: Vec<PathBuf>,
}

/// Solves and writes `trace.json`, `manifest.json` and, on success,
/// `certificate.json` into `out_dir`.
pub fn cmd_solve(mut cfg: RunConfig, out_dir: &Path) -> CliResult<SolveOutcome> {
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let record = cfg.problem.load()?;
    resolve_sigma(&mut cfg, &record)?;
    std::fs::create_dir_all(out_dir)?;

    let (code, message, solution, trace) = match solve(&record.spec, &cfg.solver, cfg.x0.as_ref()) {
        Ok(sol) => {
            let c = &sol.certificate;
            let msg = format!(
                "stationary after {} outer iterations: |zeta| = {:.3e} <= {:.3e}, lambda = {}, {} oracle calls",
                sol.trace.outer_iterations,
                c.zeta_norm,
                c.eps_effective,
                c.lambda.map_or("undefined".to_string(), |l| format!("{l:.6}")),
                sol.trace.total_oracle_calls,
            );
            let trace = sol.trace.clone();
            (ExitCode::Ok, msg, Some(sol), trace)
        }
        Err(e) => (ExitCode::from(&e.error), e.to_string(), None, e.trace),
    };

    let mut files = Vec::new();
    if let Some(sol) = &solution {
        let path = out_dir.join(CERTIFICATE_FILE);
        write_json(
            &path,
            &CertificateFile {
                schema: CERTIFICATE_SCHEMA.into(),
                version: VERSION.into(),
                run: cfg.clone(),
                certificate: sol.certificate.clone(),
            },
        )?;
        files.push(path);
    }
    let trace_path = out_dir.join(TRACE_FILE);
    write_json(
        &trace_path,
        &TraceFile {
            schema: TRACE_SCHEMA.into(),
            version: VERSION.into(),
            run: cfg.clone(),
            outcome: code,
            error: (code != ExitCode::Ok).then(|| message.clone()),
            trace: trace.clone(),
        },
    )?;
    files.push(trace_path);

    let manifest_path = out_dir.join(MANIFEST_FILE);
    let names: Vec<String> = files
        .iter()
        .chain(std::iter::once(&manifest_path))
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    write_json(
        &manifest_path,
        &RunManifest {
            schema: MANIFEST_SCHEMA.into(),
            version: VERSION.into(),
            seed: cfg.solver.seed,
            run: cfg,
            started_at: started.to_rfc3339(),
            finished_at: chrono::Utc::now().to_rfc3339(),
            wall_time_s: clock.elapsed().as_secs_f64(),
            outcome: code,
            exit_code: code.code(),
            files: names,
        },
    )?;
    files.push(manifest_path);
    Ok(SolveOutcome { code, message, solution, trace, files })
}

#[derive(Debug)]
pub struct VerifyOutcome {
    pub code: ExitCode,
    pub report: VerifyReport,
}

/// Verifies a certificate file against the oracles of the problem it names.
pub fn cmd_verify(path: &Path, n_samples: usize, seed: u64, run_estimate: bool) -> CliResult<VerifyOutcome> {
    let file: CertificateFile = read_json(path, ExitCode::CertificateCorrupt)?;
    verify_certificate(&file, n_samples, seed, run_estimate)
}

pub fn verify_certificate(
    file: &CertificateFile,
    n_samples: usize,
    seed: u64,
    run_estimate: bool,
) -> CliResult<VerifyOutcome> {
    let record = file.run.problem.load()?;
    let spec = &record.spec;
    let opts = VerifyOptions {
        n_samples,
        seed,
        run_estimate,
        expected_eps: Some(file.run.solver.eps_tilde(spec.lipschitz_m)),
        expected_delta: Some(file.run.solver.delta),
    };
    let report = check_certificate(&file.certificate, spec, &opts).map_err(|e| match e {
        goldstein_core::Error::Oracle { .. } => CliError::new(ExitCode::CertificateCorrupt, e.to_string()),
        other => CliError::from(other),
    })?;
    let code = match report.failure {
        None => ExitCode::Ok,
        Some(kind) if kind.is_corruption() => ExitCode::CertificateCorrupt,
        Some(_) => ExitCode::VerifyFailed,
    };
    Ok(VerifyOutcome { code, report })
}

/// Human-readable lines for a verify report.
pub fn format_report(report: &VerifyReport) -> Vec<String> {
    let mut out: Vec<String> = report
        .checks
        .iter()
        .map(|c| {
            if c.passed {
                format!("pass  {}", c.check)
            } else {
                format!("FAIL  {}: {}", c.check, c.detail)
            }
        })
        .collect();
    if let Some(e) = &report.estimate {
        out.push(format!(
            "info  sampled estimate over {} points: {:.4e} ({:.3} x eps)",
            e.samples, e.min_norm, e.ratio
        ));
    }
    out
}
