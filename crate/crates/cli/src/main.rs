use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use breg_core::diagnostics::{
    check_dual_membership, check_gradients, check_lc_sampled, check_subgradient_bound,
    check_surrogate_descent, check_three_point, check_trace_inequalities, CheckReport,
};
use breg_core::problems::{oracle_elastic_net_bp, ProblemInstance, ORACLE_MAX_DIM};
use breg_core::solver::{descent_rho, run, run_with_history, RunOutput, SolverConfig, TraceRecord};
use breg_core::{BregError, Vector};

mod config;

use config::{FamilyName, MuScheduleName, RunConfig, TraceFormat};

const ORACLE_TOL: f64 = 1e-6;
const SAMPLED_CHECK_COUNT: usize = 1000;
const GRADIENT_CHECK_COUNT: usize = 200;
const GRADIENT_CHECK_TOL: f64 = 1e-6;
const CHECK_SEED: u64 = 0xc4ec;
const TRAJECTORY_RADIUS: f64 = 1e8;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input, or an unwritable output path.
    Input(String),
    /// Parameters rejected before iterating, or an unsupported request.
    Validation(String),
    /// Numerical breakdown during the run.
    Divergence(String),
    CheckFailed(String),
    OracleMismatch(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::CheckFailed(_) => 4,
            CliError::OracleMismatch(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m)
            | CliError::Validation(m)
            | CliError::Divergence(m)
            | CliError::CheckFailed(m)
            | CliError::OracleMismatch(m) => m,
        }
    }
}

impl From<BregError> for CliError {
    fn from(e: BregError) -> Self {
        match e {
            BregError::Config(_) | BregError::UnsupportedPair(_) => {
                CliError::Validation(e.to_string())
            }
            BregError::Divergence { .. } | BregError::Overflow(_) | BregError::Invariant { .. } => {
                CliError::Divergence(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

/// Linearized Bregman iterations: solve, verify and compare against an oracle.
#[derive(Debug, Parser)]
#[command(name = "breg", version)]
struct Cli {
    /// Suppress progress lines on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the solver and write the trace.
    Solve { config: PathBuf },
    /// Run the solver and verify the descent inequalities and sampled bounds.
    Check {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Corrupt the recorded trace before checking it.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Compare the solver's limit with the brute-force KKT oracle.
    OracleCompare { config: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    All,
    Trace,
    Sampled,
}

struct Progress {
    quiet: bool,
}

impl Progress {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let progress = Progress { quiet: cli.quiet };
    let result = match &cli.command {
        Command::Solve { config } => cmd_solve(config, &progress),
        Command::Check {
            config,
            suite,
            inject_fault,
        } => cmd_check(config, *suite, *inject_fault, &progress),
        Command::OracleCompare { config } => cmd_oracle_compare(config, &progress),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn describe(cfg: &RunConfig) -> String {
    let p = &cfg.problem;
    format!(
        "{:?} seed={} m={} n={} k={}",
        p.family, p.seed, p.m, p.n_or_d, p.k
    )
}

fn fmt_float(v: f64) -> String {
    format!("{v:?}")
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn write_trace(out: &mut impl Write, trace: &[TraceRecord]) -> std::io::Result<()> {
    writeln!(out, "{}", TraceRecord::FIELDS.join(","))?;
    for rec in trace {
        let mut line = rec.k.to_string();
        for v in rec.values() {
            line.push(',');
            line.push_str(&fmt_float(v));
        }
        writeln!(out, "{line}")?;
    }
    out.flush()
}

fn write_vector(out: &mut impl Write, x: &Vector) -> std::io::Result<()> {
    writeln!(out, "x")?;
    for v in x.iter() {
        writeln!(out, "{}", fmt_float(*v))?;
    }
    out.flush()
}

/// `trace.csv` → `trace_final_x.csv`, next to the trace.
fn final_x_path(trace_path: &Path) -> PathBuf {
    let stem = trace_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".into());
    trace_path.with_file_name(format!("{stem}_final_x.csv"))
}

#[derive(Serialize)]
struct SolveSummary {
    stop_reason: breg_core::solver::StopReason,
    iters: usize,
    final_f_beta: f64,
    final_residual: f64,
    final_x_path: Option<PathBuf>,
}

fn solve(
    cfg: &RunConfig,
    inst: &ProblemInstance,
    history: bool,
) -> Result<(SolverConfig, RunOutput), CliError> {
    let solver_cfg = cfg.solver_config(inst)?;
    let out = if history {
        run_with_history(&solver_cfg, &inst.model)?
    } else {
        run(&solver_cfg, &inst.model)?
    };
    Ok((solver_cfg, out))
}

fn cmd_solve(path: &Path, progress: &Progress) -> Result<(), CliError> {
    let cfg = RunConfig::load(path)?;
    let inst = cfg.instance()?;
    // Open outputs first so an unwritable path fails before any work.
    let trace_path = cfg.output.trace_path.clone();
    let mut trace_file = trace_path.as_deref().map(create).transpose()?;
    let x_path = trace_path.as_deref().map(final_x_path);
    let mut x_file = x_path.as_deref().map(create).transpose()?;

    progress.say(format!("solving {}", describe(&cfg)));
    let (_, out) = solve(&cfg, &inst, false)?;
    progress.say(format!(
        "{:?} after {} iterations",
        out.stop_reason,
        out.iterations()
    ));

    let io_err = |p: &Option<PathBuf>, e: std::io::Error| {
        CliError::Input(format!(
            "cannot write {}: {e}",
            p.as_deref().unwrap_or(Path::new("-")).display()
        ))
    };
    if let Some(f) = trace_file.as_mut() {
        match cfg.output.format {
            TraceFormat::Csv => write_trace(f, &out.trace).map_err(|e| io_err(&trace_path, e))?,
        }
    }
    if let Some(f) = x_file.as_mut() {
        write_vector(f, &out.final_state.x).map_err(|e| io_err(&x_path, e))?;
    }
    let summary = SolveSummary {
        stop_reason: out.stop_reason,
        iters: out.iterations(),
        final_f_beta: out.final_state.f_beta,
        final_residual: inst.model.energy.residual(&out.final_state.x),
        final_x_path: x_path,
    };
    println!(
        "{}",
        serde_json::to_string(&summary).expect("summary serializes")
    );
    Ok(())
}

fn emit(report: &CheckReport) {
    println!(
        "{}",
        serde_json::to_string(report).expect("report serializes")
    );
}

fn unbounded_report(err: &BregError) -> CheckReport {
    let iter = match err {
        BregError::UnboundedTrajectory { iter, .. } => Some(*iter),
        _ => None,
    };
    CheckReport {
        name: "subgradient_bound".into(),
        samples_or_iters: 0,
        max_violation: f64::INFINITY,
        tolerance: breg_core::diagnostics::SUBGRADIENT_BOUND_TOL,
        passed: false,
        first_failure: iter,
    }
}

fn trace_reports(
    cfg: &RunConfig,
    inst: &ProblemInstance,
    inject_fault: bool,
    progress: &Progress,
) -> Result<Vec<CheckReport>, CliError> {
    progress.say(format!("solving {}", describe(cfg)));
    let (solver_cfg, mut out) = solve(cfg, inst, true)?;
    progress.say(format!(
        "{:?} after {} iterations",
        out.stop_reason,
        out.iterations()
    ));
    if inject_fault {
        let k = 3.min(out.trace.len().saturating_sub(1));
        if let Some(rec) = out.trace.get_mut(k) {
            rec.f_beta += 1.0 + rec.f_beta.abs();
        }
    }
    let model = &inst.model;
    let l = model.energy.smoothness_constant(&model.kernel)?.value;
    let rho = descent_rho(l, model.kernel.symmetry_coefficient(), solver_cfg.omega);
    let mu = solver_cfg.schedule.mu.base();
    let beta = solver_cfg.beta;
    let mut reports = vec![check_trace_inequalities(
        &out.trace,
        Some(out.final_state.f_beta),
        rho,
        mu,
    )];
    reports.push(check_surrogate_descent(&out.history, model, beta, mu, rho)?);
    reports.push(
        match check_subgradient_bound(
            &out.history,
            model,
            beta,
            &solver_cfg.schedule,
            TRAJECTORY_RADIUS,
            CHECK_SEED,
        ) {
            Ok(rep) => rep,
            Err(e @ BregError::UnboundedTrajectory { .. }) => unbounded_report(&e),
            Err(e) => return Err(e.into()),
        },
    );
    reports.push(check_dual_membership(&out.history, &model.regularizer));
    Ok(reports)
}

fn sampled_reports(inst: &ProblemInstance) -> Result<Vec<CheckReport>, CliError> {
    let model = &inst.model;
    let l = model.energy.smoothness_constant(&model.kernel)?.value;
    Ok(vec![
        check_three_point(&model.kernel, SAMPLED_CHECK_COUNT, CHECK_SEED)?,
        check_lc_sampled(
            &model.energy,
            &model.kernel,
            l,
            SAMPLED_CHECK_COUNT,
            CHECK_SEED,
        )?,
        check_gradients(model, GRADIENT_CHECK_COUNT, CHECK_SEED, GRADIENT_CHECK_TOL)?,
    ])
}

fn cmd_check(
    path: &Path,
    suite: Suite,
    inject_fault: bool,
    progress: &Progress,
) -> Result<(), CliError> {
    let cfg = RunConfig::load(path)?;
    let inst = cfg.instance()?;
    let mut reports = Vec::new();
    if matches!(suite, Suite::All | Suite::Trace) {
        reports.extend(trace_reports(&cfg, &inst, inject_fault, progress)?);
    }
    if matches!(suite, Suite::All | Suite::Sampled) {
        reports.extend(sampled_reports(&inst)?);
    }
    for r in &reports {
        emit(r);
    }
    match reports.iter().find(|r| !r.passed) {
        Some(r) => Err(CliError::CheckFailed(format!(
            "check {} failed (max violation {:e}, tolerance {:e})",
            r.name, r.max_violation, r.tolerance
        ))),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct OracleSummary {
    max_abs_error: f64,
    tolerance: f64,
    iters: usize,
    kkt_residual: f64,
}

fn cmd_oracle_compare(path: &Path, progress: &Progress) -> Result<(), CliError> {
    let cfg = RunConfig::load(path)?;
    if cfg.problem.family != FamilyName::SparseLinear {
        return Err(CliError::Validation(format!(
            "oracle comparison needs family sparse_linear, got {:?}",
            cfg.problem.family
        )));
    }
    if cfg.problem.n_or_d > ORACLE_MAX_DIM {
        return Err(CliError::Validation(format!(
            "oracle enumerates at most n = {ORACLE_MAX_DIM}, got {}",
            cfg.problem.n_or_d
        )));
    }
    if cfg.solver.beta != 0.0 || cfg.solver.mu_schedule != MuScheduleName::Constant {
        return Err(CliError::Validation(
            "oracle comparison needs beta = 0 and a constant mu schedule".into(),
        ));
    }
    let inst = cfg.instance()?;
    progress.say(format!("solving {}", describe(&cfg)));
    let (solver_cfg, out) = solve(&cfg, &inst, false)?;
    let a = inst.model.energy.matrix().expect("linear family");
    let oracle = oracle_elastic_net_bp(
        a,
        inst.model.energy.data(),
        cfg.solver.mu,
        solver_cfg.schedule.delta,
    )
    .map_err(|e| CliError::OracleMismatch(format!("oracle failed: {e}")))?;
    let err = (&out.final_state.x - &oracle.x).amax();
    println!(
        "{}",
        serde_json::to_string(&OracleSummary {
            max_abs_error: err,
            tolerance: ORACLE_TOL,
            iters: out.iterations(),
            kkt_residual: oracle.kkt_residual,
        })
        .expect("summary serializes")
    );
    if err <= ORACLE_TOL {
        Ok(())
    } else {
        Err(CliError::OracleMismatch(format!(
            "|x_final - x_oracle|_inf = {err:e} exceeds {ORACLE_TOL:e}"
        )))
    }
}
