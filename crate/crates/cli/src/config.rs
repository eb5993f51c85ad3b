//! Run configuration file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use breg_core::problems::{gen_nonneg_linear, gen_quadratic, gen_sparse_linear, ProblemInstance};
use breg_core::solver::{default_delta, default_omega, Schedule, SolverConfig};

use crate::CliError;

pub const SEED_OVERRIDE_VAR: &str = "BREG_SEED_OVERRIDE";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    SparseLinear,
    NonnegLinear,
    Quadratic,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub family: FamilyName,
    pub seed: u64,
    pub m: usize,
    pub n_or_d: usize,
    pub k: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    Value(f64),
    Keyword(DeltaKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaKeyword {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuScheduleName {
    #[default]
    Constant,
    Decaying,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub beta: f64,
    /// Defaults to `(1 + α)/2`.
    pub omega: Option<f64>,
    #[serde(default = "auto_delta")]
    pub delta: DeltaSpec,
    pub mu: f64,
    #[serde(default)]
    pub mu_schedule: MuScheduleName,
    pub max_iters: usize,
    #[serde(default = "default_tol_step")]
    pub tol_step: f64,
    #[serde(default = "default_tol_residual")]
    pub tol_residual: f64,
}

fn auto_delta() -> DeltaSpec {
    DeltaSpec::Keyword(DeltaKeyword::Auto)
}

fn default_tol_step() -> f64 {
    1e-14
}

fn default_tol_residual() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceFormat {
    #[default]
    Csv,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub trace_path: Option<PathBuf>,
    #[serde(default)]
    pub format: TraceFormat,
}

impl RunConfig {
    /// Reads and parses a config file, applying `BREG_SEED_OVERRIDE`.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("malformed config {}: {e}", path.display())))?;
        if let Ok(raw) = std::env::var(SEED_OVERRIDE_VAR) {
            cfg.problem.seed = raw.trim().parse().map_err(|_| {
                CliError::Input(format!(
                    "{SEED_OVERRIDE_VAR} must be an unsigned integer, got {raw:?}"
                ))
            })?;
        }
        Ok(cfg)
    }

    pub fn instance(&self) -> Result<ProblemInstance, CliError> {
        let p = &self.problem;
        let inst = match p.family {
            FamilyName::SparseLinear => gen_sparse_linear(p.seed, p.m, p.n_or_d, p.k),
            FamilyName::NonnegLinear => gen_nonneg_linear(p.seed, p.m, p.n_or_d, p.k, p.epsilon),
            FamilyName::Quadratic => gen_quadratic(p.seed, p.m, p.n_or_d, p.k, p.epsilon),
        };
        inst.map_err(|e| CliError::Input(format!("problem section: {e}")))
    }

    /// Resolves `"auto"` step size and default `ω`, and picks the start.
    /// Parameter conditions are left to the solver's validation.
    pub fn solver_config(&self, inst: &ProblemInstance) -> Result<SolverConfig, CliError> {
        let s = &self.solver;
        let model = &inst.model;
        let l = model
            .energy
            .smoothness_constant(&model.kernel)
            .map_err(|e| CliError::Validation(e.to_string()))?
            .value;
        let alpha = model.kernel.symmetry_coefficient();
        let omega = s.omega.unwrap_or_else(|| default_omega(alpha));
        let delta = match s.delta {
            DeltaSpec::Value(d) => d,
            DeltaSpec::Keyword(DeltaKeyword::Auto) => default_delta(alpha, omega, l),
        };
        let schedule = match s.mu_schedule {
            MuScheduleName::Constant => Schedule::constant(delta, s.mu),
            MuScheduleName::Decaying => Schedule::decaying(delta, s.mu),
        };
        let (x0, p0) = if delta > 0.0 && s.mu >= 0.0 && s.beta >= 0.0 {
            inst.default_start(delta, s.mu + s.beta)
                .map_err(|e| CliError::Validation(format!("start point: {e}")))?
        } else {
            // Invalid parameters; any start will do, validation rejects the run.
            (
                breg_core::Vector::from_element(model.dim(), 1.0),
                breg_core::Vector::from_element(model.dim(), 1.0),
            )
        };
        Ok(SolverConfig {
            beta: s.beta,
            omega,
            schedule,
            max_iters: s.max_iters,
            tol_step: s.tol_step,
            tol_residual: s.tol_residual,
            x0,
            p0,
        })
    }
}
