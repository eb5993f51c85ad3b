//! The linearized Bregman iteration.
//!
//! One step maps `(xᵏ, pᵏ)` to
//!
//! ```text
//! xᵏ⁺¹ = argmin_x ⟨∇E(xᵏ), x - xᵏ⟩ + βR(x) + (1/δ)D_h(x, xᵏ) + μᵏ D_R^{pᵏ}(x, xᵏ)
//! pᵏ⁺¹ = μᵏ/(μᵏ+β)·pᵏ - 1/(δ(μᵏ+β))·[∇h(xᵏ⁺¹) - ∇h(xᵏ) + δ∇E(xᵏ)]
//! ```
//!
//! The primal update is rearranged into `argmin δ(μᵏ+β)R(x) + ⟨p̄, x⟩ + h(x)`
//! with `p̄ = δ∇E(xᵏ) - ∇h(xᵏ) - δμᵏpᵏ` and handed to [`crate::subproblems`].
//! With `β = 0` and constant parameters the same sequence is produced by the
//! mirror-descent form in [`mirror_run`], which tracks `yᵏ = ∇h(xᵏ) + δμpᵏ`.

use std::fmt;

use serde::Serialize;

use crate::regularizers::{symm_unchecked, RegularizerKind, MEMBERSHIP_TOL};
use crate::subproblems::{solve_subproblem, SubproblemInput};
use crate::{check_dim, BregError, Model, Result, Vector};

/// Multiplier sequence `μᵏ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuSchedule {
    Constant(f64),
    /// `μᵏ = μ + c/(k+1)²`, a summable excess over the limit `μ`.
    Decaying {
        mu: f64,
        c: f64,
    },
}

impl MuSchedule {
    /// Decaying schedule with the default excess `c = μ/10`.
    pub fn decaying(mu: f64) -> Self {
        MuSchedule::Decaying { mu, c: mu / 10.0 }
    }

    pub fn at(&self, k: usize) -> f64 {
        match *self {
            MuSchedule::Constant(mu) => mu,
            MuSchedule::Decaying { mu, c } => {
                let k1 = (k + 1) as f64;
                mu + c / (k1 * k1)
            }
        }
    }

    /// The limit (and infimum) `μ` of the sequence.
    pub fn base(&self) -> f64 {
        match *self {
            MuSchedule::Constant(mu) | MuSchedule::Decaying { mu, .. } => mu,
        }
    }

    /// `Σₖ (μᵏ - μ)`.
    pub fn excess_sum(&self) -> f64 {
        match *self {
            MuSchedule::Constant(_) => 0.0,
            MuSchedule::Decaying { c, .. } => c * std::f64::consts::PI.powi(2) / 6.0,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, MuSchedule::Constant(_))
    }
}

/// Step size `δ` (constant), multiplier schedule and the lower bound `τ` on `δμᵏ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub delta: f64,
    pub mu: MuSchedule,
    pub tau: f64,
}

impl Schedule {
    /// Constant `δ`, `μ` with `τ = δμ/2`.
    pub fn constant(delta: f64, mu: f64) -> Self {
        Self {
            delta,
            mu: MuSchedule::Constant(mu),
            tau: 0.5 * delta * mu,
        }
    }

    pub fn decaying(delta: f64, mu: f64) -> Self {
        Self {
            delta,
            mu: MuSchedule::decaying(mu),
            tau: 0.5 * delta * mu,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub beta: f64,
    pub omega: f64,
    pub schedule: Schedule,
    pub max_iters: usize,
    /// Tolerance on `D_h(xᵏ⁺¹, xᵏ)`.
    pub tol_step: f64,
    pub tol_residual: f64,
    pub x0: Vector,
    pub p0: Vector,
}

/// `ω = (1 + α)/2`, the midpoint of the admissible interval.
pub fn default_omega(alpha: f64) -> f64 {
    0.5 * (1.0 + alpha)
}

/// `δ = 0.99·(1 + α - ω)/L`.
pub fn default_delta(alpha: f64, omega: f64, l: f64) -> f64 {
    0.99 * (1.0 + alpha - omega) / l
}

/// `ρ = Lω/(1 + α - ω)`, the coefficient of `D_h` in the sufficient decrease.
pub fn descent_rho(l: f64, alpha: f64, omega: f64) -> f64 {
    l * omega / (1.0 + alpha - omega)
}

/// The point `x` with `0 ∈ ∇h(x) + w∂R(x)`, i.e. the primal image of a zero
/// dual variable. Returns `(x, p)` with `p` the minimal-norm subgradient.
///
/// For the squared-norm and quartic kernels this is the origin. For the
/// entropy kernel the origin is not interior and this point is its stand-in.
pub fn mirror_origin(model: &Model, weight: f64) -> Result<(Vector, Vector)> {
    let x = solve_subproblem(&SubproblemInput {
        pbar: Vector::zeros(model.dim()),
        weight,
        kernel: &model.kernel,
        regularizer: &model.regularizer,
    })?;
    let p = model.regularizer.subgradient(&x).0;
    Ok((x, p))
}

impl SolverConfig {
    /// Config with default `ω`, `δ` and `τ` for the given model and constant `μ`.
    pub fn with_defaults(
        model: &Model,
        mu: f64,
        x0: Vector,
        p0: Vector,
        max_iters: usize,
    ) -> Result<Self> {
        let l = model.energy.smoothness_constant(&model.kernel)?.value;
        let alpha = model.kernel.symmetry_coefficient();
        let omega = default_omega(alpha);
        Ok(Self {
            beta: 0.0,
            omega,
            schedule: Schedule::constant(default_delta(alpha, omega, l), mu),
            max_iters,
            tol_step: 1e-14,
            tol_residual: 1e-10,
            x0,
            p0,
        })
    }
}

/// First failed parameter condition.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigViolation {
    Omega { omega: f64, upper: f64 },
    StepSize { delta: f64, bound: f64 },
    Multiplier { tau: f64, delta_mu: f64 },
    NotSummable,
    X0NotInterior,
    P0NotSubgradient,
    Parameter(String),
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigViolation::Omega { omega, upper } => {
                write!(f, "omega violated: need 0 < omega = {omega} < {upper}")
            }
            ConfigViolation::StepSize { delta, bound } => {
                write!(
                    f,
                    "(p1) violated: need 0 < delta = {delta} < (1+alpha-omega)/L = {bound}"
                )
            }
            ConfigViolation::Multiplier { tau, delta_mu } => write!(
                f,
                "(p2) violated: need 0 < tau = {tau} < delta*mu^k = {delta_mu}, nonincreasing in k"
            ),
            ConfigViolation::NotSummable => {
                write!(f, "mu schedule violated: excess is not summable")
            }
            ConfigViolation::X0NotInterior => write!(f, "x0 violated: not in int dom h"),
            ConfigViolation::P0NotSubgradient => {
                write!(f, "p0 violated: not in the subdifferential of R at x0")
            }
            ConfigViolation::Parameter(msg) => write!(f, "parameter violated: {msg}"),
        }
    }
}

/// Checks the step-size and multiplier conditions, `ω ∈ (0, 1+α)`, and the
/// starting pair. `l` is the relative-smoothness constant and `alpha` the
/// kernel's symmetry coefficient.
///
/// With `μ = 0` (the plain Bregman proximal gradient case) the multiplier
/// condition is vacuous and skipped.
pub fn validate_config(
    config: &SolverConfig,
    model: &Model,
    l: f64,
    alpha: f64,
) -> std::result::Result<(), ConfigViolation> {
    let param = |msg: &str| Err(ConfigViolation::Parameter(msg.to_string()));
    let Schedule { delta, mu, tau } = config.schedule;
    if !(l > 0.0 && l.is_finite()) {
        return param("L must be positive and finite");
    }
    if !(config.beta >= 0.0 && config.beta.is_finite()) {
        return param("beta must be >= 0");
    }
    if config.max_iters == 0 {
        return param("max_iters must be positive");
    }
    if !(config.tol_step >= 0.0) || !(config.tol_residual >= 0.0) {
        return param("tolerances must be >= 0");
    }
    let mu_base = mu.base();
    if !(mu_base >= 0.0 && mu_base.is_finite()) {
        return param("mu must be >= 0");
    }
    if let MuSchedule::Decaying { c, .. } = mu {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(ConfigViolation::NotSummable);
        }
    }
    if model.regularizer.kind() == RegularizerKind::L1 && mu_base + config.beta <= 0.0 {
        return param("mu + beta must be positive for the l1 regularizer");
    }
    let upper = 1.0 + alpha;
    if !(config.omega > 0.0 && config.omega < upper) {
        return Err(ConfigViolation::Omega {
            omega: config.omega,
            upper,
        });
    }
    let bound = (1.0 + alpha - config.omega) / l;
    if !(delta > 0.0 && delta < bound) {
        return Err(ConfigViolation::StepSize { delta, bound });
    }
    if mu_base > 0.0 {
        // δ is constant and μᵏ is nonincreasing, so δμᵏ is nonincreasing and
        // its infimum is δμ.
        let delta_mu = delta * mu_base;
        if !(tau > 0.0 && tau < delta_mu) {
            return Err(ConfigViolation::Multiplier { tau, delta_mu });
        }
    }
    if check_dim(model.dim(), &config.x0).is_err() || !model.kernel.interior_contains(&config.x0) {
        return Err(ConfigViolation::X0NotInterior);
    }
    if !model
        .regularizer
        .subgrad_membership(&config.x0, &config.p0, MEMBERSHIP_TOL)
    {
        return Err(ConfigViolation::P0NotSubgradient);
    }
    Ok(())
}

/// Current iterate with cached quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub k: usize,
    pub x: Vector,
    pub p: Vector,
    pub grad_h_x: Vector,
    pub f_beta: f64,
    pub e_val: f64,
    pub r_val: f64,
}

impl IterateState {
    pub fn new(model: &Model, k: usize, x: Vector, p: Vector, beta: f64) -> Result<Self> {
        let grad_h_x = model.kernel.grad(&x)?;
        let e_val = model.energy.value(&x)?;
        let r_val = model.regularizer.value(&x);
        Ok(Self {
            k,
            x,
            p,
            grad_h_x,
            f_beta: e_val + beta * r_val,
            e_val,
            r_val,
        })
    }
}

/// Diagnostics of the step `xᵏ → xᵏ⁺¹`. Objective values, gradient norm and
/// residual are taken at `xᵏ`; the distances compare `xᵏ⁺¹` with `xᵏ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub k: usize,
    pub f_beta: f64,
    pub e_val: f64,
    pub r_val: f64,
    /// `D_h(xᵏ⁺¹, xᵏ)`.
    pub d_h_step: f64,
    /// `D_h(xᵏ, xᵏ⁺¹)`.
    pub d_h_rev: f64,
    /// `⟨pᵏ⁺¹ - pᵏ, xᵏ⁺¹ - xᵏ⟩`.
    pub d_r_symm: f64,
    pub grad_norm: f64,
    pub residual: f64,
    pub step_norm: f64,
}

impl TraceRecord {
    /// Column names, in field order.
    pub const FIELDS: [&'static str; 10] = [
        "iter",
        "f_beta",
        "e_val",
        "r_val",
        "d_h_step",
        "d_h_rev",
        "d_r_symm",
        "grad_norm",
        "residual",
        "step_norm",
    ];

    pub fn values(&self) -> [f64; 9] {
        [
            self.f_beta,
            self.e_val,
            self.r_val,
            self.d_h_step,
            self.d_h_rev,
            self.d_r_symm,
            self.grad_norm,
            self.residual,
            self.step_norm,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    MaxIters,
    Converged,
}

/// `(xᵏ, pᵏ)` for `k = 0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub x: Vector,
    pub p: Vector,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_state: IterateState,
    pub trace: Vec<TraceRecord>,
    pub stop_reason: StopReason,
    /// Every iterate including the start; empty unless requested.
    pub history: Vec<Snapshot>,
}

impl RunOutput {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    /// Smallest coordinate of the final iterate, to tell boundary limits of the
    /// entropy kernel apart from interior ones.
    pub fn min_coordinate(&self) -> f64 {
        self.final_state.x.min()
    }
}

fn ensure_finite(v: &Vector, iter: usize, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(BregError::Divergence {
            iter,
            what: what.to_string(),
        })
    }
}

/// Completes a step once `xᵏ⁺¹` and `pᵏ⁺¹` are known.
fn finish_step(
    state: &IterateState,
    model: &Model,
    x_next: Vector,
    p_next: Vector,
    beta: f64,
    grad_norm: f64,
) -> Result<(IterateState, TraceRecord)> {
    let k = state.k;
    ensure_finite(&x_next, k + 1, "x")?;
    ensure_finite(&p_next, k + 1, "p")?;
    if !model.kernel.interior_contains(&x_next) {
        return Err(BregError::Invariant {
            iter: k + 1,
            msg: "iterate left int dom h".into(),
        });
    }
    if !model
        .regularizer
        .subgrad_membership(&x_next, &p_next, MEMBERSHIP_TOL)
    {
        return Err(BregError::Invariant {
            iter: k + 1,
            msg: "dual variable is not a subgradient of R at the new iterate".into(),
        });
    }
    let d_h_step = model.kernel.bregman(&x_next, &state.x)?.get();
    let d_h_rev = model.kernel.bregman(&state.x, &x_next)?.get();
    let d_r_symm = symm_unchecked(&x_next, &state.x, &p_next, &state.p);
    let step_norm = (&x_next - &state.x).norm();
    let record = TraceRecord {
        k,
        f_beta: state.f_beta,
        e_val: state.e_val,
        r_val: state.r_val,
        d_h_step,
        d_h_rev,
        d_r_symm,
        grad_norm,
        residual: model.energy.residual(&state.x),
        step_norm,
    };
    let next = IterateState::new(model, k + 1, x_next, p_next, beta)?;
    if !next.f_beta.is_finite() {
        return Err(BregError::Divergence {
            iter: k + 1,
            what: "f_beta".into(),
        });
    }
    Ok((next, record))
}

/// One primal-dual step with step size `delta`, multiplier `mu` (the value
/// `μᵏ` for this step) and regularization weight `beta`.
pub fn step(
    state: &IterateState,
    model: &Model,
    delta: f64,
    mu: f64,
    beta: f64,
) -> Result<(IterateState, TraceRecord)> {
    let k = state.k;
    let grad_e = model.energy.grad(&state.x)?;
    ensure_finite(&grad_e, k, "grad E")?;
    let weight = delta * (mu + beta);
    let mut pbar = &grad_e * delta - &state.grad_h_x;
    pbar.axpy(-delta * mu, &state.p, 1.0);
    let x_next = solve_subproblem(&SubproblemInput {
        pbar,
        weight,
        kernel: &model.kernel,
        regularizer: &model.regularizer,
    })?;
    ensure_finite(&x_next, k + 1, "x")?;
    let p_next = match model.regularizer.kind() {
        RegularizerKind::Zero => Vector::zeros(model.dim()),
        RegularizerKind::L1 => {
            let grad_h_next = model.kernel.grad(&x_next)?;
            let mut incr = grad_h_next - &state.grad_h_x;
            incr.axpy(delta, &grad_e, 1.0);
            &state.p * (mu / (mu + beta)) - incr / weight
        }
    };
    finish_step(state, model, x_next, p_next, beta, grad_e.norm())
}

fn converged(
    config: &SolverConfig,
    model: &Model,
    record: &TraceRecord,
    next: &IterateState,
) -> bool {
    record.d_h_step <= config.tol_step && model.energy.residual(&next.x) <= config.tol_residual
}

fn validate_for_run(config: &SolverConfig, model: &Model) -> Result<()> {
    let l = model.energy.smoothness_constant(&model.kernel)?.value;
    validate_config(config, model, l, model.kernel.symmetry_coefficient())
        .map_err(BregError::Config)
}

/// Runs the iteration until `max_iters` or until both
/// `D_h(xᵏ⁺¹, xᵏ) ≤ tol_step` and `residual(xᵏ⁺¹) ≤ tol_residual`.
pub fn run(config: &SolverConfig, model: &Model) -> Result<RunOutput> {
    run_impl(config, model, false)
}

/// As [`run`], additionally recording every `(xᵏ, pᵏ)`.
pub fn run_with_history(config: &SolverConfig, model: &Model) -> Result<RunOutput> {
    run_impl(config, model, true)
}

fn run_impl(config: &SolverConfig, model: &Model, record_history: bool) -> Result<RunOutput> {
    validate_for_run(config, model)?;
    let mut state = IterateState::new(model, 0, config.x0.clone(), config.p0.clone(), config.beta)?;
    let mut trace = Vec::with_capacity(config.max_iters.min(1 << 16));
    let mut history = Vec::new();
    if record_history {
        history.push(Snapshot {
            x: state.x.clone(),
            p: state.p.clone(),
        });
    }
    let mut stop_reason = StopReason::MaxIters;
    let delta = config.schedule.delta;
    for k in 0..config.max_iters {
        let mu_k = config.schedule.mu.at(k);
        let (next, record) = step(&state, model, delta, mu_k, config.beta)?;
        let done = converged(config, model, &record, &next);
        trace.push(record);
        if record_history {
            history.push(Snapshot {
                x: next.x.clone(),
                p: next.p.clone(),
            });
        }
        state = next;
        if done {
            stop_reason = StopReason::Converged;
            break;
        }
    }
    Ok(RunOutput {
        final_state: state,
        trace,
        stop_reason,
        history,
    })
}

/// Mirror-descent form for `β = 0` and constant `δ`, `μ`:
///
/// ```text
/// yᵏ⁺¹ = yᵏ - δ∇E(xᵏ),    xᵏ⁺¹ = (∇h + δμ∂R)⁻¹(yᵏ⁺¹),    yᵏ = ∇h(xᵏ) + δμpᵏ.
/// ```
pub fn mirror_run(config: &SolverConfig, model: &Model) -> Result<RunOutput> {
    mirror_impl(config, model, false)
}

pub fn mirror_run_with_history(config: &SolverConfig, model: &Model) -> Result<RunOutput> {
    mirror_impl(config, model, true)
}

fn mirror_impl(config: &SolverConfig, model: &Model, record_history: bool) -> Result<RunOutput> {
    if config.beta != 0.0 {
        return Err(BregError::InvalidInput("mirror form needs beta = 0".into()));
    }
    let mu = match config.schedule.mu {
        MuSchedule::Constant(mu) => mu,
        MuSchedule::Decaying { .. } => {
            return Err(BregError::InvalidInput(
                "mirror form needs a constant mu".into(),
            ))
        }
    };
    validate_for_run(config, model)?;
    let delta = config.schedule.delta;
    let weight = delta * mu;
    let mut state = IterateState::new(model, 0, config.x0.clone(), config.p0.clone(), 0.0)?;
    let mut y = &state.grad_h_x + &state.p * weight;
    let mut trace = Vec::with_capacity(config.max_iters.min(1 << 16));
    let mut history = Vec::new();
    if record_history {
        history.push(Snapshot {
            x: state.x.clone(),
            p: state.p.clone(),
        });
    }
    let mut stop_reason = StopReason::MaxIters;
    for _ in 0..config.max_iters {
        let k = state.k;
        let grad_e = model.energy.grad(&state.x)?;
        ensure_finite(&grad_e, k, "grad E")?;
        y.axpy(-delta, &grad_e, 1.0);
        ensure_finite(&y, k + 1, "y")?;
        let x_next = solve_subproblem(&SubproblemInput {
            pbar: -&y,
            weight,
            kernel: &model.kernel,
            regularizer: &model.regularizer,
        })?;
        ensure_finite(&x_next, k + 1, "x")?;
        let p_next = match model.regularizer.kind() {
            RegularizerKind::Zero => Vector::zeros(model.dim()),
            RegularizerKind::L1 => (&y - model.kernel.grad(&x_next)?) / weight,
        };
        let (next, record) = finish_step(&state, model, x_next, p_next, 0.0, grad_e.norm())?;
        let done = converged(config, model, &record, &next);
        trace.push(record);
        if record_history {
            history.push(Snapshot {
                x: next.x.clone(),
                p: next.p.clone(),
            });
        }
        state = next;
        if done {
            stop_reason = StopReason::Converged;
            break;
        }
    }
    Ok(RunOutput {
        final_state: state,
        trace,
        stop_reason,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energies::Energy;
    use crate::kernels::Kernel;
    use crate::regularizers::Regularizer;
    use crate::Matrix;
    use nalgebra::dvector;

    fn identity_model() -> Model {
        Model::new(
            Energy::least_squares(Matrix::identity(2, 2), dvector![2.0, 0.0]).unwrap(),
            Kernel::squared_norm(2),
            Regularizer::l1(2),
        )
        .unwrap()
    }

    fn identity_config(max_iters: usize) -> SolverConfig {
        SolverConfig {
            beta: 0.0,
            omega: 0.5,
            schedule: Schedule::constant(0.5, 1.0),
            max_iters,
            tol_step: 1e-14,
            tol_residual: 1e-10,
            x0: Vector::zeros(2),
            p0: Vector::zeros(2),
        }
    }

    #[test]
    fn first_two_steps_exact() {
        let model = identity_model();
        let s0 = IterateState::new(&model, 0, Vector::zeros(2), Vector::zeros(2), 0.0).unwrap();
        let (s1, r0) = step(&s0, &model, 0.5, 1.0, 0.0).unwrap();
        assert_eq!(s1.x, dvector![0.5, 0.0]);
        assert_eq!(s1.p, dvector![1.0, 0.0]);
        assert_eq!(r0.k, 0);
        assert_eq!(r0.f_beta, 2.0);
        let (s2, _) = step(&s1, &model, 0.5, 1.0, 0.0).unwrap();
        assert_eq!(s2.x, dvector![1.25, 0.0]);
        assert_eq!(s2.p, dvector![1.0, 0.0]);
    }

    #[test]
    fn fixed_point_keeps_dual() {
        // At x = b the gradient vanishes; with p = sign(x) the step is stationary.
        let model = identity_model();
        let s = IterateState::new(&model, 0, dvector![2.0, 0.0], dvector![1.0, 0.0], 0.0).unwrap();
        let (s1, rec) = step(&s, &model, 0.5, 1.0, 0.0).unwrap();
        assert_eq!(s1.x, s.x);
        assert_eq!(s1.p, s.p);
        assert_eq!(rec.d_h_step, 0.0);
    }

    #[test]
    fn identity_problem_converges_to_data() {
        let out = run(&identity_config(200), &identity_model()).unwrap();
        assert_eq!(out.stop_reason, StopReason::Converged);
        assert!((&out.final_state.x - dvector![2.0, 0.0]).amax() < 1e-6);
    }

    #[test]
    fn zero_regularizer_is_gradient_descent() {
        let a = Matrix::from_row_slice(2, 3, &[1.0, 0.5, -0.2, 0.3, -1.0, 0.7]);
        let b = dvector![0.4, -0.9];
        let model = Model::new(
            Energy::least_squares(a.clone(), b.clone()).unwrap(),
            Kernel::squared_norm(3),
            Regularizer::zero(3),
        )
        .unwrap();
        let delta = 0.3;
        let mut cfg = identity_config(25);
        cfg.x0 = dvector![0.1, 0.2, -0.3];
        cfg.p0 = Vector::zeros(3);
        cfg.schedule = Schedule::constant(delta, 0.0);
        let out = run_with_history(&cfg, &model).unwrap();
        let mut x = cfg.x0.clone();
        for snap in out.history.iter().skip(1) {
            x -= a.tr_mul(&(&a * &x - &b)) * delta;
            assert!((&snap.x - &x).amax() < 1e-14);
        }
    }

    #[test]
    fn mirror_matches_run_on_identity() {
        let cfg = identity_config(50);
        let a = run_with_history(&cfg, &identity_model()).unwrap();
        let b = mirror_run_with_history(&cfg, &identity_model()).unwrap();
        assert_eq!(b.history[1].x, dvector![0.5, 0.0]);
        for (u, v) in a.history.iter().zip(b.history.iter()) {
            assert!((&u.x - &v.x).amax() <= 1e-10);
        }
    }

    #[test]
    fn validate_examples() {
        let model = identity_model();
        let mut cfg = identity_config(10);
        cfg.omega = 1.0;
        cfg.schedule = Schedule::constant(0.99, 1.0);
        assert!(validate_config(&cfg, &model, 1.0, 1.0).is_ok());

        let quartic = Model::new(
            Energy::quartic(vec![Matrix::identity(2, 2)], dvector![1.0], 0.1).unwrap(),
            Kernel::quartic(2),
            Regularizer::l1(2),
        )
        .unwrap();
        let mut cfg = identity_config(10);
        cfg.omega = 0.5;
        cfg.schedule = Schedule::constant(0.5, 1.0);
        let err = validate_config(&cfg, &quartic, 4.141, 0.0).unwrap_err();
        assert!(err.to_string().starts_with("(p1) violated"), "{err}");

        let mut cfg = identity_config(10);
        cfg.schedule = Schedule::constant(0.1, 3.0);
        assert!((cfg.schedule.tau - 0.15).abs() < 1e-15);
        assert!(validate_config(&cfg, &model, 1.0, 1.0).is_ok());
        cfg.schedule.tau = 0.4;
        assert!(matches!(
            validate_config(&cfg, &model, 1.0, 1.0),
            Err(ConfigViolation::Multiplier { .. })
        ));
    }

    #[test]
    fn validate_start_and_omega() {
        let model = identity_model();
        let mut cfg = identity_config(10);
        cfg.omega = 2.0;
        assert!(matches!(
            validate_config(&cfg, &model, 1.0, 1.0),
            Err(ConfigViolation::Omega { .. })
        ));
        let mut cfg = identity_config(10);
        cfg.x0 = dvector![1.0, 0.0];
        cfg.p0 = dvector![0.5, 0.0];
        assert_eq!(
            validate_config(&cfg, &model, 1.0, 1.0),
            Err(ConfigViolation::P0NotSubgradient)
        );
        let ent = Model::new(
            Energy::kl_fidelity(Matrix::identity(2, 2), dvector![1.0, 1.0], 0.1).unwrap(),
            Kernel::shifted_entropy(2, 0.1).unwrap(),
            Regularizer::l1(2),
        )
        .unwrap();
        let mut cfg = identity_config(10);
        cfg.schedule = Schedule::constant(0.4, 1.0);
        assert_eq!(
            validate_config(&cfg, &ent, 1.0, 0.0),
            Err(ConfigViolation::X0NotInterior)
        );
    }

    #[test]
    fn run_rejects_invalid_config_before_iterating() {
        let mut cfg = identity_config(10);
        cfg.schedule = Schedule::constant(10.0, 1.0);
        match run(&cfg, &identity_model()) {
            Err(BregError::Config(v)) => assert!(v.to_string().contains("(p1)")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn decaying_schedule() {
        let s = MuSchedule::decaying(1.0);
        assert_eq!(s.at(0), 1.1);
        assert!((s.at(1) - 1.025).abs() < 1e-15);
        assert!(s.at(100) > s.at(101));
        assert!((s.excess_sum() - 0.1 * std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-15);
    }

    #[test]
    fn mirror_origin_points() {
        let (x, p) = mirror_origin(&identity_model(), 0.5).unwrap();
        assert_eq!(x, Vector::zeros(2));
        assert_eq!(p, Vector::zeros(2));
        let ent = Model::new(
            Energy::kl_fidelity(Matrix::identity(2, 2), dvector![1.0, 1.0], 0.0).unwrap(),
            Kernel::shifted_entropy(2, 0.0).unwrap(),
            Regularizer::l1(2),
        )
        .unwrap();
        let (x, p) = mirror_origin(&ent, 0.5).unwrap();
        // ∇h(x) + 0.5 = 0  =>  x = e^{-1.5}
        assert!((x[0] - (-1.5f64).exp()).abs() < 1e-14);
        assert_eq!(p, dvector![1.0, 1.0]);
    }
}
