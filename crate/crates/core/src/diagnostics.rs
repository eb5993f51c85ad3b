//! Verifiers for the descent inequalities, identities and sampled bounds
//! satisfied by the iteration, plus the surrogate function
//!
//! ```text
//! F(x, y) = E(x) + (β+μ)R(x) + μR*(y) - μ⟨x, y⟩.
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energies::Energy;
use crate::kernels::{Kernel, KernelKind};
use crate::regularizers::{Regularizer, MEMBERSHIP_TOL};
use crate::solver::{Schedule, Snapshot, TraceRecord};
use crate::{BregError, ExtReal, Model, Result, Vector};

pub const SURROGATE_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-10;
pub const THREE_POINT_TOL: f64 = 1e-9;
pub const LC_TOL: f64 = 1e-9;
pub const SUBGRADIENT_BOUND_TOL: f64 = 1.0 + 1e-6;
pub const DEFAULT_FD_STEP: f64 = 1e-6;
pub const LIPSCHITZ_SAMPLES: usize = 2000;
const ROUNDING_SLACK: f64 = 64.0;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub samples_or_iters: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub first_failure: Option<usize>,
}

impl CheckReport {
    fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            samples_or_iters: 0,
            max_violation: 0.0,
            tolerance,
            passed: true,
            first_failure: None,
        }
    }

    /// Folds one measured violation in; NaN counts as a failure.
    fn record(&mut self, index: usize, violation: f64) {
        let v = if violation.is_nan() {
            f64::INFINITY
        } else {
            violation
        };
        if v > self.max_violation {
            self.max_violation = v;
        }
        if v > self.tolerance {
            self.passed = false;
            if self.first_failure.is_none_or(|f| index < f) {
                self.first_failure = Some(index);
            }
        }
    }
}

/// `F(x, y) = E(x) + (β+μ)R(x) + μR*(y) - μ⟨x, y⟩`, `+inf` when `R*(y)` is.
pub fn surrogate_value(
    model: &Model,
    beta: f64,
    mu: f64,
    x: &Vector,
    y: &Vector,
) -> Result<ExtReal> {
    let conj = model.regularizer.conjugate(y);
    let conj = match conj {
        ExtReal::Finite(v) => v,
        ExtReal::PosInfinity if mu == 0.0 => 0.0,
        ExtReal::PosInfinity => return Ok(ExtReal::PosInfinity),
    };
    let e = model.energy.value(x)?;
    let r = model.regularizer.value(x);
    Ok(ExtReal::Finite(
        e + (beta + mu) * r + mu * conj - mu * x.dot(y),
    ))
}

fn finite_surrogate(model: &Model, beta: f64, mu: f64, x: &Vector, y: &Vector) -> Result<f64> {
    Ok(surrogate_value(model, beta, mu, x, y)?
        .finite()
        .unwrap_or(f64::INFINITY))
}

/// Checks, for `k ≥ 1`,
///
/// ```text
/// F(xᵏ⁺¹, pᵏ) + ρD_h(xᵏ⁺¹, xᵏ) + μD_R(xᵏ, xᵏ⁺¹) + μD_R(xᵏ, xᵏ⁻¹) ≤ F(xᵏ, pᵏ⁻¹)
/// ```
///
/// along a recorded history. The generalized distances use the recorded
/// subgradients at their second argument.
pub fn check_surrogate_descent(
    history: &[Snapshot],
    model: &Model,
    beta: f64,
    mu: f64,
    rho: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("surrogate_descent", SURROGATE_TOL);
    let reg = &model.regularizer;
    for k in 1..history.len().saturating_sub(1) {
        let (prev, cur, next) = (&history[k - 1], &history[k], &history[k + 1]);
        let lhs = finite_surrogate(model, beta, mu, &next.x, &cur.p)?
            + rho * model.kernel.bregman(&next.x, &cur.x)?.get()
            + mu * reg.gen_bregman_unchecked(&cur.x, &next.x, &next.p)
            + mu * reg.gen_bregman_unchecked(&cur.x, &prev.x, &prev.p);
        let rhs = finite_surrogate(model, beta, mu, &cur.x, &prev.p)?;
        report.samples_or_iters += 1;
        report.record(k, lhs - rhs);
    }
    Ok(report)
}

/// Axis-aligned box containing a set of points, inflated by a fraction of
/// its width on each side.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    pub lo: Vector,
    pub hi: Vector,
}

impl BoundingBox {
    pub fn around<'a>(points: impl IntoIterator<Item = &'a Vector>, inflate: f64) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let (mut lo, mut hi) = (first.clone(), first.clone());
        for p in it {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let pad = (&hi - &lo).map(|w| inflate * w.max(1e-3));
        Some(Self {
            lo: &lo - &pad,
            hi: &hi + &pad,
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vector {
        Vector::from_fn(self.lo.len(), |i, _| {
            let (a, b) = (self.lo[i], self.hi[i]);
            if a < b {
                rng.random_range(a..=b)
            } else {
                a
            }
        })
    }
}

/// `max ‖g(u) - g(v)‖/‖u - v‖` over seeded pairs in `bbox` together with the
/// given explicit pairs.
pub fn estimate_lipschitz<G>(
    grad: G,
    bbox: &BoundingBox,
    samples: usize,
    seed: u64,
    extra_pairs: &[(&Vector, &Vector)],
) -> Result<f64>
where
    G: Fn(&Vector) -> Result<Vector>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    let mut ratio = |u: &Vector, v: &Vector| -> Result<()> {
        let d = (u - v).norm();
        if d > 0.0 {
            best = best.max((grad(u)? - grad(v)?).norm() / d);
        }
        Ok(())
    };
    for _ in 0..samples {
        let u = bbox.sample(&mut rng);
        let v = bbox.sample(&mut rng);
        ratio(&u, &v)?;
    }
    for (u, v) in extra_pairs {
        ratio(u, v)?;
    }
    Ok(best)
}

/// Local Lipschitz constants near a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalLipschitz {
    pub energy: f64,
    pub kernel: f64,
}

/// Estimates `L_E` and `L_f` (for `∇E` and `∇h`) on the trajectory's bounding
/// box inflated by 10%, from sampled pairs and all consecutive iterate pairs.
/// For the entropy kernel the box is kept inside the positive orthant.
pub fn local_lipschitz(history: &[Snapshot], model: &Model, seed: u64) -> Result<LocalLipschitz> {
    let mut bbox = BoundingBox::around(history.iter().map(|s| &s.x), 0.1)
        .ok_or_else(|| BregError::InvalidInput("empty history".into()))?;
    if matches!(model.kernel.kind(), KernelKind::ShiftedEntropy { .. }) {
        let floor = history
            .iter()
            .map(|s| s.x.min())
            .fold(f64::INFINITY, f64::min)
            * 0.5;
        bbox.lo = bbox.lo.map(|v| v.max(floor));
    }
    let pairs: Vec<(&Vector, &Vector)> = history.windows(2).map(|w| (&w[0].x, &w[1].x)).collect();
    let energy = estimate_lipschitz(
        |x| model.energy.grad(x),
        &bbox,
        LIPSCHITZ_SAMPLES,
        seed,
        &pairs,
    )?;
    let kernel = estimate_lipschitz(
        |x| model.kernel.grad(x),
        &bbox,
        LIPSCHITZ_SAMPLES,
        seed.wrapping_add(1),
        &pairs,
    )?;
    Ok(LocalLipschitz { energy, kernel })
}

/// Checks `‖rᵏ⁺¹‖ ≤ ρ₂‖xᵏ⁺¹ - xᵏ‖ + (μᵏ - μ)‖pᵏ⁺¹ - pᵏ‖` with
/// `ρ₂ = L_E + L_f/δ + μ` and
///
/// ```text
/// rᵏ⁺¹ = (∇E(xᵏ⁺¹) + (β+μ)pᵏ⁺¹ - μpᵏ,  μxᵏ - μxᵏ⁺¹).
/// ```
///
/// The reported violation is the largest ratio of the two sides (`0/0 = 0`,
/// with `‖r‖` at rounding level counted as 0).
/// Fails with [`BregError::UnboundedTrajectory`] if an iterate leaves the
/// sup-norm ball of the given radius.
pub fn check_subgradient_bound(
    history: &[Snapshot],
    model: &Model,
    beta: f64,
    schedule: &Schedule,
    radius: f64,
    seed: u64,
) -> Result<CheckReport> {
    for (k, s) in history.iter().enumerate() {
        if !(s.x.amax() <= radius) {
            return Err(BregError::UnboundedTrajectory { iter: k, radius });
        }
    }
    let mut report = CheckReport::new("subgradient_bound", SUBGRADIENT_BOUND_TOL);
    if history.len() < 2 {
        return Ok(report);
    }
    let lip = local_lipschitz(history, model, seed)?;
    let mu = schedule.mu.base();
    let delta = schedule.delta;
    let rho2 = lip.energy + lip.kernel / delta + mu;
    for k in 0..history.len() - 1 {
        let (cur, next) = (&history[k], &history[k + 1]);
        let mut top = model.energy.grad(&next.x)? + &next.p * (beta + mu);
        top.axpy(-mu, &cur.p, 1.0);
        let dx = &next.x - &cur.x;
        let r_norm = (top.norm_squared() + mu * mu * dx.norm_squared()).sqrt();
        let bound = rho2 * dx.norm() + (schedule.mu.at(k) - mu) * (&next.p - &cur.p).norm();
        // Rounding error of assembling r itself; below it r is treated as 0.
        let floor = ROUNDING_SLACK
            * f64::EPSILON
            * (model.energy.grad(&next.x)?.norm()
                + (beta + mu) * next.p.norm()
                + mu * (cur.p.norm() + cur.x.norm() + next.x.norm()));
        let ratio = if r_norm <= floor {
            0.0
        } else if bound == 0.0 {
            f64::INFINITY
        } else {
            r_norm / bound
        };
        report.samples_or_iters += 1;
        report.record(k, ratio);
    }
    Ok(report)
}

fn sample_box(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(lo..=hi))
}

/// Draws a point of `int dom h` (or of `dom h` when `boundary` is set, which
/// zeroes some entropy coordinates).
fn sample_for_kernel(rng: &mut ChaCha8Rng, kernel: &Kernel, boundary: bool) -> Vector {
    let n = kernel.dim();
    match kernel.kind() {
        KernelKind::ShiftedEntropy { .. } => Vector::from_fn(n, |_, _| {
            if boundary && rng.random_bool(0.2) {
                0.0
            } else {
                // (0, 10], with a log-uniform share near the boundary.
                if rng.random_bool(0.3) {
                    10f64.powf(rng.random_range(-6.0..1.0))
                } else {
                    rng.random_range(f64::MIN_POSITIVE..=10.0)
                }
            }
        }),
        _ => sample_box(rng, n, -5.0, 5.0),
    }
}

/// Residual of `D_h(z,x) = D_h(z,y) + D_h(y,x) + ⟨∇h(y) - ∇h(x), z - y⟩` on
/// seeded triples, relative to `1 +` the magnitude of the terms.
pub fn check_three_point(kernel: &Kernel, n_samples: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("three_point", THREE_POINT_TOL);
    for i in 0..n_samples {
        let z = sample_for_kernel(&mut rng, kernel, true);
        let x = sample_for_kernel(&mut rng, kernel, false);
        let y = sample_for_kernel(&mut rng, kernel, false);
        let dzx = kernel.bregman(&z, &x)?.get();
        let dzy = kernel.bregman(&z, &y)?.get();
        let dyx = kernel.bregman(&y, &x)?.get();
        let cross = (kernel.grad(&y)? - kernel.grad(&x)?).dot(&(&z - &y));
        let scale = 1.0 + dzx.abs() + dzy.abs() + dyx.abs() + cross.abs();
        report.samples_or_iters += 1;
        report.record(i, (dzx - dzy - dyx - cross).abs() / scale);
    }
    Ok(report)
}

fn sample_for_energy(rng: &mut ChaCha8Rng, kernel: &Kernel) -> Vector {
    let n = kernel.dim();
    match kernel.kind() {
        KernelKind::ShiftedEntropy { .. } => sample_box(rng, n, 1e-3, 10.0),
        KernelKind::Quartic => sample_box(rng, n, -2.0, 2.0),
        KernelKind::SquaredNorm => sample_box(rng, n, -5.0, 5.0),
    }
}

/// Largest `E(x) - E(y) - ⟨∇E(y), x - y⟩ - L·D_h(x, y)` over seeded pairs.
/// Half of the pairs are drawn close together.
pub fn check_lc_sampled(
    energy: &Energy,
    kernel: &Kernel,
    l: f64,
    n_samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("lc_sampled", LC_TOL);
    for i in 0..n_samples {
        let y = sample_for_energy(&mut rng, kernel);
        let x = if i % 2 == 0 {
            sample_for_energy(&mut rng, kernel)
        } else {
            let r = 10f64.powf(rng.random_range(-4.0..0.0));
            let mut x = &y + sample_box(&mut rng, y.len(), -r, r);
            if matches!(kernel.kind(), KernelKind::ShiftedEntropy { .. }) {
                x = x.map(|v| v.abs().max(1e-6));
            }
            x
        };
        let gap = energy.value(&x)?
            - energy.value(&y)?
            - energy.grad(&y)?.dot(&(&x - &y))
            - l * kernel.bregman(&x, &y)?.get();
        report.samples_or_iters += 1;
        report.record(i, gap);
    }
    Ok(report)
}

/// Central differences `(f(x+sᵢeᵢ) - f(x-sᵢeᵢ))/(2sᵢ)` with
/// `sᵢ = step·(1 + |xᵢ|)`. A stencil point where `f` is undefined gives a
/// [`BregError::Domain`].
pub fn fd_grad<F>(f: F, x: &Vector, step: f64) -> Result<Vector>
where
    F: Fn(&Vector) -> Result<f64>,
{
    let mut g = Vector::zeros(x.len());
    let mut probe = x.clone();
    let eval = |p: &Vector| {
        f(p).map_err(|e| {
            BregError::Domain(format!("finite-difference stencil left the domain: {e}"))
        })
    };
    for i in 0..x.len() {
        let s = step * (1.0 + x[i].abs());
        probe[i] = x[i] + s;
        let up = eval(&probe)?;
        probe[i] = x[i] - s;
        let down = eval(&probe)?;
        probe[i] = x[i];
        g[i] = (up - down) / (2.0 * s);
    }
    Ok(g)
}

/// `‖fd - g‖∞ / max(1, ‖g‖∞)`.
pub fn gradient_error(fd: &Vector, g: &Vector) -> f64 {
    (fd - g).amax() / g.amax().max(1.0)
}

/// Compares the analytic gradients of `E` and `h` with central differences
/// at seeded interior points.
pub fn check_gradients(
    model: &Model,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("fd_gradients", tol);
    for i in 0..n_samples {
        let x = match model.kernel.kind() {
            KernelKind::ShiftedEntropy { .. } => sample_box(&mut rng, model.dim(), 0.05, 5.0),
            _ => sample_for_energy(&mut rng, &model.kernel),
        };
        let fd_e = fd_grad(|v| model.energy.value(v), &x, DEFAULT_FD_STEP)?;
        let fd_h = fd_grad(|v| model.kernel.value(v), &x, DEFAULT_FD_STEP)?;
        let err = gradient_error(&fd_e, &model.energy.grad(&x)?)
            .max(gradient_error(&fd_h, &model.kernel.grad(&x)?));
        report.samples_or_iters += 1;
        report.record(i, err);
    }
    Ok(report)
}

/// Checks along a trace: `f_β` nonincreasing, the per-step sufficient
/// decrease `f_β(xᵏ⁺¹) + ρD_h(xᵏ⁺¹,xᵏ) + μD_R^symm ≤ f_β(xᵏ)`, nonnegative
/// distances, and `Σ D_h(xᵏ⁺¹,xᵏ) ≤ f_β(x⁰)/ρ` for every partial sum.
///
/// `final_f_beta` is `f_β` at the last iterate, which the trace itself does
/// not hold; without it the last step is skipped. Failures of step `k` are
/// reported at index `k + 1`, the record whose value is out of line.
pub fn check_trace_inequalities(
    trace: &[TraceRecord],
    final_f_beta: Option<f64>,
    rho: f64,
    mu: f64,
) -> CheckReport {
    let mut report = CheckReport::new("trace_inequalities", TRACE_TOL);
    report.samples_or_iters = trace.len();
    let Some(first) = trace.first() else {
        return report;
    };
    let bound = first.f_beta / rho;
    let mut partial = 0.0;
    for (k, rec) in trace.iter().enumerate() {
        report.record(k, -rec.d_h_step);
        report.record(k, -rec.d_h_rev);
        report.record(k, -rec.d_r_symm);
        partial += rec.d_h_step;
        report.record(k, partial - bound);
        let next_f = trace.get(k + 1).map(|r| r.f_beta).or(final_f_beta);
        if let Some(next_f) = next_f {
            report.record(k + 1, next_f - rec.f_beta);
            report.record(
                k + 1,
                next_f + rho * rec.d_h_step + mu * rec.d_r_symm - rec.f_beta,
            );
        }
    }
    report
}

/// `pᵏ ∈ ∂R(xᵏ)` within `MEMBERSHIP_TOL` at every recorded iterate. The
/// violation is the distance of `pᵏ` to `∂R(xᵏ)` in the sup norm.
pub fn check_dual_membership(history: &[Snapshot], regularizer: &Regularizer) -> CheckReport {
    let mut report = CheckReport::new("dual_membership", MEMBERSHIP_TOL);
    for (k, s) in history.iter().enumerate() {
        report.samples_or_iters += 1;
        report.record(k, subgradient_distance(regularizer, &s.x, &s.p));
    }
    report
}

/// Sup-norm distance from `p` to `∂R(x)`, with `xᵢ` treated as zero when
/// `|xᵢ| ≤ MEMBERSHIP_TOL`.
pub fn subgradient_distance(regularizer: &Regularizer, x: &Vector, p: &Vector) -> f64 {
    match regularizer.kind() {
        crate::regularizers::RegularizerKind::Zero => p.amax(),
        crate::regularizers::RegularizerKind::L1 => x
            .iter()
            .zip(p.iter())
            .map(|(&xi, &pi)| {
                if xi.abs() <= MEMBERSHIP_TOL {
                    (pi.abs() - 1.0).max(0.0)
                } else {
                    (pi - xi.signum()).abs()
                }
            })
            .fold(0.0, f64::max),
    }
}
