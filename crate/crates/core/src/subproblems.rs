//! Solvers for the primal update
//!
//! ```text
//! x⁺ = argmin_x  w·R(x) + ⟨p̄, x⟩ + h(x)
//! ```
//!
//! where `p̄ = δ∇E(xᵏ) - ∇h(xᵏ) - δμᵏpᵏ` and `w = δ(μᵏ + β)`. Every supported
//! `(h, R)` pair has a closed form up to a scalar root.

use crate::kernels::{Kernel, KernelKind};
use crate::regularizers::{Regularizer, RegularizerKind};
use crate::{check_dim, BregError, Result, Vector};

const QUARTIC_ROOT_TOL: f64 = 1e-14;
const ENTROPY_ROOT_TOL: f64 = 1e-12;
const ROOT_MAX_ITERS: usize = 200;
const ENTROPY_ROOT_MAX: f64 = 1e300;
const ENTROPY_ROOT_MIN: f64 = 1e-300;

/// Inputs of one primal update.
#[derive(Debug, Clone)]
pub struct SubproblemInput<'a> {
    pub pbar: Vector,
    /// Effective ℓ₁ weight `δ(μ + β)`.
    pub weight: f64,
    pub kernel: &'a Kernel,
    pub regularizer: &'a Regularizer,
}

/// Componentwise `max{|vᵢ| - λ, 0}·sign(vᵢ)`.
pub fn soft_threshold(v: &Vector, lambda: f64) -> Vector {
    v.map(|vi| {
        if vi > lambda {
            vi - lambda
        } else if vi < -lambda {
            vi + lambda
        } else {
            0.0
        }
    })
}

/// The unique root in `(0, 1]` of `s2·t³ + t - 1 = 0`, for `s2 ≥ 0`.
///
/// Newton from `t = 1`; the cubic is increasing and convex on `t > 0`, so the
/// iterates decrease monotonically onto the root. A bisection step takes over
/// whenever an iterate leaves the current bracket.
pub fn quartic_scale_root(s2: f64) -> f64 {
    if s2 <= 0.0 {
        return 1.0;
    }
    let f = |t: f64| s2 * t * t * t + t - 1.0;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut t = 1.0;
    for _ in 0..ROOT_MAX_ITERS {
        let ft = f(t);
        if ft.abs() <= QUARTIC_ROOT_TOL {
            return t;
        }
        if ft > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let next = t - ft / (3.0 * s2 * t * t + 1.0);
        t = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    t
}

/// The unique positive root of `log x + εx + C = 0`, for `ε ≥ 0`.
///
/// Solved in `u = log x`, where `g(u) = u + εeᵘ + C` is increasing and convex
/// with the root bracketed by `u ≤ -C`.
pub fn entropy_coordinate_root(epsilon: f64, c: f64) -> Result<f64> {
    if !(epsilon >= 0.0) || !c.is_finite() {
        return Err(BregError::InvalidInput(format!(
            "entropy root needs epsilon >= 0 and finite C (got {epsilon}, {c})"
        )));
    }
    let g = |u: f64| u + epsilon * u.exp() + c;
    let mut hi = -c;
    if epsilon == 0.0 {
        return finish_entropy_root(hi.exp());
    }
    // εeᵘ = |C| + 1 also bounds the root from above whenever g is
    // nonnegative there; it is much tighter when the exponential dominates.
    let cap = ((c.abs() + 1.0) / epsilon).ln();
    if cap.is_finite() && cap < hi && g(cap) >= 0.0 {
        hi = cap;
    }
    // Walk down until g(lo) <= 0.
    let mut step = 1.0;
    let mut lo = hi - step;
    while g(lo) > 0.0 {
        hi = lo;
        step *= 2.0;
        lo = hi - step;
    }
    let mut u = hi;
    for _ in 0..ROOT_MAX_ITERS {
        let gu = g(u);
        if gu.is_finite() {
            let x = u.exp();
            if (x.ln() + epsilon * x + c).abs() <= ENTROPY_ROOT_TOL * c.abs().max(1.0) {
                return finish_entropy_root(x);
            }
            if gu > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
        } else {
            hi = u;
        }
        let next = u - gu / (1.0 + epsilon * u.exp());
        u = if next.is_finite() && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    finish_entropy_root(u.exp())
}

fn finish_entropy_root(x: f64) -> Result<f64> {
    if !(x <= ENTROPY_ROOT_MAX) {
        Err(BregError::Overflow(format!(
            "entropy root exceeds {ENTROPY_ROOT_MAX:e}"
        )))
    } else if !(x >= ENTROPY_ROOT_MIN) {
        Err(BregError::Overflow(format!(
            "entropy root underflows below {ENTROPY_ROOT_MIN:e}"
        )))
    } else {
        Ok(x)
    }
}

/// The unique minimizer of `w·R(x) + ⟨p̄, x⟩ + h(x)`.
pub fn solve_subproblem(input: &SubproblemInput<'_>) -> Result<Vector> {
    let n = input.kernel.dim();
    check_dim(n, &input.pbar)?;
    if input.regularizer.dim() != n {
        return Err(BregError::DimensionMismatch {
            expected: n,
            found: input.regularizer.dim(),
        });
    }
    if !(input.weight >= 0.0) || input.pbar.iter().any(|v| !v.is_finite()) {
        return Err(BregError::InvalidInput(
            "subproblem needs weight >= 0 and finite p̄".into(),
        ));
    }
    let w = match input.regularizer.kind() {
        RegularizerKind::L1 => input.weight,
        RegularizerKind::Zero => 0.0,
    };
    let neg = -&input.pbar;
    match input.kernel.kind() {
        KernelKind::SquaredNorm => Ok(soft_threshold(&neg, w)),
        KernelKind::Quartic => {
            let s = soft_threshold(&neg, w);
            let t = quartic_scale_root(s.norm_squared());
            Ok(s * t)
        }
        KernelKind::ShiftedEntropy { epsilon } => {
            // On the nonnegative orthant ‖x‖₁ = Σ xᵢ, so the weight enters as
            // a constant shift of each coordinate equation.
            let mut x = Vector::zeros(n);
            for i in 0..n {
                x[i] = entropy_coordinate_root(epsilon, w + input.pbar[i] + 1.0)?;
            }
            Ok(x)
        }
    }
}

/// Objective value `w·R(x) + ⟨p̄, x⟩ + h(x)` of the primal update.
pub fn subproblem_objective(input: &SubproblemInput<'_>, x: &Vector) -> Result<f64> {
    let r = match input.regularizer.kind() {
        RegularizerKind::L1 => input.weight * input.regularizer.value(x),
        RegularizerKind::Zero => 0.0,
    };
    Ok(r + input.pbar.dot(x) + input.kernel.value(x)?)
}
