//! Legendre reference functions `h` and the Bregman geometry they induce.
//!
//! Three kernels are provided:
//!
//! | kind             | `h(x)`                              | `dom h`        |
//! |------------------|-------------------------------------|----------------|
//! | `SquaredNorm`    | `½‖x‖²`                             | `ℝⁿ`           |
//! | `ShiftedEntropy` | `Σ xᵢ log xᵢ + (ε/2)‖x‖²`           | `ℝⁿ₊`          |
//! | `Quartic`        | `¼‖x‖⁴ + ½‖x‖²`                     | `ℝⁿ`           |
//!
//! The entropy kernel uses `0·log 0 = 0`, so `h` is finite on the closed
//! orthant while its gradient only exists on the open one.

use crate::{check_dim, BregError, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    SquaredNorm,
    ShiftedEntropy { epsilon: f64 },
    Quartic,
}

/// An immutable kernel of fixed dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    kind: KernelKind,
    dim: usize,
}

/// A Bregman distance value. Nonnegative up to rounding for valid arguments.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BregmanValue(pub f64);

impl BregmanValue {
    pub fn get(self) -> f64 {
        self.0
    }
}

impl Kernel {
    pub fn new(kind: KernelKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(BregError::InvalidInput(
                "kernel dimension must be positive".into(),
            ));
        }
        if let KernelKind::ShiftedEntropy { epsilon } = kind {
            if !(epsilon >= 0.0 && epsilon.is_finite()) {
                return Err(BregError::InvalidInput(format!(
                    "entropy shift must be finite and nonnegative, got {epsilon}"
                )));
            }
        }
        Ok(Self { kind, dim })
    }

    pub fn squared_norm(dim: usize) -> Self {
        Self::new(KernelKind::SquaredNorm, dim).expect("positive dimension")
    }

    pub fn shifted_entropy(dim: usize, epsilon: f64) -> Result<Self> {
        Self::new(KernelKind::ShiftedEntropy { epsilon }, dim)
    }

    pub fn quartic(dim: usize) -> Self {
        Self::new(KernelKind::Quartic, dim).expect("positive dimension")
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether `x ∈ dom h` (closed domain).
    pub fn domain_contains(&self, x: &Vector) -> bool {
        x.len() == self.dim
            && x.iter().all(|v| v.is_finite())
            && match self.kind {
                KernelKind::ShiftedEntropy { .. } => x.iter().all(|&v| v >= 0.0),
                _ => true,
            }
    }

    /// Whether `x ∈ int dom h`.
    pub fn interior_contains(&self, x: &Vector) -> bool {
        x.len() == self.dim
            && x.iter().all(|v| v.is_finite())
            && match self.kind {
                KernelKind::ShiftedEntropy { .. } => x.iter().all(|&v| v > 0.0),
                _ => true,
            }
    }

    fn require_domain(&self, x: &Vector) -> Result<()> {
        check_dim(self.dim, x)?;
        if !self.domain_contains(x) {
            return Err(BregError::Domain(format!(
                "point outside dom h for {:?}",
                self.kind
            )));
        }
        Ok(())
    }

    fn require_interior(&self, x: &Vector) -> Result<()> {
        check_dim(self.dim, x)?;
        if !self.interior_contains(x) {
            return Err(BregError::Domain(format!(
                "point outside int dom h for {:?}",
                self.kind
            )));
        }
        Ok(())
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        self.require_domain(x)?;
        let sq = x.norm_squared();
        Ok(match self.kind {
            KernelKind::SquaredNorm => 0.5 * sq,
            KernelKind::ShiftedEntropy { epsilon } => {
                x.iter().map(|&v| xlogx(v)).sum::<f64>() + 0.5 * epsilon * sq
            }
            KernelKind::Quartic => 0.25 * sq * sq + 0.5 * sq,
        })
    }

    pub fn grad(&self, x: &Vector) -> Result<Vector> {
        self.require_interior(x)?;
        Ok(match self.kind {
            KernelKind::SquaredNorm => x.clone(),
            KernelKind::ShiftedEntropy { epsilon } => x.map(|v| 1.0 + v.ln() + epsilon * v),
            KernelKind::Quartic => x * (x.norm_squared() + 1.0),
        })
    }

    /// `D_h(x, y) = h(x) - h(y) - ⟨∇h(y), x - y⟩` for `x ∈ dom h`, `y ∈ int dom h`.
    pub fn bregman(&self, x: &Vector, y: &Vector) -> Result<BregmanValue> {
        self.require_domain(x)?;
        self.require_interior(y)?;
        let d = match self.kind {
            KernelKind::SquaredNorm => 0.5 * (x - y).norm_squared(),
            KernelKind::ShiftedEntropy { epsilon } => {
                // Σ xᵢ log(xᵢ/yᵢ) - xᵢ + yᵢ, the same quantity rearranged
                // so that D_h(x, x) vanishes exactly.
                let kl: f64 = x
                    .iter()
                    .zip(y.iter())
                    .map(|(&a, &b)| {
                        if a == 0.0 {
                            b
                        } else {
                            a * (a / b).ln() - a + b
                        }
                    })
                    .sum();
                kl + 0.5 * epsilon * (x - y).norm_squared()
            }
            KernelKind::Quartic => {
                let hx = self.value(x)?;
                let hy = self.value(y)?;
                let gy = self.grad(y)?;
                hx - hy - gy.dot(&(x - y))
            }
        };
        Ok(BregmanValue(d))
    }

    /// Symmetry coefficient `α(h)`, stored per kernel.
    ///
    /// Only the squared norm has a symmetric distance; the entropy and quartic
    /// kernels use the conservative value 0, which only shrinks the admissible
    /// step size.
    pub fn symmetry_coefficient(&self) -> f64 {
        match self.kind {
            KernelKind::SquaredNorm => 1.0,
            KernelKind::ShiftedEntropy { .. } | KernelKind::Quartic => 0.0,
        }
    }

    /// Modulus `ν` with `h - (ν/2)‖·‖²` convex.
    pub fn strong_convexity_modulus(&self) -> f64 {
        match self.kind {
            KernelKind::SquaredNorm | KernelKind::Quartic => 1.0,
            KernelKind::ShiftedEntropy { epsilon } => epsilon,
        }
    }
}

fn xlogx(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v * v.ln()
    }
}
