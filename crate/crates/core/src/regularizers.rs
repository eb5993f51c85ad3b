//! The convex regularizer `R`, its subgradients, conjugate and
//! (generalized / symmetric) Bregman distances.

use crate::{check_dim, BregError, ExtReal, Result, Vector};

/// Slack accepted on the conjugate's domain `‖y‖∞ ≤ 1`. Dual iterates
/// accumulate rounding, so the strict test would reject valid points.
pub const CONJUGATE_TOL: f64 = 1e-9;

/// Default tolerance for subgradient membership.
pub const MEMBERSHIP_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizerKind {
    /// `R(x) = ‖x‖₁`.
    L1,
    /// `R ≡ 0`; with it the iteration is plain Bregman proximal gradient.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Regularizer {
    kind: RegularizerKind,
    dim: usize,
}

/// An element of `∂R(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgradient(pub Vector);

impl Regularizer {
    pub fn new(kind: RegularizerKind, dim: usize) -> Self {
        Self { kind, dim }
    }

    pub fn l1(dim: usize) -> Self {
        Self::new(RegularizerKind::L1, dim)
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(RegularizerKind::Zero, dim)
    }

    pub fn kind(&self) -> RegularizerKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, x: &Vector) -> f64 {
        match self.kind {
            RegularizerKind::L1 => x.lp_norm(1),
            RegularizerKind::Zero => 0.0,
        }
    }

    /// Minimal-norm subgradient: `sign(x)` with 0 at zero coordinates.
    pub fn subgradient(&self, x: &Vector) -> Subgradient {
        match self.kind {
            RegularizerKind::L1 => Subgradient(x.map(sign0)),
            RegularizerKind::Zero => Subgradient(Vector::zeros(x.len())),
        }
    }

    /// Fenchel conjugate `R*(y)`; `+inf` outside its domain.
    pub fn conjugate(&self, y: &Vector) -> ExtReal {
        let inf_norm = y.amax();
        let inside = match self.kind {
            RegularizerKind::L1 => inf_norm <= 1.0 + CONJUGATE_TOL,
            RegularizerKind::Zero => inf_norm <= CONJUGATE_TOL,
        };
        if inside {
            ExtReal::Finite(0.0)
        } else {
            ExtReal::PosInfinity
        }
    }

    /// `p ∈ ∂R(x)` up to `tol`.
    pub fn subgrad_membership(&self, x: &Vector, p: &Vector, tol: f64) -> bool {
        if x.len() != p.len() {
            return false;
        }
        match self.kind {
            RegularizerKind::L1 => {
                if p.amax() > 1.0 + tol {
                    return false;
                }
                x.iter()
                    .zip(p.iter())
                    .all(|(&xi, &pi)| xi.abs() <= tol || (pi - xi.signum()).abs() <= tol)
            }
            RegularizerKind::Zero => p.amax() <= tol,
        }
    }

    fn require_subgradient(&self, x: &Vector, q: &Vector) -> Result<()> {
        check_dim(self.dim, x)?;
        check_dim(self.dim, q)?;
        if !self.subgrad_membership(x, q, MEMBERSHIP_TOL) {
            return Err(BregError::Subgradient(format!(
                "vector is not in ∂R(y) for {:?} (tol {MEMBERSHIP_TOL:e})",
                self.kind
            )));
        }
        Ok(())
    }

    /// `D_R^q(x, y) = R(x) - R(y) - ⟨q, x - y⟩` with `q ∈ ∂R(y)`.
    pub fn gen_bregman(&self, x: &Vector, y: &Vector, q: &Subgradient) -> Result<f64> {
        check_dim(self.dim, x)?;
        self.require_subgradient(y, &q.0)?;
        Ok(self.gen_bregman_unchecked(x, y, &q.0))
    }

    pub(crate) fn gen_bregman_unchecked(&self, x: &Vector, y: &Vector, q: &Vector) -> f64 {
        self.value(x) - self.value(y) - q.dot(&(x - y))
    }

    /// `D_R^symm(u, v) = ⟨p - q, u - v⟩` with `p ∈ ∂R(u)`, `q ∈ ∂R(v)`.
    pub fn symm_bregman(
        &self,
        u: &Vector,
        v: &Vector,
        p: &Subgradient,
        q: &Subgradient,
    ) -> Result<f64> {
        self.require_subgradient(u, &p.0)?;
        self.require_subgradient(v, &q.0)?;
        Ok(symm_unchecked(u, v, &p.0, &q.0))
    }
}

pub(crate) fn symm_unchecked(u: &Vector, v: &Vector, p: &Vector, q: &Vector) -> f64 {
    (p - q).dot(&(u - v))
}

fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
