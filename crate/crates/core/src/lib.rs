//! Linearized Bregman iterations for convex and nonconvex inverse problems
//! whose fidelity is only *relatively* smooth with respect to a Legendre
//! kernel `h` (i.e. `L h - E` is convex on the interior of `dom h`).
//!
//! The crate is organised bottom-up:
//!
//! - [`kernels`]: reference functions `h` and their Bregman distances.
//! - [`regularizers`]: the convex regularizer `R`, subgradients and conjugate.
//! - [`energies`]: fidelity terms `E` and relative-smoothness constants.
//! - [`subproblems`]: closed-form / scalar-root solvers for the primal update.
//! - [`solver`]: the primal-dual iteration, its mirror-descent form and stopping.
//! - [`diagnostics`]: verifiers for the descent inequalities along a run.
//! - [`problems`]: seeded instance generators and a brute-force KKT oracle.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod energies;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod problems;
pub mod regularizers;
pub mod solver;
pub mod subproblems;

pub use error::{BregError, Result};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;

/// A scalar on the extended real line `(-inf, +inf]`.
///
/// Conjugates and the surrogate function take the value `+inf` outside their
/// domain; that case is kept apart from every finite value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum ExtReal {
    Finite(f64),
    PosInfinity,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInfinity => None,
        }
    }
}

/// The three ingredients of a composite problem `min E(x) + beta R(x)` solved
/// in the Bregman geometry induced by `kernel`.
#[derive(Debug, Clone)]
pub struct Model {
    pub energy: energies::Energy,
    pub kernel: kernels::Kernel,
    pub regularizer: regularizers::Regularizer,
}

impl Model {
    pub fn new(
        energy: energies::Energy,
        kernel: kernels::Kernel,
        regularizer: regularizers::Regularizer,
    ) -> Result<Self> {
        let n = kernel.dim();
        if energy.dim() != n || regularizer.dim() != n {
            return Err(BregError::DimensionMismatch {
                expected: n,
                found: if energy.dim() != n {
                    energy.dim()
                } else {
                    regularizer.dim()
                },
            });
        }
        Ok(Self {
            energy,
            kernel,
            regularizer,
        })
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    /// `f_beta(x) = E(x) + beta R(x)`.
    pub fn f_beta(&self, x: &Vector, beta: f64) -> Result<f64> {
        Ok(self.energy.value(x)? + beta * self.regularizer.value(x))
    }
}

pub(crate) fn check_dim(expected: usize, v: &Vector) -> Result<()> {
    if v.len() != expected {
        Err(BregError::DimensionMismatch {
            expected,
            found: v.len(),
        })
    } else {
        Ok(())
    }
}
