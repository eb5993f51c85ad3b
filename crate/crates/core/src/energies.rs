//! Fidelity terms `E`, their gradients, residuals and the relative-smoothness
//! constants `L` that make `L h - E` convex for the supported kernels.

use crate::kernels::{Kernel, KernelKind};
use crate::linalg::{self, operator_norm};
use crate::{check_dim, BregError, Matrix, Result, Vector};

/// Safety margin applied on top of the admissible lower bound for `L`.
pub const SMOOTHNESS_SAFETY: f64 = 1.01;

#[derive(Debug, Clone, PartialEq)]
pub enum Energy {
    /// `½‖Ax - b‖²`.
    LeastSquares { a: Matrix, b: Vector },
    /// `D_φ(Ax, b) + (ε/2)‖Ax - b‖²` with `φ(u) = Σ uᵢ log uᵢ`.
    KlFidelity { a: Matrix, b: Vector, epsilon: f64 },
    /// `¼ Σᵢ (xᵀAᵢx - bᵢ)² + (ε/2)‖x‖²` with symmetric `Aᵢ`.
    QuarticEnergy {
        mats: Vec<Matrix>,
        b: Vector,
        epsilon: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyKind {
    LeastSquares,
    KlFidelity,
    QuarticEnergy,
}

/// A constant `L` with `L h - E` convex, tagged with the pair it was computed for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessConstant {
    pub value: f64,
    pub energy: EnergyKind,
    pub kernel: KernelKind,
}

impl Energy {
    pub fn least_squares(a: Matrix, b: Vector) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(BregError::DimensionMismatch {
                expected: a.nrows(),
                found: b.len(),
            });
        }
        Ok(Energy::LeastSquares { a, b })
    }

    pub fn kl_fidelity(a: Matrix, b: Vector, epsilon: f64) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(BregError::DimensionMismatch {
                expected: a.nrows(),
                found: b.len(),
            });
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(BregError::InvalidInput(format!(
                "epsilon must be >= 0, got {epsilon}"
            )));
        }
        if a.iter().any(|&v| !(v >= 0.0)) {
            return Err(BregError::InvalidInput(
                "KL fidelity needs a nonnegative matrix".into(),
            ));
        }
        if let Some(j) = (0..a.ncols()).find(|&j| a.column(j).iter().all(|&v| v == 0.0)) {
            return Err(BregError::InvalidInput(format!("column {j} of A is zero")));
        }
        if let Some(i) = b.iter().position(|&v| !(v > 0.0)) {
            return Err(BregError::InvalidInput(format!(
                "KL fidelity needs strictly positive data, b[{i}] = {}",
                b[i]
            )));
        }
        Ok(Energy::KlFidelity { a, b, epsilon })
    }

    /// Builds the quartic energy, replacing every `Aᵢ` by `½(Aᵢ + Aᵢᵀ)`.
    pub fn quartic(mats: Vec<Matrix>, b: Vector, epsilon: f64) -> Result<Self> {
        if mats.len() != b.len() {
            return Err(BregError::DimensionMismatch {
                expected: mats.len(),
                found: b.len(),
            });
        }
        if mats.is_empty() {
            return Err(BregError::InvalidInput(
                "need at least one measurement".into(),
            ));
        }
        let d = mats[0].nrows();
        if mats.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(BregError::InvalidInput(
                "measurement matrices must be d x d".into(),
            ));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(BregError::InvalidInput(format!(
                "epsilon must be >= 0, got {epsilon}"
            )));
        }
        let mats = mats
            .into_iter()
            .map(|m| (&m + m.transpose()) * 0.5)
            .collect();
        Ok(Energy::QuarticEnergy { mats, b, epsilon })
    }

    pub fn kind(&self) -> EnergyKind {
        match self {
            Energy::LeastSquares { .. } => EnergyKind::LeastSquares,
            Energy::KlFidelity { .. } => EnergyKind::KlFidelity,
            Energy::QuarticEnergy { .. } => EnergyKind::QuarticEnergy,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Energy::LeastSquares { a, .. } | Energy::KlFidelity { a, .. } => a.ncols(),
            Energy::QuarticEnergy { mats, .. } => mats[0].ncols(),
        }
    }

    /// The linear measurement operator, for the linear families.
    pub fn matrix(&self) -> Option<&Matrix> {
        match self {
            Energy::LeastSquares { a, .. } | Energy::KlFidelity { a, .. } => Some(a),
            Energy::QuarticEnergy { .. } => None,
        }
    }

    pub fn data(&self) -> &Vector {
        match self {
            Energy::LeastSquares { b, .. }
            | Energy::KlFidelity { b, .. }
            | Energy::QuarticEnergy { b, .. } => b,
        }
    }

    /// Row rank of `A` for the linear families. Surjectivity is reported,
    /// never enforced.
    pub fn measurement_rank(&self) -> Option<usize> {
        self.matrix().map(linalg::rank)
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x)?;
        match self {
            Energy::LeastSquares { a, b } => Ok(0.5 * (a * x - b).norm_squared()),
            Energy::KlFidelity { a, b, epsilon } => {
                let u = a * x;
                if u.iter().any(|&v| v < 0.0) {
                    return Err(BregError::Domain("KL fidelity needs Ax >= 0".into()));
                }
                let kl: f64 = u
                    .iter()
                    .zip(b.iter())
                    .map(|(&ui, &bi)| {
                        if ui == 0.0 {
                            bi
                        } else {
                            ui * (ui / bi).ln() - ui + bi
                        }
                    })
                    .sum();
                Ok(kl + 0.5 * epsilon * (u - b).norm_squared())
            }
            Energy::QuarticEnergy { mats, b, epsilon } => {
                let fit: f64 = mats
                    .iter()
                    .zip(b.iter())
                    .map(|(m, &bi)| {
                        let r = x.dot(&(m * x)) - bi;
                        r * r
                    })
                    .sum();
                Ok(0.25 * fit + 0.5 * epsilon * x.norm_squared())
            }
        }
    }

    pub fn grad(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x)?;
        match self {
            Energy::LeastSquares { a, b } => Ok(a.tr_mul(&(a * x - b))),
            Energy::KlFidelity { a, b, epsilon } => {
                let u = a * x;
                if u.iter().any(|&v| !(v > 0.0)) {
                    return Err(BregError::Domain("KL gradient needs Ax > 0".into()));
                }
                let inner =
                    Vector::from_fn(u.len(), |i, _| (u[i] / b[i]).ln() + epsilon * (u[i] - b[i]));
                Ok(a.tr_mul(&inner))
            }
            Energy::QuarticEnergy { mats, b, epsilon } => {
                let mut g = x * *epsilon;
                for (m, &bi) in mats.iter().zip(b.iter()) {
                    let ax = m * x;
                    let r = x.dot(&ax) - bi;
                    g.axpy(r, &ax, 1.0);
                }
                Ok(g)
            }
        }
    }

    /// `‖Ax - b‖₂` for the linear families, `maxᵢ |xᵀAᵢx - bᵢ|` for the quartic one.
    pub fn residual(&self, x: &Vector) -> f64 {
        match self {
            Energy::LeastSquares { a, b } | Energy::KlFidelity { a, b, .. } => (a * x - b).norm(),
            Energy::QuarticEnergy { mats, b, .. } => mats
                .iter()
                .zip(b.iter())
                .map(|(m, &bi)| (x.dot(&(m * x)) - bi).abs())
                .fold(0.0, f64::max),
        }
    }

    /// Relative-smoothness constant for the supported `(E, h)` pairs:
    ///
    /// - least squares / squared norm: `‖A‖²`;
    /// - KL fidelity / shifted entropy: `max{‖A‖², maxⱼ Σᵢ aᵢⱼ}`;
    /// - quartic energy / quartic kernel: `Σᵢ (3‖Aᵢ‖² + ‖Aᵢ‖·|bᵢ|) + ε`;
    ///
    /// each multiplied by [`SMOOTHNESS_SAFETY`].
    pub fn smoothness_constant(&self, kernel: &Kernel) -> Result<SmoothnessConstant> {
        let bound = match (self, kernel.kind()) {
            (Energy::LeastSquares { a, .. }, KernelKind::SquaredNorm) => operator_norm(a).powi(2),
            (Energy::KlFidelity { a, .. }, KernelKind::ShiftedEntropy { .. }) => {
                let max_col = a.row_sum().max();
                operator_norm(a).powi(2).max(max_col)
            }
            (Energy::QuarticEnergy { mats, b, epsilon }, KernelKind::Quartic) => {
                mats.iter()
                    .zip(b.iter())
                    .map(|(m, &bi)| {
                        let nm = operator_norm(m);
                        3.0 * nm * nm + nm * bi.abs()
                    })
                    .sum::<f64>()
                    + epsilon
            }
            (e, k) => {
                return Err(BregError::UnsupportedPair(format!(
                    "no smoothness constant for ({:?}, {:?})",
                    e.kind(),
                    k
                )))
            }
        };
        Ok(SmoothnessConstant {
            value: SMOOTHNESS_SAFETY * bound,
            energy: self.kind(),
            kernel: kernel.kind(),
        })
    }
}
