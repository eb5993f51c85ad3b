//! Seeded instance generators and a brute-force KKT oracle for the
//! elastic-net basis pursuit problem
//!
//! ```text
//! min μ‖x‖₁ + (1/(2δ))‖x‖²   s.t.   Ax = b,
//! ```
//!
//! the limit of the iteration with `h = ½‖·‖²`, `R = ‖·‖₁`, `β = 0` and
//! `x⁰ = p⁰ = 0`.

use nalgebra::SymmetricEigen;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::energies::Energy;
use crate::kernels::{Kernel, KernelKind};
use crate::regularizers::Regularizer;
use crate::solver::mirror_origin;
use crate::{BregError, Matrix, Model, Result, Vector};

/// Largest dimension the oracle will enumerate (3¹⁰ sign patterns).
pub const ORACLE_MAX_DIM: usize = 10;
const OFF_SUPPORT_SLACK: f64 = 1e-8;
const DISTINCT_TOL: f64 = 1e-8;
const NONNEG_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    SparseLinear,
    NonnegLinear,
    Quadratic,
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub family: Family,
    pub model: Model,
    pub ground_truth: Option<Vector>,
    pub seed: u64,
}

fn check_sizes(m: usize, n: usize, k: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(BregError::InvalidInput("m and n must be positive".into()));
    }
    if k > n {
        return Err(BregError::InvalidInput(format!(
            "sparsity k = {k} exceeds n = {n}"
        )));
    }
    Ok(())
}

fn sparse_signal(rng: &mut ChaCha8Rng, n: usize, k: usize, signed: bool) -> Vector {
    let mut x = Vector::zeros(n);
    for i in index::sample(rng, n, k).iter() {
        x[i] = if signed && rng.random_bool(0.5) {
            -1.0
        } else {
            1.0
        };
    }
    x
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Gaussian `A`, `k`-sparse ±1 signal, `b = Ax_o`; least squares with the
/// squared-norm kernel and ℓ₁ regularizer.
pub fn gen_sparse_linear(seed: u64, m: usize, n: usize, k: usize) -> Result<ProblemInstance> {
    check_sizes(m, n, k)?;
    if m > n {
        return Err(BregError::InvalidInput(format!(
            "need m <= n, got {m} > {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(&mut rng, m, n);
    let x_o = sparse_signal(&mut rng, n, k, true);
    let b = &a * &x_o;
    Ok(ProblemInstance {
        family: Family::SparseLinear,
        model: Model::new(
            Energy::least_squares(a, b)?,
            Kernel::squared_norm(n),
            Regularizer::l1(n),
        )?,
        ground_truth: Some(x_o),
        seed,
    })
}

/// Uniform `[0.1, 1]` matrix, nonnegative signal (`k` unit spikes on a dense
/// floor of 0.05), `b = Ax_o > 0`; KL fidelity with the shifted entropy kernel.
pub fn gen_nonneg_linear(
    seed: u64,
    m: usize,
    n: usize,
    k: usize,
    epsilon: f64,
) -> Result<ProblemInstance> {
    check_sizes(m, n, k)?;
    if m > n {
        return Err(BregError::InvalidInput(format!(
            "need m <= n, got {m} > {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Matrix::from_fn(m, n, |_, _| rng.random_range(0.1..=1.0));
    let x_o = sparse_signal(&mut rng, n, k, false).add_scalar(NONNEG_FLOOR);
    let b = &a * &x_o;
    Ok(ProblemInstance {
        family: Family::NonnegLinear,
        model: Model::new(
            Energy::kl_fidelity(a, b, epsilon)?,
            Kernel::shifted_entropy(n, epsilon)?,
            Regularizer::l1(n),
        )?,
        ground_truth: Some(x_o),
        seed,
    })
}

/// `m` symmetric Gaussian `Aᵢ = ½(Gᵢ + Gᵢᵀ)`, `k`-sparse ±1 signal,
/// `bᵢ = x_oᵀAᵢx_o`; quartic energy with the quartic kernel.
pub fn gen_quadratic(
    seed: u64,
    m: usize,
    d: usize,
    k: usize,
    epsilon: f64,
) -> Result<ProblemInstance> {
    check_sizes(m, d, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mats: Vec<Matrix> = (0..m)
        .map(|_| {
            let g = gaussian_matrix(&mut rng, d, d);
            (&g + g.transpose()) * 0.5
        })
        .collect();
    let x_o = sparse_signal(&mut rng, d, k, true);
    let b = Vector::from_iterator(m, mats.iter().map(|a| x_o.dot(&(a * &x_o))));
    Ok(ProblemInstance {
        family: Family::Quadratic,
        model: Model::new(
            Energy::quartic(mats, b, epsilon)?,
            Kernel::quartic(d),
            Regularizer::l1(d),
        )?,
        ground_truth: Some(x_o),
        seed,
    })
}

impl ProblemInstance {
    /// Starting pair `(x⁰, p⁰)` for a run with ℓ₁ weight `δμ`.
    ///
    /// The linear families start from the primal image of a zero dual
    /// variable: the origin for the squared norm, and the interior point with
    /// `∇h(x⁰) + δμp⁰ = 0` for the entropy kernel. The origin is a critical
    /// point of the quartic energy, so the quadratic family starts from a
    /// seeded Gaussian point of unit expected norm instead.
    pub fn default_start(&self, delta: f64, mu: f64) -> Result<(Vector, Vector)> {
        match (self.family, self.model.kernel.kind()) {
            (Family::Quadratic, KernelKind::Quartic) => {
                let d = self.model.dim();
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
                let scale = 1.0 / (d as f64).sqrt();
                let x0 = Vector::from_fn(d, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
                let p0 = self.model.regularizer.subgradient(&x0).0;
                Ok((x0, p0))
            }
            _ => mirror_origin(&self.model, delta * mu),
        }
    }
}

/// Result of [`oracle_elastic_net_bp`].
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub x: Vector,
    /// A multiplier `λ` of `Ax = b` certifying optimality.
    pub lambda: Vector,
    /// Max of the stationarity and feasibility residuals.
    pub kkt_residual: f64,
    pub objective: f64,
}

/// Exact minimizer of `μ‖x‖₁ + ‖x‖²/(2δ)` over `Ax = b`, by enumerating all
/// `3ⁿ` sign patterns and solving the KKT system on each support.
pub fn oracle_elastic_net_bp(
    a: &Matrix,
    b: &Vector,
    mu: f64,
    delta: f64,
) -> Result<OracleSolution> {
    let n = a.ncols();
    let total = 3usize.pow(n.min(ORACLE_MAX_DIM + 1) as u32);
    oracle_in_order(a, b, mu, delta, 0..total)
}

/// As [`oracle_elastic_net_bp`], visiting sign patterns in the given order of
/// their base-3 codes. The answer does not depend on the order.
pub fn oracle_in_order(
    a: &Matrix,
    b: &Vector,
    mu: f64,
    delta: f64,
    order: impl IntoIterator<Item = usize>,
) -> Result<OracleSolution> {
    let (m, n) = a.shape();
    if n > ORACLE_MAX_DIM {
        return Err(BregError::InvalidInput(format!(
            "oracle enumerates at most n = {ORACLE_MAX_DIM}, got {n}"
        )));
    }
    if b.len() != m {
        return Err(BregError::DimensionMismatch {
            expected: m,
            found: b.len(),
        });
    }
    if !(mu > 0.0 && delta > 0.0) {
        return Err(BregError::InvalidInput(
            "oracle needs mu > 0 and delta > 0".into(),
        ));
    }
    let total = 3usize.pow(n as u32);
    let mut accepted: Vec<OracleSolution> = Vec::new();
    for code in order {
        if code >= total {
            continue;
        }
        let signs = decode_pattern(code, n);
        if let Some(sol) = try_pattern(a, b, mu, delta, &signs) {
            accepted.push(sol);
        }
    }
    let best = accepted
        .iter()
        .min_by(|u, v| {
            u.objective
                .total_cmp(&v.objective)
                .then_with(|| lexicographic(&u.x, &v.x))
        })
        .cloned()
        .ok_or_else(|| {
            BregError::NoSolution("no sign pattern satisfies the KKT conditions".into())
        })?;
    for other in &accepted {
        let gap = (&other.x - &best.x).amax();
        if gap > DISTINCT_TOL {
            return Err(BregError::Ambiguity { gap });
        }
    }
    Ok(best)
}

fn lexicographic(u: &Vector, v: &Vector) -> std::cmp::Ordering {
    u.iter()
        .zip(v.iter())
        .map(|(a, b)| a.total_cmp(b))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn decode_pattern(mut code: usize, n: usize) -> Vec<i8> {
    let mut s = vec![0i8; n];
    for si in s.iter_mut() {
        *si = (code % 3) as i8 - 1;
        code /= 3;
    }
    s
}

/// Solves the KKT system for one sign pattern and checks every condition.
fn try_pattern(
    a: &Matrix,
    b: &Vector,
    mu: f64,
    delta: f64,
    signs: &[i8],
) -> Option<OracleSolution> {
    let (m, n) = a.shape();
    let support: Vec<usize> = (0..n).filter(|&i| signs[i] != 0).collect();
    let off: Vec<usize> = (0..n).filter(|&i| signs[i] == 0).collect();
    let scale = 1.0 + a.amax() * (1.0 + b.amax());

    // Stationarity on the support gives x_S = δ(A_Sᵀλ - μs_S); feasibility then
    // reads (A_S A_Sᵀ)λ = b/δ + μA_S s_S.
    let a_s = a.select_columns(&support);
    let s_s = Vector::from_iterator(support.len(), support.iter().map(|&i| f64::from(signs[i])));
    let gram = &a_s * a_s.transpose();
    let rhs = b / delta + (&a_s * &s_s) * mu;
    let eig = SymmetricEigen::new(gram.clone());
    let lam_max = eig.eigenvalues.amax();
    let cutoff = 1e-10 * lam_max.max(1e-300);
    let mut lambda0 = Vector::zeros(m);
    let mut null_basis = Vec::new();
    for (j, &ev) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(j).into_owned();
        if ev > cutoff {
            lambda0 += &v * (v.dot(&rhs) / ev);
        } else {
            null_basis.push(v);
        }
    }
    if (&gram * &lambda0 - &rhs).amax() > 1e-9 * scale * (1.0 + rhs.amax()) {
        return None;
    }
    let x_s = (a_s.tr_mul(&lambda0) - &s_s * mu) * delta;
    if support
        .iter()
        .zip(x_s.iter())
        .any(|(&i, &xi)| !(xi * f64::from(signs[i]) > 0.0))
    {
        return None;
    }
    let mut x = Vector::zeros(n);
    for (&i, &xi) in support.iter().zip(x_s.iter()) {
        x[i] = xi;
    }
    if (a * &x - b).amax() > 1e-9 * scale {
        return None;
    }

    let lambda = dual_feasible_multiplier(a, &off, &lambda0, &null_basis, mu)?;
    let stationarity = support
        .iter()
        .map(|&i| (x[i] / delta + mu * f64::from(signs[i]) - a.column(i).dot(&lambda)).abs())
        .fold(0.0, f64::max);
    let feasibility = (a * &x - b).amax();
    let objective = mu * x.lp_norm(1) + x.norm_squared() / (2.0 * delta);
    Some(OracleSolution {
        x,
        lambda,
        kkt_residual: stationarity.max(feasibility),
        objective,
    })
}

/// Finds `λ = λ₀ + Zc` (columns of `Z` span the null space of `A_Sᵀ`) with
/// `|aᵢᵀλ| ≤ μ` off the support. The feasible set is a pointed polyhedron in
/// `c`, so it is nonempty iff one of its vertices is feasible; vertices are
/// enumerated by choosing which slab faces are tight.
fn dual_feasible_multiplier(
    a: &Matrix,
    off: &[usize],
    lambda0: &Vector,
    null_basis: &[Vector],
    mu: f64,
) -> Option<Vector> {
    let limit = mu + OFF_SUPPORT_SLACK;
    let feasible = |lam: &Vector| off.iter().all(|&i| a.column(i).dot(lam).abs() <= limit);
    let d = null_basis.len();
    if d == 0 {
        return feasible(lambda0).then(|| lambda0.clone());
    }
    if off.len() < d {
        return None;
    }
    let z = Matrix::from_columns(null_basis);
    // Rows aᵢᵀZ and offsets aᵢᵀλ₀ of the slab constraints in c-space.
    let rows: Vec<Vector> = off.iter().map(|&i| z.tr_mul(&a.column(i))).collect();
    let offsets: Vec<f64> = off.iter().map(|&i| a.column(i).dot(lambda0)).collect();
    for combo in combinations(off.len(), d) {
        let mut sys = Matrix::zeros(d, d);
        for (r, &j) in combo.iter().enumerate() {
            sys.set_row(r, &rows[j].transpose());
        }
        let lu = sys.lu();
        for mask in 0..(1usize << d) {
            let rhs = Vector::from_fn(d, |r, _| {
                let sign = if mask >> r & 1 == 1 { 1.0 } else { -1.0 };
                sign * mu - offsets[combo[r]]
            });
            if let Some(c) = lu.solve(&rhs) {
                if c.iter().all(|v| v.is_finite()) {
                    let lam = lambda0 + &z * c;
                    if feasible(&lam) {
                        return Some(lam);
                    }
                }
            }
        }
    }
    None
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}
