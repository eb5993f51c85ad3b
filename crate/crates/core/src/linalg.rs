//! Small dense linear-algebra helpers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Matrix, Vector};

const POWER_SEED: u64 = 0x0005_eed0_fa7a;
const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 1000;

/// Largest singular value of `a`, by power iteration on `AᵀA`.
///
/// The start vector is drawn from a fixed seed, so the result is
/// deterministic. Returns 0 for a zero (or empty) matrix.
pub fn operator_norm(a: &Matrix) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v = Vector::from_fn(n, |_, _| rng.random_range(0.5..1.5));
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let av = a * &v;
        let w = a.tr_mul(&av);
        let next = av.norm_squared();
        let wn = w.norm();
        if wn == 0.0 {
            // v landed in the null space; only possible for a zero Gram matrix
            // with this start, since every Krylov step keeps the top component.
            return next.sqrt();
        }
        v = w / wn;
        if (next - lambda).abs() <= POWER_TOL * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // One more Rayleigh quotient with the final direction.
    let last = (a * &v).norm_squared();
    lambda.max(last).sqrt()
}

/// Numerical rank from the singular values, with the usual
/// `max(m, n)·σ_max·eps` cutoff.
pub fn rank(a: &Matrix) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let cutoff = (a.nrows().max(a.ncols()) as f64) * smax * f64::EPSILON;
    sv.iter().filter(|&&s| s > cutoff).count()
}
