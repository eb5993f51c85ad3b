#![allow(dead_code)]

use breg_core::kernels::{Kernel, KernelKind};
use breg_core::Vector;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

pub const DIM: usize = 4;

pub fn seeded(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(0x0b5e_55ed),
        failure_persistence: None,
        ..Config::default()
    }
}

pub fn vec_in(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vector> {
    prop::collection::vec(lo..hi, n).prop_map(Vector::from_vec)
}

pub fn kernels() -> Vec<Kernel> {
    vec![
        Kernel::squared_norm(DIM),
        Kernel::shifted_entropy(DIM, 0.1).unwrap(),
        Kernel::quartic(DIM),
    ]
}

/// Interior points: positive for the entropy kernel, a centred box otherwise.
pub fn interior(kernel: &Kernel) -> BoxedStrategy<Vector> {
    match kernel.kind() {
        KernelKind::ShiftedEntropy { .. } => vec_in(kernel.dim(), 1e-3, 10.0).boxed(),
        _ => vec_in(kernel.dim(), -5.0, 5.0).boxed(),
    }
}

pub fn unit_direction(n: usize) -> impl Strategy<Value = Vector> {
    vec_in(n, -1.0, 1.0)
        .prop_filter("nonzero", |v| v.norm() > 1e-3)
        .prop_map(|v| v.normalize())
}

/// A kernel index with `N` interior points for that kernel.
pub fn kernel_with_points<const N: usize>() -> impl Strategy<Value = (usize, [Vector; N])> {
    (0usize..3).prop_flat_map(|i| {
        let pts: [BoxedStrategy<Vector>; N] = std::array::from_fn(|_| interior(&kernels()[i]));
        (Just(i), pts)
    })
}
