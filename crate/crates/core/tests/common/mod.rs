//! Shared helpers for the integration suites: seeded random states and
//! unitaries.

// each suite compiles its own copy and uses a different subset
#![allow(dead_code)]

use nalgebra::DMatrix;
use qbattery_core::qla::{hermitize, CMatrix, C64};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex_matrix(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    DMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// Random full-rank density matrix G G^dag / tr(G G^dag).
pub fn random_density_matrix(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    let g = random_complex_matrix(rng, dim);
    let rho = &g * g.adjoint();
    let trace = rho.trace();
    rho / trace
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    hermitize(&random_complex_matrix(rng, dim))
}

/// Haar-ish random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    random_complex_matrix(rng, dim).qr().q()
}
