//! Dense complex linear algebra and entropy kernels.
//!
//! Everything here operates on small dense matrices (2x2, 4x4, 16x16) stored
//! as `nalgebra::DMatrix<Complex<f64>>`.  All functions are pure.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Hermiticity tolerance used before eigendecompositions and partial traces.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Eigenvalues below this are a positivity error in entropy computations.
pub const POSITIVITY_TOL: f64 = -1e-9;

/// Eigenvalues in `[-CLIP_SILENT, 0)` are clipped to zero without comment;
/// values in `[POSITIVITY_TOL, -CLIP_SILENT)` are clipped but counted.
pub const CLIP_SILENT: f64 = 1e-12;

static CLIP_WARNINGS: AtomicU64 = AtomicU64::new(0);

/// Number of eigenvalues clipped to zero from outside the silent window.
/// RK4 round-off routinely produces eigenvalues around -1e-15; anything
/// noisier than -1e-12 bumps this counter.
pub fn clipped_eigenvalue_warnings() -> u64 {
    CLIP_WARNINGS.load(Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LogBase {
    Two,
    E,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::E => x.ln(),
        }
    }
}

/// Which subsystem of the joint charger-battery state to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    /// The charger (first tensor factor, label A).
    Charger,
    /// The battery (second tensor factor, label B).
    Battery,
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as matrix columns, same order as `eigenvalues`.
    pub eigenvectors: CMatrix,
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn from_rows(dim: usize, entries: &[C64]) -> CMatrix {
    assert_eq!(entries.len(), dim * dim);
    CMatrix::from_row_slice(dim, dim, entries)
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn pauli_x() -> CMatrix {
    from_rows(2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> CMatrix {
    from_rows(2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> CMatrix {
    from_rows(2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// Raising operator |e><g| in the fixed {|e>, |g>} basis.
pub fn sigma_plus() -> CMatrix {
    from_rows(2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)])
}

/// Lowering operator |g><e|.
pub fn sigma_minus() -> CMatrix {
    from_rows(2, &[c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.)])
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermitian_asymmetry(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check_hermitian(m: &CMatrix) -> Result<()> {
    let tol = HERMITICITY_TOL * f64::max(1.0, max_abs(m));
    let asymmetry = hermitian_asymmetry(m);
    if asymmetry > tol {
        return Err(Error::NotHermitian { asymmetry, tol });
    }
    Ok(())
}

/// (M + M^dag)/2, applied before every eigendecomposition.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.)
}

/// Column-stacking vectorization.
pub fn vec_col(m: &CMatrix) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec_col(v: &DVector<C64>, dim: usize) -> CMatrix {
    CMatrix::from_column_slice(dim, dim, v.as_slice())
}

/// Trace over one subsystem of a two-qubit state, keeping the other.
pub fn partial_trace(rho: &CMatrix, keep: Subsystem) -> Result<CMatrix> {
    if rho.nrows() != 4 || rho.ncols() != 4 {
        return Err(Error::Dimension { expected: 4, got: rho.nrows() });
    }
    check_hermitian(rho)?;
    let mut out = CMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            // joint index = 2*charger + battery
            out[(i, j)] = match keep {
                Subsystem::Charger => rho[(2 * i, 2 * j)] + rho[(2 * i + 1, 2 * j + 1)],
                Subsystem::Battery => rho[(i, j)] + rho[(2 + i, 2 + j)],
            };
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eig_hermitian(m: &CMatrix) -> Result<HermitianSpectrum> {
    check_hermitian(m)?;
    let sym = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..sym.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| sym.eigenvalues[i].total_cmp(&sym.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| sym.eigenvalues[i]).collect();
    let columns: Vec<_> = order.iter().map(|&i| sym.eigenvectors.column(i)).collect();
    let eigenvectors = CMatrix::from_columns(&columns);
    Ok(HermitianSpectrum { eigenvalues, eigenvectors })
}

/// Eigenvalues of a density matrix, clipped per the round-off policy.
///
/// Returns the clipped spectrum (ascending).  Values in `[-1e-12, 0)` are
/// silently zeroed, values down to the positivity tolerance are zeroed and
/// counted, anything lower is an error.
pub fn density_eigenvalues(rho: &CMatrix) -> Result<Vec<f64>> {
    let spectrum = eig_hermitian(rho)?;
    let mut out = Vec::with_capacity(spectrum.eigenvalues.len());
    for lambda in spectrum.eigenvalues {
        if lambda >= 0.0 {
            out.push(lambda);
        } else if lambda >= -CLIP_SILENT {
            out.push(0.0);
        } else if lambda >= POSITIVITY_TOL {
            CLIP_WARNINGS.fetch_add(1, Ordering::Relaxed);
            out.push(0.0);
        } else {
            return Err(Error::Positivity { min: lambda });
        }
    }
    Ok(out)
}

/// Von Neumann entropy of a density matrix, with 0 log 0 = 0.
pub fn vn_entropy(rho: &CMatrix, base: LogBase) -> Result<f64> {
    let trace = rho.trace();
    if (trace.re - 1.0).abs() > 1e-8 || trace.im.abs() > 1e-8 {
        return Err(Error::Trace { trace: trace.re });
    }
    let entropy: f64 = density_eigenvalues(rho)?
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * base.log(p))
        .sum();
    // tiny negative sums can appear when an eigenvalue sits at 1 + eps
    Ok(entropy.max(0.0))
}

/// S(A|B) = S(rho_AB) - S(rho_B) of a two-qubit state.
pub fn conditional_entropy(rho_ab: &CMatrix, base: LogBase) -> Result<f64> {
    let rho_b = partial_trace(rho_ab, Subsystem::Battery)?;
    Ok(vn_entropy(rho_ab, base)? - vn_entropy(&rho_b, base)?)
}
