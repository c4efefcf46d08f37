//! Battery thermodynamics: internal energy, exergy, ergotropy, efficiencies.
//!
//! Thermodynamic entropies default to natural log (beta multiplies e^{-beta H},
//! so free energies are naturally in nats); the base-2 switch is exposed for
//! sensitivity checks.  Information-theoretic quantities live in [`crate::eur`]
//! and always use base 2.

use serde::Serialize;

use crate::error::Result;
use crate::model::{thermal_state, ChargingParams};
use crate::qla::{self, partial_trace, vn_entropy, CMatrix, LogBase, Subsystem};

/// Energy bookkeeping at one time or parameter point, energies in units of
/// omega0.  Efficiencies are absent when the stored energy vanishes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WorkReport {
    pub e_b: f64,
    pub de_b: f64,
    pub w_f: f64,
    pub w_e: f64,
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
}

/// tr(H0 rho) = omega0 * excited population, for a single qubit.
pub fn internal_energy(rho: &CMatrix, omega0: f64) -> f64 {
    omega0 * rho[(0, 0)].re
}

/// Battery energy straight from the joint state: omega0 times the total
/// population of the battery-excited basis states |ee> and |ge>.
pub fn battery_energy_from_joint(rho_ab: &CMatrix, omega0: f64) -> f64 {
    omega0 * (rho_ab[(0, 0)].re + rho_ab[(2, 2)].re)
}

/// Ergotropy through the passive state: descending populations paired with
/// ascending energy levels {0, omega0}.
pub fn ergotropy_generic(rho: &CMatrix, omega0: f64) -> Result<f64> {
    let mut populations = qla::density_eigenvalues(rho)?;
    // ascending eigenvalues; the passive state puts the large population on
    // the ground level, so the excited level keeps the small one
    populations.sort_by(f64::total_cmp);
    let passive_energy = omega0 * populations[0];
    Ok((internal_energy(rho, omega0) - passive_energy).max(0.0))
}

/// Ergotropy from the joint-state closed form
/// (omega0/2) { sqrt(4 |rho_12 + rho_34|^2 + kappa^2) + kappa },
/// kappa = 2 (rho_11 + rho_33) - 1.
pub fn ergotropy_closed_form(rho_ab: &CMatrix, omega0: f64) -> f64 {
    let kappa = 2.0 * (rho_ab[(0, 0)].re + rho_ab[(2, 2)].re) - 1.0;
    let coherence = rho_ab[(0, 1)] + rho_ab[(2, 3)];
    (omega0 / 2.0) * ((4.0 * coherence.norm_sqr() + kappa * kappa).sqrt() + kappa)
}

/// Helmholtz free energy F(rho) = tr(H0 rho) - S(rho)/beta.
fn free_energy(rho: &CMatrix, beta: f64, omega0: f64, base: LogBase) -> Result<f64> {
    Ok(internal_energy(rho, omega0) - vn_entropy(rho, base)? / beta)
}

/// Exergy W_f = F(rho_B) - F(rho_beta): work extractable by thermalizing
/// against the bath at inverse temperature beta.
pub fn exergy(rho_b: &CMatrix, beta: f64, omega0: f64, base: LogBase) -> Result<f64> {
    let reference = thermal_state(beta, omega0);
    Ok(free_energy(rho_b, beta, omega0, base)? - free_energy(&reference, beta, omega0, base)?)
}

/// All work quantities of the battery given the joint state now and at the
/// start of charging.
pub fn work_report(
    rho_ab_t: &CMatrix,
    rho_ab_0: &CMatrix,
    p: &ChargingParams,
    thermo_base: LogBase,
) -> Result<WorkReport> {
    let rho_b = partial_trace(rho_ab_t, Subsystem::Battery)?;
    let e_b = battery_energy_from_joint(rho_ab_t, p.omega0);
    let de_b = e_b - battery_energy_from_joint(rho_ab_0, p.omega0);
    let w_f = exergy(&rho_b, p.beta, p.omega0, thermo_base)?;
    let w_e = ergotropy_closed_form(rho_ab_t, p.omega0);
    let (eta1, eta2) = if de_b.abs() < 1e-12 * p.omega0 {
        (None, None)
    } else {
        (Some(w_f / de_b), Some(w_e / de_b))
    };
    Ok(WorkReport { e_b, de_b, w_f, w_e, eta1, eta2 })
}
