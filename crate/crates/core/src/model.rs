//! Physical parameter set, Hamiltonian, Liouvillian, and reference states.
//!
//! Basis ordering is fixed throughout: the joint basis is
//! {|ee>, |eg>, |ge>, |gg>} with the charger label first, and single-qubit
//! operators use {|e>, |g>}.  The joint index of charger state `a` and
//! battery state `b` is `2a + b` with 0 = excited.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qla::{self, identity, kron, CMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReservoirKind {
    Bosonic,
    Fermionic,
}

/// Reservoir occupancy `n` and its companion coefficient `N`:
/// N = 1 + n for bosons, N = 1 - n for fermions, maintained exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawReservoir", into = "RawReservoir")]
pub struct Reservoir {
    kind: ReservoirKind,
    n: f64,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
struct RawReservoir {
    kind: ReservoirKind,
    n: f64,
}

impl TryFrom<RawReservoir> for Reservoir {
    type Error = Error;
    fn try_from(raw: RawReservoir) -> Result<Self> {
        Reservoir::new(raw.kind, raw.n)
    }
}

impl From<Reservoir> for RawReservoir {
    fn from(r: Reservoir) -> Self {
        RawReservoir { kind: r.kind, n: r.n }
    }
}

impl Reservoir {
    pub fn new(kind: ReservoirKind, n: f64) -> Result<Self> {
        if !n.is_finite() || n < 0.0 {
            return Err(Error::InvalidParams(format!("occupancy n = {n} must be >= 0")));
        }
        if kind == ReservoirKind::Fermionic && n > 1.0 {
            return Err(Error::InvalidParams(format!("fermionic occupancy n = {n} exceeds 1")));
        }
        Ok(Reservoir { kind, n })
    }

    pub fn bosonic(n: f64) -> Result<Self> {
        Self::new(ReservoirKind::Bosonic, n)
    }

    pub fn fermionic(n: f64) -> Result<Self> {
        Self::new(ReservoirKind::Fermionic, n)
    }

    /// Zero-temperature limit (n = 0) of either kind.
    pub fn zero_temperature() -> Self {
        Reservoir { kind: ReservoirKind::Bosonic, n: 0.0 }
    }

    pub fn kind(&self) -> ReservoirKind {
        self.kind
    }

    /// Average particle number n.
    pub fn occupancy(&self) -> f64 {
        self.n
    }

    /// Companion coefficient N weighting the emission dissipator.
    pub fn companion(&self) -> f64 {
        match self.kind {
            ReservoirKind::Bosonic => 1.0 + self.n,
            ReservoirKind::Fermionic => 1.0 - self.n,
        }
    }
}

/// Bose-Einstein or Fermi-Dirac occupancy of a reservoir mode at frequency
/// `omega_k`, temperature `temperature`, and chemical potential `mu`
/// (fermionic only).  T = 0 is handled as the limit.
///
/// The reservoir mode frequency is not fixed by the model; callers that have
/// no better choice conventionally pass `omega_k = omega0`.
pub fn occupancy_from_temperature(
    kind: ReservoirKind,
    omega_k: f64,
    temperature: f64,
    mu: f64,
) -> Result<Reservoir> {
    if temperature < 0.0 || !temperature.is_finite() {
        return Err(Error::InvalidParams(format!("temperature {temperature} must be >= 0")));
    }
    let n = match kind {
        ReservoirKind::Bosonic => {
            if omega_k <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "bosonic occupancy needs omega_k > 0, got {omega_k}"
                )));
            }
            if temperature == 0.0 {
                0.0
            } else {
                1.0 / ((omega_k / temperature).exp() - 1.0)
            }
        }
        ReservoirKind::Fermionic => {
            if temperature == 0.0 {
                // step function with the symmetric value at the Fermi edge
                if omega_k > mu {
                    0.0
                } else if omega_k < mu {
                    1.0
                } else {
                    0.5
                }
            } else {
                1.0 / (((omega_k - mu) / temperature).exp() + 1.0)
            }
        }
    };
    Reservoir::new(kind, n)
}

/// Full physical parameter set of the charging model.
///
/// `drive` is the field amplitude F, `dissipation` the rate J, and the
/// detunings are Delta_l = omega_l - omega_d.  All energies share one unit
/// (conventionally omega0 = g = 1 for the dimensionless sweeps).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargingParams {
    pub omega0: f64,
    pub g: f64,
    #[serde(rename = "F")]
    pub drive: f64,
    #[serde(rename = "J")]
    pub dissipation: f64,
    #[serde(rename = "delta_A")]
    pub delta_a: f64,
    #[serde(rename = "delta_B")]
    pub delta_b: f64,
    pub reservoir: Reservoir,
    pub beta: f64,
}

impl ChargingParams {
    /// Resonant, zero-temperature parameter point in units omega0 = g = 1,
    /// with the extraction bath at beta = 100/omega0.
    pub fn resonance(k: f64, l: f64) -> Self {
        ChargingParams {
            omega0: 1.0,
            g: 1.0,
            drive: k,
            dissipation: l,
            delta_a: 0.0,
            delta_b: 0.0,
            reservoir: Reservoir::zero_temperature(),
            beta: 100.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.omega0 > 0.0, "omega0 must be > 0"),
            (self.g > 0.0, "g must be > 0"),
            (self.dissipation >= 0.0, "J must be >= 0"),
            (self.drive >= 0.0, "F must be >= 0"),
            (self.beta > 0.0, "beta must be > 0"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::InvalidParams(msg.into()));
            }
        }
        for v in [
            self.omega0,
            self.g,
            self.drive,
            self.dissipation,
            self.delta_a,
            self.delta_b,
            self.beta,
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParams("parameters must be finite".into()));
            }
        }
        Ok(())
    }

    /// k = F/g
    pub fn k(&self) -> f64 {
        self.drive / self.g
    }

    /// l = J/g
    pub fn l(&self) -> f64 {
        self.dissipation / self.g
    }

    /// m = Delta_A/g (the sweeps always set both detunings equal)
    pub fn detuning_ratio(&self) -> f64 {
        self.delta_a / self.g
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Charger-battery Hamiltonian in the rotating frame:
/// (Delta_A/2) sz_A + (Delta_B/2) sz_B + g (s+_A s-_B + s-_A s+_B)
/// + (F/2)(s+_A + s-_A).
pub fn hamiltonian(p: &ChargingParams) -> CMatrix {
    let id = identity(2);
    let sz_a = kron(&qla::pauli_z(), &id);
    let sz_b = kron(&id, &qla::pauli_z());
    let sp_a = kron(&qla::sigma_plus(), &id);
    let sm_a = kron(&qla::sigma_minus(), &id);
    let exchange = kron(&qla::sigma_plus(), &qla::sigma_minus())
        + kron(&qla::sigma_minus(), &qla::sigma_plus());
    sz_a * c(p.delta_a / 2.0, 0.)
        + sz_b * c(p.delta_b / 2.0, 0.)
        + exchange * c(p.g, 0.)
        + (sp_a + sm_a) * c(p.drive / 2.0, 0.)
}

/// Superoperator for the dissipator D_L[rho] = 2 L rho L^dag - L^dag L rho
/// - rho L^dag L, acting on column-stacked rho.
fn dissipator_superop(jump: &CMatrix) -> CMatrix {
    let dim = jump.nrows();
    let id = identity(dim);
    let ldl = jump.adjoint() * jump;
    kron(&jump.conjugate(), jump) * c(2.0, 0.)
        - kron(&id, &ldl)
        - kron(&ldl.transpose(), &id)
}

/// 16x16 Liouvillian: vec(rho_dot) = L vec(rho) with
/// rho_dot = -i[H, rho] + J { N D_{s-_A}[rho] + n D_{s+_A}[rho] }.
pub fn liouvillian(p: &ChargingParams) -> CMatrix {
    let h = hamiltonian(p);
    let id = identity(4);
    let coherent = (kron(&id, &h) - kron(&h.transpose(), &id)) * c(0., -1.);
    let sm_a = kron(&qla::sigma_minus(), &identity(2));
    let sp_a = kron(&qla::sigma_plus(), &identity(2));
    let res = &p.reservoir;
    coherent
        + dissipator_superop(&sm_a) * c(p.dissipation * res.companion(), 0.)
        + dissipator_superop(&sp_a) * c(p.dissipation * res.occupancy(), 0.)
}

/// The joint ground state |gg><gg| the charging protocol starts from.
pub fn initial_state() -> CMatrix {
    let mut rho = CMatrix::zeros(4, 4);
    rho[(3, 3)] = c(1., 0.);
    rho
}

/// Gibbs state of the bare battery, diagonal in {|e>, |g>} with
/// p_e = exp(-beta omega0) / (1 + exp(-beta omega0)).
pub fn thermal_state(beta: f64, omega0: f64) -> CMatrix {
    let w = (-beta * omega0).exp();
    let p_e = w / (1.0 + w);
    CMatrix::from_diagonal(&DVector::from_vec(vec![c(p_e, 0.), c(1.0 - p_e, 0.)]))
}

/// Closed-form steady state at resonance and zero temperature, as a function
/// of k = F/g and l = J/g.
pub fn steady_state_resonance_analytic(k: f64, l: f64) -> Result<CMatrix> {
    let denom = k.powi(4) + 2.0 * (2.0 + k * k) * l * l;
    if denom <= 0.0 {
        return Err(Error::SingularDenominator);
    }
    let (k2, k3, k4) = (k * k, k * k * k, k.powi(4));
    let l2 = l * l;
    let rho = qla::from_rows(
        4,
        &[
            c(k4 / 4.0, 0.),
            c(0., 0.),
            c(0., -k3 * l / 2.0),
            c(0., k2 * l),
            //
            c(0., 0.),
            c(k4 / 4.0, 0.),
            c(0., 0.),
            c(0., -k3 * l / 2.0),
            //
            c(0., k3 * l / 2.0),
            c(0., 0.),
            c((k4 + 4.0 * k2 * l2) / 4.0, 0.),
            c(-2.0 * k * l2, 0.),
            //
            c(0., -k2 * l),
            c(0., k3 * l / 2.0),
            c(-2.0 * k * l2, 0.),
            c((k4 + 4.0 * (4.0 + k2) * l2) / 4.0, 0.),
        ],
    );
    Ok(rho / c(denom, 0.))
}

/// Documented key-value parameter file.
///
/// ```toml
/// units = "g"          # or "omega0"; declares the energy unit of the numbers
/// omega0 = 1.0
/// g = 1.0
/// F = 2.0
/// J = 2.0
/// delta_A = 0.0
/// delta_B = 0.0
/// beta = 100.0
///
/// [reservoir]
/// kind = "bosonic"     # or "fermionic"
/// n = 0.0
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsFile {
    pub units: String,
    #[serde(flatten)]
    pub params: ChargingParams,
}

pub fn params_from_toml(text: &str) -> Result<ChargingParams> {
    let file: ParamsFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    match file.units.as_str() {
        "g" | "omega0" => {}
        other => {
            return Err(Error::Config(format!(
                "units must be \"g\" or \"omega0\", got \"{other}\""
            )))
        }
    }
    file.params.validate()?;
    Ok(file.params)
}
