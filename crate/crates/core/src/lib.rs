//! Simulation library for a driven-dissipative two-qubit quantum battery.
//!
//! A two-level charger is driven by a classical field, damped by a bosonic or
//! fermionic reservoir, and exchange-coupled to a two-level battery.  The
//! library evolves the joint density matrix under a Lindblad master equation,
//! extracts steady states from the Liouvillian kernel, and computes the
//! thermodynamic (exergy, ergotropy, conversion efficiencies) and
//! entropic-uncertainty (uncertainty sum, lower bound, tightness) quantities
//! of the battery, plus a deterministic parameter-sweep engine with CSV
//! output.

pub mod dynamics;
pub mod error;
pub mod eur;
pub mod model;
pub mod qla;
pub mod sweep;
pub mod workext;

pub use error::{Error, Result};
pub use qla::{CMatrix, LogBase, C64};
