//! Time evolution of the master equation and steady-state extraction.

use nalgebra::DVector;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::model::{self, ChargingParams};
use crate::qla::{self, hermitize, unvec_col, vec_col, CMatrix, C64};

/// Default fixed integration step in units of 1/g.
pub const DEFAULT_DT: f64 = 1e-3;

/// At most this many states are retained per trajectory.
pub const MAX_RECORDED_STATES: usize = 2000;

/// Recorded states of one integration run.  Times are uniformly spaced
/// (every `stride` integration steps) and strictly increasing.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    /// Integration step dt (not the recording interval).
    pub step: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &CMatrix {
        self.states.last().expect("trajectory contains at least the initial state")
    }
}

/// Stride that keeps the number of recorded states at or below the cap.
pub fn default_stride(t_end: f64, dt: f64) -> usize {
    let steps = (t_end / dt).ceil() as usize;
    (steps / MAX_RECORDED_STATES).max(1)
}

/// Classical fixed-step 4th-order integration of vec(rho_dot) = L vec(rho),
/// recording every `stride` steps.  The state is re-Hermitized after each
/// step; recorded states are checked for trace and positivity drift.
pub fn evolve(
    p: &ChargingParams,
    rho0: &CMatrix,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<Trajectory> {
    p.validate()?;
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::InvalidParams(format!("dt = {dt} must be > 0")));
    }
    if stride == 0 {
        return Err(Error::InvalidParams("stride must be >= 1".into()));
    }
    if rho0.nrows() != 4 || rho0.ncols() != 4 {
        return Err(Error::Dimension { expected: 4, got: rho0.nrows() });
    }

    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    if t_end < dt {
        return Ok(Trajectory { times, states, step: dt });
    }

    let lv = model::liouvillian(p);
    let n_steps = (t_end / dt).round() as usize;
    let mut v = vec_col(rho0);
    let half = Complex::new(dt / 2.0, 0.0);
    let sixth = Complex::new(dt / 6.0, 0.0);
    let full = Complex::new(dt, 0.0);
    let two = Complex::new(2.0, 0.0);

    for step_idx in 1..=n_steps {
        let k1 = &lv * &v;
        let k2 = &lv * &(&v + &k1 * half);
        let k3 = &lv * &(&v + &k2 * half);
        let k4 = &lv * &(&v + &k3 * full);
        v += (k1 + k2 * two + k3 * two + k4) * sixth;

        // re-Hermitize; round-off is the only source of asymmetry here
        let rho = hermitize(&unvec_col(&v, 4));
        v = vec_col(&rho);

        if step_idx % stride == 0 || step_idx == n_steps {
            let t = step_idx as f64 * dt;
            let trace = rho.trace();
            if (trace.re - 1.0).abs() > 1e-9 {
                return Err(Error::Trace { trace: trace.re });
            }
            let min = qla::eig_hermitian(&rho)?
                .eigenvalues
                .first()
                .copied()
                .unwrap_or(0.0);
            if min < -1e-6 {
                return Err(Error::IntegrationInstability { t, min });
            }
            times.push(t);
            states.push(rho);
        }
    }
    Ok(Trajectory { times, states, step: dt })
}

/// Steady state from the kernel of the 16x16 Liouvillian.
///
/// The right-singular vector of the smallest singular value is reshaped,
/// Hermitized, and trace-normalized.  A second near-zero singular value
/// means the kernel is degenerate and the steady state not unique.
pub fn steady_state(p: &ChargingParams) -> Result<CMatrix> {
    p.validate()?;
    if p.dissipation <= 0.0 {
        return Err(Error::InvalidParams("steady state needs J > 0".into()));
    }
    let lv = model::liouvillian(p);
    let svd = lv.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right-singular vectors");
    let sv = &svd.singular_values;

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let norm = sv[order[sv.len() - 1]];
    let gap = sv[order[1]];
    if gap < 1e-8 * norm {
        return Err(Error::DegenerateSteadyState { gap, tol: 1e-8 * norm });
    }

    // rows of v_t are the conjugated right-singular vectors
    let kernel: DVector<C64> = v_t.row(order[0]).adjoint();
    let candidate = unvec_col(&kernel, 4);
    // the singular vector carries an arbitrary global phase; rotate it out
    // through the trace before Hermitizing, or the Hermitization can cancel
    // the whole state
    let trace = candidate.trace();
    if trace.norm() < 1e-12 {
        return Err(Error::SolverFailure { min: trace.norm() });
    }
    let mut rho = hermitize(&(candidate * (trace.conj() / trace.norm())));
    rho /= Complex::new(rho.trace().re, 0.0);

    let spectrum = qla::eig_hermitian(&rho)?;
    let min = spectrum.eigenvalues[0];
    if min < -1e-8 {
        return Err(Error::SolverFailure { min });
    }
    if min < 0.0 {
        // clip the round-off negatives and renormalize, same policy as entropies
        let clipped: Vec<C64> = spectrum
            .eigenvalues
            .iter()
            .map(|&x| Complex::new(x.max(0.0), 0.0))
            .collect();
        let basis = &spectrum.eigenvectors;
        rho = basis * CMatrix::from_diagonal(&DVector::from_vec(clipped)) * basis.adjoint();
        rho /= rho.trace();
    }
    Ok(rho)
}

/// Residual max |L vec(rho)| of a candidate steady state.
pub fn steady_state_residual(p: &ChargingParams, rho: &CMatrix) -> f64 {
    let image = model::liouvillian(p) * vec_col(rho);
    image.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Trace distance (1/2) sum |lambda_i(a - b)|.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.nrows(), b.nrows(), "trace distance needs equal dimensions");
    let diff = hermitize(&(a - b));
    let spectrum = diff.symmetric_eigen();
    0.5 * spectrum.eigenvalues.iter().map(|x| x.abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qla::max_abs;
    use crate::model::{initial_state, steady_state_resonance_analytic, Reservoir};
    use approx::assert_abs_diff_eq;

    fn ket_eg() -> CMatrix {
        let mut rho = CMatrix::zeros(4, 4);
        rho[(1, 1)] = Complex::new(1.0, 0.0);
        rho
    }

    #[test]
    fn closed_exchange_full_swap() {
        // J = F = Delta = 0: excitation swaps charger -> battery as cos^2(gt)
        let mut p = ChargingParams::resonance(0.0, 0.0);
        p.dissipation = 0.0;
        let t_swap = std::f64::consts::FRAC_PI_2;
        let traj = evolve(&p, &ket_eg(), t_swap, t_swap / 2000.0, 10).unwrap();
        let battery_excited = traj.final_state()[(2, 2)].re;
        assert_abs_diff_eq!(battery_excited, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn zero_time_returns_initial_state() {
        let p = ChargingParams::resonance(2.0, 2.0);
        let traj = evolve(&p, &initial_state(), 0.0, 1e-3, 1).unwrap();
        assert_eq!(traj.states.len(), 1);
        assert_eq!(traj.times, vec![0.0]);
    }

    #[test]
    fn trace_conserved_along_trajectory() {
        let p = ChargingParams::resonance(2.0, 2.0);
        let traj = evolve(&p, &initial_state(), 20.0, 1e-3, 100).unwrap();
        for rho in &traj.states {
            assert!((rho.trace().re - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let p = ChargingParams::resonance(2.0, 2.0);
        let t_end = 2.0;
        let reference = evolve(&p, &initial_state(), t_end, 5e-4, usize::MAX).unwrap();
        let coarse = evolve(&p, &initial_state(), t_end, 4e-2, usize::MAX).unwrap();
        let fine = evolve(&p, &initial_state(), t_end, 2e-2, usize::MAX).unwrap();
        let err_coarse = max_abs(&(coarse.final_state() - reference.final_state()));
        let err_fine = max_abs(&(fine.final_state() - reference.final_state()));
        let ratio = err_coarse / err_fine;
        assert!((8.0..40.0).contains(&ratio), "error ratio {ratio} not ~16");
        // halving from the default step barely moves the answer
        assert!(err_fine < 1e-8);
    }

    #[test]
    fn dark_steady_state_without_drive() {
        let p = ChargingParams::resonance(0.0, 2.0);
        let rho = steady_state(&p).unwrap();
        assert!(max_abs(&(rho - initial_state())) < 1e-10);
    }

    #[test]
    fn steady_state_matches_analytic() {
        let p = ChargingParams::resonance(2.0, 2.0);
        let numeric = steady_state(&p).unwrap();
        let analytic = steady_state_resonance_analytic(2.0, 2.0).unwrap();
        assert!(max_abs(&(numeric - analytic)) < 1e-8);
    }

    #[test]
    fn steady_state_fermionic_residual() {
        let mut p = ChargingParams::resonance(2.0, 2.0);
        p.reservoir = Reservoir::fermionic(0.5).unwrap();
        let rho = steady_state(&p).unwrap();
        assert!(steady_state_residual(&p, &rho) < 1e-9);
        assert_abs_diff_eq!(rho.trace().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn steady_state_is_fixed_point() {
        let p = ChargingParams::resonance(2.0, 2.0);
        let rho = steady_state(&p).unwrap();
        let traj = evolve(&p, &rho, 1.0, 1e-3, usize::MAX).unwrap();
        assert!(trace_distance(traj.final_state(), &rho) < 1e-9);
    }

    #[test]
    fn monotone_approach_to_equilibrium() {
        for (f, j) in [(2.0, 0.5), (2.0, 2.0), (2.0, 4.0), (0.5, 2.0), (4.0, 2.0)] {
            let p = ChargingParams::resonance(f, j);
            let rho_ss = steady_state(&p).unwrap();
            let traj = evolve(&p, &initial_state(), 100.0, 1e-3, usize::MAX).unwrap();
            let halfway = evolve(&p, &initial_state(), 50.0, 1e-3, usize::MAX).unwrap();
            let d50 = trace_distance(halfway.final_state(), &rho_ss);
            let d100 = trace_distance(traj.final_state(), &rho_ss);
            // strict decrease unless both have hit the round-off floor
            if d50 > 1e-12 {
                assert!(d50 > d100, "F={f} J={j}: d(50)={d50:.3e} <= d(100)={d100:.3e}");
            } else {
                assert!(d100 < 1e-12);
            }
        }
    }

    #[test]
    fn trace_distance_basics() {
        let e = {
            let mut m = CMatrix::zeros(2, 2);
            m[(0, 0)] = Complex::new(1.0, 0.0);
            m
        };
        let g = {
            let mut m = CMatrix::zeros(2, 2);
            m[(1, 1)] = Complex::new(1.0, 0.0);
            m
        };
        assert_abs_diff_eq!(trace_distance(&e, &e), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(trace_distance(&e, &g), 1.0, epsilon = 1e-12);
        let mixed = qla::identity(2) * Complex::new(0.5, 0.0);
        assert_abs_diff_eq!(trace_distance(&mixed, &g), 0.5, epsilon = 1e-12);
    }
}
