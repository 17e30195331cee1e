//! Time evolution of density matrices: unitary von Neumann dynamics via
//! Hermitian eigendecomposition, Lindblad dynamics via a fixed-step RK4
//! integrator, and the gravitational collapse-time estimate τ = ħ/ΔE.
//!
//! The generator is
//!   dρ/dt = −i[H, ρ] − (1/2) Σ_j (L_j†L_jρ + ρL_j†L_j − 2 L_jρL_j†)
//! in ħ = 1 units. The commutator part alone preserves the spectrum and
//! the entropy; the dissipator part preserves the trace but not the
//! entropy, and entropy growth is guaranteed only for Hermitian L_j.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qdm::{
    check_finite, commutator, hermitian_eigen, hermiticity_deviation, CMatrix, DensityMatrix,
};

/// Hamiltonian plus Lindblad operators on a common space.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    hamiltonian: CMatrix,
    lindblad_ops: Vec<CMatrix>,
    dim: usize,
}

impl LindbladModel {
    pub fn new(hamiltonian: CMatrix, lindblad_ops: Vec<CMatrix>) -> Result<Self> {
        let dim = hamiltonian.nrows();
        if hamiltonian.ncols() != dim || dim == 0 {
            return Err(Error::Dimension("Hamiltonian must be square".into()));
        }
        check_finite(&hamiltonian)?;
        let dev = hermiticity_deviation(&hamiltonian);
        if dev > 1e-10 {
            return Err(Error::Validation(format!(
                "Hamiltonian hermiticity deviation {dev:.3e} exceeds 1e-10"
            )));
        }
        for (j, l) in lindblad_ops.iter().enumerate() {
            if l.nrows() != dim || l.ncols() != dim {
                return Err(Error::Dimension(format!(
                    "Lindblad operator {j} is {}x{}, expected {dim}x{dim}",
                    l.nrows(),
                    l.ncols()
                )));
            }
            check_finite(l)?;
        }
        Ok(Self {
            hamiltonian,
            lindblad_ops,
            dim,
        })
    }

    /// Unitary model with no dissipators.
    pub fn unitary(hamiltonian: CMatrix) -> Result<Self> {
        Self::new(hamiltonian, Vec::new())
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn lindblad_ops(&self) -> &[CMatrix] {
        &self.lindblad_ops
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Recorded states and entropies along an integration run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub entropies: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory is never empty")
    }
}

/// ρ(t) = U ρ U† with U = exp(−iHt), computed from the eigendecomposition
/// of H so unitarity holds to rounding. Negative t evolves backward.
pub fn evolve_von_neumann(rho0: &DensityMatrix, h: &CMatrix, t: f64) -> Result<DensityMatrix> {
    if h.nrows() != rho0.dim() || h.ncols() != rho0.dim() {
        return Err(Error::Dimension("Hamiltonian/state dimension mismatch".into()));
    }
    let dev = hermiticity_deviation(h);
    if dev > 1e-10 {
        return Err(Error::Validation(format!(
            "Hamiltonian hermiticity deviation {dev:.3e} exceeds 1e-10"
        )));
    }
    if !t.is_finite() {
        return Err(Error::Validation("non-finite time".into()));
    }
    let (eigs, vecs) = hermitian_eigen(h);
    let phases = CMatrix::from_diagonal(&DVector::from_iterator(
        h.nrows(),
        eigs.iter().map(|&e| Complex64::new(0.0, -e * t).exp()),
    ));
    let u = &vecs * phases * vecs.adjoint();
    let m = &u * rho0.matrix() * u.adjoint();
    DensityMatrix::with_tolerances(m, 1e-9, 1e-9, -1e-9)
}

/// dρ/dt for the model; traceless within rounding.
pub fn lindblad_rhs(model: &LindbladModel, rho: &DensityMatrix) -> Result<CMatrix> {
    if rho.dim() != model.dim() {
        return Err(Error::Dimension("state dimension does not match model".into()));
    }
    Ok(rhs_raw(model, rho.matrix()))
}

fn rhs_raw(model: &LindbladModel, rho: &CMatrix) -> CMatrix {
    let mut out = commutator(&model.hamiltonian, rho).map(|z| z * Complex64::new(0.0, -1.0));
    for l in &model.lindblad_ops {
        let ldag = l.adjoint();
        let ldl = &ldag * l;
        out += l * rho * &ldag - (&ldl * rho + rho * &ldl).scale(0.5);
    }
    out
}

/// Fixed-step 4th-order integration of the Lindblad equation, recording
/// the state and entropy at each grid time. Sub-steps between grid points
/// never exceed `dt_max`. Trace drift is asserted, not renormalized away:
/// drift beyond 1e-9 per unit time or a positivity violation beyond 1e-7
/// aborts with an integration error advising a smaller `dt_max`.
pub fn evolve_lindblad(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    dt_max: f64,
) -> Result<Trajectory> {
    if rho0.dim() != model.dim() {
        return Err(Error::Dimension("state dimension does not match model".into()));
    }
    if t_grid.is_empty() {
        return Err(Error::Validation("empty time grid".into()));
    }
    if !(dt_max > 0.0) {
        return Err(Error::Validation("dt_max must be positive".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("time grid must be strictly increasing".into()));
    }

    let t0 = t_grid[0];
    let mut current = rho0.matrix().clone();
    let mut times = Vec::with_capacity(t_grid.len());
    let mut states = Vec::with_capacity(t_grid.len());
    let mut entropies = Vec::with_capacity(t_grid.len());

    let mut record = |t: f64, m: &CMatrix| -> Result<()> {
        let elapsed = (t - t0).abs();
        let trace_tol = 1e-9 * (1.0 + elapsed);
        let rho = DensityMatrix::with_tolerances(m.clone(), 1e-8, trace_tol, -1e-7)
            .map_err(|e| {
                Error::Integration(format!("state invalid at t = {t}: {e}; reduce dt_max"))
            })?;
        let s = rho.vn_entropy();
        times.push(t);
        entropies.push(s);
        states.push(rho);
        Ok(())
    };

    record(t0, &current)?;
    for w in t_grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let span = b - a;
        let n_steps = (span / dt_max).ceil().max(1.0) as usize;
        let h = span / n_steps as f64;
        for _ in 0..n_steps {
            current = rk4_step(model, &current, h);
        }
        record(b, &current)?;
    }

    Ok(Trajectory {
        times,
        states,
        entropies,
    })
}

fn rk4_step(model: &LindbladModel, rho: &CMatrix, h: f64) -> CMatrix {
    let k1 = rhs_raw(model, rho);
    let k2 = rhs_raw(model, &(rho + k1.scale(h / 2.0)));
    let k3 = rhs_raw(model, &(rho + k2.scale(h / 2.0)));
    let k4 = rhs_raw(model, &(rho + k3.scale(h)));
    rho + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0)
}

/// Characteristic lifetime τ = ħ/ΔE of a superposition with gravitational
/// self-energy ΔE.
pub fn dp_collapse_time(delta_e: f64, hbar: f64) -> Result<f64> {
    if !(delta_e > 0.0) {
        return Err(Error::Validation(format!(
            "delta_e must be positive, got {delta_e}"
        )));
    }
    if !(hbar > 0.0) {
        return Err(Error::Validation(format!("hbar must be positive, got {hbar}")));
    }
    Ok(hbar / delta_e)
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    )
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qdm::{max_abs_diff, PureState};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plus_state() -> DensityMatrix {
        let s = 1.0 / 2.0_f64.sqrt();
        DensityMatrix::from_amplitudes(&[c(s, 0.0), c(s, 0.0)]).unwrap()
    }

    #[test]
    fn zero_hamiltonian_is_identity_evolution() {
        let rho = plus_state();
        let h = CMatrix::zeros(2, 2);
        let out = evolve_von_neumann(&rho, &h, 3.7).unwrap();
        assert!(max_abs_diff(out.matrix(), rho.matrix()) <= 1e-13);
    }

    #[test]
    fn rabi_population_closed_form() {
        // H = Δ σ_x / 2 from |0⟩⟨0|: P₁(t) = sin²(Δt/2)
        let delta = 1.3;
        let h = sigma_x().scale(delta / 2.0);
        let rho0 = DensityMatrix::from_pure(&PureState::basis_state(2, 0));
        for &t in &[0.0, 0.4, 1.0, 2.5, 7.9] {
            let rho = evolve_von_neumann(&rho0, &h, t).unwrap();
            let expect = (delta * t / 2.0).sin().powi(2);
            assert!(
                (rho.matrix()[(1, 1)].re - expect).abs() <= 1e-12,
                "t = {t}"
            );
        }
    }

    #[test]
    fn forward_backward_round_trip() {
        let h = sigma_x().scale(0.8) + sigma_z().scale(0.3);
        let rho0 = plus_state();
        let fwd = evolve_von_neumann(&rho0, &h, 2.1).unwrap();
        let back = evolve_von_neumann(&fwd, &h, -2.1).unwrap();
        assert!(max_abs_diff(back.matrix(), rho0.matrix()) <= 1e-9);
    }

    #[test]
    fn unitary_evolution_preserves_entropy_and_spectrum() {
        let h = sigma_x().scale(0.5) + sigma_z().scale(1.1);
        let mixed = DensityMatrix::mix(&[
            (0.3, DensityMatrix::from_pure(&PureState::basis_state(2, 0))),
            (0.7, plus_state()),
        ])
        .unwrap();
        let out = evolve_von_neumann(&mixed, &h, 4.2).unwrap();
        assert!((out.vn_entropy() - mixed.vn_entropy()).abs() <= 1e-10);
        let (a, b) = (mixed.eigenvalues(), out.eigenvalues());
        for i in 0..2 {
            assert!((a[i] - b[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn rejects_non_hermitian_hamiltonian() {
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 1)] = c(1.0, 0.0);
        assert!(evolve_von_neumann(&plus_state(), &h, 1.0).is_err());
        assert!(LindbladModel::new(h, vec![]).is_err());
    }

    #[test]
    fn rhs_reduces_to_commutator_without_dissipators() {
        let h = sigma_z().scale(0.9);
        let model = LindbladModel::unitary(h.clone()).unwrap();
        let rho = plus_state();
        let rhs = lindblad_rhs(&model, &rho).unwrap();
        let expect = commutator(&h, rho.matrix()).map(|z| z * c(0.0, -1.0));
        assert!(max_abs_diff(&rhs, &expect) <= 1e-15);
    }

    #[test]
    fn dephasing_rhs_hand_expansion() {
        // H = 0, L = √γ σ_z: off-diagonal decays at rate 2γ
        let gamma: f64 = 0.7;
        let l = sigma_z().scale(gamma.sqrt());
        let model = LindbladModel::new(CMatrix::zeros(2, 2), vec![l]).unwrap();
        let rho = plus_state();
        let rhs = lindblad_rhs(&model, &rho).unwrap();
        let r = rho.matrix()[(0, 1)];
        assert!((rhs[(0, 1)] - r * c(-2.0 * gamma, 0.0)).norm() <= 1e-14);
        assert!(rhs[(0, 0)].norm() <= 1e-14);
        assert!(rhs.trace().norm() <= 1e-12);
    }

    #[test]
    fn maximally_mixed_is_stationary_for_hermitian_dissipators() {
        let l = sigma_x().scale(0.6) + sigma_z().scale(0.4);
        let model = LindbladModel::new(CMatrix::zeros(2, 2), vec![l]).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        let rhs = lindblad_rhs(&model, &rho).unwrap();
        assert!(rhs.iter().map(|z| z.norm()).fold(0.0, f64::max) <= 1e-14);
    }

    #[test]
    fn dephasing_envelope_matches_closed_form() {
        let gamma: f64 = 1.0;
        let l = sigma_z().scale(gamma.sqrt());
        let model = LindbladModel::new(CMatrix::zeros(2, 2), vec![l]).unwrap();
        let grid: Vec<f64> = (0..=20).map(|k| 0.05 * k as f64).collect();
        let traj = evolve_lindblad(&model, &plus_state(), &grid, 1e-3).unwrap();
        for (i, &t) in traj.times.iter().enumerate() {
            let got = traj.states[i].matrix()[(0, 1)].norm();
            let expect = 0.5 * (-2.0 * gamma * t).exp();
            assert!((got - expect).abs() <= 1e-6, "t = {t}: {got} vs {expect}");
        }
        // entropy is monotone and approaches ln 2
        for w in traj.entropies.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
        let grid_long: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let long = evolve_lindblad(&model, &plus_state(), &grid_long, 1e-3).unwrap();
        assert!((long.entropies.last().unwrap() - 2.0_f64.ln()).abs() <= 1e-4);
    }

    #[test]
    fn empty_dissipator_list_keeps_entropy_constant() {
        let h = sigma_x().scale(0.9);
        let model = LindbladModel::unitary(h).unwrap();
        let grid: Vec<f64> = (0..=15).map(|k| 0.2 * k as f64).collect();
        let traj = evolve_lindblad(&model, &plus_state(), &grid, 1e-3).unwrap();
        let s0 = traj.entropies[0];
        for &s in &traj.entropies {
            assert!((s - s0).abs() <= 1e-8);
        }
    }

    #[test]
    fn trace_and_hermiticity_hold_along_trajectory() {
        let h = sigma_x().scale(0.4);
        let l = sigma_z().scale(0.5);
        let model = LindbladModel::new(h, vec![l]).unwrap();
        let grid: Vec<f64> = (0..=10).map(|k| 0.3 * k as f64).collect();
        let traj = evolve_lindblad(&model, &plus_state(), &grid, 1e-3).unwrap();
        for s in &traj.states {
            assert!((s.matrix().trace().re - 1.0).abs() <= 1e-8);
            assert!(hermiticity_deviation(s.matrix()) <= 1e-8);
        }
        for (i, s) in traj.states.iter().enumerate() {
            assert!((traj.entropies[i] - s.vn_entropy()).abs() <= 1e-9);
        }
    }

    #[test]
    fn step_halving_shows_fourth_order_convergence() {
        let gamma: f64 = 1.0;
        let l = sigma_z().scale(gamma.sqrt());
        let model = LindbladModel::new(CMatrix::zeros(2, 2), vec![l]).unwrap();
        let grid = [0.0, 1.0];
        let exact = 0.5 * (-2.0 * gamma).exp();
        let err_at = |dt: f64| {
            let traj = evolve_lindblad(&model, &plus_state(), &grid, dt).unwrap();
            (traj.final_state().matrix()[(0, 1)].norm() - exact).abs()
        };
        let e1 = err_at(0.1);
        let e2 = err_at(0.05);
        assert!(e1 / e2 >= 8.0, "convergence ratio {}", e1 / e2);
    }

    #[test]
    fn collapse_time_scaling() {
        assert_eq!(dp_collapse_time(1.0, 1.0).unwrap(), 1.0);
        let t1 = dp_collapse_time(2.0, 1.0).unwrap();
        let t2 = dp_collapse_time(4.0, 1.0).unwrap();
        assert!((t1 / t2 - 2.0).abs() <= 1e-15);
        assert_eq!(dp_collapse_time(1e-3, 1.0).unwrap(), 1e3);
        assert!(dp_collapse_time(0.0, 1.0).is_err());
        assert!(dp_collapse_time(-1.0, 1.0).is_err());
    }

    #[test]
    fn bad_grid_and_dt_are_rejected() {
        let model = LindbladModel::unitary(CMatrix::zeros(2, 2)).unwrap();
        let rho = plus_state();
        assert!(evolve_lindblad(&model, &rho, &[], 0.1).is_err());
        assert!(evolve_lindblad(&model, &rho, &[0.0, 0.0], 0.1).is_err());
        assert!(evolve_lindblad(&model, &rho, &[0.0, 1.0], 0.0).is_err());
    }
}
