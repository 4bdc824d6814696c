//! Dense exact-unitary propagator used to check the RK4 integrator.
//!
//! H(τ) is assembled as a dense matrix from the ladder terms of
//! [`crate::hilbert`] and every sub-interval is propagated with
//! exp(−iK) for a Hermitian K, evaluated through an eigendecomposition.
//! The result is norm-preserving up to round-off.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::dynamics::{envelope, SimConfig};
use crate::error::{Error, Result};
use crate::hilbert::{apply_lowering_term, apply_raising_term, Mode, ProductBasis, StateVector};

/// Largest basis dimension accepted by the dense propagator.
pub const DENSE_LIMIT: usize = 2000;

/// How K is built on each sub-interval [τ, τ+h].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleScheme {
    /// K = h·H(τ + h/2): H held constant on the sub-interval (second order).
    PiecewiseConstant,
    /// Two-point Gauss-Legendre Magnus expansion (fourth order):
    /// K = h/2·(H₁ + H₂) − i·√3h²/12·[H₂, H₁].
    #[default]
    Magnus4,
}

/// Dense ladder matrices σ†a_j and σa_j† for both modes.
struct DenseModel {
    raising: [DMatrix<C64>; 2],
    lowering: [DMatrix<C64>; 2],
    g: [f64; 2],
    delta: [f64; 2],
}

fn operator_matrix(basis: &ProductBasis, op: impl Fn(&StateVector) -> StateVector) -> DMatrix<C64> {
    let dim = basis.dimension();
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut e = StateVector::zeros(*basis);
        e.amplitudes_mut()[col] = C64::new(1.0, 0.0);
        for (row, a) in op(&e).amplitudes().iter().enumerate() {
            m[(row, col)] = *a;
        }
    }
    m
}

impl DenseModel {
    fn new(cfg: &SimConfig) -> Result<Self> {
        let basis = cfg.basis();
        let dimension = basis.dimension();
        if dimension > DENSE_LIMIT {
            return Err(Error::DimensionTooLarge { dimension, limit: DENSE_LIMIT });
        }
        let raising = Mode::ALL.map(|m| operator_matrix(&basis, |s| apply_raising_term(s, m)));
        let lowering = Mode::ALL.map(|m| operator_matrix(&basis, |s| apply_lowering_term(s, m)));
        Ok(Self {
            raising,
            lowering,
            g: [cfg.g1, cfg.g2],
            delta: [cfg.delta1, cfg.delta2],
        })
    }

    fn hamiltonian(&self, tau: f64) -> DMatrix<C64> {
        let dim = self.raising[0].nrows();
        let mut h = DMatrix::zeros(dim, dim);
        for j in 0..2 {
            if self.g[j] == 0.0 {
                continue;
            }
            let c = C64::from_polar(self.g[j] * envelope(tau), -self.delta[j] * tau);
            h += &self.raising[j] * c + &self.lowering[j] * c.conj();
        }
        h
    }

    fn exponent(&self, tau: f64, h: f64, scheme: OracleScheme) -> DMatrix<C64> {
        match scheme {
            OracleScheme::PiecewiseConstant => self.hamiltonian(tau + 0.5 * h) * C64::new(h, 0.0),
            OracleScheme::Magnus4 => {
                let offset = 3f64.sqrt() / 6.0;
                let h1 = self.hamiltonian(tau + h * (0.5 - offset));
                let h2 = self.hamiltonian(tau + h * (0.5 + offset));
                let comm = &h2 * &h1 - &h1 * &h2;
                (&h1 + &h2) * C64::new(0.5 * h, 0.0) + comm * C64::new(0.0, -3f64.sqrt() * h * h / 12.0)
            }
        }
    }

    /// ψ ← exp(−iK) ψ
    fn propagate(&self, psi: &mut DVector<C64>, tau: f64, h: f64, scheme: OracleScheme) {
        let mut k = self.exponent(tau, h, scheme);
        // symmetrize against round-off before the Hermitian solver
        let kt = k.adjoint();
        k = (k + kt) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(k);
        let v = &eig.eigenvectors;
        let mut coeffs = v.adjoint() * &*psi;
        for (c, lambda) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
            *c *= C64::from_polar(1.0, -lambda);
        }
        *psi = v * coeffs;
    }
}

/// Propagate `cfg`'s initial state over the full pulse, splitting each RK4
/// step of length `cfg.step()` into `substeps_per_dt` exact-unitary pieces.
pub fn oracle_propagate(cfg: &SimConfig, substeps_per_dt: usize) -> Result<StateVector> {
    oracle_propagate_with(cfg, substeps_per_dt, OracleScheme::default())
}

pub fn oracle_propagate_with(cfg: &SimConfig, substeps_per_dt: usize, scheme: OracleScheme) -> Result<StateVector> {
    cfg.validate()?;
    let initial = cfg.initial_state()?;
    let model = DenseModel::new(cfg)?;
    let substeps = substeps_per_dt.max(1);
    let steps = cfg.total_steps() * substeps;
    let h = 2.0 * cfg.span_sigma / steps as f64;
    let mut psi = DVector::from_column_slice(initial.amplitudes());
    for k in 0..steps {
        model.propagate(&mut psi, -cfg.span_sigma + k as f64 * h, h, scheme);
    }
    StateVector::from_amplitudes(cfg.basis(), psi.iter().copied().collect())
}

/// Propagate an arbitrary state from τ to τ + dt in `substeps` pieces.
pub fn oracle_step(
    state: &StateVector,
    tau: f64,
    dt: f64,
    cfg: &SimConfig,
    substeps: usize,
    scheme: OracleScheme,
) -> Result<StateVector> {
    if *state.basis() != cfg.basis() {
        return Err(Error::BasisMismatch);
    }
    let model = DenseModel::new(cfg)?;
    let substeps = substeps.max(1);
    let h = dt / substeps as f64;
    let mut psi = DVector::from_column_slice(state.amplitudes());
    for k in 0..substeps {
        model.propagate(&mut psi, tau + k as f64 * h, h, scheme);
    }
    StateVector::from_amplitudes(cfg.basis(), psi.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{EmitterLevel, TruncationWindow};

    #[test]
    fn identity_without_coupling() {
        let cfg = SimConfig::fock(EmitterLevel::Ground, 2, 1)
            .with_windows(TruncationWindow::new(0, 3).unwrap(), TruncationWindow::new(0, 2).unwrap())
            .with_dt(0.05);
        let out = oracle_propagate(&cfg, 1).unwrap();
        let init = cfg.initial_state().unwrap();
        for (a, b) in out.amplitudes().iter().zip(init.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn dense_limit_enforced() {
        let cfg = SimConfig::fock(EmitterLevel::Ground, 100, 100)
            .with_windows(TruncationWindow::new(70, 130).unwrap(), TruncationWindow::new(80, 120).unwrap());
        assert!(matches!(
            oracle_propagate(&cfg, 1),
            Err(Error::DimensionTooLarge { dimension: 5002, limit: DENSE_LIMIT })
        ));
    }

    #[test]
    fn unitary_to_round_off() {
        let cfg = SimConfig::fock(EmitterLevel::Ground, 2, 0)
            .with_detunings(-4.06, -15.96)
            .with_couplings(5.0, 5.0)
            .with_windows(TruncationWindow::new(0, 2).unwrap(), TruncationWindow::new(0, 2).unwrap())
            .with_dt(0.01);
        for scheme in [OracleScheme::PiecewiseConstant, OracleScheme::Magnus4] {
            let out = oracle_propagate_with(&cfg, 1, scheme).unwrap();
            assert!((out.norm() - 1.0).abs() < 1e-12);
        }
    }
}
