//! Expectation values, photon statistics and fidelities.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::hilbert::{EmitterLevel, Mode, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObservableSet {
    /// ⟨σ†σ⟩
    pub p_x: f64,
    pub n1_mean: f64,
    pub n2_mean: f64,
    /// ⟨𝒩⟩ = p_x + n1_mean + n2_mean
    pub excitation: f64,
    /// |‖ψ‖ − 1| of the step that produced this sample, before renormalization.
    pub norm_drift: f64,
}

impl ObservableSet {
    pub fn of(state: &StateVector) -> Self {
        let p_x = exciton_population(state);
        let n1_mean = mean_photon_number(state, Mode::One);
        let n2_mean = mean_photon_number(state, Mode::Two);
        Self {
            p_x,
            n1_mean,
            n2_mean,
            excitation: p_x + n1_mean + n2_mean,
            norm_drift: 0.0,
        }
    }

    pub fn mean_photon_number(&self, mode: Mode) -> f64 {
        match mode {
            Mode::One => self.n1_mean,
            Mode::Two => self.n2_mean,
        }
    }
}

/// P_X = ⟨σ†σ⟩.
pub fn exciton_population(state: &StateVector) -> f64 {
    let basis = state.basis();
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| basis.label(*i).level == EmitterLevel::Excited)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// ⟨a_j†a_j⟩.
pub fn mean_photon_number(state: &StateVector, mode: Mode) -> f64 {
    let basis = state.basis();
    state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| basis.label(i).photons(mode) as f64 * a.norm_sqr())
        .sum()
}

/// ⟨𝒩⟩ = ⟨σ†σ + a₁†a₁ + a₂†a₂⟩.
pub fn excitation_number(state: &StateVector) -> f64 {
    exciton_population(state) + mean_photon_number(state, Mode::One) + mean_photon_number(state, Mode::Two)
}

/// ⟨Δn_j⟩ = ⟨a_j†a_j⟩(τ_f) − ⟨a_j†a_j⟩(τ_i).
pub fn photon_variation(traj: &Trajectory, mode: Mode) -> f64 {
    traj.final_observables.mean_photon_number(mode) - traj.initial_observables().mean_photon_number(mode)
}

/// Marginal P(n_j) over the window of `mode`, indexed by `n − n_min`.
pub fn number_distribution(state: &StateVector, mode: Mode) -> Vec<f64> {
    let basis = state.basis();
    let window = basis.window(mode);
    let mut dist = vec![0.0; window.size()];
    for (i, a) in state.amplitudes().iter().enumerate() {
        let n = basis.label(i).photons(mode);
        dist[(n - window.n_min()) as usize] += a.norm_sqr();
    }
    dist
}

/// |⟨target|state⟩|². With `optimize_relative_phase` and a target of exactly
/// two nonzero components, the relative phase between those components is
/// chosen to maximize the overlap; otherwise the flag has no effect.
pub fn fidelity(state: &StateVector, target: &StateVector, optimize_relative_phase: bool) -> Result<f64> {
    if state.basis() != target.basis() {
        return Err(Error::BasisMismatch);
    }
    let raw = target.inner(state)?.norm_sqr();
    if !optimize_relative_phase {
        return Ok(raw);
    }
    let support: Vec<(C64, C64)> = target
        .amplitudes()
        .iter()
        .zip(state.amplitudes())
        .filter(|(t, _)| t.norm_sqr() > 0.0)
        .map(|(t, s)| (*t, *s))
        .collect();
    if support.len() != 2 {
        return Ok(raw);
    }
    // max_φ |c₀ + e^{iφ} c₁|² = (|c₀| + |c₁|)²
    let best: f64 = support.iter().map(|(t, s)| (t.conj() * s).norm()).sum();
    Ok(best * best)
}

/// Default prominence for [`count_local_maxima`].
pub const PEAK_PROMINENCE: f64 = 1e-3;

/// Number of local maxima of `series` that rise at least `prominence` above
/// the preceding minimum and fall at least `prominence` after it. A maximum
/// at the end of the series is not counted. Wiggles below `prominence`
/// (integrator noise, plateau ripple) are ignored.
pub fn count_local_maxima(series: &[f64], prominence: f64) -> usize {
    let Some(&first) = series.first() else {
        return 0;
    };
    let mut count = 0;
    let mut rising = true;
    let mut extreme = first;
    for &x in series {
        if rising {
            if x > extreme {
                extreme = x;
            } else if extreme - x >= prominence {
                count += 1;
                rising = false;
                extreme = x;
            }
        } else if x < extreme {
            extreme = x;
        } else if x - extreme >= prominence {
            rising = true;
            extreme = x;
        }
    }
    count
}

/// P_X(τ) over the recorded samples of a trajectory.
pub fn population_series(traj: &Trajectory) -> Vec<f64> {
    traj.observables.iter().map(|o| o.p_x).collect()
}
