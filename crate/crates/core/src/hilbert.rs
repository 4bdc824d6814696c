//! Truncated product Fock bases, initial states, and the two ladder terms of
//! the Jaynes-Cummings coupling.
//!
//! The composite space is {G, X} ⊗ {n₁ ∈ window 1} ⊗ {n₂ ∈ window 2}. Basis
//! states are laid out level-major:
//!
//! ```text
//! index(level, n1, n2) = level·M₁·M₂ + (n1 − n1_min)·M₂ + (n2 − n2_min)
//! ```
//!
//! with Ground → 0 and Excited → 1.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance on the probability a coherent state may lose to truncation.
pub const DEFAULT_COHERENT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmitterLevel {
    Ground,
    Excited,
}

impl EmitterLevel {
    pub const ALL: [EmitterLevel; 2] = [EmitterLevel::Ground, EmitterLevel::Excited];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            EmitterLevel::Ground => 0,
            EmitterLevel::Excited => 1,
        }
    }

    /// Number of excitations stored in the emitter (σ†σ eigenvalue).
    #[inline]
    pub fn excitation(self) -> u64 {
        self.index() as u64
    }
}

impl fmt::Display for EmitterLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmitterLevel::Ground => f.write_str("G"),
            EmitterLevel::Excited => f.write_str("X"),
        }
    }
}

/// One of the two field modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    One,
    Two,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::One, Mode::Two];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
        }
    }

    pub fn from_number(n: u8) -> Option<Mode> {
        match n {
            1 => Some(Mode::One),
            2 => Some(Mode::Two),
            _ => None,
        }
    }

    pub fn other(self) -> Mode {
        match self {
            Mode::One => Mode::Two,
            Mode::Two => Mode::One,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index() + 1)
    }
}

/// Retained photon numbers `n_min..=n_max` of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[u64; 2]", into = "[u64; 2]")]
pub struct TruncationWindow {
    n_min: u64,
    n_max: u64,
}

impl TruncationWindow {
    pub fn new(n_min: u64, n_max: u64) -> Result<Self> {
        if n_max < n_min {
            return Err(Error::InvalidWindow { n_min, n_max });
        }
        Ok(Self { n_min, n_max })
    }

    /// `[n − half_width, n + half_width]`, clipped at zero.
    pub fn around(n: u64, half_width: u64) -> Self {
        Self {
            n_min: n.saturating_sub(half_width),
            n_max: n.saturating_add(half_width),
        }
    }

    /// Smallest window that keeps all but `eps` of a coherent state's
    /// Poisson weight (split evenly between the two tails).
    pub fn for_coherent(alpha: C64, eps: f64) -> Self {
        let lambda = alpha.norm_sqr();
        if lambda == 0.0 {
            return Self { n_min: 0, n_max: 0 };
        }
        let half = 0.5 * eps;

        let mut n_min = 0;
        let mut acc = 0.0;
        loop {
            let p = poisson_pmf(n_min, lambda);
            if acc + p > half || (n_min as f64) >= lambda {
                break;
            }
            acc += p;
            n_min += 1;
        }

        let far = (lambda + 40.0 * lambda.sqrt() + 60.0).ceil() as u64;
        let mut n_max = far;
        let mut acc = 0.0;
        loop {
            let p = poisson_pmf(n_max, lambda);
            if acc + p > half || (n_max as f64) <= lambda {
                break;
            }
            acc += p;
            n_max -= 1;
        }
        Self { n_min, n_max }
    }

    #[inline]
    pub fn n_min(&self) -> u64 {
        self.n_min
    }

    #[inline]
    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    /// Number of retained Fock states, M = n_max − n_min + 1.
    #[inline]
    pub fn size(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    #[inline]
    pub fn contains(&self, n: u64) -> bool {
        n >= self.n_min && n <= self.n_max
    }

    /// True for Fock states sitting on an artificial edge of the window. The
    /// vacuum is a physical boundary, so `n_min = 0` is never an edge.
    #[inline]
    pub fn is_lower_edge(&self, n: u64) -> bool {
        self.n_min > 0 && n == self.n_min
    }

    #[inline]
    pub fn is_upper_edge(&self, n: u64) -> bool {
        n == self.n_max
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> {
        self.n_min..=self.n_max
    }

    /// Grow the window so that it holds (at least) twice as many states,
    /// keeping its centre where the vacuum allows.
    pub fn doubled(&self) -> Self {
        let pad = (self.size() as u64).div_ceil(2);
        let lower_room = self.n_min.min(pad);
        Self {
            n_min: self.n_min - lower_room,
            n_max: self.n_max + pad + (pad - lower_room),
        }
    }
}

impl TryFrom<[u64; 2]> for TruncationWindow {
    type Error = Error;

    fn try_from(value: [u64; 2]) -> Result<Self> {
        Self::new(value[0], value[1])
    }
}

impl From<TruncationWindow> for [u64; 2] {
    fn from(w: TruncationWindow) -> Self {
        [w.n_min, w.n_max]
    }
}

impl fmt::Display for TruncationWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}..{}]", self.n_min, self.n_max)
    }
}

/// Label of a single product basis state |level, n₁, n₂⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    pub level: EmitterLevel,
    pub n1: u64,
    pub n2: u64,
}

impl BasisLabel {
    pub fn new(level: EmitterLevel, n1: u64, n2: u64) -> Self {
        Self { level, n1, n2 }
    }

    pub fn photons(&self, mode: Mode) -> u64 {
        match mode {
            Mode::One => self.n1,
            Mode::Two => self.n2,
        }
    }

    /// Eigenvalue of σ†σ + a₁†a₁ + a₂†a₂.
    pub fn excitation(&self) -> u64 {
        self.level.excitation() + self.n1 + self.n2
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{},{}⟩", self.level, self.n1, self.n2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProductBasis {
    window1: TruncationWindow,
    window2: TruncationWindow,
}

pub fn build_basis(window1: TruncationWindow, window2: TruncationWindow) -> ProductBasis {
    ProductBasis { window1, window2 }
}

impl ProductBasis {
    pub fn window(&self, mode: Mode) -> TruncationWindow {
        match mode {
            Mode::One => self.window1,
            Mode::Two => self.window2,
        }
    }

    pub fn window1(&self) -> TruncationWindow {
        self.window1
    }

    pub fn window2(&self) -> TruncationWindow {
        self.window2
    }

    /// 2·M₁·M₂.
    #[inline]
    pub fn dimension(&self) -> usize {
        2 * self.window1.size() * self.window2.size()
    }

    #[inline]
    pub fn index(&self, level: EmitterLevel, n1: u64, n2: u64) -> Option<usize> {
        if !self.window1.contains(n1) || !self.window2.contains(n2) {
            return None;
        }
        let m1 = self.window1.size();
        let m2 = self.window2.size();
        Some(
            level.index() * m1 * m2
                + (n1 - self.window1.n_min) as usize * m2
                + (n2 - self.window2.n_min) as usize,
        )
    }

    pub fn index_of(&self, label: BasisLabel) -> Option<usize> {
        self.index(label.level, label.n1, label.n2)
    }

    /// Inverse of [`ProductBasis::index`]. Panics if `i` is out of range.
    #[inline]
    pub fn label(&self, i: usize) -> BasisLabel {
        assert!(i < self.dimension(), "basis index {i} out of range");
        let m2 = self.window2.size();
        let block = self.window1.size() * m2;
        let level = EmitterLevel::ALL[i / block];
        let rest = i % block;
        BasisLabel {
            level,
            n1: self.window1.n_min + (rest / m2) as u64,
            n2: self.window2.n_min + (rest % m2) as u64,
        }
    }

    pub fn labels(&self) -> impl Iterator<Item = BasisLabel> + '_ {
        (0..self.dimension()).map(|i| self.label(i))
    }
}

/// Initial state of one field mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldInit {
    Fock(u64),
    Coherent(C64),
}

impl FieldInit {
    /// Coherent state with real amplitude √(mean photon number).
    pub fn coherent_with_mean(mean: f64) -> Self {
        FieldInit::Coherent(C64::new(mean.sqrt(), 0.0))
    }

    pub fn mean_photon_number(&self) -> f64 {
        match *self {
            FieldInit::Fock(n) => n as f64,
            FieldInit::Coherent(alpha) => alpha.norm_sqr(),
        }
    }

    /// Window needed to represent this field, padded by `half_width` states.
    pub fn natural_window(&self, half_width: u64, eps: f64) -> TruncationWindow {
        match *self {
            FieldInit::Fock(n) => TruncationWindow::around(n, half_width),
            FieldInit::Coherent(alpha) => {
                let w = TruncationWindow::for_coherent(alpha, eps);
                TruncationWindow {
                    n_min: w.n_min.saturating_sub(half_width),
                    n_max: w.n_max + half_width,
                }
            }
        }
    }

    /// Amplitudes on the Fock states of `window`, normalized over the window.
    fn amplitudes(&self, mode: Mode, window: TruncationWindow, eps: f64) -> Result<Vec<C64>> {
        match *self {
            FieldInit::Fock(n) => {
                if !window.contains(n) {
                    return Err(Error::WindowTooSmall {
                        mode,
                        window,
                        reason: format!("Fock occupation {n} lies outside the window"),
                        suggested: TruncationWindow::around(n, window.size() as u64 / 2),
                    });
                }
                let mut amps = vec![C64::new(0.0, 0.0); window.size()];
                amps[(n - window.n_min) as usize] = C64::new(1.0, 0.0);
                Ok(amps)
            }
            FieldInit::Coherent(alpha) => {
                let lambda = alpha.norm_sqr();
                let loss = poisson_window_loss(window, lambda);
                if loss > eps {
                    return Err(Error::WindowTooSmall {
                        mode,
                        window,
                        reason: format!(
                            "coherent state |α|²={lambda} loses {loss:.3e} of its norm (limit {eps:.1e})"
                        ),
                        suggested: TruncationWindow::for_coherent(alpha, eps),
                    });
                }
                let log_r = alpha.norm().ln();
                let phase = alpha.arg();
                let mut amps: Vec<C64> = window
                    .iter()
                    .map(|n| {
                        if lambda == 0.0 {
                            return if n == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                        }
                        let nf = n as f64;
                        let modulus = (nf * log_r - 0.5 * lambda - 0.5 * ln_factorial(n)).exp();
                        C64::from_polar(modulus, nf * phase)
                    })
                    .collect();
                let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                amps.iter_mut().for_each(|a| *a /= norm);
                Ok(amps)
            }
        }
    }
}

/// Complex amplitudes aligned to a [`ProductBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    basis: ProductBasis,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn from_amplitudes(basis: ProductBasis, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dimension() {
            return Err(Error::BasisMismatch);
        }
        Ok(Self { basis, amplitudes })
    }

    pub fn zeros(basis: ProductBasis) -> Self {
        Self {
            amplitudes: vec![C64::new(0.0, 0.0); basis.dimension()],
            basis,
        }
    }

    /// The product basis state |label⟩. Panics if the label is outside the basis.
    pub fn basis_state(basis: ProductBasis, label: BasisLabel) -> Self {
        let mut s = Self::zeros(basis);
        let i = basis
            .index_of(label)
            .unwrap_or_else(|| panic!("{label} lies outside the basis"));
        s.amplitudes[i] = C64::new(1.0, 0.0);
        s
    }

    /// Normalized superposition Σ cᵢ|labelᵢ⟩.
    pub fn superposition(basis: ProductBasis, terms: &[(BasisLabel, C64)]) -> Result<Self> {
        let mut s = Self::zeros(basis);
        for &(label, c) in terms {
            let i = basis.index_of(label).ok_or(Error::BasisMismatch)?;
            s.amplitudes[i] += c;
        }
        s.normalize();
        Ok(s)
    }

    #[inline]
    pub fn basis(&self) -> &ProductBasis {
        &self.basis
    }

    #[inline]
    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    #[inline]
    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn amplitude(&self, label: BasisLabel) -> C64 {
        self.basis
            .index_of(label)
            .map_or(C64::new(0.0, 0.0), |i| self.amplitudes[i])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Rescale to unit norm; returns the norm before rescaling.
    pub fn normalize(&mut self) -> f64 {
        let norm = self.norm();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        }
        norm
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch);
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn scaled(&self, factor: C64) -> StateVector {
        StateVector {
            basis: self.basis,
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
        }
    }

    /// Probability weight per excitation-number sector present in the state.
    pub fn excitation_sectors(&self) -> Vec<(u64, f64)> {
        let mut sectors = std::collections::BTreeMap::new();
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p > 0.0 {
                *sectors.entry(self.basis.label(i).excitation()).or_insert(0.0) += p;
            }
        }
        sectors.into_iter().collect()
    }
}

/// Product state |level⟩ ⊗ |f1⟩ ⊗ |f2⟩ on `basis`.
pub fn init_state(
    basis: &ProductBasis,
    level: EmitterLevel,
    field1: FieldInit,
    field2: FieldInit,
    eps: f64,
) -> Result<StateVector> {
    let amps1 = field1.amplitudes(Mode::One, basis.window1, eps)?;
    let amps2 = field2.amplitudes(Mode::Two, basis.window2, eps)?;
    let mut state = StateVector::zeros(*basis);
    let offset = basis.index(level, basis.window1.n_min, basis.window2.n_min).expect("window origin");
    let m2 = basis.window2.size();
    for (i1, a1) in amps1.iter().enumerate() {
        for (i2, a2) in amps2.iter().enumerate() {
            state.amplitudes[offset + i1 * m2 + i2] = a1 * a2;
        }
    }
    // each factor is normalized on its own window
    Ok(state)
}

/// σ†a_j: (G, …, n_j, …) → √n_j · (X, …, n_j − 1, …). Components whose target
/// falls below the window are dropped.
pub fn apply_raising_term(state: &StateVector, mode: Mode) -> StateVector {
    let basis = state.basis;
    let mut out = StateVector::zeros(basis);
    for (i, &a) in state.amplitudes.iter().enumerate() {
        let label = basis.label(i);
        if label.level != EmitterLevel::Ground || a == C64::new(0.0, 0.0) {
            continue;
        }
        let n = label.photons(mode);
        if n == 0 {
            continue;
        }
        let target = shifted(label, mode, -1, EmitterLevel::Excited);
        if let Some(j) = basis.index_of(target) {
            out.amplitudes[j] += a * (n as f64).sqrt();
        }
    }
    out
}

/// σa_j†: (X, …, n_j, …) → √(n_j + 1) · (G, …, n_j + 1, …). Components whose
/// target falls above the window are dropped.
pub fn apply_lowering_term(state: &StateVector, mode: Mode) -> StateVector {
    let basis = state.basis;
    let mut out = StateVector::zeros(basis);
    for (i, &a) in state.amplitudes.iter().enumerate() {
        let label = basis.label(i);
        if label.level != EmitterLevel::Excited || a == C64::new(0.0, 0.0) {
            continue;
        }
        let n = label.photons(mode);
        let target = shifted(label, mode, 1, EmitterLevel::Ground);
        if let Some(j) = basis.index_of(target) {
            out.amplitudes[j] += a * ((n + 1) as f64).sqrt();
        }
    }
    out
}

fn shifted(label: BasisLabel, mode: Mode, dn: i64, level: EmitterLevel) -> BasisLabel {
    let shift = |n: u64| (n as i64 + dn) as u64;
    match mode {
        Mode::One => BasisLabel::new(level, shift(label.n1), label.n2),
        Mode::Two => BasisLabel::new(level, label.n1, shift(label.n2)),
    }
}

/// ln(n!), exact summation for small n and Stirling's series beyond.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 256 {
        return (2..=n).map(|k| (k as f64).ln()).sum();
    }
    let x = n as f64 + 1.0;
    // ln Γ(x) asymptotic series
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// Poisson probability e^{−λ} λⁿ / n!.
pub fn poisson_pmf(n: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (n as f64 * lambda.ln() - lambda - ln_factorial(n)).exp()
}

/// Poisson weight outside `window`.
pub fn poisson_window_loss(window: TruncationWindow, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if window.contains(0) { 0.0 } else { 1.0 };
    }
    let lo = window.n_min;
    let hi = window.n_max;
    if (hi as f64) < lambda || (lo as f64) > lambda {
        let inside: f64 = window.iter().map(|n| poisson_pmf(n, lambda)).sum();
        return (1.0 - inside).max(0.0);
    }
    // Both tails decay monotonically away from the window.
    let mut lower = 0.0;
    for n in (0..lo).rev() {
        let p = poisson_pmf(n, lambda);
        lower += p;
        if p < 1e-40 {
            break;
        }
    }
    let mut upper = 0.0;
    let mut n = hi + 1;
    loop {
        let p = poisson_pmf(n, lambda);
        upper += p;
        if p < 1e-40 || p <= upper * 1e-18 {
            break;
        }
        n += 1;
    }
    lower + upper
}
