//! Interaction-picture Schrödinger dynamics of the emitter and two pulsed
//! field modes.
//!
//! Everything is dimensionless: time τ = t/t_p, ħ = 1, detunings Δ_j = t_p δ_j
//! and couplings G_j = t_p g_j. The generator is
//!
//! ```text
//! H(τ) = Σ_j G_j e^{−τ²} (e^{−iΔ_j τ} σ†a_j + e^{+iΔ_j τ} σa_j†)
//! ```
//!
//! H(τ) commutes with the excitation number 𝒩 = σ†σ + a₁†a₁ + a₂†a₂, also
//! after truncation, so [`evolve`] only integrates the 𝒩-sectors populated by
//! the initial state. Amplitudes in the other sectors stay exactly zero.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    build_basis, init_state, EmitterLevel, FieldInit, Mode, ProductBasis, StateVector, TruncationWindow,
    DEFAULT_COHERENT_EPS,
};
use crate::observables::ObservableSet;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_RECORD_STRIDE: usize = 100;
pub const DEFAULT_SPAN_SIGMA: f64 = 3.0;
pub const DEFAULT_HALF_WIDTH: u64 = 20;

/// Gaussian pulse envelope e^{−τ²}.
#[inline]
pub fn envelope(tau: f64) -> f64 {
    (-tau * tau).exp()
}

/// Integration span [−span_sigma, +span_sigma] of the Gaussian pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseEnvelope {
    pub span_sigma: f64,
}

impl Default for PulseEnvelope {
    fn default() -> Self {
        Self { span_sigma: DEFAULT_SPAN_SIGMA }
    }
}

impl PulseEnvelope {
    pub fn value(&self, tau: f64) -> f64 {
        envelope(tau)
    }

    pub fn start(&self) -> f64 {
        -self.span_sigma
    }

    pub fn end(&self) -> f64 {
        self.span_sigma
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub delta1: f64,
    pub delta2: f64,
    pub g1: f64,
    pub g2: f64,
    pub emitter_init: EmitterLevel,
    pub field1_init: FieldInit,
    pub field2_init: FieldInit,
    pub window1: TruncationWindow,
    pub window2: TruncationWindow,
    pub dt: f64,
    pub record_stride: usize,
    pub span_sigma: f64,
    pub coherent_eps: f64,
}

impl SimConfig {
    /// Uncoupled configuration with default integrator settings and windows
    /// of half-width [`DEFAULT_HALF_WIDTH`] around the initial fields.
    pub fn new(emitter_init: EmitterLevel, field1_init: FieldInit, field2_init: FieldInit) -> Self {
        let mut cfg = Self {
            delta1: 0.0,
            delta2: 0.0,
            g1: 0.0,
            g2: 0.0,
            emitter_init,
            field1_init,
            field2_init,
            window1: TruncationWindow::around(0, 0),
            window2: TruncationWindow::around(0, 0),
            dt: DEFAULT_DT,
            record_stride: DEFAULT_RECORD_STRIDE,
            span_sigma: DEFAULT_SPAN_SIGMA,
            coherent_eps: DEFAULT_COHERENT_EPS,
        };
        cfg.auto_windows(DEFAULT_HALF_WIDTH);
        cfg
    }

    /// Both modes in Fock states.
    pub fn fock(emitter_init: EmitterLevel, n1: u64, n2: u64) -> Self {
        Self::new(emitter_init, FieldInit::Fock(n1), FieldInit::Fock(n2))
    }

    pub fn with_detunings(mut self, delta1: f64, delta2: f64) -> Self {
        self.delta1 = delta1;
        self.delta2 = delta2;
        self
    }

    pub fn with_couplings(mut self, g1: f64, g2: f64) -> Self {
        self.g1 = g1;
        self.g2 = g2;
        self
    }

    pub fn with_windows(mut self, window1: TruncationWindow, window2: TruncationWindow) -> Self {
        self.window1 = window1;
        self.window2 = window2;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    /// Re-centre both windows on the initial fields.
    pub fn auto_windows(&mut self, half_width: u64) {
        self.window1 = self.field1_init.natural_window(half_width, self.coherent_eps);
        self.window2 = self.field2_init.natural_window(half_width, self.coherent_eps);
    }

    pub fn detuning(&self, mode: Mode) -> f64 {
        match mode {
            Mode::One => self.delta1,
            Mode::Two => self.delta2,
        }
    }

    pub fn coupling(&self, mode: Mode) -> f64 {
        match mode {
            Mode::One => self.g1,
            Mode::Two => self.g2,
        }
    }

    pub fn field_init(&self, mode: Mode) -> FieldInit {
        match mode {
            Mode::One => self.field1_init,
            Mode::Two => self.field2_init,
        }
    }

    pub fn basis(&self) -> ProductBasis {
        build_basis(self.window1, self.window2)
    }

    pub fn pulse(&self) -> PulseEnvelope {
        PulseEnvelope { span_sigma: self.span_sigma }
    }

    /// Number of fixed steps covering [−span, span]; the last step is never
    /// longer than `dt`.
    pub fn total_steps(&self) -> usize {
        let raw = 2.0 * self.span_sigma / self.dt;
        let rounded = raw.round();
        if (raw - rounded).abs() <= 1e-9 * raw {
            rounded as usize
        } else {
            raw.ceil() as usize
        }
    }

    /// Actual step length, 2·span / total_steps.
    pub fn step(&self) -> f64 {
        2.0 * self.span_sigma / self.total_steps() as f64
    }

    pub fn initial_state(&self) -> Result<StateVector> {
        init_state(&self.basis(), self.emitter_init, self.field1_init, self.field2_init, self.coherent_eps)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (name, v) in [("delta1", self.delta1), ("delta2", self.delta2)] {
            if !v.is_finite() {
                problems.push(format!("{name} must be finite"));
            }
        }
        for (name, v) in [("g1", self.g1), ("g2", self.g2)] {
            if !(v.is_finite() && v >= 0.0) {
                problems.push(format!("{name} must be a finite value >= 0"));
            }
        }
        if !(self.span_sigma.is_finite() && self.span_sigma > 0.0) {
            problems.push("span_sigma must be > 0".into());
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            problems.push("dt must be > 0".into());
        } else if self.dt > self.span_sigma / 10.0 {
            problems.push(format!("dt = {} exceeds span_sigma/10 = {}", self.dt, self.span_sigma / 10.0));
        }
        if self.record_stride == 0 {
            problems.push("record_stride must be >= 1".into());
        }
        if !(self.coherent_eps > 0.0 && self.coherent_eps < 1.0) {
            problems.push("coherent_eps must lie in (0, 1)".into());
        }
        for mode in Mode::ALL {
            let window = self.basis().window(mode);
            match self.field_init(mode) {
                FieldInit::Fock(n) if !window.contains(n) => problems.push(format!(
                    "n{mode}_init = {n} lies outside window{mode} = {window}"
                )),
                FieldInit::Coherent(a) if !(a.re.is_finite() && a.im.is_finite()) => {
                    problems.push(format!("alpha{mode} must be finite"))
                }
                _ => {}
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

/// One coupling σ†a_j between a ground and an excited basis state, with
/// the static factor G_j √n_j.
#[derive(Debug, Clone, Copy)]
struct Coupling {
    ground: usize,
    excited: usize,
    mode: usize,
    strength: f64,
}

/// Sparse −iH(τ) restricted to a subset of basis states.
#[derive(Debug, Clone)]
pub(crate) struct Generator {
    couplings: Vec<Coupling>,
    delta: [f64; 2],
    len: usize,
}

impl Generator {
    /// `active[k]` is the full-basis index of compact slot `k`. The subset
    /// must be closed under H (a union of 𝒩-sectors).
    pub(crate) fn new(basis: &ProductBasis, cfg: &SimConfig, active: &[usize]) -> Self {
        let mut slot = vec![usize::MAX; basis.dimension()];
        for (k, &i) in active.iter().enumerate() {
            slot[i] = k;
        }
        let g = [cfg.g1, cfg.g2];
        let mut couplings = Vec::new();
        for &i in active {
            let label = basis.label(i);
            if label.level != EmitterLevel::Ground {
                continue;
            }
            for mode in Mode::ALL {
                let n = label.photons(mode);
                if n == 0 || g[mode.index()] == 0.0 {
                    continue;
                }
                let (n1, n2) = match mode {
                    Mode::One => (n - 1, label.n2),
                    Mode::Two => (label.n1, n - 1),
                };
                if let Some(j) = basis.index(EmitterLevel::Excited, n1, n2) {
                    debug_assert!(slot[j] != usize::MAX, "active set not closed under H");
                    couplings.push(Coupling {
                        ground: slot[i],
                        excited: slot[j],
                        mode: mode.index(),
                        strength: g[mode.index()] * (n as f64).sqrt(),
                    });
                }
            }
        }
        Self {
            couplings,
            delta: [cfg.delta1, cfg.delta2],
            len: active.len(),
        }
    }

    /// out = −i H(τ) psi
    pub(crate) fn apply(&self, psi: &[C64], tau: f64, out: &mut [C64]) {
        debug_assert_eq!(psi.len(), self.len);
        let env = envelope(tau);
        // −i · f(τ) e^{−iΔ_j τ}
        let phase = self.delta.map(|d| C64::new(0.0, -1.0) * C64::from_polar(env, -d * tau));
        out.fill(C64::new(0.0, 0.0));
        for c in &self.couplings {
            let a = phase[c.mode] * c.strength;
            out[c.excited] += a * psi[c.ground];
            out[c.ground] -= a.conj() * psi[c.excited];
        }
    }
}

/// Summation order over compact slots that is unchanged when the two modes
/// are relabeled: slots (l, a, b) and (l, b, a) are added to each other first
/// and the pairs are accumulated by (l, min, max). Sums over the state then
/// come out bit-identical for a mode-swapped configuration.
#[derive(Debug, Clone)]
pub(crate) struct SymmetricOrder {
    pairs: Vec<(usize, Option<usize>)>,
}

impl SymmetricOrder {
    pub(crate) fn new(basis: &ProductBasis, active: &[usize]) -> Self {
        let mut slot = vec![usize::MAX; basis.dimension()];
        for (k, &i) in active.iter().enumerate() {
            slot[i] = k;
        }
        let mut keyed = Vec::new();
        for (k, &i) in active.iter().enumerate() {
            let l = basis.label(i);
            let (lo, hi) = (l.n1.min(l.n2), l.n1.max(l.n2));
            let partner = basis
                .index(l.level, l.n2, l.n1)
                .map(|j| slot[j])
                .filter(|&j| j != usize::MAX && l.n1 != l.n2);
            // each pair once, from its n1 < n2 member
            if partner.is_some() && l.n1 > l.n2 {
                continue;
            }
            keyed.push(((l.level.index(), lo, hi), (k, partner)));
        }
        keyed.sort_unstable_by_key(|(key, _)| *key);
        Self { pairs: keyed.into_iter().map(|(_, p)| p).collect() }
    }

    pub(crate) fn sum(&self, f: impl Fn(usize) -> f64) -> f64 {
        let mut total = 0.0;
        for &(a, b) in &self.pairs {
            total += match b {
                Some(b) => f(a) + f(b),
                None => f(a),
            };
        }
        total
    }
}

/// Fixed-step classical RK4 over a compact amplitude vector.
#[derive(Debug, Clone)]
pub(crate) struct Rk4 {
    generator: Generator,
    order: SymmetricOrder,
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4 {
    pub(crate) fn new(generator: Generator, order: SymmetricOrder) -> Self {
        let n = generator.len;
        let z = vec![C64::new(0.0, 0.0); n];
        Self {
            generator,
            order,
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    /// Advance `psi` from τ to τ + h without renormalizing; returns the new norm.
    pub(crate) fn advance(&mut self, psi: &mut [C64], tau: f64, h: f64) -> f64 {
        let half = 0.5 * h;
        let gen = &self.generator;
        gen.apply(psi, tau, &mut self.k1);
        for ((t, p), k) in self.tmp.iter_mut().zip(psi.iter()).zip(&self.k1) {
            *t = p + k * half;
        }
        gen.apply(&self.tmp, tau + half, &mut self.k2);
        for ((t, p), k) in self.tmp.iter_mut().zip(psi.iter()).zip(&self.k2) {
            *t = p + k * half;
        }
        gen.apply(&self.tmp, tau + half, &mut self.k3);
        for ((t, p), k) in self.tmp.iter_mut().zip(psi.iter()).zip(&self.k3) {
            *t = p + k * h;
        }
        gen.apply(&self.tmp, tau + h, &mut self.k4);
        let w = h / 6.0;
        for (i, p) in psi.iter_mut().enumerate() {
            *p += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * w;
        }
        self.order.sum(|k| psi[k].norm_sqr()).sqrt()
    }

    /// RK4 step followed by renormalization; returns |‖ψ‖ − 1| before rescaling.
    pub(crate) fn step(&mut self, psi: &mut [C64], tau: f64, h: f64) -> f64 {
        let norm = self.advance(psi, tau, h);
        let inv = 1.0 / norm;
        psi.iter_mut().for_each(|p| *p *= inv);
        (norm - 1.0).abs()
    }
}

fn check_basis(state: &StateVector, cfg: &SimConfig) -> Result<()> {
    if *state.basis() != cfg.basis() {
        Err(Error::BasisMismatch)
    } else {
        Ok(())
    }
}

/// −i H(τ) |state⟩ on the full basis of `cfg`.
pub fn rhs(state: &StateVector, tau: f64, cfg: &SimConfig) -> Result<StateVector> {
    check_basis(state, cfg)?;
    let basis = cfg.basis();
    let all: Vec<usize> = (0..basis.dimension()).collect();
    let gen = Generator::new(&basis, cfg, &all);
    let mut out = StateVector::zeros(basis);
    gen.apply(state.amplitudes(), tau, out.amplitudes_mut());
    Ok(out)
}

fn full_rk4(cfg: &SimConfig) -> Rk4 {
    let basis = cfg.basis();
    let all: Vec<usize> = (0..basis.dimension()).collect();
    Rk4::new(Generator::new(&basis, cfg, &all), SymmetricOrder::new(&basis, &all))
}

/// One classical RK4 step from τ to τ + dt, renormalized to unit norm.
pub fn rk4_step(state: &StateVector, tau: f64, dt: f64, cfg: &SimConfig) -> Result<StateVector> {
    check_basis(state, cfg)?;
    let mut out = state.clone();
    full_rk4(cfg).step(out.amplitudes_mut(), tau, dt);
    Ok(out)
}

/// One RK4 step without the renormalization.
pub fn rk4_step_unnormalized(state: &StateVector, tau: f64, dt: f64, cfg: &SimConfig) -> Result<StateVector> {
    check_basis(state, cfg)?;
    let mut out = state.clone();
    full_rk4(cfg).advance(out.amplitudes_mut(), tau, dt);
    Ok(out)
}

/// Which side of a truncation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowEdge {
    pub mode: Mode,
    pub side: Side,
    pub occupancy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub max_norm_drift_per_step: f64,
    /// Largest |⟨𝒩⟩(τ) − ⟨𝒩⟩(τ_i)| over all steps.
    pub max_excitation_drift: f64,
    /// Largest total probability on window-edge Fock states.
    pub max_boundary_occupancy: f64,
    /// Per edge maxima, indexed `[mode][side]`.
    pub edge_occupancy: [[f64; 2]; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub observables: Vec<ObservableSet>,
    pub final_state: StateVector,
    pub final_observables: ObservableSet,
    pub audit: ConvergenceReport,
    /// Full states at the recorded times; empty unless requested.
    pub snapshots: Vec<StateVector>,
    pub total_steps: usize,
}

impl Trajectory {
    pub fn initial_observables(&self) -> &ObservableSet {
        &self.observables[0]
    }
}

/// Per-slot weights for the observables and boundary bookkeeping.
struct SlotInfo {
    excited: Vec<bool>,
    n: [Vec<f64>; 2],
    /// Bit 2·mode + side set when the slot sits on that window edge.
    edges: Vec<u8>,
    order: SymmetricOrder,
}

impl SlotInfo {
    /// Modes with zero coupling cannot leak out of their window, so their
    /// edges are not tracked.
    fn new(basis: &ProductBasis, cfg: &SimConfig, active: &[usize]) -> Self {
        let mut excited = Vec::with_capacity(active.len());
        let mut n1 = Vec::with_capacity(active.len());
        let mut n2 = Vec::with_capacity(active.len());
        let mut edges = Vec::with_capacity(active.len());
        for &i in active {
            let label = basis.label(i);
            excited.push(label.level == EmitterLevel::Excited);
            n1.push(label.n1 as f64);
            n2.push(label.n2 as f64);
            let mut bits = 0u8;
            for mode in Mode::ALL {
                if cfg.coupling(mode) == 0.0 {
                    continue;
                }
                let w = basis.window(mode);
                let n = label.photons(mode);
                if w.is_lower_edge(n) {
                    bits |= 1 << (2 * mode.index());
                }
                if w.is_upper_edge(n) {
                    bits |= 1 << (2 * mode.index() + 1);
                }
            }
            edges.push(bits);
        }
        let order = SymmetricOrder::new(basis, active);
        Self { excited, n: [n1, n2], edges, order }
    }

    fn measure(&self, psi: &[C64], norm_drift: f64) -> (ObservableSet, f64, [[f64; 2]; 2]) {
        let p = |k: usize| psi[k].norm_sqr();
        let p_x = self.order.sum(|k| if self.excited[k] { p(k) } else { 0.0 });
        let n1 = self.order.sum(|k| self.n[0][k] * p(k));
        let n2 = self.order.sum(|k| self.n[1][k] * p(k));
        let mut boundary = 0.0;
        let mut edge = [[0.0; 2]; 2];
        for (k, &bits) in self.edges.iter().enumerate() {
            if bits != 0 {
                let p = p(k);
                boundary += p;
                for (b, slot) in edge.iter_mut().flatten().enumerate() {
                    if bits & (1 << b) != 0 {
                        *slot += p;
                    }
                }
            }
        }
        let obs = ObservableSet {
            p_x,
            n1_mean: n1,
            n2_mean: n2,
            excitation: p_x + n1 + n2,
            norm_drift,
        };
        (obs, boundary, edge)
    }
}

/// Basis indices of every 𝒩-sector that carries weight in `state`.
fn active_indices(state: &StateVector) -> Vec<usize> {
    let basis = state.basis();
    let sectors: Vec<u64> = state.excitation_sectors().into_iter().map(|(k, _)| k).collect();
    (0..basis.dimension())
        .filter(|&i| sectors.binary_search(&basis.label(i).excitation()).is_ok())
        .collect()
}

/// Integrate from τ = −span_sigma to +span_sigma with fixed RK4 steps,
/// renormalizing after each one.
pub fn evolve(cfg: &SimConfig) -> Result<Trajectory> {
    evolve_inner(cfg, false)
}

/// [`evolve`], also keeping the full state at every recorded time.
pub fn evolve_with_snapshots(cfg: &SimConfig) -> Result<Trajectory> {
    evolve_inner(cfg, true)
}

fn evolve_inner(cfg: &SimConfig, keep_snapshots: bool) -> Result<Trajectory> {
    cfg.validate()?;
    let basis = cfg.basis();
    let initial = cfg.initial_state()?;
    let active = active_indices(&initial);
    let slots = SlotInfo::new(&basis, cfg, &active);
    let mut psi: Vec<C64> = active.iter().map(|&i| initial.amplitudes()[i]).collect();
    let mut rk4 = Rk4::new(Generator::new(&basis, cfg, &active), SymmetricOrder::new(&basis, &active));

    let scatter = |psi: &[C64]| {
        let mut full = StateVector::zeros(basis);
        for (&i, a) in active.iter().zip(psi) {
            full.amplitudes_mut()[i] = *a;
        }
        full
    };

    let steps = cfg.total_steps();
    let h = cfg.step();
    let start = -cfg.span_sigma;
    let capacity = steps / cfg.record_stride + 1;
    let mut times = Vec::with_capacity(capacity);
    let mut observables = Vec::with_capacity(capacity);
    let mut snapshots = Vec::new();

    let (obs0, boundary0, edge0) = slots.measure(&psi, 0.0);
    let excitation0 = obs0.excitation;
    let mut audit = ConvergenceReport {
        max_boundary_occupancy: boundary0,
        edge_occupancy: edge0,
        ..Default::default()
    };
    times.push(start);
    observables.push(obs0);
    if keep_snapshots {
        snapshots.push(scatter(&psi));
    }

    let mut last = obs0;
    for k in 0..steps {
        let tau = start + k as f64 * h;
        let drift = rk4.step(&mut psi, tau, h);
        let (obs, boundary, edge) = slots.measure(&psi, drift);
        audit.max_norm_drift_per_step = audit.max_norm_drift_per_step.max(drift);
        audit.max_excitation_drift = audit.max_excitation_drift.max((obs.excitation - excitation0).abs());
        audit.max_boundary_occupancy = audit.max_boundary_occupancy.max(boundary);
        for (m, e) in audit.edge_occupancy.iter_mut().flatten().zip(edge.iter().flatten()) {
            *m = m.max(*e);
        }
        last = obs;
        if (k + 1) % cfg.record_stride == 0 {
            times.push(start + (k + 1) as f64 * h);
            observables.push(obs);
            if keep_snapshots {
                snapshots.push(scatter(&psi));
            }
        }
    }

    Ok(Trajectory {
        times,
        observables,
        final_state: scatter(&psi),
        final_observables: last,
        audit,
        snapshots,
        total_steps: steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditTolerances {
    pub norm: f64,
    pub excitation: f64,
    pub boundary: f64,
}

impl Default for AuditTolerances {
    fn default() -> Self {
        Self {
            norm: 1e-8,
            excitation: 1e-6,
            boundary: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditOutcome {
    pub passed: bool,
    pub norm_ok: bool,
    pub excitation_ok: bool,
    pub boundary_ok: bool,
    pub report: ConvergenceReport,
    /// Window edges whose occupancy reached the boundary tolerance.
    pub saturated_edges: Vec<WindowEdge>,
}

pub fn convergence_audit(traj: &Trajectory, tol: AuditTolerances) -> AuditOutcome {
    let r = traj.audit;
    let norm_ok = r.max_norm_drift_per_step < tol.norm;
    let excitation_ok = r.max_excitation_drift < tol.excitation;
    let boundary_ok = r.max_boundary_occupancy < tol.boundary;
    let mut saturated_edges = Vec::new();
    for mode in Mode::ALL {
        for side in [Side::Lower, Side::Upper] {
            let occupancy = r.edge_occupancy[mode.index()][side as usize];
            if occupancy >= tol.boundary {
                saturated_edges.push(WindowEdge { mode, side, occupancy });
            }
        }
    }
    AuditOutcome {
        passed: norm_ok && excitation_ok && boundary_ok,
        norm_ok,
        excitation_ok,
        boundary_ok,
        report: r,
        saturated_edges,
    }
}

/// Result of [`evolve_converged`].
#[derive(Debug, Clone)]
pub struct ConvergedRun {
    pub config: SimConfig,
    pub trajectory: Trajectory,
    pub audit: AuditOutcome,
    pub doublings: usize,
}

/// Evolve, doubling any window with a saturated edge until the audit passes
/// or `max_doublings` is reached.
pub fn evolve_converged(cfg: &SimConfig, tol: AuditTolerances, max_doublings: usize) -> Result<ConvergedRun> {
    let mut cfg = cfg.clone();
    let mut doublings = 0;
    loop {
        let trajectory = evolve(&cfg)?;
        let audit = convergence_audit(&trajectory, tol);
        if audit.passed || doublings >= max_doublings {
            return Ok(ConvergedRun { config: cfg, trajectory, audit, doublings });
        }
        let saturated: Vec<Mode> = audit.saturated_edges.iter().map(|e| e.mode).collect();
        if saturated.is_empty() {
            // Norm or excitation drift is a step-size problem, not a window one.
            return Ok(ConvergedRun { config: cfg, trajectory, audit, doublings });
        }
        if saturated.contains(&Mode::One) {
            cfg.window1 = cfg.window1.doubled();
        }
        if saturated.contains(&Mode::Two) {
            cfg.window2 = cfg.window2.doubled();
        }
        doublings += 1;
    }
}

/// Comparison of a run against the same run at half the step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepCheck {
    pub p_x: f64,
    pub p_x_half_step: f64,
    /// |⟨ψ_dt|ψ_dt/2⟩|² of the final states.
    pub fidelity: f64,
}

pub fn step_halving_check(cfg: &SimConfig) -> Result<StepCheck> {
    let coarse = evolve(cfg)?;
    let fine = evolve(&cfg.clone().with_dt(cfg.dt / 2.0))?;
    let overlap = coarse.final_state.inner(&fine.final_state)?;
    Ok(StepCheck {
        p_x: coarse.final_observables.p_x,
        p_x_half_step: fine.final_observables.p_x,
        fidelity: overlap.norm_sqr(),
    })
}
