//! Parameter sweeps, resonance location and the pinned preset configurations.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{convergence_audit, evolve, AuditTolerances, SimConfig, DEFAULT_HALF_WIDTH};
use crate::error::{Error, Result};
use crate::hilbert::{EmitterLevel, FieldInit, Mode, TruncationWindow};
use crate::observables::ObservableSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Delta1,
    Delta2,
    G1,
    G2,
    N1Init,
    N2Init,
    Alpha1Sq,
    Alpha2Sq,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 8] = [
        SweepParameter::Delta1,
        SweepParameter::Delta2,
        SweepParameter::G1,
        SweepParameter::G2,
        SweepParameter::N1Init,
        SweepParameter::N2Init,
        SweepParameter::Alpha1Sq,
        SweepParameter::Alpha2Sq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Delta1 => "delta1",
            SweepParameter::Delta2 => "delta2",
            SweepParameter::G1 => "g1",
            SweepParameter::G2 => "g2",
            SweepParameter::N1Init => "n1_init",
            SweepParameter::N2Init => "n2_init",
            SweepParameter::Alpha1Sq => "alpha1_sq",
            SweepParameter::Alpha2Sq => "alpha2_sq",
        }
    }

    /// Fock occupations step in whole photons.
    pub fn is_integer(self) -> bool {
        matches!(self, SweepParameter::N1Init | SweepParameter::N2Init)
    }

    fn is_non_negative(self) -> bool {
        !matches!(self, SweepParameter::Delta1 | SweepParameter::Delta2)
    }

    /// Field initialization the parameter rewrites, if any.
    fn field_mode(self) -> Option<Mode> {
        match self {
            SweepParameter::N1Init | SweepParameter::Alpha1Sq => Some(Mode::One),
            SweepParameter::N2Init | SweepParameter::Alpha2Sq => Some(Mode::Two),
            _ => None,
        }
    }

    pub fn apply(self, cfg: &mut SimConfig, value: f64) {
        match self {
            SweepParameter::Delta1 => cfg.delta1 = value,
            SweepParameter::Delta2 => cfg.delta2 = value,
            SweepParameter::G1 => cfg.g1 = value,
            SweepParameter::G2 => cfg.g2 = value,
            SweepParameter::N1Init => cfg.field1_init = FieldInit::Fock(value as u64),
            SweepParameter::N2Init => cfg.field2_init = FieldInit::Fock(value as u64),
            SweepParameter::Alpha1Sq => cfg.field1_init = FieldInit::coherent_with_mean(value),
            SweepParameter::Alpha2Sq => cfg.field2_init = FieldInit::coherent_with_mean(value),
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParameter::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Validation(vec![format!("unknown sweep parameter `{s}`")]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    parameter: SweepParameter,
    values: Vec<f64>,
}

impl SweepAxis {
    pub fn new(parameter: SweepParameter, values: Vec<f64>) -> Result<Self> {
        let mut problems = Vec::new();
        if values.is_empty() {
            problems.push(format!("{parameter} axis has no values"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            problems.push(format!("{parameter} axis has non-finite values"));
        }
        if parameter.is_integer() && values.iter().any(|v| v.fract() != 0.0) {
            problems.push(format!("{parameter} axis values must be whole photon numbers"));
        }
        if parameter.is_non_negative() && values.iter().any(|&v| v < 0.0) {
            problems.push(format!("{parameter} axis values must be >= 0"));
        }
        let increasing = values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = values.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            problems.push(format!("{parameter} axis values must be strictly monotone"));
        }
        if problems.is_empty() {
            Ok(Self { parameter, values })
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// `count` evenly spaced values from `start` to `stop` inclusive.
    pub fn linspace(parameter: SweepParameter, start: f64, stop: f64, count: usize) -> Result<Self> {
        let values = match count {
            0 => vec![],
            1 => vec![start],
            _ => (0..count)
                .map(|k| start + (stop - start) * k as f64 / (count - 1) as f64)
                .collect(),
        };
        let values = if parameter.is_integer() { dedup_rounded(values) } else { values };
        Self::new(parameter, values)
    }

    /// Photon numbers whose square roots are evenly spaced over
    /// `[sqrt_start, sqrt_stop]`, rounded to whole photons.
    pub fn sqrt_spaced(parameter: SweepParameter, sqrt_start: f64, sqrt_stop: f64, count: usize) -> Result<Self> {
        let roots = match count {
            0 => vec![],
            1 => vec![sqrt_start],
            _ => (0..count)
                .map(|k| sqrt_start + (sqrt_stop - sqrt_start) * k as f64 / (count - 1) as f64)
                .collect(),
        };
        let values: Vec<f64> = roots.into_iter().map(|s| s * s).collect();
        let values = if parameter.is_integer() { dedup_rounded(values) } else { values };
        Self::new(parameter, values)
    }

    pub fn parameter(&self) -> SweepParameter {
        self.parameter
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Axis spanning the neighbours of `values[i]` with `count` points. At
    /// the ends of the axis the span reaches one spacing beyond the edge.
    pub fn refined_around(&self, i: usize, count: usize) -> Result<Self> {
        if self.values.len() < 2 {
            return Ok(self.clone());
        }
        let v = &self.values;
        let last = v.len() - 1;
        let lo = if i == 0 { v[0] - (v[1] - v[0]) } else { v[i - 1] };
        let hi = if i == last { v[last] + (v[last] - v[last - 1]) } else { v[i + 1] };
        let (lo, hi) = if self.parameter.is_non_negative() {
            (lo.max(0.0), hi.max(0.0))
        } else {
            (lo, hi)
        };
        Self::linspace(self.parameter, lo, hi, count)
    }
}

fn dedup_rounded(values: Vec<f64>) -> Vec<f64> {
    let mut out: Vec<f64> = values.into_iter().map(|v| v.round().max(0.0)).collect();
    out.dedup();
    out
}

/// How truncation windows follow the swept initial fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum WindowPolicy {
    /// Keep the base configuration's windows.
    Fixed,
    /// Re-centre each window on its cell's initial field.
    Auto { half_width: u64 },
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy::Auto { half_width: DEFAULT_HALF_WIDTH }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: SimConfig,
    pub axis_x: SweepAxis,
    pub axis_y: SweepAxis,
    pub windows: WindowPolicy,
    pub tolerances: AuditTolerances,
}

impl SweepSpec {
    pub fn new(base: SimConfig, axis_x: SweepAxis, axis_y: SweepAxis) -> Self {
        Self {
            base,
            axis_x,
            axis_y,
            windows: WindowPolicy::default(),
            tolerances: AuditTolerances::default(),
        }
    }

    pub fn with_windows(mut self, windows: WindowPolicy) -> Self {
        self.windows = windows;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.axis_x.parameter == self.axis_y.parameter {
            return Err(Error::Validation(vec![format!(
                "both sweep axes modify {}",
                self.axis_x.parameter
            )]));
        }
        let same_field = self.axis_x.parameter.field_mode().is_some()
            && self.axis_x.parameter.field_mode() == self.axis_y.parameter.field_mode();
        if same_field {
            return Err(Error::Validation(vec![format!(
                "sweep axes {} and {} both set the initial field of one mode",
                self.axis_x.parameter, self.axis_y.parameter
            )]));
        }
        Ok(())
    }

    /// Configuration of cell (ix, iy).
    pub fn cell_config(&self, ix: usize, iy: usize) -> SimConfig {
        let mut cfg = self.base.clone();
        self.axis_x.parameter.apply(&mut cfg, self.axis_x.values[ix]);
        self.axis_y.parameter.apply(&mut cfg, self.axis_y.values[iy]);
        if let WindowPolicy::Auto { half_width } = self.windows {
            cfg.auto_windows(half_width);
        }
        cfg
    }

    pub fn cell_count(&self) -> usize {
        self.axis_x.len() * self.axis_y.len()
    }

    /// Zoom onto the neighbourhood of cell (ix, iy) with `count` points per axis.
    pub fn refined_around(&self, ix: usize, iy: usize, count: usize) -> Result<Self> {
        Ok(Self {
            axis_x: self.axis_x.refined_around(ix, count)?,
            axis_y: self.axis_y.refined_around(iy, count)?,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub ix: usize,
    pub iy: usize,
    pub x_value: f64,
    pub y_value: f64,
    pub observables: ObservableSet,
    pub delta_n1: f64,
    pub delta_n2: f64,
    pub audit_pass: bool,
    /// The cell failed the audit once and was re-run with doubled windows.
    pub rerun: bool,
    pub error: Option<String>,
}

impl SweepCell {
    pub fn p_x(&self) -> f64 {
        self.observables.p_x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axis_x: SweepAxis,
    pub axis_y: SweepAxis,
    /// Row-major, `axis_x` fastest: cell (ix, iy) sits at `iy·|x| + ix`.
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn nx(&self) -> usize {
        self.axis_x.len()
    }

    pub fn ny(&self) -> usize {
        self.axis_y.len()
    }

    pub fn cell(&self, ix: usize, iy: usize) -> &SweepCell {
        &self.cells[iy * self.nx() + ix]
    }

    /// Cell with the largest P_X (first in row-major order on ties).
    pub fn argmax(&self) -> Option<&SweepCell> {
        self.cells
            .iter()
            .filter(|c| c.p_x().is_finite())
            .fold(None, |best: Option<&SweepCell>, c| match best {
                Some(b) if b.p_x() >= c.p_x() => Some(b),
                _ => Some(c),
            })
    }

    pub fn all_audits_passed(&self) -> bool {
        self.cells.iter().all(|c| c.audit_pass)
    }
}

fn evaluate_cell(spec: &SweepSpec, ix: usize, iy: usize) -> SweepCell {
    let mut cell = SweepCell {
        ix,
        iy,
        x_value: spec.axis_x.values[ix],
        y_value: spec.axis_y.values[iy],
        observables: ObservableSet {
            p_x: f64::NAN,
            n1_mean: f64::NAN,
            n2_mean: f64::NAN,
            excitation: f64::NAN,
            norm_drift: f64::NAN,
        },
        delta_n1: f64::NAN,
        delta_n2: f64::NAN,
        audit_pass: false,
        rerun: false,
        error: None,
    };
    let mut cfg = spec.cell_config(ix, iy);
    let mut outcome = evolve(&cfg).map(|t| {
        let a = convergence_audit(&t, spec.tolerances);
        (t, a)
    });
    if let Ok((_, audit)) = &outcome {
        if !audit.passed {
            cfg.window1 = cfg.window1.doubled();
            cfg.window2 = cfg.window2.doubled();
            cell.rerun = true;
            outcome = evolve(&cfg).map(|t| {
                let a = convergence_audit(&t, spec.tolerances);
                (t, a)
            });
        }
    }
    match outcome {
        Ok((traj, audit)) => {
            let initial = traj.initial_observables();
            cell.observables = traj.final_observables;
            cell.delta_n1 = traj.final_observables.n1_mean - initial.n1_mean;
            cell.delta_n2 = traj.final_observables.n2_mean - initial.n2_mean;
            cell.audit_pass = audit.passed;
        }
        Err(e) => cell.error = Some(e.to_string()),
    }
    cell
}

/// Evolve every grid point. Cells are independent and evaluated in
/// parallel; the result does not depend on scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepGrid> {
    spec.validate()?;
    let nx = spec.axis_x.len();
    let cells = (0..spec.cell_count())
        .into_par_iter()
        .map(|k| evaluate_cell(spec, k % nx, k / nx))
        .collect();
    Ok(SweepGrid {
        axis_x: spec.axis_x.clone(),
        axis_y: spec.axis_y.clone(),
        cells,
    })
}

/// Single-threaded [`run_sweep`].
pub fn run_sweep_serial(spec: &SweepSpec) -> Result<SweepGrid> {
    spec.validate()?;
    let nx = spec.axis_x.len();
    let cells = (0..spec.cell_count())
        .map(|k| evaluate_cell(spec, k % nx, k / nx))
        .collect();
    Ok(SweepGrid {
        axis_x: spec.axis_x.clone(),
        axis_y: spec.axis_y.clone(),
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMaximum {
    pub ix: usize,
    pub iy: usize,
    pub x_value: f64,
    pub y_value: f64,
    pub p_x: f64,
}

/// Strict local maxima of P_X over the 8-neighbourhood that exceed
/// `threshold`, by descending P_X (row-major order on ties).
pub fn locate_maxima(grid: &SweepGrid, threshold: f64) -> Vec<GridMaximum> {
    let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
    let mut maxima = Vec::new();
    for cell in &grid.cells {
        let p = cell.p_x();
        if !(p > threshold) {
            continue;
        }
        let (x, y) = (cell.ix as isize, cell.iy as isize);
        let mut strict = true;
        'nbr: for dy in -1..=1 {
            for dx in -1..=1 {
                let (qx, qy) = (x + dx, y + dy);
                if (dx, dy) == (0, 0) || qx < 0 || qy < 0 || qx >= nx || qy >= ny {
                    continue;
                }
                // NaN neighbours (failed cells) do not block a maximum
                if grid.cell(qx as usize, qy as usize).p_x() >= p {
                    strict = false;
                    break 'nbr;
                }
            }
        }
        if strict {
            maxima.push(GridMaximum {
                ix: cell.ix,
                iy: cell.iy,
                x_value: cell.x_value,
                y_value: cell.y_value,
                p_x: p,
            });
        }
    }
    // stable sort keeps row-major order among equal values
    maxima.sort_by(|a, b| b.p_x.total_cmp(&a.p_x));
    maxima
}

/// Coarse sweep followed by `refinements` zooms onto the best cell.
/// Returns the final grid and its best cell.
pub fn locate_resonance(spec: &SweepSpec, refinements: usize, points_per_axis: usize) -> Result<(SweepGrid, SweepCell)> {
    let mut spec = spec.clone();
    let mut grid = run_sweep(&spec)?;
    for _ in 0..refinements {
        let best = grid.argmax().ok_or_else(|| Error::Validation(vec!["sweep produced no finite cells".into()]))?;
        spec = spec.refined_around(best.ix, best.iy, points_per_axis)?;
        grid = run_sweep(&spec)?;
    }
    let best = grid
        .argmax()
        .cloned()
        .ok_or_else(|| Error::Validation(vec!["sweep produced no finite cells".into()]))?;
    Ok((grid, best))
}

/// Result of [`minimum_excitation_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcitationScan {
    pub max_p_x: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub evaluated: usize,
}

/// Largest final P_X over a square grid of same-sign detunings for the Fock
/// state |G, n1, n2⟩ with G₁ = G₂ = `coupling`.
pub fn minimum_excitation_scan(detunings: &[f64], coupling: f64, n1: u64, n2: u64) -> Result<ExcitationScan> {
    if detunings.is_empty() {
        return Err(Error::Validation(vec!["empty detuning grid".into()]));
    }
    let red = detunings.iter().all(|&d| d <= -2.0);
    let blue = detunings.iter().all(|&d| d >= 2.0);
    if !(red || blue) {
        return Err(Error::Validation(vec![
            "detunings must share one sign and satisfy |Δ| >= 2".into(),
        ]));
    }
    let total = n1 + n2 + 1;
    let window = TruncationWindow::new(0, total)?;
    let base = SimConfig::fock(EmitterLevel::Ground, n1, n2)
        .with_couplings(coupling, coupling)
        .with_windows(window, window)
        .with_record_stride(usize::MAX);
    let points: Vec<(f64, f64)> = detunings
        .iter()
        .flat_map(|&d2| detunings.iter().map(move |&d1| (d1, d2)))
        .collect();
    let results: Vec<Result<(f64, f64, f64)>> = points
        .par_iter()
        .map(|&(d1, d2)| {
            let traj = evolve(&base.clone().with_detunings(d1, d2))?;
            Ok((traj.final_observables.p_x, d1, d2))
        })
        .collect();
    let mut best = ExcitationScan {
        max_p_x: f64::NEG_INFINITY,
        delta1: f64::NAN,
        delta2: f64::NAN,
        evaluated: points.len(),
    };
    for r in results {
        let (p, d1, d2) = r?;
        if p > best.max_p_x {
            best.max_p_x = p;
            best.delta1 = d1;
            best.delta2 = d2;
        }
    }
    Ok(best)
}

/// A named configuration: either one run or a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Single(SimConfig),
    Sweep(SweepSpec),
}

impl Preset {
    /// The single configuration, or the base of a sweep.
    pub fn config(&self) -> &SimConfig {
        match self {
            Preset::Single(c) => c,
            Preset::Sweep(s) => &s.base,
        }
    }
}

pub const PRESET_NAMES: [&str; 10] = [
    "super_fig1a",
    "super_fig1b",
    "dichromatic_fig2",
    "vacuum_fig3c",
    "vacuum_fig3d",
    "entangled_fig3g",
    "reverse_fig3h",
    "coherent_fig4a",
    "coherent_fig4d",
    "rabi_check",
];

pub fn preset_description(name: &str) -> Option<&'static str> {
    Some(match name {
        "super_fig1a" => "SUPER sweep over (Δ₂, n₂), Δ₁=−6, n₁=3947, G=0.1",
        "super_fig1b" => "SUPER sweep over (Δ₂, n₂), Δ₁=−6, n₁=24673, G=0.1",
        "dichromatic_fig2" => "red-and-blue sweep over (n₁, n₂), Δ₁=−Δ₂=6, G=0.1",
        "vacuum_fig3c" => "|G,5,0⟩, Δ=(−7.56, −28.56), G=5",
        "vacuum_fig3d" => "|G,2,0⟩, Δ=(−4.06, −15.96), G=5",
        "entangled_fig3g" => "|G,1,1⟩, Δ₁=−Δ₂=3.12, G=5",
        "reverse_fig3h" => "|X,1,0⟩, Δ=(−15.68, −3.78), G=5",
        "coherent_fig4a" => "coherent |α|²=(40, 42), Δ=(−6, −21), G=1",
        "coherent_fig4d" => "coherent |α|²=(2, 1), Δ=(−6, −19.81), G=5",
        "rabi_check" => "resonant single mode, Δ₁=0, G₁=0.1, G₂=0, n₁ swept 1..400",
        _ => return None,
    })
}

/// Windows [0..𝒩+1] hold the whole excitation sector of a few-photon Fock
/// state, with an empty edge above it.
fn few_photon(level: EmitterLevel, n1: u64, n2: u64, d1: f64, d2: f64, g: f64) -> SimConfig {
    let top = level.excitation() + n1 + n2 + 1;
    let w = TruncationWindow::new(0, top).expect("valid window");
    SimConfig::fock(level, n1, n2)
        .with_detunings(d1, d2)
        .with_couplings(g, g)
        .with_windows(w, w)
}

fn super_sweep(n1: u64) -> SweepSpec {
    let base = SimConfig::fock(EmitterLevel::Ground, n1, 0)
        .with_detunings(-6.0, -20.0)
        .with_couplings(0.1, 0.1);
    let x = SweepAxis::linspace(SweepParameter::Delta2, -40.0, -2.0, 191).expect("valid axis");
    let y = SweepAxis::sqrt_spaced(SweepParameter::N2Init, 0.0, 200.0, 200).expect("valid axis");
    SweepSpec::new(base, x, y)
}

pub fn preset(name: &str) -> Result<Preset> {
    use EmitterLevel::{Excited, Ground};
    Ok(match name {
        "super_fig1a" => Preset::Sweep(super_sweep(3947)),
        "super_fig1b" => Preset::Sweep(super_sweep(24673)),
        "dichromatic_fig2" => {
            let base = SimConfig::fock(Ground, 0, 0)
                .with_detunings(6.0, -6.0)
                .with_couplings(0.1, 0.1);
            let x = SweepAxis::sqrt_spaced(SweepParameter::N1Init, 0.0, 100.0, 101)?;
            let y = SweepAxis::sqrt_spaced(SweepParameter::N2Init, 0.0, 100.0, 101)?;
            Preset::Sweep(SweepSpec::new(base, x, y))
        }
        "vacuum_fig3c" => Preset::Single(few_photon(Ground, 5, 0, -7.56, -28.56, 5.0)),
        "vacuum_fig3d" => Preset::Single(few_photon(Ground, 2, 0, -4.06, -15.96, 5.0)),
        "entangled_fig3g" => Preset::Single(few_photon(Ground, 1, 1, 3.12, -3.12, 5.0)),
        "reverse_fig3h" => Preset::Single(few_photon(Excited, 1, 0, -15.68, -3.78, 5.0)),
        "coherent_fig4a" => {
            let mut cfg = SimConfig::new(
                Ground,
                FieldInit::coherent_with_mean(40.0),
                FieldInit::coherent_with_mean(42.0),
            )
            .with_detunings(-6.0, -21.0)
            .with_couplings(1.0, 1.0);
            cfg.auto_windows(0);
            Preset::Single(cfg)
        }
        "coherent_fig4d" => {
            let mut cfg = SimConfig::new(
                Ground,
                FieldInit::coherent_with_mean(2.0),
                FieldInit::coherent_with_mean(1.0),
            )
            .with_detunings(-6.0, -19.81)
            .with_couplings(5.0, 5.0);
            cfg.auto_windows(0);
            Preset::Single(cfg)
        }
        "rabi_check" => {
            let base = SimConfig::fock(Ground, 100, 0).with_couplings(0.1, 0.0);
            let x = SweepAxis::linspace(SweepParameter::N1Init, 1.0, 400.0, 400)?;
            let y = SweepAxis::new(SweepParameter::G1, vec![0.1])?;
            Preset::Sweep(SweepSpec::new(base, x, y))
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    })
}

/// Copy of a Fock/coherent configuration with the other field type at the
/// same mean photon numbers; windows are re-derived for the new fields.
pub fn with_field_kind(cfg: &SimConfig, coherent: bool, fock_half_width: u64) -> SimConfig {
    let mut out = cfg.clone();
    let convert = |f: FieldInit| match (f, coherent) {
        (FieldInit::Fock(n), true) => FieldInit::coherent_with_mean(n as f64),
        (FieldInit::Coherent(a), false) => FieldInit::Fock(a.norm_sqr().round() as u64),
        (f, _) => f,
    };
    out.field1_init = convert(cfg.field1_init);
    out.field2_init = convert(cfg.field2_init);
    out.auto_windows(if coherent { 0 } else { fock_half_width });
    out
}
