//! Python bindings: configurations, trajectories, sweeps and the oracle.

use std::path::PathBuf;

use num_complex::Complex64 as C64;
use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use supersim_core::config::{parse_config, ConfigFile, JobConfig};
use supersim_core::dynamics::{self, convergence_audit, AuditTolerances};
use supersim_core::hilbert::{BasisLabel, EmitterLevel, FieldInit, Mode, StateVector, TruncationWindow};
use supersim_core::observables::{self, PEAK_PROMINENCE};
use supersim_core::output::{grid_csv, trajectory_csv};
use supersim_core::scenarios::{self, PRESET_NAMES};
use supersim_core::{oracle, Error};

create_exception!(supersim, ValidationError, PyValueError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => ValidationError::new_err(e.to_string()),
    }
}

fn level_from(s: &str) -> PyResult<EmitterLevel> {
    match s.to_ascii_lowercase().as_str() {
        "g" | "ground" => Ok(EmitterLevel::Ground),
        "x" | "excited" => Ok(EmitterLevel::Excited),
        _ => Err(ValidationError::new_err(format!("unknown emitter level `{s}` (use \"g\" or \"x\")"))),
    }
}

fn window_from(w: Option<(u64, u64)>) -> PyResult<Option<TruncationWindow>> {
    w.map(|(a, b)| TruncationWindow::new(a, b).map_err(py_err)).transpose()
}

fn window_tuple(w: TruncationWindow) -> (u64, u64) {
    (w.n_min(), w.n_max())
}

/// Simulation settings. Fields are initialized in Fock states `n1`, `n2`
/// unless a coherent amplitude `alpha1`/`alpha2` is given.
#[pyclass(name = "SimConfig", module = "supersim", from_py_object)]
#[derive(Clone)]
struct PySimConfig {
    job: JobConfig,
}

#[pymethods]
impl PySimConfig {
    #[new]
    #[pyo3(signature = (
        emitter = "g", n1 = 0, n2 = 0, *, alpha1 = None, alpha2 = None,
        delta1 = 0.0, delta2 = 0.0, g1 = 0.0, g2 = 0.0,
        window1 = None, window2 = None, window_half_width = None,
        dt = None, record_stride = None,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        emitter: &str,
        n1: u64,
        n2: u64,
        alpha1: Option<C64>,
        alpha2: Option<C64>,
        delta1: f64,
        delta2: f64,
        g1: f64,
        g2: f64,
        window1: Option<(u64, u64)>,
        window2: Option<(u64, u64)>,
        window_half_width: Option<u64>,
        dt: Option<f64>,
        record_stride: Option<usize>,
    ) -> PyResult<Self> {
        let file = ConfigFile {
            emitter: Some(level_from(emitter)?),
            n1_init: alpha1.is_none().then_some(n1),
            n2_init: alpha2.is_none().then_some(n2),
            alpha1_re: alpha1.map(|a| a.re),
            alpha1_im: alpha1.map(|a| a.im),
            alpha2_re: alpha2.map(|a| a.re),
            alpha2_im: alpha2.map(|a| a.im),
            delta1: Some(delta1),
            delta2: Some(delta2),
            g1: Some(g1),
            g2: Some(g2),
            window1: window_from(window1)?.map(|w| [w.n_min(), w.n_max()]),
            window2: window_from(window2)?.map(|w| [w.n_min(), w.n_max()]),
            window_half_width,
            dt,
            record_stride,
            ..Default::default()
        };
        Ok(Self { job: file.resolve().map_err(py_err)? })
    }

    /// Configuration of a named preset (the base of a sweep preset).
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        let file = ConfigFile { preset: Some(name.to_string()), ..Default::default() };
        Ok(Self { job: file.resolve().map_err(py_err)? })
    }

    /// Read a job file (TOML, or a JSON run manifest).
    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(Self { job: parse_config(&path).map_err(py_err)? })
    }

    /// Parse job-file text.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let file = ConfigFile::from_toml(text, "<string>").map_err(py_err)?;
        Ok(Self { job: file.resolve().map_err(py_err)? })
    }

    fn to_toml(&self) -> String {
        self.job.echo().to_toml()
    }

    /// Copy with other detunings.
    fn with_detunings(&self, delta1: f64, delta2: f64) -> Self {
        let mut out = self.clone();
        out.job.sim.delta1 = delta1;
        out.job.sim.delta2 = delta2;
        out
    }

    /// Copy with explicit windows.
    fn with_windows(&self, window1: (u64, u64), window2: (u64, u64)) -> PyResult<Self> {
        let mut out = self.clone();
        out.job.sim.window1 = TruncationWindow::new(window1.0, window1.1).map_err(py_err)?;
        out.job.sim.window2 = TruncationWindow::new(window2.0, window2.1).map_err(py_err)?;
        out.job.sim.validate().map_err(py_err)?;
        Ok(out)
    }

    #[getter]
    fn delta1(&self) -> f64 {
        self.job.sim.delta1
    }
    #[getter]
    fn delta2(&self) -> f64 {
        self.job.sim.delta2
    }
    #[getter]
    fn g1(&self) -> f64 {
        self.job.sim.g1
    }
    #[getter]
    fn g2(&self) -> f64 {
        self.job.sim.g2
    }
    #[getter]
    fn dt(&self) -> f64 {
        self.job.sim.dt
    }
    #[getter]
    fn window1(&self) -> (u64, u64) {
        window_tuple(self.job.sim.window1)
    }
    #[getter]
    fn window2(&self) -> (u64, u64) {
        window_tuple(self.job.sim.window2)
    }
    #[getter]
    fn dimension(&self) -> usize {
        self.job.sim.basis().dimension()
    }
    #[getter]
    fn is_sweep(&self) -> bool {
        self.job.sweep.is_some()
    }
    #[getter]
    fn total_steps(&self) -> usize {
        self.job.sim.total_steps()
    }

    /// Mean initial photon numbers (n1, n2).
    #[getter]
    fn mean_photons(&self) -> (f64, f64) {
        (
            self.job.sim.field1_init.mean_photon_number(),
            self.job.sim.field2_init.mean_photon_number(),
        )
    }

    /// Same configuration with the fields converted to coherent (or Fock)
    /// states of equal mean photon number; windows are re-derived.
    #[pyo3(signature = (coherent, half_width = 20))]
    fn with_field_kind(&self, coherent: bool, half_width: u64) -> Self {
        let mut out = self.clone();
        out.job.sim = scenarios::with_field_kind(&self.job.sim, coherent, half_width);
        out
    }

    fn __repr__(&self) -> String {
        let s = &self.job.sim;
        let field = |f: FieldInit| match f {
            FieldInit::Fock(n) => format!("{n}"),
            FieldInit::Coherent(a) => format!("α={}{:+}i", a.re, a.im),
        };
        format!(
            "SimConfig({}, {}, {}, delta=({}, {}), g=({}, {}), windows={} {})",
            s.emitter_init,
            field(s.field1_init),
            field(s.field2_init),
            s.delta1,
            s.delta2,
            s.g1,
            s.g2,
            s.window1,
            s.window2
        )
    }
}

/// Result of `evolve`.
#[pyclass(name = "Trajectory", module = "supersim")]
struct PyTrajectory {
    traj: dynamics::Trajectory,
    job: JobConfig,
}

impl PyTrajectory {
    fn column(&self, f: impl Fn(&observables::ObservableSet) -> f64) -> Vec<f64> {
        self.traj.observables.iter().map(f).collect()
    }
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.traj.times.clone()
    }
    #[getter]
    fn p_x(&self) -> Vec<f64> {
        self.column(|o| o.p_x)
    }
    #[getter]
    fn n1(&self) -> Vec<f64> {
        self.column(|o| o.n1_mean)
    }
    #[getter]
    fn n2(&self) -> Vec<f64> {
        self.column(|o| o.n2_mean)
    }
    #[getter]
    fn excitation(&self) -> Vec<f64> {
        self.column(|o| o.excitation)
    }
    #[getter]
    fn final_p_x(&self) -> f64 {
        self.traj.final_observables.p_x
    }
    #[getter]
    fn delta_n1(&self) -> f64 {
        observables::photon_variation(&self.traj, Mode::One)
    }
    #[getter]
    fn delta_n2(&self) -> f64 {
        observables::photon_variation(&self.traj, Mode::Two)
    }

    /// Final amplitudes in basis order.
    fn amplitudes(&self) -> Vec<C64> {
        self.traj.final_state.amplitudes().to_vec()
    }

    /// Final amplitude of |level, n1, n2⟩ (0 outside the windows).
    fn amplitude(&self, level: &str, n1: u64, n2: u64) -> PyResult<C64> {
        Ok(self.traj.final_state.amplitude(BasisLabel::new(level_from(level)?, n1, n2)))
    }

    /// Final photon-number distribution of mode 1 or 2 as {n: probability}.
    fn number_distribution(&self, mode: u8) -> PyResult<Vec<(u64, f64)>> {
        let mode = Mode::from_number(mode).ok_or_else(|| ValidationError::new_err("mode must be 1 or 2"))?;
        let n_min = self.traj.final_state.basis().window(mode).n_min();
        Ok(observables::number_distribution(&self.traj.final_state, mode)
            .into_iter()
            .enumerate()
            .map(|(k, p)| (n_min + k as u64, p))
            .collect())
    }

    /// |⟨other|self⟩|² of the final states.
    #[pyo3(signature = (other, optimize_relative_phase = false))]
    fn fidelity(&self, other: &PyTrajectory, optimize_relative_phase: bool) -> PyResult<f64> {
        observables::fidelity(&self.traj.final_state, &other.traj.final_state, optimize_relative_phase).map_err(py_err)
    }

    /// Fidelity of the final state with an equal-weight superposition of
    /// basis states given as (level, n1, n2) tuples.
    #[pyo3(signature = (terms, optimize_relative_phase = true))]
    fn fidelity_to(&self, terms: Vec<(String, u64, u64)>, optimize_relative_phase: bool) -> PyResult<f64> {
        let basis = *self.traj.final_state.basis();
        let mut labelled = Vec::with_capacity(terms.len());
        for (level, n1, n2) in terms {
            labelled.push((BasisLabel::new(level_from(&level)?, n1, n2), C64::new(1.0, 0.0)));
        }
        let target = StateVector::superposition(basis, &labelled).map_err(py_err)?;
        observables::fidelity(&self.traj.final_state, &target, optimize_relative_phase).map_err(py_err)
    }

    /// Number of local maxima of P_X(τ).
    #[pyo3(signature = (prominence = PEAK_PROMINENCE))]
    fn count_maxima(&self, prominence: f64) -> usize {
        observables::count_local_maxima(&observables::population_series(&self.traj), prominence)
    }

    /// Convergence audit as a dict.
    fn audit<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let a = convergence_audit(&self.traj, self.job.tolerances);
        let d = PyDict::new(py);
        d.set_item("passed", a.passed)?;
        d.set_item("max_norm_drift_per_step", a.report.max_norm_drift_per_step)?;
        d.set_item("max_excitation_drift", a.report.max_excitation_drift)?;
        d.set_item("max_boundary_occupancy", a.report.max_boundary_occupancy)?;
        Ok(d)
    }

    /// Trajectory CSV text.
    fn to_csv(&self) -> String {
        trajectory_csv(&self.traj, &[])
    }

    fn __len__(&self) -> usize {
        self.traj.times.len()
    }
}

/// Integrate a configuration with fixed-step RK4.
#[pyfunction]
fn evolve(py: Python<'_>, config: &PySimConfig) -> PyResult<PyTrajectory> {
    let job = config.job.clone();
    let traj = py.detach(|| dynamics::evolve(&job.sim)).map_err(py_err)?;
    Ok(PyTrajectory { traj, job })
}

/// Fidelity between the RK4 final state and the dense exact-unitary propagator.
#[pyfunction]
#[pyo3(signature = (config, substeps = 4))]
fn oracle_fidelity(py: Python<'_>, config: &PySimConfig, substeps: usize) -> PyResult<f64> {
    let sim = config.job.sim.clone();
    py.detach(|| {
        let rk4 = dynamics::evolve(&sim)?;
        let exact = oracle::oracle_propagate(&sim, substeps)?;
        observables::fidelity(&rk4.final_state, &exact, false)
    })
    .map_err(py_err)
}

/// Run the sweep described by a config; returns a dict of column lists in
/// row-major order (x fastest).
#[pyfunction]
fn run_sweep<'py>(py: Python<'py>, config: &PySimConfig) -> PyResult<Bound<'py, PyDict>> {
    let spec = config
        .job
        .sweep
        .clone()
        .ok_or_else(|| ValidationError::new_err("config has no sweep axes"))?;
    let grid = py.detach(|| scenarios::run_sweep(&spec)).map_err(py_err)?;
    let d = PyDict::new(py);
    let col = |f: &dyn Fn(&scenarios::SweepCell) -> f64| grid.cells.iter().map(f).collect::<Vec<f64>>();
    d.set_item("x_param", spec.axis_x.parameter().name())?;
    d.set_item("y_param", spec.axis_y.parameter().name())?;
    d.set_item("nx", grid.nx())?;
    d.set_item("ny", grid.ny())?;
    d.set_item("x_value", col(&|c| c.x_value))?;
    d.set_item("y_value", col(&|c| c.y_value))?;
    d.set_item("p_x", col(&|c| c.p_x()))?;
    d.set_item("delta_n1", col(&|c| c.delta_n1))?;
    d.set_item("delta_n2", col(&|c| c.delta_n2))?;
    d.set_item("audit_pass", grid.cells.iter().map(|c| c.audit_pass).collect::<Vec<_>>())?;
    d.set_item("csv", grid_csv(&grid))?;
    Ok(d)
}

/// Largest final P_X for |G, n1, n2⟩ over a square same-sign detuning grid.
#[pyfunction]
#[pyo3(signature = (detunings, coupling = 5.0, n1 = 1, n2 = 0))]
fn minimum_excitation_scan(py: Python<'_>, detunings: Vec<f64>, coupling: f64, n1: u64, n2: u64) -> PyResult<(f64, f64, f64)> {
    let scan = py
        .detach(|| scenarios::minimum_excitation_scan(&detunings, coupling, n1, n2))
        .map_err(py_err)?;
    Ok((scan.max_p_x, scan.delta1, scan.delta2))
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    PRESET_NAMES.to_vec()
}

/// Default audit tolerances (norm, excitation, boundary).
#[pyfunction]
fn default_tolerances() -> (f64, f64, f64) {
    let t = AuditTolerances::default();
    (t.norm, t.excitation, t.boundary)
}

#[pymodule]
fn supersim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySimConfig>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(minimum_excitation_scan, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(default_tolerances, m)?)?;
    m.add("ValidationError", m.py().get_type::<ValidationError>())?;
    Ok(())
}
