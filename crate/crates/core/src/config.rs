//! Flat key-value job files.
//!
//! A job file is TOML with top-level keys only. Every key is optional; a
//! `preset` supplies a complete starting point and the remaining keys
//! override it. The resolved job can be echoed back as a file that lists
//! every setting explicitly and parses to the same job.
//!
//! ```toml
//! preset = "vacuum_fig3d"
//! dt = 2e-3
//! output = "fig3d.csv"
//! ```

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{AuditTolerances, SimConfig, DEFAULT_HALF_WIDTH};
use crate::error::{Error, Result};
use crate::hilbert::{EmitterLevel, FieldInit, Mode, TruncationWindow};
use crate::scenarios::{preset, Preset, SweepAxis, SweepParameter, SweepSpec, WindowPolicy};

/// Default number of exact sub-steps per RK4 step for the `oracle` command.
pub const DEFAULT_ORACLE_SUBSTEPS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepWindows {
    Auto,
    Fixed,
}

/// Raw contents of a job file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emitter: Option<EmitterLevel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n1_init: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n2_init: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha1_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha1_im: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha2_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha2_im: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window1: Option<[u64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window2: Option<[u64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_half_width: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coherent_eps: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_param: Option<SweepParameter>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_values: Option<Vec<f64>>,
    /// `[start, stop, count]`, evenly spaced.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_range: Option<(f64, f64, usize)>,
    /// `[sqrt_start, sqrt_stop, count]`, evenly spaced in the square root.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_sqrt_range: Option<(f64, f64, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_param: Option<SweepParameter>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_range: Option<(f64, f64, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_sqrt_range: Option<(f64, f64, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_windows: Option<SweepWindows>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_excitation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_boundary: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_substeps: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
}

/// A fully resolved job.
#[derive(Debug, Clone, PartialEq)]
pub struct JobConfig {
    pub sim: SimConfig,
    pub sweep: Option<SweepSpec>,
    pub tolerances: AuditTolerances,
    pub oracle_substeps: usize,
    pub output: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

fn default_half_width(field: FieldInit) -> u64 {
    match field {
        FieldInit::Fock(_) => DEFAULT_HALF_WIDTH,
        FieldInit::Coherent(_) => 0,
    }
}

fn window_from(pair: [u64; 2], name: &str, problems: &mut Vec<String>) -> Option<TruncationWindow> {
    match TruncationWindow::new(pair[0], pair[1]) {
        Ok(w) => Some(w),
        Err(e) => {
            problems.push(format!("{name}: {e}"));
            None
        }
    }
}

fn axis_from(
    name: &str,
    param: Option<SweepParameter>,
    values: &Option<Vec<f64>>,
    range: Option<(f64, f64, usize)>,
    sqrt_range: Option<(f64, f64, usize)>,
    problems: &mut Vec<String>,
) -> Option<Option<SweepAxis>> {
    let given = values.is_some() as usize + range.is_some() as usize + sqrt_range.is_some() as usize;
    let Some(param) = param else {
        if given > 0 {
            problems.push(format!("{name}_values/{name}_range given without {name}_param"));
            return None;
        }
        return Some(None);
    };
    if given != 1 {
        problems.push(format!(
            "{name}_param needs exactly one of {name}_values, {name}_range, {name}_sqrt_range"
        ));
        return None;
    }
    let axis = if let Some(v) = values {
        SweepAxis::new(param, v.clone())
    } else if let Some((a, b, n)) = range {
        SweepAxis::linspace(param, a, b, n)
    } else {
        let (a, b, n) = sqrt_range.expect("one axis form is present");
        SweepAxis::sqrt_spaced(param, a, b, n)
    };
    match axis {
        Ok(a) => Some(Some(a)),
        Err(Error::Validation(p)) => {
            problems.extend(p.into_iter().map(|m| format!("{name} axis: {m}")));
            None
        }
        Err(e) => {
            problems.push(format!("{name} axis: {e}"));
            None
        }
    }
}

impl ConfigFile {
    /// Parse job-file text. `origin` names the source in diagnostics.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            let key = unknown_key(e.message()).or_else(|| {
                e.span().and_then(|s| {
                    let start = text[..s.start.min(text.len())].rfind('\n').map_or(0, |p| p + 1);
                    let rest = &text[start..];
                    let end = rest.find('\n').unwrap_or(rest.len());
                    rest[..end].split_once('=').map(|(k, _)| k.trim().to_string())
                })
            });
            Error::Parse {
                path: origin.to_string(),
                line,
                key,
                message: e.message().trim().to_string(),
            }
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    /// Apply defaults, expand the preset and validate.
    pub fn resolve(&self) -> Result<JobConfig> {
        let mut problems = Vec::new();
        let (mut sim, preset_sweep) = match &self.preset {
            Some(name) => match preset(name)? {
                Preset::Single(c) => (c, None),
                Preset::Sweep(s) => (s.base.clone(), Some(s)),
            },
            None => (SimConfig::fock(EmitterLevel::Ground, 0, 0), None),
        };

        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field { $target = v; })*
            };
        }
        set!(
            delta1 => sim.delta1,
            delta2 => sim.delta2,
            g1 => sim.g1,
            g2 => sim.g2,
            emitter => sim.emitter_init,
            dt => sim.dt,
            record_stride => sim.record_stride,
            span_sigma => sim.span_sigma,
            coherent_eps => sim.coherent_eps,
        );

        let fields = [
            (Mode::One, self.n1_init, self.alpha1_re, self.alpha1_im, self.window1),
            (Mode::Two, self.n2_init, self.alpha2_re, self.alpha2_im, self.window2),
        ];
        for (mode, n, re, im, window) in fields {
            let coherent = re.is_some() || im.is_some();
            let field = match (n, coherent) {
                (Some(_), true) => {
                    problems.push(format!("n{mode}_init and alpha{mode}_* are mutually exclusive"));
                    None
                }
                (Some(n), false) => Some(FieldInit::Fock(n)),
                (None, true) => Some(FieldInit::Coherent(C64::new(re.unwrap_or(0.0), im.unwrap_or(0.0)))),
                (None, false) => None,
            };
            if let Some(f) = field {
                match mode {
                    Mode::One => sim.field1_init = f,
                    Mode::Two => sim.field2_init = f,
                }
            }
            let explicit = window.and_then(|w| window_from(w, &format!("window{mode}"), &mut problems));
            // a changed field (or half width) re-centres a window that is not given explicitly
            let rederive = field.is_some() || self.window_half_width.is_some() || self.preset.is_none();
            let w = match explicit {
                Some(w) => w,
                None if rederive => {
                    let f = sim.field_init(mode);
                    let hw = self.window_half_width.unwrap_or_else(|| default_half_width(f));
                    f.natural_window(hw, sim.coherent_eps)
                }
                None => sim.basis().window(mode),
            };
            match mode {
                Mode::One => sim.window1 = w,
                Mode::Two => sim.window2 = w,
            }
        }

        let defaults = AuditTolerances::default();
        let tolerances = AuditTolerances {
            norm: self.tol_norm.unwrap_or(defaults.norm),
            excitation: self.tol_excitation.unwrap_or(defaults.excitation),
            boundary: self.tol_boundary.unwrap_or(defaults.boundary),
        };
        for (name, v) in [
            ("tol_norm", tolerances.norm),
            ("tol_excitation", tolerances.excitation),
            ("tol_boundary", tolerances.boundary),
        ] {
            if !(v.is_finite() && v > 0.0) {
                problems.push(format!("{name} must be > 0"));
            }
        }
        let oracle_substeps = self.oracle_substeps.unwrap_or(DEFAULT_ORACLE_SUBSTEPS);
        if oracle_substeps == 0 {
            problems.push("oracle_substeps must be >= 1".into());
        }

        let x = axis_from("x", self.x_param, &self.x_values, self.x_range, self.x_sqrt_range, &mut problems);
        let y = axis_from("y", self.y_param, &self.y_values, self.y_range, self.y_sqrt_range, &mut problems);
        let sweep = match (x, y, preset_sweep) {
            (Some(x), Some(y), preset_sweep) => {
                let (px, py) = preset_sweep.map_or((None, None), |s| (Some(s.axis_x), Some(s.axis_y)));
                match (x.or(px), y.or(py)) {
                    (Some(x), Some(y)) => {
                        let mode = self.sweep_windows.unwrap_or(SweepWindows::Auto);
                        let windows = match mode {
                            SweepWindows::Fixed => WindowPolicy::Fixed,
                            SweepWindows::Auto => WindowPolicy::Auto {
                                half_width: self.window_half_width.unwrap_or(DEFAULT_HALF_WIDTH),
                            },
                        };
                        let mut spec = SweepSpec::new(sim.clone(), x, y).with_windows(windows);
                        spec.tolerances = tolerances;
                        if let Err(Error::Validation(p)) = spec.validate() {
                            problems.extend(p);
                        }
                        Some(spec)
                    }
                    (None, None) => None,
                    _ => {
                        problems.push("a sweep needs both x_param and y_param".into());
                        None
                    }
                }
            }
            _ => None,
        };

        // in an auto-window sweep the base windows are re-derived per cell
        let check_windows = !matches!(sweep, Some(SweepSpec { windows: WindowPolicy::Auto { .. }, .. }));
        if let Err(Error::Validation(p)) = sim.validate() {
            problems.extend(p.into_iter().filter(|m| check_windows || !m.contains("outside window")));
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Ok(JobConfig {
            sim,
            sweep,
            tolerances,
            oracle_substeps,
            output: self.output.clone(),
            manifest: self.manifest.clone(),
        })
    }
}

fn unknown_key(message: &str) -> Option<String> {
    let rest = message.split("unknown field `").nth(1)?;
    Some(rest.split('`').next()?.to_string())
}

impl JobConfig {
    /// Every setting written out explicitly, without a preset.
    pub fn echo(&self) -> ConfigFile {
        let s = &self.sim;
        let mut out = ConfigFile {
            delta1: Some(s.delta1),
            delta2: Some(s.delta2),
            g1: Some(s.g1),
            g2: Some(s.g2),
            emitter: Some(s.emitter_init),
            window1: Some([s.window1.n_min(), s.window1.n_max()]),
            window2: Some([s.window2.n_min(), s.window2.n_max()]),
            dt: Some(s.dt),
            record_stride: Some(s.record_stride),
            span_sigma: Some(s.span_sigma),
            coherent_eps: Some(s.coherent_eps),
            tol_norm: Some(self.tolerances.norm),
            tol_excitation: Some(self.tolerances.excitation),
            tol_boundary: Some(self.tolerances.boundary),
            oracle_substeps: Some(self.oracle_substeps),
            output: self.output.clone(),
            manifest: self.manifest.clone(),
            ..Default::default()
        };
        match s.field1_init {
            FieldInit::Fock(n) => out.n1_init = Some(n),
            FieldInit::Coherent(a) => (out.alpha1_re, out.alpha1_im) = (Some(a.re), Some(a.im)),
        }
        match s.field2_init {
            FieldInit::Fock(n) => out.n2_init = Some(n),
            FieldInit::Coherent(a) => (out.alpha2_re, out.alpha2_im) = (Some(a.re), Some(a.im)),
        }
        if let Some(spec) = &self.sweep {
            out.x_param = Some(spec.axis_x.parameter());
            out.x_values = Some(spec.axis_x.values().to_vec());
            out.y_param = Some(spec.axis_y.parameter());
            out.y_values = Some(spec.axis_y.values().to_vec());
            match spec.windows {
                WindowPolicy::Fixed => out.sweep_windows = Some(SweepWindows::Fixed),
                WindowPolicy::Auto { half_width } => {
                    out.sweep_windows = Some(SweepWindows::Auto);
                    out.window_half_width = Some(half_width);
                }
            }
        }
        out
    }
}

/// Read and resolve a job file. A `.json` path is read as a run manifest
/// and its echoed configuration is used.
pub fn parse_config(path: &Path) -> Result<JobConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let origin = path.display().to_string();
    let file = if path.extension().is_some_and(|e| e == "json") {
        #[derive(Deserialize)]
        struct Wrapped {
            config: ConfigFile,
        }
        serde_json::from_str::<Wrapped>(&text)
            .map_err(|e| Error::Parse {
                path: origin.clone(),
                line: Some(e.line()),
                key: None,
                message: e.to_string(),
            })?
            .config
    } else {
        ConfigFile::from_toml(&text, &origin)?
    };
    file.resolve()
}
