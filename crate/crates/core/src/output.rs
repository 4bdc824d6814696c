//! CSV result files and JSON run manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ConfigFile, JobConfig};
use crate::dynamics::{AuditOutcome, ConvergenceReport, SimConfig, Trajectory};
use crate::error::{Error, Result};
use crate::hilbert::TruncationWindow;
use crate::scenarios::{SweepGrid, WindowPolicy};

pub const TRAJECTORY_HEADER: &str = "tau,p_x,n1,n2,delta_n1,delta_n2,excitation,norm_drift";
pub const GRID_HEADER: &str = "x_value,y_value,p_x,delta_n1,delta_n2,audit_pass";

/// Full double precision: 17 significant digits.
fn num(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").unwrap();
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub method: String,
    pub dt: f64,
    pub step: f64,
    pub total_steps: usize,
    pub record_stride: usize,
    pub tau_start: f64,
    pub tau_end: f64,
    pub renormalize_each_step: bool,
}

impl IntegratorSettings {
    pub fn of(cfg: &SimConfig) -> Self {
        Self {
            method: "rk4".into(),
            dt: cfg.dt,
            step: cfg.step(),
            total_steps: cfg.total_steps(),
            record_stride: cfg.record_stride,
            tau_start: -cfg.span_sigma,
            tau_end: cfg.span_sigma,
            renormalize_each_step: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub window1: TruncationWindow,
    pub window2: TruncationWindow,
    pub dimension: usize,
    /// `fixed`, `auto` or `per-cell` (auto windows in a sweep).
    pub policy: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub passed: bool,
    pub cells_total: usize,
    pub cells_passed: usize,
    pub cells_rerun: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ConvergenceReport>,
}

impl AuditSummary {
    pub fn of_run(audit: &AuditOutcome) -> Self {
        Self {
            passed: audit.passed,
            cells_total: 1,
            cells_passed: audit.passed as usize,
            cells_rerun: 0,
            report: Some(audit.report),
        }
    }

    pub fn of_grid(grid: &SweepGrid) -> Self {
        let cells_passed = grid.cells.iter().filter(|c| c.audit_pass).count();
        Self {
            passed: cells_passed == grid.cells.len(),
            cells_total: grid.cells.len(),
            cells_passed,
            cells_rerun: grid.cells.iter().filter(|c| c.rerun).count(),
            report: None,
        }
    }
}

/// Everything needed to reproduce a run. `config` is the explicit echo;
/// feeding the manifest back to the CLI repeats the job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub program: String,
    pub version: String,
    pub command: String,
    pub config: ConfigFile,
    pub integrator: IntegratorSettings,
    pub windows: WindowSummary,
    pub audit: AuditSummary,
    pub duration_seconds: f64,
    pub artifacts: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, job: &JobConfig, audit: AuditSummary, duration_seconds: f64) -> Self {
        let policy = match job.sweep.as_ref().map(|s| s.windows) {
            Some(WindowPolicy::Auto { .. }) => "per-cell",
            _ => "fixed",
        };
        Self {
            program: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: job.echo(),
            integrator: IntegratorSettings::of(&job.sim),
            windows: WindowSummary {
                window1: job.sim.window1,
                window2: job.sim.window2,
                dimension: job.sim.basis().dimension(),
                policy: policy.into(),
            },
            audit,
            duration_seconds,
            artifacts: Vec::new(),
        }
    }

    /// Deterministic `#` lines for CSV headers: no timing, no paths.
    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines = vec![format!("{} {} {}", self.program, self.version, self.command)];
        let config = self.config.to_toml();
        lines.extend(config.lines().filter(|l| !l.starts_with("output") && !l.starts_with("manifest")).map(String::from));
        let i = &self.integrator;
        lines.push(format!(
            "integrator {} step={:.16e} total_steps={} record_stride={}",
            i.method, i.step, i.total_steps, i.record_stride
        ));
        lines.push(format!(
            "windows {} {} dimension={} policy={}",
            self.windows.window1, self.windows.window2, self.windows.dimension, self.windows.policy
        ));
        lines.push(format!(
            "audit passed={} cells={}/{}",
            self.audit.passed, self.audit.cells_passed, self.audit.cells_total
        ));
        lines
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &(self.to_json() + "\n"))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn trajectory_csv(traj: &Trajectory, summary: &[String]) -> String {
    let mut out = String::new();
    for line in summary {
        writeln!(out, "# {line}").unwrap();
    }
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    let init = traj.initial_observables();
    for (tau, o) in traj.times.iter().zip(&traj.observables) {
        for (k, v) in [
            *tau,
            o.p_x,
            o.n1_mean,
            o.n2_mean,
            o.n1_mean - init.n1_mean,
            o.n2_mean - init.n2_mean,
            o.excitation,
            o.norm_drift,
        ]
        .into_iter()
        .enumerate()
        {
            if k > 0 {
                out.push(',');
            }
            num(&mut out, v);
        }
        out.push('\n');
    }
    out
}

pub fn write_trajectory(traj: &Trajectory, summary: &[String], path: &Path) -> Result<()> {
    write_file(path, &trajectory_csv(traj, summary))
}

pub fn grid_csv(grid: &SweepGrid) -> String {
    let mut out = String::from(GRID_HEADER);
    out.push('\n');
    for c in &grid.cells {
        for v in [c.x_value, c.y_value, c.p_x(), c.delta_n1, c.delta_n2] {
            num(&mut out, v);
            out.push(',');
        }
        out.push_str(if c.audit_pass { "true" } else { "false" });
        out.push('\n');
    }
    out
}

/// Companion manifest path: `grid.csv` → `grid.manifest.json`.
pub fn manifest_path_for(path: &Path) -> PathBuf {
    path.with_extension("manifest.json")
}

/// Write the grid CSV and its manifest (at `manifest_path`, or next to the CSV).
pub fn write_grid(grid: &SweepGrid, path: &Path, manifest: &RunManifest, manifest_path: Option<&Path>) -> Result<PathBuf> {
    write_file(path, &grid_csv(grid))?;
    let mpath = manifest_path.map_or_else(|| manifest_path_for(path), Path::to_path_buf);
    let mut manifest = manifest.clone();
    manifest.artifacts = vec![path.to_path_buf(), mpath.clone()];
    manifest.write(&mpath)?;
    Ok(mpath)
}
