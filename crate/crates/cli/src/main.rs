use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use supersim_core::config::{parse_config, JobConfig};
use supersim_core::dynamics::{convergence_audit, evolve, AuditOutcome, Side};
use supersim_core::observables::fidelity;
use supersim_core::oracle::oracle_propagate;
use supersim_core::output::{grid_csv, trajectory_csv, write_grid, AuditSummary, RunManifest};
use supersim_core::scenarios::{preset, preset_description, run_sweep, PRESET_NAMES};
use supersim_core::Error;

const EXIT_VALIDATION: u8 = 1;
const EXIT_AUDIT: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "supersim", version, about = "Two-level emitter driven by two quantized pulsed modes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write its trajectory CSV.
    Evolve {
        config: PathBuf,
        /// Trajectory CSV; `-` for stdout. Defaults to the config's `output` key.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Evaluate a two-parameter grid and write the grid CSV and manifest.
    Sweep {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare the RK4 result with the dense exact-unitary propagator.
    Oracle { config: PathBuf },
    /// Report norm, excitation-number and window-edge diagnostics.
    Audit { config: PathBuf },
    /// Built-in configurations.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// List preset names.
    List,
    /// Print a preset as an explicit config file.
    Show { name: String },
}

enum Failure {
    Core(Error),
    Audit(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn load(path: &Path) -> Result<JobConfig, Failure> {
    Ok(parse_config(path)?)
}

fn single(job: &JobConfig, command: &str) -> Result<(), Failure> {
    if job.sweep.is_some() {
        return Err(Error::Validation(vec![format!("config describes a sweep; `{command}` needs a single run")]).into());
    }
    Ok(())
}

fn default_output(config: &Path) -> PathBuf {
    config.with_extension("csv")
}

fn audit_line(audit: &AuditOutcome) -> String {
    let r = &audit.report;
    format!(
        "audit {}: norm drift/step {:.3e}, excitation drift {:.3e}, boundary occupancy {:.3e}",
        if audit.passed { "passed" } else { "FAILED" },
        r.max_norm_drift_per_step,
        r.max_excitation_drift,
        r.max_boundary_occupancy
    )
}

fn cmd_evolve(config: &Path, output: Option<PathBuf>) -> Result<(), Failure> {
    let job = load(config)?;
    single(&job, "evolve")?;
    let start = Instant::now();
    let traj = evolve(&job.sim)?;
    let audit = convergence_audit(&traj, job.tolerances);
    let elapsed = start.elapsed().as_secs_f64();

    let output = output.or_else(|| job.output.clone()).unwrap_or_else(|| default_output(config));
    let mut manifest = RunManifest::new("evolve", &job, AuditSummary::of_run(&audit), elapsed);
    let csv = trajectory_csv(&traj, &manifest.summary_lines());
    if output.as_os_str() == "-" {
        print!("{csv}");
    } else {
        std::fs::write(&output, csv).map_err(|e| Error::Io { path: output.display().to_string(), message: e.to_string() })?;
        let mpath = job.manifest.clone().unwrap_or_else(|| output.with_extension("manifest.json"));
        manifest.artifacts = vec![output.clone(), mpath.clone()];
        manifest.write(&mpath)?;
        eprintln!("wrote {} ({} rows) and {}", output.display(), traj.times.len(), mpath.display());
    }
    let f = &traj.final_observables;
    let init = traj.initial_observables();
    eprintln!(
        "final P_X = {:.6}, Δn1 = {:+.6}, Δn2 = {:+.6}",
        f.p_x,
        f.n1_mean - init.n1_mean,
        f.n2_mean - init.n2_mean
    );
    eprintln!("{}", audit_line(&audit));
    if audit.passed {
        Ok(())
    } else {
        Err(Failure::Audit("trajectory written, but the convergence audit failed".into()))
    }
}

fn cmd_sweep(config: &Path, output: Option<PathBuf>) -> Result<(), Failure> {
    let job = load(config)?;
    let Some(spec) = &job.sweep else {
        return Err(Error::Validation(vec!["config has no sweep axes (x_param/y_param)".into()]).into());
    };
    let start = Instant::now();
    let grid = run_sweep(spec)?;
    let elapsed = start.elapsed().as_secs_f64();
    let summary = AuditSummary::of_grid(&grid);
    let manifest = RunManifest::new("sweep", &job, summary.clone(), elapsed);

    let output = output.or_else(|| job.output.clone()).unwrap_or_else(|| default_output(config));
    if output.as_os_str() == "-" {
        print!("{}", grid_csv(&grid));
    } else {
        let mpath = write_grid(&grid, &output, &manifest, job.manifest.as_deref())?;
        eprintln!("wrote {} ({} cells) and {}", output.display(), grid.cells.len(), mpath.display());
    }
    if let Some(best) = grid.argmax() {
        eprintln!("max P_X = {:.6} at x = {}, y = {}", best.p_x(), best.x_value, best.y_value);
    }
    for c in grid.cells.iter().filter(|c| c.error.is_some()) {
        eprintln!("cell ({}, {}) failed: {}", c.ix, c.iy, c.error.as_deref().unwrap_or_default());
    }
    if summary.passed {
        eprintln!("audit passed in all {} cells ({} re-run with wider windows)", summary.cells_total, summary.cells_rerun);
        Ok(())
    } else {
        Err(Failure::Audit(format!(
            "{} of {} cells failed the convergence audit",
            summary.cells_total - summary.cells_passed,
            summary.cells_total
        )))
    }
}

fn cmd_oracle(config: &Path) -> Result<(), Failure> {
    let job = load(config)?;
    single(&job, "oracle")?;
    let traj = evolve(&job.sim)?;
    let exact = oracle_propagate(&job.sim, job.oracle_substeps)?;
    let f = fidelity(&traj.final_state, &exact, false)?;
    println!("fidelity {f:.17e}");
    println!("infidelity {:.3e}", 1.0 - f);
    Ok(())
}

fn cmd_audit(config: &Path) -> Result<(), Failure> {
    let job = load(config)?;
    single(&job, "audit")?;
    let traj = evolve(&job.sim)?;
    let audit = convergence_audit(&traj, job.tolerances);
    let r = &audit.report;
    let t = &job.tolerances;
    println!("window1 {} window2 {} dimension {}", job.sim.window1, job.sim.window2, job.sim.basis().dimension());
    let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
    println!("norm drift per step   {:.3e} (< {:.1e}) {}", r.max_norm_drift_per_step, t.norm, mark(audit.norm_ok));
    println!("excitation drift      {:.3e} (< {:.1e}) {}", r.max_excitation_drift, t.excitation, mark(audit.excitation_ok));
    println!("boundary occupancy    {:.3e} (< {:.1e}) {}", r.max_boundary_occupancy, t.boundary, mark(audit.boundary_ok));
    for (m, name) in ["mode 1", "mode 2"].iter().enumerate() {
        println!("  {name}: lower edge {:.3e}, upper edge {:.3e}", r.edge_occupancy[m][0], r.edge_occupancy[m][1]);
    }
    for e in &audit.saturated_edges {
        let side = match e.side {
            Side::Lower => "lower",
            Side::Upper => "upper",
        };
        let w = job.sim.basis().window(e.mode);
        println!("saturated: mode {} {side} edge of {w}; try {}", e.mode, w.doubled());
    }
    if audit.passed {
        println!("passed");
        Ok(())
    } else {
        Err(Failure::Audit("convergence audit failed".into()))
    }
}

fn cmd_preset(action: PresetAction) -> Result<(), Failure> {
    match action {
        PresetAction::List => {
            for name in PRESET_NAMES {
                println!("{name:<18} {}", preset_description(name).unwrap_or_default());
            }
        }
        PresetAction::Show { name } => {
            preset(&name)?;
            let file = supersim_core::config::ConfigFile { preset: Some(name), ..Default::default() };
            print!("{}", file.resolve()?.echo().to_toml());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Evolve { config, output } => cmd_evolve(&config, output),
        Command::Sweep { config, output } => cmd_sweep(&config, output),
        Command::Oracle { config } => cmd_oracle(&config),
        Command::Audit { config } => cmd_audit(&config),
        Command::Preset { action } => cmd_preset(action),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Audit(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_AUDIT)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io { .. } => EXIT_IO,
                _ => EXIT_VALIDATION,
            })
        }
    }
}
