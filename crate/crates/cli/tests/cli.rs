use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn supersim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_supersim"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn preset_list_names_every_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out = supersim(&["preset", "list"], dir.path());
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in supersim_names() {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

fn supersim_names() -> [&'static str; 10] {
    [
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
    ]
}

#[test]
fn evolve_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("job.toml"), "preset = \"vacuum_fig3c\"\noutput = \"traj.csv\"\n").unwrap();
    let out = supersim(&["evolve", "job.toml"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(dir.path().join("traj.csv")).unwrap();
    let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "tau,p_x,n1,n2,delta_n1,delta_n2,excitation,norm_drift");
    assert_eq!(data.len(), 1 + 6000 / 100 + 1);
    let last: Vec<f64> = data.last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[1] - 1.0).abs() < 0.01, "p_x = {}", last[1]);

    let manifest = fs::read_to_string(dir.path().join("traj.manifest.json")).unwrap();
    assert!(manifest.contains("\"command\": \"evolve\""));

    // re-running the manifest reproduces the CSV byte for byte
    fs::rename(dir.path().join("traj.csv"), dir.path().join("first.csv")).unwrap();
    let again = supersim(&["evolve", "traj.manifest.json"], dir.path());
    assert_eq!(code(&again), 0, "{}", String::from_utf8_lossy(&again.stderr));
    assert_eq!(
        fs::read(dir.path().join("first.csv")).unwrap(),
        fs::read(dir.path().join("traj.csv")).unwrap()
    );
}

#[test]
fn unknown_key_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "delta1 = -6\nbogus = 1\n").unwrap();
    let out = supersim(&["evolve", "bad.toml"], dir.path());
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bogus") && err.contains(":2"), "{err}");
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = supersim(&["audit", "nope.toml"], dir.path());
    assert_eq!(code(&out), 3);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("job.toml"), "preset = \"vacuum_fig3d\"\noutput = \"missing/dir/t.csv\"\n").unwrap();
    let out = supersim(&["evolve", "job.toml"], dir.path());
    assert_eq!(code(&out), 3);
}

#[test]
fn audit_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("tight.toml"),
        "n1_init = 100\ng1 = 0.1\ng2 = 0.0\ndelta1 = 0.0\nwindow1 = [99, 100]\nwindow2 = [0, 0]\n",
    )
    .unwrap();
    let out = supersim(&["audit", "tight.toml"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("saturated"));

    fs::write(
        dir.path().join("wide.toml"),
        "n1_init = 100\ng1 = 0.1\ng2 = 0.0\ndelta1 = 0.0\nwindow1 = [80, 120]\nwindow2 = [0, 0]\n",
    )
    .unwrap();
    let out = supersim(&["audit", "wide.toml"], dir.path());
    assert_eq!(code(&out), 0);
}

#[test]
fn oracle_prints_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("job.toml"), "preset = \"vacuum_fig3d\"\n").unwrap();
    let out = supersim(&["oracle", "job.toml"], dir.path());
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let f: f64 = text.lines().next().unwrap().trim_start_matches("fidelity ").parse().unwrap();
    assert!(f > 1.0 - 1e-8, "{f}");
}

#[test]
fn small_sweep_matches_standalone_evolve() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("one.toml"),
        "preset = \"vacuum_fig3d\"\nx_param = \"delta2\"\nx_values = [-15.96]\n\
         y_param = \"delta1\"\ny_values = [-4.06]\nsweep_windows = \"fixed\"\noutput = \"grid.csv\"\n",
    )
    .unwrap();
    let out = supersim(&["sweep", "one.toml"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let grid = fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    let rows: Vec<&str> = grid.lines().collect();
    assert_eq!(rows[0], "x_value,y_value,p_x,delta_n1,delta_n2,audit_pass");
    assert_eq!(rows.len(), 2);
    assert!(dir.path().join("grid.manifest.json").exists());

    fs::write(dir.path().join("single.toml"), "preset = \"vacuum_fig3d\"\noutput = \"t.csv\"\n").unwrap();
    assert_eq!(code(&supersim(&["evolve", "single.toml"], dir.path())), 0);
    let traj = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let p_traj = traj.lines().last().unwrap().split(',').nth(1).unwrap().to_string();
    let p_grid = rows[1].split(',').nth(2).unwrap();
    assert_eq!(p_grid, p_traj);
}

#[test]
fn evolve_rejects_sweep_configs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.toml"), "preset = \"rabi_check\"\n").unwrap();
    assert_eq!(code(&supersim(&["evolve", "s.toml"], dir.path())), 1);
}

#[test]
fn preset_show_round_trips_through_evolve() {
    let dir = tempfile::tempdir().unwrap();
    let out = supersim(&["preset", "show", "reverse_fig3h"], dir.path());
    assert_eq!(code(&out), 0);
    fs::write(dir.path().join("r.toml"), &out.stdout).unwrap();
    let out = supersim(&["evolve", "r.toml", "-o", "-"], dir.path());
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout).unwrap().contains("tau,p_x"));
    assert_eq!(code(&supersim(&["preset", "show", "nope"], dir.path())), 1);
}
