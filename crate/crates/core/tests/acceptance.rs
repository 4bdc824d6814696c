//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so every line is printed
//! regardless of capture settings. Exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use supersim_core::dynamics::{convergence_audit, evolve, AuditTolerances, SimConfig, Trajectory};
use supersim_core::hilbert::{EmitterLevel, FieldInit, Mode, TruncationWindow};
use supersim_core::observables::{count_local_maxima, fidelity, population_series, PEAK_PROMINENCE};
use supersim_core::oracle::{oracle_propagate, oracle_propagate_with, OracleScheme};
use supersim_core::scenarios::{
    locate_maxima, minimum_excitation_scan, preset, run_sweep, with_field_kind, Preset, SweepAxis, SweepCell,
    SweepGrid, SweepParameter, SweepSpec, WindowPolicy,
};

type Outcome = Result<String, String>;

struct Check {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Self { failures: Vec::new(), notes: Vec::new() }
    }

    /// Record `value` and whether it satisfies `ok`.
    fn that(&mut self, label: &str, value: f64, ok: bool, want: &str) {
        let shown = if value == 0.0 || value.abs() >= 1e-3 { format!("{value:.6}") } else { format!("{value:.3e}") };
        self.record(format!("{label} = {shown} ({want})"), ok);
    }

    fn holds(&mut self, label: &str, ok: bool) {
        self.record(format!("{label}: {}", if ok { "yes" } else { "no" }), ok);
    }

    fn record(&mut self, line: String, ok: bool) {
        if ok {
            self.notes.push(line);
        } else {
            self.failures.push(line);
        }
    }

    fn near(&mut self, label: &str, value: f64, target: f64, tol: f64) {
        self.that(label, value, (value - target).abs() <= tol, &format!("want {target} ± {tol}"));
    }

    fn at_least(&mut self, label: &str, value: f64, bound: f64) {
        self.that(label, value, value >= bound, &format!("want ≥ {bound}"));
    }

    fn below(&mut self, label: &str, value: f64, bound: f64) {
        self.that(label, value, value < bound, &format!("want < {bound}"));
    }

    fn at_most(&mut self, label: &str, value: f64, bound: f64) {
        self.that(label, value, value <= bound, &format!("want ≤ {bound}"));
    }

    fn finish(self) -> Outcome {
        if self.failures.is_empty() {
            Ok(self.notes.join("; "))
        } else {
            Err(format!("{} | ok: {}", self.failures.join("; "), self.notes.join("; ")))
        }
    }
}

fn single(name: &str) -> SimConfig {
    match preset(name).unwrap() {
        Preset::Single(c) => c,
        Preset::Sweep(_) => panic!("{name} is a sweep preset"),
    }
}

fn sweep_preset(name: &str) -> SweepSpec {
    match preset(name).unwrap() {
        Preset::Sweep(s) => s,
        Preset::Single(_) => panic!("{name} is not a sweep preset"),
    }
}

fn run(cfg: &SimConfig) -> Trajectory {
    evolve(cfg).unwrap_or_else(|e| panic!("evolve failed: {e}"))
}

fn delta_n(t: &Trajectory, mode: Mode) -> f64 {
    t.final_observables.mean_photon_number(mode) - t.initial_observables().mean_photon_number(mode)
}

fn window(a: u64, b: u64) -> TruncationWindow {
    TruncationWindow::new(a, b).unwrap()
}

/// Best final P_X over a Δ₂ scan for |G, n1, 0⟩ at Δ₁ = −6, G = 5.
fn best_over_delta2(n1: u64) -> (f64, f64) {
    let w = window(0, n1 + 1);
    let base = SimConfig::fock(EmitterLevel::Ground, n1, 0)
        .with_detunings(-6.0, -20.0)
        .with_couplings(5.0, 5.0)
        .with_windows(w, w);
    let x = SweepAxis::linspace(SweepParameter::Delta2, -40.0, -2.0, 77).unwrap();
    let y = SweepAxis::new(SweepParameter::N1Init, vec![n1 as f64]).unwrap();
    let grid = run_sweep(&SweepSpec::new(base, x, y).with_windows(WindowPolicy::Fixed)).unwrap();
    let best = grid.argmax().unwrap();
    (best.p_x(), best.x_value)
}

fn criterion_1() -> Outcome {
    let mut c = Check::new();
    c.near("fig3c P_X", run(&single("vacuum_fig3c")).final_observables.p_x, 1.00, 0.02);
    c.near("fig3d P_X", run(&single("vacuum_fig3d")).final_observables.p_x, 0.99, 0.02);
    let (p5, d5) = best_over_delta2(5);
    c.near(&format!("|G,5,0> best (Δ₂={d5})"), p5, 0.97, 0.03);
    let (p2, d2) = best_over_delta2(2);
    c.near(&format!("|G,2,0> best (Δ₂={d2})"), p2, 0.88, 0.05);
    c.finish()
}

/// Zoom twice onto `cell` with 9×9 grids; returns the best cell found.
fn refine(spec: &SweepSpec, grid: &SweepGrid, cell: (usize, usize)) -> SweepCell {
    let mut spec = spec.refined_around(cell.0, cell.1, 9).unwrap();
    let mut best = grid.cell(cell.0, cell.1).clone();
    for _ in 0..2 {
        let g = run_sweep(&spec).unwrap();
        let b = g.argmax().unwrap().clone();
        spec = spec.refined_around(b.ix, b.iy, 9).unwrap();
        if b.p_x() > best.p_x() {
            best = b;
        }
    }
    best
}

fn criterion_2(fundamental: &mut Option<SimConfig>) -> Outcome {
    let preset_spec = sweep_preset("super_fig1a");
    let mut c = Check::new();
    c.near("√n₁", (preset_spec.base.field1_init.mean_photon_number()).sqrt(), 62.83, 0.005);
    // reduced density: ΔΔ₂ = 1, Δ√n₂ = 5, then local refinement
    let spec = SweepSpec {
        axis_x: SweepAxis::linspace(SweepParameter::Delta2, -40.0, -2.0, 39).unwrap(),
        axis_y: SweepAxis::sqrt_spaced(SweepParameter::N2Init, 0.0, 200.0, 41).unwrap(),
        ..preset_spec.clone()
    };
    let grid = run_sweep(&spec).unwrap();
    let maxima = locate_maxima(&grid, 0.5);
    let Some(top) = maxima.first() else {
        return Err("no local maximum above 0.5 on the coarse grid".into());
    };
    let best = refine(&spec, &grid, (top.ix, top.iy));
    let cfg = config_at(&spec, best.x_value, best.y_value);
    let t = run(&cfg);
    c.notes.push(format!("maximum at Δ₂ = {:.3}, √n₂ = {:.2}", best.x_value, best.y_value.sqrt()));
    c.at_least("P_X", t.final_observables.p_x, 0.98);
    c.near("Δn₁", delta_n(&t, Mode::One), -2.0, 0.1);
    c.near("Δn₂", delta_n(&t, Mode::Two), 1.0, 0.1);
    c.holds("audit passes", convergence_audit(&t, AuditTolerances::default()).passed);
    *fundamental = Some(cfg);
    c.finish()
}

fn criterion_3(extra: &[SimConfig]) -> Outcome {
    let mut c = Check::new();
    let mut cfgs: Vec<(String, SimConfig)> = [
        "vacuum_fig3c",
        "vacuum_fig3d",
        "entangled_fig3g",
        "reverse_fig3h",
        "coherent_fig4a",
        "coherent_fig4d",
    ]
    .iter()
    .map(|n| (n.to_string(), single(n)))
    .collect();
    cfgs.push(("fig4d Fock".into(), with_field_kind(&single("coherent_fig4d"), false, 3)));
    cfgs.push(("rabi n=100".into(), rabi(100)));
    for (k, cfg) in extra.iter().enumerate() {
        cfgs.push((format!("located resonance {k}"), cfg.clone()));
    }
    let mut worst_drift = 0.0f64;
    let mut worst_identity = 0.0f64;
    for (name, cfg) in &cfgs {
        let t = run(cfg);
        if !convergence_audit(&t, AuditTolerances::default()).passed {
            c.failures.push(format!("{name} did not converge"));
            continue;
        }
        let e0 = t.initial_observables().excitation;
        let drift = t.observables.iter().map(|o| (o.excitation - e0).abs()).fold(t.audit.max_excitation_drift, f64::max);
        worst_drift = worst_drift.max(drift);
        if cfg.emitter_init == EmitterLevel::Ground {
            let identity = t.final_observables.p_x + delta_n(&t, Mode::One) + delta_n(&t, Mode::Two);
            worst_identity = worst_identity.max(identity.abs());
        }
    }
    c.notes.push(format!("{} converged runs", cfgs.len()));
    c.below("max |⟨𝒩⟩(τ) − ⟨𝒩⟩(τ_i)|", worst_drift, 1e-6);
    c.below("max |P_X + Δn₁ + Δn₂|", worst_identity, 1e-6);
    c.finish()
}

fn rabi(n: u64) -> SimConfig {
    SimConfig::fock(EmitterLevel::Ground, n, 0)
        .with_couplings(0.1, 0.0)
        .with_windows(TruncationWindow::around(n, 20), window(0, 0))
}

fn criterion_4() -> Outcome {
    let mut c = Check::new();
    for n in [25u64, 50, 100, 197] {
        let t = run(&rabi(n));
        let p = t.final_observables.p_x;
        let formula = (0.1 * (PI * n as f64).sqrt()).sin().powi(2);
        c.near(&format!("n₁={n} P_X − sin²(G√(πn))"), p - formula, 0.0, 1e-3);
        c.near(&format!("n₁={n} Δn₁ + P_X"), delta_n(&t, Mode::One) + p, 0.0, 1e-4);
    }
    let grid = run_sweep(&sweep_preset("rabi_check")).unwrap();
    let ps: Vec<f64> = grid.cells.iter().map(SweepCell::p_x).collect();
    c.below("scan min P_X", ps.iter().copied().fold(f64::INFINITY, f64::min), 0.01);
    c.at_least("scan max P_X", ps.iter().copied().fold(f64::NEG_INFINITY, f64::max), 0.99);
    let worst = grid.cells.iter().map(|c| (c.delta_n1 + c.p_x()).abs()).fold(0.0, f64::max);
    c.at_most("scan max |Δn₁ + P_X|", worst, 1e-4);
    c.holds("all scan audits pass", grid.all_audits_passed());
    c.finish()
}

fn criterion_5() -> Outcome {
    let mut c = Check::new();
    let cfg = single("vacuum_fig3d");
    let rk4 = run(&cfg).final_state;
    let exact = oracle_propagate(&cfg, 4).unwrap();
    c.below("1 − fidelity", 1.0 - fidelity(&rk4, &exact, false).unwrap(), 1e-8);

    let reference = oracle_propagate_with(&cfg.clone().with_dt(5e-4), 4, OracleScheme::Magnus4).unwrap();
    let dts = [4e-3, 2e-3, 1e-3, 5e-4];
    let mut pts = Vec::new();
    for dt in dts {
        let s = run(&cfg.clone().with_dt(dt)).final_state;
        let diff: f64 = s
            .amplitudes()
            .iter()
            .zip(reference.amplitudes())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        pts.push((dt.ln(), diff.ln()));
        c.notes.push(format!("dt={dt:e}: ‖ψ − ψ_exact‖ = {diff:.3e}"));
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    c.near("order", slope, 4.0, 0.3);
    c.finish()
}

fn swap_modes(cfg: &SimConfig) -> SimConfig {
    let mut s = cfg
        .clone()
        .with_detunings(cfg.delta2, cfg.delta1)
        .with_couplings(cfg.g2, cfg.g1)
        .with_windows(cfg.window2, cfg.window1);
    s.field1_init = cfg.field2_init;
    s.field2_init = cfg.field1_init;
    s
}

fn criterion_6() -> Outcome {
    let mut c = Check::new();
    let cases = ["vacuum_fig3c", "entangled_fig3g", "reverse_fig3h", "coherent_fig4d"];
    let mut worst_flip = 0.0f64;
    let mut swap_exact = true;
    for name in cases {
        let cfg = single(name);
        let a = run(&cfg);
        let b = run(&cfg.clone().with_detunings(-cfg.delta1, -cfg.delta2));
        for (x, y) in a.observables.iter().zip(&b.observables) {
            for (u, v) in [(x.p_x, y.p_x), (x.n1_mean, y.n1_mean), (x.n2_mean, y.n2_mean), (x.excitation, y.excitation)] {
                worst_flip = worst_flip.max((u - v).abs());
            }
        }
        let s = run(&swap_modes(&cfg));
        swap_exact &= a.observables.len() == s.observables.len()
            && a.observables.iter().zip(&s.observables).all(|(x, y)| {
                x.n1_mean.to_bits() == y.n2_mean.to_bits()
                    && x.n2_mean.to_bits() == y.n1_mean.to_bits()
                    && x.p_x.to_bits() == y.p_x.to_bits()
            });
    }
    c.below("sign flip max deviation", worst_flip, 1e-9);
    c.holds("mode relabeling swaps ⟨n₁⟩/⟨n₂⟩ bit-exactly", swap_exact);
    let mut worst_idle = 1.0f64;
    for name in ["vacuum_fig3c", "coherent_fig4d", "coherent_fig4a"] {
        let cfg = single(name).with_couplings(0.0, 0.0);
        let t = run(&cfg);
        worst_idle = worst_idle.min(fidelity(&t.final_state, &cfg.initial_state().unwrap(), false).unwrap());
    }
    c.at_most("G=0 worst 1 − fidelity", 1.0 - worst_idle, 1e-12);
    c.finish()
}

fn criterion_7() -> Outcome {
    let mut c = Check::new();
    let preset_spec = sweep_preset("dichromatic_fig2");
    // reduced density: Δ√n = 2 on both axes
    let spec = SweepSpec {
        axis_x: SweepAxis::sqrt_spaced(SweepParameter::N1Init, 0.0, 100.0, 51).unwrap(),
        axis_y: SweepAxis::sqrt_spaced(SweepParameter::N2Init, 0.0, 100.0, 51).unwrap(),
        ..preset_spec
    };
    let grid = run_sweep(&spec).unwrap();
    let diagonal = grid
        .cells
        .iter()
        .filter(|c| c.x_value == c.y_value)
        .map(SweepCell::p_x)
        .fold(0.0, f64::max);
    c.below("max diagonal P_X", diagonal, 0.1);
    let mut best = grid.argmax().unwrap().p_x();
    c.notes.push(format!("coarse max {best:.4}"));
    for m in locate_maxima(&grid, 0.5).iter().take(3) {
        best = best.max(refine(&spec, &grid, (m.ix, m.iy)).p_x());
    }
    c.at_least("grid max P_X", best, 0.98);
    c.holds("all grid audits pass", grid.all_audits_passed());

    for (n1, n2) in [(256u64, 3752u64), (853, 8071)] {
        let mut cfg = spec.base.clone();
        cfg.field1_init = FieldInit::Fock(n1);
        cfg.field2_init = FieldInit::Fock(n2);
        cfg.auto_windows(20);
        let t = run(&cfg);
        let (d1, d2) = (delta_n(&t, Mode::One), delta_n(&t, Mode::Two));
        let (lost, kept) = if d1.abs() > d2.abs() { (d1, d2) } else { (d2, d1) };
        c.near(&format!("({n1},{n2}) Δn of the emitting mode"), lost, -1.0, 0.1);
        c.near(&format!("({n1},{n2}) Δn of the other mode"), kept, 0.0, 0.1);
    }
    c.finish()
}

fn criterion_8() -> Outcome {
    let mut c = Check::new();
    let g = run(&single("entangled_fig3g"));
    c.near("fig3g P_X", g.final_observables.p_x, 0.96, 0.02);
    c.near("fig3g ⟨n₁⟩", g.final_observables.n1_mean, 0.5, 0.05);
    c.near("fig3g ⟨n₂⟩", g.final_observables.n2_mean, 0.5, 0.05);
    let basis = *g.final_state.basis();
    let one = num_complex::Complex64::new(1.0, 0.0);
    let target = supersim_core::hilbert::StateVector::superposition(
        basis,
        &[
            (supersim_core::hilbert::BasisLabel::new(EmitterLevel::Excited, 1, 0), one),
            (supersim_core::hilbert::BasisLabel::new(EmitterLevel::Excited, 0, 1), one),
        ],
    )
    .unwrap();
    let raw = fidelity(&g.final_state, &target, false).unwrap();
    c.notes.push(format!("raw fidelity {raw:.4}"));
    c.at_least("phase-optimized fidelity", fidelity(&g.final_state, &target, true).unwrap(), 0.9);

    let h = run(&single("reverse_fig3h"));
    c.at_most("fig3h P_X", h.final_observables.p_x, 0.05);
    c.near("fig3h ⟨n₂⟩", h.final_observables.n2_mean, 2.0, 0.1);
    c.at_most("fig3h ⟨n₁⟩", h.final_observables.n1_mean, 0.1);
    c.finish()
}

fn criterion_9() -> Outcome {
    let mut c = Check::new();
    let coherent = single("coherent_fig4d");
    c.near("fig4d coherent P_X", run(&coherent).final_observables.p_x, 0.32, 0.05);
    let fock = with_field_kind(&coherent, false, 3);
    c.near("fig4d Fock P_X", run(&fock).final_observables.p_x, 0.96, 0.02);

    let coherent = single("coherent_fig4a").with_record_stride(10);
    let fock = with_field_kind(&coherent, false, 5);
    let (tc, tf) = (run(&coherent), run(&fock));
    c.notes.push(format!(
        "fig4a P_X coherent {:.4}, Fock {:.4}",
        tc.final_observables.p_x, tf.final_observables.p_x
    ));
    c.at_most("fig4a |ΔP_X|", (tc.final_observables.p_x - tf.final_observables.p_x).abs(), 0.1);
    c.at_least("coherent maxima", count_local_maxima(&population_series(&tc), PEAK_PROMINENCE) as f64, 3.0);
    c.at_most("Fock maxima", count_local_maxima(&population_series(&tf), PEAK_PROMINENCE) as f64, 1.0);
    c.finish()
}

fn criterion_10() -> Outcome {
    let mut c = Check::new();
    let tol = AuditTolerances::default();
    let coherent = single("coherent_fig4a");
    let fock = with_field_kind(&coherent, false, 5);
    c.holds("Fock window has 11 states per mode", fock.window1.size() == 11 && fock.window2.size() == 11);
    c.holds("Fock M = 11 audit passes", convergence_audit(&run(&fock), tol).passed);

    // coherent fields truncated to M states per mode around the mean
    let mut largest_failing = 0;
    for half in [5u64, 10, 15, 20, 24] {
        let mut cfg = coherent.clone();
        cfg.coherent_eps = 0.5;
        cfg.window1 = TruncationWindow::around(40, half);
        cfg.window2 = TruncationWindow::around(42, half);
        let passed = convergence_audit(&run(&cfg), tol).passed;
        if passed {
            c.failures.push(format!("coherent run passed with M = {}", 2 * half + 1));
        } else {
            largest_failing = largest_failing.max(2 * half + 1);
        }
    }
    c.notes.push(format!("coherent fails up to M = {largest_failing}"));
    let t = run(&coherent);
    c.holds(
        &format!("coherent audit passes with M = {}×{}", coherent.window1.size(), coherent.window2.size()),
        convergence_audit(&t, tol).passed && coherent.window1.size().min(coherent.window2.size()) >= 50,
    );
    c.finish()
}

fn criterion_11() -> Outcome {
    let mut c = Check::new();
    let grid: Vec<f64> = (0..57).map(|k| -30.0 + 0.5 * k as f64).collect();
    let scan = minimum_excitation_scan(&grid, 5.0, 1, 0).unwrap();
    c.notes.push(format!("{} points, argmax (Δ₁, Δ₂) = ({}, {})", scan.evaluated, scan.delta1, scan.delta2));
    c.below("max P_X", scan.max_p_x, 0.5);
    c.finish()
}

/// Configuration of an off-grid point of `spec`.
fn config_at(spec: &SweepSpec, x: f64, y: f64) -> SimConfig {
    let mut cfg = spec.base.clone();
    spec.axis_x.parameter().apply(&mut cfg, x);
    spec.axis_y.parameter().apply(&mut cfg, y);
    if let WindowPolicy::Auto { half_width } = spec.windows {
        cfg.auto_windows(half_width);
    }
    cfg
}

fn main() -> ExitCode {
    let mut fundamental = None;
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut record = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(&mut *f))
            .unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {id:>2} {tag} [{secs:6.1}s] {name}: {detail}");
        results.push((id, name, outcome, secs));
    };
    record(1, "vacuum swing-up", &mut criterion_1);
    record(2, "multi-photon exchange at the fundamental resonance", &mut || criterion_2(&mut fundamental));
    let extra: Vec<SimConfig> = fundamental.clone().into_iter().collect();
    record(3, "excitation-number conservation", &mut || criterion_3(&extra));
    record(4, "resonant Rabi oracle", &mut criterion_4);
    record(5, "exact-propagator equivalence and RK4 order", &mut criterion_5);
    record(6, "symmetries", &mut criterion_6);
    record(7, "dichromatic single-photon exchange", &mut criterion_7);
    record(8, "few-photon dichromatic and reverse process", &mut criterion_8);
    record(9, "coherent vs Fock initialization", &mut criterion_9);
    record(10, "window convergence", &mut criterion_10);
    record(11, "minimum excitation", &mut criterion_11);

    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
