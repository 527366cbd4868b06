//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs with a plain `main` (no libtest harness) so every line is printed
//! even when all criteria pass. Pass `acN` arguments to run a subset; the
//! process exits non-zero if any selected criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::SMatrix;
use num_complex::Complex64;

use zrmhd::app::command_run;
use zrmhd::compressible::{
    cfl_limit as compressible_cfl_limit, run_compressible, well_prepared_init, CompressibleParams, Preparation,
};
use zrmhd::config::{Mode, RunConfig};
use zrmhd::diagnostics::{identity_residual, write_csv, DiagnosticsRecord};
use zrmhd::incompressible::{run_with, Observer, SimState, SolverParams, Trajectory};
use zrmhd::limit::{run_sweep, ObservedOrder, SweepConfig};
use zrmhd::presets::{random_solenoidal, Preset};
use zrmhd::{Grid, SpectralVectorField};

const N: usize = 32;

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
    seconds: f64,
}

/// Calls `f` with every state the run passes through, including the initial one.
struct StepProbe<F: FnMut(&SimState)>(F);

impl<F: FnMut(&SimState)> Observer for StepProbe<F> {
    fn on_step(&mut self, _step: usize, state: &SimState) {
        (self.0)(state)
    }
}

fn grid() -> Grid {
    Grid::new(N).unwrap()
}

/// Derivative wavevector of storage index `idx` (Nyquist components zeroed).
fn kvec(g: &Grid, idx: usize) -> [f64; 3] {
    let (i0, i1, i2) = g.coords(idx);
    [
        g.derivative_wavenumber(i0),
        g.derivative_wavenumber(i1),
        g.derivative_wavenumber(i2),
    ]
}

/// `½∫|u|² + |B|²` from grid samples.
fn energy_from_samples(s: &SimState) -> f64 {
    let g = s.grid();
    let mut sum = 0.0;
    for f in [s.u_hat.to_real(), s.b_hat.to_real()] {
        for j in 0..3 {
            sum += f.component(j).iter().map(|v| v * v).sum::<f64>();
        }
    }
    0.5 * sum * g.cell_volume()
}

/// `‖∇f‖²` summed directly over the coefficients.
fn grad_sq(f: &SpectralVectorField) -> f64 {
    let g = f.grid();
    let mut acc = 0.0;
    for idx in 0..g.len() {
        let k = kvec(&g, idx);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        acc += k2 * (0..3).map(|j| f.component(j)[idx].norm_sqr()).sum::<f64>();
    }
    acc * g.volume()
}

/// `‖f‖²_{H²}` with true wavenumbers.
fn h2_sq(f: &SpectralVectorField) -> f64 {
    let g = f.grid();
    let mut acc = 0.0;
    for idx in 0..g.len() {
        let k = g.mode(idx);
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        acc += (1.0 + k2).powi(2) * (0..3).map(|j| f.component(j)[idx].norm_sqr()).sum::<f64>();
    }
    acc * g.volume()
}

/// `max_k |k·f̂| / max_k |k||f̂|` (0 for fields without non-constant modes).
fn divergence_ratio(f: &SpectralVectorField) -> f64 {
    let g = f.grid();
    let (mut num, mut den): (f64, f64) = (0.0, 0.0);
    for idx in 0..g.len() {
        let k = kvec(&g, idx);
        let c: [Complex64; 3] = std::array::from_fn(|j| f.component(j)[idx]);
        num = num.max((c[0] * k[0] + c[1] * k[1] + c[2] * k[2]).norm());
        let kn = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        den = den.max(kn * c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Composite Simpson rule on equally spaced samples (even interval count),
/// falling back to the trapezoidal rule on the last interval otherwise.
fn simpson(values: &[f64], h: f64) -> f64 {
    let m = values.len() - 1;
    let even = m - m % 2;
    let mut s = 0.0;
    for i in (0..even).step_by(2) {
        s += h / 3.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
    }
    if m % 2 == 1 {
        s += 0.5 * h * (values[m - 1] + values[m]);
    }
    s
}

// ---------------------------------------------------------------- runs

struct AlfvenRun {
    traj: Trajectory,
    /// `(E(0), E(T), ∫λ‖∇u‖²)` from samples and Simpson quadrature.
    budget: (f64, f64, f64),
    worst_divergence: f64,
}

fn alfven_energy_run() -> AlfvenRun {
    let initial = Preset::AlfvenMode {
        amplitude: 1e-2,
        wavevector: [1, 0, 0],
    }
    .build(grid())
    .unwrap();
    let params = SolverParams {
        lambda: 0.1,
        h_tilde: [1.0, 1.0, 1.0],
        dt: 1e-3,
        t_end: 1.0,
        record_every: 10,
        ..SolverParams::default()
    };
    let mut diss = Vec::new();
    let mut energies = Vec::new();
    let mut worst_divergence: f64 = 0.0;
    let mut probe = StepProbe(|s: &SimState| {
        diss.push(params.lambda * grad_sq(&s.u_hat));
        if energies.is_empty() {
            energies.push(energy_from_samples(s));
        }
        worst_divergence = worst_divergence
            .max(divergence_ratio(&s.u_hat))
            .max(divergence_ratio(&s.b_hat));
    });
    let traj = run_with(initial, &params, &[], &mut probe).unwrap();
    let e0 = energies[0];
    let et = energy_from_samples(&traj.final_state);
    let h = params.t_end / (diss.len() - 1) as f64;
    AlfvenRun {
        budget: (e0, et, simpson(&diss, h)),
        worst_divergence,
        traj,
    }
}

/// Linearized single-mode problem about `(0, H̃)`.
fn linear_wave_problem(dt: f64) -> (SimState, SolverParams) {
    let initial = Preset::AlfvenMode {
        amplitude: 1e-6,
        wavevector: [4, 4, 4],
    }
    .build(grid())
    .unwrap();
    let params = SolverParams {
        lambda: 0.1,
        dt,
        t_end: 1.0,
        record_every: 10,
        ..SolverParams::default()
    };
    (initial, params)
}

/// `exp(A t)` applied mode by mode, with `A` the 6×6 linearization
/// `û' = −λ|k|²û + i(k·H̃)P_k B̂`, `B̂' = i(k·H̃)û − iH̃(k·û)`.
fn matrix_exponential_oracle(
    initial: &SimState,
    params: &SolverParams,
    t: f64,
) -> (SpectralVectorField, SpectralVectorField) {
    let g = initial.grid();
    let i = Complex64::new(0.0, 1.0);
    let h = params.h_tilde;
    let mut u = SpectralVectorField::zeros(g);
    let mut b = SpectralVectorField::zeros(g);
    for idx in 0..g.len() {
        let x0: [Complex64; 6] = std::array::from_fn(|r| {
            if r < 3 {
                initial.u_hat.component(r)[idx]
            } else {
                initial.b_hat.component(r - 3)[idx]
            }
        });
        if x0.iter().all(|z| z.norm() == 0.0) {
            continue;
        }
        let k = kvec(&g, idx);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let kh = k[0] * h[0] + k[1] * h[1] + k[2] * h[2];
        let mut a = SMatrix::<Complex64, 6, 6>::zeros();
        for r in 0..3 {
            a[(r, r)] = Complex64::new(-params.lambda * k2, 0.0);
            for c in 0..3 {
                let delta = if r == c { 1.0 } else { 0.0 };
                let proj = if k2 > 0.0 { delta - k[r] * k[c] / k2 } else { delta };
                a[(r, 3 + c)] = i * kh * proj;
                a[(3 + r, c)] = i * (kh * delta - h[r] * k[c]);
            }
        }
        let m = (a * Complex64::new(t, 0.0)).exp();
        let x = m * nalgebra::Vector6::from_column_slice(&x0);
        for r in 0..3 {
            u.component_mut(r)[idx] = x[r];
            b.component_mut(r)[idx] = x[3 + r];
        }
    }
    (u, b)
}

fn relative_l2_error(s: &SimState, u: &SpectralVectorField, b: &SpectralVectorField) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..3 {
        for idx in 0..s.grid().len() {
            num += (s.u_hat.component(j)[idx] - u.component(j)[idx]).norm_sqr();
            num += (s.b_hat.component(j)[idx] - b.component(j)[idx]).norm_sqr();
            den += u.component(j)[idx].norm_sqr() + b.component(j)[idx].norm_sqr();
        }
    }
    (num / den).sqrt()
}

struct LinearWaveRun {
    dt: f64,
    traj: Trajectory,
    error: f64,
}

fn linear_wave_run(dt: f64) -> LinearWaveRun {
    let (initial, params) = linear_wave_problem(dt);
    let (u, b) = matrix_exponential_oracle(&initial, &params, params.t_end);
    let traj = run_with(initial, &params, &[], &mut ()).unwrap();
    let error = relative_l2_error(&traj.final_state, &u, &b);
    LinearWaveRun { dt, traj, error }
}

// ---------------------------------------------------------------- criteria

fn check_energy_law(run: &AlfvenRun) -> (bool, String) {
    let (e0, et, integral) = run.budget;
    let residual = (et - e0 + integral).abs() / e0;
    (
        residual < 1e-6,
        format!("|E(T) - E(0) + int lambda|grad u|^2| / E(0) = {residual:.3e} (< 1e-6)"),
    )
}

fn check_divergence(run: &AlfvenRun) -> (bool, String) {
    let recorded = run
        .traj
        .records
        .iter()
        .map(|r| r.div_u.max(r.div_b))
        .fold(0.0, f64::max);
    let worst = recorded.max(run.worst_divergence);
    (
        worst < 1e-11,
        format!(
            "max relative |k.u|, |k.B| = {worst:.3e} over {} steps / {} records (< 1e-11)",
            (run.traj.final_state.t / 1e-3).round(),
            run.traj.records.len()
        ),
    )
}

fn check_linear_wave(run: &LinearWaveRun) -> (bool, String) {
    (
        run.error < 1e-3,
        format!(
            "relative L2 error vs 6x6 matrix exponential at T = 1: {:.3e} (< 1e-3)",
            run.error
        ),
    )
}

fn check_temporal_order(runs: &[LinearWaveRun]) -> (bool, String) {
    let orders: Vec<f64> = runs.windows(2).map(|w| (w[0].error / w[1].error).log2()).collect();
    let pass = orders.iter().all(|p| (3.5..=4.5).contains(p));
    let errs: Vec<String> = runs.iter().map(|r| format!("{:.0e}: {:.3e}", r.dt, r.error)).collect();
    (
        pass,
        format!(
            "errors [{}], orders {:.3} {:.3} (in [3.5, 4.5])",
            errs.join(", "),
            orders[0],
            orders[1]
        ),
    )
}

fn budget_violation(records: &[DiagnosticsRecord]) -> (f64, f64) {
    let first = &records[0];
    let last = records.last().unwrap();
    let e0 = first.energy();
    let cum = last.cum_dissipation - first.cum_dissipation;
    let excess = cum / e0 - 1.0;
    let closure = (e0 - last.energy() - cum).abs() / e0;
    (excess, closure)
}

fn check_dissipation_budget(runs: &[(&str, &[DiagnosticsRecord])]) -> (bool, String) {
    let mut pass = true;
    let mut worst_closure: f64 = 0.0;
    let mut worst_excess = f64::NEG_INFINITY;
    for (_, records) in runs {
        let (excess, closure) = budget_violation(records);
        pass &= excess <= 1e-6 && closure < 1e-5;
        worst_closure = worst_closure.max(closure);
        worst_excess = worst_excess.max(excess);
    }
    let names: Vec<&str> = runs.iter().map(|(n, _)| *n).collect();
    (
        pass,
        format!(
            "{} runs [{}]: max cum/E(0) - 1 = {worst_excess:.3e} (<= 1e-6), max closure = {worst_closure:.3e} (< 1e-5)",
            runs.len(),
            names.join(", ")
        ),
    )
}

struct SmallDataRun {
    traj: Trajectory,
    initial_h2_sum: f64,
    /// Largest step-to-step increase of `(‖u‖²_{H²} + ‖B‖²_{H²})^{1/2}`.
    worst_increase: f64,
}

fn small_data_run() -> SmallDataRun {
    let initial = Preset::RandomBandlimited {
        seed: 1,
        kmax: 3,
        amplitude: 1e-3,
    }
    .build(grid())
    .unwrap();
    let initial_h2_sum = h2_sq(&initial.u_hat).sqrt() + h2_sq(&initial.b_hat).sqrt();
    let params = SolverParams {
        dt: 1e-2,
        t_end: 10.0,
        record_every: 10,
        ..SolverParams::default()
    };
    let mut prev = f64::INFINITY;
    let mut worst_increase = f64::NEG_INFINITY;
    let mut probe = StepProbe(|s: &SimState| {
        let h2 = (h2_sq(&s.u_hat) + h2_sq(&s.b_hat)).sqrt();
        worst_increase = worst_increase.max(h2 - prev);
        prev = h2;
    });
    let traj = run_with(initial, &params, &[], &mut probe).unwrap();
    SmallDataRun {
        traj,
        initial_h2_sum,
        worst_increase,
    }
}

fn check_small_data(run: &SmallDataRun) -> (bool, String) {
    let x0 = run.traj.records[0].x;
    let max_ratio = run.traj.records.iter().map(|r| r.x / x0).fold(0.0, f64::max);
    let size_ok = (run.initial_h2_sum - 1e-3).abs() < 1e-15;
    let pass = size_ok && max_ratio <= 2.0 && run.worst_increase <= 1e-6;
    (
        pass,
        format!(
            "|u0|_H2 + |B0|_H2 = {:.6e}; max X(t)/X(0) = {max_ratio:.4} (<= 2); max H2 increase = {:.3e} (<= 1e-6) over T = 10",
            run.initial_h2_sum, run.worst_increase
        ),
    )
}

/// `ΔBʲ + div[(∇×B)×eⱼ]` evaluated mode by mode, relative to `‖ΔB‖`.
fn identity_residual_direct(b: &SpectralVectorField) -> f64 {
    let g = b.grid();
    let i = Complex64::new(0.0, 1.0);
    let mut res = [0.0; 3];
    let mut lap = 0.0;
    for idx in 0..g.len() {
        let k = kvec(&g, idx);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let c: [Complex64; 3] = std::array::from_fn(|j| b.component(j)[idx]);
        let jhat = [
            i * (k[1] * c[2] - k[2] * c[1]),
            i * (k[2] * c[0] - k[0] * c[2]),
            i * (k[0] * c[1] - k[1] * c[0]),
        ];
        for (axis, r) in res.iter_mut().enumerate() {
            let mut e = [0.0; 3];
            e[axis] = 1.0;
            let cross = [
                jhat[1] * e[2] - jhat[2] * e[1],
                jhat[2] * e[0] - jhat[0] * e[2],
                jhat[0] * e[1] - jhat[1] * e[0],
            ];
            let div = i * (cross[0] * k[0] + cross[1] * k[1] + cross[2] * k[2]);
            *r += (-k2 * c[axis] + div).norm_sqr();
            lap += k2 * k2 * c[axis].norm_sqr();
        }
    }
    res.iter().fold(0.0f64, |m, r| m.max(r.sqrt())) / lap.sqrt()
}

fn check_identity() -> (bool, String) {
    let g = grid();
    let mut worst_direct: f64 = 0.0;
    let mut worst_library: f64 = 0.0;
    for seed in 0..100u64 {
        let kmax = 2 + (seed % 9) as usize;
        let b = random_solenoidal(g, kmax, 1000 + seed);
        worst_direct = worst_direct.max(identity_residual_direct(&b));
        worst_library = worst_library.max(identity_residual(&b));
    }
    (
        worst_direct < 1e-10 && worst_library < 1e-10,
        format!("100 fields: max residual {worst_direct:.3e} (mode-wise), {worst_library:.3e} (diagnostics) (< 1e-10)"),
    )
}

fn check_compressible_conservation() -> (bool, String) {
    let g = grid();
    let base = Preset::TaylorGreenMhd {
        u_amplitude: 0.1,
        b_amplitude: 0.1,
    }
    .build(g)
    .unwrap();
    let mut params = CompressibleParams {
        eps: 0.1,
        t_end: 0.5,
        ..CompressibleParams::default()
    };
    let mut h0 = base.b_hat.to_real();
    h0.add_constant(params.h_tilde);
    let init = well_prepared_init(
        &base.u_hat.to_real(),
        &h0,
        params.eps,
        params.rho_tilde,
        &Preparation::default(),
    )
    .unwrap();
    params.dt = params.dt.min(0.9 * compressible_cfl_limit(&init, &params));
    let mass0 = init.rho.data().iter().sum::<f64>() * g.cell_volume();
    let traj = run_compressible(init, &params).unwrap();
    let fin = &traj.final_state;
    let mass_final = fin.rho.data().iter().sum::<f64>() * g.cell_volume();
    let recorded = traj
        .records
        .iter()
        .map(|r| ((r.mass - mass0) / mass0).abs())
        .fold(0.0, f64::max);
    let mass_drift = recorded.max(((mass_final - mass0) / mass0).abs());
    let div_recorded = traj.records.iter().map(|r| r.div_h).fold(0.0, f64::max);
    let div_final = divergence_ratio(&fin.h_hat);
    let div = div_recorded.max(div_final);
    (
        mass_drift < 1e-10 && div < 1e-11,
        format!(
            "eps = 0.1, T = 0.5, dt = {:.3e}: mass drift {mass_drift:.3e} (< 1e-10), relative div H {div:.3e} (< 1e-11)",
            traj.dt
        ),
    )
}

fn limit_sweep_config() -> SweepConfig {
    SweepConfig {
        eps_list: vec![0.2, 0.1, 0.05],
        t_end: 0.5,
        n: N,
        initial: Preset::TaylorGreenMhd {
            u_amplitude: 0.1,
            b_amplitude: 0.1,
        },
        preparation: Preparation::default(),
        incompressible: SolverParams {
            lambda: 0.1,
            dt: 1e-2,
            ..SolverParams::default()
        },
        compressible: CompressibleParams {
            mu: 0.1,
            lambda_c: 0.1,
            dt: 1e-2,
            ..CompressibleParams::default()
        },
    }
}

fn check_limit(result: &zrmhd::limit::SweepResult) -> (bool, String) {
    let rows = &result.rows;
    let decreasing = rows.windows(2).all(|w| w[1].e_u < w[0].e_u && w[1].e_h < w[0].e_h);
    let in_band = |o: ObservedOrder| matches!(o, ObservedOrder::Rate(p) if (0.7..=2.5).contains(&p));
    let orders = result.orders();
    let orders_ok = orders.iter().all(|o| in_band(o.u) && in_band(o.h));
    let e_u: Vec<String> = rows.iter().map(|r| format!("{:.3e}", r.e_u)).collect();
    let e_h: Vec<String> = rows.iter().map(|r| format!("{:.3e}", r.e_h)).collect();
    let ou: Vec<String> = orders.iter().map(|o| o.u.to_string()).collect();
    let oh: Vec<String> = orders.iter().map(|o| o.h.to_string()).collect();
    (
        decreasing && orders_ok,
        format!(
            "eps 0.2/0.1/0.05: e_u [{}], e_H [{}]; orders u [{}], H [{}] (decreasing, in [0.7, 2.5])",
            e_u.join(", "),
            e_h.join(", "),
            short(&ou),
            short(&oh)
        ),
    )
}

fn short(orders: &[String]) -> String {
    orders
        .iter()
        .map(|o| {
            o.parse::<f64>()
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|_| o.clone())
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Re-runs the coarsest temporal-order case through the run command and
/// compares its CSV with the one produced in memory.
fn check_reproducibility(coarse: &LinearWaveRun) -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let (_, params) = linear_wave_problem(coarse.dt);
    let mut cfg = RunConfig::with_mode(Mode::Incompressible);
    cfg.n = N;
    cfg.output_dir = dir.path().to_path_buf();
    cfg.initial = Preset::AlfvenMode {
        amplitude: 1e-6,
        wavevector: [4, 4, 4],
    };
    cfg.solver = params;
    command_run(&cfg, 1).unwrap();
    let rerun = std::fs::read(dir.path().join("diagnostics.csv")).unwrap();
    let mut original = Vec::new();
    write_csv(&mut original, &coarse.traj.records).unwrap();
    let identical = rerun == original;
    (
        identical,
        format!(
            "dt = {:.0e} linear-wave run re-run via `run`: {} CSV bytes, bitwise identical = {identical}",
            coarse.dt,
            rerun.len()
        ),
    )
}

// ---------------------------------------------------------------- driver

fn main() {
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.strip_prefix("ac").and_then(|n| n.parse().ok()))
        .collect();
    let wanted = |id: u32| selected.is_empty() || selected.contains(&id);
    let mut outcomes: Vec<Outcome> = Vec::new();

    fn attempt(id: u32, name: &'static str, out: &mut Vec<Outcome>, f: impl FnOnce() -> (bool, String)) {
        eprintln!("running criterion {id}: {name}");
        let start = Instant::now();
        let (pass, detail) = match panic::catch_unwind(AssertUnwindSafe(f)) {
            Ok(r) => r,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        out.push(Outcome {
            id,
            name,
            pass,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        });
    }

    let mut budgets: Vec<(&str, Vec<DiagnosticsRecord>)> = Vec::new();

    if wanted(1) || wanted(2) || wanted(5) {
        let start = Instant::now();
        eprintln!("running the Alfven-mode energy run (n = 32, dt = 1e-3, T = 1)");
        let run = panic::catch_unwind(alfven_energy_run);
        let secs = start.elapsed().as_secs_f64();
        match run {
            Ok(run) => {
                attempt(1, "energy law", &mut outcomes, || check_energy_law(&run));
                attempt(2, "divergence-free preservation", &mut outcomes, || {
                    check_divergence(&run)
                });
                budgets.push(("alfven", run.traj.records.clone()));
            }
            Err(_) => {
                for (id, name) in [(1, "energy law"), (2, "divergence-free preservation")] {
                    attempt(id, name, &mut outcomes, || (false, "energy run panicked".into()));
                }
            }
        }
        for o in outcomes.iter_mut().filter(|o| o.id <= 2) {
            o.seconds += secs / 2.0;
        }
    }

    let mut waves: Vec<LinearWaveRun> = Vec::new();
    if wanted(3) || wanted(4) || wanted(5) || wanted(10) {
        attempt(3, "linear-wave oracle", &mut outcomes, || {
            waves.push(linear_wave_run(1e-3));
            check_linear_wave(&waves[0])
        });
    }
    if wanted(4) || wanted(5) || wanted(10) {
        attempt(4, "temporal order", &mut outcomes, || {
            let fine = waves.pop().expect("dt = 1e-3 run");
            waves.push(linear_wave_run(4e-3));
            waves.push(linear_wave_run(2e-3));
            waves.push(fine);
            check_temporal_order(&waves)
        });
    }
    for w in &waves {
        let label = if w.dt == 4e-3 {
            "wave dt=4e-3"
        } else if w.dt == 2e-3 {
            "wave dt=2e-3"
        } else {
            "wave dt=1e-3"
        };
        budgets.push((label, w.traj.records.clone()));
    }

    if wanted(6) || wanted(5) {
        attempt(6, "small-data boundedness", &mut outcomes, || {
            let run = small_data_run();
            budgets.push(("small-data", run.traj.records.clone()));
            check_small_data(&run)
        });
    }

    if wanted(7) {
        attempt(7, "magnetic identity", &mut outcomes, check_identity);
    }

    if wanted(8) {
        attempt(
            8,
            "compressible conservation",
            &mut outcomes,
            check_compressible_conservation,
        );
    }

    if wanted(9) || wanted(5) {
        attempt(9, "incompressible limit", &mut outcomes, || {
            let result = run_sweep(&limit_sweep_config()).expect("sweep completes");
            budgets.push(("sweep reference", result.reference.clone()));
            check_limit(&result)
        });
    }

    if wanted(5) {
        attempt(5, "dissipation budget", &mut outcomes, || {
            let runs: Vec<(&str, &[DiagnosticsRecord])> = budgets.iter().map(|(n, r)| (*n, r.as_slice())).collect();
            check_dissipation_budget(&runs)
        });
    }

    if wanted(10) {
        attempt(10, "reproducibility", &mut outcomes, || {
            let coarse = waves.iter().find(|w| w.dt == 4e-3).expect("dt = 4e-3 run");
            check_reproducibility(coarse)
        });
    }

    outcomes.sort_by_key(|o| o.id);
    println!();
    for o in &outcomes {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "{tag}  criterion {:>2}  {:<30} {}  [{:.1}s]",
            o.id, o.name, o.detail, o.seconds
        );
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!(
        "\nacceptance: {}/{} criteria passed",
        outcomes.len() - failed,
        outcomes.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
