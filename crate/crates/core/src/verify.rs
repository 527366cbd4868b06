//! Quick invariant suite run by the `verify` command.
//!
//! Each check is small (n = 16, a few hundred steps at most) and compares
//! against an exact property or a closed-form solution.

use std::fmt;
use std::time::Instant;

use num_complex::Complex64;

use crate::compressible::{
    compressible_record, run_compressible, well_prepared_init, CompressibleParams, CompressibleState, Preparation,
};
use crate::diagnostics::{dissipation_budget, identity_residual};
use crate::field::{sample_field, ScalarField, SpectralVectorField};
use crate::grid::Grid;
use crate::incompressible::{momentum_forcing, recover_pressure, run, SimState, SolverParams};
use crate::presets::{random_bandlimited, random_solenoidal, Preset};
use crate::snapshot::Snapshot;
use crate::spectral::{gradient, leray_project};

/// Outcome of one check: `measured` must not exceed `tolerance`.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub seconds: f64,
    /// Set when the check could not be evaluated.
    pub error: Option<String>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.measured <= self.tolerance
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        match &self.error {
            Some(e) => write!(f, "{tag} {:<28} error: {e}", self.name),
            None => write!(
                f,
                "{tag} {:<28} {:.3e} <= {:.1e}  ({:.2}s)",
                self.name, self.measured, self.tolerance, self.seconds
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let passed = self.checks.iter().filter(|c| c.passed()).count();
        write!(f, "{passed}/{} checks passed", self.checks.len())
    }
}

type CheckFn = fn() -> Result<f64, String>;

const CHECKS: &[(&str, f64, CheckFn)] = &[
    ("fft_round_trip", 1e-13, fft_round_trip),
    ("single_mode_coefficients", 1e-13, single_mode_coefficients),
    ("parseval", 1e-13, parseval),
    ("leray_projection", 1e-13, leray_projection),
    ("steady_fixed_point", 0.0, steady_fixed_point),
    ("alfven_closed_form", 1e-8, alfven_closed_form),
    ("energy_balance", 1e-6, energy_balance),
    ("divergence_preserved", 1e-11, divergence_preserved),
    ("magnetic_identity", 1e-10, magnetic_identity),
    ("pressure_recovery", 1e-12, pressure_recovery),
    ("compressible_conservation", 1e-10, compressible_conservation),
    ("snapshot_round_trip", 0.0, snapshot_round_trip),
];

/// Runs every check in a fixed order.
pub fn run_suite() -> VerifyReport {
    run_suite_with(|_| {})
}

/// Like [`run_suite`], handing each outcome to `progress` as it completes.
pub fn run_suite_with(mut progress: impl FnMut(&CheckOutcome)) -> VerifyReport {
    let mut checks = Vec::with_capacity(CHECKS.len());
    for &(name, tolerance, check) in CHECKS {
        let start = Instant::now();
        let result = check();
        let outcome = CheckOutcome {
            name,
            measured: *result.as_ref().unwrap_or(&f64::NAN),
            tolerance,
            seconds: start.elapsed().as_secs_f64(),
            error: result.err(),
        };
        progress(&outcome);
        checks.push(outcome);
    }
    VerifyReport { checks }
}

/// Growth factors `(f_B, f_u)` of the linear Alfvén mode at wavevector `k`:
/// starting from `(û, B̂) = (0, B̂₀)`, the exact solution is
/// `B̂(t) = f_B B̂₀`, `û(t) = f_u B̂₀`.
///
/// The mode obeys `û' = −a û + iω B̂`, `B̂' = iω û` with `a = λ|k|²` and
/// `ω = k·H̃`, so `B̂'' + a B̂' + ω² B̂ = 0`. With roots `s₁, s₂` of
/// `s² + a s + ω² = 0`,
/// `f_B = (s₁e^{s₂t} − s₂e^{s₁t})/(s₁ − s₂)` and
/// `f_u = −iω (e^{s₂t} − e^{s₁t})/(s₁ − s₂)`.
pub fn alfven_mode_factors(k: [f64; 3], h_tilde: [f64; 3], lambda: f64, t: f64) -> (Complex64, Complex64) {
    let a = lambda * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
    let omega = k[0] * h_tilde[0] + k[1] * h_tilde[1] + k[2] * h_tilde[2];
    let i = Complex64::new(0.0, 1.0);
    let disc = Complex64::new(0.25 * a * a - omega * omega, 0.0).sqrt();
    let s1 = -0.5 * a + disc;
    let s2 = -0.5 * a - disc;
    if disc.norm() < 1e-12 * (a + omega.abs()).max(f64::MIN_POSITIVE) {
        // critical damping: double root s = −a/2
        let e = (s1 * t).exp();
        return (e * (1.0 - s1 * t), i * omega * t * e);
    }
    let (e1, e2) = ((s1 * t).exp(), (s2 * t).exp());
    let f_b = (s1 * e2 - s2 * e1) / (s1 - s2);
    let f_u = -i * omega * (e2 - e1) / (s1 - s2);
    (f_b, f_u)
}

fn grid16() -> Grid {
    Grid::new(16).expect("16 is a valid grid size")
}

fn fft_round_trip() -> Result<f64, String> {
    let f = random_bandlimited(grid16(), 7, 11).to_real();
    let back = f.to_spectral().to_real();
    let diff = back.sub(&f).map_err(|e| e.to_string())?;
    Ok(diff.max_norm() / f.max_norm())
}

fn single_mode_coefficients() -> Result<f64, String> {
    let g = grid16();
    let k = [2i64, -1, 3];
    let a = Complex64::new(0.7, -0.4);
    let f = sample_field(g, |x| {
        let phase = k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2];
        let v = 2.0 * (a * Complex64::new(0.0, phase).exp()).re;
        [v, 0.0, 0.0]
    })
    .map_err(|e| e.to_string())?
    .to_spectral();
    let c = f.component(0);
    let plus = g.mode_index(k);
    let minus = g.mode_index([-k[0], -k[1], -k[2]]);
    let mut worst = (c[plus] - a).norm().max((c[minus] - a.conj()).norm());
    for (idx, v) in c.iter().enumerate() {
        if idx != plus && idx != minus {
            worst = worst.max(v.norm());
        }
    }
    Ok(worst / a.norm())
}

fn parseval() -> Result<f64, String> {
    let g = grid16();
    let f = random_bandlimited(g, 5, 3);
    let real = f.to_real();
    let direct: f64 = (0..3)
        .map(|j| real.component(j).iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        * g.cell_volume();
    let spectral = g.volume() * f.coefficient_energy();
    Ok((direct - spectral).abs() / direct)
}

fn leray_projection() -> Result<f64, String> {
    let f = random_bandlimited(grid16(), 6, 5);
    let p = leray_project(&f);
    let twice = leray_project(&p);
    Ok(p.relative_divergence().max(twice.relative_difference(&p)))
}

fn steady_fixed_point() -> Result<f64, String> {
    let params = SolverParams {
        t_end: 0.05,
        dt: 1e-2,
        ..SolverParams::default()
    };
    let traj = run(SimState::steady(grid16()), &params).map_err(|e| e.to_string())?;
    let s = &traj.final_state;
    Ok(s.u_hat.max_coefficient().max(s.b_hat.max_coefficient()))
}

fn alfven_closed_form() -> Result<f64, String> {
    let g = grid16();
    let wavevector = [1i64, 2, 0];
    let initial = Preset::AlfvenMode {
        amplitude: 1e-2,
        wavevector,
    }
    .build(g)
    .map_err(|e| e.to_string())?;
    let params = SolverParams {
        lambda: 0.1,
        dt: 1e-3,
        t_end: 0.2,
        record_every: 1000,
        ..SolverParams::default()
    };
    let b0 = initial.b_hat.coefficient(wavevector);
    let traj = run(initial, &params).map_err(|e| e.to_string())?;
    let s = &traj.final_state;
    let k = wavevector.map(|c| c as f64);
    let (f_b, f_u) = alfven_mode_factors(k, params.h_tilde, params.lambda, params.t_end);
    let u = s.u_hat.coefficient(wavevector);
    let b = s.b_hat.coefficient(wavevector);
    let scale = b0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let err = (0..3)
        .map(|j| (u[j] - f_u * b0[j]).norm_sqr() + (b[j] - f_b * b0[j]).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(err / scale)
}

fn taylor_green_run() -> Result<crate::incompressible::Trajectory, String> {
    let initial = Preset::TaylorGreenMhd {
        u_amplitude: 0.5,
        b_amplitude: 0.5,
    }
    .build(grid16())
    .map_err(|e| e.to_string())?;
    let params = SolverParams {
        lambda: 0.1,
        dt: 1e-3,
        t_end: 0.1,
        ..SolverParams::default()
    };
    run(initial, &params).map_err(|e| e.to_string())
}

fn energy_balance() -> Result<f64, String> {
    let traj = taylor_green_run()?;
    Ok(dissipation_budget(&traj.records).closure.abs())
}

fn divergence_preserved() -> Result<f64, String> {
    let traj = taylor_green_run()?;
    Ok(traj.records.iter().map(|r| r.div_u.max(r.div_b)).fold(0.0, f64::max))
}

fn magnetic_identity() -> Result<f64, String> {
    Ok((0..10)
        .map(|seed| identity_residual(&random_solenoidal(grid16(), 5, 100 + seed)))
        .fold(0.0, f64::max))
}

/// `P[N] = N − ∇p` for the recovered pressure.
fn pressure_recovery() -> Result<f64, String> {
    let g = grid16();
    let u = random_solenoidal(g, 4, 21);
    let b = random_solenoidal(g, 4, 22);
    let state = SimState::new(0.0, u, b).map_err(|e| e.to_string())?;
    let params = SolverParams::default();
    let n = momentum_forcing(&state, &params).map_err(|e| e.to_string())?;
    let p = recover_pressure(&state, &params).map_err(|e| e.to_string())?;
    let mut rhs: SpectralVectorField = n.clone();
    rhs.axpy(-1.0, &gradient(&p));
    Ok(leray_project(&n).relative_difference(&rhs))
}

fn compressible_conservation() -> Result<f64, String> {
    let g = grid16();
    let base = Preset::TaylorGreenMhd {
        u_amplitude: 0.1,
        b_amplitude: 0.1,
    }
    .build(g)
    .map_err(|e| e.to_string())?;
    let params = CompressibleParams {
        eps: 0.2,
        dt: 2e-3,
        t_end: 0.04,
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
    .map_err(|e| e.to_string())?;
    let m0 = compressible_record(&init, &params).mass;
    let traj = run_compressible(init, &params).map_err(|e| e.to_string())?;
    let worst = traj
        .records
        .iter()
        .map(|r| ((r.mass - m0) / m0).abs().max(r.div_h))
        .fold(0.0, f64::max);
    Ok(worst)
}

fn snapshot_round_trip() -> Result<f64, String> {
    let g = grid16();
    let state =
        SimState::new(0.25, random_solenoidal(g, 4, 1), random_solenoidal(g, 4, 2)).map_err(|e| e.to_string())?;
    let rho = ScalarField::constant(g, 1.5);
    let bytes = Snapshot::from_incompressible(&state).to_bytes();
    let again = Snapshot::read_from(bytes.as_slice())
        .map_err(|e| e.to_string())?
        .to_bytes();
    let comp = CompressibleState {
        t: 0.5,
        rho,
        u: state.u_hat.to_real(),
        h_hat: state.b_hat.clone(),
    };
    let cbytes = Snapshot::from_compressible(&comp).to_bytes();
    let cagain = Snapshot::read_from(cbytes.as_slice())
        .map_err(|e| e.to_string())?
        .to_bytes();
    Ok(((bytes != again) as u32 + (cbytes != cagain) as u32) as f64)
}
