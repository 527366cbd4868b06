//! Time integration of the background-field formulation
//!
//! ```text
//! u_t + (u·∇)u = λΔu − ∇p + (∇×B)×B + (∇×B)×H̃
//! B_t + (u·∇)B = (B·∇)u + (H̃·∇)u
//! div u = div B = 0,          H = H̃ + B
//! ```
//!
//! The pressure is eliminated by Leray projection. Inside the right-hand side
//! the advection term is evaluated in rotational form, `−(u·∇)u = u×ω − ∇½|u|²`,
//! whose gradient part the projection removes, and the induction terms as
//! `∇×(u×B)`; both coincide with the advective forms for solenoidal fields and
//! need 12 inverse and 6 forward real transforms per evaluation. The magnetic
//! equation carries no diffusion.

use log::warn;
use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{FieldError, SolverError};
use crate::fft;
use crate::field::{SpectralScalar, SpectralVectorField};
use crate::grid::Grid;
use crate::spectral::{
    advective_derivative, cross_constant, cross_product, curl, dealias_scalar_in_place, divergence, for_each_mode,
    leray_project_in_place,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CflPolicy {
    Warn,
    Error,
}

/// Parameters of the incompressible run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverParams {
    /// Viscosity λ > 0.
    pub lambda: f64,
    /// Background magnetic field H̃.
    pub h_tilde: [f64; 3],
    pub dt: f64,
    pub t_end: f64,
    pub dealias: bool,
    /// Diagnostic cadence in steps.
    pub record_every: usize,
    /// Advective Courant number.
    pub cfl: f64,
    pub cfl_policy: CflPolicy,
    /// Re-project B after every step (off: B stays solenoidal on its own).
    pub reproject_b: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            h_tilde: [1.0, 1.0, 1.0],
            dt: 1e-3,
            t_end: 1.0,
            dealias: true,
            record_every: 1,
            cfl: 0.5,
            cfl_policy: CflPolicy::Error,
            reproject_b: false,
        }
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> SolverError {
    SolverError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda", format!("must be > 0, got {}", self.lambda)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(invalid("t_end", format!("must be >= 0, got {}", self.t_end)));
        }
        if self.h_tilde.iter().any(|v| !v.is_finite()) {
            return Err(invalid("h_tilde", "must be finite"));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every", "must be >= 1"));
        }
        if self.cfl.is_nan() || self.cfl <= 0.0 {
            return Err(invalid("cfl", format!("must be > 0, got {}", self.cfl)));
        }
        Ok(())
    }
}

/// Time plus the solenoidal spectral fields `u` and `B = H − H̃`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u_hat: SpectralVectorField,
    pub b_hat: SpectralVectorField,
}

impl SimState {
    pub fn new(t: f64, u_hat: SpectralVectorField, b_hat: SpectralVectorField) -> Result<Self, FieldError> {
        u_hat.grid().check_same(&b_hat.grid())?;
        Ok(Self { t, u_hat, b_hat })
    }

    /// `u = 0, B = 0` at `t = 0`.
    pub fn steady(grid: Grid) -> Self {
        Self {
            t: 0.0,
            u_hat: SpectralVectorField::zeros(grid),
            b_hat: SpectralVectorField::zeros(grid),
        }
    }

    pub fn grid(&self) -> Grid {
        self.u_hat.grid()
    }
}

/// Right-hand side without the viscous term, plus the CFL signal speed.
pub(crate) struct NonlinearTerms {
    pub du: SpectralVectorField,
    pub db: SpectralVectorField,
    /// `‖u‖∞ + ‖B + H̃‖∞` over the grid.
    pub signal_speed: f64,
}

pub(crate) fn nonlinear_terms(
    u: &SpectralVectorField,
    b: &SpectralVectorField,
    params: &SolverParams,
    t: f64,
) -> Result<NonlinearTerms, SolverError> {
    let g = u.grid();
    let h = params.h_tilde;
    let omega = curl(u);
    let j = curl(b);
    let real = fft::inverse_real_many(
        &g,
        &[
            u.component(0),
            u.component(1),
            u.component(2),
            omega.component(0),
            omega.component(1),
            omega.component(2),
            b.component(0),
            b.component(1),
            b.component(2),
            j.component(0),
            j.component(1),
            j.component(2),
        ],
    );
    let (ur, rest) = real.split_at(3);
    let (wr, rest) = rest.split_at(3);
    let (br, jr) = rest.split_at(3);

    let len = g.len();
    let mut force: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; len]);
    let mut emf: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; len]);
    let mut umax: f64 = 0.0;
    let mut hmax: f64 = 0.0;
    let mut finite = true;
    for i in 0..len {
        let uu = [ur[0][i], ur[1][i], ur[2][i]];
        let ww = [wr[0][i], wr[1][i], wr[2][i]];
        let bb = [br[0][i], br[1][i], br[2][i]];
        let jj = [jr[0][i], jr[1][i], jr[2][i]];
        // u×ω + j×B
        force[0][i] = uu[1] * ww[2] - uu[2] * ww[1] + jj[1] * bb[2] - jj[2] * bb[1];
        force[1][i] = uu[2] * ww[0] - uu[0] * ww[2] + jj[2] * bb[0] - jj[0] * bb[2];
        force[2][i] = uu[0] * ww[1] - uu[1] * ww[0] + jj[0] * bb[1] - jj[1] * bb[0];
        // u×B
        emf[0][i] = uu[1] * bb[2] - uu[2] * bb[1];
        emf[1][i] = uu[2] * bb[0] - uu[0] * bb[2];
        emf[2][i] = uu[0] * bb[1] - uu[1] * bb[0];
        let us = uu[0] * uu[0] + uu[1] * uu[1] + uu[2] * uu[2];
        let hs = (bb[0] + h[0]).powi(2) + (bb[1] + h[1]).powi(2) + (bb[2] + h[2]).powi(2);
        finite &= us.is_finite() && hs.is_finite();
        umax = umax.max(us);
        hmax = hmax.max(hs);
    }
    if !finite {
        return Err(SolverError::Blowup { t });
    }

    let mut spec = fft::forward_real_many(&g, &[&force[0], &force[1], &force[2], &emf[0], &emf[1], &emf[2]]);
    if params.dealias {
        for c in spec.iter_mut() {
            dealias_scalar_in_place(&g, c);
        }
    }
    let e2 = spec.pop().unwrap();
    let e1 = spec.pop().unwrap();
    let e0 = spec.pop().unwrap();
    let f2 = spec.pop().unwrap();
    let f1 = spec.pop().unwrap();
    let f0 = spec.pop().unwrap();

    // du = P[f + j×H̃],  dB = ik×e + i(k·H̃)û, in one pass over the modes
    let [ja, jb, jc] = j.components();
    let [ua, ub, uc] = u.components();
    let zero = Complex64::new(0.0, 0.0);
    let mut du: [Vec<Complex64>; 3] = [f0, f1, f2];
    let mut db: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![zero; g.len()]);
    for_each_mode(&g, |idx, k| {
        let (x, y, z) = (ja[idx], jb[idx], jc[idx]);
        let mut f = [
            du[0][idx] + y * h[2] - z * h[1],
            du[1][idx] + z * h[0] - x * h[2],
            du[2][idx] + x * h[1] - y * h[0],
        ];
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 > 0.0 {
            let dot = (f[0] * k[0] + f[1] * k[1] + f[2] * k[2]) / k2;
            for (a, kj) in f.iter_mut().zip(k) {
                *a -= dot * kj;
            }
        }
        for (c, v) in du.iter_mut().zip(f) {
            c[idx] = v;
        }
        let (p, q, r) = (e0[idx], e1[idx], e2[idx]);
        let kh = I * (k[0] * h[0] + k[1] * h[1] + k[2] * h[2]);
        db[0][idx] = I * (k[1] * r - k[2] * q) + kh * ua[idx];
        db[1][idx] = I * (k[2] * p - k[0] * r) + kh * ub[idx];
        db[2][idx] = I * (k[0] * q - k[1] * p) + kh * uc[idx];
    });
    let du = SpectralVectorField::from_components(g, du).with_divergence_free(true);
    let db = SpectralVectorField::from_components(g, db).with_divergence_free(true);

    if !(du.is_finite() && db.is_finite()) {
        return Err(SolverError::Blowup { t });
    }
    Ok(NonlinearTerms {
        du,
        db,
        signal_speed: umax.sqrt() + hmax.sqrt(),
    })
}

/// `(du/dt, dB/dt)` of the semi-discrete system, including the viscous term.
pub fn rhs_incompressible(
    state: &SimState,
    params: &SolverParams,
) -> Result<(SpectralVectorField, SpectralVectorField), SolverError> {
    let NonlinearTerms { mut du, db, .. } = nonlinear_terms(&state.u_hat, &state.b_hat, params, state.t)?;
    let g = state.grid();
    let u = &state.u_hat;
    for j in 0..3 {
        let src = u.component(j);
        let dst = du.component_mut(j);
        for_each_mode(&g, |idx, k| {
            dst[idx] -= src[idx] * (params.lambda * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]));
        });
    }
    Ok((du, db))
}

/// Largest stable step under the advective CFL condition for a given signal speed.
pub fn cfl_limit(grid: &Grid, params: &SolverParams, signal_speed: f64) -> f64 {
    if signal_speed > 0.0 {
        params.cfl * grid.dx() / signal_speed
    } else {
        f64::INFINITY
    }
}

/// Integrating-factor RK4 with the viscous factor `e^{−λ|k|²h}` precomputed.
pub struct Integrator {
    params: SolverParams,
    dt: f64,
    decay_half: Vec<f64>,
    decay_full: Vec<f64>,
}

impl Integrator {
    pub fn new(grid: Grid, params: &SolverParams, dt: f64) -> Self {
        let mut decay_half = vec![0.0; grid.len()];
        let mut decay_full = vec![0.0; grid.len()];
        for_each_mode(&grid, |idx, k| {
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            let e = (-params.lambda * k2 * dt * 0.5).exp();
            decay_half[idx] = e;
            decay_full[idx] = (-params.lambda * k2 * dt).exp();
        });
        Self {
            params: params.clone(),
            dt,
            decay_half,
            decay_full,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn eval(&self, u: &SpectralVectorField, b: &SpectralVectorField, t: f64) -> Result<NonlinearTerms, SolverError> {
        nonlinear_terms(u, b, &self.params, t)
    }

    /// One step; the returned state has time `state.t + dt`.
    pub fn step(&self, state: &SimState) -> Result<SimState, SolverError> {
        self.step_with_dissipation(state).map(|(s, _)| s)
    }

    /// One step together with `∫λ‖∇u‖²dt` over it, integrated as an extra
    /// ODE component with the same stage states and weights (fourth order).
    pub fn step_with_dissipation(&self, state: &SimState) -> Result<(SimState, f64), SolverError> {
        let h = self.dt;
        let diss = |u: &SpectralVectorField| self.params.lambda * diagnostics::gradient_norm_sq(u);
        let g = state.grid();
        let eh = &self.decay_half;
        let ef = &self.decay_full;
        let (u0, b0) = (&state.u_hat, &state.b_hat);

        let k1 = self.eval(u0, b0, state.t)?;
        let limit = cfl_limit(&g, &self.params, k1.signal_speed);
        if h > limit * (1.0 + 1e-12) {
            match self.params.cfl_policy {
                CflPolicy::Error => {
                    return Err(SolverError::Cfl {
                        t: state.t,
                        dt: h,
                        limit,
                    })
                }
                CflPolicy::Warn => warn!("CFL violated at t = {}: dt = {h} > {limit}", state.t),
            }
        }

        // u_a = E(h/2)(u + h/2 k1)
        let ua = project(combine(g, |idx, j| {
            eh[idx] * (u0.component(j)[idx] + k1.du.component(j)[idx] * (0.5 * h))
        }));
        let ba = solenoidal(combine(g, |idx, j| {
            b0.component(j)[idx] + k1.db.component(j)[idx] * (0.5 * h)
        }));
        let k2 = self.eval(&ua, &ba, state.t + 0.5 * h)?;

        // u_b = E(h/2)u + h/2 k2
        let ub = project(combine(g, |idx, j| {
            eh[idx] * u0.component(j)[idx] + k2.du.component(j)[idx] * (0.5 * h)
        }));
        let bb = solenoidal(combine(g, |idx, j| {
            b0.component(j)[idx] + k2.db.component(j)[idx] * (0.5 * h)
        }));
        let k3 = self.eval(&ub, &bb, state.t + 0.5 * h)?;

        // u_c = E(h)u + h E(h/2) k3
        let uc = project(combine(g, |idx, j| {
            ef[idx] * u0.component(j)[idx] + k3.du.component(j)[idx] * (h * eh[idx])
        }));
        let bc = solenoidal(combine(g, |idx, j| b0.component(j)[idx] + k3.db.component(j)[idx] * h));
        let k4 = self.eval(&uc, &bc, state.t + h)?;

        let quad = h / 6.0 * (diss(u0) + 2.0 * (diss(&ua) + diss(&ub)) + diss(&uc));

        let mut u1 = combine(g, |idx, j| {
            ef[idx] * u0.component(j)[idx]
                + (k1.du.component(j)[idx] * ef[idx]
                    + (k2.du.component(j)[idx] + k3.du.component(j)[idx]) * (2.0 * eh[idx])
                    + k4.du.component(j)[idx])
                    * (h / 6.0)
        });
        let mut b1 = combine(g, |idx, j| {
            b0.component(j)[idx]
                + (k1.db.component(j)[idx]
                    + (k2.db.component(j)[idx] + k3.db.component(j)[idx]) * 2.0
                    + k4.db.component(j)[idx])
                    * (h / 6.0)
        });
        leray_project_in_place(&mut u1);
        if self.params.reproject_b {
            leray_project_in_place(&mut b1);
        } else {
            b1.set_divergence_free(true);
        }
        if !(u1.is_finite() && b1.is_finite()) {
            return Err(SolverError::Blowup { t: state.t + h });
        }
        let next = SimState {
            t: state.t + h,
            u_hat: u1,
            b_hat: b1,
        };
        Ok((next, quad))
    }
}

fn combine(g: Grid, f: impl Fn(usize, usize) -> Complex64) -> SpectralVectorField {
    let comps = std::array::from_fn(|j| (0..g.len()).map(|idx| f(idx, j)).collect());
    SpectralVectorField::from_components(g, comps)
}

fn solenoidal(f: SpectralVectorField) -> SpectralVectorField {
    f.with_divergence_free(true)
}

fn project(mut f: SpectralVectorField) -> SpectralVectorField {
    leray_project_in_place(&mut f);
    f
}

/// One integrating-factor RK4 step of size `params.dt`.
pub fn step(state: &SimState, params: &SolverParams) -> Result<SimState, SolverError> {
    params.validate()?;
    Integrator::new(state.grid(), params, params.dt).step(state)
}

/// `N = −(u·∇)u + (∇×B)×B + (∇×B)×H̃`, the forcing whose gradient part is `∇p`.
pub fn momentum_forcing(state: &SimState, params: &SolverParams) -> Result<SpectralVectorField, SolverError> {
    let j = curl(&state.b_hat);
    let mut n = cross_product(&j, &state.b_hat, params.dealias)?;
    n.axpy(-1.0, &advective_derivative(&state.u_hat, &state.u_hat, params.dealias)?);
    n.axpy(1.0, &cross_constant(&j, params.h_tilde));
    n.set_divergence_free(false);
    Ok(n)
}

/// Zero-mean pressure solving `Δp = div N`.
pub fn recover_pressure(state: &SimState, params: &SolverParams) -> Result<SpectralScalar, SolverError> {
    let n = momentum_forcing(state, params)?;
    let div = divergence(&n);
    let g = state.grid();
    let mut p = SpectralScalar::zeros(g);
    let src = div.data();
    let dst = p.data_mut();
    for_each_mode(&g, |idx, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 > 0.0 {
            dst[idx] = -src[idx] / k2;
        }
    });
    Ok(p)
}

/// Recorded diagnostics plus requested snapshots of a completed run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<SimState>,
    pub final_state: SimState,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }
}

/// A run that stopped early: the error, the last state that passed, and the records so far.
#[derive(Clone, Debug)]
pub struct RunFailure {
    pub error: SolverError,
    pub last_good: SimState,
    pub records: Vec<DiagnosticsRecord>,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (last good state at t = {})", self.error, self.last_good.t)
    }
}

impl std::error::Error for RunFailure {}

/// Hooks called by [`run_with`] for persistence.
pub trait Observer {
    fn on_step(&mut self, _step: usize, _state: &SimState) {}
    fn on_record(&mut self, _record: &DiagnosticsRecord) {}
}

impl Observer for () {}

/// Number of steps and the uniform step size used to reach `t_end` exactly.
pub fn step_plan(t0: f64, t_end: f64, dt: f64) -> (usize, f64) {
    let span = t_end - t0;
    if span <= 0.0 {
        return (0, dt);
    }
    let steps = (span / dt - 1e-9).ceil().max(1.0) as usize;
    (steps, span / steps as f64)
}

pub fn run(initial: SimState, params: &SolverParams) -> Result<Trajectory, Box<RunFailure>> {
    run_with(initial, params, &[], &mut ())
}

/// Steps from `initial.t` to `params.t_end`, recording every `record_every`
/// steps and at the end. States are kept at the first step reaching each of
/// `snapshot_times`.
pub fn run_with(
    initial: SimState,
    params: &SolverParams,
    snapshot_times: &[f64],
    observer: &mut dyn Observer,
) -> Result<Trajectory, Box<RunFailure>> {
    let fail = |error: SolverError, last_good: &SimState, records: &[DiagnosticsRecord]| {
        Box::new(RunFailure {
            error,
            last_good: last_good.clone(),
            records: records.to_vec(),
        })
    };
    if let Err(e) = params.validate() {
        return Err(fail(e, &initial, &[]));
    }
    if params.t_end < initial.t {
        return Err(fail(
            invalid("t_end", format!("{} precedes initial time {}", params.t_end, initial.t)),
            &initial,
            &[],
        ));
    }
    let g = initial.grid();
    let t0 = initial.t;
    let (steps, h) = step_plan(t0, params.t_end, params.dt);
    let integrator = Integrator::new(g, params, h);

    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut pending: Vec<f64> = snapshot_times.iter().copied().filter(|&s| s >= t0 - 1e-12).collect();
    pending.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pending.reverse();

    let mut state = initial;
    // λ‖∇u‖² integrated every step, independent of the record interval
    let mut cum = 0.0;
    let first = diagnostics::record_with(&state, params, cum).map_err(|e| fail(e, &state, &records))?;
    observer.on_record(&first);
    records.push(first);
    observer.on_step(0, &state);
    while pending.last().is_some_and(|&s| s <= state.t + 0.5 * h) {
        pending.pop();
        snapshots.push(state.clone());
    }

    for i in 1..=steps {
        let (mut next, quad) = integrator
            .step_with_dissipation(&state)
            .map_err(|e| fail(e, &state, &records))?;
        next.t = if i == steps { params.t_end } else { t0 + i as f64 * h };
        cum += quad;
        state = next;
        if i % params.record_every == 0 || i == steps {
            let rec = diagnostics::record_with(&state, params, cum).map_err(|e| fail(e, &state, &records))?;
            observer.on_record(&rec);
            records.push(rec);
        }
        observer.on_step(i, &state);
        while pending.last().is_some_and(|&s| s <= state.t + 0.5 * h) {
            pending.pop();
            snapshots.push(state.clone());
        }
    }
    Ok(Trajectory {
        records,
        snapshots,
        final_state: state,
    })
}
