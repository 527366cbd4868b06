//! Explicit solver for the isentropic compressible system with Mach number ε:
//!
//! ```text
//! ρ_t + div(ρu) = 0
//! (ρuʲ)_t + div(ρuʲu) + ε⁻² P(ρ)_{xⱼ} + (½|H|²)_{xⱼ} − div(HʲH) = μΔuʲ + λ_c (div u)_{xⱼ}
//! Hʲ_t + div(Hʲu − uʲH) = 0,     div H = 0,     P(ρ) = Kρ^γ
//! ```
//!
//! Density and momentum are stepped in physical space, `H` in spectral space;
//! all flux divergences are spectral. The constant `P(ρ̃)` is subtracted
//! from the pressure before differentiating, which changes nothing exactly but
//! keeps the `ε⁻²` flux small.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::sobolev_norm;
use crate::error::SolverError;
use crate::fft;
use crate::field::{RealVectorField, ScalarField, SpectralVectorField};
use crate::grid::Grid;
use crate::presets::{normalize_sobolev, random_bandlimited, random_solenoidal};
use crate::spectral::{curl, dealias_scalar_in_place, for_each_mode, leray_project_in_place};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompressibleParams {
    /// Shear viscosity μ.
    pub mu: f64,
    /// Second viscosity coefficient multiplying `∇ div u`.
    pub lambda_c: f64,
    /// Pressure constant in `P = Kρ^γ`.
    #[serde(rename = "K")]
    pub k_pressure: f64,
    pub gamma: f64,
    /// Mach number ε.
    pub eps: f64,
    pub rho_tilde: f64,
    pub h_tilde: [f64; 3],
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    /// Acoustic Courant number.
    pub cfl: f64,
    pub dealias: bool,
}

impl Default for CompressibleParams {
    fn default() -> Self {
        Self {
            mu: 1.0,
            lambda_c: 1.0,
            k_pressure: 1.0,
            gamma: 1.4,
            eps: 0.1,
            rho_tilde: 1.0,
            h_tilde: [1.0, 1.0, 1.0],
            dt: 1e-3,
            t_end: 0.5,
            record_every: 1,
            cfl: 0.4,
            dealias: true,
        }
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> SolverError {
    SolverError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl CompressibleParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = [
            ("mu", self.mu),
            ("K", self.k_pressure),
            ("eps", self.eps),
            ("rho_tilde", self.rho_tilde),
            ("dt", self.dt),
            ("cfl", self.cfl),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be > 0, got {v}")));
            }
        }
        if !(self.lambda_c.is_finite() && self.lambda_c >= -2.0 / 3.0 * self.mu) {
            return Err(invalid(
                "lambda_c",
                format!("must be finite and >= -2mu/3, got {}", self.lambda_c),
            ));
        }
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return Err(invalid("gamma", format!("must be >= 1, got {}", self.gamma)));
        }
        if self.eps > 1.0 {
            return Err(invalid("eps", format!("must be in (0, 1], got {}", self.eps)));
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
        Ok(())
    }

    /// `P′(ρ) = Kγρ^{γ−1}`.
    pub fn pressure_derivative(&self, rho: f64) -> f64 {
        self.k_pressure * self.gamma * rho.powf(self.gamma - 1.0)
    }
}

/// `(ρ, u, H)` at time `t`; `H` is the full field including the background.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressibleState {
    pub t: f64,
    pub rho: ScalarField,
    pub u: RealVectorField,
    pub h_hat: SpectralVectorField,
}

impl CompressibleState {
    /// `(ρ̃, 0, H̃)`.
    pub fn uniform(grid: Grid, rho_tilde: f64, h_tilde: [f64; 3]) -> Self {
        Self {
            t: 0.0,
            rho: ScalarField::constant(grid, rho_tilde),
            u: RealVectorField::zeros(grid),
            h_hat: RealVectorField::constant(grid, h_tilde)
                .to_spectral()
                .with_divergence_free(true),
        }
    }

    pub fn grid(&self) -> Grid {
        self.rho.grid()
    }

    pub fn momentum(&self) -> RealVectorField {
        let comps = std::array::from_fn(|j| {
            self.rho
                .data()
                .iter()
                .zip(self.u.component(j))
                .map(|(r, v)| r * v)
                .collect()
        });
        RealVectorField::from_components_unchecked(self.grid(), comps)
    }
}

/// `Kρ^γ` pointwise.
pub fn pressure(rho: &ScalarField, k: f64, gamma: f64) -> Result<ScalarField, SolverError> {
    let min = rho.min();
    if min.is_nan() || min <= 0.0 {
        return Err(SolverError::NegativeDensity {
            t: f64::NAN,
            min_density: min,
        });
    }
    let data = rho.data().iter().map(|r| k * r.powf(gamma)).collect();
    Ok(ScalarField::from_vec(rho.grid(), data)?)
}

/// Time derivatives of the conservative variables `(ρ, m = ρu, H)`.
#[derive(Clone, Debug)]
pub struct CompressibleRhs {
    pub drho: ScalarField,
    pub dm: RealVectorField,
    pub dh: SpectralVectorField,
}

/// Conservative state used inside the Runge-Kutta stages.
#[derive(Clone)]
struct Conserved {
    rho: Vec<f64>,
    m: [Vec<f64>; 3],
    h: SpectralVectorField,
}

impl Conserved {
    fn from_state(s: &CompressibleState) -> Self {
        Self {
            rho: s.rho.data().to_vec(),
            m: s.momentum().into_components(),
            h: s.h_hat.clone(),
        }
    }

    fn axpy(&self, a: f64, d: &CompressibleRhs) -> Self {
        let add = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(x, y)| x + a * y).collect::<Vec<f64>>();
        let mut h = self.h.clone();
        h.axpy(a, &d.dh);
        Self {
            rho: add(&self.rho, d.drho.data()),
            m: std::array::from_fn(|j| add(&self.m[j], d.dm.component(j))),
            h,
        }
    }
}

fn velocity(g: &Grid, rho: &[f64], m: &[Vec<f64>; 3], t: f64) -> Result<[Vec<f64>; 3], SolverError> {
    let min = rho.iter().copied().fold(f64::INFINITY, f64::min);
    if min.is_nan() || rho.iter().any(|r| r.is_nan()) {
        return Err(SolverError::Blowup { t });
    }
    if min <= 0.0 {
        return Err(SolverError::NegativeDensity { t, min_density: min });
    }
    debug_assert_eq!(rho.len(), g.len());
    Ok(std::array::from_fn(|j| {
        m[j].iter().zip(rho).map(|(m, r)| m / r).collect()
    }))
}

fn rhs_conserved(c: &Conserved, params: &CompressibleParams, t: f64) -> Result<CompressibleRhs, SolverError> {
    let g = c.h.grid();
    let len = g.len();
    let u = velocity(&g, &c.rho, &c.m, t)?;
    let hr = c.h.to_real();
    let p_ref = params.k_pressure * params.rho_tilde.powf(params.gamma);
    let inv_eps2 = 1.0 / (params.eps * params.eps);

    // Symmetric momentum flux T^{jk} (xx, yy, zz, xy, xz, yz) and the induction flux u×H.
    let mut flux: [Vec<f64>; 6] = std::array::from_fn(|_| vec![0.0; len]);
    let mut emf: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; len]);
    for i in 0..len {
        let r = c.rho[i];
        let v = [u[0][i], u[1][i], u[2][i]];
        let h = hr.at(i);
        let q = inv_eps2 * (params.k_pressure * r.powf(params.gamma) - p_ref)
            + 0.5 * (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]);
        flux[0][i] = r * v[0] * v[0] + q - h[0] * h[0];
        flux[1][i] = r * v[1] * v[1] + q - h[1] * h[1];
        flux[2][i] = r * v[2] * v[2] + q - h[2] * h[2];
        flux[3][i] = r * v[0] * v[1] - h[0] * h[1];
        flux[4][i] = r * v[0] * v[2] - h[0] * h[2];
        flux[5][i] = r * v[1] * v[2] - h[1] * h[2];
        emf[0][i] = v[1] * h[2] - v[2] * h[1];
        emf[1][i] = v[2] * h[0] - v[0] * h[2];
        emf[2][i] = v[0] * h[1] - v[1] * h[0];
    }

    let mut products = fft::forward_real_many(
        &g,
        &[
            &flux[0], &flux[1], &flux[2], &flux[3], &flux[4], &flux[5], &emf[0], &emf[1], &emf[2],
        ],
    );
    if params.dealias {
        for p in products.iter_mut() {
            dealias_scalar_in_place(&g, p);
        }
    }
    let lin = fft::forward_real_many(&g, &[&c.m[0], &c.m[1], &c.m[2], &u[0], &u[1], &u[2]]);
    let (m_hat, u_hat) = lin.split_at(3);

    // (row, col) → index into the symmetric flux list
    const T: [[usize; 3]; 3] = [[0, 3, 4], [3, 1, 5], [4, 5, 2]];
    let zero = Complex64::new(0.0, 0.0);
    let mut drho = vec![zero; len];
    let mut dm: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![zero; len]);
    for_each_mode(&g, |idx, k| {
        drho[idx] = -I * (k[0] * m_hat[0][idx] + k[1] * m_hat[1][idx] + k[2] * m_hat[2][idx]);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let div_u = I * (k[0] * u_hat[0][idx] + k[1] * u_hat[1][idx] + k[2] * u_hat[2][idx]);
        for j in 0..3 {
            let div_t =
                I * (k[0] * products[T[j][0]][idx] + k[1] * products[T[j][1]][idx] + k[2] * products[T[j][2]][idx]);
            dm[j][idx] = -div_t - u_hat[j][idx] * (params.mu * k2) + I * k[j] * div_u * params.lambda_c;
        }
    });
    let emf_hat = SpectralVectorField::from_components(
        g,
        [
            std::mem::take(&mut products[6]),
            std::mem::take(&mut products[7]),
            std::mem::take(&mut products[8]),
        ],
    );
    let dh = curl(&emf_hat);

    let mut real = fft::inverse_real_many(&g, &[&drho, &dm[0], &dm[1], &dm[2]]);
    let dm2 = real.pop().unwrap();
    let dm1 = real.pop().unwrap();
    let dm0 = real.pop().unwrap();
    let drho = real.pop().unwrap();
    if drho.iter().chain(&dm0).chain(&dm1).chain(&dm2).any(|v| !v.is_finite()) || !dh.is_finite() {
        return Err(SolverError::Blowup { t });
    }
    Ok(CompressibleRhs {
        drho: ScalarField::from_vec_unchecked(g, drho),
        dm: RealVectorField::from_components_unchecked(g, [dm0, dm1, dm2]),
        dh,
    })
}

/// `(∂ₜρ, ∂ₜ(ρu), ∂ₜH)` at the given state.
pub fn rhs_compressible(
    state: &CompressibleState,
    params: &CompressibleParams,
) -> Result<CompressibleRhs, SolverError> {
    rhs_conserved(&Conserved::from_state(state), params, state.t)
}

/// Largest stable step: the acoustic CFL condition
/// `dt ≤ C dx ε / (ε(‖u‖∞ + ‖H‖∞/√ρ_min) + √P′(ρ_max))`, further capped by
/// `VISCOUS_STEP_FACTOR / (ν |k|²_max)` with `ν = (μ + max(λ_c, 0))/ρ_min`
/// because the viscous terms are explicit.
pub fn cfl_limit(state: &CompressibleState, params: &CompressibleParams) -> f64 {
    let hmax = state.h_hat.to_real().max_norm();
    let umax = state.u.max_norm();
    let rmin = state.rho.min().max(f64::MIN_POSITIVE);
    let speed = params.eps * (umax + hmax / rmin.sqrt()) + params.pressure_derivative(state.rho.max()).sqrt();
    let acoustic = params.cfl * state.grid().dx() * params.eps / speed;
    let kmax = (state.grid().n() / 2 - 1) as f64;
    let nu = (params.mu + params.lambda_c.max(0.0)) / rmin;
    let viscous = if nu > 0.0 {
        VISCOUS_STEP_FACTOR / (nu * 3.0 * kmax * kmax)
    } else {
        f64::INFINITY
    };
    acoustic.min(viscous)
}

/// Fraction of the RK4 real-axis stability bound (≈ 2.79) used for viscous decay rates.
pub const VISCOUS_STEP_FACTOR: f64 = 1.0;

/// One classical RK4 step of size `dt` in `(ρ, ρu, H)`, followed by projecting `H`.
pub fn step_compressible_dt(
    state: &CompressibleState,
    params: &CompressibleParams,
    dt: f64,
) -> Result<CompressibleState, SolverError> {
    let limit = cfl_limit(state, params);
    if dt > limit * (1.0 + 1e-12) {
        return Err(SolverError::Cfl { t: state.t, dt, limit });
    }
    let t = state.t;
    let c0 = Conserved::from_state(state);
    let k1 = rhs_conserved(&c0, params, t)?;
    let k2 = rhs_conserved(&c0.axpy(0.5 * dt, &k1), params, t + 0.5 * dt)?;
    let k3 = rhs_conserved(&c0.axpy(0.5 * dt, &k2), params, t + 0.5 * dt)?;
    let k4 = rhs_conserved(&c0.axpy(dt, &k3), params, t + dt)?;
    let g = state.grid();
    let w = dt / 6.0;
    let combine = |x: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..x.len())
            .map(|i| x[i] + w * (a[i] + 2.0 * (b[i] + c[i]) + d[i]))
            .collect()
    };
    let rho = combine(&c0.rho, k1.drho.data(), k2.drho.data(), k3.drho.data(), k4.drho.data());
    let m: [Vec<f64>; 3] = std::array::from_fn(|j| {
        combine(
            &c0.m[j],
            k1.dm.component(j),
            k2.dm.component(j),
            k3.dm.component(j),
            k4.dm.component(j),
        )
    });
    let mut h = c0.h.clone();
    h.axpy(w, &k1.dh);
    h.axpy(2.0 * w, &k2.dh);
    h.axpy(2.0 * w, &k3.dh);
    h.axpy(w, &k4.dh);
    leray_project_in_place(&mut h);
    if !h.is_finite() {
        return Err(SolverError::Blowup { t: t + dt });
    }
    let u = velocity(&g, &rho, &m, t + dt)?;
    Ok(CompressibleState {
        t: t + dt,
        rho: ScalarField::from_vec_unchecked(g, rho),
        u: RealVectorField::from_components_unchecked(g, u),
        h_hat: h,
    })
}

/// One step of size `params.dt`.
pub fn step_compressible(
    state: &CompressibleState,
    params: &CompressibleParams,
) -> Result<CompressibleState, SolverError> {
    params.validate()?;
    step_compressible_dt(state, params, params.dt)
}

/// Scalar `Hˢ` norm under the same convention as the vector norm.
pub fn scalar_sobolev_norm(f: &ScalarField, s: u32) -> f64 {
    let g = f.grid();
    let zero = vec![Complex64::new(0.0, 0.0); g.len()];
    let v = SpectralVectorField::from_components(g, [fft::forward_real(&g, f.data()), zero.clone(), zero]);
    sobolev_norm(&v, s)
}

/// Seeded shapes of the well-prepared perturbations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Preparation {
    /// Common size of `‖φ‖_{H³}`, `‖ψ‖_{H⁴}` and `‖χ‖_{H³}`.
    pub c_prep: f64,
    pub seed: u64,
    /// Band limit of the random profiles ψ and χ.
    pub kmax: usize,
}

impl Default for Preparation {
    fn default() -> Self {
        Self {
            c_prep: 1.0,
            seed: 7,
            kmax: 3,
        }
    }
}

/// The fixed perturbation profiles `φ`, `ψ`, `χ`.
#[derive(Clone, Debug)]
pub struct PerturbationProfiles {
    /// `φ = c_φ(2 + sin x₁)` with `‖φ‖_{H³} = C_prep`.
    pub phi: ScalarField,
    /// Band-limited, not solenoidal, `‖ψ‖_{H⁴} = C_prep`.
    pub psi: RealVectorField,
    /// Band-limited, solenoidal, `‖χ‖_{H³} = C_prep`.
    pub chi: RealVectorField,
}

impl Preparation {
    pub fn profiles(&self, grid: Grid) -> Result<PerturbationProfiles, SolverError> {
        let shape = ScalarField::sample(grid, |x| 2.0 + x[0].sin())?;
        let c_phi = self.c_prep / scalar_sobolev_norm(&shape, 3);
        let phi = ScalarField::from_vec_unchecked(grid, shape.data().iter().map(|v| c_phi * v).collect());
        let psi = normalize_sobolev(&random_bandlimited(grid, self.kmax, self.seed), 4, self.c_prep);
        let chi = normalize_sobolev(
            &random_solenoidal(grid, self.kmax, self.seed.wrapping_add(1)),
            3,
            self.c_prep,
        );
        Ok(PerturbationProfiles {
            phi,
            psi: psi.to_real(),
            chi: chi.to_real(),
        })
    }
}

const SOLENOIDAL_TOLERANCE: f64 = 1e-10;

/// `ρ₀ = ρ̃ + ε²φ`, `u₀ = u0 + εψ`, `H₀ = H0 + εχ`.
pub fn well_prepared_init(
    u0: &RealVectorField,
    h0: &RealVectorField,
    eps: f64,
    rho_tilde: f64,
    prep: &Preparation,
) -> Result<CompressibleState, SolverError> {
    let g = u0.grid();
    g.check_same(&h0.grid())?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(invalid("eps", format!("must be in [0, 1], got {eps}")));
    }
    if rho_tilde.is_nan() || rho_tilde <= 0.0 {
        return Err(invalid("rho_tilde", format!("must be > 0, got {rho_tilde}")));
    }
    for (name, f) in [("u0", u0), ("H0", h0)] {
        let d = f.to_spectral().relative_divergence();
        if d > SOLENOIDAL_TOLERANCE {
            return Err(invalid(
                name,
                format!("not divergence-free (relative divergence {d:e})"),
            ));
        }
    }
    let p = prep.profiles(g)?;
    let rho = p.phi.data().iter().map(|v| rho_tilde + eps * eps * v).collect();
    let shift = |base: &RealVectorField, d: &RealVectorField| {
        let comps = std::array::from_fn(|j| {
            base.component(j)
                .iter()
                .zip(d.component(j))
                .map(|(a, b)| a + eps * b)
                .collect()
        });
        RealVectorField::from_components_unchecked(g, comps)
    };
    let mut h_hat = shift(h0, &p.chi).to_spectral();
    leray_project_in_place(&mut h_hat);
    Ok(CompressibleState {
        t: 0.0,
        rho: ScalarField::from_vec_unchecked(g, rho),
        u: shift(u0, &p.psi),
        h_hat,
    })
}

/// Conservation monitors of the compressible run.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressibleRecord {
    pub t: f64,
    /// `∫ρ`.
    pub mass: f64,
    /// `∫ρu`.
    pub momentum: [f64; 3],
    /// `½∫ρ|u|²`.
    pub e_kin: f64,
    /// `½∫|H − H̃|²`.
    pub e_mag: f64,
    /// `max|k·Ĥ| / max|Ĥ|`.
    pub div_h: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub h_mean: [f64; 3],
}

pub const COMPRESSIBLE_CSV_COLUMNS: [&str; 14] = [
    "t",
    "mass",
    "momentum_1",
    "momentum_2",
    "momentum_3",
    "E_kin",
    "E_mag",
    "div_H",
    "rho_min",
    "rho_max",
    "H_mean_1",
    "H_mean_2",
    "H_mean_3",
    "dt",
];

pub fn compressible_record(state: &CompressibleState, params: &CompressibleParams) -> CompressibleRecord {
    let g = state.grid();
    let dv = g.cell_volume();
    let m = state.momentum();
    let momentum = std::array::from_fn(|j| m.component(j).iter().sum::<f64>() * dv);
    let e_kin = 0.5
        * dv
        * (0..g.len())
            .map(|i| {
                let v = state.u.at(i);
                state.rho.data()[i] * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
            })
            .sum::<f64>();
    let mut b = state.h_hat.clone();
    let h_mean = b.mean();
    for j in 0..3 {
        b.component_mut(j)[0] -= params.h_tilde[j];
    }
    CompressibleRecord {
        t: state.t,
        mass: state.rho.integral(),
        momentum,
        e_kin,
        e_mag: 0.5 * b.l2_norm().powi(2),
        div_h: state.h_hat.relative_divergence(),
        rho_min: state.rho.min(),
        rho_max: state.rho.max(),
        h_mean,
    }
}

/// Records of a completed compressible run.
#[derive(Clone, Debug)]
pub struct CompressibleTrajectory {
    pub records: Vec<CompressibleRecord>,
    /// States at the first step reaching each requested snapshot time.
    pub snapshots: Vec<CompressibleState>,
    pub final_state: CompressibleState,
    pub dt: f64,
}

#[derive(Clone, Debug)]
pub struct CompressibleFailure {
    pub error: SolverError,
    pub last_good: CompressibleState,
    pub records: Vec<CompressibleRecord>,
}

impl std::fmt::Display for CompressibleFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (last good state at t = {})", self.error, self.last_good.t)
    }
}

impl std::error::Error for CompressibleFailure {}

/// Steps to `params.t_end` with the uniform step closest to `params.dt` that lands on it.
pub fn run_compressible(
    initial: CompressibleState,
    params: &CompressibleParams,
) -> Result<CompressibleTrajectory, Box<CompressibleFailure>> {
    run_compressible_with(initial, params, &[])
}

/// [`run_compressible`] keeping the states at `snapshot_times`.
pub fn run_compressible_with(
    initial: CompressibleState,
    params: &CompressibleParams,
    snapshot_times: &[f64],
) -> Result<CompressibleTrajectory, Box<CompressibleFailure>> {
    let fail = |error, last: &CompressibleState, records: &[CompressibleRecord]| {
        Box::new(CompressibleFailure {
            error,
            last_good: last.clone(),
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
    if initial.rho.min() <= 0.0 {
        let e = SolverError::NegativeDensity {
            t: initial.t,
            min_density: initial.rho.min(),
        };
        return Err(fail(e, &initial, &[]));
    }
    let t0 = initial.t;
    let (steps, h) = crate::incompressible::step_plan(t0, params.t_end, params.dt);
    let mut pending: Vec<f64> = snapshot_times.iter().copied().filter(|&s| s >= t0 - 1e-12).collect();
    pending.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut snapshots = Vec::new();
    let mut records = vec![compressible_record(&initial, params)];
    let mut state = initial;
    while pending.last().is_some_and(|&s| s <= state.t + 0.5 * h) {
        pending.pop();
        snapshots.push(state.clone());
    }
    for i in 1..=steps {
        let mut next = step_compressible_dt(&state, params, h).map_err(|e| fail(e, &state, &records))?;
        next.t = if i == steps { params.t_end } else { t0 + i as f64 * h };
        state = next;
        if i % params.record_every == 0 || i == steps {
            records.push(compressible_record(&state, params));
        }
        while pending.last().is_some_and(|&s| s <= state.t + 0.5 * h) {
            pending.pop();
            snapshots.push(state.clone());
        }
    }
    Ok(CompressibleTrajectory {
        records,
        snapshots,
        final_state: state,
        dt: h,
    })
}

pub fn write_compressible_csv<W: Write>(mut out: W, records: &[CompressibleRecord], dt: f64) -> std::io::Result<()> {
    use crate::diagnostics::format_number as f;
    writeln!(out, "{}", COMPRESSIBLE_CSV_COLUMNS.join(","))?;
    for r in records {
        let vals = [
            r.t,
            r.mass,
            r.momentum[0],
            r.momentum[1],
            r.momentum[2],
            r.e_kin,
            r.e_mag,
            r.div_h,
            r.rho_min,
            r.rho_max,
            r.h_mean[0],
            r.h_mean[1],
            r.h_mean[2],
            dt,
        ];
        let row: Vec<String> = vals.iter().map(|v| f(*v)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sample_field;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn pressure_law() {
        let g = grid(4);
        let p = pressure(&ScalarField::constant(g, 1.3), 2.0, 1.4).unwrap();
        assert!(p.data().iter().all(|v| (v - 2.0 * 1.3f64.powf(1.4)).abs() < 1e-15));
        let rho = ScalarField::sample(g, |x| 1.5 + x[0].sin()).unwrap();
        let p = pressure(&rho, 3.0, 1.0).unwrap();
        for (a, r) in p.data().iter().zip(rho.data()) {
            assert!((a - 3.0 * r).abs() < 1e-15);
        }
        assert_eq!(
            pressure(&ScalarField::constant(g, 2.0), 1.0, 2.0).unwrap().data()[0],
            4.0
        );
        assert!(matches!(
            pressure(&ScalarField::constant(g, 0.0), 1.0, 2.0),
            Err(SolverError::NegativeDensity { .. })
        ));
    }

    #[test]
    fn uniform_state_is_steady() {
        let g = grid(8);
        let p = CompressibleParams::default();
        let s = CompressibleState::uniform(g, p.rho_tilde, p.h_tilde);
        let r = rhs_compressible(&s, &p).unwrap();
        assert!(r.drho.max_abs() < 1e-15);
        assert!(r.dm.max_norm() < 1e-14);
        assert!(r.dh.max_coefficient() < 1e-15);
        let next = step_compressible(&s, &p).unwrap();
        assert!(next.u.max_norm() < 1e-14);
        assert!((next.rho.max() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn linear_acoustics_rhs() {
        // ρ = ρ̃(1 + δ sin x₁), u = 0, μ = λ_c = 0:
        // ∂ₜm₁ = −ε⁻² P′(ρ̃) ∂₁ρ to first order in δ; ∂ₜρ = 0.
        let g = grid(16);
        let p = CompressibleParams {
            mu: 0.0,
            lambda_c: 0.0,
            h_tilde: [0.0; 3],
            eps: 0.1,
            ..Default::default()
        };
        let delta = 1e-8;
        let mut s = CompressibleState::uniform(g, p.rho_tilde, p.h_tilde);
        s.rho = ScalarField::sample(g, |x| p.rho_tilde * (1.0 + delta * x[0].sin())).unwrap();
        let r = rhs_compressible(&s, &p).unwrap();
        let c2 = p.pressure_derivative(p.rho_tilde) / (p.eps * p.eps);
        let expect = ScalarField::sample(g, |x| -c2 * p.rho_tilde * delta * x[0].cos()).unwrap();
        let scale = expect.max_abs();
        for (a, e) in r.dm.component(0).iter().zip(expect.data()) {
            assert!((a - e).abs() < 1e-7 * scale);
        }
        assert!(r.dm.component(1).iter().all(|v| v.abs() < 1e-12 * scale));
        assert!(r.drho.max_abs() < 1e-20);
    }

    #[test]
    fn induction_with_constant_velocity_is_advection() {
        let g = grid(16);
        let p = CompressibleParams::default();
        let v = [0.3, -0.2, 0.5];
        let mut s = CompressibleState::uniform(g, 1.0, [0.0; 3]);
        s.u = RealVectorField::constant(g, v);
        // H = (0, sin(x₁ + x₃), 0): solenoidal
        s.h_hat = sample_field(g, |x| [0.0, (x[0] + x[2]).sin(), 0.0])
            .unwrap()
            .to_spectral();
        let r = rhs_compressible(&s, &p).unwrap();
        let expect = sample_field(g, |x| [0.0, -(v[0] + v[2]) * (x[0] + x[2]).cos(), 0.0])
            .unwrap()
            .to_spectral();
        assert!(r.dh.sub(&expect).unwrap().max_coefficient() < 1e-15);
    }

    #[test]
    fn mass_conserved_in_one_step() {
        let g = grid(16);
        let p = CompressibleParams {
            dt: 1e-3,
            ..Default::default()
        };
        let u0 = RealVectorField::zeros(g);
        let h0 = RealVectorField::constant(g, p.h_tilde);
        let s = well_prepared_init(&u0, &h0, p.eps, p.rho_tilde, &Preparation::default()).unwrap();
        let next = step_compressible(&s, &p).unwrap();
        let (m0, m1) = (s.rho.integral(), next.rho.integral());
        assert!((m1 - m0).abs() < 1e-13 * m0);
        assert!(next.h_hat.relative_divergence() < 1e-11);
        let (a, b) = (s.h_hat.mean(), next.h_hat.mean());
        for j in 0..3 {
            assert!((a[j] - b[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn well_prepared_data() {
        let g = grid(16);
        let u0 = RealVectorField::zeros(g);
        let h0 = RealVectorField::constant(g, [1.0, 1.0, 1.0]);
        let prep = Preparation::default();
        let s = well_prepared_init(&u0, &h0, 0.0, 1.0, &prep).unwrap();
        assert!(s.rho.data().iter().all(|&r| r == 1.0));
        assert_eq!(s.u, u0);
        assert!(s.h_hat.sub(&h0.to_spectral()).unwrap().max_coefficient() < 1e-16);

        let eps = 0.1;
        let s = well_prepared_init(&u0, &h0, eps, 1.0, &prep).unwrap();
        let pert = ScalarField::from_vec(g, s.rho.data().iter().map(|r| r - 1.0).collect()).unwrap();
        let phi = prep.profiles(g).unwrap().phi;
        assert!((scalar_sobolev_norm(&pert, 3) - eps * eps * scalar_sobolev_norm(&phi, 3)).abs() < 1e-12 * eps * eps);
        assert!((scalar_sobolev_norm(&phi, 3) - prep.c_prep).abs() < 1e-13);
        for e in [1.0, 0.5, 1e-3] {
            let s = well_prepared_init(&u0, &h0, e, 1.0, &prep).unwrap();
            assert!(s.rho.min() > 1.0);
        }
        let p = prep.profiles(g).unwrap();
        assert!((sobolev_norm(&p.psi.to_spectral(), 4) - 1.0).abs() < 1e-12);
        assert!((sobolev_norm(&p.chi.to_spectral(), 3) - 1.0).abs() < 1e-12);
        assert!(p.chi.to_spectral().relative_divergence() < 1e-13);
    }

    #[test]
    fn rejects_compressive_background() {
        let g = grid(8);
        let u0 = sample_field(g, |x| [x[0].sin(), 0.0, 0.0]).unwrap();
        let h0 = RealVectorField::zeros(g);
        let err = well_prepared_init(&u0, &h0, 0.1, 1.0, &Preparation::default()).unwrap_err();
        assert!(matches!(err, SolverError::InvalidParameter { name: "u0", .. }));
    }

    #[test]
    fn acoustic_period() {
        // Standing wave ρ = ρ̃(1 + δ cos x₁), inviscid, no field: ρ(0) − ρ̃ ∝ cos(ωt),
        // ω = |k|√P′(ρ̃)/ε. Measure the first two downward zero crossings.
        let g = grid(8);
        let mut p = CompressibleParams {
            mu: 0.0,
            lambda_c: 0.0,
            h_tilde: [0.0; 3],
            eps: 0.5,
            ..Default::default()
        };
        let omega = p.pressure_derivative(1.0).sqrt() / p.eps;
        let period = 2.0 * std::f64::consts::PI / omega;
        let mut s = CompressibleState::uniform(g, 1.0, [0.0; 3]);
        s.rho = ScalarField::sample(g, |x| 1.0 + 1e-6 * x[0].cos()).unwrap();
        let dt = 0.5 * cfl_limit(&s, &p);
        p.dt = dt;
        let mut crossings = Vec::new();
        let mut prev = s.rho.data()[0] - 1.0;
        while crossings.len() < 3 {
            let next = step_compressible_dt(&s, &p, dt).unwrap();
            let cur = next.rho.data()[0] - 1.0;
            if prev > 0.0 && cur <= 0.0 || prev < 0.0 && cur >= 0.0 {
                crossings.push(s.t + dt * prev / (prev - cur));
            }
            prev = cur;
            s = next;
        }
        let measured = crossings[2] - crossings[0];
        assert!((measured - period).abs() < 1e-3 * period, "{measured} vs {period}");
    }
}
