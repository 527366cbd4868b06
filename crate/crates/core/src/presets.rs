//! Initial-condition presets and seeded random band-limited fields.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::sobolev_norm;
use crate::error::FieldError;
use crate::field::{sample_field, SpectralVectorField};
use crate::grid::Grid;
use crate::incompressible::SimState;
use crate::spectral::{dealias_in_place, leray_project};

/// Seeded random real vector field with modes `0 < max|kⱼ| ≤ kmax`.
///
/// Coefficients are uniform in the unit square scaled by `(1+|k|²)⁻¹` and then
/// symmetrized so the field is real. Not projected; not normalized.
pub fn random_bandlimited(grid: Grid, kmax: usize, seed: u64) -> SpectralVectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kmax = kmax.min(grid.n() / 2 - 1) as i64;
    let mut raw = SpectralVectorField::zeros(grid);
    for idx in 0..grid.len() {
        let k = grid.mode(idx);
        let inf = k.iter().map(|c| c.abs()).max().unwrap();
        if inf == 0 || inf > kmax {
            continue;
        }
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        let env = 1.0 / (1.0 + k2);
        for j in 0..3 {
            let re: f64 = rng.random_range(-1.0..1.0);
            let im: f64 = rng.random_range(-1.0..1.0);
            raw.component_mut(j)[idx] = Complex64::new(re, im) * env;
        }
    }
    let mut out = SpectralVectorField::zeros(grid);
    for j in 0..3 {
        let src = raw.component(j).to_vec();
        let dst = out.component_mut(j);
        for idx in 0..grid.len() {
            dst[idx] = (src[idx] + src[grid.conjugate_index(idx)].conj()) * 0.5;
        }
    }
    out.set_divergence_free(false);
    out
}

/// Seeded random divergence-free field, band-limited to `kmax`.
pub fn random_solenoidal(grid: Grid, kmax: usize, seed: u64) -> SpectralVectorField {
    leray_project(&random_bandlimited(grid, kmax, seed))
}

/// Rescales `f` so that its `Hˢ` norm equals `target` (zero fields stay zero).
pub fn normalize_sobolev(f: &SpectralVectorField, s: u32, target: f64) -> SpectralVectorField {
    let norm = sobolev_norm(f, s);
    if norm == 0.0 {
        return f.clone();
    }
    f.scaled(target / norm)
}

/// Unit vector orthogonal to `k`, built from the coordinate axis least aligned with it.
pub fn polarization(k: [i64; 3]) -> [f64; 3] {
    let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
    let kn = (kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2]).sqrt();
    let axis = (0..3)
        .min_by(|&a, &b| kf[a].abs().partial_cmp(&kf[b].abs()).unwrap())
        .unwrap();
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    if kn == 0.0 {
        return e;
    }
    let dot = kf[axis] / kn;
    let mut v = [
        e[0] - dot * kf[0] / kn,
        e[1] - dot * kf[1] / kn,
        e[2] - dot * kf[2] / kn,
    ];
    let vn = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v.iter_mut().for_each(|c| *c /= vn);
    v
}

/// Named analytic initial conditions for the incompressible solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Preset {
    /// `u = 0, B = 0`: the uniform state `H = H̃`.
    Steady {},
    /// `u = 0, B = a·b̂ sin(k·x)` with `b̂ ⊥ k`.
    AlfvenMode {
        #[serde(default = "default_alfven_amplitude")]
        amplitude: f64,
        #[serde(default = "default_wavevector")]
        wavevector: [i64; 3],
    },
    /// Taylor-Green velocity with a Taylor-Green-type magnetic perturbation.
    TaylorGreenMhd {
        #[serde(default = "default_tg_amplitude")]
        u_amplitude: f64,
        #[serde(default = "default_tg_amplitude")]
        b_amplitude: f64,
    },
    /// Random divergence-free `u` and `B`, with `‖u‖_{H²} = ‖B‖_{H²} = amplitude/2`.
    RandomBandlimited {
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_kmax")]
        kmax: usize,
        #[serde(default = "default_random_amplitude")]
        amplitude: f64,
    },
}

fn default_alfven_amplitude() -> f64 {
    1e-2
}
fn default_wavevector() -> [i64; 3] {
    [1, 0, 0]
}
fn default_tg_amplitude() -> f64 {
    0.1
}
fn default_kmax() -> usize {
    3
}
fn default_random_amplitude() -> f64 {
    1e-3
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Steady {} => "steady",
            Preset::AlfvenMode { .. } => "alfven-mode",
            Preset::TaylorGreenMhd { .. } => "taylor-green-mhd",
            Preset::RandomBandlimited { .. } => "random-bandlimited",
        }
    }

    /// Builds the `(u, B)` initial state at `t = 0`.
    pub fn build(&self, grid: Grid) -> Result<SimState, FieldError> {
        let (u, b) = match *self {
            Preset::Steady {} => (SpectralVectorField::zeros(grid), SpectralVectorField::zeros(grid)),
            Preset::AlfvenMode { amplitude, wavevector } => {
                let pol = polarization(wavevector);
                let k = wavevector.map(|c| c as f64);
                let b = sample_field(grid, |x| {
                    let s = amplitude * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]).sin();
                    [s * pol[0], s * pol[1], s * pol[2]]
                })?;
                (SpectralVectorField::zeros(grid), b.to_spectral())
            }
            Preset::TaylorGreenMhd {
                u_amplitude,
                b_amplitude,
            } => {
                let u = sample_field(grid, |x| {
                    let (s0, c0) = x[0].sin_cos();
                    let (s1, c1) = x[1].sin_cos();
                    let c2 = x[2].cos();
                    [u_amplitude * s0 * c1 * c2, -u_amplitude * c0 * s1 * c2, 0.0]
                })?;
                let b = sample_field(grid, |x| {
                    let (s0, c0) = x[0].sin_cos();
                    let (s1, c1) = x[1].sin_cos();
                    let (s2, c2) = x[2].sin_cos();
                    [
                        b_amplitude * c0 * s1 * s2,
                        b_amplitude * s0 * c1 * s2,
                        -2.0 * b_amplitude * s0 * s1 * c2,
                    ]
                })?;
                (u.to_spectral(), b.to_spectral())
            }
            Preset::RandomBandlimited { seed, kmax, amplitude } => {
                let mut u = random_solenoidal(grid, kmax, seed.wrapping_mul(2));
                let mut b = random_solenoidal(grid, kmax, seed.wrapping_mul(2).wrapping_add(1));
                dealias_in_place(&mut u);
                dealias_in_place(&mut b);
                (
                    normalize_sobolev(&u, 2, 0.5 * amplitude),
                    normalize_sobolev(&b, 2, 0.5 * amplitude),
                )
            }
        };
        SimState::new(0.0, leray_project(&u), leray_project(&b))
    }
}
