//! Monitored quantities of the incompressible system: energies, dissipation,
//! Sobolev norms, the `X(t)` functional, the auxiliary fields `wʲ`, exact
//! vector-identity residuals and interpolation-inequality ratios.
//!
//! All `L²` norms are over the box `[0, 2π)³` through Parseval.

use std::io::Write;

use crate::error::{FieldError, SolverError};
use crate::field::{SpectralScalar, SpectralVectorField};
use crate::incompressible::{rhs_incompressible, SimState, SolverParams};
use crate::spectral::{cross_constant, curl, divergence, for_each_mode, laplacian};

/// One row of the diagnostics time series.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub e_kin: f64,
    pub e_mag: f64,
    /// `λ‖∇u‖²`.
    pub dissipation: f64,
    /// Trapezoidal integral of `dissipation` since the first record.
    pub cum_dissipation: f64,
    /// `‖u‖_{Hˢ}` for `s = 0..=3`.
    pub u_hs: [f64; 4],
    pub b_hs: [f64; 4],
    pub x: f64,
    /// `‖w¹‖, ‖w²‖, ‖w³‖, ‖w‖`.
    pub w_norms: [f64; 4],
    pub div_u: f64,
    pub div_b: f64,
    pub identity_residual: f64,
    pub tail_fraction: f64,
    /// `L∞` and `L⁴` ratios for `u`, then for `B`; NaN for a zero field.
    pub interp_ratios: [f64; 4],
}

impl DiagnosticsRecord {
    pub fn energy(&self) -> f64 {
        self.e_kin + self.e_mag
    }

    fn values(&self) -> [f64; 26] {
        let [u0, u1, u2, u3] = self.u_hs;
        let [b0, b1, b2, b3] = self.b_hs;
        let [w1, w2, w3, w] = self.w_norms;
        let [r0, r1, r2, r3] = self.interp_ratios;
        [
            self.t,
            self.e_kin,
            self.e_mag,
            self.dissipation,
            self.cum_dissipation,
            u0,
            u1,
            u2,
            u3,
            b0,
            b1,
            b2,
            b3,
            self.x,
            w1,
            w2,
            w3,
            w,
            self.div_u,
            self.div_b,
            self.identity_residual,
            self.tail_fraction,
            r0,
            r1,
            r2,
            r3,
        ]
    }
}

pub const CSV_COLUMNS: [&str; 26] = [
    "t",
    "E_kin",
    "E_mag",
    "dissipation",
    "cum_dissipation",
    "u_H0",
    "u_H1",
    "u_H2",
    "u_H3",
    "B_H0",
    "B_H1",
    "B_H2",
    "B_H3",
    "X",
    "w1",
    "w2",
    "w3",
    "w",
    "div_u",
    "div_B",
    "identity_residual",
    "tail_fraction",
    "ratio_Linf_u",
    "ratio_L4_u",
    "ratio_Linf_B",
    "ratio_L4_B",
];

/// `(½‖u‖², ½‖B‖²)`.
pub fn energy(state: &SimState) -> (f64, f64) {
    let v = state.grid().volume();
    (
        0.5 * v * state.u_hat.coefficient_energy(),
        0.5 * v * state.b_hat.coefficient_energy(),
    )
}

/// `Σₖ w(k) |f̂(k)|²` times the box volume, with `k` the derivative wavenumber.
fn weighted_energy(f: &SpectralVectorField, weight: impl Fn(f64) -> f64) -> f64 {
    let g = f.grid();
    let mut acc = 0.0;
    for_each_mode(&g, |idx, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let e: f64 = (0..3).map(|j| f.component(j)[idx].norm_sqr()).sum();
        acc += weight(k2) * e;
    });
    acc * g.volume()
}

/// `‖∇f‖²`.
pub fn gradient_norm_sq(f: &SpectralVectorField) -> f64 {
    weighted_energy(f, |k2| k2)
}

/// `λ‖∇u‖²`.
pub fn dissipation(state: &SimState, params: &SolverParams) -> f64 {
    params.lambda * gradient_norm_sq(&state.u_hat)
}

/// `(Σₖ (1+|k|²)ˢ |f̂(k)|²)^{1/2}` with the Parseval volume factor.
pub fn sobolev_norm(f: &SpectralVectorField, s: u32) -> f64 {
    let g = f.grid();
    let mut acc = 0.0;
    for idx in 0..g.len() {
        let k = g.mode(idx);
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        let e: f64 = (0..3).map(|j| f.component(j)[idx].norm_sqr()).sum();
        if e != 0.0 {
            acc += (1.0 + k2).powi(s as i32) * e;
        }
    }
    (acc * g.volume()).sqrt()
}

/// `|E(t₂) − E(t₁) + Q|` with `Q` the trapezoidal integral of the dissipation
/// over the records.
pub fn energy_balance_residual(records: &[DiagnosticsRecord]) -> f64 {
    let (Some(first), Some(last)) = (records.first(), records.last()) else {
        return 0.0;
    };
    let q: f64 = records
        .windows(2)
        .map(|w| 0.5 * (w[0].dissipation + w[1].dissipation) * (w[1].t - w[0].t))
        .sum();
    (last.energy() - first.energy() + q).abs()
}

/// `‖ΔB‖² + ‖∇B‖² + ‖∇u‖² + ‖u_t‖²` with `u_t` from the semi-discrete RHS.
pub fn x_functional(state: &SimState, params: &SolverParams) -> Result<f64, SolverError> {
    let (du, _) = rhs_incompressible(state, params)?;
    Ok(x_from_parts(state, &du))
}

fn x_from_parts(state: &SimState, du: &SpectralVectorField) -> f64 {
    let b = &state.b_hat;
    weighted_energy(b, |k2| k2 * k2) + gradient_norm_sq(b) + gradient_norm_sq(&state.u_hat) + du.l2_norm().powi(2)
}

/// The auxiliary fields `wʲ = Δu + 3λ⁻¹(∇×B)×eⱼ` and their sum.
#[derive(Clone, Debug)]
pub struct AuxiliaryFields {
    pub w: [SpectralVectorField; 3],
    pub sum: SpectralVectorField,
}

impl AuxiliaryFields {
    /// `‖w¹‖, ‖w²‖, ‖w³‖, ‖w‖`.
    pub fn norms(&self) -> [f64; 4] {
        [
            self.w[0].l2_norm(),
            self.w[1].l2_norm(),
            self.w[2].l2_norm(),
            self.sum.l2_norm(),
        ]
    }
}

pub fn compute_w(state: &SimState, params: &SolverParams) -> AuxiliaryFields {
    let lap = laplacian(&state.u_hat);
    let j = curl(&state.b_hat);
    let coef = 3.0 / params.lambda;
    let w: [SpectralVectorField; 3] = std::array::from_fn(|axis| {
        let mut e = [0.0; 3];
        e[axis] = 1.0;
        let mut wj = lap.clone();
        wj.axpy(coef, &cross_constant(&j, e));
        wj
    });
    let mut sum = w[0].clone();
    sum.axpy(1.0, &w[1]);
    sum.axpy(1.0, &w[2]);
    AuxiliaryFields { w, sum }
}

/// `maxⱼ ‖ΔBʲ + div[(∇×B)×eⱼ]‖ / max(1, ‖ΔB‖)`.
pub fn identity_residual(b: &SpectralVectorField) -> f64 {
    let lap = laplacian(b);
    let j = curl(b);
    let g = b.grid();
    let mut worst: f64 = 0.0;
    for axis in 0..3 {
        let mut e = [0.0; 3];
        e[axis] = 1.0;
        let d = divergence(&cross_constant(&j, e));
        let mut r = SpectralScalar::zeros(g);
        for ((out, a), c) in r.data_mut().iter_mut().zip(lap.component(axis)).zip(d.data()) {
            *out = a + c;
        }
        worst = worst.max(r.l2_norm());
    }
    worst / lap.l2_norm().max(1.0)
}

/// Fraction of the total `(u, B)` spectral energy in modes removed by the 2/3 rule.
pub fn tail_fraction(state: &SimState) -> f64 {
    let g = state.grid();
    let mut tail = 0.0;
    let mut total = 0.0;
    for idx in 0..g.len() {
        let e: f64 = (0..3)
            .map(|j| state.u_hat.component(j)[idx].norm_sqr() + state.b_hat.component(j)[idx].norm_sqr())
            .sum();
        total += e;
        if g.in_tail(idx) {
            tail += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

/// Totals checked against the global dissipation bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DissipationBudget {
    pub cum_dissipation: f64,
    pub e0: f64,
    /// `E(0) − E(T) − cum_dissipation`.
    pub closure: f64,
    pub ok: bool,
}

pub fn dissipation_budget(records: &[DiagnosticsRecord]) -> DissipationBudget {
    let (Some(first), Some(last)) = (records.first(), records.last()) else {
        return DissipationBudget {
            cum_dissipation: 0.0,
            e0: 0.0,
            closure: 0.0,
            ok: true,
        };
    };
    let cum = last.cum_dissipation - first.cum_dissipation;
    let e0 = first.energy();
    DissipationBudget {
        cum_dissipation: cum,
        e0,
        closure: e0 - last.energy() - cum,
        ok: cum <= e0 * (1.0 + 1e-6),
    }
}

/// Norm on the left of a Gagliardo–Nirenberg inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interpolation {
    /// `‖v‖∞ / (‖v‖^{1/4} ‖D²v‖^{3/4})`
    Linf,
    /// `‖v‖_{L⁴} / (‖v‖^{5/8} ‖D²v‖^{3/8})`
    L4,
}

/// Ratio of a grid norm of `f` to the interpolation bound, with `‖D²v‖² = Σ|k|⁴|v̂|²`.
pub fn interpolation_ratio(f: &SpectralVectorField, which: Interpolation) -> Result<f64, FieldError> {
    let l2 = f.l2_norm();
    let d2 = d2_norm(f);
    if l2 == 0.0 || d2 == 0.0 {
        return Err(FieldError::ZeroField);
    }
    let real = f.to_real();
    Ok(ratio_from_parts(&real, l2, d2, which))
}

fn d2_norm(f: &SpectralVectorField) -> f64 {
    let g = f.grid();
    let mut acc = 0.0;
    for idx in 0..g.len() {
        let k = g.mode(idx);
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        acc += k2 * k2 * (0..3).map(|j| f.component(j)[idx].norm_sqr()).sum::<f64>();
    }
    (acc * g.volume()).sqrt()
}

fn ratio_from_parts(real: &crate::field::RealVectorField, l2: f64, d2: f64, which: Interpolation) -> f64 {
    match which {
        Interpolation::Linf => real.max_norm() / (l2.powf(0.25) * d2.powf(0.75)),
        Interpolation::L4 => real.lp_norm(4.0) / (l2.powf(0.625) * d2.powf(0.375)),
    }
}

fn ratio_pair(f: &SpectralVectorField) -> [f64; 2] {
    let l2 = f.l2_norm();
    let d2 = d2_norm(f);
    if l2 == 0.0 || d2 == 0.0 {
        return [f64::NAN; 2];
    }
    let real = f.to_real();
    [
        ratio_from_parts(&real, l2, d2, Interpolation::Linf),
        ratio_from_parts(&real, l2, d2, Interpolation::L4),
    ]
}

/// Full diagnostics of `state`. The running dissipation integral is extended
/// from `prev` by the trapezoidal rule.
pub fn record(
    state: &SimState,
    params: &SolverParams,
    prev: Option<&DiagnosticsRecord>,
) -> Result<DiagnosticsRecord, SolverError> {
    let cum = match prev {
        Some(p) => p.cum_dissipation + 0.5 * (p.dissipation + dissipation(state, params)) * (state.t - p.t),
        None => 0.0,
    };
    record_with(state, params, cum)
}

/// Full diagnostics of `state` with a dissipation integral accumulated elsewhere.
pub fn record_with(state: &SimState, params: &SolverParams, cum: f64) -> Result<DiagnosticsRecord, SolverError> {
    let (e_kin, e_mag) = energy(state);
    let diss = dissipation(state, params);
    let (du, _) = rhs_incompressible(state, params)?;
    let hs = |f: &SpectralVectorField| std::array::from_fn(|s| sobolev_norm(f, s as u32));
    let [ru0, ru1] = ratio_pair(&state.u_hat);
    let [rb0, rb1] = ratio_pair(&state.b_hat);
    Ok(DiagnosticsRecord {
        t: state.t,
        e_kin,
        e_mag,
        dissipation: diss,
        cum_dissipation: cum,
        u_hs: hs(&state.u_hat),
        b_hs: hs(&state.b_hat),
        x: x_from_parts(state, &du),
        w_norms: compute_w(state, params).norms(),
        div_u: state.u_hat.relative_divergence(),
        div_b: state.b_hat.relative_divergence(),
        identity_residual: identity_residual(&state.b_hat),
        tail_fraction: tail_fraction(state),
        interp_ratios: [ru0, ru1, rb0, rb1],
    })
}

/// Writes the header and one row per record with 17 significant digits.
pub fn write_csv<W: Write>(mut out: W, records: &[DiagnosticsRecord]) -> std::io::Result<()> {
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for r in records {
        write_csv_row(&mut out, r)?;
    }
    Ok(())
}

pub fn write_csv_row<W: Write>(mut out: W, r: &DiagnosticsRecord) -> std::io::Result<()> {
    let row: Vec<String> = r.values().iter().map(|v| format_number(*v)).collect();
    writeln!(out, "{}", row.join(","))
}

/// `{:.16e}` (17 significant digits), so values round-trip exactly.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}
