//! Differential and projection operators in spectral space, plus the
//! pseudo-spectral evaluation of products.
//!
//! All derivatives multiply by `i·k` with the Nyquist wavenumber set to zero,
//! which keeps every output Hermitian. Operators are pure and single-threaded,
//! so results are bitwise reproducible.

use num_complex::Complex64;

use crate::error::FieldError;
use crate::fft;
use crate::field::{RealVectorField, ScalarField, SpectralScalar, SpectralVectorField};
use crate::grid::Grid;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
    X3,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X1, Axis::X2, Axis::X3];

    pub fn index(self) -> usize {
        match self {
            Axis::X1 => 0,
            Axis::X2 => 1,
            Axis::X3 => 2,
        }
    }
}

/// Visits every mode with its derivative wavenumber vector.
#[inline]
pub(crate) fn for_each_mode(grid: &Grid, mut f: impl FnMut(usize, [f64; 3])) {
    let n = grid.n();
    let kd = grid.derivative_wavenumbers();
    let mut idx = 0;
    for &k2 in &kd {
        for &k1 in &kd {
            for &k0 in &kd {
                f(idx, [k0, k1, k2]);
                idx += 1;
            }
        }
    }
    debug_assert_eq!(idx, n * n * n);
}

pub fn derivative_scalar(f: &SpectralScalar, axis: Axis) -> SpectralScalar {
    let g = f.grid();
    let a = axis.index();
    let src = f.data();
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    for_each_mode(&g, |idx, k| out[idx] = I * k[a] * src[idx]);
    SpectralScalar::from_vec(g, out)
}

/// `∂f/∂x_axis` applied to every component.
pub fn derivative(f: &SpectralVectorField, axis: Axis) -> SpectralVectorField {
    let g = f.grid();
    let a = axis.index();
    let mut out = SpectralVectorField::zeros(g);
    for j in 0..3 {
        let src = f.component(j);
        let dst = out.component_mut(j);
        for_each_mode(&g, |idx, k| dst[idx] = I * k[a] * src[idx]);
    }
    out.with_divergence_free(f.is_divergence_free())
}

pub fn gradient(f: &SpectralScalar) -> SpectralVectorField {
    let g = f.grid();
    let src = f.data();
    let mut comps: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); g.len()]);
    for_each_mode(&g, |idx, k| {
        for j in 0..3 {
            comps[j][idx] = I * k[j] * src[idx];
        }
    });
    SpectralVectorField::from_components(g, comps)
}

/// `ik × f̂(k)`; the result is flagged divergence-free.
pub fn curl(f: &SpectralVectorField) -> SpectralVectorField {
    let g = f.grid();
    let [a, b, c] = f.components();
    let mut comps: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); g.len()]);
    for_each_mode(&g, |idx, k| {
        let (x, y, z) = (a[idx], b[idx], c[idx]);
        comps[0][idx] = I * (k[1] * z - k[2] * y);
        comps[1][idx] = I * (k[2] * x - k[0] * z);
        comps[2][idx] = I * (k[0] * y - k[1] * x);
    });
    SpectralVectorField::from_components(g, comps).with_divergence_free(true)
}

/// `Σⱼ i kⱼ f̂ʲ(k)`.
pub fn divergence(f: &SpectralVectorField) -> SpectralScalar {
    let g = f.grid();
    let [a, b, c] = f.components();
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    for_each_mode(&g, |idx, k| {
        out[idx] = I * (a[idx] * k[0] + b[idx] * k[1] + c[idx] * k[2]);
    });
    SpectralScalar::from_vec(g, out)
}

/// `-|k|² f̂(k)` per component.
pub fn laplacian(f: &SpectralVectorField) -> SpectralVectorField {
    let g = f.grid();
    let mut out = SpectralVectorField::zeros(g);
    for j in 0..3 {
        let src = f.component(j);
        let dst = out.component_mut(j);
        for_each_mode(&g, |idx, k| {
            dst[idx] = -src[idx] * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
        });
    }
    out.with_divergence_free(f.is_divergence_free())
}

pub fn laplacian_scalar(f: &SpectralScalar) -> SpectralScalar {
    let g = f.grid();
    let src = f.data();
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    for_each_mode(&g, |idx, k| {
        out[idx] = -src[idx] * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
    });
    SpectralScalar::from_vec(g, out)
}

/// Leray projection in place: `f̂ ← f̂ − k(k·f̂)/|k|²` for `k ≠ 0`.
pub fn leray_project_in_place(f: &mut SpectralVectorField) {
    let g = f.grid();
    let [a, b, c] = f.components_mut();
    for_each_mode(&g, |idx, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            return;
        }
        let dot = (a[idx] * k[0] + b[idx] * k[1] + c[idx] * k[2]) / k2;
        a[idx] -= dot * k[0];
        b[idx] -= dot * k[1];
        c[idx] -= dot * k[2];
    });
    f.set_divergence_free(true);
}

pub fn leray_project(f: &SpectralVectorField) -> SpectralVectorField {
    let mut out = f.clone();
    leray_project_in_place(&mut out);
    out
}

pub fn dealias_scalar_in_place(grid: &Grid, data: &mut [Complex64]) {
    let n = grid.n();
    let zero = Complex64::new(0.0, 0.0);
    // Kept indices along one axis form 0..lo and hi..n.
    let keep = |i: usize| grid.dealias_keep(i, 0, 0);
    let lo = (0..n).take_while(|&i| keep(i)).count();
    let hi = n - (0..n).rev().take_while(|&i| keep(i)).count();
    for (r, row) in data.chunks_exact_mut(n).enumerate() {
        let (i1, i2) = (r % n, r / n);
        if (lo..hi).contains(&i1) || (lo..hi).contains(&i2) {
            row.fill(zero);
        } else {
            row[lo..hi].fill(zero);
        }
    }
}

/// Two-thirds rule in place: zero every mode with `3|kⱼ| ≥ n` on some axis.
pub fn dealias_in_place(f: &mut SpectralVectorField) {
    let g = f.grid();
    for j in 0..3 {
        dealias_scalar_in_place(&g, f.component_mut(j));
    }
}

pub fn dealias_two_thirds(f: &SpectralVectorField) -> SpectralVectorField {
    let mut out = f.clone();
    dealias_in_place(&mut out);
    out
}

/// Pointwise products in physical space.
pub trait Pointwise: Sized {
    fn multiply_pointwise(&self, other: &Self) -> Result<Self, FieldError>;
}

impl Pointwise for ScalarField {
    fn multiply_pointwise(&self, other: &Self) -> Result<Self, FieldError> {
        self.grid().check_same(&other.grid())?;
        let data = self.data().iter().zip(other.data()).map(|(a, b)| a * b).collect();
        Ok(ScalarField::from_vec_unchecked(self.grid(), data))
    }
}

impl Pointwise for RealVectorField {
    fn multiply_pointwise(&self, other: &Self) -> Result<Self, FieldError> {
        self.grid().check_same(&other.grid())?;
        let comps = std::array::from_fn(|j| {
            self.component(j)
                .iter()
                .zip(other.component(j))
                .map(|(a, b)| a * b)
                .collect()
        });
        Ok(RealVectorField::from_components_unchecked(self.grid(), comps))
    }
}

pub fn multiply_pointwise<T: Pointwise>(f: &T, g: &T) -> Result<T, FieldError> {
    f.multiply_pointwise(g)
}

/// Pointwise `a × b` in physical space.
pub fn cross_real(a: &RealVectorField, b: &RealVectorField) -> Result<RealVectorField, FieldError> {
    a.grid().check_same(&b.grid())?;
    let [a0, a1, a2] = a.components();
    let [b0, b1, b2] = b.components();
    let len = a.grid().len();
    let mut c: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; len]);
    for i in 0..len {
        c[0][i] = a1[i] * b2[i] - a2[i] * b1[i];
        c[1][i] = a2[i] * b0[i] - a0[i] * b2[i];
        c[2][i] = a0[i] * b1[i] - a1[i] * b0[i];
    }
    Ok(RealVectorField::from_components_unchecked(a.grid(), c))
}

/// Pointwise `a·b` in physical space.
pub fn dot_real(a: &RealVectorField, b: &RealVectorField) -> Result<ScalarField, FieldError> {
    a.grid().check_same(&b.grid())?;
    let data = (0..a.grid().len())
        .map(|i| {
            let x = a.at(i);
            let y = b.at(i);
            x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
        })
        .collect();
    Ok(ScalarField::from_vec_unchecked(a.grid(), data))
}

/// `f̂ × c` for a constant vector `c` (linear, applied mode by mode).
pub fn cross_constant(f: &SpectralVectorField, c: [f64; 3]) -> SpectralVectorField {
    let [a, b, d] = f.components();
    let comps = [
        a.iter()
            .zip(b)
            .zip(d)
            .map(|((_, &y), &z)| y * c[2] - z * c[1])
            .collect(),
        a.iter().zip(d).map(|(&x, &z)| z * c[0] - x * c[2]).collect(),
        a.iter().zip(b).map(|(&x, &y)| x * c[1] - y * c[0]).collect(),
    ];
    SpectralVectorField::from_components(f.grid(), comps)
}

/// `(c·∇) f` for a constant vector `c`.
pub fn directional_derivative(f: &SpectralVectorField, c: [f64; 3]) -> SpectralVectorField {
    let g = f.grid();
    let mut out = SpectralVectorField::zeros(g);
    for j in 0..3 {
        let src = f.component(j);
        let dst = out.component_mut(j);
        for_each_mode(&g, |idx, k| {
            dst[idx] = I * (k[0] * c[0] + k[1] * c[1] + k[2] * c[2]) * src[idx];
        });
    }
    out.with_divergence_free(f.is_divergence_free())
}

/// Forward transform of a real vector field, optionally dealiased.
pub fn to_spectral_dealiased(f: &RealVectorField, dealias: bool) -> SpectralVectorField {
    let mut s = f.to_spectral();
    if dealias {
        dealias_in_place(&mut s);
    }
    s
}

/// `â × b̂` evaluated pseudo-spectrally.
pub fn cross_product(
    a: &SpectralVectorField,
    b: &SpectralVectorField,
    dealias: bool,
) -> Result<SpectralVectorField, FieldError> {
    let prod = cross_real(&a.to_real(), &b.to_real())?;
    Ok(to_spectral_dealiased(&prod, dealias))
}

/// `(a·∇)b` evaluated pseudo-spectrally from the nine velocity gradients.
pub fn advective_derivative(
    a: &SpectralVectorField,
    b: &SpectralVectorField,
    dealias: bool,
) -> Result<SpectralVectorField, FieldError> {
    let g = a.grid();
    g.check_same(&b.grid())?;
    let a_real = a.to_real();
    let grads: Vec<RealVectorField> = Axis::ALL.iter().map(|&ax| derivative(b, ax).to_real()).collect();
    let len = g.len();
    let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; len]);
    for (axis, grad) in grads.iter().enumerate() {
        let ai = a_real.component(axis);
        for (o, dj) in out.iter_mut().zip(grad.components()) {
            for ((o, a), d) in o.iter_mut().zip(ai).zip(dj) {
                *o += a * d;
            }
        }
    }
    let real = RealVectorField::from_components_unchecked(g, out);
    Ok(to_spectral_dealiased(&real, dealias))
}

/// Spectral coefficients of a real scalar, optionally dealiased.
pub fn scalar_to_spectral(f: &ScalarField, dealias: bool) -> SpectralScalar {
    let g = f.grid();
    let mut data = fft::forward_real(&g, f.data());
    if dealias {
        dealias_scalar_in_place(&g, &mut data);
    }
    SpectralScalar::from_vec(g, data)
}
