//! Real-space and spectral field containers.

use num_complex::Complex64;

use crate::error::FieldError;
use crate::fft;
use crate::grid::Grid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn check_finite(component: usize, data: &[f64]) -> Result<(), FieldError> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(FieldError::NonFinite { component, index }),
        None => Ok(()),
    }
}

/// Real scalar samples on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            data: vec![value; grid.len()],
        }
    }

    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Result<Self, FieldError> {
        if data.len() != grid.len() {
            return Err(FieldError::GridMismatch {
                left: grid.n(),
                right: (data.len() as f64).cbrt().round() as usize,
            });
        }
        check_finite(0, &data)?;
        Ok(Self { grid, data })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        Self { grid, data }
    }

    /// Samples `f` at every node.
    pub fn sample(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Result<Self, FieldError> {
        let n = grid.n();
        let mut data = Vec::with_capacity(grid.len());
        for i2 in 0..n {
            for i1 in 0..n {
                for i0 in 0..n {
                    data.push(f(grid.position(i0, i1, i2)));
                }
            }
        }
        check_finite(0, &data)?;
        Ok(Self { grid, data })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn to_spectral(&self) -> SpectralScalar {
        SpectralScalar {
            grid: self.grid,
            data: fft::forward_real(&self.grid, &self.data),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `∫ f dx` by the (spectrally exact) rectangle rule.
    pub fn integral(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Real-space `L²` norm.
    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }
}

/// Spectral coefficients of a real scalar field.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralScalar {
    grid: Grid,
    data: Vec<Complex64>,
}

impl SpectralScalar {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            data: vec![ZERO; grid.len()],
        }
    }

    pub(crate) fn from_vec(grid: Grid, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        Self { grid, data }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn coefficient(&self, k: [i64; 3]) -> Complex64 {
        self.data[self.grid.mode_index(k)]
    }

    pub fn to_real(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            data: fft::inverse_real(&self.grid, &self.data),
        }
    }

    /// Parseval `L²` norm.
    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.volume()).sqrt()
    }

    pub fn max_coefficient(&self) -> f64 {
        self.data.iter().fold(0.0, |m, c| m.max(c.norm()))
    }
}

/// Three-component real field (u, H or B in physical space).
#[derive(Clone, Debug, PartialEq)]
pub struct RealVectorField {
    grid: Grid,
    comps: [Vec<f64>; 3],
}

impl RealVectorField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            comps: std::array::from_fn(|_| vec![0.0; grid.len()]),
        }
    }

    pub fn constant(grid: Grid, value: [f64; 3]) -> Self {
        Self {
            grid,
            comps: std::array::from_fn(|j| vec![value[j]; grid.len()]),
        }
    }

    pub fn from_components(grid: Grid, comps: [Vec<f64>; 3]) -> Result<Self, FieldError> {
        for (j, c) in comps.iter().enumerate() {
            if c.len() != grid.len() {
                return Err(FieldError::GridMismatch {
                    left: grid.n(),
                    right: (c.len() as f64).cbrt().round() as usize,
                });
            }
            check_finite(j, c)?;
        }
        Ok(Self { grid, comps })
    }

    pub(crate) fn from_components_unchecked(grid: Grid, comps: [Vec<f64>; 3]) -> Self {
        Self { grid, comps }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn component(&self, j: usize) -> &[f64] {
        &self.comps[j]
    }

    pub fn component_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.comps[j]
    }

    pub fn components(&self) -> &[Vec<f64>; 3] {
        &self.comps
    }

    pub fn into_components(self) -> [Vec<f64>; 3] {
        self.comps
    }

    pub fn at(&self, idx: usize) -> [f64; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    pub fn check_finite(&self) -> Result<(), FieldError> {
        for (j, c) in self.comps.iter().enumerate() {
            check_finite(j, c)?;
        }
        Ok(())
    }

    pub fn to_spectral(&self) -> SpectralVectorField {
        let g = self.grid;
        let mut out = fft::forward_real_many(&g, &[&self.comps[0], &self.comps[1], &self.comps[2]]);
        let c2 = out.pop().unwrap();
        let c1 = out.pop().unwrap();
        let c0 = out.pop().unwrap();
        SpectralVectorField::from_components(g, [c0, c1, c2])
    }

    /// `max_x |f(x)|` with the Euclidean norm of the vector.
    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| {
                let v = self.at(i);
                (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Real-space `Lᵖ` norm of `|f|`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = (0..self.grid.len())
            .map(|i| {
                let v = self.at(i);
                (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).powf(p / 2.0)
            })
            .sum();
        (s * self.grid.cell_volume()).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.comps.iter().flatten().map(|v| v * v).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    /// Componentwise `self - other`.
    pub fn sub(&self, other: &RealVectorField) -> Result<RealVectorField, FieldError> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            comps: std::array::from_fn(|j| self.comps[j].iter().zip(&other.comps[j]).map(|(a, b)| a - b).collect()),
        })
    }

    pub fn add_constant(&mut self, c: [f64; 3]) {
        for (comp, cj) in self.comps.iter_mut().zip(c) {
            comp.iter_mut().for_each(|v| *v += cj);
        }
    }
}

/// Samples a vector function at every node.
pub fn sample_field(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Result<RealVectorField, FieldError> {
    let n = grid.n();
    let mut comps: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(grid.len()));
    for i2 in 0..n {
        for i1 in 0..n {
            for i0 in 0..n {
                let v = f(grid.position(i0, i1, i2));
                for j in 0..3 {
                    comps[j].push(v[j]);
                }
            }
        }
    }
    RealVectorField::from_components(grid, comps)
}

/// Spectral coefficients of a real vector field.
///
/// `divergence_free` is a flag set by operators whose output is solenoidal
/// (Leray projection, curl); it is cleared by anything else.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVectorField {
    grid: Grid,
    comps: [Vec<Complex64>; 3],
    divergence_free: bool,
}

impl SpectralVectorField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            comps: std::array::from_fn(|_| vec![ZERO; grid.len()]),
            divergence_free: true,
        }
    }

    pub fn from_components(grid: Grid, comps: [Vec<Complex64>; 3]) -> Self {
        debug_assert!(comps.iter().all(|c| c.len() == grid.len()));
        Self {
            grid,
            comps,
            divergence_free: false,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn component(&self, j: usize) -> &[Complex64] {
        &self.comps[j]
    }

    pub fn component_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.comps[j]
    }

    pub fn components(&self) -> &[Vec<Complex64>; 3] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [Vec<Complex64>; 3] {
        &mut self.comps
    }

    pub fn into_components(self) -> [Vec<Complex64>; 3] {
        self.comps
    }

    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    pub fn set_divergence_free(&mut self, flag: bool) {
        self.divergence_free = flag;
    }

    pub fn with_divergence_free(mut self, flag: bool) -> Self {
        self.divergence_free = flag;
        self
    }

    pub fn coefficient(&self, k: [i64; 3]) -> [Complex64; 3] {
        let idx = self.grid.mode_index(k);
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    pub fn set_coefficient(&mut self, k: [i64; 3], v: [Complex64; 3]) {
        let idx = self.grid.mode_index(k);
        for (c, x) in self.comps.iter_mut().zip(v) {
            c[idx] = x;
        }
    }

    pub fn to_real(&self) -> RealVectorField {
        let g = self.grid;
        let mut out = fft::inverse_real_many(&g, &[&self.comps[0], &self.comps[1], &self.comps[2]]);
        let c2 = out.pop().unwrap();
        let c1 = out.pop().unwrap();
        let c0 = out.pop().unwrap();
        RealVectorField::from_components_unchecked(g, [c0, c1, c2])
    }

    /// `Σₖ |f̂(k)|²` summed over components (no volume factor).
    pub fn coefficient_energy(&self) -> f64 {
        self.comps.iter().flatten().map(|c| c.norm_sqr()).sum()
    }

    /// Parseval `L²` norm: `((2π)³ Σₖ |f̂(k)|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.coefficient_energy() * self.grid.volume()).sqrt()
    }

    pub fn max_coefficient(&self) -> f64 {
        let g = self.grid;
        (0..g.len())
            .map(|i| (self.comps[0][i].norm_sqr() + self.comps[1][i].norm_sqr() + self.comps[2][i].norm_sqr()).sqrt())
            .fold(0.0, f64::max)
    }

    /// `max_k |k·f̂(k)|` using derivative wavenumbers.
    pub fn max_divergence(&self) -> f64 {
        let g = self.grid;
        let n = g.n();
        let kd = g.derivative_wavenumbers();
        let mut m: f64 = 0.0;
        for i2 in 0..n {
            for i1 in 0..n {
                for i0 in 0..n {
                    let idx = g.index(i0, i1, i2);
                    let d = self.comps[0][idx] * kd[i0] + self.comps[1][idx] * kd[i1] + self.comps[2][idx] * kd[i2];
                    m = m.max(d.norm());
                }
            }
        }
        m
    }

    /// Divergence measure relative to the largest coefficient (0 for the zero field).
    pub fn relative_divergence(&self) -> f64 {
        let scale = self.max_coefficient();
        if scale == 0.0 {
            0.0
        } else {
            self.max_divergence() / scale
        }
    }

    /// Largest violation of `f̂(-k) = conj f̂(k)`.
    pub fn hermitian_defect(&self) -> f64 {
        let g = self.grid;
        let mut m: f64 = 0.0;
        for c in &self.comps {
            for idx in 0..g.len() {
                m = m.max((c[idx] - c[g.conjugate_index(idx)].conj()).norm());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .flatten()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralVectorField) {
        for (x, y) in self.comps.iter_mut().zip(&other.comps) {
            for (xi, yi) in x.iter_mut().zip(y) {
                *xi += yi * a;
            }
        }
        self.divergence_free &= other.divergence_free;
    }

    pub fn scale(&mut self, a: f64) {
        self.comps.iter_mut().flatten().for_each(|c| *c *= a);
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// Componentwise difference.
    pub fn sub(&self, other: &SpectralVectorField) -> Result<Self, FieldError> {
        self.grid.check_same(&other.grid)?;
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out.divergence_free = self.divergence_free && other.divergence_free;
        Ok(out)
    }

    pub fn add(&self, other: &SpectralVectorField) -> Result<Self, FieldError> {
        self.grid.check_same(&other.grid)?;
        let mut out = self.clone();
        out.axpy(1.0, other);
        Ok(out)
    }

    /// Mean value (the `k = 0` coefficient) of each component.
    pub fn mean(&self) -> [f64; 3] {
        [self.comps[0][0].re, self.comps[1][0].re, self.comps[2][0].re]
    }

    /// Maximum coefficient difference relative to the larger operand's maximum.
    pub fn relative_difference(&self, other: &SpectralVectorField) -> f64 {
        let scale = self.max_coefficient().max(other.max_coefficient());
        let mut m: f64 = 0.0;
        for (x, y) in self.comps.iter().zip(&other.comps) {
            for (a, b) in x.iter().zip(y) {
                m = m.max((a - b).norm());
            }
        }
        if scale == 0.0 {
            m
        } else {
            m / scale
        }
    }
}
