//! Three-dimensional FFTs on the periodic grid.
//!
//! Normalization convention (used everywhere in the crate):
//!
//! ```text
//! f̂(k) = N⁻³ Σₓ f(x) e^{-ik·x},      f(x) = Σₖ f̂(k) e^{ik·x}
//! ```
//!
//! so a mode `a e^{ik·x} + c.c.` has coefficients `a` at `k` and `ā` at `-k`,
//! and Parseval reads `∫|f|² dx = (2π)³ Σₖ |f̂(k)|²`.
//!
//! Real fields are transformed two at a time by packing them into the real
//! and imaginary parts of one complex array.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

fn transform(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let n = grid.n();
    assert_eq!(data.len(), grid.len());
    let p = plans(n);
    let fft = if inverse { &p.inverse } else { &p.forward };
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut work = vec![Complex64::new(0.0, 0.0); data.len()];
    let nn = n * n;

    // x₁ lines are contiguous.
    fft.process_with_scratch(data, &mut scratch);

    // x₂ lines: swap the two fastest axes, transform, swap back.
    for (src, dst) in data.chunks_exact(nn).zip(work.chunks_exact_mut(nn)) {
        transpose::transpose(src, dst, n, n);
    }
    fft.process_with_scratch(&mut work, &mut scratch);
    for (src, dst) in work.chunks_exact(nn).zip(data.chunks_exact_mut(nn)) {
        transpose::transpose(src, dst, n, n);
    }

    // x₃ lines: view the array as n rows (x₃) of n² entries and transpose.
    transpose::transpose(data, &mut work, nn, n);
    fft.process_with_scratch(&mut work, &mut scratch);
    transpose::transpose(&work, data, n, nn);
}

/// Storage indices of `-k` for every mode, in storage order.
fn conjugate_indices(grid: &Grid) -> Arc<Vec<usize>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<usize>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(grid.n())
        .or_insert_with(|| Arc::new((0..grid.len()).map(|i| grid.conjugate_index(i)).collect()))
        .clone()
}

/// Normalized forward transform of complex samples, in place.
pub fn forward_complex(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, false);
    let s = 1.0 / grid.len() as f64;
    for v in data.iter_mut() {
        *v *= s;
    }
}

/// Inverse transform (synthesis `Σₖ f̂(k)e^{ik·x}`), in place.
pub fn inverse_complex(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, true);
}

/// Spectral coefficients of one real field.
pub fn forward_real(grid: &Grid, f: &[f64]) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward_complex(grid, &mut c);
    c
}

/// Spectral coefficients of two real fields with a single complex transform.
pub fn forward_real_pair(grid: &Grid, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut c: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
    forward_complex(grid, &mut c);
    let conj = conjugate_indices(grid);
    conj.iter()
        .zip(&c)
        .map(|(&m, &ck)| {
            let cm = c[m].conj();
            // (ck - cm) / 2i
            let d = (ck - cm) * 0.5;
            ((ck + cm) * 0.5, Complex64::new(d.im, -d.re))
        })
        .unzip()
}

/// Real samples of a Hermitian spectral field.
pub fn inverse_real(grid: &Grid, f: &[Complex64]) -> Vec<f64> {
    let mut c = f.to_vec();
    inverse_complex(grid, &mut c);
    c.into_iter().map(|z| z.re).collect()
}

/// Real samples of two Hermitian spectral fields with one complex transform.
pub fn inverse_real_pair(grid: &Grid, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let i = Complex64::new(0.0, 1.0);
    let mut c: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| x + i * y).collect();
    inverse_complex(grid, &mut c);
    c.into_iter().map(|z| (z.re, z.im)).unzip()
}

/// Forward transforms of a batch of real fields, pairing them up.
pub fn forward_real_many(grid: &Grid, fields: &[&[f64]]) -> Vec<Vec<Complex64>> {
    let mut out = Vec::with_capacity(fields.len());
    for chunk in fields.chunks(2) {
        match chunk {
            [a, b] => {
                let (fa, fb) = forward_real_pair(grid, a, b);
                out.push(fa);
                out.push(fb);
            }
            [a] => out.push(forward_real(grid, a)),
            _ => unreachable!(),
        }
    }
    out
}

/// Inverse transforms of a batch of Hermitian spectral fields.
pub fn inverse_real_many(grid: &Grid, fields: &[&[Complex64]]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(fields.len());
    for chunk in fields.chunks(2) {
        match chunk {
            [a, b] => {
                let (fa, fb) = inverse_real_pair(grid, a, b);
                out.push(fa);
                out.push(fb);
            }
            [a] => out.push(inverse_real(grid, a)),
            _ => unreachable!(),
        }
    }
    out
}
