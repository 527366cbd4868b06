//! Periodic box `[0, 2π)³` sampled on `n³` nodes.
//!
//! Flat indices are x₁-fastest: `idx = i0 + n·(i1 + n·i2)`. The same layout
//! is used for real samples, spectral coefficients and the snapshot format.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::FieldError;

pub const BOX_LENGTH: f64 = 2.0 * PI;

/// Cubic periodic grid with `n` points per dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self, FieldError> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(FieldError::InvalidResolution(n));
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of nodes, `n³`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        BOX_LENGTH
    }

    pub fn dx(&self) -> f64 {
        BOX_LENGTH / self.n as f64
    }

    /// Volume element of one cell, `dx³`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(3)
    }

    /// Box volume `(2π)³`.
    pub fn volume(&self) -> f64 {
        BOX_LENGTH.powi(3)
    }

    /// Signed wavenumber of index `i` along one axis, in `{-n/2, …, n/2-1}`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Wavenumber used by differential operators: the Nyquist index maps to 0.
    #[inline]
    pub fn derivative_wavenumber(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            self.wavenumber(i) as f64
        }
    }

    /// Per-axis wavenumbers in storage order.
    pub fn wavenumbers(&self) -> Vec<i64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    pub(crate) fn derivative_wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.derivative_wavenumber(i)).collect()
    }

    #[inline]
    pub fn index(&self, i0: usize, i1: usize, i2: usize) -> usize {
        i0 + self.n * (i1 + self.n * i2)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx % n, (idx / n) % n, idx / (n * n))
    }

    /// Storage index of wavenumber triple `k` (taken modulo `n`).
    pub fn mode_index(&self, k: [i64; 3]) -> usize {
        let n = self.n as i64;
        let w = |c: i64| c.rem_euclid(n) as usize;
        self.index(w(k[0]), w(k[1]), w(k[2]))
    }

    /// Wavenumber triple stored at `idx`.
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        let (a, b, c) = self.coords(idx);
        [self.wavenumber(a), self.wavenumber(b), self.wavenumber(c)]
    }

    /// Storage index of `-k` for the mode stored at `idx`.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let n = self.n;
        let (a, b, c) = self.coords(idx);
        self.index((n - a) % n, (n - b) % n, (n - c) % n)
    }

    /// Physical coordinates of node `(i0, i1, i2)`.
    pub fn position(&self, i0: usize, i1: usize, i2: usize) -> [f64; 3] {
        let dx = self.dx();
        [i0 as f64 * dx, i1 as f64 * dx, i2 as f64 * dx]
    }

    /// True when a mode survives the two-thirds rule (`3|kⱼ| < n` on every axis).
    #[inline]
    pub fn dealias_keep(&self, i0: usize, i1: usize, i2: usize) -> bool {
        let n = self.n as i64;
        let ok = |i: usize| 3 * self.wavenumber(i).abs() < n;
        ok(i0) && ok(i1) && ok(i2)
    }

    /// True when the mode lies in the top third of any axis (the tail band).
    pub fn in_tail(&self, idx: usize) -> bool {
        let (a, b, c) = self.coords(idx);
        !self.dealias_keep(a, b, c)
    }

    pub fn check_same(&self, other: &Grid) -> Result<(), FieldError> {
        if self.n != other.n {
            return Err(FieldError::GridMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid() {
        let g = Grid::new(4).unwrap();
        assert_eq!(g.wavenumbers(), vec![0, 1, -2, -1]);
        assert!((g.dx() - PI / 2.0).abs() < 1e-15);
        assert_eq!(g.len(), 64);
    }

    #[test]
    fn n32() {
        let g = Grid::new(32).unwrap();
        assert_eq!(g.len(), 32 * 32 * 32);
        assert_eq!(g.dx(), 2.0 * PI / 32.0);
        assert_eq!(g.dx() * 32.0, BOX_LENGTH);
    }

    #[test]
    fn rejects_bad_resolution() {
        assert_eq!(Grid::new(5), Err(FieldError::InvalidResolution(5)));
        assert_eq!(Grid::new(2), Err(FieldError::InvalidResolution(2)));
        assert_eq!(Grid::new(0), Err(FieldError::InvalidResolution(0)));
    }

    #[test]
    fn wavenumbers_symmetric_except_nyquist() {
        let g = Grid::new(8).unwrap();
        let ks = g.wavenumbers();
        for &k in &ks {
            if k != -4 {
                assert!(ks.contains(&-k));
            }
        }
        assert!(!ks.contains(&4));
    }

    #[test]
    fn mode_index_roundtrip() {
        let g = Grid::new(8).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.mode_index(g.mode(idx)), idx);
            let m = g.mode(idx);
            assert_eq!(g.conjugate_index(idx), g.mode_index([-m[0], -m[1], -m[2]]));
        }
    }

    #[test]
    fn two_thirds_rule_n32() {
        let g = Grid::new(32).unwrap();
        assert!(!g.dealias_keep(11, 0, 0));
        assert!(g.dealias_keep(10, 0, 0));
        assert!(g.dealias_keep(32 - 10, 0, 0));
        assert!(!g.dealias_keep(32 - 11, 0, 0));
    }
}
