//! Binary field snapshots.
//!
//! Layout, all integers and floats little-endian:
//!
//! | offset | size | content                          |
//! |--------|------|----------------------------------|
//! | 0      | 4    | magic `b"MHD0"`                  |
//! | 4      | 4    | format version (`u32`, = 1)      |
//! | 8      | 4    | grid size `n` (`u32`)            |
//! | 12     | 4    | component count `c` (`u32`)      |
//! | 16     | 8    | time `t` (`f64`)                 |
//! | 24     | 8n³c | components, each `n³` `f64` samples with `x₁` fastest |
//!
//! Incompressible states store 6 components `u₁ u₂ u₃ B₁ B₂ B₃` (the
//! perturbation `B = H − H̃`). Compressible states store 7 components
//! `u₁ u₂ u₃ H₁ H₂ H₃ ρ` (the full magnetic field).

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::compressible::CompressibleState;
use crate::error::IoError;
use crate::field::{RealVectorField, ScalarField};
use crate::grid::Grid;
use crate::incompressible::SimState;
use crate::spectral::leray_project;

pub const MAGIC: [u8; 4] = *b"MHD0";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 24;
pub const INCOMPRESSIBLE_COMPONENTS: usize = 6;
pub const COMPRESSIBLE_COMPONENTS: usize = 7;

/// Real-space samples of a state at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    grid: Grid,
    pub t: f64,
    components: Vec<Vec<f64>>,
}

impl Snapshot {
    /// Every component must hold `grid.len()` samples.
    pub fn new(grid: Grid, t: f64, components: Vec<Vec<f64>>) -> Result<Self, IoError> {
        if let Some(bad) = components.iter().position(|c| c.len() != grid.len()) {
            return Err(IoError::Malformed(format!(
                "component {bad} has {} samples, expected {}",
                components[bad].len(),
                grid.len()
            )));
        }
        Ok(Self { grid, t, components })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn from_incompressible(state: &SimState) -> Self {
        let u = state.u_hat.to_real().into_components();
        let b = state.b_hat.to_real().into_components();
        Self {
            grid: state.grid(),
            t: state.t,
            components: u.into_iter().chain(b).collect(),
        }
    }

    pub fn from_compressible(state: &CompressibleState) -> Self {
        let u = state.u.components().iter().cloned();
        let h = state.h_hat.to_real().into_components();
        Self {
            grid: state.grid(),
            t: state.t,
            components: u.chain(h).chain([state.rho.data().to_vec()]).collect(),
        }
    }

    fn expect_components(&self, count: usize) -> Result<(), IoError> {
        if self.components.len() != count {
            return Err(IoError::Malformed(format!(
                "expected {count} components, found {}",
                self.components.len()
            )));
        }
        Ok(())
    }

    fn vector(&self, first: usize) -> Result<RealVectorField, IoError> {
        let comps = std::array::from_fn(|j| self.components[first + j].clone());
        Ok(RealVectorField::from_components(self.grid, comps)?)
    }

    /// Spectral state with both fields projected onto divergence-free modes.
    pub fn to_incompressible(&self) -> Result<SimState, IoError> {
        self.expect_components(INCOMPRESSIBLE_COMPONENTS)?;
        let u = leray_project(&self.vector(0)?.to_spectral());
        let b = leray_project(&self.vector(3)?.to_spectral());
        Ok(SimState::new(self.t, u, b)?)
    }

    pub fn to_compressible(&self) -> Result<CompressibleState, IoError> {
        self.expect_components(COMPRESSIBLE_COMPONENTS)?;
        Ok(CompressibleState {
            t: self.t,
            u: self.vector(0)?,
            h_hat: leray_project(&self.vector(3)?.to_spectral()),
            rho: ScalarField::from_vec(self.grid, self.components[6].clone())?,
        })
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<(), IoError> {
        let mut header = Vec::with_capacity(HEADER_LEN);
        header.extend_from_slice(&MAGIC);
        header.extend_from_slice(&VERSION.to_le_bytes());
        header.extend_from_slice(&(self.grid.n() as u32).to_le_bytes());
        header.extend_from_slice(&(self.components.len() as u32).to_le_bytes());
        header.extend_from_slice(&self.t.to_le_bytes());
        out.write_all(&header)?;
        let mut buf = Vec::with_capacity(8 * self.grid.len());
        for c in &self.components {
            buf.clear();
            buf.extend(c.iter().flat_map(|v| v.to_le_bytes()));
            out.write_all(&buf)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self, IoError> {
        let mut header = [0u8; HEADER_LEN];
        input.read_exact(&mut header).map_err(truncated)?;
        let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
        let magic: [u8; 4] = header[0..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(IoError::BadMagic(magic));
        }
        if word(4) != VERSION {
            return Err(IoError::UnsupportedVersion(word(4)));
        }
        let grid = Grid::new(word(8) as usize)?;
        let count = word(12) as usize;
        if count > 64 {
            return Err(IoError::Malformed(format!("implausible component count {count}")));
        }
        let t = f64::from_le_bytes(header[16..24].try_into().unwrap());
        let mut bytes = vec![0u8; 8 * grid.len()];
        let mut components = Vec::with_capacity(count);
        for _ in 0..count {
            input.read_exact(&mut bytes).map_err(truncated)?;
            components.push(
                bytes
                    .chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                    .collect(),
            );
        }
        let mut rest = [0u8; 1];
        if input.read(&mut rest)? != 0 {
            return Err(IoError::Malformed("trailing bytes after last component".into()));
        }
        Ok(Self { grid, t, components })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.grid.len() * self.components.len());
        self.write_to(&mut out).expect("writing to memory cannot fail");
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IoError> {
        let file = fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IoError> {
        let file = fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

fn truncated(e: std::io::Error) -> IoError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        IoError::Malformed("file is truncated".into())
    } else {
        IoError::Io(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Preset;

    fn state() -> SimState {
        Preset::TaylorGreenMhd {
            u_amplitude: 0.3,
            b_amplitude: 0.2,
        }
        .build(Grid::new(8).unwrap())
        .unwrap()
    }

    #[test]
    fn header_layout() {
        let snap = Snapshot::from_incompressible(&SimState { t: 1.5, ..state() });
        let bytes = snap.to_bytes();
        assert_eq!(&bytes[0..4], b"MHD0");
        assert_eq!(bytes[4..8], 1u32.to_le_bytes());
        assert_eq!(bytes[8..12], 8u32.to_le_bytes());
        assert_eq!(bytes[12..16], 6u32.to_le_bytes());
        assert_eq!(bytes[16..24], 1.5f64.to_le_bytes());
        assert_eq!(bytes.len(), 24 + 6 * 8 * 512);
        // first sample of u₁ then the sample one step along x₁
        let u1 = &snap.components()[0];
        assert_eq!(bytes[24..32], u1[0].to_le_bytes());
        assert_eq!(bytes[32..40], u1[1].to_le_bytes());
    }

    #[test]
    fn bytes_round_trip_exactly() {
        let bytes = Snapshot::from_incompressible(&state()).to_bytes();
        let again = Snapshot::read_from(bytes.as_slice()).unwrap().to_bytes();
        assert_eq!(bytes, again);
    }

    #[test]
    fn state_round_trip() {
        let s = state();
        let back = Snapshot::from_incompressible(&s).to_incompressible().unwrap();
        assert!(back.u_hat.relative_difference(&s.u_hat) < 1e-14);
        assert!(back.b_hat.relative_difference(&s.b_hat) < 1e-14);
        assert_eq!(back.t, s.t);
    }

    #[test]
    fn rejects_bad_input() {
        let mut bytes = Snapshot::from_incompressible(&state()).to_bytes();
        assert!(matches!(
            Snapshot::read_from(&bytes[..bytes.len() - 1]),
            Err(IoError::Malformed(_))
        ));
        bytes[4] = 9;
        assert!(matches!(
            Snapshot::read_from(bytes.as_slice()),
            Err(IoError::UnsupportedVersion(9))
        ));
        bytes[0] = b'X';
        assert!(matches!(
            Snapshot::read_from(bytes.as_slice()),
            Err(IoError::BadMagic(_))
        ));
        let snap = Snapshot::from_incompressible(&state());
        assert!(snap.to_compressible().is_err());
    }
}
