//! Mach-number sweeps comparing compressible runs against the incompressible
//! solution started from the same `(u₀, H₀)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::compressible::{
    cfl_limit, run_compressible, well_prepared_init, CompressibleParams, CompressibleRecord, Preparation,
};
use crate::diagnostics::{format_number, DiagnosticsRecord};
use crate::error::SolverError;
use crate::field::{RealVectorField, ScalarField};
use crate::grid::Grid;
use crate::incompressible::{run, SimState, SolverParams};
use crate::presets::Preset;

/// Fraction of the compressible step limit used for each compressible run.
pub const CFL_SAFETY: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Strictly decreasing Mach numbers in `(0, 1]`.
    pub eps_list: Vec<f64>,
    /// Comparison time.
    pub t_end: f64,
    pub n: usize,
    /// Shared incompressible data `(u₀, H₀ − H̃)`.
    pub initial: Preset,
    pub preparation: Preparation,
    /// Reference run; its `t_end` is replaced by the sweep's.
    pub incompressible: SolverParams,
    /// Template for each ε; `eps`, `t_end` and `h_tilde` are overridden and
    /// `dt` is capped by the acoustic CFL limit.
    pub compressible: CompressibleParams,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            eps_list: vec![0.2, 0.1, 0.05],
            t_end: 0.5,
            n: 32,
            initial: Preset::TaylorGreenMhd {
                u_amplitude: 0.1,
                b_amplitude: 0.1,
            },
            preparation: Preparation::default(),
            incompressible: SolverParams {
                dt: 1e-2,
                ..SolverParams::default()
            },
            compressible: CompressibleParams {
                dt: 1e-2,
                ..CompressibleParams::default()
            },
        }
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> SolverError {
    SolverError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.eps_list.is_empty() {
            return Err(invalid("eps_list", "must not be empty"));
        }
        if self.eps_list.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(invalid("eps_list", "values must lie in (0, 1]"));
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("eps_list", "must be strictly decreasing"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(invalid("t_end", format!("must be >= 0, got {}", self.t_end)));
        }
        Grid::new(self.n)?;
        self.incompressible.validate()?;
        let mut c = self.compressible.clone();
        c.eps = self.eps_list[0];
        c.validate()?;
        // The incompressible system is written for unit density and viscosity λ.
        if self.compressible.rho_tilde != 1.0 {
            return Err(invalid(
                "rho_tilde",
                "the incompressible reference assumes rho_tilde = 1",
            ));
        }
        if self.compressible.mu != self.incompressible.lambda {
            return Err(invalid(
                "mu",
                format!(
                    "must equal the incompressible viscosity {} (got {})",
                    self.incompressible.lambda, self.compressible.mu
                ),
            ));
        }
        Ok(())
    }

    fn reference_params(&self) -> SolverParams {
        SolverParams {
            t_end: self.t_end,
            ..self.incompressible.clone()
        }
    }

    fn params_for(&self, eps: f64) -> CompressibleParams {
        CompressibleParams {
            eps,
            t_end: self.t_end,
            h_tilde: self.incompressible.h_tilde,
            ..self.compressible.clone()
        }
    }
}

/// Errors of one compressible run against the reference at the comparison time.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub e_u: f64,
    pub e_h: f64,
    pub e_rho: f64,
    /// Compressible over incompressible total energy at the comparison time.
    pub energy_ratio: f64,
    pub dt: f64,
    pub records: Vec<CompressibleRecord>,
}

/// `log(e(ε₁)/e(ε₂)) / log(ε₁/ε₂)` between consecutive rows (`log₂` for halvings).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ObservedOrder {
    Rate(f64),
    /// Both errors are zero.
    ExactMatch,
}

impl std::fmt::Display for ObservedOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ObservedOrder::Rate(r) => write!(f, "{}", format_number(*r)),
            ObservedOrder::ExactMatch => write!(f, "exact"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairOrders {
    pub u: ObservedOrder,
    pub h: ObservedOrder,
    pub rho: ObservedOrder,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub reference: Vec<DiagnosticsRecord>,
}

impl SweepResult {
    pub fn orders(&self) -> Vec<PairOrders> {
        observed_order(&self.rows)
    }
}

/// A sweep aborted by a solver failure; completed rows are kept.
#[derive(Clone, Debug)]
pub struct SweepFailure {
    pub error: SolverError,
    pub eps: Option<f64>,
    pub rows: Vec<SweepRow>,
}

impl std::fmt::Display for SweepFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.eps {
            Some(e) => write!(f, "sweep failed at eps = {e}: {}", self.error),
            None => write!(f, "sweep failed in the reference run: {}", self.error),
        }
    }
}

impl std::error::Error for SweepFailure {}

fn rate(e1: f64, e2: f64, eps1: f64, eps2: f64) -> ObservedOrder {
    if e1 == 0.0 && e2 == 0.0 {
        ObservedOrder::ExactMatch
    } else {
        ObservedOrder::Rate((e1 / e2).ln() / (eps1 / eps2).ln())
    }
}

pub fn observed_order(rows: &[SweepRow]) -> Vec<PairOrders> {
    rows.windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            PairOrders {
                u: rate(a.e_u, b.e_u, a.eps, b.eps),
                h: rate(a.e_h, b.e_h, a.eps, b.eps),
                rho: rate(a.e_rho, b.e_rho, a.eps, b.eps),
            }
        })
        .collect()
}

/// Shared data: incompressible state plus the physical `(u₀, H₀)`.
fn shared_data(cfg: &SweepConfig) -> Result<(SimState, RealVectorField, RealVectorField), SolverError> {
    let g = Grid::new(cfg.n)?;
    let s = cfg.initial.build(g)?;
    let u0 = s.u_hat.to_real();
    let mut h0 = s.b_hat.to_real();
    h0.add_constant(cfg.incompressible.h_tilde);
    Ok((s, u0, h0))
}

fn compare(
    cfg: &SweepConfig,
    eps: f64,
    u0: &RealVectorField,
    h0: &RealVectorField,
    reference: &SimState,
) -> Result<SweepRow, SolverError> {
    let mut params = cfg.params_for(eps);
    let init = well_prepared_init(u0, h0, eps, params.rho_tilde, &cfg.preparation)?;
    params.dt = params.dt.min(CFL_SAFETY * cfl_limit(&init, &params));
    let tr = run_compressible(init, &params).map_err(|f| f.error)?;
    let fin = &tr.final_state;

    let e_u = fin.u.to_spectral().sub(&reference.u_hat)?.l2_norm();
    let mut h_ref = reference.b_hat.clone();
    for j in 0..3 {
        h_ref.component_mut(j)[0] += params.h_tilde[j];
    }
    let e_h = fin.h_hat.sub(&h_ref)?.l2_norm();
    let dev = fin.rho.data().iter().map(|r| r - params.rho_tilde).collect();
    let e_rho = ScalarField::from_vec(fin.rho.grid(), dev)?.l2_norm();

    let last = tr.records.last().expect("run records its final state");
    let (ek, em) = crate::diagnostics::energy(reference);
    let reference_energy = ek + em;
    let energy_ratio = (last.e_kin + last.e_mag) / reference_energy;
    Ok(SweepRow {
        eps,
        e_u,
        e_h,
        e_rho,
        energy_ratio,
        dt: tr.dt,
        records: tr.records,
    })
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult, Box<SweepFailure>> {
    run_sweep_threaded(cfg, 1)
}

/// Runs the ε values on up to `threads` worker threads. Results do not depend
/// on the thread count.
pub fn run_sweep_threaded(cfg: &SweepConfig, threads: usize) -> Result<SweepResult, Box<SweepFailure>> {
    let fail = |error, eps, rows: Vec<SweepRow>| Box::new(SweepFailure { error, eps, rows });
    cfg.validate().map_err(|e| fail(e, None, Vec::new()))?;
    let (state, u0, h0) = shared_data(cfg).map_err(|e| fail(e, None, Vec::new()))?;
    let reference = run(state, &cfg.reference_params()).map_err(|f| fail(f.error, None, Vec::new()))?;
    let fin = &reference.final_state;

    let threads = threads.clamp(1, cfg.eps_list.len());
    let results: Vec<Result<SweepRow, SolverError>> = if threads == 1 {
        cfg.eps_list.iter().map(|&e| compare(cfg, e, &u0, &h0, fin)).collect()
    } else {
        let mut slots: Vec<Option<Result<SweepRow, SolverError>>> = vec![None; cfg.eps_list.len()];
        std::thread::scope(|scope| {
            for (chunk_idx, chunk) in slots.chunks_mut(cfg.eps_list.len().div_ceil(threads)).enumerate() {
                let (u0, h0) = (&u0, &h0);
                let start = chunk_idx * cfg.eps_list.len().div_ceil(threads);
                scope.spawn(move || {
                    for (i, slot) in chunk.iter_mut().enumerate() {
                        *slot = Some(compare(cfg, cfg.eps_list[start + i], u0, h0, fin));
                    }
                });
            }
        });
        slots.into_iter().map(|s| s.expect("every slot filled")).collect()
    };

    let mut rows = Vec::new();
    for (eps, r) in cfg.eps_list.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => return Err(fail(e, Some(*eps), rows)),
        }
    }
    Ok(SweepResult {
        rows,
        reference: reference.records,
    })
}

pub const SWEEP_CSV_COLUMNS: [&str; 9] = [
    "eps",
    "e_u",
    "e_H",
    "e_rho",
    "energy_ratio",
    "dt",
    "order_u",
    "order_H",
    "order_rho",
];

/// One row per ε; orders refer to the pair (previous ε, this ε) and are empty on the first row.
pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "{}", SWEEP_CSV_COLUMNS.join(","))?;
    let orders = observed_order(rows);
    for (i, r) in rows.iter().enumerate() {
        let o = if i == 0 {
            ",,".to_string()
        } else {
            let p = &orders[i - 1];
            format!("{},{},{}", p.u, p.h, p.rho)
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_number(r.eps),
            format_number(r.e_u),
            format_number(r.e_h),
            format_number(r.e_rho),
            format_number(r.energy_ratio),
            format_number(r.dt),
            o
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compressible::Preparation;

    fn row(eps: f64, e: f64) -> SweepRow {
        SweepRow {
            eps,
            e_u: e,
            e_h: e,
            e_rho: 0.0,
            energy_ratio: 1.0,
            dt: 0.0,
            records: Vec::new(),
        }
    }

    #[test]
    fn orders_from_errors() {
        let o = observed_order(&[row(0.2, 0.4), row(0.1, 0.2)]);
        assert_eq!(o[0].u, ObservedOrder::Rate(1.0));
        assert_eq!(o[0].rho, ObservedOrder::ExactMatch);
        let o = observed_order(&[row(0.2, 0.4), row(0.1, 0.1)]);
        assert_eq!(o[0].u, ObservedOrder::Rate(2.0));
    }

    #[test]
    fn validation() {
        let mut c = SweepConfig {
            eps_list: vec![0.1, 0.2],
            ..Default::default()
        };
        assert!(matches!(
            c.validate(),
            Err(SolverError::InvalidParameter { name: "eps_list", .. })
        ));
        c.eps_list = vec![0.2, 0.1];
        assert!(c.validate().is_ok());
        c.compressible.mu = 2.0;
        assert!(matches!(
            c.validate(),
            Err(SolverError::InvalidParameter { name: "mu", .. })
        ));
    }

    #[test]
    fn zero_time_errors_are_initial_perturbations() {
        let eps = 0.2;
        let cfg = SweepConfig {
            eps_list: vec![eps],
            t_end: 0.0,
            n: 8,
            ..Default::default()
        };
        let res = run_sweep(&cfg).unwrap();
        let g = Grid::new(8).unwrap();
        let p = Preparation::default().profiles(g).unwrap();
        let r = &res.rows[0];
        assert!((r.e_u - eps * p.psi.l2_norm()).abs() < 1e-13 * r.e_u);
        assert!((r.e_h - eps * p.chi.l2_norm()).abs() < 1e-13 * r.e_h);
        assert_eq!(res.reference.len(), 1);
    }

    #[test]
    fn threads_do_not_change_results() {
        let cfg = SweepConfig {
            eps_list: vec![0.4, 0.2],
            t_end: 0.05,
            n: 8,
            ..Default::default()
        };
        let a = run_sweep_threaded(&cfg, 1).unwrap();
        let b = run_sweep_threaded(&cfg, 2).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[row(0.2, 0.4), row(0.1, 0.2)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].ends_with(",,,"));
        assert!(lines[2].ends_with(",exact"));
        assert_eq!(lines[2].split(',').count(), SWEEP_CSV_COLUMNS.len());
    }
}
