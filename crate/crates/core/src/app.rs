//! Run orchestration behind the command-line interface.
//!
//! Every run writes into `output_dir`:
//!
//! - `config.toml`: the canonical configuration (all defaults filled in)
//! - `manifest.json`: config hash, program version, wall time and status
//! - `diagnostics.csv` (solver modes) or `sweep.csv` plus per-run CSVs (sweeps)
//! - `snapshot_t<time>.bin` for each scheduled time and `final.bin`
//! - `checkpoint.bin`, overwritten every `checkpoint_every` steps
//! - `last_good.bin` when a run fails part way
//! - `verify.txt` in verify mode

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde_json::json;
use thiserror::Error;

use crate::compressible::{run_compressible_with, well_prepared_init, write_compressible_csv, CompressibleState};
use crate::config::{Mode, RunConfig};
use crate::diagnostics::{write_csv, DiagnosticsRecord};
use crate::error::{ConfigError, IoError, SolverError};
use crate::incompressible::{run_with, Observer, SimState};
use crate::limit::{run_sweep_threaded, write_sweep_csv};
use crate::snapshot::{self, Snapshot};
use crate::verify::{run_suite_with, CheckOutcome, VerifyReport};

/// Environment variable read for the sweep worker count.
pub const THREADS_ENV: &str = "ZRMHD_THREADS";

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{failed} of {total} verify checks failed")]
    VerifyFailed { failed: usize, total: usize },
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(IoError::Io(e))
    }
}

impl AppError {
    /// 0 success, 1 validation, 2 numerical failure, 3 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(ConfigError::Read { .. }) => 3,
            AppError::Config(_) => 1,
            AppError::Solver(SolverError::InvalidParameter { .. } | SolverError::Field(_)) => 1,
            AppError::Solver(_) => 2,
            AppError::Io(_) => 3,
            AppError::VerifyFailed { .. } => 1,
        }
    }

    fn status(&self) -> &'static str {
        if let AppError::VerifyFailed { .. } = self {
            return "verify-failed";
        }
        match self.exit_code() {
            1 => "invalid",
            2 => "blowup",
            _ => "io-error",
        }
    }
}

/// What a completed run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub mode: Mode,
    /// Final simulated time (0 for verify).
    pub t_final: f64,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
    pub wall_seconds: f64,
}

/// Worker count from [`THREADS_ENV`], defaulting to 1.
pub fn threads_from_env() -> Result<usize, AppError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(1),
        Ok(v) => v.trim().parse::<usize>().ok().filter(|&t| t >= 1).ok_or_else(|| {
            AppError::Config(ConfigError::Invalid {
                key: THREADS_ENV.into(),
                message: format!("must be a positive integer, got {v:?}"),
            })
        }),
    }
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.dir.join(name)
    }

    fn snapshot(&mut self, name: &str, snap: &Snapshot) -> Result<(), IoError> {
        let path = self.path(name);
        snap.save(path)
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<fs::File>, IoError> {
        Ok(BufWriter::new(fs::File::create(self.path(name))?))
    }
}

fn snapshot_name(t: f64) -> String {
    format!("snapshot_t{t:.6}.bin")
}

/// Executes `cfg` and writes its artifacts. The manifest is written whether
/// or not the run succeeds (unless the output directory is unusable).
pub fn command_run(cfg: &RunConfig, threads: usize) -> Result<RunSummary, AppError> {
    cfg.validate()?;
    let start = Instant::now();
    fs::create_dir_all(&cfg.output_dir)?;
    let mut out = Outputs {
        dir: cfg.output_dir.clone(),
        files: Vec::new(),
    };
    fs::write(out.path("config.toml"), cfg.to_toml())?;
    info!(
        "{} run, n = {}, output in {}",
        cfg.mode.name(),
        cfg.n,
        cfg.output_dir.display()
    );

    let result = match cfg.mode {
        Mode::Incompressible => run_incompressible(cfg, &mut out),
        Mode::Compressible => run_compressible_mode(cfg, &mut out),
        Mode::LimitSweep => run_limit_sweep(cfg, threads, &mut out),
        Mode::Verify => run_verify(&mut out),
    };
    let wall_seconds = start.elapsed().as_secs_f64();

    let (status, error) = match &result {
        Ok(_) => ("ok", None),
        Err(e) => (e.status(), Some(e.to_string())),
    };
    out.path("manifest.json");
    let manifest = json!({
        "program": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "snapshot_format_version": snapshot::VERSION,
        "mode": cfg.mode.name(),
        "config_sha256": cfg.hash(),
        "threads": threads,
        "status": status,
        "error": error,
        "t_final": result.as_ref().ok(),
        "wall_time_seconds": wall_seconds,
        "files": out.files,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest is plain JSON");
    let written = fs::write(cfg.output_dir.join("manifest.json"), text + "\n");

    let t_final = result?;
    written?;
    Ok(RunSummary {
        mode: cfg.mode,
        t_final,
        files: out.files,
        wall_seconds,
    })
}

fn load_restart(path: &Path, cfg: &RunConfig) -> Result<Snapshot, AppError> {
    let snap = Snapshot::load(path)?;
    if snap.grid().n() != cfg.n {
        return Err(ConfigError::Invalid {
            key: "restart_from".into(),
            message: format!("snapshot grid n = {} does not match n = {}", snap.grid().n(), cfg.n),
        }
        .into());
    }
    info!("restarting from {} at t = {}", path.display(), snap.t);
    Ok(snap)
}

/// Overwrites the checkpoint file every `every` steps.
struct Checkpointer<'a> {
    path: Option<&'a Path>,
    every: usize,
    error: Option<IoError>,
}

impl Observer for Checkpointer<'_> {
    fn on_step(&mut self, step: usize, state: &SimState) {
        let Some(path) = self.path else { return };
        if self.error.is_some() || step == 0 || !step.is_multiple_of(self.every) {
            return;
        }
        if let Err(e) = Snapshot::from_incompressible(state).save(path) {
            self.error = Some(e);
        }
    }

    fn on_record(&mut self, r: &DiagnosticsRecord) {
        log::debug!("t = {:.6}  E = {:.10e}  X = {:.6e}", r.t, r.energy(), r.x);
    }
}

fn run_incompressible(cfg: &RunConfig, out: &mut Outputs) -> Result<f64, AppError> {
    let initial = match &cfg.restart_from {
        Some(p) => load_restart(p, cfg)?.to_incompressible()?,
        None => cfg.initial.build(cfg.grid()).map_err(SolverError::from)?,
    };
    let checkpoint = (cfg.checkpoint_every > 0).then(|| out.path("checkpoint.bin"));
    let mut observer = Checkpointer {
        path: checkpoint.as_deref(),
        every: cfg.checkpoint_every,
        error: None,
    };
    let result = run_with(initial, &cfg.solver, &cfg.snapshot_times, &mut observer);
    if let Some(e) = observer.error {
        return Err(e.into());
    }
    match result {
        Ok(traj) => {
            write_csv(out.create("diagnostics.csv")?, &traj.records)?;
            for s in &traj.snapshots {
                out.snapshot(&snapshot_name(s.t), &Snapshot::from_incompressible(s))?;
            }
            out.snapshot("final.bin", &Snapshot::from_incompressible(&traj.final_state))?;
            if let Some(r) = traj.records.last() {
                info!("finished at t = {}: E = {:.10e}, X = {:.6e}", r.t, r.energy(), r.x);
            }
            Ok(traj.final_state.t)
        }
        Err(fail) => {
            warn!("{fail}");
            write_csv(out.create("diagnostics.csv")?, &fail.records)?;
            out.snapshot("last_good.bin", &Snapshot::from_incompressible(&fail.last_good))?;
            Err(fail.error.into())
        }
    }
}

fn run_compressible_mode(cfg: &RunConfig, out: &mut Outputs) -> Result<f64, AppError> {
    let params = &cfg.compressible;
    let initial: CompressibleState = match &cfg.restart_from {
        Some(p) => load_restart(p, cfg)?.to_compressible()?,
        None => {
            let base = cfg.initial.build(cfg.grid()).map_err(SolverError::from)?;
            let mut h0 = base.b_hat.to_real();
            h0.add_constant(params.h_tilde);
            well_prepared_init(
                &base.u_hat.to_real(),
                &h0,
                params.eps,
                params.rho_tilde,
                &cfg.preparation,
            )?
        }
    };
    if cfg.checkpoint_every > 0 {
        warn!("checkpoint_every is ignored in compressible mode");
    }
    match run_compressible_with(initial, params, &cfg.snapshot_times) {
        Ok(traj) => {
            write_compressible_csv(out.create("diagnostics.csv")?, &traj.records, traj.dt)?;
            for s in &traj.snapshots {
                out.snapshot(&snapshot_name(s.t), &Snapshot::from_compressible(s))?;
            }
            out.snapshot("final.bin", &Snapshot::from_compressible(&traj.final_state))?;
            Ok(traj.final_state.t)
        }
        Err(fail) => {
            warn!("{fail}");
            write_compressible_csv(out.create("diagnostics.csv")?, &fail.records, params.dt)?;
            out.snapshot("last_good.bin", &Snapshot::from_compressible(&fail.last_good))?;
            Err(fail.error.into())
        }
    }
}

fn run_limit_sweep(cfg: &RunConfig, threads: usize, out: &mut Outputs) -> Result<f64, AppError> {
    let sweep = cfg.sweep_config();
    info!("sweeping eps = {:?} on {threads} thread(s)", sweep.eps_list);
    match run_sweep_threaded(&sweep, threads) {
        Ok(result) => {
            write_sweep_csv(out.create("sweep.csv")?, &result.rows)?;
            write_csv(out.create("reference.csv")?, &result.reference)?;
            for row in &result.rows {
                let name = format!("compressible_eps{}.csv", row.eps);
                write_compressible_csv(out.create(&name)?, &row.records, row.dt)?;
                info!(
                    "eps = {}: e_u = {:.4e}, e_H = {:.4e}, e_rho = {:.4e}",
                    row.eps, row.e_u, row.e_h, row.e_rho
                );
            }
            for (pair, o) in result.rows.windows(2).zip(result.orders()) {
                info!(
                    "order {} -> {}: u {}, H {}, rho {}",
                    pair[0].eps, pair[1].eps, o.u, o.h, o.rho
                );
            }
            Ok(sweep.t_end)
        }
        Err(fail) => {
            warn!("{fail}");
            write_sweep_csv(out.create("sweep.csv")?, &fail.rows)?;
            Err(fail.error.into())
        }
    }
}

fn run_verify(out: &mut Outputs) -> Result<f64, AppError> {
    let report = command_verify(|c| info!("{c}"));
    fs::write(out.path("verify.txt"), format!("{report}\n"))?;
    verify_status(&report)?;
    Ok(0.0)
}

/// Runs the invariant suite, reporting each check as it completes.
pub fn command_verify(progress: impl FnMut(&CheckOutcome)) -> VerifyReport {
    run_suite_with(progress)
}

/// `Ok` iff every check passed.
pub fn verify_status(report: &VerifyReport) -> Result<(), AppError> {
    let failed = report.checks.iter().filter(|c| !c.passed()).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(AppError::VerifyFailed {
            failed,
            total: report.checks.len(),
        })
    }
}
