//! TOML run configuration.
//!
//! Every table rejects unknown keys. Omitted keys take their documented
//! defaults (`n = 32`, `solver.lambda = 1`, `h_tilde = [1, 1, 1]`,
//! `dealias = true`, ...); only `mode` is required.
//!
//! ```toml
//! mode = "incompressible"
//! n = 32
//! output_dir = "out"
//! snapshot_times = [0.5, 1.0]
//! checkpoint_every = 100
//!
//! [initial]
//! preset = "taylor-green-mhd"
//! u_amplitude = 0.1
//!
//! [solver]
//! lambda = 0.1
//! dt = 1e-3
//! t_end = 1.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::compressible::{CompressibleParams, Preparation};
use crate::error::{ConfigError, SolverError};
use crate::grid::Grid;
use crate::incompressible::SolverParams;
use crate::limit::SweepConfig;
use crate::presets::Preset;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Incompressible,
    Compressible,
    LimitSweep,
    Verify,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Incompressible => "incompressible",
            Mode::Compressible => "compressible",
            Mode::LimitSweep => "limit-sweep",
            Mode::Verify => "verify",
        }
    }
}

/// Mach numbers and comparison time of a limit sweep. The grid, initial
/// data and solver blocks come from the enclosing [`RunConfig`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSettings {
    pub eps_list: Vec<f64>,
    pub t_end: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        let d = SweepConfig::default();
        Self {
            eps_list: d.eps_list,
            t_end: d.t_end,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Times at which full-field snapshots are written.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Steps between overwrites of `checkpoint.bin`; 0 disables checkpoints.
    #[serde(default)]
    pub checkpoint_every: usize,
    /// Snapshot to resume from instead of the preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart_from: Option<PathBuf>,
    #[serde(default = "default_initial")]
    pub initial: Preset,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub compressible: CompressibleParams,
    #[serde(default)]
    pub preparation: Preparation,
    #[serde(default)]
    pub sweep: SweepSettings,
}

fn default_n() -> usize {
    32
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}

fn default_initial() -> Preset {
    Preset::TaylorGreenMhd {
        u_amplitude: 0.1,
        b_amplitude: 0.1,
    }
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        message: message.into(),
    }
}

/// Re-roots a parameter error of one block under its table name.
fn in_table(table: &str, e: SolverError) -> ConfigError {
    match e {
        SolverError::InvalidParameter { name, reason } => invalid(format!("{table}.{name}"), reason),
        other => invalid(table, other.to_string()),
    }
}

impl RunConfig {
    /// Defaults for every key, with the given mode.
    pub fn with_mode(mode: Mode) -> Self {
        Self {
            mode,
            n: default_n(),
            output_dir: default_output_dir(),
            snapshot_times: Vec::new(),
            checkpoint_every: 0,
            restart_from: None,
            initial: default_initial(),
            solver: SolverParams::default(),
            compressible: CompressibleParams::default(),
            preparation: Preparation::default(),
            sweep: SweepSettings::default(),
        }
    }

    /// Parses and validates a TOML document.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = toml::de::Deserializer::parse(text).map_err(|e| invalid("", e.message().to_string()))?;
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            let key = if key == "." { String::new() } else { key };
            invalid(key, e.into_inner().message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Canonical TOML with every default written out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration is always representable in TOML")
    }

    /// SHA-256 of the canonical TOML, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        Grid::new(self.n).map_err(|e| invalid("n", e.to_string()))?;
        if let Some(i) = self.snapshot_times.iter().position(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid(
                format!("snapshot_times[{i}]"),
                format!("must be finite and >= 0, got {}", self.snapshot_times[i]),
            ));
        }
        if self.restart_from.is_some() && !matches!(self.mode, Mode::Incompressible | Mode::Compressible) {
            return Err(invalid(
                "restart_from",
                format!("not supported in {} mode", self.mode.name()),
            ));
        }
        self.validate_initial()?;
        self.solver.validate().map_err(|e| in_table("solver", e))?;
        self.compressible.validate().map_err(|e| in_table("compressible", e))?;
        let p = &self.preparation;
        if !(p.c_prep.is_finite() && p.c_prep >= 0.0) {
            return Err(invalid(
                "preparation.c_prep",
                format!("must be finite and >= 0, got {}", p.c_prep),
            ));
        }
        if p.kmax == 0 {
            return Err(invalid("preparation.kmax", "must be >= 1"));
        }
        if self.mode == Mode::LimitSweep {
            self.sweep_config().validate().map_err(|e| match e {
                SolverError::InvalidParameter { name, reason } => {
                    let table = match name {
                        "eps_list" | "t_end" => "sweep",
                        _ => "compressible",
                    };
                    invalid(format!("{table}.{name}"), reason)
                }
                other => invalid("sweep", other.to_string()),
            })?;
        }
        Ok(())
    }

    fn validate_initial(&self) -> Result<(), ConfigError> {
        let finite = |key: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("initial.{key}"), "must be finite"))
            }
        };
        match self.initial {
            Preset::Steady {} => Ok(()),
            Preset::AlfvenMode { amplitude, wavevector } => {
                finite("amplitude", amplitude)?;
                let half = (self.n / 2) as i64;
                if wavevector.iter().all(|&k| k == 0) || wavevector.iter().any(|&k| k.abs() >= half) {
                    return Err(invalid(
                        "initial.wavevector",
                        format!("must be nonzero with every |k_j| < n/2 = {half}"),
                    ));
                }
                Ok(())
            }
            Preset::TaylorGreenMhd {
                u_amplitude,
                b_amplitude,
            } => {
                finite("u_amplitude", u_amplitude)?;
                finite("b_amplitude", b_amplitude)
            }
            Preset::RandomBandlimited { kmax, amplitude, .. } => {
                finite("amplitude", amplitude)?;
                if kmax == 0 {
                    return Err(invalid("initial.kmax", "must be >= 1"));
                }
                Ok(())
            }
        }
    }

    /// The validated `n × n × n` grid.
    pub fn grid(&self) -> Grid {
        Grid::new(self.n).expect("validated grid size")
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            eps_list: self.sweep.eps_list.clone(),
            t_end: self.sweep.t_end,
            n: self.n,
            initial: self.initial.clone(),
            preparation: self.preparation,
            incompressible: self.solver.clone(),
            compressible: self.compressible.clone(),
        }
    }
}
