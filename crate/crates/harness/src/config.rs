//! Experiment description, read from TOML.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use hybrid_precoding::channel::ChannelParams;
use hybrid_precoding::{PowerModel, SolverOptions, SystemConfig};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    VpsHpd,
    VpsLcHpd,
    GcVpsHpd,
    GcVpsLcHpd,
    FrozenPhase,
    FullyDigital,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::VpsHpd,
        Scheme::VpsLcHpd,
        Scheme::GcVpsHpd,
        Scheme::GcVpsLcHpd,
        Scheme::FrozenPhase,
        Scheme::FullyDigital,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::VpsHpd => "vps_hpd",
            Scheme::VpsLcHpd => "vps_lc_hpd",
            Scheme::GcVpsHpd => "gc_vps_hpd",
            Scheme::GcVpsLcHpd => "gc_vps_lc_hpd",
            Scheme::FrozenPhase => "frozen_phase",
            Scheme::FullyDigital => "fully_digital",
        }
    }

    pub fn is_grouped(self) -> bool {
        matches!(self, Scheme::GcVpsHpd | Scheme::GcVpsLcHpd)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Scheme::ALL
            .into_iter()
            .find(|sch| sch.name() == s)
            .ok_or_else(|| format!("unknown scheme {s:?}"))
    }
}

fn yes() -> bool {
    true
}

/// Everything a sweep depends on; the output is a function of this value
/// alone (apart from wall-clock columns, which `measure_time = false` zeroes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub system: SystemConfig,
    pub channel: ChannelParams,
    pub schemes: Vec<Scheme>,
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    #[serde(default)]
    pub solver_opts: SolverOptions,
    #[serde(default)]
    pub power_model: PowerModel,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "yes")]
    pub measure_time: bool,
}

impl ExperimentSpec {
    /// 64x16 link, four-path channel, every scheme, -10..=10 dB, 200 trials.
    pub fn reference() -> Self {
        ExperimentSpec {
            system: SystemConfig::reference(),
            channel: ChannelParams::reference(),
            schemes: Scheme::ALL.to_vec(),
            snr_grid_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            trials: 200,
            solver_opts: SolverOptions::default(),
            power_model: PowerModel::default(),
            master_seed: 0,
            measure_time: true,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: hybrid_precoding::PrecodingError| HarnessError::Config(e.to_string());
        self.system.validate().map_err(cfg)?;
        self.channel.validate().map_err(cfg)?;
        self.solver_opts.validate().map_err(cfg)?;
        self.power_model.validate().map_err(cfg)?;
        if self.power_model.transmit_mw <= 0.0 {
            return Err(HarnessError::Config("power_model.transmit_mw must be positive".into()));
        }
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(HarnessError::Config("snr_grid_db must be a nonempty list of finite values".into()));
        }
        if self.schemes.is_empty() {
            return Err(HarnessError::Config("schemes must not be empty".into()));
        }
        Ok(())
    }
}
