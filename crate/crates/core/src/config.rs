use serde::{Deserialize, Serialize};

use crate::error::{PrecodingError, Result};

/// Antenna, RF-chain, stream and phase-shifter dimensions of a point-to-point
/// link. Both ends use `n_rf` RF chains and the same phase-shifter networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_rf: usize,
    pub n_streams: usize,
    /// Phase shifters per phase-shifter network (one network per RF chain).
    pub n_ps: usize,
    pub phase_bits: u32,
    /// Antenna groups of the group-connected architecture; 1 means every
    /// phase shifter can reach every antenna.
    #[serde(default = "one")]
    pub groups: usize,
}

fn one() -> usize {
    1
}

impl SystemConfig {
    /// 64x16 link, 4 RF chains, 4 streams, 8 three-bit phase shifters per chain.
    pub fn reference() -> Self {
        SystemConfig {
            n_tx: 64,
            n_rx: 16,
            n_rf: 4,
            n_streams: 4,
            n_ps: 8,
            phase_bits: 3,
            groups: 1,
        }
    }

    pub fn with_groups(mut self, groups: usize) -> Self {
        self.groups = groups;
        self
    }

    pub fn with_phase_shifters(mut self, n_ps: usize) -> Self {
        self.n_ps = n_ps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_tx", self.n_tx),
            ("n_rx", self.n_rx),
            ("n_rf", self.n_rf),
            ("n_streams", self.n_streams),
            ("n_ps", self.n_ps),
            ("phase_bits", self.phase_bits as usize),
            ("groups", self.groups),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(PrecodingError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.n_streams > self.n_rf {
            return Err(PrecodingError::InvalidConfig(format!(
                "n_streams ({}) exceeds n_rf ({})",
                self.n_streams, self.n_rf
            )));
        }
        if self.n_rf > self.n_tx || self.n_rf > self.n_rx {
            return Err(PrecodingError::InvalidConfig(format!(
                "n_rf ({}) exceeds an antenna count (n_tx {}, n_rx {})",
                self.n_rf, self.n_tx, self.n_rx
            )));
        }
        if self.groups > self.n_rf {
            return Err(PrecodingError::InvalidConfig(format!(
                "groups ({}) exceeds n_rf ({})",
                self.groups, self.n_rf
            )));
        }
        if !self.n_tx.is_multiple_of(self.groups) || !self.n_rx.is_multiple_of(self.groups) || !self.n_rf.is_multiple_of(self.groups) {
            return Err(PrecodingError::InvalidConfig(format!(
                "groups ({}) must divide n_tx ({}), n_rx ({}) and n_rf ({})",
                self.groups, self.n_tx, self.n_rx, self.n_rf
            )));
        }
        if self.phase_bits > PHASE_BITS_LIMIT {
            return Err(PrecodingError::InvalidConfig(format!(
                "phase_bits ({}) above supported limit {PHASE_BITS_LIMIT}",
                self.phase_bits
            )));
        }
        Ok(())
    }

    pub fn tx_layout(&self) -> AnalogLayout {
        AnalogLayout {
            n_antennas: self.n_tx,
            n_rf: self.n_rf,
            n_ps: self.n_ps,
            phase_bits: self.phase_bits,
        }
    }

    pub fn rx_layout(&self) -> AnalogLayout {
        AnalogLayout {
            n_antennas: self.n_rx,
            ..self.tx_layout()
        }
    }
}

pub(crate) const PHASE_BITS_LIMIT: u32 = 24;

/// Shape of one analog stage: `n_antennas x (n_ps * n_rf)` switches feeding
/// `n_rf` phase-shifter networks of `n_ps` shifters with `phase_bits` resolution.
///
/// Solvers take a layout rather than a [`SystemConfig`] so the same code serves
/// the transmitter, the receiver and the per-group subproblems, whose stream
/// count may exceed the group's RF chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalogLayout {
    pub n_antennas: usize,
    pub n_rf: usize,
    pub n_ps: usize,
    pub phase_bits: u32,
}

impl AnalogLayout {
    pub fn switch_columns(&self) -> usize {
        self.n_ps * self.n_rf
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_antennas == 0 || self.n_rf == 0 || self.n_ps == 0 || self.phase_bits == 0 {
            return Err(PrecodingError::InvalidDimension(format!(
                "analog layout has a zero dimension: {self:?}"
            )));
        }
        if self.phase_bits > PHASE_BITS_LIMIT {
            return Err(PrecodingError::InvalidConfig(format!(
                "phase_bits ({}) above supported limit {PHASE_BITS_LIMIT}",
                self.phase_bits
            )));
        }
        Ok(())
    }
}
