//! Spectral efficiency, hardware component counts, power consumption and
//! energy efficiency.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{mismatch, PrecodingError, Result};
use crate::linalg::CMatrix;

/// `log2 det(I + (P / N_s) R^{-1} W^H H F F^H H^H W)` with
/// `R = noise_var W^H W`, for effective precoder `f` and combiner `w`.
pub fn spectral_efficiency(h: &CMatrix, f: &CMatrix, w: &CMatrix, p_tx: f64, noise_var: f64) -> Result<f64> {
    if h.ncols() != f.nrows() || h.nrows() != w.nrows() || f.ncols() != w.ncols() {
        return Err(mismatch(format!(
            "channel {:?}, precoder {:?}, combiner {:?}",
            h.shape(),
            f.shape(),
            w.shape()
        )));
    }
    if !(noise_var > 0.0) || !(p_tx >= 0.0) {
        return Err(PrecodingError::InvalidConfig(format!(
            "need positive noise variance and nonnegative power, got {noise_var} and {p_tx}"
        )));
    }
    let ns = f.ncols();
    let r = w.adjoint() * w * Complex64::from(noise_var);
    let chol = r.cholesky().ok_or(PrecodingError::RankDeficientCombiner)?;
    let k = w.adjoint() * h * f;
    // L^{-1} K K^H L^{-H} keeps the determinant argument Hermitian.
    let l_inv_k = chol
        .l()
        .solve_lower_triangular(&k)
        .ok_or(PrecodingError::RankDeficientCombiner)?;
    let gram = &l_inv_k * l_inv_k.adjoint() * Complex64::from(p_tx / ns as f64);
    let det = (CMatrix::identity(ns, ns) + gram).determinant();
    if !(det.re > 0.0) || !det.re.is_finite() {
        return Err(PrecodingError::NonFinite("spectral efficiency determinant"));
    }
    if det.im.abs() > 1e-10 * det.re {
        return Err(PrecodingError::NonFinite("complex spectral efficiency determinant"));
    }
    Ok(det.re.log2().max(0.0))
}

/// Analog front-end architectures compared by component count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    FullyDigital,
    FullyConnected,
    PartiallyConnected,
    /// Switches feeding a small phase-shifter network per RF chain.
    FpsVps,
    GroupConnected(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sides {
    Transmitter,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HardwareCounts {
    pub n_ps: usize,
    pub n_sw: usize,
}

fn side_counts(arch: Architecture, antennas: usize, cfg: &SystemConfig) -> HardwareCounts {
    let (n_rf, n_c) = (cfg.n_rf, cfg.n_ps);
    match arch {
        Architecture::FullyDigital => HardwareCounts::default(),
        Architecture::FullyConnected => HardwareCounts {
            n_ps: antennas * n_rf,
            n_sw: 0,
        },
        Architecture::PartiallyConnected => HardwareCounts {
            n_ps: antennas,
            n_sw: 0,
        },
        Architecture::FpsVps => HardwareCounts {
            n_ps: n_c * n_rf,
            n_sw: antennas * n_c * n_rf,
        },
        Architecture::GroupConnected(q) => HardwareCounts {
            n_ps: n_c * n_rf,
            n_sw: n_c * n_rf * antennas / q.max(1),
        },
    }
}

/// Phase shifters and switches of `arch`; the receiver side uses `n_rx`
/// antennas.
pub fn hardware_counts(arch: Architecture, cfg: &SystemConfig, sides: Sides) -> HardwareCounts {
    let tx = side_counts(arch, cfg.n_tx, cfg);
    match sides {
        Sides::Transmitter => tx,
        Sides::Both => {
            let rx = side_counts(arch, cfg.n_rx, cfg);
            HardwareCounts {
                n_ps: tx.n_ps + rx.n_ps,
                n_sw: tx.n_sw + rx.n_sw,
            }
        }
    }
}

/// Per-component power draw in milliwatts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerModel {
    pub rf_chain_mw: f64,
    pub amplifier_mw: f64,
    pub phase_shifter_mw: f64,
    pub switch_mw: f64,
    pub transmit_mw: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        PowerModel {
            rf_chain_mw: 100.0,
            amplifier_mw: 100.0,
            phase_shifter_mw: 30.0,
            switch_mw: 1.0,
            transmit_mw: 1000.0,
        }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.rf_chain_mw,
            self.amplifier_mw,
            self.phase_shifter_mw,
            self.switch_mw,
            self.transmit_mw,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(PrecodingError::InvalidConfig(format!(
                "power model entries must be finite and nonnegative: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn transmit_w(&self) -> f64 {
        self.transmit_mw / 1000.0
    }
}

fn hardware_mw(counts: HardwareCounts, pm: &PowerModel) -> f64 {
    counts.n_ps as f64 * pm.phase_shifter_mw + counts.n_sw as f64 * pm.switch_mw
}

/// Power of the phase shifters and switches, in watts.
pub fn total_hw_power(counts: HardwareCounts, pm: &PowerModel) -> f64 {
    hardware_mw(counts, pm) / 1000.0
}

/// `se / (P + N_RF P_RF + N_t P_PA + N_PS P_PS + N_SW P_SW)` in bits/s/Hz/W,
/// with `P` the model's transmit power.
pub fn energy_efficiency(
    se: f64,
    rf_chains: usize,
    antennas: usize,
    counts: HardwareCounts,
    pm: &PowerModel,
) -> Result<f64> {
    let total_mw = pm.transmit_mw
        + rf_chains as f64 * pm.rf_chain_mw
        + antennas as f64 * pm.amplifier_mw
        + hardware_mw(counts, pm);
    if !(total_mw > 0.0) {
        return Err(PrecodingError::InvalidConfig("total power consumption is zero".into()));
    }
    Ok(se / (total_mw / 1000.0))
}
