//! Hardware power comparison across analog architectures.

use hybrid_precoding::{hardware_counts, total_hw_power, Architecture, PowerModel, Sides, SystemConfig};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    pub architecture: String,
    pub n_ps: usize,
    pub n_sw: usize,
    pub power_w: f64,
}

fn row(name: String, arch: Architecture, cfg: &SystemConfig, pm: &PowerModel) -> PowerRow {
    let counts = hardware_counts(arch, cfg, Sides::Both);
    PowerRow {
        architecture: name,
        n_ps: counts.n_ps,
        n_sw: counts.n_sw,
        power_w: total_hw_power(counts, pm),
    }
}

/// Phase-shifter and switch counts and their power at both link ends, for the
/// fully-connected, switch-plus-phase-shifter and group-connected (one row per
/// entry of `groups`) architectures.
pub fn power_table(cfg: &SystemConfig, pm: &PowerModel, groups: &[usize]) -> Vec<PowerRow> {
    let mut rows = vec![
        row("fully-connected".into(), Architecture::FullyConnected, cfg, pm),
        row("fps-vps".into(), Architecture::FpsVps, cfg, pm),
    ];
    for &q in groups {
        rows.push(row(format!("gc-vps q={q}"), Architecture::GroupConnected(q), cfg, pm));
    }
    rows
}

/// [`power_table`] with two and four groups.
pub fn power_report(cfg: &SystemConfig, pm: &PowerModel) -> Vec<PowerRow> {
    power_table(cfg, pm, &[2, 4])
}

pub fn write_power_csv<W: std::io::Write>(rows: &[PowerRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["architecture", "n_ps", "n_sw", "power_w"])?;
    for r in rows {
        w.write_record([
            r.architecture.clone(),
            r.n_ps.to_string(),
            r.n_sw.to_string(),
            crate::output::format_g(r.power_w),
        ])?;
    }
    w.flush()
}
