//! Fixed-phase comparison scheme: the phase shifters are frozen to a uniform
//! grid and only the switches, scale and digital factor are optimized.

use std::f64::consts::TAU;

use hybrid_precoding::linalg::CMatrix;
use hybrid_precoding::vps_lc_hpd::{lc_alternation, PhaseStage};
use hybrid_precoding::{AnalogLayout, PhaseMatrix, Result, Solution, SolverOptions};

/// Slot `l` (0-based) of every network at phase `2 pi l / n_ps`.
pub fn frozen_phases(layout: &AnalogLayout) -> Result<PhaseMatrix> {
    let n_ps = layout.n_ps;
    PhaseMatrix::repeated(n_ps, layout.n_rf, |l| TAU * l as f64 / n_ps as f64)
}

pub fn frozen_phase_unnormalized(f_opt: &CMatrix, layout: &AnalogLayout, opts: &SolverOptions) -> Result<Solution> {
    lc_alternation(f_opt, layout, opts, frozen_phases(layout)?, PhaseStage::Frozen)
}

pub fn frozen_phase_baseline(f_opt: &CMatrix, layout: &AnalogLayout, opts: &SolverOptions) -> Result<Solution> {
    frozen_phase_unnormalized(f_opt, layout, opts)?.normalized()
}
