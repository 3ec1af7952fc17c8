//! Group-connected architecture: the array is split into `q` equal antenna
//! groups, each served by its own `n_rf / q` RF chains, and every group's
//! analog and digital precoders are designed independently.

use crate::config::AnalogLayout;
use crate::error::{PrecodingError, Result};
use crate::linalg::CMatrix;
use crate::precoder::{HybridPrecoder, PhaseMatrix, Solution, SolverOptions, SwitchMatrix};
use crate::vps_hpd::vps_hpd_unnormalized;
use crate::vps_lc_hpd::vps_lc_hpd_unnormalized;

/// Solver applied to each group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseSolver {
    Hpd,
    LcHpd,
}

impl BaseSolver {
    pub fn solve_unnormalized(self, f_opt: &CMatrix, layout: &AnalogLayout, opts: &SolverOptions) -> Result<Solution> {
        match self {
            BaseSolver::Hpd => vps_hpd_unnormalized(f_opt, layout, opts),
            BaseSolver::LcHpd => vps_lc_hpd_unnormalized(f_opt, layout, opts),
        }
    }
}

/// Per-group dimensions for `q` groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupPlan {
    pub q: usize,
    pub group: AnalogLayout,
}

impl GroupPlan {
    pub fn new(layout: &AnalogLayout, q: usize) -> Result<Self> {
        layout.validate()?;
        if q == 0 || q > layout.n_rf || !layout.n_rf.is_multiple_of(q) || !layout.n_antennas.is_multiple_of(q) {
            return Err(PrecodingError::InvalidConfig(format!(
                "{q} groups must be at most and divide n_rf ({}) and divide the antenna count ({})",
                layout.n_rf, layout.n_antennas
            )));
        }
        Ok(GroupPlan {
            q,
            group: AnalogLayout {
                n_antennas: layout.n_antennas / q,
                n_rf: layout.n_rf / q,
                ..*layout
            },
        })
    }

    /// Solver options for group `k`: the base seed offset by `k`.
    pub fn group_options(&self, opts: &SolverOptions, k: usize) -> SolverOptions {
        opts.with_seed(opts.rng_seed.wrapping_add(k as u64))
    }
}

/// Splits `f_opt` into `q` consecutive row blocks of equal height.
pub fn partition_target(f_opt: &CMatrix, q: usize) -> Result<Vec<CMatrix>> {
    if q == 0 || !f_opt.nrows().is_multiple_of(q) {
        return Err(PrecodingError::InvalidConfig(format!(
            "{q} groups do not divide {} rows",
            f_opt.nrows()
        )));
    }
    let h = f_opt.nrows() / q;
    Ok((0..q).map(|k| f_opt.rows(k * h, h).into_owned()).collect())
}

/// Element-wise sum of traces of different lengths; shorter traces are held at
/// their final value.
fn sum_traces(traces: &[Vec<f64>]) -> Vec<f64> {
    let len = traces.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|n| {
            traces
                .iter()
                .filter_map(|t| t.get(n).or(t.last()))
                .sum()
        })
        .collect()
}

/// [`gc_vps`] without the final power normalization.
pub fn gc_vps_unnormalized(
    f_opt: &CMatrix,
    layout: &AnalogLayout,
    q: usize,
    solver: BaseSolver,
    opts: &SolverOptions,
) -> Result<Solution> {
    let plan = GroupPlan::new(layout, q)?;
    if f_opt.nrows() != layout.n_antennas {
        return Err(crate::error::mismatch(format!(
            "target has {} rows for {} antennas",
            f_opt.nrows(),
            layout.n_antennas
        )));
    }
    let blocks = partition_target(f_opt, q)?;
    let mut solutions = Vec::with_capacity(q);
    for (k, block) in blocks.iter().enumerate() {
        solutions.push(solver.solve_unnormalized(block, &plan.group, &plan.group_options(opts, k))?);
    }
    let switches: Vec<SwitchMatrix> = solutions.iter().map(|s| s.precoder.switches.clone()).collect();
    let phases: Vec<PhaseMatrix> = solutions.iter().map(|s| s.precoder.phases.clone()).collect();
    let mut digital = CMatrix::zeros(layout.n_rf, f_opt.ncols());
    for (k, s) in solutions.iter().enumerate() {
        let rows = plan.group.n_rf;
        digital.rows_mut(k * rows, rows).copy_from(&s.precoder.digital);
    }
    let objective: Vec<Vec<f64>> = solutions.iter().map(|s| s.objective_trace.clone()).collect();
    let residuals: Vec<Vec<f64>> = solutions.iter().map(|s| s.residual_trace.clone()).collect();
    Ok(Solution {
        precoder: HybridPrecoder::new(
            SwitchMatrix::block_diagonal(&switches),
            PhaseMatrix::block_diagonal(&phases)?,
            digital,
        )?,
        objective_trace: sum_traces(&objective),
        residual_trace: sum_traces(&residuals),
        pseudo_inverse_fallbacks: solutions.iter().map(|s| s.pseudo_inverse_fallbacks).sum(),
        degenerate_steps: solutions.iter().map(|s| s.degenerate_steps).sum(),
    })
}

/// Group-connected design with `q` groups, each solved by `solver`; the
/// assembled digital precoder is normalized once.
pub fn gc_vps(
    f_opt: &CMatrix,
    layout: &AnalogLayout,
    q: usize,
    solver: BaseSolver,
    opts: &SolverOptions,
) -> Result<Solution> {
    gc_vps_unnormalized(f_opt, layout, q, solver, opts)?.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_gaussian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn partition_round_trips() {
        let f = complex_gaussian(&mut ChaCha8Rng::seed_from_u64(1), 8, 2, 1.0);
        assert_eq!(partition_target(&f, 1).unwrap(), vec![f.clone()]);
        let parts = partition_target(&f, 2).unwrap();
        let mut joined = CMatrix::zeros(8, 2);
        joined.rows_mut(0, 4).copy_from(&parts[0]);
        joined.rows_mut(4, 4).copy_from(&parts[1]);
        assert_eq!(joined, f);
        assert_eq!(partition_target(&f, 8).unwrap()[3].nrows(), 1);
        assert!(partition_target(&f, 3).is_err());
    }

    #[test]
    fn plan_rejects_bad_grouping() {
        let layout = AnalogLayout {
            n_antennas: 16,
            n_rf: 2,
            n_ps: 2,
            phase_bits: 2,
        };
        assert!(GroupPlan::new(&layout, 4).is_err());
        assert_eq!(GroupPlan::new(&layout, 2).unwrap().group.n_antennas, 8);
    }

    #[test]
    fn traces_are_padded_with_final_values() {
        assert_eq!(sum_traces(&[vec![3.0, 2.0, 1.0], vec![5.0]]), vec![8.0, 7.0, 6.0]);
    }
}
