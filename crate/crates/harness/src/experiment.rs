//! Monte Carlo sweeps: per trial, one channel, one precoder/combiner design per
//! scheme, and the spectral and energy efficiency at every SNR.

use std::time::Instant;

use hybrid_precoding::channel::{generate_channel, optimal_precoder_combiner, ChannelRealization, DigitalTarget};
use hybrid_precoding::linalg::CMatrix;
use hybrid_precoding::{
    energy_efficiency, gc_vps, gc_vps_unnormalized, hardware_counts, spectral_efficiency, vps_hpd,
    vps_hpd_unnormalized, vps_lc_hpd, vps_lc_hpd_unnormalized, AnalogLayout, Architecture, BaseSolver,
    PrecodingError, Sides, Solution, SolverOptions, SystemConfig,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baseline::{frozen_phase_baseline, frozen_phase_unnormalized};
use crate::config::{ExperimentSpec, Scheme};
use crate::error::{HarnessError, Result};
use crate::output::ResultRow;

const CHANNEL_STREAM: u64 = 0;
const TX_STREAM: u64 = 1;
const RX_STREAM: u64 = 2;

/// Independent random streams of one trial. They depend only on the master
/// seed and the trial index, so every scheme sees the same channel.
pub struct TrialSeeds {
    pub channel: ChaCha8Rng,
    pub tx: u64,
    pub rx: u64,
}

fn stream(master: u64, trial: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial as u64 * 3 + purpose);
    rng
}

pub fn trial_seeds(master: u64, trial: usize) -> TrialSeeds {
    TrialSeeds {
        channel: stream(master, trial, CHANNEL_STREAM),
        tx: stream(master, trial, TX_STREAM).next_u64(),
        rx: stream(master, trial, RX_STREAM).next_u64(),
    }
}

/// Channel and fully digital target of one trial.
pub fn trial_channel(spec: &ExperimentSpec, trial: usize) -> Result<(ChannelRealization, DigitalTarget)> {
    let mut seeds = trial_seeds(spec.master_seed, trial);
    let h = generate_channel(&spec.system, &spec.channel, &mut seeds.channel)?;
    let target = optimal_precoder_combiner(&h, spec.system.n_streams)?;
    Ok((h, target))
}

/// Runs the hybrid design of `scheme` on target `f`. Grouped schemes use
/// `groups`; the others ignore it.
pub fn design(
    scheme: Scheme,
    f: &CMatrix,
    layout: &AnalogLayout,
    groups: usize,
    opts: &SolverOptions,
    normalize: bool,
) -> hybrid_precoding::Result<Solution> {
    match (scheme, normalize) {
        (Scheme::VpsHpd, true) => vps_hpd(f, layout, opts),
        (Scheme::VpsHpd, false) => vps_hpd_unnormalized(f, layout, opts),
        (Scheme::VpsLcHpd, true) => vps_lc_hpd(f, layout, opts),
        (Scheme::VpsLcHpd, false) => vps_lc_hpd_unnormalized(f, layout, opts),
        (Scheme::GcVpsHpd, true) => gc_vps(f, layout, groups, BaseSolver::Hpd, opts),
        (Scheme::GcVpsHpd, false) => gc_vps_unnormalized(f, layout, groups, BaseSolver::Hpd, opts),
        (Scheme::GcVpsLcHpd, true) => gc_vps(f, layout, groups, BaseSolver::LcHpd, opts),
        (Scheme::GcVpsLcHpd, false) => gc_vps_unnormalized(f, layout, groups, BaseSolver::LcHpd, opts),
        (Scheme::FrozenPhase, true) => frozen_phase_baseline(f, layout, opts),
        (Scheme::FrozenPhase, false) => frozen_phase_unnormalized(f, layout, opts),
        (Scheme::FullyDigital, _) => Err(PrecodingError::InvalidConfig(
            "the fully digital scheme has no hybrid design".into(),
        )),
    }
}

/// Group count used by `scheme` under `cfg`.
pub fn scheme_groups(scheme: Scheme, cfg: &SystemConfig) -> usize {
    if scheme.is_grouped() {
        cfg.groups
    } else {
        1
    }
}

fn architecture(scheme: Scheme, cfg: &SystemConfig) -> Architecture {
    match scheme {
        Scheme::FullyDigital => Architecture::FullyDigital,
        Scheme::GcVpsHpd | Scheme::GcVpsLcHpd => Architecture::GroupConnected(cfg.groups),
        _ => Architecture::FpsVps,
    }
}

/// Result of one scheme on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutcome {
    /// Per SNR grid point.
    pub se: Vec<f64>,
    pub ee: Vec<f64>,
    /// `||F_opt - F_RF F_BB||_F^2` of the normalized transmit precoder.
    pub residual: f64,
    /// Transmit plus receive design time.
    pub seconds: f64,
}

/// Per scheme, in spec order; `None` marks a failed design or evaluation.
pub type TrialOutcome = Vec<Option<SchemeOutcome>>;

fn evaluate(
    spec: &ExperimentSpec,
    scheme: Scheme,
    h: &ChannelRealization,
    target: &DigitalTarget,
    seeds: (u64, u64),
) -> hybrid_precoding::Result<SchemeOutcome> {
    let cfg = &spec.system;
    let q = scheme_groups(scheme, cfg);
    let start = Instant::now();
    let (f, w) = if scheme == Scheme::FullyDigital {
        (target.f_opt.clone(), target.w_opt.clone())
    } else {
        let tx = design(scheme, &target.f_opt, &cfg.tx_layout(), q, &spec.solver_opts.with_seed(seeds.0), true)?;
        let rx = design(scheme, &target.w_opt, &cfg.rx_layout(), q, &spec.solver_opts.with_seed(seeds.1), false)?;
        (tx.precoder.effective(), rx.precoder.effective())
    };
    let seconds = if spec.measure_time {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    let residual = (&target.f_opt - &f).norm_squared();
    let pm = &spec.power_model;
    let counts = hardware_counts(architecture(scheme, cfg), cfg, Sides::Transmitter);
    let rf_chains = if scheme == Scheme::FullyDigital { cfg.n_tx } else { cfg.n_rf };
    let mut se = Vec::with_capacity(spec.snr_grid_db.len());
    let mut ee = Vec::with_capacity(spec.snr_grid_db.len());
    for &snr_db in &spec.snr_grid_db {
        let p = pm.transmit_w();
        let noise_var = p / 10f64.powf(snr_db / 10.0);
        let rate = spectral_efficiency(&h.matrix, &f, &w, p, noise_var)?;
        se.push(rate);
        ee.push(energy_efficiency(rate, rf_chains, cfg.n_tx, counts, pm)?);
    }
    Ok(SchemeOutcome {
        se,
        ee,
        residual,
        seconds,
    })
}

/// All schemes of `spec` on trial `trial`. Channel errors abort the trial;
/// scheme errors are recorded as `None`.
pub fn run_trial(spec: &ExperimentSpec, trial: usize) -> Result<TrialOutcome> {
    let (h, target) = trial_channel(spec, trial)?;
    let seeds = trial_seeds(spec.master_seed, trial);
    Ok(spec
        .schemes
        .iter()
        .map(|&scheme| evaluate(spec, scheme, &h, &target, (seeds.tx, seeds.rx)).ok())
        .collect())
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(HarnessError::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))
}

/// Every trial of `spec`, in trial order.
pub fn run_trials(spec: &ExperimentSpec, threads: Option<usize>) -> Result<Vec<TrialOutcome>> {
    spec.validate()?;
    pool(threads)?.install(|| {
        (0..spec.trials)
            .into_par_iter()
            .map(|t| run_trial(spec, t))
            .collect()
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Folds trial outcomes, in trial order, into one row per scheme and SNR,
/// sorted by scheme name and SNR.
pub fn aggregate(spec: &ExperimentSpec, outcomes: &[TrialOutcome]) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for (k, &scheme) in spec.schemes.iter().enumerate() {
        let ok: Vec<&SchemeOutcome> = outcomes.iter().filter_map(|t| t[k].as_ref()).collect();
        let failures = outcomes.len() - ok.len();
        let wall_s: f64 = ok.iter().map(|o| o.seconds).sum();
        let residuals: Vec<f64> = ok.iter().map(|o| o.residual).collect();
        let (residual_mean, _) = mean_std(&residuals);
        for (j, &snr_db) in spec.snr_grid_db.iter().enumerate() {
            let se: Vec<f64> = ok.iter().map(|o| o.se[j]).collect();
            let ee: Vec<f64> = ok.iter().map(|o| o.ee[j]).collect();
            let (se_mean, se_std) = mean_std(&se);
            let (ee_mean, _) = mean_std(&ee);
            rows.push(ResultRow {
                scheme: scheme.name().to_string(),
                snr_db,
                n_c: spec.system.n_ps,
                q: scheme_groups(scheme, &spec.system),
                trials: spec.trials,
                se_mean,
                se_std,
                ee_mean,
                wall_s,
                residual_mean,
                failures,
            });
        }
    }
    rows.sort_by(|a, b| a.scheme.cmp(&b.scheme).then(a.snr_db.total_cmp(&b.snr_db)));
    rows
}

/// Runs every trial on a pool of `threads` workers (all cores when `None`)
/// and aggregates.
pub fn run_experiment(spec: &ExperimentSpec, threads: Option<usize>) -> Result<Vec<ResultRow>> {
    let outcomes = run_trials(spec, threads)?;
    Ok(aggregate(spec, &outcomes))
}

/// Objective trace of each hybrid scheme's transmit design on trial 0.
pub fn convergence_traces(spec: &ExperimentSpec) -> Result<Vec<(Scheme, Vec<f64>)>> {
    spec.validate()?;
    let (_, target) = trial_channel(spec, 0)?;
    let seeds = trial_seeds(spec.master_seed, 0);
    let cfg = &spec.system;
    let mut out = Vec::new();
    for &scheme in spec.schemes.iter().filter(|&&s| s != Scheme::FullyDigital) {
        let opts = spec.solver_opts.with_seed(seeds.tx);
        let sol = design(scheme, &target.f_opt, &cfg.tx_layout(), scheme_groups(scheme, cfg), &opts, true)?;
        out.push((scheme, sol.objective_trace));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_streams_are_distinct_and_stable() {
        let a = trial_seeds(5, 0);
        let b = trial_seeds(5, 1);
        assert_ne!(a.tx, b.tx);
        assert_ne!(a.tx, a.rx);
        assert_eq!(trial_seeds(5, 1).rx, b.rx);
    }

    #[test]
    fn sample_statistics() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }
}
