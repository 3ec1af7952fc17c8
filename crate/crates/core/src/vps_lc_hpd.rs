//! Low-complexity hybrid precoder design. The digital precoder is written as
//! `alpha * F_DD` with `F_DD` semi-unitary, and the surrogate objective
//! `alpha^2 ||S_t||_F^2 - 2 alpha Re tr(F_DD F_opt^H S_t P_t)` is minimized by
//! cycling three exact block updates: `F_DD` by an SVD, the phases by
//! per-slot quantized alignment, and `(S_t, alpha)` jointly by a sorted sweep
//! over threshold intervals.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::AnalogLayout;
use crate::error::{mismatch, PrecodingError, Result};
use crate::linalg::{is_finite, sorted_svd, CMatrix};
use crate::precoder::{
    assemble_analog, check_target, converged, residual, HybridPrecoder, PhaseMatrix, PhaseSet, Solution,
    SolverOptions, SwitchMatrix,
};

/// `alpha^2 ||S||_F^2 - 2 alpha Re tr(F_DD F_opt^H S P)`.
pub fn surrogate(f_opt: &CMatrix, s: &SwitchMatrix, p: &PhaseMatrix, f_dd: &CMatrix, alpha: f64) -> Result<f64> {
    let f_rf = assemble_analog(s, p)?;
    if f_rf.nrows() != f_opt.nrows() || f_dd.shape() != (f_rf.ncols(), f_opt.ncols()) {
        return Err(mismatch("surrogate operands do not chain"));
    }
    let cross = (f_dd * f_opt.adjoint() * f_rf).trace().re;
    Ok(alpha * alpha * s.count_on() as f64 - 2.0 * alpha * cross)
}

/// A semi-unitary factor and whether its input was the zero matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiUnitary {
    pub f_dd: CMatrix,
    pub degenerate: bool,
}

/// `F_DD = Omega Phi^H` from the thin SVD `alpha F_opt^H S P = Phi Theta Omega^H`,
/// maximizing `alpha Re tr(F_DD F_opt^H S P)` over matrices with orthonormal
/// columns (or rows, when there are fewer RF chains than streams).
pub fn design_semi_unitary(f_opt: &CMatrix, s: &SwitchMatrix, p: &PhaseMatrix, alpha: f64) -> Result<SemiUnitary> {
    let f_rf = assemble_analog(s, p)?;
    if f_rf.nrows() != f_opt.nrows() {
        return Err(mismatch("target and analog precoder row counts differ"));
    }
    let x = f_opt.adjoint() * f_rf * Complex64::from(alpha);
    let svd = sorted_svd(&x);
    let degenerate = svd.singular_values.first().is_none_or(|&s| s == 0.0);
    Ok(SemiUnitary {
        f_dd: svd.v * svd.u.adjoint(),
        degenerate,
    })
}

/// `f~`: for network `i` and shifter `l`, entry `[S^T F_opt F_DD^H]_{i n_ps + l, i}`,
/// in slot order. Only the block-diagonal entries are formed.
pub fn phase_slot_coefficients(f_opt: &CMatrix, f_dd: &CMatrix, s: &SwitchMatrix, n_ps: usize) -> Result<Vec<Complex64>> {
    let h = f_opt * f_dd.adjoint();
    if s.nrows() != h.nrows() || s.ncols() != n_ps * h.ncols() {
        return Err(mismatch("switch matrix does not match target and digital factor"));
    }
    let mut out = Vec::with_capacity(s.ncols());
    for i in 0..h.ncols() {
        for l in 0..n_ps {
            let col = i * n_ps + l;
            let z: Complex64 = (0..s.nrows()).filter(|&m| s.get(m, col)).map(|m| h[(m, i)]).sum();
            out.push(z);
        }
    }
    Ok(out)
}

/// Phase matrix and the number of slots whose coefficient was exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDesign {
    pub phases: PhaseMatrix,
    pub degenerate_slots: usize,
}

/// Sets every slot to the quantized phase maximizing
/// `alpha Re(conj(f~) e^{j theta})`: the nearest set phase to `angle(f~)`,
/// shifted by `pi` when `alpha < 0`.
pub fn design_phase_matrix(
    f_opt: &CMatrix,
    f_dd: &CMatrix,
    s: &SwitchMatrix,
    alpha: f64,
    layout: &AnalogLayout,
) -> Result<PhaseDesign> {
    let set = PhaseSet::new(layout.phase_bits)?;
    let coeffs = phase_slot_coefficients(f_opt, f_dd, s, layout.n_ps)?;
    let flip = if alpha < 0.0 { std::f64::consts::PI } else { 0.0 };
    let mut degenerate_slots = 0;
    let angles: Vec<f64> = coeffs
        .iter()
        .map(|z| {
            if *z == Complex64::new(0.0, 0.0) {
                degenerate_slots += 1;
                TAU
            } else {
                set.quantize(z.arg() + flip)
            }
        })
        .collect();
    Ok(PhaseDesign {
        phases: PhaseMatrix::from_angles(layout.n_ps, f_dd.nrows(), &angles)?,
        degenerate_slots,
    })
}

/// `M = Re(F_opt F_DD^H P^H)`, the matrix that `alpha S` is fitted to.
pub fn switch_scale_target(f_opt: &CMatrix, f_dd: &CMatrix, p: &PhaseMatrix) -> Result<DMatrix<f64>> {
    let h = f_opt * f_dd.adjoint();
    if h.ncols() != p.n_rf() {
        return Err(mismatch("digital factor and phase matrix disagree on RF chains"));
    }
    let n_ps = p.n_ps();
    Ok(DMatrix::from_fn(h.nrows(), n_ps * p.n_rf(), |m, col| {
        let (i, l) = (col / n_ps, col % n_ps);
        (h[(m, i)] * p.slot(i, l).conj()).re
    }))
}

/// Best `(alpha, threshold)` for fitting `alpha * s` to values `z`, `s` binary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFit {
    pub alpha: f64,
    /// `||z - alpha s||^2 - ||z||^2` at the fit.
    pub objective: f64,
    /// No interval held a feasible vertex; every switch is on and
    /// `alpha = mean(z)`.
    pub degenerate: bool,
}

impl ScaleFit {
    /// Switch state of an entry with value `z`.
    pub fn is_on(&self, z: f64) -> bool {
        if self.degenerate {
            true
        } else if self.alpha > 0.0 {
            z >= self.alpha / 2.0
        } else {
            z < self.alpha / 2.0
        }
    }
}

/// Minimizes `||z - alpha s||^2` over real `alpha` and binary `s`.
///
/// With `z` sorted ascending, the optimal `s` for a given `alpha` switches on
/// a prefix (`alpha < 0`) or a suffix (`alpha > 0`); for each split point the
/// optimal `alpha` is the mean of the switched-on values, and it is kept only
/// if `alpha / 2` lands in `(z_i, z_{i+1}]`. Ties prefer positive `alpha`, then
/// the smaller split.
pub fn fit_switch_scale(values: &[f64]) -> Result<ScaleFit> {
    let n = values.len();
    if n < 2 {
        return Err(PrecodingError::InvalidDimension(format!(
            "switch/scale fit needs at least two entries, got {n}"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(PrecodingError::NonFinite("switch/scale target"));
    }
    let mut z = values.to_vec();
    z.sort_by(f64::total_cmp);
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in &z {
        prefix.push(prefix.last().unwrap() + v);
    }
    let total = prefix[n];

    let mut best: Option<(f64, f64)> = None;
    let mut consider = |alpha: f64, g: f64| {
        if best.is_none_or(|(_, bg)| g < bg) {
            best = Some((alpha, g));
        }
    };
    // Split i (1-based) separates z_1..z_i from z_{i+1}..z_N.
    for i in 1..n {
        let (lo, hi) = (z[i - 1], z[i]);
        let upper = total - prefix[i];
        let alpha = upper / (n - i) as f64;
        if alpha > 0.0 && lo < alpha / 2.0 && alpha / 2.0 <= hi {
            consider(alpha, (n - i) as f64 * alpha * alpha - 2.0 * alpha * upper);
        }
    }
    for i in 1..n {
        let (lo, hi) = (z[i - 1], z[i]);
        let lower = prefix[i];
        let alpha = lower / i as f64;
        if alpha < 0.0 && lo < alpha / 2.0 && alpha / 2.0 <= hi {
            consider(alpha, i as f64 * alpha * alpha - 2.0 * alpha * lower);
        }
    }
    Ok(match best {
        Some((alpha, objective)) => ScaleFit {
            alpha,
            objective,
            degenerate: false,
        },
        None => {
            let alpha = total / n as f64;
            ScaleFit {
                alpha,
                objective: n as f64 * alpha * alpha - 2.0 * alpha * total,
                degenerate: true,
            }
        }
    })
}

/// Switch matrix and scale from the joint fit to [`switch_scale_target`].
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchScale {
    pub switches: SwitchMatrix,
    pub alpha: f64,
    pub degenerate: bool,
}

pub fn design_switch_and_scale(f_opt: &CMatrix, f_dd: &CMatrix, p: &PhaseMatrix) -> Result<SwitchScale> {
    let m = switch_scale_target(f_opt, f_dd, p)?;
    let fit = fit_switch_scale(m.as_slice())?;
    Ok(SwitchScale {
        switches: SwitchMatrix::from_bools(m.map(|v| fit.is_on(v))),
        alpha: fit.alpha,
        degenerate: fit.degenerate,
    })
}

/// Whether the phase stage runs. `Frozen` keeps the initial phases and only
/// cycles the digital and switch/scale stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseStage {
    Optimize,
    Frozen,
}

/// Iterate of the three-stage alternation.
#[derive(Debug, Clone, PartialEq)]
pub struct LcState {
    pub alpha: f64,
    pub f_dd: CMatrix,
    pub switches: SwitchMatrix,
    pub phases: PhaseMatrix,
    pub surrogate: f64,
    pub degenerate_steps: usize,
}

/// Slot `l` of every network starts at phase `2 pi (l + 1) / n_ps`.
pub fn initial_phases(layout: &AnalogLayout) -> Result<PhaseMatrix> {
    let n_ps = layout.n_ps;
    PhaseMatrix::repeated(n_ps, layout.n_rf, |l| TAU * (l + 1) as f64 / n_ps as f64)
}

impl LcState {
    /// `alpha = 1`, fair-coin switches, the given phases, and the matching
    /// semi-unitary factor.
    pub fn initial<R: Rng + ?Sized>(
        f_opt: &CMatrix,
        layout: &AnalogLayout,
        phases: PhaseMatrix,
        rng: &mut R,
    ) -> Result<LcState> {
        if phases.n_rf() != layout.n_rf || phases.n_ps() != layout.n_ps {
            return Err(mismatch("initial phases do not match the layout"));
        }
        let switches = SwitchMatrix::random(layout.n_antennas, layout.switch_columns(), rng);
        let alpha = 1.0;
        let semi = design_semi_unitary(f_opt, &switches, &phases, alpha)?;
        let surrogate = surrogate(f_opt, &switches, &phases, &semi.f_dd, alpha)?;
        Ok(LcState {
            alpha,
            f_dd: semi.f_dd,
            switches,
            phases,
            surrogate,
            degenerate_steps: semi.degenerate as usize,
        })
    }

    /// One pass of phase, switch/scale and semi-unitary updates.
    pub fn cycle(&mut self, f_opt: &CMatrix, layout: &AnalogLayout, stage: PhaseStage) -> Result<()> {
        if stage == PhaseStage::Optimize {
            let design = design_phase_matrix(f_opt, &self.f_dd, &self.switches, self.alpha, layout)?;
            self.phases = design.phases;
            self.degenerate_steps += (design.degenerate_slots > 0) as usize;
        }
        let fit = design_switch_and_scale(f_opt, &self.f_dd, &self.phases)?;
        self.switches = fit.switches;
        self.alpha = fit.alpha;
        self.degenerate_steps += fit.degenerate as usize;
        let semi = design_semi_unitary(f_opt, &self.switches, &self.phases, self.alpha)?;
        self.f_dd = semi.f_dd;
        self.degenerate_steps += semi.degenerate as usize;
        self.surrogate = surrogate(f_opt, &self.switches, &self.phases, &self.f_dd, self.alpha)?;
        Ok(())
    }

    pub fn digital(&self) -> CMatrix {
        &self.f_dd * Complex64::from(self.alpha)
    }

    pub fn residual(&self, f_opt: &CMatrix) -> Result<f64> {
        residual(f_opt, &self.switches, &self.phases, &self.digital())
    }
}

/// Runs the alternation from [`LcState::initial`] with the given starting
/// phases until the relative surrogate
/// change drops below `opts.rel_tol` or `opts.max_outer` cycles, without the
/// final power normalization.
pub fn lc_alternation(
    f_opt: &CMatrix,
    layout: &AnalogLayout,
    opts: &SolverOptions,
    phases: PhaseMatrix,
    stage: PhaseStage,
) -> Result<Solution> {
    check_target(f_opt, layout)?;
    opts.validate()?;
    if layout.n_antennas * layout.switch_columns() < 2 {
        return Err(PrecodingError::InvalidDimension("switch matrix needs at least two entries".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let mut state = LcState::initial(f_opt, layout, phases, &mut rng)?;
    let mut objective_trace = Vec::new();
    let mut residual_trace = Vec::new();
    let mut prev = state.surrogate;
    for _ in 0..opts.max_outer {
        state.cycle(f_opt, layout, stage)?;
        objective_trace.push(state.surrogate);
        residual_trace.push(state.residual(f_opt)?);
        if converged(prev, state.surrogate, opts.rel_tol) {
            break;
        }
        prev = state.surrogate;
    }
    let digital = state.digital();
    if !is_finite(&digital) {
        return Err(PrecodingError::NonFinite("digital precoder"));
    }
    Ok(Solution {
        precoder: HybridPrecoder::new(state.switches, state.phases, digital)?,
        objective_trace,
        residual_trace,
        pseudo_inverse_fallbacks: 0,
        degenerate_steps: state.degenerate_steps,
    })
}

/// [`vps_lc_hpd`] without the final power normalization.
pub fn vps_lc_hpd_unnormalized(f_opt: &CMatrix, layout: &AnalogLayout, opts: &SolverOptions) -> Result<Solution> {
    check_target(f_opt, layout)?;
    lc_alternation(f_opt, layout, opts, initial_phases(layout)?, PhaseStage::Optimize)
}

/// Low-complexity design of `(S_t, P_t, F_BB = alpha F_DD)`, normalized so
/// that `||S_t P_t F_BB||_F^2` equals the stream count.
pub fn vps_lc_hpd(f_opt: &CMatrix, layout: &AnalogLayout, opts: &SolverOptions) -> Result<Solution> {
    vps_lc_hpd_unnormalized(f_opt, layout, opts)?.normalized()
}
