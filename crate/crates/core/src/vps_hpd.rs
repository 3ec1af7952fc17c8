//! Alternating hybrid precoder design: a least-squares digital update
//! alternating with per-RF-chain analog updates, each of which alternates a
//! manifold descent over the phase vector with an exhaustive search over the
//! switch states of every antenna.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::AnalogLayout;
use crate::error::{mismatch, PrecodingError, Result};
use crate::linalg::{complex_gaussian, hermitian_inverse, numerical_rank, pseudo_inverse, CMatrix, CVector, GRAM_RCOND};
use crate::precoder::{
    assemble_analog, check_target, converged, residual, slot_magnitude, HybridPrecoder, PhaseMatrix, PhaseSet,
    Solution, SolverOptions, SwitchMatrix,
};

/// Largest `n_ps` for which the per-antenna switch search enumerates all
/// `2^n_ps` states.
pub const SWITCH_SEARCH_LIMIT: usize = 20;

/// A least-squares solve and whether it needed the pseudo-inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub value: CMatrix,
    pub pseudo_inverse: bool,
}

/// Analog precoder that best reproduces `f_opt` for a fixed digital precoder:
/// `F_opt F_BB^H (F_BB F_BB^H)^{-1}`.
pub fn ls_analog_estimate(f_opt: &CMatrix, f_bb: &CMatrix) -> Result<LeastSquares> {
    if f_opt.ncols() != f_bb.ncols() {
        return Err(mismatch(format!(
            "target has {} streams, digital precoder {}",
            f_opt.ncols(),
            f_bb.ncols()
        )));
    }
    let gram = f_bb * f_bb.adjoint();
    Ok(match hermitian_inverse(&gram) {
        Some(inv) => LeastSquares {
            value: f_opt * f_bb.adjoint() * inv,
            pseudo_inverse: false,
        },
        None => LeastSquares {
            value: f_opt * pseudo_inverse(f_bb, GRAM_RCOND),
            pseudo_inverse: true,
        },
    })
}

/// Digital precoder that best reproduces `f_opt` for a fixed analog precoder:
/// `(P^H S^H S P)^{-1} P^H S^H F_opt`.
pub fn digital_ls(s: &SwitchMatrix, p: &PhaseMatrix, f_opt: &CMatrix) -> Result<LeastSquares> {
    let f_rf = assemble_analog(s, p)?;
    if f_rf.nrows() != f_opt.nrows() {
        return Err(mismatch(format!(
            "analog precoder has {} rows, target {}",
            f_rf.nrows(),
            f_opt.nrows()
        )));
    }
    let gram = f_rf.adjoint() * &f_rf;
    Ok(match hermitian_inverse(&gram) {
        Some(inv) => LeastSquares {
            value: inv * f_rf.adjoint() * f_opt,
            pseudo_inverse: false,
        },
        None => LeastSquares {
            value: pseudo_inverse(&f_rf, GRAM_RCOND) * f_opt,
            pseudo_inverse: true,
        },
    })
}

/// Riemannian gradient descent settings for the phase-vector step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldOptions {
    pub max_iterations: usize,
    pub gradient_tol: f64,
    /// Sufficient-decrease constant. At 1/2 a step is accepted only if it
    /// stops short of the line minimizer of the quadratic, which rules out the
    /// overshoot-and-bounce cycles that step doubling causes with a lax
    /// constant.
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for ManifoldOptions {
    fn default() -> Self {
        ManifoldOptions {
            max_iterations: 200,
            gradient_tol: 1e-6,
            armijo: 0.5,
            max_backtracks: 60,
        }
    }
}

/// `||f - Q p||^2` written as `p^H A p - 2 Re(c^H p) + ||f||^2` with
/// `A = Q^T Q`, `c = Q^T f`, so each evaluation costs `O(n_ps^2)`.
struct Quadratic {
    a: DMatrix<f64>,
    c: CVector,
    f_norm2: f64,
}

impl Quadratic {
    fn new(f: &CVector, q: &DMatrix<bool>) -> Self {
        let n = q.ncols();
        let mut a = DMatrix::zeros(n, n);
        let mut c = CVector::zeros(n);
        for m in 0..q.nrows() {
            for k in 0..n {
                if !q[(m, k)] {
                    continue;
                }
                c[k] += f[m];
                for l in 0..n {
                    if q[(m, l)] {
                        a[(k, l)] += 1.0;
                    }
                }
            }
        }
        Quadratic {
            a,
            c,
            f_norm2: f.norm_squared(),
        }
    }

    fn value(&self, p: &CVector) -> f64 {
        let ap = self.apply(p);
        let quad: f64 = p.iter().zip(ap.iter()).map(|(x, y)| (x.conj() * y).re).sum();
        let lin: f64 = self.c.iter().zip(p.iter()).map(|(c, x)| (c.conj() * x).re).sum();
        (quad - 2.0 * lin + self.f_norm2).max(0.0)
    }

    fn apply(&self, p: &CVector) -> CVector {
        CVector::from_fn(p.len(), |k, _| {
            (0..p.len()).map(|l| p[l] * self.a[(k, l)]).sum()
        })
    }

    /// Euclidean gradient `2 (A p - c)`.
    fn gradient(&self, p: &CVector) -> CVector {
        (self.apply(p) - &self.c) * Complex64::from(2.0)
    }
}

/// `||f - Q p||^2`.
pub fn column_objective(f: &CVector, q: &DMatrix<bool>, p: &CVector) -> f64 {
    let mut acc = 0.0;
    for m in 0..q.nrows() {
        let mut z = f[m];
        for k in 0..q.ncols() {
            if q[(m, k)] {
                z -= p[k];
            }
        }
        acc += z.norm_sqr();
    }
    acc
}

fn retract(p: &CVector, amp: f64) -> CVector {
    p.map(|z| {
        let r = z.norm();
        if r > 0.0 {
            z * (amp / r)
        } else {
            Complex64::from(amp)
        }
    })
}

/// Minimizes `||f - Q p||^2` over `p` with every `|p_k| = 1 / sqrt(n_ps)` by
/// Riemannian gradient descent with Armijo backtracking, starting from
/// `p_init`. Every accepted step decreases the objective.
pub fn optimize_phase_vector(
    f: &CVector,
    q: &DMatrix<bool>,
    p_init: &CVector,
    opts: &ManifoldOptions,
) -> Result<CVector> {
    if q.nrows() != f.len() || q.ncols() != p_init.len() {
        return Err(mismatch(format!(
            "switch block {}x{} against target {} and phases {}",
            q.nrows(),
            q.ncols(),
            f.len(),
            p_init.len()
        )));
    }
    let amp = slot_magnitude(p_init.len());
    let model = Quadratic::new(f, q);
    let mut p = retract(p_init, amp);
    let mut cost = model.value(&p);
    let mut step = 1.0;
    for _ in 0..opts.max_iterations {
        let g = model.gradient(&p);
        let xi = CVector::from_fn(p.len(), |k, _| {
            let radial = (g[k] * p[k].conj()).re / p[k].norm_sqr();
            g[k] - p[k] * radial
        });
        let xi_norm2 = xi.norm_squared();
        if xi_norm2.sqrt() < opts.gradient_tol {
            break;
        }
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial = retract(&(&p - &xi * Complex64::from(step)), amp);
            let trial_cost = model.value(&trial);
            if trial_cost <= cost - opts.armijo * step * xi_norm2 {
                accepted = Some((trial, trial_cost));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((trial, trial_cost)) => {
                p = trial;
                cost = trial_cost;
                step *= 2.0;
            }
            None => break,
        }
    }
    Ok(p)
}

/// Sums of every subset of a phase vector, indexed by bitmask (bit `n` selects
/// entry `n`).
pub struct SubsetSums {
    sums: Vec<Complex64>,
}

impl SubsetSums {
    pub fn new(p: &CVector) -> Result<Self> {
        if p.len() > SWITCH_SEARCH_LIMIT {
            return Err(PrecodingError::Capacity {
                n_ps: p.len(),
                limit: SWITCH_SEARCH_LIMIT,
            });
        }
        let n = 1usize << p.len();
        let mut sums = vec![Complex64::new(0.0, 0.0); n];
        for mask in 1..n {
            let low = mask.trailing_zeros() as usize;
            sums[mask] = sums[mask & (mask - 1)] + p[low];
        }
        Ok(SubsetSums { sums })
    }

    /// Mask minimizing `|f - sum|`; ties go to the smaller mask.
    pub fn best_mask(&self, f: Complex64) -> usize {
        let mut best = 0;
        let mut best_err = f.norm_sqr();
        for (mask, s) in self.sums.iter().enumerate().skip(1) {
            let err = (f - s).norm_sqr();
            if err < best_err {
                best = mask;
                best_err = err;
            }
        }
        best
    }
}

/// Binary row minimizing `|f - row . p|` by exhaustive search over all
/// `2^n_ps` rows; ties go to the row with the smaller value when entry `n` is
/// read as bit `n`.
pub fn optimize_switch_row(f: Complex64, p: &CVector) -> Result<Vec<bool>> {
    let mask = SubsetSums::new(p)?.best_mask(f);
    Ok((0..p.len()).map(|n| mask >> n & 1 == 1).collect())
}

fn optimize_switch_block(f: &CVector, p: &CVector) -> Result<DMatrix<bool>> {
    let sums = SubsetSums::new(p)?;
    let mut q = DMatrix::from_element(f.len(), p.len(), false);
    for m in 0..f.len() {
        let mask = sums.best_mask(f[m]);
        for n in 0..p.len() {
            q[(m, n)] = mask >> n & 1 == 1;
        }
    }
    Ok(q)
}

/// One RF chain's analog subproblem: switch block `Q_i`, phase vector `p_i`
/// and the record of `||f_i - Q_i p_i||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemState {
    pub q: DMatrix<bool>,
    pub p: CVector,
    pub objective: f64,
    /// Objective at the start and after every phase and switch half-step.
    pub trace: Vec<f64>,
    pub inner_iterations: usize,
}

/// Phase-aligned starting point `e^{j angle(Q^T f)} / sqrt(n_ps)`.
fn aligned_phases(f: &CVector, q: &DMatrix<bool>) -> CVector {
    let amp = slot_magnitude(q.ncols());
    CVector::from_fn(q.ncols(), |k, _| {
        let c: Complex64 = (0..q.nrows()).filter(|&m| q[(m, k)]).map(|m| f[m]).sum();
        Complex64::from_polar(amp, c.arg())
    })
}

/// Alternates the phase and switch steps for one RF chain starting from a
/// fair-coin `Q_i`, for at most `opts.max_inner` rounds or until the relative
/// change drops below `opts.rel_tol`.
pub fn solve_subproblem<R: Rng + ?Sized>(
    f: &CVector,
    layout: &AnalogLayout,
    opts: &SolverOptions,
    rng: &mut R,
) -> Result<SubproblemState> {
    if f.len() != layout.n_antennas {
        return Err(mismatch(format!(
            "column has {} entries for {} antennas",
            f.len(),
            layout.n_antennas
        )));
    }
    if layout.n_ps > SWITCH_SEARCH_LIMIT {
        return Err(PrecodingError::Capacity {
            n_ps: layout.n_ps,
            limit: SWITCH_SEARCH_LIMIT,
        });
    }
    let set = PhaseSet::new(layout.phase_bits)?;
    let manifold = ManifoldOptions::default();
    let mut q = DMatrix::from_fn(layout.n_antennas, layout.n_ps, |_, _| rng.random_bool(0.5));
    let mut p = aligned_phases(f, &q);
    let mut objective = column_objective(f, &q, &p);
    let mut trace = vec![objective];
    let mut rounds = 0;
    for _ in 0..opts.max_inner {
        rounds += 1;
        let start = objective;
        p = optimize_phase_vector(f, &q, &p, &manifold)?;
        if opts.quantize_inner {
            p = p.map(|z| Complex64::from_polar(z.norm(), set.quantize(z.arg())));
        }
        trace.push(column_objective(f, &q, &p));
        q = optimize_switch_block(f, &p)?;
        objective = column_objective(f, &q, &p);
        trace.push(objective);
        if converged(start, objective, opts.rel_tol) {
            break;
        }
    }
    Ok(SubproblemState {
        q,
        p,
        objective,
        trace,
        inner_iterations: rounds,
    })
}

const MAX_RESAMPLES: usize = 100;

fn initial_digital<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Result<CMatrix> {
    for _ in 0..MAX_RESAMPLES {
        let f_bb = complex_gaussian(rng, rows, cols, 1.0);
        if numerical_rank(&f_bb, 1e-8) == rows.min(cols) {
            return Ok(f_bb);
        }
    }
    Err(PrecodingError::DegeneratePrecoder)
}

/// [`vps_hpd`] without the final power normalization; the group-connected
/// solver normalizes the assembled precoder once instead.
pub fn vps_hpd_unnormalized(f_opt: &CMatrix, layout: &AnalogLayout, opts: &SolverOptions) -> Result<Solution> {
    check_target(f_opt, layout)?;
    opts.validate()?;
    if layout.n_ps > SWITCH_SEARCH_LIMIT {
        return Err(PrecodingError::Capacity {
            n_ps: layout.n_ps,
            limit: SWITCH_SEARCH_LIMIT,
        });
    }
    let set = PhaseSet::new(layout.phase_bits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let mut f_bb = initial_digital(&mut rng, layout.n_rf, f_opt.ncols())?;
    let mut fallbacks = 0;
    // Match the first analog estimate to the entry power of a fair-coin switch
    // pattern over the phase shifters (1/2 regardless of n_ps); otherwise the
    // switch search can switch everything off and never recover.
    let first = ls_analog_estimate(f_opt, &f_bb)?;
    let rms = first.value.norm() / ((layout.n_antennas * layout.n_rf) as f64).sqrt();
    if rms > 0.0 && rms.is_finite() {
        f_bb *= Complex64::from(rms * std::f64::consts::SQRT_2);
    }
    let mut objective_trace = Vec::new();
    let mut current = None;
    for _ in 0..opts.max_outer {
        let estimate = ls_analog_estimate(f_opt, &f_bb)?;
        fallbacks += estimate.pseudo_inverse as usize;
        let seeds: Vec<u64> = (0..layout.n_rf).map(|_| rng.next_u64()).collect();
        let mut blocks = Vec::with_capacity(layout.n_rf);
        let mut columns = Vec::with_capacity(layout.n_rf);
        for (i, seed) in seeds.into_iter().enumerate() {
            let f_col = estimate.value.column(i).into_owned();
            let mut sub_rng = ChaCha8Rng::seed_from_u64(seed);
            let state = solve_subproblem(&f_col, layout, opts, &mut sub_rng)?;
            blocks.push(state.q);
            columns.push(state.p);
        }
        let s = SwitchMatrix::from_blocks(&blocks)?;
        let p = PhaseMatrix::from_columns(&columns)?.quantized(&set);
        let digital = digital_ls(&s, &p, f_opt)?;
        fallbacks += digital.pseudo_inverse as usize;
        f_bb = digital.value;
        let a = residual(f_opt, &s, &p, &f_bb)?;
        let stop = objective_trace
            .last()
            .is_some_and(|&prev| converged(prev, a, opts.rel_tol));
        objective_trace.push(a);
        current = Some((s, p));
        if stop {
            break;
        }
    }
    let (s, p) = current.expect("at least one outer iteration");
    let precoder = HybridPrecoder::new(s, p, f_bb)?;
    if !crate::linalg::is_finite(&precoder.digital) {
        return Err(PrecodingError::NonFinite("digital precoder"));
    }
    Ok(Solution {
        precoder,
        residual_trace: objective_trace.clone(),
        objective_trace,
        pseudo_inverse_fallbacks: fallbacks,
        degenerate_steps: 0,
    })
}

/// Alternating design of `(S_t, P_t, F_BB)` approximating `f_opt`, with
/// `||S_t P_t F_BB||_F^2` normalized to the stream count.
pub fn vps_hpd(f_opt: &CMatrix, layout: &AnalogLayout, opts: &SolverOptions) -> Result<Solution> {
    vps_hpd_unnormalized(f_opt, layout, opts)?.normalized()
}
