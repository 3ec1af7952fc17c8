//! Hardware-constrained precoder types: quantized phase sets, the generalized
//! block-diagonal phase matrix `P_t`, the binary switch matrix `S_t`, and the
//! objective shared by every solver.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{AnalogLayout, PHASE_BITS_LIMIT};
use crate::error::{mismatch, PrecodingError, Result};
use crate::linalg::{CMatrix, CVector};

/// The `2^bits` phases `2 pi i / 2^bits`, `i = 1..=2^bits`, available to a
/// `bits`-resolution phase shifter. Index `2^bits` is the zero phase, stored as
/// `2 pi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseSet {
    bits: u32,
}

impl PhaseSet {
    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 || bits > PHASE_BITS_LIMIT {
            return Err(PrecodingError::InvalidConfig(format!(
                "phase resolution must be 1..={PHASE_BITS_LIMIT} bits, got {bits}"
            )));
        }
        Ok(PhaseSet { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn levels(&self) -> usize {
        1usize << self.bits
    }

    pub fn step(&self) -> f64 {
        TAU / self.levels() as f64
    }

    /// Phase of set index `i` (`1..=levels`).
    pub fn angle(&self, index: usize) -> f64 {
        debug_assert!((1..=self.levels()).contains(&index));
        index as f64 * self.step()
    }

    /// Set index of the phase closest to `theta` in circular distance; exact
    /// ties go to the smaller index.
    pub fn nearest_index(&self, theta: f64) -> usize {
        let n = self.levels();
        let t = theta.rem_euclid(TAU) / self.step();
        let lo = t.floor();
        let frac = t - lo;
        let lo = (lo as usize) % n;
        let hi = (lo + 1) % n;
        let as_index = |k: usize| if k == 0 { n } else { k };
        let (lo, hi) = (as_index(lo), as_index(hi));
        if frac < 0.5 {
            lo
        } else if frac > 0.5 {
            hi
        } else {
            lo.min(hi)
        }
    }

    pub fn quantize(&self, theta: f64) -> f64 {
        self.angle(self.nearest_index(theta))
    }

    /// Index of the phase `pi` away from `index`.
    pub fn opposite(&self, index: usize) -> usize {
        let n = self.levels();
        let k = (index + n / 2) % n;
        if k == 0 {
            n
        } else {
            k
        }
    }

    /// Whether `theta` lies on the set, modulo `2 pi`, within `tol` radians.
    pub fn contains(&self, theta: f64, tol: f64) -> bool {
        let q = self.quantize(theta);
        circular_distance(theta, q) <= tol
    }
}

pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Nearest `bits`-resolution phase to `theta`; see [`PhaseSet::nearest_index`].
pub fn quantize_phase(theta: f64, bits: u32) -> Result<f64> {
    Ok(PhaseSet::new(bits)?.quantize(theta))
}

/// `P_t`: `(n_ps * n_rf) x n_rf`, with column `i` nonzero only in rows
/// `i * n_ps .. (i + 1) * n_ps`, each such entry of modulus `1 / sqrt(n_ps)`.
///
/// Stored densely; [`PhaseMatrix::column_vector`] gives the per-chain view.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMatrix {
    n_ps: usize,
    entries: CMatrix,
}

impl PhaseMatrix {
    /// `angles[i * n_ps + l]` is the phase of shifter `l` in network `i`.
    pub fn from_angles(n_ps: usize, n_rf: usize, angles: &[f64]) -> Result<Self> {
        if n_ps == 0 || n_rf == 0 {
            return Err(PrecodingError::InvalidDimension("empty phase matrix".into()));
        }
        if angles.len() != n_ps * n_rf {
            return Err(mismatch(format!(
                "{} phases for {n_rf} networks of {n_ps} shifters",
                angles.len()
            )));
        }
        let amp = slot_magnitude(n_ps);
        let mut entries = CMatrix::zeros(n_ps * n_rf, n_rf);
        for i in 0..n_rf {
            for l in 0..n_ps {
                entries[(i * n_ps + l, i)] = Complex64::from_polar(amp, angles[i * n_ps + l]);
            }
        }
        Ok(PhaseMatrix { n_ps, entries })
    }

    /// Every network uses the same phase pattern, shifter `l` at `angle_of(l)`.
    pub fn repeated(n_ps: usize, n_rf: usize, angle_of: impl Fn(usize) -> f64) -> Result<Self> {
        let angles: Vec<f64> = (0..n_rf).flat_map(|_| (0..n_ps).map(&angle_of)).collect();
        Self::from_angles(n_ps, n_rf, &angles)
    }

    /// Builds from per-network vectors `p_i`; entries are rescaled to modulus
    /// `1 / sqrt(n_ps)` and zero entries get phase zero.
    pub fn from_columns(columns: &[CVector]) -> Result<Self> {
        let n_ps = columns.first().map(|c| c.len()).unwrap_or(0);
        if columns.iter().any(|c| c.len() != n_ps) {
            return Err(mismatch("phase vectors of unequal length"));
        }
        let angles: Vec<f64> = columns.iter().flat_map(|c| c.iter().map(|z| z.arg())).collect();
        Self::from_angles(n_ps, columns.len(), &angles)
    }

    /// Block-diagonal stacking of per-group phase matrices with a common `n_ps`.
    pub fn block_diagonal(blocks: &[PhaseMatrix]) -> Result<Self> {
        let n_ps = blocks.first().map(|b| b.n_ps).ok_or_else(|| mismatch("no phase blocks"))?;
        if blocks.iter().any(|b| b.n_ps != n_ps) {
            return Err(mismatch("phase blocks with different n_ps"));
        }
        let angles: Vec<f64> = blocks.iter().flat_map(|b| b.angles()).collect();
        let n_rf = blocks.iter().map(|b| b.n_rf()).sum();
        let mut out = Self::from_angles(n_ps, n_rf, &angles)?;
        // Copy exact entries so grouping never perturbs the bits.
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            out.entries
                .view_mut((r0, c0), b.entries.shape())
                .copy_from(&b.entries);
            r0 += b.entries.nrows();
            c0 += b.entries.ncols();
        }
        Ok(out)
    }

    pub fn n_ps(&self) -> usize {
        self.n_ps
    }

    pub fn n_rf(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn slot(&self, network: usize, shifter: usize) -> Complex64 {
        self.entries[(network * self.n_ps + shifter, network)]
    }

    /// Phases in slot order (`network * n_ps + shifter`).
    pub fn angles(&self) -> Vec<f64> {
        (0..self.n_rf())
            .flat_map(|i| (0..self.n_ps).map(move |l| (i, l)))
            .map(|(i, l)| self.slot(i, l).arg())
            .collect()
    }

    /// `p_i`: the `n_ps` nonzero entries of column `network`.
    pub fn column_vector(&self, network: usize) -> CVector {
        CVector::from_fn(self.n_ps, |l, _| self.slot(network, l))
    }

    /// Snaps every phase to `set`.
    pub fn quantized(&self, set: &PhaseSet) -> PhaseMatrix {
        let angles: Vec<f64> = self.angles().into_iter().map(|a| set.quantize(a)).collect();
        PhaseMatrix::from_angles(self.n_ps, self.n_rf(), &angles).expect("same shape")
    }

    /// Checks the mask, the slot modulus and, when `set` is given, phase
    /// membership.
    pub fn check(&self, set: Option<&PhaseSet>) -> std::result::Result<(), String> {
        let amp = slot_magnitude(self.n_ps);
        for c in 0..self.n_rf() {
            for r in 0..self.entries.nrows() {
                let z = self.entries[(r, c)];
                if r / self.n_ps == c {
                    if (z.norm() - amp).abs() > 1e-12 {
                        return Err(format!("slot ({r},{c}) has modulus {} != {amp}", z.norm()));
                    }
                    if let Some(set) = set {
                        if !set.contains(z.arg(), 1e-9) {
                            return Err(format!("slot ({r},{c}) phase {} not in the phase set", z.arg()));
                        }
                    }
                } else if z != Complex64::new(0.0, 0.0) {
                    return Err(format!("off-mask entry ({r},{c}) = {z} is nonzero"));
                }
            }
        }
        Ok(())
    }
}

pub fn slot_magnitude(n_ps: usize) -> f64 {
    1.0 / (n_ps as f64).sqrt()
}

/// `S_t`: `n_antennas x (n_ps * n_rf)` on/off switch states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchMatrix {
    entries: DMatrix<bool>,
}

impl SwitchMatrix {
    pub fn from_bools(entries: DMatrix<bool>) -> Self {
        SwitchMatrix { entries }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        SwitchMatrix {
            entries: DMatrix::from_element(rows, cols, false),
        }
    }

    /// I.i.d. fair-coin states.
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        SwitchMatrix {
            entries: DMatrix::from_fn(rows, cols, |_, _| rng.random_bool(0.5)),
        }
    }

    pub fn from_blocks(blocks: &[DMatrix<bool>]) -> Result<Self> {
        let rows = blocks.first().map(|b| b.nrows()).ok_or_else(|| mismatch("no switch blocks"))?;
        if blocks.iter().any(|b| b.nrows() != rows) {
            return Err(mismatch("switch blocks with different row counts"));
        }
        let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
        let mut entries = DMatrix::from_element(rows, cols, false);
        let mut c0 = 0;
        for b in blocks {
            entries.view_mut((0, c0), b.shape()).copy_from(b);
            c0 += b.ncols();
        }
        Ok(SwitchMatrix { entries })
    }

    /// Block-diagonal stacking for the group-connected architecture.
    pub fn block_diagonal(blocks: &[SwitchMatrix]) -> Self {
        let rows = blocks.iter().map(|b| b.nrows()).sum();
        let cols = blocks.iter().map(|b| b.ncols()).sum();
        let mut entries = DMatrix::from_element(rows, cols, false);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            entries.view_mut((r0, c0), b.entries.shape()).copy_from(&b.entries);
            r0 += b.nrows();
            c0 += b.ncols();
        }
        SwitchMatrix { entries }
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.entries[(row, col)]
    }

    pub fn entries(&self) -> &DMatrix<bool> {
        &self.entries
    }

    /// `Q_i`: columns `network * n_ps .. (network + 1) * n_ps`.
    pub fn block(&self, network: usize, n_ps: usize) -> DMatrix<bool> {
        self.entries.columns(network * n_ps, n_ps).into_owned()
    }

    pub fn count_on(&self) -> usize {
        self.entries.iter().filter(|&&b| b).count()
    }

    pub fn to_real(&self) -> DMatrix<f64> {
        self.entries.map(|b| if b { 1.0 } else { 0.0 })
    }

    pub fn to_complex(&self) -> CMatrix {
        self.entries.map(|b| Complex64::from(if b { 1.0 } else { 0.0 }))
    }
}

/// `S_t P_t`, summing only over each column's mask rows.
pub fn assemble_analog(s: &SwitchMatrix, p: &PhaseMatrix) -> Result<CMatrix> {
    if s.ncols() != p.entries.nrows() {
        return Err(mismatch(format!(
            "switch matrix has {} columns, phase matrix has {} rows",
            s.ncols(),
            p.entries.nrows()
        )));
    }
    let n_ps = p.n_ps;
    let mut out = CMatrix::zeros(s.nrows(), p.n_rf());
    for i in 0..p.n_rf() {
        let slots: Vec<Complex64> = (0..n_ps).map(|l| p.slot(i, l)).collect();
        for m in 0..s.nrows() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (l, z) in slots.iter().enumerate() {
                if s.get(m, i * n_ps + l) {
                    acc += z;
                }
            }
            out[(m, i)] = acc;
        }
    }
    Ok(out)
}

/// `(S_t, P_t, F_BB)` with `F_RF = S_t P_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridPrecoder {
    pub switches: SwitchMatrix,
    pub phases: PhaseMatrix,
    pub digital: CMatrix,
}

impl HybridPrecoder {
    pub fn new(switches: SwitchMatrix, phases: PhaseMatrix, digital: CMatrix) -> Result<Self> {
        if switches.ncols() != phases.entries.nrows() || digital.nrows() != phases.n_rf() {
            return Err(mismatch(format!(
                "S_t {}x{}, P_t {}x{}, F_BB {}x{} do not chain",
                switches.nrows(),
                switches.ncols(),
                phases.entries.nrows(),
                phases.n_rf(),
                digital.nrows(),
                digital.ncols()
            )));
        }
        Ok(HybridPrecoder {
            switches,
            phases,
            digital,
        })
    }

    pub fn analog(&self) -> CMatrix {
        assemble_analog(&self.switches, &self.phases).expect("checked at construction")
    }

    /// `S_t P_t F_BB`.
    pub fn effective(&self) -> CMatrix {
        self.analog() * &self.digital
    }

    pub fn n_streams(&self) -> usize {
        self.digital.ncols()
    }

    /// Checks every hardware constraint; `groups > 1` additionally requires
    /// the block-diagonal masks of the group-connected architecture.
    pub fn check_hardware(&self, set: Option<&PhaseSet>, groups: usize) -> std::result::Result<(), String> {
        self.phases.check(set)?;
        if groups > 1 {
            let (rows, cols) = (self.switches.nrows(), self.switches.ncols());
            let n_rf = self.phases.n_rf();
            if rows % groups != 0 || cols % groups != 0 || !n_rf.is_multiple_of(groups) {
                return Err(format!("dimensions not divisible into {groups} groups"));
            }
            let (br, bc) = (rows / groups, cols / groups);
            for r in 0..rows {
                for c in 0..cols {
                    if r / br != c / bc && self.switches.get(r, c) {
                        return Err(format!("switch ({r},{c}) lies outside its group block"));
                    }
                }
            }
            let pe = self.phases.entries();
            let (pr, pc) = (pe.nrows() / groups, n_rf / groups);
            for r in 0..pe.nrows() {
                for c in 0..n_rf {
                    if r / pr != c / pc && pe[(r, c)] != Complex64::new(0.0, 0.0) {
                        return Err(format!("phase entry ({r},{c}) lies outside its group block"));
                    }
                }
            }
        }
        Ok(())
    }

    /// `|  ||S_t P_t F_BB||_F^2 - N_s |`.
    pub fn power_error(&self) -> f64 {
        (self.effective().norm_squared() - self.n_streams() as f64).abs()
    }
}

/// Rescales `F_BB` so that `||S_t P_t F_BB||_F^2 = N_s`.
pub fn normalize_digital(pre: HybridPrecoder) -> Result<HybridPrecoder> {
    let norm = pre.effective().norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(PrecodingError::DegeneratePrecoder);
    }
    let scale = (pre.n_streams() as f64).sqrt() / norm;
    let digital = pre.digital * Complex64::from(scale);
    Ok(HybridPrecoder { digital, ..pre })
}

/// `||F_opt - S_t P_t F_BB||_F^2`.
pub fn residual(f_opt: &CMatrix, s: &SwitchMatrix, p: &PhaseMatrix, f_bb: &CMatrix) -> Result<f64> {
    let analog = assemble_analog(s, p)?;
    if f_bb.nrows() != analog.ncols() || f_opt.shape() != (analog.nrows(), f_bb.ncols()) {
        return Err(mismatch(format!(
            "F_opt {:?} vs S_t P_t {:?} times F_BB {:?}",
            f_opt.shape(),
            analog.shape(),
            f_bb.shape()
        )));
    }
    Ok((f_opt - analog * f_bb).norm_squared())
}

/// Iteration caps and stopping rule shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Outer alternations (analog/digital, or three-stage cycles).
    pub max_outer: usize,
    /// Phase/switch alternations per RF-chain subproblem.
    pub max_inner: usize,
    /// Stop when `|a_n - a_{n+1}| / |a_n|` drops below this.
    pub rel_tol: f64,
    pub rng_seed: u64,
    /// Quantize `p_i` after every phase step instead of once per outer
    /// iteration.
    pub quantize_inner: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_outer: 30,
            max_inner: 10,
            rel_tol: 1e-3,
            rng_seed: 0,
            quantize_inner: false,
        }
    }
}

impl SolverOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(PrecodingError::InvalidConfig("iteration caps must be positive".into()));
        }
        if !(self.rel_tol >= 0.0) || !self.rel_tol.is_finite() {
            return Err(PrecodingError::InvalidConfig("rel_tol must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// Relative-change stopping rule; a zero previous value stops immediately.
pub(crate) fn converged(prev: f64, next: f64, rel_tol: f64) -> bool {
    if prev == 0.0 {
        return true;
    }
    (prev - next).abs() / prev.abs() < rel_tol
}

/// Solver output with its convergence record.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub precoder: HybridPrecoder,
    /// Objective after each outer iteration: the residual for the alternating
    /// solver, the surrogate for the closed-form one.
    pub objective_trace: Vec<f64>,
    /// True residual `||F_opt - S_t P_t F_BB||_F^2` after each outer iteration,
    /// before final normalization.
    pub residual_trace: Vec<f64>,
    /// Least-squares solves that fell back to a pseudo-inverse.
    pub pseudo_inverse_fallbacks: usize,
    /// Closed-form stages that hit a degenerate input.
    pub degenerate_steps: usize,
}

impl Solution {
    pub fn iterations(&self) -> usize {
        self.objective_trace.len()
    }

    /// Rescales the digital precoder to the stream-count power constraint.
    pub fn normalized(self) -> Result<Solution> {
        Ok(Solution {
            precoder: normalize_digital(self.precoder)?,
            ..self
        })
    }
}

/// Layout sanity check shared by the solvers.
pub(crate) fn check_target(f_opt: &CMatrix, layout: &AnalogLayout) -> Result<()> {
    layout.validate()?;
    if f_opt.nrows() != layout.n_antennas {
        return Err(mismatch(format!(
            "target has {} rows for {} antennas",
            f_opt.nrows(),
            layout.n_antennas
        )));
    }
    if f_opt.ncols() == 0 {
        return Err(PrecodingError::InvalidDimension("target has no streams".into()));
    }
    if !crate::linalg::is_finite(f_opt) {
        return Err(PrecodingError::NonFinite("target precoder"));
    }
    Ok(())
}
