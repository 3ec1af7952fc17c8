//! Dense complex matrix helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative singular-value floor below which a Gram matrix is treated as
/// singular and least-squares solves switch to the pseudo-inverse.
pub const GRAM_RCOND: f64 = 1e-12;

/// Matrix of i.i.d. circularly-symmetric complex Gaussians with the given
/// per-entry variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, variance: f64) -> CMatrix {
    let scale = (variance / 2.0).sqrt();
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * scale, im * scale)
    })
}

/// Thin SVD `m = u * diag(s) * v^H` with singular values in descending order.
pub struct SortedSvd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

pub fn sorted_svd(m: &CMatrix) -> SortedSvd {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return SortedSvd {
            u: CMatrix::zeros(m.nrows(), 0),
            singular_values: Vec::new(),
            v: CMatrix::zeros(m.ncols(), 0),
        };
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^H");
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let v_full = v_t.adjoint();
    SortedSvd {
        u: CMatrix::from_fn(m.nrows(), k, |r, c| u[(r, order[c])]),
        singular_values: order.iter().map(|&i| s[i]).collect(),
        v: CMatrix::from_fn(m.ncols(), k, |r, c| v_full[(r, order[c])]),
    }
}

/// Moore-Penrose pseudo-inverse, discarding singular values below
/// `rcond * sigma_max`.
pub fn pseudo_inverse(m: &CMatrix, rcond: f64) -> CMatrix {
    let svd = sorted_svd(m);
    let cutoff = svd.singular_values.first().copied().unwrap_or(0.0) * rcond;
    let mut out = CMatrix::zeros(m.ncols(), m.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let vk = svd.v.column(k);
        let uk = svd.u.column(k);
        out += (vk * uk.adjoint()) * Complex64::from(1.0 / s);
    }
    out
}

/// Inverse of a Hermitian positive-definite matrix, or `None` when its
/// condition number exceeds `1 / GRAM_RCOND`.
pub fn hermitian_inverse(g: &CMatrix) -> Option<CMatrix> {
    if g.nrows() == 0 {
        return Some(g.clone());
    }
    let svd = sorted_svd(g);
    let smax = svd.singular_values[0];
    let smin = *svd.singular_values.last().unwrap();
    if !(smax > 0.0) || smin <= smax * GRAM_RCOND {
        return None;
    }
    g.clone().cholesky().map(|c| c.inverse())
}

/// Numerical rank with relative tolerance.
pub fn numerical_rank(m: &CMatrix, rcond: f64) -> usize {
    let s = sorted_svd(m).singular_values;
    let Some(&smax) = s.first() else { return 0 };
    s.iter().filter(|&&x| x > smax * rcond && x > 0.0).count()
}

/// Rotates each column so its largest-magnitude entry (first on ties) is real
/// and positive.
pub fn fix_column_phases(m: &mut CMatrix) {
    for mut col in m.column_iter_mut() {
        let mut best = 0;
        let mut best_mag = -1.0;
        for (k, z) in col.iter().enumerate() {
            let mag = z.norm();
            if mag > best_mag {
                best_mag = mag;
                best = k;
            }
        }
        if best_mag > 0.0 {
            let rot = col[best].conj() / best_mag;
            col.iter_mut().for_each(|z| *z *= rot);
        }
    }
}

/// `max |A^H A - I|` over all entries.
pub fn orthonormality_defect(a: &CMatrix) -> f64 {
    let g = a.adjoint() * a;
    let mut worst: f64 = 0.0;
    for r in 0..g.nrows() {
        for c in 0..g.ncols() {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((g[(r, c)] - target).norm());
        }
    }
    worst
}

/// Frobenius distance between the orthogonal projectors onto the column spans.
pub fn projector_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a * a.adjoint() - b * b.adjoint()).norm()
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
