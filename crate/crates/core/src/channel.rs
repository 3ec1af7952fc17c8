//! Clustered (Saleh-Valenzuela style) narrowband mmWave channels on uniform
//! linear arrays, and the fully digital SVD precoder/combiner they induce.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{PrecodingError, Result};
use crate::linalg::{fix_column_phases, sorted_svd, CMatrix, CVector};

/// Path statistics of the channel generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub n_paths: usize,
    /// Variance of each complex path gain; one entry per path.
    pub gain_variances: Vec<f64>,
    #[serde(default)]
    pub rng_seed: u64,
}

impl ChannelParams {
    /// Four paths: one dominant path with unit variance, three at 0.1.
    pub fn reference() -> Self {
        ChannelParams {
            n_paths: 4,
            gain_variances: vec![1.0, 0.1, 0.1, 0.1],
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(PrecodingError::InvalidConfig("n_paths must be at least 1".into()));
        }
        if self.gain_variances.len() != self.n_paths {
            return Err(PrecodingError::InvalidConfig(format!(
                "gain_variances has {} entries for {} paths",
                self.gain_variances.len(),
                self.n_paths
            )));
        }
        if self.gain_variances.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(PrecodingError::InvalidConfig(
                "gain variances must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// One channel draw: per-path gains and angles plus the assembled
/// `n_rx x n_tx` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub gains: Vec<Complex64>,
    /// Angles of departure, radians.
    pub aod: Vec<f64>,
    /// Angles of arrival, radians.
    pub aoa: Vec<f64>,
    pub matrix: CMatrix,
}

impl ChannelRealization {
    /// Builds `H = sqrt(n_tx n_rx / L) * sum_l g_l a(n_rx, aoa_l) a(n_tx, aod_l)^H`.
    pub fn from_paths(
        n_tx: usize,
        n_rx: usize,
        gains: Vec<Complex64>,
        aod: Vec<f64>,
        aoa: Vec<f64>,
    ) -> Result<Self> {
        if gains.is_empty() || gains.len() != aod.len() || gains.len() != aoa.len() {
            return Err(PrecodingError::InvalidDimension(format!(
                "path lists disagree: {} gains, {} AoDs, {} AoAs",
                gains.len(),
                aod.len(),
                aoa.len()
            )));
        }
        let matrix = path_sum(n_tx, n_rx, &gains, &aod, &aoa)?;
        Ok(ChannelRealization {
            gains,
            aod,
            aoa,
            matrix,
        })
    }

    pub fn n_tx(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn n_rx(&self) -> usize {
        self.matrix.nrows()
    }

    /// Relative Frobenius error between the stored matrix and the path sum
    /// rebuilt from gains and angles.
    pub fn consistency_error(&self) -> f64 {
        let rebuilt = path_sum(self.n_tx(), self.n_rx(), &self.gains, &self.aod, &self.aoa)
            .expect("stored paths are consistent");
        let scale = rebuilt.norm().max(f64::MIN_POSITIVE);
        (&self.matrix - rebuilt).norm() / scale
    }
}

fn path_sum(n_tx: usize, n_rx: usize, gains: &[Complex64], aod: &[f64], aoa: &[f64]) -> Result<CMatrix> {
    let l = gains.len();
    let scale = ((n_tx * n_rx) as f64 / l as f64).sqrt();
    let mut h = CMatrix::zeros(n_rx, n_tx);
    for p in 0..l {
        let ar = steering_vector(n_rx, aoa[p])?;
        let at = steering_vector(n_tx, aod[p])?;
        h += (ar * at.adjoint()) * (gains[p] * scale);
    }
    Ok(h)
}

/// ULA response `a(n, angle)[k] = exp(j pi k sin(angle)) / sqrt(n)`.
pub fn steering_vector(n: usize, angle: f64) -> Result<CVector> {
    if n == 0 {
        return Err(PrecodingError::InvalidDimension(
            "steering vector needs at least one antenna".into(),
        ));
    }
    let amp = 1.0 / (n as f64).sqrt();
    let step = PI * angle.sin();
    Ok(CVector::from_fn(n, |k, _| Complex64::from_polar(amp, step * k as f64)))
}

/// Draws one realization. Per path, the gain is drawn first, then the angle of
/// departure, then the angle of arrival; angles are uniform on `(0, 2 pi)`.
pub fn generate_channel<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<ChannelRealization> {
    params.validate()?;
    if cfg.n_tx == 0 || cfg.n_rx == 0 {
        return Err(PrecodingError::InvalidDimension("antenna counts must be positive".into()));
    }
    let mut gains = Vec::with_capacity(params.n_paths);
    let mut aod = Vec::with_capacity(params.n_paths);
    let mut aoa = Vec::with_capacity(params.n_paths);
    for &var in &params.gain_variances {
        let sd = (var / 2.0).sqrt();
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        gains.push(Complex64::new(re * sd, im * sd));
        aod.push(open_angle(rng));
        aoa.push(open_angle(rng));
    }
    ChannelRealization::from_paths(cfg.n_tx, cfg.n_rx, gains, aod, aoa)
}

fn open_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let a = rng.random::<f64>() * TAU;
        if a > 0.0 {
            return a;
        }
    }
}

/// Fully digital precoder and combiner: the dominant right and left singular
/// vectors of `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalTarget {
    /// `n_tx x n_streams`, orthonormal columns.
    pub f_opt: CMatrix,
    /// `n_rx x n_streams`, orthonormal columns.
    pub w_opt: CMatrix,
    /// The `n_streams` largest singular values, descending.
    pub singular_values: Vec<f64>,
    /// Set when `H` has fewer than `n_streams` numerically nonzero singular values.
    pub rank_deficient: bool,
}

/// Singular vectors are returned with their largest-magnitude entry rotated to
/// be real positive, independently per vector.
pub fn optimal_precoder_combiner(h: &ChannelRealization, n_streams: usize) -> Result<DigitalTarget> {
    optimal_from_matrix(&h.matrix, n_streams)
}

pub fn optimal_from_matrix(h: &CMatrix, n_streams: usize) -> Result<DigitalTarget> {
    if n_streams == 0 || n_streams > h.nrows().min(h.ncols()) {
        return Err(PrecodingError::InvalidDimension(format!(
            "{n_streams} streams requested from a {}x{} channel",
            h.nrows(),
            h.ncols()
        )));
    }
    let svd = sorted_svd(h);
    let mut f_opt = svd.v.columns(0, n_streams).into_owned();
    let mut w_opt = svd.u.columns(0, n_streams).into_owned();
    fix_column_phases(&mut f_opt);
    fix_column_phases(&mut w_opt);
    let singular_values = svd.singular_values[..n_streams].to_vec();
    let smax = svd.singular_values[0];
    let rank_deficient = singular_values[n_streams - 1] <= smax * 1e-12 || smax == 0.0;
    Ok(DigitalTarget {
        f_opt,
        w_opt,
        singular_values,
        rank_deficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{orthonormality_defect, projector_distance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::from(re)
    }

    #[test]
    fn steering_vector_examples() {
        let a = steering_vector(1, 1.234).unwrap();
        assert_eq!(a.len(), 1);
        assert!((a[0] - c(1.0)).norm() < 1e-15);

        let a = steering_vector(4, 0.0).unwrap();
        for z in a.iter() {
            assert!((z - c(0.5)).norm() < 1e-15);
        }

        let a = steering_vector(2, PI / 2.0).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((a[0] - c(r)).norm() < 1e-15);
        assert!((a[1] - c(-r)).norm() < 1e-15);

        assert!(matches!(steering_vector(0, 0.3), Err(PrecodingError::InvalidDimension(_))));
    }

    #[test]
    fn single_path_channel_is_rank_one_and_flat() {
        let cfg = SystemConfig::reference();
        let h = ChannelRealization::from_paths(cfg.n_tx, cfg.n_rx, vec![c(1.0)], vec![0.0], vec![0.0]).unwrap();
        // sqrt(Nt Nr) * (1/sqrt(Nr)) * (1/sqrt(Nt)) = 1 in every entry.
        for z in h.matrix.iter() {
            assert!((z - c(1.0)).norm() < 1e-12);
        }
        let target = optimal_precoder_combiner(&h, 1).unwrap();
        let at = steering_vector(cfg.n_tx, 0.0).unwrap();
        let at = CMatrix::from_column_slice(cfg.n_tx, 1, at.as_slice());
        assert!(projector_distance(&target.f_opt, &at) < 1e-10);
    }

    #[test]
    fn generated_channel_is_deterministic_and_consistent() {
        let cfg = SystemConfig::reference();
        let params = ChannelParams::reference();
        let a = generate_channel(&cfg, &params, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = generate_channel(&cfg, &params, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
        assert!(a.consistency_error() < 1e-12);
        assert!(a.aod.iter().chain(&a.aoa).all(|&x| x > 0.0 && x < TAU));
        assert_eq!(a.matrix.shape(), (16, 64));
    }

    #[test]
    fn rejects_bad_params() {
        let cfg = SystemConfig::reference();
        let mut params = ChannelParams::reference();
        params.gain_variances.pop();
        assert!(generate_channel(&cfg, &params, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        params.n_paths = 0;
        params.gain_variances.clear();
        assert!(params.validate().is_err());
    }

    #[test]
    fn diagonal_channel_targets_are_standard_basis() {
        let mut h = CMatrix::zeros(3, 3);
        h[(0, 0)] = c(3.0);
        h[(1, 1)] = c(2.0);
        h[(2, 2)] = c(1.0);
        let t = optimal_from_matrix(&h, 2).unwrap();
        let e = CMatrix::from_fn(3, 2, |r, col| if r == col { c(1.0) } else { c(0.0) });
        assert!(projector_distance(&t.f_opt, &e) < 1e-12);
        assert!((t.f_opt.clone() - &e).norm() < 1e-12, "phase convention makes the columns exact");
        assert_eq!(t.singular_values, vec![3.0, 2.0]);
        assert!(!t.rank_deficient);
    }

    #[test]
    fn targets_are_semi_unitary_and_ordered() {
        let cfg = SystemConfig::reference();
        let params = ChannelParams::reference();
        for seed in 0..20 {
            let h = generate_channel(&cfg, &params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let t = optimal_precoder_combiner(&h, cfg.n_streams).unwrap();
            assert!(orthonormality_defect(&t.f_opt) < 1e-10);
            assert!(orthonormality_defect(&t.w_opt) < 1e-10);
            assert!(t.singular_values.windows(2).all(|w| w[0] >= w[1]));
            // W^H H F is diagonal with the singular values in modulus.
            let d = t.w_opt.adjoint() * &h.matrix * &t.f_opt;
            for i in 0..cfg.n_streams {
                for j in 0..cfg.n_streams {
                    let expect = if i == j { t.singular_values[i] } else { 0.0 };
                    assert!((d[(i, j)].norm() - expect).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn rank_deficiency_is_flagged() {
        let h = ChannelRealization::from_paths(8, 4, vec![c(1.0)], vec![0.3], vec![1.1]).unwrap();
        let t = optimal_precoder_combiner(&h, 2).unwrap();
        assert!(t.rank_deficient);
        assert!(orthonormality_defect(&t.f_opt) < 1e-10);
        assert!(optimal_precoder_combiner(&h, 5).is_err());
    }
}
