use hybrid_precoding::linalg::{projector_distance, CMatrix};
use hybrid_precoding::{
    generate_channel, optimal_precoder_combiner, steering_vector, ChannelParams, ChannelRealization, SystemConfig,
};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn mean_channel_energy_matches_expectation() {
    let cfg = SystemConfig::reference();
    let params = ChannelParams::reference();
    let n = 10_000;
    let mut total = 0.0;
    for seed in 0..n {
        let h = generate_channel(&cfg, &params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        total += h.matrix.norm_squared();
    }
    let mean = total / n as f64;
    let expected = (64.0 * 16.0 / 4.0) * params.gain_variances.iter().sum::<f64>();
    assert!((expected - 332.8).abs() < 1e-9);
    assert!((mean - expected).abs() < 0.03 * expected, "mean {mean}");
}

#[test]
fn single_path_target_is_the_departure_steering_vector() {
    let aod = 0.7;
    let h = ChannelRealization::from_paths(32, 8, vec![Complex64::new(0.3, -1.1)], vec![aod], vec![2.1]).unwrap();
    let target = optimal_precoder_combiner(&h, 1).unwrap();
    // Dominant eigenvector of H^H H, computed independently.
    let gram = h.matrix.adjoint() * &h.matrix;
    let eig = gram.symmetric_eigen();
    let top = eig.eigenvalues.iamax();
    let v = CMatrix::from_column_slice(32, 1, eig.eigenvectors.column(top).as_slice());
    let a = CMatrix::from_column_slice(32, 1, steering_vector(32, aod).unwrap().as_slice());
    assert!(projector_distance(&target.f_opt, &a) < 1e-8);
    assert!(projector_distance(&v, &a) < 1e-8);
}

#[test]
fn same_seed_same_channel() {
    let cfg = SystemConfig::reference();
    let params = ChannelParams::reference();
    let a = generate_channel(&cfg, &params, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
    let b = generate_channel(&cfg, &params, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
    assert_eq!(a, b);
    assert!(a.consistency_error() < 1e-12);
}
