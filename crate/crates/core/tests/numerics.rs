use lem_core::numerics::{
    derive_seed, fit_power_law_with, least_squares_slope, rng_from_seed, saturation_bias, seeded_uniform, sigma_hat,
    sigma_hat_inverse, Matrix,
};
use rand::Rng;

#[test]
fn matvec_and_matmul_agree_with_naive_loops() {
    let a = Matrix::from_vec(3, 2, vec![1.0, -2.0, 0.5, 4.0, 3.0, 0.0]).unwrap();
    let b = Matrix::from_vec(2, 2, vec![2.0, 1.0, -1.0, 0.5]).unwrap();
    let x = [0.3, -0.7];
    let y = a.matvec(&x).unwrap();
    for (r, yr) in y.iter().enumerate() {
        assert_eq!(*yr, a.get(r, 0) * x[0] + a.get(r, 1) * x[1]);
    }
    let c = a.matmul(&b).unwrap();
    for r in 0..3 {
        for k in 0..2 {
            assert_eq!(c.get(r, k), a.get(r, 0) * b.get(0, k) + a.get(r, 1) * b.get(1, k));
        }
    }
    assert_eq!(a.transpose().transpose(), a);
    assert!(a.matvec(&[1.0]).is_err());
}

#[test]
fn norms() {
    let a = Matrix::from_rows(&[vec![1.0, -2.0], vec![-3.0, 0.5]]).unwrap();
    assert_eq!(a.norm_inf(), 3.5);
    assert_eq!(a.norm_one(), 4.0);
    assert_eq!(a.max_abs(), 3.0);
}

#[test]
fn sigma_hat_is_the_logistic_function() {
    for x in [-30.0, -2.0, -0.1, 0.0, 0.7, 5.0, 40.0] {
        let logistic = 1.0 / (1.0 + f64::exp(-x));
        assert!((sigma_hat(x) - logistic).abs() < 1e-15);
        assert!((sigma_hat(x) + sigma_hat(-x) - 1.0).abs() < 1e-15);
    }
    for tau in [1e-6, 0.1, 0.5, 0.9] {
        assert!((sigma_hat(sigma_hat_inverse(tau).unwrap()) - tau).abs() < 1e-12);
    }
    let b = saturation_bias(1e-9).unwrap();
    assert!(1.0 - sigma_hat(b) <= 1e-9);
}

#[test]
fn seeded_streams_are_reproducible_and_distinct() {
    assert_eq!(seeded_uniform(-1.0, 1.0, 50, 3).unwrap(), seeded_uniform(-1.0, 1.0, 50, 3).unwrap());
    assert_ne!(seeded_uniform(-1.0, 1.0, 50, 3).unwrap(), seeded_uniform(-1.0, 1.0, 50, 4).unwrap());
    let streams: std::collections::HashSet<u64> = (0..1000).map(|s| derive_seed(42, s)).collect();
    assert_eq!(streams.len(), 1000);
}

#[test]
fn power_law_fit_recovers_pareto_exponent() {
    // Pareto samples with density ∝ x^{-(a+1)} on [1, ∞).
    let mut rng = rng_from_seed(9);
    let a = 1.5;
    let samples: Vec<f64> = (0..200_000)
        .map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / a))
        .filter(|&x| x < 1e3)
        .collect();
    let fit = fit_power_law_with(&samples, 30).unwrap();
    assert!((fit.exponent - (a + 1.0)).abs() < 0.15, "{}", fit.exponent);
    assert!(fit_power_law_with(&[1.0, -1.0], 10).is_err());
}

#[test]
fn slope_of_exact_line() {
    let xs = [0.0, 1.0, 2.0, 5.0];
    let ys: Vec<f64> = xs.iter().map(|x| 1.5 * x - 2.0).collect();
    assert!((least_squares_slope(&xs, &ys).unwrap() - 1.5).abs() < 1e-14);
    assert!(least_squares_slope(&[1.0, 1.0], &[0.0, 1.0]).is_err());
}
