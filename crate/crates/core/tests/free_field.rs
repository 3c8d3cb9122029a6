use gq_core::free_field::{covariance_check, mass_check, wick_four_point_check, MIN_WICK_SAMPLES};
use gq_core::spectral::eigenvalue;
use gq_core::{Error, FieldSampler, FourierField, ModeGrid};
use proptest::prelude::*;

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn draws(n_modes: usize, seed: u64, count: usize) -> Vec<FourierField> {
    FieldSampler::new(ModeGrid::new(n_modes, 1.0).unwrap(), seed).samples(0, count)
}

#[test]
fn sampler_is_deterministic_per_index() {
    let s = FieldSampler::new(ModeGrid::new(3, 1.0).unwrap(), 77);
    let batch = s.samples(10, 5);
    for (i, f) in batch.iter().enumerate() {
        assert_eq!(*f, s.sample(10 + i as u64));
        assert_eq!(*f, FieldSampler::new(ModeGrid::new(3, 1.0).unwrap(), 77).sample(10 + i as u64));
    }
    assert_ne!(s.sample(0), s.sample(1));
    assert_ne!(s.sample(0), FieldSampler::new(ModeGrid::new(3, 1.0).unwrap(), 78).sample(0));
}

#[test]
fn second_moments_are_diagonal_and_circular() {
    let fields = draws(2, 11, 200_000);
    for k in -2..=2i64 {
        let lambda = eigenvalue(k, 1.0);
        let re: Vec<f64> = fields.iter().map(|f| f.get(k).re * f.get(k).re * lambda).collect();
        let im: Vec<f64> = fields.iter().map(|f| f.get(k).im * f.get(k).im * lambda).collect();
        let cross: Vec<f64> = fields.iter().map(|f| f.get(k).re * f.get(k).im * lambda).collect();
        let (m, se) = mean_se(&re);
        assert!((m - 0.5).abs() <= 3.0 * se, "Re^2 at {k}: {m}");
        let (m, se) = mean_se(&im);
        assert!((m - 0.5).abs() <= 3.0 * se, "Im^2 at {k}: {m}");
        let (m, se) = mean_se(&cross);
        assert!(m.abs() <= 3.0 * se);
        // Gaussian fourth moment of a real component: 3 sigma^4
        let fourth: Vec<f64> = fields.iter().map(|f| (f.get(k).re.powi(2) * lambda).powi(2)).collect();
        let (m, se) = mean_se(&fourth);
        assert!((m - 0.75).abs() <= 4.0 * se, "fourth at {k}: {m} z = {}", (m - 0.75) / se);
    }
    let mixed: Vec<f64> = fields.iter().map(|f| (f.get(1) * f.get(-1).conj()).re * eigenvalue(1, 1.0)).collect();
    let (m, se) = mean_se(&mixed);
    assert!(m.abs() <= 3.0 * se);
}

#[test]
fn library_checks_agree_with_direct_statistics() {
    let fields = draws(2, 12, 20_000);
    let checks = covariance_check(&fields, 1.0, 1).unwrap();
    assert_eq!(checks.len(), 15);
    for c in &checks {
        assert!(c.passes(4.0), "{} z = {}", c.name, c.z_score);
    }
    let direct: Vec<f64> = fields.iter().map(|f| f.get(1).norm_sqr()).collect();
    let (m, _) = mean_se(&direct);
    let coded = checks.iter().find(|c| c.name == "E|a(1)|^2").unwrap();
    assert!((coded.estimate.mean - m).abs() < 1e-15);
    let mass = mass_check(&fields, 1.0, 1).unwrap();
    assert!(mass.passes(4.0));
    let expected: f64 = (-2..=2).map(|k| 1.0 / eigenvalue(k, 1.0)).sum();
    assert!((mass.expected - expected).abs() < 1e-15);
}

#[test]
fn four_point_examples() {
    let fields = draws(1, 13, MIN_WICK_SAMPLES);
    let checks = wick_four_point_check(&fields, &[(0, 1), (0, 0)], 1.0, 3, MIN_WICK_SAMPLES).unwrap();
    for c in &checks {
        assert!(c.passes(4.0), "{} z = {}", c.name, c.z_score);
    }
    // kappa = 1, lambda_0 = 1: E|a_0|^4 = 2
    let direct: Vec<f64> = fields.iter().map(|f| f.get(0).norm_sqr().powi(2)).collect();
    let (m, se) = mean_se(&direct);
    assert!((m - 2.0).abs() <= 3.0 * se);
    let l1 = eigenvalue(1, 1.0);
    let direct: Vec<f64> = fields.iter().map(|f| f.get(0).norm_sqr() * f.get(1).norm_sqr() * l1).collect();
    let (m, se) = mean_se(&direct);
    assert!((m - 1.0).abs() <= 3.0 * se);
}

#[test]
fn four_point_needs_enough_samples() {
    let fields = draws(1, 14, 100);
    assert!(matches!(wick_four_point_check(&fields, &[(0, 0)], 1.0, 0, MIN_WICK_SAMPLES), Err(Error::Statistics(_))));
    assert!(matches!(covariance_check::<f64>(&[], 1.0, 0), Err(Error::Statistics(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn samples_are_finite_and_sized(seed in any::<u64>(), n in 0usize..6, i in any::<u64>()) {
        let f = FieldSampler::new(ModeGrid::new(n, 0.5).unwrap(), seed).sample(i);
        prop_assert_eq!(f.n_modes(), n);
        prop_assert!(f.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite()));
    }
}
