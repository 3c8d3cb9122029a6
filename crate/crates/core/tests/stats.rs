use gq_core::stats::{linear_fit, pairwise_sum, McEstimate};
use proptest::prelude::*;

#[test]
fn estimate_of_known_samples() {
    let xs = [1.0, 2.0, 3.0, 4.0];
    let e = McEstimate::from_samples(&xs, 5).unwrap();
    assert_eq!(e.mean, 2.5);
    // sample variance 5/3, divided by n
    assert!((e.std_error - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    assert_eq!((e.n_samples, e.seed), (4, 5));
    assert!(McEstimate::<f64>::from_samples(&[], 0).is_err());
    assert_eq!(McEstimate::from_samples(&[7.0f64], 0).unwrap().z_score(7.0), 0.0);
    assert!(McEstimate::from_samples(&[7.0f64], 0).unwrap().z_score(8.0).is_infinite());
}

#[test]
fn ratio_estimate() {
    let num = [2.0, 4.0, 6.0];
    let den = [1.0, 2.0, 3.0];
    let r = McEstimate::ratio(&num, &den, 0).unwrap();
    assert_eq!(r.mean, 2.0);
    assert_eq!(r.std_error, 0.0);
    assert!(McEstimate::ratio(&num, &den[..2], 0).is_err());
    assert!(McEstimate::ratio(&num, &[0.0; 3], 0).is_err());
}

#[test]
fn exact_line_is_recovered() {
    let x: Vec<f64> = (0..10).map(f64::from).collect();
    let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.5).collect();
    let (slope, intercept) = linear_fit(&x, &y);
    assert!((slope - 3.0).abs() < 1e-13 && (intercept + 1.5).abs() < 1e-13);
}

proptest! {
    #[test]
    fn pairwise_matches_naive(xs in prop::collection::vec(-1e3f64..1e3, 0..300)) {
        let naive: f64 = xs.iter().sum();
        prop_assert!((pairwise_sum(&xs) - naive).abs() <= 1e-9);
    }
}
