use gq_core::gibbs::{choose_default_k, CutoffKind, FieldFunctional};
use gq_core::spectral::green_classical;
use gq_core::{ClassicalModel, CutoffSpec, Error, FieldSampler, FlowConfig, FourierField, HartreeFlow, InteractionSpec, ModeGrid, Observable};
use gq_core::hartree::Integrator;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(n: usize, rng: &mut ChaCha8Rng) -> FourierField {
    FourierField::from_fn(n, |_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// `int |u|^6` as the momentum-conserving sum over six indices.
fn sextic(a: &FourierField) -> f64 {
    let n = a.n_modes() as i64;
    let mut acc = C::new(0.0, 0.0);
    for k1 in -n..=n {
        for k2 in -n..=n {
            for k3 in -n..=n {
                for k4 in -n..=n {
                    for k5 in -n..=n {
                        let k6 = k1 - k2 + k3 - k4 + k5;
                        if k6.abs() > n {
                            continue;
                        }
                        acc += a.get(k1) * a.get(k2).conj() * a.get(k3) * a.get(k4).conj() * a.get(k5) * a.get(k6).conj();
                    }
                }
            }
        }
    }
    assert!(acc.im.abs() < 1e-10 * acc.re.abs());
    acc.re
}

/// `-(1/3) sum_{q1+q2+q3=0} w(q1) w(q2) rho(q1) rho(q2) rho(q3)` with `rho(q) = sum_{k-k'=q} a_k conj(a_k')`.
fn w_by_density(a: &FourierField, w: &InteractionSpec) -> f64 {
    let n = a.n_modes() as i64;
    let rho = |q: i64| -> C { (-n..=n).filter(|k| (k - q).abs() <= n).map(|k| a.get(k) * a.get(k - q).conj()).sum() };
    let table: Vec<C> = (-2 * n..=2 * n).map(rho).collect();
    let r = |q: i64| table[(q + 2 * n) as usize];
    let mut acc = C::new(0.0, 0.0);
    for q1 in -2 * n..=2 * n {
        for q2 in -2 * n..=2 * n {
            let q3 = -q1 - q2;
            if q3.abs() > 2 * n {
                continue;
            }
            acc += r(q1) * r(q2) * r(q3) * (w.fourier(q1) * w.fourier(q2));
        }
    }
    -acc.re / 3.0
}

fn model(n: usize, w: InteractionSpec, cutoff: CutoffSpec, seed: u64) -> ClassicalModel {
    ClassicalModel::new(ModeGrid::new(n, 1.0).unwrap(), w, cutoff, seed)
}

#[test]
fn delta_interaction_matches_sextic_sum() {
    let m = model(4, InteractionSpec::delta(1.0), CutoffSpec::none(), 0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let a = random_field(4, &mut rng);
        let coded = m.interaction_w(&a).unwrap();
        let oracle = -sextic(&a) / 3.0;
        assert!((coded - oracle).abs() <= 1e-10 * oracle.abs(), "{coded} vs {oracle}");
    }
}

#[test]
fn smooth_interaction_matches_density_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for w in [InteractionSpec::gaussian(0.7, 0.08).unwrap(), InteractionSpec::tent(1.3, 0.3).unwrap(), InteractionSpec::delta(-0.4)] {
        let m = model(5, w.clone(), CutoffSpec::none(), 0);
        for _ in 0..20 {
            let a = random_field(5, &mut rng);
            let coded = m.interaction_w(&a).unwrap();
            let oracle = w_by_density(&a, &w);
            assert!((coded - oracle).abs() <= 1e-11 * oracle.abs(), "{coded} vs {oracle}");
        }
    }
}

#[test]
fn constant_field_interaction() {
    let m = model(3, InteractionSpec::delta(1.0), CutoffSpec::none(), 0);
    let mut a = FourierField::zeros(3);
    a.set(0, C::new(0.6, -0.8) * 1.3).unwrap();
    let w = m.interaction_w(&a).unwrap();
    assert!((w + 1.3f64.powi(6) / 3.0).abs() < 1e-13);
    assert_eq!(model(3, InteractionSpec::zero(), CutoffSpec::none(), 0).interaction_w(&a).unwrap(), 0.0);
}

#[test]
fn interaction_bounded_by_sup_norm() {
    let w = InteractionSpec::gaussian(1.0, 0.1).unwrap();
    let sup: f64 = (-2000i64..=2000).map(|k| w.fourier(k)).sum();
    let m = model(6, w, CutoffSpec::none(), 0);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let a = random_field(6, &mut rng);
        assert!(m.interaction_w(&a).unwrap().abs() <= sup * sup * a.mass().powi(3) / 3.0);
    }
}

#[test]
fn cutoff_examples() {
    let k = 2.5;
    for spec in [CutoffSpec::sharp(k).unwrap(), CutoffSpec::smooth(k).unwrap()] {
        assert_eq!(spec.eval(0.0), 1.0);
        assert_eq!(spec.eval(2.0 * k), 0.0);
    }
    assert_eq!(CutoffSpec::sharp(k).unwrap().eval(k), 1.0);
    let smooth = CutoffSpec::smooth(k).unwrap();
    assert_eq!(smooth.eval(k / 2.0), 1.0);
    let vals: Vec<f64> = (0..=200).map(|i| smooth.eval(k / 2.0 + k / 2.0 * i as f64 / 200.0)).collect();
    assert!(vals.windows(2).all(|p| p[1] <= p[0]));
    assert_eq!(vals[200], 0.0);
    assert_eq!(CutoffSpec::none().eval(1e300), 1.0);
    assert!(matches!(CutoffSpec::sharp(0.0), Err(Error::Config(_))));
    assert!(matches!(CutoffSpec::smooth(f64::INFINITY), Err(Error::Config(_))));
    assert_eq!("smooth".parse::<CutoffKind>().unwrap(), CutoffKind::Smooth);
    assert!("soft".parse::<CutoffKind>().is_err());
}

#[test]
fn free_partition_is_one() {
    let z = model(4, InteractionSpec::zero(), CutoffSpec::none(), 3).mc_partition_z(2000).unwrap();
    assert_eq!(z.mean, 1.0);
    assert_eq!(z.std_error, 0.0);
}

#[test]
fn free_partition_with_cutoff_is_mass_probability() {
    let k = 1.3;
    let n = 5000;
    let z = model(4, InteractionSpec::zero(), CutoffSpec::sharp(k).unwrap(), 21).mc_partition_z(n).unwrap();
    let sampler = FieldSampler::new(ModeGrid::new(4, 1.0).unwrap(), 21);
    let below = (0..n as u64).filter(|&i| sampler.sample(i).mass() <= k).count();
    assert!((z.mean - below as f64 / n as f64).abs() < 1e-14);
    assert!(z.mean > 0.0 && z.mean < 1.0);
}

#[test]
fn interacting_partition_stable_under_doubling() {
    let m = model(4, InteractionSpec::delta(1.0), CutoffSpec::sharp(2.0).unwrap(), 9);
    let a = m.mc_partition_z(10_000).unwrap();
    let b = m.mc_partition_z(20_000).unwrap();
    assert!(a.mean.is_finite() && a.mean > 0.0);
    let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.mean - b.mean).abs() <= 3.0 * se);
}

#[test]
fn weight_overflow_is_reported() {
    let m = model(4, InteractionSpec::delta(1e4), CutoffSpec::none(), 1);
    match m.mc_partition_z(50) {
        Err(Error::Numerical(msg)) => assert!(msg.contains("N =") && msg.contains("W =")),
        other => panic!("expected an overflow report, got {other:?}"),
    }
}

#[test]
fn state_of_one_and_of_mass() {
    let m = model(4, InteractionSpec::delta(1.0), CutoffSpec::sharp(2.0).unwrap(), 2);
    assert_eq!(m.mc_state_rho(|_| 1.0, 3000).unwrap().mean, 1.0);
    let free = model(4, InteractionSpec::zero(), CutoffSpec::none(), 2);
    let expected: f64 = (-4..=4).map(|k| green_classical(k, 1.0)).sum();
    let est = free.mc_state_rho(|a| a.mass(), 20_000).unwrap();
    assert!(est.within(expected, 3.0), "{est:?} vs {expected}");
}

#[test]
fn gamma1_free_is_diagonal_inverse_eigenvalues() {
    let free = model(2, InteractionSpec::zero(), CutoffSpec::none(), 4);
    let g = free.mc_correlation_gamma(1, 20_000).unwrap();
    for r in 0..5 {
        for c in 0..5 {
            let expected = if r == c { green_classical(r as i64 - 2, 1.0) } else { 0.0 };
            let v = g.mean[(r, c)];
            assert!((v.re - expected).abs() <= 3.0 * g.std_error[(r, c)].max(1e-300) || (r != c && v.norm() <= 3.0 * g.std_error[(r, c)]));
            assert!((v - g.mean[(c, r)].conj()).norm() < 1e-15);
        }
    }
}

#[test]
fn gamma2_free_follows_wick() {
    let free = model(1, InteractionSpec::zero(), CutoffSpec::none(), 5);
    let g = free.mc_correlation_gamma(2, 40_000).unwrap();
    for (k, l) in [(0i64, 0i64), (0, 1), (1, -1), (1, 1)] {
        let idx = ((k + 1) * 3 + (l + 1)) as usize;
        let expected = green_classical(k, 1.0) * green_classical(l, 1.0) * if k == l { 2.0 } else { 1.0 };
        let v = g.mean[(idx, idx)].re;
        assert!((v - expected).abs() <= 3.0 * g.std_error[(idx, idx)], "({k},{l}): {v} vs {expected}");
    }
    assert!(matches!(free.mc_correlation_gamma(3, 10), Err(Error::Config(_))));
}

#[test]
fn theta_identity_is_trace_of_gamma1() {
    let m = model(3, InteractionSpec::delta(1.0), CutoffSpec::sharp(2.0).unwrap(), 6);
    let obs = Observable::identity(1, 3).unwrap();
    let theta = m.mc_state_rho(|a| obs.classical_value(a).re, 5000).unwrap();
    let g = m.mc_correlation_gamma(1, 5000).unwrap();
    assert!((theta.mean - g.trace().re).abs() < 1e-12 * theta.mean);
    let mass = m.mc_state_rho(|a| a.mass(), 5000).unwrap();
    assert!((g.trace().re - mass.mean).abs() <= 2.0 * mass.std_error);
}

#[test]
fn duhamel_coefficients() {
    let obs = Observable::identity(1, 4).unwrap();
    let free = model(4, InteractionSpec::delta(1.0), CutoffSpec::none(), 7);
    let a0 = free.classical_duhamel(0, &obs, 20_000, true).unwrap();
    let expected: f64 = (-4..=4).map(|k| green_classical(k, 1.0)).sum();
    assert!(a0.re.within(expected, 3.0));
    let w = InteractionSpec::gaussian(1.0, 0.1).unwrap();
    let sup: f64 = (-2000i64..=2000).map(|k| w.fourier(k)).sum();
    let k = 2.0;
    let m = model(4, w, CutoffSpec::sharp(k).unwrap(), 7);
    for order in 0..3 {
        let a = m.classical_duhamel(order, &obs, 5000, false).unwrap();
        let bound = (k.powi(3) * sup * sup).powi(order as i32) * k / (3f64.powi(order as i32) * gq_core::gibbs::factorial::<f64>(order));
        assert!(a.mean().norm() <= bound);
    }
}

#[test]
fn default_k_keeps_weights_moderate() {
    let grid = ModeGrid::new(4, 1.0).unwrap();
    let w = InteractionSpec::delta(1.0);
    let k = choose_default_k(grid, &w, CutoffKind::Sharp, 3, 2000, 1e3).unwrap();
    let m = ClassicalModel::new(grid, w, CutoffSpec::sharp(k).unwrap(), 3);
    let mut weights = m.map_samples(2000, |s| Ok(s.weight)).unwrap();
    weights.sort_by(f64::total_cmp);
    assert!(weights[1980] < 1e3);
}

#[test]
fn time_correlation_reduces_and_conserves_mass() {
    let n = 3;
    let w = InteractionSpec::delta(1.0);
    let m = model(n, w.clone(), CutoffSpec::sharp(2.0).unwrap(), 12);
    let flow = HartreeFlow::new(FlowConfig { n, dt: 1e-3, t_final: 0.2, integrator: Integrator::StrangSplit, kappa: 1.0 }, w).unwrap();
    let occ = Observable::mode_occupation(1, n).unwrap();
    let x = FieldFunctional::Theta(occ.clone());
    let at_zero = m.time_correlation(&flow, &[(x.clone(), 0.0), (FieldFunctional::Mass, 0.0)], 0.2, 2000).unwrap();
    let direct = m.mc_state_rho(|a| occ.classical_value(a).re * a.mass(), 2000).unwrap();
    assert!((at_zero.estimate.mean - direct.mean).abs() <= 1e-12 * direct.mean);
    let later = m.time_correlation(&flow, &[(FieldFunctional::Mass, 0.2)], 0.2, 2000).unwrap();
    let now = m.mc_state_rho(|a| a.mass(), 2000).unwrap();
    assert!((later.estimate.mean - now.mean).abs() <= 1e-10 * now.mean);
    assert!(matches!(m.time_correlation(&flow, &[(FieldFunctional::Mass, 0.3)], 0.2, 10), Err(Error::Config(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cutoff_in_unit_interval(s in 0.0..10.0f64, k in 0.1..5.0f64) {
        for spec in [CutoffSpec::sharp(k).unwrap(), CutoffSpec::smooth(k).unwrap()] {
            let f = spec.eval(s);
            prop_assert!((0.0..=1.0).contains(&f));
            if s > k {
                prop_assert_eq!(f, 0.0);
            }
        }
    }

    #[test]
    fn ratio_of_one_is_one(seed in 0u64..1000) {
        let m = model(2, InteractionSpec::delta(1.0), CutoffSpec::sharp(1.5).unwrap(), seed);
        prop_assert_eq!(m.mc_state_rho(|_| 1.0, 64).unwrap().mean, 1.0);
    }
}
