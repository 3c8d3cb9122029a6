use std::f64::consts::PI;

use gq_core::hartree::{approximation_study, epsilon_flow_study, gibbs_invariance_test, power_law_datum, rn_plus_proxy, Galerkin, Integrator};
use gq_core::gibbs::FieldFunctional;
use gq_core::spectral::eigenvalue;
use gq_core::{CutoffSpec, Error, FlowConfig, FourierField, HartreeFlow, InteractionSpec, ModeGrid};
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> FourierField {
    FourierField::from_fn(n, |_| C::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale)))
}

fn cfg(n: usize, dt: f64, t_final: f64, integrator: Integrator) -> FlowConfig {
    FlowConfig { n, dt, t_final, integrator, kappa: 1.0 }
}

/// `(x conj y)^(q) = sum_{k - l = q} x_k conj(y_l)`.
fn pair_hat(x: &FourierField, y: &FourierField, q: i64) -> C {
    let n = x.n_modes() as i64;
    (-n..=n).filter(|k| (k - q).abs() <= n).map(|k| x.get(k) * y.get(k - q).conj()).sum()
}

fn n1_oracle(v: [&FourierField; 5], w: &InteractionSpec, k: i64) -> C {
    let n = v[0].n_modes() as i64;
    let mut acc = C::new(0.0, 0.0);
    for q1 in -2 * n..=2 * n {
        for q2 in -2 * n..=2 * n {
            let r = k - q1 - q2;
            if r.abs() > n {
                continue;
            }
            acc += pair_hat(v[0], v[1], q1) * pair_hat(v[2], v[3], q2) * v[4].get(r) * (w.fourier(q1) * w.fourier(q2));
        }
    }
    acc
}

fn n2_oracle(v: [&FourierField; 5], w: &InteractionSpec, k: i64) -> C {
    let n = v[0].n_modes() as i64;
    let g = |q: i64| -> C {
        (-2 * n..=2 * n)
            .filter(|q1| (q - q1).abs() <= 2 * n)
            .map(|q1| pair_hat(v[0], v[1], q1) * pair_hat(v[2], v[3], q - q1) * w.fourier(q - q1))
            .sum()
    };
    (-4 * n..=4 * n).filter(|q| (k - q).abs() <= n).map(|q| g(q) * v[4].get(k - q) * w.fourier(q)).sum()
}

#[test]
fn quintic_terms_match_momentum_sums() {
    let n = 2;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for w in [InteractionSpec::gaussian(0.9, 0.1).unwrap(), InteractionSpec::delta(1.2), InteractionSpec::tent(-0.5, 0.25).unwrap()] {
        let gal = Galerkin::new(ModeGrid::new(n, 1.0).unwrap(), w.clone());
        for _ in 0..5 {
            let f: Vec<FourierField> = (0..5).map(|_| random_field(n, 1.0, &mut rng)).collect();
            let v = [&f[0], &f[1], &f[2], &f[3], &f[4]];
            let n1 = gal.n1(v).unwrap();
            let n2 = gal.n2(v).unwrap();
            let nl = gal.nonlinearity(v).unwrap();
            for k in -(n as i64)..=n as i64 {
                let (a, b) = (n1_oracle(v, &w, k), n2_oracle(v, &w, k));
                assert!((n1.get(k) - a).norm() <= 1e-12 * (1.0 + a.norm()), "N1 {k}");
                assert!((n2.get(k) - b).norm() <= 1e-12 * (1.0 + b.norm()), "N2 {k}");
                assert!((nl.get(k) + a / 3.0 + b * (2.0 / 3.0)).norm() <= 1e-12 * (1.0 + a.norm() + b.norm()));
            }
        }
    }
}

#[test]
fn delta_nonlinearity_is_focusing_quintic() {
    let n = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let u = random_field(n, 1.0, &mut rng);
    let gal = Galerkin::new(ModeGrid::new(n, 1.0).unwrap(), InteractionSpec::delta(1.0));
    let nl = gal.nonlinearity([&u, &u, &u, &u, &u]).unwrap();
    // |u|^4 u has degree <= 5n, so 64 equispaced points integrate it exactly
    let g = 64;
    let at = |x: f64| -> C { (-3..=3i64).map(|k| u.get(k) * C::from_polar(1.0, 2.0 * PI * k as f64 * x)).sum() };
    for k in -3..=3i64 {
        let coeff: C = (0..g)
            .map(|j| {
                let x = j as f64 / g as f64;
                let z = at(x);
                z * z.norm_sqr().powi(2) * C::from_polar(1.0, -2.0 * PI * k as f64 * x)
            })
            .sum::<C>()
            / g as f64;
        assert!((nl.get(k) + coeff).norm() < 1e-11 * (1.0 + coeff.norm()));
    }
    let pot = gal.potential_term(&u).unwrap();
    assert!(pot.sub(&nl).max_abs() > 0.0);
    for k in -3..=3i64 {
        assert!((pot.get(k) + nl.get(k)).norm() < 1e-12 * (1.0 + nl.get(k).norm()));
    }
}

#[test]
fn constants_give_squared_mean_interaction() {
    let w = InteractionSpec::gaussian(0.8, 0.15).unwrap();
    let gal = Galerkin::new(ModeGrid::new(2, 1.0).unwrap(), w.clone());
    let mut one = FourierField::zeros(2);
    one.set(0, C::new(1.0, 0.0)).unwrap();
    let v = [&one, &one, &one, &one, &one];
    let expected = w.fourier(0).powi(2);
    assert!((gal.n1(v).unwrap().get(0).re - expected).abs() < 1e-14);
    assert!((gal.n2(v).unwrap().get(0).re - expected).abs() < 1e-14);
    assert!(gal.n1(v).unwrap().get(1).norm() < 1e-15);
}

#[test]
fn rhs_is_hamiltonian_gradient() {
    let n = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for w in [InteractionSpec::delta(1.0), InteractionSpec::gaussian(1.0, 0.1).unwrap()] {
        let flow = HartreeFlow::new(cfg(n, 1e-3, 0.0, Integrator::StrangSplit), w).unwrap();
        for _ in 0..10 {
            let a = random_field(n, 0.5, &mut rng);
            let rhs = flow.galerkin_rhs(&a).unwrap();
            let h = 1e-5;
            for k in -(n as i64)..=n as i64 {
                let shifted = |d: C| {
                    let mut b = a.clone();
                    b.set(k, a.get(k) + d).unwrap();
                    flow.hamiltonian(&b).unwrap()
                };
                let d_re = (shifted(C::new(h, 0.0)) - shifted(C::new(-h, 0.0))) / (2.0 * h);
                let d_im = (shifted(C::new(0.0, h)) - shifted(C::new(0.0, -h))) / (2.0 * h);
                let expected = C::new(0.0, -0.5) * C::new(d_re, d_im);
                assert!((rhs.get(k) - expected).norm() <= 1e-6 * (1.0 + expected.norm()), "k = {k}: {} vs {expected}", rhs.get(k));
            }
        }
    }
}

#[test]
fn free_flow_rotates_phases() {
    let n = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = random_field(n, 1.0, &mut rng);
    for integrator in [Integrator::StrangSplit, Integrator::PhaseSplit] {
        let flow = HartreeFlow::new(cfg(n, 1e-3, 1.0, integrator), InteractionSpec::zero()).unwrap();
        let b = flow.evolve(&a, 0.5).unwrap();
        for k in -(n as i64)..=n as i64 {
            assert!((b.get(k).norm() - a.get(k).norm()).abs() < 1e-13);
            let exact = a.get(k) * C::from_polar(1.0, -eigenvalue(k, 1.0) * 0.5);
            assert!((b.get(k) - exact).norm() < 1e-10);
        }
    }
}

#[test]
fn strang_is_reversible_and_conserves_mass() {
    let n = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_field(n, 0.4, &mut rng);
    let flow = HartreeFlow::new(cfg(n, 1e-4, 0.05, Integrator::StrangSplit), InteractionSpec::delta(1.0)).unwrap();
    let mut x = a.clone();
    for _ in 0..50 {
        x = flow.step_by(&x, 1e-4).unwrap();
    }
    assert!((x.mass() - a.mass()).abs() <= 1e-12 * a.mass());
    for _ in 0..50 {
        x = flow.step_by(&x, -1e-4).unwrap();
    }
    assert!(x.sub(&a).max_abs() < 1e-10);
}

#[test]
fn integrators_agree_on_short_times() {
    let n = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let a = random_field(n, 0.3, &mut rng);
    let w = InteractionSpec::gaussian(1.0, 0.1).unwrap();
    let strang = HartreeFlow::new(cfg(n, 1e-5, 0.01, Integrator::StrangSplit), w.clone()).unwrap().evolve(&a, 0.01).unwrap();
    let rk4 = HartreeFlow::new(cfg(n, 1e-5, 0.01, Integrator::Rk4Galerkin), w).unwrap().evolve(&a, 0.01).unwrap();
    assert!(strang.sub(&rk4).max_abs() < 1e-8);
}

#[test]
fn flow_errors() {
    assert!(matches!(HartreeFlow::new(cfg(0, 1e-3, 1.0, Integrator::StrangSplit), InteractionSpec::zero()), Err(Error::Config(_))));
    assert!(matches!(HartreeFlow::new(cfg(2, 0.0, 1.0, Integrator::StrangSplit), InteractionSpec::zero()), Err(Error::Config(_))));
    let flow = HartreeFlow::new(cfg(2, 1e-3, 1.0, Integrator::StrangSplit), InteractionSpec::zero()).unwrap();
    assert!(matches!(flow.step(&FourierField::zeros(3)), Err(Error::SizeMismatch { .. })));
    assert!("rk4".parse::<Integrator>().is_ok());
    assert!("euler".parse::<Integrator>().is_err());
    // a large focusing datum with a coarse step blows up and reports the time
    let big = FourierField::from_fn(2, |_| C::new(5.0, 0.0));
    let rough = HartreeFlow::new(cfg(2, 0.05, 1.0, Integrator::Rk4Galerkin), InteractionSpec::delta(1.0)).unwrap();
    assert!(matches!(rough.evolve(&big, 1.0), Err(Error::StepFailure { .. })));
}

#[test]
fn trajectory_reports_conserved_quantities() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = random_field(4, 0.3, &mut rng);
    let flow = HartreeFlow::new(cfg(4, 1e-4, 0.01, Integrator::StrangSplit), InteractionSpec::delta(1.0)).unwrap();
    let traj = flow.trajectory(&a, 10).unwrap();
    assert_eq!(traj.first().unwrap().t, 0.0);
    assert!((traj.last().unwrap().t - 0.01).abs() < 1e-15);
    let h0 = traj[0].hamiltonian;
    for s in &traj {
        assert!((s.mass - a.mass()).abs() < 1e-12 * a.mass());
        assert!((s.hamiltonian - h0).abs() < 1e-6 * h0.abs());
    }
}

#[test]
fn free_approximation_error_is_the_tail() {
    let (s, s1) = (1.0, 0.5);
    let base = cfg(1, 1e-3, 0.05, Integrator::StrangSplit);
    let study = approximation_study(&InteractionSpec::zero(), base, s, s1, 1.0, &[4, 8, 16], 32).unwrap();
    let u0 = power_law_datum(32, s, 1.0);
    for row in &study.rows {
        let tail: f64 = (-32..=32i64)
            .filter(|k| k.unsigned_abs() as usize > row.n)
            .map(|k| (1.0 + k.abs() as f64).powf(2.0 * s1) * u0.get(k).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!((row.error - tail).abs() < 1e-10 * tail, "{} vs {tail}", row.error);
    }
    assert!(study.rows.windows(2).all(|p| p[1].error < p[0].error));
    assert!(study.fitted_exponent < 0.0);
    assert_eq!(study.tail_exponent, s1 - s);
    assert!(approximation_study(&InteractionSpec::zero(), base, s, s1, 1.0, &[64], 32).is_err());
}

#[test]
fn constant_data_do_not_see_the_mollifier() {
    let c0 = C::new(0.6, 0.2);
    let mut u0 = FourierField::zeros(3);
    u0.set(0, c0).unwrap();
    let t = 0.2;
    let config = cfg(3, 1e-3, t, Integrator::StrangSplit);
    let rows = epsilon_flow_study(&u0, 1.0, &[0.3, 0.1, 0.03], 1.0, config).unwrap();
    for r in &rows {
        assert!(r.sup_error < 1e-12, "{r:?}");
        assert!((r.w_hat[0] - 1.0).abs() < 1e-14);
        assert!(r.w_hat[3].abs() <= 1.0 + 1e-14);
    }
    assert!(rows[2].w_hat[3] > rows[0].w_hat[3]);
    // a(t) = c0 exp(-i (kappa - |c0|^4) t)
    let flow = HartreeFlow::new(config, InteractionSpec::delta(1.0)).unwrap();
    let end = flow.evolve(&u0, t).unwrap();
    let v = c0.norm_sqr().powi(2);
    let exact = c0 * C::from_polar(1.0, -(1.0 - v) * t);
    assert!((end.get(0) - exact).norm() < 1e-9);
    // a midpoint step rotates by theta with tan(theta/2) = h |mid|^4 / 2, |mid| = |c0| cos(theta/2)
    let steps = flow.steps_to(t) as f64;
    let h = t / steps;
    let mut theta = h * v;
    for _ in 0..20 {
        theta = 2.0 * (h * v * (theta / 2.0).cos().powi(4) / 2.0).atan();
    }
    let discrete = c0 * C::from_polar(1.0, -t + steps * theta);
    assert!((end.get(0) - discrete).norm() < 1e-13, "{}", (end.get(0) - discrete).norm());
}

#[test]
fn high_band_proxy_decreases() {
    let w = InteractionSpec::gaussian(1.0, 0.05).unwrap();
    let vals: Vec<f64> = [4, 8, 16, 32].iter().map(|&n| rn_plus_proxy(&w, n, 2000)).collect();
    assert!(vals.windows(2).all(|p| p[1] < p[0]));
    assert_eq!(rn_plus_proxy(&InteractionSpec::zero(), 4, 100), 0.0);
}

#[test]
fn small_invariance_run() {
    let flow = HartreeFlow::new(cfg(3, 1e-3, 0.05, Integrator::StrangSplit), InteractionSpec::delta(1.0)).unwrap();
    let obs = [FieldFunctional::Mass, FieldFunctional::ReMode(1)];
    let report = gibbs_invariance_test(&flow, CutoffSpec::sharp(2.0).unwrap(), 2000, 8, &obs).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert!(report.rows[0].z_score < 1e-6);
    assert!(report.passes(4.0), "{report:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn strang_conserves_mass(seed in any::<u64>(), c in -1.0..1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_field(3, 0.4, &mut rng);
        let flow = HartreeFlow::new(cfg(3, 1e-3, 0.02, Integrator::StrangSplit), InteractionSpec::gaussian(c, 0.1).unwrap()).unwrap();
        let b = flow.evolve(&a, 0.02).unwrap();
        prop_assert!((b.mass() - a.mass()).abs() <= 1e-12 * a.mass());
    }
}
