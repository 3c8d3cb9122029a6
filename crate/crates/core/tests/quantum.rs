use std::f64::consts::PI;

use gq_core::divdiff::{exp_neg_divided_difference, simplex_exp_integral, simplex_exp_quadrature};
use gq_core::quantum::{free_occupations, sector_dimension, FockBasis, QuantumConfig, QuantumSystem};
use gq_core::spectral::eigenvalue;
use gq_core::{CutoffSpec, Error, InteractionSpec, Observable};
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn system(m: usize, n_max: usize, tau: f64, w: InteractionSpec, cutoff: CutoffSpec) -> QuantumSystem<f64> {
    QuantumSystem::new(QuantumConfig::new(m, n_max, tau, 1.0, w, cutoff)).unwrap()
}

/// Applies `b_{ann[0]} b_{ann[1]} ...` (rightmost first) then the creators, returning the image and amplitude.
fn word(occ: &[u16], creators: &[usize], annihilators: &[usize]) -> Option<(Vec<u16>, f64)> {
    let mut v = occ.to_vec();
    let mut amp = 1.0;
    for &i in annihilators.iter().rev() {
        if v[i] == 0 {
            return None;
        }
        amp *= (v[i] as f64).sqrt();
        v[i] -= 1;
    }
    for &i in creators.iter().rev() {
        v[i] += 1;
        amp *= (v[i] as f64).sqrt();
    }
    Some((v, amp))
}

#[test]
fn ladder_matrices_act_on_occupations() {
    let sys = system(1, 4, 1.0, InteractionSpec::zero(), CutoffSpec::none());
    let basis = sys.basis();
    for k in -1..=1i64 {
        let idx = basis.mode_index(k).unwrap();
        let ladder = sys.ladder(k).unwrap();
        for n in 0..4 {
            let a = ladder.annihilation(n);
            let (lo, hi) = (basis.sector(n), basis.sector(n + 1));
            assert_eq!((a.nrows(), a.ncols()), (lo.dim(), hi.dim()));
            for s in 0..hi.dim() {
                let occ = hi.state(s);
                for r in 0..lo.dim() {
                    let expected = match word(occ, &[], &[idx]) {
                        Some((img, amp)) if lo.find(&img) == Some(r) => amp,
                        _ => 0.0,
                    };
                    assert_eq!(a[(r, s)], expected);
                }
            }
            assert_eq!(ladder.creation(n), a.transpose());
        }
    }
}

#[test]
fn number_of_three_quanta() {
    let sys = system(0, 5, 1.0, InteractionSpec::zero(), CutoffSpec::none());
    let b = sys.ladder(0).unwrap();
    let three = b.creation(2) * b.annihilation(2);
    assert_eq!(three.nrows(), 1);
    assert!((three[(0, 0)] - 3.0).abs() < 1e-14);
    assert_eq!(sys.h0()[0], vec![0.0]);
}

#[test]
fn free_hamiltonian_examples() {
    let sys = system(0, 3, 2.0, InteractionSpec::zero(), CutoffSpec::none());
    assert!((sys.h0()[1][0] - 0.5).abs() < 1e-15);
    let sys = system(1, 3, 1.0, InteractionSpec::zero(), CutoffSpec::none());
    let sector = sys.basis().sector(2);
    // modes ordered -1, 0, 1
    let s = sector.find(&[0, 1, 1]).unwrap();
    assert!((sys.h0()[2][s] - (2.0 + 4.0 * PI * PI)).abs() < 1e-12);
}

#[test]
fn interaction_matches_position_space_sum() {
    let (m, n_max, tau) = (1usize, 4usize, 1.5);
    let w = InteractionSpec::gaussian(0.9, 0.12).unwrap();
    let sys = system(m, n_max, tau, w.clone(), CutoffSpec::none());
    let g = 7usize;
    let grid_w: Vec<f64> = (0..g)
        .map(|j| (-3..=3i64).map(|q| w.fourier(q) * (2.0 * PI * q as f64 * j as f64 / g as f64).cos()).sum())
        .collect();
    let wd = |a: usize, b: usize| grid_w[(a + g - b) % g];
    let e = |k: i64, j: usize| C::from_polar(1.0, 2.0 * PI * k as f64 * j as f64 / g as f64);
    let modes = [-1i64, 0, 1];
    let mut coeff = std::collections::HashMap::new();
    for i1 in 0..3 {
        for i2 in 0..3 {
            for i3 in 0..3 {
                for i4 in 0..3 {
                    for i5 in 0..3 {
                        for i6 in 0..3 {
                            let [k1, k2, k3, k4, k5, k6] = [i1, i2, i3, i4, i5, i6].map(|i| modes[i]);
                            let mut acc = C::new(0.0, 0.0);
                            for x in 0..g {
                                for y in 0..g {
                                    for z in 0..g {
                                        acc += e(k1, x).conj() * e(k2, y).conj() * e(k3, z).conj() * e(k4, x) * e(k5, y) * e(k6, z)
                                            * (wd(x, y) * wd(x, z));
                                    }
                                }
                            }
                            let c = acc / (g * g * g) as f64;
                            assert!(c.im.abs() < 1e-12);
                            coeff.insert([i1, i2, i3, i4, i5, i6], c.re);
                        }
                    }
                }
            }
        }
    }
    let dense = sys.wtau().to_dense_real::<f64>();
    let prefactor = -1.0 / (3.0 * tau * tau * tau);
    for n in 0..=n_max {
        let sector = sys.basis().sector(n);
        let mut oracle = nalgebra::DMatrix::<f64>::zeros(sector.dim(), sector.dim());
        for s in 0..sector.dim() {
            for (ix, &c) in &coeff {
                if c == 0.0 {
                    continue;
                }
                if let Some((img, amp)) = word(sector.state(s), &ix[..3], &ix[3..]) {
                    oracle[(sector.find(&img).unwrap(), s)] += prefactor * c * amp;
                }
            }
        }
        let scale = oracle.amax().max(1e-300);
        assert!((&dense[n] - &oracle).amax() <= 1e-12 * scale, "sector {n}");
        if n <= 2 {
            assert_eq!(dense[n].amax(), 0.0);
        } else {
            assert!(dense[n].amax() > 0.0);
        }
        assert!((&dense[n] - dense[n].transpose()).amax() <= 1e-14 * scale);
    }
    let free = system(m, n_max, tau, InteractionSpec::zero(), CutoffSpec::none());
    assert_eq!(free.wtau().nnz(), 0);
}

#[test]
fn structural_sanity() {
    let sys = system(1, 5, 2.0, InteractionSpec::delta(1.0), CutoffSpec::sharp(2.0).unwrap());
    let state = sys.gibbs_state().unwrap();
    let report = sys.sanity(&state).unwrap();
    assert!(report.ccr_defect < 1e-12);
    assert!(report.number_commutator < 1e-12);
    assert!(report.gamma1_hermiticity < 1e-12);
    assert!(report.gamma1_min_eigenvalue > -1e-12);
    assert!((report.z0_trace - report.z0_enumerated).abs() < 1e-14 * report.z0_trace);
    assert!(state.number_expectation() <= 2.0 + 1e-12);
}

#[test]
fn single_mode_partition_is_geometric() {
    let (tau, n_max) = (3.0, 12);
    let sys = system(0, n_max, tau, InteractionSpec::zero(), CutoffSpec::none());
    let expected: f64 = (0..=n_max).map(|n| (-(n as f64) / tau).exp()).sum();
    assert!((sys.partition_free() - expected).abs() < 1e-14 * expected);
}

#[test]
fn free_state_occupations() {
    let (m, n_max, tau) = (1usize, 10usize, 4.0);
    let sys = system(m, n_max, tau, InteractionSpec::zero(), CutoffSpec::none());
    let state = sys.gibbs_state().unwrap();
    let g1 = sys.gamma1(&state);
    let free = free_occupations(&[-1, 0, 1], tau, 1.0, n_max);
    assert!((free.partition - sys.partition_free()).abs() < 1e-12 * free.partition);
    assert!((state.partition() - free.partition).abs() < 1e-12 * free.partition);
    for i in 0..3 {
        assert!((g1[(i, i)].re * tau - free.occupations[i]).abs() < 1e-12);
        for j in 0..3 {
            if i != j {
                assert!(g1[(i, j)].norm() < 1e-14);
            }
        }
    }
    // with a huge truncation a single mode is Bose-Einstein: <n> = 1/(e^{lambda/tau} - 1)
    let be = free_occupations(&[0], 5.0, 1.0, 400);
    assert!((be.occupations[0] - 1.0 / (0.2f64.exp() - 1.0)).abs() < 1e-12);
}

#[test]
fn divided_differences_against_quadrature() {
    let sets: [&[f64]; 5] = [&[0.3, 2.0], &[0.1, 1.7, 4.2], &[3.0, 3.0 + 1e-10, 5.0], &[0.0, 10.0, 20.0, 0.5], &[1.0, 1.0, 1.0, 2.0, 7.0]];
    for es in sets {
        let exact = simplex_exp_integral(es);
        let quad = simplex_exp_quadrature(es, 64);
        assert!(!exact.fallback);
        assert!((exact.value - quad).abs() <= 1e-8 * quad, "{es:?}: {} vs {quad}", exact.value);
    }
    let (a, b) = (0.4, 2.9);
    let closed = ((-a as f64).exp() - (-b as f64).exp()) / (b - a);
    assert!((simplex_exp_integral(&[a, b]).value - closed).abs() < 1e-15);
    assert!((exp_neg_divided_difference(&[b, a]) + closed).abs() < 1e-15);
    for m in 0..6 {
        let es = vec![1.3; m + 1];
        let fact: f64 = (1..=m).map(|j| j as f64).product();
        assert!((simplex_exp_integral(&es).value - (-1.3f64).exp() / fact).abs() < 1e-15);
    }
}

#[test]
fn heisenberg_evolution() {
    let sys = system(1, 4, 2.0, InteractionSpec::gaussian(1.0, 0.1).unwrap(), CutoffSpec::none());
    let state = sys.gibbs_state().unwrap();
    let obs = Observable::mode_occupation(1, 1).unwrap();
    let theta = sys.theta(&obs).unwrap().to_dense::<f64>();
    assert!(state.heisenberg_evolve(&theta, 0.0).sub(&theta).max_abs() < 1e-13);
    let n_op = sys.number_operator();
    assert!(state.heisenberg_evolve(&n_op, 0.7).sub(&n_op).max_abs() < 1e-12);
    let a = state.heisenberg_evolve(&theta, 0.3);
    assert!(a.hermiticity_defect() < 1e-12);
    assert!((state.expectation(&a) - state.expectation(&theta)).norm() < 1e-12);
    let ab = state.heisenberg_evolve(&theta.product(&n_op), 0.3);
    assert!(ab.sub(&a.product(&n_op)).max_abs() < 1e-10);
    let two = sys.time_correlation(&state, &[(obs.clone(), 0.0), (obs.clone(), 0.0)]).unwrap();
    assert!((two - state.expectation(&theta.product(&theta))).norm() < 1e-12);
}

#[test]
fn series_at_zero_coupling() {
    let sys = system(1, 6, 2.0, InteractionSpec::delta(1.0), CutoffSpec::sharp(2.0).unwrap());
    let obs = Observable::identity(1, 1).unwrap();
    let report = sys.series_vs_trace(0.0, &obs, 2).unwrap();
    assert!(report.gaps[0] < 1e-13 * report.direct.norm());
    assert_eq!(report.partial_sums[0], report.partial_sums[1]);
    let a1 = sys.duhamel_a(1, &sys.theta(&obs).unwrap()).unwrap();
    assert!(a1.value.re > 0.0);
    assert_eq!(a1.fallbacks, 0);
}

#[test]
fn sector_dimensions() {
    for modes in 1..5usize {
        for n in 0..6usize {
            let brute = (0..(n + 1).pow(modes as u32))
                .filter(|&code| {
                    let mut c = code;
                    let mut total = 0;
                    for _ in 0..modes {
                        total += c % (n + 1);
                        c /= n + 1;
                    }
                    total == n
                })
                .count();
            assert_eq!(sector_dimension(n, modes), brute);
        }
    }
    let basis = FockBasis::new(1, 5);
    assert_eq!(basis.sector(5).dim(), 21);
    assert_eq!(basis.total_dim(), (0..=5).map(|n| sector_dimension(n, 3)).sum::<usize>());
}

#[test]
fn budget_and_config_errors() {
    let mut cfg = QuantumConfig::new(3, 12, 1.0, 1.0, InteractionSpec::delta(1.0), CutoffSpec::none());
    cfg.budget_bytes = 1 << 16;
    match QuantumSystem::new(cfg) {
        Err(Error::Config(msg)) => assert!(msg.contains("n=12")),
        other => panic!("expected a budget error, got {:?}", other.map(|_| ())),
    }
    assert!(QuantumSystem::new(QuantumConfig::new(1, 2, 0.0, 1.0, InteractionSpec::zero(), CutoffSpec::none())).is_err());
    let sys = system(1, 2, 1.0, InteractionSpec::zero(), CutoffSpec::none());
    assert!(sys.ladder(2).is_err());
    assert!(sys.theta(&Observable::identity(1, 2).unwrap()).is_err());
}

#[test]
fn interaction_norm_under_cutoff() {
    let k = 2.0;
    let sys = system(1, 8, 2.0, InteractionSpec::gaussian(1.0, 0.1).unwrap(), CutoffSpec::sharp(k).unwrap());
    let wn = sys.w_sup_norm();
    let norm = sys.w_cutoff_norm().unwrap();
    assert!(norm > 0.0);
    assert!(norm <= k.powi(3) * wn * wn / 3.0);
    let state = sys.gibbs_state().unwrap();
    assert!(state.number_expectation() <= k);
    let probs = state.sector_probabilities();
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    assert!(probs[5..].iter().all(|&p| p == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simplex_integral_positive_and_symmetric(es in prop::collection::vec(0.0..30.0f64, 1..6)) {
        let v = simplex_exp_integral(&es).value;
        prop_assert!(v > 0.0);
        let mut rev = es.clone();
        rev.reverse();
        prop_assert!((simplex_exp_integral(&rev).value - v).abs() <= 1e-12 * v);
        let quad = simplex_exp_quadrature(&es, 48);
        prop_assert!((v - quad).abs() <= 1e-8 * quad);
    }

    #[test]
    fn free_energy_is_additive(tau in 0.5..8.0f64) {
        let sys = system(1, 3, tau, InteractionSpec::zero(), CutoffSpec::none());
        let sector = sys.basis().sector(3);
        for s in 0..sector.dim() {
            let occ = sector.state(s);
            let e: f64 = [-1i64, 0, 1].iter().zip(occ).map(|(&k, &n)| eigenvalue(k, 1.0) * n as f64).sum::<f64>() / tau;
            prop_assert!((sys.h0()[3][s] - e).abs() <= 1e-13 * e);
        }
    }
}
