//! Exact truncated Fock-space realization of the quantum many-body Gibbs state.

pub mod basis;
pub mod free;
pub mod operators;
pub mod state;

use nalgebra::DMatrix;
use num_complex::Complex;
use rayon::prelude::*;

pub use basis::{sector_dimension, FockBasis, Sector};
pub use free::{free_gamma1_gap, free_occupations, FreeOccupations};
pub use operators::{
    apply_word, build_h0, build_ladder, build_normal_ordered, build_theta, build_wtau, free_energy, number_value, Ladder, OpValue,
    SectorOperator, SparseBlock, SparseSectorOp,
};
pub use state::{GibbsState, SectorSpectrum};

use crate::divdiff::simplex_exp_integral;
use crate::error::{Error, Result};
use crate::gibbs::{factorial, CutoffKind, CutoffSpec};
use crate::interaction::InteractionSpec;
use crate::observable::Observable;
use crate::scalar::Real;
use crate::stats::pairwise_sum;

/// Default memory budget for operator storage.
pub const DEFAULT_BUDGET_BYTES: usize = 4 << 30;
/// Largest Duhamel order evaluated by path enumeration.
pub const DUHAMEL_M_LIMIT: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumConfig<T> {
    /// Modes `|k| <= modes_m`.
    pub modes_m: usize,
    pub n_max: usize,
    pub tau: T,
    pub kappa: T,
    pub w: InteractionSpec<T>,
    pub cutoff: CutoffSpec<T>,
    pub budget_bytes: usize,
}

impl<T: Real> QuantumConfig<T> {
    pub fn new(modes_m: usize, n_max: usize, tau: T, kappa: T, w: InteractionSpec<T>, cutoff: CutoffSpec<T>) -> Self {
        Self { modes_m, n_max, tau, kappa, w, cutoff, budget_bytes: DEFAULT_BUDGET_BYTES }
    }
}

/// One Duhamel coefficient `a_{tau,m}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuhamelTerm<T> {
    pub m: usize,
    pub value: Complex<T>,
    /// Paths whose divided difference fell back to quadrature.
    pub fallbacks: usize,
    pub paths: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesReport<T> {
    pub z: T,
    /// `F_tau(z)` from the direct trace.
    pub direct: Complex<T>,
    pub coefficients: Vec<DuhamelTerm<T>>,
    /// Entry `j` describes the partial sum over `m < j + 1`.
    pub partial_sums: Vec<Complex<T>>,
    pub gaps: Vec<T>,
    pub bounds: Vec<T>,
}

impl<T: Real> SeriesReport<T> {
    /// `|F(z) - sum_{m < terms} a_m z^m| <= bound(terms)`.
    pub fn within_bound(&self, terms: usize) -> bool {
        terms >= 1 && terms <= self.gaps.len() && self.gaps[terms - 1] <= self.bounds[terms - 1]
    }

    /// Gaps strictly decrease until they reach `floor`.
    pub fn gaps_monotone(&self, floor: T) -> bool {
        self.gaps.windows(2).all(|g| g[1] < g[0] || g[0] <= floor)
    }
}

/// Truncated Fock space with `H_{tau,0}`, `W_tau` and the cutoff `f`.
#[derive(Debug, Clone)]
pub struct QuantumSystem<T: Real> {
    cfg: QuantumConfig<T>,
    basis: FockBasis,
    h0: Vec<Vec<T>>,
    w_op: SparseSectorOp<T>,
}

impl<T: Real> QuantumSystem<T> {
    pub fn new(cfg: QuantumConfig<T>) -> Result<Self> {
        if !(cfg.tau > T::zero() && cfg.tau.is_finite()) {
            return Err(Error::Config(format!("tau must be positive, got {}", cfg.tau)));
        }
        if !(cfg.kappa > T::zero() && cfg.kappa.is_finite()) {
            return Err(Error::Config(format!("kappa must be positive, got {}", cfg.kappa)));
        }
        let l = 2 * cfg.modes_m + 1;
        let dims: Vec<usize> = (0..=cfg.n_max).map(|n| sector_dimension(n, l)).collect();
        let estimate = sparse_estimate(&dims, l);
        if estimate > cfg.budget_bytes {
            let table = dims.iter().enumerate().map(|(n, d)| format!("n={n}: {d}")).collect::<Vec<_>>().join(", ");
            return Err(Error::Config(format!(
                "operator storage needs about {estimate} bytes, budget is {}; sector dimensions: {table}",
                cfg.budget_bytes
            )));
        }
        let basis = FockBasis::new(cfg.modes_m, cfg.n_max);
        let h0 = build_h0(&basis, cfg.tau, cfg.kappa);
        let w_op = build_wtau(&basis, &cfg.w, cfg.tau);
        Ok(Self { cfg, basis, h0, w_op })
    }

    pub fn config(&self) -> &QuantumConfig<T> {
        &self.cfg
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn tau(&self) -> T {
        self.cfg.tau
    }

    /// Diagonal of `H_{tau,0}` per sector.
    pub fn h0(&self) -> &[Vec<T>] {
        &self.h0
    }

    pub fn wtau(&self) -> &SparseSectorOp<T> {
        &self.w_op
    }

    /// `f(n / tau)` per sector.
    pub fn cutoff_weights(&self) -> Vec<T> {
        (0..=self.cfg.n_max).map(|n| self.cfg.cutoff.eval(number_value(n, self.cfg.tau))).collect()
    }

    pub fn ladder(&self, k: i64) -> Result<Ladder<T>> {
        build_ladder(&self.basis, k)
    }

    pub fn number_operator(&self) -> SectorOperator<T> {
        let blocks = self
            .basis
            .sectors()
            .iter()
            .map(|s| DMatrix::from_diagonal_element(s.dim(), s.dim(), Complex::new(number_value(s.n(), self.cfg.tau), T::zero())))
            .collect();
        SectorOperator::from_blocks(blocks)
    }

    pub fn theta(&self, obs: &Observable<T>) -> Result<SparseSectorOp<Complex<T>>> {
        build_theta(&self.basis, obs, self.cfg.tau)
    }

    /// Dense `H_{tau,0} + z W_tau` per sector.
    pub fn hamiltonian_blocks(&self, z: T) -> Result<Vec<DMatrix<T>>> {
        self.check_dense(1)?;
        let w_dense = self.w_op.to_dense_real::<T>();
        Ok(self
            .h0
            .iter()
            .zip(w_dense)
            .map(|(diag, w)| {
                let mut h = w * z;
                for (i, &e) in diag.iter().enumerate() {
                    h[(i, i)] += e;
                }
                h
            })
            .collect())
    }

    pub fn hamiltonian(&self, z: T) -> Result<SectorOperator<T>> {
        let blocks = self.hamiltonian_blocks(z)?;
        Ok(SectorOperator::from_blocks(blocks.into_iter().map(|b| b.map(|x| Complex::new(x, T::zero()))).collect()))
    }

    fn check_dense(&self, copies: usize) -> Result<()> {
        let need = self.basis.dense_bytes() * copies;
        if need > self.cfg.budget_bytes {
            return Err(Error::Config(format!(
                "dense sector matrices need {need} bytes, budget is {}; sector dimensions: {}",
                self.cfg.budget_bytes,
                self.basis.dimension_table()
            )));
        }
        Ok(())
    }

    /// `rho_tau` with interaction strength `z` (the physical state has `z = 1`).
    pub fn gibbs_state_at(&self, z: T) -> Result<GibbsState<T>> {
        self.check_dense(4)?;
        GibbsState::new(self.cfg.tau, &self.hamiltonian_blocks(z)?, &self.cutoff_weights())
    }

    pub fn gibbs_state(&self) -> Result<GibbsState<T>> {
        self.gibbs_state_at(T::one())
    }

    /// `rho_tau(A)`.
    pub fn rho(&self, state: &GibbsState<T>, op: &SectorOperator<T>) -> Complex<T> {
        state.expectation(op)
    }

    /// `gamma_hat_{tau,1}(k; k') = rho(b^dag_{k'} b_k) / tau`, rows and columns over the modes.
    pub fn gamma1(&self, state: &GibbsState<T>) -> DMatrix<Complex<T>> {
        let l = self.basis.modes().len();
        let one = Complex::new(T::one() / self.cfg.tau, T::zero());
        DMatrix::from_fn(l, l, |r, c| {
            let op = build_normal_ordered::<T, Complex<T>>(&self.basis, &[(one, vec![c], vec![r])]);
            state.expectation_sparse(&op)
        })
    }

    /// `gamma_hat_{tau,2}(k_1 k_2; k'_1 k'_2) = rho(b^dag_{k'_1} b^dag_{k'_2} b_{k_1} b_{k_2}) / tau^2`
    /// with pairs ordered lexicographically.
    pub fn gamma2(&self, state: &GibbsState<T>) -> DMatrix<Complex<T>> {
        let l = self.basis.modes().len();
        let scale = Complex::new(T::one() / (self.cfg.tau * self.cfg.tau), T::zero());
        DMatrix::from_fn(l * l, l * l, |r, c| {
            let op = build_normal_ordered::<T, Complex<T>>(&self.basis, &[(scale, vec![c / l, c % l], vec![r / l, r % l])]);
            state.expectation_sparse(&op)
        })
    }

    /// `rho(Psi^{t_1} Theta(xi_1) ... Psi^{t_r} Theta(xi_r))`, products in the given order.
    pub fn time_correlation(&self, state: &GibbsState<T>, factors: &[(Observable<T>, T)]) -> Result<Complex<T>> {
        let mut product = SectorOperator::identity(&self.basis);
        for (obs, t) in factors {
            let theta = self.theta(obs)?.to_dense::<T>();
            product = product.product(&state.heisenberg_evolve(&theta, *t));
        }
        Ok(state.expectation(&product))
    }

    /// `Z_{tau,0} = Tr e^{-H_{tau,0}}` on the truncated space, summed in canonical order
    /// (terms sorted ascending, then pairwise).
    pub fn partition_free(&self) -> T {
        partition_canonical(self.h0.iter().flatten().map(|&e| (-e).exp()).collect())
    }

    /// `a_{tau,m} = ((-1)^m / Z_{tau,0}) int_simplex Tr(Theta e^{-(1-t_1)H_0} W ... W e^{-t_m H_0} f(N))`,
    /// evaluated path by path over the sparse matrix entries with divided differences for
    /// the time integral.
    pub fn duhamel_a(&self, m: usize, theta: &SparseSectorOp<Complex<T>>) -> Result<DuhamelTerm<T>> {
        if m > DUHAMEL_M_LIMIT {
            return Err(Error::Config(format!("Duhamel order {m} exceeds the limit {DUHAMEL_M_LIMIT}")));
        }
        let weights = self.cutoff_weights();
        let per_sector: Vec<(T, T, usize, usize)> = (0..=self.cfg.n_max)
            .into_par_iter()
            .map(|n| self.duhamel_sector(m, n, weights[n], theta))
            .collect();
        let re = pairwise_sum(&per_sector.iter().map(|s| s.0).collect::<Vec<_>>());
        let im = pairwise_sum(&per_sector.iter().map(|s| s.1).collect::<Vec<_>>());
        let sign = if m % 2 == 0 { T::one() } else { -T::one() };
        let z0 = self.partition_free();
        Ok(DuhamelTerm {
            m,
            value: Complex::new(re, im) * (sign / z0),
            fallbacks: per_sector.iter().map(|s| s.2).sum(),
            paths: per_sector.iter().map(|s| s.3).sum(),
        })
    }

    fn duhamel_sector(&self, m: usize, n: usize, fa: T, theta: &SparseSectorOp<Complex<T>>) -> (T, T, usize, usize) {
        if fa == T::zero() {
            return (T::zero(), T::zero(), 0, 0);
        }
        let energies = &self.h0[n];
        let w = self.w_op.block(n);
        let th = theta.block(n);
        let mut re = Vec::with_capacity(energies.len());
        let mut im = Vec::with_capacity(energies.len());
        let mut fallbacks = 0;
        let mut paths = 0;
        let mut chain = vec![0usize; m.max(1)];
        for a in 0..energies.len() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for &(b0, th_val) in th.row(a) {
                let mut visit = |amp: Complex<T>, path: &[usize]| {
                    let mut es: Vec<T> = path.iter().map(|&b| energies[b]).collect();
                    es.push(energies[a]);
                    let simplex = simplex_exp_integral(&es);
                    if simplex.fallback {
                        fallbacks += 1;
                    }
                    paths += 1;
                    acc = acc + amp * simplex.value;
                };
                if m == 0 {
                    if b0 == a {
                        visit(th_val, &[]);
                    }
                } else {
                    chain[0] = b0;
                    walk(w, a, 1, m, &mut chain, th_val, &mut visit);
                }
            }
            re.push(acc.re * fa);
            im.push(acc.im * fa);
        }
        (pairwise_sum(&re), pairwise_sum(&im), fallbacks, paths)
    }

    /// `F_tau(z) = Tr(Theta e^{-H_{tau,0} - z W_tau} f(N)) / Z_{tau,0}`.
    pub fn direct_trace(&self, theta: &SparseSectorOp<Complex<T>>, z: T) -> Result<Complex<T>> {
        let state = self.gibbs_state_at(z)?;
        Ok(state.expectation_sparse(theta) * (state.log_partition().exp() / self.partition_free()))
    }

    /// Sup norm of the interaction as seen by the truncated space: momentum transfers
    /// reach `2M`.
    pub fn w_sup_norm(&self) -> T {
        self.cfg.w.sup_norm_band(2 * self.cfg.modes_m)
    }

    /// `e^{K^3 |z| ||w||^2 / 3} (K^3 ||w||^2)^M K^p ||xi|| |z|^M / (3^M M!)`; infinite without
    /// a compactly supported cutoff.
    pub fn remainder_bound(&self, z: T, obs: &Observable<T>, terms: usize) -> T {
        let cutoff = &self.cfg.cutoff;
        if cutoff.kind != CutoffKind::Sharp && cutoff.kind != CutoffKind::Smooth || cutoff.k.is_infinite() {
            return T::infinity();
        }
        let k = cutoff.k;
        let wn = self.w_sup_norm();
        let c = k.powi(3) * wn * wn;
        (c * z.abs() / T::c(3.0)).exp() * c.powi(terms as i32) * k.powi(obs.p() as i32) * obs.operator_norm() * z.abs().powi(terms as i32)
            / (T::c(3.0).powi(terms as i32) * factorial::<T>(terms))
    }

    /// `max_n ||W_tau^{(n)}|| f(n / tau)`, to compare with `K^3 ||w||^2 / 3`.
    pub fn w_cutoff_norm(&self) -> Result<T> {
        self.check_dense(2)?;
        let weights = self.cutoff_weights();
        let norms = self
            .w_op
            .to_dense_real::<T>()
            .par_iter()
            .zip(weights.par_iter())
            .map(|(w, &f)| {
                if w.nrows() == 0 || f == T::zero() {
                    return T::zero();
                }
                let (values, _) = T::symmetric_eigen(w);
                values.iter().fold(T::zero(), |a, v| a.max(v.abs())) * f
            })
            .collect::<Vec<_>>();
        Ok(norms.into_iter().fold(T::zero(), T::max))
    }

    /// Partial sums of the Duhamel series against the direct trace at `z`.
    pub fn series_vs_trace(&self, z: T, obs: &Observable<T>, max_terms: usize) -> Result<SeriesReport<T>> {
        if max_terms == 0 {
            return Err(Error::Config("series_vs_trace needs at least one term".into()));
        }
        let theta = self.theta(obs)?;
        let direct = self.direct_trace(&theta, z)?;
        let mut coefficients = Vec::with_capacity(max_terms);
        let mut partial_sums = Vec::with_capacity(max_terms);
        let mut gaps = Vec::with_capacity(max_terms);
        let mut bounds = Vec::with_capacity(max_terms);
        let mut sum = Complex::new(T::zero(), T::zero());
        for m in 0..max_terms {
            let term = self.duhamel_a(m, &theta)?;
            sum = sum + term.value * z.powi(m as i32);
            coefficients.push(term);
            partial_sums.push(sum);
            gaps.push((direct - sum).norm());
            bounds.push(self.remainder_bound(z, obs, m + 1));
        }
        Ok(SeriesReport { z, direct, coefficients, partial_sums, gaps, bounds })
    }
}

/// Depth-first enumeration of `W_{b_0 b_1} ... W_{b_{m-1} a}` with `chain[..depth]` fixed.
fn walk<T: Real>(
    w: &SparseBlock<T>,
    a: usize,
    depth: usize,
    m: usize,
    chain: &mut [usize],
    amp: Complex<T>,
    visit: &mut impl FnMut(Complex<T>, &[usize]),
) {
    let current = chain[depth - 1];
    if depth == m {
        if let Some(v) = w.get(current, a) {
            visit(amp * v, &chain[..m]);
        }
        return;
    }
    for &(next, v) in w.row(current) {
        chain[depth] = next;
        walk(w, a, depth + 1, m, chain, amp * v, visit);
    }
}

/// Structural checks of the truncated realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SanityReport<T> {
    /// `max |[b_k, b_l^dag] - delta_kl|` over sectors `n < n_max`.
    pub ccr_defect: T,
    /// `max |[H_tau, N_tau]|` entrywise.
    pub number_commutator: T,
    pub gamma1_hermiticity: T,
    pub gamma1_min_eigenvalue: T,
    /// `Tr e^{-H_{tau,0}}` from the basis.
    pub z0_trace: T,
    /// The same sum over occupation tuples enumerated mode by mode.
    pub z0_enumerated: T,
}

impl<T: Real> QuantumSystem<T> {
    pub fn sanity(&self, state: &GibbsState<T>) -> Result<SanityReport<T>> {
        let modes = self.basis.modes().to_vec();
        let ladders = modes.iter().map(|&k| self.ladder(k)).collect::<Result<Vec<_>>>()?;
        let mut ccr = T::zero();
        for (i, bk) in ladders.iter().enumerate() {
            for (j, bl) in ladders.iter().enumerate() {
                for n in 0..self.cfg.n_max {
                    let mut c = bk.annihilation(n) * bl.creation(n);
                    if n > 0 {
                        c -= bl.creation(n - 1) * bk.annihilation(n - 1);
                    }
                    if i == j {
                        for d in 0..c.nrows() {
                            c[(d, d)] -= T::one();
                        }
                    }
                    ccr = c.iter().fold(ccr, |m, x| m.max(x.abs()));
                }
            }
        }
        let h = self.hamiltonian(T::one())?;
        let n_op = self.number_operator();
        let number_commutator = h.product(&n_op).sub(&n_op.product(&h)).max_abs();
        let g = self.gamma1(state);
        let l = g.nrows();
        let gamma1_hermiticity = (0..l)
            .flat_map(|r| (0..l).map(move |c| (r, c)))
            .fold(T::zero(), |m, (r, c)| m.max((g[(r, c)] - g[(c, r)].conj()).norm()));
        // [[Re, -Im], [Im, Re]] has the spectrum of the Hermitian part, doubled
        let real = DMatrix::from_fn(2 * l, 2 * l, |r, c| {
            let z = (g[(r % l, c % l)] + g[(c % l, r % l)].conj()) * T::c(0.5);
            match (r < l, c < l) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        let gamma1_min_eigenvalue = T::symmetric_eigen(&real).0.into_iter().fold(T::infinity(), T::min);
        let lambda: Vec<T> = modes.iter().map(|&k| crate::spectral::eigenvalue(k, self.cfg.kappa)).collect();
        let mut terms = Vec::new();
        enumerate_occupations(&lambda, self.cfg.n_max, self.cfg.tau, T::zero(), &mut terms);
        Ok(SanityReport {
            ccr_defect: ccr,
            number_commutator,
            gamma1_hermiticity,
            gamma1_min_eigenvalue,
            z0_trace: self.partition_free(),
            z0_enumerated: partition_canonical(terms),
        })
    }
}

fn enumerate_occupations<T: Real>(lambda: &[T], budget: usize, tau: T, energy: T, out: &mut Vec<T>) {
    match lambda.split_first() {
        None => out.push((-(energy / tau)).exp()),
        Some((&first, rest)) => {
            for n in 0..=budget {
                enumerate_occupations(rest, budget - n, tau, energy + first * T::from_count(n), out);
            }
        }
    }
}

/// Sorted ascending, then pairwise.
pub fn partition_canonical<T: Real>(mut terms: Vec<T>) -> T {
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    pairwise_sum(&terms)
}

fn sparse_estimate(dims: &[usize], modes: usize) -> usize {
    let per_row = modes.pow(5);
    dims.iter().map(|&d| d * d.min(per_row) * 16).sum()
}
