use std::fmt::Debug;
use std::ops::{Add, Mul};

use nalgebra::DMatrix;
use num_complex::Complex;
use rayon::prelude::*;

use super::basis::FockBasis;
use crate::error::{Error, Result};
use crate::interaction::InteractionSpec;
use crate::observable::{Observable, ObservableKernel};
use crate::scalar::Real;
use crate::spectral::eigenvalue;

/// Matrix entries of sector operators: real or complex.
pub trait OpValue<T: Real>: Copy + Send + Sync + Debug + PartialEq + Add<Output = Self> + Mul<Output = Self> + Mul<T, Output = Self> {
    fn zero() -> Self;
    fn from_real(x: T) -> Self;
    fn to_complex(self) -> Complex<T>;
    fn conj(self) -> Self;
}

impl<T: Real> OpValue<T> for T {
    fn zero() -> Self {
        T::zero()
    }
    fn from_real(x: T) -> Self {
        x
    }
    fn to_complex(self) -> Complex<T> {
        Complex::new(self, T::zero())
    }
    fn conj(self) -> Self {
        self
    }
}

impl<T: Real> OpValue<T> for Complex<T> {
    fn zero() -> Self {
        Complex::new(T::zero(), T::zero())
    }
    fn from_real(x: T) -> Self {
        Complex::new(x, T::zero())
    }
    fn to_complex(self) -> Complex<T> {
        self
    }
    fn conj(self) -> Self {
        Complex::conj(&self)
    }
}

/// Sparse rows of one sector block: row `r` holds `(column, value)` sorted by column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseBlock<V> {
    rows: Vec<Vec<(usize, V)>>,
}

impl<V: Copy> SparseBlock<V> {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, r: usize) -> &[(usize, V)] {
        &self.rows[r]
    }

    pub fn get(&self, r: usize, c: usize) -> Option<V> {
        let row = &self.rows[r];
        row.binary_search_by_key(&c, |e| e.0).ok().map(|i| row[i].1)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// Particle-number preserving operator stored sparsely per sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSectorOp<V> {
    blocks: Vec<SparseBlock<V>>,
}

impl<V: Copy> SparseSectorOp<V> {
    pub fn block(&self, n: usize) -> &SparseBlock<V> {
        &self.blocks[n]
    }

    pub fn blocks(&self) -> &[SparseBlock<V>] {
        &self.blocks
    }

    pub fn nnz(&self) -> usize {
        self.blocks.iter().map(SparseBlock::nnz).sum()
    }
}

impl<V> SparseSectorOp<V> {
    /// Builds every sector from the image of each basis ket: `column(n, s)` returns the
    /// nonzero entries `(row, value)` of column `s` in sector `n`.
    pub fn from_columns<T: Real>(basis: &FockBasis, column: impl Fn(usize, usize) -> Vec<(usize, V)> + Sync) -> Self
    where
        V: OpValue<T>,
    {
        let blocks = basis
            .sectors()
            .par_iter()
            .map(|sector| {
                let n = sector.n();
                let mut rows: Vec<Vec<(usize, V)>> = vec![Vec::new(); sector.dim()];
                for s in 0..sector.dim() {
                    for (r, v) in column(n, s) {
                        rows[r].push((s, v));
                    }
                }
                for row in &mut rows {
                    row.sort_by_key(|e| e.0);
                    let mut merged: Vec<(usize, V)> = Vec::with_capacity(row.len());
                    for &(c, v) in row.iter() {
                        match merged.last_mut() {
                            Some(last) if last.0 == c => last.1 = last.1 + v,
                            _ => merged.push((c, v)),
                        }
                    }
                    merged.retain(|e| e.1 != V::zero());
                    *row = merged;
                }
                SparseBlock { rows }
            })
            .collect();
        Self { blocks }
    }

    pub fn to_dense<T: Real>(&self) -> SectorOperator<T>
    where
        V: OpValue<T>,
    {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let mut m = DMatrix::from_element(b.dim(), b.dim(), Complex::new(T::zero(), T::zero()));
                for (r, row) in b.rows.iter().enumerate() {
                    for &(c, v) in row {
                        m[(r, c)] = v.to_complex();
                    }
                }
                m
            })
            .collect();
        SectorOperator { blocks }
    }

    /// Dense real blocks; the imaginary parts must vanish.
    pub fn to_dense_real<T: Real>(&self) -> Vec<DMatrix<T>>
    where
        V: OpValue<T>,
    {
        self.blocks
            .iter()
            .map(|b| {
                let mut m = DMatrix::from_element(b.dim(), b.dim(), T::zero());
                for (r, row) in b.rows.iter().enumerate() {
                    for &(c, v) in row {
                        m[(r, c)] = v.to_complex().re;
                    }
                }
                m
            })
            .collect()
    }
}

/// Dense complex blocks, one per particle sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorOperator<T: Real> {
    blocks: Vec<DMatrix<Complex<T>>>,
}

impl<T: Real> SectorOperator<T> {
    pub fn from_blocks(blocks: Vec<DMatrix<Complex<T>>>) -> Self {
        Self { blocks }
    }

    pub fn identity(basis: &FockBasis) -> Self {
        Self { blocks: basis.dims().iter().map(|&d| DMatrix::identity(d, d)).collect() }
    }

    pub fn block(&self, n: usize) -> &DMatrix<Complex<T>> {
        &self.blocks[n]
    }

    pub fn blocks(&self) -> &[DMatrix<Complex<T>>] {
        &self.blocks
    }

    /// `max_n ||A_n - A_n^dagger||_max`.
    pub fn hermiticity_defect(&self) -> T {
        self.blocks.iter().fold(T::zero(), |acc, b| {
            let mut worst = acc;
            for r in 0..b.nrows() {
                for c in 0..b.ncols() {
                    worst = worst.max((b[(r, c)] - b[(c, r)].conj()).norm());
                }
            }
            worst
        })
    }

    pub fn product(&self, other: &Self) -> Self {
        Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a * b).collect() }
    }

    pub fn max_abs(&self) -> T {
        self.blocks.iter().flat_map(|b| b.iter()).fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a - b).collect() }
    }
}

/// Applies `b^dag_{c_1} ... b^dag_{c_p} b_{a_1} ... b_{a_q}` (mode slots) to an occupation
/// vector; returns the image state and its amplitude, or `None` when it vanishes.
pub fn apply_word<T: Real>(occupation: &[u16], creators: &[usize], annihilators: &[usize]) -> Option<(Vec<u16>, T)> {
    let mut occ = occupation.to_vec();
    let mut amp = T::one();
    for &a in annihilators.iter().rev() {
        if occ[a] == 0 {
            return None;
        }
        amp = amp * T::from_count(occ[a] as usize).sqrt();
        occ[a] -= 1;
    }
    for &c in creators.iter().rev() {
        occ[c] += 1;
        amp = amp * T::from_count(occ[c] as usize).sqrt();
    }
    Some((occ, amp))
}

/// `b_k` as blocks from sector `n + 1` to sector `n` (`dim(n) x dim(n+1)`); the creation
/// operator is the transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct Ladder<T: Real> {
    mode: i64,
    blocks: Vec<DMatrix<T>>,
}

impl<T: Real> Ladder<T> {
    pub fn mode(&self) -> i64 {
        self.mode
    }

    /// `b_k : H_{n+1} -> H_n`.
    pub fn annihilation(&self, n: usize) -> &DMatrix<T> {
        &self.blocks[n]
    }

    /// `b_k^dag : H_n -> H_{n+1}`.
    pub fn creation(&self, n: usize) -> DMatrix<T> {
        self.blocks[n].transpose()
    }

    pub fn sectors(&self) -> usize {
        self.blocks.len()
    }
}

pub fn build_ladder<T: Real>(basis: &FockBasis, k: i64) -> Result<Ladder<T>> {
    let slot = basis.mode_index(k)?;
    let blocks = (0..basis.n_max())
        .map(|n| {
            let lower = basis.sector(n);
            let upper = basis.sector(n + 1);
            let mut m = DMatrix::from_element(lower.dim(), upper.dim(), T::zero());
            for (s, occ) in upper.states().iter().enumerate() {
                if let Some((image, amp)) = apply_word::<T>(occ, &[], &[slot]) {
                    let r = lower.find(&image).expect("annihilation stays in the basis");
                    m[(r, s)] = amp;
                }
            }
            m
        })
        .collect();
    Ok(Ladder { mode: k, blocks })
}

/// Diagonal of `H_{tau,0} = sum_k lambda_k n_k / tau`, per sector.
pub fn build_h0<T: Real>(basis: &FockBasis, tau: T, kappa: T) -> Vec<Vec<T>> {
    let lambda: Vec<T> = basis.modes().iter().map(|&k| eigenvalue(k, kappa)).collect();
    basis
        .sectors()
        .iter()
        .map(|sector| {
            sector
                .states()
                .iter()
                .map(|occ| free_energy(occ, &lambda) / tau)
                .collect()
        })
        .collect()
}

/// `sum_k lambda_k n_k`, accumulated in mode order.
pub fn free_energy<T: Real>(occupation: &[u16], lambda: &[T]) -> T {
    occupation.iter().zip(lambda).fold(T::zero(), |acc, (&n, &l)| acc + l * T::from_count(n as usize))
}

/// `N_tau = n / tau` on sector `n`.
pub fn number_value<T: Real>(n: usize, tau: T) -> T {
    T::from_count(n) / tau
}

/// `W_tau = -(1/(3 tau^3)) sum_{k1+k2+k3 = k4+k5+k6} w(k5-k2) w(k6-k3) b+_{k1} b+_{k2} b+_{k3} b_{k4} b_{k5} b_{k6}`,
/// all momenta restricted to the basis modes.
pub fn build_wtau<T: Real>(basis: &FockBasis, w: &InteractionSpec<T>, tau: T) -> SparseSectorOp<T> {
    let modes = basis.modes().to_vec();
    let l = modes.len();
    let prefactor = -T::one() / (T::c(3.0) * tau * tau * tau);
    let span = (modes[l - 1] - modes[0]) as usize;
    let w_hat: Vec<T> = (0..=span as i64).map(|q| w.fourier(q)).collect();
    let what = |q: i64| w_hat[q.unsigned_abs() as usize];
    SparseSectorOp::from_columns(basis, |n, s| {
        let sector = basis.sector(n);
        let ket = sector.state(s);
        let mut out = Vec::new();
        if n < 3 {
            return out;
        }
        let mut occ = ket.to_vec();
        for i6 in 0..l {
            if occ[i6] == 0 {
                continue;
            }
            let a6 = T::from_count(occ[i6] as usize).sqrt();
            occ[i6] -= 1;
            for i5 in 0..l {
                if occ[i5] == 0 {
                    continue;
                }
                let a5 = T::from_count(occ[i5] as usize).sqrt();
                occ[i5] -= 1;
                for i4 in 0..l {
                    if occ[i4] == 0 {
                        continue;
                    }
                    let a4 = T::from_count(occ[i4] as usize).sqrt();
                    occ[i4] -= 1;
                    let total = modes[i4] + modes[i5] + modes[i6];
                    let amp_in = a4 * a5 * a6;
                    for i3 in 0..l {
                        let w3 = what(modes[i6] - modes[i3]);
                        if w3 == T::zero() {
                            continue;
                        }
                        for i2 in 0..l {
                            let w2 = what(modes[i5] - modes[i2]);
                            if w2 == T::zero() {
                                continue;
                            }
                            let k1 = total - modes[i2] - modes[i3];
                            let Ok(i1) = modes.binary_search(&k1) else { continue };
                            let mut image = occ.clone();
                            image[i3] += 1;
                            let mut amp = amp_in * T::from_count(image[i3] as usize).sqrt();
                            image[i2] += 1;
                            amp = amp * T::from_count(image[i2] as usize).sqrt();
                            image[i1] += 1;
                            amp = amp * T::from_count(image[i1] as usize).sqrt();
                            let r = sector.find(&image).expect("W_tau preserves the sector");
                            out.push((r, prefactor * w2 * w3 * amp));
                        }
                    }
                    occ[i4] += 1;
                }
                occ[i5] += 1;
            }
            occ[i6] += 1;
        }
        out
    })
}

/// `b^dag_{k'} b_k` summed with coefficients, as a sparse operator.
pub fn build_normal_ordered<T: Real, V: OpValue<T>>(basis: &FockBasis, terms: &[(V, Vec<usize>, Vec<usize>)]) -> SparseSectorOp<V> {
    SparseSectorOp::from_columns(basis, |n, s| {
        let sector = basis.sector(n);
        let ket = sector.state(s);
        let mut out = Vec::new();
        for (coef, creators, annihilators) in terms {
            if creators.len() != annihilators.len() {
                continue;
            }
            if let Some((image, amp)) = apply_word::<T>(ket, creators, annihilators) {
                if let Some(r) = sector.find(&image) {
                    out.push((r, *coef * amp));
                }
            }
        }
        out
    })
}

/// `Theta_tau(xi) = tau^{-p} sum xi_hat(k; k') b+_{k_1} ... b+_{k_p} b_{k'_1} ... b_{k'_p}`.
pub fn build_theta<T: Real>(basis: &FockBasis, obs: &Observable<T>, tau: T) -> Result<SparseSectorOp<Complex<T>>> {
    let band = obs.band() as i64;
    if basis.modes() != (-band..=band).collect::<Vec<_>>().as_slice() {
        return Err(Error::Config(format!(
            "observable band {} does not match the basis modes {:?}",
            obs.band(),
            basis.modes()
        )));
    }
    let scale = T::one() / tau.powi(obs.p() as i32);
    let slots = |i: usize| -> Vec<usize> { obs.tuple(i).iter().map(|&k| (k + band) as usize).collect() };
    let count = obs.tuple_count();
    let mut terms = Vec::new();
    match obs.kernel() {
        ObservableKernel::Identity | ObservableKernel::Diagonal(_) => {
            for i in 0..count {
                let d = obs.diagonal_weight(i).unwrap_or_else(T::zero);
                if d != T::zero() {
                    terms.push((Complex::new(d * scale, T::zero()), slots(i), slots(i)));
                }
            }
        }
        ObservableKernel::Matrix(m) => {
            for r in 0..count {
                for c in 0..count {
                    let x = m[(r, c)];
                    if x != Complex::new(T::zero(), T::zero()) {
                        terms.push((x * scale, slots(r), slots(c)));
                    }
                }
            }
        }
    }
    Ok(build_normal_ordered::<T, Complex<T>>(basis, &terms))
}
