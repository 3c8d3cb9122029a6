use nalgebra::DMatrix;
use num_complex::Complex;
use rayon::prelude::*;

use super::operators::{OpValue, SectorOperator, SparseSectorOp};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigendecomposition of one sector block of `H_tau`.
#[derive(Debug, Clone)]
pub struct SectorSpectrum<T: Real> {
    pub n: usize,
    pub values: Vec<T>,
    pub vectors: DMatrix<T>,
    /// `f(n / tau)`.
    pub weight: T,
}

pub(crate) fn diagonalize<T: Real>(n: usize, h: &DMatrix<T>, weight: T) -> Result<SectorSpectrum<T>> {
    let (values, vectors) = T::symmetric_eigen(h);
    if values.iter().chain(vectors.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!("eigendecomposition of sector n = {n} did not converge")));
    }
    Ok(SectorSpectrum { n, values, vectors, weight })
}

/// `rho(A) = Tr(A e^{-H} f(N)) / Tr(e^{-H} f(N))` on the truncated space.
///
/// Energies are shifted by the smallest eigenvalue over the sectors with `f > 0`; the
/// normalizer holds the shifted trace.
#[derive(Debug, Clone)]
pub struct GibbsState<T: Real> {
    tau: T,
    spectra: Vec<SectorSpectrum<T>>,
    densities: Vec<DMatrix<T>>,
    shift: T,
    normalizer: T,
}

impl<T: Real> GibbsState<T> {
    /// `blocks[n]` is the dense real symmetric `H_tau` on sector `n`, `weights[n] = f(n / tau)`.
    pub fn new(tau: T, blocks: &[DMatrix<T>], weights: &[T]) -> Result<Self> {
        let spectra = blocks
            .par_iter()
            .zip(weights.par_iter())
            .enumerate()
            .map(|(n, (h, &wt))| diagonalize(n, h, wt))
            .collect::<Result<Vec<_>>>()?;
        let shift = spectra
            .iter()
            .filter(|s| s.weight > T::zero())
            .filter_map(|s| s.values.first().copied())
            .fold(T::infinity(), T::min);
        if !shift.is_finite() {
            return Err(Error::Numerical("the cutoff removes every sector".into()));
        }
        let densities: Vec<DMatrix<T>> = spectra
            .par_iter()
            .map(|s| {
                let d = s.vectors.nrows();
                if s.weight == T::zero() {
                    return DMatrix::zeros(d, d);
                }
                let boltzmann: Vec<T> = s.values.iter().map(|&e| s.weight * (-(e - shift)).exp()).collect();
                let scaled = DMatrix::from_fn(d, d, |r, c| s.vectors[(r, c)] * boltzmann[c]);
                &scaled * s.vectors.transpose()
            })
            .collect();
        let traces: Vec<T> = spectra
            .iter()
            .map(|s| s.values.iter().fold(T::zero(), |a, &e| a + s.weight * (-(e - shift)).exp()))
            .collect();
        let normalizer = traces.iter().fold(T::zero(), |a, &b| a + b);
        if !(normalizer > T::zero()) || !normalizer.is_finite() {
            return Err(Error::Numerical(format!("Gibbs normalizer is {normalizer}")));
        }
        Ok(Self { tau, spectra, densities, shift, normalizer })
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn spectra(&self) -> &[SectorSpectrum<T>] {
        &self.spectra
    }

    /// `ln Tr(e^{-H} f(N))`.
    pub fn log_partition(&self) -> T {
        self.normalizer.ln() - self.shift
    }

    pub fn partition(&self) -> T {
        self.log_partition().exp()
    }

    /// Unnormalized `Tr(A_n e^{-H_n}) f(n / tau)` for every sector, scaled by `e^{shift}`.
    fn sector_traces<V: OpValue<T>>(&self, op: &SparseSectorOp<V>) -> Vec<Complex<T>> {
        let zero = Complex::new(T::zero(), T::zero());
        op.blocks()
            .iter()
            .zip(&self.densities)
            .map(|(block, rho)| {
                let mut acc = zero;
                for r in 0..block.dim() {
                    for &(c, v) in block.row(r) {
                        acc = acc + v.to_complex() * rho[(c, r)];
                    }
                }
                acc
            })
            .collect()
    }

    pub fn expectation_sparse<V: OpValue<T>>(&self, op: &SparseSectorOp<V>) -> Complex<T> {
        let total = self.sector_traces(op).into_iter().fold(Complex::new(T::zero(), T::zero()), |a, b| a + b);
        total / self.normalizer
    }

    pub fn expectation(&self, op: &SectorOperator<T>) -> Complex<T> {
        let mut total = Complex::new(T::zero(), T::zero());
        for (block, rho) in op.blocks().iter().zip(&self.densities) {
            for r in 0..block.nrows() {
                for c in 0..block.ncols() {
                    total = total + block[(r, c)] * rho[(c, r)];
                }
            }
        }
        total / self.normalizer
    }

    /// `rho(N_tau)`.
    pub fn number_expectation(&self) -> T {
        let mut total = T::zero();
        for (n, rho) in self.densities.iter().enumerate() {
            total = total + T::from_count(n) / self.tau * rho.trace();
        }
        total / self.normalizer
    }

    /// Probability of each particle sector.
    pub fn sector_probabilities(&self) -> Vec<T> {
        self.densities.iter().map(|rho| rho.trace() / self.normalizer).collect()
    }

    /// `Psi^t A = e^{i t tau H} A e^{-i t tau H}`.
    pub fn heisenberg_evolve(&self, op: &SectorOperator<T>, t: T) -> SectorOperator<T> {
        let blocks = self
            .spectra
            .par_iter()
            .zip(op.blocks().par_iter())
            .map(|(s, a)| {
                let u = unitary(s, t * self.tau);
                let u_dag = DMatrix::from_fn(u.ncols(), u.nrows(), |r, c| u[(c, r)].conj());
                &u * a * u_dag
            })
            .collect();
        SectorOperator::from_blocks(blocks)
    }
}

/// `V diag(e^{i s E}) V^T`.
fn unitary<T: Real>(s: &SectorSpectrum<T>, time: T) -> DMatrix<Complex<T>> {
    let d = s.vectors.nrows();
    let phases: Vec<Complex<T>> = s.values.iter().map(|&e| Complex::new(T::zero(), time * e).exp()).collect();
    let left = DMatrix::from_fn(d, d, |r, c| phases[c] * s.vectors[(r, c)]);
    let right = DMatrix::from_fn(d, d, |r, c| Complex::new(s.vectors[(c, r)], T::zero()));
    left * right
}
