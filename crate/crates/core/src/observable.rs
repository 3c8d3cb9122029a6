//! `p`-particle observables `Theta(xi)` given by Fourier kernels over `p`-tuples of modes.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{modes, FourierField};

#[derive(Debug, Clone, PartialEq)]
pub enum ObservableKernel<T> {
    /// `xi = 1_p`.
    Identity,
    /// Momentum-diagonal kernel `xi_hat(k; k') = d(k) delta(k = k')` over tuples.
    Diagonal(Vec<T>),
    /// General kernel over tuples, rows `k`, columns `k'`.
    Matrix(DMatrix<Complex<T>>),
}

/// `Theta(xi) = sum xi_hat(k; k') conj(phi_{k_1}) ... conj(phi_{k_p}) phi_{k'_1} ... phi_{k'_p}`,
/// tuples ordered lexicographically over the modes `|k| <= band`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable<T> {
    p: usize,
    band: usize,
    kernel: ObservableKernel<T>,
}

impl<T: Real> Observable<T> {
    pub fn identity(p: usize, band: usize) -> Result<Self> {
        Self::new(p, band, ObservableKernel::Identity)
    }

    pub fn diagonal(p: usize, band: usize, d: Vec<T>) -> Result<Self> {
        Self::new(p, band, ObservableKernel::Diagonal(d))
    }

    pub fn matrix(p: usize, band: usize, xi: DMatrix<Complex<T>>) -> Result<Self> {
        Self::new(p, band, ObservableKernel::Matrix(xi))
    }

    /// One-particle projector onto `e_k`: `Theta = |phi_hat(k)|^2`.
    pub fn mode_occupation(k: i64, band: usize) -> Result<Self> {
        if k.unsigned_abs() as usize > band {
            return Err(Error::Config(format!("mode {k} outside the band |k| <= {band}")));
        }
        let d = modes(band).map(|q| if q == k { T::one() } else { T::zero() }).collect();
        Self::diagonal(1, band, d)
    }

    fn new(p: usize, band: usize, kernel: ObservableKernel<T>) -> Result<Self> {
        if p == 0 {
            return Err(Error::Config("observables need p >= 1".into()));
        }
        let dim = (2 * band + 1).pow(p as u32);
        match &kernel {
            ObservableKernel::Diagonal(d) if d.len() != dim => {
                return Err(Error::SizeMismatch { expected: dim, got: d.len() })
            }
            ObservableKernel::Matrix(m) if m.nrows() != dim || m.ncols() != dim => {
                return Err(Error::SizeMismatch { expected: dim, got: m.nrows().max(m.ncols()) })
            }
            _ => {}
        }
        Ok(Self { p, band, kernel })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn kernel(&self) -> &ObservableKernel<T> {
        &self.kernel
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kernel, ObservableKernel::Identity)
    }

    pub fn tuple_count(&self) -> usize {
        (2 * self.band + 1).pow(self.p as u32)
    }

    /// Modes of tuple number `index`.
    pub fn tuple(&self, index: usize) -> Vec<i64> {
        tuple_of(index, self.p, self.band)
    }

    pub fn tuple_index(&self, ks: &[i64]) -> Option<usize> {
        tuple_index(ks, self.band)
    }

    /// Diagonal weight `d(k)`, for identity and diagonal kernels.
    pub fn diagonal_weight(&self, index: usize) -> Option<T> {
        match &self.kernel {
            ObservableKernel::Identity => Some(T::one()),
            ObservableKernel::Diagonal(d) => Some(d[index]),
            ObservableKernel::Matrix(_) => None,
        }
    }

    /// Kernel entry `xi_hat(k; k')`.
    pub fn entry(&self, row: usize, col: usize) -> Complex<T> {
        let zero = Complex::new(T::zero(), T::zero());
        match &self.kernel {
            ObservableKernel::Identity => if row == col { Complex::new(T::one(), T::zero()) } else { zero },
            ObservableKernel::Diagonal(d) => if row == col { Complex::new(d[row], T::zero()) } else { zero },
            ObservableKernel::Matrix(m) => m[(row, col)],
        }
    }

    /// Operator norm of `xi` on the `p`-particle space.
    pub fn operator_norm(&self) -> T {
        match &self.kernel {
            ObservableKernel::Identity => T::one(),
            ObservableKernel::Diagonal(d) => d.iter().fold(T::zero(), |a, x| a.max(x.abs())),
            ObservableKernel::Matrix(m) => {
                let n = m.nrows();
                let gram = DMatrix::from_fn(n, n, |r, c| (0..n).fold(Complex::new(T::zero(), T::zero()), |acc, j| acc + m[(j, r)].conj() * m[(j, c)]));
                let real = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
                    let z = gram[(r % n, c % n)];
                    match (r < n, c < n) {
                        (true, true) | (false, false) => z.re,
                        (true, false) => -z.im,
                        (false, true) => z.im,
                    }
                });
                let (values, _) = T::symmetric_eigen(&real);
                values.last().copied().unwrap_or_else(T::zero).max(T::zero()).sqrt()
            }
        }
    }

    /// Classical value `Theta(xi)(phi)`.
    pub fn classical_value(&self, field: &FourierField<T>) -> Complex<T> {
        let zero = Complex::new(T::zero(), T::zero());
        match &self.kernel {
            ObservableKernel::Identity => Complex::new(field.mass().powi(self.p as i32), T::zero()),
            ObservableKernel::Diagonal(d) => d.iter().enumerate().fold(zero, |acc, (i, &w)| {
                if w == T::zero() {
                    return acc;
                }
                let prod = self.tuple(i).iter().fold(T::one(), |p, &k| p * field.get(k).norm_sqr());
                acc + Complex::new(w * prod, T::zero())
            }),
            ObservableKernel::Matrix(m) => {
                let n = self.tuple_count();
                let left: Vec<Complex<T>> = (0..n)
                    .map(|i| self.tuple(i).iter().fold(Complex::new(T::one(), T::zero()), |p, &k| p * field.get(k).conj()))
                    .collect();
                let right: Vec<Complex<T>> = (0..n)
                    .map(|i| self.tuple(i).iter().fold(Complex::new(T::one(), T::zero()), |p, &k| p * field.get(k)))
                    .collect();
                let mut acc = zero;
                for r in 0..n {
                    for c in 0..n {
                        acc = acc + m[(r, c)] * left[r] * right[c];
                    }
                }
                acc
            }
        }
    }
}

/// Lexicographic tuple number of `ks` over the modes `|k| <= band`.
pub fn tuple_index(ks: &[i64], band: usize) -> Option<usize> {
    let l = 2 * band as i64 + 1;
    ks.iter().try_fold(0usize, |acc, &k| {
        (k.abs() <= band as i64).then(|| acc * l as usize + (k + band as i64) as usize)
    })
}

pub fn tuple_of(mut index: usize, p: usize, band: usize) -> Vec<i64> {
    let l = 2 * band + 1;
    let mut out = vec![0i64; p];
    for slot in out.iter_mut().rev() {
        *slot = (index % l) as i64 - band as i64;
        index /= l;
    }
    out
}
