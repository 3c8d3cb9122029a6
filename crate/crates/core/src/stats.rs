//! Deterministic reductions and Monte-Carlo estimates.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pairwise (tree) summation in a fixed order.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    const LEAF: usize = 16;
    if xs.len() <= LEAF {
        return xs.iter().fold(T::zero(), |a, &b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<T> {
    pub mean: T,
    pub std_error: T,
    pub n_samples: usize,
    pub seed: u64,
}

impl<T: Real> McEstimate<T> {
    /// Sample mean and standard error of the mean.
    pub fn from_samples(xs: &[T], seed: u64) -> Result<Self> {
        let n = xs.len();
        if n == 0 {
            return Err(Error::Statistics("no samples".into()));
        }
        let mean = pairwise_sum(xs) / T::from_count(n);
        let std_error = if n > 1 {
            let dev: Vec<T> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
            (pairwise_sum(&dev) / T::from_count(n - 1) / T::from_count(n)).sqrt()
        } else {
            T::zero()
        };
        Ok(Self { mean, std_error, n_samples: n, seed })
    }

    /// Self-normalized ratio `sum x_i / sum y_i` with delta-method standard error.
    pub fn ratio(num: &[T], den: &[T], seed: u64) -> Result<Self> {
        let n = num.len();
        if n == 0 || den.len() != n {
            return Err(Error::Statistics(format!(
                "ratio estimator needs equally many numerator and denominator samples, got {} and {}",
                n,
                den.len()
            )));
        }
        let sy = pairwise_sum(den);
        if !(sy > T::zero()) {
            return Err(Error::Statistics("all weights vanish".into()));
        }
        let mean = pairwise_sum(num) / sy;
        let std_error = if n > 1 {
            let resid: Vec<T> = num.iter().zip(den).map(|(&x, &y)| (x - mean * y) * (x - mean * y)).collect();
            let ybar = sy / T::from_count(n);
            (pairwise_sum(&resid) / T::from_count(n - 1) / T::from_count(n)).sqrt() / ybar
        } else {
            T::zero()
        };
        Ok(Self { mean, std_error, n_samples: n, seed })
    }

    /// Number of standard errors separating the estimate from `value`.
    pub fn z_score(&self, value: T) -> T {
        let d = (self.mean - value).abs();
        if self.std_error > T::zero() {
            d / self.std_error
        } else if d == T::zero() {
            T::zero()
        } else {
            T::infinity()
        }
    }

    pub fn within(&self, value: T, n_se: T) -> bool {
        self.z_score(value) <= n_se
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEstimate<T> {
    pub re: McEstimate<T>,
    pub im: McEstimate<T>,
}

impl<T: Real> ComplexEstimate<T> {
    pub fn ratio(num: &[Complex<T>], den: &[T], seed: u64) -> Result<Self> {
        let re: Vec<T> = num.iter().map(|c| c.re).collect();
        let im: Vec<T> = num.iter().map(|c| c.im).collect();
        Ok(Self { re: McEstimate::ratio(&re, den, seed)?, im: McEstimate::ratio(&im, den, seed)? })
    }

    pub fn mean(&self) -> Complex<T> {
        Complex::new(self.re.mean, self.im.mean)
    }
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit<T: Real>(x: &[T], y: &[T]) -> (T, T) {
    let n = T::from_count(x.len());
    let mx = pairwise_sum(x) / n;
    let my = pairwise_sum(y) / n;
    let sxy: Vec<T> = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).collect();
    let sxx: Vec<T> = x.iter().map(|&a| (a - mx) * (a - mx)).collect();
    let slope = pairwise_sum(&sxy) / pairwise_sum(&sxx);
    (slope, my - slope * mx)
}
