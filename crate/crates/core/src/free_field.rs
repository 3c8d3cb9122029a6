//! Sampling of the Gaussian free field with covariance `h^{-1}`.

use num_complex::Complex;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{FourierField, ModeGrid};
use crate::stats::McEstimate;

/// Samples needed before moment checks are trusted.
pub const MIN_WICK_SAMPLES: usize = 100_000;

/// Deterministic sampler: sample `index` always comes from ChaCha stream `index` of `seed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSampler<T> {
    grid: ModeGrid<T>,
    seed: u64,
}

impl<T: Real> FieldSampler<T> {
    pub fn new(grid: ModeGrid<T>, seed: u64) -> Self {
        Self { grid, seed }
    }

    pub fn grid(&self) -> &ModeGrid<T> {
        &self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    /// `a_k = omega_k / sqrt(lambda_k)` with `Re omega_k, Im omega_k` i.i.d. `N(0, 1/2)`.
    pub fn sample(&self, index: u64) -> FourierField<T> {
        let mut rng = self.stream(index);
        let half = std::f64::consts::FRAC_1_SQRT_2;
        FourierField::from_fn(self.grid.n_modes(), |k| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let scale = T::one() / self.grid.eigenvalue(k).sqrt();
            Complex::new(T::c(re * half) * scale, T::c(im * half) * scale)
        })
    }

    /// Samples `start .. start + count`, in index order whatever the thread count.
    pub fn samples(&self, start: u64, count: usize) -> Vec<FourierField<T>> {
        (0..count as u64).into_par_iter().map(|i| self.sample(start + i)).collect()
    }
}

pub fn sample_free_field<T: Real>(sampler: &FieldSampler<T>, index: u64) -> FourierField<T> {
    sampler.sample(index)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck<T> {
    pub name: String,
    pub estimate: McEstimate<T>,
    pub expected: T,
    pub z_score: T,
}

impl<T: Real> MomentCheck<T> {
    fn new(name: String, values: &[T], expected: T, seed: u64) -> Result<Self> {
        let estimate = McEstimate::from_samples(values, seed)?;
        let z_score = estimate.z_score(expected);
        Ok(Self { name, estimate, expected, z_score })
    }

    pub fn passes(&self, n_se: T) -> bool {
        self.z_score <= n_se
    }
}

/// Per-mode checks `E|a_k|^2 = 1/lambda_k` and `E a_k^2 = 0`.
pub fn covariance_check<T: Real>(samples: &[FourierField<T>], kappa: T, seed: u64) -> Result<Vec<MomentCheck<T>>> {
    let first = samples.first().ok_or_else(|| Error::Statistics("no samples".into()))?;
    let mut out = Vec::new();
    for k in first.modes() {
        let lambda = crate::spectral::eigenvalue(k, kappa);
        let sq: Vec<T> = samples.iter().map(|s| s.get(k).norm_sqr()).collect();
        out.push(MomentCheck::new(format!("E|a({k})|^2"), &sq, T::one() / lambda, seed)?);
        let anomalous: Vec<Complex<T>> = samples.iter().map(|s| s.get(k) * s.get(k)).collect();
        let re: Vec<T> = anomalous.iter().map(|c| c.re).collect();
        let im: Vec<T> = anomalous.iter().map(|c| c.im).collect();
        out.push(MomentCheck::new(format!("Re E a({k})^2"), &re, T::zero(), seed)?);
        out.push(MomentCheck::new(format!("Im E a({k})^2"), &im, T::zero(), seed)?);
    }
    Ok(out)
}

/// Gaussian four-point identities for each pair `(k, l)`:
/// `E|a_k|^2 |a_l|^2 = 1/(lambda_k lambda_l)` for `k != l`, `E|a_k|^4 = 2/lambda_k^2`,
/// together with the vanishing first moments.
pub fn wick_four_point_check<T: Real>(
    samples: &[FourierField<T>],
    pairs: &[(i64, i64)],
    kappa: T,
    seed: u64,
    min_samples: usize,
) -> Result<Vec<MomentCheck<T>>> {
    if samples.len() < min_samples {
        return Err(Error::Statistics(format!(
            "four-point check needs at least {min_samples} samples, got {}",
            samples.len()
        )));
    }
    let mut out = Vec::new();
    for &(k, l) in pairs {
        let lk = crate::spectral::eigenvalue(k, kappa);
        let ll = crate::spectral::eigenvalue(l, kappa);
        let expected = if k == l { T::c(2.0) / (lk * lk) } else { T::one() / (lk * ll) };
        let values: Vec<T> = samples.iter().map(|s| s.get(k).norm_sqr() * s.get(l).norm_sqr()).collect();
        out.push(MomentCheck::new(format!("E|a({k})|^2|a({l})|^2"), &values, expected, seed)?);
        for m in if k == l { vec![k] } else { vec![k, l] } {
            let re: Vec<T> = samples.iter().map(|s| s.get(m).re).collect();
            let im: Vec<T> = samples.iter().map(|s| s.get(m).im).collect();
            out.push(MomentCheck::new(format!("E Re a({m})"), &re, T::zero(), seed)?);
            out.push(MomentCheck::new(format!("E Im a({m})"), &im, T::zero(), seed)?);
        }
    }
    Ok(out)
}

/// Mass `sum_k |a_k|^2` against its mean `sum_k 1/lambda_k`.
pub fn mass_check<T: Real>(samples: &[FourierField<T>], kappa: T, seed: u64) -> Result<MomentCheck<T>> {
    let first = samples.first().ok_or_else(|| Error::Statistics("no samples".into()))?;
    let expected = crate::stats::pairwise_sum(&first.modes().map(|k| crate::spectral::green_classical(k, kappa)).collect::<Vec<T>>());
    let masses: Vec<T> = samples.iter().map(|s| s.mass()).collect();
    MomentCheck::new("E mass".into(), &masses, expected, seed)
}
