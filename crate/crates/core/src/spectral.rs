//! Torus Fourier conventions, dispersion, Green kernels and band projectors.
//!
//! The torus is `[-1/2, 1/2)` with basis `e_k(x) = exp(2 pi i k x)` and Fourier
//! coefficients `g_hat(k) = int g(x) exp(-2 pi i k x) dx`. Collocation grids use the
//! points `x_j = j / G`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stats::pairwise_sum;

/// `lambda_k = 4 pi^2 k^2 + kappa`.
pub fn eigenvalue<T: Real>(k: i64, kappa: T) -> T {
    let kk = T::c(k as f64);
    T::c(4.0) * T::PI() * T::PI() * kk * kk + kappa
}

/// Classical Green kernel `1 / lambda_k`.
pub fn green_classical<T: Real>(k: i64, kappa: T) -> T {
    T::one() / eigenvalue(k, kappa)
}

/// Quantum Green kernel `G_{tau,t}(k) = exp(-t lambda_k / tau) / (tau (exp(lambda_k / tau) - 1))`,
/// defined for `t >= -1`.
pub fn green_quantum<T: Real>(k: i64, t: T, tau: T, kappa: T) -> Result<T> {
    check_tau(tau)?;
    if !(t >= -T::one()) {
        return Err(Error::Domain(format!("G_tau,t needs t >= -1, got t = {t}")));
    }
    let x = eigenvalue(k, kappa) / tau;
    Ok((-t * x).exp() / (tau * x.exp_m1()))
}

/// Free smoothing kernel `S_{tau,t}(k) = exp(-t lambda_k / tau)`, defined for `t >= 0`.
pub fn smoother<T: Real>(k: i64, t: T, tau: T, kappa: T) -> Result<T> {
    check_tau(tau)?;
    if !(t >= T::zero()) {
        return Err(Error::Domain(format!("S_tau,t needs t >= 0, got t = {t}")));
    }
    Ok((-t * eigenvalue(k, kappa) / tau).exp())
}

fn check_tau<T: Real>(tau: T) -> Result<()> {
    if tau > T::zero() && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("tau must be positive and finite, got {tau}")))
    }
}

/// Symmetric list of momenta `-n..=n`.
pub fn modes(n: usize) -> impl Iterator<Item = i64> + Clone {
    let n = n as i64;
    -n..=n
}

/// Smallest integer `>= n` of the form `2^a 3^b 5^c`.
pub fn fft_friendly(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeGrid<T> {
    n_modes: usize,
    grid_points: usize,
    kappa: T,
}

impl<T: Real> ModeGrid<T> {
    /// Grid with the smallest FFT-friendly size that keeps quintic products alias free.
    pub fn new(n_modes: usize, kappa: T) -> Result<Self> {
        Self::with_grid_points(n_modes, fft_friendly(6 * n_modes + 1), kappa)
    }

    pub fn with_grid_points(n_modes: usize, grid_points: usize, kappa: T) -> Result<Self> {
        if !(kappa > T::zero() && kappa.is_finite()) {
            return Err(Error::Config(format!("kappa must be positive, got {kappa}")));
        }
        if grid_points < 6 * n_modes + 1 {
            return Err(Error::Config(format!(
                "grid_points = {grid_points} is below 6 N_modes + 1 = {}",
                6 * n_modes + 1
            )));
        }
        Ok(Self { n_modes, grid_points, kappa })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    /// Number of retained modes, `2 N_modes + 1`.
    pub fn len(&self) -> usize {
        2 * self.n_modes + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> + Clone {
        modes(self.n_modes)
    }

    pub fn eigenvalue(&self, k: i64) -> T {
        eigenvalue(k, self.kappa)
    }

    /// Position `x_j` of collocation point `j`.
    pub fn point(&self, j: usize) -> T {
        T::from_count(j) / T::from_count(self.grid_points)
    }
}

/// Fourier coefficients of a band-limited field, indexed by `k` in `-N..=N`.
#[derive(Clone, PartialEq)]
pub struct FourierField<T> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> fmt::Debug for FourierField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierField").field("n_modes", &self.n_modes()).field("coeffs", &self.coeffs).finish()
    }
}

impl<T: Real> FourierField<T> {
    pub fn zeros(n_modes: usize) -> Self {
        Self { coeffs: vec![Complex::new(T::zero(), T::zero()); 2 * n_modes + 1] }
    }

    pub fn from_coeffs(coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::Config(format!(
                "a Fourier field needs an odd number of coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn from_fn(n_modes: usize, mut f: impl FnMut(i64) -> Complex<T>) -> Self {
        Self { coeffs: modes(n_modes).map(&mut f).collect() }
    }

    pub fn n_modes(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> + Clone {
        modes(self.n_modes())
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex<T>> {
        self.coeffs
    }

    fn slot(&self, k: i64) -> Option<usize> {
        let n = self.n_modes() as i64;
        (k.abs() <= n).then(|| (k + n) as usize)
    }

    /// Coefficient at `k`; zero outside the band.
    pub fn get(&self, k: i64) -> Complex<T> {
        self.slot(k).map_or(Complex::new(T::zero(), T::zero()), |i| self.coeffs[i])
    }

    pub fn set(&mut self, k: i64, value: Complex<T>) -> Result<()> {
        let i = self.slot(k).ok_or_else(|| {
            Error::Config(format!("mode {k} outside the band |k| <= {}", self.n_modes()))
        })?;
        self.coeffs[i] = value;
        Ok(())
    }

    /// `sum_k |a_k|^2`, equal to the L2 mass by Parseval.
    pub fn mass(&self) -> T {
        let terms: Vec<T> = self.coeffs.iter().map(|c| c.norm_sqr()).collect();
        pairwise_sum(&terms)
    }

    /// Discrete Sobolev norm `|| (1 + |k|)^sigma g_hat(k) ||_l2`.
    pub fn sobolev_norm(&self, sigma: T) -> T {
        let terms: Vec<T> = self
            .modes()
            .zip(&self.coeffs)
            .map(|(k, c)| (T::one() + T::c(k.abs() as f64)).powf(sigma + sigma) * c.norm_sqr())
            .collect();
        pairwise_sum(&terms).sqrt()
    }

    /// Copy into a band of a different size: zero padding or truncation.
    pub fn resized(&self, n_modes: usize) -> Self {
        Self::from_fn(n_modes, |k| self.get(k))
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.n_modes().max(other.n_modes());
        Self::from_fn(n, |k| self.get(k) - other.get(k))
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// `P_N`: zero every mode with `|k| > n`.
pub fn project_pn<T: Real>(field: &FourierField<T>, n: usize) -> Result<FourierField<T>> {
    check_band(field, n)?;
    let n = n as i64;
    Ok(FourierField::from_fn(field.n_modes(), |k| {
        if k.abs() <= n {
            field.get(k)
        } else {
            Complex::new(T::zero(), T::zero())
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    /// `R_N^-`, multiplier `psi(3k/N)`.
    Low,
    /// `R_N^+ = 1 - R_N^-`.
    High,
}

/// Symbol of `R_N^-` or `R_N^+` at mode `k`.
pub fn multiplier_symbol<T: Real>(k: i64, n: usize, band: Band) -> T {
    let low = psi(T::c(3.0 * k as f64 / n as f64));
    match band {
        Band::Low => low,
        Band::High => T::one() - low,
    }
}

pub fn multiplier_rn<T: Real>(field: &FourierField<T>, n: usize, band: Band) -> Result<FourierField<T>> {
    check_band(field, n)?;
    if n == 0 {
        return Err(Error::Config("R_N needs N >= 1".into()));
    }
    Ok(FourierField::from_fn(field.n_modes(), |k| field.get(k) * multiplier_symbol::<T>(k, n, band)))
}

fn check_band<T: Real>(field: &FourierField<T>, n: usize) -> Result<()> {
    if n > field.n_modes() {
        return Err(Error::Config(format!("N = {n} exceeds N_modes = {}", field.n_modes())));
    }
    Ok(())
}

/// Standard bump `exp(-1 / (1 - u^2))` on `(-1, 1)`.
pub fn bump(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

const STEP_NODES: usize = 96;

fn step_rule() -> &'static (Vec<(f64, f64)>, f64) {
    static RULE: OnceLock<(Vec<(f64, f64)>, f64)> = OnceLock::new();
    RULE.get_or_init(|| {
        let rule = crate::quadrature::gauss_legendre(STEP_NODES);
        let total = rule.iter().map(|&(x, w)| w * bump(x)).sum();
        (rule, total)
    })
}

/// Smoothstep built from the bump: `s -> int_{-1}^{2s-1} bump / int_{-1}^{1} bump`,
/// equal to 0 for `s <= 0` and 1 for `s >= 1`.
pub fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let (rule, total) = step_rule();
    let b = 2.0 * s - 1.0;
    let half = 0.5 * (b + 1.0);
    let partial: f64 = rule.iter().map(|&(x, w)| w * bump(-1.0 + half * (x + 1.0))).sum::<f64>() * half;
    (partial / total).clamp(0.0, 1.0)
}

/// Plateau cutoff: 1 on `|xi| <= 1/2`, 0 on `|xi| >= 1`, smooth in between.
pub fn psi<T: Real>(xi: T) -> T {
    let a = xi.abs().to_f64_lossy();
    T::c(if a <= 0.5 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        1.0 - smoothstep(2.0 * a - 1.0)
    })
}

/// FFT engine bound to one `ModeGrid`.
#[derive(Clone)]
pub struct Spectral<T: Real> {
    grid: ModeGrid<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for Spectral<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl<T: Real> Spectral<T> {
    pub fn new(grid: ModeGrid<T>) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.grid_points());
        let inverse = planner.plan_fft_inverse(grid.grid_points());
        Self { grid, forward, inverse }
    }

    pub fn grid(&self) -> &ModeGrid<T> {
        &self.grid
    }

    pub fn points(&self) -> usize {
        self.grid.grid_points()
    }

    /// Wavenumber carried by slot `j` of a spectrum in standard FFT order.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let g = self.points();
        if j <= g / 2 {
            j as i64
        } else {
            j as i64 - g as i64
        }
    }

    fn slot(&self, k: i64) -> usize {
        k.rem_euclid(self.points() as i64) as usize
    }

    /// Grid values `g(x_j) = sum_k a_k e_k(x_j)`.
    pub fn fft_inverse(&self, field: &FourierField<T>) -> Result<Vec<Complex<T>>> {
        if field.n_modes() != self.grid.n_modes() {
            return Err(Error::SizeMismatch { expected: self.grid.len(), got: field.coeffs().len() });
        }
        let mut buf = vec![Complex::new(T::zero(), T::zero()); self.points()];
        for (k, c) in field.modes().zip(field.coeffs()) {
            buf[self.slot(k)] = *c;
        }
        self.inverse.process(&mut buf);
        Ok(buf)
    }

    /// Fourier coefficients `|k| <= N_modes` of grid values.
    pub fn fft_forward(&self, values: &[Complex<T>]) -> Result<FourierField<T>> {
        let spectrum = self.spectrum(values)?;
        Ok(FourierField::from_fn(self.grid.n_modes(), |k| spectrum[self.slot(k)]))
    }

    /// Full normalized spectrum (standard FFT order) of grid values.
    pub fn spectrum(&self, values: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if values.len() != self.points() {
            return Err(Error::SizeMismatch { expected: self.points(), got: values.len() });
        }
        let mut buf = values.to_vec();
        self.forward.process(&mut buf);
        let scale = T::one() / T::from_count(self.points());
        buf.iter_mut().for_each(|c| *c = *c * scale);
        Ok(buf)
    }

    /// Grid values of a full spectrum in standard FFT order.
    pub fn synthesize(&self, mut spectrum: Vec<Complex<T>>) -> Vec<Complex<T>> {
        self.inverse.process(&mut spectrum);
        spectrum
    }

    /// Convolution `w * g` on the grid, for `kernel[j] = w_hat(wavenumber(j))`.
    pub fn convolve(&self, values: &[Complex<T>], kernel: &[T]) -> Result<Vec<Complex<T>>> {
        let mut spectrum = self.spectrum(values)?;
        for (c, &w) in spectrum.iter_mut().zip(kernel) {
            *c = *c * w;
        }
        Ok(self.synthesize(spectrum))
    }

    /// Convolution of a real grid function.
    pub fn convolve_real(&self, values: &[T], kernel: &[T]) -> Result<Vec<T>> {
        let lifted: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        Ok(self.convolve(&lifted, kernel)?.into_iter().map(|c| c.re).collect())
    }

    /// Exact integral over the torus of a trigonometric polynomial of degree `< G`.
    pub fn integrate(&self, values: &[T]) -> T {
        pairwise_sum(values) / T::from_count(self.points())
    }
}
