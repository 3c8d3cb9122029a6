//! Classical Gibbs state `e^{-W} f(N) dmu / z` by importance reweighting of free-field samples.

use nalgebra::DMatrix;
use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::free_field::FieldSampler;
use crate::hartree::{Galerkin, HartreeFlow};
use crate::interaction::InteractionSpec;
use crate::observable::{tuple_of, Observable};
use crate::scalar::Real;
use crate::spectral::{psi, FourierField, ModeGrid};
use crate::stats::{pairwise_sum, ComplexEstimate, McEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffKind {
    /// Indicator of `s <= K`.
    Sharp,
    /// 1 on `s <= K/2`, 0 on `s >= K`, smooth bump interpolation in between.
    Smooth,
}

impl std::str::FromStr for CutoffKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sharp" => Ok(Self::Sharp),
            "smooth" => Ok(Self::Smooth),
            other => Err(Error::Config(format!("unknown cutoff kind {other:?} (expected sharp or smooth)"))),
        }
    }
}

/// Mass cutoff `f`. A sharp cutoff with `K = inf` is `f = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec<T> {
    pub kind: CutoffKind,
    pub k: T,
}

impl<T: Real> CutoffSpec<T> {
    pub fn new(kind: CutoffKind, k: T) -> Result<Self> {
        if !(k > T::zero()) || k.is_nan() {
            return Err(Error::Config(format!("cutoff K must be positive, got {k}")));
        }
        if kind == CutoffKind::Smooth && k.is_infinite() {
            return Err(Error::Config("smooth cutoff needs a finite K".into()));
        }
        Ok(Self { kind, k })
    }

    pub fn sharp(k: T) -> Result<Self> {
        Self::new(CutoffKind::Sharp, k)
    }

    pub fn smooth(k: T) -> Result<Self> {
        Self::new(CutoffKind::Smooth, k)
    }

    /// `f = 1`.
    pub fn none() -> Self {
        Self { kind: CutoffKind::Sharp, k: T::infinity() }
    }

    pub fn is_trivial(&self) -> bool {
        self.kind == CutoffKind::Sharp && self.k.is_infinite()
    }

    pub fn eval(&self, s: T) -> T {
        match self.kind {
            CutoffKind::Sharp => if s <= self.k { T::one() } else { T::zero() },
            CutoffKind::Smooth => psi(s / self.k),
        }
    }
}

pub fn cutoff_f<T: Real>(s: T, spec: &CutoffSpec<T>) -> T {
    spec.eval(s)
}

/// Free-field samples reweighted by `e^{-W} f(N)`.
#[derive(Debug, Clone)]
pub struct ClassicalModel<T: Real> {
    galerkin: Galerkin<T>,
    sampler: FieldSampler<T>,
    cutoff: CutoffSpec<T>,
}

/// One reweighted sample.
#[derive(Debug, Clone)]
pub struct WeightedSample<T: Real> {
    pub index: u64,
    pub field: FourierField<T>,
    pub mass: T,
    pub interaction: T,
    pub weight: T,
}

impl<T: Real> ClassicalModel<T> {
    pub fn new(grid: ModeGrid<T>, w: InteractionSpec<T>, cutoff: CutoffSpec<T>, seed: u64) -> Self {
        Self { galerkin: Galerkin::new(grid, w), sampler: FieldSampler::new(grid, seed), cutoff }
    }

    pub fn grid(&self) -> &ModeGrid<T> {
        self.galerkin.grid()
    }

    pub fn galerkin(&self) -> &Galerkin<T> {
        &self.galerkin
    }

    pub fn sampler(&self) -> &FieldSampler<T> {
        &self.sampler
    }

    pub fn cutoff(&self) -> &CutoffSpec<T> {
        &self.cutoff
    }

    pub fn seed(&self) -> u64 {
        self.sampler.seed()
    }

    pub fn interaction_w(&self, field: &FourierField<T>) -> Result<T> {
        self.galerkin.interaction_w(field)
    }

    /// Sample `index` with its Gibbs weight `e^{-W} f(N)`.
    pub fn weighted(&self, index: u64) -> Result<WeightedSample<T>> {
        let field = self.sampler.sample(index);
        let mass = field.mass();
        let f = self.cutoff.eval(mass);
        let interaction = if f == T::zero() { T::zero() } else { self.interaction_w(&field)? };
        let weight = if f == T::zero() { T::zero() } else { (-interaction).exp() * f };
        if !weight.is_finite() {
            return Err(Error::Numerical(format!(
                "weight e^(-W) f(N) overflows on sample {index}: N = {mass}, W = {interaction}; lower K"
            )));
        }
        Ok(WeightedSample { index, field, mass, interaction, weight })
    }

    /// Evaluates `eval` on samples `0..n` in parallel; results come back in index order.
    pub fn map_samples<R: Send>(&self, n: usize, eval: impl Fn(WeightedSample<T>) -> Result<R> + Sync) -> Result<Vec<R>> {
        (0..n as u64).into_par_iter().map(|i| eval(self.weighted(i)?)).collect()
    }

    /// `z = E_mu[e^{-W} f(N)]`.
    pub fn mc_partition_z(&self, n: usize) -> Result<McEstimate<T>> {
        let w = self.map_samples(n, |s| Ok(s.weight))?;
        McEstimate::from_samples(&w, self.seed())
    }

    /// `rho(X)` as a self-normalized ratio over shared samples.
    pub fn mc_state_rho(&self, x: impl Fn(&FourierField<T>) -> T + Sync, n: usize) -> Result<McEstimate<T>> {
        let pairs = self.map_samples(n, |s| Ok((if s.weight == T::zero() { T::zero() } else { s.weight * x(&s.field) }, s.weight)))?;
        let (num, den): (Vec<T>, Vec<T>) = pairs.into_iter().unzip();
        McEstimate::ratio(&num, &den, self.seed())
    }

    pub fn mc_state_rho_complex(&self, x: impl Fn(&FourierField<T>) -> Complex<T> + Sync, n: usize) -> Result<ComplexEstimate<T>> {
        let pairs = self.map_samples(n, |s| Ok((x(&s.field) * s.weight, s.weight)))?;
        let (num, den): (Vec<Complex<T>>, Vec<T>) = pairs.into_iter().unzip();
        ComplexEstimate::ratio(&num, &den, self.seed())
    }

    /// Fourier kernel of `gamma_p`: entry `(k, k')` is `rho(conj phi_{k'_1} ... phi_{k_1} ...)`.
    pub fn mc_correlation_gamma(&self, p: usize, n: usize) -> Result<CorrelationEstimate<T>> {
        if p == 0 || p > 2 {
            return Err(Error::Config(format!("full correlation matrices support p = 1, 2; got p = {p}")));
        }
        let band = self.grid().n_modes();
        let dim = (2 * band + 1).pow(p as u32);
        let tuples: Vec<Vec<i64>> = (0..dim).map(|i| tuple_of(i, p, band)).collect();
        let products = |field: &FourierField<T>| -> Vec<Complex<T>> {
            tuples
                .iter()
                .map(|t| t.iter().fold(Complex::new(T::one(), T::zero()), |acc, &k| acc * field.get(k)))
                .collect()
        };
        let entry = |prod: &[Complex<T>], r: usize, c: usize| prod[r] * prod[c].conj();
        let sums = self.map_samples(n, |s| Ok((products(&s.field), s.weight)))?;
        let weights: Vec<T> = sums.iter().map(|s| s.1).collect();
        let z = pairwise_sum(&weights);
        if !(z > T::zero()) {
            return Err(Error::Statistics("all weights vanish".into()));
        }
        let mut mean = DMatrix::from_element(dim, dim, Complex::new(T::zero(), T::zero()));
        let mut se = DMatrix::from_element(dim, dim, T::zero());
        let nn = T::from_count(n);
        let ybar = z / nn;
        for r in 0..dim {
            for c in 0..dim {
                let vals: Vec<Complex<T>> = sums.iter().map(|(prod, w)| entry(prod, r, c) * *w).collect();
                let m = Complex::new(pairwise_sum(&vals.iter().map(|v| v.re).collect::<Vec<_>>()), pairwise_sum(&vals.iter().map(|v| v.im).collect::<Vec<_>>())) / z;
                let resid: Vec<T> = sums.iter().map(|(prod, w)| (entry(prod, r, c) * *w - m * *w).norm_sqr()).collect();
                mean[(r, c)] = m;
                se[(r, c)] = if n > 1 { (pairwise_sum(&resid) / T::from_count(n - 1) / nn).sqrt() / ybar } else { T::zero() };
            }
        }
        Ok(CorrelationEstimate { p, band, mean, std_error: se, n_samples: n, seed: self.seed() })
    }

    /// `a_m = ((-1)^m / m!) E_mu[Theta(xi) W^m f(N)]`; with `untruncated` the cutoff is
    /// replaced by 1, giving `b_m`.
    pub fn classical_duhamel(&self, m: usize, obs: &Observable<T>, n: usize, untruncated: bool) -> Result<ComplexEstimate<T>> {
        let sign = if m % 2 == 0 { T::one() } else { -T::one() };
        let scale = sign / factorial::<T>(m);
        let vals = (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let field = self.sampler.sample(i);
                let f = if untruncated { T::one() } else { self.cutoff.eval(field.mass()) };
                if f == T::zero() {
                    return Ok(Complex::new(T::zero(), T::zero()));
                }
                let w = self.interaction_w(&field)?;
                Ok(obs.classical_value(&field) * (w.powi(m as i32) * f * scale))
            })
            .collect::<Result<Vec<_>>>()?;
        let re: Vec<T> = vals.iter().map(|v| v.re).collect();
        let im: Vec<T> = vals.iter().map(|v| v.im).collect();
        Ok(ComplexEstimate { re: McEstimate::from_samples(&re, self.seed())?, im: McEstimate::from_samples(&im, self.seed())? })
    }

    /// `int dP_Gibbs(u) prod_j X_j(S_{t_j} u)` with the Galerkin flow at the model's band.
    pub fn time_correlation(
        &self,
        flow: &HartreeFlow<T>,
        factors: &[(FieldFunctional<T>, T)],
        t_max: T,
        n: usize,
    ) -> Result<TimeCorrelation<T>> {
        if flow.config().n != self.grid().n_modes() {
            return Err(Error::Config(format!(
                "flow band N = {} differs from the sampled band {}",
                flow.config().n,
                self.grid().n_modes()
            )));
        }
        if let Some((_, t)) = factors.iter().find(|(_, t)| t.abs() > t_max) {
            return Err(Error::Config(format!("time {t} exceeds T_max = {t_max}")));
        }
        let outcomes = self.map_samples(n, |s| {
            if s.weight == T::zero() {
                return Ok(Some((T::zero(), T::zero())));
            }
            let mut prod = T::one();
            for (x, t) in factors {
                match flow.evolve(&s.field, *t) {
                    Ok(state) => prod = prod * x.eval(&state),
                    Err(Error::StepFailure { .. }) | Err(Error::Numerical(_)) => return Ok(None),
                    Err(e) => return Err(e),
                }
            }
            Ok(Some((prod * s.weight, s.weight)))
        })?;
        let rejected = outcomes.iter().filter(|o| o.is_none()).count();
        if rejected * 100 > n {
            return Err(Error::Numerical(format!("{rejected} of {n} trajectories failed (more than 1%)")));
        }
        let (num, den): (Vec<T>, Vec<T>) = outcomes.into_iter().flatten().unzip();
        Ok(TimeCorrelation { estimate: McEstimate::ratio(&num, &den, self.seed())?, rejected })
    }
}

/// Picks the largest `K` on a geometric ladder below `k_start` whose empirical 99th
/// percentile of `e^{-W} f(N)` stays below `limit`.
pub fn choose_default_k<T: Real>(
    grid: ModeGrid<T>,
    w: &InteractionSpec<T>,
    kind: CutoffKind,
    seed: u64,
    pilot: usize,
    limit: T,
) -> Result<T> {
    let base = ClassicalModel::new(grid, w.clone(), CutoffSpec::none(), seed);
    let pilot_samples = base.map_samples(pilot, |s| Ok((s.mass, base.interaction_w(&s.field)?)))?;
    let mean_mass = pairwise_sum(&pilot_samples.iter().map(|s| s.0).collect::<Vec<_>>()) / T::from_count(pilot.max(1));
    let mut k = T::c(4.0) * mean_mass;
    for _ in 0..64 {
        let spec = CutoffSpec::new(kind, k)?;
        let mut weights: Vec<T> = pilot_samples.iter().map(|&(m, w)| (-w).exp() * spec.eval(m)).collect();
        weights.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Greater));
        let q = weights[((weights.len() * 99) / 100).min(weights.len() - 1)];
        if q.is_finite() && q < limit {
            return Ok(k);
        }
        k = k * T::c(0.8);
    }
    Err(Error::Config("no cutoff K keeps the 99th percentile weight below the limit".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEstimate<T: Real> {
    pub p: usize,
    pub band: usize,
    pub mean: DMatrix<Complex<T>>,
    pub std_error: DMatrix<T>,
    pub n_samples: usize,
    pub seed: u64,
}

impl<T: Real> CorrelationEstimate<T> {
    pub fn trace(&self) -> Complex<T> {
        self.mean.trace()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeCorrelation<T> {
    pub estimate: McEstimate<T>,
    pub rejected: usize,
}

/// Real functionals of a classical field.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldFunctional<T> {
    Mass,
    /// `Re a(k)`.
    ReMode(i64),
    /// `Re Theta(xi)`.
    Theta(Observable<T>),
}

impl<T: Real> FieldFunctional<T> {
    pub fn name(&self) -> String {
        match self {
            Self::Mass => "mass".into(),
            Self::ReMode(k) => format!("Re a({k})"),
            Self::Theta(o) if o.is_identity() => format!("Theta(1_{})", o.p()),
            Self::Theta(o) => match o.kernel() {
                crate::observable::ObservableKernel::Diagonal(d) if o.p() == 1 && d.iter().filter(|&&x| x != T::zero()).count() == 1 => {
                    let i = d.iter().position(|&x| x != T::zero()).unwrap_or(0);
                    format!("|a({})|^2", i as i64 - o.band() as i64)
                }
                _ => format!("Theta(xi_{})", o.p()),
            },
        }
    }

    pub fn eval(&self, field: &FourierField<T>) -> T {
        match self {
            Self::Mass => field.mass(),
            Self::ReMode(k) => field.get(*k).re,
            Self::Theta(o) => o.classical_value(field).re,
        }
    }
}

pub fn factorial<T: Real>(m: usize) -> T {
    (1..=m).fold(T::one(), |acc, j| acc * T::from_count(j))
}
