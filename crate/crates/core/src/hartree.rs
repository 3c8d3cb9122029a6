//! Quintic Hartree equation `i u_t + (Delta - kappa) u = -(1/3) N_1 - (2/3) N_2` and its
//! Galerkin truncation to `|k| <= N`, integrated pseudospectrally on an alias-free grid.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gibbs::{ClassicalModel, CutoffSpec, FieldFunctional};
use crate::interaction::{InteractionKind, InteractionSpec};
use crate::scalar::Real;
use crate::spectral::{modes, multiplier_symbol, Band, FourierField, ModeGrid, Spectral};
use crate::stats::{linear_fit, pairwise_sum, McEstimate};

type C<T> = Complex<T>;

/// Dealiased evaluation of the interaction energy and the Hartree nonlinearity.
#[derive(Debug, Clone)]
pub struct Galerkin<T: Real> {
    spectral: Spectral<T>,
    w: InteractionSpec<T>,
    kernel: Vec<T>,
    pointwise: Option<T>,
}

impl<T: Real> Galerkin<T> {
    pub fn new(grid: ModeGrid<T>, w: InteractionSpec<T>) -> Self {
        let spectral = Spectral::new(grid);
        let kernel = w.kernel_table(&spectral);
        let pointwise = match w.kind() {
            InteractionKind::Delta { c } => Some(*c),
            InteractionKind::Zero => Some(T::zero()),
            _ => None,
        };
        Self { spectral, w, kernel, pointwise }
    }

    pub fn spectral(&self) -> &Spectral<T> {
        &self.spectral
    }

    pub fn grid(&self) -> &ModeGrid<T> {
        self.spectral.grid()
    }

    pub fn interaction(&self) -> &InteractionSpec<T> {
        &self.w
    }

    pub fn is_free(&self) -> bool {
        self.pointwise == Some(T::zero())
    }

    /// `w * g` for a real grid function.
    pub fn convolve(&self, values: &[T]) -> Result<Vec<T>> {
        match self.pointwise {
            Some(c) => Ok(values.iter().map(|&v| c * v).collect()),
            None => self.spectral.convolve_real(values, &self.kernel),
        }
    }

    fn convolve_complex(&self, values: &[C<T>]) -> Result<Vec<C<T>>> {
        match self.pointwise {
            Some(c) => Ok(values.iter().map(|&v| v * c).collect()),
            None => self.spectral.convolve(values, &self.kernel),
        }
    }

    pub fn to_grid(&self, a: &FourierField<T>) -> Result<Vec<C<T>>> {
        self.spectral.fft_inverse(a)
    }

    /// `W = -(1/3) int (w * |u|^2)^2 |u|^2`.
    pub fn interaction_w(&self, a: &FourierField<T>) -> Result<T> {
        if self.is_free() {
            return Ok(T::zero());
        }
        let u = self.to_grid(a)?;
        let rho: Vec<T> = u.iter().map(|z| z.norm_sqr()).collect();
        let conv = self.convolve(&rho)?;
        let integrand: Vec<T> = conv.iter().zip(&rho).map(|(&c, &r)| c * c * r).collect();
        Ok(-self.spectral.integrate(&integrand) / T::c(3.0))
    }

    /// `V = (1/3)(w * |u|^2)^2 + (2/3) w * (|u|^2 (w * |u|^2))` on the grid.
    pub fn potential(&self, u: &[C<T>]) -> Result<Vec<T>> {
        let rho: Vec<T> = u.iter().map(|z| z.norm_sqr()).collect();
        let conv = self.convolve(&rho)?;
        let inner: Vec<T> = rho.iter().zip(&conv).map(|(&r, &c)| r * c).collect();
        let outer = self.convolve(&inner)?;
        let third = T::one() / T::c(3.0);
        Ok(conv.iter().zip(&outer).map(|(&c, &o)| third * c * c + (third + third) * o).collect())
    }

    /// `P_N (V u)`, which equals `-dW/d(conj a_k)`.
    pub fn potential_term(&self, a: &FourierField<T>) -> Result<FourierField<T>> {
        if self.is_free() {
            return Ok(FourierField::zeros(a.n_modes()));
        }
        let u = self.to_grid(a)?;
        let v = self.potential(&u)?;
        let vu: Vec<C<T>> = u.iter().zip(&v).map(|(&z, &p)| z * p).collect();
        self.spectral.fft_forward(&vu)
    }

    /// `N_1 = [w * (v1 conj v2)][w * (v3 conj v4)] v5`, projected to the band.
    pub fn n1(&self, v: [&FourierField<T>; 5]) -> Result<FourierField<T>> {
        let g = self.grid_all(v)?;
        let a = self.convolve_complex(&pair(&g[0], &g[1]))?;
        let b = self.convolve_complex(&pair(&g[2], &g[3]))?;
        let out: Vec<C<T>> = (0..g[4].len()).map(|j| a[j] * b[j] * g[4][j]).collect();
        self.spectral.fft_forward(&out)
    }

    /// `N_2 = (w * {v1 conj v2 [w * (v3 conj v4)]}) v5`, projected to the band.
    pub fn n2(&self, v: [&FourierField<T>; 5]) -> Result<FourierField<T>> {
        let g = self.grid_all(v)?;
        let inner = self.convolve_complex(&pair(&g[2], &g[3]))?;
        let prod: Vec<C<T>> = pair(&g[0], &g[1]).iter().zip(&inner).map(|(&x, &y)| x * y).collect();
        let outer = self.convolve_complex(&prod)?;
        let out: Vec<C<T>> = outer.iter().zip(&g[4]).map(|(&x, &y)| x * y).collect();
        self.spectral.fft_forward(&out)
    }

    /// `-(1/3) N_1 - (2/3) N_2`.
    pub fn nonlinearity(&self, v: [&FourierField<T>; 5]) -> Result<FourierField<T>> {
        let n1 = self.n1(v)?;
        let n2 = self.n2(v)?;
        let third = T::one() / T::c(3.0);
        let coeffs = n1.coeffs().iter().zip(n2.coeffs()).map(|(&x, &y)| -(x * third) - y * (third + third)).collect();
        FourierField::from_coeffs(coeffs)
    }

    fn grid_all(&self, v: [&FourierField<T>; 5]) -> Result<Vec<Vec<C<T>>>> {
        v.iter().map(|f| self.to_grid(f)).collect()
    }
}

fn pair<T: Real>(x: &[C<T>], y: &[C<T>]) -> Vec<C<T>> {
    x.iter().zip(y).map(|(&a, &b)| a * b.conj()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Exact linear half steps around an implicit-midpoint step of the projected
    /// nonlinear subflow. Conserves the mass exactly and is time reversible.
    StrangSplit,
    /// Classical RK4 on the Galerkin system.
    Rk4Galerkin,
    /// Exact linear half steps around the pointwise phase `exp(i dt V)` followed by
    /// projection. Not mass conserving; kept for comparison.
    PhaseSplit,
}

impl std::str::FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strang_split" | "strang" => Ok(Self::StrangSplit),
            "rk4_galerkin" | "rk4" => Ok(Self::Rk4Galerkin),
            "phase_split" => Ok(Self::PhaseSplit),
            other => Err(Error::Config(format!(
                "unknown integrator {other:?} (expected strang_split, rk4_galerkin or phase_split)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig<T> {
    pub n: usize,
    pub dt: T,
    pub t_final: T,
    pub integrator: Integrator,
    pub kappa: T,
}

impl<T: Real> FlowConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("flow needs N >= 1".into()));
        }
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= T::zero() && self.t_final.is_finite()) {
            return Err(Error::Config(format!("T must be nonnegative, got {}", self.t_final)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample<T> {
    pub t: T,
    pub mass: T,
    pub hamiltonian: T,
}

const MIDPOINT_MAX_ITER: usize = 200;

#[derive(Debug, Clone)]
pub struct HartreeFlow<T: Real> {
    cfg: FlowConfig<T>,
    galerkin: Galerkin<T>,
    lambda: Vec<T>,
}

impl<T: Real> HartreeFlow<T> {
    pub fn new(cfg: FlowConfig<T>, w: InteractionSpec<T>) -> Result<Self> {
        cfg.validate()?;
        let grid = ModeGrid::new(cfg.n, cfg.kappa)?;
        let lambda = grid.modes().map(|k| grid.eigenvalue(k)).collect();
        Ok(Self { cfg, galerkin: Galerkin::new(grid, w), lambda })
    }

    pub fn config(&self) -> &FlowConfig<T> {
        &self.cfg
    }

    pub fn galerkin(&self) -> &Galerkin<T> {
        &self.galerkin
    }

    fn check(&self, a: &FourierField<T>) -> Result<()> {
        if a.n_modes() != self.cfg.n {
            return Err(Error::SizeMismatch { expected: 2 * self.cfg.n + 1, got: a.coeffs().len() });
        }
        Ok(())
    }

    /// `H_N(a) = sum lambda_k |a_k|^2 + W_N(a)`.
    pub fn hamiltonian(&self, a: &FourierField<T>) -> Result<T> {
        self.check(a)?;
        let kinetic: Vec<T> = a.coeffs().iter().zip(&self.lambda).map(|(c, &l)| l * c.norm_sqr()).collect();
        Ok(crate::stats::pairwise_sum(&kinetic) + self.galerkin.interaction_w(a)?)
    }

    /// `da_k/dt = -i dH_N/d(conj a_k) = -i lambda_k a_k + i P_N(V u)_k`.
    pub fn galerkin_rhs(&self, a: &FourierField<T>) -> Result<FourierField<T>> {
        self.check(a)?;
        let v = self.galerkin.potential_term(a)?;
        let i = C::new(T::zero(), T::one());
        let coeffs = a.coeffs().iter().zip(v.coeffs()).zip(&self.lambda).map(|((&x, &p), &l)| i * (p - x * l)).collect();
        FourierField::from_coeffs(coeffs)
    }

    fn nonlinear_rhs(&self, a: &FourierField<T>) -> Result<FourierField<T>> {
        let v = self.galerkin.potential_term(a)?;
        let i = C::new(T::zero(), T::one());
        FourierField::from_coeffs(v.coeffs().iter().map(|&p| i * p).collect())
    }

    fn linear(&self, a: &mut FourierField<T>, h: T) {
        for (c, &l) in a.coeffs_mut().iter_mut().zip(&self.lambda) {
            let phase = -l * h;
            *c = *c * C::new(phase.cos(), phase.sin());
        }
    }

    fn midpoint(&self, a: &FourierField<T>, h: T) -> Result<FourierField<T>> {
        if self.galerkin.is_free() {
            return Ok(a.clone());
        }
        let half = T::c(0.5);
        let advance = |mid: &FourierField<T>| -> Result<FourierField<T>> {
            let g = self.nonlinear_rhs(mid)?;
            FourierField::from_coeffs(a.coeffs().iter().zip(g.coeffs()).map(|(&x, &d)| x + d * h).collect())
        };
        let mut b = advance(a)?;
        let scale = a.max_abs().max(T::min_positive_value());
        let floor = T::c(8.0) * T::epsilon() * scale;
        let mut prev = T::infinity();
        for _ in 0..MIDPOINT_MAX_ITER {
            let mid = FourierField::from_coeffs(a.coeffs().iter().zip(b.coeffs()).map(|(&x, &y)| (x + y) * half).collect())?;
            let next = advance(&mid)?;
            let diff = next.coeffs().iter().zip(b.coeffs()).fold(T::zero(), |m, (x, y)| m.max((*x - *y).norm()));
            b = next;
            if !diff.is_finite() {
                break;
            }
            if diff <= floor || (diff >= prev && diff <= T::c(1e3) * floor) {
                return Ok(b);
            }
            prev = diff;
        }
        Err(Error::Numerical("implicit midpoint iteration did not converge; reduce dt".into()))
    }

    /// One step of size `h` (negative `h` integrates backwards).
    pub fn step_by(&self, a: &FourierField<T>, h: T) -> Result<FourierField<T>> {
        self.check(a)?;
        let half = h * T::c(0.5);
        match self.cfg.integrator {
            Integrator::StrangSplit => {
                let mut x = a.clone();
                self.linear(&mut x, half);
                let mut y = self.midpoint(&x, h)?;
                self.linear(&mut y, half);
                Ok(y)
            }
            Integrator::PhaseSplit => {
                let mut x = a.clone();
                self.linear(&mut x, half);
                if !self.galerkin.is_free() {
                    let u = self.galerkin.to_grid(&x)?;
                    let v = self.galerkin.potential(&u)?;
                    let rotated: Vec<C<T>> = u.iter().zip(&v).map(|(&z, &p)| z * C::new((p * h).cos(), (p * h).sin())).collect();
                    x = self.galerkin.spectral().fft_forward(&rotated)?;
                }
                self.linear(&mut x, half);
                Ok(x)
            }
            Integrator::Rk4Galerkin => {
                let axpy = |x: &FourierField<T>, d: &FourierField<T>, s: T| {
                    FourierField::from_coeffs(x.coeffs().iter().zip(d.coeffs()).map(|(&p, &q)| p + q * s).collect())
                };
                let k1 = self.galerkin_rhs(a)?;
                let k2 = self.galerkin_rhs(&axpy(a, &k1, half)?)?;
                let k3 = self.galerkin_rhs(&axpy(a, &k2, half)?)?;
                let k4 = self.galerkin_rhs(&axpy(a, &k3, h)?)?;
                let sixth = h / T::c(6.0);
                let two = T::c(2.0);
                FourierField::from_coeffs(
                    (0..a.coeffs().len())
                        .map(|j| {
                            a.coeffs()[j] + (k1.coeffs()[j] + k2.coeffs()[j] * two + k3.coeffs()[j] * two + k4.coeffs()[j]) * sixth
                        })
                        .collect(),
                )
            }
        }
    }

    pub fn step(&self, a: &FourierField<T>) -> Result<FourierField<T>> {
        self.step_by(a, self.cfg.dt)
    }

    /// Number of equal steps used to reach time `t`.
    pub fn steps_to(&self, t: T) -> usize {
        (t.abs() / self.cfg.dt).round().to_usize().unwrap_or(0).max(usize::from(t != T::zero()))
    }

    /// Evolves to time `t` with `steps_to(t)` equal steps.
    pub fn evolve(&self, a: &FourierField<T>, t: T) -> Result<FourierField<T>> {
        let n = self.steps_to(t);
        if n == 0 {
            return Ok(a.clone());
        }
        let h = t / T::from_count(n);
        let mut x = a.clone();
        for s in 0..n {
            x = self.step_by(&x, h).map_err(|e| failure(h * T::from_count(s), e))?;
            if !x.is_finite() {
                return Err(failure(h * T::from_count(s + 1), Error::Numerical("non-finite state".into())));
            }
        }
        Ok(x)
    }

    /// Integrates to `T`, visiting the state after every step (and at `t = 0`).
    pub fn for_each_step(&self, a: &FourierField<T>, mut visit: impl FnMut(T, &FourierField<T>) -> Result<()>) -> Result<FourierField<T>> {
        let n = self.steps_to(self.cfg.t_final);
        let h = if n == 0 { T::zero() } else { self.cfg.t_final / T::from_count(n) };
        let mut x = a.clone();
        visit(T::zero(), &x)?;
        for s in 0..n {
            x = self.step_by(&x, h).map_err(|e| failure(h * T::from_count(s), e))?;
            let t = h * T::from_count(s + 1);
            if !x.is_finite() {
                return Err(failure(t, Error::Numerical("non-finite state".into())));
            }
            visit(t, &x)?;
        }
        Ok(x)
    }

    /// Mass and energy every `every` steps up to `T`.
    pub fn trajectory(&self, a: &FourierField<T>, every: usize) -> Result<Vec<FlowSample<T>>> {
        let every = every.max(1);
        let mut out = Vec::new();
        let mut count = 0usize;
        let n = self.steps_to(self.cfg.t_final);
        self.for_each_step(a, |t, x| {
            if count % every == 0 || count == n {
                out.push(FlowSample { t, mass: x.mass(), hamiltonian: self.hamiltonian(x)? });
            }
            count += 1;
            Ok(())
        })?;
        Ok(out)
    }
}

fn failure<T: Real>(t: T, e: Error) -> Error {
    match e {
        Error::StepFailure { .. } => e,
        other => Error::StepFailure { time: t.to_f64_lossy(), reason: other.to_string() },
    }
}

/// Observable means at `t = 0` and `t = T` under the truncated Gibbs measure.
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceRow<T> {
    pub name: String,
    pub start: McEstimate<T>,
    pub end: McEstimate<T>,
    pub combined_se: T,
    pub z_score: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport<T> {
    pub rows: Vec<InvarianceRow<T>>,
    pub n_samples: usize,
    pub t_final: T,
}

impl<T: Real> InvarianceReport<T> {
    pub fn passes(&self, n_se: T) -> bool {
        self.rows.iter().all(|r| r.z_score <= n_se)
    }
}

/// Samples the measure `e^{-H_N} f(mass)` by reweighting free-field samples, evolves every
/// sample to `T` and compares the reweighted means of each functional.
pub fn gibbs_invariance_test<T: Real>(
    flow: &HartreeFlow<T>,
    cutoff: CutoffSpec<T>,
    n_samples: usize,
    seed: u64,
    observables: &[FieldFunctional<T>],
) -> Result<InvarianceReport<T>> {
    let model = ClassicalModel::new(*flow.galerkin().grid(), flow.galerkin().interaction().clone(), cutoff, seed);
    let t_final = flow.config().t_final;
    let rows = model.map_samples(n_samples, |s| {
        let end = if s.weight == T::zero() { s.field.clone() } else { flow.evolve(&s.field, t_final)? };
        let at = |x: &FourierField<T>| observables.iter().map(|o| o.eval(x) * s.weight).collect::<Vec<T>>();
        Ok((at(&s.field), at(&end), s.weight))
    })?;
    let weights: Vec<T> = rows.iter().map(|r| r.2).collect();
    let mut out = Vec::with_capacity(observables.len());
    for (j, o) in observables.iter().enumerate() {
        let start_num: Vec<T> = rows.iter().map(|r| r.0[j]).collect();
        let end_num: Vec<T> = rows.iter().map(|r| r.1[j]).collect();
        let start = McEstimate::ratio(&start_num, &weights, seed)?;
        let end = McEstimate::ratio(&end_num, &weights, seed)?;
        let combined_se = (start.std_error * start.std_error + end.std_error * end.std_error).sqrt();
        let diff = (start.mean - end.mean).abs();
        let z_score = if combined_se > T::zero() { diff / combined_se } else if diff == T::zero() { T::zero() } else { T::infinity() };
        out.push(InvarianceRow { name: o.name(), start, end, combined_se, z_score });
    }
    Ok(InvarianceReport { rows: out, n_samples, t_final })
}

/// Initial datum `a(k) = amplitude (1 + |k|)^{-s - 1/2}`, in `H^sigma` exactly for `sigma < s`.
pub fn power_law_datum<T: Real>(n: usize, s: T, amplitude: T) -> FourierField<T> {
    FourierField::from_fn(n, |k| {
        Complex::new(amplitude * (T::one() + T::c(k.abs() as f64)).powf(-s - T::c(0.5)), T::zero())
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxRow<T> {
    pub n: usize,
    pub error: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxStudy<T> {
    pub rows: Vec<ApproxRow<T>>,
    pub n_ref: usize,
    /// Least-squares slope of `log error` against `log N`.
    pub fitted_exponent: T,
    /// `s1 - s`, the decay of a pure tail truncation.
    pub tail_exponent: T,
}

/// `sup_{t <= T} ||u - u^N||_{H^{s1}}` for the truncated flows of `P_N u0`, against the
/// flow at `n_ref` as reference.
#[allow(clippy::too_many_arguments)]
pub fn approximation_study<T: Real>(
    w: &InteractionSpec<T>,
    base: FlowConfig<T>,
    s: T,
    s1: T,
    amplitude: T,
    n_list: &[usize],
    n_ref: usize,
) -> Result<ApproxStudy<T>> {
    if let Some(&bad) = n_list.iter().find(|&&n| n == 0 || n > n_ref) {
        return Err(Error::Config(format!("approximation band N = {bad} must lie in 1..={n_ref}")));
    }
    let u0 = power_law_datum(n_ref, s, amplitude);
    let reference = HartreeFlow::new(FlowConfig { n: n_ref, ..base }, w.clone())?;
    let mut path = Vec::new();
    reference.for_each_step(&u0, |_, x| {
        path.push(x.clone());
        Ok(())
    })?;
    let rows = n_list
        .par_iter()
        .map(|&n| {
            let flow = HartreeFlow::new(FlowConfig { n, ..base }, w.clone())?;
            let mut sup = T::zero();
            let mut step = 0usize;
            flow.for_each_step(&u0.resized(n), |_, x| {
                let err = x.resized(n_ref).sub(&path[step]).sobolev_norm(s1);
                sup = sup.max(err);
                step += 1;
                Ok(())
            })?;
            Ok(ApproxRow { n, error: sup })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit: Vec<(T, T)> = rows.iter().filter(|r| r.error > T::zero()).map(|r| (T::from_count(r.n).ln(), r.error.ln())).collect();
    let fitted_exponent = if fit.len() >= 2 {
        let (x, y): (Vec<T>, Vec<T>) = fit.into_iter().unzip();
        linear_fit(&x, &y).0
    } else {
        T::nan()
    };
    Ok(ApproxStudy { rows, n_ref, fitted_exponent, tail_exponent: s1 - s })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonRow<T> {
    pub eps: T,
    pub sup_error: T,
    /// `w_hat^eps(k)` for `k = 0, 1, 2, 3`.
    pub w_hat: [T; 4],
}

/// `sup_{t <= T} ||u^eps - u||_{H^s}` where `u^eps` uses the mollified potential and `u`
/// the delta potential of the same mass `c`.
pub fn epsilon_flow_study<T: Real>(u0: &FourierField<T>, c: T, eps_list: &[T], s: T, cfg: FlowConfig<T>) -> Result<Vec<EpsilonRow<T>>> {
    let reference = HartreeFlow::new(cfg, InteractionSpec::delta(c))?;
    let mut path = Vec::new();
    reference.for_each_step(u0, |_, x| {
        path.push(x.clone());
        Ok(())
    })?;
    eps_list
        .par_iter()
        .map(|&eps| {
            let w = InteractionSpec::mollified(c, eps)?;
            let w_hat = [0, 1, 2, 3].map(|k| w.fourier(k));
            let flow = HartreeFlow::new(cfg, w)?;
            let mut sup = T::zero();
            let mut step = 0usize;
            flow.for_each_step(u0, |_, x| {
                sup = sup.max(x.sub(&path[step]).sobolev_norm(s));
                step += 1;
                Ok(())
            })?;
            Ok(EpsilonRow { eps, sup_error: sup, w_hat })
        })
        .collect()
}

/// `sum_{|k| <= k_max} |(R_N^+ w)^(k)|`, an l1 proxy for `||R_N^+ w||`.
pub fn rn_plus_proxy<T: Real>(w: &InteractionSpec<T>, n: usize, k_max: usize) -> T {
    let terms: Vec<T> = modes(k_max)
        .map(|k| (multiplier_symbol::<T>(k, n, Band::High) * w.fourier(k)).abs())
        .collect();
    pairwise_sum(&terms)
}
