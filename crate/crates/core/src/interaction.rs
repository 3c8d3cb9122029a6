//! Even real two-body potentials `w`, represented through their Fourier coefficients.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{bump, Spectral};

#[derive(Debug, Clone, PartialEq)]
pub enum InteractionKind<T> {
    /// `w = c delta`, so `w_hat = c`.
    Delta { c: T },
    /// `w = 0`.
    Zero,
    /// Periodized Gaussian of mass `c` and standard deviation `width`.
    Gaussian { c: T, width: T },
    /// Tent `(c / width) (1 - |x| / width)_+`, a Lipschitz but non-smooth potential.
    Tent { c: T, width: T },
    /// Mollifier `w^eps(x) = (1/eps) Phi(x / eps)`, `Phi = c bump / int bump`.
    Mollified { c: T, eps: T },
    /// Explicit coefficients `w_hat(0), w_hat(1), ...`; zero beyond the table.
    Table { coeffs: Vec<T> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionSpec<T> {
    kind: InteractionKind<T>,
}

impl<T: Real> InteractionSpec<T> {
    pub fn delta(c: T) -> Self {
        Self { kind: InteractionKind::Delta { c } }
    }

    pub fn zero() -> Self {
        Self { kind: InteractionKind::Zero }
    }

    pub fn gaussian(c: T, width: T) -> Result<Self> {
        positive("gaussian width", width)?;
        Ok(Self { kind: InteractionKind::Gaussian { c, width } })
    }

    pub fn tent(c: T, width: T) -> Result<Self> {
        positive("tent width", width)?;
        if width > T::c(0.5) {
            return Err(Error::Config(format!("tent width must be <= 1/2, got {width}")));
        }
        Ok(Self { kind: InteractionKind::Tent { c, width } })
    }

    pub fn mollified(c: T, eps: T) -> Result<Self> {
        positive("mollifier eps", eps)?;
        if eps > T::c(0.5) {
            return Err(Error::Config(format!("mollifier eps must be <= 1/2, got {eps}")));
        }
        Ok(Self { kind: InteractionKind::Mollified { c, eps } })
    }

    pub fn table(coeffs: Vec<T>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("interaction table must be non-empty and finite".into()));
        }
        Ok(Self { kind: InteractionKind::Table { coeffs } })
    }

    /// Parses rows `k value` (or bare values for `k = 0, 1, ...`); `#` starts a comment.
    /// Negative `k` rows must agree with their mirror image.
    pub fn from_table_text(text: &str) -> Result<Self> {
        let mut rows: Vec<(i64, f64)> = Vec::new();
        let mut implicit = 0i64;
        for (line_no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            let bad = || Error::Config(format!("interaction table line {}: cannot parse {line:?}", line_no + 1));
            let (k, v) = match fields.as_slice() {
                [v] => {
                    implicit += 1;
                    (implicit - 1, v.parse::<f64>().map_err(|_| bad())?)
                }
                [k, v] => (k.parse::<i64>().map_err(|_| bad())?, v.parse::<f64>().map_err(|_| bad())?),
                _ => return Err(bad()),
            };
            rows.push((k, v));
        }
        let kmax = rows.iter().map(|r| r.0.abs()).max().ok_or_else(|| Error::Config("empty interaction table".into()))?;
        let mut coeffs: Vec<Option<f64>> = vec![None; kmax as usize + 1];
        for &(k, v) in &rows {
            let slot = &mut coeffs[k.unsigned_abs() as usize];
            match slot {
                Some(prev) if *prev != v => {
                    return Err(Error::Config(format!("interaction table is not even: w_hat({k}) = {v} but w_hat({}) = {prev}", -k)))
                }
                _ => *slot = Some(v),
            }
        }
        let coeffs = coeffs
            .into_iter()
            .enumerate()
            .map(|(k, v)| v.map(T::c).ok_or_else(|| Error::Config(format!("interaction table misses k = {k}"))))
            .collect::<Result<Vec<T>>>()?;
        Self::table(coeffs)
    }

    pub fn kind(&self) -> &InteractionKind<T> {
        &self.kind
    }

    pub fn is_delta(&self) -> bool {
        matches!(self.kind, InteractionKind::Delta { .. })
    }

    /// `w_hat(k)`, real and even in `k`.
    pub fn fourier(&self, k: i64) -> T {
        let k = k.abs();
        match &self.kind {
            InteractionKind::Delta { c } => *c,
            InteractionKind::Zero => T::zero(),
            InteractionKind::Gaussian { c, width } => {
                let s = width.to_f64_lossy();
                *c * T::c((-2.0 * PI * PI * s * s * (k * k) as f64).exp())
            }
            InteractionKind::Tent { c, width } => {
                if k == 0 {
                    return *c;
                }
                let x = PI * k as f64 * width.to_f64_lossy();
                *c * T::c((x.sin() / x).powi(2))
            }
            InteractionKind::Mollified { c, eps } => *c * T::c(mollifier_profile(k as f64 * eps.to_f64_lossy())),
            InteractionKind::Table { coeffs } => coeffs.get(k as usize).copied().unwrap_or_else(T::zero),
        }
    }

    /// Coefficients on every slot of a spectral grid, in standard FFT order.
    pub fn kernel_table(&self, spectral: &Spectral<T>) -> Vec<T> {
        (0..spectral.points()).map(|j| self.fourier(spectral.wavenumber(j))).collect()
    }

    /// Grid maximum of `|P_K w|`, the sup norm of the band-limited potential
    /// `sum_{|k| <= K} w_hat(k) e_k` that the truncated dynamics actually sees.
    pub fn sup_norm_band(&self, band: usize) -> T {
        let points = 32 * (2 * band + 1);
        let coeffs: Vec<f64> = (0..=band as i64).map(|k| self.fourier(k).to_f64_lossy()).collect();
        let mut best = 0.0f64;
        for j in 0..points {
            let x = j as f64 / points as f64;
            let v = coeffs[0] + 2.0 * coeffs[1..].iter().enumerate().map(|(k, c)| c * (2.0 * PI * (k + 1) as f64 * x).cos()).sum::<f64>();
            best = best.max(v.abs());
        }
        T::c(best)
    }
}

fn positive<T: Real>(what: &str, x: T) -> Result<()> {
    if x > T::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be positive, got {x}")))
    }
}

const MOLLIFIER_NODES: usize = 1024;

fn mollifier_rule() -> &'static (Vec<(f64, f64)>, f64) {
    static RULE: OnceLock<(Vec<(f64, f64)>, f64)> = OnceLock::new();
    RULE.get_or_init(|| {
        let rule: Vec<(f64, f64)> =
            crate::quadrature::gauss_legendre(MOLLIFIER_NODES).into_iter().map(|(x, w)| (x, w * bump(x))).collect();
        let total = rule.iter().map(|r| r.1).sum();
        (rule, total)
    })
}

/// `int Phi(y) cos(2 pi xi y) dy / int Phi`, normalized with the same rule so the value
/// at `xi = 0` is exactly 1.
fn mollifier_profile(xi: f64) -> f64 {
    if xi == 0.0 {
        return 1.0;
    }
    let (rule, total) = mollifier_rule();
    rule.iter().map(|&(y, w)| w * (2.0 * PI * xi * y).cos()).sum::<f64>() / total
}
