//! Divided differences of `g(x) = exp(-x)`.
//!
//! For energies `E_0..E_m`, `int_{1 > t_1 > ... > t_m > 0} prod_j exp(-(t_j - t_{j+1}) E_j) dt`
//! (with `t_0 = 1`, `t_{m+1} = 0`) equals `(-1)^m g[E_0, ..., E_m]`.

use crate::scalar::Real;

/// Spread below which a cluster of points is treated as degenerate.
pub const DEGENERACY: f64 = 1e-8;
const TAYLOR_ORDER: usize = 8;

/// `g[x_0, ..., x_m]` for `g = exp(-x)`; symmetric in its arguments.
pub fn exp_neg_divided_difference<T: Real>(points: &[T]) -> T {
    assert!(!points.is_empty(), "divided difference of no points");
    let mut x = points.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = x.len();
    // table[len - 1][i] = g[x_i, ..., x_{i+len-1}]
    let mut prev: Vec<T> = x.iter().map(|&v| (-v).exp()).collect();
    for len in 2..=n {
        let mut next = Vec::with_capacity(n + 1 - len);
        for i in 0..=n - len {
            let lo = x[i];
            let hi = x[i + len - 1];
            let value = if hi - lo < T::c(DEGENERACY) {
                taylor(&x[i..i + len])
            } else if len == 2 {
                // exp(-lo) (exp(-(hi - lo)) - 1) / (hi - lo) without cancellation
                (-lo).exp() * (-(hi - lo)).exp_m1() / (hi - lo)
            } else {
                (prev[i + 1] - prev[i]) / (hi - lo)
            };
            next.push(value);
        }
        prev = next;
    }
    prev[0]
}

/// Expansion about the mean `c`: `sum_j g^{(m+j)}(c) / (m+j)! h_j(x - c)` with `h_j` the
/// complete homogeneous symmetric polynomials.
fn taylor<T: Real>(x: &[T]) -> T {
    let m = x.len() - 1;
    let c = x.iter().fold(T::zero(), |a, &b| a + b) / T::from_count(x.len());
    let d: Vec<T> = x.iter().map(|&v| v - c).collect();
    // h[j] over the variables seen so far, updated one variable at a time
    let mut h = vec![T::zero(); TAYLOR_ORDER + 1];
    h[0] = T::one();
    for &di in &d {
        for j in 1..=TAYLOR_ORDER {
            h[j] = h[j] + di * h[j - 1];
        }
    }
    let base = (-c).exp();
    let mut fact = (1..=m).fold(T::one(), |a, j| a * T::from_count(j));
    let mut sum = T::zero();
    for (j, hj) in h.iter().enumerate() {
        if j > 0 {
            fact = fact * T::from_count(m + j);
        }
        let sign = if (m + j) % 2 == 0 { T::one() } else { -T::one() };
        sum = sum + sign * *hj / fact;
    }
    base * sum
}

/// Ordered-simplex integral of `prod_j exp(-(t_j - t_{j+1}) E_j)`; strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexExp<T> {
    pub value: T,
    /// Set when the divided difference lost positivity and quadrature was used instead.
    pub fallback: bool,
}

pub fn simplex_exp_integral<T: Real>(energies: &[T]) -> SimplexExp<T> {
    let m = energies.len() - 1;
    let sign = if m % 2 == 0 { T::one() } else { -T::one() };
    let value = sign * exp_neg_divided_difference(energies);
    if value > T::zero() && value.is_finite() {
        return SimplexExp { value, fallback: false };
    }
    let lowest = energies.iter().fold(T::infinity(), |a, &b| a.min(b));
    if value == T::zero() && (-lowest).exp() == T::zero() {
        // the integrand itself underflows
        return SimplexExp { value, fallback: false };
    }
    SimplexExp { value: simplex_exp_quadrature(energies, 32), fallback: true }
}

/// Gauss-Legendre evaluation of the same simplex integral with `nodes` points per axis.
pub fn simplex_exp_quadrature<T: Real>(energies: &[T], nodes: usize) -> T {
    let m = energies.len() - 1;
    crate::quadrature::simplex_integrate(m, nodes, |t: &[T]| {
        let mut upper = T::one();
        let mut exponent = T::zero();
        for (j, &e) in energies.iter().enumerate() {
            let lower = if j < m { t[j] } else { T::zero() };
            exponent = exponent + (upper - lower) * e;
            upper = lower;
        }
        (-exponent).exp()
    })
}
