//! The free (`w = 0`) state on the truncated space `sum_k n_k <= n_max`, computed through
//! truncated products of per-mode generating polynomials instead of explicit sectors.

use crate::scalar::Real;
use crate::spectral::eigenvalue;
use crate::stats::pairwise_sum;

#[derive(Debug, Clone, PartialEq)]
pub struct FreeOccupations<T> {
    pub modes: Vec<i64>,
    /// `Tr e^{-H_{tau,0}}` on the truncated space.
    pub partition: T,
    /// `<n_k>` in the free state with `f = 1`.
    pub occupations: Vec<T>,
}

fn mul_truncated<T: Real>(a: &[T], b: &[T], n_max: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n_max + 1];
    for (i, &x) in a.iter().enumerate() {
        if x == T::zero() {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(n_max + 1 - i) {
            out[i + j] = out[i + j] + x * y;
        }
    }
    out
}

pub fn free_occupations<T: Real>(modes: &[i64], tau: T, kappa: T, n_max: usize) -> FreeOccupations<T> {
    let weights: Vec<Vec<T>> = modes
        .iter()
        .map(|&k| {
            let beta = eigenvalue(k, kappa) / tau;
            (0..=n_max).map(|j| (-beta * T::from_count(j)).exp()).collect()
        })
        .collect();
    let l = modes.len();
    // prefix[i] = prod_{j < i} P_j, suffix[i] = prod_{j >= i} P_j
    let mut unit = vec![T::zero(); n_max + 1];
    unit[0] = T::one();
    let mut prefix = vec![unit.clone()];
    for w in &weights {
        let next = mul_truncated(prefix.last().expect("nonempty"), w, n_max);
        prefix.push(next);
    }
    let mut suffix = vec![unit; l + 1];
    for i in (0..l).rev() {
        suffix[i] = mul_truncated(&suffix[i + 1], &weights[i], n_max);
    }
    let partition = pairwise_sum(&prefix[l]);
    let occupations = (0..l)
        .map(|i| {
            let moment: Vec<T> = weights[i].iter().enumerate().map(|(j, &x)| T::from_count(j) * x).collect();
            let rest = mul_truncated(&prefix[i], &suffix[i + 1], n_max);
            pairwise_sum(&mul_truncated(&moment, &rest, n_max)) / partition
        })
        .collect();
    FreeOccupations { modes: modes.to_vec(), partition, occupations }
}

/// `||gamma_hat_{tau,1} - gamma_hat_1||_F` for `w = 0`, `f = 1`: the diagonal `<n_k>/tau`
/// against `1/lambda_k`.
pub fn free_gamma1_gap<T: Real>(modes: &[i64], tau: T, kappa: T, n_max: usize) -> T {
    let occ = free_occupations(modes, tau, kappa, n_max);
    let squares: Vec<T> = modes
        .iter()
        .zip(&occ.occupations)
        .map(|(&k, &n)| {
            let d = n / tau - crate::spectral::green_classical(k, kappa);
            d * d
        })
        .collect();
    pairwise_sum(&squares).sqrt()
}
