//! Gauss-Legendre rules and integration over the ordered time simplex
//! `1 > t_1 > ... > t_m > 0`.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::scalar::Real;

/// Nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(n).expect("a Gauss-Legendre rule needs at least one node");
    let mut pairs = GaussLegendre::new(n).as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    gauss_legendre(n).into_iter().map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect()
}

/// Tensor Gauss-Legendre with `n` nodes per axis on the ordered simplex, through the
/// collapsed map `t_1 = u_1`, `t_j = t_{j-1} u_j` (Jacobian `prod_j u_j^{m-j}`).
pub fn simplex_integrate<T: Real>(m: usize, n: usize, mut f: impl FnMut(&[T]) -> T) -> T {
    if m == 0 {
        return f(&[]);
    }
    let rule: Vec<(T, T)> = gauss_legendre_unit(n).into_iter().map(|(x, w)| (T::c(x), T::c(w))).collect();
    let mut idx = vec![0usize; m];
    let mut t = vec![T::zero(); m];
    let mut terms = Vec::with_capacity(n.pow(m as u32));
    loop {
        let mut weight = T::one();
        let mut prev = T::one();
        for j in 0..m {
            let (u, w) = rule[idx[j]];
            t[j] = prev * u;
            weight = weight * w * prev;
            prev = t[j];
        }
        terms.push(weight * f(&t));
        let mut axis = m;
        loop {
            if axis == 0 {
                return crate::stats::pairwise_sum(&terms);
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < n {
                break;
            }
            idx[axis] = 0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub nodes: usize,
    pub rel_shift: T,
    /// Set when the last doubling still moved the value by more than the flag threshold.
    pub flagged: bool,
}

/// Doubles the node count from `start` until the relative shift drops below `tol`
/// or `max_nodes` is reached; flags results whose final shift exceeds `flag_tol`.
pub fn simplex_integrate_adaptive<T: Real>(
    m: usize,
    start: usize,
    max_nodes: usize,
    tol: T,
    flag_tol: T,
    mut f: impl FnMut(&[T]) -> T,
) -> QuadResult<T> {
    let mut n = start.max(1);
    let mut value = simplex_integrate(m, n, &mut f);
    if m == 0 {
        return QuadResult { value, nodes: 0, rel_shift: T::zero(), flagged: false };
    }
    loop {
        let next_n = 2 * n;
        let next = simplex_integrate(m, next_n, &mut f);
        let scale = next.abs().max(T::min_positive_value());
        let rel_shift = (next - value).abs() / scale;
        n = next_n;
        value = next;
        if rel_shift <= tol || 2 * n > max_nodes {
            return QuadResult { value, nodes: n, rel_shift, flagged: rel_shift > flag_tol };
        }
    }
}
