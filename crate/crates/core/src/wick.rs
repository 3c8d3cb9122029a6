//! Wick pairings of the explicit series terms, their collapsed coloured graphs, and the
//! evaluation of the coefficients `b_{tau,m}` and `b_m` as constrained momentum sums.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gibbs::factorial;
use crate::interaction::InteractionSpec;
use crate::observable::{tuple_index, Observable, ObservableKernel};
use crate::quadrature::simplex_integrate_adaptive;
use crate::scalar::Real;
use crate::spectral::eigenvalue;
use crate::stats::pairwise_sum;

/// Largest pairing count enumerated by default, `(3 * 2 + 2)!`.
pub const DEFAULT_PAIRING_BUDGET: u128 = 40_320;
pub const DEFAULT_QUAD_NODES: usize = 8;
const QUAD_MAX_NODES: usize = 128;
const QUAD_TOL: f64 = 1e-12;
const QUAD_FLAG: f64 = 1e-6;

/// `(i, r, delta)`; derived ordering is lexicographic with `-1 < +1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vertex {
    pub i: usize,
    pub r: usize,
    pub delta: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexSet {
    m: usize,
    p: usize,
    vertices: Vec<Vertex>,
    minus: Vec<usize>,
    plus: Vec<usize>,
}

impl VertexSet {
    pub fn new(m: usize, p: usize) -> Self {
        let mut vertices = Vec::with_capacity(6 * m + 2 * p);
        for i in 1..=m + 1 {
            let arity = if i <= m { 3 } else { p };
            for r in 1..=arity {
                for delta in [-1i8, 1] {
                    vertices.push(Vertex { i, r, delta });
                }
            }
        }
        let minus = (0..vertices.len()).filter(|&v| vertices[v].delta < 0).collect();
        let plus = (0..vertices.len()).filter(|&v| vertices[v].delta > 0).collect();
        Self { m, p, vertices, minus, plus }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, index: usize) -> Vertex {
        self.vertices[index]
    }

    pub fn index_of(&self, v: Vertex) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    pub fn minus(&self) -> &[usize] {
        &self.minus
    }

    pub fn plus(&self) -> &[usize] {
        &self.plus
    }
}

/// Perfect matching with edges `(alpha, beta)`, `alpha < beta`, sorted by `alpha`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pairing {
    edges: Vec<(usize, usize)>,
}

impl Pairing {
    pub fn from_edges(mut edges: Vec<(usize, usize)>) -> Self {
        for e in &mut edges {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();
        Self { edges }
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Every vertex is covered exactly once.
    pub fn is_perfect(&self, set: &VertexSet) -> bool {
        let mut seen = vec![false; set.len()];
        for &(a, b) in &self.edges {
            for v in [a, b] {
                if v >= seen.len() || seen[v] {
                    return false;
                }
                seen[v] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// `delta_alpha delta_beta = -1` on every edge.
    pub fn charges_opposite(&self, set: &VertexSet) -> bool {
        self.edges.iter().all(|&(a, b)| set.vertex(a).delta * set.vertex(b).delta == -1)
    }

    /// Partner of every vertex.
    pub fn partners(&self, n: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n];
        for &(a, b) in &self.edges {
            out[a] = b;
            out[b] = a;
        }
        out
    }
}

/// `(3m + p)!`.
pub fn pairing_count(m: usize, p: usize) -> u128 {
    (1..=(3 * m + p) as u128).product()
}

/// All admissible pairings of `Sigma(m, p)`: bijections from the `-1` vertices onto the
/// `+1` vertices, in lexicographic order of the bijection.
pub fn enumerate_pairings(m: usize, p: usize, budget: u128) -> Result<Pairings> {
    let count = pairing_count(m, p);
    if count > budget {
        return Err(Error::Config(format!("(3m+p)! = {count} pairings for m = {m}, p = {p} exceed the enumeration budget {budget}")));
    }
    let set = VertexSet::new(m, p);
    let perm = (0..set.plus.len()).collect();
    Ok(Pairings { set, perm, done: false })
}

#[derive(Debug, Clone)]
pub struct Pairings {
    set: VertexSet,
    perm: Vec<usize>,
    done: bool,
}

impl Pairings {
    pub fn vertex_set(&self) -> &VertexSet {
        &self.set
    }
}

impl Iterator for Pairings {
    type Item = Pairing;

    fn next(&mut self) -> Option<Pairing> {
        if self.done {
            return None;
        }
        let edges = self.set.minus.iter().zip(&self.perm).map(|(&a, &j)| (a, self.set.plus[j])).collect();
        let pairing = Pairing::from_edges(edges);
        self.done = !next_permutation(&mut self.perm);
        Some(pairing)
    }
}

/// Advances to the next lexicographic permutation; `false` after the last one.
fn next_permutation(xs: &mut [usize]) -> bool {
    if xs.len() < 2 {
        return false;
    }
    let mut i = xs.len() - 1;
    while i > 0 && xs[i - 1] >= xs[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = xs.len() - 1;
    while xs[j] <= xs[i - 1] {
        j -= 1;
    }
    xs.swap(i - 1, j);
    xs[i..].reverse();
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColoredEdge {
    pub a: usize,
    pub b: usize,
    /// `delta_beta` of the underlying pair.
    pub color: i8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphPath {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    pub closed: bool,
}

/// Collapsed graph: classes of `Sigma` under `(i, r)` identification for `i <= m` (and
/// also for `i = m + 1` in the identity variant).
#[derive(Debug, Clone, PartialEq)]
pub struct ColoredGraph {
    /// Representative `(i, r, delta)` of each class; `delta = 0` marks a collapsed class.
    pub classes: Vec<Vertex>,
    pub in_v2: Vec<bool>,
    pub edges: Vec<ColoredEdge>,
    pub paths: Vec<GraphPath>,
}

impl ColoredGraph {
    /// Loops count twice.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.classes.len()];
        for e in &self.edges {
            deg[e.a] += 1;
            deg[e.b] += 1;
        }
        deg
    }

    /// `V_2` vertices have degree 2 and `V_1` vertices degree 1.
    pub fn degrees_consistent(&self) -> bool {
        self.degrees().iter().zip(&self.in_v2).all(|(&d, &two)| d == if two { 2 } else { 1 })
    }

    pub fn all_paths_closed(&self) -> bool {
        self.paths.iter().all(|p| p.closed)
    }
}

pub fn collapse(pairing: &Pairing, set: &VertexSet, identity_variant: bool) -> ColoredGraph {
    let m = set.m();
    let key = |v: Vertex| -> Vertex {
        if v.i <= m || identity_variant {
            Vertex { i: v.i, r: v.r, delta: 0 }
        } else {
            v
        }
    };
    let mut classes: Vec<Vertex> = Vec::new();
    let class_of: Vec<usize> = set
        .vertices()
        .iter()
        .map(|&v| {
            let k = key(v);
            match classes.iter().position(|&c| c == k) {
                Some(pos) => pos,
                None => {
                    classes.push(k);
                    classes.len() - 1
                }
            }
        })
        .collect();
    let in_v2 = classes.iter().map(|c| c.delta == 0).collect();
    let edges: Vec<ColoredEdge> = pairing
        .edges()
        .iter()
        .map(|&(a, b)| ColoredEdge { a: class_of[a], b: class_of[b], color: set.vertex(b).delta })
        .collect();
    // connected components by union-find
    let mut parent: Vec<usize> = (0..classes.len()).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in &edges {
        let (ra, rb) = (root(&mut parent, e.a), root(&mut parent, e.b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut paths: Vec<GraphPath> = Vec::new();
    let mut path_of_root = vec![usize::MAX; classes.len()];
    for c in 0..classes.len() {
        let r = root(&mut parent, c);
        if path_of_root[r] == usize::MAX {
            path_of_root[r] = paths.len();
            paths.push(GraphPath { vertices: Vec::new(), edges: Vec::new(), closed: true });
        }
        let path = &mut paths[path_of_root[r]];
        path.vertices.push(c);
        path.closed &= classes[c].delta == 0;
    }
    for (j, e) in edges.iter().enumerate() {
        let r = root(&mut parent, e.a);
        paths[path_of_root[r]].edges.push(j);
    }
    ColoredGraph { classes, in_v2, edges, paths }
}

/// Time-independent data of one pairing: edge layout and the admissible momentum
/// assignments with their `w_hat` and observable weights.
#[derive(Debug, Clone)]
pub struct PreparedPairing<T> {
    pub pairing: Pairing,
    /// Per edge: interaction index of each end (`m + 1` for the observable) and colour.
    edges: Vec<(usize, usize, i8)>,
    weights: Vec<T>,
    /// Edge momenta offset by `M`, `edges.len()` entries per assignment.
    momenta: Vec<u16>,
}

impl<T: Real> PreparedPairing<T> {
    pub fn assignments(&self) -> usize {
        self.weights.len()
    }
}

/// Momentum-space evaluator of the pairing integrals on the modes `|k| <= M`.
#[derive(Debug, Clone)]
pub struct WickEngine<T: Real> {
    modes_m: usize,
    kappa: T,
    w: InteractionSpec<T>,
    budget: u128,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BCoefficient<T> {
    pub m: usize,
    pub tau: T,
    pub value: T,
    pub nodes: usize,
    pub rel_shift: T,
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow<T> {
    pub m: usize,
    pub tau: T,
    pub b_tau: T,
    pub b_classical: T,
    pub abs_diff: T,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy<T> {
    pub rows: Vec<ConvergenceRow<T>>,
}

impl<T: Real> ConvergenceStudy<T> {
    /// `|b_{tau,m} - b_m|` strictly decreasing along the listed `tau` for this `m`.
    pub fn strictly_decreasing(&self, m: usize) -> bool {
        let diffs: Vec<T> = self.rows.iter().filter(|r| r.m == m).map(|r| r.abs_diff).collect();
        diffs.windows(2).all(|d| d[1] < d[0])
    }

    /// Smallest `C` with `|b_{tau,m}| <= (C p)^p C^m (m!)^2 ||w||^{2m}` on every row.
    pub fn envelope_constant(&self, p: usize, w_norm: T) -> T {
        self.rows.iter().fold(T::zero(), |acc, row| {
            let denom = T::from_count(p).powi(p as i32) * factorial::<T>(row.m).powi(2) * w_norm.powi(2 * row.m as i32);
            let exponent = (p + row.m) as i32;
            if exponent == 0 {
                return acc;
            }
            acc.max((row.b_tau.abs() / denom).powf(T::one() / T::c(exponent as f64)))
        })
    }
}

impl<T: Real> WickEngine<T> {
    pub fn new(modes_m: usize, kappa: T, w: InteractionSpec<T>) -> Result<Self> {
        if !(kappa > T::zero() && kappa.is_finite()) {
            return Err(Error::Config(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Self { modes_m, kappa, w, budget: DEFAULT_PAIRING_BUDGET })
    }

    pub fn with_budget(mut self, budget: u128) -> Self {
        self.budget = budget;
        self
    }

    pub fn modes_m(&self) -> usize {
        self.modes_m
    }

    /// Sup norm of `w` band-limited to the transfers `|q| <= 2M` that the modes can carry.
    pub fn w_sup_norm(&self) -> T {
        self.w.sup_norm_band(2 * self.modes_m)
    }

    fn observable_weight(obs: &Observable<T>, ks: &[i64]) -> T {
        match tuple_index(ks, obs.band()) {
            Some(idx) => obs.diagonal_weight(idx).unwrap_or_else(T::zero),
            None => T::zero(),
        }
    }

    fn check_observable(obs: Option<&Observable<T>>) -> Result<()> {
        if let Some(ObservableKernel::Matrix(_)) = obs.map(Observable::kernel) {
            return Err(Error::UnsupportedObservable(
                "graph evaluation needs the identity or a momentum-diagonal kernel".into(),
            ));
        }
        Ok(())
    }

    /// Enumerates the admissible momentum assignments of one pairing; `obs = None` is the
    /// `p = 0` case.
    pub fn prepare(&self, pairing: &Pairing, set: &VertexSet, obs: Option<&Observable<T>>) -> Result<PreparedPairing<T>> {
        Self::check_observable(obs)?;
        let p = obs.map_or(0, Observable::p);
        if p != set.p() {
            return Err(Error::Config(format!("observable has p = {p}, vertex set has p = {}", set.p())));
        }
        let m = set.m();
        let big_m = self.modes_m as i64;
        let n_edges = pairing.edges().len();
        let mut edge_of = vec![0usize; set.len()];
        for (e, &(a, b)) in pairing.edges().iter().enumerate() {
            edge_of[a] = e;
            edge_of[b] = e;
        }
        let vidx = |i: usize, r: usize, delta: i8| set.index_of(Vertex { i, r, delta }).expect("vertex exists");
        // constraints checked once their last edge is assigned
        let mut checks: Vec<Vec<Check>> = vec![Vec::new(); n_edges];
        for i in 1..=m {
            let ends: Vec<(usize, usize)> = (1..=3).map(|r| (edge_of[vidx(i, r, -1)], edge_of[vidx(i, r, 1)])).collect();
            let last = ends.iter().map(|&(a, b)| a.max(b)).max().expect("three legs");
            checks[last].push(Check::Interaction(ends));
        }
        if p > 0 {
            let ends: Vec<(usize, usize)> = (1..=set.p()).map(|r| (edge_of[vidx(m + 1, r, 1)], edge_of[vidx(m + 1, r, -1)])).collect();
            let last = ends.iter().map(|&(a, b)| a.max(b)).max().expect("p legs");
            checks[last].push(Check::Observable(ends));
        }
        let w_hat: Vec<T> = (0..=(4 * big_m) as usize).map(|q| self.w.fourier(q as i64)).collect();
        let what = |q: i64| w_hat[q.unsigned_abs() as usize];
        let mut weights = Vec::new();
        let mut momenta = Vec::new();
        let mut ks = vec![0i64; n_edges];
        assign(0, &mut ks, big_m, &mut |depth, ks| {
            let mut factor = T::one();
            for check in &checks[depth] {
                match check {
                    Check::Interaction(ends) => {
                        let q: Vec<i64> = ends.iter().map(|&(minus, plus)| ks[minus] - ks[plus]).collect();
                        if q.iter().sum::<i64>() != 0 {
                            return None;
                        }
                        factor = factor * what(q[1]) * what(q[2]);
                    }
                    Check::Observable(ends) => {
                        if ends.iter().any(|&(plus, minus)| ks[plus] != ks[minus]) {
                            return None;
                        }
                        let tuple: Vec<i64> = ends.iter().map(|&(plus, _)| ks[plus]).collect();
                        factor = factor * obs.map_or(T::one(), |o| Self::observable_weight(o, &tuple));
                    }
                }
                if factor == T::zero() {
                    return None;
                }
            }
            Some(factor)
        }, T::one(), &mut |weight, ks| {
            weights.push(weight);
            momenta.extend(ks.iter().map(|&k| (k + big_m) as u16));
        });
        let edges = pairing
            .edges()
            .iter()
            .map(|&(a, b)| (set.vertex(a).i, set.vertex(b).i, set.vertex(b).delta))
            .collect();
        Ok(PreparedPairing { pairing: pairing.clone(), edges, weights, momenta })
    }

    pub fn prepare_all(&self, m: usize, obs: Option<&Observable<T>>) -> Result<Vec<PreparedPairing<T>>> {
        Self::check_observable(obs)?;
        let pairings = enumerate_pairings(m, obs.map_or(0, Observable::p), self.budget)?;
        let set = pairings.vertex_set().clone();
        let all: Vec<Pairing> = pairings.collect();
        all.par_iter().map(|pi| self.prepare(pi, &set, obs)).collect()
    }

    /// Momentum table of `J_{tau,e}` for every edge at the times `t` (`t_{m+1} = 0`).
    fn kernel_tables(&self, prepared: &PreparedPairing<T>, t: &[T], tau: T) -> Vec<Vec<T>> {
        let time = |i: usize| if i <= t.len() { t[i - 1] } else { T::zero() };
        prepared
            .edges
            .iter()
            .map(|&(ia, ib, color)| {
                let delta = time(ia) - time(ib);
                (-(self.modes_m as i64)..=self.modes_m as i64)
                    .map(|k| {
                        let x = eigenvalue(k, self.kappa) / tau;
                        let green = T::one() / (tau * x.exp_m1());
                        if color < 0 {
                            (delta * x).exp() * green
                        } else {
                            let decay = (-delta * x).exp();
                            let smoothing = if ia != ib { decay / tau } else { T::zero() };
                            decay * green + smoothing
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn classical_tables(&self, prepared: &PreparedPairing<T>) -> Vec<Vec<T>> {
        let row: Vec<T> = (-(self.modes_m as i64)..=self.modes_m as i64).map(|k| T::one() / eigenvalue(k, self.kappa)).collect();
        vec![row; prepared.edges.len()]
    }

    fn contract(prepared: &PreparedPairing<T>, tables: &[Vec<T>]) -> T {
        let n_edges = prepared.edges.len();
        let terms: Vec<T> = prepared
            .weights
            .iter()
            .enumerate()
            .map(|(j, &w)| {
                let ks = &prepared.momenta[j * n_edges..(j + 1) * n_edges];
                ks.iter().zip(tables).fold(w, |acc, (&k, table)| acc * table[k as usize])
            })
            .collect();
        pairwise_sum(&terms)
    }

    /// `I_{tau,Pi}(t)` for one prepared pairing.
    pub fn evaluate_i_tau(&self, prepared: &PreparedPairing<T>, t: &[T], tau: T) -> T {
        Self::contract(prepared, &self.kernel_tables(prepared, t, tau))
    }

    /// `I_Pi` with the classical kernel `1 / lambda_k` on every edge.
    pub fn evaluate_i_classical(&self, prepared: &PreparedPairing<T>) -> T {
        Self::contract(prepared, &self.classical_tables(prepared))
    }

    /// `g_{tau,m}(t) = sum_Pi I_{tau,Pi}(t)`.
    pub fn integrand(&self, prepared: &[PreparedPairing<T>], t: &[T], tau: T) -> T {
        let values: Vec<T> = prepared.par_iter().map(|pp| self.evaluate_i_tau(pp, t, tau)).collect();
        pairwise_sum(&values)
    }

    /// `b_{tau,m} = 3^{-m} int_simplex g_{tau,m}`, doubling Gauss-Legendre nodes from 8.
    pub fn b_tau(&self, m: usize, obs: Option<&Observable<T>>, tau: T) -> Result<BCoefficient<T>> {
        if !(tau > T::zero() && tau.is_finite()) {
            return Err(Error::Domain(format!("tau must be positive and finite, got {tau}")));
        }
        let prepared = self.prepare_all(m, obs)?;
        let quad = simplex_integrate_adaptive(m, DEFAULT_QUAD_NODES, QUAD_MAX_NODES, T::c(QUAD_TOL), T::c(QUAD_FLAG), |t: &[T]| {
            self.integrand(&prepared, t, tau)
        });
        let scale = T::c(3.0).powi(m as i32);
        Ok(BCoefficient { m, tau, value: quad.value / scale, nodes: quad.nodes, rel_shift: quad.rel_shift, flagged: quad.flagged })
    }

    /// `b_m = (1 / (m! 3^m)) sum_Pi I_Pi`.
    pub fn b_classical(&self, m: usize, obs: Option<&Observable<T>>) -> Result<T> {
        let prepared = self.prepare_all(m, obs)?;
        let values: Vec<T> = prepared.par_iter().map(|pp| self.evaluate_i_classical(pp)).collect();
        Ok(pairwise_sum(&values) / (factorial::<T>(m) * T::c(3.0).powi(m as i32)))
    }

    pub fn tau_convergence_study(&self, m_list: &[usize], tau_list: &[T], obs: Option<&Observable<T>>) -> Result<ConvergenceStudy<T>> {
        let mut rows = Vec::new();
        for &m in m_list {
            let classical = self.b_classical(m, obs)?;
            for &tau in tau_list {
                let b = self.b_tau(m, obs, tau)?;
                rows.push(ConvergenceRow {
                    m,
                    tau,
                    b_tau: b.value,
                    b_classical: classical,
                    abs_diff: (b.value - classical).abs(),
                    flagged: b.flagged,
                });
            }
        }
        Ok(ConvergenceStudy { rows })
    }
}

#[derive(Debug, Clone)]
enum Check {
    /// `(edge at (i, r, -1), edge at (i, r, +1))` for `r = 1, 2, 3`.
    Interaction(Vec<(usize, usize)>),
    /// `(edge at (m+1, r, +1), edge at (m+1, r, -1))` for `r = 1..=p`.
    Observable(Vec<(usize, usize)>),
}

/// Backtracking over edge momenta; `check(depth, ks)` runs after edge `depth` is set and
/// returns the weight factor of the constraints completed there.
fn assign<T: Real>(
    depth: usize,
    ks: &mut Vec<i64>,
    big_m: i64,
    check: &mut impl FnMut(usize, &[i64]) -> Option<T>,
    weight: T,
    emit: &mut impl FnMut(T, &[i64]),
) {
    if depth == ks.len() {
        emit(weight, ks);
        return;
    }
    for k in -big_m..=big_m {
        ks[depth] = k;
        if let Some(f) = check(depth, &ks[..]) {
            assign(depth + 1, ks, big_m, check, weight * f, emit);
        }
    }
}
