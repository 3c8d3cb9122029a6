use std::collections::HashMap;

use crate::error::{Error, Result};

/// Occupation vectors `(n_k)` with `sum n_k = n`, in ascending lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct Sector {
    n: usize,
    states: Vec<Vec<u16>>,
    index: HashMap<Vec<u16>, usize>,
}

impl Sector {
    fn new(n: usize, n_modes: usize) -> Self {
        let mut states = Vec::new();
        let mut current = vec![0u16; n_modes];
        fill(&mut states, &mut current, 0, n);
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self { n, states, index }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, i: usize) -> &[u16] {
        &self.states[i]
    }

    pub fn states(&self) -> &[Vec<u16>] {
        &self.states
    }

    pub fn find(&self, occupation: &[u16]) -> Option<usize> {
        self.index.get(occupation).copied()
    }
}

fn fill(out: &mut Vec<Vec<u16>>, current: &mut [u16], slot: usize, remaining: usize) {
    if slot + 1 == current.len() {
        current[slot] = remaining as u16;
        out.push(current.to_vec());
        return;
    }
    for take in 0..=remaining {
        current[slot] = take as u16;
        fill(out, current, slot + 1, remaining - take);
    }
    current[slot] = 0;
}

/// Truncated bosonic Fock space over a list of momenta, sectors `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockBasis {
    modes: Vec<i64>,
    n_max: usize,
    sectors: Vec<Sector>,
}

impl FockBasis {
    /// Modes `-m..=m`.
    pub fn new(m: usize, n_max: usize) -> Self {
        Self::with_modes((-(m as i64)..=m as i64).collect(), n_max).expect("symmetric modes are valid")
    }

    pub fn with_modes(mut modes: Vec<i64>, n_max: usize) -> Result<Self> {
        modes.sort_unstable();
        modes.dedup();
        if modes.is_empty() {
            return Err(Error::Config("Fock basis needs at least one mode".into()));
        }
        if n_max > u16::MAX as usize {
            return Err(Error::Config(format!("n_max = {n_max} is too large")));
        }
        let sectors = (0..=n_max).map(|n| Sector::new(n, modes.len())).collect();
        Ok(Self { modes, n_max, sectors })
    }

    pub fn modes(&self) -> &[i64] {
        &self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn sector(&self, n: usize) -> &Sector {
        &self.sectors[n]
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn mode_index(&self, k: i64) -> Result<usize> {
        self.modes
            .binary_search(&k)
            .map_err(|_| Error::Config(format!("mode {k} is not among the basis modes {:?}", self.modes)))
    }

    pub fn dims(&self) -> Vec<usize> {
        self.sectors.iter().map(Sector::dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.dims().iter().sum()
    }

    /// Bytes needed to hold one dense real matrix per sector.
    pub fn dense_bytes(&self) -> usize {
        self.dims().iter().map(|d| d * d * 8).sum()
    }

    pub fn dimension_table(&self) -> String {
        self.dims().iter().enumerate().map(|(n, d)| format!("n={n}: {d}")).collect::<Vec<_>>().join(", ")
    }
}

/// Multiset coefficient `C(n + modes - 1, n)`.
pub fn sector_dimension(n: usize, modes: usize) -> usize {
    let mut r: u128 = 1;
    for j in 0..n {
        r = r * (modes + j) as u128 / (j + 1) as u128;
    }
    r as usize
}
