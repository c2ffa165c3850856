//! Truncated multi-mode Fock space: basis enumeration and ladder operators.
//!
//! The Hilbert space carries a per-mode photon cutoff and an independent
//! total-occupancy cutoff. The basis is the lexicographically ordered list of
//! admissible occupation vectors (site 0 most significant), so indices are
//! reproducible across runs and platforms. Matrix elements whose target state
//! falls outside the basis are dropped (projector truncation); truncation
//! artifacts at the cutoff boundary are expected and handled by the cutoff
//! convergence protocol, not locally.

use crate::sparse::SparseOperator;
use crate::{Complex64, Error, Result};
use std::collections::HashMap;

/// Default guard against accidental huge bases.
pub const DEFAULT_MAX_BASIS_DIM: usize = 200_000;

/// Dual photon-number cutoffs: per mode and total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TruncationSpec {
    /// Maximum photon occupancy per cavity.
    pub n_max_per_mode: u32,
    /// Maximum total photon occupancy across the array.
    pub n_max_total: u32,
}

impl TruncationSpec {
    pub fn new(n_max_per_mode: u32, n_max_total: u32) -> Self {
        Self { n_max_per_mode, n_max_total }
    }

    pub fn admits(&self, occ: &[u32]) -> bool {
        occ.iter().all(|&n| n <= self.n_max_per_mode)
            && occ.iter().sum::<u32>() <= self.n_max_total
    }
}

/// Cavity array topology: number of sites and hopping bonds.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LatticeSpec {
    pub n_sites: usize,
    /// Unordered site pairs, stored with smaller index first.
    pub edges: Vec<(usize, usize)>,
}

impl LatticeSpec {
    pub fn new(n_sites: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidSpec("lattice must have at least one site".into()));
        }
        let mut norm: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidSpec(format!("self-loop at site {a}")));
            }
            if a >= n_sites || b >= n_sites {
                return Err(Error::InvalidSpec(format!(
                    "edge ({a}, {b}) outside 0..{n_sites}"
                )));
            }
            let e = (a.min(b), a.max(b));
            if norm.contains(&e) {
                return Err(Error::InvalidSpec(format!("duplicate edge ({}, {})", e.0, e.1)));
            }
            norm.push(e);
        }
        Ok(Self { n_sites, edges: norm })
    }

    /// Single pair of coupled cavities.
    pub fn pair() -> Self {
        Self { n_sites: 2, edges: vec![(0, 1)] }
    }

    /// Three mutually coupled cavities.
    pub fn triangle() -> Self {
        Self { n_sites: 3, edges: vec![(0, 1), (0, 2), (1, 2)] }
    }

    /// Default topology: isolated site, pair, triangle, or a ring for larger N.
    pub fn default_for(n_sites: usize) -> Result<Self> {
        match n_sites {
            0 => Err(Error::InvalidSpec("lattice must have at least one site".into())),
            1 => Self::new(1, vec![]),
            2 => Ok(Self::pair()),
            3 => Ok(Self::triangle()),
            n => Self::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect()),
        }
    }
}

/// Ordered enumeration of admissible occupation vectors.
#[derive(Debug, Clone)]
pub struct FockBasis {
    pub lattice: LatticeSpec,
    pub trunc: TruncationSpec,
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl FockBasis {
    /// Enumerate the basis in lexicographic order (site 0 most significant).
    pub fn enumerate(lattice: LatticeSpec, trunc: TruncationSpec) -> Result<Self> {
        Self::enumerate_with_limit(lattice, trunc, DEFAULT_MAX_BASIS_DIM)
    }

    pub fn enumerate_with_limit(
        lattice: LatticeSpec,
        trunc: TruncationSpec,
        max_dim: usize,
    ) -> Result<Self> {
        let n = lattice.n_sites;
        let mut states = Vec::new();
        let mut occ = vec![0u32; n];
        loop {
            states.push(occ.clone());
            if states.len() > max_dim {
                return Err(Error::ResourceLimit(format!(
                    "basis dimension exceeds configured maximum {max_dim}"
                )));
            }
            // lexicographic successor under both cutoffs
            let mut site = n;
            let mut total: u32 = occ.iter().sum();
            loop {
                if site == 0 {
                    break;
                }
                let s = site - 1;
                if occ[s] < trunc.n_max_per_mode && total < trunc.n_max_total {
                    occ[s] += 1;
                    break;
                }
                total -= occ[s];
                occ[s] = 0;
                site -= 1;
            }
            if site == 0 {
                break;
            }
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Self { lattice, trunc, states, index })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn n_sites(&self) -> usize {
        self.lattice.n_sites
    }

    pub fn states(&self) -> &[Vec<u32>] {
        &self.states
    }

    pub fn state(&self, idx: usize) -> &[u32] {
        &self.states[idx]
    }

    pub fn index_of(&self, occ: &[u32]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites() {
            return Err(Error::IndexOutOfRange(format!(
                "site {site} outside 0..{}",
                self.n_sites()
            )));
        }
        Ok(())
    }

    /// Photon destruction operator at `site`: <m|a|n> = sqrt(n_site) where m
    /// is n with one photon removed at `site`.
    pub fn annihilation(&self, site: usize) -> Result<SparseOperator> {
        self.check_site(site)?;
        let mut triplets = Vec::new();
        let mut target = Vec::new();
        for (col, occ) in self.states.iter().enumerate() {
            let n = occ[site];
            if n == 0 {
                continue;
            }
            target.clear();
            target.extend_from_slice(occ);
            target[site] = n - 1;
            // one photon removed never leaves the basis
            let row = self.index[&target];
            triplets.push((row, col, Complex64::new((n as f64).sqrt(), 0.0)));
        }
        SparseOperator::from_triplets(self.dim(), self.dim(), triplets)
    }

    /// Adjoint of [`annihilation`](Self::annihilation); transitions leaving
    /// the truncated basis are dropped.
    pub fn creation(&self, site: usize) -> Result<SparseOperator> {
        Ok(self.annihilation(site)?.adjoint())
    }

    /// Diagonal occupation-number operator at `site`.
    pub fn number(&self, site: usize) -> Result<SparseOperator> {
        self.check_site(site)?;
        let diag: Vec<Complex64> = self
            .states
            .iter()
            .map(|occ| Complex64::new(occ[site] as f64, 0.0))
            .collect();
        Ok(SparseOperator::diagonal(&diag))
    }

    /// Whether `other` enumerates a superset of this basis (both cutoffs no
    /// smaller, same lattice). Used for warm-start injection across cutoffs.
    pub fn is_refined_by(&self, other: &FockBasis) -> bool {
        self.lattice == other.lattice
            && other.trunc.n_max_per_mode >= self.trunc.n_max_per_mode
            && other.trunc.n_max_total >= self.trunc.n_max_total
    }
}
