//! Steady-state observables: correlations, entropy, fidelity, negativity,
//! coherent-mixture reference states and the induced coherence under a
//! one-photon drive.
//!
//! Everything here is a pure function of a [`DensityMatrix`]; inputs are
//! never modified.

use crate::hilbert::FockBasis;
use crate::sparse::SparseOperator;
use crate::{Complex64, Error, Result};
use faer::{Mat, Side};
use std::sync::Arc;

type C = Complex64;

/// Eigenvalues below this are treated as exactly zero in entropy sums and
/// matrix square roots.
pub const EIGENVALUE_CLAMP: f64 = 1e-14;
/// Eigenvalues more negative than this indicate a genuinely non-positive
/// matrix (truncation failure), not roundoff.
pub const NEGATIVE_EIGENVALUE_LIMIT: f64 = -1e-8;

/// Dense Hermitian unit-trace matrix on a Fock basis.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub basis: Arc<FockBasis>,
    pub mat: Mat<C>,
}

impl DensityMatrix {
    pub fn new(basis: Arc<FockBasis>, mat: Mat<C>) -> Result<Self> {
        if mat.nrows() != basis.dim() || mat.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, basis dimension {}",
                mat.nrows(),
                mat.ncols(),
                basis.dim()
            )));
        }
        Ok(Self { basis, mat })
    }

    /// |vac><vac|.
    pub fn vacuum(basis: Arc<FockBasis>) -> Self {
        let d = basis.dim();
        let mut mat = Mat::<C>::zeros(d, d);
        let vac = basis.index_of(&vec![0; basis.n_sites()]).expect("vacuum always present");
        mat[(vac, vac)] = C::new(1.0, 0.0);
        Self { basis, mat }
    }

    /// Identity / D.
    pub fn maximally_mixed(basis: Arc<FockBasis>) -> Self {
        let d = basis.dim();
        let mut mat = Mat::<C>::zeros(d, d);
        let w = C::new(1.0 / d as f64, 0.0);
        for i in 0..d {
            mat[(i, i)] = w;
        }
        Self { basis, mat }
    }

    /// |psi><psi| from a normalized state vector.
    pub fn from_pure(basis: Arc<FockBasis>, psi: &[C]) -> Result<Self> {
        if psi.len() != basis.dim() {
            return Err(Error::DimensionMismatch("state vector length".into()));
        }
        let d = basis.dim();
        let mut mat = Mat::<C>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                mat[(i, j)] = psi[i] * psi[j].conj();
            }
        }
        Ok(Self { basis, mat })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn trace(&self) -> C {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm_l2()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in 0..=i {
                dev = dev.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// (rho + rho^dag)/2, then trace normalization.
    pub fn hermitized_normalized(&self) -> Result<Self> {
        let d = self.dim();
        let mut mat = Mat::<C>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                mat[(i, j)] = 0.5 * (self.mat[(i, j)] + self.mat[(j, i)].conj());
            }
        }
        let tr: C = (0..d).map(|i| mat[(i, i)]).sum();
        if tr.norm() < 1e-300 {
            return Err(Error::SingularSystem("zero-trace density matrix".into()));
        }
        let inv = C::new(1.0, 0.0) / tr;
        for i in 0..d {
            for j in 0..d {
                mat[(i, j)] *= inv;
            }
        }
        Ok(Self { basis: self.basis.clone(), mat })
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch("trace distance".into()));
        }
        let diff = &self.mat - &other.mat;
        let evals = hermitian_eigenvalues(&diff)?;
        Ok(0.5 * evals.iter().map(|l| l.abs()).sum::<f64>())
    }

    /// Smallest eigenvalue (positivity diagnostic; never clamped here).
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let evals = hermitian_eigenvalues(&self.mat)?;
        Ok(evals.iter().copied().fold(f64::INFINITY, f64::min))
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub(crate) fn hermitian_eigenvalues(m: &Mat<C>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::SingularSystem(format!("eigenvalue computation failed: {e:?}")))
}

/// Full Hermitian eigendecomposition: (eigenvalues ascending, eigenvectors).
pub(crate) fn hermitian_eigen(m: &Mat<C>) -> Result<(Vec<f64>, Mat<C>)> {
    let e = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::SingularSystem(format!("eigendecomposition failed: {e:?}")))?;
    let vals: Vec<f64> = e.S().column_vector().iter().map(|x| x.re).collect();
    Ok((vals, e.U().to_owned()))
}

/// Tr(rho op).
pub fn expectation(rho: &DensityMatrix, op: &SparseOperator) -> Result<C> {
    if op.nrows() != rho.dim() || op.ncols() != rho.dim() {
        return Err(Error::DimensionMismatch("expectation".into()));
    }
    let mut acc = C::new(0.0, 0.0);
    for (r, c, v) in op.iter() {
        acc += rho.mat[(c, r)] * v;
    }
    Ok(acc)
}

/// First-order coherence g1 = Tr(rho adag_a a_b) / Tr(rho adag_a a_a).
pub fn g1_correlation(rho: &DensityMatrix, site_a: usize, site_b: usize) -> Result<C> {
    if site_a == site_b {
        return Err(Error::InvalidSpec("g1 requires distinct sites".into()));
    }
    let basis = &rho.basis;
    let a_a = basis.annihilation(site_a)?;
    let a_b = basis.annihilation(site_b)?;
    let num_op = a_a.adjoint().matmul(&a_b)?;
    let den_op = a_a.adjoint().matmul(&a_a)?;
    let den = expectation(rho, &den_op)?;
    if den.norm() < 1e-14 {
        return Err(Error::UndefinedObservable(
            "g1 undefined: vanishing occupancy at the reference site".into(),
        ));
    }
    Ok(expectation(rho, &num_op)? / den)
}

/// Von Neumann entropy in nats, with eigenvalue clamp at
/// [`EIGENVALUE_CLAMP`]; eigenvalues below [`NEGATIVE_EIGENVALUE_LIMIT`]
/// raise an error.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let evals = hermitian_eigenvalues(&rho.mat)?;
    let mut s = 0.0;
    for &l in &evals {
        if l < NEGATIVE_EIGENVALUE_LIMIT {
            return Err(Error::NotPositive(l));
        }
        if l > EIGENVALUE_CLAMP {
            s -= l * l.ln();
        }
    }
    Ok(s)
}

/// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2 via Hermitian
/// eigendecompositions, eigenvalues clamped at zero for the roots.
pub fn fidelity(rho_a: &DensityMatrix, rho_b: &DensityMatrix) -> Result<f64> {
    if rho_a.dim() != rho_b.dim() {
        return Err(Error::DimensionMismatch("fidelity".into()));
    }
    for r in [rho_a, rho_b] {
        let dev = r.hermiticity_deviation();
        if dev > 1e-8 {
            return Err(Error::NotHermitian(dev));
        }
    }
    let sqrt_a = hermitian_sqrt(&rho_a.mat)?;
    let inner = &sqrt_a * &rho_b.mat * &sqrt_a;
    let evals = hermitian_eigenvalues(&inner)?;
    let tr: f64 = evals.iter().map(|&l| l.max(0.0).sqrt()).sum();
    Ok(tr * tr)
}

fn hermitian_sqrt(m: &Mat<C>) -> Result<Mat<C>> {
    let (vals, u) = hermitian_eigen(m)?;
    let d = m.nrows();
    let mut scaled = u.clone();
    for (j, &l) in vals.iter().enumerate() {
        let s = C::new(l.max(0.0).sqrt(), 0.0);
        for i in 0..d {
            scaled[(i, j)] *= s;
        }
    }
    Ok(&scaled * &u.adjoint())
}

/// Normalized truncated tensor product of coherent states, plus the
/// pre-normalization weight retained inside the truncated basis.
pub fn coherent_product_state(basis: &FockBasis, amplitudes: &[C]) -> Result<(Vec<C>, f64)> {
    if amplitudes.len() != basis.n_sites() {
        return Err(Error::DimensionMismatch("one amplitude per site".into()));
    }
    // per-site coefficients e^{-|a|^2/2} a^n / sqrt(n!)
    let n_max = basis.trunc.n_max_per_mode as usize;
    let coeffs: Vec<Vec<C>> = amplitudes
        .iter()
        .map(|&alpha| {
            let norm = (-0.5 * alpha.norm_sqr()).exp();
            let mut v = Vec::with_capacity(n_max + 1);
            let mut cur = C::new(norm, 0.0);
            v.push(cur);
            for n in 1..=n_max {
                cur *= alpha / C::new((n as f64).sqrt(), 0.0);
                v.push(cur);
            }
            v
        })
        .collect();
    let mut psi = Vec::with_capacity(basis.dim());
    let mut weight = 0.0;
    for occ in basis.states() {
        let mut amp = C::new(1.0, 0.0);
        for (site, &n) in occ.iter().enumerate() {
            amp *= coeffs[site][n as usize];
        }
        weight += amp.norm_sqr();
        psi.push(amp);
    }
    if weight < 1e-300 {
        return Err(Error::SingularSystem("coherent state fully truncated away".into()));
    }
    let s = C::new(1.0 / weight.sqrt(), 0.0);
    for a in &mut psi {
        *a *= s;
    }
    Ok((psi, weight))
}

/// Statistical mixture of coherent product states with per-site signs.
#[derive(Debug, Clone)]
pub struct CoherentMixture {
    pub alpha0: C,
    pub sign_patterns: Vec<Vec<i8>>,
    pub weights: Vec<f64>,
}

/// Antiferromagnetic reference mixtures: the two staggered patterns for two
/// sites, the six two-against-one patterns for the triangle.
pub fn build_ansatz(
    basis: &Arc<FockBasis>,
    alpha0: C,
    n_sites: usize,
) -> Result<(CoherentMixture, DensityMatrix)> {
    if basis.n_sites() != n_sites {
        return Err(Error::DimensionMismatch("ansatz site count".into()));
    }
    let patterns: Vec<Vec<i8>> = match n_sites {
        2 => vec![vec![1, -1], vec![-1, 1]],
        3 => vec![
            vec![1, 1, -1],
            vec![1, -1, 1],
            vec![-1, 1, 1],
            vec![-1, -1, 1],
            vec![-1, 1, -1],
            vec![1, -1, -1],
        ],
        n => {
            return Err(Error::InvalidSpec(format!(
                "no reference mixture defined for {n} sites"
            )))
        }
    };
    let w = 1.0 / patterns.len() as f64;
    let d = basis.dim();
    let mut mat = Mat::<C>::zeros(d, d);
    for pat in &patterns {
        let amps: Vec<C> = pat.iter().map(|&s| alpha0 * s as f64).collect();
        let (psi, _) = coherent_product_state(basis, &amps)?;
        for i in 0..d {
            for j in 0..d {
                mat[(i, j)] += C::new(w, 0.0) * psi[i] * psi[j].conj();
            }
        }
    }
    let mixture = CoherentMixture {
        alpha0,
        sign_patterns: patterns.clone(),
        weights: vec![w; patterns.len()],
    };
    Ok((mixture, DensityMatrix::new(basis.clone(), mat)?))
}

/// Local coherent amplitude alpha0 = sqrt(Tr(rho a_1^2)), principal branch
/// with Re >= 0, and Im <= 0 on the imaginary axis. The overall sign is
/// immaterial to the reference mixtures.
pub fn extract_alpha0(rho: &DensityMatrix) -> Result<C> {
    let a = rho.basis.annihilation(0)?;
    let a2 = a.matmul(&a)?;
    let val = expectation(rho, &a2)?;
    let mut root = val.sqrt();
    if root.re < 0.0 || (root.re == 0.0 && root.im > 0.0) {
        root = -root;
    }
    Ok(root)
}

/// Tr(rho a_1): the coherence induced by a one-photon drive.
pub fn induced_coherence(rho: &DensityMatrix) -> Result<C> {
    let a = rho.basis.annihilation(0)?;
    expectation(rho, &a)
}

/// Entanglement negativity with respect to `partition_site`: the state is
/// embedded into the full per-mode-cutoff product space (exact zero padding
/// of components excluded by the total cutoff), the site's indices are
/// transposed, and the negative eigenvalues summed.
pub fn negativity(rho: &DensityMatrix, partition_site: usize) -> Result<f64> {
    negativity_with_budget(rho, partition_site, 1 << 32)
}

pub fn negativity_with_budget(
    rho: &DensityMatrix,
    partition_site: usize,
    max_embedded_elems: usize,
) -> Result<f64> {
    let basis = &rho.basis;
    let n = basis.n_sites();
    if partition_site >= n {
        return Err(Error::IndexOutOfRange(format!("partition site {partition_site}")));
    }
    let per = basis.trunc.n_max_per_mode as usize + 1;
    let full_dim = per.checked_pow(n as u32).ok_or_else(|| {
        Error::ResourceLimit("embedded product space dimension overflows".into())
    })?;
    if full_dim * full_dim > max_embedded_elems {
        return Err(Error::ResourceLimit(format!(
            "embedded space of dimension {full_dim} exceeds memory budget"
        )));
    }
    // flat index in the product space, site 0 most significant
    let flat = |occ: &[u32]| -> usize {
        occ.iter().fold(0usize, |acc, &x| acc * per + x as usize)
    };
    let d = basis.dim();
    let mut pt = Mat::<C>::zeros(full_dim, full_dim);
    let mut row_occ = vec![0u32; n];
    let mut col_occ = vec![0u32; n];
    for i in 0..d {
        for j in 0..d {
            let v = rho.mat[(i, j)];
            if v == C::new(0.0, 0.0) {
                continue;
            }
            row_occ.copy_from_slice(basis.state(i));
            col_occ.copy_from_slice(basis.state(j));
            // partial transpose: swap the partitioned site's bra/ket indices
            let tmp = row_occ[partition_site];
            row_occ[partition_site] = col_occ[partition_site];
            col_occ[partition_site] = tmp;
            pt[(flat(&row_occ), flat(&col_occ))] = v;
        }
    }
    let evals = hermitian_eigenvalues(&pt)?;
    Ok(evals.iter().filter(|&&l| l < 0.0).map(|l| -l).sum())
}

/// Per-site mean occupancies.
pub fn mean_occupancies(rho: &DensityMatrix) -> Result<Vec<f64>> {
    (0..rho.basis.n_sites())
        .map(|s| Ok(expectation(rho, &rho.basis.number(s)?)?.re))
        .collect()
}

/// One sweep point's outputs.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ObservableRecord {
    pub axis_value: f64,
    pub g_over_gamma: f64,
    pub f_over_gamma: C,
    pub mean_occupancy: Vec<f64>,
    /// None when undefined (vacuum denominator).
    pub g1: Option<C>,
    pub entropy: f64,
    pub negativity: f64,
    pub fidelity_ansatz: f64,
    pub alpha0: C,
    pub induced_coherence: C,
    pub residual: f64,
    pub status: String,
}
