//! Hamiltonian and Lindblad generator of the driven-dissipative Kerr array.
//!
//! Per site: detuning, Kerr interaction, two-photon pump and an optional
//! one-photon drive; per bond one hopping term -J (a\dag_j a_j' + h.c.).
//! Dissipation is one-photon loss (rate gamma) and two-photon loss (rate
//! eta) on every site.
//!
//! Vectorization convention: column stacking, vec(rho)[col * D + row] =
//! rho[row, col], so vec(A rho B) = (B^T kron A) vec(rho). The assembled
//! superoperator matrix and the operator-algebra action [`Liouvillian::apply`]
//! are two independent routes to the same map; tests cross-check them.

use crate::hilbert::FockBasis;
use crate::sparse::SparseOperator;
use crate::{Complex64, Error, Result};
use faer::Mat;
use std::sync::Arc;

type C = Complex64;

const I: C = C::new(0.0, 1.0);

/// Default cap on assembled-superoperator nonzeros.
pub const DEFAULT_NNZ_BUDGET: usize = 400_000_000;

/// Physical rates and amplitudes of the model, in the rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelParams {
    /// Detuning between half the pump frequency and the cavity frequency.
    pub delta: f64,
    /// Kerr photon-photon interaction energy U.
    pub kerr_u: f64,
    /// Two-photon pump amplitude G.
    pub pump_g: C,
    /// Photon hopping amplitude J (negative for the antiferromagnetic regime).
    pub hop_j: f64,
    /// One-photon loss rate.
    pub loss_gamma: f64,
    /// Two-photon loss rate.
    pub loss_eta: f64,
    /// One-photon drive amplitude F.
    pub drive_f: C,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.delta,
            self.kerr_u,
            self.pump_g.re,
            self.pump_g.im,
            self.hop_j,
            self.loss_gamma,
            self.loss_eta,
            self.drive_f.re,
            self.drive_f.im,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("non-finite model parameter".into()));
        }
        if self.loss_gamma < 0.0 || self.loss_eta < 0.0 {
            return Err(Error::InvalidSpec("loss rates must be nonnegative".into()));
        }
        if self.loss_gamma == 0.0 && self.loss_eta == 0.0 {
            return Err(Error::InvalidSpec(
                "at least one loss rate must be positive for a unique steady state".into(),
            ));
        }
        Ok(())
    }
}

/// H = sum_j [ -Delta n_j + (U/2) adag_j^2 a_j^2 + (G/2) adag_j^2
///           + (G*/2) a_j^2 + F adag_j + F* a_j ]
///   - J sum_{bonds (j,j')} ( adag_j a_j' + adag_j' a_j ).
pub fn build_hamiltonian(basis: &FockBasis, params: &ModelParams) -> Result<SparseOperator> {
    params.validate()?;
    let d = basis.dim();
    let mut h = SparseOperator::zeros(d, d);
    for site in 0..basis.n_sites() {
        let a = basis.annihilation(site)?;
        let a2 = a.matmul(&a)?;
        let adag2 = a2.adjoint();
        // -Delta n + (U/2) n(n-1), both diagonal
        let diag: Vec<C> = basis
            .states()
            .iter()
            .map(|occ| {
                let n = occ[site] as f64;
                C::new(-params.delta * n + 0.5 * params.kerr_u * n * (n - 1.0), 0.0)
            })
            .collect();
        h = h.add(&SparseOperator::diagonal(&diag))?;
        h = h.add(&adag2.scale(params.pump_g * 0.5))?;
        h = h.add(&a2.scale(params.pump_g.conj() * 0.5))?;
        if params.drive_f != C::new(0.0, 0.0) {
            h = h.add(&a.adjoint().scale(params.drive_f))?;
            h = h.add(&a.scale(params.drive_f.conj()))?;
        }
    }
    let j = C::new(params.hop_j, 0.0);
    if params.hop_j != 0.0 {
        for &(s1, s2) in &basis.lattice.edges {
            let a1 = basis.annihilation(s1)?;
            let a2 = basis.annihilation(s2)?;
            let hop = a1.adjoint().matmul(&a2)?;
            h = h.add(&hop.scale(-j))?;
            h = h.add(&hop.adjoint().scale(-j.conj()))?;
        }
    }
    Ok(h)
}

/// Jump operators sqrt(gamma) a_j and sqrt(eta) a_j^2 (zero-rate channels
/// omitted).
pub fn build_dissipators(basis: &FockBasis, params: &ModelParams) -> Result<Vec<SparseOperator>> {
    params.validate()?;
    let mut jumps = Vec::new();
    if params.loss_gamma > 0.0 {
        let s = C::new(params.loss_gamma.sqrt(), 0.0);
        for site in 0..basis.n_sites() {
            jumps.push(basis.annihilation(site)?.scale(s));
        }
    }
    if params.loss_eta > 0.0 {
        let s = C::new(params.loss_eta.sqrt(), 0.0);
        for site in 0..basis.n_sites() {
            let a = basis.annihilation(site)?;
            jumps.push(a.matmul(&a)?.scale(s));
        }
    }
    Ok(jumps)
}

/// The Lindblad generator, kept in operator form for matrix-free action plus
/// an optional assembled superoperator matrix.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub basis: Arc<FockBasis>,
    pub params: ModelParams,
    hamiltonian: SparseOperator,
    jumps: Vec<SparseOperator>,
    /// K = sum_k Gamma_k^dag Gamma_k.
    k_sum: SparseOperator,
    matrix: Option<SparseOperator>,
}

impl Liouvillian {
    /// Build the operator-form generator without materializing the D^2 matrix.
    pub fn new(basis: Arc<FockBasis>, params: ModelParams) -> Result<Self> {
        let hamiltonian = build_hamiltonian(&basis, &params)?;
        let jumps = build_dissipators(&basis, &params)?;
        let d = basis.dim();
        let mut k_sum = SparseOperator::zeros(d, d);
        for g in &jumps {
            k_sum = k_sum.add(&g.adjoint().matmul(g)?)?;
        }
        Ok(Self { basis, params, hamiltonian, jumps, k_sum, matrix: None })
    }

    /// Build and materialize the superoperator matrix.
    pub fn assemble(basis: Arc<FockBasis>, params: ModelParams) -> Result<Self> {
        Self::assemble_with_budget(basis, params, DEFAULT_NNZ_BUDGET)
    }

    pub fn assemble_with_budget(
        basis: Arc<FockBasis>,
        params: ModelParams,
        nnz_budget: usize,
    ) -> Result<Self> {
        let mut liouv = Self::new(basis, params)?;
        liouv.materialize(nnz_budget)?;
        Ok(liouv)
    }

    /// Assemble the D^2 x D^2 matrix from Kronecker identities under column
    /// stacking. Independent of [`Self::apply`].
    pub fn materialize(&mut self, nnz_budget: usize) -> Result<()> {
        if self.matrix.is_some() {
            return Ok(());
        }
        let d = self.basis.dim();
        let eye = SparseOperator::identity(d);
        let h = &self.hamiltonian;
        // -i (I kron H - H^T kron I)
        let mut l = eye.kron(h).scale(-I).add(&h.transpose().kron(&eye).scale(I))?;
        for g in &self.jumps {
            // Gamma rho Gamma^dag -> conj(Gamma) kron Gamma
            l = l.add(&g.conjugate().kron(g))?;
        }
        // -1/2 {K, rho} -> -1/2 (I kron K + K^T kron I)
        let half = C::new(-0.5, 0.0);
        l = l.add(&eye.kron(&self.k_sum).scale(half))?;
        l = l.add(&self.k_sum.transpose().kron(&eye).scale(half))?;
        if l.nnz() > nnz_budget {
            return Err(Error::ResourceLimit(format!(
                "assembled Liouvillian has {} nonzeros, budget {}",
                l.nnz(),
                nnz_budget
            )));
        }
        self.matrix = Some(l);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn hamiltonian(&self) -> &SparseOperator {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[SparseOperator] {
        &self.jumps
    }

    /// The assembled D^2 matrix, if materialized.
    pub fn matrix(&self) -> Option<&SparseOperator> {
        self.matrix.as_ref()
    }

    /// Matrix-free action on a (not necessarily Hermitian) dense matrix:
    /// L(rho) = -i [H, rho] + sum_k Gamma_k rho Gamma_k^dag - 1/2 {K, rho}.
    pub fn apply(&self, rho: &Mat<C>) -> Result<Mat<C>> {
        let d = self.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "rho is {}x{}, basis dimension {d}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let h_rho = self.hamiltonian.mul_dense(rho);
        let rho_h = self.hamiltonian.dense_mul(rho);
        let mut out = Mat::<C>::zeros(d, d);
        for c in 0..d {
            for r in 0..d {
                out[(r, c)] = -I * (h_rho[(r, c)] - rho_h[(r, c)]);
            }
        }
        for g in &self.jumps {
            let g_rho = g.mul_dense(rho);
            let g_rho_gdag = g.adjoint().dense_mul(&g_rho);
            out += &g_rho_gdag;
        }
        let k_rho = self.k_sum.mul_dense(rho);
        let rho_k = self.k_sum.dense_mul(rho);
        for c in 0..d {
            for r in 0..d {
                out[(r, c)] -= 0.5 * (k_rho[(r, c)] + rho_k[(r, c)]);
            }
        }
        Ok(out)
    }

    /// Diagonal of the superoperator matrix, computed without assembly.
    /// Entry at vectorized index (row i, col j) is
    /// -i (H_ii - conj(H_jj)) + sum_k Gamma_k,ii conj(Gamma_k,jj)
    /// - 1/2 (K_ii + conj(K_jj)).
    pub fn superop_diagonal(&self) -> Vec<C> {
        let d = self.dim();
        let h_diag = self.hamiltonian.diag();
        let k_diag = self.k_sum.diag();
        let jump_diags: Vec<Vec<C>> = self.jumps.iter().map(|g| g.diag()).collect();
        let mut out = vec![C::new(0.0, 0.0); d * d];
        for col in 0..d {
            for row in 0..d {
                let mut v = -I * (h_diag[row] - h_diag[col].conj())
                    - 0.5 * (k_diag[row] + k_diag[col].conj());
                for gd in &jump_diags {
                    v += gd[row] * gd[col].conj();
                }
                out[col * d + row] = v;
            }
        }
        out
    }
}

/// Global photon-parity operator, diagonal with entries (-1)^(total occupancy).
pub fn parity_operator(basis: &FockBasis) -> SparseOperator {
    let diag: Vec<C> = basis
        .states()
        .iter()
        .map(|occ| {
            let total: u32 = occ.iter().sum();
            C::new(if total % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        })
        .collect();
    SparseOperator::diagonal(&diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{LatticeSpec, TruncationSpec};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn basis(n: usize, nm: u32, nmt: u32) -> Arc<FockBasis> {
        Arc::new(
            FockBasis::enumerate(
                LatticeSpec::default_for(n).unwrap(),
                TruncationSpec::new(nm, nmt),
            )
            .unwrap(),
        )
    }

    fn default_params() -> ModelParams {
        ModelParams {
            delta: 0.0,
            kerr_u: 0.0,
            pump_g: c(0.0, 0.0),
            hop_j: 0.0,
            loss_gamma: 1.0,
            loss_eta: 0.0,
            drive_f: c(0.0, 0.0),
        }
    }

    pub(crate) fn random_hermitian(d: usize, rng: &mut impl Rng) -> Mat<C> {
        let mut m = Mat::<C>::zeros(d, d);
        for i in 0..d {
            for j in 0..=i {
                let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if i == j {
                    m[(i, i)] = c(v.re, 0.0);
                } else {
                    m[(i, j)] = v;
                    m[(j, i)] = v.conj();
                }
            }
        }
        m
    }

    #[test]
    fn kerr_only_hamiltonian_is_diagonal() {
        let b = basis(1, 3, 3);
        let mut p = default_params();
        p.kerr_u = 2.0;
        let h = build_hamiltonian(&b, &p).unwrap();
        for (r, cx, v) in h.iter() {
            assert_eq!(r, cx);
            let n = b.state(r)[0] as f64;
            assert!((v - c(n * (n - 1.0), 0.0)).norm() < 1e-15);
        }
        let i2 = b.index_of(&[2]).unwrap();
        assert_eq!(h.get(i2, i2), c(2.0, 0.0));
    }

    #[test]
    fn two_site_single_photon_spectrum() {
        // one-photon block of the hopping Hamiltonian: eigenvalues -Delta -+ J
        let b = basis(2, 1, 1);
        let mut p = default_params();
        p.delta = 3.0;
        p.hop_j = 1.5;
        let h = build_hamiltonian(&b, &p).unwrap();
        let i01 = b.index_of(&[0, 1]).unwrap();
        let i10 = b.index_of(&[1, 0]).unwrap();
        // 2x2 one-photon block [[-Delta, -J], [-J, -Delta]]
        let a = h.get(i01, i01).re;
        let off = h.get(i01, i10).re;
        let disc = off.abs();
        let (e1, e2) = (a - disc, a + disc);
        assert!((e1 - (-p.delta - p.hop_j)).abs() < 1e-14);
        assert!((e2 - (-p.delta + p.hop_j)).abs() < 1e-14);
        // with Delta = J the antisymmetric single-photon state has eigenvalue 0
        p.delta = 1.5;
        let h = build_hamiltonian(&b, &p).unwrap();
        let sym = -p.delta - p.hop_j;
        let anti = -p.delta + p.hop_j;
        assert!((h.get(i01, i01).re + h.get(i01, i10).re - sym).abs() < 1e-14);
        assert!((h.get(i01, i01).re - h.get(i01, i10).re - anti).abs() < 1e-14);
        assert!(anti.abs() < 1e-14);
    }

    #[test]
    fn hamiltonian_real_symmetric_for_real_couplings() {
        let b = basis(2, 3, 5);
        let mut p = default_params();
        p.delta = -10.0;
        p.kerr_u = 10.0;
        p.pump_g = c(5.0, 0.0);
        p.hop_j = -10.0;
        let h = build_hamiltonian(&b, &p).unwrap();
        for (r, cx, v) in h.iter() {
            assert!(v.im.abs() < 1e-15);
            assert!((v - h.get(cx, r)).norm() < 1e-14);
        }
    }

    #[test]
    fn hamiltonian_hermitian_with_complex_amplitudes() {
        let b = basis(2, 3, 5);
        let mut p = default_params();
        p.delta = 2.0;
        p.kerr_u = 3.0;
        p.pump_g = c(1.0, 2.0);
        p.hop_j = -1.0;
        p.drive_f = c(0.3, -0.7);
        let h = build_hamiltonian(&b, &p).unwrap();
        let hd = h.adjoint();
        for (r, cx, v) in h.iter() {
            assert!((v - hd.get(r, cx)).norm() < 1e-13);
        }
    }

    #[test]
    fn dissipator_scaling_and_count() {
        let b = basis(2, 3, 5);
        let mut p = default_params();
        p.loss_gamma = 4.0;
        let jumps = build_dissipators(&b, &p).unwrap();
        assert_eq!(jumps.len(), 2); // eta = 0: only one-photon channels
        let from = b.index_of(&[1, 0]).unwrap();
        let to = b.index_of(&[0, 0]).unwrap();
        assert!((jumps[0].get(to, from) - c(2.0, 0.0)).norm() < 1e-15);
        // a_j^2 maps (2,0) -> (0,0) with amplitude sqrt(2) before sqrt(eta)
        p.loss_eta = 1.0;
        let jumps = build_dissipators(&b, &p).unwrap();
        assert_eq!(jumps.len(), 4);
        let from2 = b.index_of(&[2, 0]).unwrap();
        assert!((jumps[2].get(to, from2) - c(2.0f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn pure_decay_action() {
        // single cavity, gamma > 0, all coherent terms off:
        // L(|1><1|) = gamma (|0><0| - |1><1|)
        let b = basis(1, 2, 2);
        let mut p = default_params();
        p.loss_gamma = 0.7;
        let liouv = Liouvillian::new(b.clone(), p).unwrap();
        let i0 = b.index_of(&[0]).unwrap();
        let i1 = b.index_of(&[1]).unwrap();
        let mut rho = Mat::<C>::zeros(b.dim(), b.dim());
        rho[(i1, i1)] = c(1.0, 0.0);
        let out = liouv.apply(&rho).unwrap();
        for r in 0..b.dim() {
            for cx in 0..b.dim() {
                let expect = if (r, cx) == (i0, i0) {
                    c(p.loss_gamma, 0.0)
                } else if (r, cx) == (i1, i1) {
                    c(-p.loss_gamma, 0.0)
                } else {
                    c(0.0, 0.0)
                };
                assert!((out[(r, cx)] - expect).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn assembled_matrix_agrees_with_matrix_free_action() {
        let b = basis(2, 3, 6);
        let mut p = default_params();
        p.delta = -2.0;
        p.kerr_u = 4.0;
        p.pump_g = c(1.5, 0.0);
        p.hop_j = -2.0;
        p.loss_eta = 1.0;
        p.drive_f = c(0.2, 0.1);
        let liouv = Liouvillian::assemble(b.clone(), p).unwrap();
        let d = b.dim();
        let l = liouv.matrix().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let rho = random_hermitian(d, &mut rng);
            let direct = liouv.apply(&rho).unwrap();
            let mut v = vec![c(0.0, 0.0); d * d];
            for col in 0..d {
                for row in 0..d {
                    v[col * d + row] = rho[(row, col)];
                }
            }
            let mut out = vec![c(0.0, 0.0); d * d];
            l.matvec(&v, &mut out);
            let scale: f64 = direct.norm_max().max(1e-30);
            for col in 0..d {
                for row in 0..d {
                    let diff = (out[col * d + row] - direct[(row, col)]).norm();
                    assert!(diff / scale < 1e-13, "entry ({row},{col}) differs by {diff}");
                }
            }
        }
    }

    #[test]
    fn action_is_linear_and_zero_on_zero() {
        let b = basis(2, 2, 4);
        let mut p = default_params();
        p.pump_g = c(2.0, 0.0);
        p.loss_eta = 0.5;
        let liouv = Liouvillian::new(b.clone(), p).unwrap();
        let d = b.dim();
        let zero = Mat::<C>::zeros(d, d);
        assert_eq!(liouv.apply(&zero).unwrap().norm_max(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r1 = random_hermitian(d, &mut rng);
        let r2 = random_hermitian(d, &mut rng);
        let (al, be) = (c(0.3, -0.4), c(-1.1, 0.2));
        let mut comb = Mat::<C>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                comb[(i, j)] = al * r1[(i, j)] + be * r2[(i, j)];
            }
        }
        let lhs = liouv.apply(&comb).unwrap();
        let l1 = liouv.apply(&r1).unwrap();
        let l2 = liouv.apply(&r2).unwrap();
        for i in 0..d {
            for j in 0..d {
                let rhs = al * l1[(i, j)] + be * l2[(i, j)];
                assert!((lhs[(i, j)] - rhs).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn trace_and_hermiticity_preservation() {
        let b = basis(2, 3, 5);
        let mut p = default_params();
        p.delta = -10.0;
        p.kerr_u = 10.0;
        p.pump_g = c(5.0, 0.0);
        p.hop_j = -10.0;
        p.loss_eta = 1.0;
        let liouv = Liouvillian::new(b.clone(), p).unwrap();
        let d = b.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let rho = random_hermitian(d, &mut rng);
            let one_norm: f64 = (0..d).map(|i| rho[(i, i)].norm()).sum::<f64>().max(1.0);
            let out = liouv.apply(&rho).unwrap();
            let tr: C = (0..d).map(|i| out[(i, i)]).sum();
            assert!(tr.norm() < 1e-12 * one_norm);
            for i in 0..d {
                for j in 0..d {
                    assert!((out[(i, j)] - out[(j, i)].conj()).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn weak_parity_symmetry() {
        let b = basis(2, 3, 5);
        let mut p = default_params();
        p.delta = -3.0;
        p.kerr_u = 5.0;
        p.pump_g = c(4.0, 0.0);
        p.hop_j = -3.0;
        p.loss_eta = 1.0;
        let liouv = Liouvillian::new(b.clone(), p).unwrap();
        let par = parity_operator(&b).to_dense();
        let d = b.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let rho = random_hermitian(d, &mut rng);
            let prp = &par * &rho * &par;
            let lhs = liouv.apply(&prp).unwrap();
            let lrho = liouv.apply(&rho).unwrap();
            let rhs = &par * &lrho * &par;
            for i in 0..d {
                for j in 0..d {
                    assert!((lhs[(i, j)] - rhs[(i, j)]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn unitary_limit_without_dissipation() {
        // gamma = eta = 0 is rejected by validate; probe the commutator limit
        // by comparing against a tiny-loss generator with losses removed.
        let b = basis(2, 2, 4);
        let mut p = default_params();
        p.delta = 1.0;
        p.pump_g = c(2.0, 0.0);
        p.hop_j = -1.0;
        let h = build_hamiltonian(&b, &p).unwrap();
        let liouv = Liouvillian::new(b.clone(), p).unwrap();
        let d = b.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = random_hermitian(d, &mut rng);
        let full = liouv.apply(&rho).unwrap();
        // subtract the dissipative part: gamma = 1 one-photon channels
        let h_rho = h.mul_dense(&rho);
        let rho_h = h.dense_mul(&rho);
        let mut diss = Mat::<C>::zeros(d, d);
        for g in liouv.jumps() {
            let g_rho = g.mul_dense(&rho);
            let gd = g.adjoint();
            let grg = gd.dense_mul(&g_rho);
            let kk = gd.matmul(g).unwrap();
            let k_rho = kk.mul_dense(&rho);
            let rho_k = kk.dense_mul(&rho);
            for i in 0..d {
                for j in 0..d {
                    diss[(i, j)] += grg[(i, j)] - 0.5 * (k_rho[(i, j)] + rho_k[(i, j)]);
                }
            }
        }
        let mut err: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let unitary = -I * (h_rho[(i, j)] - rho_h[(i, j)]);
                err = err.max((full[(i, j)] - diss[(i, j)] - unitary).norm());
            }
        }
        assert!(err < 1e-13);
    }

    #[test]
    fn superop_diagonal_matches_assembled_matrix() {
        let b = basis(2, 2, 4);
        let mut p = default_params();
        p.delta = -1.0;
        p.kerr_u = 3.0;
        p.pump_g = c(2.0, 0.0);
        p.hop_j = -1.0;
        p.loss_eta = 0.7;
        let liouv = Liouvillian::assemble(b, p).unwrap();
        let diag = liouv.superop_diagonal();
        let l = liouv.matrix().unwrap();
        for (i, &v) in diag.iter().enumerate() {
            assert!((v - l.get(i, i)).norm() < 1e-13, "diagonal entry {i}");
        }
    }

    #[test]
    fn nnz_budget_guard() {
        let b = basis(2, 3, 6);
        let p = default_params();
        let r = Liouvillian::assemble_with_budget(b, p, 10);
        assert!(matches!(r, Err(Error::ResourceLimit(_))));
    }
}
