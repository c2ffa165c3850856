//! Spin-model reference oracles: classical Ising enumeration on small
//! graphs, dense diagonalization of the effective XY model, and the mapping
//! from spin correlators to the photonic g1.

use crate::{Complex64, Error, Result};
use faer::Mat;

type C = Complex64;

/// Enumeration bound for the classical Ising oracle.
pub const ISING_MAX_SPINS: usize = 24;
/// Dense-diagonalization bound for the XY model (2^n dimension).
pub const XY_MAX_SPINS: usize = 14;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SpinXYParams {
    pub n_spins: usize,
    pub bonds: Vec<(usize, usize)>,
    pub h_z: f64,
    pub j_xy: f64,
    pub eta_x: f64,
    pub eta_y: f64,
}

impl SpinXYParams {
    pub fn validate(&self) -> Result<()> {
        if ![self.h_z, self.j_xy, self.eta_x, self.eta_y]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidSpec("XY parameters must be finite".into()));
        }
        for &(a, b) in &self.bonds {
            if a >= self.n_spins || b >= self.n_spins || a == b {
                return Err(Error::InvalidSpec(format!("invalid bond ({a}, {b})")));
            }
        }
        Ok(())
    }
}

/// Exact ground-set data of a classical Ising model.
#[derive(Debug, Clone, serde::Serialize)]
pub struct IsingResult {
    pub ground_energy: f64,
    pub degeneracy: usize,
    /// All minimizing configurations, entries are +1 or -1.
    pub ground_configs: Vec<Vec<i8>>,
    /// Nearest-neighbor correlation averaged over bonds and the ground set.
    pub pair_correlation: f64,
    /// Per-spin magnetization averaged over the ground set.
    pub magnetization: f64,
}

/// Exhaustive minimization of H = j * sum_bonds s_i s_j - h * sum_i s_i
/// over s in {-1, +1}^n. With j > 0 and the +ss coupling this is the
/// antiferromagnet. Bond and field sums are integers per configuration, so
/// ties are resolved exactly when (j, h) are exact in binary.
pub fn ising_brute_force(
    n_spins: usize,
    bonds: &[(usize, usize)],
    j_ising: f64,
    h_field: f64,
) -> Result<IsingResult> {
    if n_spins == 0 || n_spins > ISING_MAX_SPINS {
        return Err(Error::ResourceLimit(format!(
            "ising_brute_force supports 1..={ISING_MAX_SPINS} spins, got {n_spins}"
        )));
    }
    if !j_ising.is_finite() || !h_field.is_finite() {
        return Err(Error::InvalidSpec("Ising couplings must be finite".into()));
    }
    for &(a, b) in bonds {
        if a >= n_spins || b >= n_spins || a == b {
            return Err(Error::InvalidSpec(format!("invalid bond ({a}, {b})")));
        }
    }
    let sign = |mask: u32, site: usize| -> i64 {
        if mask >> site & 1 == 1 {
            1
        } else {
            -1
        }
    };
    let mut best = f64::INFINITY;
    let mut ground_masks: Vec<u32> = Vec::new();
    for mask in 0u32..(1u32 << n_spins) {
        // bond and field sums are integers; for binary-exact (j, h) the
        // energies of tied configurations are bitwise equal
        let bond_sum: i64 = bonds
            .iter()
            .map(|&(a, b)| sign(mask, a) * sign(mask, b))
            .sum();
        let field_sum: i64 = (0..n_spins).map(|i| sign(mask, i)).sum();
        let energy = j_ising * bond_sum as f64 - h_field * field_sum as f64;
        if energy < best {
            best = energy;
            ground_masks.clear();
            ground_masks.push(mask);
        } else if energy == best {
            ground_masks.push(mask);
        }
    }
    let ground_energy = best;
    let ground_configs: Vec<Vec<i8>> = ground_masks
        .iter()
        .map(|&m| (0..n_spins).map(|i| sign(m, i) as i8).collect())
        .collect();
    let degeneracy = ground_configs.len();
    let pair_correlation = if bonds.is_empty() {
        0.0
    } else {
        let total: i64 = ground_masks
            .iter()
            .map(|&m| {
                bonds
                    .iter()
                    .map(|&(a, b)| sign(m, a) * sign(m, b))
                    .sum::<i64>()
            })
            .sum();
        total as f64 / (degeneracy * bonds.len()) as f64
    };
    let mag_total: i64 = ground_masks
        .iter()
        .map(|&m| (0..n_spins).map(|i| sign(m, i)).sum::<i64>())
        .sum();
    let magnetization = mag_total as f64 / (degeneracy * n_spins) as f64;
    Ok(IsingResult {
        ground_energy,
        degeneracy,
        ground_configs,
        pair_correlation,
        magnetization,
    })
}

/// Ground-space data of the XY model.
#[derive(Debug, Clone)]
pub struct XYGroundState {
    pub energy: f64,
    /// Orthonormal basis of the (quasi-)degenerate ground space; each column
    /// of length 2^n. States degenerate within `degeneracy_tol` are grouped.
    pub ground_basis: Vec<Vec<C>>,
    /// Bond-averaged <sx sx>, over the uniform ground-space mixture.
    pub corr_xx: f64,
    /// Bond-averaged <sy sy>.
    pub corr_yy: f64,
    /// Site-averaged <sz>.
    pub sz: f64,
    /// Full spectrum, ascending.
    pub spectrum: Vec<f64>,
}

const DEGENERACY_TOL: f64 = 1e-9;

/// Apply sigma-x at `site` to basis index `idx`.
fn flip(idx: usize, site: usize) -> usize {
    idx ^ (1 << site)
}

fn sz_sign(idx: usize, site: usize) -> f64 {
    if idx >> site & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Exact ground state of
/// H = h_z sum_i sz_i - j_xy sum_bonds (eta_x sx_i sx_j + eta_y sy_i sy_j)
/// by dense Hermitian diagonalization.
pub fn xy_ground_state(params: &SpinXYParams) -> Result<XYGroundState> {
    params.validate()?;
    let n = params.n_spins;
    if n == 0 || n > XY_MAX_SPINS {
        return Err(Error::ResourceLimit(format!(
            "xy_ground_state supports 1..={XY_MAX_SPINS} spins, got {n}"
        )));
    }
    let dim = 1usize << n;
    let mut h = Mat::<C>::zeros(dim, dim);
    for idx in 0..dim {
        let mut diag = 0.0;
        for site in 0..n {
            diag += params.h_z * sz_sign(idx, site);
        }
        h[(idx, idx)] = C::new(diag, 0.0);
        for &(a, b) in &params.bonds {
            let sa = sz_sign(idx, a);
            let sb = sz_sign(idx, b);
            let target = flip(flip(idx, a), b);
            // sx sx flips both spins with +1; sy sy flips both with -sa*sb
            let amp = -params.j_xy * (params.eta_x - params.eta_y * sa * sb);
            h[(target, idx)] += C::new(amp, 0.0);
        }
    }
    let (vals, vecs) = crate::observables::hermitian_eigen(&h)?;
    let energy = vals[0];
    let mut ground_basis = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        if v - energy <= DEGENERACY_TOL * (1.0 + energy.abs()) {
            ground_basis.push((0..dim).map(|r| vecs[(r, i)]).collect::<Vec<C>>());
        } else {
            break;
        }
    }

    // uniform mixture over the ground space
    let g = ground_basis.len() as f64;
    let mut corr_xx = 0.0;
    let mut corr_yy = 0.0;
    let mut sz = 0.0;
    for psi in &ground_basis {
        for &(a, b) in &params.bonds {
            let mut xx = 0.0;
            let mut yy = 0.0;
            for idx in 0..dim {
                let target = flip(flip(idx, a), b);
                let ov = (psi[target].conj() * psi[idx]).re;
                xx += ov;
                yy += -sz_sign(idx, a) * sz_sign(idx, b) * ov;
            }
            corr_xx += xx;
            corr_yy += yy;
        }
        for site in 0..n {
            for idx in 0..dim {
                sz += sz_sign(idx, site) * psi[idx].norm_sqr();
            }
        }
    }
    let nb = params.bonds.len().max(1) as f64;
    corr_xx /= g * nb;
    corr_yy /= g * nb;
    sz /= g * n as f64;
    Ok(XYGroundState {
        energy,
        ground_basis,
        corr_xx,
        corr_yy,
        sz,
        spectrum: vals,
    })
}

/// Maps spin correlators to the photonic coherence through the overlap
/// factors B+- = sqrt(tanh|alpha|^2) +- 1/sqrt(tanh|alpha|^2):
/// g1 = (B+^2 xx + B-^2 yy) / (B+^2 + B-^2 + 2 B+ B- sz).
pub fn g1_spin_map(corr_xx: f64, corr_yy: f64, sz: f64, alpha: C) -> Result<f64> {
    let a2 = alpha.norm_sqr();
    if a2 == 0.0 {
        return Err(Error::UndefinedObservable(
            "g1 spin map is singular at alpha = 0".into(),
        ));
    }
    if ![corr_xx, corr_yy, sz].iter().all(|v| v.is_finite()) || !a2.is_finite() {
        return Err(Error::InvalidSpec("spin map inputs must be finite".into()));
    }
    let t = a2.tanh().sqrt();
    let b_plus = t + 1.0 / t;
    let b_minus = t - 1.0 / t;
    let denom = b_plus * b_plus + b_minus * b_minus + 2.0 * b_plus * b_minus * sz;
    if denom.abs() < 1e-300 {
        return Err(Error::UndefinedObservable(
            "vanishing denominator in g1 spin map".into(),
        ));
    }
    Ok((b_plus * b_plus * corr_xx + b_minus * b_minus * corr_yy) / denom)
}
