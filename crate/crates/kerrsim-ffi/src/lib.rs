//! C ABI over the steady-state engine: opaque solver handles, integer
//! status codes, out-parameters for results, and a per-handle error string.
//!
//! All functions are safe to call with a null handle (they return
//! `KS_STATUS_NULL_POINTER`); ownership of a handle passes to
//! `ks_solver_free` exactly once.

use kerrsim::hilbert::{FockBasis, LatticeSpec, TruncationSpec};
use kerrsim::liouvillian::ModelParams;
use kerrsim::observables;
use kerrsim::steady_state::{solve_steady_state, SolveMethod, SolverConfig, SteadyStateResult};
use kerrsim::{Complex64, Error};
use std::ffi::{c_char, CString};
use std::sync::Arc;

/// Return status of every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsStatus {
    KsStatusOk = 0,
    KsStatusNullPointer = 1,
    KsStatusInvalidArgument = 2,
    KsStatusResourceLimit = 3,
    KsStatusSingularSystem = 4,
    KsStatusNonConvergence = 5,
    KsStatusNotSolved = 6,
    KsStatusInternal = 7,
}

/// Steady-state method selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsMethod {
    KsMethodDirect = 0,
    KsMethodIterative = 1,
    KsMethodEvolve = 2,
}

/// Opaque solver handle. Create with `ks_solver_new`, release with
/// `ks_solver_free`.
pub struct KsSolver {
    basis: Arc<FockBasis>,
    params: ModelParams,
    result: Option<SteadyStateResult>,
    last_error: CString,
}

fn status_of(err: &Error) -> KsStatus {
    match err {
        Error::InvalidSpec(_) | Error::Config(_) | Error::IndexOutOfRange(_)
        | Error::DimensionMismatch(_) => KsStatus::KsStatusInvalidArgument,
        Error::ResourceLimit(_) => KsStatus::KsStatusResourceLimit,
        Error::SingularSystem(_) => KsStatus::KsStatusSingularSystem,
        Error::NonConvergence(_) => KsStatus::KsStatusNonConvergence,
        _ => KsStatus::KsStatusInternal,
    }
}

impl KsSolver {
    fn fail(&mut self, err: Error) -> KsStatus {
        let status = status_of(&err);
        self.last_error =
            CString::new(err.to_string()).unwrap_or_else(|_| CString::new("error").unwrap());
        status
    }
}

/// Create a solver for `n_sites` cavities on the default lattice (bond,
/// triangle, or ring) with the given truncation and physical parameters.
/// On success writes the new handle to `out` and returns OK.
///
/// # Safety
/// `out` must be a valid pointer; the returned handle must be released with
/// `ks_solver_free`.
#[no_mangle]
pub unsafe extern "C" fn ks_solver_new(
    n_sites: usize,
    n_max_per_mode: u32,
    n_max_total: u32,
    delta: f64,
    kerr_u: f64,
    pump_g_re: f64,
    pump_g_im: f64,
    hop_j: f64,
    loss_gamma: f64,
    loss_eta: f64,
    drive_f_re: f64,
    drive_f_im: f64,
    out: *mut *mut KsSolver,
) -> KsStatus {
    if out.is_null() {
        return KsStatus::KsStatusNullPointer;
    }
    *out = std::ptr::null_mut();
    let build = || -> Result<KsSolver, Error> {
        let lattice = LatticeSpec::default_for(n_sites)?;
        let basis = Arc::new(FockBasis::enumerate(
            lattice,
            TruncationSpec::new(n_max_per_mode, n_max_total),
        )?);
        let params = ModelParams {
            delta,
            kerr_u,
            pump_g: Complex64::new(pump_g_re, pump_g_im),
            hop_j,
            loss_gamma,
            loss_eta,
            drive_f: Complex64::new(drive_f_re, drive_f_im),
        };
        params.validate()?;
        Ok(KsSolver {
            basis,
            params,
            result: None,
            last_error: CString::new("").unwrap(),
        })
    };
    match build() {
        Ok(solver) => {
            *out = Box::into_raw(Box::new(solver));
            KsStatus::KsStatusOk
        }
        Err(e) => status_of(&e),
    }
}

/// Solve for the steady state with the requested method and residual
/// tolerance (pass 0 for the default 1e-10).
///
/// # Safety
/// `handle` must be a live pointer from `ks_solver_new`.
#[no_mangle]
pub unsafe extern "C" fn ks_solver_solve(
    handle: *mut KsSolver,
    method: KsMethod,
    residual_tol: f64,
) -> KsStatus {
    let Some(solver) = handle.as_mut() else {
        return KsStatus::KsStatusNullPointer;
    };
    let mut config = SolverConfig {
        method: match method {
            KsMethod::KsMethodDirect => SolveMethod::Direct,
            KsMethod::KsMethodIterative => SolveMethod::Iterative,
            KsMethod::KsMethodEvolve => SolveMethod::Evolve,
        },
        ..Default::default()
    };
    if residual_tol > 0.0 {
        config.residual_tol = residual_tol;
    }
    match solve_steady_state(solver.basis.clone(), &solver.params, &config, None) {
        Ok(result) => {
            let converged = result.converged;
            solver.result = Some(result);
            if converged {
                KsStatus::KsStatusOk
            } else {
                solver.fail(Error::NonConvergence("solver did not reach tolerance".into()))
            }
        }
        Err(e) => solver.fail(e),
    }
}

unsafe fn with_state<F>(handle: *mut KsSolver, out_ok: F) -> KsStatus
where
    F: FnOnce(&mut KsSolver) -> Result<(), Error>,
{
    let Some(solver) = handle.as_mut() else {
        return KsStatus::KsStatusNullPointer;
    };
    if solver.result.is_none() {
        return KsStatus::KsStatusNotSolved;
    }
    match out_ok(solver) {
        Ok(()) => KsStatus::KsStatusOk,
        Err(e) => solver.fail(e),
    }
}

/// Mean photon number of `site`.
///
/// # Safety
/// `handle` must be live and solved; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ks_solver_occupancy(
    handle: *mut KsSolver,
    site: usize,
    out: *mut f64,
) -> KsStatus {
    if out.is_null() {
        return KsStatus::KsStatusNullPointer;
    }
    with_state(handle, |s| {
        let rho = &s.result.as_ref().expect("checked").rho;
        let occ = observables::mean_occupancies(rho)?;
        let v = occ
            .get(site)
            .copied()
            .ok_or_else(|| Error::IndexOutOfRange(format!("site {site}")))?;
        *out = v;
        Ok(())
    })
}

/// Normalized first-order coherence between `site_a` and `site_b`.
///
/// # Safety
/// `handle` must be live and solved; `out_re`, `out_im` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ks_solver_g1(
    handle: *mut KsSolver,
    site_a: usize,
    site_b: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> KsStatus {
    if out_re.is_null() || out_im.is_null() {
        return KsStatus::KsStatusNullPointer;
    }
    with_state(handle, |s| {
        let rho = &s.result.as_ref().expect("checked").rho;
        let g = observables::g1_correlation(rho, site_a, site_b)?;
        *out_re = g.re;
        *out_im = g.im;
        Ok(())
    })
}

/// Von Neumann entropy of the steady state.
///
/// # Safety
/// `handle` must be live and solved; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ks_solver_entropy(handle: *mut KsSolver, out: *mut f64) -> KsStatus {
    if out.is_null() {
        return KsStatus::KsStatusNullPointer;
    }
    with_state(handle, |s| {
        let rho = &s.result.as_ref().expect("checked").rho;
        *out = observables::von_neumann_entropy(rho)?;
        Ok(())
    })
}

/// Entanglement negativity across the bipartition that isolates `site`.
///
/// # Safety
/// `handle` must be live and solved; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ks_solver_negativity(
    handle: *mut KsSolver,
    site: usize,
    out: *mut f64,
) -> KsStatus {
    if out.is_null() {
        return KsStatus::KsStatusNullPointer;
    }
    with_state(handle, |s| {
        let rho = &s.result.as_ref().expect("checked").rho;
        *out = observables::negativity(rho, site)?;
        Ok(())
    })
}

/// True residual ||L rho|| / ||rho|| of the last solve.
///
/// # Safety
/// `handle` must be live and solved; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ks_solver_residual(handle: *mut KsSolver, out: *mut f64) -> KsStatus {
    if out.is_null() {
        return KsStatus::KsStatusNullPointer;
    }
    with_state(handle, |s| {
        *out = s.result.as_ref().expect("checked").residual;
        Ok(())
    })
}

/// Hilbert-space dimension of the solver's basis.
///
/// # Safety
/// `handle` must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ks_solver_dim(handle: *const KsSolver, out: *mut usize) -> KsStatus {
    let Some(solver) = handle.as_ref() else {
        return KsStatus::KsStatusNullPointer;
    };
    if out.is_null() {
        return KsStatus::KsStatusNullPointer;
    }
    *out = solver.basis.dim();
    KsStatus::KsStatusOk
}

/// Message of the last error on this handle; the pointer stays valid until
/// the next failing call on the same handle or `ks_solver_free`.
///
/// # Safety
/// `handle` must be live.
#[no_mangle]
pub unsafe extern "C" fn ks_solver_last_error(handle: *const KsSolver) -> *const c_char {
    match handle.as_ref() {
        Some(s) => s.last_error.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Release a handle. Passing null is a no-op.
///
/// # Safety
/// `handle` must come from `ks_solver_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ks_solver_free(handle: *mut KsSolver) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    unsafe fn new_pair(g: f64) -> *mut KsSolver {
        let mut h: *mut KsSolver = std::ptr::null_mut();
        let st = ks_solver_new(
            2, 6, 10, -10.0, 10.0, g, 0.0, -10.0, 1.0, 1.0, 0.0, 0.0, &mut h,
        );
        assert_eq!(st, KsStatus::KsStatusOk);
        assert!(!h.is_null());
        h
    }

    #[test]
    fn lifecycle_and_observables() {
        unsafe {
            let h = new_pair(5.0);
            let mut dim = 0usize;
            assert_eq!(ks_solver_dim(h, &mut dim), KsStatus::KsStatusOk);
            assert!(dim > 1);
            // observables before solving are rejected
            let mut v = 0.0;
            assert_eq!(ks_solver_entropy(h, &mut v), KsStatus::KsStatusNotSolved);
            assert_eq!(
                ks_solver_solve(h, KsMethod::KsMethodDirect, 0.0),
                KsStatus::KsStatusOk
            );
            assert_eq!(ks_solver_entropy(h, &mut v), KsStatus::KsStatusOk);
            assert!(v > 0.0);
            let mut occ = 0.0;
            assert_eq!(ks_solver_occupancy(h, 0, &mut occ), KsStatus::KsStatusOk);
            assert!(occ > 0.0);
            let (mut re, mut im) = (0.0, 0.0);
            assert_eq!(ks_solver_g1(h, 0, 1, &mut re, &mut im), KsStatus::KsStatusOk);
            assert!(re < 0.0, "antiferromagnetic g1, got {re}");
            let mut res = f64::NAN;
            assert_eq!(ks_solver_residual(h, &mut res), KsStatus::KsStatusOk);
            assert!(res < 1e-10);
            let mut neg = 0.0;
            assert_eq!(ks_solver_negativity(h, 0, &mut neg), KsStatus::KsStatusOk);
            assert!(neg >= 0.0);
            ks_solver_free(h);
        }
    }

    #[test]
    fn error_paths() {
        unsafe {
            // null out pointer
            assert_eq!(
                ks_solver_new(2, 4, 6, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0,
                    std::ptr::null_mut()),
                KsStatus::KsStatusNullPointer
            );
            // invalid parameters: no dissipation at all
            let mut h: *mut KsSolver = std::ptr::null_mut();
            let st = ks_solver_new(
                2, 4, 6, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, &mut h,
            );
            assert_eq!(st, KsStatus::KsStatusInvalidArgument);
            assert!(h.is_null());
            // null handle calls are harmless
            assert_eq!(
                ks_solver_solve(std::ptr::null_mut(), KsMethod::KsMethodDirect, 0.0),
                KsStatus::KsStatusNullPointer
            );
            assert!(ks_solver_last_error(std::ptr::null()).is_null());
            ks_solver_free(std::ptr::null_mut());
            // out-of-range site reports through the handle's error string
            let h = new_pair(2.0);
            assert_eq!(ks_solver_solve(h, KsMethod::KsMethodDirect, 0.0), KsStatus::KsStatusOk);
            let mut v = 0.0;
            assert_eq!(
                ks_solver_occupancy(h, 9, &mut v),
                KsStatus::KsStatusInvalidArgument
            );
            let msg = std::ffi::CStr::from_ptr(ks_solver_last_error(h));
            assert!(!msg.to_bytes().is_empty());
            ks_solver_free(h);
        }
    }

    #[test]
    fn methods_agree_through_the_abi() {
        unsafe {
            let h1 = new_pair(4.0);
            let h2 = new_pair(4.0);
            assert_eq!(ks_solver_solve(h1, KsMethod::KsMethodDirect, 0.0), KsStatus::KsStatusOk);
            assert_eq!(
                ks_solver_solve(h2, KsMethod::KsMethodIterative, 0.0),
                KsStatus::KsStatusOk
            );
            let (mut s1, mut s2) = (0.0, 0.0);
            ks_solver_entropy(h1, &mut s1);
            ks_solver_entropy(h2, &mut s2);
            assert!((s1 - s2).abs() < 1e-8);
            ks_solver_free(h1);
            ks_solver_free(h2);
        }
    }
}
