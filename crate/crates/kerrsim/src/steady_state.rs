//! Steady-state solvers: L rho = 0 with Tr rho = 1.
//!
//! Three routes: direct sparse LU of the trace-replaced system, matrix-free
//! preconditioned BiCGSTAB on the same system, and adaptive Dormand-Prince
//! integration of the master equation. Cutoff management warm-starts larger
//! bases by injecting the previous solution.

use crate::hilbert::{FockBasis, LatticeSpec, TruncationSpec};
use crate::liouvillian::{Liouvillian, ModelParams};
use crate::observables::{self, DensityMatrix};
use crate::{Complex64, Error, Result};
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use std::sync::Arc;
use std::time::Instant;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Direct,
    Iterative,
    Evolve,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    pub method: SolveMethod,
    /// Tolerance on ||L rho|| / ||rho|| (Frobenius).
    pub residual_tol: f64,
    /// Iteration cap for the Krylov solver.
    pub max_iterations: usize,
    /// Time horizon for the evolve route, in units of 1/gamma.
    pub evolve_horizon: f64,
    /// Local error tolerance of the adaptive integrator.
    pub evolve_step_tol: f64,
    /// Largest D^2 handled by the direct solver.
    pub direct_dim_budget: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolveMethod::Direct,
            residual_tol: 1e-10,
            max_iterations: 100_000,
            evolve_horizon: 400.0,
            evolve_step_tol: 1e-9,
            direct_dim_budget: 120_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.residual_tol <= 0.0 || self.evolve_step_tol <= 0.0 {
            return Err(Error::InvalidSpec("solver tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub generator_applications: usize,
    pub wall_time_s: f64,
    /// Accumulated |Tr rho - Tr rho0| for the evolve route.
    pub trace_drift: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SteadyStateResult {
    pub rho: DensityMatrix,
    /// True residual ||L rho|| / ||rho||, measured before symmetrization.
    pub residual: f64,
    pub method_used: SolveMethod,
    pub converged: bool,
    pub diagnostics: SolveDiagnostics,
}

fn vectorize(rho: &Mat<C>) -> Vec<C> {
    let d = rho.nrows();
    let mut v = vec![C::new(0.0, 0.0); d * d];
    for col in 0..d {
        for row in 0..d {
            v[col * d + row] = rho[(row, col)];
        }
    }
    v
}

fn unvectorize(v: &[C], d: usize) -> Mat<C> {
    let mut m = Mat::<C>::zeros(d, d);
    for col in 0..d {
        for row in 0..d {
            m[(row, col)] = v[col * d + row];
        }
    }
    m
}

fn frobenius(m: &Mat<C>) -> f64 {
    m.norm_l2()
}

/// ||L rho|| / ||rho||, Frobenius.
fn true_residual(liouv: &Liouvillian, rho: &Mat<C>) -> Result<f64> {
    let nr = frobenius(rho);
    if nr == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(frobenius(&liouv.apply(rho)?) / nr)
}

fn finish(
    liouv: &Liouvillian,
    rho_raw: Mat<C>,
    method: SolveMethod,
    tol: f64,
    mut diagnostics: SolveDiagnostics,
    started: Instant,
) -> Result<SteadyStateResult> {
    let residual = true_residual(liouv, &rho_raw)?;
    let rho = DensityMatrix::new(liouv.basis.clone(), rho_raw)?.hermitized_normalized()?;
    diagnostics.wall_time_s = started.elapsed().as_secs_f64();
    Ok(SteadyStateResult {
        rho,
        residual,
        method_used: method,
        converged: residual <= tol,
        diagnostics,
    })
}

/// Row index of the trace-replaced equation: the vectorized position whose
/// superoperator diagonal has the largest magnitude.
fn trace_row(diag: &[C]) -> usize {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, v) in diag.iter().enumerate() {
        let m = v.norm();
        if m > best_mag {
            best_mag = m;
            best = i;
        }
    }
    best
}

/// Direct sparse LU solve of the trace-replaced system.
pub fn solve_direct(liouv: &mut Liouvillian, config: &SolverConfig) -> Result<SteadyStateResult> {
    config.validate()?;
    let started = Instant::now();
    let d = liouv.dim();
    let d2 = d * d;
    if d2 > config.direct_dim_budget {
        return Err(Error::ResourceLimit(format!(
            "direct solve dimension {d2} exceeds budget {}",
            config.direct_dim_budget
        )));
    }
    liouv.materialize(crate::liouvillian::DEFAULT_NNZ_BUDGET)?;
    let l = liouv.matrix().expect("just materialized");
    let r = trace_row(&l.diag());
    let mut triplets: Vec<Triplet<usize, usize, C>> = Vec::with_capacity(l.nnz() + d);
    for (row, col, v) in l.iter() {
        if row != r {
            triplets.push(Triplet::new(row, col, v));
        }
    }
    for i in 0..d {
        triplets.push(Triplet::new(r, i * d + i, C::new(1.0, 0.0)));
    }
    let sp = SparseColMat::<usize, C>::try_new_from_triplets(d2, d2, &triplets)
        .map_err(|e| Error::SingularSystem(format!("sparse assembly failed: {e:?}")))?;
    let lu = sp
        .sp_lu()
        .map_err(|e| Error::SingularSystem(format!("sparse LU failed: {e:?}")))?;
    let mut rhs = Mat::<C>::zeros(d2, 1);
    rhs[(r, 0)] = C::new(1.0, 0.0);
    let x = lu.solve(&rhs);
    let v: Vec<C> = (0..d2).map(|i| x[(i, 0)]).collect();
    if v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::SingularSystem(
            "direct solve produced non-finite entries".into(),
        ));
    }
    let rho_raw = unvectorize(&v, d);
    finish(liouv, rho_raw, SolveMethod::Direct, config.residual_tol, Default::default(), started)
}

struct TraceReplacedOp<'a> {
    liouv: &'a Liouvillian,
    trace_row: usize,
    d: usize,
    applications: usize,
}

impl TraceReplacedOp<'_> {
    fn apply(&mut self, x: &[C]) -> Result<Vec<C>> {
        self.applications += 1;
        let rho = unvectorize(x, self.d);
        let out = self.liouv.apply(&rho)?;
        let mut y = vectorize(&out);
        y[self.trace_row] = (0..self.d).map(|i| x[i * self.d + i]).sum();
        Ok(y)
    }
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Preconditioned BiCGSTAB on the trace-replaced system. Jacobi
/// preconditioner from the analytically known superoperator diagonal.
pub fn solve_iterative(
    liouv: &Liouvillian,
    config: &SolverConfig,
    initial_guess: Option<&DensityMatrix>,
) -> Result<SteadyStateResult> {
    config.validate()?;
    let started = Instant::now();
    let d = liouv.dim();
    let d2 = d * d;
    let diag = liouv.superop_diagonal();
    let r_row = trace_row(&diag);
    let mut precond: Vec<C> = diag
        .iter()
        .map(|v| {
            if v.norm() > 1e-12 {
                C::new(1.0, 0.0) / v
            } else {
                C::new(1.0, 0.0)
            }
        })
        .collect();
    precond[r_row] = C::new(1.0, 0.0);

    let mut op = TraceReplacedOp { liouv, trace_row: r_row, d, applications: 0 };
    let mut b = vec![C::new(0.0, 0.0); d2];
    b[r_row] = C::new(1.0, 0.0);

    let mut x = match initial_guess {
        Some(g) => {
            if g.dim() != d {
                return Err(Error::DimensionMismatch("initial guess dimension".into()));
            }
            vectorize(&g.mat)
        }
        None => vectorize(&DensityMatrix::vacuum(liouv.basis.clone()).mat),
    };

    let mut diagnostics = SolveDiagnostics::default();
    let mut best_x = x.clone();
    let mut best_res = f64::INFINITY;
    // inner linear residual target; tightened if the true residual lags
    let mut inner_tol = config.residual_tol * 0.03;
    let mut iterations = 0usize;
    let mut converged = false;

    'outer: while iterations < config.max_iterations {
        let ax = op.apply(&x)?;
        let mut r: Vec<C> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let r_hat = r.clone();
        let mut rho_old = C::new(1.0, 0.0);
        let mut alpha = C::new(1.0, 0.0);
        let mut omega = C::new(1.0, 0.0);
        let mut v = vec![C::new(0.0, 0.0); d2];
        let mut p = vec![C::new(0.0, 0.0); d2];
        let mut stagnation = 0usize;
        let mut last_norm = norm(&r);

        loop {
            if iterations >= config.max_iterations {
                break 'outer;
            }
            iterations += 1;
            let rho_new = dot(&r_hat, &r);
            if rho_new.norm() < 1e-60 {
                break; // breakdown: restart with the current iterate
            }
            let beta = (rho_new / rho_old) * (alpha / omega);
            for i in 0..d2 {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            let p_hat: Vec<C> = p.iter().zip(&precond).map(|(a, m)| a * m).collect();
            v = op.apply(&p_hat)?;
            let denom = dot(&r_hat, &v);
            if denom.norm() < 1e-60 {
                break;
            }
            alpha = rho_new / denom;
            let s: Vec<C> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
            if norm(&s) < inner_tol {
                for i in 0..d2 {
                    x[i] += alpha * p_hat[i];
                }
                break;
            }
            let s_hat: Vec<C> = s.iter().zip(&precond).map(|(a, m)| a * m).collect();
            let t = op.apply(&s_hat)?;
            let tt = dot(&t, &t);
            if tt.norm() < 1e-60 {
                break;
            }
            omega = dot(&t, &s) / tt;
            for i in 0..d2 {
                x[i] += alpha * p_hat[i] + omega * s_hat[i];
            }
            r = s.iter().zip(&t).map(|(si, ti)| si - omega * ti).collect();
            rho_old = rho_new;
            let rn = norm(&r);
            if rn < inner_tol {
                break;
            }
            if rn >= 0.999 * last_norm {
                stagnation += 1;
                if stagnation > 50 {
                    break; // stagnated, restart once and re-evaluate
                }
            } else {
                stagnation = 0;
            }
            last_norm = rn;
        }

        // measure the contract residual on the current iterate
        let rho_mat = unvectorize(&x, d);
        let res = true_residual(liouv, &rho_mat)?;
        diagnostics.generator_applications = op.applications;
        if res < best_res {
            best_res = res;
            best_x.copy_from_slice(&x);
        }
        if res <= config.residual_tol {
            converged = true;
            break;
        }
        if inner_tol <= 1e-3 * config.residual_tol * config.residual_tol {
            break; // no further tightening is meaningful
        }
        inner_tol *= 1e-2;
    }

    diagnostics.iterations = iterations;
    diagnostics.generator_applications = op.applications;
    if !converged {
        diagnostics
            .notes
            .push(format!("BiCGSTAB stopped at residual {best_res:.3e} (target {:.1e})", config.residual_tol));
    }
    let rho_raw = unvectorize(&best_x, d);
    let mut result = finish(
        liouv,
        rho_raw,
        SolveMethod::Iterative,
        config.residual_tol,
        diagnostics,
        started,
    )?;
    result.converged = converged && result.residual <= config.residual_tol;
    Ok(result)
}

/// Dormand-Prince 5(4) coefficients.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate d rho / dt = L(rho) until the residual drops below tolerance or
/// the horizon is reached. The trace is never renormalized during the run;
/// its drift is reported as a correctness signal.
pub fn evolve_to_steady(
    liouv: &Liouvillian,
    rho0: &DensityMatrix,
    config: &SolverConfig,
) -> Result<SteadyStateResult> {
    config.validate()?;
    let started = Instant::now();
    let d = liouv.dim();
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch("initial state dimension".into()));
    }
    let trace0 = rho0.trace().re;
    let mut rho = rho0.mat.clone();
    let mut t = 0.0;
    // initial step from the fastest superoperator scale
    let scale = liouv
        .superop_diagonal()
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max)
        .max(1.0);
    let mut h = (0.05 / scale).min(config.evolve_horizon);
    let tol = config.evolve_step_tol;
    let mut diagnostics = SolveDiagnostics::default();
    let mut k: Vec<Mat<C>> = Vec::with_capacity(7);
    let mut k1 = liouv.apply(&rho)?;
    diagnostics.generator_applications += 1;
    let mut converged = false;

    while t < config.evolve_horizon {
        // residual check uses the already-computed slope at the step start
        let nr = frobenius(&rho);
        if nr > 0.0 && frobenius(&k1) / nr <= config.residual_tol {
            converged = true;
            break;
        }
        if h > config.evolve_horizon - t {
            h = config.evolve_horizon - t;
        }
        k.clear();
        k.push(k1.clone());
        for stage in 1..7 {
            let mut y = rho.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = DP_A[stage][j];
                if a != 0.0 {
                    let ha = C::new(h * a, 0.0);
                    for ci in 0..d {
                        for ri in 0..d {
                            y[(ri, ci)] += ha * kj[(ri, ci)];
                        }
                    }
                }
            }
            let _ = DP_C[stage];
            k.push(liouv.apply(&y)?);
            diagnostics.generator_applications += 1;
        }
        // 5th-order solution and embedded error estimate
        let mut y5 = rho.clone();
        let mut err = Mat::<C>::zeros(d, d);
        for (j, kj) in k.iter().enumerate() {
            let b5 = C::new(h * DP_B5[j], 0.0);
            let db = C::new(h * (DP_B5[j] - DP_B4[j]), 0.0);
            if DP_B5[j] != 0.0 || DP_B4[j] != 0.0 {
                for ci in 0..d {
                    for ri in 0..d {
                        y5[(ri, ci)] += b5 * kj[(ri, ci)];
                        err[(ri, ci)] += db * kj[(ri, ci)];
                    }
                }
            }
        }
        let scale_norm = tol * (1.0 + frobenius(&rho));
        let err_ratio = frobenius(&err) / scale_norm;
        if err_ratio <= 1.0 {
            t += h;
            rho = y5;
            // FSAL: stage 7 slope equals the slope at the new point
            k1 = k[6].clone();
            diagnostics.iterations += 1;
        }
        let factor = if err_ratio > 0.0 { 0.9 * err_ratio.powf(-0.2) } else { 5.0 };
        h *= factor.clamp(0.2, 5.0);
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::NonConvergence("step size underflow in evolve".into()));
        }
    }

    let trace_now: C = (0..d).map(|i| rho[(i, i)]).sum();
    diagnostics.trace_drift = (trace_now.re - trace0).abs() + trace_now.im.abs();
    if !converged {
        diagnostics.notes.push(format!(
            "horizon {} reached before residual target",
            config.evolve_horizon
        ));
    }
    let mut result = finish(
        liouv,
        rho,
        SolveMethod::Evolve,
        config.residual_tol,
        diagnostics,
        started,
    )?;
    result.converged = converged;
    Ok(result)
}

/// Copy a solution into a larger basis (both cutoffs no smaller), zero
/// padding the new states. Warm start for cutoff ladders.
pub fn inject_into(rho: &DensityMatrix, target: &Arc<FockBasis>) -> Result<DensityMatrix> {
    if !rho.basis.is_refined_by(target) {
        return Err(Error::InvalidSpec(
            "target basis does not refine the source basis".into(),
        ));
    }
    let d_new = target.dim();
    let mut mat = Mat::<C>::zeros(d_new, d_new);
    let map: Vec<usize> = rho
        .basis
        .states()
        .iter()
        .map(|s| target.index_of(s).expect("refined basis contains all states"))
        .collect();
    let d_old = rho.dim();
    for i in 0..d_old {
        for j in 0..d_old {
            mat[(map[i], map[j])] = rho.mat[(i, j)];
        }
    }
    DensityMatrix::new(target.clone(), mat)
}

/// Solve at one basis, dispatching on the configured method. For the
/// iterative route without a guess at dimensions beyond the direct budget,
/// a ladder of coarser cutoffs bootstraps the warm start.
pub fn solve_steady_state(
    basis: Arc<FockBasis>,
    params: &ModelParams,
    config: &SolverConfig,
    guess: Option<&DensityMatrix>,
) -> Result<SteadyStateResult> {
    match config.method {
        SolveMethod::Direct => {
            let mut liouv = Liouvillian::new(basis, *params)?;
            solve_direct(&mut liouv, config)
        }
        SolveMethod::Evolve => {
            let liouv = Liouvillian::new(basis.clone(), *params)?;
            let rho0 = match guess {
                Some(g) => g.clone(),
                None => DensityMatrix::vacuum(basis),
            };
            evolve_to_steady(&liouv, &rho0, config)
        }
        SolveMethod::Iterative => {
            let d2 = basis.dim() * basis.dim();
            if let Some(g) = guess {
                let liouv = Liouvillian::new(basis, *params)?;
                return solve_iterative(&liouv, config, Some(g));
            }
            if d2 <= config.direct_dim_budget {
                let mut liouv = Liouvillian::new(basis.clone(), *params)?;
                let seed = solve_direct(&mut liouv, config)?;
                // polish through the iterative route so the reported method
                // and diagnostics reflect the request
                let liouv = Liouvillian::new(basis, *params)?;
                return solve_iterative(&liouv, config, Some(&seed.rho));
            }
            // bootstrap ladder of coarser cutoffs
            let ladder = bootstrap_ladder(&basis, config.direct_dim_budget)?;
            let mut rho: Option<DensityMatrix> = None;
            for spec in ladder {
                let b = Arc::new(FockBasis::enumerate(basis.lattice.clone(), spec)?);
                let guess_level = match &rho {
                    Some(r) => Some(inject_into(r, &b)?),
                    None => None,
                };
                let result = if b.dim() * b.dim() <= config.direct_dim_budget {
                    let mut liouv = Liouvillian::new(b.clone(), *params)?;
                    solve_direct(&mut liouv, config)?
                } else {
                    let liouv = Liouvillian::new(b.clone(), *params)?;
                    solve_iterative(&liouv, config, guess_level.as_ref())?
                };
                rho = Some(result.rho);
            }
            let liouv = Liouvillian::new(basis.clone(), *params)?;
            let injected = inject_into(rho.as_ref().expect("ladder nonempty"), &basis)?;
            solve_iterative(&liouv, config, Some(&injected))
        }
    }
}

/// Strictly increasing cutoff sequence ending at the target, whose first
/// level fits the direct-solver budget.
fn bootstrap_ladder(basis: &FockBasis, direct_budget: usize) -> Result<Vec<TruncationSpec>> {
    let target = basis.trunc;
    let mut ladder = vec![];
    let mut spec = target;
    loop {
        let b = FockBasis::enumerate(basis.lattice.clone(), spec)?;
        ladder.push(spec);
        if b.dim() * b.dim() <= direct_budget || spec.n_max_per_mode <= 2 {
            break;
        }
        spec = TruncationSpec::new(
            (spec.n_max_per_mode * 3 / 4).max(2),
            (spec.n_max_total * 3 / 4).max(2),
        );
    }
    ladder.reverse();
    ladder.pop(); // the caller solves the target level itself
    Ok(ladder)
}

/// One row of the cutoff-convergence table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvergenceLevel {
    pub trunc: TruncationSpec,
    pub dim: usize,
    pub total_occupancy: f64,
    /// Real part of g1 between sites 0 and 1 (0 when undefined).
    pub g1_re: f64,
    pub g1_im: f64,
    pub entropy: f64,
    pub residual: f64,
    pub solver_converged: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvergenceReport {
    pub levels: Vec<ConvergenceLevel>,
    pub observables_converged: bool,
    pub observable_tol: f64,
}

/// Solve at successive cutoffs until mean occupancy, g1 and S all move by
/// less than `observable_tol` between consecutive levels.
pub fn converge_cutoffs(
    lattice: &LatticeSpec,
    params: &ModelParams,
    config: &SolverConfig,
    schedule: &[TruncationSpec],
    observable_tol: f64,
) -> Result<(SteadyStateResult, ConvergenceReport)> {
    if schedule.is_empty() {
        return Err(Error::InvalidSpec("empty truncation schedule".into()));
    }
    for w in schedule.windows(2) {
        if w[1].n_max_per_mode <= w[0].n_max_per_mode || w[1].n_max_total <= w[0].n_max_total {
            return Err(Error::InvalidSpec(
                "truncation schedule must be strictly increasing in both cutoffs".into(),
            ));
        }
    }
    if observable_tol <= 0.0 {
        return Err(Error::InvalidSpec("observable tolerance must be positive".into()));
    }
    let mut levels: Vec<ConvergenceLevel> = Vec::new();
    let mut last: Option<SteadyStateResult> = None;
    let mut converged = false;
    for &spec in schedule {
        let basis = Arc::new(FockBasis::enumerate(lattice.clone(), spec)?);
        let guess = match &last {
            Some(r) => Some(inject_into(&r.rho, &basis)?),
            None => None,
        };
        let result = solve_steady_state(basis.clone(), params, config, guess.as_ref())?;
        let occupancy: f64 = observables::mean_occupancies(&result.rho)?.iter().sum();
        let g1 = if lattice.n_sites >= 2 {
            observables::g1_correlation(&result.rho, 0, 1).unwrap_or(C::new(0.0, 0.0))
        } else {
            C::new(0.0, 0.0)
        };
        let entropy = observables::von_neumann_entropy(&result.rho)?;
        levels.push(ConvergenceLevel {
            trunc: spec,
            dim: basis.dim(),
            total_occupancy: occupancy,
            g1_re: g1.re,
            g1_im: g1.im,
            entropy,
            residual: result.residual,
            solver_converged: result.converged,
        });
        if let Some(prev) = levels.len().checked_sub(2).map(|i| &levels[i]) {
            let cur = levels.last().unwrap();
            let d_occ = (cur.total_occupancy - prev.total_occupancy).abs();
            let d_g1 = ((cur.g1_re - prev.g1_re).powi(2) + (cur.g1_im - prev.g1_im).powi(2))
                .sqrt();
            let d_s = (cur.entropy - prev.entropy).abs();
            if d_occ < observable_tol && d_g1 < observable_tol && d_s < observable_tol {
                converged = true;
                last = Some(result);
                break;
            }
        }
        last = Some(result);
    }
    let report = ConvergenceReport {
        levels,
        observables_converged: converged,
        observable_tol,
    };
    Ok((last.expect("at least one level solved"), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::{g1_correlation, mean_occupancies, von_neumann_entropy};

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

    fn params(g: f64) -> ModelParams {
        ModelParams {
            delta: -10.0,
            kerr_u: 10.0,
            pump_g: c(g, 0.0),
            hop_j: -10.0,
            loss_gamma: 1.0,
            loss_eta: 1.0,
            drive_f: c(0.0, 0.0),
        }
    }

    #[test]
    fn vacuum_is_dark_state() {
        let b = basis(1, 4, 4);
        let mut p = params(0.0);
        p.delta = 0.0;
        p.kerr_u = 0.0;
        p.hop_j = 0.0;
        let mut liouv = Liouvillian::new(b.clone(), p).unwrap();
        let cfg = SolverConfig::default();
        let r = solve_direct(&mut liouv, &cfg).unwrap();
        assert!(r.residual < 1e-12);
        let vac = DensityMatrix::vacuum(b);
        assert!(r.rho.trace_distance(&vac).unwrap() < 1e-10);
    }

    #[test]
    fn direct_solution_is_parity_even() {
        let b = basis(2, 5, 8);
        let mut liouv = Liouvillian::new(b.clone(), params(4.0)).unwrap();
        let cfg = SolverConfig::default();
        let r = solve_direct(&mut liouv, &cfg).unwrap();
        assert!(r.converged);
        let par = crate::liouvillian::parity_operator(&b).to_dense();
        let prp = &par * &r.rho.mat * &par;
        let d = b.dim();
        for i in 0..d {
            for j in 0..d {
                assert!((prp[(i, j)] - r.rho.mat[(i, j)]).norm() < 1e-8);
            }
        }
        // <a_j> = 0 without one-photon drive
        for s in 0..2 {
            let a = b.annihilation(s).unwrap();
            assert!(crate::observables::expectation(&r.rho, &a).unwrap().norm() < 1e-8);
        }
        // density matrix contract
        assert!(r.rho.hermiticity_deviation() < 1e-10);
        assert!((r.rho.trace() - c(1.0, 0.0)).norm() < 1e-12);
        assert!(r.rho.min_eigenvalue().unwrap() > -1e-8);
    }

    #[test]
    fn iterative_agrees_with_direct() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..3 {
            let b = basis(2, 8, 12);
            let p = ModelParams {
                delta: rng.gen_range(-12.0..0.0),
                kerr_u: rng.gen_range(2.0..12.0),
                pump_g: c(rng.gen_range(0.5..6.0), 0.0),
                hop_j: rng.gen_range(-12.0..0.0),
                loss_gamma: 1.0,
                loss_eta: rng.gen_range(0.2..2.0),
                drive_f: c(0.0, 0.0),
            };
            let mut liouv = Liouvillian::new(b.clone(), p).unwrap();
            let cfg = SolverConfig::default();
            let direct = solve_direct(&mut liouv, &cfg).unwrap();
            let iter_cfg = SolverConfig { method: SolveMethod::Iterative, ..cfg };
            let iterative = solve_iterative(&liouv, &iter_cfg, None).unwrap();
            assert!(iterative.converged, "iterative did not converge");
            let td = direct.rho.trace_distance(&iterative.rho).unwrap();
            assert!(td < 1e-8, "trace distance {td}");
        }
    }

    #[test]
    fn warm_start_reduces_iterations() {
        let b = basis(2, 6, 10);
        let liouv = Liouvillian::new(b.clone(), params(5.0)).unwrap();
        let cfg = SolverConfig { method: SolveMethod::Iterative, ..Default::default() };
        let cold = solve_iterative(&liouv, &cfg, None).unwrap();
        let warm = solve_iterative(&liouv, &cfg, Some(&cold.rho)).unwrap();
        assert!(warm.diagnostics.iterations <= cold.diagnostics.iterations);
    }

    #[test]
    fn identity_guess_converges_for_vacuum_ness() {
        let b = basis(1, 4, 4);
        let mut p = params(0.0);
        p.delta = 0.0;
        p.kerr_u = 0.0;
        p.hop_j = 0.0;
        let liouv = Liouvillian::new(b.clone(), p).unwrap();
        let cfg = SolverConfig { method: SolveMethod::Iterative, ..Default::default() };
        let guess = DensityMatrix::maximally_mixed(b.clone());
        let r = solve_iterative(&liouv, &cfg, Some(&guess)).unwrap();
        assert!(r.converged);
        let vac = DensityMatrix::vacuum(b);
        assert!(r.rho.trace_distance(&vac).unwrap() < 1e-8);
    }

    #[test]
    fn evolve_matches_analytic_decay() {
        // pure decay from |1><1|: occupancy e^{-gamma t}, relative error
        // checked at t = 1/gamma by capping the horizon there
        let b = basis(1, 2, 2);
        let p = ModelParams {
            delta: 0.0,
            kerr_u: 0.0,
            pump_g: c(0.0, 0.0),
            hop_j: 0.0,
            loss_gamma: 1.3,
            loss_eta: 0.0,
            drive_f: c(0.0, 0.0),
        };
        let liouv = Liouvillian::new(b.clone(), p).unwrap();
        let i1 = b.index_of(&[1]).unwrap();
        let mut m = Mat::<C>::zeros(b.dim(), b.dim());
        m[(i1, i1)] = c(1.0, 0.0);
        let rho0 = DensityMatrix::new(b.clone(), m).unwrap();
        let cfg = SolverConfig {
            method: SolveMethod::Evolve,
            evolve_horizon: 1.0 / p.loss_gamma,
            residual_tol: 1e-30, // forces integration to the horizon
            evolve_step_tol: 1e-10,
            ..Default::default()
        };
        let r = evolve_to_steady(&liouv, &rho0, &cfg).unwrap();
        let occ = r.rho.mat[(i1, i1)].re;
        let expect = (-1.0f64).exp();
        assert!(
            ((occ - expect) / expect).abs() < 1e-6,
            "occupancy {occ} vs {expect}"
        );
        assert!(r.diagnostics.trace_drift < 1e-9);
    }

    #[test]
    fn evolve_relaxes_to_vacuum_without_pump() {
        let b = basis(2, 3, 5);
        let mut p = params(0.0);
        p.loss_eta = 0.0;
        let liouv = Liouvillian::new(b.clone(), p).unwrap();
        let rho0 = DensityMatrix::maximally_mixed(b.clone());
        let cfg = SolverConfig {
            method: SolveMethod::Evolve,
            evolve_horizon: 20.0,
            residual_tol: 1e-12,
            ..Default::default()
        };
        let r = evolve_to_steady(&liouv, &rho0, &cfg).unwrap();
        let vac = DensityMatrix::vacuum(b);
        let f = crate::observables::fidelity(&r.rho, &vac).unwrap();
        assert!(f > 1.0 - 1e-8, "fidelity {f}");
    }

    #[test]
    fn cross_method_agreement_small_pair() {
        let b = basis(2, 6, 10);
        let p = params(5.0);
        let mut liouv = Liouvillian::new(b.clone(), p).unwrap();
        let cfg = SolverConfig::default();
        let direct = solve_direct(&mut liouv, &cfg).unwrap();
        let iterative = solve_iterative(&liouv, &cfg, None).unwrap();
        let evolve_cfg = SolverConfig {
            method: SolveMethod::Evolve,
            evolve_horizon: 100.0,
            residual_tol: 1e-8,
            ..Default::default()
        };
        let evolved =
            evolve_to_steady(&liouv, &DensityMatrix::vacuum(b.clone()), &evolve_cfg).unwrap();
        assert!(direct.rho.trace_distance(&iterative.rho).unwrap() < 1e-6);
        assert!(direct.rho.trace_distance(&evolved.rho).unwrap() < 1e-6);
        assert!(iterative.rho.trace_distance(&evolved.rho).unwrap() < 1e-6);
    }

    #[test]
    fn uniqueness_probe_different_initial_states() {
        use rand::SeedableRng;
        let b = basis(2, 4, 7);
        let p = params(3.0);
        let liouv = Liouvillian::new(b.clone(), p).unwrap();
        let cfg = SolverConfig {
            method: SolveMethod::Evolve,
            evolve_horizon: 200.0,
            residual_tol: 1e-9,
            ..Default::default()
        };
        use rand::Rng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let random_state = |rng: &mut rand_chacha::ChaCha8Rng| {
            let d = b.dim();
            let mut m = Mat::<C>::zeros(d, d);
            for i in 0..d {
                for j in 0..=i {
                    let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
                // shift to positive definite
                m[(i, i)] = c(m[(i, i)].re + d as f64, 0.0);
            }
            DensityMatrix::new(b.clone(), m).unwrap().hermitized_normalized().unwrap()
        };
        let r1 = evolve_to_steady(&liouv, &random_state(&mut rng), &cfg).unwrap();
        let r2 = evolve_to_steady(&liouv, &random_state(&mut rng), &cfg).unwrap();
        assert!(r1.rho.trace_distance(&r2.rho).unwrap() < 1e-6);
    }

    #[test]
    fn injection_preserves_observables() {
        let small = basis(2, 4, 8);
        let mut liouv = Liouvillian::new(small.clone(), params(3.0)).unwrap();
        let r = solve_direct(&mut liouv, &SolverConfig::default()).unwrap();
        let big = basis(2, 6, 12);
        let injected = inject_into(&r.rho, &big).unwrap();
        let occ_small: f64 = mean_occupancies(&r.rho).unwrap().iter().sum();
        let occ_big: f64 = mean_occupancies(&injected).unwrap().iter().sum();
        assert!((occ_small - occ_big).abs() < 1e-13);
        let s1 = von_neumann_entropy(&r.rho).unwrap();
        let s2 = von_neumann_entropy(&injected).unwrap();
        assert!((s1 - s2).abs() < 1e-10);
    }

    #[test]
    fn converge_cutoffs_trivial_at_zero_pump() {
        let lattice = LatticeSpec::pair();
        let p = params(0.0);
        let cfg = SolverConfig::default();
        let schedule = [
            TruncationSpec::new(2, 3),
            TruncationSpec::new(3, 5),
            TruncationSpec::new(4, 7),
        ];
        let (result, report) = converge_cutoffs(&lattice, &p, &cfg, &schedule, 1e-6).unwrap();
        assert!(report.observables_converged);
        assert_eq!(report.levels.len(), 2); // stops at the first comparison
        let occ: f64 = mean_occupancies(&result.rho).unwrap().iter().sum();
        assert!(occ < 1e-10);
    }

    #[test]
    fn converge_cutoffs_rejects_bad_schedule() {
        let lattice = LatticeSpec::pair();
        let p = params(1.0);
        let cfg = SolverConfig::default();
        let schedule = [TruncationSpec::new(4, 8), TruncationSpec::new(4, 9)];
        assert!(converge_cutoffs(&lattice, &p, &cfg, &schedule, 1e-3).is_err());
    }

    #[test]
    fn converged_pair_matches_across_methods() {
        // moderate pump, pair lattice: direct vs evolve oracle
        let b = basis(2, 6, 10);
        let p = params(5.0);
        let mut liouv = Liouvillian::new(b.clone(), p).unwrap();
        let direct = solve_direct(&mut liouv, &SolverConfig::default()).unwrap();
        assert!(direct.converged);
        let g1 = g1_correlation(&direct.rho, 0, 1).unwrap();
        assert!(g1.re < 0.0, "antiferromagnetic sign, g1 = {g1}");
    }
}
