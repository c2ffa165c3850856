//! Sweep execution: per-point NESS solution plus the full observable set,
//! warm-started along the axis, with order-preserving parallelism.

use crate::hilbert::FockBasis;
use crate::liouvillian::ModelParams;
use crate::observables::{self, DensityMatrix, ObservableRecord};
use crate::runner::config::{PhaseRule, RunConfig, SweepAxis};
use crate::steady_state::{self, SteadyStateResult};
use crate::{Complex64, Error, Result};
use std::sync::Arc;

type C = Complex64;

/// Occupancy below which g1 is reported as undefined rather than a ratio of
/// noise.
const G1_OCCUPANCY_FLOOR: f64 = 1e-12;

fn nan_c() -> C {
    C::new(f64::NAN, f64::NAN)
}

/// A failed point still produces a row; numeric columns are NaN.
fn failure_record(axis_value: f64, params: &ModelParams, n_sites: usize, err: &Error) -> ObservableRecord {
    ObservableRecord {
        axis_value,
        g_over_gamma: params.pump_g.re,
        f_over_gamma: params.drive_f,
        mean_occupancy: vec![f64::NAN; n_sites],
        g1: None,
        entropy: f64::NAN,
        negativity: f64::NAN,
        fidelity_ansatz: f64::NAN,
        alpha0: nan_c(),
        induced_coherence: nan_c(),
        residual: f64::NAN,
        status: format!("error: {err}"),
    }
}

/// Solve one parameter point and assemble its observable record. Returns
/// the record together with the state for warm-starting the next point.
pub fn evaluate_point(
    cfg: &RunConfig,
    params: &ModelParams,
    axis_value: f64,
    guess: Option<&DensityMatrix>,
) -> (ObservableRecord, Option<DensityMatrix>) {
    match solve_point(cfg, params, guess) {
        Ok(result) => {
            let record = assemble_record(cfg, params, axis_value, &result);
            (record, Some(result.rho))
        }
        Err(e) => (
            failure_record(axis_value, params, cfg.lattice.n_sites, &e),
            None,
        ),
    }
}

/// Assemble a record from an already-solved state (no additional solve).
pub fn evaluate_point_from_state(
    cfg: &RunConfig,
    params: &ModelParams,
    axis_value: f64,
    result: &SteadyStateResult,
) -> (ObservableRecord, Option<DensityMatrix>) {
    let record = assemble_record(cfg, params, axis_value, result);
    (record, Some(result.rho.clone()))
}

fn solve_point(
    cfg: &RunConfig,
    params: &ModelParams,
    guess: Option<&DensityMatrix>,
) -> Result<SteadyStateResult> {
    let target = *cfg.schedule.last().expect("schedule validated nonempty");
    if let Some(g) = guess {
        let basis = Arc::new(FockBasis::enumerate(cfg.lattice.clone(), target)?);
        let injected = if g.basis.trunc == target {
            g.clone()
        } else {
            steady_state::inject_into(g, &basis)?
        };
        return steady_state::solve_steady_state(basis, params, &cfg.solver, Some(&injected));
    }
    if cfg.schedule.len() == 1 {
        let basis = Arc::new(FockBasis::enumerate(cfg.lattice.clone(), target)?);
        steady_state::solve_steady_state(basis, params, &cfg.solver, None)
    } else {
        let (result, _report) = steady_state::converge_cutoffs(
            &cfg.lattice,
            params,
            &cfg.solver,
            &cfg.schedule,
            cfg.observable_tol,
        )?;
        Ok(result)
    }
}

fn assemble_record(
    cfg: &RunConfig,
    params: &ModelParams,
    axis_value: f64,
    result: &SteadyStateResult,
) -> ObservableRecord {
    let rho = &result.rho;
    let n = cfg.lattice.n_sites;
    let mut notes: Vec<String> = Vec::new();
    if !result.converged {
        notes.push("not_converged".into());
    }

    let mean_occupancy = observables::mean_occupancies(rho).unwrap_or_else(|e| {
        notes.push(format!("occupancy_failed: {e}"));
        vec![f64::NAN; n]
    });

    let g1 = if n >= 2 && mean_occupancy[0] > G1_OCCUPANCY_FLOOR {
        match observables::g1_correlation(rho, 0, 1) {
            Ok(v) => Some(v),
            Err(_) => {
                notes.push("g1_undefined".into());
                None
            }
        }
    } else {
        if n >= 2 {
            notes.push("g1_undefined".into());
        }
        None
    };

    let entropy = observables::von_neumann_entropy(rho).unwrap_or_else(|e| {
        notes.push(format!("entropy_failed: {e}"));
        f64::NAN
    });

    let negativity = if n >= 2 {
        match observables::negativity_with_budget(rho, 0, cfg.negativity_budget) {
            Ok(v) => v,
            Err(e) => {
                notes.push(format!("negativity_skipped: {e}"));
                f64::NAN
            }
        }
    } else {
        f64::NAN
    };

    let alpha0 = observables::extract_alpha0(rho).unwrap_or_else(|e| {
        notes.push(format!("alpha0_failed: {e}"));
        nan_c()
    });

    let fidelity_ansatz = if alpha0.re.is_finite() && (2..=3).contains(&n) {
        observables::build_ansatz(&rho.basis, alpha0, n)
            .and_then(|(_, ansatz)| observables::fidelity(rho, &ansatz))
            .unwrap_or_else(|e| {
                notes.push(format!("fidelity_failed: {e}"));
                f64::NAN
            })
    } else {
        f64::NAN
    };

    let induced_coherence = observables::induced_coherence(rho).unwrap_or_else(|e| {
        notes.push(format!("coherence_failed: {e}"));
        nan_c()
    });

    let status = if notes.is_empty() { "ok".to_string() } else { notes.join(";") };
    ObservableRecord {
        axis_value,
        g_over_gamma: params.pump_g.re,
        f_over_gamma: params.drive_f,
        mean_occupancy,
        g1,
        entropy,
        negativity,
        fidelity_ansatz,
        alpha0,
        induced_coherence,
        residual: result.residual,
        status,
    }
}

fn params_for_axis(cfg: &RunConfig, axis: SweepAxis, value: f64, phase: C) -> ModelParams {
    let mut p = cfg.params;
    match axis {
        SweepAxis::PumpG => p.pump_g = C::new(value, 0.0),
        SweepAxis::DriveFMagnitude => p.drive_f = phase * value,
    }
    p
}

/// Run the configured sweep: contiguous chunks of the axis go to worker
/// threads; within a chunk each point warm-starts from the previous one.
/// Record order matches axis order regardless of the worker count.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<ObservableRecord>> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("no [sweep] section in configuration".into()))?;
    let phase = match (sweep.axis, sweep.phase_rule) {
        (SweepAxis::DriveFMagnitude, PhaseRule::LockToAlpha0) => lock_phase(cfg)?,
        _ => C::new(1.0, 0.0),
    };
    run_axis(cfg, sweep.axis, &sweep.values, phase)
}

/// Drive-response sweep: fixes arg(F) so that conj(F) * alpha0 is real
/// positive, per the configured phase rule, then sweeps |F|.
pub fn run_drive_response(cfg: &RunConfig) -> Result<Vec<ObservableRecord>> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("no [sweep] section in configuration".into()))?;
    if sweep.axis != SweepAxis::DriveFMagnitude {
        return Err(Error::Config(
            "response command requires sweep axis drive_f_magnitude".into(),
        ));
    }
    let phase = match sweep.phase_rule {
        PhaseRule::LockToAlpha0 => lock_phase(cfg)?,
        PhaseRule::Fixed => {
            let f = cfg.params.drive_f;
            if f.norm() > 0.0 {
                f / f.norm()
            } else {
                C::new(1.0, 0.0)
            }
        }
    };
    run_axis(cfg, SweepAxis::DriveFMagnitude, &sweep.values, phase)
}

/// Solve the undriven problem and return the unit phase of alpha0.
fn lock_phase(cfg: &RunConfig) -> Result<C> {
    let mut p = cfg.params;
    p.drive_f = C::new(0.0, 0.0);
    let result = solve_point(cfg, &p, None)?;
    let alpha0 = observables::extract_alpha0(&result.rho)?;
    let m = alpha0.norm();
    if m < 1e-12 {
        return Err(Error::UndefinedObservable(
            "alpha0 vanishes; cannot lock the drive phase".into(),
        ));
    }
    Ok(alpha0 / m)
}

fn run_axis(
    cfg: &RunConfig,
    axis: SweepAxis,
    values: &[f64],
    phase: C,
) -> Result<Vec<ObservableRecord>> {
    let n_points = values.len();
    let workers = cfg.workers.max(1).min(n_points.max(1));
    let chunk_size = n_points.div_ceil(workers);
    let chunks: Vec<&[f64]> = values.chunks(chunk_size).collect();

    let run_chunk = |chunk: &[f64], offset: usize| -> Vec<ObservableRecord> {
        let mut out = Vec::with_capacity(chunk.len());
        let mut prev: Option<DensityMatrix> = None;
        for (i, &v) in chunk.iter().enumerate() {
            let _ = offset + i;
            let p = params_for_axis(cfg, axis, v, phase);
            let guess = if cfg.warm_start { prev.as_ref() } else { None };
            let (record, rho) = evaluate_point(cfg, &p, v, guess);
            prev = rho.or(prev);
            out.push(record);
        }
        out
    };

    if chunks.len() <= 1 {
        return Ok(chunks.first().map(|c| run_chunk(c, 0)).unwrap_or_default());
    }

    let results: Vec<Vec<ObservableRecord>> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        let mut offset = 0;
        for chunk in &chunks {
            let start = offset;
            offset += chunk.len();
            handles.push(scope.spawn(move || run_chunk(chunk, start)));
        }
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    Ok(results.into_iter().flatten().collect())
}
