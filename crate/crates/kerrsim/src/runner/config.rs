//! Configuration loading: a flat TOML file with rates in units of gamma
//! (keys suffixed `_over_gamma`), plus a raw-units mode for gamma = 0 edge
//! cases. Command-line overrides are applied to the parsed tree before
//! deserialization.

use crate::hilbert::{LatticeSpec, TruncationSpec};
use crate::liouvillian::ModelParams;
use crate::steady_state::{SolveMethod, SolverConfig};
use crate::{Complex64, Error, Result};
use serde::Deserialize;
use std::path::Path;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    PumpG,
    DriveFMagnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseRule {
    Fixed,
    LockToAlpha0,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub phase_rule: PhaseRule,
}

/// Fully resolved run configuration (internal units: gamma = 1 unless the
/// file selects raw units).
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub lattice: LatticeSpec,
    pub params: ModelParams,
    pub schedule: Vec<TruncationSpec>,
    pub solver: SolverConfig,
    /// Cutoff-convergence tolerance on observables.
    pub observable_tol: f64,
    pub sweep: Option<SweepSpec>,
    pub spinref: Option<SpinRefConfig>,
    pub warm_start: bool,
    /// Element budget of the embedded space used for negativity.
    pub negativity_budget: usize,
    pub workers: usize,
    pub deterministic: bool,
    /// Exact text of the parsed configuration after overrides; echoed into
    /// the output summary for reproducibility.
    pub echo: String,
}

#[derive(Debug, Clone, serde::Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinRefConfig {
    pub kind: String,
    pub n_spins: usize,
    #[serde(default)]
    pub bonds: Vec<(usize, usize)>,
    #[serde(default)]
    pub j_ising: f64,
    #[serde(default)]
    pub h_field: f64,
    #[serde(default)]
    pub h_z: f64,
    #[serde(default)]
    pub j_xy: f64,
    #[serde(default = "one")]
    pub eta_x: f64,
    #[serde(default = "one")]
    pub eta_y: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRoot {
    #[serde(default = "default_units")]
    units: String,
    lattice: FileLattice,
    #[serde(default)]
    model: toml::Table,
    truncation: FileTruncation,
    #[serde(default)]
    solver: FileSolver,
    #[serde(default)]
    convergence: FileConvergence,
    sweep: Option<FileSweep>,
    spinref: Option<SpinRefConfig>,
}

fn default_units() -> String {
    "gamma".into()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileLattice {
    n_sites: usize,
    edges: Option<Vec<(usize, usize)>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileTruncation {
    /// Strictly increasing list of (n_max_per_mode, n_max_total) pairs.
    schedule: Vec<(u32, u32)>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileSolver {
    method: Option<String>,
    residual_tol: Option<f64>,
    max_iterations: Option<usize>,
    evolve_horizon: Option<f64>,
    evolve_step_tol: Option<f64>,
    direct_dim_budget: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConvergence {
    observable_tol: f64,
    #[serde(default = "default_neg_budget")]
    negativity_budget: usize,
}

impl Default for FileConvergence {
    fn default() -> Self {
        Self {
            observable_tol: 1e-3,
            negativity_budget: default_neg_budget(),
        }
    }
}

fn default_neg_budget() -> usize {
    40_000_000
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSweep {
    axis: SweepAxis,
    values: Vec<f64>,
    #[serde(default = "default_phase_rule")]
    phase_rule: PhaseRule,
    #[serde(default = "default_true")]
    warm_start: bool,
}

fn default_phase_rule() -> PhaseRule {
    PhaseRule::Fixed
}

fn default_true() -> bool {
    true
}

fn get_f64(table: &toml::Table, key: &str, default: f64) -> Result<f64> {
    match table.get(key) {
        None => Ok(default),
        Some(toml::Value::Float(v)) => Ok(*v),
        Some(toml::Value::Integer(v)) => Ok(*v as f64),
        Some(other) => Err(Error::Config(format!(
            "model key `{key}` must be a number, got {other}"
        ))),
    }
}

fn check_model_keys(table: &toml::Table, allowed: &[&str]) -> Result<()> {
    for k in table.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::Config(format!(
                "unknown model key `{k}` (allowed: {})",
                allowed.join(", ")
            )));
        }
    }
    Ok(())
}

fn parse_model(units: &str, table: &toml::Table) -> Result<ModelParams> {
    let params = match units {
        "gamma" => {
            check_model_keys(
                table,
                &[
                    "delta_over_gamma",
                    "u_over_gamma",
                    "g_over_gamma",
                    "g_over_gamma_im",
                    "j_over_gamma",
                    "eta_over_gamma",
                    "f_over_gamma_re",
                    "f_over_gamma_im",
                ],
            )?;
            ModelParams {
                delta: get_f64(table, "delta_over_gamma", -10.0)?,
                kerr_u: get_f64(table, "u_over_gamma", 10.0)?,
                pump_g: C::new(
                    get_f64(table, "g_over_gamma", 0.0)?,
                    get_f64(table, "g_over_gamma_im", 0.0)?,
                ),
                hop_j: get_f64(table, "j_over_gamma", -10.0)?,
                loss_gamma: 1.0,
                loss_eta: get_f64(table, "eta_over_gamma", 1.0)?,
                drive_f: C::new(
                    get_f64(table, "f_over_gamma_re", 0.0)?,
                    get_f64(table, "f_over_gamma_im", 0.0)?,
                ),
            }
        }
        "raw" => {
            check_model_keys(
                table,
                &["delta", "u", "g", "g_im", "j", "gamma", "eta", "f_re", "f_im"],
            )?;
            ModelParams {
                delta: get_f64(table, "delta", 0.0)?,
                kerr_u: get_f64(table, "u", 0.0)?,
                pump_g: C::new(get_f64(table, "g", 0.0)?, get_f64(table, "g_im", 0.0)?),
                hop_j: get_f64(table, "j", 0.0)?,
                loss_gamma: get_f64(table, "gamma", 0.0)?,
                loss_eta: get_f64(table, "eta", 0.0)?,
                drive_f: C::new(get_f64(table, "f_re", 0.0)?, get_f64(table, "f_im", 0.0)?),
            }
        }
        other => {
            return Err(Error::Config(format!(
                "units must be \"gamma\" or \"raw\", got \"{other}\""
            )))
        }
    };
    params.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(params)
}

fn parse_method(s: &str) -> Result<SolveMethod> {
    match s {
        "direct" => Ok(SolveMethod::Direct),
        "iterative" => Ok(SolveMethod::Iterative),
        "evolve" => Ok(SolveMethod::Evolve),
        other => Err(Error::Config(format!(
            "unknown solver method \"{other}\" (direct, iterative, evolve)"
        ))),
    }
}

/// Apply one `key=value` override to the parsed tree. Keys are dotted paths
/// into tables; values are parsed as TOML literals (numbers, booleans,
/// quoted strings, arrays), falling back to a bare string.
pub fn apply_override(root: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not key=value")))?;
    let parsed: toml::Value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(t) => t.get("v").cloned().expect("just inserted"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::Config(format!("override path `{path}` is malformed")));
    }
    let mut node = root;
    for seg in &segments[..segments.len() - 1] {
        node = node
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                Error::Config(format!("override path `{path}` crosses a non-table value"))
            })?;
    }
    node.insert(segments[segments.len() - 1].to_string(), parsed);
    Ok(())
}

impl RunConfig {
    pub fn from_file(
        path: &Path,
        overrides: &[String],
        solver_flag: Option<&str>,
        workers: usize,
        deterministic: bool,
    ) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_str(&text, overrides, solver_flag, workers, deterministic)
    }

    pub fn from_str(
        text: &str,
        overrides: &[String],
        solver_flag: Option<&str>,
        workers: usize,
        deterministic: bool,
    ) -> Result<Self> {
        let mut tree: toml::Table = text
            .parse()
            .map_err(|e| Error::Config(format!("TOML parse error: {e}")))?;
        for ov in overrides {
            apply_override(&mut tree, ov)?;
        }
        let echo = toml::to_string_pretty(&tree)
            .map_err(|e| Error::Config(format!("config re-serialization failed: {e}")))?;
        let root: FileRoot = tree
            .try_into()
            .map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;

        let lattice = match root.lattice.edges {
            Some(edges) => LatticeSpec::new(root.lattice.n_sites, edges),
            None => LatticeSpec::default_for(root.lattice.n_sites),
        }
        .map_err(|e| Error::Config(e.to_string()))?;

        let params = parse_model(&root.units, &root.model)?;

        if root.truncation.schedule.is_empty() {
            return Err(Error::Config("truncation schedule is empty".into()));
        }
        let schedule: Vec<TruncationSpec> = root
            .truncation
            .schedule
            .iter()
            .map(|&(a, b)| TruncationSpec::new(a, b))
            .collect();
        for w in schedule.windows(2) {
            if w[1].n_max_per_mode <= w[0].n_max_per_mode
                || w[1].n_max_total <= w[0].n_max_total
            {
                return Err(Error::Config(
                    "truncation schedule must be strictly increasing in both cutoffs".into(),
                ));
            }
        }

        let defaults = SolverConfig::default();
        let method = match solver_flag {
            Some(s) => parse_method(s)?,
            None => match &root.solver.method {
                Some(s) => parse_method(s)?,
                None => defaults.method,
            },
        };
        let solver = SolverConfig {
            method,
            residual_tol: root.solver.residual_tol.unwrap_or(defaults.residual_tol),
            max_iterations: root.solver.max_iterations.unwrap_or(defaults.max_iterations),
            evolve_horizon: root.solver.evolve_horizon.unwrap_or(defaults.evolve_horizon),
            evolve_step_tol: root.solver.evolve_step_tol.unwrap_or(defaults.evolve_step_tol),
            direct_dim_budget: root
                .solver
                .direct_dim_budget
                .unwrap_or(defaults.direct_dim_budget),
        };
        solver.validate().map_err(|e| Error::Config(e.to_string()))?;

        let (sweep, warm_start) = match root.sweep {
            Some(s) => {
                if s.values.is_empty() || s.values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config(
                        "sweep values must be a nonempty list of finite numbers".into(),
                    ));
                }
                (
                    Some(SweepSpec {
                        axis: s.axis,
                        values: s.values,
                        phase_rule: s.phase_rule,
                    }),
                    s.warm_start,
                )
            }
            None => (None, true),
        };

        if root.convergence.observable_tol <= 0.0 {
            return Err(Error::Config("observable_tol must be positive".into()));
        }

        Ok(RunConfig {
            lattice,
            params,
            schedule,
            solver,
            observable_tol: root.convergence.observable_tol,
            sweep,
            spinref: root.spinref,
            warm_start,
            negativity_budget: root.convergence.negativity_budget,
            workers: if deterministic { 1 } else { workers.max(1) },
            deterministic,
            echo,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[lattice]
n_sites = 2

[model]
g_over_gamma = 5.0

[truncation]
schedule = [[6, 10]]
"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::from_str(BASE, &[], None, 1, false).unwrap();
        assert_eq!(cfg.lattice.n_sites, 2);
        assert_eq!(cfg.params.delta, -10.0);
        assert_eq!(cfg.params.kerr_u, 10.0);
        assert_eq!(cfg.params.hop_j, -10.0);
        assert_eq!(cfg.params.loss_gamma, 1.0);
        assert_eq!(cfg.params.loss_eta, 1.0);
        assert_eq!(cfg.params.pump_g.re, 5.0);
        assert_eq!(cfg.solver.method, SolveMethod::Direct);
        assert!(cfg.warm_start);
    }

    #[test]
    fn overrides_apply_with_dotted_paths() {
        let ovs = vec![
            "model.g_over_gamma=30".to_string(),
            "solver.method=\"iterative\"".to_string(),
            "truncation.schedule=[[4, 6], [5, 8]]".to_string(),
        ];
        let cfg = RunConfig::from_str(BASE, &ovs, None, 1, false).unwrap();
        assert_eq!(cfg.params.pump_g.re, 30.0);
        assert_eq!(cfg.solver.method, SolveMethod::Iterative);
        assert_eq!(cfg.schedule.len(), 2);
        assert_eq!(cfg.schedule[1].n_max_total, 8);
    }

    #[test]
    fn solver_flag_beats_file() {
        let cfg = RunConfig::from_str(BASE, &[], Some("evolve"), 1, false).unwrap();
        assert_eq!(cfg.solver.method, SolveMethod::Evolve);
    }

    #[test]
    fn raw_units_allow_zero_gamma() {
        let text = r#"
units = "raw"

[lattice]
n_sites = 1

[model]
delta = 1.0
eta = 0.5

[truncation]
schedule = [[4, 4]]
"#;
        let cfg = RunConfig::from_str(text, &[], None, 1, false).unwrap();
        assert_eq!(cfg.params.loss_gamma, 0.0);
        assert_eq!(cfg.params.loss_eta, 0.5);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_schedules() {
        let bad_key = BASE.replace("g_over_gamma", "g_over_gama");
        assert!(RunConfig::from_str(&bad_key, &[], None, 1, false).is_err());
        let ovs = vec!["truncation.schedule=[[6, 10], [6, 12]]".to_string()];
        assert!(RunConfig::from_str(BASE, &ovs, None, 1, false).is_err());
        assert!(RunConfig::from_str(BASE, &["noequals".into()], None, 1, false).is_err());
        assert!(RunConfig::from_str(BASE, &[], Some("magic"), 1, false).is_err());
    }

    #[test]
    fn deterministic_forces_single_worker() {
        let cfg = RunConfig::from_str(BASE, &[], None, 8, true).unwrap();
        assert_eq!(cfg.workers, 1);
        assert!(cfg.deterministic);
    }

    #[test]
    fn echo_reflects_overrides() {
        let ovs = vec!["model.g_over_gamma=12.5".to_string()];
        let cfg = RunConfig::from_str(BASE, &ovs, None, 1, false).unwrap();
        assert!(cfg.echo.contains("12.5"));
    }
}
