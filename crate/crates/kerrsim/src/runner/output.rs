//! CSV and JSON emission with full-precision, byte-stable formatting.

use crate::observables::ObservableRecord;
use crate::runner::fit::FitResult;
use crate::steady_state::ConvergenceReport;
use crate::{Complex64, Error, Result};
use std::path::Path;

type C = Complex64;

/// Fixed CSV column order; site columns expand to the lattice size.
pub fn csv_header(n_sites: usize) -> Vec<String> {
    let mut cols = vec![
        "axis_value".to_string(),
        "G_over_gamma".to_string(),
        "F_over_gamma_re".to_string(),
        "F_over_gamma_im".to_string(),
    ];
    for s in 0..n_sites {
        cols.push(format!("n_mean_site{s}"));
    }
    cols.extend(
        [
            "g1_re",
            "g1_im",
            "entropy",
            "negativity",
            "fidelity_ansatz",
            "alpha0_re",
            "alpha0_im",
            "a1_re",
            "a1_im",
            "residual",
            "status",
        ]
        .map(String::from),
    );
    cols
}

/// 17 significant digits: round-trips any finite f64 exactly.
fn fmt(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    if s == "NaN" {
        return Ok(f64::NAN);
    }
    s.parse::<f64>()
        .map_err(|e| Error::Config(format!("bad numeric field `{s}`: {e}")))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// One row per record in the fixed column order. An undefined g1 is an
/// empty pair of fields.
pub fn write_csv(path: &Path, records: &[ObservableRecord], n_sites: usize) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    let wrap = |e: csv::Error| Error::Config(format!("CSV write to {}: {e}", path.display()));
    w.write_record(csv_header(n_sites)).map_err(wrap)?;
    for r in records {
        if r.mean_occupancy.len() != n_sites {
            return Err(Error::DimensionMismatch(format!(
                "record has {} site columns, lattice has {n_sites}",
                r.mean_occupancy.len()
            )));
        }
        let mut row = vec![
            fmt(r.axis_value),
            fmt(r.g_over_gamma),
            fmt(r.f_over_gamma.re),
            fmt(r.f_over_gamma.im),
        ];
        row.extend(r.mean_occupancy.iter().map(|&v| fmt(v)));
        match r.g1 {
            Some(g) => {
                row.push(fmt(g.re));
                row.push(fmt(g.im));
            }
            None => {
                row.push(String::new());
                row.push(String::new());
            }
        }
        row.extend([
            fmt(r.entropy),
            fmt(r.negativity),
            fmt(r.fidelity_ansatz),
            fmt(r.alpha0.re),
            fmt(r.alpha0.im),
            fmt(r.induced_coherence.re),
            fmt(r.induced_coherence.im),
            fmt(r.residual),
            r.status.clone(),
        ]);
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Read a CSV written by `write_csv` back into records (full precision).
pub fn read_csv(path: &Path) -> Result<Vec<ObservableRecord>> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::Reader::from_reader(file);
    let wrap = |e: csv::Error| Error::Config(format!("CSV read from {}: {e}", path.display()));
    let header = rdr.headers().map_err(wrap)?.clone();
    let n_sites = header.iter().filter(|h| h.starts_with("n_mean_site")).count();
    let expected = csv_header(n_sites);
    if header.iter().map(String::from).collect::<Vec<_>>() != expected {
        return Err(Error::Config(format!(
            "unexpected CSV columns in {}",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(wrap)?;
        let field = |i: usize| -> &str { row.get(i).unwrap_or("") };
        let mut occupancy = Vec::with_capacity(n_sites);
        for s in 0..n_sites {
            occupancy.push(parse_f64(field(4 + s))?);
        }
        let base = 4 + n_sites;
        let g1 = if field(base).is_empty() {
            None
        } else {
            Some(C::new(parse_f64(field(base))?, parse_f64(field(base + 1))?))
        };
        out.push(ObservableRecord {
            axis_value: parse_f64(field(0))?,
            g_over_gamma: parse_f64(field(1))?,
            f_over_gamma: C::new(parse_f64(field(2))?, parse_f64(field(3))?),
            mean_occupancy: occupancy,
            g1,
            entropy: parse_f64(field(base + 2))?,
            negativity: parse_f64(field(base + 3))?,
            fidelity_ansatz: parse_f64(field(base + 4))?,
            alpha0: C::new(parse_f64(field(base + 5))?, parse_f64(field(base + 6))?),
            induced_coherence: C::new(
                parse_f64(field(base + 7))?,
                parse_f64(field(base + 8))?,
            ),
            residual: parse_f64(field(base + 9))?,
            status: field(base + 10).to_string(),
        });
    }
    Ok(out)
}

/// JSON companion of a run: config echo, fits, convergence tables, versions.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RunSummary {
    pub command: String,
    pub config_echo: String,
    pub n_records: usize,
    pub n_failed: usize,
    pub fits: Vec<FitResult>,
    pub convergence: Option<ConvergenceReport>,
    pub deterministic: bool,
    pub version: String,
}

impl RunSummary {
    pub fn new(command: &str, config_echo: &str, records: &[ObservableRecord]) -> Self {
        Self {
            command: command.to_string(),
            config_echo: config_echo.to_string(),
            n_records: records.len(),
            n_failed: records.iter().filter(|r| r.status.starts_with("error:")).count(),
            fits: Vec::new(),
            convergence: None,
            deterministic: false,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

pub fn write_summary_json(path: &Path, summary: &RunSummary) -> Result<()> {
    let text = serde_json::to_string_pretty(summary)
        .map_err(|e| Error::Config(format!("summary serialization failed: {e}")))?;
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(axis: f64, g1: Option<C>) -> ObservableRecord {
        ObservableRecord {
            axis_value: axis,
            g_over_gamma: axis,
            f_over_gamma: C::new(0.25, -0.125),
            mean_occupancy: vec![1.0 / 3.0, 0.7071067811865476],
            g1,
            entropy: std::f64::consts::LN_2,
            negativity: 1e-3,
            fidelity_ansatz: 0.999,
            alpha0: C::new(0.112, -2.299),
            induced_coherence: C::new(f64::NAN, f64::NAN),
            residual: 3.3e-11,
            status: "ok".into(),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        let records = vec![
            record(2.0, Some(C::new(-0.331234567890123, 1e-17))),
            record(5.0, None),
        ];
        write_csv(&path, &records, 2).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in records.iter().zip(&back) {
            assert_eq!(a.axis_value, b.axis_value);
            assert_eq!(a.g1, b.g1);
            assert_eq!(a.mean_occupancy, b.mean_occupancy);
            assert_eq!(a.entropy, b.entropy);
            assert_eq!(a.alpha0, b.alpha0);
            assert_eq!(a.f_over_gamma, b.f_over_gamma);
            assert_eq!(a.residual, b.residual);
            assert_eq!(a.status, b.status);
            assert!(b.induced_coherence.re.is_nan());
        }
    }

    #[test]
    fn empty_record_list_gives_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_csv(&path, &[], 3).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("axis_value,G_over_gamma"));
        assert!(text.contains("n_mean_site2"));
        assert!(read_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn rewrites_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        let records = vec![record(2.0, Some(C::new(-0.3, 0.0)))];
        write_csv(&p1, &records, 2).unwrap();
        write_csv(&p2, &records, 2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn summary_counts_failures_and_echoes_config() {
        let mut bad = record(3.0, None);
        bad.status = "error: boom".into();
        let records = vec![record(2.0, None), bad];
        let summary = RunSummary::new("sweep", "[model]\ng_over_gamma = 5.0\n", &records);
        assert_eq!(summary.n_records, 2);
        assert_eq!(summary.n_failed, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.json");
        write_summary_json(&path, &summary).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["n_failed"], 1);
        assert!(v["config_echo"].as_str().unwrap().contains("g_over_gamma"));
    }

    #[test]
    fn mismatched_site_count_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let records = vec![record(2.0, None)]; // 2 site columns
        assert!(write_csv(&path, &records, 3).is_err());
    }
}
