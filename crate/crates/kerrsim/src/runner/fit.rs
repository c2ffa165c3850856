//! Power-law fits of asymptotic observable offsets on a log-log scale.

use crate::observables::ObservableRecord;
use crate::{Error, Result};

/// Minimum number of points for a meaningful slope and its error bar.
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitQuantity {
    /// |g1 + 1/3|: distance from the frustrated asymptote.
    G1Offset,
    /// |S - ln 6|: distance from the sixfold-mixture entropy.
    EntropyOffset,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct FitResult {
    pub quantity: FitQuantity,
    pub exponent: f64,
    /// Standard error of the fitted slope.
    pub uncertainty: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    pub n_points: usize,
}

fn offset_value(record: &ObservableRecord, quantity: FitQuantity) -> Option<f64> {
    match quantity {
        FitQuantity::G1Offset => record.g1.map(|g| (g.re + 1.0 / 3.0).abs()),
        FitQuantity::EntropyOffset => {
            if record.entropy.is_finite() {
                Some((record.entropy - 6.0f64.ln()).abs())
            } else {
                None
            }
        }
    }
}

/// Least-squares slope of log(offset) against log(axis value) over the
/// records whose axis value falls in `window` (inclusive) and whose status
/// begins with "ok".
pub fn fit_power_law(
    records: &[ObservableRecord],
    quantity: FitQuantity,
    window: (f64, f64),
) -> Result<FitResult> {
    if !(window.0 > 0.0 && window.1 > window.0) {
        return Err(Error::InvalidSpec(
            "fit window must satisfy 0 < min < max".into(),
        ));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in records {
        if r.axis_value < window.0 || r.axis_value > window.1 || !r.status.starts_with("ok") {
            continue;
        }
        let y = offset_value(r, quantity).ok_or_else(|| {
            Error::UndefinedObservable(format!(
                "record at axis {} lacks the fitted quantity",
                r.axis_value
            ))
        })?;
        if y <= 0.0 {
            return Err(Error::UndefinedObservable(format!(
                "nonpositive offset {y} at axis {}: asymptote crossed inside the window",
                r.axis_value
            )));
        }
        xs.push(r.axis_value.ln());
        ys.push(y.ln());
    }
    let n = xs.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::InvalidSpec(format!(
            "need at least {MIN_FIT_POINTS} points in the window, found {n}"
        )));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidSpec("degenerate fit: all axis values equal".into()));
    }
    let slope = sxy / sxx;
    let sse = (syy - slope * sxy).max(0.0);
    let uncertainty = if n > 2 { (sse / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(FitResult {
        quantity,
        exponent: slope,
        uncertainty,
        window,
        r_squared,
        n_points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Complex64;

    fn synthetic(axis: f64, g1_re: f64, entropy: f64) -> ObservableRecord {
        ObservableRecord {
            axis_value: axis,
            g_over_gamma: axis,
            f_over_gamma: Complex64::new(0.0, 0.0),
            mean_occupancy: vec![1.0, 1.0],
            g1: Some(Complex64::new(g1_re, 0.0)),
            entropy,
            negativity: 0.0,
            fidelity_ansatz: 1.0,
            alpha0: Complex64::new(1.0, 0.0),
            induced_coherence: Complex64::new(0.0, 0.0),
            residual: 1e-12,
            status: "ok".into(),
        }
    }

    #[test]
    fn exact_inverse_law_recovered() {
        // |g1 + 1/3| = 3/G  ->  exponent -1
        let records: Vec<_> = (1..=12)
            .map(|i| {
                let g = 10.0 + i as f64 * 3.0;
                synthetic(g, -1.0 / 3.0 + 3.0 / g, 6.0f64.ln())
            })
            .collect();
        let fit = fit_power_law(&records, FitQuantity::G1Offset, (10.0, 50.0)).unwrap();
        assert!((fit.exponent - (-1.0)).abs() < 1e-9, "exponent {}", fit.exponent);
        assert!(fit.uncertainty < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_power_law_recovered() {
        // S - ln 6 = -5 G^{-2.28}  ->  exponent -2.28
        let records: Vec<_> = (1..=10)
            .map(|i| {
                let g = 20.0 + i as f64 * 4.0;
                synthetic(g, -1.0 / 3.0, 6.0f64.ln() - 5.0 * g.powf(-2.28))
            })
            .collect();
        let fit = fit_power_law(&records, FitQuantity::EntropyOffset, (20.0, 60.0)).unwrap();
        assert!((fit.exponent - (-2.28)).abs() < 1e-9);
    }

    #[test]
    fn noisy_law_reports_uncertainty() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let records: Vec<_> = (1..=20)
            .map(|i| {
                let g = 10.0 + i as f64 * 2.0;
                let noise: f64 = 1.0 + 0.02 * rng.gen_range(-1.0..1.0);
                synthetic(g, -1.0 / 3.0 + noise * 2.0 / g, 6.0f64.ln())
            })
            .collect();
        let fit = fit_power_law(&records, FitQuantity::G1Offset, (10.0, 50.0)).unwrap();
        assert!((fit.exponent - (-1.0)).abs() < 0.05);
        assert!(fit.uncertainty > 0.0 && fit.uncertainty < 0.05);
        assert!(fit.r_squared > 0.99);
    }

    #[test]
    fn rejects_small_windows_and_crossed_asymptotes() {
        let records: Vec<_> = (1..=3)
            .map(|i| synthetic(10.0 * i as f64, -0.3, 1.0))
            .collect();
        assert!(fit_power_law(&records, FitQuantity::G1Offset, (5.0, 50.0)).is_err());
        let mut crossed: Vec<_> = (1..=6)
            .map(|i| synthetic(10.0 * i as f64, -0.3, 1.0))
            .collect();
        crossed[2].g1 = Some(Complex64::new(-1.0 / 3.0, 0.0));
        assert!(fit_power_law(&crossed, FitQuantity::G1Offset, (5.0, 70.0)).is_err());
        assert!(fit_power_law(&crossed, FitQuantity::G1Offset, (50.0, 5.0)).is_err());
    }

    #[test]
    fn skips_failed_rows() {
        let mut records: Vec<_> = (1..=8)
            .map(|i| {
                let g = 10.0 + i as f64 * 5.0;
                synthetic(g, -1.0 / 3.0 + 3.0 / g, 6.0f64.ln())
            })
            .collect();
        records[3].status = "error: solver blew up".into();
        records[3].g1 = None;
        let fit = fit_power_law(&records, FitQuantity::G1Offset, (10.0, 60.0)).unwrap();
        assert_eq!(fit.n_points, 7);
        assert!((fit.exponent - (-1.0)).abs() < 1e-9);
    }
}
