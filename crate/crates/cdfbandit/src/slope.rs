//! Log-log slope fitting for regret and error curves.

use crate::error::{HarnessError, Result};

/// Ordinary least-squares slope of `ln(value)` against `ln(round)`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(HarnessError::Slope("need at least 3 checkpoints".into()));
    }
    if points.iter().any(|(r, v)| !(*r > 0.0 && *v > 0.0)) {
        return Err(HarnessError::Slope(
            "rounds and values must be positive".into(),
        ));
    }
    if points.windows(2).any(|p| p[1].0 <= p[0].0) {
        return Err(HarnessError::Slope("rounds must increase".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(r, v)| (r.ln(), v.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Slope over checkpoints after dropping leading zero-regret entries.
pub fn checkpoint_slope(checkpoints: &[(usize, f64)]) -> Result<f64> {
    let points: Vec<(f64, f64)> = checkpoints
        .iter()
        .skip_while(|(_, v)| *v <= 0.0)
        .map(|(r, v)| (*r as f64, *v))
        .collect();
    fit_loglog_slope(&points)
}

/// Keeps rows at rounds `1, 2, 4, …`.
pub fn dyadic(points: impl IntoIterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    points
        .into_iter()
        .filter(|(r, _)| r.is_power_of_two())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(p: f64) -> Vec<(f64, f64)> {
        (0..12)
            .map(|k| {
                let r = f64::from(1u32 << k);
                (r, r.powf(p))
            })
            .collect()
    }

    #[test]
    fn recovers_exponents() {
        assert!((fit_loglog_slope(&curve(1.0)).unwrap() - 1.0).abs() < 1e-9);
        assert!((fit_loglog_slope(&curve(0.5)).unwrap() - 0.5).abs() < 1e-9);
        assert!((fit_loglog_slope(&curve(5.0 / 6.0)).unwrap() - 0.8333).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_loglog_slope(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(fit_loglog_slope(&[(1.0, 1.0), (2.0, 0.0), (4.0, 1.0)]).is_err());
        assert!(fit_loglog_slope(&[(1.0, 1.0), (1.0, 2.0), (4.0, 1.0)]).is_err());
    }

    #[test]
    fn skips_leading_zeros() {
        let cps = vec![(1, 0.0), (2, 0.0), (4, 4.0), (8, 8.0), (16, 16.0)];
        assert!((checkpoint_slope(&cps).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(
            dyadic(vec![(1, 1.0), (3, 1.0), (4, 2.0)]),
            vec![(1, 1.0), (4, 2.0)]
        );
    }
}
