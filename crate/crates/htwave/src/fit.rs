//! Ordinary least-squares fits of log-log data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fitted line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (zero for an exact two-point fit).
    pub slope_stderr: f64,
    /// Half-width of the 95% confidence interval of the slope (Student t).
    pub slope_ci95: f64,
    pub points: usize,
}

fn t_quantile_975(dof: usize) -> f64 {
    const TABLE: [f64; 10] = [12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228];
    match dof {
        0 => f64::INFINITY,
        d if d <= 10 => TABLE[d - 1],
        d if d <= 30 => 2.042 + (2.228 - 2.042) * (30 - d) as f64 / 20.0,
        _ => 1.96,
    }
}

/// Least-squares line through `(x_i, y_i)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!("fit with {} x values and {} y values", x.len(), y.len())));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::Fit(format!("need at least 2 points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all abscissae coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (stderr, ci) = if n > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        let se = (rss / (nf - 2.0) / sxx).sqrt();
        (se, se * t_quantile_975(n - 2))
    } else {
        (0.0, 0.0)
    };
    Ok(LineFit { slope, intercept, slope_stderr: stderr, slope_ci95: ci, points: n })
}

/// Fits `log y = c + p log x` and returns the exponent fit; requires at least 3 points
/// and strictly positive data.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() < 3 {
        return Err(Error::Fit(format!("a power-law fit needs at least 3 points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit("power-law fit requires positive finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-1.5)).collect();
        let f = fit_power_law(&x, &y).unwrap();
        assert!((f.slope + 1.5).abs() < 1e-12);
        assert!(f.slope_stderr < 1e-12);
        assert!(fit_power_law(&x[..2], &y[..2]).is_err());
    }
}
