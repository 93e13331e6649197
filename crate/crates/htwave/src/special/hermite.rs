//! L²-normalized Hermite functions `h_k(x) = (2^k k! sqrt(pi))^{-1/2} H_k(x) e^{-x^2/2}`.

use crate::error::{Error, Result};

/// Largest supported order.
pub const HERMITE_MAX_ORDER: usize = 512;

/// `h_0(x), ..., h_kmax(x)` by the three-term recurrence
/// `h_{k+1} = sqrt(2/(k+1)) x h_k - sqrt(k/(k+1)) h_{k-1}`.
///
/// The Gaussian factor is applied last, in log-space, so large `|x|` does not
/// underflow to zero before the polynomial growth is accounted for.
pub fn hermite_all(kmax: usize, x: f64) -> Result<Vec<f64>> {
    if kmax > HERMITE_MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "Hermite order {kmax} exceeds the supported maximum {HERMITE_MAX_ORDER}"
        )));
    }
    Ok(hermite_all_unchecked(kmax, x))
}

pub(crate) fn hermite_all_unchecked(kmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    let mut log_scale = -0.5 * x * x;
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    let mut raw = Vec::with_capacity(kmax + 1);
    let mut scales = Vec::with_capacity(kmax + 1);
    raw.push(cur);
    scales.push(log_scale);
    for k in 0..kmax {
        let next = (2.0 / (k + 1) as f64).sqrt() * x * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            prev *= 1e-150;
            cur *= 1e-150;
            log_scale += 150.0 * std::f64::consts::LN_10;
        }
        raw.push(cur);
        scales.push(log_scale);
    }
    for k in 0..=kmax {
        let e = scales[k];
        out[k] = if e < -745.0 { 0.0 } else { raw[k] * e.exp() };
    }
    out
}

/// `h_k(x)`.
pub fn hermite(k: usize, x: f64) -> Result<f64> {
    Ok(hermite_all(k, x)?[k])
}

/// `h_k^mu(x) = (2 pi |mu|)^{1/4} h_k((2 pi |mu|)^{1/2} x)`.
pub fn hermite_rescaled(k: usize, mu_abs: f64, x: f64) -> Result<f64> {
    if !(mu_abs > 0.0) {
        return Err(Error::InvalidArgument(format!("|mu| = {mu_abs} must be positive")));
    }
    let c = 2.0 * std::f64::consts::PI * mu_abs;
    Ok(c.powf(0.25) * hermite(k, c.sqrt() * x)?)
}

/// All rescaled functions `h_0^mu .. h_kmax^mu` at `x`.
pub fn hermite_rescaled_all(kmax: usize, mu_abs: f64, x: f64) -> Result<Vec<f64>> {
    if !(mu_abs > 0.0) {
        return Err(Error::InvalidArgument(format!("|mu| = {mu_abs} must be positive")));
    }
    let c = 2.0 * std::f64::consts::PI * mu_abs;
    let f = c.powf(0.25);
    Ok(hermite_all(kmax, c.sqrt() * x)?.into_iter().map(|v| v * f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::quad::gauss_hermite_scaled;

    #[test]
    fn values() {
        assert!((hermite(0, 0.0).unwrap() - 0.7511255444649425).abs() < 1e-15);
        assert_eq!(hermite(1, 0.0).unwrap(), 0.0);
        assert!(hermite(513, 0.0).is_err());
        // h_2(x) = (2x^2 - 1) / sqrt(2) * h_0(x)
        let x = 0.7;
        let h0 = hermite(0, x).unwrap();
        assert!((hermite(2, x).unwrap() - (2.0 * x * x - 1.0) / 2f64.sqrt() * h0).abs() < 1e-15);
    }

    #[test]
    fn orthonormality_by_gauss_hermite() {
        let (nodes, weights) = gauss_hermite_scaled(40);
        let tab: Vec<Vec<f64>> = nodes.iter().map(|&x| hermite_all(20, x).unwrap()).collect();
        for j in 0..=20 {
            for k in 0..=20 {
                let s: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .enumerate()
                    .map(|(i, (_, &w))| w * tab[i][j] * tab[i][k])
                    .sum();
                let e = if j == k { 1.0 } else { 0.0 };
                assert!((s - e).abs() < 1e-10, "j={j} k={k} s={s}");
            }
        }
    }

    #[test]
    fn large_argument_is_finite_and_small() {
        let v = hermite_all(200, 40.0).unwrap();
        assert!(v.iter().all(|a| a.is_finite()));
        assert!(v[200].abs() < 1e-100);
        // The top order still has unit norm (trapezoid rule, spectrally accurate here).
        let h = 0.01;
        let n2: f64 = (-2600..=2600).map(|i| hermite(200, i as f64 * h).unwrap().powi(2) * h).sum();
        assert!((n2 - 1.0).abs() < 1e-10, "{n2}");
    }
}
