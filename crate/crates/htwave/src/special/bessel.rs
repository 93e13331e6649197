//! The normalized Bessel function `J_{d2}(s) = s^{-(d2-2)/2} J_{(d2-2)/2}(s)` and its
//! oscillatory split `J_{d2}(s) = e^{-is} w1(s) + e^{is} w2(s)` for large `s`.
//!
//! `J_{d2}` is (up to a constant) the Fourier transform of the surface measure
//! on the unit sphere of `R^{d2}`.
//!
//! Evaluation strategy:
//! * odd `d2` (half-integer order): closed forms via spherical Bessel functions,
//!   a power series for small arguments and upward recurrence otherwise;
//! * even `d2` (integer order): power series for `s < 2`, Miller's backward
//!   recurrence for `2 <= s <= 25`, and the Hankel expansion above.

use num_complex::Complex64;
use std::f64::consts::{FRAC_2_PI, PI};

use crate::error::{Error, Result};

/// Default number of terms kept in each of the Hankel series `P` and `Q`.
pub const DEFAULT_HANKEL_TERMS: usize = 12;
/// Smallest argument at which the split is defined.
pub const SPLIT_MIN_SIGMA: f64 = 2.0;
/// Switch from backward recurrence to the Hankel expansion (integer order).
pub const HANKEL_CROSSOVER: f64 = 25.0;
const SERIES_CROSSOVER: f64 = 2.0;

/// Order `nu = (d2 - 2) / 2` of the Bessel function behind `J_{d2}`.
pub fn order(d2: usize) -> f64 {
    (d2 as f64 - 2.0) / 2.0
}

/// `J_{d2}(sigma) = sigma^{-nu} J_nu(sigma)`, `nu = (d2 - 2)/2`.
pub fn bessel_script(d2: usize, sigma: f64) -> Result<f64> {
    if d2 == 0 {
        return Err(Error::InvalidArgument("d2 must be >= 1".into()));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma = {sigma} must be finite and >= 0")));
    }
    Ok(if d2 % 2 == 1 { script_half_integer(d2, sigma) } else { script_integer((d2 / 2 - 1) as u32, sigma) })
}

fn script_half_integer(d2: usize, sigma: f64) -> f64 {
    let c = FRAC_2_PI.sqrt();
    if d2 == 1 {
        return c * sigma.cos();
    }
    // nu = n + 1/2 with n = (d2 - 3)/2; J_{d2} = sqrt(2/pi) sigma^{-n} j_n(sigma).
    let n = (d2 - 3) / 2;
    c * spherical_scaled(n, sigma)
}

/// `sigma^{-n} j_n(sigma)` for the spherical Bessel function `j_n`.
fn spherical_scaled(n: usize, sigma: f64) -> f64 {
    if n == 0 {
        return if sigma < 1e-4 {
            1.0 - sigma * sigma / 6.0 + sigma.powi(4) / 120.0
        } else {
            sigma.sin() / sigma
        };
    }
    if sigma < 2.0 + n as f64 {
        // sum_k (-sigma^2/2)^k / (k! (2n + 2k + 1)!!)
        let mut df = 1.0;
        for m in (1..=2 * n + 1).step_by(2) {
            df *= m as f64;
        }
        let x = -0.5 * sigma * sigma;
        let mut term = 1.0 / df;
        let mut sum = term;
        for k in 1..200 {
            term *= x / (k as f64 * (2 * n + 2 * k + 1) as f64);
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    let (s, c) = sigma.sin_cos();
    let mut jm = s / sigma;
    let mut j = s / (sigma * sigma) - c / sigma;
    for m in 1..n {
        let next = (2 * m + 1) as f64 / sigma * j - jm;
        jm = j;
        j = next;
    }
    j / sigma.powi(n as i32)
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

fn script_integer(nu: u32, sigma: f64) -> f64 {
    if sigma < SERIES_CROSSOVER {
        // sum_k (-sigma^2/4)^k / (k! (k + nu)! 2^nu)
        let x = -0.25 * sigma * sigma;
        let mut term = 1.0 / (factorial(nu) * 2f64.powi(nu as i32));
        let mut sum = term;
        for k in 1..100 {
            term *= x / (k as f64 * (k + nu as usize) as f64);
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else if sigma <= HANKEL_CROSSOVER {
        bessel_j_miller(nu, sigma) / sigma.powi(nu as i32)
    } else {
        let (p, q) = hankel_pq(nu as f64, sigma, 2 * DEFAULT_HANKEL_TERMS);
        let chi = sigma - nu as f64 * PI / 2.0 - PI / 4.0;
        (2.0 / (PI * sigma)).sqrt() * (p * chi.cos() - q * chi.sin()) / sigma.powi(nu as i32)
    }
}

/// `J_nu(sigma)` for integer `nu` by Miller's backward recurrence, normalized with
/// `J_0 + 2 sum_k J_{2k} = 1`.
pub fn bessel_j_miller(nu: u32, sigma: f64) -> f64 {
    let start = {
        let base = sigma.max(nu as f64) + 30.0 + (40.0 * sigma.max(1.0)).sqrt();
        let n = base.ceil() as usize;
        n + (n % 2)
    };
    let mut jp1 = 0.0_f64;
    let mut j = 1e-30_f64;
    let mut norm = 0.0_f64;
    let mut target = if start == nu as usize { j } else { 0.0 };
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / sigma * j - jp1;
        jp1 = j;
        j = jm1;
        // j now holds J_{k-1}
        let idx = k - 1;
        if idx == nu as usize {
            target = j;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e200 {
            j *= 1e-200;
            jp1 *= 1e-200;
            norm *= 1e-200;
            target *= 1e-200;
        }
    }
    norm += j;
    target / norm
}

/// Hankel coefficients `a_k(nu) = prod_{j=1}^k (4nu^2 - (2j-1)^2) / (k! 8^k)`, and the sums
/// `P = sum_m (-1)^m a_{2m} s^{-2m}`, `Q = sum_m (-1)^m a_{2m+1} s^{-2m-1}` over `k < terms`.
fn hankel_pq(nu: f64, sigma: f64, terms: usize) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let mut a = 1.0;
    let mut p = 1.0;
    let mut q = 0.0;
    for k in 1..terms {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (k as f64 * 8.0 * sigma);
        if a == 0.0 {
            break;
        }
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
    }
    (p, q)
}

/// Amplitudes `(w1, w2)` of the split `J_{d2}(s) = e^{-is} w1(s) + e^{is} w2(s)`.
///
/// `w2(s) = 1/2 sqrt(2/pi) s^{-nu-1/2} e^{-i(nu pi/2 + pi/4)} (P + iQ)` with the Hankel
/// sums truncated after `m` terms each, and `w1 = conj(w2)`. For odd `d2` the series
/// terminate and the split is exact.
pub fn bessel_split_m(d2: usize, sigma: f64, m: usize) -> Result<(Complex64, Complex64)> {
    if d2 == 0 {
        return Err(Error::InvalidArgument("d2 must be >= 1".into()));
    }
    if !(sigma >= SPLIT_MIN_SIGMA) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Bessel split is defined for sigma >= {SPLIT_MIN_SIGMA}, got {sigma}"
        )));
    }
    let nu = order(d2);
    let (p, q) = hankel_pq(nu, sigma, 2 * m.max(1));
    let theta = nu * PI / 2.0 + PI / 4.0;
    let amp = 0.5 * FRAC_2_PI.sqrt() * sigma.powf(-nu - 0.5);
    let w2 = Complex64::from_polar(amp, -theta) * Complex64::new(p, q);
    Ok((w2.conj(), w2))
}

/// [`bessel_split_m`] with [`DEFAULT_HANKEL_TERMS`].
pub fn bessel_split(d2: usize, sigma: f64) -> Result<(Complex64, Complex64)> {
    bessel_split_m(d2, sigma, DEFAULT_HANKEL_TERMS)
}

/// Configuration of the asymptotic split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselSplit {
    pub d2: usize,
    /// Smallest argument at which the split is used.
    pub sigma0: f64,
    /// Terms kept in each Hankel series.
    pub terms: usize,
}

impl BesselSplit {
    pub fn new(d2: usize) -> Self {
        Self { d2, sigma0: SPLIT_MIN_SIGMA, terms: DEFAULT_HANKEL_TERMS }
    }

    pub fn amplitudes(&self, sigma: f64) -> Result<(Complex64, Complex64)> {
        if sigma < self.sigma0 {
            return Err(Error::InvalidArgument(format!("sigma {sigma} below crossover {}", self.sigma0)));
        }
        bessel_split_m(self.d2, sigma, self.terms)
    }

    /// `e^{-is} w1(s) + e^{is} w2(s)`.
    pub fn reconstruct(&self, sigma: f64) -> Result<f64> {
        let (w1, w2) = self.amplitudes(sigma)?;
        let e = Complex64::from_polar(1.0, sigma);
        Ok((e.conj() * w1 + e * w2).re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `J_n(s) = (1/pi) int_0^pi cos(n t - s sin t) dt`; the trapezoid rule is
    /// spectrally accurate for this periodic integrand.
    fn j_integral(n: u32, s: f64) -> f64 {
        // The integrand oscillates with frequency ~s; resolve it comfortably.
        let m = 4000 + 4 * s as usize;
        let h = PI / m as f64;
        let mut acc = 0.0;
        for i in 0..=m {
            let t = i as f64 * h;
            let w = if i == 0 || i == m { 0.5 } else { 1.0 };
            acc += w * (n as f64 * t - s * t.sin()).cos();
        }
        acc * h / PI
    }

    #[test]
    fn closed_forms() {
        assert!((bessel_script(1, 0.0).unwrap() - 0.7978845608028654).abs() < 1e-15);
        assert!(bessel_script(3, PI).unwrap().abs() < 1e-16);
        assert!(bessel_script(2, 2.404825557695773).unwrap().abs() < 1e-10);
        for &s in &[0.0f64, 0.3, 1.7, 2.5, 7.0, 30.0, 400.0] {
            let v = bessel_script(3, s).unwrap();
            let e = if s == 0.0 { 1.0 } else { s.sin() / s };
            assert!((v - FRAC_2_PI.sqrt() * e).abs() < 1e-14, "s={s}");
        }
    }

    #[test]
    fn integer_order_against_integral_representation() {
        for nu in 0..4u32 {
            for &s in &[0.5f64, 1.9, 2.1, 5.0, 11.0, 24.9, 25.1, 60.0, 300.0, 1e4] {
                let expected = j_integral(nu, s) / s.powi(nu as i32);
                let got = bessel_script(2 * nu as usize + 2, s).unwrap();
                let scale = (1.0 / s.powf(nu as f64 + 0.5)).min(1.0);
                assert!((got - expected).abs() <= 1e-12 * scale, "nu={nu} s={s} got={got} exp={expected}");
            }
        }
    }

    #[test]
    fn half_integer_higher_order() {
        // j_1(s) = sin s / s^2 - cos s / s, so J_5(s) = sqrt(2/pi) j_1(s)/s.
        for &s in &[0.2f64, 2.9, 3.1, 10.0, 100.0] {
            let j1 = s.sin() / (s * s) - s.cos() / s;
            let v = bessel_script(5, s).unwrap();
            assert!((v - FRAC_2_PI.sqrt() * j1 / s).abs() < 1e-14 * (1.0 + 1.0 / s), "s={s}");
        }
    }

    #[test]
    fn split_examples() {
        let (w1, w2) = bessel_split(1, 5.0).unwrap();
        let c = 1.0 / (2.0 * PI).sqrt();
        assert!((w1 - c).norm() < 1e-15 && (w2 - c).norm() < 1e-15);
        let sp = BesselSplit { d2: 2, sigma0: 2.0, terms: 10 };
        let s = 50.0;
        let exact = bessel_script(2, s).unwrap();
        assert!(((sp.reconstruct(s).unwrap() - exact) / exact).abs() < 1e-8);
        let (w1, _) = bessel_split(3, 10.0).unwrap();
        assert!(w1.norm() <= 2.0 / 10.0);
        assert!(bessel_split(2, 1.0).is_err());
    }
}
