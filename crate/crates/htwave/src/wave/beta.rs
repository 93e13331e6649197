//! The `s`-amplitude `beta_lambda` and its Fourier transform `B(w) = int beta(s) e^{iws} ds`.
//!
//! `beta_lambda(s) = 2^{3 d2 / 2 - 2} pi^{-(d1 + d2)/2} a_lambda(1/(4s)) s^{d1/2 + d2 - 2}`
//! is supported in `[1/12, 9/4]` (the image of the support `[1/9, 3]` of `a_lambda`).
//! For `d2 = 1` the Bessel factor is `sqrt(2/pi) cos`, so the `s`-integral of a kernel
//! piece collapses to `B` evaluated at `lambda (psi +- t v)`; [`BTable`] tabulates `B`
//! once per `lambda` by FFT and interpolates it with cubic Hermite pieces.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::special::cutoff::standard_bump;
use crate::special::quad::{oscillatory_quad, QuadOptions};
use crate::subordination::{ALambda, SubordinationOptions, A_SUPPORT};

/// Support `[1/(4 * 3), 1/(4 / 9)] = [1/12, 9/4]` of `beta_lambda`.
pub const BETA_SUPPORT: (f64, f64) = (1.0 / 12.0, 9.0 / 4.0);

/// `beta_lambda` for a group with center dimension `d2` and horizontal dimension `d1`.
#[derive(Debug, Clone)]
pub struct BetaLambda {
    pub lambda: f64,
    pub d1: usize,
    pub d2: usize,
    pub a: ALambda,
    constant: f64,
}

impl BetaLambda {
    /// Builds `beta_lambda` from `a_lambda` of the standard bump.
    pub fn new(lambda: f64, d1: usize, d2: usize) -> Result<Self> {
        let opts = SubordinationOptions::default();
        let a = ALambda::new(&standard_bump, lambda, &opts.quad)?;
        Ok(Self::from_a(a, d1, d2))
    }

    /// Wraps a precomputed `a_lambda`.
    pub fn from_a(a: ALambda, d1: usize, d2: usize) -> Self {
        let constant = 2f64.powf(1.5 * d2 as f64 - 2.0) * PI.powf(-((d1 + d2) as f64) / 2.0);
        Self { lambda: a.lambda, d1, d2, a, constant }
    }

    /// `beta_lambda(s)`, zero outside `(1/12, 9/4)`.
    pub fn eval(&self, s: f64) -> Complex64 {
        if !(s > BETA_SUPPORT.0 && s < BETA_SUPPORT.1) {
            return Complex64::new(0.0, 0.0);
        }
        let tau = 0.25 / s;
        if !(tau > A_SUPPORT.0 && tau < A_SUPPORT.1) {
            return Complex64::new(0.0, 0.0);
        }
        self.a.eval(tau) * (self.constant * s.powf(self.d1 as f64 / 2.0 + self.d2 as f64 - 2.0))
    }

    /// `B(w) = int beta(s) e^{iws} ds` by adaptive oscillatory quadrature (slow, accurate).
    pub fn fourier_direct(&self, w: f64, opts: &QuadOptions) -> Result<Complex64> {
        let sign = if w < 0.0 { -1.0 } else { 1.0 };
        let r = oscillatory_quad(|s| sign * s, |s| self.eval(s), BETA_SUPPORT.0, BETA_SUPPORT.1, w.abs(), opts)?;
        Ok(r.value)
    }
}

/// Tuning of [`BTable`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BTableOptions {
    /// FFT length (power of two).
    pub points: usize,
    /// Sample spacing in `s`.
    pub ds: f64,
    /// Entries with `|B|` below `trim_tol * max |B|` at both ends are dropped.
    pub trim_tol: f64,
}

impl Default for BTableOptions {
    fn default() -> Self {
        Self { points: 1 << 17, ds: 1.0 / 512.0, trim_tol: 1e-15 }
    }
}

/// Cubic Hermite table of `B(w)` on a uniform `w`-grid; zero outside the table.
#[derive(Debug, Clone)]
pub struct BTable {
    /// Left end of the table.
    pub w_min: f64,
    /// Spacing of the nodes.
    pub dw: f64,
    /// Per-interval polynomial coefficients `c0 + c1 f + c2 f^2 + c3 f^3`, `f in [0, 1)`.
    coeffs: Vec<[Complex64; 4]>,
    inv_dw: f64,
    /// `max |B|`.
    pub sup: f64,
    /// `max |B|` at the trimmed ends relative to `sup`.
    pub edge: f64,
}

impl BTable {
    /// Tabulates `B` by the trapezoid rule in `s` (exact to rounding for the smooth,
    /// compactly supported `beta`), evaluated at all `w` at once by FFT.
    pub fn new(beta: &BetaLambda, opts: &BTableOptions) -> Result<Self> {
        let n = opts.points;
        if !n.is_power_of_two() || n < 1024 {
            return Err(Error::InvalidArgument(format!("table length {n} must be a power of two >= 1024")));
        }
        if (n as f64) * opts.ds <= BETA_SUPPORT.1 {
            return Err(Error::InvalidArgument("table s-range does not cover the support of beta".into()));
        }
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        let mut d = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            let s = j as f64 * opts.ds;
            if s >= BETA_SUPPORT.1 {
                break;
            }
            let v = beta.eval(s) * opts.ds;
            b[j] = v;
            d[j] = v * Complex64::new(0.0, s);
        }
        let mut planner = FftPlanner::new();
        let inv = planner.plan_fft_inverse(n);
        inv.process(&mut b);
        inv.process(&mut d);
        let dw = 2.0 * PI / (n as f64 * opts.ds);
        // Reorder to w_m = m dw, m = -n/2 .. n/2 - 1.
        let half = n / 2;
        let order = |v: &[Complex64]| -> Vec<Complex64> { v[half..].iter().chain(&v[..half]).copied().collect() };
        let b = order(&b);
        let d = order(&d);
        let sup = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(sup > 0.0) {
            return Err(Error::InvalidArgument("beta_lambda vanishes identically".into()));
        }
        let thr = opts.trim_tol * sup;
        let big = |i: usize| b[i].norm() > thr || d[i].norm() * dw > thr;
        let first = (0..n).find(|&i| big(i)).unwrap_or(0).saturating_sub(1);
        let last = ((0..n).rev().find(|&i| big(i)).unwrap_or(n - 1) + 1).min(n - 1);
        let edge = b[first].norm().max(b[last].norm()) / sup;
        let mut coeffs = Vec::with_capacity(last - first);
        for i in first..last {
            let (p0, p1) = (b[i], b[i + 1]);
            let (m0, m1) = (d[i] * dw, d[i + 1] * dw);
            coeffs.push([p0, m0, 3.0 * (p1 - p0) - 2.0 * m0 - m1, 2.0 * (p0 - p1) + m0 + m1]);
        }
        Ok(Self { w_min: (first as f64 - half as f64) * dw, dw, coeffs, inv_dw: 1.0 / dw, sup, edge })
    }

    /// Right end of the table.
    pub fn w_max(&self) -> f64 {
        self.w_min + self.coeffs.len() as f64 * self.dw
    }

    /// `B(w)` (zero outside the table).
    #[inline]
    pub fn eval(&self, w: f64) -> Complex64 {
        self.eval_index((w - self.w_min) * self.inv_dw)
    }

    /// `B` at fractional table position `f = (w - w_min) / dw`.
    #[inline]
    pub(crate) fn eval_index(&self, f: f64) -> Complex64 {
        if !(f >= 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        let m = f as usize;
        match self.coeffs.get(m) {
            Some(c) => {
                let x = f - m as f64;
                c[0] + (c[1] + (c[2] + c[3] * x) * x) * x
            }
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub(crate) fn inv_dw(&self) -> f64 {
        self.inv_dw
    }

    /// Largest deviation of the table from direct quadrature at `count` spread-out
    /// points of the table range, relative to `max |B|`.
    pub fn check_against_direct(&self, beta: &BetaLambda, count: usize) -> Result<f64> {
        let opts = QuadOptions::default().with_rel_tol(1e-12).with_abs_tol(1e-14 * self.sup);
        let span = self.w_max() - self.w_min;
        let mut worst: f64 = 0.0;
        for i in 0..count {
            // Irrational offsets keep the samples off the nodes.
            let frac = ((i as f64 + 0.5) * 0.618_033_988_749_895).fract();
            let w = self.w_min + span * (0.5 + 0.5 * (2.0 * frac - 1.0) * 0.25);
            let direct = beta.fourier_direct(w, &opts)?;
            worst = worst.max((direct - self.eval(w)).norm() / self.sup);
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_matches_direct_quadrature() {
        let beta = BetaLambda::new(16.0, 2, 1).unwrap();
        let table = BTable::new(&beta, &BTableOptions::default()).unwrap();
        // The far field of B is set by the accuracy of the interpolated a_lambda inside
        // beta (a floor near 1e-7 of the peak), not by the table range.
        assert!(table.edge < 1e-6, "edge {:e}", table.edge);
        let err = table.check_against_direct(&beta, 24).unwrap();
        assert!(err < 1e-9, "table error {err:e}");
    }

    #[test]
    fn beta_vanishes_off_support() {
        let beta = BetaLambda::new(16.0, 2, 1).unwrap();
        for s in [0.0, 0.05, 1.0 / 12.0, 9.0 / 4.0, 3.0] {
            assert_eq!(beta.eval(s), Complex64::new(0.0, 0.0));
        }
        assert!(beta.eval(0.5).norm() > 0.0);
    }
}
