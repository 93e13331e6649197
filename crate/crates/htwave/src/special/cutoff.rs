//! Smooth cutoffs and dyadic partitions of unity.
//!
//! Every cutoff is assembled from the smooth step
//! `S(x) = h(x) / (h(x) + h(1 - x))`, `h(x) = exp(-1/x)` for `x > 0`,
//! which is `0` for `x <= 0`, `1` for `x >= 1`, and satisfies `S(x) + S(1 - x) = 1`.
//! The last identity makes the partitions below exact up to rounding.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Identifier of the mollifier family, recorded in output metadata.
pub const MOLLIFIER_ID: &str = "exp-step-v1: S(x)=h(x)/(h(x)+h(1-x)), h(x)=exp(-1/x)";

/// Smooth step from 0 (at `x <= 0`) to 1 (at `x >= 1`).
#[inline]
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

/// Inner plateau edge of `zeta_0`.
pub const ZETA0_PLATEAU: f64 = 9.0 / 16.0;

/// `zeta_0`: even, `1` on `[-9/16, 9/16]`, supported in `(-1, 1)`.
#[inline]
pub fn zeta0(s: f64) -> f64 {
    smooth_step((1.0 - s.abs()) / (1.0 - ZETA0_PLATEAU))
}

/// `zeta_1(s) = zeta_0(s/2) - zeta_0(s)`, supported in `9/16 < |s| < 2`.
#[inline]
pub fn zeta1(s: f64) -> f64 {
    zeta0(0.5 * s) - zeta0(s)
}

/// `zeta_j(s) = zeta_1(2^{1-j} s)` for `j >= 1`; `j = 0` gives `zeta_0`.
///
/// `sum_{j >= 0} zeta_j = 1` telescopes exactly.
pub fn zeta(j: u32, s: f64) -> f64 {
    if j == 0 {
        zeta0(s)
    } else {
        zeta1(s * 2f64.powi(1 - j as i32))
    }
}

/// Plateau half-width `3 pi / 8` of `eta_0`.
pub const ETA0_PLATEAU: f64 = 3.0 * PI / 8.0;
/// Support half-width `5 pi / 8` of `eta_0`.
pub const ETA0_SUPPORT: f64 = 5.0 * PI / 8.0;

/// `eta_0`: even, `1` on `[-3pi/8, 3pi/8]`, supported in `(-5pi/8, 5pi/8)`,
/// and `sum_k eta_0(t - k pi) = 1`.
#[inline]
pub fn eta0(s: f64) -> f64 {
    smooth_step((ETA0_SUPPORT - s.abs()) / (ETA0_SUPPORT - ETA0_PLATEAU))
}

/// `eta_l(s) = eta_0(2^{l-1} s) - eta_0(2^l s)` for `l >= 1`; `l = 0` gives `eta_0`.
pub fn eta(l: u32, s: f64) -> f64 {
    if l == 0 {
        eta0(s)
    } else {
        let a = 2f64.powi(l as i32 - 1) * s;
        eta0(a) - eta0(2.0 * a)
    }
}

/// `sum_{l=1}^{L} eta_l(s) = eta_0(s) - eta_0(2^L s)`.
pub fn eta_sum(big_l: u32, s: f64) -> f64 {
    eta0(s) - eta0(2f64.powi(big_l as i32) * s)
}

/// The auxiliary bump `varsigma`: `1` on `[1/8, 2]`, supported in `[1/9, 3]`.
#[inline]
pub fn varsigma(s: f64) -> f64 {
    let lo = 1.0 / 9.0;
    let hi = 1.0 / 8.0;
    smooth_step((s - lo) / (hi - lo)) * smooth_step(3.0 - s)
}

/// `chi_1`: `1` on `[2^-9, 2^9]`, supported in `(2^-10, 2^10)`.
#[inline]
pub fn chi1(s: f64) -> f64 {
    let a = 2f64.powi(-10);
    let b = 2f64.powi(10);
    smooth_step((s - a) / a) * smooth_step((b - s) / (b / 2.0))
}

/// The standard test bump supported in `(1/2, 2)`: `exp(1 - 1/(1 - z^2))`, `z = (x - 5/4) / (3/4)`.
#[inline]
pub fn standard_bump(x: f64) -> f64 {
    let z = (x - 1.25) / 0.75;
    if z.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - z * z)).exp()
    }
}

/// Which family a [`CutoffFamily`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutoffKind {
    Zeta,
    Eta,
}

/// Descriptor of one of the dyadic partitions, with its support parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffFamily {
    pub kind: CutoffKind,
    /// Half-width of the plateau of the base function.
    pub plateau: f64,
    /// Half-width of the support of the base function.
    pub support: f64,
    pub mollifier: String,
}

impl CutoffFamily {
    pub fn zeta() -> Self {
        Self { kind: CutoffKind::Zeta, plateau: ZETA0_PLATEAU, support: 1.0, mollifier: MOLLIFIER_ID.into() }
    }

    pub fn eta() -> Self {
        Self { kind: CutoffKind::Eta, plateau: ETA0_PLATEAU, support: ETA0_SUPPORT, mollifier: MOLLIFIER_ID.into() }
    }

    /// Evaluates the `index`-th member.
    pub fn eval(&self, index: u32, s: f64) -> f64 {
        match self.kind {
            CutoffKind::Zeta => zeta(index, s),
            CutoffKind::Eta => eta(index, s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_values() {
        assert_eq!(eta0(0.0), 1.0);
        let s: f64 = (0..=20).map(|j| zeta(j, 7.3)).sum();
        assert!((s - 1.0).abs() < 1e-14);
        let s: f64 = (-3..=3).map(|k| eta0(1.0 - k as f64 * PI)).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn supports_and_plateaus() {
        assert_eq!(zeta0(0.56), 1.0);
        assert_eq!(zeta0(1.0), 0.0);
        assert_eq!(zeta(3, 1.0), 0.0);
        assert!(zeta(3, 2.5) > 0.0);
        assert_eq!(zeta(3, 4.0), 1.0);
        assert_eq!(zeta(3, 8.0), 0.0);
        assert_eq!(eta0(ETA0_PLATEAU), 1.0);
        assert_eq!(eta0(ETA0_SUPPORT), 0.0);
        assert_eq!(varsigma(1.0 / 9.0), 0.0);
        assert_eq!(varsigma(0.125), 1.0);
        assert_eq!(varsigma(2.0), 1.0);
        assert_eq!(varsigma(3.0), 0.0);
        assert_eq!(chi1(2f64.powi(-9)), 1.0);
        assert_eq!(chi1(2f64.powi(9)), 1.0);
        assert_eq!(chi1(2f64.powi(-10)), 0.0);
        assert_eq!(chi1(2f64.powi(10)), 0.0);
        assert_eq!(standard_bump(0.5), 0.0);
        assert_eq!(standard_bump(1.25), 1.0);
    }

    #[test]
    fn eta_l_support_and_telescoping() {
        // eta_l lives on 2^-l 3pi/8 <= |s| <= 2^-l 5pi/4.
        for l in 1..6u32 {
            let lo = 2f64.powi(-(l as i32)) * 3.0 * PI / 8.0;
            let hi = 2f64.powi(-(l as i32)) * 5.0 * PI / 4.0;
            assert_eq!(eta(l, 0.999 * lo), 0.0);
            assert_eq!(eta(l, 1.001 * hi), 0.0);
            let s = 0.3;
            let direct: f64 = (1..=l).map(|m| eta(m, s)).sum();
            assert!((direct - eta_sum(l, s)).abs() < 1e-15);
        }
    }
}
