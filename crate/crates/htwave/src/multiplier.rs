//! The multiplier hypothesis quantity
//!
//! `A_R = sup_{t > 0} int_{|s| >= R} |F^{-1}[chi m(t .)](s)| |s|^{(d-1)/2} ds`
//!
//! and the condition `||m||_inf + int_2^inf A_R dR / R < inf`.
//!
//! `chi = zeta_1` (supported in `(9/16, 2)`, with `sum_k chi(2^k s) = 1` on `s > 0`);
//! `F^{-1} g(s) = int g(xi) e^{2 pi i s xi} dxi`. The inverse transform is a dense FFT of
//! the samples `chi(xi_j) m(t xi_j)`, `xi_j = j dxi`, zero-padded so that the `s`-grid has
//! spacing `s_step`. Only `|s| <= s_cut` (a fraction of the Nyquist limit, where aliasing
//! is negligible) is summed directly; the mass beyond `s_cut` is extrapolated from the two
//! last octaves as a geometric series. The supremum over `t` is taken on a finite
//! log-spaced grid.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_power_law, LineFit};
use crate::special::cutoff::zeta1;

/// Discretization of the multiplier quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierOptions {
    /// Topological dimension `d` in the weight `|s|^{(d-1)/2}`.
    pub d: f64,
    /// Sample spacing in `xi`.
    pub xi_step: f64,
    /// Target spacing of the `s`-grid (the FFT is zero-padded to reach it).
    pub s_step: f64,
    /// `s_cut = s_cut_fraction * Nyquist`.
    pub s_cut_fraction: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub t_per_octave: usize,
    /// Largest admissible fraction of `int |F^{-1}[chi m(t .)]|` in the outer half of the `s`-range.
    pub alias_tol: f64,
    /// Log-spaced `R`-grid `[r_min, r_max]` with `r_points` points.
    pub r_min: f64,
    pub r_max: f64,
    pub r_points: usize,
    /// Values of `A_R` below `floor_tol * max A_R` are rounding noise and count as zero.
    pub floor_tol: f64,
}

impl Default for MultiplierOptions {
    fn default() -> Self {
        Self {
            d: 3.0,
            xi_step: 2f64.powi(-17),
            s_step: 0.125,
            s_cut_fraction: 0.25,
            t_min: 2f64.powi(-20),
            t_max: 2f64.powi(20),
            t_per_octave: 8,
            alias_tol: 1e-5,
            r_min: 2.0,
            r_max: 1024.0,
            r_points: 31,
            floor_tol: 1e-12,
        }
    }
}

impl MultiplierOptions {
    /// The log-spaced `t`-grid of the supremum.
    pub fn t_grid(&self) -> Vec<f64> {
        let octaves = (self.t_max / self.t_min).log2();
        let n = (octaves * self.t_per_octave as f64).round().max(0.0) as usize;
        (0..=n).map(|i| self.t_min * 2f64.powf(i as f64 / self.t_per_octave.max(1) as f64)).collect()
    }

    /// The log-spaced `R`-grid.
    pub fn r_grid(&self) -> Vec<f64> {
        let n = self.r_points.max(2);
        (0..n).map(|i| self.r_min * (self.r_max / self.r_min).powf(i as f64 / (n - 1) as f64)).collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.r_min >= 2.0) || !(self.r_max > self.r_min) {
            return Err(Error::InvalidArgument(format!("need 2 <= r_min < r_max, got [{}, {}]", self.r_min, self.r_max)));
        }
        if !(self.xi_step > 0.0 && self.s_step > 0.0 && self.t_min > 0.0 && self.t_max >= self.t_min) {
            return Err(Error::InvalidArgument("steps and t-range must be positive".into()));
        }
        if !(self.s_cut_fraction > 0.0 && self.s_cut_fraction <= 0.5) {
            return Err(Error::InvalidArgument("s_cut_fraction must lie in (0, 1/2]".into()));
        }
        let nyq = 0.5 / self.xi_step;
        if self.r_max > self.s_cut_fraction * nyq / 4.0 {
            return Err(Error::Resolution(format!(
                "R up to {} needs xi_step <= {:.3e}",
                self.r_max,
                self.s_cut_fraction / (8.0 * self.r_max)
            )));
        }
        Ok(())
    }
}

/// The cutoff `chi = zeta_1`.
pub fn chi(xi: f64) -> f64 {
    zeta1(xi)
}

/// Weighted tail data of one `F^{-1}[chi m(t .)]`.
#[derive(Debug, Clone, PartialEq)]
struct TailProfile {
    /// `A_t(R)` for the `R`-grid, including the extrapolated part.
    values: Vec<f64>,
    /// Rounding-noise level of each entry of `values`.
    floors: Vec<f64>,
    /// Extrapolated mass beyond `s_cut` (already included in `values`).
    extrapolated: f64,
    /// Fraction of `int |f|` in the outer half of the `s`-range.
    alias: f64,
    /// `int |f|^2 ds` and `int |chi m(t .)|^2 dxi` (discrete Parseval).
    l2_s: f64,
    l2_xi: f64,
}

/// Factor between the measured noise level and the floor below which `A_R` counts as noise.
const NOISE_MARGIN: f64 = 10.0;

struct Transformer {
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    n: usize,
    n_xi: usize,
    dxi: f64,
    ds: f64,
    weight_exp: f64,
    cut_index: usize,
    r_index: Vec<usize>,
    floor_tol: f64,
}

impl Transformer {
    fn new(opts: &MultiplierOptions, radii: &[f64]) -> Result<Self> {
        opts.validate()?;
        let dxi = opts.xi_step;
        let n_xi = (2.0 / dxi).ceil() as usize + 1;
        let n = ((1.0 / (dxi * opts.s_step)).ceil() as usize).next_power_of_two().max((2 * n_xi).next_power_of_two());
        if n > 1 << 24 {
            return Err(Error::Budget(format!("multiplier FFT length {n} exceeds 2^24")));
        }
        let ds = 1.0 / (n as f64 * dxi);
        let nyq = 0.5 / dxi;
        let cut_index = (opts.s_cut_fraction * nyq / ds).floor() as usize;
        let r_index = radii.iter().map(|r| (r / ds).ceil() as usize).collect();
        Ok(Self {
            fft: FftPlanner::new().plan_fft_inverse(n),
            n,
            n_xi,
            dxi,
            ds,
            weight_exp: (opts.d - 1.0) / 2.0,
            cut_index,
            r_index,
            floor_tol: opts.floor_tol,
        })
    }

    fn profile<M: Fn(f64) -> Complex64>(&self, m: &M, t: f64) -> TailProfile {
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut l2_xi = 0.0;
        for (j, slot) in buf.iter_mut().enumerate().take(self.n_xi) {
            let xi = j as f64 * self.dxi;
            let c = chi(xi);
            if c != 0.0 {
                *slot = m(t * xi) * c * self.dxi;
                l2_xi += slot.norm_sqr() / self.dxi;
            }
        }
        self.fft.process(&mut buf);
        // Fold s and -s: radial mass per |s|-index.
        let half = n / 2;
        let mut mass = vec![0.0; half + 1];
        let mut plain = vec![0.0; half + 1];
        let mut l2_s = 0.0;
        let (mut outer_abs, mut outer_count) = (0.0, 0usize);
        for (k, z) in buf.iter().enumerate() {
            let i = k.min(n - k);
            let s = i as f64 * self.ds;
            let a = z.norm();
            l2_s += a * a * self.ds;
            mass[i] += a * s.powf(self.weight_exp) * self.ds;
            plain[i] += a * self.ds;
            if i >= half / 2 {
                outer_abs += a;
                outer_count += 1;
            }
        }
        // Mean |f| over the outer half: rounding noise plus aliasing, an upper bound
        // for the noise level of every sample.
        let noise = outer_abs / outer_count.max(1) as f64;
        let total_plain: f64 = plain.iter().sum();
        let outer: f64 = plain[half / 2..].iter().sum();
        let alias = if total_plain > 0.0 { outer / total_plain } else { 0.0 };
        // Suffix sums up to the cut.
        let cut = self.cut_index.min(half);
        let mut suffix = vec![0.0; cut + 2];
        for i in (0..=cut).rev() {
            suffix[i] = suffix[i + 1] + mass[i];
        }
        let total_w = suffix[0];
        // Noise mass of the index range i..=cut (both signs of s), times a safety factor.
        let mut noise_suffix = vec![0.0; cut + 2];
        for i in (0..=cut).rev() {
            noise_suffix[i] = noise_suffix[i + 1] + NOISE_MARGIN * 2.0 * noise * (i as f64 * self.ds).powf(self.weight_exp) * self.ds;
        }
        let m1: f64 = mass[cut / 4..cut / 2].iter().sum();
        let m2: f64 = mass[cut / 2..=cut].iter().sum();
        let noise_m2 = noise_suffix[cut / 2];
        let extrapolated = if m2 <= (self.floor_tol * total_w).max(noise_m2) {
            0.0
        } else {
            let q = m2 / m1.max(f64::MIN_POSITIVE);
            if q < 0.95 {
                m2 * q / (1.0 - q)
            } else {
                f64::INFINITY
            }
        };
        let values = self
            .r_index
            .iter()
            .map(|&i| if i > cut { extrapolated } else { suffix[i] + extrapolated })
            .collect();
        let floors = self.r_index.iter().map(|&i| if i > cut { 0.0 } else { noise_suffix[i] }).collect();
        TailProfile { values, floors, extrapolated, alias, l2_s, l2_xi }
    }
}

/// `A_R` on an `R`-grid with the `t` attaining each supremum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrakAProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Rounding-noise floor of each value (at the `t` attaining the supremum).
    pub floors: Vec<f64>,
    pub argmax_t: Vec<f64>,
    /// Number of `t` of the grid that entered the supremum.
    pub t_used: usize,
    /// `t` of the grid whose transform was not resolved (aliasing above tolerance).
    pub t_unresolved: Vec<f64>,
    pub max_alias: f64,
    /// Largest share of an `A_R` value that comes from the extrapolation beyond `s_cut`.
    pub max_extrapolated_share: f64,
    /// Largest relative discrete-Parseval defect over the `t`-grid.
    pub parseval_defect: f64,
}

impl FrakAProfile {
    /// Whether `values[i]` is at the noise floor (below its measured floor or below
    /// `floor_tol` times the largest value).
    pub fn at_floor(&self, i: usize, floor_tol: f64) -> bool {
        let top = self.values.iter().copied().fold(0.0, f64::max);
        self.values[i] <= self.floors[i].max(floor_tol * top)
    }

    /// Power-law fit of `A_R` over `R in [r_lo, r_hi]`, ignoring values at the noise floor.
    pub fn decay_exponent(&self, r_lo: f64, r_hi: f64, floor_tol: f64) -> Result<LineFit> {
        let (x, y): (Vec<f64>, Vec<f64>) = (0..self.radii.len())
            .filter(|&i| {
                let (r, v) = (self.radii[i], self.values[i]);
                r >= r_lo && r <= r_hi && v.is_finite() && !self.at_floor(i, floor_tol)
            })
            .map(|i| (self.radii[i], self.values[i]))
            .unzip();
        fit_power_law(&x, &y)
    }
}

fn sup_profile<M: Fn(f64) -> Complex64 + Sync>(m: &M, ts: &[f64], opts: &MultiplierOptions, strict: bool) -> Result<FrakAProfile> {
    let radii = opts.r_grid();
    let tr = Transformer::new(opts, &radii)?;
    let profiles: Vec<(f64, TailProfile)> = ts.par_iter().map(|&t| (t, tr.profile(m, t))).collect();
    let mut values = vec![0.0; radii.len()];
    let mut floors = vec![0.0; radii.len()];
    let mut argmax_t = vec![f64::NAN; radii.len()];
    let mut unresolved = Vec::new();
    let (mut max_alias, mut share, mut parseval): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut used = 0;
    for (t, p) in &profiles {
        max_alias = max_alias.max(p.alias);
        if p.l2_xi > 0.0 {
            parseval = parseval.max((p.l2_s - p.l2_xi).abs() / p.l2_xi);
        }
        if p.alias > opts.alias_tol {
            if strict {
                return Err(Error::Aliasing(format!(
                    "at t = {t:.4e} a fraction {:.2e} of the transform sits in the outer half of the s-grid",
                    p.alias
                )));
            }
            unresolved.push(*t);
            continue;
        }
        used += 1;
        for (i, v) in p.values.iter().enumerate() {
            if *v > values[i] || argmax_t[i].is_nan() {
                values[i] = *v;
                floors[i] = p.floors[i];
                argmax_t[i] = *t;
            }
            if *v > 0.0 {
                share = share.max(p.extrapolated / v);
            }
        }
    }
    Ok(FrakAProfile {
        radii,
        values,
        floors,
        argmax_t,
        t_used: used,
        t_unresolved: unresolved,
        max_alias,
        max_extrapolated_share: share,
        parseval_defect: parseval,
    })
}

/// `A_R` for `R` on the options' grid, sup over the given `t`; errors on aliasing.
pub fn frak_a<M: Fn(f64) -> Complex64 + Sync>(m: &M, ts: &[f64], opts: &MultiplierOptions) -> Result<FrakAProfile> {
    if ts.is_empty() {
        return Err(Error::InvalidArgument("the t-grid is empty".into()));
    }
    sup_profile(m, ts, opts, true)
}

/// Verdict on the multiplier condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

/// Outcome of [`condition_value`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `max |m|` on a dense log grid covering every `t xi` that entered.
    pub sup_m: f64,
    /// `int_2^{R_max} A_R dR / R` (trapezoid rule in `log R`).
    pub integral: f64,
    /// Extrapolated `int_{R_max}^inf A_R dR / R` (zero when `A_R` reached the noise floor).
    pub tail: f64,
    /// Exponent fitted over the last decade of `R` (`None` at the noise floor).
    pub exponent: Option<f64>,
    pub exponent_ci95: Option<f64>,
    pub verdict: Verdict,
    pub profile: FrakAProfile,
}

impl ConditionReport {
    /// `||m||_inf + int A_R dR / R` including the extrapolated tail.
    pub fn value(&self) -> f64 {
        self.sup_m + self.integral + self.tail
    }
}

/// Evaluates the multiplier condition for `m` on the options' `t`- and `R`-grids.
///
/// `holds` needs a negative fitted exponent over the last decade (or `A_R` already at
/// its noise floor at `R_max`), an extrapolated tail below 10% of the computed integral and a
/// resolved transform at every `t`; a fitted exponent `>= -0.05` (no decay) `fails`.
pub fn condition_value<M: Fn(f64) -> Complex64 + Sync>(m: &M, opts: &MultiplierOptions) -> Result<ConditionReport> {
    if !(opts.r_max >= 1024.0) {
        return Err(Error::InvalidArgument(format!("the R-grid must reach 2^10, got {}", opts.r_max)));
    }
    let ts = opts.t_grid();
    let profile = sup_profile(m, &ts, opts, false)?;
    let lo = opts.t_min * 9.0 / 16.0;
    let hi = opts.t_max * 2.0;
    let n_sup = ((hi / lo).log2() * 64.0).ceil() as usize;
    let sup_m = (0..=n_sup).map(|i| m(lo * (hi / lo).powf(i as f64 / n_sup as f64)).norm()).fold(0.0, f64::max);

    let r = &profile.radii;
    let v = &profile.values;
    let mut integral = 0.0;
    for i in 1..r.len() {
        integral += 0.5 * (v[i] + v[i - 1]) * (r[i] / r[i - 1]).ln();
    }
    let top = v.iter().copied().fold(0.0, f64::max);
    let decade_lo = opts.r_max / 10.0;
    // A_R at R_max already at the noise floor: nothing left to extrapolate.
    let at_floor = profile.at_floor(r.len() - 1, opts.floor_tol);
    let fit = profile.decay_exponent(decade_lo, opts.r_max, opts.floor_tol).ok().filter(|f| f.points >= 3);
    let (exponent, ci) = (fit.as_ref().map(|f| f.slope), fit.as_ref().map(|f| f.slope_ci95));
    let tail = if top == 0.0 || at_floor {
        0.0
    } else {
        match exponent {
            Some(p) if p < 0.0 => v[r.len() - 1] / -p,
            _ => f64::INFINITY,
        }
    };
    let finite = integral.is_finite() && sup_m.is_finite();
    let verdict = if !finite || exponent.is_some_and(|p| p >= -0.05) {
        Verdict::Fails
    } else if profile.t_unresolved.is_empty() && tail.is_finite() && tail < 0.1 * integral.max(f64::MIN_POSITIVE) {
        Verdict::Holds
    } else if profile.t_unresolved.is_empty() && top == 0.0 {
        Verdict::Holds
    } else {
        Verdict::Inconclusive
    };
    Ok(ConditionReport { sup_m, integral, tail, exponent, exponent_ci95: ci, verdict, profile })
}

/// The constant multiplier `m = 1`.
pub fn constant_multiplier(_xi: f64) -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// The imaginary power `m(xi) = xi^{i gamma}`.
pub fn imaginary_power(gamma: f64) -> impl Fn(f64) -> Complex64 + Sync {
    move |xi: f64| Complex64::from_polar(1.0, gamma * xi.ln())
}

/// A dilation-periodic multiplier `|sin(pi log2 xi)|^{beta - 1/2}` whose dyadic pieces
/// `chi m(t .)` have exactly `L^2_{beta'}` regularity for `beta' < beta` (power-type
/// singularities of order `beta - 1/2` where `t xi` is a power of two).
pub fn sobolev_test_multiplier(beta: f64) -> impl Fn(f64) -> Complex64 + Sync {
    move |xi: f64| Complex64::new((std::f64::consts::PI * xi.log2()).sin().abs().powf(beta - 0.5), 0.0)
}

/// The non-decaying stress case `m(xi) = e^{i xi}`: `F^{-1}[chi m(t .)]` is `F^{-1} chi`
/// translated by `t / (2 pi)`, so `A_R` does not decay.
pub fn oscillating_multiplier(xi: f64) -> Complex64 {
    Complex64::from_polar(1.0, xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> MultiplierOptions {
        MultiplierOptions { xi_step: 2f64.powi(-15), t_min: 0.5, t_max: 2.0, t_per_octave: 4, r_max: 256.0, r_points: 15, ..Default::default() }
    }

    #[test]
    fn grids() {
        let o = MultiplierOptions::default();
        let t = o.t_grid();
        assert_eq!(t.len(), 40 * 8 + 1);
        assert!((t[0] - o.t_min).abs() < 1e-18 && (t.last().unwrap() / o.t_max - 1.0).abs() < 1e-12);
        let r = o.r_grid();
        assert_eq!(r.len(), 31);
        assert!((r[30] - 1024.0).abs() < 1e-9);
    }

    #[test]
    fn parseval_holds_per_block() {
        let p = frak_a(&sobolev_test_multiplier(2.0), &quick().t_grid(), &quick()).unwrap();
        assert!(p.parseval_defect < 1e-10, "{}", p.parseval_defect);
    }

    #[test]
    fn constant_multiplier_decays_faster_than_any_power() {
        // chi is smooth with compact support, so the local log-log slope keeps steepening.
        let p = frak_a(&constant_multiplier, &[1.0], &quick()).unwrap();
        let at = |r: f64| p.values[p.radii.iter().position(|x| (*x - r).abs() < 1e-9).unwrap()];
        let slopes: Vec<f64> = [4.0, 8.0, 16.0, 32.0].iter().map(|&r| (at(2.0 * r) / at(r)).log2()).collect();
        assert!(slopes.windows(2).all(|w| w[1] < w[0]), "{slopes:?}");
        assert!(slopes[3] < -5.0, "{slopes:?}");
    }

    #[test]
    fn dilation_invariance() {
        let o = quick();
        let ts = o.t_grid();
        let m = sobolev_test_multiplier(2.0);
        let a = frak_a(&m, &ts, &o).unwrap();
        // m(2 xi) on the same grid shifted by one octave: t ranges over [1/4, 1].
        let m2 = |xi: f64| m(2.0 * xi);
        let ts2: Vec<f64> = ts.iter().map(|t| t / 2.0).collect();
        let b = frak_a(&m2, &ts2, &o).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-300));
        }
    }
}
