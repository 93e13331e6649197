//! Mass of the kernel of `g(sqrt L / lambda) e^{i sqrt L}` away from the origin on `H_1`.
//!
//! With the standard bump `g` (support `(1/2, 2)`), the multiplier
//! `h(rho) = g(sqrt(rho) / lambda) e^{i sqrt(rho)}` is supported in `(lambda^2/4, 4 lambda^2)`.
//! On the Heisenberg group `H_1` (`d1 = 2`, `d2 = 1`) its kernel is, exactly,
//!
//! `K(x, u) = int e^{2 pi i u mu} sum_q h(2 pi |mu| (2q + 1)) |mu| L_q(pi |mu| |x|^2) e^{-pi |mu| |x|^2 / 2} dmu`,
//!
//! a finite sum in `q` for every `mu`. The `mu`-integral is the trapezoid rule on a
//! half-shifted grid (period `2 u_max` in `u`), evaluated for all `u` at once by FFT,
//! one `|x|`-row at a time. Each row also yields a rounding-error floor: `eps` times the
//! sum of the absolute values of all terms entering a sample.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fit::{fit_power_law, LineFit};
use crate::special::cutoff::standard_bump;

/// Discretization of the tail computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailOptions {
    /// `|x| <= core_radius` is sampled with step `core_step / max(lambda, min_scale)`.
    pub core_radius: f64,
    pub core_step: f64,
    /// `|x| > core_radius` is sampled with step `outer_step / max(lambda, min_scale)`.
    pub outer_step: f64,
    pub min_scale: f64,
    /// The field covers `|x| <= extent * R_max` and `|u| < extent * R_max`.
    pub extent: f64,
    /// Zero-padding factor of the `mu`-FFT (refines the `u`-grid).
    pub oversample: usize,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self { core_radius: 3.0, core_step: 0.25, outer_step: 1.0, min_scale: 2.0, extent: 2.0, oversample: 2 }
    }
}

/// Tail masses `int_{max(|x|, |u|) >= R} |K|` for several `R`, from one field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub lambda: f64,
    pub radii: Vec<f64>,
    pub tails: Vec<f64>,
    /// Rounding-error floor of each tail value.
    pub floors: Vec<f64>,
    /// `int |K|` over the whole computed field.
    pub total: f64,
    pub r_max: f64,
    pub u_max: f64,
    pub rows: usize,
    pub fft_len: usize,
}

impl TailReport {
    /// `tail / total` for each radius.
    pub fn ratios(&self) -> Vec<f64> {
        self.tails.iter().map(|t| t / self.total).collect()
    }

    /// Whether the tail at radius index `i` exceeds `factor` times its rounding floor.
    pub fn resolved(&self, i: usize, factor: f64) -> bool {
        self.tails[i] > factor * self.floors[i]
    }
}

/// `h(2 pi mu (2q+1)) mu dmu` for the admissible `q` of one `mu`.
struct MuColumn {
    mu: f64,
    q_lo: usize,
    terms: Vec<Complex64>,
}

fn multiplier(lambda: f64, rho: f64) -> Complex64 {
    let s = rho.sqrt();
    let g = standard_bump(s / lambda);
    if g == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::from_polar(g, s)
    }
}

/// `sum_{q >= q_lo} c_q L_q(x) e^{-x/2}` and the sum of the moduli of its terms.
fn laguerre_sum(col: &MuColumn, x: f64) -> (Complex64, f64) {
    let q_hi = col.q_lo + col.terms.len() - 1;
    // Beyond the turning point 4q + 2 the functions L_q(x) e^{-x/2} are negligible.
    if x > 2.0 * (4.0 * q_hi as f64 + 2.0) + 80.0 {
        return (Complex64::new(0.0, 0.0), 0.0);
    }
    const BIG: f64 = 1e150;
    let ln_big = BIG.ln();
    let mut log_scale = -0.5 * x;
    let mut factor = log_scale.exp();
    let (mut p0, mut p1) = (1.0f64, 1.0 - x);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut abs = 0.0;
    for q in 0..=q_hi {
        let p = if q == 0 { p0 } else { p1 };
        if q >= col.q_lo {
            let val = if factor > 0.0 {
                p * factor
            } else if p != 0.0 {
                p.signum() * (p.abs().ln() + log_scale).exp()
            } else {
                0.0
            };
            let c = col.terms[q - col.q_lo];
            acc += c * val;
            abs += c.norm() * val.abs();
        }
        if q >= 1 {
            let qf = q as f64;
            let next = ((2.0 * qf + 1.0 - x) * p1 - qf * p0) / (qf + 1.0);
            p0 = p1;
            p1 = next;
            if p1.abs() > BIG {
                p0 /= BIG;
                p1 /= BIG;
                log_scale += ln_big;
                factor = log_scale.exp();
            }
        }
    }
    (acc, abs)
}

/// Tail masses of the `g(sqrt L / lambda) e^{i sqrt L}` kernel on `H_1` for every `R` in `radii`.
pub fn tail_mass(lambda: f64, radii: &[f64], opts: &TailOptions) -> Result<TailReport> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be positive")));
    }
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidArgument("tail radii must be positive".into()));
    }
    if !(opts.extent > 1.0) || opts.oversample == 0 {
        return Err(Error::InvalidArgument("tail extent must exceed 1 and oversampling must be >= 1".into()));
    }
    let r_big = radii.iter().copied().fold(0.0, f64::max);
    let ext = opts.extent * r_big;
    let dmu = 1.0 / (2.0 * ext);
    let mu_max = 4.0 * lambda * lambda / (2.0 * PI);
    let m = (mu_max / dmu).ceil() as usize;
    let n = (opts.oversample * 2 * m).next_power_of_two().max(64);
    let cells_est = (n as f64) * ext * opts.core_radius.max(1.0) * lambda.max(opts.min_scale) / opts.core_step;
    if cells_est > 5e10 {
        return Err(Error::Budget(format!("tail field would need ~{cells_est:.1e} samples")));
    }
    let du = 1.0 / (n as f64 * dmu);

    let lam2 = lambda * lambda;
    let columns: Vec<MuColumn> = (0..m)
        .filter_map(|i| {
            let mu = (i as f64 + 0.5) * dmu;
            let step = 2.0 * PI * mu;
            // 2 pi mu (2q + 1) in (lambda^2 / 4, 4 lambda^2).
            let q_lo = ((lam2 / 4.0 / step - 1.0) / 2.0).floor().max(0.0) as usize;
            let q_hi = ((4.0 * lam2 / step - 1.0) / 2.0).ceil().max(0.0) as usize;
            let terms: Vec<Complex64> =
                (q_lo..=q_hi).map(|q| multiplier(lambda, step * (2.0 * q as f64 + 1.0)) * (mu * dmu)).collect();
            let abs_sum = terms.iter().map(|c| c.norm()).sum::<f64>();
            (abs_sum > 0.0).then_some(MuColumn { mu, q_lo, terms })
        })
        .collect();
    let index_of = |mu: f64| ((mu / dmu) - 0.5).round() as usize;

    let scale = lambda.max(opts.min_scale);
    let mut rows: Vec<(f64, f64)> = Vec::new();
    let dr_c = opts.core_step / scale;
    let core_hi = opts.core_radius.min(ext);
    let nc = (core_hi / dr_c).ceil() as usize;
    for i in 0..nc {
        rows.push(((i as f64 + 0.5) * dr_c, dr_c));
    }
    let start = nc as f64 * dr_c;
    let dr_o = opts.outer_step / scale;
    let no = ((ext - start) / dr_o).ceil().max(0.0) as usize;
    for i in 0..no {
        rows.push((start + (i as f64 + 0.5) * dr_o, dr_o));
    }

    let fft = FftPlanner::new().plan_fft_inverse(n);
    let eps = f64::EPSILON;
    let nr = radii.len();
    let per_row: Vec<(f64, Vec<f64>, Vec<f64>)> = rows
        .par_iter()
        .map(|&(r, dr)| {
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            let mut abs_total = 0.0;
            for col in &columns {
                let x = PI * col.mu * r * r;
                let (v, abs) = laguerre_sum(col, x);
                let i = index_of(col.mu);
                // K-hat is even in mu: the sample at -mu_i sits at index n - 1 - i.
                buf[i] = v;
                buf[n - 1 - i] = v;
                abs_total += 2.0 * abs;
            }
            fft.process(&mut buf);
            let w = 2.0 * PI * r * dr * du;
            let floor_point = eps * (abs_total + buf.iter().map(|z| z.norm()).fold(0.0, f64::max)) * w;
            let mut total = 0.0;
            let mut tails = vec![0.0; nr];
            let mut floors = vec![0.0; nr];
            for (k, z) in buf.iter().enumerate() {
                let u = k.min(n - k) as f64 * du;
                let mass = z.norm() * w;
                total += mass;
                for (t, (&big_r, fl)) in tails.iter_mut().zip(radii.iter().zip(floors.iter_mut())) {
                    if r >= big_r || u >= big_r {
                        *t += mass;
                        *fl += floor_point;
                    }
                }
            }
            (total, tails, floors)
        })
        .collect();
    let mut total = 0.0;
    let mut tails = vec![0.0; nr];
    let mut floors = vec![0.0; nr];
    for (t, ta, fl) in per_row {
        total += t;
        for i in 0..nr {
            tails[i] += ta[i];
            floors[i] += fl[i];
        }
    }
    Ok(TailReport {
        lambda,
        radii: radii.to_vec(),
        tails,
        floors,
        total,
        r_max: ext,
        u_max: ext,
        rows: rows.len(),
        fft_len: n,
    })
}

/// Power-law fit of `tail / total` against `lambda` at radius index `i`, using only the
/// reports whose tail exceeds `floor_factor` times its rounding floor.
pub fn fit_tail_decay(reports: &[TailReport], i: usize, floor_factor: f64) -> Result<(LineFit, Vec<f64>)> {
    let used: Vec<&TailReport> = reports.iter().filter(|r| i < r.tails.len() && r.resolved(i, floor_factor)).collect();
    let x: Vec<f64> = used.iter().map(|r| r.lambda).collect();
    let y: Vec<f64> = used.iter().map(|r| r.tails[i] / r.total).collect();
    let fit = fit_power_law(&x, &y)?;
    Ok((fit, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::calculus::laguerre_all;

    #[test]
    fn scaled_laguerre_matches_plain_recurrence() {
        let col = MuColumn { mu: 1.0, q_lo: 3, terms: vec![Complex64::new(1.0, 0.0); 20] };
        for x in [0.1, 5.0, 40.0] {
            let (v, _) = laguerre_sum(&col, x);
            let l = laguerre_all(22, 0.0, x);
            let expect: f64 = l[3..=22].iter().sum::<f64>() * (-0.5 * x).exp();
            assert!((v.re - expect).abs() < 1e-10 * (1.0 + expect.abs()), "x {x}: {} vs {expect}", v.re);
        }
    }

    #[test]
    fn tails_are_nested() {
        let rep = tail_mass(2.0, &[5.0, 10.0, 20.0], &TailOptions::default()).unwrap();
        assert!(rep.total > 0.0);
        assert!(rep.tails[2] <= rep.tails[1] && rep.tails[1] <= rep.tails[0]);
        assert!(rep.tails[0] < rep.total);
    }

    #[test]
    fn relative_tail_shrinks_with_lambda() {
        let o = TailOptions::default();
        let ratios: Vec<f64> = [2.0, 4.0, 8.0].iter().map(|&l| tail_mass(l, &[10.0], &o).unwrap().ratios()[0]).collect();
        assert!(ratios[1] < ratios[0] && ratios[2] < ratios[1], "{ratios:?}");
    }
}
