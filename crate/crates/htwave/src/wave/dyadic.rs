//! Dyadic combinations `W_{j,n}`: at `lambda = 2^j`, the band sums `K^k_lambda`, `k in J_n`,
//! localized by a central spectral mask at `rho_2 = 2 pi |mu| ~ 2^{j+n}`.
//!
//! The mask is `zeta_n(2^{-j} rho_2)` (so `zeta_0(2^{-j} rho_2)` for `n = 0` and
//! `zeta_1(2^{1-j-n} rho_2)` for `n >= 1`; the masks sum to one over `n`);
//! it acts by a Fourier transform in `u` on every `|x|`-row of the sampled `K^k`
//! (zero-padded beyond the sampled `u`-window). The `L^1` norm of the masked sum is
//! bounded by the triangle inequality: the returned proxy is
//! `2^{-j(d-1)/2} sum_{k in J_n} ||mask K^k||_1`. Bands whose central spectrum
//! `rho_2 in [k pi lambda / 3, 9 k pi lambda]` misses the mask are skipped.
//! For `n >= j + 11` the combination vanishes identically.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::kernel::{assemble_kk_band, KernelOptions, WaveContext};
use super::{jn_set, k_max, l1_norm, KernelField};
use crate::error::{Error, Result};
use crate::special::cutoff::zeta;

/// Tuning of [`assemble_wjn`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WjnOptions {
    /// Number of `l`-bands summed in each `K^k`.
    pub big_l: u32,
    /// The `u`-FFT length is the next power of two above `pad * 2 * nv`.
    pub pad: usize,
    pub kernel: KernelOptions,
}

impl Default for WjnOptions {
    fn default() -> Self {
        Self { big_l: 6, pad: 4, kernel: KernelOptions::default() }
    }
}

/// Contribution of one band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WjnPiece {
    pub k: u64,
    /// `||K^k||_1` before masking.
    pub l1_band: f64,
    /// `||mask K^k||_1`.
    pub l1_masked: f64,
}

/// Outcome of [`assemble_wjn`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WjnResult {
    /// `n >= j + 11`: the piece vanishes identically.
    Zero { j: u32, n: u32 },
    Assembled {
        j: u32,
        n: u32,
        pieces: Vec<WjnPiece>,
        /// Bands of `J_n` whose central spectrum misses the mask.
        skipped: Vec<u64>,
        /// `2^{-j(d-1)/2} sum_k ||mask K^k||_1`.
        proxy: f64,
        /// `2^{-n(d1-1)/2}`.
        decay: f64,
        /// `j <= 10`, below the regime of the asymptotic statements.
        below_asymptotic_regime: bool,
    },
}

impl WjnResult {
    /// `proxy / 2^{-n(d1-1)/2}` (zero for the zero marker).
    pub fn ratio(&self) -> f64 {
        match self {
            WjnResult::Zero { .. } => 0.0,
            WjnResult::Assembled { proxy, decay, .. } => proxy / decay,
        }
    }
}

/// The mask `zeta_n(2^{-j} rho_2)` as a function of `rho_2 = 2 pi |mu|`.
pub fn central_mask(j: u32, n: u32, rho2: f64) -> f64 {
    zeta(n, rho2.abs() * 2f64.powi(-(j as i32)))
}

/// Whether `[k pi lambda / 3, 9 k pi lambda]` meets the support of the mask.
pub fn band_meets_mask(j: u32, n: u32, k: u64) -> bool {
    let lambda = 2f64.powi(j as i32);
    let scale = 2f64.powi((j + n) as i32);
    let (lo, hi) = (k as f64 * PI * lambda / 3.0, 9.0 * k as f64 * PI * lambda);
    let (m_lo, m_hi) = if n == 0 { (0.0, scale) } else { (scale * 9.0 / 32.0, scale) };
    lo < m_hi && hi > m_lo
}

/// `||mask K||_1` with the mask applied in `u` on every row of `field`.
pub fn masked_l1(field: &KernelField, j: u32, n: u32, pad: usize) -> Result<f64> {
    if field.d2 != 1 {
        return Err(Error::InvalidArgument("central masks are implemented for d2 = 1".into()));
    }
    let g = &field.grid;
    if (g.v0 - 0.5 * g.dv).abs() > 1e-12 * g.dv {
        return Err(Error::InvalidArgument("masking needs a v-grid starting at v = 0".into()));
    }
    let nv = g.nv;
    let n_fft = (pad.max(1) * 2 * nv).next_power_of_two();
    let du = g.dv / 4.0;
    let mask: Vec<f64> = (0..n_fft)
        .map(|m| {
            let mf = if m < n_fft / 2 { m as f64 } else { m as f64 - n_fft as f64 };
            central_mask(j, n, 2.0 * PI * mf / (n_fft as f64 * du))
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n_fft);
    let inv = planner.plan_fft_inverse(n_fft);
    let d1 = field.d1 as i32;
    let total: f64 = (0..g.nr())
        .into_par_iter()
        .map(|i| {
            let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
            // Even extension on the half-shifted grid u_p = (p + 1/2) du.
            for jv in 0..nv {
                let z = field.value(i, jv);
                buf[jv] = z;
                buf[n_fft - 1 - jv] = z;
            }
            fwd.process(&mut buf);
            for (z, m) in buf.iter_mut().zip(&mask) {
                *z *= *m / n_fft as f64;
            }
            inv.process(&mut buf);
            let r = g.r[i];
            let w = super::sphere_measure(field.d1) * r.powi(d1 - 1) * g.dr[i] * du;
            buf.iter().map(|z| z.norm()).sum::<f64>() * w
        })
        .sum();
    Ok(total)
}

/// Assembles the `W_{j,n}` proxy on `H`-type groups with `d2 = 1` at `lambda = 2^j`.
pub fn assemble_wjn(j: u32, n: u32, d1: usize, opts: &WjnOptions) -> Result<WjnResult> {
    if n >= j + 11 {
        return Ok(WjnResult::Zero { j, n });
    }
    if j == 0 || j > 10 {
        return Err(Error::Budget(format!("W_(j,n) assembly supports 1 <= j <= 10 (lambda <= 1024), got j = {j}")));
    }
    let lambda = 2f64.powi(j as i32);
    let km = k_max(lambda)?;
    let mut ks: Vec<u64> = jn_set(n).into_iter().filter(|&k| k < km).collect();
    ks.sort_unstable();
    let (hit, skipped): (Vec<u64>, Vec<u64>) = ks.into_iter().partition(|&k| band_meets_mask(j, n, k));
    let ctx = WaveContext::new(d1, 1, lambda, &opts.kernel)?;
    let mut pieces = Vec::with_capacity(hit.len());
    for k in hit {
        let field = assemble_kk_band(&ctx, k, opts.big_l, &opts.kernel)?;
        pieces.push(WjnPiece { k, l1_band: l1_norm(&field), l1_masked: masked_l1(&field, j, n, opts.pad)? });
    }
    let d = d1 as f64 + 1.0;
    let proxy = 2f64.powf(-(j as f64) * (d - 1.0) / 2.0) * pieces.iter().map(|p| p.l1_masked).sum::<f64>();
    let decay = 2f64.powf(-(n as f64) * (d1 as f64 - 1.0) / 2.0);
    Ok(WjnResult::Assembled { j, n, pieces, skipped, proxy, decay, below_asymptotic_regime: j <= 10 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::{Component, DecompositionIndex, FieldDiagnostics, RadialGrid};

    #[test]
    fn far_pieces_vanish() {
        assert_eq!(assemble_wjn(5, 16, 2, &WjnOptions::default()).unwrap(), WjnResult::Zero { j: 5, n: 16 });
    }

    #[test]
    fn masks_partition_unity() {
        for rho in [0.0, 10.0, 300.0, 5000.0, 1e6] {
            let s: f64 = (0..40).map(|n| central_mask(3, n, rho)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn band_selection() {
        // n = 0: mask rho_2 < 2^j; the band of k starts at k pi lambda / 3 > lambda for k >= 1.
        assert!(!band_meets_mask(7, 0, 1));
        assert!(band_meets_mask(7, 3, 2));
        assert!(!band_meets_mask(7, 1, 64));
    }

    #[test]
    fn all_pass_mask_keeps_the_norm() {
        // A field whose u-spectrum sits inside the plateau of zeta_0 is unchanged.
        let grid = RadialGrid::uniform(1.0, 0.05, 0.0, 40.0, 0.05).unwrap();
        let values = (0..grid.nr())
            .flat_map(|i| {
                let r = grid.r[i];
                (0..grid.nv).map(move |jv| {
                    let u = (0.025 + jv as f64 * 0.05) / 4.0;
                    Complex64::new((-r * r - u * u).exp(), 0.0)
                })
            })
            .collect();
        let field = KernelField {
            index: DecompositionIndex::main(8.0),
            component: Component::K0,
            d1: 2,
            d2: 1,
            grid,
            values,
            rescaled: false,
            diagnostics: FieldDiagnostics::default(),
        };
        let plain = l1_norm(&field);
        let masked = masked_l1(&field, 6, 0, 4).unwrap();
        assert!((masked - plain).abs() < 1e-6 * plain, "{masked} vs {plain}");
    }
}
