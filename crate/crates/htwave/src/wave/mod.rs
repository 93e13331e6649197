//! Wave-kernel pieces of `g(sqrt L / lambda) e^{i sqrt L}`: the main term `K^0_lambda`,
//! the bands `K^{k,l}_lambda` near the singular times `t = k pi`, their Bessel split
//! into `A` and `B` parts, dyadic combinations `W_{j,n}`, the tail away from the
//! singular support, and L^1 / L^infinity scaling studies.
//!
//! All kernels are radial in `x` and in `u`; they are sampled on grids in
//! `(r, v) = (|x|, 4|u|)`.

pub mod beta;
pub mod dyadic;
pub mod kernel;
pub mod study;
pub mod tail;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub use beta::{BTable, BTableOptions, BetaLambda, BETA_SUPPORT};
pub use dyadic::{assemble_wjn, band_meets_mask, central_mask, masked_l1, WjnOptions, WjnPiece, WjnResult};
pub use kernel::{
    assemble_k0, assemble_kk_band, band_depth, MAX_CELLS, MAX_LAMBDA, assemble_kkl, band_kernel_direct, kernel_point, linf_scale, singular_curve_distance,
    small_u_mass, split_ab, Band, KernelOptions, PointKind, SplitAB, WaveContext, ASYMPTOTIC_LAMBDA,
};
pub use study::{assemble_piece, fit_slopes, scaling_study, NormRow, NormTable, SlopeAxis, SlopeFit, StudyPiece, StudyRequest};
pub use tail::{fit_tail_decay, tail_mass, TailOptions, TailReport};

/// Note recorded with every field: the second grid coordinate is `v = 4|u|`.
pub const V_NOTE: &str = "v = 4|u|";

/// Exclusive upper bound `8 lambda` of the band index `k` (as the least integer `>= 8 lambda`).
pub fn k_max(lambda: f64) -> Result<u64> {
    if !(lambda >= 1.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be finite and >= 1")));
    }
    Ok((8.0 * lambda).ceil() as u64)
}

/// The index set `J_n`: `{1}` for `n = 0`, else the integers `k >= 1` with `2^{n-8} <= k <= 2^{n+2}`.
pub fn jn_set(n: u32) -> Vec<u64> {
    if n == 0 {
        return vec![1];
    }
    let lo = 2f64.powi(n as i32 - 8).ceil().max(1.0) as u64;
    let hi = 1u64 << (n + 2);
    (lo..=hi).collect()
}

/// Largest `k` for which some point of the discretized joint spectrum of `(L, |U|)`
/// is admissible: `rho_1 = 2 pi |mu| (d1/2 + 2q)` in `(lambda^2/5, 5 lambda^2)` and
/// `|tau rho_2 / lambda - k pi| < 5 pi / 8` for some `tau in (1/16, 4)`, with `rho_2 = 2 pi |mu|`.
/// Returns `None` when no point is admissible.
pub fn max_admissible_k(lambda: f64, d1: usize, qmax: usize, mu_points: usize) -> Option<u64> {
    let lam2 = lambda * lambda;
    let mu_hi = 5.0 * lam2 / (2.0 * PI * d1 as f64 / 2.0);
    let mut best: Option<u64> = None;
    for i in 0..mu_points {
        let mu = mu_hi * (i as f64 + 0.5) / mu_points as f64;
        let rho2 = 2.0 * PI * mu;
        // Least q with rho_1 > lambda^2 / 5; rho_1 increases with q.
        let h = d1 as f64 / 2.0;
        let q_lo = (((lam2 / 5.0) / rho2 - h) / 2.0).floor().max(-1.0) + 1.0;
        let any_q = q_lo <= qmax as f64 && rho2 * (h + 2.0 * q_lo) < 5.0 * lam2;
        if !any_q {
            continue;
        }
        // tau rho2 / lambda ranges over (rho2 / (16 lambda), 4 rho2 / lambda).
        let top = 4.0 * rho2 / lambda;
        let k = ((top + 5.0 * PI / 8.0) / PI).ceil() as i64 - 1;
        if k >= 0 {
            best = Some(best.map_or(k as u64, |b: u64| b.max(k as u64)));
        }
    }
    best
}

/// Position of a piece in the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionIndex {
    pub lambda: f64,
    /// Central band; `0` for the main term.
    pub k: u64,
    /// Distance-to-singularity band (`>= 1`), absent for `K^0` and band sums.
    pub l: Option<u32>,
    /// Dyadic scale `lambda = 2^j`, when the piece belongs to a `W_{j,n}`.
    pub j: Option<u32>,
    /// Central dyadic index.
    pub n: Option<u32>,
}

impl DecompositionIndex {
    pub fn main(lambda: f64) -> Self {
        Self { lambda, k: 0, l: None, j: None, n: None }
    }

    pub fn band(lambda: f64, k: u64, l: u32) -> Self {
        Self { lambda, k, l: Some(l), j: None, n: None }
    }

    pub fn band_sum(lambda: f64, k: u64) -> Self {
        Self { lambda, k, l: None, j: None, n: None }
    }

    /// Checks `0 <= k < 8 lambda`, `l >= 1`, `n <= j + 10` and `k in J_n`.
    pub fn validate(&self) -> Result<()> {
        let km = k_max(self.lambda)?;
        if self.k >= km {
            return Err(Error::InvalidArgument(format!("k = {} is not below 8 lambda = {}", self.k, 8.0 * self.lambda)));
        }
        if self.l == Some(0) {
            return Err(Error::InvalidArgument("l must be >= 1".into()));
        }
        if let (Some(j), Some(n)) = (self.j, self.n) {
            if n > j + 10 {
                return Err(Error::InvalidArgument(format!("n = {n} exceeds j + 10 = {}", j + 10)));
            }
            if (self.lambda - 2f64.powi(j as i32)).abs() > 1e-9 * self.lambda {
                return Err(Error::InvalidArgument(format!("lambda = {} is not 2^{j}", self.lambda)));
            }
        }
        if let Some(n) = self.n {
            if !jn_set(n).contains(&self.k) {
                return Err(Error::InvalidArgument(format!("k = {} is not in J_{n}", self.k)));
            }
        }
        Ok(())
    }
}

/// Which kernel a field holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    /// `K^{k,l}_lambda`.
    Full,
    /// `A^{k,l}_lambda` (normalized by `lambda^{-(d-1)/2}`).
    A,
    /// `B^{k,l}_lambda` (normalized by `lambda^{-(d-1)/2}`).
    B,
    /// `K^0_lambda`.
    K0,
    /// `sum_{l <= L} K^{k,l}_lambda`.
    Band,
}

/// A cell-centred radial grid: rows in `r` (possibly graded), uniform columns in `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    /// Cell centres in `r`.
    pub r: Vec<f64>,
    /// Cell widths in `r`.
    pub dr: Vec<f64>,
    /// Centre of the first `v` cell.
    pub v0: f64,
    pub dv: f64,
    pub nv: usize,
}

impl RadialGrid {
    /// Uniform cells of width `dr` covering `[0, r_hi]` and `dv` covering `[v_lo, v_hi]`.
    pub fn uniform(r_hi: f64, dr: f64, v_lo: f64, v_hi: f64, dv: f64) -> Result<Self> {
        if !(r_hi > 0.0 && dr > 0.0 && v_hi > v_lo && dv > 0.0 && v_lo >= 0.0) {
            return Err(Error::InvalidArgument("degenerate radial grid".into()));
        }
        let nr = (r_hi / dr).ceil() as usize;
        let nv = ((v_hi - v_lo) / dv).ceil() as usize;
        Ok(Self {
            r: (0..nr).map(|i| (i as f64 + 0.5) * dr).collect(),
            dr: vec![dr; nr],
            v0: v_lo + 0.5 * dv,
            dv,
            nv,
        })
    }

    /// Graded `r` cells: `[0, edges[0]]` with width `steps[0]`, then `(edges[i-1], edges[i]]`
    /// with width `steps[i]`; `edges` increasing.
    pub fn graded(edges: &[f64], steps: &[f64], v_lo: f64, v_hi: f64, dv: f64) -> Result<Self> {
        if edges.is_empty() || edges.len() != steps.len() {
            return Err(Error::InvalidArgument("graded grid needs one step per edge".into()));
        }
        let mut r = Vec::new();
        let mut dr = Vec::new();
        let mut lo = 0.0;
        for (&hi, &h) in edges.iter().zip(steps) {
            if !(hi > lo && h > 0.0) {
                return Err(Error::InvalidArgument("graded edges must increase".into()));
            }
            let n = ((hi - lo) / h).ceil() as usize;
            let w = (hi - lo) / n as f64;
            for i in 0..n {
                r.push(lo + (i as f64 + 0.5) * w);
                dr.push(w);
            }
            lo = hi;
        }
        let nv = ((v_hi - v_lo) / dv).ceil() as usize;
        Ok(Self { r, dr, v0: v_lo + 0.5 * dv, dv, nv })
    }

    pub fn nr(&self) -> usize {
        self.r.len()
    }

    pub fn v(&self, j: usize) -> f64 {
        self.v0 + j as f64 * self.dv
    }

    pub fn r_hi(&self) -> f64 {
        self.r.last().zip(self.dr.last()).map_or(0.0, |(r, d)| r + 0.5 * d)
    }

    pub fn v_hi(&self) -> f64 {
        self.v0 + (self.nv as f64 - 0.5) * self.dv
    }
}

/// Numerical diagnostics attached to a field.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldDiagnostics {
    /// Total number of `t` nodes used per sample.
    pub t_nodes: usize,
    /// Fraction of the L^1 mass in the outer 5% of the `r` range.
    pub edge_r: f64,
    /// Fraction of the L^1 mass in the outer 5% of the `v` range.
    pub edge_v: f64,
    /// Relative change of the (subsampled) L^1 norm when the `t` density is doubled.
    pub certificate: Option<f64>,
    /// `lambda` below the regime `lambda >= 2^10` of the asymptotic statements.
    pub below_asymptotic_regime: bool,
}

/// Samples of a radial kernel on a [`RadialGrid`] (row-major, `r` outer).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelField {
    pub index: DecompositionIndex,
    pub component: Component,
    pub d1: usize,
    pub d2: usize,
    pub grid: RadialGrid,
    pub values: Vec<Complex64>,
    /// `true` when the values carry the factor `lambda^{-(d-1)/2}`.
    pub rescaled: bool,
    pub diagnostics: FieldDiagnostics,
}

impl KernelField {
    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.nv + j]
    }

    /// Radial volume weight of cell `(i, j)`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        cell_weight(self.d1, self.d2, self.grid.r[i], self.grid.dr[i], self.grid.v(j), self.grid.dv)
    }

    /// Grid cell `(i, j)` of the largest `|K|`.
    pub fn argmax(&self) -> (usize, usize) {
        let (mut best, mut at) = (-1.0, 0);
        for (idx, z) in self.values.iter().enumerate() {
            let a = z.norm();
            if a > best {
                best = a;
                at = idx;
            }
        }
        (at / self.grid.nv, at % self.grid.nv)
    }

    /// The field multiplied by `c` (used for `lambda^{-(d-1)/2}` normalization).
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|z| *z *= c);
        out
    }

    /// Fills `edge_r` and `edge_v` from the current values.
    pub(crate) fn update_edges(&mut self) {
        let total = l1_norm(self);
        if !(total > 0.0) {
            return;
        }
        let r_cut = 0.95 * self.grid.r_hi();
        let v_lo = self.grid.v0 - 0.5 * self.grid.dv;
        let v_cut = v_lo + 0.95 * (self.grid.v_hi() - v_lo);
        let (mut er, mut ev) = (0.0, 0.0);
        for i in 0..self.grid.nr() {
            for j in 0..self.grid.nv {
                let m = self.value(i, j).norm() * self.weight(i, j);
                if self.grid.r[i] > r_cut {
                    er += m;
                }
                if self.grid.v(j) > v_cut {
                    ev += m;
                }
            }
        }
        self.diagnostics.edge_r = er / total;
        self.diagnostics.edge_v = ev / total;
    }
}

/// `Gamma(n/2)` for a positive integer `n`.
fn gamma_half(n: usize) -> f64 {
    let mut g = if n % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut m = if n % 2 == 0 { 2 } else { 1 };
    while m < n {
        g *= m as f64 / 2.0;
        m += 2;
    }
    g
}

/// Surface measure `omega_{n-1} = 2 pi^{n/2} / Gamma(n/2)` of the unit sphere in `R^n`.
pub fn sphere_measure(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// `omega_{d1-1} omega_{d2-1} r^{d1-1} (v/4)^{d2-1} (dv/4) dr`.
pub fn cell_weight(d1: usize, d2: usize, r: f64, dr: f64, v: f64, dv: f64) -> f64 {
    sphere_measure(d1) * sphere_measure(d2) * r.powi(d1 as i32 - 1) * (v / 4.0).powi(d2 as i32 - 1) * (dv / 4.0) * dr
}

/// L^1 norm on `R^{d1} x R^{d2}` computed in radial coordinates.
pub fn l1_norm(field: &KernelField) -> f64 {
    let mut s = 0.0;
    for i in 0..field.grid.nr() {
        for j in 0..field.grid.nv {
            s += field.value(i, j).norm() * field.weight(i, j);
        }
    }
    s
}

/// Largest sampled `|K|`.
pub fn linf_norm(field: &KernelField) -> f64 {
    field.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `C_{lambda,k,l} = lambda^{1 + d2/2} k^{d2-1} (2^l k)^{d1/2}`.
pub fn c_frak(lambda: f64, k: u64, l: u32, d1: usize, d2: usize) -> f64 {
    let kf = k as f64;
    lambda.powf(1.0 + d2 as f64 / 2.0) * kf.powi(d2 as i32 - 1) * (2f64.powi(l as i32) * kf).powf(d1 as f64 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_max_values() {
        assert_eq!(k_max(1024.0).unwrap(), 8192);
        assert_eq!(k_max(1.0).unwrap(), 8);
        assert!(k_max(0.5).is_err());
    }

    #[test]
    fn jn_set_values() {
        assert_eq!(jn_set(0), vec![1]);
        assert_eq!(jn_set(3), (1..=32).collect::<Vec<_>>());
        let s9 = jn_set(9);
        assert_eq!((s9[0], *s9.last().unwrap()), (2, 2048));
    }

    #[test]
    fn joint_spectrum_scan_respects_k_bound() {
        for lambda in [4.0, 16.0] {
            let k = max_admissible_k(lambda, 2, 10_000, 20_000).unwrap();
            assert!(k < k_max(lambda).unwrap(), "lambda {lambda}: k = {k}");
        }
    }

    #[test]
    fn sphere_measures() {
        assert!((sphere_measure(1) - 2.0).abs() < 1e-15);
        assert!((sphere_measure(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_measure(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_measure(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn indicator_l1_is_the_group_volume() {
        // {|x| <= 1, |u| <= 1} on H_1: area pi in x times length 2 in u.
        let grid = RadialGrid::uniform(1.0, 0.01, 0.0, 4.0, 0.02).unwrap();
        let n = grid.nr() * grid.nv;
        let field = KernelField {
            index: DecompositionIndex::main(8.0),
            component: Component::K0,
            d1: 2,
            d2: 1,
            grid,
            values: vec![Complex64::new(1.0, 0.0); n],
            rescaled: false,
            diagnostics: FieldDiagnostics::default(),
        };
        assert!((l1_norm(&field) - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn index_validation() {
        assert!(DecompositionIndex::band(4.0, 31, 1).validate().is_ok());
        assert!(DecompositionIndex::band(4.0, 32, 1).validate().is_err());
        assert!(DecompositionIndex::band(4.0, 3, 0).validate().is_err());
        let mut idx = DecompositionIndex::band(32.0, 3, 1);
        idx.j = Some(5);
        idx.n = Some(3);
        assert!(idx.validate().is_ok());
        idx.n = Some(16);
        assert!(idx.validate().is_err());
    }
}
