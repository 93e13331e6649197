//! Assembly of the radial kernels `K^0_lambda`, `K^{k,l}_lambda`, their band sums and
//! the `A`/`B` split.
//!
//! In the variables `s = 1/(4 tau)`, `t = 2 pi tau |mu| / lambda`,
//!
//! `K^{k,l}_lambda(r, v) = lambda^{d2 + (d1+1)/2} int int beta_lambda(s) eta_l(t - k pi)
//!     (t / sin t)^{d1/2} t^{d2-1} e^{i lambda s psi(t, r)} J_{d2}(s lambda t v) ds dt`
//!
//! with `psi(t, r) = 1 - r^2 t cot t`, `v = 4|u|`; `K^0_lambda` is the same integral
//! with `eta_0(t)`, `t in (0, 5 pi / 8)`. The `t`-integral is a midpoint rule on each
//! component of the (smooth, compactly supported) cutoff, with a density chosen from
//! the largest phase speed `lambda * s * |d/dt (psi +- t v)|` over the window. For
//! `d2 = 1` the `s`-integral is read off the tabulated Fourier transform of `beta`
//! ([`BTable`]); for other `d2` it is a composite Gauss-Legendre rule per sample.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

use super::beta::{BTable, BTableOptions, BetaLambda, BETA_SUPPORT};
use super::{c_frak, Component, DecompositionIndex, FieldDiagnostics, KernelField, RadialGrid};
use crate::error::{Error, Result};
use crate::phase::{curve, jkl_support};
use crate::special::bessel::{bessel_script, bessel_split};
use crate::special::cutoff::{eta, eta0, eta_sum, ETA0_PLATEAU, ETA0_SUPPORT};
use crate::special::quad::{gauss_legendre, integrate, oscillatory_quad, QuadOptions};
use crate::subordination::{ALambda, A_SUPPORT};

/// `lambda` from which on the asymptotic statements are formulated.
pub const ASYMPTOTIC_LAMBDA: f64 = 1024.0;

/// Largest `lambda` of the desk-scale budget.
pub const MAX_LAMBDA: f64 = 1024.0;

/// Largest number of `(r, v)` samples of one kernel field.
pub const MAX_CELLS: usize = 100_000_000;

/// Grid and quadrature tuning of the kernel assembly.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KernelOptions {
    /// `t` nodes per shortest phase wavelength.
    pub points_per_wavelength: f64,
    /// Least number of `t` nodes per component of the cutoff support.
    pub nt_min: usize,
    /// `dr = r_step * (lambda k 2^l)^{-1/2}`.
    pub r_step: f64,
    /// The `r`-window is `[0, r_extent * 1.25 * 2^{-l} / k + r_margin * (lambda k 2^l)^{-1/2}]`.
    pub r_extent: f64,
    pub r_margin: f64,
    /// `dv = v_step / (lambda k)`.
    pub v_step: f64,
    /// The `v`-window is `[0, v_extent / (k pi)]`.
    pub v_extent: f64,
    /// `K^0` window `[0, k0_r_hi] x [0, k0_v_hi]` with steps `k0_step / lambda`.
    pub k0_r_hi: f64,
    pub k0_v_hi: f64,
    pub k0_step: f64,
    /// Compute the `t`-density certificate.
    pub certify: bool,
    /// Largest admissible relative change under doubled `t` density.
    pub certificate_tol: f64,
    pub table: BTableOptions,
    /// Largest number of `s`-integrand evaluations of the generic (`d2 != 1`) path.
    pub generic_budget: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            points_per_wavelength: 4.0,
            nt_min: 400,
            r_step: 0.1,
            r_extent: 1.3,
            r_margin: 10.0,
            v_step: 0.3,
            v_extent: 3.0,
            k0_r_hi: 1.6,
            k0_v_hi: 1.2,
            k0_step: 0.3,
            certify: false,
            certificate_tol: 0.005,
            table: BTableOptions::default(),
            generic_budget: 2e9,
        }
    }
}

/// Which `t`-cutoff a piece carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    /// `eta_0(t)`, `t in (0, 5 pi / 8)`.
    Main,
    /// `eta_l(t - k pi)`, `t in J_{k,l}`.
    Kl { k: u64, l: u32 },
}

/// Which part of the kernel is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    /// `K` itself.
    Full,
    /// `lambda^{-(d-1)/2}`-normalized part with phase `s (psi - t v)`.
    A,
    /// `lambda^{-(d-1)/2}`-normalized part with phase `s (psi + t v)`.
    B,
}

/// Per-`lambda` data shared by all pieces: `beta_lambda` and (for `d2 = 1`) its table.
#[derive(Debug, Clone)]
pub struct WaveContext {
    pub lambda: f64,
    pub d1: usize,
    pub d2: usize,
    pub beta: BetaLambda,
    pub table: Option<BTable>,
    /// Largest phase rate `|d arg beta / ds|` of `beta_lambda` on its support.
    pub beta_rate: f64,
}

impl WaveContext {
    pub fn new(d1: usize, d2: usize, lambda: f64, opts: &KernelOptions) -> Result<Self> {
        if d1 < 2 || d1 % 2 != 0 || d2 < 1 {
            return Err(Error::InvalidArgument(format!("need even d1 >= 2 and d2 >= 1, got ({d1}, {d2})")));
        }
        if !(lambda >= 1.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda = {lambda} must be >= 1")));
        }
        if lambda > MAX_LAMBDA {
            return Err(Error::Budget(format!("lambda = {lambda} exceeds the budget of {MAX_LAMBDA}")));
        }
        let beta = BetaLambda::new(lambda, d1, d2)?;
        Self::from_beta(beta, opts)
    }

    /// Reuses a precomputed `beta_lambda`.
    pub fn from_beta(beta: BetaLambda, opts: &KernelOptions) -> Result<Self> {
        let table = if beta.d2 == 1 { Some(BTable::new(&beta, &opts.table)?) } else { None };
        let beta_rate = phase_rate(&beta);
        Ok(Self { lambda: beta.lambda, d1: beta.d1, d2: beta.d2, beta, table, beta_rate })
    }

    /// `eta(t) (t / sin t)^{d1/2} t^{d2-1}` for the band.
    fn amplitude(&self, band: Band, t: f64) -> f64 {
        let cut = match band {
            Band::Main => eta0(t),
            Band::Kl { k, l } => eta(l, t - k as f64 * PI),
        };
        if cut == 0.0 {
            return 0.0;
        }
        let ts = if t.abs() < 1e-8 { 1.0 } else { t / t.sin() };
        cut * ts.powi(self.d1 as i32 / 2) * t.powi(self.d2 as i32 - 1)
    }

    fn intervals(band: Band) -> Vec<(f64, f64)> {
        match band {
            Band::Main => vec![(0.0, ETA0_SUPPORT)],
            Band::Kl { k, l } => jkl_support(k as u32, l).to_vec(),
        }
    }

    /// Midpoint nodes in `t` with weights `amplitude * dt`, sized for phase speeds up to
    /// `lambda * s_max * (r_hi^2 |g'(t)| + v_hi)`.
    fn t_nodes(&self, band: Band, r_hi: f64, v_hi: f64, density: usize, opts: &KernelOptions) -> TNodes {
        let mut nodes = TNodes::default();
        for (a, b) in Self::intervals(band) {
            let mut rate: f64 = 0.0;
            for i in 0..=256 {
                let t = a + (b - a) * i as f64 / 256.0;
                rate = rate.max(r_hi * r_hi * g_prime(t).abs());
            }
            rate += v_hi;
            let waves = self.lambda * BETA_SUPPORT.1 * rate * (b - a) / (2.0 * PI);
            let nt = ((opts.points_per_wavelength * waves).ceil() as usize).max(opts.nt_min) * density.max(1);
            let dt = (b - a) / nt as f64;
            for i in 0..nt {
                let t = a + (i as f64 + 0.5) * dt;
                let w = self.amplitude(band, t) * dt;
                if w != 0.0 {
                    nodes.t.push(t);
                    nodes.w.push(w);
                    nodes.g.push(g_value(t));
                }
            }
        }
        nodes
    }

    fn prefactor(&self, kind: PointKind) -> f64 {
        let (d1, d2) = (self.d1 as f64, self.d2 as f64);
        match kind {
            PointKind::Full => self.lambda.powf(d2 + (d1 + 1.0) / 2.0),
            PointKind::A | PointKind::B => self.lambda.powf(1.0 + d2 / 2.0),
        }
    }

    /// Values on rows `rows` times the uniform `v` columns, prefactor included.
    #[allow(clippy::too_many_arguments)]
    fn evaluate(
        &self,
        band: Band,
        kind: PointKind,
        rows: &[f64],
        v0: f64,
        dv: f64,
        nv: usize,
        rate_window: (f64, f64),
        density: usize,
        opts: &KernelOptions,
    ) -> Result<(Vec<Complex64>, usize)> {
        let nodes = self.t_nodes(band, rate_window.0, rate_window.1, density, opts);
        let pref = self.prefactor(kind);
        let nt = nodes.t.len();
        if let Some(table) = &self.table {
            let signs: &[f64] = match kind {
                PointKind::Full => &[-1.0, 1.0],
                PointKind::A => &[-1.0],
                PointKind::B => &[1.0],
            };
            // J_1(sigma) = sqrt(2/pi) cos(sigma) = (e^{i sigma} + e^{-i sigma}) / sqrt(2 pi).
            let c = pref / (2.0 * PI).sqrt();
            let mut vals = fast_rows(self.lambda, table, &nodes, rows, v0, dv, nv, signs);
            vals.iter_mut().for_each(|z| *z *= c);
            Ok((vals, nt))
        } else {
            let est = rows.len() as f64 * nv as f64 * nt as f64 * 16.0 * 4.0;
            if est > opts.generic_budget {
                return Err(Error::Budget(format!("generic kernel path needs ~{est:.2e} evaluations")));
            }
            let out: Vec<Vec<Complex64>> = rows
                .par_iter()
                .map(|&r| {
                    (0..nv)
                        .map(|j| self.generic_point(&nodes, kind, r, v0 + j as f64 * dv).map(|z| z * pref))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?;
            Ok((out.concat(), nt))
        }
    }

    /// `sum_q w_q int beta(s) (s-kernel) ds` by composite Gauss-Legendre in `s`.
    fn generic_point(&self, nodes: &TNodes, kind: PointKind, r: f64, v: f64) -> Result<Complex64> {
        let (x16, w16) = gauss_legendre(16);
        let (sa, sb) = BETA_SUPPORT;
        let lam = self.lambda;
        let mut acc = Complex64::new(0.0, 0.0);
        for q in 0..nodes.t.len() {
            let t = nodes.t[q];
            let psi = 1.0 - r * r * nodes.g[q];
            let speed = lam * (psi.abs() + t * v) + self.beta_rate;
            let panels = ((speed * (sb - sa) / (2.0 * PI)).ceil() as usize).max(1) + 1;
            let h = (sb - sa) / panels as f64;
            let mut s_int = Complex64::new(0.0, 0.0);
            for p in 0..panels {
                let c = sa + (p as f64 + 0.5) * h;
                for (xi, wi) in x16.iter().zip(&w16) {
                    let s = c + 0.5 * h * xi;
                    let b = self.beta.eval(s);
                    if b == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let sigma = s * lam * t * v;
                    let k = match kind {
                        PointKind::Full => {
                            Complex64::from_polar(1.0, lam * s * psi) * bessel_script(self.d2, sigma)?
                        }
                        PointKind::A => {
                            let (w1, _) = bessel_split(self.d2, sigma)?;
                            Complex64::from_polar(1.0, lam * s * (psi - t * v)) * w1
                        }
                        PointKind::B => {
                            let (_, w2) = bessel_split(self.d2, sigma)?;
                            Complex64::from_polar(1.0, lam * s * (psi + t * v)) * w2
                        }
                    };
                    s_int += b * k * (0.5 * h * wi);
                }
            }
            acc += s_int * nodes.w[q];
        }
        Ok(acc)
    }
}

/// `max |d arg beta / ds|` over the support, sampled where `|beta|` is not negligible.
fn phase_rate(beta: &BetaLambda) -> f64 {
    const SAMPLES: usize = 8192;
    let (sa, sb) = BETA_SUPPORT;
    let h = (sb - sa) / SAMPLES as f64;
    let vals: Vec<Complex64> = (0..=SAMPLES).map(|i| beta.eval(sa + i as f64 * h)).collect();
    let peak = vals.iter().map(|b| b.norm()).fold(0.0, f64::max);
    vals.windows(2)
        .filter(|p| p[0].norm() > 1e-6 * peak && p[1].norm() > 1e-6 * peak)
        .map(|p| (p[1] * p[0].conj()).arg().abs() / h)
        .fold(0.0, f64::max)
}

#[derive(Debug, Default)]
struct TNodes {
    t: Vec<f64>,
    /// `amplitude(t) dt`.
    w: Vec<f64>,
    /// `t cot t`.
    g: Vec<f64>,
}

fn g_value(t: f64) -> f64 {
    if t.abs() < 1e-6 {
        1.0 - t * t / 3.0
    } else {
        t * t.cos() / t.sin()
    }
}

/// `d/dt (t cot t) = (sin 2t - 2t) / (2 sin^2 t)`.
fn g_prime(t: f64) -> f64 {
    if t.abs() < 1e-3 {
        -2.0 * t / 3.0
    } else {
        let s = t.sin();
        ((2.0 * t).sin() - 2.0 * t) / (2.0 * s * s)
    }
}

/// `sum_q w_q sum_sign B(lambda (psi(t_q, r) + sign t_q v))` on each row.
#[allow(clippy::too_many_arguments)]
fn fast_rows(
    lambda: f64,
    table: &BTable,
    nodes: &TNodes,
    rows: &[f64],
    v0: f64,
    dv: f64,
    nv: usize,
    signs: &[f64],
) -> Vec<Complex64> {
    let inv = table.inv_dw();
    let len = table.w_max() - table.w_min;
    let len_idx = len * inv;
    let out: Vec<Vec<Complex64>> = rows
        .par_iter()
        .map(|&r| {
            let r2 = r * r;
            let mut row = vec![Complex64::new(0.0, 0.0); nv];
            for q in 0..nodes.t.len() {
                let base = lambda * (1.0 - r2 * nodes.g[q]);
                let sl = lambda * nodes.t[q];
                let wq = nodes.w[q];
                for &sg in signs {
                    let f0 = (base + sg * sl * v0 - table.w_min) * inv;
                    let df = sg * sl * dv * inv;
                    let (lo, hi) = index_range(f0, df, len_idx, nv);
                    for (j, slot) in row.iter_mut().enumerate().take(hi).skip(lo) {
                        *slot += table.eval_index(f0 + df * j as f64) * wq;
                    }
                }
            }
            row
        })
        .collect();
    out.concat()
}

/// The `j in [0, nv)` with `0 <= f0 + df j < len` (conservatively widened by one).
fn index_range(f0: f64, df: f64, len: f64, nv: usize) -> (usize, usize) {
    if df == 0.0 {
        return if f0 >= 0.0 && f0 < len { (0, nv) } else { (0, 0) };
    }
    let (a, b) = ((0.0 - f0) / df, (len - f0) / df);
    let (lo, hi) = if df > 0.0 { (a, b) } else { (b, a) };
    let lo = (lo.floor() - 1.0).max(0.0);
    let hi = (hi.ceil() + 1.0).min(nv as f64);
    if hi <= lo {
        (0, 0)
    } else {
        (lo as usize, hi as usize)
    }
}

/// One summand of a field: a band evaluated on the first `rows` grid rows.
#[derive(Debug, Clone, Copy)]
struct Piece {
    band: Band,
    kind: PointKind,
    rows: usize,
    rate_window: (f64, f64),
}

fn window_kl(lambda: f64, k: u64, l: u32, opts: &KernelOptions) -> (f64, f64, f64, f64) {
    let kf = k as f64;
    let wr = (lambda * kf * 2f64.powi(l as i32)).powf(-0.5);
    let r_hi = opts.r_extent * 1.25 * 2f64.powi(-(l as i32)) / kf + opts.r_margin * wr;
    let dr = opts.r_step * wr;
    let v_hi = opts.v_extent / (kf * PI);
    let dv = opts.v_step / (lambda * kf);
    (r_hi, dr, v_hi, dv)
}

fn build(
    ctx: &WaveContext,
    index: DecompositionIndex,
    component: Component,
    grid: RadialGrid,
    pieces: &[Piece],
    rescaled: bool,
    opts: &KernelOptions,
) -> Result<KernelField> {
    let nv = grid.nv;
    let cells = grid.nr().saturating_mul(nv);
    if cells > MAX_CELLS {
        return Err(Error::Budget(format!("kernel grid with {cells} cells exceeds the budget of {MAX_CELLS}")));
    }
    let mut values = vec![Complex64::new(0.0, 0.0); cells];
    let mut t_nodes = 0;
    for p in pieces {
        let (vals, nt) = ctx.evaluate(p.band, p.kind, &grid.r[..p.rows], grid.v0, grid.dv, nv, p.rate_window, 1, opts)?;
        t_nodes += nt;
        for (slot, v) in values.iter_mut().zip(vals) {
            *slot += v;
        }
    }
    let mut field = KernelField {
        index,
        component,
        d1: ctx.d1,
        d2: ctx.d2,
        grid,
        values,
        rescaled,
        diagnostics: FieldDiagnostics {
            t_nodes,
            edge_r: 0.0,
            edge_v: 0.0,
            certificate: None,
            below_asymptotic_regime: ctx.lambda < ASYMPTOTIC_LAMBDA,
        },
    };
    field.update_edges();
    if opts.certify {
        let change = certificate(ctx, &field, pieces, opts)?;
        field.diagnostics.certificate = Some(change);
        if !(change <= opts.certificate_tol) {
            return Err(Error::Resolution(format!(
                "doubling the t density changes the L1 norm by {:.3e} (> {:.1e})",
                change, opts.certificate_tol
            )));
        }
    }
    Ok(field)
}

/// Relative change of the L^1 norm over every 4th row and column when the `t` density is doubled.
fn certificate(ctx: &WaveContext, field: &KernelField, pieces: &[Piece], opts: &KernelOptions) -> Result<f64> {
    let g = &field.grid;
    let sub_rows: Vec<usize> = (0..g.nr()).filter(|i| i % 4 == 2).collect();
    let sub_cols: Vec<usize> = (0..g.nv).filter(|j| j % 4 == 2).collect();
    if sub_rows.is_empty() || sub_cols.is_empty() {
        return Ok(0.0);
    }
    let v0 = g.v(sub_cols[0]);
    let dv = 4.0 * g.dv;
    let nv = sub_cols.len();
    let mut fine = vec![Complex64::new(0.0, 0.0); sub_rows.len() * nv];
    for p in pieces {
        let rows: Vec<f64> = sub_rows.iter().filter(|&&i| i < p.rows).map(|&i| g.r[i]).collect();
        let (vals, _) = ctx.evaluate(p.band, p.kind, &rows, v0, dv, nv, p.rate_window, 2, opts)?;
        for (slot, v) in fine.iter_mut().zip(vals) {
            *slot += v;
        }
    }
    let (mut coarse_l1, mut fine_l1) = (0.0, 0.0);
    for (a, &i) in sub_rows.iter().enumerate() {
        for (b, &j) in sub_cols.iter().enumerate() {
            let w = field.weight(i, j);
            coarse_l1 += field.value(i, j).norm() * w;
            fine_l1 += fine[a * nv + b].norm() * w;
        }
    }
    if fine_l1 == 0.0 {
        return Ok(0.0);
    }
    Ok((coarse_l1 - fine_l1).abs() / fine_l1)
}

/// `K^0_lambda` on `[0, k0_r_hi] x [0, k0_v_hi]`.
pub fn assemble_k0(ctx: &WaveContext, opts: &KernelOptions) -> Result<KernelField> {
    let h = opts.k0_step / ctx.lambda;
    let grid = RadialGrid::uniform(opts.k0_r_hi, h, 0.0, opts.k0_v_hi, h)?;
    let piece = Piece { band: Band::Main, kind: PointKind::Full, rows: grid.nr(), rate_window: (opts.k0_r_hi, opts.k0_v_hi) };
    build(ctx, DecompositionIndex::main(ctx.lambda), Component::K0, grid, &[piece], false, opts)
}

fn check_kl(ctx: &WaveContext, k: u64, l: u32) -> Result<DecompositionIndex> {
    if k == 0 {
        return Err(Error::InvalidArgument("band pieces need k >= 1; use assemble_k0 for k = 0".into()));
    }
    let idx = DecompositionIndex::band(ctx.lambda, k, l);
    idx.validate()?;
    Ok(idx)
}

/// `K^{k,l}_lambda` on its window `[0, r_hi] x [0, 3 / (k pi)]`.
pub fn assemble_kkl(ctx: &WaveContext, k: u64, l: u32, opts: &KernelOptions) -> Result<KernelField> {
    let idx = check_kl(ctx, k, l)?;
    let (r_hi, dr, v_hi, dv) = window_kl(ctx.lambda, k, l, opts);
    let grid = RadialGrid::uniform(r_hi, dr, 0.0, v_hi, dv)?;
    let piece = Piece { band: Band::Kl { k, l }, kind: PointKind::Full, rows: grid.nr(), rate_window: (r_hi, v_hi) };
    build(ctx, idx, Component::Full, grid, &[piece], false, opts)
}

/// Number of `l`-bands that makes the band sum a full `K^k_lambda` at resolution `1 / (lambda k)`:
/// the smallest `L` with `2^L >= lambda k`. Finer bands live on `|t - k pi| < 2^{-L}`, below the
/// scale the spectral cut-off at `lambda` can resolve.
pub fn band_depth(lambda: f64, k: u64) -> u32 {
    ((lambda * k.max(1) as f64).log2().ceil() as u32).max(1)
}

/// `sum_{l=1}^{L} K^{k,l}_lambda` on a graded grid: each `K^{k,l}` is evaluated on its
/// own `r`-window with its own resolution; finer cells sit closer to `r = 0`.
pub fn assemble_kk_band(ctx: &WaveContext, k: u64, big_l: u32, opts: &KernelOptions) -> Result<KernelField> {
    if big_l == 0 {
        return Err(Error::InvalidArgument("the band sum needs L >= 1".into()));
    }
    let idx = DecompositionIndex::band_sum(ctx.lambda, k);
    check_kl(ctx, k, 1)?;
    let windows: Vec<(f64, f64, f64, f64)> = (1..=big_l).map(|l| window_kl(ctx.lambda, k, l, opts)).collect();
    let edges: Vec<f64> = windows.iter().rev().map(|w| w.0).collect();
    let steps: Vec<f64> = windows.iter().rev().map(|w| w.1).collect();
    let (v_hi, dv) = (windows[0].2, windows[0].3);
    let grid = RadialGrid::graded(&edges, &steps, 0.0, v_hi, dv)?;
    let pieces: Vec<Piece> = (1..=big_l)
        .map(|l| {
            let r_hi = windows[l as usize - 1].0;
            let rows = grid.r.partition_point(|&r| r < r_hi);
            Piece { band: Band::Kl { k, l }, kind: PointKind::Full, rows, rate_window: (r_hi, v_hi) }
        })
        .collect();
    build(ctx, idx, Component::Band, grid, &pieces, false, opts)
}

/// The `A` and `B` parts of `lambda^{-(d-1)/2} K^{k,l}_lambda` on `v >= v_min`.
#[derive(Debug, Clone)]
pub struct SplitAB {
    pub a: KernelField,
    pub b: KernelField,
    /// Lower edge of the region.
    pub v_min: f64,
}

/// `A^{k,l}` and `B^{k,l}` on the window of `K^{k,l}` restricted to `v >= c_region / (lambda k)`
/// (and, for `d2 != 1`, to `s lambda t v >= 2` on the whole support, where the Bessel split is defined).
pub fn split_ab(ctx: &WaveContext, k: u64, l: u32, c_region: f64, opts: &KernelOptions) -> Result<SplitAB> {
    let idx = check_kl(ctx, k, l)?;
    let (r_hi, dr, v_hi, dv) = window_kl(ctx.lambda, k, l, opts);
    let mut v_min = c_region / (ctx.lambda * k as f64);
    if ctx.d2 != 1 {
        let t_min = jkl_support(k as u32, l)[0].0;
        v_min = v_min.max(2.0 / (BETA_SUPPORT.0 * ctx.lambda * t_min));
    }
    if !(v_min < v_hi) {
        return Err(Error::InvalidArgument(format!("the split region v >= {v_min:.3e} is empty (v_hi = {v_hi:.3e})")));
    }
    let grid = RadialGrid::uniform(r_hi, dr, v_min, v_hi, dv)?;
    let mk = |kind, comp| {
        let piece = Piece { band: Band::Kl { k, l }, kind, rows: grid.nr(), rate_window: (r_hi, v_hi) };
        build(ctx, idx, comp, grid.clone(), &[piece], true, opts)
    };
    Ok(SplitAB { a: mk(PointKind::A, Component::A)?, b: mk(PointKind::B, Component::B)?, v_min })
}

/// L^1 mass of `lambda^{-(d-1)/2} K` over `{v < c / (lambda k)}`.
pub fn small_u_mass(field: &KernelField, c: f64) -> f64 {
    let lam = field.index.lambda;
    let k = field.index.k.max(1) as f64;
    let scale = if field.rescaled { 1.0 } else { lam.powf(-((field.d1 + field.d2) as f64 - 1.0) / 2.0) };
    let cut = c / (lam * k);
    let mut s = 0.0;
    for i in 0..field.grid.nr() {
        for j in 0..field.grid.nv {
            if field.grid.v(j) < cut {
                s += field.value(i, j).norm() * field.weight(i, j);
            }
        }
    }
    s * scale
}

/// Pointwise evaluation of a band (or, with `Band::Main`, of `K^0`) at `(r, v)`,
/// with the `t`-density sized for that point.
pub fn kernel_point(ctx: &WaveContext, band: Band, kind: PointKind, r: f64, v: f64, opts: &KernelOptions) -> Result<Complex64> {
    let (vals, _) = ctx.evaluate(band, kind, &[r], v, 1.0, 1, (r.max(1e-3), v), 1, opts)?;
    Ok(vals[0])
}

/// Direct evaluation (`d2 = 1`) of the band-`k` kernel restricted to `|t - k pi| >= 2^{-L} 3 pi / 8`
/// from its `(tau, mu)` representation
///
/// `lambda^{1/2} int dmu e^{2 pi i u mu} int dtau e^{i lambda/(4 tau)} a_lambda(tau)
///  [eta_0 - eta_0(2^L .)](2 pi |mu| tau / lambda - k pi) (|mu| / (2 sin(2 pi |mu| tau / lambda)))^{d1/2}
///  e^{-i |x|^2 (pi/2) |mu| cot(2 pi |mu| tau / lambda)}`,
///
/// by nested adaptive quadrature. This equals `sum_{l <= L} K^{k,l}_lambda(|x|, 4|u|)`.
pub fn band_kernel_direct(a: &ALambda, d1: usize, k: u64, big_l: u32, x_abs: f64, u: f64, tol: f64) -> Result<Complex64> {
    if k == 0 {
        return Err(Error::InvalidArgument("the direct band oracle needs k >= 1".into()));
    }
    let lam = a.lambda;
    let kp = k as f64 * PI;
    let hole = 2f64.powi(-(big_l as i32)) * ETA0_PLATEAU;
    let parts = [(kp - ETA0_SUPPORT, kp - hole), (kp + hole, kp + ETA0_SUPPORT)];
    let r2 = x_abs * x_abs;
    let inner_opts = QuadOptions::default().with_rel_tol(tol).with_abs_tol(1e-14);
    let outer_opts = QuadOptions::default().with_rel_tol(tol).with_abs_tol(1e-12);
    let inner = |tau: f64| -> Result<Complex64> {
        // mu = lambda t / (2 pi tau); 2 pi u mu = u lambda t / tau.
        let c = lam / (2.0 * PI * tau);
        let mut acc = Complex64::new(0.0, 0.0);
        for &(t0, t1) in &parts {
            let res = oscillatory_quad(
                |t: f64| -r2 * FRAC_PI_2 * c * t * t.cos() / t.sin(),
                |t: f64| {
                    let cut = eta_sum(big_l, t - kp);
                    if cut == 0.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let amp = (c * t / (2.0 * t.sin())).powi(d1 as i32 / 2);
                    Complex64::new(2.0 * (u * lam * t / tau).cos() * cut * amp * c, 0.0)
                },
                t0,
                t1,
                1.0,
                &inner_opts,
            )?;
            acc += res.value;
        }
        Ok(acc)
    };
    let failure = std::cell::RefCell::new(None);
    let outer = integrate(
        |tau| {
            if failure.borrow().is_some() {
                return Complex64::new(0.0, 0.0);
            }
            match inner(tau) {
                Ok(v) => v * a.eval(tau) * Complex64::from_polar(1.0, lam / (4.0 * tau)),
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    Complex64::new(0.0, 0.0)
                }
            }
        },
        A_SUPPORT.0,
        A_SUPPORT.1,
        &outer_opts,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(outer.value * lam.sqrt())
}

/// Chebyshev distance, in grid cells, from the arg-max of `|K|` to the singular curve
/// `{(r(t), v(t)) : 0 < |t - k pi| < 5 pi / 8}`.
pub fn singular_curve_distance(field: &KernelField) -> Result<f64> {
    let k = field.index.k;
    if k == 0 {
        return Err(Error::InvalidArgument("the singular curve of a band needs k >= 1".into()));
    }
    let (i, j) = field.argmax();
    let (r, v) = (field.grid.r[i], field.grid.v(j));
    let (dr, dv) = (field.grid.dr[i], field.grid.dv);
    let kp = k as f64 * PI;
    let n = 200_000;
    let mut best = f64::INFINITY;
    for m in 0..n {
        let off = ETA0_SUPPORT * ((m as f64 + 0.5) / n as f64 * 2.0 - 1.0);
        let c = curve(kp + off)?;
        let d = ((r - c.r).abs() / dr).max((v - c.v).abs() / dv);
        best = best.min(d);
    }
    Ok(best)
}

/// `2^{-l} C_{lambda,k,l}`, the scale of `||lambda^{-(d-1)/2} K^{k,l}||_inf`.
pub fn linf_scale(lambda: f64, k: u64, l: u32, d1: usize, d2: usize) -> f64 {
    2f64.powi(-(l as i32)) * c_frak(lambda, k, l, d1, d2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::{l1_norm, linf_norm};

    fn ctx(lambda: f64) -> WaveContext {
        WaveContext::new(2, 1, lambda, &KernelOptions::default()).unwrap()
    }

    #[test]
    fn budgets_are_enforced() {
        let opts = KernelOptions::default();
        assert!(matches!(WaveContext::new(2, 1, 1e6, &opts), Err(Error::Budget(_))));
        let tiny = KernelOptions { k0_step: 1e-4, ..opts };
        assert!(matches!(assemble_k0(&ctx(16.0), &tiny), Err(Error::Budget(_))));
    }

    #[test]
    fn band_depth_reaches_the_resolution_scale() {
        assert_eq!(band_depth(128.0, 4), 9);
        assert_eq!(band_depth(32.0, 1), 5);
        assert_eq!(band_depth(1.0, 1), 1);
        for (lam, k) in [(3.0, 5u64), (100.0, 7), (1024.0, 3)] {
            let l = band_depth(lam, k);
            assert!(2f64.powi(l as i32) >= lam * k as f64 && 2f64.powi(l as i32 - 1) < lam * k as f64);
        }
    }

    #[test]
    fn eta_support_is_respected() {
        let c = ctx(16.0);
        let nodes = c.t_nodes(Band::Kl { k: 2, l: 3 }, 0.1, 0.2, 1, &KernelOptions::default());
        let [j1, j2] = jkl_support(2, 3);
        assert!(nodes.t.iter().all(|&t| (t > j1.0 && t < j1.1) || (t > j2.0 && t < j2.1)));
        for t in [2.0 * PI - 0.05, 2.0 * PI, 2.0 * PI + 0.01, 2.0 * PI + 0.9] {
            let inside = (t > j1.0 && t < j1.1) || (t > j2.0 && t < j2.1);
            if !inside {
                assert_eq!(c.amplitude(Band::Kl { k: 2, l: 3 }, t), 0.0);
            }
        }
    }

    #[test]
    fn index_range_covers_table() {
        let (lo, hi) = index_range(-10.5, 1.0, 100.0, 50);
        assert!(lo <= 11 && hi == 50);
        assert_eq!(index_range(200.0, 1.0, 100.0, 50), (0, 0));
        let (lo, hi) = index_range(120.0, -1.0, 100.0, 50);
        assert!(lo <= 21 && hi == 50);
    }

    #[test]
    fn fast_and_generic_paths_agree() {
        let c = ctx(16.0);
        let opts = KernelOptions::default();
        let band = Band::Kl { k: 1, l: 1 };
        let rows = [0.05, 0.2, 0.35];
        let (v0, dv, nv) = (0.1, 0.07, 4);
        let (fast, _) = c.evaluate(band, PointKind::Full, &rows, v0, dv, nv, (0.4, 0.4), 1, &opts).unwrap();
        let nodes = c.t_nodes(band, 0.4, 0.4, 1, &opts);
        let pref = c.prefactor(PointKind::Full);
        let scale = fast.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (i, &r) in rows.iter().enumerate() {
            for j in 0..nv {
                let g = c.generic_point(&nodes, PointKind::Full, r, v0 + j as f64 * dv).unwrap() * pref;
                assert!((g - fast[i * nv + j]).norm() < 1e-8 * scale, "r {r} j {j}: {g} vs {}", fast[i * nv + j]);
            }
        }
    }

    #[test]
    fn small_band_has_finite_positive_norms() {
        let c = ctx(16.0);
        let f = assemble_kkl(&c, 2, 2, &KernelOptions::default()).unwrap();
        let l1 = l1_norm(&f);
        assert!(l1.is_finite() && l1 > 0.0);
        assert!(linf_norm(&f) > 0.0);
    }
}
