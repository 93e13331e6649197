//! Approximate subordination: `g(sqrt x) e^{i lambda sqrt x}` as a superposition of
//! Schrödinger factors `e^{i lambda s x}` plus a rapidly decaying remainder.
//!
//! For a bump `g` supported in `(1/2, 2)` and `lambda >= 1`,
//!
//! `g(sqrt x) e^{i lambda sqrt x} = chi_1(x) [ sqrt(lambda) int e^{i lambda / (4s)} a_lambda(s) e^{i lambda s x} ds + rho~_lambda(x) ]`
//!
//! with `a_lambda(s) = pi^{-1} sqrt(lambda) varsigma(s) int (y + 1/(2s)) g(y + 1/(2s)) e^{-i lambda s y^2} dy`
//! and `rho~_lambda` the inverse Fourier transform of `(1 - varsigma(2 pi xi / lambda)) Psi_lambda(xi)`,
//! where `Psi_lambda` is the Fourier transform of `x -> g(sqrt x) e^{i lambda sqrt x}`.
//! The identity is exact; every deviation measured here is numerical.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::special::cutoff::{chi1, varsigma};
use crate::special::quad::{gauss_legendre, oscillatory_quad, QuadOptions};
use crate::spectral::grid::{fft_along_axis, FftDirection};

/// Support of `varsigma` (and hence of `a_lambda`).
pub const A_SUPPORT: (f64, f64) = (1.0 / 9.0, 3.0);

/// Default number of frequency samples for `rho~_lambda`.
pub const RHO_FFT_POINTS: usize = 1 << 16;

/// Largest relative `|Psi|^2` mass tolerated in the outer 10% of the frequency box.
pub const ALIASING_TOL: f64 = 1e-10;

/// Nodes per interpolation panel of the `a_lambda` table.
const TABLE_NODES: usize = 20;

/// Options for the subordination computations.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SubordinationOptions {
    /// Quadrature tolerances for both the `y`-integral of `a_lambda` and the `s`-integral of `m_lambda`.
    pub quad: QuadOptions,
    /// Number of frequency samples for `rho~_lambda` (a power of two).
    pub fft_points: usize,
}

impl Default for SubordinationOptions {
    fn default() -> Self {
        Self { quad: QuadOptions::default().with_rel_tol(1e-9).with_abs_tol(1e-12), fft_points: RHO_FFT_POINTS }
    }
}

/// Rejects `g` that is visibly nonzero outside `(1/2, 2)`.
pub fn check_bump_support<G: Fn(f64) -> f64>(g: &G) -> Result<()> {
    for i in 0..=64 {
        let lo = 0.5 * i as f64 / 64.0;
        let hi = 2.0 + 2.0 * i as f64 / 64.0;
        if g(lo) != 0.0 || g(hi) != 0.0 {
            return Err(Error::InvalidArgument("g must be supported in (1/2, 2)".into()));
        }
    }
    Ok(())
}

/// `a_lambda(s)` by oscillatory quadrature of the `y`-integral.
pub fn a_lambda_at<G: Fn(f64) -> f64>(g: &G, lambda: f64, s: f64, opts: &QuadOptions) -> Result<Complex64> {
    let v = varsigma(s);
    if v == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let shift = 0.5 / s;
    let (a, b) = (0.5 - shift, 2.0 - shift);
    let r = oscillatory_quad(|y| -s * y * y, |y| Complex64::new((y + shift) * g(y + shift), 0.0), a, b, lambda, opts)?;
    Ok(r.value * (lambda.sqrt() / PI * v))
}

/// `a_lambda` on an arbitrary `s`-grid.
pub fn compute_a_lambda<G>(g: &G, lambda: f64, s_grid: &[f64], opts: &QuadOptions) -> Result<Vec<Complex64>>
where
    G: Fn(f64) -> f64 + Sync,
{
    check_bump_support(g)?;
    if !(lambda >= 1.0) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be >= 1")));
    }
    s_grid.par_iter().map(|&s| a_lambda_at(g, lambda, s, opts)).collect()
}

/// `a_lambda` tabulated on Gauss-Legendre panels of `[1/9, 3]`, evaluated anywhere by
/// barycentric interpolation inside each panel.
#[derive(Debug, Clone, PartialEq)]
pub struct ALambda {
    pub lambda: f64,
    /// Panel edges.
    pub edges: Vec<f64>,
    nodes: Vec<f64>,
    bary: Vec<f64>,
    /// `TABLE_NODES` values per panel.
    pub values: Vec<Complex64>,
}

impl ALambda {
    /// Tabulates `a_lambda` with oscillatory quadrature at every table node.
    ///
    /// Panels start finer on the steep rise of `varsigma` and where `a_lambda` has a
    /// stationary point, and are bisected until the interpolant agrees with direct
    /// quadrature at two interior check points to `opts.rel_tol * max(1, sup |a|)`.
    pub fn new<G>(g: &G, lambda: f64, opts: &QuadOptions) -> Result<Self>
    where
        G: Fn(f64) -> f64 + Sync,
    {
        check_bump_support(g)?;
        let (x, _) = gauss_legendre(TABLE_NODES);
        let bary: Vec<f64> = (0..TABLE_NODES)
            .map(|j| 1.0 / (0..TABLE_NODES).filter(|&k| k != j).map(|k| x[j] - x[k]).product::<f64>())
            .collect();
        let pieces: [(f64, f64, usize); 5] =
            [(1.0 / 9.0, 0.125, 6), (0.125, 0.25, 8), (0.25, 1.0, 30), (1.0, 2.0, 12), (2.0, 3.0, 12)];
        let mut panels: Vec<(f64, f64)> = Vec::new();
        let mut lo = A_SUPPORT.0;
        for (a, b, n) in pieces {
            for i in 1..=n {
                let hi = a + (b - a) * i as f64 / n as f64;
                panels.push((lo, hi));
                lo = hi;
            }
        }
        let eval_panel = |(a, b): (f64, f64)| -> Result<Vec<Complex64>> {
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            x.iter().map(|xi| a_lambda_at(g, lambda, c + h * xi, opts)).collect()
        };
        let mut done: Vec<((f64, f64), Vec<Complex64>)> = Vec::new();
        let mut todo: Vec<((f64, f64), Vec<Complex64>, u32)> = panels
            .par_iter()
            .map(|&p| eval_panel(p).map(|v| (p, v, 0u32)))
            .collect::<Result<_>>()?;
        let scale = todo.iter().flat_map(|(_, v, _)| v.iter().map(|z| z.norm())).fold(1.0, f64::max);
        let tol = opts.rel_tol * scale;
        while !todo.is_empty() {
            let checked: Vec<(bool, ((f64, f64), Vec<Complex64>, u32))> = todo
                .into_par_iter()
                .map(|(p, v, depth)| {
                    let mut ok = depth >= 12;
                    if !ok {
                        ok = true;
                        for t in [0.37, -0.61] {
                            let s = 0.5 * (p.0 + p.1) + 0.5 * (p.1 - p.0) * t;
                            let direct = a_lambda_at(g, lambda, s, opts)?;
                            if (interpolate(&x, &bary, &v, t) - direct).norm() > tol {
                                ok = false;
                            }
                        }
                    }
                    Ok((ok, (p, v, depth)))
                })
                .collect::<Result<_>>()?;
            let mut next = Vec::new();
            for (ok, (p, v, depth)) in checked {
                if ok {
                    done.push((p, v));
                } else {
                    let m = 0.5 * (p.0 + p.1);
                    next.push(((p.0, m), depth + 1));
                    next.push(((m, p.1), depth + 1));
                }
            }
            todo = next.into_par_iter().map(|(p, d)| eval_panel(p).map(|v| (p, v, d))).collect::<Result<_>>()?;
        }
        done.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0));
        let mut edges = vec![A_SUPPORT.0];
        let mut values = Vec::with_capacity(done.len() * TABLE_NODES);
        for ((_, b), v) in done {
            edges.push(b);
            values.extend(v);
        }
        Ok(Self { lambda, edges, nodes: x, bary, values })
    }

    /// `a_lambda(s)` (zero outside `[1/9, 3]`).
    pub fn eval(&self, s: f64) -> Complex64 {
        if !(s > A_SUPPORT.0 && s < A_SUPPORT.1) {
            return Complex64::new(0.0, 0.0);
        }
        let p = self.edges.partition_point(|&e| e <= s).saturating_sub(1).min(self.edges.len() - 2);
        let (a, b) = (self.edges[p], self.edges[p + 1]);
        let t = (2.0 * s - a - b) / (b - a);
        interpolate(&self.nodes, &self.bary, &self.values[p * TABLE_NODES..(p + 1) * TABLE_NODES], t)
    }

    /// Largest tabulated `|a_lambda|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Barycentric interpolation on the reference nodes `x` at `t in [-1, 1]`.
fn interpolate(x: &[f64], bary: &[f64], vals: &[Complex64], t: f64) -> Complex64 {
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for j in 0..x.len() {
        let d = t - x[j];
        if d == 0.0 {
            return vals[j];
        }
        let w = bary[j] / d;
        num += vals[j] * w;
        den += w;
    }
    num / den
}

/// `m_lambda(rho) = sqrt(lambda) int e^{i lambda / (4 tau)} a_lambda(tau) e^{i tau rho / lambda} dtau`.
pub fn m_lambda(a: &ALambda, rho: f64, opts: &QuadOptions) -> Result<Complex64> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidArgument(format!("spectral value {rho} must be >= 0")));
    }
    let lam = a.lambda;
    let x = rho / (lam * lam);
    let r = oscillatory_quad(|t| 0.25 / t + t * x, |t| a.eval(t), A_SUPPORT.0, A_SUPPORT.1, lam, opts)?;
    Ok(r.value * lam.sqrt())
}

/// Whether the stationary point `tau = lambda / (2 sqrt rho)` of the `m_lambda` phase
/// lies in `[1/16, 4]`.
pub fn stationary_point_in_support(lambda: f64, rho: f64) -> bool {
    if rho <= 0.0 {
        return false;
    }
    let t = lambda / (2.0 * rho.sqrt());
    (1.0 / 16.0..=4.0).contains(&t)
}

/// `rho~_lambda`, stored as the masked spectrum `(1 - varsigma(2 pi xi / lambda)) Psi_lambda(xi)`
/// on `xi in [-4 lambda, 4 lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoLambda {
    pub lambda: f64,
    pub xi0: f64,
    pub dxi: f64,
    pub masked: Vec<Complex64>,
    /// Relative `|Psi|^2` mass in the outer 10% of the box.
    pub outer_mass: f64,
}

impl RhoLambda {
    /// `rho~_lambda(x)` by direct inverse transform of the masked spectrum.
    pub fn eval_tilde(&self, x: f64) -> Complex64 {
        let step = Complex64::from_polar(1.0, 2.0 * PI * x * self.dxi);
        let mut e = Complex64::from_polar(self.dxi, 2.0 * PI * x * self.xi0);
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, m) in self.masked.iter().enumerate() {
            if k % 1024 == 0 {
                // re-anchor the running phase to keep rounding drift negligible
                e = Complex64::from_polar(self.dxi, 2.0 * PI * x * (self.xi0 + k as f64 * self.dxi));
            }
            acc += m * e;
            e *= step;
        }
        acc
    }

    /// `rho_lambda(x) = chi_1(x) rho~_lambda(x)`.
    pub fn eval(&self, x: f64) -> Complex64 {
        let c = chi1(x);
        if c == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.eval_tilde(x) * c
        }
    }

    /// `max |rho_lambda|` over `n` equispaced points of `[a, b]`.
    pub fn sup_on(&self, a: f64, b: f64, n: usize) -> f64 {
        (0..n)
            .into_par_iter()
            .map(|i| self.eval(a + (b - a) * i as f64 / (n - 1).max(1) as f64).norm())
            .reduce(|| 0.0, f64::max)
    }
}

/// `rho~_lambda` by frequency-domain masking of the FFT of `x -> g(sqrt x) e^{i lambda sqrt x}`.
///
/// The function is sampled on `x_j = j dx`, `dx = 1 / (8 lambda)`, over one period
/// `N dx`, which must contain its support `[1/4, 4]` with room to spare.
pub fn compute_rho_lambda<G: Fn(f64) -> f64>(g: &G, lambda: f64, opts: &SubordinationOptions) -> Result<RhoLambda> {
    check_bump_support(g)?;
    let n = opts.fft_points;
    if !n.is_power_of_two() || n < 1024 {
        return Err(Error::InvalidArgument("fft_points must be a power of two >= 1024".into()));
    }
    if !(lambda >= 1.0) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be >= 1")));
    }
    let dxi = 8.0 * lambda / n as f64;
    let dx = 1.0 / (n as f64 * dxi);
    if n as f64 * dx < 4.5 {
        return Err(Error::Aliasing(format!("period {:.3} of the x-grid does not contain [1/4, 4]", n as f64 * dx)));
    }
    // Psi(xi_k) = dx sum_j G(x_j) e^{-2 pi i xi_k x_j}, xi_k = (k - N/2) dxi; the shift
    // by N/2 is the factor (-1)^j.
    let mut buf: Vec<Complex64> = (0..n)
        .map(|j| {
            let x = j as f64 * dx;
            let sx = x.sqrt();
            let v = g(sx);
            let sign = if j % 2 == 0 { dx } else { -dx };
            if v == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(v * sign, lambda * sx)
            }
        })
        .collect();
    fft_along_axis(&mut buf, &[n], 0, FftDirection::Forward);
    let xi0 = -((n / 2) as f64) * dxi;
    let total: f64 = buf.iter().map(|v| v.norm_sqr()).sum();
    let edge = 0.9 * 4.0 * lambda;
    let outer: f64 = buf.iter().enumerate().filter(|(k, _)| (xi0 + *k as f64 * dxi).abs() > edge).map(|(_, v)| v.norm_sqr()).sum();
    let outer_mass = if total > 0.0 { outer / total } else { 0.0 };
    if outer_mass > ALIASING_TOL {
        return Err(Error::Aliasing(format!("spectral mass {outer_mass:.3e} in the outer 10% of the frequency box")));
    }
    let masked = buf
        .into_iter()
        .enumerate()
        .map(|(k, v)| v * (1.0 - varsigma(2.0 * PI * (xi0 + k as f64 * dxi) / lambda)))
        .collect();
    Ok(RhoLambda { lambda, xi0, dxi, masked, outer_mass })
}

/// Everything computed for one `(g, lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinationResult {
    pub lambda: f64,
    pub a: ALambda,
    pub rho: RhoLambda,
}

/// `a_lambda` and `rho_lambda` for one scale.
pub fn subordinate<G>(g: &G, lambda: f64, opts: &SubordinationOptions) -> Result<SubordinationResult>
where
    G: Fn(f64) -> f64 + Sync,
{
    let a = ALambda::new(g, lambda, &opts.quad)?;
    let rho = compute_rho_lambda(g, lambda, opts)?;
    Ok(SubordinationResult { lambda, a, rho })
}

/// One row of a reconstruction study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionPoint {
    pub x: f64,
    pub exact: Complex64,
    pub reconstructed: Complex64,
}

impl ReconstructionPoint {
    pub fn error(&self) -> f64 {
        (self.exact - self.reconstructed).norm()
    }
}

/// Evaluates `chi_1(x) [m_lambda(lambda^2 x) + rho~_lambda(x)]` on `x_grid` and compares
/// with `g(sqrt x) e^{i lambda sqrt x}`.
pub fn reconstruct_points<G>(res: &SubordinationResult, g: &G, x_grid: &[f64], opts: &QuadOptions) -> Result<Vec<ReconstructionPoint>>
where
    G: Fn(f64) -> f64 + Sync,
{
    let lam = res.lambda;
    x_grid
        .par_iter()
        .map(|&x| {
            let exact = if x > 0.0 { Complex64::from_polar(g(x.sqrt()), lam * x.sqrt()) } else { Complex64::new(0.0, 0.0) };
            let c = chi1(x);
            let reconstructed = if c == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                (m_lambda(&res.a, lam * lam * x, opts)? + res.rho.eval_tilde(x)) * c
            };
            Ok(ReconstructionPoint { x, exact, reconstructed })
        })
        .collect()
}

/// Maximum absolute reconstruction error over `x_grid`.
pub fn reconstruct_multiplier<G>(g: &G, lambda: f64, x_grid: &[f64], opts: &SubordinationOptions) -> Result<f64>
where
    G: Fn(f64) -> f64 + Sync,
{
    let res = subordinate(g, lambda, opts)?;
    let pts = reconstruct_points(&res, g, x_grid, &opts.quad)?;
    Ok(pts.iter().map(ReconstructionPoint::error).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::cutoff::standard_bump;

    #[test]
    fn a_lambda_vanishes_outside_varsigma_support() {
        let opts = QuadOptions::default();
        let v = compute_a_lambda(&standard_bump, 64.0, &[0.05, 0.11, 3.0, 3.5], &opts).unwrap();
        assert!(v.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn support_violation_is_rejected() {
        let wide = |x: f64| (-(x - 1.0) * (x - 1.0)).exp();
        assert!(compute_a_lambda(&wide, 64.0, &[0.5], &QuadOptions::default()).is_err());
    }

    #[test]
    fn table_interpolation_matches_direct_quadrature() {
        let opts = QuadOptions::default().with_rel_tol(1e-11).with_abs_tol(1e-13);
        let t = ALambda::new(&standard_bump, 64.0, &opts).unwrap();
        for s in [0.2, 0.3, 0.5, 0.777, 1.3, 2.5] {
            let d = a_lambda_at(&standard_bump, 64.0, s, &opts).unwrap();
            assert!((t.eval(s) - d).norm() < 1e-9, "s = {s}");
        }
    }

    #[test]
    fn linear_in_g() {
        let g2 = |x: f64| standard_bump(x) * x * x;
        let sum = |x: f64| 2.0 * standard_bump(x) - 3.0 * g2(x);
        let opts = QuadOptions::default().with_rel_tol(1e-12).with_abs_tol(1e-15);
        for s in [0.3, 0.6, 0.9] {
            let a1 = a_lambda_at(&standard_bump, 32.0, s, &opts).unwrap();
            let a2 = a_lambda_at(&g2, 32.0, s, &opts).unwrap();
            let a3 = a_lambda_at(&sum, 32.0, s, &opts).unwrap();
            assert!((a3 - (a1 * 2.0 - a2 * 3.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn stationary_flag() {
        assert!(stationary_point_in_support(64.0, 64.0 * 64.0));
        assert!(!stationary_point_in_support(64.0, (64.0f64 * 20.0).powi(2)));
    }
}
