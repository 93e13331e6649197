//! Joint functional calculus of `(L, U)` and the Plancherel identity.
//!
//! For `mu != 0` the twisted Laplacian `L^mu` on `R^{d1}` has eigenvalues
//! `2 pi |mu| (d1/2 + 2q)`, `q = 0, 1, ...`, and the orthogonal projection onto
//! the `q`-th eigenspace is twisted convolution with the radial kernel
//!
//! `P_q^mu(x) = |mu|^{d1/2} L_q^{(d1/2 - 1)}(pi |mu| |x|^2) e^{-pi |mu| |x|^2 / 2}`.
//!
//! Hence `K_phi^mu = sum_q phi(2 pi |mu| (d1/2 + 2q), 2 pi mu) P_q^mu`, and `K_phi`
//! follows by the inverse partial Fourier transform in the center.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use super::fourier::{dual_axis, inverse_partial_ft_center, partial_ft_center_with, FtOptions};
use super::grid::{Axis, CentralDomain, GridFunction};
use crate::error::{Error, Result};
use crate::group::{norm, HTypeGroup};
use crate::special::hermite::{hermite_all, HERMITE_MAX_ORDER};

/// Default number of Laguerre/Hermite levels.
pub const DEFAULT_QMAX: usize = 64;

/// Relative size of the spectral tail beyond `qmax` that is tolerated.
pub const TRUNCATION_TOL: f64 = 1e-8;

/// `L_0^{(a)}(s), ..., L_qmax^{(a)}(s)` by the three-term recurrence.
pub fn laguerre_all(qmax: usize, a: f64, s: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(qmax + 1);
    out.push(1.0);
    if qmax == 0 {
        return out;
    }
    out.push(1.0 + a - s);
    for q in 1..qmax {
        let qf = q as f64;
        let next = ((2.0 * qf + 1.0 + a - s) * out[q] - (qf + a) * out[q - 1]) / (qf + 1.0);
        out.push(next);
    }
    out
}

/// `P_0^mu(x), ..., P_qmax^mu(x)` for `|x|^2 = r2`.
pub fn projection_kernels(d1: usize, mu_abs: f64, qmax: usize, r2: f64) -> Vec<f64> {
    let s = PI * mu_abs * r2;
    if s > 1400.0 {
        return vec![0.0; qmax + 1];
    }
    let a = d1 as f64 / 2.0 - 1.0;
    let w = mu_abs.powf(d1 as f64 / 2.0) * (-0.5 * s).exp();
    laguerre_all(qmax, a, s).into_iter().map(|l| l * w).collect()
}

/// Eigenvalue `2 pi |mu| (d1/2 + 2q)` of `L^mu`.
pub fn twisted_eigenvalue(d1: usize, mu_abs: f64, q: usize) -> f64 {
    2.0 * PI * mu_abs * (d1 as f64 / 2.0 + 2.0 * q as f64)
}

/// Spectral multipliers `phi(2 pi |mu| (d1/2 + 2q), 2 pi mu)` for `q <= qmax`;
/// errors if `phi` is not negligible on `qmax < q <= 4 qmax + 4`.
fn multipliers<F>(d1: usize, phi: &F, mu: &[f64], qmax: usize) -> Result<Vec<Complex64>>
where
    F: Fn(f64, &[f64]) -> Complex64,
{
    let mu_abs = norm(mu);
    let rho2: Vec<f64> = mu.iter().map(|m| 2.0 * PI * m).collect();
    let vals: Vec<Complex64> = (0..=qmax).map(|q| phi(twisted_eigenvalue(d1, mu_abs, q), &rho2)).collect();
    let head = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tail = (qmax + 1..=4 * qmax + 4).map(|q| phi(twisted_eigenvalue(d1, mu_abs, q), &rho2).norm()).fold(0.0, f64::max);
    if tail > TRUNCATION_TOL * head.max(f64::MIN_POSITIVE) && tail > 0.0 {
        return Err(Error::Truncation(format!(
            "multiplier tail beyond q = {qmax} is {tail:.3e} (head {head:.3e}) at |mu| = {mu_abs:.4}"
        )));
    }
    Ok(vals)
}

/// `K_phi^mu(x) = sum_{q <= qmax} phi(...) P_q^mu(x)` on a central slice grid.
pub fn functional_calculus_slice<F>(g: &HTypeGroup, phi: &F, x_axes: &[Axis], mu: &[f64], qmax: usize) -> Result<GridFunction>
where
    F: Fn(f64, &[f64]) -> Complex64,
{
    if x_axes.len() != g.d1() || mu.len() != g.d2() {
        return Err(Error::Dimension("axes / mu do not match the group".into()));
    }
    let mu_abs = norm(mu);
    if !(mu_abs > 0.0) {
        return Err(Error::InvalidArgument("the kernel slice needs mu != 0".into()));
    }
    let m = multipliers(g.d1(), phi, mu, qmax)?;
    let mut out = GridFunction::zeros(x_axes.to_vec(), Vec::new(), CentralDomain::Mu)?;
    let mut c = vec![0.0; g.d1()];
    for idx in 0..out.len() {
        out.coords_into(idx, &mut c);
        let r2: f64 = c.iter().map(|v| v * v).sum();
        let p = projection_kernels(g.d1(), mu_abs, qmax, r2);
        out.values[idx] = m.iter().zip(&p).map(|(a, b)| a * b).sum();
    }
    Ok(out)
}

/// `K_phi = phi(L, U) delta` on the grid `x_axes x u_axes`.
///
/// The `mu`-slices are taken on the half-shifted dual grid of `u_axes` (so `mu = 0`
/// is never sampled) and summed by the inverse partial Fourier transform. `phi`
/// receives `(rho_1, rho_2)` with `rho_2 = 2 pi mu` the vector spectral parameter of `U`.
pub fn functional_calculus_kernel<F>(
    g: &HTypeGroup,
    phi: F,
    x_axes: &[Axis],
    u_axes: &[Axis],
    qmax: usize,
) -> Result<GridFunction>
where
    F: Fn(f64, &[f64]) -> Complex64 + Sync,
{
    if x_axes.len() != g.d1() || u_axes.len() != g.d2() {
        return Err(Error::Dimension("axes do not match the group".into()));
    }
    if qmax > 4096 {
        return Err(Error::Budget(format!("qmax = {qmax} exceeds 4096")));
    }
    let mu_axes: Vec<Axis> = u_axes.iter().map(|a| dual_axis(a, true)).collect();
    let mut out = GridFunction::zeros(x_axes.to_vec(), mu_axes.clone(), CentralDomain::Mu)?;
    let nmu: usize = mu_axes.iter().map(|a| a.n).product();
    let slices: Vec<GridFunction> = (0..nmu)
        .into_par_iter()
        .map(|m| {
            let mut r = m;
            let mut mu = vec![0.0; mu_axes.len()];
            for k in (0..mu_axes.len()).rev() {
                mu[k] = mu_axes[k].point(r % mu_axes[k].n);
                r /= mu_axes[k].n;
            }
            functional_calculus_slice(g, &phi, x_axes, &mu, qmax)
        })
        .collect::<Result<_>>()?;
    for (m, s) in slices.iter().enumerate() {
        for (ix, v) in s.values.iter().enumerate() {
            out.values[ix * nmu + m] = *v;
        }
    }
    inverse_partial_ft_center(&out, u_axes)
}

/// Outcome of [`plancherel_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlancherelReport {
    /// `||f||_2^2` on the grid.
    pub lhs: f64,
    /// `int ||pi_mu(f)||_HS^2 |mu|^{d1/2} dmu` from Hermite matrix coefficients.
    pub rhs: f64,
    /// `|lhs - rhs| / lhs` (0 for `f = 0`).
    pub gap: f64,
    /// Number of `mu`-samples that carried mass.
    pub slices: usize,
    /// Largest number of Hermite levels used for one slice.
    pub max_levels: usize,
    /// Largest relative coefficient mass in the outer quarter of the matrix.
    pub max_tail: f64,
    /// Whether some slice still had tail mass above the tolerance at the cap.
    pub truncated: bool,
}

impl PlancherelReport {
    pub fn triple(&self) -> (f64, f64, f64) {
        (self.lhs, self.rhs, self.gap)
    }
}

/// Relative outer-shell mass at which the Hermite truncation is accepted.
pub const PLANCHEREL_SHELL_TOL: f64 = 1e-10;

/// Both sides of the Plancherel identity for `f` on a Heisenberg group with `d1 = 2`.
///
/// `pi_mu(f) = int f^{-mu}(R_mu z) rho_{|mu|}(z, 0) dz` acts on `L^2(R)` with kernel
/// `K(xi, eta) = F2(eta - xi, -|mu| (xi + eta) / 2)`, where `F2` is the Fourier
/// transform of `F(z) = f^{-mu}(R_mu z)` in its second variable. The Hilbert-Schmidt
/// norm is the sum of the squared matrix coefficients against the rescaled Hermite
/// functions `h_a^{|mu|}`; the number of levels doubles from 64 until the outer
/// quarter of the matrix is negligible, capped by [`resolvable_levels`]. Slices that
/// hit the cap with a non-negligible outer quarter are flagged as truncated.
pub fn plancherel_check(g: &HTypeGroup, f: &GridFunction) -> Result<PlancherelReport> {
    if g.d1() != 2 {
        return Err(Error::Dimension("plancherel_check is implemented for d1 = 2".into()));
    }
    if f.x_axes.len() != 2 || f.c_axes.len() != g.d2() || f.central != CentralDomain::U {
        return Err(Error::Dimension("plancherel_check expects a function of (x, u) on the group".into()));
    }
    let ax = f.x_axes[0];
    if f.x_axes[1] != ax || !ax.is_centered() {
        return Err(Error::InvalidArgument("plancherel_check needs equal centered x-axes".into()));
    }
    let lhs = f.norm2_sq();
    let zero_report = PlancherelReport { lhs: 0.0, rhs: 0.0, gap: 0.0, slices: 0, max_levels: 0, max_tail: 0.0, truncated: false };
    if lhs == 0.0 {
        return Ok(zero_report);
    }
    let opts = FtOptions { half_shift: true, ..Default::default() };
    let fmu = partial_ft_center_with(f, &opts)?;
    let mu_axes = fmu.c_axes.clone();
    let nmu: usize = mu_axes.iter().map(|a| a.n).product();
    let nx = ax.n * ax.n;
    let dmu: f64 = mu_axes.iter().map(|a| a.step).product();
    let mass: Vec<f64> = (0..nmu).map(|m| (0..nx).map(|i| fmu.values[i * nmu + m].norm_sqr()).sum::<f64>()).collect();
    let total_mass: f64 = mass.iter().sum();
    let results: Vec<Option<(f64, usize, f64, bool)>> = (0..nmu)
        .into_par_iter()
        .map(|m| -> Result<Option<(f64, usize, f64, bool)>> {
            // mu_m, and the mirrored index of -mu_m on the symmetric half-shifted grid
            let mut r = m;
            let mut mu = vec![0.0; mu_axes.len()];
            let mut mirror = 0usize;
            let mut idx = vec![0usize; mu_axes.len()];
            for k in (0..mu_axes.len()).rev() {
                idx[k] = r % mu_axes[k].n;
                r /= mu_axes[k].n;
                mu[k] = mu_axes[k].point(idx[k]);
            }
            for k in 0..mu_axes.len() {
                mirror = mirror * mu_axes[k].n + (mu_axes[k].n - 1 - idx[k]);
            }
            if mass[mirror] <= 1e-18 * total_mass {
                return Ok(None);
            }
            let tau = norm(&mu);
            let rot = g.symplectic_rotation(&mu)?;
            let big_f = rotated_slice(&fmu, mirror, nmu, &ax, &rot)?;
            let cap = resolvable_levels(tau, ax.step);
            let mut levels = 64usize.min(cap);
            loop {
                let (hs2, shell) = hs_norm_sq(&big_f, &ax, tau, levels)?;
                let tail = if hs2 > 0.0 { shell / hs2 } else { 0.0 };
                if tail <= PLANCHEREL_SHELL_TOL || levels >= cap {
                    return Ok(Some((hs2 * tau * dmu, levels, tail, tail > PLANCHEREL_SHELL_TOL)));
                }
                levels = (2 * levels).min(cap);
            }
        })
        .collect::<Result<_>>()?;
    let mut rep = zero_report;
    rep.lhs = lhs;
    for (contrib, levels, tail, trunc) in results.into_iter().flatten() {
        rep.rhs += contrib;
        rep.slices += 1;
        rep.max_levels = rep.max_levels.max(levels);
        rep.max_tail = rep.max_tail.max(tail);
        rep.truncated |= trunc;
    }
    rep.gap = (rep.lhs - rep.rhs).abs() / rep.lhs;
    Ok(rep)
}

/// Number of rescaled Hermite functions `h_a^tau` that a grid of step `h` resolves:
/// the local frequency `sqrt(2a + 1) sqrt(2 pi tau) / (2 pi)` must stay below `1 / (2h)`.
/// Capped at [`HERMITE_MAX_ORDER`].
pub fn resolvable_levels(tau: f64, h: f64) -> usize {
    let s = (2.0 * PI * tau).sqrt();
    let r = PI / (s * h);
    let a = ((r * r - 1.0) / 2.0).floor().max(0.0) as usize;
    (a + 1).clamp(1, HERMITE_MAX_ORDER)
}

/// `F(z) = f^{-mu}(R z)` for a signed-permutation `R`, on the `x`-grid of `f`.
fn rotated_slice(fmu: &GridFunction, m: usize, nmu: usize, ax: &Axis, rot: &nalgebra::DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = ax.n;
    // (R z)_i = sign_i z_{perm_i}
    let mut perm = [0usize; 2];
    let mut sign = [0i8; 2];
    for i in 0..2 {
        let mut found = false;
        for j in 0..2 {
            let v = rot[(i, j)];
            if (v.abs() - 1.0).abs() < 1e-12 {
                perm[i] = j;
                sign[i] = if v > 0.0 { 1 } else { -1 };
                found = true;
            } else if v.abs() > 1e-12 {
                return Err(Error::InvalidArgument("R_mu must be a signed permutation on the grid".into()));
            }
        }
        if !found {
            return Err(Error::InvalidArgument("R_mu must be a signed permutation on the grid".into()));
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for k0 in 0..n {
        for k1 in 0..n {
            let kz = [k0, k1];
            let mut src = [0usize; 2];
            let mut inside = true;
            for i in 0..2 {
                let k = kz[perm[i]];
                src[i] = if sign[i] > 0 {
                    k
                } else if k == 0 {
                    inside = false;
                    0
                } else {
                    n - k
                };
            }
            if inside {
                out[k0 * n + k1] = fmu.values[(src[0] * n + src[1]) * nmu + m];
            }
        }
    }
    Ok(out)
}

/// `(||C||_HS^2, outer-shell mass)` for the first `levels` Hermite functions.
fn hs_norm_sq(big_f: &[Complex64], ax: &Axis, tau: f64, levels: usize) -> Result<(f64, f64)> {
    let n = ax.n;
    let h = ax.step;
    let q = levels;
    let s = (2.0 * PI * tau).sqrt();
    let half = ((2.0 * q as f64 + 1.0).sqrt() + 6.5) / s;
    let nxi = (2.0 * half / h).ceil() as usize + 1;
    let xi0 = -half;
    let sq = s.sqrt();
    let herm: Vec<Vec<f64>> = (0..nxi)
        .map(|i| hermite_all(q - 1, s * (xi0 + i as f64 * h)).map(|v| v.into_iter().map(|a| a * sq).collect()))
        .collect::<Result<_>>()?;
    // E[p][l] = h e^{-2 pi i y_l nu_p}, nu_p = -tau (2 xi0 + p h) / 2, p = i + j
    let ys = ax.points();
    let etab: Vec<Vec<Complex64>> = (0..2 * nxi - 1)
        .map(|p| {
            let nu = -tau * (2.0 * xi0 + p as f64 * h) / 2.0;
            ys.iter().map(|&y| Complex64::from_polar(h, -2.0 * PI * y * nu)).collect()
        })
        .collect();
    let zero = Complex64::new(0.0, 0.0);
    let live: Vec<bool> = (0..n).map(|k| big_f[k * n..(k + 1) * n].iter().any(|v| *v != zero)).collect();
    let half_n = (n / 2) as isize;
    // M[i][b] = sum_j K[i][j] H[j][b], with K[i][j] = F2(x_k, nu_{i+j}), k = j - i + n/2
    let mut mat = vec![zero; nxi * q];
    for i in 0..nxi {
        let row = &mut mat[i * q..(i + 1) * q];
        for k in 0..n {
            if !live[k] {
                continue;
            }
            let j = i as isize + k as isize - half_n;
            if j < 0 || j >= nxi as isize {
                continue;
            }
            let j = j as usize;
            let e = &etab[i + j];
            let fr = &big_f[k * n..(k + 1) * n];
            let kij: Complex64 = fr.iter().zip(e).map(|(a, b)| a * b).sum();
            if kij == zero {
                continue;
            }
            for (b, rb) in row.iter_mut().enumerate() {
                *rb += kij * herm[j][b];
            }
        }
    }
    let mut c = vec![zero; q * q];
    for i in 0..nxi {
        let row = &mat[i * q..(i + 1) * q];
        for a in 0..q {
            let ha = herm[i][a] * h * h;
            if ha == 0.0 {
                continue;
            }
            let ca = &mut c[a * q..(a + 1) * q];
            for (cb, mb) in ca.iter_mut().zip(row) {
                *cb += mb * ha;
            }
        }
    }
    let cut = q - q / 4;
    let mut total = 0.0;
    let mut shell = 0.0;
    for a in 0..q {
        for b in 0..q {
            let v = c[a * q + b].norm_sqr();
            total += v;
            if a.max(b) >= cut {
                shell += v;
            }
        }
    }
    Ok((total, shell))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_low_orders() {
        let s = 0.7;
        let l = laguerre_all(3, 0.0, s);
        assert!((l[1] - (1.0 - s)).abs() < 1e-15);
        assert!((l[2] - (s * s - 4.0 * s + 2.0) / 2.0).abs() < 1e-15);
        assert!((l[3] - (-s * s * s + 9.0 * s * s - 18.0 * s + 6.0) / 6.0).abs() < 1e-14);
    }

    #[test]
    fn heat_multiplier_gives_mehler_kernel() {
        // sum_q e^{-b (1 + 2q) 2 pi |mu|} P_q = |mu| / (2 sinh(2 pi b |mu|)) e^{-(pi |mu| / 2) coth(2 pi b |mu|) |x|^2}
        let g = HTypeGroup::heisenberg(1).unwrap();
        let a = Axis::centered(32, 0.125).unwrap();
        let b = 0.2;
        let mu = 1.3;
        let k = functional_calculus_slice(&g, &|r1: f64, _: &[f64]| Complex64::new((-b * r1).exp(), 0.0), &[a, a], &[mu], 64).unwrap();
        let th = 2.0 * PI * b * mu;
        let mut c = [0.0; 2];
        for idx in 0..k.len() {
            k.coords_into(idx, &mut c);
            let r2 = c[0] * c[0] + c[1] * c[1];
            let exact = mu / (2.0 * th.sinh()) * (-(PI * mu / 2.0) / th.tanh() * r2).exp();
            assert!((k.values[idx].re - exact).abs() < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn truncation_is_reported() {
        let g = HTypeGroup::heisenberg(1).unwrap();
        let a = Axis::centered(8, 0.5).unwrap();
        let r = functional_calculus_slice(&g, &|_: f64, _: &[f64]| Complex64::new(1.0, 0.0), &[a, a], &[1.0], 16);
        assert!(matches!(r, Err(Error::Truncation(_))));
    }

    #[test]
    fn zero_function_gives_zero_triple() {
        let g = HTypeGroup::heisenberg(1).unwrap();
        let a = Axis::centered(8, 0.5).unwrap();
        let u = Axis::centered(8, 0.5).unwrap();
        let f = GridFunction::zeros(vec![a, a], vec![u], CentralDomain::U).unwrap();
        assert_eq!(plancherel_check(&g, &f).unwrap().triple(), (0.0, 0.0, 0.0));
    }
}
