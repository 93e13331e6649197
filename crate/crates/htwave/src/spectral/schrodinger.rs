//! The twisted Schrödinger group `e^{i t L^mu} f = f *_mu gamma_t^mu` and its kernels.
//!
//! With `theta = 2 pi t |mu|`, `n = d1 / 2` and `alpha = (pi/2) |mu| cot theta`:
//!
//! * space side: `gamma(x) = (i |mu| / (2 sin theta))^n e^{-i alpha |x|^2}`;
//! * frequency side: `gamma^(xi) = (cos theta)^{-n} e^{i (2 pi / |mu|) tan theta |xi|^2}`.
//!
//! The factor `i^n` in the space form is what makes the two sides a Fourier pair
//! and makes `f *_mu gamma` agree with the spectral definition of `e^{i t L^mu}`;
//! both facts are verified numerically in the tests.
//!
//! The evolution is computed from `f *_mu gamma` written as
//! `C e^{-i alpha |x|^2} int [f(z) e^{-i alpha |z|^2}] e^{i z^T B x} dz` with
//! `B = 2 alpha I + pi J_mu`, a bilinear chirp that factorizes over the axes.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use super::fourier::{partial_ft_center_with, FtOptions};
use super::grid::{fft_along_axis, Axis, ChirpZ, FftDirection, GridFunction};
use crate::error::{Error, Result};
use crate::group::{norm, HTypeGroup};
use crate::special::cutoff::smooth_step;
use crate::special::hermite::hermite_all;

/// Hard guard: `2 t |mu|` (resp. `2 t |mu| - 1/2`) within this distance of an integer
/// counts as a singular time for the space (resp. frequency) form.
pub const SINGULAR_MARGIN: f64 = 1e-6;

fn dist_to_integer(a: f64) -> f64 {
    (a - a.round()).abs()
}

/// `gamma_t^mu` for one `(t, mu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchrodingerKernel {
    pub d1: usize,
    pub t: f64,
    pub mu: Vec<f64>,
    pub mu_abs: f64,
    /// `sin(2 pi t |mu|)` is within the guard of zero.
    pub sin_singular: bool,
    /// `cos(2 pi t |mu|)` is within the guard of zero.
    pub cos_singular: bool,
}

impl SchrodingerKernel {
    pub fn new(g: &HTypeGroup, t: f64, mu: &[f64]) -> Result<Self> {
        if mu.len() != g.d2() {
            return Err(Error::Dimension(format!("mu has length {}, expected {}", mu.len(), g.d2())));
        }
        let mu_abs = norm(mu);
        if !(mu_abs > 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument("Schrödinger kernel needs mu != 0 and finite t".into()));
        }
        let a = 2.0 * t * mu_abs;
        Ok(Self {
            d1: g.d1(),
            t,
            mu: mu.to_vec(),
            mu_abs,
            sin_singular: dist_to_integer(a) < SINGULAR_MARGIN,
            cos_singular: dist_to_integer(a - 0.5) < SINGULAR_MARGIN,
        })
    }

    /// `theta = 2 pi t |mu|`.
    pub fn theta(&self) -> f64 {
        2.0 * PI * self.t * self.mu_abs
    }

    /// Chirp rate `alpha = (pi/2) |mu| cot theta` of the space form.
    pub fn chirp_rate(&self) -> Result<f64> {
        self.require_space()?;
        let th = self.theta();
        Ok(0.5 * PI * self.mu_abs * th.cos() / th.sin())
    }

    /// Prefactor `(i |mu| / (2 sin theta))^{d1/2}`.
    pub fn amplitude(&self) -> Result<Complex64> {
        self.require_space()?;
        let base = Complex64::new(0.0, self.mu_abs / (2.0 * self.theta().sin()));
        Ok(base.powi((self.d1 / 2) as i32))
    }

    fn require_space(&self) -> Result<()> {
        if self.sin_singular {
            Err(Error::SingularTime(2.0 * self.t * self.mu_abs))
        } else {
            Ok(())
        }
    }

    /// `gamma_t^mu(x)`.
    pub fn space(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.d1 {
            return Err(Error::Dimension(format!("x has length {}, expected {}", x.len(), self.d1)));
        }
        let c = self.amplitude()?;
        let al = self.chirp_rate()?;
        let r2: f64 = x.iter().map(|v| v * v).sum();
        Ok(c * Complex64::from_polar(1.0, -al * r2))
    }

    /// `gamma^_t^mu(xi)`, the Fourier transform with kernel `e^{-2 pi i x.xi}`.
    pub fn frequency(&self, xi: &[f64]) -> Result<Complex64> {
        if xi.len() != self.d1 {
            return Err(Error::Dimension(format!("xi has length {}, expected {}", xi.len(), self.d1)));
        }
        if self.cos_singular {
            return Err(Error::SingularTime(2.0 * self.t * self.mu_abs));
        }
        let th = self.theta();
        let r2: f64 = xi.iter().map(|v| v * v).sum();
        let amp = th.cos().powi(-((self.d1 / 2) as i32));
        Ok(Complex64::from_polar(amp, 2.0 * PI / self.mu_abs * th.tan() * r2))
    }
}

/// `gamma_t^mu(x)`; errors at singular times.
pub fn schrodinger_gamma(g: &HTypeGroup, t: f64, mu: &[f64], x: &[f64]) -> Result<Complex64> {
    SchrodingerKernel::new(g, t, mu)?.space(x)
}

/// `gamma^_t^mu(xi)`; errors where `cos(2 pi t |mu|)` vanishes.
pub fn schrodinger_gamma_hat(g: &HTypeGroup, t: f64, mu: &[f64], xi: &[f64]) -> Result<Complex64> {
    SchrodingerKernel::new(g, t, mu)?.frequency(xi)
}

/// Sampling requirement of the evolution on a given grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolveResolution {
    /// Largest admissible grid step.
    pub required_step: f64,
    /// Largest step of the grid in use.
    pub step: f64,
    /// Radius containing the numerical support of `f`.
    pub support_radius: f64,
    /// Radius containing the numerical spectrum of `f`.
    pub bandwidth: f64,
}

impl EvolveResolution {
    pub fn ok(&self) -> bool {
        self.step <= self.required_step
    }
}

/// Spectral radius of `f`: the largest `|xi|` with `|f^(xi)| > tol * max |f^|`.
pub fn bandwidth(f: &GridFunction, tol: f64) -> f64 {
    let mut vals = f.values.clone();
    let dims = f.dims();
    for k in 0..dims.len() {
        fft_along_axis(&mut vals, &dims, k, FftDirection::Forward);
    }
    let m = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let axes: Vec<Axis> = f.axes().copied().collect();
    let mut best: f64 = 0.0;
    for (idx, v) in vals.iter().enumerate() {
        if v.norm() <= tol * m {
            continue;
        }
        let mut r = idx;
        let mut s = 0.0;
        for k in (0..axes.len()).rev() {
            let n = axes[k].n;
            let j = r % n;
            r /= n;
            let jj = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
            let xi = jj / (n as f64 * axes[k].step);
            s += xi * xi;
        }
        best = best.max(s.sqrt());
    }
    best
}

/// Radius of the numerical support: largest `|x|` with `|f(x)| > tol * max |f|`.
pub fn support_radius(f: &GridFunction, tol: f64) -> f64 {
    let m = f.max_abs();
    let mut c = vec![0.0; f.ndim()];
    let mut best: f64 = 0.0;
    for (idx, v) in f.values.iter().enumerate() {
        if v.norm() > tol * m {
            f.coords_into(idx, &mut c);
            best = best.max(norm(&c));
        }
    }
    best
}

/// Checks that the grid resolves the integrand `f(z) gamma(x - z) e^{...}` for
/// every output point: the integrand's spectrum, centered at `B x / 2pi` with
/// radius `bandwidth(f) + |alpha| R_f / pi`, must stay below the sampling rate.
pub fn evolve_resolution(g: &HTypeGroup, f: &GridFunction, t: f64, mu: &[f64]) -> Result<EvolveResolution> {
    let k = SchrodingerKernel::new(g, t, mu)?;
    let al = k.chirp_rate()?;
    let b_norm = (4.0 * al * al + PI * PI * k.mu_abs * k.mu_abs).sqrt();
    let rx = f.x_axes.iter().map(|a| a.max_abs().powi(2)).sum::<f64>().sqrt();
    let rf = support_radius(f, 1e-13);
    let nu = bandwidth(f, 1e-13);
    let rate = b_norm * rx / (2.0 * PI) + nu + al.abs() * rf / PI;
    let step = f.x_axes.iter().map(|a| a.step).fold(0.0, f64::max);
    Ok(EvolveResolution { required_step: 1.0 / rate, step, support_radius: rf, bandwidth: nu })
}

/// `e^{i t L^mu} f = f *_mu gamma_t^mu` on the grid of `f`.
///
/// Refuses (with [`Error::Resolution`]) grids that do not resolve the chirp
/// integrand; see [`evolve_resolution`].
pub fn schrodinger_evolve(g: &HTypeGroup, f: &GridFunction, t: f64, mu: &[f64]) -> Result<GridFunction> {
    if !f.c_axes.is_empty() || f.x_axes.len() != g.d1() {
        return Err(Error::Dimension("evolution acts on central slices with d1 axes".into()));
    }
    if !f.x_axes.iter().all(Axis::is_centered) {
        return Err(Error::InvalidArgument("evolution needs centered x-axes".into()));
    }
    let kern = SchrodingerKernel::new(g, t, mu)?;
    let res = evolve_resolution(g, f, t, mu)?;
    if !res.ok() {
        return Err(Error::Resolution(format!(
            "grid step {:.4e} exceeds the admissible step {:.4e} for t = {t}",
            res.step, res.required_step
        )));
    }
    let jmu = g.build_jmu(mu)?;
    let al = kern.chirp_rate()?;
    let c = kern.amplitude()? * f.cell_volume();
    let d1 = g.d1();
    // bt[a][b] = 2 alpha delta_ab + pi J[a][b]; exponent i sum_ab z_a bt[a][b] x_b.
    let bt = DMatrix::from_fn(d1, d1, |a, b| if a == b { 2.0 * al } else { 0.0 } + PI * jmu[(a, b)]);
    let mut gz = f.clone();
    let mut coords = vec![0.0; d1];
    for idx in 0..gz.len() {
        gz.coords_into(idx, &mut coords);
        let r2: f64 = coords.iter().map(|v| v * v).sum();
        gz.values[idx] *= Complex64::from_polar(1.0, -al * r2);
    }
    let mut out = if d1 == 2 { bilinear_chirp_2d(&gz, &bt) } else { bilinear_chirp_direct(&gz, &bt)? };
    for idx in 0..out.len() {
        out.coords_into(idx, &mut coords);
        let r2: f64 = coords.iter().map(|v| v * v).sum();
        out.values[idx] *= c * Complex64::from_polar(1.0, -al * r2);
    }
    Ok(out)
}

/// `sum_z g(z) e^{i z^T bt x}` for `d1 = 2`: the `z_1`-sum is a chirp-z transform for
/// each `(z_0, x_0)`, the `z_0`-sum a direct contraction.
fn bilinear_chirp_2d(gz: &GridFunction, bt: &DMatrix<f64>) -> GridFunction {
    let (a0, a1) = (gz.x_axes[0], gz.x_axes[1]);
    let (n0, n1) = (a0.n, a1.n);
    let zero = Complex64::new(0.0, 0.0);
    let cz = ChirpZ::new(bt[(1, 1)], &a1, &a1);
    let live: Vec<usize> = (0..n0).filter(|&q0| gz.values[q0 * n1..(q0 + 1) * n1].iter().any(|v| *v != zero)).collect();
    let e1: Vec<Vec<Complex64>> = live
        .iter()
        .map(|&q0| (0..n1).map(|i1| Complex64::from_polar(1.0, a0.point(q0) * bt[(0, 1)] * a1.point(i1))).collect())
        .collect();
    let rows: Vec<Vec<Complex64>> = (0..n0)
        .into_par_iter()
        .map(|i0| {
            let x0 = a0.point(i0);
            let tw: Vec<Complex64> = (0..n1).map(|q1| Complex64::from_polar(1.0, a1.point(q1) * bt[(1, 0)] * x0)).collect();
            let mut acc = vec![zero; n1];
            let mut a = vec![zero; n1];
            let mut inner = vec![zero; n1];
            let mut buf = Vec::new();
            for (li, &q0) in live.iter().enumerate() {
                let row = &gz.values[q0 * n1..(q0 + 1) * n1];
                for q1 in 0..n1 {
                    a[q1] = row[q1] * tw[q1];
                }
                cz.apply_into(&a, &mut buf, &mut inner);
                let e0 = Complex64::from_polar(1.0, a0.point(q0) * bt[(0, 0)] * x0);
                for i1 in 0..n1 {
                    acc[i1] += e0 * e1[li][i1] * inner[i1];
                }
            }
            acc
        })
        .collect();
    let mut out = gz.clone();
    for (i0, r) in rows.into_iter().enumerate() {
        out.values[i0 * n1..(i0 + 1) * n1].copy_from_slice(&r);
    }
    out
}

/// Direct `O(N^2)` evaluation of `sum_z g(z) e^{i z^T bt x}` (any `d1`, small grids).
fn bilinear_chirp_direct(gz: &GridFunction, bt: &DMatrix<f64>) -> Result<GridFunction> {
    let n = gz.len();
    if n > 1 << 14 {
        return Err(Error::Budget(format!("direct evolution on {n} cells (limit 2^14 for d1 > 2)")));
    }
    let d1 = gz.x_axes.len();
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut c = vec![0.0; d1];
            gz.coords_into(i, &mut c);
            c
        })
        .collect();
    let vals: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = &pts[i];
            let bx: Vec<f64> = (0..d1).map(|a| (0..d1).map(|b| bt[(a, b)] * x[b]).sum()).collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, z) in pts.iter().enumerate() {
                let v = gz.values[j];
                if v.re == 0.0 && v.im == 0.0 {
                    continue;
                }
                let ph: f64 = z.iter().zip(&bx).map(|(a, b)| a * b).sum();
                acc += v * Complex64::from_polar(1.0, ph);
            }
            acc
        })
        .collect();
    let mut out = gz.clone();
    out.values = vals;
    Ok(out)
}

/// Finite expansion `f = sum_{a+b <= D} c_ab phi_a(x_0) phi_b(x_1)` in the product
/// Hermite functions `phi_k(s) = sqrt(c) h_k(c s)`, `c = sqrt(pi |mu|)`, on `R^2`.
///
/// In this basis the twisted Laplacian is `L^mu = 2 pi |mu| (N + 1) + 2 pi s A`, where
/// `N = a + b`, `s = J_mu[0][1]` and `A = i (a_0^+ a_1 - a_0 a_1^+)` is the angular
/// momentum, which preserves each degree `N`. Its eigenvalues on degree `N` are
/// `2 pi |mu| (1 + 2q)`, `q = 0..N`. The evolution `e^{i t L^mu}` is applied exactly,
/// block by block, which makes this type the oracle for [`schrodinger_evolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteExpansion {
    /// Signed coefficient `s` with `J_mu = s [[0, 1], [-1, 0]]`.
    pub s: f64,
    pub degree: usize,
    /// Coefficients in degree-major order: index `N (N + 1) / 2 + a` for `(a, N - a)`.
    pub coeffs: Vec<Complex64>,
}

/// Flat index of `(a, b)` in [`HermiteExpansion::coeffs`].
pub fn hermite_pair_index(a: usize, b: usize) -> usize {
    let n = a + b;
    n * (n + 1) / 2 + a
}

impl HermiteExpansion {
    /// Expansion for the group `g` (which must have `d1 = 2`) at central frequency `mu`.
    pub fn new(g: &HTypeGroup, mu: &[f64], degree: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if g.d1() != 2 {
            return Err(Error::Dimension("the Hermite oracle is implemented for d1 = 2".into()));
        }
        let jmu = g.build_jmu(mu)?;
        let s = jmu[(0, 1)];
        if s == 0.0 {
            return Err(Error::InvalidArgument("mu must be nonzero".into()));
        }
        let len = (degree + 1) * (degree + 2) / 2;
        if coeffs.len() != len {
            return Err(Error::Dimension(format!("expected {len} coefficients, got {}", coeffs.len())));
        }
        Ok(Self { s, degree, coeffs })
    }

    pub fn scale(&self) -> f64 {
        (PI * self.s.abs()).sqrt()
    }

    /// `l^2` norm of the coefficients (= `L^2` norm of the function).
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Samples the expansion on a 2D grid.
    pub fn sample(&self, axes: &[Axis; 2]) -> Result<GridFunction> {
        let c = self.scale();
        let sc = c.sqrt();
        let t0: Vec<Vec<f64>> = axes[0].points().iter().map(|&x| hermite_all(self.degree, c * x).map(|v| scale_all(v, sc))).collect::<Result<_>>()?;
        let t1: Vec<Vec<f64>> = axes[1].points().iter().map(|&x| hermite_all(self.degree, c * x).map(|v| scale_all(v, sc))).collect::<Result<_>>()?;
        let mut out = GridFunction::zeros(axes.to_vec(), Vec::new(), super::grid::CentralDomain::U)?;
        let n1 = axes[1].n;
        for i0 in 0..axes[0].n {
            for i1 in 0..n1 {
                let mut acc = Complex64::new(0.0, 0.0);
                for nn in 0..=self.degree {
                    for a in 0..=nn {
                        acc += self.coeffs[hermite_pair_index(a, nn - a)] * (t0[i0][a] * t1[i1][nn - a]);
                    }
                }
                out.values[i0 * n1 + i1] = acc;
            }
        }
        Ok(out)
    }

    /// Projects a grid function onto degrees `<= degree`; fails with
    /// [`Error::Truncation`] if the relative `L^2` residual exceeds `tol`.
    pub fn from_grid(g: &HTypeGroup, mu: &[f64], f: &GridFunction, degree: usize, tol: f64) -> Result<Self> {
        if f.x_axes.len() != 2 || !f.c_axes.is_empty() {
            return Err(Error::Dimension("projection expects a 2D central slice".into()));
        }
        let len = (degree + 1) * (degree + 2) / 2;
        let mut e = Self::new(g, mu, degree, vec![Complex64::new(0.0, 0.0); len])?;
        let c = e.scale();
        let sc = c.sqrt();
        let (a0, a1) = (f.x_axes[0], f.x_axes[1]);
        let t0: Vec<Vec<f64>> = a0.points().iter().map(|&x| hermite_all(degree, c * x).map(|v| scale_all(v, sc))).collect::<Result<_>>()?;
        let t1: Vec<Vec<f64>> = a1.points().iter().map(|&x| hermite_all(degree, c * x).map(|v| scale_all(v, sc))).collect::<Result<_>>()?;
        let vol = f.cell_volume();
        for i0 in 0..a0.n {
            for i1 in 0..a1.n {
                let v = f.values[i0 * a1.n + i1] * vol;
                for nn in 0..=degree {
                    for a in 0..=nn {
                        e.coeffs[hermite_pair_index(a, nn - a)] += v * (t0[i0][a] * t1[i1][nn - a]);
                    }
                }
            }
        }
        let back = e.sample(&[a0, a1])?;
        let resid = back.l2_distance(f)?;
        let fnorm = f.l2_norm();
        if resid > tol * fnorm {
            return Err(Error::Truncation(format!(
                "Hermite expansion of degree {degree} leaves relative residual {:.3e} (> {tol:.1e})",
                resid / fnorm
            )));
        }
        Ok(e)
    }

    /// Exact `e^{i t L^mu}` applied to the expansion.
    pub fn evolve(&self, t: f64) -> Self {
        let mut out = self.clone();
        let mu_abs = self.s.abs();
        for nn in 0..=self.degree {
            // K = a_0^+ a_1 - a_0 a_1^+ (real antisymmetric); e^{i theta A} = e^{-theta K}.
            let dim = nn + 1;
            let mut k = DMatrix::<f64>::zeros(dim, dim);
            for a in 0..=nn {
                let b = nn - a;
                if b > 0 {
                    k[(a + 1, a)] += (((a + 1) * b) as f64).sqrt();
                }
                if a > 0 {
                    k[(a - 1, a)] -= ((a * (b + 1)) as f64).sqrt();
                }
            }
            let theta = t * 2.0 * PI * self.s;
            let u = (k * (-theta)).exp();
            let phase = Complex64::from_polar(1.0, t * 2.0 * PI * mu_abs * (nn + 1) as f64);
            let base = hermite_pair_index(0, nn);
            let v: Vec<Complex64> = (0..dim).map(|a| self.coeffs[base + a]).collect();
            for r in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for (cidx, vc) in v.iter().enumerate() {
                    acc += *vc * u[(r, cidx)];
                }
                out.coeffs[base + r] = acc * phase;
            }
        }
        out
    }

    /// A centered grid (`n` even, `n x n`) on which the expansion is numerically
    /// supported and on which [`schrodinger_evolve`] resolves every time in `times`.
    pub fn suggested_grid(&self, g: &HTypeGroup, mu: &[f64], times: &[f64]) -> Result<Axis> {
        let c = self.scale();
        // Hermite functions of order <= D are below 1e-15 of their peak beyond
        // |c x| = sqrt(2D + 1) + 6.5.
        let rp = (2.0 * self.degree as f64 + 1.0).sqrt() + 6.5;
        let half = rp / c;
        let rx = half * 2f64.sqrt();
        let bw = rp * c / (2.0 * PI);
        let mut rate: f64 = 2.0 * bw;
        for &t in times {
            let k = SchrodingerKernel::new(g, t, mu)?;
            let al = k.chirp_rate()?;
            let b_norm = (4.0 * al * al + PI * PI * k.mu_abs * k.mu_abs).sqrt();
            rate = rate.max(b_norm * rx / (2.0 * PI) + bw + al.abs() * rx / PI);
        }
        let step = 1.0 / (1.05 * rate);
        let n = (2.0 * half / step).ceil() as usize;
        let n = n + n % 2;
        Axis::centered(n, 2.0 * half / n as f64)
    }
}

fn scale_all(mut v: Vec<f64>, s: f64) -> Vec<f64> {
    v.iter_mut().for_each(|a| *a *= s);
    v
}

/// Result of comparing the transform of sampled `gamma` with the closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaFftCheck {
    pub t: f64,
    pub mu_abs: f64,
    pub chirp_rate: f64,
    pub grid_points: usize,
    pub step: f64,
    pub compared: usize,
    pub max_rel_err: f64,
}

/// Transforms `gamma_t^mu w` on a 2D grid by FFT and compares with the closed-form
/// `gamma^` at every frequency whose stationary point `x = -pi xi / alpha` lies well
/// inside the plateau of the smooth window `w`.
///
/// The window is a product of smooth steps with plateau `5 / sqrt|alpha|` and
/// transition width `20 / sqrt|alpha|`; away from the stationary point the chirp
/// oscillates at rate `~ 2 |alpha| |x - x_s|`, so the window contributes only
/// non-stationary, super-polynomially small terms.
pub fn gamma_fft_check(g: &HTypeGroup, t: f64, mu: &[f64]) -> Result<GammaFftCheck> {
    if g.d1() != 2 {
        return Err(Error::Dimension("gamma_fft_check is implemented for d1 = 2".into()));
    }
    let k = SchrodingerKernel::new(g, t, mu)?;
    if k.cos_singular {
        return Err(Error::SingularTime(2.0 * t * k.mu_abs));
    }
    let al = k.chirp_rate()?;
    let sa = al.abs().sqrt();
    let plateau = 5.0 / sa;
    let outer = plateau + 20.0 / sa;
    let n = 1024usize;
    let half = 1.02 * outer;
    let step = 2.0 * half / n as f64;
    // local frequency |alpha| x / pi must stay below the Nyquist rate 1 / (2 h)
    if al.abs() * outer / PI * 2.0 * step > 0.95 {
        return Err(Error::Resolution("window too wide for the 1024-point grid".into()));
    }
    let ax = Axis::centered(n, step)?;
    let w = |x: f64| smooth_step((outer - x.abs()) / (outer - plateau));
    let amp = k.amplitude()?;
    let mut f = GridFunction::zeros(Vec::new(), vec![ax, ax], super::grid::CentralDomain::U)?;
    let pts = ax.points();
    let row: Vec<Complex64> = pts.iter().map(|&x| Complex64::from_polar(w(x), -al * x * x)).collect();
    for i0 in 0..n {
        for i1 in 0..n {
            f.values[i0 * n + i1] = amp * row[i0] * row[i1];
        }
    }
    let opts = FtOptions { half_shift: false, require_compact: true, boundary_tol: 1e-14 };
    let fh = partial_ft_center_with(&f, &opts)?;
    let xi_ax = fh.c_axes[0];
    let lim = 0.5 * plateau;
    let mut max_rel: f64 = 0.0;
    let mut compared = 0usize;
    for i0 in 0..n {
        let xi0 = xi_ax.point(i0);
        if (PI * xi0 / al).abs() > lim {
            continue;
        }
        for i1 in 0..n {
            let xi1 = xi_ax.point(i1);
            if (PI * xi1 / al).abs() > lim {
                continue;
            }
            let exact = k.frequency(&[xi0, xi1])?;
            let rel = (fh.values[i0 * n + i1] - exact).norm() / exact.norm();
            max_rel = max_rel.max(rel);
            compared += 1;
        }
    }
    Ok(GammaFftCheck { t, mu_abs: k.mu_abs, chirp_rate: al, grid_points: n, step, compared, max_rel_err: max_rel })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_period_has_no_chirp() {
        let g = HTypeGroup::heisenberg(1).unwrap();
        let v = schrodinger_gamma(&g, 0.25, &[1.0], &[0.3, -1.2]).unwrap();
        assert!((v - Complex64::new(0.0, 0.5)).norm() < 1e-15);
        assert!((v.norm() - 0.5).abs() < 1e-15);
        assert!(matches!(schrodinger_gamma(&g, 0.5, &[1.0], &[0.0, 0.0]), Err(Error::SingularTime(_))));
        assert!(matches!(schrodinger_gamma(&g, 1.0 + 1e-8, &[1.0], &[0.0, 0.0]), Err(Error::SingularTime(_))));
        assert!(matches!(schrodinger_gamma_hat(&g, 0.25, &[1.0], &[0.0, 0.0]), Err(Error::SingularTime(_))));
    }

    #[test]
    fn ground_state_is_an_eigenfunction() {
        let g = HTypeGroup::heisenberg(1).unwrap();
        let a = Axis::centered(128, 0.09375).unwrap();
        let f = GridFunction::sample_slice(vec![a, a], |x| Complex64::new((-PI * (x[0] * x[0] + x[1] * x[1]) / 2.0).exp(), 0.0))
            .unwrap();
        let t = 0.13;
        let out = schrodinger_evolve(&g, &f, t, &[1.0]).unwrap();
        let mut expect = f.clone();
        let ph = Complex64::from_polar(1.0, t * 2.0 * PI);
        expect.values.iter_mut().for_each(|v| *v *= ph);
        assert!(out.l2_distance(&expect).unwrap() < 1e-10);
    }

    #[test]
    fn coarse_grid_is_refused() {
        let g = HTypeGroup::heisenberg(1).unwrap();
        let a = Axis::centered(32, 0.375).unwrap();
        let f = GridFunction::sample_slice(vec![a, a], |x| Complex64::new((-PI * (x[0] * x[0] + x[1] * x[1]) / 2.0).exp(), 0.0))
            .unwrap();
        assert!(matches!(schrodinger_evolve(&g, &f, 0.13, &[1.0]), Err(Error::Resolution(_))));
    }

    #[test]
    fn oracle_block_is_unitary_and_periodic() {
        let g = HTypeGroup::heisenberg(1).unwrap();
        let d = 6;
        let coeffs: Vec<Complex64> = (0..28).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.7).cos())).collect();
        let e = HermiteExpansion::new(&g, &[1.0], d, coeffs).unwrap();
        let f = e.evolve(0.37);
        assert!((f.norm() - e.norm()).abs() < 1e-12);
        // every eigenvalue is 2 pi (1 + 2q), so t = 1 is the identity
        let id = e.evolve(1.0);
        for (a, b) in id.coeffs.iter().zip(&e.coeffs) {
            assert!((a - b).norm() < 1e-11);
        }
    }
}
