//! Partial Fourier transform along the center, `f^mu(x) = int f(x, u) e^{-2 pi i mu.u} du`.
//!
//! On a `u`-axis with `n` points `u_j = u_0 + j h` the transform is sampled at
//! `mu_m = mu_0 + m / (n h)` with `mu_0 = -(n/2) / (n h)` (or shifted by half a bin),
//! as the Riemann sum `h sum_j f(u_j) e^{-2 pi i mu_m u_j}`. This is an exact unitary
//! map up to the factor `h`, so discrete Parseval holds to rounding.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::grid::{fft_along_axis, Axis, CentralDomain, FftDirection, GridFunction};
use crate::error::{Error, Result};

/// Options for [`partial_ft_center_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FtOptions {
    /// Shift the frequency grid by half a bin, so `mu = 0` is not a sample.
    pub half_shift: bool,
    /// Reject inputs whose values on the central boundary exceed
    /// `boundary_tol * max |f|` (the support must sit strictly inside the box).
    pub require_compact: bool,
    pub boundary_tol: f64,
}

impl Default for FtOptions {
    fn default() -> Self {
        Self { half_shift: false, require_compact: true, boundary_tol: 1e-10 }
    }
}

/// The dual axis of a central axis.
pub fn dual_axis(a: &Axis, half_shift: bool) -> Axis {
    let dmu = 1.0 / (a.n as f64 * a.step);
    let shift = if half_shift { 0.5 } else { 0.0 };
    Axis { n: a.n, step: dmu, origin: (-((a.n / 2) as f64) + shift) * dmu }
}

/// `f^mu` with default options (compact support required, unshifted grid).
pub fn partial_ft_center(f: &GridFunction) -> Result<GridFunction> {
    partial_ft_center_with(f, &FtOptions::default())
}

/// `f^mu` on the dual grid of the central axes.
pub fn partial_ft_center_with(f: &GridFunction, opts: &FtOptions) -> Result<GridFunction> {
    if f.central != CentralDomain::U {
        return Err(Error::InvalidArgument("partial_ft_center expects a function of (x, u)".into()));
    }
    if f.c_axes.is_empty() {
        return Err(Error::Dimension("no central axes to transform".into()));
    }
    if opts.require_compact {
        let m = f.max_abs();
        let b = f.central_boundary_max();
        if m > 0.0 && b > opts.boundary_tol * m {
            return Err(Error::InvalidArgument(format!(
                "support touches the central box boundary: boundary/max = {:.3e}",
                b / m
            )));
        }
    }
    let mut out = f.clone();
    let dims = f.dims();
    let dx = f.x_axes.len();
    for (k, a) in f.c_axes.iter().enumerate() {
        let axis = dx + k;
        let dual = dual_axis(a, opts.half_shift);
        // pre-twist e^{-2 pi i mu_0 j h}
        let pre: Vec<Complex64> = (0..a.n).map(|j| Complex64::from_polar(1.0, -2.0 * PI * dual.origin * j as f64 * a.step)).collect();
        // post-twist h e^{-2 pi i mu_m u_0}
        let post: Vec<Complex64> =
            (0..a.n).map(|m| Complex64::from_polar(a.step, -2.0 * PI * dual.point(m) * a.origin)).collect();
        apply_along(&mut out.values, &dims, axis, &pre);
        fft_along_axis(&mut out.values, &dims, axis, FftDirection::Forward);
        apply_along(&mut out.values, &dims, axis, &post);
        out.c_axes[k] = dual;
    }
    out.central = CentralDomain::Mu;
    Ok(out)
}

/// Inverse of [`partial_ft_center_with`]: `f(x, u) = int f^mu(x) e^{2 pi i mu.u} dmu`,
/// evaluated on the `u`-axes `u_axes` (which must be the primal axes of the `mu` grid).
pub fn inverse_partial_ft_center(fmu: &GridFunction, u_axes: &[Axis]) -> Result<GridFunction> {
    if fmu.central != CentralDomain::Mu {
        return Err(Error::InvalidArgument("inverse transform expects a function of (x, mu)".into()));
    }
    if u_axes.len() != fmu.c_axes.len() {
        return Err(Error::Dimension("u axes do not match the mu axes".into()));
    }
    let mut out = fmu.clone();
    let dims = fmu.dims();
    let dx = fmu.x_axes.len();
    for (k, a) in u_axes.iter().enumerate() {
        let mu_ax = fmu.c_axes[k];
        if mu_ax.n != a.n || ((mu_ax.step * a.step * a.n as f64) - 1.0).abs() > 1e-12 {
            return Err(Error::Dimension(format!("u axis {k} is not dual to the mu axis")));
        }
        let axis = dx + k;
        // f(u_j) = dmu sum_m F_m e^{2 pi i mu_m u_j};
        // mu_m u_j = mu_0 u_0 + mu_0 j h + m dmu u_0 + m j / n.
        let pre: Vec<Complex64> = (0..a.n).map(|m| Complex64::from_polar(mu_ax.step, 2.0 * PI * mu_ax.point(m) * a.origin)).collect();
        let post: Vec<Complex64> =
            (0..a.n).map(|j| Complex64::from_polar(1.0, 2.0 * PI * mu_ax.origin * j as f64 * a.step)).collect();
        apply_along(&mut out.values, &dims, axis, &pre);
        fft_along_axis(&mut out.values, &dims, axis, FftDirection::Inverse);
        apply_along(&mut out.values, &dims, axis, &post);
        out.c_axes[k] = *a;
    }
    out.central = CentralDomain::U;
    Ok(out)
}

/// Multiplies each line along `axis` pointwise by `w`.
pub(crate) fn apply_along(values: &mut [Complex64], dims: &[usize], axis: usize, w: &[Complex64]) {
    let n = dims[axis];
    let stride: usize = dims[axis + 1..].iter().product();
    for (idx, v) in values.iter_mut().enumerate() {
        let j = (idx / stride) % n;
        *v *= w[j];
    }
}

/// The central slice at a fixed multi-index of the central axes, as a function of `x`.
pub fn central_slice(f: &GridFunction, c_index: &[usize]) -> Result<GridFunction> {
    if c_index.len() != f.c_axes.len() {
        return Err(Error::Dimension("central index has the wrong length".into()));
    }
    let nc: usize = f.c_axes.iter().map(|a| a.n).product();
    let mut off = 0usize;
    for (k, a) in f.c_axes.iter().enumerate() {
        if c_index[k] >= a.n {
            return Err(Error::InvalidArgument("central index out of range".into()));
        }
        off = off * a.n + c_index[k];
    }
    let nx: usize = f.x_axes.iter().map(|a| a.n).product();
    let mut out = GridFunction::zeros(f.x_axes.clone(), Vec::new(), f.central)?;
    for i in 0..nx {
        out.values[i] = f.values[i * nc + off];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss_grid(sigma: f64) -> GridFunction {
        let x = Axis::centered(8, 0.5).unwrap();
        let u = Axis::centered(128, 0.125).unwrap();
        GridFunction::sample(vec![x], vec![u], |x, u| {
            Complex64::new((-x[0] * x[0]).exp() * (-u[0] * u[0] / (2.0 * sigma * sigma)).exp(), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn gaussian_pair_and_parseval() {
        let sigma = 0.7;
        let f = gauss_grid(sigma);
        let g = partial_ft_center(&f).unwrap();
        assert!((f.norm2_sq() - g.norm2_sq()).abs() <= 1e-10 * f.norm2_sq());
        let mut c = vec![0.0; 2];
        for idx in 0..g.len() {
            g.coords_into(idx, &mut c);
            let exact = (-c[0] * c[0]).exp()
                * sigma
                * (2.0 * PI).sqrt()
                * (-2.0 * PI * PI * sigma * sigma * c[1] * c[1]).exp();
            let scale = (-c[0] * c[0]).exp() * sigma * (2.0 * PI).sqrt();
            assert!((g.values[idx] - exact).norm() <= 1e-8 * scale, "{c:?}");
        }
        let back = inverse_partial_ft_center(&g, &f.c_axes).unwrap();
        assert!(back.l2_distance(&f).unwrap() < 1e-12 * f.l2_norm());
    }

    #[test]
    fn half_shift_roundtrip() {
        let f = gauss_grid(0.5);
        let opts = FtOptions { half_shift: true, ..Default::default() };
        let g = partial_ft_center_with(&f, &opts).unwrap();
        assert!(g.c_axes[0].point(64).abs() > 0.0);
        assert!((f.norm2_sq() - g.norm2_sq()).abs() <= 1e-10 * f.norm2_sq());
        let back = inverse_partial_ft_center(&g, &f.c_axes).unwrap();
        assert!(back.l2_distance(&f).unwrap() < 1e-12 * f.l2_norm());
    }

    #[test]
    fn plane_wave_concentrates_in_one_bin() {
        let x = Axis::centered(4, 0.5).unwrap();
        let u = Axis::centered(64, 0.25).unwrap();
        let nu = 5.0 / 16.0; // a bin of the dual grid (dmu = 1/16)
        let f = GridFunction::sample(vec![x], vec![u], |_, u| Complex64::from_polar(1.0, 2.0 * PI * nu * u[0])).unwrap();
        assert!(partial_ft_center(&f).is_err());
        let opts = FtOptions { require_compact: false, ..Default::default() };
        let g = partial_ft_center_with(&f, &opts).unwrap();
        let s = central_slice(&g, &[32 + 5]).unwrap();
        let total = g.norm2_sq();
        assert!((s.norm2_sq() * g.c_axes[0].step - total).abs() < 1e-10 * total);
    }
}
