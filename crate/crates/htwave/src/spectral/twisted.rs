//! Twisted convolution `(phi *_mu psi)(x) = int phi(x - y) psi(y) e^{-i pi <J_mu x, y>} dy`.
//!
//! Grid functions live on centered lattices, so `x - y` is again a lattice point
//! (or falls outside the box, where the integrand is taken to vanish).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use super::grid::{Axis, GridFunction};
use crate::error::{Error, Result};
use crate::group::HTypeGroup;

/// Largest grid (cells) handled by the direct double sum when `d1 > 2`.
pub const DIRECT_MAX_CELLS: usize = 1 << 16;

fn check_pair(g: &HTypeGroup, phi: &GridFunction, psi: &GridFunction) -> Result<()> {
    if !phi.c_axes.is_empty() || !psi.c_axes.is_empty() {
        return Err(Error::Dimension("twisted convolution acts on central slices (functions of x only)".into()));
    }
    if phi.x_axes != psi.x_axes {
        return Err(Error::Dimension("twisted convolution needs both factors on the same x-grid".into()));
    }
    if phi.x_axes.len() != g.d1() {
        return Err(Error::Dimension(format!("grid has {} x-axes, group has d1 = {}", phi.x_axes.len(), g.d1())));
    }
    if !phi.x_axes.iter().all(Axis::is_centered) {
        return Err(Error::InvalidArgument("twisted convolution needs centered x-axes".into()));
    }
    Ok(())
}

/// `phi *_mu psi` on the grid: the direct sum up to `64^2` cells for `d1 = 2`
/// (and up to [`DIRECT_MAX_CELLS`] otherwise), the FFT row factorization above that.
pub fn twisted_convolve(g: &HTypeGroup, phi: &GridFunction, psi: &GridFunction, mu: &[f64]) -> Result<GridFunction> {
    check_pair(g, phi, psi)?;
    if g.d1() == 2 && phi.len() > 64 * 64 {
        twisted_convolve_fft(g, phi, psi, mu)
    } else {
        twisted_convolve_direct(g, phi, psi, mu)
    }
}

/// Direct double sum `sum_y phi(x - y) psi(y) e^{-i pi <J_mu x, y>} * cell volume`.
pub fn twisted_convolve_direct(
    g: &HTypeGroup,
    phi: &GridFunction,
    psi: &GridFunction,
    mu: &[f64],
) -> Result<GridFunction> {
    check_pair(g, phi, psi)?;
    let jmu = g.build_jmu(mu)?;
    let d1 = g.d1();
    let n_cells = phi.len();
    if n_cells > DIRECT_MAX_CELLS.max(128 * 128) {
        return Err(Error::Budget(format!("direct twisted convolution on {n_cells} cells")));
    }
    let axes = &phi.x_axes;
    let dims: Vec<usize> = axes.iter().map(|a| a.n).collect();
    // phase = sum_{a,b} J[a][b] x_b y_a, tabulated per nonzero (a, b).
    let mut tables: Vec<(usize, usize, Vec<Complex64>)> = Vec::new();
    for a in 0..d1 {
        for b in 0..d1 {
            let c = jmu[(a, b)];
            if c != 0.0 {
                let (na, nb) = (dims[a], dims[b]);
                let mut t = vec![Complex64::new(0.0, 0.0); nb * na];
                for p in 0..nb {
                    for q in 0..na {
                        t[p * na + q] = Complex64::from_polar(1.0, -PI * c * axes[b].point(p) * axes[a].point(q));
                    }
                }
                tables.push((a, b, t));
            }
        }
    }
    let vol = phi.cell_volume();
    let values: Vec<Complex64> = (0..n_cells)
        .into_par_iter()
        .map(|i| {
            let xi = phi.multi_index(i);
            let mut acc = Complex64::new(0.0, 0.0);
            let mut yj = vec![0usize; d1];
            'outer: for j in 0..n_cells {
                // multi-index of j
                let mut r = j;
                for k in (0..d1).rev() {
                    yj[k] = r % dims[k];
                    r /= dims[k];
                }
                let mut flat = 0usize;
                for k in 0..d1 {
                    let idx = xi[k] as isize - yj[k] as isize + (dims[k] / 2) as isize;
                    if idx < 0 || idx >= dims[k] as isize {
                        continue 'outer;
                    }
                    flat = flat * dims[k] + idx as usize;
                }
                let mut term = phi.values[flat] * psi.values[j];
                if term == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (a, b, t) in &tables {
                    term *= t[xi[*b] * dims[*a] + yj[*a]];
                }
                acc += term;
            }
            acc * vol
        })
        .collect();
    let mut out = phi.clone();
    out.values = values;
    Ok(out)
}

/// FFT factorization for `d1 = 2`: with `J_mu = [[0, c01], [c10, 0]]` the phase is
/// `c01 x_1 y_0 + c10 x_0 y_1`, so for fixed `(x_0, y_0)` the `y_1`-sum is a 1D
/// convolution of row `x_0 - y_0` of `phi` with `psi(y_0, .) e^{-i pi c10 x_0 y_1}`.
pub fn twisted_convolve_fft(g: &HTypeGroup, phi: &GridFunction, psi: &GridFunction, mu: &[f64]) -> Result<GridFunction> {
    check_pair(g, phi, psi)?;
    if g.d1() != 2 {
        return Err(Error::Dimension("the FFT path is implemented for d1 = 2".into()));
    }
    let jmu = g.build_jmu(mu)?;
    let (c01, c10) = (jmu[(0, 1)], jmu[(1, 0)]);
    let (a0, a1) = (phi.x_axes[0], phi.x_axes[1]);
    let (n0, n1) = (a0.n, a1.n);
    let p = (2 * n1).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(p);
    let inv = planner.plan_fft_inverse(p);
    let zero = Complex64::new(0.0, 0.0);
    let rows_hat: Vec<Vec<Complex64>> = (0..n0)
        .map(|r| {
            let mut v = vec![zero; p];
            v[..n1].copy_from_slice(&phi.values[r * n1..(r + 1) * n1]);
            fwd.process(&mut v);
            v
        })
        .collect();
    let vol = phi.cell_volume();
    let scale = vol / p as f64;
    let out_rows: Vec<Vec<Complex64>> = (0..n0)
        .into_par_iter()
        .map(|i0| {
            let x0 = a0.point(i0);
            let mut acc = vec![zero; n1];
            let mut buf = vec![zero; p];
            let twist_in: Vec<Complex64> = (0..n1).map(|j1| Complex64::from_polar(1.0, -PI * c10 * x0 * a1.point(j1))).collect();
            for j0 in 0..n0 {
                let r = i0 as isize - j0 as isize + (n0 / 2) as isize;
                if r < 0 || r >= n0 as isize {
                    continue;
                }
                let row = &psi.values[j0 * n1..(j0 + 1) * n1];
                if row.iter().all(|v| *v == zero) {
                    continue;
                }
                buf.iter_mut().for_each(|b| *b = zero);
                for j1 in 0..n1 {
                    buf[j1] = row[j1] * twist_in[j1];
                }
                fwd.process(&mut buf);
                for (b, a) in buf.iter_mut().zip(&rows_hat[r as usize]) {
                    *b *= a;
                }
                inv.process(&mut buf);
                let y0 = a0.point(j0);
                for i1 in 0..n1 {
                    let tw = Complex64::from_polar(1.0, -PI * c01 * a1.point(i1) * y0);
                    acc[i1] += buf[i1 + n1 / 2] * tw * scale;
                }
            }
            acc
        })
        .collect();
    let mut out = phi.clone();
    for (i0, row) in out_rows.into_iter().enumerate() {
        out.values[i0 * n1..(i0 + 1) * n1].copy_from_slice(&row);
    }
    Ok(out)
}

/// Pointwise twisted convolution of analytic functions by the trapezoid rule on
/// the tensor grid `axis^{d1}`: `h^{d1} sum_y phi(x - y) psi(y) e^{-i pi <J_mu x, y>}`,
/// with `J_mu` given explicitly.
pub fn twisted_convolve_at<F, G>(jmu: &DMatrix<f64>, phi: F, psi: G, x: &[f64], axis: &Axis) -> Complex64
where
    F: Fn(&[f64]) -> Complex64,
    G: Fn(&[f64]) -> Complex64,
{
    let d1 = x.len();
    let total = axis.n.pow(d1 as u32);
    let jx: Vec<f64> = (0..d1).map(|a| (0..d1).map(|b| jmu[(a, b)] * x[b]).sum()).collect();
    let mut y = vec![0.0; d1];
    let mut xmy = vec![0.0; d1];
    let mut acc = Complex64::new(0.0, 0.0);
    for idx in 0..total {
        let mut r = idx;
        for k in (0..d1).rev() {
            y[k] = axis.point(r % axis.n);
            r /= axis.n;
        }
        for k in 0..d1 {
            xmy[k] = x[k] - y[k];
        }
        let ph: f64 = jx.iter().zip(&y).map(|(a, b)| a * b).sum();
        acc += phi(&xmy) * psi(&y) * Complex64::from_polar(1.0, -PI * ph);
    }
    acc * axis.step.powi(d1 as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(cx: f64, cy: f64, w: f64) -> impl Fn(&[f64]) -> Complex64 {
        move |x: &[f64]| Complex64::new((-((x[0] - cx).powi(2) + (x[1] - cy).powi(2)) / w).exp(), 0.3 * x[0])
    }

    #[test]
    fn direct_and_fft_paths_agree() {
        let g = HTypeGroup::heisenberg(1).unwrap();
        let a = Axis::centered(32, 0.25).unwrap();
        let phi = GridFunction::sample_slice(vec![a, a], bump(0.5, -0.3, 0.4)).unwrap();
        let psi = GridFunction::sample_slice(vec![a, a], bump(-0.2, 0.4, 0.6)).unwrap();
        for mu in [0.0, 0.7, -1.3] {
            let d = twisted_convolve_direct(&g, &phi, &psi, &[mu]).unwrap();
            let f = twisted_convolve_fft(&g, &phi, &psi, &[mu]).unwrap();
            assert!(d.l2_distance(&f).unwrap() < 1e-12 * d.l2_norm(), "mu = {mu}");
        }
    }

    #[test]
    fn mu_zero_is_ordinary_convolution() {
        let g = HTypeGroup::heisenberg(1).unwrap();
        let a = Axis::centered(16, 0.3).unwrap();
        let phi = GridFunction::sample_slice(vec![a, a], bump(0.2, 0.1, 0.3)).unwrap();
        let psi = GridFunction::sample_slice(vec![a, a], bump(-0.3, 0.2, 0.5)).unwrap();
        let out = twisted_convolve_direct(&g, &phi, &psi, &[0.0]).unwrap();
        let vol = phi.cell_volume();
        for i0 in 0..16usize {
            for i1 in 0..16usize {
                let mut s = Complex64::new(0.0, 0.0);
                for j0 in 0..16usize {
                    for j1 in 0..16usize {
                        let (r0, r1) = (i0 as isize - j0 as isize + 8, i1 as isize - j1 as isize + 8);
                        if (0..16).contains(&r0) && (0..16).contains(&r1) {
                            s += phi.values[r0 as usize * 16 + r1 as usize] * psi.values[j0 * 16 + j1];
                        }
                    }
                }
                assert!((s * vol - out.values[i0 * 16 + i1]).norm() < 1e-13);
            }
        }
    }
}
