//! Tensor grids and complex samples on them.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};

/// A uniform axis: points `origin + i * step`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub n: usize,
    pub step: f64,
    pub origin: f64,
}

impl Axis {
    pub fn new(n: usize, step: f64, origin: f64) -> Result<Self> {
        if n == 0 || !(step > 0.0) || !step.is_finite() || !origin.is_finite() {
            return Err(Error::InvalidArgument(format!("bad axis: n = {n}, step = {step}, origin = {origin}")));
        }
        Ok(Self { n, step, origin })
    }

    /// The centered lattice `(i - n/2) * step` with `n` even, so `0` is a grid point
    /// and differences of grid points are grid offsets.
    pub fn centered(n: usize, step: f64) -> Result<Self> {
        if n % 2 != 0 {
            return Err(Error::InvalidArgument(format!("centered axis needs even n, got {n}")));
        }
        Self::new(n, step, -((n / 2) as f64) * step)
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Whether this axis is the centered lattice of its size and step.
    pub fn is_centered(&self) -> bool {
        self.n % 2 == 0 && (self.origin + (self.n / 2) as f64 * self.step).abs() <= 1e-12 * self.step
    }

    /// Largest `|point|`.
    pub fn max_abs(&self) -> f64 {
        self.origin.abs().max(self.point(self.n - 1).abs())
    }
}

/// Whether the central axes hold the variable `u` or its dual `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentralDomain {
    U,
    Mu,
}

/// Complex samples on a tensor grid over `x` (first `d1` axes) and, optionally,
/// the central variable (remaining axes). Row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub x_axes: Vec<Axis>,
    pub c_axes: Vec<Axis>,
    pub central: CentralDomain,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    /// Zero function on the given axes.
    pub fn zeros(x_axes: Vec<Axis>, c_axes: Vec<Axis>, central: CentralDomain) -> Result<Self> {
        let len = x_axes.iter().chain(&c_axes).map(|a| a.n).try_fold(1usize, |acc, n| acc.checked_mul(n));
        let len = len.ok_or_else(|| Error::Budget("grid size overflows usize".into()))?;
        if len > 1 << 28 {
            return Err(Error::Budget(format!("grid with {len} cells exceeds the 2^28 cell budget")));
        }
        Ok(Self { x_axes, c_axes, central, values: vec![Complex64::new(0.0, 0.0); len] })
    }

    /// Samples `f(x, u)` on the grid.
    pub fn sample<F>(x_axes: Vec<Axis>, c_axes: Vec<Axis>, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &[f64]) -> Complex64,
    {
        let mut g = Self::zeros(x_axes, c_axes, CentralDomain::U)?;
        let dx = g.x_axes.len();
        let mut coords = vec![0.0; g.ndim()];
        for idx in 0..g.values.len() {
            g.coords_into(idx, &mut coords);
            g.values[idx] = f(&coords[..dx], &coords[dx..]);
        }
        Ok(g)
    }

    /// Samples a function of `x` only (a central slice).
    pub fn sample_slice<F>(x_axes: Vec<Axis>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64,
    {
        Self::sample(x_axes, Vec::new(), |x, _| f(x))
    }

    pub fn ndim(&self) -> usize {
        self.x_axes.len() + self.c_axes.len()
    }

    pub fn axes(&self) -> impl Iterator<Item = &Axis> {
        self.x_axes.iter().chain(self.c_axes.iter())
    }

    pub fn dims(&self) -> Vec<usize> {
        self.axes().map(|a| a.n).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Product of the steps of all axes.
    pub fn cell_volume(&self) -> f64 {
        self.axes().map(|a| a.step).product()
    }

    /// Product of the steps of the `x` axes.
    pub fn x_cell_volume(&self) -> f64 {
        self.x_axes.iter().map(|a| a.step).product()
    }

    /// Multi-index of a flat index.
    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let dims = self.dims();
        let mut out = vec![0; dims.len()];
        for (k, &n) in dims.iter().enumerate().rev() {
            out[k] = idx % n;
            idx /= n;
        }
        out
    }

    /// Coordinates of a flat index, written into `out`.
    pub fn coords_into(&self, mut idx: usize, out: &mut [f64]) {
        let axes: Vec<&Axis> = self.axes().collect();
        for k in (0..axes.len()).rev() {
            let a = axes[k];
            out[k] = a.point(idx % a.n);
            idx /= a.n;
        }
    }

    /// `sum |f|^2 * cell volume`.
    pub fn norm2_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.norm2_sq().sqrt()
    }

    /// `sum |f| * cell volume`.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() * self.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Same axes and domain (values may differ).
    pub fn same_grid(&self, other: &Self) -> bool {
        self.x_axes == other.x_axes && self.c_axes == other.c_axes && self.central == other.central
    }

    /// Discrete `L^2` distance to another function on the same grid.
    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::Dimension("grid mismatch".into()));
        }
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.cell_volume()).sqrt())
    }

    /// `a * self + b * other`, same grid required.
    pub fn lin_comb(&self, a: Complex64, other: &Self, b: Complex64) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::Dimension("grid mismatch".into()));
        }
        let mut out = self.clone();
        for (o, v) in out.values.iter_mut().zip(&other.values) {
            *o = a * *o + b * v;
        }
        Ok(out)
    }

    /// Largest `|f|` over the cells on the boundary of the central axes.
    pub fn central_boundary_max(&self) -> f64 {
        let dx = self.x_axes.len();
        let mut m: f64 = 0.0;
        for idx in 0..self.values.len() {
            let mi = self.multi_index(idx);
            let on_edge = self.c_axes.iter().enumerate().any(|(k, a)| mi[dx + k] == 0 || mi[dx + k] == a.n - 1);
            if on_edge {
                m = m.max(self.values[idx].norm());
            }
        }
        m
    }

    /// Largest `|f|` over the cells on the boundary of the `x` axes.
    pub fn x_boundary_max(&self) -> f64 {
        let mut m: f64 = 0.0;
        for idx in 0..self.values.len() {
            let mi = self.multi_index(idx);
            let on_edge = self.x_axes.iter().enumerate().any(|(k, a)| mi[k] == 0 || mi[k] == a.n - 1);
            if on_edge {
                m = m.max(self.values[idx].norm());
            }
        }
        m
    }
}

/// Direction of a discrete Fourier transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FftDirection {
    /// Kernel `e^{-2 pi i m j / n}`.
    Forward,
    /// Kernel `e^{+2 pi i m j / n}` (unnormalized).
    Inverse,
}

/// Applies an unnormalized length-`dims[axis]` FFT along `axis` of a row-major array.
pub fn fft_along_axis(values: &mut [Complex64], dims: &[usize], axis: usize, dir: FftDirection) {
    let n = dims[axis];
    if n <= 1 {
        return;
    }
    let stride: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let mut planner = FftPlanner::new();
    let fft: Arc<dyn Fft<f64>> = match dir {
        FftDirection::Forward => planner.plan_fft_forward(n),
        FftDirection::Inverse => planner.plan_fft_inverse(n),
    };
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for o in 0..outer {
        for s in 0..stride {
            let base = o * n * stride + s;
            for (j, l) in line.iter_mut().enumerate() {
                *l = values[base + j * stride];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for (j, l) in line.iter().enumerate() {
                values[base + j * stride] = *l;
            }
        }
    }
}

/// Evaluates `A_m = sum_q a_q e^{i c x_m z_q}` for uniform grids `x_m`, `z_q`
/// in `O(n log n)` by Bluestein's identity `mq = (m^2 + q^2 - (m - q)^2) / 2`.
pub struct ChirpZ {
    n_in: usize,
    n_out: usize,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
    kernel_hat: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl ChirpZ {
    /// Plan for inputs on `z` (`n_in` points) and outputs on `x` (`n_out` points).
    pub fn new(c: f64, z: &Axis, x: &Axis) -> Self {
        let (n_in, n_out) = (z.n, x.n);
        let w = c * x.step * z.step;
        let p = (n_in + n_out - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(p);
        let inv = planner.plan_fft_inverse(p);
        let pre = (0..n_in)
            .map(|q| {
                let qf = q as f64;
                Complex64::from_polar(1.0, c * x.origin * z.step * qf + 0.5 * w * qf * qf)
            })
            .collect();
        let post = (0..n_out)
            .map(|m| {
                let mf = m as f64;
                Complex64::from_polar(1.0, c * x.origin * z.origin + c * z.origin * x.step * mf + 0.5 * w * mf * mf)
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); p];
        for j in 0..n_out {
            let jf = j as f64;
            kernel[j] = Complex64::from_polar(1.0, -0.5 * w * jf * jf);
        }
        for j in 1..n_in {
            let jf = j as f64;
            kernel[p - j] = Complex64::from_polar(1.0, -0.5 * w * jf * jf);
        }
        fwd.process(&mut kernel);
        Self { n_in, n_out, pre, post, kernel_hat: kernel, fwd, inv }
    }

    /// Applies the transform to `a` (length `n_in`), writing `n_out` values into `out`.
    pub fn apply_into(&self, a: &[Complex64], buf: &mut Vec<Complex64>, out: &mut [Complex64]) {
        let p = self.kernel_hat.len();
        buf.clear();
        buf.resize(p, Complex64::new(0.0, 0.0));
        for q in 0..self.n_in {
            buf[q] = a[q] * self.pre[q];
        }
        self.fwd.process(buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.inv.process(buf);
        let scale = 1.0 / p as f64;
        for m in 0..self.n_out {
            out[m] = buf[m] * self.post[m] * scale;
        }
    }

    pub fn apply(&self, a: &[Complex64]) -> Vec<Complex64> {
        let mut buf = Vec::new();
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_out];
        self.apply_into(a, &mut buf, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chirp_z_matches_direct_sum() {
        let z = Axis::new(37, 0.13, -2.1).unwrap();
        let x = Axis::new(29, 0.21, -1.7).unwrap();
        let c = 1.37;
        let a: Vec<Complex64> = (0..z.n).map(|q| Complex64::new((q as f64 * 0.3).sin(), (q as f64).cos())).collect();
        let fast = ChirpZ::new(c, &z, &x).apply(&a);
        for m in 0..x.n {
            let direct: Complex64 =
                (0..z.n).map(|q| a[q] * Complex64::from_polar(1.0, c * x.point(m) * z.point(q))).sum();
            assert!((direct - fast[m]).norm() < 1e-11, "m={m}");
        }
    }

    #[test]
    fn centered_axis_and_indexing() {
        let a = Axis::centered(8, 0.5).unwrap();
        assert!(a.is_centered());
        assert_eq!(a.point(4), 0.0);
        assert!(Axis::centered(7, 0.5).is_err());
        let g = GridFunction::sample(vec![a, a], vec![Axis::centered(4, 1.0).unwrap()], |x, u| {
            Complex64::new(x[0] + 10.0 * x[1] + 100.0 * u[0], 0.0)
        })
        .unwrap();
        let mut c = vec![0.0; 3];
        let idx = (3 * 8 + 5) * 4 + 1;
        g.coords_into(idx, &mut c);
        assert_eq!(c, vec![a.point(3), a.point(5), -1.0]);
        assert_eq!(g.multi_index(idx), vec![3, 5, 1]);
    }
}
