//! Gauss rules and the panel-adaptive oscillatory quadrature engine.
//!
//! [`oscillatory_quad`] computes `int_a^b A(t) e^{i lambda phi(t)} dt`. The interval is
//! first cut into panels on which `lambda * (max phi - min phi) <= pi/2`, so every panel
//! holds at most a quarter wave. Each panel is integrated with an `n`-point
//! Gauss-Legendre rule and compared against the same rule on its two halves; the
//! panel with the largest discrepancy is bisected until the summed discrepancy
//! meets the tolerance. Near stationary points the phase varies slowly, the initial
//! panels are long, and the bisection step does the refinement.

use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
///
/// Roots of `P_n` by Newton's method from the Chebyshev-like initial guesses.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs n >= 1");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Shared 20-point rule used by the adaptive engine.
pub fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(20))
}

/// Nodes and weights of the `n`-point Gauss-Hermite rule for the weight `e^{-x^2}`.
///
/// Nodes come from the eigenvalues of the Jacobi matrix (Golub-Welsch) and are polished
/// by Newton steps on the Hermite function `h_n`; weights use the stable form
/// `w_i e^{x_i^2} = 1 / (n h_{n-1}(x_i)^2)`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, ws) = gauss_hermite_scaled(n);
    let w = x.iter().zip(&ws).map(|(a, b)| b * (-a * a).exp()).collect();
    (x, w)
}

/// Like [`gauss_hermite`] but returns the scaled weights `w_i e^{x_i^2}`, suitable for
/// integrating functions that already carry their Gaussian decay.
pub fn gauss_hermite_scaled(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!((1..=crate::special::hermite::HERMITE_MAX_ORDER).contains(&n), "unsupported Gauss-Hermite size {n}");
    let mut jm = nalgebra::DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jm[(k - 1, k)] = b;
        jm[(k, k - 1)] = b;
    }
    let eig = nalgebra::SymmetricEigen::new(jm);
    let mut x: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let nf = n as f64;
    let mut w = Vec::with_capacity(n);
    for xi in x.iter_mut() {
        for _ in 0..3 {
            let h = crate::special::hermite::hermite_all_unchecked(n, *xi);
            let d = (2.0 * nf).sqrt() * h[n - 1] - *xi * h[n];
            if d != 0.0 {
                *xi -= h[n] / d;
            }
        }
        let h = crate::special::hermite::hermite_all_unchecked(n - 1, *xi);
        w.push(1.0 / (nf * h[n - 1] * h[n - 1]));
    }
    (x, w)
}

/// Tuning of the adaptive engine.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadOptions {
    /// Target relative error of the total.
    pub rel_tol: f64,
    /// Absolute error floor (useful when the integral is zero).
    pub abs_tol: f64,
    /// Maximum number of panels before giving up.
    pub max_panels: usize,
    /// Maximum phase excursion `lambda * |Delta phi|` per initial panel.
    pub max_phase_per_panel: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-300, max_panels: 50_000, max_phase_per_panel: FRAC_PI_2 }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self
    }

    pub fn with_abs_tol(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self
    }
}

/// Value, error estimate and work of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub panels: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn gl_panel<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Complex64 {
    let (x, w) = gl20();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = Complex64::new(0.0, 0.0);
    for (xi, wi) in x.iter().zip(w) {
        s += f(c + h * xi) * *wi;
    }
    s * h
}

fn eval_panel<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Panel {
    let m = 0.5 * (a + b);
    let whole = gl_panel(f, a, b);
    let halves = gl_panel(f, a, m) + gl_panel(f, m, b);
    Panel { a, b, value: halves, error: (whole - halves).norm() }
}

/// Splits `[a, b]` into panels with `lambda * (max phi - min phi) <= limit`.
fn phase_panels<P: Fn(f64) -> f64>(phase: &P, a: f64, b: f64, lambda: f64, limit: f64, cap: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut stack = vec![(a, b, 0u32)];
    while let Some((x0, x1, depth)) = stack.pop() {
        let samples = 9;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..samples {
            let t = x0 + (x1 - x0) * i as f64 / (samples - 1) as f64;
            let p = phase(t);
            lo = lo.min(p);
            hi = hi.max(p);
        }
        let excursion = lambda * (hi - lo);
        if !(excursion > limit) || depth > 40 || out.len() + stack.len() > cap {
            out.push((x0, x1));
            continue;
        }
        let pieces = ((excursion / limit).ceil() as usize).clamp(2, 64);
        let h = (x1 - x0) / pieces as f64;
        // Push in reverse so panels come out left to right.
        for i in (0..pieces).rev() {
            let s0 = x0 + i as f64 * h;
            let s1 = if i + 1 == pieces { x1 } else { s0 + h };
            stack.push((s0, s1, depth + 1));
        }
    }
    out
}

/// Adaptive bisection driver shared by the oscillatory and plain integrators.
fn adapt<F: Fn(f64) -> Complex64>(f: &F, initial: Vec<(f64, f64)>, opts: &QuadOptions) -> Result<QuadResult> {
    let mut heap: BinaryHeap<Panel> = initial.into_iter().map(|(a, b)| eval_panel(f, a, b)).collect();
    loop {
        let total: Complex64 = heap.iter().map(|p| p.value).sum();
        let err: f64 = heap.iter().map(|p| p.error).sum();
        let panels = heap.len();
        if err <= (opts.rel_tol * total.norm()).max(opts.abs_tol) {
            return Ok(QuadResult { value: total, error: err, panels });
        }
        if panels >= opts.max_panels {
            return Err(Error::Quadrature { estimate: err, panels });
        }
        // Bisect the worst few panels per sweep to amortize the re-summation.
        let sweep = (panels / 8).max(1);
        for _ in 0..sweep {
            let Some(worst) = heap.pop() else { break };
            let m = 0.5 * (worst.a + worst.b);
            if m <= worst.a || m >= worst.b {
                // Cannot split further in floating point; keep as is.
                heap.push(Panel { error: 0.0, ..worst });
                continue;
            }
            heap.push(eval_panel(f, worst.a, m));
            heap.push(eval_panel(f, m, worst.b));
        }
    }
}

/// `int_a^b amplitude(t) e^{i lambda phase(t)} dt`.
pub fn oscillatory_quad<P, A>(phase: P, amplitude: A, a: f64, b: f64, lambda: f64, opts: &QuadOptions) -> Result<QuadResult>
where
    P: Fn(f64) -> f64,
    A: Fn(f64) -> Complex64,
{
    if !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid interval [{a}, {b}]")));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be finite and >= 0")));
    }
    if a == b {
        return Ok(QuadResult { value: Complex64::new(0.0, 0.0), error: 0.0, panels: 0 });
    }
    let panels = phase_panels(&phase, a, b, lambda, opts.max_phase_per_panel, opts.max_panels);
    let f = |t: f64| amplitude(t) * Complex64::from_polar(1.0, lambda * phase(t));
    adapt(&f, panels, opts)
}

/// Plain adaptive Gauss-Legendre integration of a complex integrand.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult> {
    if !(b >= a) {
        return Err(Error::InvalidArgument(format!("invalid interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult { value: Complex64::new(0.0, 0.0), error: 0.0, panels: 0 });
    }
    adapt(&f, vec![(a, b)], opts)
}

/// Plain adaptive integration of a real integrand.
pub fn integrate_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<f64> {
    Ok(integrate(|t| Complex64::new(f(t), 0.0), a, b, opts)?.value.re)
}

/// Fixed composite Gauss-Legendre rule: nodes and weights of `panels` equal panels of
/// an `n`-point rule on `[a, b]`.
pub fn composite_gl(a: f64, b: f64, panels: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * n);
    let mut weights = Vec::with_capacity(panels * n);
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(c + 0.5 * h * xi);
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // int_{-1}^{1} x^30 = 2/31 (degree 30 <= 2n - 1 = 31)
        let v: f64 = x.iter().zip(&w).map(|(a, b)| a.powi(30) * b).sum();
        assert!((v - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_hermite_moments() {
        let (x, w) = gauss_hermite(30);
        let m0: f64 = w.iter().sum();
        let m2: f64 = x.iter().zip(&w).map(|(a, b)| a * a * b).sum();
        assert!((m0 - PI.sqrt()).abs() < 1e-12);
        assert!((m2 - PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn linear_phase_closed_form() {
        let lam = 100.0;
        let r = oscillatory_quad(|t| t, |_| Complex64::new(1.0, 0.0), 0.0, 1.0, lam, &QuadOptions::default().with_rel_tol(1e-12))
            .unwrap();
        let exact = (Complex64::new(0.0, lam).exp() - 1.0) / Complex64::new(0.0, lam);
        assert!((r.value - exact).norm() / exact.norm() < 1e-10);
    }

    #[test]
    fn non_convergence_is_reported() {
        let opts = QuadOptions { max_panels: 4, rel_tol: 1e-15, ..Default::default() };
        let r = oscillatory_quad(|t| t * t, |t| Complex64::new(t.abs().sqrt(), 0.0), -1.0, 1.0, 1e4, &opts);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
