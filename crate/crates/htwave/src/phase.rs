//! Scalar phase calculus of the wave kernel.
//!
//! * `g(tau) = tau cot tau` with derivatives;
//! * `psi(t, r) = 1 - r^2 g(t)` and `phi(t, r, v) = psi(t, r) - t v`;
//! * the singular-support curve `r(t) = |sin t / t|`, `v(t) = 1/t - sin 2t / (2t^2)`,
//!   which is the set of `(r, v)` where `phi = phi_t = 0` has a solution `t`;
//! * the transversal defect `w(t, r, v) = v - v(t) - (v'(t)/r'(t)) (r - r(t))`;
//! * corridors around the curve and the mixed Hessian of the full phase.
//!
//! Near `t = 0` every function switches to its Taylor series (see [`SERIES_SEAM`]),
//! avoiding the cancellation in the closed forms.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::group::HTypeGroup;

/// Below this `|t|` series expansions replace the closed forms. At the seam the
/// truncation error of the series is below `1e-20` and the cancellation loss of the
/// closed forms below `1e-13`, so the branches agree far better than `1e-11`.
pub const SERIES_SEAM: f64 = 0.5;

/// Taylor coefficients of `tau cot tau = sum_n G[n] tau^{2n}`
/// (`G[n] = (-1)^n 4^n B_{2n} / (2n)!`).
const G_SERIES: [f64; 16] = [
    1.0,
    -0.333_333_333_333_333_33,
    -0.022_222_222_222_222_222,
    -0.002_116_402_116_402_116_4,
    -0.000_211_640_211_640_211_64,
    -2.137_779_915_557_693_3e-5,
    -2.164_404_280_806_397_2e-6,
    -2.192_594_785_187_377_8e-7,
    -2.221_460_878_997_968e-8,
    -2.250_784_651_680_899_3e-9,
    -2.280_515_120_459_218_3e-10,
    -2.310_643_259_900_262_4e-11,
    -2.341_170_681_982_488_4e-12,
    -2.372_101_740_023_365_4e-13,
    -2.403_441_533_330_770_6e-14,
    -2.435_195_402_918_336_9e-15,
];

/// `g`, `g'`, `g''` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GDerivs {
    pub g: f64,
    pub g1: f64,
    pub g2: f64,
    /// `g'(tau) / tau` (finite at 0, where it equals `-2/3`).
    pub g1_over_tau: f64,
}

fn check_pole(tau: f64) -> Result<()> {
    if !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite argument {tau}")));
    }
    let k = (tau / PI).round();
    if k != 0.0 && (tau - k * PI).abs() <= 1e-12 * tau.abs().max(1.0) {
        return Err(Error::Pole(tau));
    }
    Ok(())
}

/// `g(tau) = tau cot tau` with `g' = (sin 2tau - 2tau) / (2 sin^2 tau)` and
/// `g'' = 2 (tau cos tau - sin tau) / sin^3 tau`; `g(0) = 1`.
pub fn g_cot(tau: f64) -> Result<GDerivs> {
    check_pole(tau)?;
    if tau.abs() < SERIES_SEAM {
        let t2 = tau * tau;
        let mut g = 0.0;
        let mut g1_over_tau = 0.0;
        let mut g2 = 0.0;
        // Horner-free accumulation is fine: the terms decrease geometrically.
        let mut p = 1.0; // tau^{2n}
        let mut pm = 0.0; // tau^{2n-2}
        for (n, c) in G_SERIES.iter().enumerate() {
            g += c * p;
            if n >= 1 {
                let nn = n as f64;
                g1_over_tau += c * 2.0 * nn * pm;
                g2 += c * 2.0 * nn * (2.0 * nn - 1.0) * pm;
            }
            pm = p;
            p *= t2;
        }
        Ok(GDerivs { g, g1: g1_over_tau * tau, g2, g1_over_tau })
    } else {
        let (s, c) = tau.sin_cos();
        let g = tau * c / s;
        let g1 = ((2.0 * tau).sin() - 2.0 * tau) / (2.0 * s * s);
        let g2 = 2.0 * (tau * c - s) / (s * s * s);
        Ok(GDerivs { g, g1, g2, g1_over_tau: g1 / tau })
    }
}

/// `psi`, `psi_t`, `psi_tt` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiEval {
    pub psi: f64,
    pub psi_t: f64,
    pub psi_tt: f64,
}

/// `psi(t, r) = 1 - r^2 g(t)` with `psi_t = -r^2 g'(t)`, `psi_tt = -r^2 g''(t)`.
pub fn psi(t: f64, r: f64) -> Result<PsiEval> {
    let g = g_cot(t)?;
    let r2 = r * r;
    Ok(PsiEval { psi: 1.0 - r2 * g.g, psi_t: -r2 * g.g1, psi_tt: -r2 * g.g2 })
}

/// Full evaluation of the phase `phi(t, r, v) = 1 - r^2 t cot t - t v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEval {
    pub t: f64,
    pub r: f64,
    pub v: f64,
    pub psi: f64,
    pub psi_t: f64,
    pub psi_tt: f64,
    pub phi: f64,
    pub phi_t: f64,
    /// Transversal defect `w(t, r, v)`; `None` at `t = 0`, where it is undefined.
    pub w: Option<f64>,
}

/// Evaluates `phi`, `phi_t`, `psi` and derivatives, and `w`.
pub fn phi(t: f64, r: f64, v: f64) -> Result<PhaseEval> {
    let p = psi(t, r)?;
    let w = if t == 0.0 { None } else { Some(w_unchecked(t, r, v)?) };
    Ok(PhaseEval {
        t,
        r,
        v,
        psi: p.psi,
        psi_t: p.psi_t,
        psi_tt: p.psi_tt,
        phi: p.psi - t * v,
        phi_t: p.psi_t - v,
        w,
    })
}

/// `sin t / t` and its first two derivatives.
fn sinc3(t: f64) -> (f64, f64, f64) {
    if t.abs() < SERIES_SEAM {
        // sum_k (-1)^k t^{2k} / (2k+1)!
        let t2 = t * t;
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        let mut coef = 1.0; // (-1)^k / (2k+1)!
        let mut p = 1.0; // t^{2k}
        let mut pm1 = 0.0; // t^{2k-1}
        let mut pm2 = 0.0; // t^{2k-2}
        for k in 0..14 {
            let kk = 2.0 * k as f64;
            s0 += coef * p;
            s1 += coef * kk * pm1;
            s2 += coef * kk * (kk - 1.0) * pm2;
            pm2 = p;
            pm1 = p * t;
            p *= t2;
            coef *= -1.0 / ((kk + 2.0) * (kk + 3.0));
        }
        (s0, s1, s2)
    } else {
        let (s, c) = t.sin_cos();
        (s / t, (t * c - s) / (t * t), -s / t - 2.0 * c / (t * t) + 2.0 * s / (t * t * t))
    }
}

/// `v(t)` and its first two derivatives.
fn v3(t: f64) -> (f64, f64, f64) {
    if t.abs() < SERIES_SEAM {
        // v(t) = sum_{k>=1} (-1)^{k+1} 4^k t^{2k-1} / (2k+1)!
        let t2 = t * t;
        let (mut v0, mut v1, mut v2) = (0.0, 0.0, 0.0);
        let mut coef = 4.0 / 6.0; // k = 1
        let mut p = t; // t^{2k-1}
        for k in 1..16 {
            let e = (2 * k - 1) as f64;
            v0 += coef * p;
            // p / t = t^{2k-2}, p / t^2 = t^{2k-3}
            v1 += coef * e * t.powi(2 * k as i32 - 2);
            if k >= 2 {
                v2 += coef * e * (e - 1.0) * t.powi(2 * k as i32 - 3);
            }
            p *= t2;
            let kk = k as f64;
            coef *= -4.0 / ((2.0 * kk + 2.0) * (2.0 * kk + 3.0));
        }
        (v0, v1, v2)
    } else {
        let (s2, c2) = (2.0 * t).sin_cos();
        let t2 = t * t;
        let v = 1.0 / t - s2 / (2.0 * t2);
        let v1 = (s2 - t - t * c2) / (t2 * t);
        let v2 = (4.0 * t * c2 + 2.0 * t + 2.0 * t2 * s2 - 3.0 * s2) / (t2 * t2);
        (v, v1, v2)
    }
}

/// Derivatives of the singular curve at a regular parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveDerivs {
    pub rp: f64,
    pub vp: f64,
    pub rpp: f64,
    pub vpp: f64,
}

/// A point of the singular-support curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub r: f64,
    pub v: f64,
    /// `None` at `t` in `pi Z \ {0}`, where `r = |sin t / t|` has a corner.
    pub derivs: Option<CurveDerivs>,
}

fn near_nonzero_pi_multiple(t: f64) -> bool {
    let k = (t / PI).round();
    k != 0.0 && (t - k * PI).abs() <= 1e-12 * t.abs().max(1.0)
}

/// `(r(t), v(t))` with derivatives, for `t >= 0`.
pub fn curve(t: f64) -> Result<CurvePoint> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("curve parameter t = {t} must be finite and >= 0")));
    }
    let (s0, s1, s2) = sinc3(t);
    let (v, v1, v2) = v3(t);
    let derivs = if near_nonzero_pi_multiple(t) {
        None
    } else {
        let sg = if s0 < 0.0 { -1.0 } else { 1.0 };
        Some(CurveDerivs { rp: sg * s1, vp: v1, rpp: sg * s2, vpp: v2 })
    };
    Ok(CurvePoint { t, r: s0.abs(), v, derivs })
}

/// `w(t, r, v) = v - v(t) + 2 r(t) cot(t) (r - r(t))`, using `v'/r' = -2 r(t) cot t`.
pub fn w_transversal(t: f64, r: f64, v: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("w requires t > 0, got {t}")));
    }
    check_pole(t)?;
    let c = curve(t)?;
    let d = c.derivs.ok_or(Error::Pole(t))?;
    if d.rp.abs() < 1e-15 {
        return Err(Error::InvalidArgument(format!("r'(t) vanishes at t = {t}; w is undefined")));
    }
    w_unchecked(t, r, v)
}

fn w_unchecked(t: f64, r: f64, v: f64) -> Result<f64> {
    let (s0, _, _) = sinc3(t);
    let (vt, _, _) = v3(t);
    let rt = s0.abs();
    // 2 r(t) cot t = 2 sgn(sin t / t) cos t / t.
    let sg = if s0 < 0.0 { -1.0 } else { 1.0 };
    Ok(v - vt + 2.0 * sg * t.cos() / t * (r - rt))
}

/// Result of [`solve_singular_t`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SingularSolve {
    /// `phi = phi_t = 0` at `t` with `|phi| + |phi_t| = residual <= 1e-10`.
    Root { t: f64, residual: f64 },
    /// No root in the window: the smallest residual found and where.
    NoRoot { min_residual: f64, t_at_min: f64 },
    /// The residual decreases towards the limit point `t = 0`.
    Boundary { t_edge: f64, residual: f64 },
}

/// Knobs of the singular-time solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Minimum distance kept from the poles `k pi`, `k != 0`.
    pub pole_margin: f64,
    /// Number of scan points used to seed the Gauss-Newton iterations.
    pub scan_points: usize,
    /// Residual accepted as a root.
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { pole_margin: 1e-6, scan_points: 400, tol: 1e-10 }
    }
}

fn residual(t: f64, r: f64, v: f64) -> Option<(f64, f64, f64)> {
    let p = psi(t, r).ok()?;
    Some((p.psi - t * v, p.psi_t - v, p.psi_tt))
}

/// Solves `phi(t, r, v) = phi_t(t, r, v) = 0` for `t` in `window` by damped
/// Gauss-Newton on `phi^2 + phi_t^2`, seeded from a residual scan.
pub fn solve_singular_t(r: f64, v: f64, window: (f64, f64), opts: &SolveOptions) -> Result<SingularSolve> {
    let (a0, b0) = window;
    if !(b0 > a0) || !a0.is_finite() || !b0.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid window ({a0}, {b0})")));
    }
    let a = a0.max(0.0);
    if b0 <= a {
        return Err(Error::InvalidArgument("window lies in t < 0".into()));
    }
    // Split the window at interior poles, keeping the margin.
    let mut pieces = Vec::new();
    let mut lo = a;
    let kmin = (a / PI).floor() as i64;
    let kmax = (b0 / PI).ceil() as i64;
    for k in kmin..=kmax {
        if k == 0 {
            continue;
        }
        let p = k as f64 * PI;
        if p + opts.pole_margin > lo && p - opts.pole_margin < b0 {
            if p - opts.pole_margin > lo {
                pieces.push((lo, p - opts.pole_margin));
            }
            lo = p + opts.pole_margin;
        }
    }
    if lo < b0 {
        pieces.push((lo, b0));
    }
    let f2 = |t: f64| residual(t, r, v).map(|(p, q, _)| p.abs() + q.abs()).unwrap_or(f64::INFINITY);
    let mut best = (f64::INFINITY, a);
    for &(pa, pb) in &pieces {
        let n = opts.scan_points.max(8);
        let h = (pb - pa) / n as f64;
        let ts: Vec<f64> = (0..=n).map(|i| (pa + i as f64 * h).clamp(pa, pb)).collect();
        let vals: Vec<f64> = ts.iter().map(|&t| f2(t)).collect();
        for i in 0..ts.len() {
            let left = if i > 0 { vals[i - 1] } else { f64::INFINITY };
            let right = if i + 1 < ts.len() { vals[i + 1] } else { f64::INFINITY };
            if vals[i] <= left && vals[i] <= right {
                let (t, res) = gauss_newton(ts[i], r, v, pa, pb, opts.tol);
                if res < best.0 {
                    best = (res, t);
                }
                if vals[i] < best.0 {
                    best = (vals[i], ts[i]);
                }
            }
        }
    }
    let (res, t) = best;
    if a0 <= 0.0 && t <= a + 1e-6 && res < 1e-6 {
        return Ok(SingularSolve::Boundary { t_edge: t, residual: res });
    }
    if res <= opts.tol {
        if a0 <= 0.0 && t < 1e-4 {
            return Ok(SingularSolve::Boundary { t_edge: t, residual: res });
        }
        Ok(SingularSolve::Root { t, residual: res })
    } else {
        Ok(SingularSolve::NoRoot { min_residual: res, t_at_min: t })
    }
}

fn gauss_newton(t0: f64, r: f64, v: f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let mut t = t0;
    let Some((mut p, mut q, mut qt)) = residual(t, r, v) else { return (t, f64::INFINITY) };
    for _ in 0..100 {
        let res = p.abs() + q.abs();
        if res <= tol * 1e-2 {
            break;
        }
        // Residual vector (phi, phi_t), Jacobian (phi_t, phi_tt).
        let den = q * q + qt * qt;
        if den == 0.0 {
            break;
        }
        let step = -(p * q + q * qt) / den;
        let mut damp = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let tn = (t + damp * step).clamp(lo, hi);
            if let Some((pn, qn, qtn)) = residual(tn, r, v) {
                if pn * pn + qn * qn < p * p + q * q {
                    t = tn;
                    p = pn;
                    q = qn;
                    qt = qtn;
                    improved = true;
                    break;
                }
            }
            damp *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (t, p.abs() + q.abs())
}

/// Corridor classification of a point relative to the curve point at `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Corridor {
    Index(u32),
    Outside,
}

/// Largest corridor index before a point is classified as outside.
pub const CORRIDOR_MAX: u32 = 40;

/// The `t`-support `J_{k,l}` of `eta_l(t - k pi)`, as two closed intervals.
pub fn jkl_support(k: u32, l: u32) -> [(f64, f64); 2] {
    let kp = k as f64 * PI;
    let s = 2f64.powi(-(l as i32));
    [(kp - s * 5.0 * PI / 4.0, kp - s * 3.0 * PI / 8.0), (kp + s * 3.0 * PI / 8.0, kp + s * 5.0 * PI / 4.0)]
}

/// Least `m >= 0` with `|r - r(b)| <= 2^m (lambda k 2^l)^{-1/2}` and
/// `|w(b, r, v)| <= 2^{2m} (lambda k)^{-1}`.
pub fn corridor_index(b: f64, r: f64, v: f64, lambda: f64, k: u32, l: u32) -> Result<Corridor> {
    if k == 0 || l == 0 || !(lambda > 0.0) {
        return Err(Error::InvalidArgument("corridors need k >= 1, l >= 1, lambda > 0".into()));
    }
    let lk = lambda * k as f64;
    if v < 1.0 / lk {
        return Err(Error::InvalidArgument(format!("v = {v} is below the floor (lambda k)^-1 = {}", 1.0 / lk)));
    }
    let [j1, j2] = jkl_support(k, l);
    if !((b >= j1.0 && b <= j1.1) || (b >= j2.0 && b <= j2.1)) {
        return Err(Error::InvalidArgument(format!("b = {b} is not in J_(k,l)")));
    }
    let rb = curve(b)?.r;
    let w = w_transversal(b, r, v)?;
    let dr = (r - rb).abs() * (lk * 2f64.powi(l as i32)).sqrt();
    let dw = w.abs() * lk;
    let m_r = if dr <= 1.0 { 0.0 } else { dr.log2().ceil() };
    let m_w = if dw <= 1.0 { 0.0 } else { (0.5 * dw.log2()).ceil() };
    let mut m = m_r.max(m_w).max(0.0);
    // Guard against rounding in the logarithms.
    while m > 0.0 && dr <= 2f64.powf(m - 1.0) && dw <= 4f64.powf(m - 1.0) {
        m -= 1.0;
    }
    while !(dr <= 2f64.powf(m) && dw <= 4f64.powf(m)) {
        m += 1.0;
    }
    if m > CORRIDOR_MAX as f64 {
        Ok(Corridor::Outside)
    } else {
        Ok(Corridor::Index(m as u32))
    }
}

/// The full phase `Phi(x, u, y, v, omega, sigma)` of the oscillatory representation.
pub fn big_phi(g: &HTypeGroup, x: &[f64], u: &[f64], y: &[f64], v: &[f64], omega: &[f64], sigma: f64) -> Result<f64> {
    let om = crate::group::norm(omega);
    let gg = g_cot(om / sigma)?;
    let dxy2: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
    // jvec_pairing gives <J_i x, y> = -x^T J_i y.
    let pair = g.jvec_pairing(x, y);
    let lin: f64 = (0..g.d2()).map(|i| (4.0 * u[i] - 4.0 * v[i] + 2.0 * pair[i]) * omega[i]).sum();
    Ok(sigma * (1.0 - dxy2 * gg.g) + lin)
}

/// Mixed Hessian of `Phi` with rows `(x, u, omega, sigma)` and columns `(y, v, omega, sigma)`,
/// a square matrix of size `d1 + 2 d2 + 1`, assembled from closed-form entries.
pub fn mixed_hessian(g: &HTypeGroup, omega: &[f64], sigma: f64, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    let (d1, d2) = (g.d1(), g.d2());
    if omega.len() != d2 || x.len() != d1 || y.len() != d1 {
        return Err(Error::Dimension("Hessian arguments do not match the group".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma = {sigma} must be positive")));
    }
    let om = crate::group::norm(omega);
    let tau = om / sigma;
    let gd = g_cot(tau)?;
    let (gv, g1, g2) = (gd.g, gd.g1, gd.g2);
    // Unit direction of omega (any unit vector at omega = 0: the limit is direction-free).
    let n: Vec<f64> = if om > 0.0 {
        omega.iter().map(|w| w / om).collect()
    } else {
        (0..d2).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect()
    };
    let dxy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let dxy2: f64 = dxy.iter().map(|a| a * a).sum();
    let jom = g.build_jmu(omega)?;
    let js = g.structure_matrices();
    let size = d1 + 2 * d2 + 1;
    let (ox, ou, ow, os) = (0, d1, d1 + d2, d1 + 2 * d2);
    let (cy, cv, cw, cs) = (0, d1, d1 + d2, d1 + 2 * d2);
    let mut h = DMatrix::<f64>::zeros(size, size);
    for j in 0..d1 {
        for k in 0..d1 {
            h[(ox + j, cy + k)] = 2.0 * sigma * gv * if j == k { 1.0 } else { 0.0 } - 2.0 * jom[(j, k)];
        }
        for l in 0..d2 {
            // e_j^T J_l y
            let jly: f64 = (0..d1).map(|b| js[l][(j, b)] * y[b]).sum();
            h[(ox + j, cw + l)] = -2.0 * dxy[j] * g1 * n[l] - 2.0 * jly;
        }
        h[(ox + j, cs)] = 2.0 * dxy[j] * (tau * g1 - gv);
    }
    for i in 0..d2 {
        h[(ou + i, cw + i)] = 4.0;
    }
    for i in 0..d2 {
        for k in 0..d1 {
            // x^T J_i e_k
            let xji: f64 = (0..d1).map(|a| x[a] * js[i][(a, k)]).sum();
            h[(ow + i, cy + k)] = 2.0 * dxy[k] * g1 * n[i] - 2.0 * xji;
        }
        h[(ow + i, cv + i)] = -4.0;
        for l in 0..d2 {
            let delta = if i == l { 1.0 } else { 0.0 };
            // g'(tau) (delta - n_i n_l) / |omega| = (g'/tau) (delta - n_i n_l) / sigma
            h[(ow + i, cw + l)] =
                -dxy2 * (gd.g1_over_tau * (delta - n[i] * n[l]) / sigma + g2 * n[i] * n[l] / sigma);
        }
        h[(ow + i, cs)] = dxy2 * tau * n[i] / sigma * g2;
    }
    for k in 0..d1 {
        h[(os, cy + k)] = 2.0 * dxy[k] * (gv - tau * g1);
    }
    for l in 0..d2 {
        h[(os, cw + l)] = dxy2 * tau * n[l] / sigma * g2;
    }
    h[(os, cs)] = -dxy2 * tau * tau * g2 / sigma;
    Ok(h)
}

/// `D = 2^{d1 + 4 d2 + 1} sigma^{d1 - 1} |x - y|^2 (tau / sin tau)^{d1 + 2}`.
pub fn hessian_closed_form(d1: usize, d2: usize, sigma: f64, tau: f64, dist: f64) -> f64 {
    let q = if tau.abs() < 1e-8 { 1.0 + tau * tau / 6.0 } else { tau / tau.sin() };
    2f64.powi((d1 + 4 * d2 + 1) as i32) * sigma.powi(d1 as i32 - 1) * dist * dist * q.powi(d1 as i32 + 2)
}

/// Output of [`hessian_determinant_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianCheck {
    pub numeric: f64,
    pub closed_form: f64,
    pub rel_gap: f64,
    /// Max entry of `(cI + S) (cI - S) / (c^2 + Lambda^2) - I` for `c = 2 sigma g`, `S = -2 J^omega`.
    pub skew_inverse_residual: f64,
    /// Relative gap between `det(cI + S)` and `(c^2 + Lambda^2)^{d1/2}`.
    pub skew_det_gap: f64,
}

/// Cone limit for the Hessian identity: `tau = |omega| / sigma <= 3 pi / 4`.
pub const HESSIAN_TAU_MAX: f64 = 3.0 * PI / 4.0;

/// Compares the numeric determinant of [`mixed_hessian`] with [`hessian_closed_form`]
/// and checks the skew-inverse identity `(cI + S)^{-1} = (cI - S) / (c^2 + Lambda^2)`.
pub fn hessian_determinant_check(g: &HTypeGroup, omega: &[f64], sigma: f64, x: &[f64], y: &[f64]) -> Result<HessianCheck> {
    let om = crate::group::norm(omega);
    let tau = om / sigma;
    if tau > HESSIAN_TAU_MAX {
        return Err(Error::InvalidArgument(format!("tau = {tau} is outside the cone tau <= 3pi/4")));
    }
    let dist = crate::group::norm(&x.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>());
    if dist == 0.0 {
        return Err(Error::InvalidArgument("the Hessian identity needs x != y".into()));
    }
    let h = mixed_hessian(g, omega, sigma, x, y)?;
    let numeric = h.lu().determinant();
    let closed = hessian_closed_form(g.d1(), g.d2(), sigma, tau, dist);
    if numeric == 0.0 {
        return Err(Error::Resolution("mixed Hessian is numerically singular".into()));
    }
    let d1 = g.d1();
    let c = 2.0 * sigma * g_cot(tau)?.g;
    let s = g.build_jmu(omega)? * -2.0;
    let lam2 = 4.0 * om * om;
    let id = DMatrix::<f64>::identity(d1, d1);
    let a = &id * c + &s;
    let inv = (&id * c - &s) / (c * c + lam2);
    let resid = (&a * inv - &id).abs().max();
    let det_expected = (c * c + lam2).powf(d1 as f64 / 2.0);
    let det_gap = ((a.determinant() - det_expected) / det_expected).abs();
    Ok(HessianCheck {
        numeric,
        closed_form: closed,
        rel_gap: ((numeric - closed) / closed).abs(),
        skew_inverse_residual: resid,
        skew_det_gap: det_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_values() {
        let q = PI / 4.0;
        assert!((g_cot(q).unwrap().g - q).abs() < 1e-15);
        assert!((g_cot(0.0).unwrap().g2 + 2.0 / 3.0).abs() < 1e-15);
        let d = g_cot(1.0).unwrap();
        assert!((d.g - d.g1 - (1.0 / 1f64.sin()).powi(2)).abs() < 1e-12);
        assert!(matches!(g_cot(PI), Err(Error::Pole(_))));
        assert!(matches!(g_cot(-2.0 * PI), Err(Error::Pole(_))));
    }

    #[test]
    fn series_seam_agreement() {
        // Evaluate the closed forms just past the seam against the series just before.
        let t = SERIES_SEAM;
        let inside = g_cot(t * (1.0 - 1e-12)).unwrap();
        let outside = g_cot(t).unwrap();
        assert!((inside.g - outside.g).abs() < 1e-11);
        assert!((inside.g1 - outside.g1).abs() < 1e-11);
        assert!((inside.g2 - outside.g2).abs() < 1e-11);
        let a = curve(t * (1.0 - 1e-12)).unwrap();
        let b = curve(t).unwrap();
        let (da, db) = (a.derivs.unwrap(), b.derivs.unwrap());
        for (x, y) in [(a.r, b.r), (a.v, b.v), (da.rp, db.rp), (da.vp, db.vp), (da.rpp, db.rpp), (da.vpp, db.vpp)] {
            assert!((x - y).abs() < 1e-11, "{x} vs {y}");
        }
    }

    #[test]
    fn curve_examples() {
        let c = curve(0.0).unwrap();
        assert_eq!((c.r, c.v), (1.0, 0.0));
        let c = curve(PI).unwrap();
        assert!(c.r < 1e-15 && (c.v - 1.0 / PI).abs() < 1e-15);
        assert!(c.derivs.is_none());
        let t = 2.3;
        let c = curve(t).unwrap();
        let d = c.derivs.unwrap();
        assert!((d.vp / d.rp + 2.0 * c.r / t.tan()).abs() < 1e-12);
    }

    #[test]
    fn phase_on_curve_vanishes() {
        let c = curve(2.0).unwrap();
        let p = phi(2.0, c.r, c.v).unwrap();
        assert!(p.phi.abs() < 1e-14 && p.phi_t.abs() < 1e-14);
        assert!(p.w.unwrap().abs() < 1e-15);
    }

    #[test]
    fn solver_examples() {
        let c = curve(2.0).unwrap();
        let opts = SolveOptions::default();
        match solve_singular_t(c.r, c.v, (1.6, 2.6), &opts).unwrap() {
            SingularSolve::Root { t, residual } => {
                assert!((t - 2.0).abs() < 1e-8, "t = {t}");
                assert!(residual <= 1e-10);
            }
            other => panic!("{other:?}"),
        }
        match solve_singular_t(c.r + 0.1, c.v, (1.6, 2.6), &opts).unwrap() {
            SingularSolve::NoRoot { min_residual, .. } => assert!(min_residual > 0.0),
            other => panic!("{other:?}"),
        }
        assert!(matches!(solve_singular_t(1.0, 0.0, (0.0, 1.0), &opts).unwrap(), SingularSolve::Boundary { .. }));
    }

    #[test]
    fn corridor_on_curve_is_zero() {
        let (k, l) = (2, 1);
        let b = 2.0 * PI + 0.5 * PI * 0.75;
        let c = curve(b).unwrap();
        assert_eq!(corridor_index(b, c.r, c.v, 64.0, k, l).unwrap(), Corridor::Index(0));
        assert!(corridor_index(b, c.r, 1e-4, 64.0, k, l).is_err());
        assert_eq!(corridor_index(b, c.r + 0.5, c.v, 64.0, k, l).unwrap(), Corridor::Index(3));
    }

    #[test]
    fn hessian_small_tau_limit() {
        let g = HTypeGroup::heisenberg(1).unwrap();
        let chk = hessian_determinant_check(&g, &[0.0], 1.0, &[0.3, 0.1], &[0.3, 1.1]).unwrap();
        assert!((chk.closed_form - 128.0).abs() < 1e-12);
        assert!(chk.rel_gap < 1e-12, "{chk:?}");
        let g = HTypeGroup::heisenberg(1).unwrap();
        let j = crate::group::canonical_symplectic(2);
        let s = &j * -2.0;
        let id = DMatrix::<f64>::identity(2, 2);
        let m = (&id * 2.0 + &s) * (&id * 2.0 + &s).transpose();
        assert!((m - &id * 8.0).abs().max() < 1e-15);
        assert!(hessian_determinant_check(&g, &[3.0], 1.0, &[0.0, 0.0], &[1.0, 0.0]).is_err());
    }
}
