//! The twelve acceptance criteria as library functions, shared by the `acceptance`
//! test target and the `wave checks` command.
//!
//! Every criterion returns a [`CheckReport`] with a pass/fail flag and the measured
//! values. Randomized criteria (2, 5 and 11) draw from a ChaCha8 stream seeded with
//! `seed + n`, so a fixed seed reproduces every number.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::fit::fit_power_law;
use crate::group::validate_htype;
use crate::multiplier::{condition_value, constant_multiplier, sobolev_test_multiplier, MultiplierOptions, Verdict};
use crate::phase::{big_phi, curve, g_cot, hessian_closed_form, hessian_determinant_check, mixed_hessian, phi, psi};
use crate::spectral::schrodinger::{gamma_fft_check, schrodinger_evolve, HermiteExpansion};
use crate::spectral::{plancherel_check, Axis, GridFunction};
use crate::special::cutoff::standard_bump;
use crate::subordination::{reconstruct_multiplier, SubordinationOptions};
use crate::wave::{
    assemble_k0, assemble_kk_band, assemble_kkl, band_depth, fit_tail_decay, l1_norm, singular_curve_distance, split_ab,
    tail_mass, KernelOptions, TailOptions, WaveContext,
};
use crate::{Complex64, Error, HTypeGroup};

/// Outcome of one criterion: whether it holds and the measured values.
struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn(u64) -> Result<Outcome, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// 1. H-type identity.
fn htype_identity(_seed: u64) -> Result<Outcome, String> {
    let mut worst: f64 = 0.0;
    for g in [HTypeGroup::heisenberg(1).map_err(err)?, HTypeGroup::quaternionic()] {
        let rep = validate_htype(g.structure_matrices()).map_err(err)?;
        worst = worst.max(rep.max_violation());
    }
    Ok(Outcome { pass: worst <= 1e-12, detail: format!("max violation {worst:.2e} (bar 1e-12)") })
}

// 2. Twisted convolution with gamma_t^mu against exact Hermite-block evolution.
fn schrodinger_oracle(seed: u64) -> Result<Outcome, String> {
    let g = HTypeGroup::heisenberg(1).map_err(err)?;
    let mu = [1.0];
    let times = [0.13, 0.37];
    let degree = 8;
    let len = (degree + 1) * (degree + 2) / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let coeffs: Vec<Complex64> =
            (0..len).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let e = HermiteExpansion::new(&g, &mu, degree, coeffs).map_err(err)?;
        let ax = e.suggested_grid(&g, &mu, &times).map_err(err)?;
        let f = e.sample(&[ax, ax]).map_err(err)?;
        for &t in &times {
            let num = schrodinger_evolve(&g, &f, t, &mu).map_err(err)?;
            let exact = e.evolve(t).sample(&[ax, ax]).map_err(err)?;
            worst = worst.max(num.l2_distance(&exact).map_err(err)? / exact.l2_norm());
        }
    }
    Ok(Outcome { pass: worst <= 1e-6, detail: format!("max relative L2 gap {worst:.2e} over 20 states x 2 times (bar 1e-6)") })
}

// 3. FFT of sampled gamma_t^mu against its closed-form transform.
fn fourier_pair(_seed: u64) -> Result<Outcome, String> {
    let g = HTypeGroup::heisenberg(1).map_err(err)?;
    let times = [0.03, 0.07, 0.11, 0.13, 0.19, 0.29, 0.37, 0.41, 0.61, 0.83];
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for t in times {
        let c = gamma_fft_check(&g, t, &[1.0]).map_err(err)?;
        worst = worst.max(c.max_rel_err);
        compared += c.compared;
    }
    Ok(Outcome {
        pass: worst <= 1e-6 && compared > 0,
        detail: format!("max pointwise relative error {worst:.2e} over {compared} frequencies at 10 times (bar 1e-6)"),
    })
}

// 4. chi_1 (m_lambda + rho~_lambda) against g(sqrt x) e^{i lambda sqrt x}.
fn subordination(_seed: u64) -> Result<Outcome, String> {
    let xs: Vec<f64> = (0..1000).map(|i| 2f64.powi(-9) + i as f64 * (8.0 - 2f64.powi(-9)) / 999.0).collect();
    let opts = SubordinationOptions::default();
    let e64 = reconstruct_multiplier(&standard_bump, 64.0, &xs, &opts).map_err(err)?;
    let e256 = reconstruct_multiplier(&standard_bump, 256.0, &xs, &opts).map_err(err)?;
    Ok(Outcome {
        pass: e64 <= 1e-3 && e256 <= 2e-4,
        detail: format!("max abs error {e64:.2e} at lambda=64 (bar 1e-3), {e256:.2e} at lambda=256 (bar 2e-4)"),
    })
}

// 5. Mixed-Hessian determinant identity on the cone and its tau -> 0 limit.
fn hessian_identity(seed: u64) -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(5));
    let mut worst: f64 = 0.0;
    let mut worst_limit: f64 = 0.0;
    for g in [HTypeGroup::heisenberg(1).map_err(err)?, HTypeGroup::quaternionic()] {
        let (d1, d2) = (g.d1(), g.d2());
        for _ in 0..100 {
            let sigma = rng.random_range(0.5..2.0);
            let tau = rng.random_range(0.0..(3.0 * PI / 4.0));
            let dir: Vec<f64> = (0..d2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let nd = dir.iter().map(|a| a * a).sum::<f64>().sqrt();
            let omega: Vec<f64> = dir.iter().map(|a| a / nd * tau * sigma).collect();
            let x: Vec<f64> = (0..d1).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..d1).map(|_| rng.random_range(-1.0..1.0)).collect();
            let c = hessian_determinant_check(&g, &omega, sigma, &x, &y).map_err(err)?;
            worst = worst.max(c.rel_gap);
        }
        for sigma in [0.5, 1.0, 1.7] {
            let x: Vec<f64> = (0..d1).map(|i| 0.3 * i as f64 + 0.1).collect();
            let y = vec![0.0; d1];
            let dist2: f64 = x.iter().map(|a| a * a).sum();
            let det = mixed_hessian(&g, &vec![0.0; d2], sigma, &x, &y).map_err(err)?.determinant() / dist2;
            let expect = 2f64.powi((d1 + 4 * d2 + 1) as i32) * sigma.powi(d1 as i32 - 1);
            let closed = hessian_closed_form(d1, d2, sigma, 0.0, 1.0);
            worst_limit = worst_limit.max(((det - expect) / expect).abs()).max(((closed - expect) / expect).abs());
        }
    }
    Ok(Outcome {
        pass: worst <= 1e-8 && worst_limit <= 1e-8,
        detail: format!("max relative gap {worst:.2e} on 200 cone samples, tau->0 limit gap {worst_limit:.2e} (bar 1e-8)"),
    })
}

// 6. L1 scaling laws at d = 3.
fn scaling_laws(_seed: u64) -> Result<Outcome, String> {
    let opts = KernelOptions::default();
    let lambdas = [32.0, 64.0, 128.0, 256.0];
    let mut k0 = Vec::new();
    let mut k21 = Vec::new();
    for &lam in &lambdas {
        let ctx = WaveContext::new(2, 1, lam, &opts).map_err(err)?;
        k0.push(l1_norm(&assemble_k0(&ctx, &opts).map_err(err)?));
        k21.push(l1_norm(&assemble_kkl(&ctx, 2, 1, &opts).map_err(err)?));
    }
    let lam_slope = fit_power_law(&lambdas, &k0).map_err(err)?.slope;
    let lam_slope_k = fit_power_law(&lambdas, &k21).map_err(err)?.slope;

    let ctx = WaveContext::new(2, 1, 256.0, &opts).map_err(err)?;
    let ks = [2u64, 4, 8, 16];
    let mut kn = Vec::new();
    for &k in &ks {
        kn.push(l1_norm(&assemble_kkl(&ctx, k, 1, &opts).map_err(err)?));
    }
    let kx: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let k_slope = fit_power_law(&kx, &kn).map_err(err)?.slope;

    let ls = [1u32, 2, 3, 4, 5];
    let mut ln = Vec::new();
    for &l in &ls {
        ln.push(l1_norm(&assemble_kkl(&ctx, 1, l, &opts).map_err(err)?));
    }
    let lx: Vec<f64> = ls.iter().map(|&l| 2f64.powi(l as i32)).collect();
    let l_slope = fit_power_law(&lx, &ln).map_err(err)?.slope;

    let pass = (lam_slope - 1.0).abs() <= 0.15 && (k_slope + 1.5).abs() <= 0.2 && (l_slope + 1.5).abs() <= 0.25;
    Ok(Outcome {
        pass,
        detail: format!(
            "lambda-slope {lam_slope:.3} for K^0 (1.0 +- 0.15; K^(2,1) gives {lam_slope_k:.3}), \
             k-slope {k_slope:.3} (-1.5 +- 0.2), l-slope {l_slope:.3} (-1.5 +- 0.25)"
        ),
    })
}

// 7. ||B^{k,l}||_1 <= 10 (2^l k)^{-1} lambda^{-1/2}.
fn b_smallness(_seed: u64) -> Result<Outcome, String> {
    let opts = KernelOptions::default();
    let mut worst: f64 = 0.0;
    for lam in [64.0, 128.0] {
        let ctx = WaveContext::new(2, 1, lam, &opts).map_err(err)?;
        let k = 4u64;
        for l in 1..=3u32 {
            let s = split_ab(&ctx, k, l, 10.0, &opts).map_err(err)?;
            let bound = (2f64.powi(l as i32) * k as f64).recip() * lam.powf(-0.5);
            worst = worst.max(l1_norm(&s.b) / bound);
        }
    }
    Ok(Outcome { pass: worst <= 10.0, detail: format!("max ||B||_1 / ((2^l k)^-1 lambda^-1/2) = {worst:.3} (bar 10)") })
}

// 8. The maximum of |K^k| sits on the singular curve.
fn singular_support(_seed: u64) -> Result<Outcome, String> {
    let opts = KernelOptions::default();
    let ctx = WaveContext::new(2, 1, 128.0, &opts).map_err(err)?;
    let field = assemble_kk_band(&ctx, 4, band_depth(128.0, 4), &opts).map_err(err)?;
    let dist = singular_curve_distance(&field).map_err(err)?;
    Ok(Outcome { pass: dist <= 2.0, detail: format!("argmax of the l = 1..{} band sum at {dist:.2} cells from the curve (bar 2)", band_depth(128.0, 4)) })
}

// 9. Tail mass outside the ball of radius 10.
fn tail_decay(_seed: u64) -> Result<Outcome, String> {
    let opts = TailOptions::default();
    let reports: Vec<_> = [8.0, 16.0, 32.0, 64.0].iter().map(|&l| tail_mass(l, &[10.0], &opts)).collect::<Result<_, _>>().map_err(err)?;
    let ratio64 = reports[3].ratios()[0];
    let (fit, used) = fit_tail_decay(&reports, 0, 100.0).map_err(err)?;
    Ok(Outcome {
        pass: ratio64 <= 1e-6 && fit.slope <= -2.0,
        detail: format!(
            "tail/total at lambda=64 {ratio64:.2e} (bar 1e-6), lambda-decay exponent {:.2} over lambda {used:?} (bar -2)",
            fit.slope
        ),
    })
}

fn gaussian(nx: usize, hx: f64, nu: usize, hu: f64) -> Result<GridFunction, String> {
    let ax = Axis::centered(nx, hx).map_err(err)?;
    let au = Axis::centered(nu, hu).map_err(err)?;
    GridFunction::sample(vec![ax, ax], vec![au], |x: &[f64], u: &[f64]| {
        Complex64::new((-(x[0] * x[0] + x[1] * x[1]) / 2.0 - u[0] * u[0] / 2.0).exp(), 0.0)
    })
    .map_err(err)
}

// 10. Plancherel identity for a Gaussian on H_1.
fn plancherel(_seed: u64) -> Result<Outcome, String> {
    let g = HTypeGroup::heisenberg(1).map_err(err)?;
    // Default resolution: step 1/2 on [-6, 6]^2 x [-8, 8]; refinement halves the steps.
    let coarse = plancherel_check(&g, &gaussian(24, 0.5, 32, 0.5)?).map_err(err)?;
    let fine = plancherel_check(&g, &gaussian(48, 0.25, 64, 0.25)?).map_err(err)?;
    Ok(Outcome {
        pass: coarse.gap <= 1e-4 && fine.gap <= coarse.gap / 2.0,
        detail: format!("gap {:.2e} at default resolution (bar 1e-4), {:.2e} after refinement", coarse.gap, fine.gap),
    })
}

/// Fourth-order centered difference.
fn d1<F: Fn(f64) -> Result<f64, String>>(f: F, t: f64, h: f64) -> Result<f64, String> {
    Ok((-f(t + 2.0 * h)? + 8.0 * f(t + h)? - 8.0 * f(t - h)? + f(t - 2.0 * h)?) / (12.0 * h))
}

// 11. Analytic derivatives against centered differences.
fn finite_differences(seed: u64) -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(11));
    let mut worst: f64 = 0.0;
    let mut record = |analytic: f64, fd: f64, value: f64| {
        let scale = analytic.abs().max(value.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max((analytic - fd).abs() / scale);
    };
    let mut points = 0;
    while points < 1000 {
        let t: f64 = rng.random_range(0.01..12.0);
        if (t - (t / PI).round() * PI).abs() < 0.2 {
            continue;
        }
        let r: f64 = rng.random_range(0.0..2.0);
        let v: f64 = rng.random_range(-3.0..3.0);
        let h = 1e-3;
        let gd = g_cot(t).map_err(err)?;
        record(gd.g1, d1(|s| Ok(g_cot(s).map_err(err)?.g), t, h)?, gd.g);
        record(gd.g2, d1(|s| Ok(g_cot(s).map_err(err)?.g1), t, h)?, gd.g1);
        record(gd.g1_over_tau, gd.g1 / t, gd.g1_over_tau);
        let p = psi(t, r).map_err(err)?;
        record(p.psi_t, d1(|s| Ok(psi(s, r).map_err(err)?.psi), t, h)?, p.psi);
        record(p.psi_tt, d1(|s| Ok(psi(s, r).map_err(err)?.psi_t), t, h)?, p.psi_t);
        let ph = phi(t, r, v).map_err(err)?;
        record(ph.phi_t, d1(|s| Ok(phi(s, r, v).map_err(err)?.phi), t, h)?, ph.phi);
        let c = curve(t).map_err(err)?;
        let dv = c.derivs.ok_or("curve derivatives missing at a regular point")?;
        record(dv.rp, d1(|s| Ok(curve(s).map_err(err)?.r), t, h)?, c.r);
        record(dv.vp, d1(|s| Ok(curve(s).map_err(err)?.v), t, h)?, c.v);
        let first = |s: f64| curve(s).map_err(err)?.derivs.ok_or_else(|| "corner".to_string());
        record(dv.rpp, d1(|s| Ok(first(s)?.rp), t, h)?, dv.rp);
        record(dv.vpp, d1(|s| Ok(first(s)?.vp), t, h)?, dv.vp);
        points += 1;
    }
    // Mixed Hessian of Phi: rows (x, u, omega, sigma), columns (y, v, omega, sigma).
    let mut worst_h: f64 = 0.0;
    for (gi, g) in [HTypeGroup::heisenberg(1).map_err(err)?, HTypeGroup::quaternionic()].iter().enumerate() {
        let (n1, n2) = (g.d1(), g.d2());
        let n = n1 + 2 * n2 + 1;
        // State layout: x | u | y | v | omega | sigma.
        let rows: Vec<usize> = (0..n1).chain(n1..n1 + n2).chain(2 * n1 + 2 * n2..2 * n1 + 3 * n2 + 1).collect();
        let cols: Vec<usize> = (n1 + n2..2 * n1 + n2).chain(2 * n1 + n2..2 * n1 + 2 * n2).chain(2 * n1 + 2 * n2..2 * n1 + 3 * n2 + 1).collect();
        let samples = if gi == 0 { 60 } else { 40 };
        for _ in 0..samples {
            let sigma = rng.random_range(0.5..2.0);
            let tau = rng.random_range(0.05..(3.0 * PI / 4.0));
            let dir: Vec<f64> = (0..n2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let nd = dir.iter().map(|a| a * a).sum::<f64>().sqrt();
            let mut state: Vec<f64> = (0..2 * n1 + 2 * n2).map(|_| rng.random_range(-1.0..1.0)).collect();
            state.extend(dir.iter().map(|a| a / nd * tau * sigma));
            state.push(sigma);
            let eval = |s: &[f64]| -> Result<f64, String> {
                big_phi(g, &s[..n1], &s[n1..n1 + n2], &s[n1 + n2..2 * n1 + n2], &s[2 * n1 + n2..2 * n1 + 2 * n2], &s[2 * n1 + 2 * n2..2 * n1 + 3 * n2], s[2 * n1 + 3 * n2])
                    .map_err(err)
            };
            let hm = mixed_hessian(g, &state[2 * n1 + 2 * n2..2 * n1 + 3 * n2], sigma, &state[..n1], &state[n1 + n2..2 * n1 + n2]).map_err(err)?;
            let scale = hm.abs().max();
            for i in 0..n {
                for j in 0..n {
                    let mixed = |h: f64| -> Result<f64, String> {
                        let at = |si: f64, sj: f64| -> Result<f64, String> {
                            let mut s = state.clone();
                            s[rows[i]] += si * h;
                            s[cols[j]] += sj * h;
                            eval(&s)
                        };
                        Ok((at(1.0, 1.0)? - at(1.0, -1.0)? - at(-1.0, 1.0)? + at(-1.0, -1.0)?) / (4.0 * h * h))
                    };
                    // Richardson extrapolation of the second-order stencil.
                    let fd = (4.0 * mixed(1e-3)? - mixed(2e-3)?) / 3.0;
                    worst_h = worst_h.max((fd - hm[(i, j)]).abs() / scale);
                }
            }
        }
    }
    Ok(Outcome {
        pass: worst <= 1e-6 && worst_h <= 1e-6,
        detail: format!("max relative deviation {worst:.2e} on 1000 points (g, psi, phi, curve), {worst_h:.2e} on 100 mixed Hessians (bar 1e-6)"),
    })
}

// 12. Multiplier condition.
fn multiplier_condition(_seed: u64) -> Result<Outcome, String> {
    let opts = MultiplierOptions::default();
    let d = opts.d;
    let beta = (d + 1.0) / 2.0;
    let sob = condition_value(&sobolev_test_multiplier(beta), &opts).map_err(err)?;
    let expo = sob.exponent.ok_or("no decay exponent for the Sobolev multiplier")?;
    let one = condition_value(&constant_multiplier, &opts).map_err(err)?;
    let target = d / 2.0 - beta;
    Ok(Outcome {
        pass: (expo - target).abs() <= 0.2 && one.verdict == Verdict::Holds,
        detail: format!("Sobolev exponent {expo:.3} (target {target} +- 0.2), m = 1 verdict {:?}", one.verdict),
    })
}


/// Result of one criterion.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub number: u32,
    pub name: &'static str,
    pub pass: bool,
    /// Measured values and bars, human-readable.
    pub detail: String,
    pub seconds: f64,
    /// Whether the criterion belongs to the quick subset.
    pub quick: bool,
}

/// `(number, name, in the quick subset, check)`.
const CRITERIA: [(u32, &str, bool, Check); 12] = [
    (1, "H-type identity", true, htype_identity),
    (2, "Schrodinger oracle", true, schrodinger_oracle),
    (3, "Fourier pair", true, fourier_pair),
    (4, "subordination reconstruction", true, subordination),
    (5, "Hessian determinant", true, hessian_identity),
    (6, "scaling laws", false, scaling_laws),
    (7, "B-piece smallness", false, b_smallness),
    (8, "singular-support localization", false, singular_support),
    (9, "tail decay", false, tail_decay),
    (10, "Plancherel", true, plancherel),
    (11, "finite differences", true, finite_differences),
    (12, "multiplier condition", true, multiplier_condition),
];

/// Number of criteria.
pub const CRITERION_COUNT: u32 = CRITERIA.len() as u32;

/// The criteria of the quick subset (each well under a minute; together under two).
pub fn quick_subset() -> Vec<u32> {
    CRITERIA.iter().filter(|c| c.2).map(|c| c.0).collect()
}

/// Name of criterion `n` (1-based).
pub fn criterion_name(n: u32) -> crate::Result<&'static str> {
    lookup(n).map(|c| c.1)
}

fn lookup(n: u32) -> crate::Result<&'static (u32, &'static str, bool, Check)> {
    CRITERIA
        .iter()
        .find(|c| c.0 == n)
        .ok_or_else(|| Error::InvalidArgument(format!("criterion {n} does not exist (1..={CRITERION_COUNT})")))
}

/// Runs criterion `n`. A numerical error or a panic inside the criterion is reported as a
/// failure with the message in `detail`.
pub fn run_criterion(n: u32, seed: u64) -> crate::Result<CheckReport> {
    let &(number, name, quick, check) = lookup(n)?;
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(|| check(seed))).unwrap_or_else(|_| Err("panicked".into()));
    let seconds = start.elapsed().as_secs_f64();
    let (pass, detail) = match outcome {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    Ok(CheckReport { number, name, pass, detail, seconds, quick })
}

/// Runs every criterion (or the quick subset) in order.
pub fn run_checks(quick: bool, seed: u64) -> Vec<CheckReport> {
    CRITERIA
        .iter()
        .filter(|c| !quick || c.2)
        .map(|c| run_criterion(c.0, seed).expect("criterion numbers come from the table"))
        .collect()
}

impl CheckReport {
    /// One line: `criterion  n PASS|FAIL name: detail [t s]`.
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {}: {} [{:.1} s]",
            self.number,
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_numbered_in_order() {
        for (i, c) in CRITERIA.iter().enumerate() {
            assert_eq!(c.0, i as u32 + 1);
        }
        assert!(run_criterion(0, 0).is_err() && run_criterion(13, 0).is_err());
        assert_eq!(quick_subset(), vec![1, 2, 3, 4, 5, 10, 11, 12]);
    }

    #[test]
    fn fast_criteria_pass() {
        for n in [1, 5] {
            let r = run_criterion(n, 0).unwrap();
            assert!(r.pass, "{}", r.line());
        }
    }
}
