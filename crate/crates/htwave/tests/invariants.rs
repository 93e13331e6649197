//! Property-based checks of the structural invariants: group law, cut-off partitions,
//! the Bessel ODE, the phase function `tau cot tau` and the mixed-Hessian identity.

use std::f64::consts::PI;

use htwave::group::{dilate, koranyi_norm, GroupElement};
use htwave::phase::{curve, g_cot, hessian_closed_form, hessian_determinant_check, HESSIAN_TAU_MAX};
use htwave::special::bessel::{bessel_script, order};
use htwave::special::cutoff::{eta, eta0, eta_sum, zeta};
use htwave::HTypeGroup;
use proptest::prelude::*;

/// Sharp constant of `|v''| <= C (t^-2 |sin 2t| + (1 + t)^-3)`, attained at `t = pi`.
const V_PP_CONSTANT: f64 = 6.0 * (1.0 + PI) * (1.0 + PI) * (1.0 + PI) / (PI * PI * PI);

#[test]
fn v_second_derivative_constant_is_attained_at_pi() {
    let d = curve(PI * (1.0 + 1e-9)).unwrap().derivs.unwrap();
    let vb = (2.0 * PI).sin().abs() / (PI * PI) + (1.0 + PI).powi(-3);
    assert!((d.vpp / vb / V_PP_CONSTANT - 1.0).abs() < 1e-6, "{}", d.vpp / vb);
    assert!(V_PP_CONSTANT > 13.0 && V_PP_CONSTANT < 14.0);
}

fn groups() -> [HTypeGroup; 2] {
    [HTypeGroup::heisenberg(1).unwrap(), HTypeGroup::quaternionic()]
}

fn element(g: &HTypeGroup, raw: &[f64]) -> GroupElement {
    GroupElement::new(raw[..g.d1()].to_vec(), raw[g.d1()..g.d1() + g.d2()].to_vec())
}

fn coords() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 7)
}

fn max_abs_diff(a: &GroupElement, b: &GroupElement) -> f64 {
    a.x.iter().zip(&b.x).chain(a.u.iter().zip(&b.u)).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn j_mu_squares_to_minus_identity(dir in prop::collection::vec(-1.0..1.0f64, 3)) {
        for g in groups() {
            let mu = &dir[..g.d2()];
            let n = mu.iter().map(|a| a * a).sum::<f64>().sqrt();
            prop_assume!(n > 1e-3);
            let unit: Vec<f64> = mu.iter().map(|a| a / n).collect();
            let j = g.build_jmu(&unit).unwrap();
            let defect = (&j * &j + nalgebra::DMatrix::identity(g.d1(), g.d1())).abs().max();
            prop_assert!(defect <= 1e-12, "{defect}");
        }
    }

    #[test]
    fn multiplication_is_associative(a in coords(), b in coords(), c in coords()) {
        for g in groups() {
            let (p, q, r) = (element(&g, &a), element(&g, &b), element(&g, &c));
            let left = g.multiply(&g.multiply(&p, &q).unwrap(), &r).unwrap();
            let right = g.multiply(&p, &g.multiply(&q, &r).unwrap()).unwrap();
            prop_assert!(max_abs_diff(&left, &right) <= 1e-13 * 64.0);
        }
    }

    #[test]
    fn koranyi_norm_is_homogeneous(a in coords(), ri in 0usize..4) {
        let r = [0.5, 1.0, 2.0, 10.0][ri];
        for g in groups() {
            let p = element(&g, &a);
            let lhs = koranyi_norm(&dilate(&p, r).unwrap());
            let rhs = r * koranyi_norm(&p);
            prop_assert!((lhs - rhs).abs() <= 1e-13 * rhs.max(1e-300));
        }
    }

    #[test]
    fn isotropic_distance_is_left_invariant(a in coords(), b in coords(), c in coords()) {
        for g in groups() {
            let (p, q, h) = (element(&g, &a), element(&g, &b), element(&g, &c));
            let d0 = g.isotropic_distance(&p, &q).unwrap();
            let d1 = g.isotropic_distance(&g.multiply(&h, &p).unwrap(), &g.multiply(&h, &q).unwrap()).unwrap();
            prop_assert!((d0 - d1).abs() <= 1e-12 * d0.max(1.0), "{d0} vs {d1}");
        }
    }

    #[test]
    fn cutoffs_form_partitions_of_unity(t in -40.0..40.0f64, s in 1e-3..1e3f64, l in 1u32..12) {
        let sum_eta: f64 = (-20..=20).map(|k| eta0(t - k as f64 * PI)).sum();
        prop_assert!((sum_eta - 1.0).abs() <= 1e-12);
        // Dyadic zeta pieces: zeta_0 + sum_{j >= 1} zeta_j = 1 on (0, 2^30).
        let sum_zeta: f64 = (0..=30).map(|j| zeta(j, s)).sum();
        prop_assert!((sum_zeta - 1.0).abs() <= 1e-12);
        // The l-sum telescopes.
        let u = (t / 40.0) * 2.0;
        let partial: f64 = (1..=l).map(|i| eta(i, u)).sum();
        prop_assert!((partial - eta_sum(l, u)).abs() <= 1e-12);
        prop_assert!((eta_sum(l, u) + eta0(2f64.powi(l as i32) * u) - eta0(u)).abs() <= 1e-12);
    }

    #[test]
    fn bessel_script_solves_its_ode(sigma in 0.1..100.0f64, d2 in 1usize..5) {
        // f = sigma^-nu J_nu(sigma) solves f'' + (2 nu + 1) f' / sigma + f = 0.
        let nu = order(d2);
        let f = |x: f64| bessel_script(d2, x).unwrap();
        let h = 1e-3 * sigma.min(1.0).max(0.05);
        let f1 = (-f(sigma + 2.0 * h) + 8.0 * f(sigma + h) - 8.0 * f(sigma - h) + f(sigma - 2.0 * h)) / (12.0 * h);
        let f2 = (-f(sigma + 2.0 * h) + 16.0 * f(sigma + h) - 30.0 * f(sigma) + 16.0 * f(sigma - h) - f(sigma - 2.0 * h))
            / (12.0 * h * h);
        let f0 = f(sigma);
        let residual = f2 + (2.0 * nu + 1.0) * f1 / sigma + f0;
        let scale = f0.abs().max(f1.abs()).max(f2.abs()).max(sigma.powf(-nu - 0.5));
        prop_assert!(residual.abs() <= 1e-8 * scale.max(1.0), "residual {residual:e} scale {scale:e}");
    }

    #[test]
    fn g_minus_tau_g_prime_bounds(tau in -3.1..3.1f64) {
        // g - tau g' = (tau / sin tau)^2: at least 1 on (-pi, pi), at most 9 pi^2 / 8 on the cone.
        let d = g_cot(tau).unwrap();
        let q = d.g - tau * d.g1;
        let exact = if tau == 0.0 { 1.0 } else { (tau / tau.sin()).powi(2) };
        prop_assert!((q - exact).abs() <= 1e-12 * exact, "{q} vs {exact}");
        prop_assert!(q >= 1.0 - 1e-12, "{q}");
        if tau.abs() <= HESSIAN_TAU_MAX {
            prop_assert!(q <= 9.0 * PI * PI / 8.0 * (1.0 + 1e-12), "{q}");
        }
    }

    #[test]
    fn curve_second_derivatives_are_bounded(t in 0.05..60.0f64) {
        prop_assume!((t - (t / PI).round() * PI).abs() > 1e-6);
        let d = curve(t).unwrap().derivs.unwrap();
        let rb = t.sin().abs() / t + (1.0 + t).powi(-2);
        let vb = (2.0 * t).sin().abs() / (t * t) + (1.0 + t).powi(-3);
        prop_assert!(d.rpp.abs() <= 10.0 * rb, "r'' = {} bound {}", d.rpp, rb);
        // At t = pi, v'' = 6 / pi^3 while the bound is (1 + pi)^-3, so v'' needs the larger constant.
        prop_assert!(d.vpp.abs() <= V_PP_CONSTANT * vb, "v'' = {} bound {}", d.vpp, vb);
    }

    #[test]
    fn hessian_identity_on_the_cone(
        sigma in 0.5..2.0f64,
        tau in 0.0..HESSIAN_TAU_MAX,
        dir in prop::collection::vec(-1.0..1.0f64, 3),
        xy in prop::collection::vec(-1.0..1.0f64, 8),
    ) {
        for g in groups() {
            let (d1, d2) = (g.d1(), g.d2());
            let n = dir[..d2].iter().map(|a| a * a).sum::<f64>().sqrt();
            prop_assume!(n > 1e-3);
            let omega: Vec<f64> = dir[..d2].iter().map(|a| a / n * tau * sigma).collect();
            let (x, y) = (&xy[..d1], &xy[4..4 + d1]);
            let dist: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            prop_assume!(dist > 1e-3);
            let c = hessian_determinant_check(&g, &omega, sigma, x, y).unwrap();
            prop_assert!(c.rel_gap <= 1e-8, "{}", c.rel_gap);
            // D / sigma^{d1-1} between 2^{d1+4d2+1} and that times (tau / sin tau)^{d1+2} at 3 pi / 4.
            let ratio = hessian_closed_form(d1, d2, sigma, tau, 1.0) / sigma.powi(d1 as i32 - 1);
            let lo = 2f64.powi((d1 + 4 * d2 + 1) as i32);
            let hi = lo * (HESSIAN_TAU_MAX / HESSIAN_TAU_MAX.sin()).powi(d1 as i32 + 2);
            prop_assert!(ratio >= lo * (1.0 - 1e-12) && ratio <= hi * (1.0 + 1e-12), "{ratio} not in [{lo}, {hi}]");
        }
    }
}
