mod common;

use common::*;
use dualdiv::policy::{self, vbar};
use dualdiv::valuation::{self, value_at};
use dualdiv::{Policy, SolveOptions};
use num_complex::Complex64;
use proptest::prelude::*;

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

#[test]
fn antiderivatives_match_simpson() {
    for m in [weibull_model(2.0, 0.0, 3.0), weibull_model(2.0, 1.0, 1.0), exp_model()] {
        let b = basis(&m);
        for x in [0.5, 3.0, 12.0] {
            let wbar = simpson(|y| b.w(y).unwrap(), 0.0, x, 4000);
            assert!((b.wbar(x).unwrap() - wbar).abs() <= 1e-8 * wbar.max(1.0), "Wbar({x})");
            let zbar = simpson(|y| b.z(y).unwrap(), 0.0, x, 4000);
            assert!((b.zbar(x).unwrap() - zbar).abs() <= 1e-8 * zbar.max(1.0), "Zbar({x})");
        }
    }
}

#[test]
fn laplace_transform_matches_truncated_integral() {
    for m in [weibull_model(2.0, 0.0, 3.0), weibull_model(2.0, 1.0, 3.0)] {
        let b = basis(&m);
        for s in [b.phi_q() + 1.0, b.phi_q() + 3.0] {
            let lt = simpson(|x| (-s * x).exp() * b.w(x).unwrap(), 0.0, 60.0, 60_000);
            let psi = m.psi(Complex64::new(s, 0.0)).unwrap().re;
            let expected = 1.0 / (psi - m.q());
            assert!((lt - expected).abs() <= 1e-7 * expected, "s={s}: {lt} vs {expected}");
        }
    }
}

#[test]
fn derivative_matches_central_differences() {
    let b = basis(&weibull_model(2.0, 1.0, 3.0));
    for x in [0.3, 2.0, 9.0] {
        let h = 1e-5;
        let fd = (b.w(x + h).unwrap() - b.w(x - h).unwrap()) / (2.0 * h);
        assert!((b.w_prime(x).unwrap() - fd).abs() <= 1e-6 * fd.abs());
    }
}

#[test]
fn laplace_exponent_derivative_at_zero_is_mean_drift() {
    for m in [weibull_model(2.0, 0.0, 3.0), weibull_model(3.0, 1.0, 3.0), exp_model()] {
        let b = basis(&m);
        let h = 1e-6;
        let fd = (m.psi_real(h).unwrap() - m.psi_real(-h).unwrap()) / (2.0 * h);
        assert!((fd + b.mu()).abs() <= 1e-6, "{fd} vs {}", -b.mu());
    }
}

#[test]
fn exponential_model_scale_function_has_two_terms() {
    let b = basis(&exp_model());
    let (phi, neg) = exp_model_roots();
    // residues of 1 / (psi - q) with psi'(s) = 2 - 1 / (1 + s)^2
    let res = |r: f64| 1.0 / (2.0 - 1.0 / ((1.0 + r) * (1.0 + r)));
    for x in [0.0, 1.0, 5.0, 20.0] {
        let w = res(phi) * (phi * x).exp() + res(neg) * (neg * x).exp();
        assert!((b.w(x).unwrap() - w).abs() <= 1e-10 * w.max(1.0), "x={x}");
    }
}

#[test]
fn barrier_value_can_fall_below_trigger_when_overshoot_pays_more() {
    let b = basis(&weibull_model(2.0, 1.0, 3.0));
    let pol = Policy::new(0.0, 4.5).unwrap();
    let at_trigger = value_at(&b, 4.0, pol, 4.5).unwrap();
    assert!((at_trigger - 0.5).abs() < 1e-9);
    assert!(value_at(&b, 4.0, pol, 4.0).unwrap() > at_trigger);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn no_policy_beats_the_optimum(u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let b = basis(&weibull_model(2.0, 0.0, 3.0));
        let rep = policy::solve(&b, 4.0, &SolveOptions::default()).unwrap();
        let top = 3.0 * rep.policy.c2;
        let c2 = 1e-3 + v * top;
        let c1 = u * c2 * 0.999;
        let obj = vbar(&b, 4.0, c1, c2).unwrap() - c1;
        prop_assert!(obj <= rep.objective + 1e-9, "({c1}, {c2}) gives {obj} > {}", rep.objective);
    }

    #[test]
    fn optimal_value_increases_with_surplus(x in 0.0f64..40.0) {
        let b = basis(&weibull_model(2.0, 1.0, 3.0));
        let rep = policy::solve(&b, 4.0, &SolveOptions::default()).unwrap();
        prop_assert!(valuation::optimal_value_deriv(&b, &rep, x).unwrap() > 0.0);
    }

    #[test]
    fn optimal_value_respects_cost_gap(a in 0.0f64..40.0, d in 0.0f64..40.0) {
        let b = basis(&weibull_model(2.0, 0.0, 1.0));
        let rep = policy::solve(&b, 4.0, &SolveOptions::default()).unwrap();
        let (y, x) = (a, a + d);
        let vx = valuation::optimal_value_at(&b, &rep, x).unwrap();
        let vy = valuation::optimal_value_at(&b, &rep, y).unwrap();
        prop_assert!(vx - vy >= d - 4.0 - 1e-9);
    }
}
