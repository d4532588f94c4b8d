//! Invariant checks on a model: scale-function identities, first-order and
//! fit conditions at the optimum, and shape properties of the value function.

use serde::Serialize;

use crate::error::Result;
use crate::model::VariationClass;
use crate::par::Execution;
use crate::policy::{self, SolveOptions, CORNER_H_TOL};
use crate::scale::ScaleBasis;
use crate::valuation::{self, benchmark, default_grid, optimal_curve};

pub const LAPLACE_TOL: f64 = 1e-6;
pub const BOUNDARY_TOL: f64 = 1e-9;
pub const SLOPE_TOL: f64 = 1e-6;
pub const FOC_TOL: f64 = 1e-8;
pub const FIT_TOL: f64 = 1e-7;
pub const GAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    /// The measured quantity the verdict is based on.
    pub value: f64,
}

fn check(name: &'static str, pass: bool, value: f64) -> Check {
    Check { name, pass, value }
}

/// Runs every check; numerical failures inside a check propagate as errors.
pub fn run_checks(basis: &ScaleBasis, beta: f64, exec: Execution) -> Result<Vec<Check>> {
    let model = basis.model();
    let mut out = Vec::new();

    let phi = basis.phi_q();
    let worst = (1..=5)
        .map(|k| basis.laplace_check(phi + k as f64))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.push(check("laplace_identity", worst < LAPLACE_TOL, worst));

    let (w0, wp0) = (basis.w(0.0)?, basis.w_prime(0.0)?);
    let (w0_expected, wp0_expected) = match model.variation_class() {
        VariationClass::UnboundedVariation => (0.0, 2.0 / (model.sigma() * model.sigma())),
        VariationClass::BoundedVariation => {
            let d = model.drift_d();
            (1.0 / d, (model.q() + model.jump_intensity()) / (d * d))
        }
    };
    out.push(check("w_at_zero", (w0 - w0_expected).abs() <= BOUNDARY_TOL, w0));
    let rel = ((wp0 - wp0_expected) / wp0_expected).abs();
    out.push(check("w_prime_at_zero", rel <= SLOPE_TOL, wp0));

    let rep = policy::solve(basis, beta, &SolveOptions { execution: exec, ..Default::default() })?;
    out.push(check("g_condition", rep.g_residual.abs() <= FOC_TOL, rep.g_residual));
    let h_ok = if rep.corner { rep.h_value >= -CORNER_H_TOL } else { rep.h_value.abs() <= FOC_TOL };
    out.push(check("h_condition", h_ok, rep.h_value));
    if basis.mu() <= 0.0 {
        out.push(check("zero_reset_when_mu_nonpositive", rep.policy.c1 == 0.0, rep.policy.c1));
    }

    let (c1, c2) = (rep.policy.c1, rep.policy.c2);
    let slope_c2 = valuation::optimal_value_deriv(basis, &rep, c2)?;
    let fit_c2 = match model.variation_class() {
        VariationClass::UnboundedVariation => (slope_c2 - 1.0).abs() <= FIT_TOL,
        VariationClass::BoundedVariation => {
            let expected = 1.0 - rep.gamma * basis.q() * basis.w(0.0)?;
            (slope_c2 - expected).abs() <= FIT_TOL && slope_c2 < 1.0
        }
    };
    out.push(check("fit_at_trigger", fit_c2, slope_c2));
    if c1 > 0.0 {
        let slope_c1 = valuation::optimal_value_deriv(basis, &rep, c1)?;
        out.push(check("fit_at_reset", (slope_c1 - 1.0).abs() <= FIT_TOL, slope_c1));
    } else {
        let slope_0 = valuation::optimal_value_deriv(basis, &rep, 0.0)?;
        out.push(check("slope_at_zero_reset", slope_0 <= 1.0 + FIT_TOL, slope_0));
    }

    let curve = optimal_curve(basis, &rep, &default_grid(&rep), exec)?;
    let misplaced = curve
        .xs
        .iter()
        .zip(&curve.dvs)
        .filter(|(&x, _)| x > 0.0 && x != c2)
        .filter(|(&x, &dv)| (dv < 1.0) != (x > c1 && x < c2))
        .count();
    out.push(check("slope_window", misplaced == 0, misplaced as f64));

    let mut worst_gap = f64::INFINITY;
    for i in 0..curve.xs.len() {
        for j in 0..i {
            let slack = curve.vs[i] - curve.vs[j] - (curve.xs[i] - curve.xs[j] - beta);
            worst_gap = worst_gap.min(slack);
        }
    }
    out.push(check("dominance_gap", worst_gap >= -GAP_TOL, worst_gap));

    let bench = benchmark(basis)?;
    let mut excess = f64::NEG_INFINITY;
    for (&x, &v) in curve.xs.iter().zip(&curve.vs) {
        excess = excess.max(v - bench.value(x)?);
    }
    out.push(check("below_zero_cost_benchmark", excess <= GAP_TOL, excess));
    Ok(out)
}
