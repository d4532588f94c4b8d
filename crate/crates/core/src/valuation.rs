//! Value functions of `(c1, c2)` policies, the optimal value function, and the
//! zero-cost barrier benchmark.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};
use crate::policy::{self, Policy, SolveOptions, SolveReport};
use crate::scale::ScaleBasis;

/// Points in the default value grid.
pub const DEFAULT_GRID_POINTS: usize = 400;

fn check_x(x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("surplus x = {x} must be finite and nonnegative")));
    }
    Ok(())
}

/// `v_{c1,c2}(x)` for an arbitrary admissible policy.
pub fn value_at(basis: &ScaleBasis, beta: f64, pol: Policy, x: f64) -> Result<f64> {
    check_x(x)?;
    let t = policy::terms(basis, beta, pol.c1, pol.c2)?;
    if x >= pol.c2 {
        return Ok(x - pol.c1 - beta + t.vbar);
    }
    let y = pol.c2 - x;
    let tail = t.gamma * basis.z_detrended(pol.c2) - basis.r_detrended(pol.c2);
    Ok(-basis.r_detrended(y) + t.gamma * basis.z_detrended(y) - tail * basis.w_ratio(y, pol.c2))
}

/// Derivative of [`value_at`] in `x`; equal to 1 above the trigger.
pub fn value_deriv_at(basis: &ScaleBasis, beta: f64, pol: Policy, x: f64) -> Result<f64> {
    check_x(x)?;
    let t = policy::terms(basis, beta, pol.c1, pol.c2)?;
    if x > pol.c2 {
        return Ok(1.0);
    }
    let y = pol.c2 - x;
    let tail = t.gamma * basis.z_detrended(pol.c2) - basis.r_detrended(pol.c2);
    Ok(basis.z_detrended(y)
        + basis.phi_q() * tail * basis.w_ratio(y, pol.c2)
        + t.g_scaled * basis.w_prime_detrended(y))
}

/// `v(x) = -R(c2* - x) + gamma Z(c2* - x)`, valid on all of `[0, inf)` because `G = 0`.
pub fn optimal_value_at(basis: &ScaleBasis, report: &SolveReport, x: f64) -> Result<f64> {
    check_x(x)?;
    let y = report.policy.c2 - x;
    Ok(-basis.r(y)? + report.gamma * basis.z(y)?)
}

/// `v'(x) = Z(c2* - x) - gamma q W(c2* - x)`; at `x = c2*` this is the left limit.
pub fn optimal_value_deriv(basis: &ScaleBasis, report: &SolveReport, x: f64) -> Result<f64> {
    check_x(x)?;
    if x > report.policy.c2 {
        return Ok(1.0);
    }
    let y = report.policy.c2 - x;
    Ok(basis.z(y)? - report.gamma * basis.q() * basis.w(y)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueCurve {
    pub xs: Vec<f64>,
    pub vs: Vec<f64>,
    pub dvs: Vec<f64>,
    pub policy: Policy,
    pub beta: f64,
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// 400 points on `[0, 1.5 c2*]`.
pub fn default_grid(report: &SolveReport) -> Vec<f64> {
    linspace(0.0, 1.5 * report.policy.c2, DEFAULT_GRID_POINTS)
}

pub fn optimal_curve(basis: &ScaleBasis, report: &SolveReport, xs: &[f64], exec: Execution) -> Result<ValueCurve> {
    let pairs = map_indexed(exec, xs.len(), |i| {
        Ok((
            optimal_value_at(basis, report, xs[i])?,
            optimal_value_deriv(basis, report, xs[i])?,
        ))
    });
    let pairs: Result<Vec<(f64, f64)>> = pairs.into_iter().collect();
    let (vs, dvs) = pairs?.into_iter().unzip();
    Ok(ValueCurve {
        xs: xs.to_vec(),
        vs,
        dvs,
        policy: report.policy,
        beta: report.beta,
    })
}

pub fn policy_curve(basis: &ScaleBasis, beta: f64, pol: Policy, xs: &[f64], exec: Execution) -> Result<ValueCurve> {
    let pairs = map_indexed(exec, xs.len(), |i| {
        Ok((
            value_at(basis, beta, pol, xs[i])?,
            value_deriv_at(basis, beta, pol, xs[i])?,
        ))
    });
    let pairs: Result<Vec<(f64, f64)>> = pairs.into_iter().collect();
    let (vs, dvs) = pairs?.into_iter().unzip();
    Ok(ValueCurve {
        xs: xs.to_vec(),
        vs,
        dvs,
        policy: pol,
        beta,
    })
}

/// Reflection barrier `a*` and value `vhat` of the problem without transaction costs.
#[derive(Debug, Clone)]
pub struct Benchmark<'a> {
    basis: &'a ScaleBasis,
    a_star: f64,
}

impl<'a> Benchmark<'a> {
    pub fn a_star(&self) -> f64 {
        self.a_star
    }

    /// `vhat(x) = mu/q - Zbar(a* - x)` if `mu > 0`, else `x`.
    pub fn value(&self, x: f64) -> Result<f64> {
        if self.basis.mu() <= 0.0 {
            return Ok(x);
        }
        Ok(self.basis.mu() / self.basis.q() - self.basis.zbar(self.a_star - x)?)
    }

    pub fn deriv(&self, x: f64) -> Result<f64> {
        if self.basis.mu() <= 0.0 {
            return Ok(1.0);
        }
        self.basis.z(self.a_star - x)
    }
}

/// Solves `Zbar(a*) = mu / q` by bisection (zero when `mu <= 0`).
pub fn benchmark(basis: &ScaleBasis) -> Result<Benchmark<'_>> {
    let mu = basis.mu();
    if mu <= 0.0 {
        return Ok(Benchmark { basis, a_star: 0.0 });
    }
    let target = mu / basis.q();
    let mut hi = 1.0;
    while basis.zbar(hi)? <= target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if basis.zbar(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Benchmark {
        basis,
        a_star: 0.5 * (lo + hi),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub report: SolveReport,
    pub curve: ValueCurve,
}

/// Solves for each cost in `betas` (positive, descending) and evaluates the
/// optimal value on `xs`.
pub fn beta_sweep(basis: &ScaleBasis, betas: &[f64], xs: &[f64], opts: &SolveOptions) -> Result<Vec<SweepRow>> {
    if betas.iter().any(|b| !(*b > 0.0)) {
        return Err(Error::Domain("every beta must be positive".into()));
    }
    if betas.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::Domain("betas must be sorted in descending order".into()));
    }
    betas
        .iter()
        .map(|&beta| {
            let report = policy::solve(basis, beta, opts)?;
            let curve = optimal_curve(basis, &report, xs, opts.execution)?;
            Ok(SweepRow { beta, report, curve })
        })
        .collect()
}
