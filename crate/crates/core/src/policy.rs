//! `(c1, c2)` impulse policies: the per-cycle value `vbar = f / g`, the
//! first-order functions `G` and `H`, and the search for the maximizer of
//! `vbar - c1`.
//!
//! A maximizer satisfies `G = 0` and either `H = 0` with `c1 > 0`, or
//! `c1 = 0` with `H >= 0`. The solver seeds a damped Newton iteration on
//! `(G, H)` from a coarse grid over the triangle `0 <= c1 < c2 <= C`, and
//! switches to a one-dimensional root solve of `G(0, .)` when the iterate is
//! pushed through `c1 = 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};
use crate::scale::ScaleBasis;

const MIN_DENOMINATOR: f64 = 1e-14;
/// Tolerance on `H(0, c2*)` when accepting a corner solution.
pub const CORNER_H_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Policy {
    pub c1: f64,
    pub c2: f64,
}

impl Policy {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1 >= 0.0) || !(c2 > c1) || !c2.is_finite() {
            return Err(Error::Domain(format!("need 0 <= c1 < c2 < inf (c1 = {c1}, c2 = {c2})")));
        }
        Ok(Self { c1, c2 })
    }
}

/// Every policy quantity at one `(c1, c2)`, sharing the scale evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyTerms {
    pub f: f64,
    pub g: f64,
    pub vbar: f64,
    pub gamma: f64,
    /// `G = gamma Z(c2) - R(c2)`.
    pub big_g: f64,
    /// `H = q (gamma W(c2 - c1) - Wbar(c2 - c1))`.
    pub big_h: f64,
    /// `G / W(c2)`, finite even where `G` overflows.
    pub g_scaled: f64,
}

impl PolicyTerms {
    pub fn objective(&self, c1: f64) -> f64 {
        self.vbar - c1
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("transaction cost beta = {beta} must be positive")));
    }
    Ok(())
}

/// Evaluates `f`, `g`, `vbar`, `gamma`, `G`, `H` at `(c1, c2)`.
pub fn terms(basis: &ScaleBasis, beta: f64, c1: f64, c2: f64) -> Result<PolicyTerms> {
    check_beta(beta)?;
    Policy::new(c1, c2)?;
    raw_terms(basis, beta, c1, c2)
}

fn raw_terms(basis: &ScaleBasis, beta: f64, c1: f64, c2: f64) -> Result<PolicyTerms> {
    let (q, phi) = (basis.q(), basis.phi_q());
    let d = c2 - c1;
    let ratio = basis.w_ratio(d, c2);
    let (zd, zc) = (basis.z_detrended(d), basis.z_detrended(c2));
    let (rd, rc) = (basis.r_detrended(d), basis.r_detrended(c2));
    let k = d - beta - basis.mu() / q;

    // the W-proportional parts cancel exactly between the two evaluation points
    let g = 1.0 - zd + zc * ratio;
    let f = -rd + k * zd - (k * zc - rc) * ratio;
    if !(g >= MIN_DENOMINATOR) {
        return Err(Error::DegenerateDenominator(g));
    }
    let vbar = f / g;
    let gamma = vbar + k;
    let tail = gamma * zc - rc;
    let g_scaled = (gamma - 1.0 / phi) * q / phi + tail * basis.w_recip(c2);
    let w_d = 1.0 / basis.w_recip(d);
    let big_g = g_scaled / basis.w_recip(c2);
    let big_h = q * ((gamma - 1.0 / phi) * w_d - basis.wbar_detrended(d));
    Ok(PolicyTerms { f, g, vbar, gamma, big_g, big_h, g_scaled })
}

pub fn f_val(basis: &ScaleBasis, beta: f64, c1: f64, c2: f64) -> Result<f64> {
    check_beta(beta)?;
    Policy::new(c1, c2)?;
    let d = c2 - c1;
    let k = d - beta - basis.mu() / basis.q();
    let ratio = basis.w_ratio(d, c2);
    let (zd, zc) = (basis.z_detrended(d), basis.z_detrended(c2));
    let (rd, rc) = (basis.r_detrended(d), basis.r_detrended(c2));
    Ok(-rd + k * zd - (k * zc - rc) * ratio)
}

pub fn g_val(basis: &ScaleBasis, c1: f64, c2: f64) -> Result<f64> {
    Policy::new(c1, c2)?;
    let d = c2 - c1;
    Ok(1.0 - basis.z_detrended(d) + basis.z_detrended(c2) * basis.w_ratio(d, c2))
}

/// `vbar_{c1,c2} = f / g`, the value of starting at `c1`.
pub fn vbar(basis: &ScaleBasis, beta: f64, c1: f64, c2: f64) -> Result<f64> {
    Ok(terms(basis, beta, c1, c2)?.vbar)
}

pub fn gamma_val(basis: &ScaleBasis, beta: f64, c1: f64, c2: f64) -> Result<f64> {
    Ok(terms(basis, beta, c1, c2)?.gamma)
}

/// `G(c1, c2)`; its zero in `c2` is the first-order condition for the trigger.
pub fn g_condition(basis: &ScaleBasis, beta: f64, c1: f64, c2: f64) -> Result<f64> {
    Ok(terms(basis, beta, c1, c2)?.big_g)
}

/// `H(c1, c2)`; its zero in `c1` is the first-order condition for the reset level.
pub fn h_condition(basis: &ScaleBasis, beta: f64, c1: f64, c2: f64) -> Result<f64> {
    Ok(terms(basis, beta, c1, c2)?.big_h)
}

/// Analytic partials `(d/dc1, d/dc2)` of `vbar - c1`.
///
/// At `c1 = 0` the first component is the right partial.
pub fn objective_grad(basis: &ScaleBasis, beta: f64, c1: f64, c2: f64) -> Result<(f64, f64)> {
    let t = terms(basis, beta, c1, c2)?;
    Ok(grad_from_terms(basis, &t, c1, c2))
}

fn grad_from_terms(basis: &ScaleBasis, t: &PolicyTerms, c1: f64, c2: f64) -> (f64, f64) {
    let (q, phi) = (basis.q(), basis.phi_q());
    let d = c2 - c1;
    let ratio = basis.w_ratio(d, c2);
    let wp_d = basis.w_prime_detrended(d);
    // W(c2) d/dc2 [W(c2 - c1) / W(c2)]
    let dratio = wp_d - ratio * basis.w_prime_detrended(c2);
    let d_c2 = -t.g_scaled / t.g * dratio;
    let tail = t.gamma * basis.z_detrended(c2) - basis.r_detrended(c2);
    let d_c1 = (q * basis.wbar_detrended(d) + t.g_scaled * wp_d + phi * tail * ratio) / t.g;
    (d_c1, d_c2)
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Points per side of the seeding grid.
    pub grid: usize,
    pub max_iter: usize,
    /// Re-solve from 16 spread starting points and require agreement.
    pub verify_uniqueness: bool,
    pub uniqueness_tol: f64,
    pub execution: Execution,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            grid: 64,
            max_iter: 200,
            verify_uniqueness: false,
            uniqueness_tol: 1e-6,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub policy: Policy,
    pub vbar: f64,
    pub objective: f64,
    pub gamma: f64,
    pub g_residual: f64,
    pub h_value: f64,
    pub corner: bool,
    pub beta: f64,
    pub iterations: usize,
    /// Upper edge `C` of the search box.
    pub ceiling: f64,
}

/// Objective `vbar - c1` on an `n x n` grid over `[0, C]^2`.
///
/// Row `i` has `c1 = i C / n`, column `j` has `c2 = (j + 1) C / n`; cells with
/// `c1 >= c2` are `None`.
pub fn objective_surface(
    basis: &ScaleBasis,
    beta: f64,
    ceiling: f64,
    n: usize,
    exec: Execution,
) -> Vec<(f64, f64, Option<f64>)> {
    let h = ceiling / n as f64;
    map_indexed(exec, n * n, |idx| {
        let (i, j) = (idx / n, idx % n);
        let (c1, c2) = (i as f64 * h, (j + 1) as f64 * h);
        let v = if c1 < c2 {
            raw_terms(basis, beta, c1, c2).ok().map(|t| t.vbar - c1)
        } else {
            None
        };
        (c1, c2, v)
    })
}

/// Doubles `C` from `10 (|mu|/q + beta + 1)` until `G > 0`, so that `vbar`
/// decreases in `c2`, along the top edge `c2 = C` for `c1` in `[0, C/2]`.
pub fn search_ceiling(basis: &ScaleBasis, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let mut c = 10.0 * (basis.mu().abs() / basis.q() + beta + 1.0);
    for _ in 0..40 {
        let descending = (0..=16).all(|k| {
            let c1 = 0.5 * c * k as f64 / 16.0;
            raw_terms(basis, beta, c1, c).map(|t| t.g_scaled > 0.0).unwrap_or(false)
        });
        if descending {
            return Ok(c);
        }
        c *= 2.0;
    }
    Err(Error::Bracket(format!("G(c1, C) still negative at C = {c}")))
}

struct Solver<'a> {
    basis: &'a ScaleBasis,
    beta: f64,
    ceiling: f64,
    max_iter: usize,
    iterations: usize,
}

enum Outcome {
    Interior(f64, f64),
    Corner(f64),
}

impl<'a> Solver<'a> {
    fn eval(&self, c1: f64, c2: f64) -> Result<PolicyTerms> {
        raw_terms(self.basis, self.beta, c1, c2)
    }

    fn residual(&self, t: &PolicyTerms) -> f64 {
        t.big_g.hypot(t.big_h)
    }

    /// Magnitude of the terms that cancel in `G(., c2)`.
    fn g_scale(&self, c2: f64) -> f64 {
        let b = self.basis;
        let phi = b.phi_q();
        1.0 + b.r_detrended(c2).abs() + b.q() / (phi * phi * b.w_recip(c2))
    }

    fn min_gap(&self) -> f64 {
        1e-9 * self.ceiling
    }

    /// Projected gradient ascent on `vbar - c1` with Armijo backtracking.
    fn ascend(&mut self, mut c1: f64, mut c2: f64, steps: usize, grad_tol: f64) -> Result<(f64, f64)> {
        let mut t = self.eval(c1, c2)?;
        for _ in 0..steps {
            self.iterations += 1;
            let (mut g1, g2) = grad_from_terms(self.basis, &t, c1, c2);
            if c1 <= 0.0 && g1 < 0.0 {
                g1 = 0.0;
            }
            let norm = g1.hypot(g2);
            if norm < grad_tol {
                break;
            }
            let obj = t.vbar - c1;
            let mut step = 0.1 * self.ceiling / norm;
            let mut moved = false;
            for _ in 0..60 {
                let n1 = (c1 + step * g1).max(0.0);
                let n2 = (c2 + step * g2).min(self.ceiling * 4.0);
                if n2 > n1 + self.min_gap() {
                    if let Ok(nt) = self.eval(n1, n2) {
                        let gain = (nt.vbar - n1) - obj;
                        let predicted = (n1 - c1) * g1 + (n2 - c2) * g2;
                        if gain >= 1e-4 * predicted && gain > 0.0 {
                            c1 = n1;
                            c2 = n2;
                            t = nt;
                            moved = true;
                            break;
                        }
                    }
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        Ok((c1, c2))
    }

    fn jacobian(&self, c1: f64, c2: f64) -> Result<[[f64; 2]; 2]> {
        let h = 1e-6 * c2.max(1.0);
        let (h1a, h1b) = if c1 >= h { (h, h) } else { (h, 0.0) };
        let p1 = self.eval(c1 + h1a, c2)?;
        let m1 = self.eval(c1 - h1b, c2)?;
        let h2b = h.min(0.5 * (c2 - c1));
        let p2 = self.eval(c1, c2 + h)?;
        let m2 = self.eval(c1, c2 - h2b)?;
        let s1 = h1a + h1b;
        let s2 = h + h2b;
        Ok([
            [(p1.big_g - m1.big_g) / s1, (p2.big_g - m2.big_g) / s2],
            [(p1.big_h - m1.big_h) / s1, (p2.big_h - m2.big_h) / s2],
        ])
    }

    /// Damped Newton on `(G, H) = 0`. Returns a corner outcome once the
    /// iterate is pushed below `c1 = 0` twice (unless `allow_corner` is off).
    fn newton(&mut self, mut c1: f64, mut c2: f64, allow_corner: bool) -> Result<Outcome> {
        let mut pushed_negative = 0;
        let mut t = self.eval(c1, c2)?;
        for _ in 0..self.max_iter {
            self.iterations += 1;
            let scale = self.g_scale(c2);
            if t.big_g.abs() <= 1e-13 * scale && t.big_h.abs() <= 1e-13 * scale {
                return Ok(Outcome::Interior(c1, c2));
            }
            let j = self.jacobian(c1, c2)?;
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let jnorm = j.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
            if !(det.abs() > 1e-14 * jnorm * jnorm) {
                let (a, b) = self.ascend(c1, c2, 20, 0.0)?;
                c1 = a;
                c2 = b;
                t = self.eval(c1, c2)?;
                continue;
            }
            let d1 = -(j[1][1] * t.big_g - j[0][1] * t.big_h) / det;
            let d2 = -(-j[1][0] * t.big_g + j[0][0] * t.big_h) / det;

            if c1 + d1 < 0.0 && allow_corner {
                pushed_negative += 1;
                if pushed_negative >= 2 {
                    return Ok(Outcome::Corner(c2));
                }
            }

            let merit = self.residual(&t);
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let n1 = (c1 + step * d1).max(0.0);
                let n2 = c2 + step * d2;
                if n2 > n1 + self.min_gap() {
                    if let Ok(nt) = self.eval(n1, n2) {
                        if self.residual(&nt) < merit * (1.0 - 1e-4 * step) {
                            let tiny = (n1 - c1).abs().max((n2 - c2).abs()) <= 1e-15 * (1.0 + c2);
                            c1 = n1;
                            c2 = n2;
                            t = nt;
                            accepted = true;
                            if tiny {
                                return Ok(Outcome::Interior(c1, c2));
                            }
                            break;
                        }
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                let stalled = merit <= 1e-10 * scale;
                if stalled {
                    return Ok(Outcome::Interior(c1, c2));
                }
                let (a, b) = self.ascend(c1, c2, 20, 0.0)?;
                if (a - c1).abs() + (b - c2).abs() == 0.0 {
                    return Err(Error::NoConvergence(format!(
                        "Newton stalled at (c1, c2) = ({c1}, {c2}) with |G| = {:e}, |H| = {:e}",
                        t.big_g.abs(),
                        t.big_h.abs()
                    )));
                }
                c1 = a;
                c2 = b;
                t = self.eval(c1, c2)?;
            }
        }
        Err(Error::NoConvergence(format!(
            "iteration cap {} reached at (c1, c2) = ({c1}, {c2}), |G| = {:e}, |H| = {:e}",
            self.max_iter,
            t.big_g.abs(),
            t.big_h.abs()
        )))
    }

    /// Upcrossing of zero by `G(0, .)` nearest to `guess` (the first one if
    /// `guess` is `None`), by safeguarded Newton on a bracket.
    fn corner(&mut self, guess: Option<f64>) -> Result<f64> {
        let n = 512;
        let h = self.ceiling / n as f64;
        let g_at = |c2: f64| raw_terms(self.basis, self.beta, 0.0, c2).map(|t| t.g_scaled);
        let mut brackets = Vec::new();
        let mut prev = (h * 1e-3, g_at(h * 1e-3)?);
        for k in 1..=n {
            let c2 = k as f64 * h;
            let cur = (c2, g_at(c2)?);
            if prev.1 < 0.0 && cur.1 >= 0.0 {
                brackets.push((prev.0, cur.0));
            }
            prev = cur;
        }
        let nearest = |b: &(f64, f64)| guess.map_or(b.0, |g| (0.5 * (b.0 + b.1) - g).abs());
        let (mut lo, mut hi) = brackets
            .into_iter()
            .min_by(|a, b| nearest(a).total_cmp(&nearest(b)))
            .ok_or_else(|| Error::Bracket("G(0, c2) has no sign change below the ceiling".into()))?;

        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            self.iterations += 1;
            let gx = g_at(x)?;
            if gx == 0.0 || hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(x);
            }
            if gx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let dh = 1e-7 * x.max(1.0);
            let back = dh.min(0.5 * x);
            let slope = (g_at(x + dh)? - g_at(x - back)?) / (dh + back);
            let newton = x - gx / slope;
            x = if slope.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Ok(x)
    }

    /// Local search from `(c1, c2)` to a point satisfying the first-order conditions.
    fn refine(&mut self, c1: f64, c2: f64) -> Result<(f64, f64, bool)> {
        match self.newton(c1, c2, true)? {
            Outcome::Interior(a, b) => Ok((a, b, false)),
            Outcome::Corner(guess) => self.settle_corner(Some(guess)),
        }
    }

    /// Corner candidate `(0, c2)`; falls back to an interior search if `H < 0` there.
    fn settle_corner(&mut self, guess: Option<f64>) -> Result<(f64, f64, bool)> {
        let c2 = self.corner(guess)?;
        let t = self.eval(0.0, c2)?;
        if t.big_h >= -CORNER_H_TOL {
            return Ok((0.0, c2, true));
        }
        // H(0, c2) < 0: the reset level is interior after all
        let (a, b) = self.ascend(1e-6 * c2, c2, 200, 1e-6)?;
        match self.newton(a.max(1e-6 * c2), b, false)? {
            Outcome::Interior(a, b) => Ok((a, b, false)),
            Outcome::Corner(_) => unreachable!("corner switching disabled"),
        }
    }
}

fn report(basis: &ScaleBasis, beta: f64, c1: f64, c2: f64, corner: bool, iterations: usize, ceiling: f64) -> Result<SolveReport> {
    let t = raw_terms(basis, beta, c1, c2)?;
    Ok(SolveReport {
        policy: Policy { c1, c2 },
        vbar: t.vbar,
        objective: t.vbar - c1,
        gamma: t.gamma,
        g_residual: t.big_g,
        h_value: t.big_h,
        corner,
        beta,
        iterations,
        ceiling,
    })
}

/// Finds the maximizer `(c1*, c2*)` of `vbar - c1`.
pub fn solve(basis: &ScaleBasis, beta: f64, opts: &SolveOptions) -> Result<SolveReport> {
    check_beta(beta)?;
    let mut ceiling = search_ceiling(basis, beta)?;
    let n = opts.grid.max(8);
    let mut doublings = 0;

    // the grid maximum must sit strictly below the top edge
    let (seed_c1, seed_c2) = loop {
        let surface = objective_surface(basis, beta, ceiling, n, opts.execution);
        let best = surface
            .iter()
            .filter_map(|&(c1, c2, v)| v.filter(|v| v.is_finite()).map(|v| (c1, c2, v)))
            .max_by(|a, b| a.2.total_cmp(&b.2))
            .ok_or_else(|| Error::NoConvergence("objective undefined on the whole grid".into()))?;
        if best.0 == 0.0 || best.1 < ceiling * (1.0 - 1.5 / n as f64) {
            break (best.0, best.1);
        }
        doublings += 1;
        ceiling *= 2.0;
        if doublings > 20 {
            return Err(Error::Bracket(format!("grid maximum on the top edge up to C = {ceiling}")));
        }
    };

    let mut solver = Solver {
        basis,
        beta,
        ceiling,
        max_iter: opts.max_iter,
        iterations: 0,
    };
    // the objective vanishes identically on c1 = 0, so a grid maximum there
    // carries no information about c2
    let (c1, c2, corner) = if seed_c1 == 0.0 {
        solver.settle_corner(None)?
    } else {
        solver.refine(seed_c1, seed_c2)?
    };
    let rep = report(basis, beta, c1, c2, corner, solver.iterations, ceiling)?;

    if opts.verify_uniqueness {
        let starts = multistart_points(ceiling);
        let found = map_indexed(opts.execution, starts.len(), |k| {
            let (a, b) = starts[k];
            multistart_one(basis, beta, ceiling, opts.max_iter, a, b)
        });
        for (k, res) in found.into_iter().enumerate() {
            let (a, b) = res.map_err(|e| {
                Error::NoConvergence(format!("start {:?} failed: {e}", starts[k]))
            })?;
            if (a - c1).abs() > opts.uniqueness_tol || (b - c2).abs() > opts.uniqueness_tol {
                return Err(Error::NoConvergence(format!(
                    "start {:?} converged to ({a}, {b}) instead of ({c1}, {c2})",
                    starts[k]
                )));
            }
        }
    }
    Ok(rep)
}

/// 16 starting points spread over the search triangle.
pub fn multistart_points(ceiling: f64) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(16);
    for a in [0.0, 0.125, 0.25, 0.375] {
        for gap in [0.0625, 0.125, 0.25, 0.5] {
            pts.push((a * ceiling, (a + gap) * ceiling));
        }
    }
    pts
}

/// Gradient ascent from an arbitrary start, then the Newton/corner refinement.
pub fn multistart_one(
    basis: &ScaleBasis,
    beta: f64,
    ceiling: f64,
    max_iter: usize,
    c1: f64,
    c2: f64,
) -> Result<(f64, f64)> {
    let mut solver = Solver {
        basis,
        beta,
        ceiling,
        max_iter,
        iterations: 0,
    };
    let (a, b) = solver.ascend(c1, c2, 2000, 1e-4)?;
    let (a, b, _) = solver.refine(a, b)?;
    Ok((a, b))
}
