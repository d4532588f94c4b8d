//! q-scale functions for phase-type models.
//!
//! With `Phi(q)` the positive root of `psi(s) = q` and `-xi_i` the roots with
//! negative real part,
//!
//! ```text
//! W(x) = exp(Phi x) / psi'(Phi) - sum_i C_i exp(-xi_i x),   C_i = -1 / psi'(-xi_i)
//! ```
//!
//! for `x >= 0` and `W = 0` below zero. `Wbar`, `Z`, `Zbar` and `R` follow by
//! integrating each exponential in closed form.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::LevyModel;
use crate::poly::{cleared_polynomial, companion_roots};
use crate::quad;

/// Largest admissible `Phi(q) x` before `exp` overflows.
pub const MAX_EXPONENT: f64 = 700.0;
const RESIDUAL_TOL: f64 = 1e-8;
const SEPARATION_TOL: f64 = 1e-6;
const IMAG_REL_TOL: f64 = 1e-9;
const IMAG_ABS_TOL: f64 = 1e-12;

/// Roots and residues of `psi(s) = q`; evaluates every scale function in O(m).
#[derive(Debug, Clone)]
pub struct ScaleBasis {
    model: LevyModel,
    mu: f64,
    phi_q: f64,
    lead_coeff: f64,
    neg_roots: Vec<Complex64>,
    coeffs: Vec<Complex64>,
}

/// `(e^z - 1) / z`.
fn exprel1(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..25 {
            term = term * z / k as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `(e^z - 1 - z) / z^2`.
fn exprel2(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let mut term = Complex64::new(0.5, 0.0);
        let mut sum = term;
        for k in 3..26 {
            term = term * z / k as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}

fn polish(model: &LevyModel, mut s: Complex64) -> Result<Complex64> {
    let q = model.q();
    for _ in 0..8 {
        let f = model.psi(s)? - q;
        let df = model.psi_prime(s)?;
        let step = f / df;
        s -= step;
        if step.norm() <= 4.0 * f64::EPSILON * s.norm().max(1.0) {
            break;
        }
    }
    Ok(s)
}

/// Enforces pairwise root separation; returns `1 + max |root|`.
fn check_separation(roots: &[Complex64]) -> Result<f64> {
    let scale = 1.0 + roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let threshold = SEPARATION_TOL * scale;
    let mut separation = f64::INFINITY;
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            separation = separation.min((roots[i] - roots[j]).norm());
        }
    }
    if separation < threshold {
        return Err(Error::RepeatedRoot { separation, threshold });
    }
    Ok(scale)
}

impl ScaleBasis {
    /// Solves `psi(s) = q` and assembles the residue representation.
    pub fn find_roots(model: &LevyModel) -> Result<Self> {
        let q = model.q();
        let poly = cleared_polynomial(model);
        let raw = companion_roots(&poly);

        let mut roots = Vec::with_capacity(raw.len());
        for r in raw {
            let mut s = polish(model, r).map_err(|_| {
                Error::RootCount(format!("spurious root {r} at a pole of psi"))
            })?;
            if s.im.abs() <= 1e-10 * s.norm().max(1.0) {
                s = polish(model, Complex64::new(s.re, 0.0))?;
                s.im = 0.0;
            }
            roots.push(s);
        }

        let scale = check_separation(&roots)?;

        let positive: Vec<_> = roots.iter().filter(|r| r.re > 0.0).copied().collect();
        if positive.len() != 1 || positive[0].im != 0.0 {
            return Err(Error::RootCount(format!(
                "expected one positive real root, found {positive:?}"
            )));
        }
        let phi_q = positive[0].re;
        if roots.iter().any(|r| r.re == 0.0) {
            return Err(Error::RootCount("root on the imaginary axis".into()));
        }

        // negative-part roots, with conjugate pairs made exact
        let mut neg: Vec<Complex64> = roots.iter().filter(|r| r.re < 0.0).copied().collect();
        neg.sort_by(|a, b| a.re.total_cmp(&b.re).then(b.im.total_cmp(&a.im)));
        let mut paired = vec![false; neg.len()];
        for i in 0..neg.len() {
            if paired[i] || neg[i].im <= 0.0 {
                continue;
            }
            let target = neg[i].conj();
            let partner = (0..neg.len())
                .filter(|&j| !paired[j] && j != i && neg[j].im < 0.0)
                .min_by(|&a, &b| (neg[a] - target).norm().total_cmp(&(neg[b] - target).norm()))
                .ok_or_else(|| Error::RootCount(format!("root {} has no conjugate", neg[i])))?;
            if (neg[partner] - target).norm() > 1e-8 * scale {
                return Err(Error::RootCount(format!("root {} has no conjugate", neg[i])));
            }
            neg[partner] = target;
            paired[i] = true;
            paired[partner] = true;
        }
        if let Some(j) = (0..neg.len()).find(|&j| neg[j].im != 0.0 && !paired[j]) {
            return Err(Error::RootCount(format!("root {} has no conjugate", neg[j])));
        }

        let expected = if model.sigma() > 0.0 {
            model.jumps().phases() + 1
        } else {
            model.jumps().phases()
        };
        if neg.len() != expected {
            return Err(Error::RootCount(format!(
                "found {} roots with negative real part, expected {expected}",
                neg.len()
            )));
        }

        let res_tol = RESIDUAL_TOL * q.max(1.0);
        for r in std::iter::once(Complex64::new(phi_q, 0.0)).chain(neg.iter().copied()) {
            let res = (model.psi(r)? - q).norm();
            if res >= res_tol {
                return Err(Error::RootCount(format!("residual {res:e} at root {r}")));
            }
        }

        let lead_coeff = 1.0 / model.psi_prime_real(phi_q)?;
        let mut coeffs = Vec::with_capacity(neg.len());
        for r in &neg {
            coeffs.push(-1.0 / model.psi_prime(*r)?);
        }
        // conjugate roots get exactly conjugate residues
        for i in 0..neg.len() {
            if neg[i].im < 0.0 {
                if let Some(j) = (0..neg.len()).find(|&j| neg[j] == neg[i].conj()) {
                    coeffs[i] = coeffs[j].conj();
                }
            }
        }
        let neg_roots = neg.iter().map(|r| -r).collect();

        Ok(Self {
            mu: model.drift_mu(),
            model: model.clone(),
            phi_q,
            lead_coeff,
            neg_roots,
            coeffs,
        })
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }
    pub fn phi_q(&self) -> f64 {
        self.phi_q
    }
    /// `1 / psi'(Phi(q))`.
    pub fn lead_coeff(&self) -> f64 {
        self.lead_coeff
    }
    /// `xi_i`, each with positive real part.
    pub fn neg_roots(&self) -> &[Complex64] {
        &self.neg_roots
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn q(&self) -> f64 {
        self.model.q()
    }

    fn guard(&self, x: f64) -> Result<()> {
        if self.phi_q * x > MAX_EXPONENT {
            Err(Error::Overflow(self.phi_q * x))
        } else {
            Ok(())
        }
    }

    fn realize(z: Complex64) -> f64 {
        debug_assert!(
            z.im.abs() < IMAG_REL_TOL * z.re.abs() + IMAG_ABS_TOL,
            "imaginary residue {z}"
        );
        z.re
    }

    /// Sum `a(Phi) + sum_i C_i b(xi_i)` before discarding the imaginary part.
    fn combine(
        &self,
        lead: impl Fn(f64) -> f64,
        term: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Complex64 {
        let mut acc = Complex64::new(lead(self.phi_q), 0.0);
        for (xi, c) in self.neg_roots.iter().zip(&self.coeffs) {
            acc += term(*xi, *c);
        }
        acc
    }

    fn w_complex(&self, x: f64) -> Complex64 {
        self.combine(
            |phi| self.lead_coeff * (phi * x).exp(),
            |xi, c| -c * (-xi * x).exp(),
        )
    }

    /// `|Im W(x)| / max(|Re W(x)|, 1e-300)` for diagnostics.
    pub fn imag_residue(&self, x: f64) -> f64 {
        let z = self.w_complex(x.max(0.0));
        z.im.abs() / z.re.abs().max(1e-300)
    }

    /// The q-scale function `W^{(q)}(x)`.
    pub fn w(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        self.guard(x)?;
        Ok(Self::realize(self.w_complex(x)))
    }

    /// Right derivative `W^{(q)'}(x+)`, zero for `x < 0`.
    pub fn w_prime(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        self.guard(x)?;
        let z = self.combine(
            |phi| self.lead_coeff * phi * (phi * x).exp(),
            |xi, c| c * xi * (-xi * x).exp(),
        );
        Ok(Self::realize(z))
    }

    /// `e^{-Phi x} W(x)`, bounded for all `x >= 0`.
    fn w_scaled(&self, x: f64) -> f64 {
        let phi = self.phi_q;
        Self::realize(self.combine(|_| self.lead_coeff, |xi, c| -c * (-(xi + phi) * x).exp()))
    }

    fn w_prime_scaled(&self, x: f64) -> f64 {
        let phi = self.phi_q;
        Self::realize(self.combine(
            |phi| self.lead_coeff * phi,
            |xi, c| c * xi * (-(xi + phi) * x).exp(),
        ))
    }

    /// `W(a) / W(b)` without forming either factor; requires `b > 0`.
    pub fn w_ratio(&self, a: f64, b: f64) -> f64 {
        if a < 0.0 {
            return 0.0;
        }
        (self.phi_q * (a - b)).exp() * self.w_scaled(a) / self.w_scaled(b)
    }

    /// `W'(a) / W(b)`; requires `b > 0`.
    pub fn w_prime_ratio(&self, a: f64, b: f64) -> f64 {
        if a < 0.0 {
            return 0.0;
        }
        (self.phi_q * (a - b)).exp() * self.w_prime_scaled(a) / self.w_scaled(b)
    }

    /// `Wbar(x) = int_0^x W`.
    pub fn wbar(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        self.guard(x)?;
        let z = self.combine(
            |phi| self.lead_coeff * x * exprel1(Complex64::new(phi * x, 0.0)).re,
            |xi, c| -c * x * exprel1(-xi * x),
        );
        Ok(Self::realize(z))
    }

    /// `Z(x) = 1 + q Wbar(x)`.
    pub fn z(&self, x: f64) -> Result<f64> {
        Ok(1.0 + self.q() * self.wbar(x)?)
    }

    /// `Zbar(x) = int_0^x Z`, equal to `x` for `x <= 0`.
    pub fn zbar(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(x);
        }
        self.guard(x)?;
        let x2 = x * x;
        let z = self.combine(
            |phi| self.lead_coeff * x2 * exprel2(Complex64::new(phi * x, 0.0)).re,
            |xi, c| -c * x2 * exprel2(-xi * x),
        );
        Ok(x + self.q() * Self::realize(z))
    }

    /// `R(y) = Zbar(y) - mu / q`.
    pub fn r(&self, y: f64) -> Result<f64> {
        Ok(self.zbar(y)? - self.mu / self.q())
    }

    // Detrended pieces: each is the named function minus the multiple of `W`
    // carrying its `e^{Phi x}` growth, so it stays bounded on `x >= 0`.

    /// `Wbar(x) - W(x) / Phi`.
    pub fn wbar_detrended(&self, x: f64) -> f64 {
        let (phi, x) = (self.phi_q, x.max(0.0));
        let z = self.combine(
            |_| -self.lead_coeff / phi,
            |xi, c| c * ((-xi * x).exp() / phi - x * exprel1(-xi * x)),
        );
        Self::realize(z)
    }

    /// `Z(x) - (q / Phi) W(x)`.
    pub fn z_detrended(&self, x: f64) -> f64 {
        1.0 + self.q() * self.wbar_detrended(x)
    }

    /// `R(x) - (q / Phi^2) W(x)`.
    pub fn r_detrended(&self, x: f64) -> f64 {
        let (phi, x) = (self.phi_q, x.max(0.0));
        let x2 = x * x;
        let z = self.combine(
            |_| -self.lead_coeff * (1.0 + phi * x) / (phi * phi),
            |xi, c| c * ((-xi * x).exp() / (phi * phi) - x2 * exprel2(-xi * x)),
        );
        x + self.q() * Self::realize(z) - self.mu / self.q()
    }

    /// `W'(x+) - Phi W(x)`.
    pub fn w_prime_detrended(&self, x: f64) -> f64 {
        let (phi, x) = (self.phi_q, x.max(0.0));
        Self::realize(self.combine(|_| 0.0, |xi, c| c * (xi + phi) * (-xi * x).exp()))
    }

    /// `1 / W(x)` for `x >= 0`, zero once `W` overflows.
    pub fn w_recip(&self, x: f64) -> f64 {
        (-self.phi_q * x).exp() / self.w_scaled(x)
    }

    /// Relative error between a quadrature of `int_0^inf e^{-sx} W(x) dx` and
    /// `1 / (psi(s) - q)`.
    pub fn laplace_check(&self, s: f64) -> Result<f64> {
        let phi = self.phi_q;
        if !(s > phi) {
            return Err(Error::Domain(format!("transform needs s > Phi(q) = {phi}, got {s}")));
        }
        let cut = (MAX_EXPONENT / phi).min(-(1e-16f64).ln() / (s - phi));
        let body = quad::integrate(
            |x| (-s * x).exp() * self.w(x).expect("guarded by the truncation point"),
            0.0,
            cut,
            0.0,
            1e-14,
        );
        let tail = self.combine(
            |phi| self.lead_coeff * ((phi - s) * cut).exp() / (s - phi),
            |xi, c| -c * (-(s + xi) * cut).exp() / (s + xi),
        );
        let numeric = body + Self::realize(tail);
        let exact = 1.0 / (self.model.psi_real(s)? - self.q());
        Ok(((numeric - exact) / exact).abs())
    }

    /// `E_x[e^{-q tau_b+}; tau_b+ < tau_0-] = Z(b-x) - Z(b) W(b-x)/W(b)`.
    pub fn exit_up(&self, x: f64, b: f64) -> Result<f64> {
        self.check_interval(x, b)?;
        Ok(self.z(b - x)? - self.z(b)? * self.w_ratio(b - x, b))
    }

    /// `E_x[e^{-q tau_0-}; tau_0- < tau_b+] = W(b-x)/W(b)`.
    pub fn exit_down(&self, x: f64, b: f64) -> Result<f64> {
        self.check_interval(x, b)?;
        self.guard(b)?;
        Ok(self.w_ratio(b - x, b))
    }

    fn check_interval(&self, x: f64, b: f64) -> Result<()> {
        if !(b > 0.0) || !(0.0..=b).contains(&x) {
            return Err(Error::Domain(format!("need 0 <= x <= b, b > 0 (x = {x}, b = {b})")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;

    fn quadratic_oracle() -> (f64, f64) {
        // 2s^2 + 0.95 s - 0.05 = 0
        let (a, b, c) = (2.0, 0.95, -0.05);
        let disc = ((b * b - 4.0 * a * c) as f64).sqrt();
        ((-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a))
    }

    #[test]
    fn exponential_roots_match_quadratic_formula() {
        let basis = ScaleBasis::find_roots(&exp_jump_model()).unwrap();
        let (pos, neg) = quadratic_oracle();
        assert!((basis.phi_q() - pos).abs() < 1e-12);
        assert!((pos - 0.0478177).abs() < 2e-7);
        assert_eq!(basis.neg_roots().len(), 1);
        assert!((basis.neg_roots()[0].re + neg).abs() < 1e-12);
        assert_eq!(basis.neg_roots()[0].im, 0.0);
    }

    #[test]
    fn root_counts_follow_degree() {
        assert_eq!(ScaleBasis::find_roots(&weibull_model(2.0, 1.0, 3.0)).unwrap().neg_roots().len(), 7);
        assert_eq!(ScaleBasis::find_roots(&weibull_model(2.0, 0.0, 3.0)).unwrap().neg_roots().len(), 6);
    }

    #[test]
    fn residuals_and_conjugates() {
        for model in [weibull_model(2.0, 1.0, 3.0), weibull_model(2.0, 0.0, 1.0), exp_jump_model()] {
            let b = ScaleBasis::find_roots(&model).unwrap();
            assert!((model.psi_real(b.phi_q()).unwrap() - model.q()).abs() < 1e-10);
            for (xi, c) in b.neg_roots().iter().zip(b.coeffs()) {
                assert!(xi.re > 0.0);
                assert!((model.psi(-xi).unwrap() - model.q()).norm() < 1e-8);
                if xi.im != 0.0 {
                    let k = b.neg_roots().iter().position(|r| *r == xi.conj()).unwrap();
                    assert_eq!(b.coeffs()[k], c.conj());
                }
            }
        }
    }

    #[test]
    fn boundary_values() {
        let e = ScaleBasis::find_roots(&exp_jump_model()).unwrap();
        assert_eq!(e.w(-1.0).unwrap(), 0.0);
        assert!((e.w(0.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((e.w_prime(0.0).unwrap() - 0.2625).abs() < 1e-10);

        let d = ScaleBasis::find_roots(&weibull_model(2.0, 1.0, 3.0)).unwrap();
        assert!(d.w(0.0).unwrap().abs() < 1e-12);
        assert!((d.w_prime(0.0).unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn z_and_zbar_below_zero() {
        let b = ScaleBasis::find_roots(&weibull_model(2.0, 1.0, 3.0)).unwrap();
        assert_eq!(b.z(-3.0).unwrap(), 1.0);
        assert_eq!(b.zbar(-3.0).unwrap(), -3.0);
        assert_eq!(b.z(0.0).unwrap(), 1.0);
        assert_eq!(b.zbar(0.0).unwrap(), 0.0);
        let mu_q = b.mu() / b.q();
        assert!((b.r(0.0).unwrap() + mu_q).abs() < 1e-12);
        assert!((b.r(-2.0).unwrap() - (-2.0 - mu_q)).abs() < 1e-12);
    }

    #[test]
    fn exponential_r_at_zero() {
        let b = ScaleBasis::find_roots(&exp_jump_model()).unwrap();
        assert!((b.r(0.0).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for model in [exp_jump_model(), weibull_model(2.0, 1.0, 3.0), weibull_model(2.0, 0.0, 3.0)] {
            let b = ScaleBasis::find_roots(&model).unwrap();
            let h = 1e-5;
            let fd = (b.w(1.0 + h).unwrap() - b.w(1.0 - h).unwrap()) / (2.0 * h);
            let an = b.w_prime(1.0).unwrap();
            assert!(((fd - an) / an).abs() < 1e-6);

            let fd = (b.zbar(2.0 + h).unwrap() - b.zbar(2.0 - h).unwrap()) / (2.0 * h);
            assert!((fd - b.z(2.0).unwrap()).abs() < 1e-8);

            let fd = (b.wbar(1.5 + h).unwrap() - b.wbar(1.5 - h).unwrap()) / (2.0 * h);
            assert!((fd - b.w(1.5).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn wbar_matches_quadrature() {
        let b = ScaleBasis::find_roots(&weibull_model(2.0, 1.0, 3.0)).unwrap();
        for x in [1e-4, 0.3, 4.0, 25.0] {
            let q = quad::integrate(|y| b.w(y).unwrap(), 0.0, x, 0.0, 1e-14);
            let v = b.wbar(x).unwrap();
            assert!(((q - v) / v).abs() < 1e-11, "x={x}: {q} vs {v}");
        }
    }

    #[test]
    fn laplace_identity() {
        let b = ScaleBasis::find_roots(&exp_jump_model()).unwrap();
        for ds in [1.0, 5.0] {
            assert!(b.laplace_check(b.phi_q() + ds).unwrap() < 1e-6);
        }
        assert!(matches!(b.laplace_check(b.phi_q()), Err(Error::Domain(_))));
    }

    #[test]
    fn detrended_pieces_match_direct_forms() {
        for b in [
            ScaleBasis::find_roots(&weibull_model(2.0, 1.0, 3.0)).unwrap(),
            ScaleBasis::find_roots(&weibull_model(2.0, 0.0, 1.0)).unwrap(),
            ScaleBasis::find_roots(&exp_jump_model()).unwrap(),
        ] {
            let (phi, q) = (b.phi_q(), b.q());
            for x in [0.0, 0.3, 2.0, 9.0] {
                let w = b.w(x).unwrap();
                let tol = 1e-12 * (1.0 + w);
                assert!((b.wbar_detrended(x) - (b.wbar(x).unwrap() - w / phi)).abs() < tol / phi);
                assert!((b.z_detrended(x) - (b.z(x).unwrap() - q / phi * w)).abs() < tol);
                assert!((b.r_detrended(x) - (b.r(x).unwrap() - q / (phi * phi) * w)).abs() < tol / phi);
                assert!((b.w_prime_detrended(x) - (b.w_prime(x).unwrap() - phi * w)).abs() < tol);
                assert!((b.w_recip(x) * w - 1.0).abs() < 1e-13);
            }
            // bounded where the direct forms overflow
            let far = 2.0 * MAX_EXPONENT / phi;
            assert!(b.w(far).is_err());
            for v in [b.wbar_detrended(far), b.z_detrended(far), b.w_prime_detrended(far)] {
                assert!(v.is_finite());
            }
            assert_eq!(b.w_recip(far), 0.0);
        }
    }

    #[test]
    fn overflow_guard() {
        let b = ScaleBasis::find_roots(&exp_jump_model()).unwrap();
        let x = 701.0 / b.phi_q();
        assert!(matches!(b.w(x), Err(Error::Overflow(_))));
        // ratios stay finite past the guard
        let r = b.w_ratio(x - 1.0, x);
        assert!(r.is_finite() && r > 0.0 && r < 1.0);
    }

    #[test]
    fn ratio_matches_direct_quotient() {
        let b = ScaleBasis::find_roots(&weibull_model(2.0, 1.0, 3.0)).unwrap();
        let direct = b.w(3.0).unwrap() / b.w(10.0).unwrap();
        assert!((b.w_ratio(3.0, 10.0) - direct).abs() < 1e-14);
        let direct = b.w_prime(3.0).unwrap() / b.w(10.0).unwrap();
        assert!((b.w_prime_ratio(3.0, 10.0) - direct).abs() < 1e-14);
    }

    #[test]
    fn exit_identities_edge_cases() {
        let d = ScaleBasis::find_roots(&weibull_model(2.0, 1.0, 3.0)).unwrap();
        assert!((d.exit_up(2.0, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((d.exit_down(0.0, 2.0).unwrap() - 1.0).abs() < 1e-12);
        let e = ScaleBasis::find_roots(&exp_jump_model()).unwrap();
        let (up, down) = (e.exit_up(1.0, 2.0).unwrap(), e.exit_down(1.0, 2.0).unwrap());
        assert!(up > 0.0 && up < 1.0 && down > 0.0 && down < 1.0 && up + down <= 1.0);
        assert!(matches!(e.exit_up(3.0, 2.0), Err(Error::Domain(_))));
        assert!(matches!(e.exit_down(-0.1, 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn repeated_roots_rejected() {
        let near = [
            Complex64::new(0.05, 0.0),
            Complex64::new(-1.0, 0.3),
            Complex64::new(-1.0, 0.3 + 1e-9),
        ];
        assert!(matches!(check_separation(&near), Err(Error::RepeatedRoot { .. })));
        let apart = [Complex64::new(0.05, 0.0), Complex64::new(-1.0, 0.3), Complex64::new(-1.0, -0.3)];
        assert!(check_separation(&apart).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn w_increasing_and_log_concave(x in 0.01f64..30.0, dy in 0.01f64..30.0, sigma in prop::sample::select(vec![0.0, 1.0])) {
                let b = ScaleBasis::find_roots(&weibull_model(2.0, sigma, 3.0)).unwrap();
                prop_assert!(b.w(x + 1e-4).unwrap() > b.w(x).unwrap());
                let y = x + dy;
                let lx = b.w_prime(x).unwrap() / b.w(x).unwrap();
                let ly = b.w_prime(y).unwrap() / b.w(y).unwrap();
                prop_assert!(ly <= lx + 1e-9);
                prop_assert!(b.imag_residue(x) < 1e-9);
            }
        }
    }
}
