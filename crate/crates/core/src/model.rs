//! Spectrally positive Lévy model with phase-type upward jumps.
//!
//! The surplus evolves as `X_t - X_0 = -d t + sigma B_t + sum_{n <= N_t} Z_n`
//! with `N` a Poisson process of rate `lambda` and `Z_n` i.i.d. phase-type.
//! Its Laplace exponent `psi(s) = log E[exp(-s X_1)]` is available for complex
//! `s` away from the eigenvalues of the sub-generator.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

const PROB_TOL: f64 = 1e-12;
/// Relative pivot size below which `sI - T` is treated as singular.
const SINGULAR_PIVOT: f64 = 1e-13;

/// Phase-type law `(m, alpha, T)` with exit vector `t = -T 1`.
///
/// A deficit `1 - sum(alpha)` is an atom at zero jump size.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTypeDist {
    alpha: DVector<f64>,
    sub_generator: DMatrix<f64>,
    exit: DVector<f64>,
}

impl PhaseTypeDist {
    pub fn new(alpha: Vec<f64>, sub_generator: DMatrix<f64>) -> Result<Self> {
        let m = alpha.len();
        if m == 0 {
            return Err(Error::InvalidPhaseType("need at least one phase".into()));
        }
        if sub_generator.nrows() != m || sub_generator.ncols() != m {
            return Err(Error::InvalidPhaseType(format!(
                "T is {}x{} but alpha has {} entries",
                sub_generator.nrows(),
                sub_generator.ncols(),
                m
            )));
        }
        if alpha.iter().chain(sub_generator.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPhaseType("non-finite entry".into()));
        }
        if let Some((i, a)) = alpha.iter().enumerate().find(|(_, a)| **a < 0.0) {
            return Err(Error::InvalidPhaseType(format!("alpha[{i}] = {a} is negative")));
        }
        let mass: f64 = alpha.iter().sum();
        if mass > 1.0 + PROB_TOL {
            return Err(Error::InvalidPhaseType(format!("alpha sums to {mass} > 1")));
        }
        if mass <= 0.0 {
            return Err(Error::InvalidPhaseType("alpha has no mass".into()));
        }
        for i in 0..m {
            if sub_generator[(i, i)] >= 0.0 {
                return Err(Error::InvalidPhaseType(format!(
                    "T[{i},{i}] = {} must be negative",
                    sub_generator[(i, i)]
                )));
            }
            for j in 0..m {
                if i != j && sub_generator[(i, j)] < 0.0 {
                    return Err(Error::InvalidPhaseType(format!(
                        "off-diagonal T[{i},{j}] = {} is negative",
                        sub_generator[(i, j)]
                    )));
                }
            }
        }
        let mut exit = DVector::zeros(m);
        for i in 0..m {
            let t_i = -sub_generator.row(i).sum();
            if t_i < -PROB_TOL {
                return Err(Error::InvalidPhaseType(format!(
                    "row {i} of T sums to {} > 0",
                    -t_i
                )));
            }
            exit[i] = t_i.max(0.0);
        }
        let eig = sub_generator.complex_eigenvalues();
        if let Some(ev) = eig.iter().find(|ev| ev.re >= 0.0) {
            return Err(Error::InvalidPhaseType(format!(
                "T has eigenvalue {ev} with nonnegative real part (defective distribution)"
            )));
        }
        Ok(Self {
            alpha: DVector::from_vec(alpha),
            sub_generator,
            exit,
        })
    }

    /// One-phase exponential law with the given rate.
    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(vec![1.0], DMatrix::from_element(1, 1, -rate))
    }

    pub fn phases(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn sub_generator(&self) -> &DMatrix<f64> {
        &self.sub_generator
    }

    pub fn exit(&self) -> &DVector<f64> {
        &self.exit
    }

    /// Total mass of the initial vector; `1 - mass` sits at zero.
    pub fn mass(&self) -> f64 {
        self.alpha.sum()
    }

    /// `alpha (-T)^{-1} 1`.
    pub fn mean(&self) -> f64 {
        let neg_t = -&self.sub_generator;
        let ones = DVector::from_element(self.phases(), 1.0);
        let x = neg_t
            .lu()
            .solve(&ones)
            .expect("sub-generator with negative spectrum is invertible");
        self.alpha.dot(&x)
    }

    /// Solves `(sI - T) x = rhs` by LU, rejecting near-singular systems.
    fn resolvent_solve(&self, s: Complex64, rhs: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        let m = self.phases();
        let a = DMatrix::from_fn(m, m, |i, j| {
            let d = if i == j { s } else { Complex64::new(0.0, 0.0) };
            d - self.sub_generator[(i, j)]
        });
        let lu = a.lu();
        let u = lu.u();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for i in 0..m {
            let p = u[(i, i)].norm();
            lo = lo.min(p);
            hi = hi.max(p);
        }
        if !(lo > SINGULAR_PIVOT * hi) {
            return Err(Error::SingularResolvent { re: s.re, im: s.im });
        }
        lu.solve(rhs)
            .ok_or(Error::SingularResolvent { re: s.re, im: s.im })
    }

    fn complex_alpha(&self) -> DVector<Complex64> {
        self.alpha.map(|a| Complex64::new(a, 0.0))
    }

    fn complex_exit(&self) -> DVector<Complex64> {
        self.exit.map(|a| Complex64::new(a, 0.0))
    }

    /// `alpha (sI - T)^{-1} t`, the Laplace transform of the continuous part.
    pub fn transform(&self, s: Complex64) -> Result<Complex64> {
        let x = self.resolvent_solve(s, &self.complex_exit())?;
        Ok(self.complex_alpha().dot(&x))
    }

    /// `alpha (sI - T)^{-2} t`, minus the derivative of [`Self::transform`].
    pub fn transform_sq(&self, s: Complex64) -> Result<Complex64> {
        let x = self.resolvent_solve(s, &self.complex_exit())?;
        let y = self.resolvent_solve(s, &x)?;
        Ok(self.complex_alpha().dot(&y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariationClass {
    BoundedVariation,
    UnboundedVariation,
}

/// Unvalidated model parameters, as read from a model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub drift_d: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub q: f64,
    pub alpha: Vec<f64>,
    pub sub_generator: Vec<Vec<f64>>,
}

/// Validated spectrally positive Lévy model plus discount rate `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyModel {
    drift_d: f64,
    sigma: f64,
    lambda: f64,
    jumps: PhaseTypeDist,
    q: f64,
}

impl LevyModel {
    pub fn new(drift_d: f64, sigma: f64, lambda: f64, jumps: PhaseTypeDist, q: f64) -> Result<Self> {
        if !drift_d.is_finite() || !sigma.is_finite() {
            return Err(Error::Domain("drift_d and sigma must be finite".into()));
        }
        if sigma < 0.0 {
            return Err(Error::Domain(format!("sigma = {sigma} must be nonnegative")));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::NonpositiveRate { name: "lambda", value: lambda });
        }
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::NonpositiveRate { name: "q", value: q });
        }
        if sigma == 0.0 && !(drift_d > 0.0) {
            return Err(Error::Subordinator { drift_d });
        }
        let mean = jumps.mean();
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(Error::InvalidPhaseType(format!("mean jump {mean} is not positive and finite")));
        }
        Ok(Self { drift_d, sigma, lambda, jumps, q })
    }

    pub fn from_params(p: &ModelParams) -> Result<Self> {
        let m = p.alpha.len();
        if p.sub_generator.len() != m || p.sub_generator.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidPhaseType(format!(
                "T must be {m}x{m} to match alpha"
            )));
        }
        let t = DMatrix::from_fn(m, m, |i, j| p.sub_generator[i][j]);
        let jumps = PhaseTypeDist::new(p.alpha.clone(), t)?;
        Self::new(p.drift_d, p.sigma, p.lambda, jumps, p.q)
    }

    pub fn to_params(&self) -> ModelParams {
        let t = self.jumps.sub_generator();
        ModelParams {
            drift_d: self.drift_d,
            sigma: self.sigma,
            lambda: self.lambda,
            q: self.q,
            alpha: self.jumps.alpha().iter().copied().collect(),
            sub_generator: (0..t.nrows())
                .map(|i| t.row(i).iter().copied().collect())
                .collect(),
        }
    }

    pub fn drift_d(&self) -> f64 {
        self.drift_d
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn jumps(&self) -> &PhaseTypeDist {
        &self.jumps
    }

    /// Copy of the model with a different discount rate.
    pub fn with_q(&self, q: f64) -> Result<Self> {
        Self::new(self.drift_d, self.sigma, self.lambda, self.jumps.clone(), q)
    }

    /// Rate of nonzero jumps, `nu(0, inf) = lambda * sum(alpha)`.
    pub fn jump_intensity(&self) -> f64 {
        self.lambda * self.jumps.mass()
    }

    /// `psi(s) = d s + sigma^2 s^2 / 2 + lambda (alpha (sI - T)^{-1} t - sum(alpha))`.
    pub fn psi(&self, s: Complex64) -> Result<Complex64> {
        let lt = self.jumps.transform(s)?;
        Ok(self.drift_d * s + 0.5 * self.sigma * self.sigma * s * s
            + self.lambda * (lt - self.jumps.mass()))
    }

    pub fn psi_real(&self, s: f64) -> Result<f64> {
        Ok(self.psi(Complex64::new(s, 0.0))?.re)
    }

    /// Analytic derivative `d + sigma^2 s - lambda alpha (sI - T)^{-2} t`.
    pub fn psi_prime(&self, s: Complex64) -> Result<Complex64> {
        let sq = self.jumps.transform_sq(s)?;
        Ok(self.drift_d + self.sigma * self.sigma * s - self.lambda * sq)
    }

    pub fn psi_prime_real(&self, s: f64) -> Result<f64> {
        Ok(self.psi_prime(Complex64::new(s, 0.0))?.re)
    }

    /// `mu = E[X_1] = -psi'(0+)`.
    pub fn drift_mu(&self) -> f64 {
        -self
            .psi_prime_real(0.0)
            .expect("resolvent at zero is regular for a valid model")
    }

    /// `mu` computed from the mean jump size instead of `psi'`.
    pub fn drift_mu_direct(&self) -> f64 {
        -self.drift_d + self.lambda * self.jumps.mean()
    }

    pub fn variation_class(&self) -> VariationClass {
        if self.sigma == 0.0 {
            VariationClass::BoundedVariation
        } else {
            VariationClass::UnboundedVariation
        }
    }
}
