//! Polynomial helpers for the cleared-denominator form of `psi(s) = q`.
//!
//! Coefficients are stored in ascending order: `c[0] + c[1] s + ... + c[n] s^n`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::model::LevyModel;

pub(crate) fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub(crate) fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0))
        .collect()
}

#[cfg(test)]
pub(crate) fn poly_eval(c: &[f64], s: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &k| acc * s + k)
}

/// Leverrier–Faddeev recursion for `A`.
///
/// Returns the characteristic polynomial `det(sI - A)` (ascending, monic) and
/// the matrices `M_1..M_m` with `adj(sI - A) = sum_k M_k s^(m-k)`.
pub(crate) fn leverrier_faddeev(a: &DMatrix<f64>) -> (Vec<f64>, Vec<DMatrix<f64>>) {
    let m = a.nrows();
    let mut coeffs = vec![0.0; m + 1];
    coeffs[m] = 1.0;
    let eye = DMatrix::<f64>::identity(m, m);
    let mut prev = DMatrix::<f64>::zeros(m, m);
    let mut mats = Vec::with_capacity(m);
    for k in 1..=m {
        let mk = a * &prev + &eye * coeffs[m - k + 1];
        coeffs[m - k] = -(a * &mk).trace() / k as f64;
        mats.push(mk.clone());
        prev = mk;
    }
    (coeffs, mats)
}

/// `p(s) = (sigma^2 s^2 / 2 + d s - lambda sum(alpha) - q) det(sI - T) + lambda alpha adj(sI - T) t`.
///
/// Its zeros are exactly the solutions of `psi(s) = q` when the phase-type
/// representation has no cancelling factors.
pub(crate) fn cleared_polynomial(model: &LevyModel) -> Vec<f64> {
    let ph = model.jumps();
    let m = ph.phases();
    let (det, adj) = leverrier_faddeev(ph.sub_generator());
    let quad = [
        -model.jump_intensity() - model.q(),
        model.drift_d(),
        0.5 * model.sigma() * model.sigma(),
    ];
    let mut p = poly_mul(&quad, &det);
    let mut numer = vec![0.0; m];
    for (k, mk) in adj.iter().enumerate() {
        // M_{k+1} multiplies s^(m-k-1)
        let v: DVector<f64> = mk * ph.exit();
        numer[m - k - 1] = model.lambda() * ph.alpha().dot(&v);
    }
    p = poly_add(&p, &numer);
    while p.len() > 1 && *p.last().unwrap() == 0.0 {
        p.pop();
    }
    p
}

/// Parlett–Reinsch balancing by powers of two.
fn balance(mut a: DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    const RADIX: f64 = 2.0;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
        if done {
            return a;
        }
    }
}

/// All complex roots of `p` via eigenvalues of its balanced companion matrix.
pub(crate) fn companion_roots(p: &[f64]) -> Vec<Complex64> {
    let n = p.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = p[n];
    let mut comp = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        comp[(i, n - 1)] = -p[i] / lead;
    }
    balance(comp).complex_eigenvalues().iter().copied().collect()
}
