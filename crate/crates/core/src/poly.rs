//! Complex polynomials in ascending-coefficient form and their roots.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Polynomial `Σ c[k] u^k`, coefficients in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly { coeffs: coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect() }
    }

    /// Degree ignoring exactly-zero leading coefficients.
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| *c != Complex64::new(0.0, 0.0)).unwrap_or(0)
    }

    pub fn eval(&self, u: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * u + c)
    }

    pub fn derivative(&self) -> Poly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect::<Vec<_>>();
        if coeffs.is_empty() {
            Poly::new(vec![Complex64::new(0.0, 0.0)])
        } else {
            Poly::new(coeffs)
        }
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Poly {
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            coeffs = next;
        }
        Poly::new(coeffs)
    }

    /// Sum of `|c_k u^k|`, the natural scale of a residual at `u`.
    fn magnitude_scale(&self, u: Complex64) -> f64 {
        let r = u.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }
}

/// Roots of a polynomial together with polishing diagnostics.
#[derive(Debug, Clone)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    /// `|p(u_j)| / ‖p‖` for each root.
    pub residuals: Vec<f64>,
}

/// All roots of `p`: eigenvalues of the companion matrix, each polished by
/// damped Newton steps. Nearly coincident roots are rejected since callers
/// rely on simple poles.
pub fn roots(p: &Poly) -> Result<RootSet> {
    let n = p.degree();
    if n == 0 {
        return Err(Error::invalid("polynomial of degree 0 has no roots"));
    }
    let lead = p.coeffs[n];
    let mut companion = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        companion[(i, n - 1)] = -p.coeffs[i] / lead;
    }
    let eig = companion
        .try_schur(1e-15, 10_000)
        .ok_or_else(|| Error::Convergence("companion-matrix eigenvalue iteration did not converge".into()))?
        .eigenvalues()
        .ok_or_else(|| Error::Convergence("companion-matrix Schur form is not triangular".into()))?;

    let dp = p.derivative();
    let norm = p.norm();
    let mut found: Vec<Complex64> = eig.iter().copied().collect();
    for u in found.iter_mut() {
        *u = polish(p, &dp, *u);
    }
    let residuals: Vec<f64> = found.iter().map(|&u| p.eval(u).norm() / norm).collect();

    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (found[i] - found[j]).norm();
            let scale = found[i].norm().max(found[j].norm()).max(1.0);
            if gap <= 1e-7 * scale {
                return Err(Error::Convergence(format!(
                    "multiple root detected near {} (separation {gap:e})",
                    found[i]
                )));
            }
        }
    }
    Ok(RootSet { roots: found, residuals })
}

fn polish(p: &Poly, dp: &Poly, mut u: Complex64) -> Complex64 {
    for _ in 0..20 {
        let f = p.eval(u);
        if f.norm() <= f64::EPSILON * p.magnitude_scale(u) {
            break;
        }
        let d = dp.eval(u);
        if d.norm() == 0.0 {
            break;
        }
        let step = f / d;
        // Accept only steps that decrease the residual.
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..8 {
            let trial = u - step * lambda;
            if p.eval(trial).norm() < f.norm() {
                u = trial;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved || (step * lambda).norm() <= 4.0 * f64::EPSILON * u.norm() {
            break;
        }
    }
    u
}
