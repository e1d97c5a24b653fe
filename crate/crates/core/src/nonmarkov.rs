//! Near-cutoff non-Markovian amplitude of the initially excited atom.
//!
//! With `u = √(-i) √(s + iω_c)` the Laplace-domain amplitude is the rational
//! function `n(u)/d(u)`. After a partial-fraction split over the roots of
//! `d`, each term inverts to a Faddeeva function, giving
//!
//! ```text
//! a1(t) = √i e^{-iω_c t} Σ_j c_j [1/√(πt) + √i u_j w(-i√i u_j √t)],
//! ```
//!
//! using `e^{iu²t} erfc(-√i u √t) = w(-i√i u √t)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::{self, Poly};
use crate::special::faddeeva;

/// `√i = e^{iπ/4}`.
pub const SQRT_I: Complex64 = Complex64 { re: FRAC_1_SQRT_2, im: FRAC_1_SQRT_2 };
/// `√(-i) = e^{-iπ/4}`.
pub const SQRT_MINUS_I: Complex64 = Complex64 { re: FRAC_1_SQRT_2, im: -FRAC_1_SQRT_2 };

/// Parameters of the two-atom near-cutoff problem, in units where rates are
/// measured in `Γ` and `light_speed` fixes the length unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuinticProblem {
    pub gamma: f64,
    pub omega_c: f64,
    /// `ω_a - ω_c`, negative below cutoff.
    pub detuning: f64,
    pub z12: f64,
    pub light_speed: f64,
}

impl QuinticProblem {
    /// Separation given in transition wavelengths `λ_a = 2πc/ω_a`, with `c = 1`.
    pub fn from_wavelengths(gamma: f64, omega_c: f64, detuning: f64, z_over_lambda: f64) -> Self {
        let omega_a = omega_c + detuning;
        QuinticProblem { gamma, omega_c, detuning, z12: z_over_lambda * 2.0 * PI / omega_a, light_speed: 1.0 }
    }

    pub fn omega_a(&self) -> f64 {
        self.omega_c + self.detuning
    }

    pub fn z_over_lambda(&self) -> f64 {
        self.z12 * self.omega_a() / (2.0 * PI * self.light_speed)
    }

    /// `Γ √ω_c / (2√2)`.
    fn coupling(&self) -> f64 {
        self.gamma * self.omega_c.sqrt() / (2.0 * SQRT_2)
    }

    /// Exponent slope `k` of `F(u) = e^{-k u} - 1`, `k = 2 z12 √ω_c / c`.
    pub fn exponent_slope(&self) -> f64 {
        2.0 * self.z12 * self.omega_c.sqrt() / self.light_speed
    }

    /// Taylor coefficients of `F(u)` for `u¹ … u⁵`.
    pub fn taylor_coeffs(&self) -> [f64; 5] {
        let k = self.exponent_slope();
        let mut out = [0.0; 5];
        let mut term = 1.0;
        for (n, c) in out.iter_mut().enumerate() {
            term *= -k / (n + 1) as f64;
            *c = term;
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if !(self.z12 >= 0.0) {
            return Err(Error::invalid(format!("separation must be non-negative, got {}", self.z12)));
        }
        if !(self.gamma > 0.0 && self.omega_c > 0.0 && self.light_speed > 0.0) {
            return Err(Error::invalid("rate, cutoff and light speed must be positive"));
        }
        if !(self.omega_a() > 0.0) {
            return Err(Error::invalid("transition frequency must be positive"));
        }
        Ok(())
    }
}

/// `(n, d)` for the two-atom problem; `d` is monic of degree 5 with `F(u)/u`
/// entering through its fifth-order Taylor polynomial.
pub fn build_quintic(problem: &QuinticProblem) -> Result<(Poly, Poly)> {
    problem.validate()?;
    let a = problem.coupling();
    let w = problem.detuning;
    let i = Complex64::i();
    let n = Poly::new(vec![i * a, -i * w, Complex64::new(0.0, 0.0), -i]);
    let f = problem.taylor_coeffs();
    let a2 = a * a;
    // F(u)/u = Σ_{k=1..5} f_k u^{k-1}
    let d = Poly::from_real(&[
        -2.0 * a * w - a2 * f[0],
        w * w - a2 * f[1],
        -2.0 * a - a2 * f[2],
        2.0 * w - a2 * f[3],
        -a2 * f[4],
        1.0,
    ]);
    Ok((n, d))
}

/// Single atom at the same cutoff: `n = -iu`, `d = u³ + W u - Γ√ω_c/(2√2)`.
pub fn build_single_atom(problem: &QuinticProblem) -> Result<(Poly, Poly)> {
    problem.validate()?;
    let a = problem.coupling();
    let n = Poly::new(vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, -1.0)]);
    let d = Poly::from_real(&[-a, problem.detuning, 0.0, 1.0]);
    Ok((n, d))
}

/// The two validity ratios; each should be small for the expansion to hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityMargins {
    /// `|ω_a - ω_c| / (4 ω_c)`, from the square-root approximation.
    pub spectrum: f64,
    /// `z12 / z_max`, from the fifth-order expansion of `F`.
    pub separation: f64,
}

impl ValidityMargins {
    pub fn worst(&self) -> f64 {
        self.spectrum.max(self.separation)
    }

    pub fn exceeds(&self, threshold: f64) -> bool {
        self.worst() > threshold
    }
}

/// Separation bound `(45/4)^{1/6} (1/2π) (ω_a/ω_c) √(ω_c / (2|ω_c - ω_a|))` in
/// units of `λ_a`.
pub fn separation_bound(problem: &QuinticProblem) -> f64 {
    let w = problem.detuning.abs();
    if w == 0.0 {
        return f64::INFINITY;
    }
    (45.0f64 / 4.0).powf(1.0 / 6.0) / (2.0 * PI) * (problem.omega_a() / problem.omega_c)
        * (problem.omega_c / (2.0 * w)).sqrt()
}

pub fn validity_check(problem: &QuinticProblem) -> ValidityMargins {
    ValidityMargins {
        spectrum: problem.detuning.abs() / (4.0 * problem.omega_c),
        separation: problem.z_over_lambda() / separation_bound(problem),
    }
}

/// Roots, residues and diagnostics of `n/d`.
#[derive(Debug, Clone)]
pub struct NonMarkovSolution {
    pub omega_c: f64,
    pub detuning: f64,
    pub numerator: Poly,
    pub denominator: Poly,
    pub roots: Vec<Complex64>,
    pub coeffs: Vec<Complex64>,
    pub residuals: Vec<f64>,
    pub margins: ValidityMargins,
    /// `Σ c_j`, zero when `deg d - deg n ≥ 2`.
    pub sum_c: Complex64,
    /// `Σ c_j u_j`, equal to `-i` for a unit initial amplitude.
    pub sum_cu: Complex64,
}

/// `c_j = n(u_j) / d'(u_j)`.
pub fn partial_fractions(n: &Poly, d: &Poly, roots: &[Complex64]) -> Result<Vec<Complex64>> {
    let dp = d.derivative();
    let scale = d.norm();
    roots
        .iter()
        .map(|&u| {
            let slope = dp.eval(u);
            if slope.norm() <= 1e-12 * scale * (1.0 + u.norm()).powi(d.degree() as i32 - 1) {
                return Err(Error::Convergence(format!("near-degenerate root at {u}: |d'(u)| = {:e}", slope.norm())));
            }
            Ok(n.eval(u) / slope)
        })
        .collect()
}

fn solve_rational(n: Poly, d: Poly, problem: &QuinticProblem) -> Result<NonMarkovSolution> {
    let set = poly::roots(&d)?;
    let coeffs = partial_fractions(&n, &d, &set.roots)?;
    let sum_c = coeffs.iter().sum();
    let sum_cu = coeffs.iter().zip(&set.roots).map(|(c, u)| c * u).sum();
    Ok(NonMarkovSolution {
        omega_c: problem.omega_c,
        detuning: problem.detuning,
        numerator: n,
        denominator: d,
        roots: set.roots,
        coeffs,
        residuals: set.residuals,
        margins: validity_check(problem),
        sum_c,
        sum_cu,
    })
}

/// Full two-atom solution.
pub fn solve(problem: &QuinticProblem) -> Result<NonMarkovSolution> {
    let (n, d) = build_quintic(problem)?;
    solve_rational(n, d, problem)
}

/// Same construction for a lone atom (no partner).
pub fn solve_single_atom(problem: &QuinticProblem) -> Result<NonMarkovSolution> {
    let (n, d) = build_single_atom(problem)?;
    solve_rational(n, d, problem)
}

impl NonMarkovSolution {
    /// Roots of `d`, each with its residue.
    pub fn poles(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        self.roots.iter().copied().zip(self.coeffs.iter().copied())
    }

    /// `Σ_j c_j / (u - u_j)`.
    pub fn partial_fraction_eval(&self, u: Complex64) -> Complex64 {
        self.poles().map(|(r, c)| c / (u - r)).sum()
    }

    /// `Σ_j c_j [1/√(πt) + √i u_j w(-i√i u_j √t)]`, the envelope shared by
    /// both frames.
    fn envelope(&self, t: f64) -> Complex64 {
        let st = t.sqrt();
        let mut total = Complex64::new(0.0, 0.0);
        for (u, c) in self.poles() {
            let z = -Complex64::i() * SQRT_I * u * st;
            total += c * SQRT_I * u * faddeeva(z);
        }
        // The 1/√(πt) pieces cancel analytically when Σ c_j = 0.
        if self.sum_c.norm() >= 1e-8 {
            total += self.sum_c / (PI * t).sqrt();
        }
        total * SQRT_I
    }

    /// `a1(t)` in the laboratory frame.
    pub fn amplitude_a1(&self, t: f64) -> Result<Complex64> {
        if t < 0.0 {
            return Err(Error::invalid(format!("time must be non-negative, got {t}")));
        }
        if t == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        Ok(self.envelope(t) * Complex64::from_polar(1.0, -self.omega_c * t))
    }

    /// `a1(t) e^{iω_a t}`, the amplitude in the frame rotating at the atomic
    /// frequency. Avoids the large phase `ω_c t`.
    pub fn amplitude_a1_rotating(&self, t: f64) -> Result<Complex64> {
        if t < 0.0 {
            return Err(Error::invalid(format!("time must be non-negative, got {t}")));
        }
        if t == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        Ok(self.envelope(t) * Complex64::from_polar(1.0, self.detuning * t))
    }
}
