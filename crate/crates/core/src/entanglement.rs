//! Concurrence of the two atomic qubits and summaries of exchange dynamics.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::simulator::DynamicsTrace;

const NORM_SLACK: f64 = 1e-9;
const PSD_SLACK: f64 = 1e-10;

/// Two-qubit density matrix in the basis `|ee⟩, |eg⟩, |ge⟩, |gg⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitDensity {
    matrix: Matrix4<Complex64>,
}

impl TwoQubitDensity {
    /// Checks Hermiticity, unit trace and positivity (to `1e-10`).
    pub fn new(matrix: Matrix4<Complex64>) -> Result<Self> {
        let scale = matrix.norm().max(1.0);
        if (matrix - matrix.adjoint()).norm() > PSD_SLACK * scale {
            return Err(Error::invalid("density matrix is not Hermitian"));
        }
        let trace = matrix.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > PSD_SLACK {
            return Err(Error::invalid(format!("density matrix has trace {trace}, expected 1")));
        }
        let hermitian = (matrix + matrix.adjoint()).scale(0.5);
        let lowest = hermitian.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if lowest < -PSD_SLACK {
            return Err(Error::invalid(format!("density matrix is not positive semidefinite (eigenvalue {lowest:e})")));
        }
        Ok(TwoQubitDensity { matrix })
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.matrix
    }

    /// `p |Φ⁺⟩⟨Φ⁺| + (1 - p) I/4`.
    pub fn werner(p: f64) -> Result<Self> {
        let mut m = Matrix4::<Complex64>::identity().scale((1.0 - p) / 4.0);
        for &i in &[0, 3] {
            for &j in &[0, 3] {
                m[(i, j)] += Complex64::new(p / 2.0, 0.0);
            }
        }
        Self::new(m)
    }
}

fn check_norm(a1: Complex64, a2: Complex64) -> Result<f64> {
    let p = a1.norm_sqr() + a2.norm_sqr();
    if !p.is_finite() || p > 1.0 + NORM_SLACK {
        return Err(Error::invalid(format!("|a1|² + |a2|² = {p} exceeds 1")));
    }
    Ok(p)
}

/// Atomic state after tracing out the field from
/// `a1|eg,0⟩ + a2|ge,0⟩ + Σ b_k|gg,1_k⟩`.
pub fn reduced_density(a1: Complex64, a2: Complex64) -> Result<TwoQubitDensity> {
    let p = check_norm(a1, a2)?;
    let mut m = Matrix4::<Complex64>::zeros();
    m[(1, 1)] = Complex64::new(a1.norm_sqr(), 0.0);
    m[(2, 2)] = Complex64::new(a2.norm_sqr(), 0.0);
    m[(1, 2)] = a1 * a2.conj();
    m[(2, 1)] = a2 * a1.conj();
    m[(3, 3)] = Complex64::new((1.0 - p).max(0.0), 0.0);
    // Trace is exactly 1 up to the clamp above, which the slack absorbs.
    TwoQubitDensity::new(m)
}

/// `C = 2|a1||a2|`, valid for single-excitation states.
pub fn concurrence_single_excitation(a1: Complex64, a2: Complex64) -> f64 {
    (2.0 * a1.norm() * a2.norm()).clamp(0.0, 1.0)
}

/// Wootters concurrence `max(0, λ1 - λ2 - λ3 - λ4)`, with `λ_i²` the
/// eigenvalues of `ρ (σy⊗σy) ρ* (σy⊗σy)`.
///
/// With `ρ = W W†` the `λ_i` are the singular values of `Wᵀ (σy⊗σy) W`, which
/// avoids square roots of near-zero eigenvalues. Eigenvalues of `ρ` below
/// `RANK_CUTOFF` count as zero.
pub fn concurrence_wootters(rho: &TwoQubitDensity) -> Result<f64> {
    let mut flip = Matrix4::<Complex64>::zeros();
    for (i, s) in [-1.0, 1.0, 1.0, -1.0].into_iter().enumerate() {
        flip[(i, 3 - i)] = Complex64::new(s, 0.0);
    }
    let m = (rho.matrix + rho.matrix.adjoint()).scale(0.5);
    let eig = m.symmetric_eigen();
    let mut w = eig.eigenvectors;
    for (k, &p) in eig.eigenvalues.iter().enumerate() {
        let scale = if p > RANK_CUTOFF { p.sqrt() } else { 0.0 };
        w.column_mut(k).scale_mut(scale);
    }
    let tau = w.transpose() * flip * w;
    let mut lambda: Vec<f64> = tau.singular_values().iter().copied().collect();
    if lambda.iter().any(|v| !v.is_finite()) {
        return Err(Error::Convergence("non-finite singular value in the concurrence".into()));
    }
    lambda.sort_by(|a, b| b.total_cmp(a));
    Ok((lambda[0] - lambda[1] - lambda[2] - lambda[3]).clamp(0.0, 1.0))
}

const RANK_CUTOFF: f64 = 1e-12;

/// Result of [`entanglement_summary`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementSummary {
    pub c_max: f64,
    pub t_at_c_max: f64,
    /// `Δ12` from fitting `|a1|²` to `(A + Bt) cos²(Δt)`.
    pub fitted_delta12: f64,
    /// RMS residual of that fit.
    pub fit_rms: f64,
}

/// Fitted exchange rate and maximal concurrence of a trace. Uses the trace's
/// own concurrence when `a2` is present, otherwise the envelope estimator
/// of [`concurrence_estimate`].
pub fn entanglement_summary(trace: &DynamicsTrace) -> Result<EntanglementSummary> {
    let pop: Vec<f64> = trace.a1.iter().map(|a| a.norm_sqr()).collect();
    let (fitted_delta12, fit_rms) = fit_exchange_rate(&trace.t, &pop)?;
    let (c_max, t_at_c_max) = if trace.a2.is_some() {
        let (i, c) = trace
            .concurrence
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|c| (i, c)))
            .fold((0, f64::NEG_INFINITY), |best, (i, c)| if c > best.1 { (i, c) } else { best });
        (c, trace.t[i])
    } else {
        concurrence_estimate(&trace.t, &trace.a1)?
    };
    Ok(EntanglementSummary { c_max, t_at_c_max, fitted_delta12, fit_rms })
}

/// Least-squares fit of `pop(t) ≈ (A + Bt) cos²(Δt)`; returns `(Δ, rms)`.
pub fn fit_exchange_rate(t: &[f64], pop: &[f64]) -> Result<(f64, f64)> {
    if t.len() != pop.len() || t.len() < 8 {
        return Err(Error::invalid("fit needs matching t and population arrays with at least 8 samples"));
    }
    // Initial guess from the first prominent minimum, i.e. Δ t ≈ π/2.
    let t_min = first_prominent_minimum(t, pop).ok_or_else(|| {
        Error::Convergence("exchange fit: trace shows no population minimum, cover at least one period".into())
    })?;
    let guess = PI / (2.0 * t_min);
    let cost = |d: f64| linear_envelope_fit(t, pop, d).1;
    let (lo, hi) = (0.5 * guess, 1.5 * guess);
    let steps = 600;
    let mut best = (guess, f64::INFINITY);
    for k in 0..=steps {
        let d = lo + (hi - lo) * k as f64 / steps as f64;
        let c = cost(d);
        if c < best.1 {
            best = (d, c);
        }
    }
    let width = (hi - lo) / steps as f64;
    let delta = golden_section(cost, best.0 - width, best.0 + width, 1e-13 * guess);
    let rms = (cost(delta) / t.len() as f64).sqrt();
    if !rms.is_finite() {
        return Err(Error::Convergence("exchange fit produced a non-finite residual".into()));
    }
    Ok((delta, rms))
}

/// `(A, B)` minimising `Σ (pop - (A + Bt) cos²(Δt))²` and the residual sum.
fn linear_envelope_fit(t: &[f64], pop: &[f64], delta: f64) -> ((f64, f64), f64) {
    let (mut s00, mut s01, mut s11, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&ti, &p) in t.iter().zip(pop) {
        let c = (delta * ti).cos().powi(2);
        let (f0, f1) = (c, c * ti);
        s00 += f0 * f0;
        s01 += f0 * f1;
        s11 += f1 * f1;
        r0 += f0 * p;
        r1 += f1 * p;
    }
    let det = s00 * s11 - s01 * s01;
    let (a, b) = if det.abs() > 1e-300 { ((r0 * s11 - r1 * s01) / det, (s00 * r1 - s01 * r0) / det) } else { (r0 / s00, 0.0) };
    let sse = t
        .iter()
        .zip(pop)
        .map(|(&ti, &p)| {
            let r = p - (a + b * ti) * (delta * ti).cos().powi(2);
            r * r
        })
        .sum();
    ((a, b), sse)
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Indices of local maxima of `y` whose prominence over the neighbouring
/// minima is at least half the global peak-to-trough range.
fn prominent_maxima(y: &[f64]) -> Vec<usize> {
    let n = y.len();
    if n < 3 {
        return Vec::new();
    }
    let range = y.iter().copied().fold(f64::NEG_INFINITY, f64::max) - y.iter().copied().fold(f64::INFINITY, f64::min);
    let threshold = 0.5 * range;
    let mut out = Vec::new();
    for i in 1..n - 1 {
        if !(y[i] >= y[i - 1] && y[i] > y[i + 1]) {
            continue;
        }
        // Lowest point on each side before a higher sample appears; a side
        // that runs into the end of the trace does not constrain the peak.
        let side = |iter: &mut dyn Iterator<Item = usize>| {
            let mut low = y[i];
            for j in iter {
                if y[j] > y[i] {
                    return Some(low);
                }
                low = low.min(y[j]);
            }
            if low < y[i] - threshold {
                Some(low)
            } else {
                None
            }
        };
        let left = side(&mut (0..i).rev());
        let right = side(&mut (i + 1..n));
        let base = match (left, right) {
            (Some(l), Some(r)) => l.max(r),
            (Some(v), None) | (None, Some(v)) => v,
            (None, None) => y[i],
        };
        if y[i] - base >= threshold {
            out.push(i);
        }
    }
    out
}

fn first_prominent_minimum(t: &[f64], y: &[f64]) -> Option<f64> {
    let neg: Vec<f64> = y.iter().map(|v| -v).collect();
    prominent_maxima(&neg).first().map(|&i| t[i])
}

/// Analytic-only concurrence estimator: the envelope `P(t)` is the linear
/// interpolant through `|a1(0)|²` and every local maximum of `|a1|²`, and
/// `C(t) = 2|a1| √max(0, P - |a1|²)`. Returns `(C_max, t_at_C_max)` over the
/// span covered by the envelope.
pub fn concurrence_estimate(t: &[f64], a1: &[Complex64]) -> Result<(f64, f64)> {
    let curve = concurrence_estimate_curve(t, a1)?;
    let (i, c) = curve
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.map(|c| (i, c)))
        .fold((0, f64::NEG_INFINITY), |best, (i, c)| if c > best.1 { (i, c) } else { best });
    if c == f64::NEG_INFINITY {
        return Err(Error::Convergence("concurrence estimator: no envelope maximum inside the trace".into()));
    }
    Ok((c, t[i]))
}

/// Pointwise estimator `C(t)`, `None` beyond the last envelope maximum.
pub fn concurrence_estimate_curve(t: &[f64], a1: &[Complex64]) -> Result<Vec<Option<f64>>> {
    if t.len() != a1.len() || t.len() < 3 {
        return Err(Error::invalid("estimator needs matching t and a1 arrays with at least 3 samples"));
    }
    let pop: Vec<f64> = a1.iter().map(|a| a.norm_sqr()).collect();
    let mut knots = vec![0];
    knots.extend((1..pop.len() - 1).filter(|&i| pop[i] >= pop[i - 1] && pop[i] > pop[i + 1]));
    let mut out = vec![None; t.len()];
    for w in knots.windows(2) {
        let (i, j) = (w[0], w[1]);
        for k in i..=j {
            let s = (t[k] - t[i]) / (t[j] - t[i]);
            let envelope = pop[i] + s * (pop[j] - pop[i]);
            out[k] = Some(2.0 * pop[k].sqrt() * (envelope - pop[k]).max(0.0).sqrt());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn reduced_density_examples() {
        let rho = reduced_density(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(rho.matrix()[(1, 1)], c(1.0, 0.0));
        assert_eq!(rho.matrix().norm(), 1.0);
        let rho = reduced_density(c(0.6, 0.0), c(0.0, 0.4)).unwrap();
        assert!((rho.matrix()[(3, 3)].re - 0.48).abs() < 1e-15);
        assert!(reduced_density(c(0.9, 0.0), c(0.5, 0.0)).is_err());
    }

    #[test]
    fn concurrence_examples() {
        assert_eq!(concurrence_single_excitation(c(1.0, 0.0), c(0.0, 0.0)), 0.0);
        let (a, b) = (c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2));
        assert!((concurrence_single_excitation(a, b) - 1.0).abs() < 1e-15);
        let rho = reduced_density(a, b).unwrap();
        assert!((concurrence_wootters(&rho).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wootters_mixed_and_werner() {
        let mixed = TwoQubitDensity::new(Matrix4::identity().scale(0.25)).unwrap();
        assert!(concurrence_wootters(&mixed).unwrap() < 1e-14);
        let bell = TwoQubitDensity::werner(1.0).unwrap();
        assert!((concurrence_wootters(&bell).unwrap() - 1.0).abs() < 1e-12);
        let w = TwoQubitDensity::werner(0.5).unwrap();
        assert!((concurrence_wootters(&w).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn non_psd_rejected() {
        let mut m = Matrix4::<Complex64>::zeros();
        m[(0, 0)] = c(1.2, 0.0);
        m[(3, 3)] = c(-0.2, 0.0);
        assert!(TwoQubitDensity::new(m).is_err());
    }

    #[test]
    fn fit_recovers_exact_rate() {
        let delta = 0.37;
        let t: Vec<f64> = (0..2000).map(|k| k as f64 * 0.01).collect();
        let pop: Vec<f64> = t.iter().map(|&x| (delta * x).cos().powi(2)).collect();
        let (d, rms) = fit_exchange_rate(&t, &pop).unwrap();
        assert!((d - delta).abs() < 1e-4 * delta, "{d}");
        assert!(rms < 1e-8);
    }

    #[test]
    fn estimator_on_decaying_exchange() {
        // |a1|² = e^{-κt} cos²(Δt), so C_max = e^{-κπ/(4Δ)}. The linear
        // envelope overestimates by O((κπ/Δ)²), so keep κ small.
        let (delta, kappa) = (2.0, 0.05);
        let t: Vec<f64> = (0..4001).map(|k| k as f64 * 1e-3).collect();
        let a1: Vec<Complex64> = t.iter().map(|&x| c((-0.5 * kappa * x).exp() * (delta * x).cos(), 0.0)).collect();
        let (cm, tm) = concurrence_estimate(&t, &a1).unwrap();
        let expect = (-kappa * PI / (4.0 * delta)).exp();
        assert!((cm - expect).abs() < 0.01 * expect, "{cm} vs {expect}");
        assert!((tm - PI / (4.0 * delta)).abs() < 0.05, "{tm}");
    }
}
