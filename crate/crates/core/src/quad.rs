//! Numerical integration: adaptive Gauss–Kronrod on finite and half-infinite
//! intervals, and a double-exponential rule for half-line Fourier integrals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// An integral value together with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Absolute and relative accuracy targets plus a work limit.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-13, rel: 1e-11, max_intervals: 2000 }
    }
}

impl Tolerance {
    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive 15-point Gauss–Kronrod integration of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let (value, error) = kronrod15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value, error });
    let (mut total, mut total_err) = (value, error);
    while total_err > tol.target(total) {
        if heap.len() >= tol.max_intervals {
            return Err(Error::Convergence(format!(
                "quadrature on [{a}, {b}] stopped at {} intervals: value {total:e}, error estimate {total_err:e}",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval can no longer be split in floating point.
            heap.push(worst);
            return Err(Error::Convergence(format!(
                "quadrature on [{a}, {b}] hit floating-point resolution: value {total:e}, error estimate {total_err:e}"
            )));
        }
        let (v1, e1) = kronrod15(&mut f, worst.a, mid);
        let (v2, e2) = kronrod15(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Re-sum to shed accumulated rounding from the running updates.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Ok(Estimate { value, error })
}

/// Integral of `f` over `[a, ∞)` via `x = a + (1 - t)/t`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(mut f: F, a: f64, tol: Tolerance) -> Result<Estimate> {
    integrate(
        |t| {
            let x = a + (1.0 - t) / t;
            f(x) / (t * t)
        },
        0.0,
        1.0,
        tol,
    )
}

/// Which trigonometric weight multiplies the integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oscillator {
    Cos,
    Sin,
}

/// `∫_0^∞ f(x) cos(ωx) dx` or the sine analogue, `ω > 0`, using the
/// Ooura–Mori double-exponential transformation. Non-decaying `f` of at most
/// algebraic growth yields the Abel-regularized value. The step is halved
/// until two successive estimates agree to `tol`.
pub fn fourier_half_line<F: FnMut(f64) -> f64>(
    mut f: F,
    omega: f64,
    osc: Oscillator,
    tol: Tolerance,
) -> Result<Estimate> {
    if !(omega > 0.0) {
        return Err(Error::InvalidInput(format!("fourier_half_line needs omega > 0, got {omega}")));
    }
    let mut h = 0.2;
    let (mut prev, _) = ooura_mori_sum(&mut f, omega, osc, h);
    for _ in 0..6 {
        h *= 0.5;
        let (next, magnitude) = ooura_mori_sum(&mut f, omega, osc, h);
        // Cancellation among the terms bounds the attainable accuracy.
        let floor = 64.0 * f64::EPSILON * magnitude;
        let change = (next - prev).abs();
        if change <= tol.target(next).max(floor) {
            return Ok(Estimate { value: next, error: change.max(floor) });
        }
        prev = next;
    }
    Err(Error::Convergence(format!(
        "oscillatory quadrature did not settle: last value {prev:e} at step {h}"
    )))
}

/// Returns the sum and the sum of term magnitudes, both scaled by `π/ω`.
fn ooura_mori_sum<F: FnMut(f64) -> f64>(f: &mut F, omega: f64, osc: Oscillator, h: f64) -> (f64, f64) {
    let m = PI / h;
    let beta = 0.25;
    let alpha = beta / (1.0 + m * (1.0 + m).ln() / (4.0 * PI)).sqrt();
    // phi(t) = t / (1 - exp(-g(t))), g(t) = 2t + alpha(1 - e^-t) + beta(e^t - 1)
    let phi = |t: f64| -> (f64, f64) {
        if t == 0.0 {
            let g1 = 2.0 + alpha + beta;
            let g2 = beta - alpha;
            return (1.0 / g1, (0.5 * g1 - 0.5 * g2 / g1) / g1);
        }
        let g = 2.0 * t + alpha * (1.0 - (-t).exp()) + beta * t.exp_m1();
        let dg = 2.0 + alpha * (-t).exp() + beta * t.exp();
        let e = (-g).exp();
        let denom = -(-g).exp_m1();
        let p = t / denom;
        let dp = 1.0 / denom - t * e * dg / (denom * denom);
        (p, dp)
    };
    let offset = match osc {
        Oscillator::Cos => 0.5,
        Oscillator::Sin => 0.0,
    };
    let mut total = 0.0;
    let mut magnitude = 0.0;
    let mut term = |n: i64| -> f64 {
        let t = (n as f64 + offset) * h;
        let (p, dp) = phi(t);
        if !p.is_finite() || !dp.is_finite() || p <= 0.0 || dp == 0.0 {
            return 0.0;
        }
        let arg = m * p;
        // M t sits on a zero of the weight; expand around it for accuracy.
        let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let shift = (m * (p - t)).sin();
        let w = match osc {
            Oscillator::Cos => -sign * shift,
            Oscillator::Sin => sign * shift,
        };
        if w == 0.0 {
            return 0.0;
        }
        f(arg / omega) * w * dp
    };
    // Negative side decays double exponentially through phi → 0, at a rate
    // set by alpha, which shrinks as h does.
    let mut n = -1;
    let mut quiet = 0;
    loop {
        let t = (n as f64 + offset) * h;
        let v = term(n);
        total += v;
        magnitude += v.abs();
        if v.abs() <= 1e-18 * total.abs().max(1e-300) {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if (quiet >= 4 && t < -1.0) || t < -60.0 {
            break;
        }
        n -= 1;
    }
    let mut n = 0;
    let mut quiet = 0;
    loop {
        let v = term(n);
        total += v;
        magnitude += v.abs();
        if v.abs() <= 1e-18 * total.abs().max(1e-300) {
            quiet += 1;
        } else {
            quiet = 0;
        }
        let t = (n as f64 + offset) * h;
        if (quiet >= 4 && t > 1.0) || n > 200_000 {
            break;
        }
        n += 1;
    }
    (total * PI / omega, magnitude * PI / omega)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let est = integrate(|x| 3.0 * x * x + 1.0, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((est.value - 10.0).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let est = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance { abs: 1e-10, rel: 1e-10, max_intervals: 5000 }).unwrap();
        assert!((est.value - 2.0).abs() < 1e-9, "{est:?}");
    }

    #[test]
    fn half_line_lorentzian() {
        let est = integrate_to_infinity(|x| 1.0 / (1.0 + x * x), 0.0, Tolerance::default()).unwrap();
        assert!((est.value - PI / 2.0).abs() < 1e-11);
    }

    #[test]
    fn work_limit_reports_convergence_error() {
        let tol = Tolerance { abs: 1e-15, rel: 0.0, max_intervals: 3 };
        let err = integrate(|x| (1.0 / x).sin(), 1e-6, 1.0, tol).unwrap_err();
        assert!(matches!(err, Error::Convergence(_)));
    }

    #[test]
    fn fourier_cos_lorentzian() {
        // ∫_0^∞ cos(bx)/(x²+k²) dx = π e^{-bk}/(2k)
        for &(b, k) in &[(1.0, 1.0), (5.0, 0.3), (0.2, 2.0), (20.0, 0.1)] {
            let est = fourier_half_line(|x| 1.0 / (x * x + k * k), b, Oscillator::Cos, Tolerance::default()).unwrap();
            let exact = PI * (-b * k).exp() / (2.0 * k);
            assert!((est.value - exact).abs() < 1e-10 * exact.max(1e-3), "b={b} k={k}: {} vs {exact}", est.value);
        }
    }

    #[test]
    fn fourier_sin_slow_decay() {
        // ∫_0^∞ x sin(bx)/(x²+k²) dx = (π/2) e^{-bk}
        for &(b, k) in &[(1.0, 1.0), (3.0, 0.5)] {
            let est = fourier_half_line(|x| x / (x * x + k * k), b, Oscillator::Sin, Tolerance::default()).unwrap();
            let exact = 0.5 * PI * (-b * k).exp();
            assert!((est.value - exact).abs() < 1e-9, "{} vs {exact}", est.value);
        }
    }

    #[test]
    fn fourier_abel_regularized_constant() {
        // Abel value of ∫_0^∞ x² cos(bx)/(x²+k²) dx is -k² π e^{-bk}/(2k).
        let (b, k) = (2.0, 0.7);
        let est = fourier_half_line(|x| x * x / (x * x + k * k), b, Oscillator::Cos, Tolerance::default()).unwrap();
        let exact = -k * k * PI * (-b * k).exp() / (2.0 * k);
        assert!((est.value - exact).abs() < 1e-9, "{} vs {exact}", est.value);
    }
}
