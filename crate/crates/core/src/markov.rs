//! Markovian theory: decay rates, dispersive RDDI shift, interaction range,
//! the Markov-validity figure of merit, and ideal excitation exchange.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{self, Estimate, Oscillator, Tolerance};
use crate::spectra::{bath_spectrum, AtomSpec, BathSpectrum, Channel, ModeIndex, WaveguideGeometry};

/// `γ_{αα'} = 2π G_{αα'}(ω_a)`.
pub fn decay_rates(spectrum: &BathSpectrum, omega_a: f64) -> [[f64; 2]; 2] {
    let mut g = [[0.0; 2]; 2];
    for (i, row) in g.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = 2.0 * PI * spectrum.eval(i, j, omega_a);
        }
    }
    g
}

/// Evanescent decay length `ξ = (c/ω_mn) / √(1 - (ω_a/ω_mn)²)`.
pub fn interaction_range(omega_mn: f64, omega_a: f64, light_speed: f64) -> Result<f64> {
    if !(omega_a < omega_mn) {
        return Err(Error::domain(format!(
            "ω_a = {omega_a} is not below the cutoff {omega_mn}: no evanescent range"
        )));
    }
    let r = omega_a / omega_mn;
    Ok(light_speed / omega_mn / (1.0 - r * r).sqrt())
}

/// Single TM mode, z-dipoles: `Δ12 = (Γ/2) e^{-z12/ξ} / √(1 - (ω_a/ω_c)²)`.
pub fn rddi_single_mode(gamma: f64, omega_c: f64, omega_a: f64, z12: f64, light_speed: f64) -> Result<f64> {
    let xi = interaction_range(omega_c, omega_a, light_speed)?;
    let r = omega_a / omega_c;
    Ok(0.5 * gamma / (1.0 - r * r).sqrt() * (-z12.abs() / xi).exp())
}

/// Closed-form channel contribution written as `p(κ) e^{-bκ}` with
/// `p(κ) = P/(2κ) - Qκ/2 + R`, `κ = √(1 - ω_a²/ω_c²)`, `b = |β|`.
struct ClosedTerm {
    p: f64,
    q: f64,
    r: f64,
    b: f64,
    cutoff: f64,
}

impl ClosedTerm {
    fn of(channel: &Channel, alpha: usize, alpha2: usize) -> Result<Self> {
        let (p, q, x) = channel.polynomial_weights(alpha, alpha2).ok_or_else(|| {
            Error::domain("closed-form RDDI is defined for exact waveguide modes, not the near-cutoff model")
        })?;
        let beta = channel.beta(alpha, alpha2);
        Ok(ClosedTerm { p, q, r: 0.5 * beta.signum() * x, b: beta.abs(), cutoff: channel.cutoff })
    }

    fn kappa(&self, omega_a: f64) -> Result<f64> {
        if !(omega_a < self.cutoff) {
            return Err(Error::domain(format!(
                "ω_a = {omega_a} is not below the cutoff {}: use decay rates or the simulator",
                self.cutoff
            )));
        }
        let r = omega_a / self.cutoff;
        Ok((1.0 - r * r).sqrt())
    }

    /// `(Δ, dΔ/dω_a, d²Δ/dω_a²)`.
    fn value_and_derivatives(&self, omega_a: f64) -> Result<(f64, f64, f64)> {
        let k = self.kappa(omega_a)?;
        let (pp, qq, rr, b) = (self.p, self.q, self.r, self.b);
        // Per unit weight: ∫cos(bq)/(q²+κ²) = πe^{-bκ}/(2κ), the q² piece
        // contributes -κ² times that, and ∫q sin(bq)/(q²+κ²) = (π/2)e^{-bκ}.
        let p = pp / (2.0 * k) - qq * k / 2.0 + rr;
        let dp = -pp / (2.0 * k * k) - qq / 2.0;
        let ddp = pp / (k * k * k);
        let e = (-b * k).exp();
        let h = p * e;
        let dh = (dp - b * p) * e;
        let ddh = (ddp - 2.0 * b * dp + b * b * p) * e;
        let wc2 = self.cutoff * self.cutoff;
        let dk = -omega_a / (wc2 * k);
        let ddk = -1.0 / (wc2 * k) - omega_a * omega_a / (wc2 * wc2 * k * k * k);
        Ok((h, dh * dk, ddh * dk * dk + dh * ddk))
    }
}

/// Closed-form `Δ_{αα'}` of an exact waveguide spectrum (TM and TE, any
/// orientation). Requires `ω_a` below every cutoff.
pub fn rddi_from_spectrum(spectrum: &BathSpectrum, omega_a: f64, alpha: usize, alpha2: usize) -> Result<f64> {
    let mut total = 0.0;
    for ch in spectrum.channels() {
        total += ClosedTerm::of(ch, alpha, alpha2)?.value_and_derivatives(omega_a)?.0;
    }
    Ok(total)
}

/// `Δ12` of two atoms in an SI guide from the listed modes.
pub fn rddi_closed_form(
    geometry: &WaveguideGeometry,
    atom1: &AtomSpec,
    atom2: &AtomSpec,
    modes: &[ModeIndex],
) -> Result<f64> {
    let spectrum = bath_spectrum(geometry, atom1, atom2, modes)?;
    rddi_from_spectrum(&spectrum, atom1.omega_a, 0, 1)
}

/// Markov figure of merit `Δ12 · Δ''12` with the second derivative taken
/// analytically with respect to `ω_a`.
pub fn markov_validity(spectrum: &BathSpectrum, omega_a: f64) -> Result<f64> {
    let (mut d, mut dd) = (0.0, 0.0);
    for ch in spectrum.channels() {
        let (v, _, v2) = ClosedTerm::of(ch, 0, 1)?.value_and_derivatives(omega_a)?;
        d += v;
        dd += v2;
    }
    Ok(d * dd)
}

/// Analytic `(Δ12, Δ'12, Δ''12)` in `ω_a`.
pub fn rddi_derivatives(spectrum: &BathSpectrum, omega_a: f64) -> Result<(f64, f64, f64)> {
    let mut acc = (0.0, 0.0, 0.0);
    for ch in spectrum.channels() {
        let (a, b, c) = ClosedTerm::of(ch, 0, 1)?.value_and_derivatives(omega_a)?;
        acc = (acc.0 + a, acc.1 + b, acc.2 + c);
    }
    Ok(acc)
}

/// Options for the numerical principal-value oracle.
#[derive(Debug, Clone, Copy)]
pub struct PvOptions {
    /// Keep only `P∫ G/(ω - ω_a)`, the part retained under the rotating-wave
    /// approximation.
    pub rotating_only: bool,
    pub tol: Tolerance,
}

impl Default for PvOptions {
    fn default() -> Self {
        PvOptions { rotating_only: false, tol: Tolerance { abs: 1e-300, rel: 1e-12, max_intervals: 4000 } }
    }
}

/// Numerical `Δ12 = P∫ G12(ω) [1/(ω - ω_a) + 1/(ω + ω_a)] dω`, integrated in
/// `q` per channel. A pole above a cutoff is removed by subtracting its
/// residue term on an interval symmetric about it.
pub fn rddi_pv_numeric(spectrum: &BathSpectrum, omega_a: f64, opts: PvOptions) -> Result<Estimate> {
    let mut total = Estimate { value: 0.0, error: 0.0 };
    for ch in spectrum.channels() {
        let e = pv_channel(ch, omega_a, opts)?;
        total.value += e.value;
        total.error += e.error;
    }
    Ok(total)
}

fn pv_channel(ch: &Channel, omega_a: f64, opts: PvOptions) -> Result<Estimate> {
    let wc = ch.cutoff;
    if omega_a == wc {
        return Err(Error::domain("ω_a coincides with a cutoff; the dispersive integral diverges"));
    }
    let beta = ch.beta(0, 1);
    let b = beta.abs();
    let sign = beta.signum();
    let rotating_only = opts.rotating_only;
    let kernel = move |q: f64| -> f64 {
        let w = wc * (1.0 + q * q).sqrt();
        let minus = 1.0 / (w - omega_a);
        if rotating_only {
            minus
        } else {
            minus + 1.0 / (w + omega_a)
        }
    };
    let weights = |q: f64| ch.q_weights(0, 1, q);

    if omega_a < wc {
        return half_line(|q| weights(q).0 * kernel(q), |q| weights(q).1 * kernel(q), b, sign, 0.0, opts.tol);
    }

    // Pole at q0; the rotating kernel is (s + s0) / (ω_c (q + q0)) / (q - q0).
    let s0 = omega_a / wc;
    let q0 = (s0 * s0 - 1.0).sqrt();
    let trig = |q: f64| -> f64 {
        let (a, bb) = weights(q);
        a * (beta * q).cos() + bb * (beta * q).sin()
    };
    let residue_part = |q: f64| -> f64 {
        let s = (1.0 + q * q).sqrt();
        trig(q) * (s + s0) / (wc * (q + q0))
    };
    let h0 = residue_part(q0);
    let regular = |q: f64| -> f64 {
        let s = (1.0 + q * q).sqrt();
        let w = wc * s;
        let counter = if rotating_only { 0.0 } else { trig(q) / (w + omega_a) };
        let dq = q - q0;
        let removable = if dq == 0.0 { 0.0 } else { (residue_part(q) - h0) / dq };
        removable + counter
    };
    let left = quad::integrate(regular, 0.0, q0, opts.tol)?;
    let right = quad::integrate(regular, q0, 2.0 * q0, opts.tol)?;
    // ∫_0^{2q0} h0/(q - q0) dq vanishes in the principal-value sense.
    let tail = half_line(
        |x| weights(x + 2.0 * q0).0 * kernel(x + 2.0 * q0),
        |x| weights(x + 2.0 * q0).1 * kernel(x + 2.0 * q0),
        b,
        sign,
        2.0 * q0,
        opts.tol,
    )?;
    Ok(Estimate { value: left.value + right.value + tail.value, error: left.error + right.error + tail.error })
}

/// `∫_0^∞ [fc(x) cos(β(x+x0)) + fs(x) sin(β(x+x0))] dx` with `β = sign·b`.
pub(crate) fn half_line<C, S>(mut fc: C, mut fs: S, b: f64, sign: f64, x0: f64, tol: Tolerance) -> Result<Estimate>
where
    C: FnMut(f64) -> f64,
    S: FnMut(f64) -> f64,
{
    if b == 0.0 {
        return quad::integrate_to_infinity(fc, 0.0, tol);
    }
    let cc = quad::fourier_half_line(&mut fc, b, Oscillator::Cos, tol)?;
    let cs = quad::fourier_half_line(&mut fc, b, Oscillator::Sin, tol_or_skip(x0, tol))
        .unwrap_or(Estimate { value: 0.0, error: 0.0 });
    let sc = quad::fourier_half_line(&mut fs, b, Oscillator::Cos, tol_or_skip(x0, tol))
        .unwrap_or(Estimate { value: 0.0, error: 0.0 });
    let ss = quad::fourier_half_line(&mut fs, b, Oscillator::Sin, tol)?;
    // cos(β(x + x0)) = cos βx0 cos βx - sin βx0 sin βx, β = sign·b
    let (s0, c0) = (sign * b * x0).sin_cos();
    let cos_part = c0 * cc.value - s0 * sign * cs.value;
    let sin_part = sign * (s0 * sign * sc.value + c0 * ss.value);
    let cos_part = if x0 == 0.0 { cc.value } else { cos_part };
    let sin_part = if x0 == 0.0 { sign * ss.value } else { sin_part };
    Ok(Estimate { value: cos_part + sin_part, error: cc.error + cs.error + sc.error + ss.error })
}

fn tol_or_skip(x0: f64, tol: Tolerance) -> Tolerance {
    if x0 == 0.0 {
        Tolerance { abs: f64::INFINITY, ..tol }
    } else {
        tol
    }
}

/// Amplitudes of `|e1,g2⟩` and `|g1,e2⟩` under ideal exchange.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeState {
    pub t: f64,
    pub amp1: Complex64,
    pub amp2: Complex64,
    /// Within one time-grid spacing of an odd multiple of `π/(4Δ12)`.
    pub maximally_entangled: bool,
}

/// `cos(Δ12 t)|e1,g2⟩ + i sin(Δ12 t)|g1,e2⟩` on the given grid.
pub fn evolve_exchange(delta12: f64, t_grid: &[f64]) -> Result<Vec<ExchangeState>> {
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("time grid must be ascending"));
    }
    let quarter = PI / (4.0 * delta12.abs());
    let spacing = t_grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok(t_grid
        .iter()
        .map(|&t| {
            let (s, c) = (delta12 * t).sin_cos();
            let k = (t / quarter).round();
            let near = k as i64 % 2 == 1 && (t - k * quarter).abs() <= 0.5 * spacing.max(1e-12 * quarter);
            ExchangeState { t, amp1: Complex64::new(c, 0.0), amp2: Complex64::new(0.0, s), maximally_entangled: near }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::cutoff_frequency;
    use std::f64::consts::SQRT_2;

    #[test]
    fn rates_below_and_at_sqrt2() {
        let spec = BathSpectrum::tm_single_mode(2.0, 500.0, 1.0, [0.0, 0.0]);
        assert_eq!(decay_rates(&spec, 400.0), [[0.0; 2]; 2]);
        let g = decay_rates(&spec, 500.0 * SQRT_2);
        assert!((g[0][0] - 2.0).abs() < 1e-13);
        assert_eq!(g[0][1], g[0][0]);
    }

    #[test]
    fn range_examples() {
        assert!((interaction_range(2.0, 1e-9, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((interaction_range(1.0, 3f64.sqrt() / 2.0, 1.0).unwrap() - 2.0).abs() < 1e-12);
        let xi = interaction_range(1.0, 1.0 - 1e-4, 1.0).unwrap();
        assert!((xi - 1.0 / (2e-4f64 - 1e-8).sqrt()).abs() < 1e-9);
        assert!((xi - 70.7).abs() < 0.02);
        assert!(interaction_range(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn closed_form_zero_separation() {
        let spec = BathSpectrum::tm_single_mode(1.0, 500.0, 1.0, [0.0, 0.0]);
        let d = rddi_from_spectrum(&spec, 400.0, 0, 1).unwrap();
        assert!((d - 0.5 / (1.0f64 - 0.64).sqrt()).abs() < 1e-14);
        assert!(matches!(rddi_from_spectrum(&spec, 501.0, 0, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn closed_form_matches_single_mode_formula() {
        let (w11, wa) = (500.0, 400.0);
        let z = 2.0 * PI / wa * 0.5;
        let spec = BathSpectrum::tm_single_mode(1.0, w11, 1.0, [0.0, z]);
        let a = rddi_from_spectrum(&spec, wa, 0, 1).unwrap();
        let b = rddi_single_mode(1.0, w11, wa, z, 1.0).unwrap();
        assert!((a - b).abs() < 1e-14 * b);
    }

    #[test]
    fn general_orientation_te_and_cross_terms() {
        // Independent evaluation of the closed form from effective dipoles.
        let g = WaveguideGeometry::new(6e-3, 4e-3).unwrap();
        let w11 = cutoff_frequency(&g, 1, 1).unwrap();
        let wa = 0.9 * cutoff_frequency(&g, 1, 0).unwrap();
        let d = 1e-29;
        let a1 = AtomSpec { omega_a: wa, dipole: [0.3 * d, -0.5 * d, 0.8 * d], position: [2e-3, 1.5e-3, 0.0] };
        let a2 = AtomSpec { omega_a: wa, dipole: [-0.4 * d, 0.2 * d, 0.6 * d], position: [3.5e-3, 2.2e-3, 4e-3] };
        let modes = [ModeIndex::tm(1, 1).unwrap(), ModeIndex::te(1, 0).unwrap(), ModeIndex::te(0, 1).unwrap()];
        let got = rddi_closed_form(&g, &a1, &a2, &modes).unwrap();

        use crate::constants::{EPSILON_0, HBAR, SPEED_OF_LIGHT};
        use crate::spectra::effective_dipoles;
        let mut expect = 0.0;
        for mode in modes {
            let wc = cutoff_frequency(&g, mode.m, mode.n).unwrap();
            let pre = 2.0 * wc / (EPSILON_0 * HBAR * SPEED_OF_LIGHT * g.area());
            let k = (1.0 - (wa / wc).powi(2)).sqrt();
            let e1 = effective_dipoles(&g, mode, &a1);
            let e2 = effective_dipoles(&g, mode, &a2);
            let xi = SPEED_OF_LIGHT / wc / k;
            let decay = (-(4e-3f64) / xi).exp();
            let bracket = match mode.family {
                crate::spectra::ModeFamily::TM => {
                    e1.d_z * e2.d_z / k - k * e1.d_tm * e2.d_tm + (0.0f64 - 4e-3).signum() * (e1.d_z * e2.d_tm - e1.d_tm * e2.d_z)
                }
                crate::spectra::ModeFamily::TE => (wa / wc).powi(2) / k * e1.d_te * e2.d_te,
            };
            expect += pre * bracket * decay;
        }
        assert!((got - expect).abs() < 1e-12 * expect.abs(), "{got} vs {expect}");
        let _ = w11;
    }

    #[test]
    fn second_derivative_matches_finite_differences() {
        for &(gamma, wc, z) in &[(1.0, 500.0, 0.01), (2.0, 10.0, 0.3), (1.0, 500.0, 0.0)] {
            let spec = BathSpectrum::tm_single_mode(gamma, wc, 1.0, [0.0, z]);
            for &r in &[0.5, 0.8, 0.95] {
                let wa = r * wc;
                let (d, d1, d2) = rddi_derivatives(&spec, wa).unwrap();
                let h = 1e-4 * wc * (1.0 - r);
                let f = |w: f64| rddi_from_spectrum(&spec, w, 0, 1).unwrap();
                let fd1 = (f(wa + h) - f(wa - h)) / (2.0 * h);
                let fd2 = (f(wa + h) - 2.0 * d + f(wa - h)) / (h * h);
                assert!((d1 - fd1).abs() < 1e-6 * d1.abs(), "first derivative {d1} vs {fd1}");
                assert!((d2 - fd2).abs() < 1e-6 * d2.abs(), "second derivative {d2} vs {fd2}");
            }
        }
    }

    #[test]
    fn validity_grows_toward_cutoff() {
        let spec = BathSpectrum::tm_single_mode(1.0, 500.0, 1.0, [0.0, 0.0]);
        let small = markov_validity(&spec, 250.0).unwrap();
        assert!(small < 1e-5);
        let mut last = small;
        for k in 1..20 {
            let wa = 500.0 - 250.0 * 0.6f64.powi(k);
            let v = markov_validity(&spec, wa).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn pv_matches_closed_form_below_cutoff() {
        for &(r, zl) in &[(0.5, 0.0), (0.8, 0.5), (0.95, 1.0), (0.99, 2.0)] {
            let wc = 500.0;
            let wa = r * wc;
            let z = zl * 2.0 * PI / wa;
            let spec = BathSpectrum::tm_single_mode(1.0, wc, 1.0, [0.0, z]);
            let pv = rddi_pv_numeric(&spec, wa, PvOptions::default()).unwrap();
            let cf = rddi_from_spectrum(&spec, wa, 0, 1).unwrap();
            assert!((pv.value - cf).abs() < 1e-8 * cf.abs(), "r={r} z={zl}: {} vs {cf}", pv.value);
        }
    }

    #[test]
    fn pv_zero_spectrum_is_zero() {
        let spec = BathSpectrum::tm_single_mode(0.0, 500.0, 1.0, [0.0, 1.0]);
        assert_eq!(rddi_pv_numeric(&spec, 400.0, PvOptions::default()).unwrap().value, 0.0);
    }

    #[test]
    fn pv_above_cutoff_matches_direct_excision() {
        // z = 0, one mode, ω_a above cutoff; compare with a plain symmetric
        // excision evaluated in ω.
        let (wc, wa) = (1.0, 1.5);
        let spec = BathSpectrum::tm_single_mode(1.0, wc, 1.0, [0.0, 0.0]);
        let opts = PvOptions { rotating_only: true, ..PvOptions::default() };
        let got = rddi_pv_numeric(&spec, wa, opts).unwrap().value;
        // G = 1/(2π q); substitute ω = wc cosh(θ) so G dω = dθ/(2π)
        // P∫ dθ/(2π (cosh θ - 1.5)) over θ ∈ (0, ∞); excise ±ε around θ0.
        let th0 = 1.5f64.acosh();
        let tol = Tolerance { abs: 1e-14, rel: 1e-13, max_intervals: 5000 };
        let f = |t: f64| 1.0 / (2.0 * PI * (t.cosh() - 1.5));
        let mut vals = Vec::new();
        for &eps in &[1e-3, 5e-4] {
            let a = quad::integrate(f, 0.0, th0 - eps, tol).unwrap().value;
            let b = quad::integrate(f, th0 + eps, th0 + 1.0, tol).unwrap().value;
            let c = quad::integrate_to_infinity(f, th0 + 1.0, tol).unwrap().value;
            vals.push(a + b + c);
        }
        // Richardson: the excision error is linear in ε
        let extrap = 2.0 * vals[1] - vals[0];
        assert!((got - extrap).abs() < 1e-6, "{got} vs {extrap}");
    }

    #[test]
    fn exchange_dynamics() {
        let d = 0.7;
        let q = PI / (4.0 * d);
        let grid = [0.0, q, 2.0 * q, 3.0 * q];
        let states = evolve_exchange(d, &grid).unwrap();
        assert_eq!(states[0].amp1, Complex64::new(1.0, 0.0));
        assert!((states[1].amp1.norm() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((states[1].amp2.norm() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(states[1].maximally_entangled && states[3].maximally_entangled);
        assert!(!states[2].maximally_entangled);
        assert!(states[2].amp1.norm() < 1e-15 && (states[2].amp2 - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        for s in &states {
            assert!((s.amp1.norm_sqr() + s.amp2.norm_sqr() - 1.0).abs() < 1e-15);
        }
        assert!(evolve_exchange(d, &[1.0, 0.0]).is_err());
    }
}
