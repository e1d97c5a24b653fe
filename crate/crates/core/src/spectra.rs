//! Guided-mode data and the two-point bath spectrum `G_{αα'}(ω)` of a
//! rectangular metallic waveguide or a fiber Bragg grating band edge.
//!
//! Every channel is stored in a form that makes the propagation phase linear:
//! with `ω = ω_c √(1 + q²)` one has `k_z Δz = β q`, `β = ω_c Δz / c`, and
//!
//! ```text
//! G_{αα'}(ω) dω = [A(q) cos(βq) + B(q) sin(βq)] dq.
//! ```
//!
//! The numerical principal-value integral and the discretized continuum both
//! work in `q`, which also removes the inverse-square-root singularity at the
//! cutoff.

use std::f64::consts::{PI, SQRT_2};

use crate::constants::{EPSILON_0, HBAR, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

/// Rectangular guide cross-section. `light_speed` sets the unit system:
/// [`SPEED_OF_LIGHT`] for SI lengths, `1.0` for lengths in `c/Γ_ref`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveguideGeometry {
    pub a: f64,
    pub b: f64,
    pub light_speed: f64,
}

impl WaveguideGeometry {
    /// SI geometry, dimensions in metres.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        Self::with_light_speed(a, b, SPEED_OF_LIGHT)
    }

    pub fn with_light_speed(a: f64, b: f64, light_speed: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && light_speed > 0.0) {
            return Err(Error::invalid(format!(
                "waveguide needs a > 0, b > 0 and c > 0 (got a={a}, b={b}, c={light_speed})"
            )));
        }
        Ok(WaveguideGeometry { a, b, light_speed })
    }

    pub fn area(&self) -> f64 {
        self.a * self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeFamily {
    TE,
    TM,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    pub family: ModeFamily,
    pub m: u32,
    pub n: u32,
}

impl ModeIndex {
    pub fn new(family: ModeFamily, m: u32, n: u32) -> Result<Self> {
        if m == 0 && n == 0 {
            return Err(Error::invalid("mode (0,0) does not exist"));
        }
        if family == ModeFamily::TM && (m == 0 || n == 0) {
            return Err(Error::invalid(format!("TM_{m}{n} has an identically zero mode function")));
        }
        Ok(ModeIndex { family, m, n })
    }

    pub fn tm(m: u32, n: u32) -> Result<Self> {
        Self::new(ModeFamily::TM, m, n)
    }

    pub fn te(m: u32, n: u32) -> Result<Self> {
        Self::new(ModeFamily::TE, m, n)
    }
}

/// One atom: transition frequency, real dipole vector and position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomSpec {
    pub omega_a: f64,
    pub dipole: [f64; 3],
    pub position: [f64; 3],
}

impl AtomSpec {
    pub fn validate(&self, geometry: &WaveguideGeometry) -> Result<()> {
        if !(self.omega_a > 0.0) {
            return Err(Error::invalid(format!("omega_a must be positive, got {}", self.omega_a)));
        }
        let [x, y, _] = self.position;
        if !(0.0..=geometry.a).contains(&x) || !(0.0..=geometry.b).contains(&y) {
            return Err(Error::invalid(format!(
                "atom at ({x}, {y}) lies outside the {}×{} cross-section",
                geometry.a, geometry.b
            )));
        }
        Ok(())
    }
}

/// Cutoff angular frequency `c √((mπ/a)² + (nπ/b)²)`.
pub fn cutoff_frequency(geometry: &WaveguideGeometry, m: u32, n: u32) -> Result<f64> {
    if m == 0 && n == 0 {
        return Err(Error::invalid("mode (0,0) has no cutoff"));
    }
    let kx = m as f64 * PI / geometry.a;
    let ky = n as f64 * PI / geometry.b;
    Ok(geometry.light_speed * kx.hypot(ky))
}

/// `∂k_z/∂ω` of mode `(m, n)` above its cutoff.
pub fn density_of_states(geometry: &WaveguideGeometry, m: u32, n: u32, omega: f64) -> Result<f64> {
    let wc = cutoff_frequency(geometry, m, n)?;
    if omega <= wc {
        return Err(Error::domain(format!("ω = {omega} is not above the cutoff {wc}: no propagating mode")));
    }
    let r = omega / wc;
    Ok(r / ((r * r - 1.0).sqrt() * geometry.light_speed))
}

/// Trig-weighted dipole projections onto the field of one transverse mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveDipoles {
    pub d_z: f64,
    pub d_tm: f64,
    pub d_te: f64,
}

pub fn effective_dipoles(geometry: &WaveguideGeometry, mode: ModeIndex, atom: &AtomSpec) -> EffectiveDipoles {
    let kx = mode.m as f64 * PI / geometry.a;
    let ky = mode.n as f64 * PI / geometry.b;
    let kt = kx.hypot(ky);
    let [dx, dy, dz] = atom.dipole;
    let [x, y, _] = atom.position;
    let (sx, cx) = (kx * x).sin_cos();
    let (sy, cy) = (ky * y).sin_cos();
    EffectiveDipoles {
        d_z: dz * sx * sy,
        d_tm: dx * (kx / kt) * cx * sy + dy * (ky / kt) * sx * cy,
        d_te: -dx * (ky / kt) * cx * sy + dy * (kx / kt) * sx * cy,
    }
}

/// Per-mode spectral weights, all in rate units.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    /// Exact waveguide mode. `G = (1/2πq)[(z + t q²) cos + x q sin + e (1+q²) cos]`,
    /// `q = √((ω/ω_c)² - 1)`.
    Waveguide { z: [[f64; 2]; 2], t: [[f64; 2]; 2], x: [[f64; 2]; 2], e: [[f64; 2]; 2] },
    /// `(Γ/2π) cos(k_z Δz) / (√2 √(ω/ω_c - 1))`.
    NearCutoff { gamma: f64 },
}

/// One cutoff and its contribution to `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub cutoff: f64,
    pub light_speed: f64,
    z_pos: [f64; 2],
    shape: Shape,
}

impl Channel {
    /// Phase slope `β` with `k_z (z_α - z_α') = β q`.
    pub fn beta(&self, alpha: usize, alpha2: usize) -> f64 {
        self.cutoff * (self.z_pos[alpha] - self.z_pos[alpha2]) / self.light_speed
    }

    /// `(A(q), B(q))` with `G dω = [A cos(βq) + B sin(βq)] dq`.
    pub fn q_weights(&self, alpha: usize, alpha2: usize, q: f64) -> (f64, f64) {
        let s = (1.0 + q * q).sqrt();
        match self.shape {
            Shape::Waveguide { z, t, x, e } => {
                let pre = self.cutoff / (2.0 * PI * s);
                let a = pre * (z[alpha][alpha2] + t[alpha][alpha2] * q * q + e[alpha][alpha2] * s * s);
                let b = pre * x[alpha][alpha2] * q;
                (a, b)
            }
            Shape::NearCutoff { gamma } => {
                // dω = ω_c q/s dq and √(s - 1) = q/√(s + 1)
                let a = gamma / (2.0 * PI) * self.cutoff * (s + 1.0).sqrt() / (SQRT_2 * s);
                (a, 0.0)
            }
        }
    }

    /// `G_{αα'}(ω)` of this channel alone.
    pub fn eval(&self, alpha: usize, alpha2: usize, omega: f64) -> f64 {
        if omega <= self.cutoff {
            return 0.0;
        }
        let r = omega / self.cutoff;
        let q = (r * r - 1.0).sqrt();
        let phase = self.beta(alpha, alpha2) * q;
        match self.shape {
            Shape::Waveguide { z, t, x, e } => {
                let (s, c) = phase.sin_cos();
                let tm = (z[alpha][alpha2] + t[alpha][alpha2] * q * q) * c + x[alpha][alpha2] * q * s;
                let te = e[alpha][alpha2] * r * r * c;
                (tm + te) / (2.0 * PI * q)
            }
            Shape::NearCutoff { gamma } => near_cutoff_spectrum(gamma, self.cutoff, 0.0, omega) * phase.cos(),
        }
    }

    /// For exact waveguide channels, `(z + e, t + e, x)` such that
    /// `A(q) = ω_c/(2π√(1+q²)) [(z + e) + (t + e) q²]` and
    /// `B(q) = ω_c/(2π√(1+q²)) x q`.
    pub fn polynomial_weights(&self, alpha: usize, alpha2: usize) -> Option<(f64, f64, f64)> {
        match self.shape {
            Shape::Waveguide { z, t, x, e } => Some((
                z[alpha][alpha2] + e[alpha][alpha2],
                t[alpha][alpha2] + e[alpha][alpha2],
                x[alpha][alpha2],
            )),
            Shape::NearCutoff { .. } => None,
        }
    }

    /// True when this channel carries only z-dipole TM weight (or is a
    /// near-cutoff model), i.e. `G_{αα} = |g_α|²` can be factorised per atom.
    pub fn is_z_only(&self) -> bool {
        match self.shape {
            Shape::Waveguide { t, x, e, .. } => {
                t.iter().flatten().chain(x.iter().flatten()).chain(e.iter().flatten()).all(|&v| v == 0.0)
            }
            Shape::NearCutoff { .. } => true,
        }
    }

    /// Single-atom rate scale `Γ_αα` of a z-only channel.
    pub fn rate(&self, alpha: usize) -> f64 {
        match self.shape {
            Shape::Waveguide { z, .. } => z[alpha][alpha],
            Shape::NearCutoff { gamma } => gamma,
        }
    }

    pub fn is_near_cutoff(&self) -> bool {
        matches!(self.shape, Shape::NearCutoff { .. })
    }

    /// Longitudinal positions of the two atoms.
    pub fn positions(&self) -> [f64; 2] {
        self.z_pos
    }
}

/// Two-atom bath spectrum as a sum over guided-mode channels.
#[derive(Debug, Clone, PartialEq)]
pub struct BathSpectrum {
    channels: Vec<Channel>,
}

impl BathSpectrum {
    pub fn from_channels(channels: Vec<Channel>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::invalid("bath spectrum needs at least one mode"));
        }
        Ok(BathSpectrum { channels })
    }

    /// Exact single TM mode for z-dipoles with rate `Γ` at both atoms.
    pub fn tm_single_mode(gamma: f64, cutoff: f64, light_speed: f64, z: [f64; 2]) -> Self {
        let g = [[gamma; 2]; 2];
        let zero = [[0.0; 2]; 2];
        BathSpectrum {
            channels: vec![Channel {
                cutoff,
                light_speed,
                z_pos: z,
                shape: Shape::Waveguide { z: g, t: zero, x: zero, e: zero },
            }],
        }
    }

    /// Single mode with the near-cutoff square-root denominator.
    pub fn near_cutoff(gamma: f64, cutoff: f64, light_speed: f64, z: [f64; 2]) -> Self {
        BathSpectrum {
            channels: vec![Channel { cutoff, light_speed, z_pos: z, shape: Shape::NearCutoff { gamma } }],
        }
    }

    /// Fiber Bragg grating band edge seen by atoms at a common position.
    pub fn band_edge(gamma_u: f64, omega_u: f64) -> Self {
        Self::near_cutoff(gamma_u, omega_u, 1.0, [0.0, 0.0])
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn cutoffs(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.cutoff).collect()
    }

    pub fn lowest_cutoff(&self) -> f64 {
        self.channels.iter().map(|c| c.cutoff).fold(f64::INFINITY, f64::min)
    }

    /// `G_{αα'}(ω)`, atoms indexed 0 and 1.
    pub fn eval(&self, alpha: usize, alpha2: usize, omega: f64) -> f64 {
        self.channels.iter().map(|c| c.eval(alpha, alpha2, omega)).sum()
    }
}

/// Full TM + TE spectrum of the listed modes for two atoms in an SI guide.
/// Dipoles in C·m; the rate scale of each mode is `Γ_mn = 4 ω_mn d̃ d̃' / (ε0 ħ c a b)`.
pub fn bath_spectrum(
    geometry: &WaveguideGeometry,
    atom1: &AtomSpec,
    atom2: &AtomSpec,
    modes: &[ModeIndex],
) -> Result<BathSpectrum> {
    atom1.validate(geometry)?;
    atom2.validate(geometry)?;
    if modes.is_empty() {
        return Err(Error::invalid("mode list is empty"));
    }
    let mut channels = Vec::with_capacity(modes.len());
    for &mode in modes {
        let wc = cutoff_frequency(geometry, mode.m, mode.n)?;
        let scale = 4.0 * wc / (EPSILON_0 * HBAR * geometry.light_speed * geometry.area());
        let d = [effective_dipoles(geometry, mode, atom1), effective_dipoles(geometry, mode, atom2)];
        let mut z = [[0.0; 2]; 2];
        let mut t = [[0.0; 2]; 2];
        let mut x = [[0.0; 2]; 2];
        let mut e = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                match mode.family {
                    ModeFamily::TM => {
                        z[i][j] = scale * d[i].d_z * d[j].d_z;
                        t[i][j] = scale * d[i].d_tm * d[j].d_tm;
                        x[i][j] = scale * (d[i].d_z * d[j].d_tm - d[i].d_tm * d[j].d_z);
                    }
                    ModeFamily::TE => e[i][j] = scale * d[i].d_te * d[j].d_te,
                }
            }
        }
        channels.push(Channel {
            cutoff: wc,
            light_speed: geometry.light_speed,
            z_pos: [atom1.position[2], atom2.position[2]],
            shape: Shape::Waveguide { z, t, x, e },
        });
    }
    BathSpectrum::from_channels(channels)
}

/// z-dipole TM spectrum with `√((ω/ω_c)²-1) ≈ √2 √(ω/ω_c - 1)`. Zero at and
/// below the cutoff. `phase` is `k_z z12`, pass `0.0` for coincident atoms.
pub fn near_cutoff_spectrum(gamma: f64, cutoff: f64, phase: f64, omega: f64) -> f64 {
    if omega <= cutoff {
        return 0.0;
    }
    gamma / (2.0 * PI) * phase.cos() / (SQRT_2 * (omega / cutoff - 1.0).sqrt())
}

/// Exact single-mode z-dipole spectrum `(Γ/2π) cos(k_z z12) / √((ω/ω_c)² - 1)`.
pub fn tm_spectrum(gamma: f64, cutoff: f64, light_speed: f64, z12: f64, omega: f64) -> f64 {
    if omega <= cutoff {
        return 0.0;
    }
    let kz = (omega * omega - cutoff * cutoff).sqrt() / light_speed;
    let r = omega / cutoff;
    gamma / (2.0 * PI) * (kz * z12).cos() / (r * r - 1.0).sqrt()
}

/// Fiber Bragg grating: period `Λ`, mean index `n̄`, contrast `Δn`, and the
/// near-edge emission rate `Γ_u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbgParams {
    pub period: f64,
    pub n_bar: f64,
    pub delta_n: f64,
    pub gamma_u: f64,
}

impl FbgParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_n > 0.0 && self.n_bar > 1.0 && self.period > 0.0) {
            return Err(Error::invalid(format!(
                "grating needs Δn > 0, n̄ > 1, Λ > 0 (got Δn={}, n̄={}, Λ={})",
                self.delta_n, self.n_bar, self.period
            )));
        }
        Ok(())
    }
}

/// Band-edge parameters `ω ≈ ω_u + B (k_z - k_B)²` of a Bragg grating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandEdge {
    pub omega_b: f64,
    pub omega_u: f64,
    pub curvature: f64,
    pub k_b: f64,
}

impl BandEdge {
    /// Group velocity `∂ω/∂k_z` of the quadratic band-edge dispersion.
    pub fn group_velocity(&self, kz: f64) -> f64 {
        2.0 * self.curvature * (kz - self.k_b)
    }
}

/// Band edge of a grating in SI units.
pub fn fbg_map(period: f64, n_bar: f64, delta_n: f64) -> Result<BandEdge> {
    FbgParams { period, n_bar, delta_n, gamma_u: 1.0 }.validate()?;
    let k_b = PI / (period * n_bar);
    let omega_b = SPEED_OF_LIGHT * k_b;
    let v = SPEED_OF_LIGHT / n_bar;
    Ok(BandEdge {
        omega_b,
        omega_u: omega_b * (1.0 + 0.5 * delta_n / n_bar),
        curvature: v * v * (n_bar / delta_n) / omega_b,
        k_b,
    })
}

/// Band-edge spectrum; identical to [`near_cutoff_spectrum`] with `(ω_u, Γ_u)`.
pub fn fbg_spectrum(params: &FbgParams, omega: f64) -> Result<f64> {
    params.validate()?;
    let edge = fbg_map(params.period, params.n_bar, params.delta_n)?;
    Ok(near_cutoff_spectrum(params.gamma_u, edge.omega_u, 0.0, omega))
}

/// Modes kept for a given transition and separation: ascending cutoff, stop
/// once `ω_mn > 50 ω_a`, and drop modes whose evanescent factor
/// `exp(-z12/ξ_mn)` is below `1e-18`.
pub fn truncated_modes(geometry: &WaveguideGeometry, omega_a: f64, z12: f64, with_te: bool) -> Result<Vec<ModeIndex>> {
    let cap = 50.0 * omega_a;
    let mmax = (cap * geometry.a / (PI * geometry.light_speed)).floor() as u32 + 1;
    let nmax = (cap * geometry.b / (PI * geometry.light_speed)).floor() as u32 + 1;
    let mut modes = Vec::new();
    for m in 0..=mmax {
        for n in 0..=nmax {
            if m == 0 && n == 0 {
                continue;
            }
            let wc = cutoff_frequency(geometry, m, n)?;
            if wc > cap {
                continue;
            }
            if omega_a < wc {
                let kappa = (wc * wc - omega_a * omega_a).sqrt() / geometry.light_speed;
                if (-kappa * z12).exp() < 1e-18 {
                    continue;
                }
            }
            if m >= 1 && n >= 1 {
                modes.push(ModeIndex::tm(m, n)?);
            }
            if with_te {
                modes.push(ModeIndex::te(m, n)?);
            }
        }
    }
    modes.sort_by(|p, q| {
        let wp = cutoff_frequency(geometry, p.m, p.n).unwrap_or(f64::INFINITY);
        let wq = cutoff_frequency(geometry, q.m, q.n).unwrap_or(f64::INFINITY);
        wp.total_cmp(&wq)
    });
    Ok(modes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(a: f64) -> WaveguideGeometry {
        WaveguideGeometry::new(a, a).unwrap()
    }

    #[test]
    fn cutoff_examples() {
        let g = square(6e-3);
        let w11 = cutoff_frequency(&g, 1, 1).unwrap();
        assert!((w11 - SPEED_OF_LIGHT * PI * SQRT_2 / 6e-3).abs() < 1e-3);
        assert!((w11 / 2.221e11 - 1.0).abs() < 1e-3);
        let big = WaveguideGeometry::new(12e-3, 12e-3).unwrap();
        assert_eq!(cutoff_frequency(&big, 1, 1).unwrap(), 0.5 * w11);
        assert!(cutoff_frequency(&g, 0, 0).is_err());
    }

    #[test]
    fn density_of_states_limits() {
        let g = WaveguideGeometry::with_light_speed(1.0, 1.0, 1.0).unwrap();
        let wc = cutoff_frequency(&g, 1, 1).unwrap();
        assert!((density_of_states(&g, 1, 1, wc * SQRT_2).unwrap() - SQRT_2).abs() < 1e-14);
        assert!((density_of_states(&g, 1, 1, wc * 1e6).unwrap() - 1.0).abs() < 1e-9);
        let eps = 1e-8;
        let d = density_of_states(&g, 1, 1, wc * (1.0 + eps)).unwrap();
        assert!((d * (2.0 * eps).sqrt() - 1.0).abs() < 1e-6);
        assert!(matches!(density_of_states(&g, 1, 1, wc), Err(Error::Domain(_))));
    }

    #[test]
    fn effective_dipole_examples() {
        let a = 2.0;
        let g = WaveguideGeometry::with_light_speed(a, a, 1.0).unwrap();
        let mode = ModeIndex::tm(1, 1).unwrap();
        let centre = AtomSpec { omega_a: 1.0, dipole: [0.0, 0.0, 1.5], position: [1.0, 1.0, 0.0] };
        let d = effective_dipoles(&g, mode, &centre);
        assert!((d.d_z - 1.5).abs() < 1e-15 && d.d_tm.abs() < 1e-15 && d.d_te.abs() < 1e-15);

        let wall = AtomSpec { omega_a: 1.0, dipole: [0.0, 0.0, 1.0], position: [0.0, 0.7, 0.0] };
        assert_eq!(effective_dipoles(&g, mode, &wall).d_z, 0.0);

        let xdip = AtomSpec { omega_a: 1.0, dipole: [1.0, 0.0, 0.0], position: [a / 4.0, a / 2.0, 0.0] };
        let d = effective_dipoles(&g, mode, &xdip);
        let w11 = cutoff_frequency(&g, 1, 1).unwrap();
        let expected = (PI / a) / w11 * (PI / 4.0).cos();
        assert!((d.d_tm - expected).abs() < 1e-15);
    }

    #[test]
    fn tm11_spectrum_at_sqrt2_cutoff() {
        let gamma = 3.0;
        let spec = BathSpectrum::tm_single_mode(gamma, 10.0, 1.0, [0.0, 0.0]);
        let w = 10.0 * SQRT_2;
        assert!((spec.eval(0, 0, w) - gamma / (2.0 * PI)).abs() < 1e-14);
        assert_eq!(spec.eval(0, 1, w), spec.eval(0, 0, w));
        assert_eq!(spec.eval(0, 0, 9.99), 0.0);
    }

    #[test]
    fn si_spectrum_reduces_to_tm_form_for_z_dipoles() {
        let g = square(6e-3);
        let d = 1e-29;
        let a1 = AtomSpec { omega_a: 2e11, dipole: [0.0, 0.0, d], position: [3e-3, 3e-3, 0.0] };
        let a2 = AtomSpec { position: [3e-3, 3e-3, 0.01], ..a1 };
        let spec = bath_spectrum(&g, &a1, &a2, &[ModeIndex::tm(1, 1).unwrap()]).unwrap();
        let wc = cutoff_frequency(&g, 1, 1).unwrap();
        let gamma = 4.0 * wc * d * d / (EPSILON_0 * HBAR * SPEED_OF_LIGHT * g.area());
        for &r in &[1.01, 1.3, 2.0] {
            let w = r * wc;
            let direct = tm_spectrum(gamma, wc, SPEED_OF_LIGHT, 0.01, w);
            assert!((spec.eval(0, 1, w) - direct).abs() <= 1e-12 * direct.abs().max(gamma / 100.0));
        }
    }

    #[test]
    fn near_cutoff_approximation_quality() {
        let (gamma, wc) = (1.0, 500.0);
        let exact = tm_spectrum(gamma, wc, 1.0, 0.0, 1.1 * wc);
        let approx = near_cutoff_spectrum(gamma, wc, 0.0, 1.1 * wc);
        let dev = (approx / exact - 1.0).abs();
        assert!((dev - 0.0247).abs() < 1e-3, "deviation {dev}");
        let r = tm_spectrum(gamma, wc, 1.0, 0.0, wc * (1.0 + 1e-9)) / near_cutoff_spectrum(gamma, wc, 0.0, wc * (1.0 + 1e-9));
        assert!((r - 1.0).abs() < 1e-8);
    }

    #[test]
    fn q_weights_match_direct_evaluation() {
        // G(ω) dω/dq reconstructed from the q form, general dipoles.
        let g = WaveguideGeometry::with_light_speed(1.0, 0.7, 1.0).unwrap();
        let a1 = AtomSpec { omega_a: 3.0, dipole: [0.3, -0.5, 0.8], position: [0.31, 0.22, 0.0] };
        let a2 = AtomSpec { omega_a: 3.0, dipole: [-0.4, 0.2, 0.6], position: [0.6, 0.41, 0.37] };
        let modes = [ModeIndex::tm(1, 1).unwrap(), ModeIndex::te(1, 0).unwrap(), ModeIndex::te(1, 1).unwrap()];
        let spec = bath_spectrum(&g, &a1, &a2, &modes).unwrap();
        for ch in spec.channels() {
            for &q in &[0.05_f64, 0.7, 2.5] {
                let s = (1.0 + q * q).sqrt();
                let w = ch.cutoff * s;
                let dwdq = ch.cutoff * q / s;
                for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let (a, b) = ch.q_weights(i, j, q);
                    let beta = ch.beta(i, j);
                    let from_q = a * (beta * q).cos() + b * (beta * q).sin();
                    let direct = ch.eval(i, j, w) * dwdq;
                    assert!((from_q - direct).abs() < 1e-12 * (1.0 + direct.abs()));
                }
            }
        }
    }

    #[test]
    fn band_edge_relations() {
        let edge = fbg_map(266e-9, 1.45, 1e-4).unwrap();
        assert!((edge.k_b - PI / (266e-9 * 1.45)).abs() < 1e-3);
        let small = fbg_map(266e-9, 1.45, 1e-9).unwrap();
        assert!((small.omega_u / small.omega_b - 1.0).abs() < 1e-9);
        assert!(small.curvature > 1e4 * edge.curvature);
        let r = fbg_map(266e-9, 1.45, 0.0145).unwrap();
        assert!((r.omega_u / r.omega_b - 1.005).abs() < 1e-12);
        assert_eq!(edge.group_velocity(edge.k_b), 0.0);
    }

    #[test]
    fn fbg_matches_near_cutoff_bitwise() {
        let p = FbgParams { period: 266e-9, n_bar: 1.45, delta_n: 1e-3, gamma_u: 3.8e7 };
        let edge = fbg_map(p.period, p.n_bar, p.delta_n).unwrap();
        for &r in &[0.5, 1.0, 1.000001, 1.2, 2.0] {
            let w = r * edge.omega_u;
            assert_eq!(fbg_spectrum(&p, w).unwrap(), near_cutoff_spectrum(p.gamma_u, edge.omega_u, 0.0, w));
        }
    }

    #[test]
    fn mode_truncation() {
        let g = WaveguideGeometry::with_light_speed(1.0, 1.0, 1.0).unwrap();
        let w11 = cutoff_frequency(&g, 1, 1).unwrap();
        let far = truncated_modes(&g, 0.9 * w11, 15.0, false).unwrap();
        assert_eq!(far, vec![ModeIndex::tm(1, 1).unwrap()]);
        let near = truncated_modes(&g, 0.9 * w11, 0.0, true).unwrap();
        assert!(near.len() > 100);
        assert_eq!(near[0].m + near[0].n, 1);
    }

    #[test]
    fn invalid_modes_rejected() {
        assert!(ModeIndex::tm(1, 0).is_err());
        assert!(ModeIndex::te(0, 0).is_err());
        assert!(ModeIndex::te(0, 1).is_ok());
        let g = square(1e-2);
        assert!(bath_spectrum(&g, &AtomSpec { omega_a: 1.0, dipole: [0.0; 3], position: [0.0; 3] }, &AtomSpec { omega_a: 1.0, dipole: [0.0; 3], position: [0.0; 3] }, &[]).is_err());
    }
}
