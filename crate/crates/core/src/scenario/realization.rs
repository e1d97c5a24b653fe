//! SI-unit formulas for physical realizations.

use std::f64::consts::PI;

use crate::constants::{BOHR_RADIUS, ELEMENTARY_CHARGE, EPSILON_0, HBAR, MU_0, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::spectra::WaveguideGeometry;

/// `d = n e a0` in C·m.
pub fn dipole_from_atomic_units(n: f64) -> f64 {
    n * ELEMENTARY_CHARGE * BOHR_RADIUS
}

/// Free-space spontaneous emission rate `ω³ d² / (3π ε0 ħ c³)` in s⁻¹.
pub fn free_space_rate(omega_a: f64, dipole: f64) -> Result<f64> {
    if !(omega_a > 0.0 && dipole > 0.0) {
        return Err(Error::invalid(format!("need ω_a > 0 and d > 0, got {omega_a} and {dipole}")));
    }
    Ok(omega_a.powi(3) * dipole * dipole / (3.0 * PI * EPSILON_0 * HBAR * SPEED_OF_LIGHT.powi(3)))
}

/// Ohmic wall-loss rate of TM mode `(m, n)` for surface resistance `R_s` (Ω):
/// `2/((mb/(na))² + 1) R_s/(μ0 b) + 2/((na/(mb))² + 1) R_s/(μ0 a)`.
pub fn ohmic_loss_rate(geometry: &WaveguideGeometry, m: u32, n: u32, surface_resistance: f64) -> Result<f64> {
    if m == 0 || n == 0 {
        return Err(Error::invalid(format!("loss formula needs m, n ≥ 1, got ({m}, {n})")));
    }
    if !(surface_resistance > 0.0) {
        return Err(Error::invalid(format!("surface resistance must be positive, got {surface_resistance}")));
    }
    let (a, b) = (geometry.a, geometry.b);
    let (m, n) = (m as f64, n as f64);
    let rb = (m * b / (n * a)).powi(2);
    let ra = (n * a / (m * b)).powi(2);
    Ok(2.0 / (rb + 1.0) * surface_resistance / (MU_0 * b) + 2.0 / (ra + 1.0) * surface_resistance / (MU_0 * a))
}
