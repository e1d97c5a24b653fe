//! CODATA SI constants used at the SI boundary.

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Vacuum permeability, H/m.
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Bohr radius, m.
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
