//! Built-in scenarios for the figures and the two physical realizations.
//!
//! Figure presets are dimensionless: rates in units of `Γ`, `c = 1`, and the
//! separation given in transition wavelengths `λ_a = 2π/ω_a`.

use std::f64::consts::PI;

use super::config::{
    BathConfig, GridConfig, LossConfig, Model, OutputConfig, RealizationConfig, ScenarioConfig, SweepConfig,
};
use super::realization::{dipole_from_atomic_units, free_space_rate};
use crate::constants::SPEED_OF_LIGHT;
use crate::error::{Error, Result};
use crate::spectra::AtomSpec;

/// Dimensionless summary shown by `list-presets`.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub cutoff_over_gamma: f64,
    pub detuning_over_gamma: f64,
    pub z_over_lambda: f64,
}

pub const PRESET_NAMES: [&str; 7] = ["fig1b", "fig2a", "fig2b_sweep", "fig2c_mwg", "fig2c_fbg", "rydberg_mwg", "rb_d2_fbg"];

fn atoms(omega_a: f64, z_over_lambda: f64) -> [AtomSpec; 2] {
    let z = z_over_lambda * 2.0 * PI / omega_a;
    [
        AtomSpec { omega_a, dipole: [0.0, 0.0, 1.0], position: [0.0; 3] },
        AtomSpec { omega_a, dipole: [0.0, 0.0, 1.0], position: [0.0, 0.0, z] },
    ]
}

fn figure(
    name: &str,
    model: Model,
    bath: BathConfig,
    cutoff: f64,
    detuning: f64,
    z_over_lambda: f64,
    grid: GridConfig,
) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        model,
        bath,
        atoms: atoms(cutoff + detuning, z_over_lambda),
        grid,
        sweep: None,
        realization: None,
        loss: None,
        output: OutputConfig::default(),
    }
}

fn tm(cutoff: f64) -> BathConfig {
    BathConfig::TmMode { gamma: 1.0, cutoff, light_speed: 1.0 }
}

fn edge(cutoff: f64) -> BathConfig {
    BathConfig::NearCutoff { gamma: 1.0, cutoff, light_speed: 1.0 }
}

/// Rydberg transition in a metallic guide: `ω_a = 2π × 51.1 GHz`,
/// `d = 1250 e a0`, reference rate 14.7 s⁻¹, walls with `R_s = 75 nΩ`.
fn rydberg_realization() -> RealizationConfig {
    RealizationConfig {
        omega_a: 2.0 * PI * 51.1e9,
        dipole_ea0: Some(1250.0),
        gamma: 14.7,
        quoted_cutoff: 2.17e10,
        quoted_detuning: -2e4,
        quoted_z_over_lambda: 100.0,
    }
}

/// Rb D2 line at 780 nm with natural linewidth `2π × 6.07 MHz`.
fn rb_realization() -> RealizationConfig {
    RealizationConfig {
        omega_a: 2.0 * PI * SPEED_OF_LIGHT / 780e-9,
        dipole_ea0: None,
        gamma: 2.0 * PI * 6.07e6,
        quoted_cutoff: 6e7,
        quoted_detuning: -1500.0,
        quoted_z_over_lambda: 20.0,
    }
}

/// Built-in scenario by name.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let grid = GridConfig::default();
    let cfg = match name {
        "fig1b" => figure(
            name,
            Model::All,
            tm(500.0),
            500.0,
            -100.0,
            0.5,
            GridConfig { t_max: 40.0, n_steps: 400, ..grid },
        ),
        "fig2a" => figure(name, Model::All, tm(500.0), 500.0, -10.0, 1.0, GridConfig { t_max: 7.0, n_steps: 1400, n_modes: 2500, ..grid }),
        "fig2b_sweep" => {
            let mut c = figure(name, Model::Simulate, tm(500.0), 500.0, -100.0, 0.5, GridConfig { n_steps: 400, ..grid });
            c.sweep = Some(SweepConfig {
                detunings: vec![-100.0, -75.0, -50.0, -30.0, -20.0, -10.0, -5.0],
                z_over_lambda: 0.5,
                periods: 2.5,
            });
            c
        }
        // Three exchange periods, so the envelope estimator settles.
        "fig2c_mwg" => figure(
            name,
            Model::NonMarkov,
            edge(2.17e10),
            2.17e10,
            -2e4,
            100.0,
            GridConfig { t_max: 0.05, n_steps: 50_000, output_stride: 10, ..grid },
        ),
        "fig2c_fbg" => figure(
            name,
            Model::NonMarkov,
            edge(6e7),
            6e7,
            -1500.0,
            20.0,
            GridConfig { t_max: 0.3, n_steps: 30_000, output_stride: 10, ..grid },
        ),
        "rydberg_mwg" => {
            let mut c = preset("fig2c_mwg")?;
            c.name = name.to_string();
            c.realization = Some(rydberg_realization());
            c.loss = Some(LossConfig { a: 6e-3, b: 6e-3, m: 1, n: 1, surface_resistance: 75e-9 });
            c
        }
        "rb_d2_fbg" => {
            let mut c = preset("fig2c_fbg")?;
            c.name = name.to_string();
            c.realization = Some(rb_realization());
            c
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown preset '{other}'; available: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(cfg)
}

/// Table of presets with their dimensionless parameters.
pub fn list_presets() -> Vec<PresetInfo> {
    let describe = |name: &'static str, description: &'static str, c: f64, w: f64, z: f64| PresetInfo {
        name,
        description,
        cutoff_over_gamma: c,
        detuning_over_gamma: w,
        z_over_lambda: z,
    };
    vec![
        describe("fig1b", "Markov regime: full excitation exchange", 500.0, -100.0, 0.5),
        describe("fig2a", "near cutoff: damped exchange, incomplete decay", 500.0, -10.0, 1.0),
        describe("fig2b_sweep", "detuning sweep -100..-5: RDDI strength vs concurrence", 500.0, -100.0, 0.5),
        describe("fig2c_mwg", "metallic guide, long distance, analytic only", 2.17e10, -2e4, 100.0),
        describe("fig2c_fbg", "fiber Bragg grating band edge, analytic only", 6e7, -1500.0, 20.0),
        describe("rydberg_mwg", "fig2c_mwg with SI Rydberg inputs and wall loss", 2.17e10, -2e4, 100.0),
        describe("rb_d2_fbg", "fig2c_fbg with SI Rb D2 inputs", 6e7, -1500.0, 20.0),
    ]
}

/// Dimensionless `(ω_a/Γ)` implied by the SI inputs, and the formula value of
/// the free-space rate when a dipole is given.
pub fn derived_ratio(r: &RealizationConfig) -> Result<(f64, Option<f64>)> {
    let formula = r.dipole_ea0.map(|d| free_space_rate(r.omega_a, dipole_from_atomic_units(d))).transpose()?;
    Ok((r.omega_a / r.gamma, formula))
}
