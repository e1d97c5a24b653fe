//! Scenario files, built-in presets, SI conversions, and run orchestration.

pub mod config;
pub mod presets;
pub mod realization;
pub mod run;

pub use config::{parse, serialize, BathConfig, Model, ScenarioConfig};
pub use presets::{list_presets, preset, PresetInfo, PRESET_NAMES};
pub use realization::{dipole_from_atomic_units, free_space_rate, ohmic_loss_rate};
pub use run::{execute, run, write_outputs, RunReport, SweepPoint};
