//! Phenomenological source, routing, element and detector simulator.

pub mod config;
pub mod rate;
pub mod simulate;

pub use config::{
    DetectorConfig, Layout, LayoutConfig, LayoutKind, Polarization, SourceConfig,
    CALIBRATED_JITTER_SD,
};
pub use rate::{
    expected_coincidence_rate, expected_g2_zero, expected_pair_rate, path_transmission,
};
pub use simulate::{simulate_run, SimulationOutput, SimulationTruth};
