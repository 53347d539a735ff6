use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mmi::TransferMatrix;
use crate::temporal::CoherenceModel;

/// Frequency jitter reproducing a 70.8 % integrated splitter visibility for
/// 300 ns sin^2 photons (rad/ns).
pub const CALIBRATED_JITTER_SD: f64 = 0.012752;

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(name, format!("{p} is not a probability")));
    }
    Ok(())
}

/// Photon source driven in attempts during atom transits.
///
/// Defaults are the calibrated operating point. `two_photon_prob`,
/// `dark_state_prob`, `routing_error_prob` and `atom_transit_rate` are
/// fitted, not measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    /// Spacing of driving attempts (ns).
    pub duty_cycle: f64,
    /// Photon duration (ns).
    pub pulse_length: f64,
    pub pulses_per_transit: u32,
    /// Probability that an attempt yields exactly one photon.
    pub emission_prob: f64,
    /// Probability that an attempt yields two photons.
    pub two_photon_prob: f64,
    /// Probability of falling into the dark state after an emission.
    pub dark_state_prob: f64,
    pub routing_error_prob: f64,
    /// Mean atom transits per second.
    pub atom_transit_rate: f64,
    /// Detected photons per attempt (emission, transmission and detection).
    pub overall_efficiency: f64,
    pub coherence: CoherenceModel,
    /// Envelope sampling step (ns).
    pub envelope_dt: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            duty_cycle: 664.0,
            pulse_length: 300.0,
            pulses_per_transit: 100,
            emission_prob: 0.5,
            two_photon_prob: 0.00899,
            dark_state_prob: 0.05,
            routing_error_prob: 0.05,
            atom_transit_rate: 1.0,
            overall_efficiency: 0.094,
            coherence: CoherenceModel::GaussianJitter {
                jitter_sd: CALIBRATED_JITTER_SD,
            },
            envelope_dt: 1.0,
        }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        check_probability("emission_prob", self.emission_prob)?;
        check_probability("two_photon_prob", self.two_photon_prob)?;
        check_probability("dark_state_prob", self.dark_state_prob)?;
        check_probability("routing_error_prob", self.routing_error_prob)?;
        check_probability("overall_efficiency", self.overall_efficiency)?;
        if self.emission_prob + self.two_photon_prob > 1.0 {
            return Err(Error::invalid(
                "two_photon_prob",
                "emission_prob + two_photon_prob exceeds 1",
            ));
        }
        if !(self.pulse_length > 0.0) || !(self.duty_cycle > self.pulse_length) {
            return Err(Error::invalid(
                "duty_cycle",
                format!(
                    "{} ns must exceed the pulse length {} ns",
                    self.duty_cycle, self.pulse_length
                ),
            ));
        }
        if !(self.atom_transit_rate >= 0.0) || !self.atom_transit_rate.is_finite() {
            return Err(Error::invalid(
                "atom_transit_rate",
                "must be finite and non-negative",
            ));
        }
        if !(self.envelope_dt > 0.0) || self.envelope_dt > self.pulse_length / 50.0 {
            return Err(Error::invalid(
                "envelope_dt",
                "must be positive and at most pulse_length / 50",
            ));
        }
        self.coherence.validate()
    }

    /// Mean photon number per attempt while the atom is active.
    pub fn mean_photon_number(&self) -> f64 {
        self.emission_prob + 2.0 * self.two_photon_prob
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub efficiency: f64,
    /// Timing jitter standard deviation (ps).
    pub jitter_sd: f64,
    /// Non-paralyzable recovery time (ns).
    pub dead_time: f64,
    /// Dark counts per hour and channel.
    pub dark_rate: f64,
    /// Time-to-digital converter resolution (ps).
    pub tick: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            efficiency: 0.85,
            jitter_sd: 60.0,
            dead_time: 50.0,
            dark_rate: 30.0,
            tick: 81.0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        check_probability("efficiency", self.efficiency)?;
        if !(self.jitter_sd >= 0.0) || !(self.dead_time >= 0.0) || !(self.dark_rate >= 0.0) {
            return Err(Error::invalid(
                "detectors",
                "jitter, dead time and dark rate must be non-negative",
            ));
        }
        if !(self.tick > 0.0) || (self.tick * 1000.0).fract().abs() > 1e-9 {
            return Err(Error::invalid(
                "tick",
                format!("{} ps must be a positive whole number of fs", self.tick),
            ));
        }
        Ok(())
    }

    pub fn tick_fs(&self) -> u64 {
        (self.tick * 1000.0).round() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutKind {
    /// Source photons split at random onto two detectors, no routing.
    Hbt,
    /// Delay-line path to channel 0 and direct path to channel 1.
    Routed,
    HomSplitter,
    Mmi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    Parallel,
    /// Photons made fully distinguishable before the element.
    Orthogonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub kind: LayoutKind,
    /// Fibre delay of the σ+ path (ns).
    pub delay_line: f64,
    /// Element inputs (0-based) fed by the delayed and the direct path.
    pub input_mapping: [usize; 2],
    pub polarization: Polarization,
    /// Survival probability through the interference element.
    pub element_transmission: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            kind: LayoutKind::Mmi,
            delay_line: 664.0,
            input_mapping: [0, 1],
            polarization: Polarization::Parallel,
            element_transmission: 1.0,
        }
    }
}

/// Validated layout with its interference matrix.
#[derive(Debug, Clone)]
pub struct Layout {
    pub config: LayoutConfig,
    pub matrix: TransferMatrix,
}

impl Layout {
    /// `matrix` is used by the MMI kind; the splitter kind always uses a
    /// balanced splitter and the other kinds ignore it.
    pub fn new(config: LayoutConfig, matrix: TransferMatrix) -> Result<Self> {
        check_probability("element_transmission", config.element_transmission)?;
        if !(config.delay_line >= 0.0) {
            return Err(Error::invalid("delay_line", "must be non-negative"));
        }
        let matrix = match config.kind {
            LayoutKind::HomSplitter => TransferMatrix::balanced_splitter(),
            _ => matrix,
        };
        let [a, b] = config.input_mapping;
        if matches!(config.kind, LayoutKind::Mmi | LayoutKind::HomSplitter) {
            matrix.check_index(a)?;
            matrix.check_index(b)?;
            if a == b {
                return Err(Error::invalid(
                    "input_mapping",
                    "paths must feed distinct inputs",
                ));
            }
        }
        Ok(Self { config, matrix })
    }

    pub fn n_channels(&self) -> usize {
        match self.config.kind {
            LayoutKind::Hbt | LayoutKind::Routed => 2,
            LayoutKind::HomSplitter | LayoutKind::Mmi => self.matrix.n_modes(),
        }
    }

    pub fn coherence(&self, source: &SourceConfig) -> CoherenceModel {
        match self.config.polarization {
            Polarization::Parallel => source.coherence,
            Polarization::Orthogonal => CoherenceModel::Distinguishable,
        }
    }
}
