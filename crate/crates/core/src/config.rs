//! Experiment configuration file (TOML) shared by all subcommands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::instrument::{DetectorConfig, Layout, LayoutConfig, SourceConfig};
use crate::mmi::TransferMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixPreset {
    /// The characterized 4×4 chip shipped with the crate.
    MeasuredChip,
    BalancedSplitter,
}

/// Where the interference matrix comes from: a preset or a JSON file.
///
/// An omitted `[matrix]` section means the shipped chip; a present one must
/// name exactly one source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    pub preset: Option<MatrixPreset>,
    /// JSON matrix file; relative paths resolve against the config file.
    pub file: Option<PathBuf>,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        Self {
            preset: Some(MatrixPreset::MeasuredChip),
            file: None,
        }
    }
}

impl MatrixConfig {
    pub fn load(&self) -> Result<TransferMatrix> {
        match (&self.preset, &self.file) {
            (Some(_), Some(_)) => Err(Error::Config(
                "[matrix] sets both `preset` and `file`".into(),
            )),
            (None, None) => Err(Error::Config("[matrix] needs `preset` or `file`".into())),
            (Some(MatrixPreset::MeasuredChip), None) => Ok(TransferMatrix::measured_chip()),
            (Some(MatrixPreset::BalancedSplitter), None) => Ok(TransferMatrix::balanced_splitter()),
            (None, Some(path)) => TransferMatrix::load(path),
        }
    }
}

/// Analysis parameters. Times in ns unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    /// Simulated run length (s).
    pub wall_time: f64,
    pub coincidence_window: f64,
    /// Duty cycles between partners in the distinguishable reference pass.
    pub reference_offset_cycles: u32,
    pub mc_trials: usize,
    pub profile_bin_width: f64,
    pub profile_pitch: f64,
    pub g2_bin_width: f64,
    pub g2_pitch: f64,
    pub g2_range: f64,
    /// Half width of the short-delay visibility window.
    pub hom_window: f64,
    pub time_resolved_half_window: f64,
    pub time_resolved_centers: Vec<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            wall_time: 3600.0,
            coincidence_window: 300.0,
            reference_offset_cycles: 2,
            mc_trials: 1_000_000,
            profile_bin_width: 40.0,
            profile_pitch: 4.0,
            g2_bin_width: 100.0,
            g2_pitch: 20.0,
            g2_range: 6640.0,
            hom_window: 23.0,
            time_resolved_half_window: 25.0,
            time_resolved_centers: (0..=10).map(|k| 25.0 * k as f64).collect(),
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("coincidence_window", self.coincidence_window),
            ("profile_bin_width", self.profile_bin_width),
            ("profile_pitch", self.profile_pitch),
            ("g2_bin_width", self.g2_bin_width),
            ("g2_pitch", self.g2_pitch),
            ("g2_range", self.g2_range),
            ("hom_window", self.hom_window),
            ("time_resolved_half_window", self.time_resolved_half_window),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "[analysis] {name} = {v} must be positive"
                )));
            }
        }
        if !(self.wall_time >= 0.0) {
            return Err(Error::Config(
                "[analysis] wall_time must be non-negative".into(),
            ));
        }
        if self.mc_trials == 0 {
            return Err(Error::Config(
                "[analysis] mc_trials must be positive".into(),
            ));
        }
        if self.reference_offset_cycles == 0 {
            return Err(Error::Config(
                "[analysis] reference_offset_cycles must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: SourceConfig,
    pub detectors: DetectorConfig,
    pub layout: LayoutConfig,
    pub matrix: MatrixConfig,
    pub analysis: AnalysisConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file, resolving a relative matrix path against it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let Some(file) = &cfg.matrix.file {
            if file.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.matrix.file = Some(base.join(file));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let as_config = |e: Error| match e {
            Error::InvalidParameter { name, reason } => {
                Error::Config(format!("`{name}`: {reason}"))
            }
            other => other,
        };
        self.source.validate().map_err(as_config)?;
        self.detectors.validate().map_err(as_config)?;
        self.analysis.validate()?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn matrix(&self) -> Result<TransferMatrix> {
        self.matrix.load().map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("matrix file: {io}")),
            other => other,
        })
    }

    pub fn build_layout(&self) -> Result<Layout> {
        Layout::new(self.layout.clone(), self.matrix()?).map_err(|e| match e {
            Error::InvalidParameter { name, reason } => {
                Error::Config(format!("[layout] `{name}`: {reason}"))
            }
            Error::IndexOutOfRange { index, n_modes } => Error::Config(format!(
                "[layout] input {index} out of range for {n_modes} modes"
            )),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn unknown_keys_name_the_location() {
        let err = ExperimentConfig::from_toml_str("[source]\nemision_prob = 0.3\n").unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("emision_prob") && msg.contains("line 2"),
            "{msg}"
        );
        assert!(ExperimentConfig::from_toml_str("[sauce]\n").is_err());
    }

    #[test]
    fn matrix_file_alone_is_enough() {
        let cfg = ExperimentConfig::from_toml_str("[matrix]\nfile = \"chip.json\"\n").unwrap();
        assert_eq!(cfg.matrix.preset, None);
        assert!(ExperimentConfig::from_toml_str("[matrix]\n").is_ok());
        assert!(matches!(
            ExperimentConfig::default().matrix.preset,
            Some(MatrixPreset::MeasuredChip)
        ));
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let err = ExperimentConfig::from_toml_str("[source]\nemission_prob = 1.5\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let cfg =
            ExperimentConfig::from_toml_str("[matrix]\npreset = \"balanced_splitter\"\n").unwrap();
        assert_eq!(cfg.matrix().unwrap().n_modes(), 2);
    }

    #[test]
    fn shipped_profiles_parse() {
        for text in [
            include_str!("../data/mmi.toml"),
            include_str!("../data/hbt.toml"),
            include_str!("../data/hom.toml"),
        ] {
            let cfg = ExperimentConfig::from_toml_str(text).unwrap();
            cfg.build_layout().unwrap();
        }
    }
}
