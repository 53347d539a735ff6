use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mutual coherence between the two photons of a pair.
///
/// Random frequency jitter with standard deviation `sigma` (rad/ns) averages
/// the interference term by `kappa(tau) = exp(-sigma^2 tau^2 / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoherenceModel {
    Perfect,
    GaussianJitter {
        jitter_sd: f64,
    },
    /// No interference at all (`kappa = 0`), e.g. orthogonal polarizations.
    Distinguishable,
}

impl CoherenceModel {
    pub fn gaussian(jitter_sd: f64) -> Result<Self> {
        let m = CoherenceModel::GaussianJitter { jitter_sd };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CoherenceModel::GaussianJitter { jitter_sd }
                if !(jitter_sd >= 0.0) || !jitter_sd.is_finite() =>
            {
                Err(Error::invalid(
                    "jitter_sd",
                    format!("{jitter_sd} must be finite and non-negative"),
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn kappa(&self, tau: f64) -> f64 {
        match *self {
            CoherenceModel::Perfect => 1.0,
            CoherenceModel::GaussianJitter { jitter_sd } => {
                (-0.5 * (jitter_sd * tau).powi(2)).exp()
            }
            CoherenceModel::Distinguishable => 0.0,
        }
    }

    /// Jitter width expressed as a frequency in MHz (`sigma / 2 pi`).
    pub fn bandwidth_mhz(&self) -> Option<f64> {
        match *self {
            CoherenceModel::GaussianJitter { jitter_sd } => {
                Some(jitter_sd / (2.0 * std::f64::consts::PI) * 1e3)
            }
            CoherenceModel::Perfect => Some(0.0),
            CoherenceModel::Distinguishable => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_limits() {
        assert_eq!(CoherenceModel::Perfect.kappa(1e6), 1.0);
        assert_eq!(CoherenceModel::Distinguishable.kappa(0.0), 0.0);
        let g = CoherenceModel::gaussian(0.01).unwrap();
        assert_eq!(g.kappa(0.0), 1.0);
        assert!((g.kappa(100.0) - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(CoherenceModel::gaussian(0.0).unwrap().kappa(500.0), 1.0);
        assert!(CoherenceModel::gaussian(-1.0).is_err());
        assert!(CoherenceModel::gaussian(f64::NAN).is_err());
    }

    #[test]
    fn bandwidth_conversion() {
        let g = CoherenceModel::gaussian(2.0 * std::f64::consts::PI * 2.15e-3).unwrap();
        assert!((g.bandwidth_mhz().unwrap() - 2.15).abs() < 1e-12);
    }
}
