use serde::Serialize;

use super::coherence::CoherenceModel;
use super::joint::joint_density;
use super::wavepacket::Wavepacket;
use crate::error::{Error, Result};
use crate::mmi::{ModePair, TransferMatrix};

/// Cross-port coincidence density of a balanced splitter versus detection
/// time separation, for the given coherence and for distinguishable photons.
#[derive(Debug, Clone, Serialize)]
pub struct HomProfile {
    pub dt: f64,
    /// Separations `t2 - t1` (ns).
    pub separation: Vec<f64>,
    /// Density with the configured coherence (1/ns).
    pub parallel: Vec<f64>,
    /// Density with `kappa = 0` (1/ns).
    pub orthogonal: Vec<f64>,
    /// `1 - integral(parallel) / integral(orthogonal)`.
    pub visibility: f64,
}

impl HomProfile {
    /// Visibility restricted to detections with `|t2 - t1| < half_window`.
    pub fn visibility_within(&self, half_window: f64) -> f64 {
        let (mut par, mut orth) = (0.0, 0.0);
        for ((s, p), o) in self
            .separation
            .iter()
            .zip(&self.parallel)
            .zip(&self.orthogonal)
        {
            if s.abs() < half_window {
                par += p;
                orth += o;
            }
        }
        if orth > 0.0 {
            1.0 - par / orth
        } else {
            0.0
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("dtau_ns,parallel,orthogonal\n");
        for ((s, p), o) in self
            .separation
            .iter()
            .zip(&self.parallel)
            .zip(&self.orthogonal)
        {
            out.push_str(&format!("{s},{p:e},{o:e}\n"));
        }
        out
    }
}

pub fn hom_profile(
    zeta_1: &Wavepacket,
    zeta_2: &Wavepacket,
    coherence: CoherenceModel,
) -> Result<HomProfile> {
    let bs = TransferMatrix::balanced_splitter();
    let cross = ModePair::new(0, 1);
    let par = joint_density(&bs, 0, 1, zeta_1, zeta_2, coherence, 0.0)?;
    let orth = joint_density(
        &bs,
        0,
        1,
        zeta_1,
        zeta_2,
        CoherenceModel::Distinguishable,
        0.0,
    )?;
    let parallel = par.separation_marginal(cross).expect("cross pair");
    let orthogonal = orth.separation_marginal(cross).expect("cross pair");
    let g = par.n_grid() as f64;
    let separation = (0..parallel.len())
        .map(|d| (d as f64 - (g - 1.0)) * par.dt())
        .collect();
    let (sp, so): (f64, f64) = (parallel.iter().sum(), orthogonal.iter().sum());
    Ok(HomProfile {
        dt: par.dt(),
        separation,
        visibility: if so > 0.0 { 1.0 - sp / so } else { 0.0 },
        parallel,
        orthogonal,
    })
}

/// Finds the Gaussian jitter `sigma` (rad/ns) giving the requested integrated
/// splitter visibility for two photons with `envelope`.
pub fn calibrate_jitter(envelope: &Wavepacket, target_visibility: f64) -> Result<CoherenceModel> {
    if !(target_visibility > 0.0 && target_visibility < 1.0) {
        return Err(Error::invalid(
            "target_visibility",
            format!("{target_visibility} must lie in (0, 1)"),
        ));
    }
    let visibility = |sigma: f64| -> Result<f64> {
        Ok(hom_profile(envelope, envelope, CoherenceModel::gaussian(sigma)?)?.visibility)
    };
    let mut lo = 0.0;
    let mut hi = 1.0 / envelope.dt();
    if visibility(hi)? > target_visibility {
        return Err(Error::invalid(
            "target_visibility",
            "unreachable on this grid",
        ));
    }
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if visibility(mid)? > target_visibility {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    CoherenceModel::gaussian(0.5 * (lo + hi))
}
