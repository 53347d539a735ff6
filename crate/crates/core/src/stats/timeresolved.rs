use serde::Serialize;

use super::montecarlo::{poisson_mc_similarity, SimilaritySummary};
use crate::error::{Error, Result};
use crate::mmi::{CoincidenceDistribution, ModePair};
use crate::seed::derive_seed;

/// Windows holding fewer events than this are left out of the curve.
pub const MIN_EVENTS_PER_WINDOW: usize = 5;

#[derive(Debug, Clone, Serialize)]
pub struct TimeResolvedPoint {
    /// Window center in |Δτ| (ns).
    pub center: f64,
    pub n_events: usize,
    pub vs_quantum: SimilaritySummary,
    pub vs_classical: SimilaritySummary,
}

/// Similarity to the indistinguishable and distinguishable predictions as a
/// function of detection-time separation.
///
/// An event `(pair, dt)` falls in the window at `c` when `||dt| - c| <= half_window`.
/// Events whose pair is absent from the theory tables are ignored, so passing
/// cross-detector theories restricts the curve to cross-detector events.
/// Every window gets its own seed derived from `seed` and the window index.
pub fn similarity_vs_dt(
    events: &[(ModePair, f64)],
    theory_q: &CoincidenceDistribution,
    theory_c: &CoincidenceDistribution,
    centers: &[f64],
    half_window: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<TimeResolvedPoint>> {
    if events.is_empty() {
        return Err(Error::EmptyData("no coincidence events".into()));
    }
    if !(half_window > 0.0) {
        return Err(Error::invalid(
            "half_window",
            format!("{half_window} must be positive"),
        ));
    }
    if theory_q.pairs() != theory_c.pairs() {
        return Err(Error::invalid(
            "theory",
            "quantum and classical tables cover different pairs",
        ));
    }
    let pairs = theory_q.pairs();
    let mut points = Vec::new();
    for (w, &center) in centers.iter().enumerate() {
        let mut counts = vec![0.0; pairs.len()];
        let mut n_events = 0;
        for (pair, dt) in events {
            if (dt.abs() - center).abs() > half_window {
                continue;
            }
            if let Ok(idx) = pairs.binary_search(pair) {
                counts[idx] += 1.0;
                n_events += 1;
            }
        }
        if n_events < MIN_EVENTS_PER_WINDOW {
            continue;
        }
        let window_seed = derive_seed(seed, w as u64);
        let q = poisson_mc_similarity(&counts, theory_q.values(), trials, window_seed)?;
        let c = poisson_mc_similarity(&counts, theory_c.values(), trials, window_seed)?;
        points.push(TimeResolvedPoint {
            center,
            n_events,
            vs_quantum: q.summary(),
            vs_classical: c.summary(),
        });
    }
    Ok(points)
}
