use serde::Serialize;

use super::coincidence::Coincidence;
use crate::error::{Error, Result};
use crate::mmi::CoincidenceDistribution;
use crate::temporal::autocorrelation;

/// Outcome of the same-detector dead-time correction.
#[derive(Debug, Clone, Serialize)]
pub struct DeadtimeCorrection {
    #[serde(skip)]
    pub corrected: CoincidenceDistribution,
    /// Fitted number of pairs per unit of normalized autocorrelation.
    pub amplitude: f64,
    /// Coincidences expected with `|dtau| <= dead_time`.
    pub expected_within: f64,
    /// Coincidences measured with `|dtau| <= dead_time`.
    pub measured_within: f64,
    /// Inferred lost same-detector coincidences (clamped at zero).
    pub missed: f64,
    /// One-sigma uncertainty of `missed`.
    pub missed_sigma: f64,
}

/// Restores same-detector coincidences lost to detector recovery.
///
/// `profile` is the single-photon arrival intensity sampled every
/// `profile_dt` ns. Its autocorrelation gives the shape of the total
/// `|dtau|` histogram; the amplitude is fitted by least squares on bins with
/// `|dtau| > dead_time` up to `window`. The shortfall below `dead_time` is
/// shared among the `{k,k}` channels in proportion to `reference`, typically
/// the same-detector counts of a time-offset pass.
pub fn deadtime_correction(
    events: &[Coincidence],
    measured: &CoincidenceDistribution,
    profile: &[f64],
    profile_dt: f64,
    dead_time: f64,
    window: f64,
    reference: &CoincidenceDistribution,
) -> Result<DeadtimeCorrection> {
    if !(dead_time >= 0.0) {
        return Err(Error::invalid(
            "dead_time",
            format!("{dead_time} must be non-negative"),
        ));
    }
    if dead_time == 0.0 {
        return Ok(DeadtimeCorrection {
            corrected: measured.clone(),
            amplitude: f64::NAN,
            expected_within: 0.0,
            measured_within: 0.0,
            missed: 0.0,
            missed_sigma: 0.0,
        });
    }
    if !(profile_dt > 0.0) || profile.is_empty() {
        return Err(Error::invalid("profile", "intensity profile is empty"));
    }
    if !(window > dead_time) {
        return Err(Error::invalid(
            "window",
            format!("{window} must exceed the dead time {dead_time}"),
        ));
    }
    let same_ref: Vec<(usize, f64)> = reference
        .iter()
        .filter(|(p, _)| p.is_same_detector())
        .map(|(p, v)| (p.first, v))
        .collect();
    let ref_total: f64 = same_ref.iter().map(|x| x.1).sum();
    if same_ref.is_empty() || !(ref_total > 0.0) {
        return Err(Error::EmptyData(
            "reference same-detector distribution is empty; run a time-offset pass (e.g. two duty cycles) first".into(),
        ));
    }

    // |dtau| shape from the profile, folded onto non-negative lags
    let total: f64 = profile.iter().sum::<f64>() * profile_dt;
    if !(total > 0.0) {
        return Err(Error::invalid("profile", "intensity profile sums to zero"));
    }
    let normalized: Vec<f64> = profile.iter().map(|v| v / total).collect();
    let auto = autocorrelation(&normalized, profile_dt);
    let zero = normalized.len() - 1;
    let n_lags = ((window / profile_dt).floor() as usize + 1).min(normalized.len());
    let mut shape = vec![0.0; n_lags];
    shape[0] = auto[zero] * profile_dt;
    for d in 1..n_lags {
        shape[d] = (auto[zero + d] + auto[zero - d]) * profile_dt;
    }

    // measured |dtau| histogram on the same lag grid (bins centered on lags)
    let mut hist = vec![0.0; n_lags];
    for e in events {
        let lag = (e.dtau.abs() / profile_dt).round() as usize;
        if lag < n_lags {
            hist[lag] += 1.0;
        }
    }
    let inside = |d: usize| d as f64 * profile_dt <= dead_time;
    let (mut sah, mut saa, mut saaa) = (0.0, 0.0, 0.0);
    for d in (0..n_lags).filter(|&d| !inside(d)) {
        sah += shape[d] * hist[d];
        saa += shape[d] * shape[d];
        saaa += shape[d].powi(3);
    }
    if !(saa > 0.0) {
        return Err(Error::EmptyData(
            "no profile support beyond the dead time".into(),
        ));
    }
    let amplitude = sah / saa;
    let var_amplitude = amplitude * saaa / (saa * saa);
    let shape_within: f64 = (0..n_lags).filter(|&d| inside(d)).map(|d| shape[d]).sum();
    let measured_within: f64 = (0..n_lags).filter(|&d| inside(d)).map(|d| hist[d]).sum();
    let expected_within = amplitude * shape_within;
    let mut missed = expected_within - measured_within;
    if missed < 0.0 {
        log::warn!("inferred missed coincidence count {missed:.1} is negative; clamping to zero");
        missed = 0.0;
    }
    let missed_sigma = (shape_within.powi(2) * var_amplitude + expected_within)
        .max(0.0)
        .sqrt();

    let corrected_values: Vec<(crate::mmi::ModePair, f64)> = measured
        .iter()
        .map(|(p, v)| {
            let extra = if p.is_same_detector() {
                same_ref
                    .iter()
                    .find(|(k, _)| *k == p.first)
                    .map_or(0.0, |(_, r)| missed * r / ref_total)
            } else {
                0.0
            };
            (p, v + extra)
        })
        .collect();
    let corrected = CoincidenceDistribution::from_pairs(measured.n_modes(), corrected_values)?;
    Ok(DeadtimeCorrection {
        corrected,
        amplitude,
        expected_within,
        measured_within,
        missed,
        missed_sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmi::ModePair;
    use crate::temporal::Wavepacket;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{weighted::WeightedIndex, Distribution};

    fn profile() -> Vec<f64> {
        Wavepacket::sin2_envelope(300.0, 1.0).unwrap().intensity()
    }

    /// Pairs with independent sin^2 arrival times on random channels.
    fn synthetic(n: usize, dead_time: f64, seed: u64) -> (Vec<Coincidence>, usize) {
        let p = profile();
        let times = WeightedIndex::new(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut kept = Vec::new();
        let mut lost = 0;
        for _ in 0..n {
            let t1 = times.sample(&mut rng) as f64 + rng.random_range(-0.5..0.5);
            let t2 = times.sample(&mut rng) as f64 + rng.random_range(-0.5..0.5);
            let (a, b) = (rng.random_range(0..4), rng.random_range(0..4));
            let pair = ModePair::new(a, b);
            if pair.is_same_detector() && (t2 - t1).abs() <= dead_time {
                lost += 1;
                continue;
            }
            kept.push(Coincidence {
                pair,
                dtau: t2 - t1,
            });
        }
        (kept, lost)
    }

    fn tally(events: &[Coincidence]) -> CoincidenceDistribution {
        let mut d = CoincidenceDistribution::from_fn(4, |_| 0.0)
            .values()
            .to_vec();
        let pairs = crate::mmi::all_pairs(4);
        for e in events {
            d[pairs.binary_search(&e.pair).unwrap()] += 1.0;
        }
        CoincidenceDistribution::from_pairs(4, pairs.into_iter().zip(d).collect()).unwrap()
    }

    fn uniform_reference() -> CoincidenceDistribution {
        CoincidenceDistribution::from_fn(4, |_| 1.0)
    }

    #[test]
    fn zero_dead_time_is_identity() {
        let (events, _) = synthetic(2000, 0.0, 1);
        let raw = tally(&events);
        let c = deadtime_correction(
            &events,
            &raw,
            &profile(),
            1.0,
            0.0,
            300.0,
            &uniform_reference(),
        )
        .unwrap();
        assert_eq!(c.corrected, raw);
    }

    #[test]
    fn recovers_lost_pairs() {
        let mut hits = 0;
        for seed in 0..40 {
            let (events, lost) = synthetic(4000, 50.0, seed);
            let raw = tally(&events);
            let c = deadtime_correction(
                &events,
                &raw,
                &profile(),
                1.0,
                50.0,
                300.0,
                &uniform_reference(),
            )
            .unwrap();
            if (c.missed - lost as f64).abs() <= 2.0 * c.missed_sigma {
                hits += 1;
            }
            let gained = c.corrected.same_detector().total() - raw.same_detector().total();
            assert!((gained - c.missed).abs() < 1e-9);
            assert_eq!(c.corrected.cross_detector(), raw.cross_detector());
        }
        assert!(hits >= 35, "{hits}/40");
    }

    #[test]
    fn missing_reference_is_an_error() {
        let (events, _) = synthetic(100, 50.0, 2);
        let raw = tally(&events);
        let empty = CoincidenceDistribution::from_fn(4, |_| 0.0);
        let err =
            deadtime_correction(&events, &raw, &profile(), 1.0, 50.0, 300.0, &empty).unwrap_err();
        assert!(err.to_string().contains("time-offset"));
    }
}
