use super::config::{DetectorConfig, Layout, LayoutKind, SourceConfig};

/// Survival probability from emission to the interference element, chosen so
/// that detected photons per attempt equal the overall efficiency.
///
/// Values above one are clamped with a warning.
pub fn path_transmission(source: &SourceConfig, detectors: &DetectorConfig) -> f64 {
    let denom = source.mean_photon_number() * detectors.efficiency;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = source.overall_efficiency / denom;
    if t > 1.0 {
        log::warn!(
            "overall efficiency {} needs transmission {t:.3} > 1; clamping",
            source.overall_efficiency
        );
        1.0
    } else {
        t
    }
}

/// Probability that pulse `n` is routed through the delay line (σ+ on even
/// pulses, σ− on odd ones, each misrouted with `routing_error_prob`).
pub(crate) fn delayed_prob(source: &SourceConfig, n: u32) -> f64 {
    if n.is_multiple_of(2) {
        1.0 - source.routing_error_prob
    } else {
        source.routing_error_prob
    }
}

/// Probability that exactly one of an attempt's photons takes a path with
/// per-photon probability `r`, for 1 photon (`p`) or 2 photons (`q`).
fn exactly_one(source: &SourceConfig, r: f64) -> f64 {
    source.emission_prob * r + source.two_photon_prob * 2.0 * r * (1.0 - r)
}

/// Expected number per second of intervals in which exactly one photon
/// reaches each input of the element: one delayed photon from pulse `n - 1`
/// and one direct photon from pulse `n`.
///
/// Transmission losses up to the element are included; element and detector
/// losses are not.
pub fn expected_pair_rate(
    source: &SourceConfig,
    layout: &Layout,
    detectors: &DetectorConfig,
) -> f64 {
    if layout.config.kind == LayoutKind::Hbt {
        return 0.0;
    }
    let t = path_transmission(source, detectors);
    let emit = source.emission_prob + source.two_photon_prob;
    let survive = 1.0 - emit * source.dark_state_prob;
    let mut per_transit = 0.0;
    let mut alive = 1.0;
    for n in 1..source.pulses_per_transit {
        // `alive` is the probability the atom is still bright at pulse n - 1
        let delayed =
            exactly_one(source, t * delayed_prob(source, n - 1)) * (1.0 - source.dark_state_prob);
        let direct = exactly_one(source, t * (1.0 - delayed_prob(source, n)));
        per_transit += alive * delayed * direct;
        alive *= survive;
    }
    source.atom_transit_rate * per_transit
}

/// Expected rate of detected two-photon events behind the element, assuming
/// an energy-conserving element.
pub fn expected_coincidence_rate(
    source: &SourceConfig,
    layout: &Layout,
    detectors: &DetectorConfig,
) -> f64 {
    let tail = layout.config.element_transmission * detectors.efficiency;
    expected_pair_rate(source, layout, detectors) * tail * tail
}

/// `g2(0)` of the bare source: `2 q / (p + 2 q)^2`.
pub fn expected_g2_zero(source: &SourceConfig) -> f64 {
    let mu = source.mean_photon_number();
    if mu > 0.0 {
        2.0 * source.two_photon_prob / (mu * mu)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::config::LayoutConfig;
    use crate::mmi::TransferMatrix;

    fn layout() -> Layout {
        Layout::new(LayoutConfig::default(), TransferMatrix::measured_chip()).unwrap()
    }

    fn perfect() -> (SourceConfig, DetectorConfig) {
        let source = SourceConfig {
            emission_prob: 1.0,
            two_photon_prob: 0.0,
            dark_state_prob: 0.0,
            routing_error_prob: 0.0,
            atom_transit_rate: 1.0,
            overall_efficiency: 1.0,
            ..Default::default()
        };
        let det = DetectorConfig {
            efficiency: 1.0,
            ..Default::default()
        };
        (source, det)
    }

    /// Brute-force expectation over every outcome sequence of a short transit.
    fn enumerate(source: &SourceConfig, t: f64) -> f64 {
        // per photon: (delayed, survives) with probabilities
        fn photon_outcomes(r: f64, t: f64) -> [(bool, bool, f64); 4] {
            [
                (true, true, r * t),
                (true, false, r * (1.0 - t)),
                (false, true, (1.0 - r) * t),
                (false, false, (1.0 - r) * (1.0 - t)),
            ]
        }
        fn recurse(
            source: &SourceConfig,
            t: f64,
            n: u32,
            hist: &mut Vec<(u32, u32)>,
            prob: f64,
            acc: &mut f64,
        ) {
            // hist[n] = (delayed survivors, direct survivors) of pulse n
            if n == source.pulses_per_transit {
                let pairs = (1..hist.len())
                    .filter(|&g| hist[g - 1].0 == 1 && hist[g].1 == 1)
                    .count();
                *acc += prob * pairs as f64;
                return;
            }
            let r = delayed_prob(source, n);
            let p0 = 1.0 - source.emission_prob - source.two_photon_prob;
            // zero photons, atom stays bright
            hist.push((0, 0));
            recurse(source, t, n + 1, hist, prob * p0, acc);
            hist.pop();
            for (photons, p_photons) in [(1u32, source.emission_prob), (2, source.two_photon_prob)]
            {
                let combos: Vec<(u32, u32, f64)> = if photons == 1 {
                    photon_outcomes(r, t)
                        .iter()
                        .map(|&(d, s, w)| (u32::from(d && s), u32::from(!d && s), w))
                        .collect()
                } else {
                    let mut v = Vec::new();
                    for a in photon_outcomes(r, t) {
                        for b in photon_outcomes(r, t) {
                            let del = u32::from(a.0 && a.1) + u32::from(b.0 && b.1);
                            let dir = u32::from(!a.0 && a.1) + u32::from(!b.0 && b.1);
                            v.push((del, dir, a.2 * b.2));
                        }
                    }
                    v
                };
                for (del, dir, w) in combos {
                    hist.push((del, dir));
                    // bright: continue; dark: remaining pulses emit nothing
                    recurse(
                        source,
                        t,
                        n + 1,
                        hist,
                        prob * p_photons * w * (1.0 - source.dark_state_prob),
                        acc,
                    );
                    let mut tail = hist.clone();
                    tail.resize(source.pulses_per_transit as usize, (0, 0));
                    let pairs = (1..tail.len())
                        .filter(|&g| tail[g - 1].0 == 1 && tail[g].1 == 1)
                        .count();
                    *acc += prob * p_photons * w * source.dark_state_prob * pairs as f64;
                    hist.pop();
                }
            }
        }
        let mut acc = 0.0;
        recurse(source, t, 0, &mut Vec::new(), 1.0, &mut acc);
        acc
    }

    #[test]
    fn perfect_source_pairs_every_second_interval() {
        let (source, det) = perfect();
        assert!((expected_pair_rate(&source, &layout(), &det) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn no_emission_no_pairs() {
        let source = SourceConfig {
            emission_prob: 0.0,
            two_photon_prob: 0.0,
            ..Default::default()
        };
        assert_eq!(
            expected_pair_rate(&source, &layout(), &DetectorConfig::default()),
            0.0
        );
    }

    #[test]
    fn matches_enumeration() {
        let det = DetectorConfig::default();
        for (p, q, d, e, eta) in [
            (0.5, 0.05, 0.2, 0.1, 0.3),
            (0.9, 0.1, 0.0, 0.3, 0.6),
            (0.3, 0.2, 0.5, 0.0, 0.2),
        ] {
            let source = SourceConfig {
                emission_prob: p,
                two_photon_prob: q,
                dark_state_prob: d,
                routing_error_prob: e,
                pulses_per_transit: 5,
                atom_transit_rate: 1.0,
                overall_efficiency: eta,
                ..Default::default()
            };
            let t = path_transmission(&source, &det);
            let exact = enumerate(&source, t);
            let formula = expected_pair_rate(&source, &layout(), &det);
            assert!(
                (exact - formula).abs() < 1e-10 * exact,
                "{exact} vs {formula}"
            );
        }
    }

    #[test]
    fn calibrated_scale() {
        let source = SourceConfig::default();
        let det = DetectorConfig::default();
        let l = Layout::new(
            LayoutConfig {
                element_transmission: 0.35,
                ..Default::default()
            },
            TransferMatrix::measured_chip(),
        )
        .unwrap();
        let rate = expected_coincidence_rate(&source, &l, &det);
        assert!((1e-3..1e-1).contains(&rate), "{rate}");
        assert!((expected_g2_zero(&source) - 0.067).abs() < 0.001);
    }
}
