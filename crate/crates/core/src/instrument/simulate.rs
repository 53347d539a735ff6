use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{weighted::WeightedIndex, Distribution, Exp, Normal, Poisson};
use serde::Serialize;

use super::config::{DetectorConfig, Layout, LayoutKind, SourceConfig};
use super::rate::{delayed_prob, path_transmission};
use crate::error::{Error, Result};
use crate::mmi::ModePair;
use crate::seed::derive_seed;
use crate::tagstream::{TimeTag, TimeTagStream};
use crate::temporal::{joint_density, Wavepacket};

/// Ground-truth bookkeeping of one simulated run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SimulationTruth {
    pub transits: u64,
    pub attempts: u64,
    pub emitted_photons: u64,
    pub two_photon_attempts: u64,
    /// Intervals with exactly one photon on each element input.
    pub pairs_delivered: u64,
    pub detected_photons: u64,
    pub dark_counts: u64,
    /// Tags removed by detector recovery.
    pub dead_time_losses: u64,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub stream: TimeTagStream,
    /// Same events before dead-time suppression.
    pub pre_dead_time: TimeTagStream,
    pub truth: SimulationTruth,
}

/// One photon reaching the element within an arrival interval.
#[derive(Debug, Clone, Copy)]
struct Arrival {
    delayed: bool,
    /// Offset from the interval start (ns).
    offset: f64,
}

/// Draws pair detections from the joint density of one photon per input.
struct PairSampler {
    pairs: Vec<ModePair>,
    n_grid: usize,
    start: f64,
    dt: f64,
    index: WeightedIndex<f64>,
}

impl PairSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> (usize, f64, usize, f64) {
        let cell = self.index.sample(rng);
        let per_pair = self.n_grid * self.n_grid;
        let pair = self.pairs[cell / per_pair];
        let (n1, n2) = ((cell % per_pair) / self.n_grid, cell % self.n_grid);
        let t1 = self.start + (n1 as f64 + rng.random_range(-0.5..0.5)) * self.dt;
        let t2 = self.start + (n2 as f64 + rng.random_range(-0.5..0.5)) * self.dt;
        (pair.first, t1, pair.second, t2)
    }
}

struct Model<'a> {
    source: &'a SourceConfig,
    layout: &'a Layout,
    detectors: &'a DetectorConfig,
    envelope: Wavepacket,
    emission_times: WeightedIndex<f64>,
    transmission: f64,
    /// Extra arrival offset of delayed photons beyond whole intervals (ns).
    delay_residual: f64,
    delay_intervals: u64,
    outputs: Vec<WeightedIndex<f64>>,
    pair_sampler: Option<PairSampler>,
}

impl<'a> Model<'a> {
    fn new(
        source: &'a SourceConfig,
        layout: &'a Layout,
        detectors: &'a DetectorConfig,
    ) -> Result<Self> {
        let envelope = Wavepacket::sin2_envelope(source.pulse_length, source.envelope_dt)?;
        let emission_times = WeightedIndex::new(envelope.intensity())
            .map_err(|e| Error::invalid("envelope", e.to_string()))?;
        let delay_intervals = (layout.config.delay_line / source.duty_cycle).round() as u64;
        let delay_residual = layout.config.delay_line - delay_intervals as f64 * source.duty_cycle;
        if delay_residual.abs() > 1e-9 && layout.config.kind != LayoutKind::Hbt {
            log::warn!(
                "delay line {} ns differs from the duty cycle {} ns; pairs arrive {delay_residual} ns apart",
                layout.config.delay_line,
                source.duty_cycle
            );
        }
        let m = &layout.matrix;
        let outputs = (0..m.n_modes())
            .map(|i| {
                let w: Vec<f64> = m.row(i).iter().map(|z| z.norm_sqr()).collect();
                WeightedIndex::new(w).map_err(|e| Error::InvalidMatrix(format!("row {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let pair_sampler = match layout.config.kind {
            LayoutKind::Mmi | LayoutKind::HomSplitter => {
                let [a, b] = layout.config.input_mapping;
                let coherence = layout.coherence(source);
                let shift = -(delay_residual / source.envelope_dt).round() * source.envelope_dt;
                let jd = joint_density(m, a, b, &envelope, &envelope, coherence, shift)?;
                let pairs = jd.pairs().to_vec();
                let weights: Vec<f64> = pairs
                    .iter()
                    .flat_map(|&p| jd.density(p).expect("pair").iter().copied())
                    .collect();
                let index =
                    WeightedIndex::new(weights).map_err(|e| Error::InvalidMatrix(e.to_string()))?;
                Some(PairSampler {
                    pairs,
                    n_grid: jd.n_grid(),
                    start: jd.time(0) + delay_residual,
                    dt: jd.dt(),
                    index,
                })
            }
            _ => None,
        };
        Ok(Self {
            source,
            layout,
            detectors,
            envelope,
            emission_times,
            transmission: path_transmission(source, detectors),
            delay_residual,
            delay_intervals,
            outputs,
            pair_sampler,
        })
    }

    fn emission_time(&self, rng: &mut ChaCha8Rng) -> f64 {
        let n = self.emission_times.sample(rng);
        let t = self.envelope.time(n) + rng.random_range(-0.5..0.5) * self.envelope.dt();
        t.clamp(0.0, self.source.pulse_length)
    }

    /// Runs one transit starting at interval `first_slot`, appending
    /// `(time_ps, channel)` detections before detector effects.
    fn transit(
        &self,
        first_slot: u64,
        rng: &mut ChaCha8Rng,
        truth: &mut SimulationTruth,
        out: &mut Vec<(f64, u8)>,
    ) {
        let s = self.source;
        let hbt = self.layout.config.kind == LayoutKind::Hbt;
        // arrivals keyed by interval index relative to the transit
        let mut groups: Vec<Vec<Arrival>> = Vec::new();
        for n in 0..s.pulses_per_transit {
            truth.attempts += 1;
            let r: f64 = rng.random();
            let photons = if r < s.two_photon_prob {
                2
            } else if r < s.two_photon_prob + s.emission_prob {
                1
            } else {
                0
            };
            if photons == 0 {
                continue;
            }
            truth.emitted_photons += photons;
            if photons == 2 {
                truth.two_photon_attempts += 1;
            }
            for _ in 0..photons {
                let delayed = !hbt && rng.random::<f64>() < delayed_prob(s, n);
                let offset = self.emission_time(rng);
                if !rng.random_bool(self.transmission) {
                    continue;
                }
                let slot = n as usize
                    + if delayed {
                        self.delay_intervals as usize
                    } else {
                        0
                    };
                if groups.len() <= slot {
                    groups.resize(slot + 1, Vec::new());
                }
                let offset = if delayed {
                    offset + self.delay_residual
                } else {
                    offset
                };
                groups[slot].push(Arrival { delayed, offset });
            }
            if rng.random_bool(s.dark_state_prob) {
                break;
            }
        }
        let slot_ns = s.duty_cycle;
        for (g, arrivals) in groups.iter().enumerate() {
            if arrivals.is_empty() {
                continue;
            }
            let base = (first_slot + g as u64) as f64 * slot_ns;
            let one_each = arrivals.len() == 2 && arrivals[0].delayed != arrivals[1].delayed;
            if one_each {
                truth.pairs_delivered += 1;
            }
            let mut hits: Vec<(f64, usize)> = Vec::with_capacity(arrivals.len());
            match (self.layout.config.kind, &self.pair_sampler) {
                (LayoutKind::Hbt, _) => {
                    for a in arrivals {
                        hits.push((a.offset, usize::from(rng.random_bool(0.5))));
                    }
                }
                (LayoutKind::Routed, _) => {
                    for a in arrivals {
                        hits.push((a.offset, if a.delayed { 0 } else { 1 }));
                    }
                }
                (_, Some(sampler)) if one_each => {
                    let (k, tk, l, tl) = sampler.sample(rng);
                    hits.push((tk, k));
                    hits.push((tl, l));
                }
                _ => {
                    let [ia, ib] = self.layout.config.input_mapping;
                    for a in arrivals {
                        let input = if a.delayed { ia } else { ib };
                        hits.push((a.offset, self.outputs[input].sample(rng)));
                    }
                }
            }
            let survive = self.layout.config.element_transmission * self.detectors.efficiency;
            for (t, ch) in hits {
                if rng.random_bool(survive) {
                    out.push(((base + t) * 1e3, ch as u8));
                }
            }
        }
    }
}

/// Simulates `wall_time` seconds of the source, routing, element and
/// detectors. Identical inputs and seed give bit-identical streams.
pub fn simulate_run(
    source: &SourceConfig,
    layout: &Layout,
    detectors: &DetectorConfig,
    wall_time: f64,
    seed: u64,
) -> Result<SimulationOutput> {
    source.validate()?;
    detectors.validate()?;
    if !(wall_time >= 0.0) || !wall_time.is_finite() {
        return Err(Error::invalid(
            "wall_time",
            format!("{wall_time} s must be finite and non-negative"),
        ));
    }
    let model = Model::new(source, layout, detectors)?;
    let n_channels = layout.n_channels();
    let mut truth = SimulationTruth::default();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let mut raw: Vec<(f64, u8)> = Vec::new();

    let wall_ns = wall_time * 1e9;
    if source.atom_transit_rate > 0.0 && source.emission_prob + source.two_photon_prob > 0.0 {
        let gaps = Exp::new(source.atom_transit_rate * 1e-9)
            .map_err(|e| Error::invalid("atom_transit_rate", e.to_string()))?;
        let mut t = gaps.sample(&mut rng);
        while t < wall_ns {
            truth.transits += 1;
            let slot = (t / source.duty_cycle).ceil() as u64;
            model.transit(slot, &mut rng, &mut truth, &mut raw);
            t += gaps.sample(&mut rng);
        }
    }
    truth.detected_photons = raw.len() as u64;

    let mut dark_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mean_dark = detectors.dark_rate / 3600.0 * wall_time;
    if mean_dark > 0.0 {
        let poisson =
            Poisson::new(mean_dark).map_err(|e| Error::invalid("dark_rate", e.to_string()))?;
        for ch in 0..n_channels {
            let n = poisson.sample(&mut dark_rng) as u64;
            truth.dark_counts += n;
            for _ in 0..n {
                raw.push((dark_rng.random_range(0.0..wall_ns) * 1e3, ch as u8));
            }
        }
    }

    let mut jitter_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
    let jitter = Normal::new(0.0, detectors.jitter_sd)
        .map_err(|e| Error::invalid("jitter_sd", e.to_string()))?;
    let mut events: Vec<(u64, u8)> = raw
        .into_iter()
        .map(|(ps, ch)| {
            (
                ((ps + jitter.sample(&mut jitter_rng)).round().max(0.0)) as u64,
                ch,
            )
        })
        .collect();
    events.sort_unstable();

    let tick_fs = detectors.tick_fs();
    let to_tag =
        |(ps, ch): (u64, u8)| TimeTag::new(ch, ((ps as u128 * 1000) / tick_fs as u128) as u64);
    let dead_ps = (detectors.dead_time * 1e3).round() as u64;
    let mut last: Vec<Option<u64>> = vec![None; n_channels];
    let mut kept = Vec::with_capacity(events.len());
    for &(ps, ch) in &events {
        let slot = &mut last[ch as usize];
        if slot.is_some_and(|prev| ps < prev + dead_ps) {
            truth.dead_time_losses += 1;
            continue;
        }
        *slot = Some(ps);
        kept.push(to_tag((ps, ch)));
    }
    let pre: Vec<TimeTag> = events.into_iter().map(to_tag).collect();
    Ok(SimulationOutput {
        stream: TimeTagStream::from_unsorted(tick_fs, n_channels as u16, kept)?,
        pre_dead_time: TimeTagStream::from_unsorted(tick_fs, n_channels as u16, pre)?,
        truth,
    })
}
