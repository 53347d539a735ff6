use std::collections::VecDeque;

use serde::Serialize;

use super::format::{TimeTag, TimeTagStream};
use crate::error::{Error, Result};
use crate::mmi::{CoincidenceDistribution, ModePair};

/// Pairing rule for coincidence extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairingOptions {
    /// Maximum separation (ns) of paired detections, after subtracting the offset.
    pub window: f64,
    /// Pair detections this many duty cycles apart instead of simultaneous ones.
    pub time_offset_cycles: u32,
    pub duty_cycle: f64,
}

impl PairingOptions {
    pub fn simultaneous(window: f64) -> Self {
        Self {
            window,
            time_offset_cycles: 0,
            duty_cycle: 0.0,
        }
    }

    pub fn offset(window: f64, cycles: u32, duty_cycle: f64) -> Self {
        Self {
            window,
            time_offset_cycles: cycles,
            duty_cycle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coincidence {
    pub pair: ModePair,
    /// Time at the higher-index output minus time at the lower one (ns),
    /// net of any pairing offset; non-negative for same-detector pairs.
    pub dtau: f64,
}

#[derive(Debug, Clone)]
pub struct CoincidenceSet {
    pub events: Vec<Coincidence>,
    pub counts: CoincidenceDistribution,
}

impl CoincidenceSet {
    pub fn event_pairs(&self) -> Vec<(ModePair, f64)> {
        self.events.iter().map(|c| (c.pair, c.dtau)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("pair,dtau_ns\n");
        for c in &self.events {
            out.push_str(&format!("\"{}\",{}\n", c.pair.label(), c.dtau));
        }
        out
    }
}

fn make_event(
    stream: &TimeTagStream,
    early: TimeTag,
    late: TimeTag,
    offset_ticks: u64,
) -> Coincidence {
    let pair = ModePair::new(early.channel as usize, late.channel as usize);
    let net = (late.tick - early.tick) as f64 - offset_ticks as f64;
    let sign = if early.channel <= late.channel {
        1.0
    } else {
        -1.0
    };
    let dtau = if pair.is_same_detector() {
        net.abs()
    } else {
        sign * net
    };
    Coincidence {
        pair,
        dtau: dtau * stream.tick_ns(),
    }
}

/// Greedy chronological pairing: each tag is matched with the earliest
/// still-unmatched tag inside the window and used at most once.
///
/// With a time offset of `N` cycles a tag pairs with an earlier tag whose
/// separation lies within `window` of `N * duty_cycle`.
pub fn extract_coincidences(
    stream: &TimeTagStream,
    options: PairingOptions,
) -> Result<CoincidenceSet> {
    if !(options.window > 0.0) {
        return Err(Error::invalid(
            "window",
            format!("{} must be positive", options.window),
        ));
    }
    let offset_ns = options.time_offset_cycles as f64 * options.duty_cycle;
    if options.time_offset_cycles > 0 && !(options.duty_cycle > options.window) {
        return Err(Error::invalid(
            "duty_cycle",
            "must exceed the coincidence window for offset pairing",
        ));
    }
    let window_ticks = (options.window * 1e6 / stream.tick_fs() as f64).floor() as u64;
    let offset_ticks = (offset_ns * 1e6 / stream.tick_fs() as f64).round() as u64;

    let mut events = Vec::new();
    let mut pending: VecDeque<TimeTag> = VecDeque::new();
    for &tag in stream.tags() {
        let horizon = tag.tick.saturating_sub(offset_ticks + window_ticks);
        while pending.front().is_some_and(|p| p.tick < horizon) {
            pending.pop_front();
        }
        let lower = offset_ticks.saturating_sub(window_ticks);
        let partner = pending.iter().position(|p| {
            let sep = tag.tick - p.tick;
            sep >= lower && sep <= offset_ticks + window_ticks
        });
        match partner {
            Some(idx) => {
                let early = pending.remove(idx).expect("index from position");
                events.push(make_event(stream, early, tag, offset_ticks));
            }
            None => pending.push_back(tag),
        }
    }

    let n_modes = stream.n_channels() as usize;
    let mut counts = CoincidenceDistribution::from_fn(n_modes, |_| 0.0);
    let mut tallies = vec![0.0; counts.len()];
    for e in &events {
        let idx = counts
            .pairs()
            .binary_search(&e.pair)
            .expect("pair of declared channels");
        tallies[idx] += 1.0;
    }
    counts = CoincidenceDistribution::from_pairs(
        n_modes,
        counts.pairs().iter().copied().zip(tallies).collect(),
    )?;
    Ok(CoincidenceSet { events, counts })
}
