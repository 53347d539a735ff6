use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::Serialize;

use super::format::TimeTagStream;
use crate::error::{Error, Result};

fn check_bins(bin_width: f64, pitch: f64) -> Result<()> {
    if !(bin_width > 0.0) || !(pitch > 0.0) {
        return Err(Error::invalid(
            "bin_width",
            "bin width and pitch must be positive",
        ));
    }
    if pitch > bin_width {
        return Err(Error::invalid(
            "pitch",
            format!("{pitch} exceeds bin width {bin_width}"),
        ));
    }
    Ok(())
}

/// Indices `k` of sliding bins `[origin + k p, origin + k p + w)` containing `x`.
fn covering_bins(x: f64, bin_width: f64, pitch: f64, n_bins: usize) -> std::ops::Range<usize> {
    let hi = (x / pitch).floor();
    let lo = ((x - bin_width) / pitch).floor() + 1.0;
    let lo = lo.max(0.0) as usize;
    let hi = if hi < 0.0 {
        0
    } else {
        (hi as usize + 1).min(n_bins)
    };
    lo.min(hi)..hi
}

/// Counts in overlapping bins of width `bin_width` stepped by `pitch`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlidingProfile {
    pub bin_width: f64,
    pub pitch: f64,
    /// Left edge of each bin (ns).
    pub starts: Vec<f64>,
    pub counts: Vec<u64>,
}

impl SlidingProfile {
    pub fn centers(&self) -> Vec<f64> {
        self.starts
            .iter()
            .map(|s| s + 0.5 * self.bin_width)
            .collect()
    }

    /// Counts per ns.
    pub fn rates(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.bin_width)
            .collect()
    }

    /// Center of the fullest bin (the middle one on a plateau).
    pub fn peak_center(&self) -> Option<f64> {
        let max = *self.counts.iter().max()?;
        let idx: Vec<usize> = (0..self.counts.len())
            .filter(|&i| self.counts[i] == max)
            .collect();
        Some(self.starts[idx[idx.len() / 2]] + 0.5 * self.bin_width)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("center_ns,count\n");
        for (s, c) in self.starts.iter().zip(&self.counts) {
            let _ = writeln!(out, "{},{c}", s + 0.5 * self.bin_width);
        }
        out
    }
}

/// Sliding-window count profile over the run, starting at the first tag.
pub fn sliding_histogram(
    stream: &TimeTagStream,
    channels: &[u8],
    bin_width: f64,
    pitch: f64,
) -> Result<SlidingProfile> {
    check_bins(bin_width, pitch)?;
    let selected: Vec<f64> = stream
        .tags()
        .iter()
        .filter(|t| channels.contains(&t.channel))
        .map(|t| stream.time_ns(t))
        .collect();
    let Some(&origin) = selected.first() else {
        return Ok(SlidingProfile {
            bin_width,
            pitch,
            starts: Vec::new(),
            counts: Vec::new(),
        });
    };
    let span = selected.last().expect("non-empty") - origin;
    let n_bins = (span / pitch).floor() as usize + 1;
    let mut counts = vec![0u64; n_bins];
    for t in &selected {
        for k in covering_bins(t - origin, bin_width, pitch, n_bins) {
            counts[k] += 1;
        }
    }
    let starts = (0..n_bins).map(|k| origin + k as f64 * pitch).collect();
    Ok(SlidingProfile {
        bin_width,
        pitch,
        starts,
        counts,
    })
}

/// Sliding-window profile of arrival phase modulo `period` ns, with bins
/// wrapping around the period.
pub fn folded_profile(
    stream: &TimeTagStream,
    channels: &[u8],
    period: f64,
    bin_width: f64,
    pitch: f64,
) -> Result<SlidingProfile> {
    check_bins(bin_width, pitch)?;
    if !(period > bin_width) {
        return Err(Error::invalid(
            "period",
            format!("{period} must exceed the bin width"),
        ));
    }
    let n_bins = (period / pitch).round() as usize;
    let period_fs = (period * 1e6).round() as u128;
    let mut counts = vec![0u64; n_bins];
    for t in stream
        .tags()
        .iter()
        .filter(|t| channels.contains(&t.channel))
    {
        let phase = ((t.tick as u128 * stream.tick_fs() as u128) % period_fs) as f64 * 1e-6;
        // bins near the end of the period also cover the start of the next
        for k in covering_bins(phase, bin_width, pitch, n_bins).chain(covering_bins(
            phase + period,
            bin_width,
            pitch,
            n_bins,
        )) {
            counts[k] += 1;
        }
    }
    let starts = (0..n_bins).map(|k| k as f64 * pitch).collect();
    Ok(SlidingProfile {
        bin_width,
        pitch,
        starts,
        counts,
    })
}

/// Histogram of `t_b - t_a` over all tag pairs within `±range`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationHistogram {
    pub channel_a: u8,
    pub channel_b: u8,
    pub bin_width: f64,
    pub pitch: f64,
    pub range: f64,
    /// Left edge of bin `k`: `-range + k * pitch`.
    pub starts: Vec<f64>,
    pub counts: Vec<u64>,
    /// Pairs with `-range <= dt < range`.
    pub n_pairs: u64,
}

impl CorrelationHistogram {
    pub fn centers(&self) -> Vec<f64> {
        self.starts
            .iter()
            .map(|s| s + 0.5 * self.bin_width)
            .collect()
    }

    /// How many bins each pair lands in.
    pub fn overlap(&self) -> f64 {
        self.bin_width / self.pitch
    }

    /// Pair count with `lo <= dt < hi`, corrected for bin overlap.
    pub fn area(&self, lo: f64, hi: f64) -> f64 {
        let sum: u64 = self
            .starts
            .iter()
            .zip(&self.counts)
            .filter(|(s, _)| {
                let c = *s + 0.5 * self.bin_width;
                c >= lo && c < hi
            })
            .map(|(_, c)| c)
            .sum();
        sum as f64 / self.overlap()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("dtau_ns,pair,count\n");
        let label = format!("{}-{}", self.channel_a, self.channel_b);
        for (s, c) in self.starts.iter().zip(&self.counts) {
            let _ = writeln!(out, "{},{label},{c}", s + 0.5 * self.bin_width);
        }
        out
    }
}

/// Single-pass cross-correlation between channels `a` and `b`.
///
/// Memory is bounded by the tags inside one `range` window. With `a == b`
/// every unordered pair of distinct tags is entered at both `+dt` and `-dt`.
pub fn cross_correlate(
    stream: &TimeTagStream,
    a: u8,
    b: u8,
    range: f64,
    bin_width: f64,
    pitch: f64,
) -> Result<CorrelationHistogram> {
    check_bins(bin_width, pitch)?;
    if !(range > 0.0) || bin_width > 2.0 * range {
        return Err(Error::invalid(
            "range",
            format!("{range} too small for bin width {bin_width}"),
        ));
    }
    let n_bins = ((2.0 * range - bin_width) / pitch + 1e-9).floor() as usize + 1;
    let mut counts = vec![0u64; n_bins];
    let mut n_pairs = 0u64;
    let tick_ns = stream.tick_ns();
    let range_ticks = stream.ticks_for(range);
    let mut record = |dt: f64| {
        if dt >= -range && dt < range {
            n_pairs += 1;
            for k in covering_bins(dt + range, bin_width, pitch, n_bins) {
                counts[k] += 1;
            }
        }
    };
    let mut recent_a: VecDeque<u64> = VecDeque::new();
    let mut recent_b: VecDeque<u64> = VecDeque::new();
    for tag in stream.tags() {
        let t = tag.tick;
        let horizon = t.saturating_sub(range_ticks);
        while recent_a.front().is_some_and(|&x| x < horizon) {
            recent_a.pop_front();
        }
        while recent_b.front().is_some_and(|&x| x < horizon) {
            recent_b.pop_front();
        }
        if a == b {
            if tag.channel == a {
                for &prev in &recent_a {
                    let dt = (t - prev) as f64 * tick_ns;
                    record(dt);
                    record(-dt);
                }
                recent_a.push_back(t);
            }
            continue;
        }
        if tag.channel == b {
            for &prev in &recent_a {
                record((t - prev) as f64 * tick_ns);
            }
            recent_b.push_back(t);
        } else if tag.channel == a {
            for &prev in &recent_b {
                record(-((t - prev) as f64) * tick_ns);
            }
            recent_a.push_back(t);
        }
    }
    let starts = (0..n_bins).map(|k| -range + k as f64 * pitch).collect();
    Ok(CorrelationHistogram {
        channel_a: a,
        channel_b: b,
        bin_width,
        pitch,
        range,
        starts,
        counts,
        n_pairs,
    })
}
