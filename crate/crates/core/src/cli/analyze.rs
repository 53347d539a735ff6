//! Analysis pipelines behind `mmi-lab analyze`.

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::mmi::{
    coincidence_classical, coincidence_quantum, fit_visibility, CoincidenceDistribution,
    Normalization, TransferMatrix, VisibilityFit,
};
use crate::seed::derive_seed;
use crate::stats::{
    poisson_mc_similarity, similarity, similarity_vs_dt, SimilarityResult, TimeResolvedPoint,
};
use crate::tagstream::{
    cross_correlate, deadtime_correction, extract_coincidences, folded_profile, g2_zero,
    CoincidenceSet, CorrelationHistogram, DeadtimeCorrection, G2Report, PairingOptions,
    SlidingProfile, TimeTagStream,
};

/// Step of the intensity profile used for dead-time correction (ns).
pub const PROFILE_STEP: f64 = 1.0;

/// Arrival-time profile folded on the duty cycle in 1 ns bins, rotated so
/// that its maximum sits in the middle.
pub fn pulse_profile(stream: &TimeTagStream, duty_cycle: f64) -> Result<Vec<f64>> {
    let channels: Vec<u8> = (0..stream.n_channels() as u8).collect();
    let folded = folded_profile(stream, &channels, duty_cycle, PROFILE_STEP, PROFILE_STEP)?;
    let counts: Vec<f64> = folded.counts.iter().map(|&c| c as f64).collect();
    let n = counts.len();
    let peak = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i);
    Ok((0..n).map(|k| counts[(peak + n / 2 + 1 + k) % n]).collect())
}

fn reference_pass(stream: &TimeTagStream, cfg: &ExperimentConfig) -> Result<CoincidenceSet> {
    extract_coincidences(
        stream,
        PairingOptions::offset(
            cfg.analysis.coincidence_window,
            cfg.analysis.reference_offset_cycles,
            cfg.source.duty_cycle,
        ),
    )
}

fn corrected_counts(
    stream: &TimeTagStream,
    cfg: &ExperimentConfig,
) -> Result<(CoincidenceSet, CoincidenceSet, DeadtimeCorrection)> {
    let window = cfg.analysis.coincidence_window;
    let set = extract_coincidences(stream, PairingOptions::simultaneous(window))?;
    if set.events.is_empty() {
        return Err(Error::EmptyData("stream contains no coincidences".into()));
    }
    let reference = reference_pass(stream, cfg)?;
    let profile = pulse_profile(stream, cfg.source.duty_cycle)?;
    let correction = deadtime_correction(
        &set.events,
        &set.counts,
        &profile,
        PROFILE_STEP,
        cfg.detectors.dead_time,
        window,
        &reference.counts,
    )
    .map_err(|e| match e {
        Error::EmptyData(msg) => Error::EmptyData(format!(
            "dead-time correction needs a distinguishable reference: {msg} (offset of {} duty cycles)",
            cfg.analysis.reference_offset_cycles
        )),
        other => other,
    })?;
    Ok((set, reference, correction))
}

#[derive(Debug, Clone, Serialize)]
pub struct G2Analysis {
    pub report: G2Report,
    #[serde(skip)]
    pub histogram: CorrelationHistogram,
    #[serde(skip)]
    pub profile: SlidingProfile,
}

pub fn analyze_g2(stream: &TimeTagStream, cfg: &ExperimentConfig) -> Result<G2Analysis> {
    if stream.n_channels() < 2 {
        return Err(Error::EmptyData("g2 needs two channels".into()));
    }
    let a = &cfg.analysis;
    let histogram = cross_correlate(stream, 0, 1, a.g2_range, a.g2_bin_width, a.g2_pitch)?;
    let report = g2_zero(&histogram, cfg.source.duty_cycle)?;
    let profile = folded_profile(
        stream,
        &[0, 1],
        cfg.source.duty_cycle,
        a.profile_bin_width,
        a.profile_pitch,
    )?;
    Ok(G2Analysis {
        report,
        histogram,
        profile,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HomAnalysis {
    pub visibility: f64,
    pub window: f64,
    pub windowed_visibility: f64,
    pub cross: f64,
    pub corrected_total: f64,
    pub reference_kind: &'static str,
    pub reference_cross: f64,
    pub reference_total: f64,
    pub dead_time: DeadtimeCorrection,
    /// Cross-detector `dtau` values of the measurement and the reference.
    #[serde(skip)]
    pub cross_dtau: (Vec<f64>, Vec<f64>),
}

impl HomAnalysis {
    /// Histogram of both `dtau` lists (`bin` ns wide) as CSV.
    pub fn dtau_csv(&self, bin: f64) -> String {
        let range = self
            .cross_dtau
            .0
            .iter()
            .chain(&self.cross_dtau.1)
            .fold(0.0f64, |m, x| m.max(x.abs()));
        let n = (range / bin).ceil() as i64;
        let tally = |v: &[f64]| {
            let mut h = vec![0u64; (2 * n + 1) as usize];
            for x in v {
                h[((x / bin).round() as i64 + n) as usize] += 1;
            }
            h
        };
        let (a, b) = (tally(&self.cross_dtau.0), tally(&self.cross_dtau.1));
        let mut out = String::from("dtau_ns,measured,reference\n");
        for k in 0..a.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                (k as i64 - n) as f64 * bin,
                a[k],
                b[k]
            ));
        }
        out
    }
}

/// Splitter visibility from cross-detector fractions relative to a
/// distinguishable reference: a second stream with orthogonal polarizations
/// if given, otherwise pairs offset by whole duty cycles in the same stream.
pub fn analyze_hom(
    stream: &TimeTagStream,
    reference: Option<&TimeTagStream>,
    cfg: &ExperimentConfig,
) -> Result<HomAnalysis> {
    if stream.n_channels() != 2 {
        return Err(Error::EmptyData(format!(
            "splitter streams have 2 channels, got {}",
            stream.n_channels()
        )));
    }
    let (set, offset, dead_time) = corrected_counts(stream, cfg)?;
    let cross_of = |s: &CoincidenceSet| s.counts.get(0, 1).unwrap_or(0.0);
    let cross = cross_of(&set);
    let corrected_total = dead_time.corrected.total();
    let (reference_kind, reference_cross, reference_total, ref_events) = match reference {
        Some(orth) => {
            let (rset, _, rdt) = corrected_counts(orth, cfg)?;
            (
                "orthogonal_stream",
                cross_of(&rset),
                rdt.corrected.total(),
                rset.events,
            )
        }
        None => (
            "time_offset",
            cross_of(&offset),
            offset.counts.total(),
            offset.events,
        ),
    };
    if reference_cross <= 0.0 || corrected_total <= 0.0 {
        return Err(Error::EmptyData(
            "reference has no cross-detector coincidences".into(),
        ));
    }
    let visibility = 1.0 - (cross / corrected_total) / (reference_cross / reference_total);
    let w = cfg.analysis.hom_window;
    let cross_list = |events: &[crate::tagstream::Coincidence]| -> Vec<f64> {
        events
            .iter()
            .filter(|e| !e.pair.is_same_detector())
            .map(|e| e.dtau)
            .collect()
    };
    let measured_dtau = cross_list(&set.events);
    let reference_dtau = cross_list(&ref_events);
    let inside = |v: &[f64]| v.iter().filter(|x| x.abs() < w).count() as f64;
    let ref_inside = inside(&reference_dtau);
    let windowed_visibility = if ref_inside > 0.0 {
        1.0 - inside(&measured_dtau) * reference_total / (ref_inside * corrected_total)
    } else {
        f64::NAN
    };
    Ok(HomAnalysis {
        visibility,
        window: w,
        windowed_visibility,
        cross,
        corrected_total,
        reference_kind,
        reference_cross,
        reference_total,
        dead_time,
        cross_dtau: (measured_dtau, reference_dtau),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SimilarityEntry {
    pub mode: f64,
    pub hpd68: (f64, f64),
    pub mean: f64,
    pub raw: Option<f64>,
    pub n_trials: usize,
    pub seed: u64,
}

impl From<&SimilarityResult> for SimilarityEntry {
    fn from(r: &SimilarityResult) -> Self {
        Self {
            mode: r.mode,
            hpd68: r.hpd68,
            mean: r.mean,
            raw: r.raw,
            n_trials: r.n_trials,
            seed: r.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MmiAnalysis {
    /// One-based element inputs.
    pub inputs: (usize, usize),
    pub n_coincidences: usize,
    #[serde(serialize_with = "serialize_distribution")]
    pub raw_counts: CoincidenceDistribution,
    #[serde(serialize_with = "serialize_distribution")]
    pub corrected_counts: CoincidenceDistribution,
    pub dead_time: DeadtimeCorrection,
    pub fit: VisibilityFit,
    /// Similarity of the corrected counts to the fitted mixture.
    pub similarity_fitted: f64,
    pub vs_quantum: SimilarityEntry,
    pub vs_classical: SimilarityEntry,
    pub vs_fitted: SimilarityEntry,
    pub cross_vs_quantum: SimilarityEntry,
    pub cross_vs_classical: SimilarityEntry,
    /// Similarity bound between the two cross-detector predictions.
    pub cross_bound: f64,
}

fn serialize_distribution<S: serde::Serializer>(
    d: &CoincidenceDistribution,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    d.to_json_value().serialize(s)
}

/// Extraction, dead-time correction, visibility fit and similarity to the
/// quantum, classical and fitted predictions.
pub fn analyze_mmi(
    stream: &TimeTagStream,
    matrix: &TransferMatrix,
    inputs: (usize, usize),
    cfg: &ExperimentConfig,
    trials: usize,
) -> Result<MmiAnalysis> {
    if stream.n_channels() as usize != matrix.n_modes() {
        return Err(Error::EmptyData(format!(
            "stream has {} channels but the matrix has {} outputs",
            stream.n_channels(),
            matrix.n_modes()
        )));
    }
    let (i, j) = inputs;
    let (set, _, dead_time) = corrected_counts(stream, cfg)?;
    let corrected = dead_time.corrected.clone();
    let q = coincidence_quantum(matrix, i, j, Normalization::Renormalized)?;
    let c = coincidence_classical(matrix, i, j, Normalization::Renormalized)?;
    let fit = fit_visibility(&corrected, matrix, i, j)?;
    let r = q.mix(&c, fit.visibility)?;
    let seed = cfg.analysis.seed;
    let mc = |counts: &CoincidenceDistribution,
              theory: &CoincidenceDistribution,
              tag: u64|
     -> Result<SimilarityEntry> {
        Ok((&poisson_mc_similarity(
            counts.values(),
            theory.values(),
            trials,
            derive_seed(seed, 100 + tag),
        )?)
            .into())
    };
    let cross_counts = set.counts.cross_detector();
    let (qx, cx) = (q.cross_detector(), c.cross_detector());
    Ok(MmiAnalysis {
        inputs: (i + 1, j + 1),
        n_coincidences: set.events.len(),
        raw_counts: set.counts.clone(),
        similarity_fitted: similarity(corrected.values(), r.values())?,
        vs_quantum: mc(&corrected, &q, 0)?,
        vs_classical: mc(&corrected, &c, 1)?,
        vs_fitted: mc(&corrected, &r, 2)?,
        cross_vs_quantum: mc(&cross_counts, &qx, 3)?,
        cross_vs_classical: mc(&cross_counts, &cx, 4)?,
        cross_bound: similarity(qx.values(), cx.values())?,
        corrected_counts: corrected,
        dead_time,
        fit,
    })
}

/// Cross-detector similarity to the quantum and classical predictions per
/// detection-time separation window.
pub fn analyze_time_resolved(
    stream: &TimeTagStream,
    matrix: &TransferMatrix,
    inputs: (usize, usize),
    cfg: &ExperimentConfig,
    trials: usize,
) -> Result<Vec<TimeResolvedPoint>> {
    let (i, j) = inputs;
    let set = extract_coincidences(
        stream,
        PairingOptions::simultaneous(cfg.analysis.coincidence_window),
    )?;
    let q = coincidence_quantum(matrix, i, j, Normalization::Renormalized)?.cross_detector();
    let c = coincidence_classical(matrix, i, j, Normalization::Renormalized)?.cross_detector();
    let a = &cfg.analysis;
    similarity_vs_dt(
        &set.event_pairs(),
        &q,
        &c,
        &a.time_resolved_centers,
        a.time_resolved_half_window,
        trials,
        derive_seed(a.seed, 200),
    )
}

pub fn time_resolved_csv(points: &[TimeResolvedPoint]) -> String {
    let mut out = String::from("center_ns,events,sq_mode,sq_lo,sq_hi,sc_mode,sc_lo,sc_hi\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            p.center,
            p.n_events,
            p.vs_quantum.mode,
            p.vs_quantum.hpd68.0,
            p.vs_quantum.hpd68.1,
            p.vs_classical.mode,
            p.vs_classical.hpd68.0,
            p.vs_classical.hpd68.1
        ));
    }
    out
}
