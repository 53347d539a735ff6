use serde::Serialize;

use super::histogram::CorrelationHistogram;
use crate::error::{Error, Result};

/// Side peaks per side entering the trend fit.
pub const TREND_PEAKS: usize = 4;

#[derive(Debug, Clone, Serialize)]
pub struct PeakArea {
    /// Peak order `m` (center at `m * duty_cycle`).
    pub order: i64,
    pub center: f64,
    pub area: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct G2Report {
    pub g2_zero: f64,
    pub central_area: f64,
    /// Side-peak level extrapolated to zero delay.
    pub reference_area: f64,
    /// Slope of the side-peak trend per peak order.
    pub trend_slope: f64,
    pub peaks: Vec<PeakArea>,
}

impl G2Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("order,center_ns,area\n");
        for p in &self.peaks {
            out.push_str(&format!("{},{},{}\n", p.order, p.center, p.area));
        }
        out
    }
}

/// Normalized central-peak area of a pulsed correlation histogram.
///
/// Peak `m` integrates all pairs within `±duty_cycle/2` of `m * duty_cycle`.
/// The nearest side peaks on both sides are fitted linearly against `|m|`,
/// and the fit is extrapolated to `m = 0`, so a decaying side-peak envelope
/// does not bias the normalization.
pub fn g2_zero(hist: &CorrelationHistogram, duty_cycle: f64) -> Result<G2Report> {
    if !(duty_cycle > 0.0) {
        return Err(Error::invalid(
            "duty_cycle",
            format!("{duty_cycle} must be positive"),
        ));
    }
    let covered = hist.range - 0.5 * hist.bin_width;
    let max_order = ((covered - 0.5 * duty_cycle) / duty_cycle + 1e-9).floor() as i64;
    if max_order < TREND_PEAKS as i64 {
        return Err(Error::NoSidePeaks(format!(
            "range ±{} ns holds {} complete side peaks per side, need {TREND_PEAKS}",
            hist.range,
            max_order.max(0)
        )));
    }
    let peaks: Vec<PeakArea> = (-max_order..=max_order)
        .map(|m| {
            let center = m as f64 * duty_cycle;
            PeakArea {
                order: m,
                center,
                area: hist.area(center - 0.5 * duty_cycle, center + 0.5 * duty_cycle),
            }
        })
        .collect();
    let central_area = peaks[max_order as usize].area;

    let side: Vec<(f64, f64)> = peaks
        .iter()
        .filter(|p| p.order != 0 && p.order.unsigned_abs() as usize <= TREND_PEAKS)
        .map(|p| (p.order.abs() as f64, p.area))
        .collect();
    let n = side.len() as f64;
    let mx = side.iter().map(|p| p.0).sum::<f64>() / n;
    let my = side.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = side.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = side.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let reference_area = my - slope * mx;
    if !(reference_area > 0.0) {
        return Err(Error::NoSidePeaks(
            "side peaks extrapolate to a non-positive level".into(),
        ));
    }
    Ok(G2Report {
        g2_zero: central_area / reference_area,
        central_area,
        reference_area,
        trend_slope: slope,
        peaks,
    })
}
