use super::detection::{coincidence_classical, coincidence_quantum, Normalization};
use super::distribution::CoincidenceDistribution;
use super::matrix::TransferMatrix;
use crate::error::{Error, Result};
use crate::stats::similarity;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct VisibilityFit {
    pub visibility: f64,
    pub similarity: f64,
}

const GRID_STEPS: usize = 1000;

/// Two-photon visibility whose mixture `V Q + (1 - V) C` is most similar to
/// the measured counts.
///
/// Only the pairs present in `measured` enter the comparison, so a
/// cross-detector-only histogram is fitted against the cross-detector part of
/// the prediction. A dense grid (step 0.001) is followed by golden-section
/// refinement around the best grid point.
pub fn fit_visibility(
    measured: &CoincidenceDistribution,
    m: &TransferMatrix,
    i: usize,
    j: usize,
) -> Result<VisibilityFit> {
    if measured.total() <= 0.0 {
        return Err(Error::EmptyData(
            "measured coincidence counts are all zero".into(),
        ));
    }
    let q = coincidence_quantum(m, i, j, Normalization::Renormalized)?.restricted_to(measured)?;
    let c = coincidence_classical(m, i, j, Normalization::Renormalized)?.restricted_to(measured)?;
    let objective = |v: f64| -> f64 {
        let r: Vec<f64> = q
            .values()
            .iter()
            .zip(c.values())
            .map(|(a, b)| v * a + (1.0 - v) * b)
            .collect();
        similarity(measured.values(), &r).unwrap_or(0.0)
    };

    let mut best = (0usize, f64::NEG_INFINITY);
    for step in 0..=GRID_STEPS {
        let s = objective(step as f64 / GRID_STEPS as f64);
        if s > best.1 {
            best = (step, s);
        }
    }
    let h = 1.0 / GRID_STEPS as f64;
    let lo = (best.0 as f64 * h - h).max(0.0);
    let hi = (best.0 as f64 * h + h).min(1.0);
    let (v_ref, s_ref) = golden_section_max(&objective, lo, hi, 1e-9);
    let grid_v = best.0 as f64 * h;
    if s_ref >= best.1 {
        Ok(VisibilityFit {
            visibility: v_ref,
            similarity: s_ref,
        })
    } else {
        Ok(VisibilityFit {
            visibility: grid_v,
            similarity: best.1,
        })
    }
}

fn golden_section_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a) > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
