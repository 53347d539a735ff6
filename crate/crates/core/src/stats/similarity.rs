use crate::error::{Error, Result};

/// Normalized classical fidelity `sum sqrt(p q) / sqrt(sum p * sum q)`.
///
/// Invariant under independent rescaling of either argument, so raw counts can
/// be compared directly with probabilities.
pub fn similarity(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    if p.iter().chain(q).any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::invalid(
            "distribution",
            "entries must be finite and non-negative",
        ));
    }
    let sum_p: f64 = p.iter().sum();
    let sum_q: f64 = q.iter().sum();
    if sum_p <= 0.0 || sum_q <= 0.0 {
        return Err(Error::ZeroDistribution);
    }
    Ok(overlap(p, q, sum_p, sum_q))
}

/// Unchecked core used in Monte-Carlo inner loops.
#[inline]
pub(crate) fn overlap(p: &[f64], q: &[f64], sum_p: f64, sum_q: f64) -> f64 {
    let num: f64 = p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum();
    (num / (sum_p * sum_q).sqrt()).min(1.0)
}
