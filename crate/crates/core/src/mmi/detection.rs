//! Detection-probability algebra for two photons entering distinct input modes.
//!
//! The first detection at output `k` projects the remaining excitation onto a
//! superposition of the two inputs; the second detection at `l` then completes
//! the coincidence. Summing both detection orders gives the closed forms used
//! throughout the crate.

use num_complex::Complex64;

use super::distribution::{CoincidenceDistribution, ModePair};
use super::matrix::TransferMatrix;
use crate::error::{Error, Result};

/// Whether predicted distributions are rescaled to unit total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Closed forms as computed from `M`.
    Raw,
    /// Rescaled to sum to one, required when `M` is a measured non-unitary matrix.
    #[default]
    Renormalized,
}

/// Remaining single excitation after the first detection:
/// `alpha` on input `j`, `beta` on input `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntangledInputState {
    pub input_i: usize,
    pub input_j: usize,
    pub herald: usize,
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl EntangledInputState {
    pub fn norm_sqr(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr()
    }
}

fn check_inputs(m: &TransferMatrix, i: usize, j: usize) -> Result<()> {
    m.check_index(i)?;
    m.check_index(j)?;
    if i == j {
        return Err(Error::SameInput(i));
    }
    Ok(())
}

/// Probability that the first detection happens at output `k`.
pub fn detection_prob_first(m: &TransferMatrix, i: usize, j: usize, k: usize) -> Result<f64> {
    check_inputs(m, i, j)?;
    m.check_index(k)?;
    Ok(0.5 * (m.get(i, k).norm_sqr() + m.get(j, k).norm_sqr()))
}

/// State of the inputs after a detection at output `k`.
pub fn project_first_detection(
    m: &TransferMatrix,
    i: usize,
    j: usize,
    k: usize,
) -> Result<EntangledInputState> {
    let p_k = detection_prob_first(m, i, j, k)?;
    if p_k <= 0.0 {
        return Err(Error::UnreachableHerald { i, j, k });
    }
    let norm = (2.0 * p_k).sqrt();
    Ok(EntangledInputState {
        input_i: i,
        input_j: j,
        herald: k,
        alpha: m.get(i, k) / norm,
        beta: m.get(j, k) / norm,
    })
}

/// Probability of the second detection landing in `l` given the heralded state.
pub fn detection_prob_second(
    state: &EntangledInputState,
    m: &TransferMatrix,
    l: usize,
) -> Result<f64> {
    m.check_index(l)?;
    m.check_index(state.input_i)?;
    m.check_index(state.input_j)?;
    let amplitude = state.alpha * m.get(state.input_j, l) + state.beta * m.get(state.input_i, l);
    Ok(amplitude.norm_sqr())
}

fn finish(
    dist: CoincidenceDistribution,
    normalization: Normalization,
) -> Result<CoincidenceDistribution> {
    if dist.total() <= 0.0 {
        return Err(Error::ZeroDistribution);
    }
    match normalization {
        Normalization::Raw => Ok(dist),
        Normalization::Renormalized => dist.normalized(),
    }
}

fn pair_factor(p: ModePair) -> f64 {
    if p.is_same_detector() {
        0.5
    } else {
        1.0
    }
}

/// Coincidence probabilities for indistinguishable photons.
pub fn coincidence_quantum(
    m: &TransferMatrix,
    i: usize,
    j: usize,
    normalization: Normalization,
) -> Result<CoincidenceDistribution> {
    check_inputs(m, i, j)?;
    let dist = CoincidenceDistribution::from_fn(m.n_modes(), |p| {
        let (k, l) = (p.first, p.second);
        let amp = m.get(i, k) * m.get(j, l) + m.get(i, l) * m.get(j, k);
        pair_factor(p) * amp.norm_sqr()
    });
    finish(dist, normalization)
}

/// Coincidence probabilities for fully distinguishable photons.
pub fn coincidence_classical(
    m: &TransferMatrix,
    i: usize,
    j: usize,
    normalization: Normalization,
) -> Result<CoincidenceDistribution> {
    check_inputs(m, i, j)?;
    let dist = CoincidenceDistribution::from_fn(m.n_modes(), |p| {
        let (k, l) = (p.first, p.second);
        let direct = (m.get(i, k) * m.get(j, l)).norm_sqr();
        let swapped = (m.get(i, l) * m.get(j, k)).norm_sqr();
        pair_factor(p) * (direct + swapped)
    });
    finish(dist, normalization)
}

/// Visibility-weighted mixture `V Q + (1 - V) C` of the renormalized limits.
pub fn coincidence_mixture(
    m: &TransferMatrix,
    i: usize,
    j: usize,
    visibility: f64,
) -> Result<CoincidenceDistribution> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::invalid(
            "visibility",
            format!("{visibility} not in [0, 1]"),
        ));
    }
    let q = coincidence_quantum(m, i, j, Normalization::Renormalized)?;
    let c = coincidence_classical(m, i, j, Normalization::Renormalized)?;
    q.mix(&c, visibility)
}

/// Size of the rescaling needed to make `Q` sum to one, per input pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RenormalizationSummary {
    /// `(i, j, sum of raw Q)` for every unordered input pair.
    pub totals: Vec<(usize, usize, f64)>,
    /// Mean of `|1 - sum Q|`.
    pub mean_deficit: f64,
    /// Mean of `|1/sum Q - 1|`, the relative change applied to each probability.
    pub mean_rescale: f64,
}

pub fn renormalization_summary(m: &TransferMatrix) -> Result<RenormalizationSummary> {
    let n = m.n_modes();
    let mut totals = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let q = coincidence_quantum(m, i, j, Normalization::Raw)?;
            totals.push((i, j, q.total()));
        }
    }
    let count = totals.len() as f64;
    let mean_deficit = totals.iter().map(|t| (1.0 - t.2).abs()).sum::<f64>() / count;
    let mean_rescale = totals.iter().map(|t| (1.0 / t.2 - 1.0).abs()).sum::<f64>() / count;
    Ok(RenormalizationSummary {
        totals,
        mean_deficit,
        mean_rescale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmi::fock;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chip() -> TransferMatrix {
        TransferMatrix::measured_chip()
    }

    #[test]
    fn first_detection_examples() {
        let m = chip();
        let p = detection_prob_first(&m, 0, 1, 0).unwrap();
        assert!((p - 0.5 * (0.28f64.powi(2) + 0.41f64.powi(2))).abs() < 1e-15);
        assert!((p - 0.12325).abs() < 1e-12);
        let id = TransferMatrix::identity(4).unwrap();
        assert_eq!(detection_prob_first(&id, 0, 1, 0).unwrap(), 0.5);
        assert_eq!(detection_prob_first(&id, 0, 1, 2).unwrap(), 0.0);
    }

    #[test]
    fn first_detection_errors() {
        let m = chip();
        assert!(matches!(
            detection_prob_first(&m, 1, 1, 0),
            Err(Error::SameInput(1))
        ));
        assert!(matches!(
            detection_prob_first(&m, 0, 4, 0),
            Err(Error::IndexOutOfRange { index: 4, .. })
        ));
        let id = TransferMatrix::identity(4).unwrap();
        assert!(matches!(
            project_first_detection(&id, 0, 1, 3),
            Err(Error::UnreachableHerald { .. })
        ));
    }

    #[test]
    fn first_detection_sums_to_one_for_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = TransferMatrix::random_unitary(4, &mut rng).unwrap();
        let total: f64 = (0..4)
            .map(|k| detection_prob_first(&u, 1, 3, k).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_examples() {
        let id = TransferMatrix::identity(4).unwrap();
        let s = project_first_detection(&id, 0, 1, 0).unwrap();
        assert_eq!(s.alpha, Complex64::new(1.0, 0.0));
        assert_eq!(s.beta, Complex64::new(0.0, 0.0));

        let bs = TransferMatrix::balanced_splitter();
        let s = project_first_detection(&bs, 0, 1, 0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.alpha - Complex64::new(h, 0.0)).norm() < 1e-15);
        assert!((s.beta - Complex64::new(h, 0.0)).norm() < 1e-15);

        let m = chip();
        let s = project_first_detection(&m, 0, 1, 2).unwrap();
        let norm = (0.45f64.powi(2) + 0.41f64.powi(2)).sqrt();
        assert!((s.alpha - Complex64::new(0.45 / norm, 0.0)).norm() < 1e-12);
        assert!((s.beta - Complex64::from_polar(0.41 / norm, 3.86)).norm() < 1e-12);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn second_detection_examples() {
        let id = TransferMatrix::identity(4).unwrap();
        let s = project_first_detection(&id, 0, 1, 0).unwrap();
        let probs: Vec<f64> = (0..4)
            .map(|l| detection_prob_second(&s, &id, l).unwrap())
            .collect();
        assert_eq!(probs, vec![0.0, 1.0, 0.0, 0.0]);

        let bs = TransferMatrix::balanced_splitter();
        let s = project_first_detection(&bs, 0, 1, 0).unwrap();
        assert!((detection_prob_second(&s, &bs, 0).unwrap() - 1.0).abs() < 1e-15);
        assert!(detection_prob_second(&s, &bs, 1).unwrap().abs() < 1e-15);
    }

    #[test]
    fn second_detection_matches_conditional_fock_statistics() {
        // P(l|k) = P(k,l ordered) / P(k) where the ordered joint comes from the oracle.
        let m = chip();
        let (i, j, k) = (0, 1, 0);
        let s = project_first_detection(&m, i, j, k).unwrap();
        let p_k = detection_prob_first(&m, i, j, k).unwrap();
        let joint = fock::fock_oracle(&m, i, j, false).unwrap();
        let mut total = 0.0;
        for l in 0..4 {
            let cond = detection_prob_second(&s, &m, l).unwrap();
            // Ordered probability of (k then l) is half the unordered cross term, or the full k=l term.
            let q = joint.get(k, l).unwrap();
            let ordered = if k == l { q } else { 0.5 * q };
            assert!((cond * p_k - ordered).abs() < 1e-12, "l={l}");
            total += cond;
        }
        let dev = m.unitarity_deviation().max();
        assert!((total - 1.0).abs() <= 2.0 * dev + 0.05, "total {total}");
    }

    #[test]
    fn splitter_and_identity_tables() {
        let bs = TransferMatrix::balanced_splitter();
        let q = coincidence_quantum(&bs, 0, 1, Normalization::Raw).unwrap();
        assert!(q.get(0, 1).unwrap().abs() < 1e-15);
        assert!((q.get(0, 0).unwrap() - 0.5).abs() < 1e-15);
        assert!((q.get(1, 1).unwrap() - 0.5).abs() < 1e-15);
        let c = coincidence_classical(&bs, 0, 1, Normalization::Raw).unwrap();
        assert!((c.get(0, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!((c.get(0, 0).unwrap() - 0.25).abs() < 1e-15);

        let id = TransferMatrix::identity(4).unwrap();
        let q = coincidence_quantum(&id, 0, 1, Normalization::Raw).unwrap();
        let c = coincidence_classical(&id, 0, 1, Normalization::Raw).unwrap();
        for (p, v) in q.iter() {
            let expect = if p == ModePair::new(0, 1) { 1.0 } else { 0.0 };
            assert_eq!(v, expect);
            assert_eq!(c.get(p.first, p.second).unwrap(), expect);
        }
    }

    #[test]
    fn chip_same_detector_values() {
        let m = chip();
        let q = coincidence_quantum(&m, 0, 1, Normalization::Raw).unwrap();
        let c = coincidence_classical(&m, 0, 1, Normalization::Raw).unwrap();
        let expect_c = (0.28f64 * 0.41).powi(2);
        assert!((q.get(0, 0).unwrap() - 2.0 * expect_c).abs() < 1e-15);
        assert!((q.get(0, 0).unwrap() - 0.02636).abs() < 1e-5);
        assert!((c.get(0, 0).unwrap() - expect_c).abs() < 1e-15);
        assert!((c.get(0, 0).unwrap() - 0.01318).abs() < 1e-5);
    }

    #[test]
    fn mixture_limits_and_midpoint() {
        let m = chip();
        let q = coincidence_quantum(&m, 0, 1, Normalization::Renormalized).unwrap();
        let c = coincidence_classical(&m, 0, 1, Normalization::Renormalized).unwrap();
        assert_eq!(
            coincidence_mixture(&m, 0, 1, 1.0).unwrap().values(),
            q.values()
        );
        assert_eq!(
            coincidence_mixture(&m, 0, 1, 0.0).unwrap().values(),
            c.values()
        );
        let r = coincidence_mixture(&m, 0, 1, 0.708).unwrap();
        for ((rv, qv), cv) in r.values().iter().zip(q.values()).zip(c.values()) {
            assert!((rv - (0.708 * qv + 0.292 * cv)).abs() < 1e-15);
        }
        assert!(coincidence_mixture(&m, 0, 1, 1.2).is_err());
        assert!(coincidence_mixture(&m, 0, 1, -0.1).is_err());
    }

    #[test]
    fn renormalized_outputs_sum_to_one() {
        let m = chip();
        for (i, j) in [(0, 1), (0, 2), (2, 3)] {
            let q = coincidence_quantum(&m, i, j, Normalization::Renormalized).unwrap();
            assert!(q.is_renormalized());
            assert!((q.total() - 1.0).abs() < 1e-12);
        }
    }
}
