//! Brute-force two-photon evolution in occupation-number space.
//!
//! Independent of the closed forms in [`super::detection`]: input creation
//! operators are expanded over output modes and applied to the vacuum with
//! bosonic `sqrt(n + 1)` factors, then probabilities are read off the Fock
//! amplitudes.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::distribution::{all_pairs, CoincidenceDistribution, ModePair};
use super::matrix::TransferMatrix;
use crate::error::{Error, Result};

type Occupation = Vec<u8>;

/// Sparse superposition of Fock states over output modes.
#[derive(Debug, Clone, Default)]
struct FockState {
    terms: BTreeMap<Occupation, Complex64>,
}

impl FockState {
    fn vacuum(n_modes: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![0; n_modes], Complex64::new(1.0, 0.0));
        Self { terms }
    }

    /// Applies `sum_k coeffs[k] b_k^dagger`.
    fn create(&self, coeffs: &[Complex64]) -> Self {
        let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (occ, amp) in &self.terms {
            for (mode, &c) in coeffs.iter().enumerate() {
                if c == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let mut next = occ.clone();
                let bosonic = ((next[mode] as f64) + 1.0).sqrt();
                next[mode] += 1;
                *out.entry(next).or_default() += amp * c * bosonic;
            }
        }
        Self { terms: out }
    }
}

/// Normalized amplitudes over the two-photon Fock basis `|1_k 1_l>` / `|2_k>`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonState {
    n_modes: usize,
    amplitudes: Vec<Complex64>,
}

impl TwoPhotonState {
    /// Output state produced by photons in inputs `i` and `j`, before normalization.
    pub fn evolve(m: &TransferMatrix, i: usize, j: usize) -> Result<Self> {
        m.check_index(i)?;
        m.check_index(j)?;
        if i == j {
            return Err(Error::SameInput(i));
        }
        let n = m.n_modes();
        let state = FockState::vacuum(n).create(m.row(j)).create(m.row(i));
        let amplitudes = all_pairs(n)
            .into_iter()
            .map(|p| {
                let mut occ = vec![0u8; n];
                occ[p.first] += 1;
                occ[p.second] += 1;
                state.terms.get(&occ).copied().unwrap_or_default()
            })
            .collect();
        Ok(Self {
            n_modes: n,
            amplitudes,
        })
    }

    /// Basis dimension `n(n+1)/2`.
    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroDistribution);
        }
        Ok(Self {
            n_modes: self.n_modes,
            amplitudes: self.amplitudes.iter().map(|a| a / norm).collect(),
        })
    }

    pub fn probabilities(&self) -> CoincidenceDistribution {
        let probs: Vec<f64> = self.amplitudes.iter().map(|a| a.norm_sqr()).collect();
        let mut it = probs.into_iter();
        CoincidenceDistribution::from_fn(self.n_modes, |_| it.next().unwrap_or(0.0))
    }
}

/// Pair-detection probabilities by explicit evolution of `a_i^dagger a_j^dagger |0>`.
///
/// With `distinguishable` set, each photon is propagated on its own and the
/// order-resolved products are summed into unordered pairs. No renormalization
/// is applied.
pub fn fock_oracle(
    m: &TransferMatrix,
    i: usize,
    j: usize,
    distinguishable: bool,
) -> Result<CoincidenceDistribution> {
    if !distinguishable {
        return Ok(TwoPhotonState::evolve(m, i, j)?.probabilities());
    }
    m.check_index(i)?;
    m.check_index(j)?;
    if i == j {
        return Err(Error::SameInput(i));
    }
    let n = m.n_modes();
    let mut table: BTreeMap<ModePair, f64> = BTreeMap::new();
    for k in 0..n {
        for l in 0..n {
            let p = m.get(i, k).norm_sqr() * m.get(j, l).norm_sqr();
            *table.entry(ModePair::new(k, l)).or_default() += p;
        }
    }
    Ok(CoincidenceDistribution::from_fn(n, |p| table[&p]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmi::detection::{coincidence_classical, coincidence_quantum, Normalization};

    #[test]
    fn identity_matches_closed_form() {
        let id = TransferMatrix::identity(4).unwrap();
        let o = fock_oracle(&id, 0, 1, false).unwrap();
        let q = coincidence_quantum(&id, 0, 1, Normalization::Raw).unwrap();
        assert_eq!(o.values(), q.values());
    }

    #[test]
    fn splitter_bunches() {
        let bs = TransferMatrix::balanced_splitter();
        let o = fock_oracle(&bs, 0, 1, false).unwrap();
        assert!(o.get(0, 1).unwrap() < 1e-30);
        assert!((o.get(0, 0).unwrap() - 0.5).abs() < 1e-15);
        let d = fock_oracle(&bs, 0, 1, true).unwrap();
        let c = coincidence_classical(&bs, 0, 1, Normalization::Raw).unwrap();
        for (a, b) in d.values().iter().zip(c.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn state_dimension_and_normalization() {
        let m = TransferMatrix::measured_chip();
        let s = TwoPhotonState::evolve(&m, 0, 2).unwrap();
        assert_eq!(s.dimension(), 10);
        let n = s.normalized().unwrap();
        assert!((n.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(TwoPhotonState::evolve(&m, 2, 2).is_err());
    }
}
