use num_complex::Complex64;
use rayon::prelude::*;

use super::coherence::CoherenceModel;
use super::wavepacket::Wavepacket;
use crate::error::{Error, Result};
use crate::mmi::{all_pairs, CoincidenceDistribution, ModePair, TransferMatrix};

/// Joint detection-time densities for every unordered output pair.
///
/// For pair `{k, l}` with `k <= l`, entry `(n1, n2)` is the density of one
/// detection at `k` at time `t(n1)` and one at `l` at `t(n2)` (1/ns^2). Both
/// orderings in time are covered, so `t2 - t1` takes either sign.
#[derive(Debug, Clone)]
pub struct JointDensity {
    n_modes: usize,
    start: f64,
    dt: f64,
    n_grid: usize,
    pairs: Vec<ModePair>,
    densities: Vec<Vec<f64>>,
}

fn common_grid(a: &Wavepacket, b: &Wavepacket) -> Result<(f64, usize)> {
    if (a.dt() - b.dt()).abs() > 1e-12 * a.dt() {
        return Err(Error::invalid(
            "dt",
            format!("incompatible grids: {} vs {}", a.dt(), b.dt()),
        ));
    }
    let dt = a.dt();
    let offset = (b.start() - a.start()) / dt;
    if (offset - offset.round()).abs() > 1e-9 {
        return Err(Error::invalid("start", "wavepacket grids are not aligned"));
    }
    let start = a.start().min(b.start());
    let end = a.end().max(b.end());
    Ok((start, ((end - start) / dt).round() as usize + 1))
}

fn resample(w: &Wavepacket, start: f64, n_grid: usize) -> Vec<Complex64> {
    let first = ((w.start() - start) / w.dt()).round() as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); n_grid];
    out[first..first + w.len()].copy_from_slice(w.samples());
    out
}

/// Evaluates the time-resolved two-photon coincidence densities for photons
/// with amplitudes `zeta_i`, `zeta_j` entering inputs `i` and `j`.
///
/// `delay_offset` delays photon `j` relative to photon `i` (ns).
pub fn joint_density(
    m: &TransferMatrix,
    i: usize,
    j: usize,
    zeta_i: &Wavepacket,
    zeta_j: &Wavepacket,
    coherence: CoherenceModel,
    delay_offset: f64,
) -> Result<JointDensity> {
    m.check_index(i)?;
    m.check_index(j)?;
    if i == j {
        return Err(Error::SameInput(i));
    }
    coherence.validate()?;
    let zeta_j = zeta_j.shifted(delay_offset)?;
    let (start, n_grid) = common_grid(zeta_i, &zeta_j)?;
    let dt = zeta_i.dt();
    let zi = resample(zeta_i, start, n_grid);
    let zj = resample(&zeta_j, start, n_grid);
    let kappa: Vec<f64> = (0..2 * n_grid - 1)
        .map(|d| coherence.kappa((d as f64 - (n_grid - 1) as f64) * dt))
        .collect();

    let pairs = all_pairs(m.n_modes());
    let densities = pairs
        .iter()
        .map(|p| {
            let (k, l) = (p.first, p.second);
            let direct = m.get(i, k) * m.get(j, l);
            let swapped = m.get(i, l) * m.get(j, k);
            let cross = direct * swapped.conj();
            let factor = if k == l { 0.5 } else { 1.0 };
            let (da, sa) = (direct.norm_sqr(), swapped.norm_sqr());
            let mut grid = vec![0.0; n_grid * n_grid];
            grid.par_chunks_mut(n_grid)
                .enumerate()
                .for_each(|(n1, row)| {
                    let (zi1, zj1) = (zi[n1], zj[n1]);
                    if zi1.norm_sqr() == 0.0 && zj1.norm_sqr() == 0.0 {
                        return;
                    }
                    for (n2, cell) in row.iter_mut().enumerate() {
                        let (zi2, zj2) = (zi[n2], zj[n2]);
                        let interference = (cross * zi1 * zj2 * (zj1 * zi2).conj()).re;
                        let kap = kappa[n2 + n_grid - 1 - n1];
                        let v = da * zi1.norm_sqr() * zj2.norm_sqr()
                            + sa * zj1.norm_sqr() * zi2.norm_sqr()
                            + 2.0 * kap * interference;
                        // rounding can leave values a few ulps below zero
                        *cell = factor * v.max(0.0);
                    }
                });
            grid
        })
        .collect();
    Ok(JointDensity {
        n_modes: m.n_modes(),
        start,
        dt,
        n_grid,
        pairs,
        densities,
    })
}

impl JointDensity {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_grid(&self) -> usize {
        self.n_grid
    }

    pub fn time(&self, n: usize) -> f64 {
        self.start + n as f64 * self.dt
    }

    pub fn pairs(&self) -> &[ModePair] {
        &self.pairs
    }

    /// Row-major `(t1, t2)` density of one pair.
    pub fn density(&self, pair: ModePair) -> Option<&[f64]> {
        self.pairs
            .binary_search(&pair)
            .ok()
            .map(|idx| self.densities[idx].as_slice())
    }

    /// Largest representable `|t2 - t1|`.
    pub fn max_separation(&self) -> f64 {
        (self.n_grid - 1) as f64 * self.dt
    }

    /// Density of `t2 - t1` for one pair (1/ns), lags `-(G-1) ..= G-1` steps.
    pub fn separation_marginal(&self, pair: ModePair) -> Option<Vec<f64>> {
        let g = self.n_grid;
        let grid = self.density(pair)?;
        let mut out = vec![0.0; 2 * g - 1];
        for n1 in 0..g {
            for n2 in 0..g {
                out[n2 + g - 1 - n1] += grid[n1 * g + n2] * self.dt;
            }
        }
        Some(out)
    }

    /// Integrated probabilities per pair, without renormalization.
    pub fn integrated(&self) -> CoincidenceDistribution {
        let area = self.dt * self.dt;
        let totals: Vec<f64> = self
            .densities
            .iter()
            .map(|d| d.iter().sum::<f64>() * area)
            .collect();
        CoincidenceDistribution::from_fn(self.n_modes, |p| {
            totals[self.pairs.binary_search(&p).expect("all pairs present")]
        })
    }

    /// Probabilities of pairs with `|t2 - t1| <= half_window`, renormalized to
    /// unit sum.
    pub fn windowed_distribution(&self, half_window: f64) -> Result<CoincidenceDistribution> {
        self.windowed_distribution_at(0.0, half_window)
    }

    /// Like [`windowed_distribution`](Self::windowed_distribution) for the
    /// window `||t2 - t1| - center| <= half_window`.
    pub fn windowed_distribution_at(
        &self,
        center: f64,
        half_window: f64,
    ) -> Result<CoincidenceDistribution> {
        if !(half_window > 0.0) {
            return Err(Error::invalid(
                "half_window",
                format!("{half_window} must be positive"),
            ));
        }
        if center + half_window > self.max_separation() {
            log::warn!(
                "window {center}±{half_window} ns exceeds the grid span of {} ns; clamping",
                self.max_separation()
            );
        }
        let g = self.n_grid;
        let tol = 1e-9 * self.dt;
        let marginals: Vec<Vec<f64>> = self
            .pairs
            .iter()
            .map(|&p| self.separation_marginal(p).expect("pair"))
            .collect();
        let totals: Vec<f64> = marginals
            .iter()
            .map(|marg| {
                marg.iter()
                    .enumerate()
                    .filter(|(idx, _)| {
                        let sep = ((*idx as f64) - (g - 1) as f64).abs() * self.dt;
                        (sep - center).abs() <= half_window + tol
                    })
                    .map(|(_, v)| v * self.dt)
                    .sum()
            })
            .collect();
        CoincidenceDistribution::from_fn(self.n_modes, |p| {
            totals[self.pairs.binary_search(&p).expect("pair")]
        })
        .normalized()
    }

    /// Density of one pair as CSV rows `t1,t2,value`, skipping zeros.
    pub fn to_csv(&self, pair: ModePair) -> Option<String> {
        let grid = self.density(pair)?;
        let mut out = String::from("t1_ns,t2_ns,density\n");
        for n1 in 0..self.n_grid {
            for n2 in 0..self.n_grid {
                let v = grid[n1 * self.n_grid + n2];
                if v > 0.0 {
                    out.push_str(&format!("{},{},{:e}\n", self.time(n1), self.time(n2), v));
                }
            }
        }
        Some(out)
    }
}
