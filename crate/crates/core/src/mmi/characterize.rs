//! Transfer-matrix characterization from classical-light measurements.
//!
//! Moduli come from direct single-input transmissions. Phases come from
//! two-input fringes: driving inputs `r` (the reference, input 0) and `i` with
//! equal amplitudes and relative phase `phi` gives, at output `k`,
//! `|M_rk + e^{i phi} M_ik|^2`, whose cosine offset is `arg M_ik - arg M_rk`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::matrix::TransferMatrix;
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Output powers versus relative phase for one probed input pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fringe {
    pub reference_input: usize,
    pub probe_input: usize,
    /// `powers[k][p]`: output `k` at phase-grid point `p`.
    pub powers: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeDataset {
    pub n_modes: usize,
    pub phase_grid: Vec<f64>,
    /// Measured `|M_ik|^2`.
    pub transmissions: Vec<Vec<f64>>,
    pub fringes: Vec<Fringe>,
}

impl FringeDataset {
    pub fn validate(&self) -> Result<()> {
        if self.phase_grid.len() < 8 {
            return Err(Error::Underdetermined(format!(
                "phase grid has {} points, need at least 8",
                self.phase_grid.len()
            )));
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        if self.phase_grid.iter().any(|&p| !(0.0..two_pi).contains(&p))
            || self.phase_grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::invalid(
                "phase_grid",
                "must be strictly increasing within [0, 2pi)",
            ));
        }
        if self.transmissions.len() != self.n_modes
            || self.transmissions.iter().any(|r| r.len() != self.n_modes)
        {
            return Err(Error::Underdetermined(
                "direct transmissions must cover every input and output".into(),
            ));
        }
        if self.transmissions.iter().flatten().any(|&t| !(t >= 0.0)) {
            return Err(Error::invalid(
                "transmissions",
                "powers must be non-negative",
            ));
        }
        for fringe in &self.fringes {
            if fringe.powers.len() != self.n_modes
                || fringe
                    .powers
                    .iter()
                    .any(|p| p.len() != self.phase_grid.len())
            {
                return Err(Error::Underdetermined(format!(
                    "fringe ({}, {}) does not cover every output on the phase grid",
                    fringe.reference_input, fringe.probe_input
                )));
            }
            if fringe.powers.iter().flatten().any(|&p| !(p >= 0.0)) {
                return Err(Error::invalid("fringes", "powers must be non-negative"));
            }
        }
        for probe in 1..self.n_modes {
            if self.fringe(probe).is_none() {
                return Err(Error::Underdetermined(format!(
                    "no fringe between input 1 and input {}",
                    probe + 1
                )));
            }
        }
        Ok(())
    }

    fn fringe(&self, probe: usize) -> Option<&Fringe> {
        self.fringes
            .iter()
            .find(|f| f.reference_input == 0 && f.probe_input == probe)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let data: Self = serde_json::from_str(text)?;
        data.validate()?;
        Ok(data)
    }
}

/// Uniform grid of `points` phases over `[0, 2pi)`.
pub fn uniform_phase_grid(points: usize) -> Vec<f64> {
    let step = 2.0 * std::f64::consts::PI / points as f64;
    (0..points).map(|p| p as f64 * step).collect()
}

/// Forward model of the characterization measurement with multiplicative
/// Gaussian power noise of relative size `noise_sd`.
pub fn simulate_fringes<R: Rng + ?Sized>(
    m: &TransferMatrix,
    noise_sd: f64,
    phase_grid: &[f64],
    rng: &mut R,
) -> Result<FringeDataset> {
    if !(noise_sd >= 0.0) || !noise_sd.is_finite() {
        return Err(Error::invalid(
            "noise_sd",
            format!("{noise_sd} must be >= 0"),
        ));
    }
    let noise = Normal::new(0.0, noise_sd.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::invalid("noise_sd", e.to_string()))?;
    let mut noisy = |value: f64| {
        if noise_sd == 0.0 {
            value
        } else {
            (value * (1.0 + noise.sample(rng))).max(0.0)
        }
    };
    let n = m.n_modes();
    let transmissions = (0..n)
        .map(|i| (0..n).map(|k| noisy(m.get(i, k).norm_sqr())).collect())
        .collect();
    let fringes = (1..n)
        .map(|probe| {
            let powers = (0..n)
                .map(|k| {
                    phase_grid
                        .iter()
                        .map(|&phi| {
                            let field =
                                m.get(0, k) + Complex64::from_polar(1.0, phi) * m.get(probe, k);
                            noisy(field.norm_sqr())
                        })
                        .collect()
                })
                .collect();
            Fringe {
                reference_input: 0,
                probe_input: probe,
                powers,
            }
        })
        .collect();
    let data = FringeDataset {
        n_modes: n,
        phase_grid: phase_grid.to_vec(),
        transmissions,
        fringes,
    };
    data.validate()?;
    Ok(data)
}

/// Least-squares fit of `a + b cos(phi) + c sin(phi)`; returns `(b, c, rms residual)`.
fn fit_cosine(phases: &[f64], powers: &[f64]) -> Option<(f64, f64, f64)> {
    // Normal equations for the 3-parameter linear model.
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for (&phi, &y) in phases.iter().zip(powers) {
        let basis = [1.0, phi.cos(), phi.sin()];
        for r in 0..3 {
            atb[r] += basis[r] * y;
            for c in 0..3 {
                ata[r][c] += basis[r] * basis[c];
            }
        }
    }
    let coeffs = solve3(ata, atb)?;
    let rss: f64 = phases
        .iter()
        .zip(powers)
        .map(|(&phi, &y)| {
            let fit = coeffs[0] + coeffs[1] * phi.cos() + coeffs[2] * phi.sin();
            (y - fit).powi(2)
        })
        .sum();
    let dof = (phases.len() as f64 - 3.0).max(1.0);
    Some((coeffs[1], coeffs[2], (rss / dof).sqrt()))
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..3 {
            let f = a[row][col] / a[col][col];
            for c in col..3 {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = ((row + 1)..3).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// Gauge-fixed estimate (first row and column real, non-negative).
    pub matrix: TransferMatrix,
    /// `phase_indeterminate[i][k]`: fringe contrast too low to fix the phase.
    pub phase_indeterminate: Vec<Vec<bool>>,
}

impl Reconstruction {
    pub fn any_indeterminate(&self) -> bool {
        self.phase_indeterminate.iter().flatten().any(|&b| b)
    }
}

/// Relative contrast below which a fringe is treated as flat.
const CONTRAST_FLOOR: f64 = 1e-9;

/// Recovers the gauge-fixed transfer matrix from a fringe dataset.
pub fn reconstruct_matrix(data: &FringeDataset) -> Result<Reconstruction> {
    data.validate()?;
    let n = data.n_modes;
    let samples = data.phase_grid.len() as f64;
    let moduli: Vec<Vec<f64>> = data
        .transmissions
        .iter()
        .map(|row| row.iter().map(|t| t.sqrt()).collect())
        .collect();

    // relative[i][k] = arg M_ik - arg M_0k
    let mut relative = vec![vec![0.0f64; n]; n];
    let mut indeterminate = vec![vec![false; n]; n];
    for probe in 1..n {
        let fringe = data.fringe(probe).expect("validated");
        for k in 0..n {
            let scale = fringe.powers[k].iter().fold(0.0f64, |a, &b| a.max(b));
            let fit = fit_cosine(&data.phase_grid, &fringe.powers[k]);
            match fit {
                Some((b, c, rms)) => {
                    let contrast = b.hypot(c);
                    let noise_floor = 3.0 * rms * (2.0 / samples).sqrt();
                    if contrast <= noise_floor.max(CONTRAST_FLOOR * scale.max(f64::MIN_POSITIVE)) {
                        indeterminate[probe][k] = true;
                    } else {
                        relative[probe][k] = (-c).atan2(b);
                    }
                }
                None => indeterminate[probe][k] = true,
            }
        }
    }
    // Reference-row phases inherit indeterminacy only through their column.
    for k in 0..n {
        if moduli[0][k] == 0.0 {
            for row in indeterminate.iter_mut().skip(1) {
                row[k] = true;
            }
        }
    }
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|k| {
                    let phase = if i == 0 || k == 0 {
                        0.0
                    } else {
                        let col0 = if indeterminate[i][0] {
                            0.0
                        } else {
                            relative[i][0]
                        };
                        relative[i][k] - col0
                    };
                    Complex64::from_polar(moduli[i][k], phase)
                })
                .collect()
        })
        .collect();
    let matrix = TransferMatrix::with_tolerance(rows, 0.5)?.gauge_fixed();
    // Column 0 and row 0 carry no phase information by construction.
    for i in 0..n {
        indeterminate[i][0] = false;
        indeterminate[0][i] = false;
    }
    Ok(Reconstruction {
        matrix,
        phase_indeterminate: indeterminate,
    })
}
