//! Transfer matrices of linear-optical networks.
//!
//! Elements are stored row-major with `M[i][k]` the amplitude for a photon
//! entering input mode `i` to leave through output mode `k`.

use std::fmt;
use std::ops::Index;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default slack allowed on `|M_ik| <= 1`.
pub const DEFAULT_AMPLITUDE_TOLERANCE: f64 = 1e-6;

const CHIP_JSON: &str = include_str!("../../data/mmi_chip.v1.json");

#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    n_modes: usize,
    elements: Vec<Complex64>,
}

/// Departure of a matrix from unitarity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitarityDeviation {
    /// Largest `| ||row|| ^2 - 1 |`.
    pub max_row_norm: f64,
    /// Largest `| ||column|| ^2 - 1 |`.
    pub max_column_norm: f64,
    /// Largest off-diagonal modulus of `M M^dagger`.
    pub max_off_diagonal: f64,
}

impl UnitarityDeviation {
    pub fn max(&self) -> f64 {
        self.max_row_norm
            .max(self.max_column_norm)
            .max(self.max_off_diagonal)
    }
}

impl TransferMatrix {
    pub fn new(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        Self::with_tolerance(rows, DEFAULT_AMPLITUDE_TOLERANCE)
    }

    /// Builds a matrix, rejecting elements with modulus above `1 + tolerance`.
    pub fn with_tolerance(rows: Vec<Vec<Complex64>>, tolerance: f64) -> Result<Self> {
        let n_modes = rows.len();
        if n_modes < 2 {
            return Err(Error::InvalidMatrix(format!(
                "need at least 2 modes, got {n_modes}"
            )));
        }
        let mut elements = Vec::with_capacity(n_modes * n_modes);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_modes {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {n_modes}",
                    row.len()
                )));
            }
            for (k, z) in row.into_iter().enumerate() {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::InvalidMatrix(format!(
                        "element ({i},{k}) is not finite"
                    )));
                }
                if z.norm() > 1.0 + tolerance {
                    return Err(Error::InvalidMatrix(format!(
                        "element ({i},{k}) has modulus {} > 1",
                        z.norm()
                    )));
                }
                elements.push(z);
            }
        }
        Ok(Self { n_modes, elements })
    }

    /// Builds a matrix from moduli and phases (radians).
    pub fn from_polar(moduli: &[Vec<f64>], phases: &[Vec<f64>]) -> Result<Self> {
        if moduli.len() != phases.len() {
            return Err(Error::LengthMismatch(moduli.len(), phases.len()));
        }
        let rows = moduli
            .iter()
            .zip(phases)
            .map(|(m, p)| {
                if m.len() != p.len() {
                    return Err(Error::LengthMismatch(m.len(), p.len()));
                }
                Ok(m.iter()
                    .zip(p)
                    .map(|(&r, &theta)| Complex64::from_polar(r, theta))
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn identity(n_modes: usize) -> Result<Self> {
        let rows = (0..n_modes)
            .map(|i| {
                (0..n_modes)
                    .map(|k| {
                        if i == k {
                            Complex64::new(1.0, 0.0)
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(rows)
    }

    /// The ideal 50:50 beam splitter `(1/sqrt 2) [[1, 1], [1, -1]]`.
    pub fn balanced_splitter() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            n_modes: 2,
            elements: vec![
                Complex64::new(h, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(-h, 0.0),
            ],
        }
    }

    /// The measured 4x4 multimode-interferometer chip shipped with the crate.
    pub fn measured_chip() -> Self {
        Self::from_json(CHIP_JSON).expect("bundled chip matrix is valid")
    }

    /// Haar-random unitary from the QR decomposition of a complex Ginibre matrix.
    pub fn random_unitary<R: Rng + ?Sized>(n_modes: usize, rng: &mut R) -> Result<Self> {
        if n_modes < 2 {
            return Err(Error::InvalidMatrix(format!(
                "need at least 2 modes, got {n_modes}"
            )));
        }
        let mut cols: Vec<Vec<Complex64>> = (0..n_modes)
            .map(|_| {
                (0..n_modes)
                    .map(|_| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex64::new(re, im)
                    })
                    .collect()
            })
            .collect();
        // Modified Gram-Schmidt; positive diagonal of R makes the result Haar.
        for c in 0..n_modes {
            for prev in 0..c {
                let proj: Complex64 = (0..n_modes)
                    .map(|r| cols[prev][r].conj() * cols[c][r])
                    .sum();
                for r in 0..n_modes {
                    let sub = proj * cols[prev][r];
                    cols[c][r] -= sub;
                }
            }
            let norm = cols[c].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in cols[c].iter_mut() {
                *z /= norm;
            }
        }
        let rows = (0..n_modes)
            .map(|i| (0..n_modes).map(|k| cols[k][i]).collect())
            .collect();
        Self::with_tolerance(rows, 1e-9)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn get(&self, input: usize, output: usize) -> Complex64 {
        self.elements[input * self.n_modes + output]
    }

    pub fn row(&self, input: usize) -> &[Complex64] {
        &self.elements[input * self.n_modes..(input + 1) * self.n_modes]
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.n_modes).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.n_modes {
            Err(Error::IndexOutOfRange {
                index,
                n_modes: self.n_modes,
            })
        } else {
            Ok(())
        }
    }

    /// `|M_ik|^2` for all elements.
    pub fn transmissions(&self) -> Vec<Vec<f64>> {
        (0..self.n_modes)
            .map(|i| self.row(i).iter().map(|z| z.norm_sqr()).collect())
            .collect()
    }

    pub fn unitarity_deviation(&self) -> UnitarityDeviation {
        let n = self.n_modes;
        let mut max_row_norm = 0.0f64;
        let mut max_column_norm = 0.0f64;
        let mut max_off_diagonal = 0.0f64;
        for i in 0..n {
            let row: f64 = self.row(i).iter().map(|z| z.norm_sqr()).sum();
            max_row_norm = max_row_norm.max((row - 1.0).abs());
            let col: f64 = (0..n).map(|r| self.get(r, i).norm_sqr()).sum();
            max_column_norm = max_column_norm.max((col - 1.0).abs());
            for j in (i + 1)..n {
                let gram: Complex64 = (0..n).map(|k| self.get(i, k) * self.get(j, k).conj()).sum();
                max_off_diagonal = max_off_diagonal.max(gram.norm());
            }
        }
        UnitarityDeviation {
            max_row_norm,
            max_column_norm,
            max_off_diagonal,
        }
    }

    /// Equivalent matrix with first row and first column real and non-negative.
    ///
    /// Input and output phases are unobservable in two-photon statistics, so
    /// the result predicts exactly the same coincidences.
    pub fn gauge_fixed(&self) -> Self {
        let n = self.n_modes;
        let mut out = self.clone();
        for i in 0..n {
            let z = out.get(i, 0);
            if z.norm() > 0.0 {
                let phase = Complex64::from_polar(1.0, -z.arg());
                for k in 0..n {
                    out.elements[i * n + k] *= phase;
                }
            }
        }
        for k in 0..n {
            let z = out.get(0, k);
            if z.norm() > 0.0 {
                let phase = Complex64::from_polar(1.0, -z.arg());
                for i in 0..n {
                    out.elements[i * n + k] *= phase;
                }
            }
        }
        for i in 0..n {
            for k in 0..n {
                if i == 0 || k == 0 {
                    let z = &mut out.elements[i * n + k];
                    *z = Complex64::new(z.norm(), 0.0);
                }
            }
        }
        out
    }

    /// Largest elementwise modulus of the difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.n_modes != other.n_modes {
            return Err(Error::LengthMismatch(self.n_modes, other.n_modes));
        }
        Ok(self
            .elements
            .iter()
            .zip(&other.elements)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&MatrixFile::from(self)).expect("matrix serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MatrixFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl Index<(usize, usize)> for TransferMatrix {
    type Output = Complex64;

    fn index(&self, (i, k): (usize, usize)) -> &Complex64 {
        &self.elements[i * self.n_modes + k]
    }
}

impl fmt::Display for TransferMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n_modes {
            let cells: Vec<String> = self
                .row(i)
                .iter()
                .map(|z| format!("{:.4}e^(i{:.3})", z.norm(), z.arg()))
                .collect();
            writeln!(f, "{}", cells.join("  "))?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplexEntry {
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    n_modes: usize,
    elements: Vec<Vec<ComplexEntry>>,
}

impl From<&TransferMatrix> for MatrixFile {
    fn from(m: &TransferMatrix) -> Self {
        MatrixFile {
            n_modes: m.n_modes,
            elements: (0..m.n_modes)
                .map(|i| {
                    m.row(i)
                        .iter()
                        .map(|z| ComplexEntry { re: z.re, im: z.im })
                        .collect()
                })
                .collect(),
        }
    }
}

impl TryFrom<MatrixFile> for TransferMatrix {
    type Error = Error;

    fn try_from(file: MatrixFile) -> Result<Self> {
        if file.elements.len() != file.n_modes {
            return Err(Error::InvalidMatrix(format!(
                "n_modes = {} but {} rows given",
                file.n_modes,
                file.elements.len()
            )));
        }
        let rows = file
            .elements
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|c| Complex64::new(c.re, c.im))
                    .collect()
            })
            .collect();
        TransferMatrix::new(rows)
    }
}
