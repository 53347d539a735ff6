use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance on `sum |zeta|^2 dt = 1`.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Single-photon temporal amplitude sampled on a uniform grid.
///
/// Sample `n` sits at `start + n * dt` (ns).
#[derive(Debug, Clone, PartialEq)]
pub struct Wavepacket {
    start: f64,
    dt: f64,
    samples: Vec<Complex64>,
}

impl Wavepacket {
    /// Wraps samples, normalizing them to unit probability.
    pub fn new(start: f64, dt: f64, samples: Vec<Complex64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt", format!("{dt} must be positive")));
        }
        let norm: f64 = samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * dt;
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::invalid("samples", "wavepacket has zero norm"));
        }
        let scale = norm.sqrt().recip();
        Ok(Self {
            start,
            dt,
            samples: samples.into_iter().map(|z| z * scale).collect(),
        })
    }

    /// Real envelope with `zeta(t) ∝ sin(pi t / T)` on `[0, T]`, so the
    /// intensity follows `sin^2`.
    pub fn sin2_envelope(duration: f64, dt: f64) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::invalid(
                "duration",
                format!("{duration} must be positive"),
            ));
        }
        if !(dt > 0.0) || dt > duration / 50.0 {
            return Err(Error::invalid(
                "dt",
                format!("{dt} ns is too coarse for a {duration} ns pulse (need dt <= T/50)"),
            ));
        }
        let steps = (duration / dt).round();
        if ((steps * dt) - duration).abs() > 1e-9 * duration {
            return Err(Error::invalid(
                "dt",
                format!("{dt} does not divide {duration}"),
            ));
        }
        let samples = (0..=steps as usize)
            .map(|n| Complex64::new((std::f64::consts::PI * n as f64 / steps).sin(), 0.0))
            .collect();
        Self::new(0.0, dt, samples)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn end(&self) -> f64 {
        self.start + (self.samples.len() - 1) as f64 * self.dt
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn time(&self, n: usize) -> f64 {
        self.start + n as f64 * self.dt
    }

    /// `|zeta|^2` per sample (1/ns).
    pub fn intensity(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dt
    }

    /// Copy delayed by `offset` ns, which must be a whole number of steps.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        let steps = (offset / self.dt).round();
        if (steps * self.dt - offset).abs() > 1e-9 * self.dt.max(offset.abs()) {
            return Err(Error::invalid(
                "delay_offset",
                format!("{offset} ns is not a multiple of dt = {}", self.dt),
            ));
        }
        Ok(Self {
            start: self.start + steps * self.dt,
            ..self.clone()
        })
    }

    /// Time of the intensity maximum (first one on ties).
    pub fn peak_time(&self) -> f64 {
        let mut best = (0, f64::NEG_INFINITY);
        for (n, z) in self.samples.iter().enumerate() {
            if z.norm_sqr() > best.1 + 1e-15 {
                best = (n, z.norm_sqr());
            }
        }
        self.time(best.0)
    }
}

/// Discrete autocorrelation `A[d] = sum_n x[n] x[n + d] * dt` for lags
/// `d = -(N-1) ..= N-1`; element `N-1` is lag zero.
///
/// For a profile symmetric in time this equals the autoconvolution re-centered
/// on zero lag.
pub fn autocorrelation(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    (0..2 * n - 1)
        .map(|idx| {
            let lag = idx as isize - (n as isize - 1);
            let (a, b) = if lag >= 0 {
                (&values[..n - lag as usize], &values[lag as usize..])
            } else {
                (&values[(-lag) as usize..], &values[..n - (-lag) as usize])
            };
            a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * dt
        })
        .collect()
}
