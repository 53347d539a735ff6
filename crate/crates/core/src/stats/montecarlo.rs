//! Monte-Carlo similarity distributions: Poissonian resampling of measured
//! counts and random-distribution baselines.
//!
//! Every trial draws from its own ChaCha stream selected by the trial index,
//! so results are bit-identical whatever the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardUniform};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::hpd::{hpd_interval, mode_estimate, SimilarityHistogram};
use super::similarity::{overlap, similarity};
use crate::error::{Error, Result};

/// Posterior mass of the reported credible interval.
pub const CREDIBLE_MASS: f64 = 0.68;

#[derive(Debug, Clone, Serialize)]
pub struct SimilarityResult {
    pub mode: f64,
    pub hpd68: (f64, f64),
    pub mean: f64,
    pub n_trials: usize,
    /// Trials skipped because every resampled count was zero.
    pub n_degenerate: usize,
    pub seed: u64,
    /// Similarity of the unresampled input, when there is one.
    pub raw: Option<f64>,
    pub histogram: SimilarityHistogram,
    #[serde(skip)]
    samples: Vec<f64>,
}

impl SimilarityResult {
    fn from_samples(
        mut samples: Vec<f64>,
        n_trials: usize,
        seed: u64,
        raw: Option<f64>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyData("no valid Monte-Carlo trials".into()));
        }
        samples.sort_by(f64::total_cmp);
        let hpd68 = hpd_interval(&samples, CREDIBLE_MASS).expect("non-empty");
        let mode = mode_estimate(&samples)
            .expect("non-empty")
            .clamp(hpd68.0, hpd68.1);
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        Ok(Self {
            mode,
            hpd68,
            mean,
            n_trials,
            n_degenerate: n_trials - samples.len(),
            seed,
            raw,
            histogram: SimilarityHistogram::from_samples(&samples),
            samples,
        })
    }

    /// Resampled similarity values in ascending order.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Distance from the mode to the interval ends, `(+upper, -lower)`.
    pub fn error_bars(&self) -> (f64, f64) {
        (self.hpd68.1 - self.mode, self.mode - self.hpd68.0)
    }

    pub fn summary(&self) -> SimilaritySummary {
        SimilaritySummary {
            mode: self.mode,
            hpd68: self.hpd68,
            mean: self.mean,
            raw: self.raw,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "mode": self.mode,
            "hpd68": [self.hpd68.0, self.hpd68.1],
            "mean": self.mean,
            "n_trials": self.n_trials,
            "n_degenerate": self.n_degenerate,
            "seed": self.seed,
            "raw": self.raw,
        })
    }
}

/// Compact result without samples or histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilaritySummary {
    pub mode: f64,
    pub hpd68: (f64, f64),
    pub mean: f64,
    pub raw: Option<f64>,
}

fn trial_rng(base: &ChaCha8Rng, trial: usize) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(trial as u64);
    rng
}

/// Similarity distribution of Poisson-resampled counts against a theory.
///
/// Each trial draws `n_i ~ Poisson(N_i)` independently per channel and
/// evaluates the similarity to `theory`.
pub fn poisson_mc_similarity(
    counts: &[f64],
    theory: &[f64],
    trials: usize,
    seed: u64,
) -> Result<SimilarityResult> {
    if counts.len() != theory.len() {
        return Err(Error::LengthMismatch(counts.len(), theory.len()));
    }
    if trials == 0 {
        return Err(Error::invalid("trials", "must be positive"));
    }
    let raw = similarity(counts, theory)?;
    let sum_theory: f64 = theory.iter().sum();
    let samplers: Vec<Option<Poisson<f64>>> = counts
        .iter()
        .map(|&n| {
            if n > 0.0 {
                Poisson::new(n)
                    .map(Some)
                    .map_err(|e| Error::invalid("counts", e.to_string()))
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let base = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .filter_map(|t| {
            let mut rng = trial_rng(&base, t);
            let draw: Vec<f64> = samplers
                .iter()
                .map(|s| s.as_ref().map_or(0.0, |p| p.sample(&mut rng)))
                .collect();
            let total: f64 = draw.iter().sum();
            (total > 0.0).then(|| overlap(&draw, theory, total, sum_theory))
        })
        .collect();
    SimilarityResult::from_samples(samples, trials, seed, Some(raw))
}

/// How random distributions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum BaselineSampling {
    /// Uniformly over the probability simplex (normalized exponential draws).
    #[default]
    Simplex,
    /// Independent uniform `[0, 1]` entries.
    Cube,
}

/// What a random distribution is compared with.
#[derive(Debug, Clone, PartialEq)]
pub enum BaselineReference {
    Theory(Vec<f64>),
    /// A second independent random distribution.
    Random,
}

fn random_vector(rng: &mut ChaCha8Rng, dims: usize, sampling: BaselineSampling) -> Vec<f64> {
    match sampling {
        BaselineSampling::Simplex => (0..dims).map(|_| Exp1.sample(rng)).collect(),
        BaselineSampling::Cube => (0..dims).map(|_| StandardUniform.sample(rng)).collect(),
    }
}

/// Similarity distribution of random `dims`-dimensional distributions.
pub fn random_baseline(
    reference: &BaselineReference,
    dims: usize,
    sampling: BaselineSampling,
    trials: usize,
    seed: u64,
) -> Result<SimilarityResult> {
    if dims < 2 {
        return Err(Error::invalid("dims", format!("{dims} < 2")));
    }
    if trials == 0 {
        return Err(Error::invalid("trials", "must be positive"));
    }
    if let BaselineReference::Theory(t) = reference {
        if t.len() != dims {
            return Err(Error::LengthMismatch(t.len(), dims));
        }
        similarity(t, t)?;
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .filter_map(|t| {
            let mut rng = trial_rng(&base, t);
            let p = random_vector(&mut rng, dims, sampling);
            let sum_p: f64 = p.iter().sum();
            let q = match reference {
                BaselineReference::Theory(t) => std::borrow::Cow::Borrowed(t.as_slice()),
                BaselineReference::Random => {
                    std::borrow::Cow::Owned(random_vector(&mut rng, dims, sampling))
                }
            };
            let sum_q: f64 = q.iter().sum();
            (sum_p > 0.0 && sum_q > 0.0).then(|| overlap(&p, &q, sum_p, sum_q))
        })
        .collect();
    SimilarityResult::from_samples(samples, trials, seed, None)
}

/// Fraction of baseline samples at or above the lower end of `interval`.
pub fn exceedance_probability(baseline: &SimilarityResult, interval: (f64, f64)) -> Result<f64> {
    if !(interval.0 <= interval.1) {
        return Err(Error::invalid(
            "interval",
            format!("{interval:?} is not ordered"),
        ));
    }
    let samples = baseline.samples();
    let below = samples.partition_point(|&s| s < interval.0);
    Ok((samples.len() - below) as f64 / samples.len() as f64)
}
