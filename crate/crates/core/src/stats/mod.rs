//! Similarity metric, Monte-Carlo credible intervals and random baselines.

pub mod hpd;
pub mod montecarlo;
pub mod similarity;
pub mod timeresolved;

pub use hpd::{hpd_interval, mode_estimate, SimilarityHistogram};
pub use montecarlo::{
    exceedance_probability, poisson_mc_similarity, random_baseline, BaselineReference,
    BaselineSampling, SimilarityResult, SimilaritySummary, CREDIBLE_MASS,
};
pub use similarity::similarity;
pub use timeresolved::{similarity_vs_dt, TimeResolvedPoint, MIN_EVENTS_PER_WINDOW};
