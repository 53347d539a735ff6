//! Two-photon interference in multimode interferometers: exact coincidence
//! predictions, time-resolved coherence, a time-tag simulator, correlation
//! analysis and Monte-Carlo similarity statistics.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops in the linear algebra read closer to the formulas.
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod error;
pub mod instrument;
pub mod mmi;
pub mod seed;
pub mod stats;
pub mod tagstream;
pub mod temporal;

pub use error::{Error, Result};
