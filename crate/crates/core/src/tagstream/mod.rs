//! Time-tag streams and their correlation analysis.

pub mod coincidence;
pub mod deadtime;
pub mod format;
pub mod g2;
pub mod histogram;

pub use coincidence::{extract_coincidences, Coincidence, CoincidenceSet, PairingOptions};
pub use deadtime::{deadtime_correction, DeadtimeCorrection};
pub use format::{StreamFormat, TimeTag, TimeTagStream, DEFAULT_TICK_FS};
pub use g2::{g2_zero, G2Report, PeakArea};
pub use histogram::{
    cross_correlate, folded_profile, sliding_histogram, CorrelationHistogram, SlidingProfile,
};
