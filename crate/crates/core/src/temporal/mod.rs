//! Time-resolved two-photon interference with sampled wavepackets.

pub mod coherence;
pub mod hom;
pub mod joint;
pub mod wavepacket;

pub use coherence::CoherenceModel;
pub use hom::{calibrate_jitter, hom_profile, HomProfile};
pub use joint::{joint_density, JointDensity};
pub use wavepacket::{autocorrelation, Wavepacket};
