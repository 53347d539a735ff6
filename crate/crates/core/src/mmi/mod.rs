//! Exact linear-optics math for two photons in a multimode interferometer.

pub mod characterize;
pub mod detection;
pub mod distribution;
pub mod fit;
pub mod fock;
pub mod matrix;

pub use characterize::{
    reconstruct_matrix, simulate_fringes, uniform_phase_grid, FringeDataset, Reconstruction,
};
pub use detection::{
    coincidence_classical, coincidence_mixture, coincidence_quantum, detection_prob_first,
    detection_prob_second, project_first_detection, renormalization_summary, EntangledInputState,
    Normalization, RenormalizationSummary,
};
pub use distribution::{all_pairs, CoincidenceDistribution, ModePair};
pub use fit::{fit_visibility, VisibilityFit};
pub use fock::{fock_oracle, TwoPhotonState};
pub use matrix::{TransferMatrix, UnitarityDeviation};
