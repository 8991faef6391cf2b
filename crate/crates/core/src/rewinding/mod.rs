//! Success operator, its spectral structure, and the rewind loop.

mod amplifier;
mod spectral;
mod walk;

pub use amplifier::{build_p, hermiticity_deviation, AmplifierInstance, MAX_P_QUBITS};
pub use spectral::{
    eigen_decompose, gram_residual, spectral_decomposition, SpectralDecomposition,
    DEGENERATE_WEIGHT, EIGEN_TOLERANCE, SPECTRUM_TOLERANCE,
};
pub use walk::{
    epsilon_sweep, expected_iterations, rewind_statistics, rewind_until_success, spread_instance,
    survival_probability, RewindReport, RewindTranscript, SpreadInstance, SweepPoint, EPS_GRID,
    SPREAD_WEIGHT_CUTOFF,
};
