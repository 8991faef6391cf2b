//! Dense statevector simulation over named register layouts.

mod haar;
mod layout;
mod measure;
mod state;
mod swap;
mod unitary;

pub use haar::{haar_matrix, haar_state, haar_state_on, haar_unitary};
pub use layout::{
    check_budget, max_qubits, set_max_qubits, RegisterLayout, Segment, SegmentSlot,
    DEFAULT_MAX_QUBITS,
};
pub use measure::{
    measure, measure_forced, measure_segment, sample_index, Measurement, Projector,
    MIN_BRANCH_PROB,
};
pub use state::{fidelity, StateVector, C64, NORM_TOLERANCE};
pub use swap::{swap_accept_prob, swap_test, SwapTest};
pub use unitary::{unitarity_deviation, UnitaryOp, MAX_DENSE_QUBITS, UNITARY_TOLERANCE};
