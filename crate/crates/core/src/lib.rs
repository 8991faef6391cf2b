//! Exact statevector simulation of a PRF-based quantum public-key encryption
//! scheme, an unbounded quantum rewinding engine, and rewinding-based
//! key-guessing attacks on keyed quantum state families.

pub mod error;
pub mod oracles;
pub mod prs;
pub mod qpke;
pub mod rewinding;
pub mod rng;
pub mod stats;
pub mod statevector;

pub use error::{Error, Result};
pub use rng::SimRng;
pub use statevector::{
    fidelity, measure, swap_test, Projector, RegisterLayout, StateVector, UnitaryOp, C64,
};
