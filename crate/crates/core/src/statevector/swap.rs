use rand::Rng;

use super::state::StateVector;
use crate::error::Result;
use crate::rng::SimRng;

/// Outcome of one SWAP test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwapTest {
    pub accept: bool,
    /// Exact acceptance probability (1 + |⟨a|b⟩|²)/2.
    pub accept_prob: f64,
}

/// SWAP test between `a` and `b`: the acceptance probability is computed
/// exactly from the overlap and the outcome sampled from it.
pub fn swap_test(a: &StateVector, b: &StateVector, rng: &mut SimRng) -> Result<SwapTest> {
    let accept_prob = swap_accept_prob(a, b)?;
    Ok(SwapTest {
        accept: rng.random::<f64>() < accept_prob,
        accept_prob,
    })
}

pub fn swap_accept_prob(a: &StateVector, b: &StateVector) -> Result<f64> {
    let overlap = a.inner(b)?.norm_sqr().min(1.0);
    Ok(0.5 * (1.0 + overlap))
}
