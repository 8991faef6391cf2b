use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::layout::{check_budget, RegisterLayout};
use super::state::{StateVector, C64};
use super::unitary::UnitaryOp;
use crate::error::Result;
use crate::rng::SimRng;

fn gaussian(rng: &mut SimRng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Haar-random pure state on `layout` (normalized complex Gaussian vector).
pub fn haar_state_on(layout: RegisterLayout, rng: &mut SimRng) -> Result<StateVector> {
    let amps = (0..layout.dim()).map(|_| gaussian(rng)).collect();
    StateVector::normalized(layout, amps)
}

/// Haar-random `n`-qubit state on a single segment named `q`.
pub fn haar_state(n: usize, rng: &mut SimRng) -> Result<StateVector> {
    haar_state_on(RegisterLayout::single("q", n)?, rng)
}

/// Haar-random `2^n × 2^n` unitary: QR of a Ginibre matrix with the phases
/// of `R`'s diagonal folded back into `Q`.
pub fn haar_matrix(n: usize, rng: &mut SimRng) -> Result<DMatrix<C64>> {
    check_budget(n)?;
    let dim = 1usize << n;
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// Haar-random unitary acting on segment `target` of width `n`.
pub fn haar_unitary(target: &str, n: usize, rng: &mut SimRng) -> Result<UnitaryOp> {
    UnitaryOp::dense([target], haar_matrix(n, rng)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::unitary::unitarity_deviation;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = SimRng::new(11);
        for n in 1..=4 {
            let m = haar_matrix(n, &mut rng).unwrap();
            assert!(unitarity_deviation(&m) <= 1e-10);
        }
    }

    #[test]
    fn haar_state_is_normalized() {
        let s = haar_state(5, &mut SimRng::new(2)).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }
}
