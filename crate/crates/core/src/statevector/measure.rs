use nalgebra::DMatrix;
use rand::Rng;

use super::layout::RegisterLayout;
use super::state::{norm_sqr, StateVector, C64};
use super::unitary::MAX_DENSE_QUBITS;
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Observed branches below this probability are treated as impossible.
pub const MIN_BRANCH_PROB: f64 = 1e-12;

/// Computational-basis projector: accepts basis states in which every listed
/// segment holds its listed value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Projector {
    conditions: Vec<(String, usize)>,
}

impl Projector {
    pub fn new<S: Into<String>>(conditions: impl IntoIterator<Item = (S, usize)>) -> Self {
        Self {
            conditions: conditions.into_iter().map(|(s, v)| (s.into(), v)).collect(),
        }
    }

    /// `segment = value`.
    pub fn equals(segment: &str, value: usize) -> Self {
        Self::new([(segment, value)])
    }

    /// Every listed segment in the all-zero state.
    pub fn all_zero<S: Into<String>>(segments: impl IntoIterator<Item = S>) -> Self {
        Self::new(segments.into_iter().map(|s| (s, 0)))
    }

    pub fn conditions(&self) -> &[(String, usize)] {
        &self.conditions
    }

    fn mask_value(&self, layout: &RegisterLayout) -> Result<(usize, usize)> {
        let mut mask = 0;
        let mut value = 0;
        for (name, v) in &self.conditions {
            let slot = layout.slot(name)?;
            if v >> slot.width != 0 {
                return Err(Error::InvalidParameter(format!(
                    "projector value {v} exceeds width of `{name}`"
                )));
            }
            mask |= slot.mask();
            value |= slot.place(*v);
        }
        Ok((mask, value))
    }

    /// Rank of the projector on `layout`.
    pub fn rank(&self, layout: &RegisterLayout) -> Result<usize> {
        let (mask, _) = self.mask_value(layout)?;
        Ok(layout.dim() >> mask.count_ones())
    }

    /// Unnormalized `Π·amps` and `I − Π` parts.
    pub fn split(&self, s: &StateVector) -> Result<(Vec<C64>, Vec<C64>)> {
        let (mask, value) = self.mask_value(s.layout())?;
        let zero = C64::new(0.0, 0.0);
        let mut inside = vec![zero; s.amps().len()];
        let mut outside = vec![zero; s.amps().len()];
        for (i, a) in s.amps().iter().enumerate() {
            if i & mask == value {
                inside[i] = *a;
            } else {
                outside[i] = *a;
            }
        }
        Ok((inside, outside))
    }

    /// ‖Π s‖².
    pub fn probability(&self, s: &StateVector) -> Result<f64> {
        let (mask, value) = self.mask_value(s.layout())?;
        Ok(s.amps()
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == value)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    pub fn to_dense(&self, layout: &RegisterLayout) -> Result<DMatrix<C64>> {
        if layout.total_qubits() > MAX_DENSE_QUBITS {
            return Err(Error::DimensionBudget {
                dim: layout.dim(),
                max: 1 << MAX_DENSE_QUBITS,
            });
        }
        let (mask, value) = self.mask_value(layout)?;
        let dim = layout.dim();
        Ok(DMatrix::from_fn(dim, dim, |i, j| {
            if i == j && i & mask == value {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }
}

/// Result of a two-outcome projective measurement.
#[derive(Clone, Debug)]
pub struct Measurement {
    /// `true` when the projector accepted.
    pub outcome: bool,
    pub post_state: StateVector,
    /// Exact probability of the observed outcome.
    pub prob: f64,
}

/// Measures `{Π, I − Π}`; outcome `true` with probability ‖Π s‖².
pub fn measure(p: &Projector, s: &StateVector, rng: &mut SimRng) -> Result<Measurement> {
    let p1 = p.probability(s)?;
    let outcome = rng.random::<f64>() < p1;
    measure_forced(p, s, outcome)
}

/// Post-selects on `outcome`; errors when that branch is numerically empty.
pub fn measure_forced(p: &Projector, s: &StateVector, outcome: bool) -> Result<Measurement> {
    let (inside, outside) = p.split(s)?;
    let branch = if outcome { inside } else { outside };
    let prob = norm_sqr(&branch);
    if prob < MIN_BRANCH_PROB {
        return Err(Error::ImpossibleOutcome { prob });
    }
    let post_state = StateVector::normalized(s.layout().clone(), branch)?;
    Ok(Measurement {
        outcome,
        post_state,
        prob,
    })
}

/// Full computational-basis measurement of one segment.
/// Returns `(value, post_state, prob)`.
pub fn measure_segment(
    s: &StateVector,
    segment: &str,
    rng: &mut SimRng,
) -> Result<(usize, StateVector, f64)> {
    let dist = s.segment_distribution(segment)?;
    let value = sample_index(&dist, rng);
    let post = measure_forced(&Projector::equals(segment, value), s, true)?;
    Ok((value, post.post_state, post.prob))
}

/// Samples an index from unnormalized non-negative weights.
pub fn sample_index(weights: &[f64], rng: &mut SimRng) -> usize {
    let total: f64 = weights.iter().sum();
    let r = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            last_nonzero = i;
        }
        acc += w;
        if r < acc {
            return i;
        }
    }
    last_nonzero
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn qubit() -> RegisterLayout {
        RegisterLayout::single("q", 1).unwrap()
    }

    #[test]
    fn measure_one_on_one() {
        let s = StateVector::basis(qubit(), 1).unwrap();
        let m = measure(&Projector::equals("q", 1), &s, &mut SimRng::new(1)).unwrap();
        assert!(m.outcome);
        assert_eq!(m.prob, 1.0);
    }

    #[test]
    fn measure_plus_is_half() {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let s = StateVector::from_amps(qubit(), vec![h, h]).unwrap();
        let p = Projector::equals("q", 1);
        assert!((p.probability(&s).unwrap() - 0.5).abs() < 1e-15);
        let m = measure(&p, &s, &mut SimRng::new(9)).unwrap();
        assert!((m.prob - 0.5).abs() < 1e-15);
    }

    #[test]
    fn forcing_impossible_branch_errors() {
        let s = StateVector::basis(qubit(), 0).unwrap();
        assert!(matches!(
            measure_forced(&Projector::equals("q", 1), &s, true),
            Err(Error::ImpossibleOutcome { .. })
        ));
    }

    #[test]
    fn projector_is_idempotent_and_hermitian() {
        let layout = RegisterLayout::new([("a", 2), ("b", 1)]).unwrap();
        let p = Projector::new([("a", 2), ("b", 1)]).to_dense(&layout).unwrap();
        assert_eq!(&p * &p, p);
        assert_eq!(p.adjoint(), p);
        assert_eq!(Projector::equals("a", 0).rank(&layout).unwrap(), 2);
    }
}
