use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::layout::RegisterLayout;
use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance on ‖amps‖₂ for a state to count as normalized.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Normalized pure state over a [`RegisterLayout`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    layout: RegisterLayout,
    amps: Vec<C64>,
}

impl StateVector {
    /// Validates length and norm.
    pub fn from_amps(layout: RegisterLayout, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != layout.dim() {
            return Err(Error::LayoutMismatch(format!(
                "{} amplitudes for a {}-dimensional layout",
                amps.len(),
                layout.dim()
            )));
        }
        let norm = norm_sqr(&amps).sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { layout, amps })
    }

    /// Rescales `amps` to unit norm. Fails on a (numerically) zero vector.
    pub fn normalized(layout: RegisterLayout, mut amps: Vec<C64>) -> Result<Self> {
        if amps.len() != layout.dim() {
            return Err(Error::LayoutMismatch(format!(
                "{} amplitudes for a {}-dimensional layout",
                amps.len(),
                layout.dim()
            )));
        }
        let n2 = norm_sqr(&amps);
        if n2 < 1e-24 {
            return Err(Error::ImpossibleOutcome { prob: n2 });
        }
        let s = 1.0 / n2.sqrt();
        amps.iter_mut().for_each(|a| *a *= s);
        Ok(Self { layout, amps })
    }

    pub(crate) fn from_raw(layout: RegisterLayout, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), layout.dim());
        Self { layout, amps }
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(layout: RegisterLayout, index: usize) -> Result<Self> {
        if index >= layout.dim() {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for {layout}"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); layout.dim()];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { layout, amps })
    }

    /// Basis state with the given per-segment values.
    pub fn basis_values(layout: RegisterLayout, values: &[(&str, usize)]) -> Result<Self> {
        let idx = layout.index_of(values)?;
        Self::basis(layout, idx)
    }

    pub fn zero(layout: RegisterLayout) -> Self {
        Self::basis(layout, 0).expect("index 0 always exists")
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn amp(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amps).sqrt()
    }

    /// Same amplitudes under a different layout of equal total width.
    pub fn relabel(self, layout: RegisterLayout) -> Result<Self> {
        if layout.total_qubits() != self.layout.total_qubits() {
            return Err(Error::LayoutMismatch(format!(
                "cannot relabel {} as {layout}",
                self.layout
            )));
        }
        Ok(Self {
            layout,
            amps: self.amps,
        })
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.check_same_layout(other)?;
        Ok(inner(&self.amps, &other.amps))
    }

    /// Tensor product `self ⊗ other` over the concatenated layout.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let layout = self.layout.concat(&other.layout)?;
        let mut amps = Vec::with_capacity(layout.dim());
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        Ok(Self { layout, amps })
    }

    /// `self^{⊗copies}` with segments renamed `{prefix}{i}`.
    pub fn copies(&self, copies: usize, prefix: &str) -> Result<StateVector> {
        if self.layout.segments().len() != 1 {
            return Err(Error::InvalidParameter(
                "copies() expects a single-segment state".into(),
            ));
        }
        let width = self.layout.total_qubits();
        let mut out = self
            .clone()
            .relabel(RegisterLayout::single(&format!("{prefix}0"), width)?)?;
        for i in 1..copies {
            let next = self
                .clone()
                .relabel(RegisterLayout::single(&format!("{prefix}{i}"), width)?)?;
            out = out.tensor(&next)?;
        }
        Ok(out)
    }

    /// Multiplies by the global phase `e^{iθ}`.
    pub fn with_phase(&self, theta: f64) -> StateVector {
        let ph = C64::from_polar(1.0, theta);
        Self {
            layout: self.layout.clone(),
            amps: self.amps.iter().map(|a| a * ph).collect(),
        }
    }

    /// Probability of finding `segment` in basis value `value`.
    pub fn segment_probability(&self, segment: &str, value: usize) -> Result<f64> {
        let slot = self.layout.slot(segment)?;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| slot.value(*i) == value)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Marginal distribution of a segment's computational-basis value.
    pub fn segment_distribution(&self, segment: &str) -> Result<Vec<f64>> {
        let slot = self.layout.slot(segment)?;
        let mut dist = vec![0.0; 1 << slot.width];
        for (i, a) in self.amps.iter().enumerate() {
            dist[slot.value(i)] += a.norm_sqr();
        }
        Ok(dist)
    }

    pub(crate) fn check_same_layout(&self, other: &StateVector) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch(format!(
                "{} vs {}",
                self.layout, other.layout
            )));
        }
        Ok(())
    }
}

pub(crate) fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Pure-state fidelity |⟨a|b⟩|².
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn qubit() -> RegisterLayout {
        RegisterLayout::single("q", 1).unwrap()
    }

    fn plus() -> StateVector {
        StateVector::from_amps(
            qubit(),
            vec![C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn fidelity_basics() {
        let z = StateVector::basis(qubit(), 0).unwrap();
        let o = StateVector::basis(qubit(), 1).unwrap();
        assert_eq!(fidelity(&z, &z).unwrap(), 1.0);
        assert_eq!(fidelity(&z, &o).unwrap(), 0.0);
        assert!((fidelity(&z, &plus()).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_unnormalized() {
        let r = StateVector::from_amps(qubit(), vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(matches!(r, Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn fidelity_layout_mismatch() {
        let a = StateVector::zero(qubit());
        let b = StateVector::zero(RegisterLayout::single("r", 1).unwrap());
        assert!(matches!(fidelity(&a, &b), Err(Error::LayoutMismatch(_))));
    }

    #[test]
    fn tensor_orders_first_factor_high() {
        let a = StateVector::basis(RegisterLayout::single("a", 1).unwrap(), 1).unwrap();
        let b = StateVector::basis(RegisterLayout::single("b", 2).unwrap(), 2).unwrap();
        let t = a.tensor(&b).unwrap();
        assert_eq!(t.amp(0b110), C64::new(1.0, 0.0));
    }
}
