use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::statevector::{
    Projector, RegisterLayout, StateVector, UnitaryOp, C64, MIN_BRANCH_PROB,
};

/// Largest input space, in qubits, for which `P` is materialized.
pub const MAX_P_QUBITS: usize = 10;

/// A unitary `U` on `H ⊗ ancilla` together with the success projector `Π1`.
/// The full register order is the input segments followed by the ancilla
/// segments; the ancilla always starts in `|0…0⟩`.
#[derive(Clone, Debug)]
pub struct AmplifierInstance {
    input: RegisterLayout,
    ancilla: RegisterLayout,
    layout: RegisterLayout,
    unitary: UnitaryOp,
    adjoint: UnitaryOp,
    flag: Projector,
}

impl AmplifierInstance {
    pub fn new(
        input: RegisterLayout,
        ancilla: RegisterLayout,
        unitary: UnitaryOp,
        flag: Projector,
    ) -> Result<Self> {
        let layout = input.concat(&ancilla)?;
        // rejects unknown segments and out-of-range values up front
        flag.rank(&layout)?;
        Ok(Self {
            input,
            ancilla,
            layout,
            adjoint: unitary.adjoint(),
            unitary,
            flag,
        })
    }

    pub fn input_layout(&self) -> &RegisterLayout {
        &self.input
    }

    pub fn ancilla_layout(&self) -> &RegisterLayout {
        &self.ancilla
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn unitary(&self) -> &UnitaryOp {
        &self.unitary
    }

    pub fn adjoint(&self) -> &UnitaryOp {
        &self.adjoint
    }

    pub fn flag(&self) -> &Projector {
        &self.flag
    }

    /// `I ⊗ |0⟩⟨0|` on the ancilla.
    pub fn ancilla_zero(&self) -> Projector {
        Projector::all_zero(self.ancilla.segments().iter().map(|s| s.name.clone()))
    }

    /// `ψ ⊗ |0⟩_anc`.
    pub fn embed(&self, input: &StateVector) -> Result<StateVector> {
        if input.layout() != &self.input {
            return Err(Error::LayoutMismatch(format!(
                "input on {} but instance expects {}",
                input.layout(),
                self.input
            )));
        }
        input.tensor(&StateVector::zero(self.ancilla.clone()))
    }

    /// `U(ψ ⊗ |0⟩)`.
    pub fn evolve(&self, input: &StateVector) -> Result<StateVector> {
        self.unitary.apply(&self.embed(input)?)
    }

    /// `‖Π1 U(ψ ⊗ |0⟩)‖²`.
    pub fn success_probability(&self, input: &StateVector) -> Result<f64> {
        self.flag.probability(&self.evolve(input)?)
    }

    /// Normalized `Π1 U(ψ ⊗ |0⟩)`, or `None` when that branch is empty.
    pub fn target(&self, input: &StateVector) -> Result<Option<StateVector>> {
        let (inside, _) = self.flag.split(&self.evolve(input)?)?;
        let w: f64 = inside.iter().map(|a| a.norm_sqr()).sum();
        if w < MIN_BRANCH_PROB {
            return Ok(None);
        }
        StateVector::normalized(self.layout.clone(), inside).map(Some)
    }
}

/// `P = (I ⊗ ⟨0|) U† Π1 U (I ⊗ |0⟩)`, assembled as `W†W` where column `j`
/// of `W` is `Π1 U(e_j ⊗ |0⟩)`.
pub fn build_p(inst: &AmplifierInstance) -> Result<DMatrix<C64>> {
    let h = inst.input.total_qubits();
    if h > MAX_P_QUBITS {
        return Err(Error::DimensionBudget {
            dim: inst.input.dim(),
            max: 1 << MAX_P_QUBITS,
        });
    }
    let dim_h = inst.input.dim();
    let dim = inst.layout.dim();
    let mut w = DMatrix::<C64>::zeros(dim, dim_h);
    for j in 0..dim_h {
        let e = StateVector::basis(inst.input.clone(), j)?;
        let (inside, _) = inst.flag.split(&inst.evolve(&e)?)?;
        w.column_mut(j).copy_from_slice(&inside);
    }
    Ok(w.adjoint() * w)
}

/// `max |P − P†|`.
pub fn hermiticity_deviation(p: &DMatrix<C64>) -> f64 {
    (p - p.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
