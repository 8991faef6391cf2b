use std::sync::Arc;

use nalgebra::DMatrix;

use super::function::lift_to_oracle;
use super::prf::PrfFamily;
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::statevector::{
    check_budget, haar_matrix, unitarity_deviation, RegisterLayout, StateVector, UnitaryOp, C64,
    MAX_DENSE_QUBITS, UNITARY_TOLERANCE,
};

/// Keyed unitaries `U_k` on `state_qubits` qubits, one per key.
/// The family's states are `|ψ_k⟩ = U_k|0⟩`.
#[derive(Clone, Debug)]
pub struct KeyedUnitaryFamily {
    key_bits: usize,
    state_qubits: usize,
    members: Vec<Arc<DMatrix<C64>>>,
}

impl KeyedUnitaryFamily {
    pub fn from_matrices(key_bits: usize, members: Vec<DMatrix<C64>>) -> Result<Self> {
        if members.len() != 1 << key_bits {
            return Err(Error::InvalidParameter(format!(
                "{} members for {key_bits} key bits",
                members.len()
            )));
        }
        let dim = members[0].nrows();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidParameter(format!("member dimension {dim}")));
        }
        let state_qubits = dim.trailing_zeros() as usize;
        if state_qubits > MAX_DENSE_QUBITS {
            return Err(Error::DimensionBudget {
                dim,
                max: 1 << MAX_DENSE_QUBITS,
            });
        }
        for m in &members {
            if m.nrows() != dim {
                return Err(Error::InvalidParameter("members differ in size".into()));
            }
            let deviation = unitarity_deviation(m);
            if deviation > UNITARY_TOLERANCE {
                return Err(Error::NonUnitary { deviation });
            }
        }
        Ok(Self {
            key_bits,
            state_qubits,
            members: members.into_iter().map(Arc::new).collect(),
        })
    }

    /// Independently Haar-sampled member per key.
    pub fn haar(key_bits: usize, state_qubits: usize, rng: &mut SimRng) -> Result<Self> {
        check_budget(key_bits + state_qubits)?;
        let members = (0..1usize << key_bits)
            .map(|_| haar_matrix(state_qubits, rng))
            .collect::<Result<Vec<_>>>()?;
        Self::from_matrices(key_bits, members)
    }

    /// Public-key preparation of the PRF scheme as a keyed family:
    /// `U_k = O_{PRF_k} · (H^{⊗λ} ⊗ I)` on `(x, y)`, so
    /// `U_k|0⟩ = 2^{-λ/2} Σ_x |x, PRF_k(x)⟩`.
    pub fn prf_states(prf: &PrfFamily) -> Result<Self> {
        let local = RegisterLayout::new([("x", prf.in_bits()), ("y", prf.out_bits())])?;
        let members = (0..prf.num_keys() as u64)
            .map(|k| {
                let op = UnitaryOp::hadamard("x").then(lift_to_oracle(prf.function(k), "x", "y")?);
                op.to_dense(&local)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_matrices(prf.key_bits(), members)
    }

    pub fn key_bits(&self) -> usize {
        self.key_bits
    }

    pub fn num_keys(&self) -> usize {
        self.members.len()
    }

    pub fn state_qubits(&self) -> usize {
        self.state_qubits
    }

    pub fn member(&self, key: usize) -> &DMatrix<C64> {
        &self.members[key]
    }

    /// `U_k` acting on segment `target`.
    pub fn member_op(&self, key: usize, target: &str) -> UnitaryOp {
        UnitaryOp::dense([target], self.members[key].as_ref().clone())
            .expect("members are validated unitaries")
    }

    /// `|ψ_k⟩ = U_k|0⟩` on a single segment named `segment`.
    pub fn state_on(&self, key: usize, segment: &str) -> Result<StateVector> {
        let layout = RegisterLayout::single(segment, self.state_qubits)?;
        let col: Vec<C64> = self.members[key].column(0).iter().copied().collect();
        StateVector::from_amps(layout, col)
    }

    pub fn state(&self, key: usize) -> Result<StateVector> {
        self.state_on(key, "q")
    }
}

/// Block operator that, for key register value `k`, applies `(U_k†)^{⊗m}`
/// to the `m` state segments. With a single-key family there is no key
/// register and the plain product is returned.
pub fn controlled_keyed_adjoint(
    fam: &KeyedUnitaryFamily,
    state_segments: &[String],
    key_segment: &str,
) -> Result<UnitaryOp> {
    check_budget(state_segments.len() * fam.state_qubits() + fam.key_bits())?;
    let block = |k: usize| {
        UnitaryOp::product(
            state_segments
                .iter()
                .map(|s| fam.member_op(k, s).adjoint())
                .collect(),
        )
    };
    if fam.key_bits() == 0 {
        return Ok(block(0));
    }
    Ok(UnitaryOp::controlled(
        key_segment,
        (0..fam.num_keys()).map(block).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::toy_prf;
    use crate::statevector::fidelity;

    fn segs(m: usize) -> Vec<String> {
        (0..m).map(|i| format!("prs{i}")).collect()
    }

    #[test]
    fn prf_state_has_uniform_support() {
        let prf = toy_prf(2, 3, 4).unwrap();
        let fam = KeyedUnitaryFamily::prf_states(&prf).unwrap();
        let s = fam.state(1).unwrap();
        for x in 0..4usize {
            let idx = (x << 3) | prf.eval(1, x as u64) as usize;
            assert!((s.amp(idx).norm() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn inverts_matching_key() {
        let mut rng = SimRng::new(8);
        let fam = KeyedUnitaryFamily::haar(1, 2, &mut rng).unwrap();
        let op = controlled_keyed_adjoint(&fam, &segs(2), "sk").unwrap();
        let psi = fam.state_on(1, "prs").unwrap().copies(2, "prs").unwrap();
        let key = StateVector::basis(RegisterLayout::single("sk", 1).unwrap(), 1).unwrap();
        let out = op.apply(&psi.tensor(&key).unwrap()).unwrap();
        let target = StateVector::basis(out.layout().clone(), 1).unwrap();
        assert!(fidelity(&out, &target).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn single_key_is_plain_adjoint() {
        let mut rng = SimRng::new(1);
        let fam = KeyedUnitaryFamily::haar(0, 2, &mut rng).unwrap();
        let layout = RegisterLayout::single("prs0", 2).unwrap();
        let op = controlled_keyed_adjoint(&fam, &segs(1), "sk").unwrap();
        let d = op.to_dense(&layout).unwrap();
        assert!((d - fam.member(0).adjoint()).camax() < 1e-14);
    }
}
