use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracles::{controlled_keyed_adjoint, KeyedUnitaryFamily};
use crate::rewinding::{build_p, AmplifierInstance};
use crate::statevector::{check_budget, Projector, RegisterLayout, StateVector, UnitaryOp, C64};

/// Key-guessing attack setup on a keyed state family: `m` copies feed
/// `get_sk`, `m_dist` copies feed the SWAP-test distinguisher.
///
/// Register order is `prs0 … prs{m-1}` (n qubits each), `sk` (omitted for a
/// single-key family), `out`.
#[derive(Clone, Debug)]
pub struct PrsInstance {
    family: Arc<KeyedUnitaryFamily>,
    m: usize,
    m_dist: usize,
    segments: Vec<String>,
    amplifier: AmplifierInstance,
}

impl PrsInstance {
    pub fn new(family: Arc<KeyedUnitaryFamily>, m: usize, m_dist: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("m must be ≥ 1".into()));
        }
        check_budget(m * family.state_qubits() + family.key_bits() + 1)?;
        let segments: Vec<String> = (0..m).map(|i| format!("prs{i}")).collect();
        let input = RegisterLayout::new(segments.iter().map(|s| (s.clone(), family.state_qubits())))?;
        let mut anc = Vec::new();
        if family.key_bits() > 0 {
            anc.push(("sk", family.key_bits()));
        }
        anc.push(("out", 1));
        let ancilla = RegisterLayout::new(anc)?;
        let u = build_u_init(&family)
            .then(build_u_invert(&family, &segments)?)
            .then(build_u_check(&segments));
        let amplifier = AmplifierInstance::new(input, ancilla, u, Projector::equals("out", 1))?;
        Ok(Self {
            family,
            m,
            m_dist,
            segments,
            amplifier,
        })
    }

    pub fn family(&self) -> &KeyedUnitaryFamily {
        &self.family
    }

    /// State qubits `n`.
    pub fn n(&self) -> usize {
        self.family.state_qubits()
    }

    pub fn key_bits(&self) -> usize {
        self.family.key_bits()
    }

    pub fn num_keys(&self) -> usize {
        self.family.num_keys()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn m_dist(&self) -> usize {
        self.m_dist
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    pub fn total_qubits(&self) -> usize {
        self.amplifier.layout().total_qubits()
    }

    /// `U_PRS` with flag `out = 1`, ready for the rewinding engine.
    pub fn amplifier(&self) -> &AmplifierInstance {
        &self.amplifier
    }

    pub fn u_init(&self) -> UnitaryOp {
        build_u_init(&self.family)
    }

    pub fn u_invert(&self) -> Result<UnitaryOp> {
        build_u_invert(&self.family, &self.segments)
    }

    pub fn u_check(&self) -> UnitaryOp {
        build_u_check(&self.segments)
    }

    /// `U_check ∘ U_invert ∘ U_init`.
    pub fn u_prs(&self) -> &UnitaryOp {
        self.amplifier.unitary()
    }

    /// `ψ^{⊗m}` on the PRS registers, from a single-segment `n`-qubit state.
    pub fn challenge_copies(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.layout().total_qubits() != self.n() {
            return Err(Error::LayoutMismatch(format!(
                "challenge has {} qubits, family states have {}",
                psi.layout().total_qubits(),
                self.n()
            )));
        }
        psi.copies(self.m, "prs")
    }

    /// `|ψ_k⟩` on segment `q`.
    pub fn keyed_state(&self, key: usize) -> Result<StateVector> {
        self.family.state(key)
    }

    /// `|0^{mn}⟩|sk⟩|1⟩` on the full layout.
    pub fn target_state(&self, sk: usize) -> Result<StateVector> {
        let mut values = vec![("out", 1)];
        if self.key_bits() > 0 {
            values.push(("sk", sk));
        }
        StateVector::basis_values(self.amplifier.layout().clone(), &values)
    }
}

/// Hadamard layer on the key register; identity for a single-key family.
pub fn build_u_init(family: &KeyedUnitaryFamily) -> UnitaryOp {
    if family.key_bits() == 0 {
        UnitaryOp::identity()
    } else {
        UnitaryOp::hadamard("sk")
    }
}

/// `(U_sk†)^{⊗m}` on the PRS registers, controlled by the key register.
pub fn build_u_invert(family: &KeyedUnitaryFamily, segments: &[String]) -> Result<UnitaryOp> {
    controlled_keyed_adjoint(family, segments, "sk")
}

/// Flips `out` iff every PRS register is all-zero.
pub fn build_u_check(segments: &[String]) -> UnitaryOp {
    UnitaryOp::flip_if_zero(segments.iter().cloned(), "out")
}

/// `p(ψ) = ‖Π1 U_PRS(ψ^{⊗m} ⊗ |0⟩_sk ⊗ |0⟩_out)‖²` by state evolution.
pub fn success_prob_exact(inst: &PrsInstance, challenge: &StateVector) -> Result<f64> {
    inst.amplifier.success_probability(&inst.challenge_copies(challenge)?)
}

/// `⟨ψ^{⊗m}| P |ψ^{⊗m}⟩` with `P` materialized from the amplifier.
pub fn success_prob_operator(inst: &PrsInstance, challenge: &StateVector) -> Result<f64> {
    let p = build_p(&inst.amplifier)?;
    let v = nalgebra::DVector::from_column_slice(inst.challenge_copies(challenge)?.amps());
    Ok((v.adjoint() * p * v)[(0, 0)].re)
}

/// `E_sk |⟨0|U_sk†|ψ⟩|^{2m}` over uniform keys.
pub fn success_prob_formula(inst: &PrsInstance, challenge: &StateVector) -> Result<f64> {
    if challenge.layout().total_qubits() != inst.n() {
        return Err(Error::LayoutMismatch("challenge width differs from n".into()));
    }
    let total: f64 = (0..inst.num_keys())
        .map(|k| {
            let col = inst.family.member(k).column(0);
            let ov: C64 = col.iter().zip(challenge.amps()).map(|(a, b)| a.conj() * b).sum();
            ov.norm_sqr().powi(inst.m as i32)
        })
        .sum();
    Ok(total / inst.num_keys() as f64)
}

/// `E_ψ~Haar |⟨φ|ψ⟩|^{2m} = 1 / C(2^n + m − 1, m)`.
pub fn haar_moment(n: usize, m: usize) -> f64 {
    let d = (1u64 << n) as f64;
    (1..=m).fold(1.0, |acc, i| acc * i as f64 / (d + i as f64 - 1.0))
}

/// Exact flag-1 branch of `U_PRS(ψ^{⊗m} ⊗ |0⟩|0⟩)`, before any reversion.
#[derive(Clone, Debug, Serialize)]
pub struct SuccessBranch {
    pub p: f64,
    /// Key-register distribution conditioned on `out = 1`.
    pub key_distribution: Vec<f64>,
    pub argmax: usize,
    /// Fidelity with `|0^{mn}⟩|sk*⟩|1⟩`.
    pub fidelity_vs_target: f64,
    /// Weight of the flag-1 branch outside `PRS = 0^{mn}`.
    pub off_zero_weight: f64,
}

pub fn exact_success_branch(inst: &PrsInstance, challenge: &StateVector, sk_star: usize) -> Result<SuccessBranch> {
    let amp = &inst.amplifier;
    let full = amp.evolve(&inst.challenge_copies(challenge)?)?;
    let (inside, _) = amp.flag().split(&full)?;
    let p: f64 = inside.iter().map(|a| a.norm_sqr()).sum();
    let post = StateVector::normalized(amp.layout().clone(), inside)?;
    let key_distribution = if inst.key_bits() > 0 {
        post.segment_distribution("sk")?
    } else {
        vec![1.0]
    };
    let argmax = key_distribution
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let zero = Projector::all_zero(inst.segments.iter().cloned());
    Ok(SuccessBranch {
        p,
        key_distribution,
        argmax,
        fidelity_vs_target: crate::statevector::fidelity(&post, &inst.target_state(sk_star)?)?,
        off_zero_weight: 1.0 - zero.probability(&post)?,
    })
}
