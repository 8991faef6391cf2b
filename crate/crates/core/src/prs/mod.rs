//! Rewinding-based key recovery against keyed state families, the SWAP-test
//! distinguisher built on it, and the analogous attack on the toy QPKE.

mod attack;
mod instance;
mod qpke_attack;

pub use attack::{
    distinguish, get_sk, prs_impossibility_experiment, AttackResult, ImpossibilityReport,
    ImpossibilityRow, Pipeline, Verdict, DEFAULT_MAX_ITER, DEFAULT_TAU,
};
pub use instance::{
    build_u_check, build_u_init, build_u_invert, exact_success_branch, haar_moment,
    success_prob_exact, success_prob_formula, success_prob_operator, PrsInstance, SuccessBranch,
};
pub use qpke_attack::{ideal_decrypt_rate, qpke_attack, QpkeAttackReport, QpkeAttackRow};

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::oracles::{ClassicalFunction, KeyedUnitaryFamily, PrfFamily};
    use crate::qpke::SchemeParams;
    use crate::rng::SimRng;
    use crate::statevector::{
        fidelity, haar_state, unitarity_deviation, StateVector, UnitaryOp,
    };

    fn haar_instance(key_bits: usize, n: usize, m: usize, seed: u64) -> PrsInstance {
        let fam = KeyedUnitaryFamily::haar(key_bits, n, &mut SimRng::new(seed)).unwrap();
        PrsInstance::new(Arc::new(fam), m, m).unwrap()
    }

    fn full_basis(inst: &PrsInstance, sk: usize, out: usize) -> StateVector {
        StateVector::basis_values(inst.amplifier().layout().clone(), &[("sk", sk), ("out", out)])
            .unwrap()
    }

    #[test]
    fn u_init_is_a_hadamard_on_the_key() {
        let inst = haar_instance(1, 1, 1, 0);
        let out = inst.u_init().apply(&full_basis(&inst, 0, 0)).unwrap();
        let a = out.layout().index_of(&[("sk", 0)]).unwrap();
        let b = out.layout().index_of(&[("sk", 1)]).unwrap();
        assert!((out.amp(a).re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((out.amp(b).re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        // PRS content is untouched
        let psi = haar_state(1, &mut SimRng::new(4)).unwrap();
        let anc = StateVector::zero(inst.amplifier().ancilla_layout().clone());
        let s = inst.challenge_copies(&psi).unwrap().tensor(&anc).unwrap();
        let t = inst.u_init().apply(&s).unwrap();
        let plus_key = UnitaryOp::hadamard("sk")
            .apply(&StateVector::zero(inst.amplifier().ancilla_layout().clone()))
            .unwrap();
        let plus = inst.challenge_copies(&psi).unwrap().tensor(&plus_key).unwrap();
        assert!((fidelity(&t, &plus).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn u_invert_undoes_the_planted_key() {
        let inst = haar_instance(2, 2, 2, 1);
        for k in 0..4 {
            let copies = inst.challenge_copies(&inst.keyed_state(k).unwrap()).unwrap();
            let key = StateVector::basis_values(
                inst.amplifier().ancilla_layout().clone(),
                &[("sk", k)],
            )
            .unwrap();
            let s = inst.u_invert().unwrap().apply(&copies.tensor(&key).unwrap()).unwrap();
            let expect = full_basis(&inst, k, 0);
            assert!((fidelity(&s, &expect).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_key_family_has_no_key_register() {
        let inst = haar_instance(0, 2, 2, 2);
        assert!(!inst.amplifier().layout().contains("sk"));
        assert_eq!(inst.total_qubits(), 5);
        let p = success_prob_exact(&inst, &inst.keyed_state(0).unwrap()).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        let copies = inst.challenge_copies(&inst.keyed_state(0).unwrap()).unwrap();
        let r = get_sk(&inst, &copies, Some(0), 10, &mut SimRng::new(0)).unwrap();
        assert_eq!(r.recovered_key, Some(0));
        assert_eq!(r.transcript.iterations, 1);
    }

    #[test]
    fn operators_are_unitary_and_compose() {
        let inst = haar_instance(1, 2, 1, 3);
        let layout = inst.amplifier().layout();
        let inv = inst.u_invert().unwrap().to_dense(layout).unwrap();
        assert!(unitarity_deviation(&inv) <= 1e-10);
        let init = inst.u_init().to_dense(layout).unwrap();
        assert!(unitarity_deviation(&init) <= 1e-10);
        let check = inst.u_check().to_dense(layout).unwrap();
        assert_eq!(&check * &check, nalgebra::DMatrix::identity(check.nrows(), check.ncols()));
        let whole = inst.u_prs().to_dense(layout).unwrap();
        let parts = check * inv * init;
        let dev = (whole - parts).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev <= 1e-10);
    }

    #[test]
    fn u_check_flips_only_on_zero() {
        let inst = haar_instance(1, 1, 2, 0);
        let z = full_basis(&inst, 1, 0);
        let out = inst.u_check().apply(&z).unwrap();
        assert_eq!(out, full_basis(&inst, 1, 1));
        let x = StateVector::basis_values(
            inst.amplifier().layout().clone(),
            &[("prs1", 1), ("sk", 1)],
        )
        .unwrap();
        assert_eq!(inst.u_check().apply(&x).unwrap(), x);
    }

    #[test]
    fn two_key_success_probability_three_ways() {
        let inst = haar_instance(1, 2, 1, 9);
        for k in 0..2 {
            let psi = inst.keyed_state(k).unwrap();
            let other = inst.keyed_state(1 - k).unwrap();
            let exact = success_prob_exact(&inst, &psi).unwrap();
            let closed = 0.5 * (1.0 + psi.inner(&other).unwrap().norm_sqr());
            assert!((exact - closed).abs() < 1e-12);
            assert!((exact - success_prob_formula(&inst, &psi).unwrap()).abs() < 1e-12);
            assert!((exact - success_prob_operator(&inst, &psi).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn haar_moment_values() {
        assert!((haar_moment(3, 1) - 1.0 / 8.0).abs() < 1e-15);
        assert!((haar_moment(3, 2) - 2.0 / 72.0).abs() < 1e-15);
        assert!((haar_moment(3, 3) - 1.0 / 120.0).abs() < 1e-15);
    }

    #[test]
    fn success_branch_concentrates_on_planted_key() {
        let mut last = f64::INFINITY;
        for m in 1..=3 {
            let inst = haar_instance(3, 3, m, 12);
            let b = exact_success_branch(&inst, &inst.keyed_state(5).unwrap(), 5).unwrap();
            assert!(b.off_zero_weight <= 1e-10);
            if m >= 2 {
                assert_eq!(b.argmax, 5);
            }
            let err = 1.0 - b.fidelity_vs_target;
            assert!(err < last, "m={m}: {err} !< {last}");
            last = err;
        }
    }

    #[test]
    fn distinguisher_accepts_exact_copies() {
        let inst = haar_instance(2, 3, 1, 4);
        let fresh = vec![inst.keyed_state(2).unwrap(); 8];
        let (v, a) = distinguish(&inst, 2, &fresh, DEFAULT_TAU, &mut SimRng::new(0)).unwrap();
        assert_eq!((v, a), (Verdict::Pseudorandom, 8));
    }

    #[test]
    fn distinguisher_rejects_haar_states_mostly() {
        let inst = haar_instance(3, 3, 1, 4);
        let mut rng = SimRng::new(77);
        let mut haar_verdicts = 0;
        for _ in 0..500 {
            let psi = haar_state(3, &mut rng).unwrap();
            let (v, _) = distinguish(&inst, 0, &vec![psi; 8], DEFAULT_TAU, &mut rng).unwrap();
            haar_verdicts += (v == Verdict::Haar) as usize;
        }
        assert!(haar_verdicts as f64 / 500.0 >= 0.85);
    }

    #[test]
    fn null_pipeline_has_no_advantage() {
        let inst = haar_instance(2, 2, 2, 6);
        let rep = prs_impossibility_experiment(
            &inst, 400, DEFAULT_TAU, 200, Pipeline::Null, &SimRng::new(1),
        )
        .unwrap();
        assert!(rep.advantage.abs() <= 4.0 * 0.5 / (400f64).sqrt());
    }

    #[test]
    fn attack_pipeline_is_deterministic() {
        let inst = haar_instance(2, 2, 2, 6);
        let run = || {
            let r = prs_impossibility_experiment(
                &inst, 40, DEFAULT_TAU, 200, Pipeline::Attack, &SimRng::new(3),
            )
            .unwrap();
            format!("{:?}", r.rows)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn equivalent_keys_still_decrypt() {
        let f = ClassicalFunction::new(2, 2, vec![3, 1, 0, 2]).unwrap();
        let prf = PrfFamily::from_functions(2, vec![f; 4]).unwrap();
        let params = SchemeParams::new(prf).unwrap();
        let rep = qpke_attack(&params, 2, 50, 1000, &SimRng::new(2)).unwrap();
        assert_eq!(rep.functional_recovery_rate, 1.0);
        // both components share one function, so Dec-by-k̃0 always says 0
        assert!(rep.rows.iter().all(|r| r.guess == 0));
        assert!(rep.p_exact_by_key.iter().all(|p| (p - 1.0).abs() < 1e-12));
    }

    #[test]
    fn budget_is_checked() {
        // an 8-qubit family is fine on its own; three copies are not
        let fam = Arc::new(KeyedUnitaryFamily::haar(2, 8, &mut SimRng::new(0)).unwrap());
        assert!(matches!(
            PrsInstance::new(fam, 3, 3),
            Err(crate::Error::QubitBudget { required: 27, .. })
        ));
    }
}
