//! Property tests over random states and operators.

use proptest::prelude::*;
use qrewind::oracles::{lift_to_oracle, ClassicalFunction};
use qrewind::statevector::{
    fidelity, haar_matrix, haar_state_on, measure_forced, unitarity_deviation, Projector,
    RegisterLayout, StateVector, UnitaryOp,
};
use qrewind::SimRng;

fn layout() -> RegisterLayout {
    RegisterLayout::new([("a", 2), ("b", 2), ("c", 1)]).unwrap()
}

/// A random composite operator built from the structured variants.
fn random_op(seed: u64) -> UnitaryOp {
    let mut rng = SimRng::new(seed);
    let table: Vec<u64> = (0..4).map(|i| (seed.wrapping_mul(31) + i * 7) % 4).collect();
    let f = ClassicalFunction::new(2, 2, table).unwrap();
    let branches = (0..2)
        .map(|_| UnitaryOp::dense(["a"], haar_matrix(2, &mut rng).unwrap()).unwrap())
        .collect();
    UnitaryOp::hadamard("a")
        .then(lift_to_oracle(&f, "a", "b").unwrap())
        .then(UnitaryOp::controlled("c", branches))
        .then(UnitaryOp::dense(["b", "c"], haar_matrix(3, &mut rng).unwrap()).unwrap())
        .then(UnitaryOp::flip_if_zero(["a"], "c"))
        .then(UnitaryOp::xor_const("b", (seed % 4) as usize))
}

fn random_state(seed: u64) -> StateVector {
    haar_state_on(layout(), &mut SimRng::new(seed ^ 0x5eed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn apply_preserves_norm(seed in any::<u64>()) {
        let out = random_op(seed).apply(&random_state(seed)).unwrap();
        prop_assert!((out.norm() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn adjoint_undoes_apply(seed in any::<u64>()) {
        let op = random_op(seed);
        let s = random_state(seed);
        let back = op.adjoint().apply(&op.apply(&s).unwrap()).unwrap();
        prop_assert!(fidelity(&back, &s).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn dense_form_is_unitary(seed in any::<u64>()) {
        let m = random_op(seed).to_dense(&layout()).unwrap();
        prop_assert!(unitarity_deviation(&m) <= 1e-10);
    }

    #[test]
    fn measurement_branches_sum_to_one(seed in any::<u64>(), v in 0usize..4) {
        let s = random_state(seed);
        let p = Projector::new([("b", v), ("c", 0)]);
        let p1 = p.probability(&s).unwrap();
        let (inside, outside) = p.split(&s).unwrap();
        let w = |a: &[qrewind::C64]| a.iter().map(|z| z.norm_sqr()).sum::<f64>();
        prop_assert!((w(&inside) + w(&outside) - 1.0).abs() <= 1e-10);
        prop_assert!((w(&inside) - p1).abs() <= 1e-15);
        if p1 > 1e-6 {
            let m = measure_forced(&p, &s, true).unwrap();
            prop_assert!((m.post_state.norm() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn oracle_is_an_involution(table in prop::collection::vec(0u64..8, 8)) {
        let f = ClassicalFunction::new(3, 3, table).unwrap();
        let l = RegisterLayout::new([("x", 3), ("y", 3)]).unwrap();
        let o = lift_to_oracle(&f, "x", "y").unwrap().to_dense(&l).unwrap();
        let sq = &o * &o;
        prop_assert_eq!(sq, nalgebra::DMatrix::identity(64, 64));
        // permutation: exactly one unit entry per column
        for j in 0..64 {
            let ones = o.column(j).iter().filter(|z| z.norm() == 1.0).count();
            let zeros = o.column(j).iter().filter(|z| z.norm() == 0.0).count();
            prop_assert_eq!((ones, zeros), (1, 63));
        }
    }

    #[test]
    fn fidelity_ignores_global_phase(seed in any::<u64>(), theta in 0.0f64..std::f64::consts::TAU) {
        let a = random_state(seed);
        let b = random_state(seed.wrapping_add(1));
        let f = fidelity(&a, &b).unwrap();
        prop_assert!((fidelity(&a.with_phase(theta), &b).unwrap() - f).abs() <= 1e-12);
        prop_assert!((fidelity(&a, &a.with_phase(theta)).unwrap() - 1.0).abs() <= 1e-12);
    }
}
