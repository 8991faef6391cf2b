use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracles::{lift_to_oracle, toy_prf, PrfFamily};
use crate::rng::SimRng;
use crate::stats::{wilson95, Interval};
use crate::statevector::{check_budget, sample_index, RegisterLayout, StateVector, UnitaryOp};

/// Security parameter, PRF output length and the PRF itself.
#[derive(Clone, Debug)]
pub struct SchemeParams {
    lambda: usize,
    out_bits: usize,
    prf: PrfFamily,
}

impl SchemeParams {
    /// Each public-key component lives on `λ + ℓ_out` qubits and must fit the
    /// simulation budget on its own; the two components are never held in a
    /// single statevector.
    pub fn new(prf: PrfFamily) -> Result<Self> {
        if prf.in_bits() != prf.key_bits() {
            return Err(Error::InvalidParameter(
                "scheme PRF must have equal key and input lengths".into(),
            ));
        }
        check_budget(prf.in_bits() + prf.out_bits())?;
        Ok(Self {
            lambda: prf.key_bits(),
            out_bits: prf.out_bits(),
            prf,
        })
    }

    /// Toy-PRF instantiation.
    pub fn toy(lambda: usize, out_bits: usize, master_seed: u64) -> Result<Self> {
        check_budget(lambda + out_bits)?;
        Self::new(toy_prf(lambda, out_bits, master_seed)?)
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn out_bits(&self) -> usize {
        self.out_bits
    }

    pub fn prf(&self) -> &PrfFamily {
        &self.prf
    }

    /// Layout `(x: λ, y: ℓ_out)` of one public-key component.
    pub fn component_layout(&self) -> RegisterLayout {
        RegisterLayout::new([("x", self.lambda), ("y", self.out_bits)])
            .expect("budget checked at construction")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SecretKey {
    pub k0: u64,
    pub k1: u64,
}

impl SecretKey {
    pub fn key(&self, b: u8) -> u64 {
        if b == 0 {
            self.k0
        } else {
            self.k1
        }
    }
}

/// One copy of `|pk_0⟩ ⊗ |pk_1⟩`. Each component is consumed by the
/// measurement that encrypts with it.
#[derive(Clone, Debug)]
pub struct PublicKey {
    components: [Option<StateVector>; 2],
}

impl PublicKey {
    pub fn component(&self, b: u8) -> Option<&StateVector> {
        self.components[usize::from(b & 1)].as_ref()
    }

    pub fn is_consumed(&self, b: u8) -> bool {
        self.components[usize::from(b & 1)].is_none()
    }

    /// Removes a component, e.g. to run a quantum attack on it.
    pub fn take(&mut self, b: u8) -> Result<StateVector> {
        self.components[usize::from(b & 1)]
            .take()
            .ok_or(Error::ConsumedKey(b))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Ciphertext {
    pub x: u64,
    pub y: u64,
}

/// `2^{-λ/2} Σ_x |x, PRF_k(x)⟩`, prepared by a Hadamard layer on `x`
/// followed by the XOR oracle of `PRF_k`.
pub fn prepare_component(params: &SchemeParams, key: u64) -> Result<StateVector> {
    let op = UnitaryOp::hadamard("x").then(lift_to_oracle(params.prf.function(key), "x", "y")?);
    op.apply(&StateVector::zero(params.component_layout()))
}

/// Fresh public-key copy for a known secret key.
pub fn prepare_public_key(params: &SchemeParams, sk: &SecretKey) -> Result<PublicKey> {
    Ok(PublicKey {
        components: [
            Some(prepare_component(params, sk.k0)?),
            Some(prepare_component(params, sk.k1)?),
        ],
    })
}

pub fn sample_secret_key(params: &SchemeParams, rng: &mut SimRng) -> SecretKey {
    let n = params.prf.num_keys() as u64;
    SecretKey {
        k0: rng.random_range(0..n),
        k1: rng.random_range(0..n),
    }
}

/// Samples `k_0, k_1` independently and prepares one public-key copy.
pub fn gen(params: &SchemeParams, rng: &mut SimRng) -> Result<(PublicKey, SecretKey)> {
    let sk = sample_secret_key(params, rng);
    Ok((prepare_public_key(params, &sk)?, sk))
}

/// Measures `|pk_pt⟩` in the computational basis; the outcome `(x, y)` is
/// the ciphertext.
pub fn enc(params: &SchemeParams, pk: &mut PublicKey, pt: u8, rng: &mut SimRng) -> Result<Ciphertext> {
    if pt > 1 {
        return Err(Error::InvalidParameter(format!("plaintext {pt} is not a bit")));
    }
    let state = pk.take(pt)?;
    let weights: Vec<f64> = state.amps().iter().map(|a| a.norm_sqr()).collect();
    let idx = sample_index(&weights, rng) as u64;
    let ymask = (1u64 << params.out_bits) - 1;
    Ok(Ciphertext {
        x: idx >> params.out_bits,
        y: idx & ymask,
    })
}

/// Returns `Some(0)` if `PRF_{k0}(x) = y`, else `Some(1)` if
/// `PRF_{k1}(x) = y`, else `None` (⊥).
pub fn dec(params: &SchemeParams, sk: &SecretKey, ct: &Ciphertext) -> Option<u8> {
    if ct.x >> params.lambda != 0 {
        return None;
    }
    if params.prf.eval(sk.k0, ct.x) == ct.y {
        Some(0)
    } else if params.prf.eval(sk.k1, ct.x) == ct.y {
        Some(1)
    } else {
        None
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrectnessReport {
    pub trials: usize,
    pub decryptions: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub success_ci: Interval,
    /// Mean over trials of the fraction of `x` with `PRF_{k0}(x) ∈ range(PRF_{k1})`.
    pub collision_fraction: f64,
    pub rows: Vec<CorrectnessRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrectnessRow {
    pub trial: usize,
    pub k0: u64,
    pub k1: u64,
    pub ok0: bool,
    pub ok1: bool,
    pub collision_fraction: f64,
}

/// Fraction of inputs `x` with `PRF_{k0}(x) ∈ range(PRF_{k1})`, by table scan.
pub fn collision_fraction(params: &SchemeParams, sk: &SecretKey) -> f64 {
    let range1 = params.prf.function(sk.k1).range();
    let f0 = params.prf.function(sk.k0);
    let hits = f0
        .table()
        .iter()
        .filter(|y| range1.binary_search(y).is_ok())
        .count();
    hits as f64 / f0.table().len() as f64
}

/// Fresh keys per trial; each trial encrypts `0` under `pk_0` and `1` under
/// `pk_1` and decrypts both.
pub fn correctness_experiment(
    params: &SchemeParams,
    trials: usize,
    rng: &SimRng,
) -> Result<CorrectnessReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be ≥ 1".into()));
    }
    let rows = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng.fork(t as u64);
            let (mut pk, sk) = gen(params, &mut r)?;
            let c0 = enc(params, &mut pk, 0, &mut r)?;
            let c1 = enc(params, &mut pk, 1, &mut r)?;
            Ok(CorrectnessRow {
                trial: t,
                k0: sk.k0,
                k1: sk.k1,
                ok0: dec(params, &sk, &c0) == Some(0),
                ok1: dec(params, &sk, &c1) == Some(1),
                collision_fraction: collision_fraction(params, &sk),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let successes = rows.iter().map(|r| r.ok0 as usize + r.ok1 as usize).sum();
    let decryptions = 2 * trials;
    Ok(CorrectnessReport {
        trials,
        decryptions,
        successes,
        success_rate: successes as f64 / decryptions as f64,
        success_ci: wilson95(successes, decryptions),
        collision_fraction: rows.iter().map(|r| r.collision_fraction).sum::<f64>() / trials as f64,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::ClassicalFunction;
    use crate::statevector::fidelity;

    #[test]
    fn public_key_support_matches_table() {
        let params = SchemeParams::toy(2, 6, 3).unwrap();
        let (pk, sk) = gen(&params, &mut SimRng::new(1)).unwrap();
        let s = pk.component(0).unwrap();
        let mut nonzero = 0;
        for (i, a) in s.amps().iter().enumerate() {
            if a.norm() > 1e-12 {
                nonzero += 1;
                assert!((a.norm() - 0.5).abs() < 1e-12);
                let (x, y) = ((i >> 6) as u64, (i & 63) as u64);
                assert_eq!(params.prf().eval(sk.k0, x), y);
            }
        }
        assert_eq!(nonzero, 4);
        assert!((s.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gen_is_deterministic() {
        let params = SchemeParams::toy(3, 9, 0).unwrap();
        let (a, ska) = gen(&params, &mut SimRng::new(4)).unwrap();
        let (b, skb) = gen(&params, &mut SimRng::new(4)).unwrap();
        assert_eq!(ska, skb);
        assert_eq!(
            fidelity(a.component(1).unwrap(), b.component(1).unwrap()).unwrap(),
            1.0
        );
    }

    #[test]
    fn encryption_consumes_component() {
        let params = SchemeParams::toy(2, 6, 3).unwrap();
        let mut rng = SimRng::new(2);
        let (mut pk, sk) = gen(&params, &mut rng).unwrap();
        let ct = enc(&params, &mut pk, 1, &mut rng).unwrap();
        assert_eq!(params.prf().eval(sk.k1, ct.x), ct.y);
        assert!(pk.is_consumed(1));
        assert!(!pk.is_consumed(0));
        assert_eq!(enc(&params, &mut pk, 1, &mut rng), Err(Error::ConsumedKey(1)));
    }

    fn engineered(tables: [[u64; 2]; 2]) -> SchemeParams {
        let fs = tables
            .iter()
            .map(|t| ClassicalFunction::new(1, 2, t.to_vec()).unwrap())
            .collect();
        SchemeParams::new(PrfFamily::from_functions(1, fs).unwrap()).unwrap()
    }

    #[test]
    fn dec_check_order_and_bottom() {
        let params = engineered([[1, 2], [1, 3]]);
        let sk = SecretKey { k0: 0, k1: 1 };
        // collision at x = 0: k0 wins
        assert_eq!(dec(&params, &sk, &Ciphertext { x: 0, y: 1 }), Some(0));
        assert_eq!(dec(&params, &sk, &Ciphertext { x: 1, y: 3 }), Some(1));
        assert_eq!(dec(&params, &sk, &Ciphertext { x: 1, y: 0 }), None);
        assert_eq!(dec(&params, &sk, &Ciphertext { x: 2, y: 1 }), None);
    }

    #[test]
    fn disjoint_family_is_perfectly_correct() {
        let params = engineered([[0, 1], [2, 3]]);
        let rep = correctness_experiment(&params, 200, &SimRng::new(5)).unwrap();
        // k0 == k1 still happens; restrict to distinct keys
        for row in rep.rows.iter().filter(|r| r.k0 != r.k1) {
            assert!(row.ok0 && row.ok1);
            assert_eq!(row.collision_fraction, 0.0);
        }
    }

    #[test]
    fn stress_config_has_collisions() {
        let params = SchemeParams::toy(2, 2, 11).unwrap();
        let rep = correctness_experiment(&params, 50, &SimRng::new(1)).unwrap();
        assert!(rep.collision_fraction > 0.0);
    }
}
