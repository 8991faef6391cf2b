//! Empirical check of the one-way-to-hiding inequality.
//!
//! Each trial samples functions `G`, `H` that differ exactly on a random set
//! `S`, plus a hint `z` (the first element of `S`). For one instance the
//! acceptance probabilities of `A^H` and `A^G` and the hit probability of
//! the measuring extractor `B^H` (averaged over its uniform round choice)
//! are computed exactly from the statevector; the Monte Carlo runs over
//! instances.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracles::{lift_to_oracle, sample_random_function, ClassicalFunction};
use crate::rng::SimRng;
use crate::stats::{mean, std_error};
use crate::statevector::{haar_matrix, Projector, RegisterLayout, StateVector, UnitaryOp, C64};

/// Largest simulated oracle domain.
pub const MAX_O2H_DOMAIN_BITS: usize = 10;

/// Shape of the random `(G, H, S, z)` instances.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct O2hSetup {
    pub domain_bits: usize,
    pub out_bits: usize,
    /// `|S|`; zero makes `G = H`.
    pub set_size: usize,
}

#[derive(Clone, Debug)]
pub struct O2hInstance {
    pub h: ClassicalFunction,
    pub g: ClassicalFunction,
    pub set: Vec<u64>,
    pub z: u64,
}

impl O2hSetup {
    pub fn sample(&self, rng: &mut SimRng) -> Result<O2hInstance> {
        if self.domain_bits > MAX_O2H_DOMAIN_BITS {
            return Err(Error::DomainTooLarge {
                bits: self.domain_bits,
                max: MAX_O2H_DOMAIN_BITS,
            });
        }
        let domain = 1usize << self.domain_bits;
        if self.set_size > domain {
            return Err(Error::InvalidParameter(format!(
                "|S| = {} exceeds the domain",
                self.set_size
            )));
        }
        let h = sample_random_function(self.domain_bits, self.out_bits, rng)?;
        let set: Vec<u64> = sample(rng, domain, self.set_size)
            .into_iter()
            .map(|x| x as u64)
            .collect();
        let ymax = 1u64 << self.out_bits;
        let overrides: Vec<(u64, u64)> = set
            .iter()
            .map(|&x| (x, h.eval(x) ^ rng.random_range(1..ymax)))
            .collect();
        let g = h.with_values(&overrides)?;
        let z = match set.first() {
            Some(&s) => s,
            None => rng.random_range(0..domain as u64),
        };
        Ok(O2hInstance { h, g, set, z })
    }
}

/// Oracle algorithm in the simulatable query model: `depth` rounds, each
/// preceded by a unitary and querying every slot in parallel, followed by a
/// final unitary and a projective accept test.
pub trait OracleAlgorithm: Sync {
    fn name(&self) -> String;
    fn domain_bits(&self) -> usize;
    fn out_bits(&self) -> usize;
    fn layout(&self) -> Result<RegisterLayout>;
    fn depth(&self) -> usize;
    /// `(input, output)` segment pairs queried each round.
    fn slots(&self) -> Vec<(String, String)>;
    /// Unitary applied before query round `round`; `round == depth` is the
    /// final unitary.
    fn round_unitary(&self, round: usize, z: u64) -> Result<UnitaryOp>;
    fn accept(&self, z: u64) -> Projector;
}

fn query_op(alg: &dyn OracleAlgorithm, f: &ClassicalFunction) -> Result<UnitaryOp> {
    let ops = alg
        .slots()
        .iter()
        .map(|(i, o)| lift_to_oracle(f, i, o))
        .collect::<Result<Vec<_>>>()?;
    Ok(UnitaryOp::product(ops))
}

/// Exact `Pr[1 ← A^f(z)]` together with, for each round, the probability
/// that measuring all query inputs just before that round hits `set`.
pub fn run_exact(
    alg: &dyn OracleAlgorithm,
    f: &ClassicalFunction,
    z: u64,
    set: &[u64],
) -> Result<(f64, Vec<f64>)> {
    let layout = alg.layout()?;
    let oracle = query_op(alg, f)?;
    let slots = alg
        .slots()
        .iter()
        .map(|(i, _)| layout.slot(i))
        .collect::<Result<Vec<_>>>()?;
    let mut state = StateVector::zero(layout);
    let mut hits = Vec::with_capacity(alg.depth());
    for r in 0..alg.depth() {
        state = alg.round_unitary(r, z)?.apply(&state)?;
        let hit: f64 = state
            .amps()
            .iter()
            .enumerate()
            .filter(|(idx, _)| {
                slots
                    .iter()
                    .any(|s| set.contains(&(s.value(*idx) as u64)))
            })
            .map(|(_, a)| a.norm_sqr())
            .sum();
        hits.push(hit);
        state = oracle.apply(&state)?;
    }
    state = alg.round_unitary(alg.depth(), z)?.apply(&state)?;
    Ok((alg.accept(z).probability(&state)?, hits))
}

#[derive(Clone, Debug, Serialize)]
pub struct O2hTrial {
    pub p_left: f64,
    pub p_right: f64,
    pub p_guess: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct O2hReport {
    pub adversary: String,
    pub setup: O2hSetup,
    pub depth: usize,
    pub trials: usize,
    pub p_left: f64,
    pub p_right: f64,
    pub p_guess: f64,
    pub se_diff: f64,
    pub se_sqrt_diff: f64,
    pub se_guess: f64,
    /// `|P_left − P_right|`.
    pub lhs: f64,
    /// `|√P_left − √P_right|`.
    pub lhs_sqrt: f64,
    /// `2d √P_guess`.
    pub rhs: f64,
    /// Both inequalities hold with 4-standard-error slack.
    pub bound_holds: bool,
    #[serde(skip)]
    pub rows: Vec<O2hTrial>,
}

/// Standard errors of slack granted to each side of the inequality.
pub const O2H_SLACK_SE: f64 = 4.0;

pub fn o2h_experiment(
    setup: O2hSetup,
    alg: &dyn OracleAlgorithm,
    trials: usize,
    rng: &SimRng,
) -> Result<O2hReport> {
    if alg.domain_bits() != setup.domain_bits || alg.out_bits() != setup.out_bits {
        return Err(Error::InvalidParameter(format!(
            "adversary `{}` expects {}→{} bit oracles",
            alg.name(),
            alg.domain_bits(),
            alg.out_bits()
        )));
    }
    let d = alg.depth();
    if d == 0 || trials == 0 {
        return Err(Error::InvalidParameter("depth and trials must be ≥ 1".into()));
    }
    let rows = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng.fork(t as u64);
            let inst = setup.sample(&mut r)?;
            let (p_left, hits) = run_exact(alg, &inst.h, inst.z, &inst.set)?;
            let (p_right, _) = run_exact(alg, &inst.g, inst.z, &inst.set)?;
            Ok(O2hTrial {
                p_left,
                p_right,
                p_guess: hits.iter().sum::<f64>() / d as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let col = |f: fn(&O2hTrial) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let left = col(|r| r.p_left);
    let right = col(|r| r.p_right);
    let guess = col(|r| r.p_guess);
    let diffs: Vec<f64> = left.iter().zip(&right).map(|(a, b)| a - b).collect();
    let sqrt_diffs: Vec<f64> = rows
        .iter()
        .map(|r| r.p_left.sqrt() - r.p_right.sqrt())
        .collect();
    let (p_left, p_right, p_guess) = (mean(&left), mean(&right), mean(&guess));
    let se_diff = std_error(&diffs);
    let se_sqrt_diff = std_error(&sqrt_diffs);
    let se_guess = std_error(&guess);
    let lhs = (p_left - p_right).abs();
    let lhs_sqrt = (p_left.sqrt() - p_right.sqrt()).abs();
    let rhs = 2.0 * d as f64 * p_guess.sqrt();
    let rhs_slack = 2.0 * d as f64 * (p_guess + O2H_SLACK_SE * se_guess).min(1.0).sqrt();
    // The sqrt-form estimate is a plug-in value; its spread is bounded by the
    // paired per-trial sqrt differences.
    let bound_holds = lhs - O2H_SLACK_SE * se_diff <= rhs_slack
        && lhs_sqrt - O2H_SLACK_SE * se_sqrt_diff <= rhs_slack;
    Ok(O2hReport {
        adversary: alg.name(),
        setup,
        depth: d,
        trials,
        p_left,
        p_right,
        p_guess,
        se_diff,
        se_sqrt_diff,
        se_guess,
        lhs,
        lhs_sqrt,
        rhs,
        bound_holds,
        rows,
    })
}

fn layout_of(segs: &[(String, usize)]) -> Result<RegisterLayout> {
    RegisterLayout::new(segs.iter().map(|(n, w)| (n.clone(), *w)))
}

/// Queries classical points: `z` in round `probe_round`, `z ⊕ 1` in every
/// other round. Accepts iff the accumulated answer register is zero.
#[derive(Clone, Debug)]
pub struct ClassicalProbe {
    pub domain_bits: usize,
    pub out_bits: usize,
    pub depth: usize,
    pub probe_round: usize,
}

impl ClassicalProbe {
    fn point(&self, round: usize, z: u64) -> usize {
        (if round == self.probe_round { z } else { z ^ 1 }) as usize
    }
}

impl OracleAlgorithm for ClassicalProbe {
    fn name(&self) -> String {
        format!("classical-probe(d={},round={})", self.depth, self.probe_round)
    }
    fn domain_bits(&self) -> usize {
        self.domain_bits
    }
    fn out_bits(&self) -> usize {
        self.out_bits
    }
    fn layout(&self) -> Result<RegisterLayout> {
        RegisterLayout::new([("in", self.domain_bits), ("out", self.out_bits)])
    }
    fn depth(&self) -> usize {
        self.depth
    }
    fn slots(&self) -> Vec<(String, String)> {
        vec![("in".into(), "out".into())]
    }
    fn round_unitary(&self, round: usize, z: u64) -> Result<UnitaryOp> {
        let prev = if round == 0 { 0 } else { self.point(round - 1, z) };
        let next = if round == self.depth { 0 } else { self.point(round, z) };
        Ok(UnitaryOp::xor_const("in", prev ^ next))
    }
    fn accept(&self, _z: u64) -> Projector {
        Projector::equals("out", 0)
    }
}

/// Uniform-superposition queries with Hadamard mixing of the answer register
/// between rounds; accepts on input register `0` after a final Hadamard.
#[derive(Clone, Debug)]
pub struct UniformQuery {
    pub domain_bits: usize,
    pub out_bits: usize,
    pub depth: usize,
}

impl OracleAlgorithm for UniformQuery {
    fn name(&self) -> String {
        format!("uniform-query(d={})", self.depth)
    }
    fn domain_bits(&self) -> usize {
        self.domain_bits
    }
    fn out_bits(&self) -> usize {
        self.out_bits
    }
    fn layout(&self) -> Result<RegisterLayout> {
        RegisterLayout::new([("in", self.domain_bits), ("out", self.out_bits)])
    }
    fn depth(&self) -> usize {
        self.depth
    }
    fn slots(&self) -> Vec<(String, String)> {
        vec![("in".into(), "out".into())]
    }
    fn round_unitary(&self, round: usize, _z: u64) -> Result<UnitaryOp> {
        Ok(match round {
            0 => UnitaryOp::hadamard("in"),
            r if r == self.depth => UnitaryOp::hadamard("in"),
            _ => UnitaryOp::hadamard("out"),
        })
    }
    fn accept(&self, _z: u64) -> Projector {
        Projector::equals("in", 0)
    }
}

/// Grover iterations with a one-bit oracle in phase-kickback form; accepts
/// iff the search register ends on the hint `z`.
#[derive(Clone, Debug)]
pub struct GroverSearch {
    pub domain_bits: usize,
    pub depth: usize,
}

impl GroverSearch {
    fn diffusion(&self) -> Result<UnitaryOp> {
        let dim = 1usize << self.domain_bits;
        let w = 2.0 / dim as f64;
        let m = DMatrix::from_fn(dim, dim, |i, j| {
            C64::new(if i == j { w - 1.0 } else { w }, 0.0)
        });
        UnitaryOp::dense(["in"], m)
    }
}

impl OracleAlgorithm for GroverSearch {
    fn name(&self) -> String {
        format!("grover(d={})", self.depth)
    }
    fn domain_bits(&self) -> usize {
        self.domain_bits
    }
    fn out_bits(&self) -> usize {
        1
    }
    fn layout(&self) -> Result<RegisterLayout> {
        RegisterLayout::new([("in", self.domain_bits), ("out", 1)])
    }
    fn depth(&self) -> usize {
        self.depth
    }
    fn slots(&self) -> Vec<(String, String)> {
        vec![("in".into(), "out".into())]
    }
    fn round_unitary(&self, round: usize, _z: u64) -> Result<UnitaryOp> {
        if round == 0 {
            return Ok(UnitaryOp::product(vec![
                UnitaryOp::hadamard("in"),
                UnitaryOp::xor_const("out", 1),
                UnitaryOp::hadamard("out"),
            ]));
        }
        self.diffusion()
    }
    fn accept(&self, z: u64) -> Projector {
        Projector::equals("in", z as usize)
    }
}

/// Two parallel uniform-superposition query slots per round; the parity of
/// the one-bit answers is copied into a flag that decides acceptance.
#[derive(Clone, Debug)]
pub struct ParallelParity {
    pub domain_bits: usize,
    pub depth: usize,
}

fn cnot() -> DMatrix<C64> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    DMatrix::from_row_slice(
        4,
        4,
        &[
            one, zero, zero, zero, //
            zero, one, zero, zero, //
            zero, zero, zero, one, //
            zero, zero, one, zero,
        ],
    )
}

impl OracleAlgorithm for ParallelParity {
    fn name(&self) -> String {
        format!("parallel-parity(d={})", self.depth)
    }
    fn domain_bits(&self) -> usize {
        self.domain_bits
    }
    fn out_bits(&self) -> usize {
        1
    }
    fn layout(&self) -> Result<RegisterLayout> {
        RegisterLayout::new([
            ("in0", self.domain_bits),
            ("out0", 1),
            ("in1", self.domain_bits),
            ("out1", 1),
            ("flag", 1),
        ])
    }
    fn depth(&self) -> usize {
        self.depth
    }
    fn slots(&self) -> Vec<(String, String)> {
        vec![("in0".into(), "out0".into()), ("in1".into(), "out1".into())]
    }
    fn round_unitary(&self, round: usize, _z: u64) -> Result<UnitaryOp> {
        if round == 0 {
            return Ok(UnitaryOp::product(vec![
                UnitaryOp::hadamard("in0"),
                UnitaryOp::hadamard("in1"),
            ]));
        }
        if round == self.depth {
            return Ok(UnitaryOp::product(vec![
                UnitaryOp::dense(["out0", "flag"], cnot())?,
                UnitaryOp::dense(["out1", "flag"], cnot())?,
            ]));
        }
        Ok(UnitaryOp::product(vec![
            UnitaryOp::hadamard("out0"),
            UnitaryOp::dense(["out0", "out1"], cnot())?,
        ]))
    }
    fn accept(&self, _z: u64) -> Projector {
        Projector::equals("flag", 1)
    }
}

/// Fixed Haar-random unitaries on `(in, out, work)` between queries,
/// accepting iff the input register ends on the hint `z`.
#[derive(Clone, Debug)]
pub struct HaarAdversary {
    domain_bits: usize,
    out_bits: usize,
    work_bits: usize,
    unitaries: Vec<DMatrix<C64>>,
}

impl HaarAdversary {
    pub fn new(
        domain_bits: usize,
        out_bits: usize,
        work_bits: usize,
        depth: usize,
        rng: &mut SimRng,
    ) -> Result<Self> {
        let n = domain_bits + out_bits + work_bits;
        let unitaries = (0..=depth)
            .map(|_| haar_matrix(n, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            domain_bits,
            out_bits,
            work_bits,
            unitaries,
        })
    }
}

impl OracleAlgorithm for HaarAdversary {
    fn name(&self) -> String {
        format!("haar(d={})", self.depth())
    }
    fn domain_bits(&self) -> usize {
        self.domain_bits
    }
    fn out_bits(&self) -> usize {
        self.out_bits
    }
    fn layout(&self) -> Result<RegisterLayout> {
        layout_of(&[
            ("in".into(), self.domain_bits),
            ("out".into(), self.out_bits),
            ("work".into(), self.work_bits),
        ])
    }
    fn depth(&self) -> usize {
        self.unitaries.len() - 1
    }
    fn slots(&self) -> Vec<(String, String)> {
        vec![("in".into(), "out".into())]
    }
    fn round_unitary(&self, round: usize, _z: u64) -> Result<UnitaryOp> {
        UnitaryOp::dense(["in", "out", "work"], self.unitaries[round].clone())
    }
    fn accept(&self, z: u64) -> Projector {
        Projector::equals("in", z as usize)
    }
}

/// The CCA reduction's view in the PRF-to-random-function step: `copies`
/// public-key copies prepared by uniform-superposition queries and
/// `decryption_queries` classical basis queries, all in a single round.
/// Accepts iff measuring the first public-key copy's answer register gives 1.
#[derive(Clone, Debug)]
pub struct PublicKeySimulator {
    pub lambda: usize,
    pub out_bits: usize,
    pub copies: usize,
    pub decryption_queries: usize,
}

impl PublicKeySimulator {
    /// Union bound `(n + Q) / 2^λ` on the extractor's hit probability.
    pub fn guess_bound(&self) -> f64 {
        (self.copies + self.decryption_queries) as f64 / (1u64 << self.lambda) as f64
    }
}

impl OracleAlgorithm for PublicKeySimulator {
    fn name(&self) -> String {
        format!(
            "pk-simulator(n={},Q={})",
            self.copies, self.decryption_queries
        )
    }
    fn domain_bits(&self) -> usize {
        self.lambda
    }
    fn out_bits(&self) -> usize {
        self.out_bits
    }
    fn layout(&self) -> Result<RegisterLayout> {
        let mut segs = Vec::new();
        for j in 0..self.copies {
            segs.push((format!("pk{j}_x"), self.lambda));
            segs.push((format!("pk{j}_y"), self.out_bits));
        }
        for j in 0..self.decryption_queries {
            segs.push((format!("dq{j}_x"), self.lambda));
            segs.push((format!("dq{j}_y"), self.out_bits));
        }
        layout_of(&segs)
    }
    fn depth(&self) -> usize {
        1
    }
    fn slots(&self) -> Vec<(String, String)> {
        (0..self.copies)
            .map(|j| (format!("pk{j}_x"), format!("pk{j}_y")))
            .chain((0..self.decryption_queries).map(|j| (format!("dq{j}_x"), format!("dq{j}_y"))))
            .collect()
    }
    fn round_unitary(&self, round: usize, _z: u64) -> Result<UnitaryOp> {
        if round == 1 {
            return Ok(UnitaryOp::identity());
        }
        let mut ops: Vec<UnitaryOp> = (0..self.copies)
            .map(|j| UnitaryOp::hadamard(&format!("pk{j}_x")))
            .collect();
        ops.extend((0..self.decryption_queries).map(|j| UnitaryOp::xor_const(&format!("dq{j}_x"), j)));
        Ok(UnitaryOp::product(ops))
    }
    fn accept(&self, _z: u64) -> Projector {
        Projector::equals("pk0_y", 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_set_gives_equal_probabilities() {
        let setup = O2hSetup {
            domain_bits: 4,
            out_bits: 2,
            set_size: 0,
        };
        let alg = UniformQuery {
            domain_bits: 4,
            out_bits: 2,
            depth: 2,
        };
        let rep = o2h_experiment(setup, &alg, 20, &SimRng::new(1)).unwrap();
        assert_eq!(rep.p_left, rep.p_right);
        assert_eq!(rep.p_guess, 0.0);
        assert!(rep.bound_holds);
    }

    #[test]
    fn classical_probe_guess_is_one_over_depth() {
        for d in 1..=4 {
            let setup = O2hSetup {
                domain_bits: 5,
                out_bits: 2,
                set_size: 1,
            };
            let alg = ClassicalProbe {
                domain_bits: 5,
                out_bits: 2,
                depth: d,
                probe_round: d - 1,
            };
            let rep = o2h_experiment(setup, &alg, 10, &SimRng::new(d as u64)).unwrap();
            for row in &rep.rows {
                assert!((row.p_guess - 1.0 / d as f64).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn mismatched_setup_is_rejected() {
        let setup = O2hSetup {
            domain_bits: 3,
            out_bits: 1,
            set_size: 1,
        };
        let alg = GroverSearch {
            domain_bits: 4,
            depth: 1,
        };
        assert!(o2h_experiment(setup, &alg, 1, &SimRng::new(0)).is_err());
    }

    #[test]
    fn instance_differs_exactly_on_set() {
        let setup = O2hSetup {
            domain_bits: 6,
            out_bits: 3,
            set_size: 5,
        };
        let inst = setup.sample(&mut SimRng::new(4)).unwrap();
        for x in 0..64u64 {
            assert_eq!(inst.set.contains(&x), inst.g.eval(x) != inst.h.eval(x));
        }
        assert!(inst.set.contains(&inst.z));
    }
}
