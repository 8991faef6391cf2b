use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::amplifier::AmplifierInstance;
use super::spectral::spectral_decomposition;
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::stats::{mean, median, std_error};
use crate::statevector::{
    fidelity, haar_matrix, measure, Projector, RegisterLayout, StateVector, UnitaryOp, C64,
};

/// Record of one rewind run.
#[derive(Clone, Debug, Serialize)]
pub struct RewindTranscript {
    /// Number of applications of `U` followed by a `Π1` measurement.
    pub iterations: usize,
    /// `Π1` outcomes, one per iteration.
    pub outcome_history: Vec<bool>,
    /// Ancilla-restoring outcomes after each failure (`true`: back in `|0⟩`).
    pub restore_history: Vec<bool>,
    #[serde(skip)]
    pub final_state: StateVector,
    /// Fidelity of `final_state` with normalized `Π1 U(ψ ⊗ |0⟩)`; 0 if that
    /// branch is empty.
    pub target_fidelity: f64,
    pub halted: bool,
}

/// Alternating-measurement rewinding: apply `U` and measure `Π1`; on failure
/// apply `U†`, measure whether the ancilla is back in `|0⟩`, and repeat.
/// Exhausting `max_iter` returns a transcript with `halted = false`.
pub fn rewind_until_success(
    inst: &AmplifierInstance,
    input: &StateVector,
    max_iter: usize,
    rng: &mut SimRng,
) -> Result<RewindTranscript> {
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be ≥ 1".into()));
    }
    let target = inst.target(input)?;
    let restore = inst.ancilla_zero();
    let mut state = inst.embed(input)?;
    let mut outcome_history = Vec::new();
    let mut restore_history = Vec::new();
    let mut halted = false;
    for iter in 1..=max_iter {
        state = inst.unitary().apply(&state)?;
        let m = measure(inst.flag(), &state, rng)?;
        state = m.post_state;
        outcome_history.push(m.outcome);
        if m.outcome {
            halted = true;
            break;
        }
        if iter == max_iter {
            break;
        }
        state = inst.adjoint().apply(&state)?;
        let r = measure(&restore, &state, rng)?;
        state = r.post_state;
        restore_history.push(r.outcome);
    }
    let target_fidelity = match &target {
        Some(t) => fidelity(&state, t)?,
        None => 0.0,
    };
    Ok(RewindTranscript {
        iterations: outcome_history.len(),
        outcome_history,
        restore_history,
        final_state: state,
        target_fidelity,
        halted,
    })
}

/// Exact mean iteration count of [`rewind_until_success`] for an eigenvector
/// of `P` with eigenvalue `p`.
///
/// After a failure the state is `φ0`; undoing `U` and measuring the ancilla
/// lands on `ψ ⊗ |0⟩` (prob `1 − p`) or on its orthogonal partner in the
/// same two-dimensional block (prob `p`), and either succeeds on the next
/// round with probability `1 − p` resp. `p`. So every retry succeeds with
/// `2p(1 − p)` and `E = 1 + (1 − p) / (2p(1 − p)) = 1 + 1/(2p)` for `p < 1`.
pub fn expected_iterations(p: f64) -> f64 {
    if p >= 1.0 {
        1.0
    } else if p <= 0.0 {
        f64::INFINITY
    } else {
        1.0 + 1.0 / (2.0 * p)
    }
}

/// Probability of no success within `k` iterations, eigenvector input.
pub fn survival_probability(p: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    (1.0 - p) * (1.0 - 2.0 * p * (1.0 - p)).powi(k as i32 - 1)
}

/// Instance with prescribed spectrum: `P = V diag(p_j) V†` for a Haar `V`.
#[derive(Clone, Debug)]
pub struct SpreadInstance {
    pub instance: AmplifierInstance,
    pub eigenvalues: Vec<f64>,
    /// `V|j⟩`, on the input layout.
    pub eigenvectors: Vec<StateVector>,
}

/// `U = Ctrl_out(W0, W1) · Ctrl_h(R_y(θ_j)) · (V† ⊗ I)` on `h` input qubits
/// plus one flag qubit `out`, with `sin²(θ_j/2) = p_j`. `W0`, `W1` are Haar
/// and only scramble the branches.
pub fn spread_instance(h_qubits: usize, eigenvalues: &[f64], rng: &mut SimRng) -> Result<SpreadInstance> {
    if eigenvalues.len() != 1 << h_qubits {
        return Err(Error::InvalidParameter(format!(
            "{} eigenvalues for a {h_qubits}-qubit input space",
            eigenvalues.len()
        )));
    }
    if let Some(p) = eigenvalues.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!("eigenvalue {p} outside [0, 1]")));
    }
    let v = haar_matrix(h_qubits, rng)?;
    let w0 = haar_matrix(h_qubits, rng)?;
    let w1 = haar_matrix(h_qubits, rng)?;
    let rotations = eigenvalues
        .iter()
        .map(|&p| {
            let (c, s) = ((1.0 - p).sqrt(), p.sqrt());
            let m = DMatrix::from_row_slice(
                2,
                2,
                &[C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)],
            );
            UnitaryOp::dense(["out"], m)
        })
        .collect::<Result<Vec<_>>>()?;
    let unitary = UnitaryOp::dense(["h"], v.adjoint())?
        .then(UnitaryOp::controlled("h", rotations))
        .then(UnitaryOp::controlled(
            "out",
            vec![UnitaryOp::dense(["h"], w0)?, UnitaryOp::dense(["h"], w1)?],
        ));
    let input = RegisterLayout::single("h", h_qubits)?;
    let eigenvectors = (0..v.ncols())
        .map(|j| StateVector::normalized(input.clone(), v.column(j).iter().copied().collect()))
        .collect::<Result<Vec<_>>>()?;
    let instance = AmplifierInstance::new(
        input,
        RegisterLayout::single("out", 1)?,
        unitary,
        Projector::equals("out", 1),
    )?;
    Ok(SpreadInstance {
        instance,
        eigenvalues: eigenvalues.to_vec(),
        eigenvectors,
    })
}

/// Aggregate over many rewind runs.
#[derive(Clone, Debug, Serialize)]
pub struct RewindReport {
    pub q: f64,
    pub eps: f64,
    /// Largest `|p_i − q|` over eigencomponents present in the inputs.
    pub observed_spread: f64,
    pub trials: usize,
    pub halted: usize,
    /// Over halted runs.
    pub mean_iters: f64,
    pub iters_se: f64,
    /// `1 + 1/(2q)`.
    pub expected_iters_markov: f64,
    /// `1/q`.
    pub expected_iters_inverse: f64,
    pub min_fidelity: f64,
    pub median_fidelity: f64,
    pub mean_fidelity: f64,
    #[serde(skip)]
    pub transcripts: Vec<RewindTranscript>,
}

impl RewindReport {
    /// Success-per-iteration rate implied by the mean, `1 / mean_iters`.
    pub fn fitted_rate(&self) -> f64 {
        1.0 / self.mean_iters
    }

    /// Empirical `Pr[no success within k iterations]`.
    pub fn empirical_survival(&self, k: usize) -> f64 {
        let alive = self
            .transcripts
            .iter()
            .filter(|t| !t.halted || t.iterations > k)
            .count();
        alive as f64 / self.transcripts.len() as f64
    }
}

/// Weight below which an eigencomponent of an input is ignored by the spread check.
pub const SPREAD_WEIGHT_CUTOFF: f64 = 1e-12;

/// Runs `trials` rewinds (input `t mod inputs.len()` in trial `t`) after
/// checking every eigenvalue of `P` present in the inputs lies within `eps`
/// of `q`.
pub fn rewind_statistics(
    inst: &AmplifierInstance,
    inputs: &[StateVector],
    eps: f64,
    q: f64,
    trials: usize,
    max_iter: usize,
    rng: &SimRng,
) -> Result<RewindReport> {
    if inputs.is_empty() || trials == 0 {
        return Err(Error::InvalidParameter(
            "need at least one input and one trial".into(),
        ));
    }
    let spec = spectral_decomposition(inst)?;
    let mut observed_spread: f64 = 0.0;
    for s in inputs {
        for (w, &p) in spec.weights(s)?.iter().zip(&spec.eigenvalues) {
            if *w > SPREAD_WEIGHT_CUTOFF {
                let d = (p - q).abs();
                if d > eps + 1e-10 {
                    return Err(Error::SpreadViolated { eigenvalue: p, q, eps });
                }
                observed_spread = observed_spread.max(d);
            }
        }
    }
    let transcripts = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng.fork(t as u64);
            rewind_until_success(inst, &inputs[t % inputs.len()], max_iter, &mut r)
        })
        .collect::<Result<Vec<_>>>()?;
    let done: Vec<&RewindTranscript> = transcripts.iter().filter(|t| t.halted).collect();
    let iters: Vec<f64> = done.iter().map(|t| t.iterations as f64).collect();
    let fids: Vec<f64> = done.iter().map(|t| t.target_fidelity).collect();
    Ok(RewindReport {
        q,
        eps,
        observed_spread,
        trials,
        halted: done.len(),
        mean_iters: mean(&iters),
        iters_se: std_error(&iters),
        expected_iters_markov: expected_iterations(q),
        expected_iters_inverse: 1.0 / q,
        min_fidelity: fids.iter().copied().fold(f64::INFINITY, f64::min),
        median_fidelity: median(&fids),
        mean_fidelity: mean(&fids),
        transcripts,
    })
}

/// Default ε grid for [`epsilon_sweep`], descending to the exact case.
pub const EPS_GRID: [f64; 6] = [1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 0.0];

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub eps: f64,
    pub report: RewindReport,
}

/// For each ε, eigenvalues `q ± ε` (alternating signs) on `h_qubits`, rewound
/// from Haar superpositions of all eigenvectors. The instance basis, the
/// inputs and the trial streams are shared across ε.
pub fn epsilon_sweep(
    h_qubits: usize,
    q: f64,
    grid: &[f64],
    inputs: usize,
    trials: usize,
    max_iter: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    let dim = 1usize << h_qubits;
    grid.iter()
        .map(|&eps| {
            let eigenvalues: Vec<f64> = (0..dim)
                .map(|j| if j % 2 == 0 { q + eps } else { q - eps })
                .collect();
            let mut build = SimRng::substream(seed, 0);
            let spread = spread_instance(h_qubits, &eigenvalues, &mut build)?;
            let mut draw = SimRng::substream(seed, 1);
            let states = (0..inputs)
                .map(|_| {
                    crate::statevector::haar_state_on(
                        spread.instance.input_layout().clone(),
                        &mut draw,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let report = rewind_statistics(
                &spread.instance,
                &states,
                eps,
                q,
                trials,
                max_iter,
                &SimRng::substream(seed, 2),
            )?;
            Ok(SweepPoint { eps, report })
        })
        .collect()
}
