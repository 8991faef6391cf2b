use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::instance::PrsInstance;
use crate::error::{Error, Result};
use crate::rewinding::{rewind_until_success, RewindTranscript};
use crate::rng::SimRng;
use crate::stats::{binomial_se, wilson95, Interval};
use crate::statevector::{fidelity, haar_state, measure_segment, swap_test, StateVector};

/// Default accept-fraction threshold of the distinguisher.
pub const DEFAULT_TAU: f64 = 0.9;

/// Default rewind cap. Planted-key challenges halt within a handful of
/// iterations; a Haar challenge sits mostly in the kernel of `P` and would
/// otherwise spin until the cap.
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pseudorandom,
    Haar,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackResult {
    pub recovered_key: Option<usize>,
    pub transcript: RewindTranscript,
    /// Fidelity of the success state with `|0^{mn}⟩|sk*⟩|1⟩`, before
    /// `U_invert` is reverted. Only when the planted key is known.
    pub final_state_fidelity_vs_target: Option<f64>,
    pub verdict: Option<Verdict>,
    pub swap_accepts: Option<usize>,
}

/// Rewinds `U_PRS` on `ψ^{⊗m}` until `out = 1`, reverts `U_invert` and
/// measures the key register.
pub fn get_sk(
    inst: &PrsInstance,
    challenge_copies: &StateVector,
    planted: Option<usize>,
    max_iter: usize,
    rng: &mut SimRng,
) -> Result<AttackResult> {
    let transcript = rewind_until_success(inst.amplifier(), challenge_copies, max_iter, rng)?;
    let mut result = AttackResult {
        recovered_key: None,
        final_state_fidelity_vs_target: None,
        verdict: None,
        swap_accepts: None,
        transcript,
    };
    if !result.transcript.halted {
        return Ok(result);
    }
    if let Some(sk) = planted {
        result.final_state_fidelity_vs_target = Some(fidelity(
            &result.transcript.final_state,
            &inst.target_state(sk)?,
        )?);
    }
    let reverted = inst.u_invert()?.adjoint().apply(&result.transcript.final_state)?;
    result.recovered_key = Some(if inst.key_bits() > 0 {
        measure_segment(&reverted, "sk", rng)?.0
    } else {
        0
    });
    Ok(result)
}

/// SWAP-tests `|ψ_key⟩` against each fresh copy; pseudorandom iff the
/// accept count reaches `tau · fresh.len()`.
pub fn distinguish(
    inst: &PrsInstance,
    key: usize,
    fresh: &[StateVector],
    tau: f64,
    rng: &mut SimRng,
) -> Result<(Verdict, usize)> {
    if key >= inst.num_keys() {
        return Err(Error::InvalidParameter(format!("key {key} out of range")));
    }
    let mine = inst.keyed_state(key)?;
    let mut accepts = 0;
    for c in fresh {
        if swap_test(&mine, c, rng)?.accept {
            accepts += 1;
        }
    }
    let verdict = if accepts as f64 >= tau * fresh.len() as f64 {
        Verdict::Pseudorandom
    } else {
        Verdict::Haar
    };
    Ok((verdict, accepts))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    /// `get_sk` then `distinguish`.
    Attack,
    /// Runs `get_sk`, discards the key and guesses.
    Null,
}

#[derive(Clone, Debug, Serialize)]
pub struct ImpossibilityRow {
    pub trial: usize,
    pub prs_arm: bool,
    pub planted: Option<usize>,
    pub recovered: Option<usize>,
    pub iterations: usize,
    pub swap_accepts: Option<usize>,
    pub verdict: Verdict,
    pub correct: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ImpossibilityReport {
    pub pipeline: Pipeline,
    pub trials: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// `accuracy − 1/2`.
    pub advantage: f64,
    /// Wilson 95% interval on accuracy, shifted by `−1/2`.
    pub advantage_ci: Interval,
    pub advantage_se: f64,
    /// PRS-arm trials whose `get_sk` recovered the planted key.
    pub planted_recovery_rate: f64,
    /// Trials where `get_sk` halted within `max_iter`.
    pub halted: usize,
    pub rows: Vec<ImpossibilityRow>,
}

/// Per trial: a fair coin picks a PRS challenge (uniform planted key) or a
/// Haar-random state; `get_sk` consumes `m` copies and `distinguish` the next
/// `m_dist`. A run that exhausts `max_iter` answers Haar.
pub fn prs_impossibility_experiment(
    inst: &PrsInstance,
    trials: usize,
    tau: f64,
    max_iter: usize,
    pipeline: Pipeline,
    rng: &SimRng,
) -> Result<ImpossibilityReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be ≥ 1".into()));
    }
    let rows = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng.fork(t as u64);
            let prs_arm: bool = r.random();
            let (psi, planted) = if prs_arm {
                let k = r.random_range(0..inst.num_keys());
                (inst.keyed_state(k)?, Some(k))
            } else {
                (haar_state(inst.n(), &mut r)?, None)
            };
            let res = get_sk(inst, &inst.challenge_copies(&psi)?, planted, max_iter, &mut r)?;
            let fresh = vec![psi; inst.m_dist()];
            let (verdict, swap_accepts) = match (pipeline, res.recovered_key) {
                (Pipeline::Null, _) => {
                    let v = if r.random() { Verdict::Pseudorandom } else { Verdict::Haar };
                    (v, None)
                }
                (Pipeline::Attack, Some(k)) => {
                    let (v, a) = distinguish(inst, k, &fresh, tau, &mut r)?;
                    (v, Some(a))
                }
                (Pipeline::Attack, None) => (Verdict::Haar, None),
            };
            Ok(ImpossibilityRow {
                trial: t,
                prs_arm,
                planted,
                recovered: res.recovered_key,
                iterations: res.transcript.iterations,
                swap_accepts,
                verdict,
                correct: (verdict == Verdict::Pseudorandom) == prs_arm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let correct = rows.iter().filter(|r| r.correct).count();
    let accuracy = correct as f64 / trials as f64;
    let ci = wilson95(correct, trials);
    let prs_rows: Vec<&ImpossibilityRow> = rows.iter().filter(|r| r.prs_arm).collect();
    let planted_hits = prs_rows.iter().filter(|r| r.recovered == r.planted).count();
    Ok(ImpossibilityReport {
        pipeline,
        trials,
        correct,
        accuracy,
        advantage: accuracy - 0.5,
        advantage_ci: Interval {
            lo: ci.lo - 0.5,
            hi: ci.hi - 0.5,
        },
        advantage_se: binomial_se(accuracy, trials),
        planted_recovery_rate: if prs_rows.is_empty() {
            f64::NAN
        } else {
            planted_hits as f64 / prs_rows.len() as f64
        },
        halted: rows.iter().filter(|r| r.recovered.is_some()).count(),
        rows,
    })
}
