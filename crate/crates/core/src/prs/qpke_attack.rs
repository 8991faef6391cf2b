use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::attack::get_sk;
use super::instance::{success_prob_exact, PrsInstance};
use crate::error::{Error, Result};
use crate::oracles::KeyedUnitaryFamily;
use crate::qpke::{enc, prepare_public_key, sample_secret_key, SchemeParams};
use crate::rng::SimRng;
use crate::stats::{wilson95, Interval};

#[derive(Clone, Debug, Serialize)]
pub struct QpkeAttackRow {
    pub trial: usize,
    pub k0: u64,
    pub k1: u64,
    pub recovered: Option<u64>,
    pub iterations: usize,
    pub b: u8,
    pub guess: u8,
    pub p_exact: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QpkeAttackReport {
    pub lambda: usize,
    pub out_bits: usize,
    pub m: usize,
    pub trials: usize,
    /// `k̃0 = k0`.
    pub key_recovery_rate: f64,
    /// `PRF_{k̃0} = PRF_{k0}` as tables.
    pub functional_recovery_rate: f64,
    pub decrypt_success_rate: f64,
    pub decrypt_ci: Interval,
    /// Decryption success rate if `k̃0 = k0` always, by table scan over
    /// `(k0, k1, x)`.
    pub decrypt_success_ideal: f64,
    /// Exact success-operator expectation on `|pk_0⟩^{⊗m}`, per key.
    pub p_exact_by_key: Vec<f64>,
    /// Mean of `p_exact` over the trials' `k0`.
    pub p_exact_mean: f64,
    /// `1/2^m`.
    pub q: f64,
    pub rows: Vec<QpkeAttackRow>,
}

/// Treats `x ↦ |pk_k⟩` as a keyed state family, runs `get_sk` on
/// `|pk_0⟩^{⊗m}` to obtain `k̃0`, then answers a fresh challenge
/// `Enc(pk, b)` with `0` iff `PRF_{k̃0}(x) = y`. A run that exhausts
/// `max_iter` guesses uniformly.
pub fn qpke_attack(
    params: &SchemeParams,
    m: usize,
    trials: usize,
    max_iter: usize,
    rng: &SimRng,
) -> Result<QpkeAttackReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be ≥ 1".into()));
    }
    let family = Arc::new(KeyedUnitaryFamily::prf_states(params.prf())?);
    let inst = PrsInstance::new(family, m, 0)?;
    let p_exact_by_key = (0..inst.num_keys())
        .map(|k| success_prob_exact(&inst, &inst.keyed_state(k)?))
        .collect::<Result<Vec<_>>>()?;
    let rows = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng.fork(t as u64);
            let sk = sample_secret_key(params, &mut r);
            let pk0 = inst.keyed_state(sk.k0 as usize)?;
            let res = get_sk(&inst, &inst.challenge_copies(&pk0)?, Some(sk.k0 as usize), max_iter, &mut r)?;
            let recovered = res.recovered_key.map(|k| k as u64);
            let b: u8 = r.random_range(0..2);
            let mut pk = prepare_public_key(params, &sk)?;
            let ct = enc(params, &mut pk, b, &mut r)?;
            let guess = match recovered {
                Some(k) if params.prf().eval(k, ct.x) == ct.y => 0,
                Some(_) => 1,
                None => r.random_range(0..2),
            };
            Ok(QpkeAttackRow {
                trial: t,
                k0: sk.k0,
                k1: sk.k1,
                recovered,
                iterations: res.transcript.iterations,
                b,
                guess,
                p_exact: p_exact_by_key[sk.k0 as usize],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = trials as f64;
    let hits = rows.iter().filter(|r| r.recovered == Some(r.k0)).count();
    let functional = rows
        .iter()
        .filter(|r| {
            r.recovered.is_some_and(|k| {
                params.prf().function(k).table() == params.prf().function(r.k0).table()
            })
        })
        .count();
    let wins = rows.iter().filter(|r| r.guess == r.b).count();
    Ok(QpkeAttackReport {
        lambda: params.lambda(),
        out_bits: params.out_bits(),
        m,
        trials,
        key_recovery_rate: hits as f64 / n,
        functional_recovery_rate: functional as f64 / n,
        decrypt_success_rate: wins as f64 / n,
        decrypt_ci: wilson95(wins, trials),
        decrypt_success_ideal: ideal_decrypt_rate(params),
        p_exact_mean: rows.iter().map(|r| r.p_exact).sum::<f64>() / n,
        p_exact_by_key,
        q: 0.5f64.powi(m as i32),
        rows,
    })
}

/// `1/2 + 1/2 · Pr[PRF_{k0}(x) ≠ PRF_{k1}(x)]`: a `b = 0` challenge always
/// decrypts, a `b = 1` challenge only when the two tables differ at `x`.
pub fn ideal_decrypt_rate(params: &SchemeParams) -> f64 {
    let prf = params.prf();
    let keys = prf.num_keys() as u64;
    let mut differ = 0usize;
    let mut total = 0usize;
    for k0 in 0..keys {
        for k1 in 0..keys {
            let (t0, t1) = (prf.function(k0).table(), prf.function(k1).table());
            differ += t0.iter().zip(t1).filter(|(a, b)| a != b).count();
            total += t0.len();
        }
    }
    0.5 + 0.5 * differ as f64 / total as f64
}
