use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::scheme::{dec, enc, prepare_public_key, sample_secret_key, Ciphertext, PublicKey, SchemeParams, SecretKey};
use crate::error::{Error, Result};
use crate::rng::SimRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Phase {
    PreChallenge,
    PostChallenge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OracleQuery {
    pub phase: Phase,
    pub ciphertext: Ciphertext,
    pub answer: Option<u8>,
}

/// Classical decryption oracle. After the challenge is issued it answers ⊥
/// on the challenge ciphertext.
pub struct DecryptionOracle<'a> {
    params: &'a SchemeParams,
    sk: SecretKey,
    challenge: Option<Ciphertext>,
    budget: usize,
    log: Vec<OracleQuery>,
}

impl<'a> DecryptionOracle<'a> {
    fn new(params: &'a SchemeParams, sk: SecretKey, budget: usize) -> Self {
        Self {
            params,
            sk,
            challenge: None,
            budget,
            log: Vec::new(),
        }
    }

    pub fn query(&mut self, ct: Ciphertext) -> Result<Option<u8>> {
        if self.log.len() >= self.budget {
            return Err(Error::QueryBudgetExceeded(self.budget));
        }
        let answer = if self.challenge == Some(ct) {
            None
        } else {
            dec(self.params, &self.sk, &ct)
        };
        let phase = if self.challenge.is_some() {
            Phase::PostChallenge
        } else {
            Phase::PreChallenge
        };
        self.log.push(OracleQuery {
            phase,
            ciphertext: ct,
            answer,
        });
        Ok(answer)
    }

    pub fn queries_made(&self) -> usize {
        self.log.len()
    }

    pub fn params(&self) -> &SchemeParams {
        self.params
    }
}

/// Two-phase adversary `(A_0, A_1)`.
pub trait CcaAdversary {
    /// Receives `n` public-key copies; may keep state for phase 1.
    fn pre_challenge(
        &mut self,
        keys: Vec<PublicKey>,
        oracle: &mut DecryptionOracle<'_>,
        rng: &mut SimRng,
    ) -> Result<()>;

    /// Outputs the guess for `b`.
    fn guess(
        &mut self,
        challenge: Ciphertext,
        oracle: &mut DecryptionOracle<'_>,
        rng: &mut SimRng,
    ) -> Result<u8>;
}

#[derive(Clone, Debug, Serialize)]
pub struct CcaTranscript {
    pub b: u8,
    pub challenge: Ciphertext,
    pub guess: u8,
    pub queries: Vec<OracleQuery>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CcaOutcome {
    pub win: bool,
    pub transcript: CcaTranscript,
}

/// Runs one CCA experiment: fresh keys, `n_copies` public keys to the
/// adversary, uniform `b`, challenge `Enc(pk, b)` from a challenger-held copy.
pub fn cca_game(
    params: &SchemeParams,
    adversary: &mut dyn CcaAdversary,
    n_copies: usize,
    query_budget: usize,
    rng: &mut SimRng,
) -> Result<CcaOutcome> {
    let sk = sample_secret_key(params, rng);
    let keys = (0..n_copies)
        .map(|_| prepare_public_key(params, &sk))
        .collect::<Result<Vec<_>>>()?;
    let mut oracle = DecryptionOracle::new(params, sk, query_budget);
    adversary.pre_challenge(keys, &mut oracle, rng)?;
    let b: u8 = rng.random_range(0..2);
    let mut challenger_copy = prepare_public_key(params, &sk)?;
    let challenge = enc(params, &mut challenger_copy, b, rng)?;
    oracle.challenge = Some(challenge);
    let guess = adversary.guess(challenge, &mut oracle, rng)?;
    Ok(CcaOutcome {
        win: guess == b,
        transcript: CcaTranscript {
            b,
            challenge,
            guess,
            queries: oracle.log,
        },
    })
}

/// Plays `games` independent games (game `t` on `rng.fork(t)`), each with a
/// fresh adversary from `make`. Returns every outcome next to the adversary
/// that produced it.
pub fn cca_experiment<A, F>(
    params: &SchemeParams,
    make: F,
    n_copies: usize,
    query_budget: usize,
    games: usize,
    rng: &SimRng,
) -> Result<Vec<(CcaOutcome, A)>>
where
    A: CcaAdversary + Send,
    F: Fn() -> A + Sync,
{
    (0..games)
        .into_par_iter()
        .map(|t| {
            let mut adv = make();
            let out = cca_game(params, &mut adv, n_copies, query_budget, &mut rng.fork(t as u64))?;
            Ok((out, adv))
        })
        .collect()
}

/// Ignores everything and guesses uniformly.
#[derive(Default)]
pub struct RandomGuess;

impl CcaAdversary for RandomGuess {
    fn pre_challenge(&mut self, _: Vec<PublicKey>, _: &mut DecryptionOracle<'_>, _: &mut SimRng) -> Result<()> {
        Ok(())
    }

    fn guess(&mut self, _: Ciphertext, _: &mut DecryptionOracle<'_>, rng: &mut SimRng) -> Result<u8> {
        Ok(rng.random_range(0..2))
    }
}

/// Encrypts a known bit with a spare public-key copy (before and after the
/// challenge) and records what the oracle answers.
#[derive(Default)]
pub struct Reencryptor {
    spare: Vec<PublicKey>,
    /// `(plaintext, oracle answer)` pairs.
    pub answers: Vec<(u8, Option<u8>)>,
}

impl CcaAdversary for Reencryptor {
    fn pre_challenge(
        &mut self,
        mut keys: Vec<PublicKey>,
        oracle: &mut DecryptionOracle<'_>,
        rng: &mut SimRng,
    ) -> Result<()> {
        if let Some(mut pk) = keys.pop() {
            let ct = enc(oracle.params, &mut pk, 0, rng)?;
            let a = oracle.query(ct)?;
            self.answers.push((0, a));
        }
        self.spare = keys;
        Ok(())
    }

    fn guess(&mut self, _: Ciphertext, oracle: &mut DecryptionOracle<'_>, rng: &mut SimRng) -> Result<u8> {
        if let Some(mut pk) = self.spare.pop() {
            let ct = enc(oracle.params, &mut pk, 1, rng)?;
            let a = oracle.query(ct)?;
            self.answers.push((1, a));
        }
        Ok(rng.random_range(0..2))
    }
}

/// Submits the challenge ciphertext itself to the oracle.
#[derive(Default)]
pub struct ChallengeReplayer {
    pub answer: Option<Option<u8>>,
}

impl CcaAdversary for ChallengeReplayer {
    fn pre_challenge(&mut self, _: Vec<PublicKey>, _: &mut DecryptionOracle<'_>, _: &mut SimRng) -> Result<()> {
        Ok(())
    }

    fn guess(&mut self, ct: Ciphertext, oracle: &mut DecryptionOracle<'_>, rng: &mut SimRng) -> Result<u8> {
        self.answer = Some(oracle.query(ct)?);
        Ok(rng.random_range(0..2))
    }
}

/// Issues `count` arbitrary queries before the challenge.
pub struct QueryFlooder {
    pub count: usize,
}

impl CcaAdversary for QueryFlooder {
    fn pre_challenge(&mut self, _: Vec<PublicKey>, oracle: &mut DecryptionOracle<'_>, _: &mut SimRng) -> Result<()> {
        for i in 0..self.count as u64 {
            oracle.query(Ciphertext { x: 0, y: i })?;
        }
        Ok(())
    }

    fn guess(&mut self, _: Ciphertext, _: &mut DecryptionOracle<'_>, _: &mut SimRng) -> Result<u8> {
        Ok(0)
    }
}
