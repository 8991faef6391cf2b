//! Quantum public-key encryption from a PRF: the scheme, its correctness
//! experiment, a CCA game harness, and the one-way-to-hiding checker.

mod cca;
mod o2h;
mod scheme;

pub use cca::{
    cca_experiment, cca_game, CcaAdversary, CcaOutcome, CcaTranscript, ChallengeReplayer, DecryptionOracle,
    OracleQuery, Phase, QueryFlooder, RandomGuess, Reencryptor,
};
pub use o2h::{
    o2h_experiment, run_exact, ClassicalProbe, GroverSearch, HaarAdversary, O2hInstance,
    O2hReport, O2hSetup, O2hTrial, OracleAlgorithm, ParallelParity, PublicKeySimulator,
    UniformQuery, MAX_O2H_DOMAIN_BITS, O2H_SLACK_SE,
};
pub use scheme::{
    collision_fraction, correctness_experiment, dec, enc, gen, prepare_component,
    prepare_public_key, sample_secret_key, Ciphertext, CorrectnessReport, CorrectnessRow,
    PublicKey, SchemeParams, SecretKey,
};
