use rand::Rng;

use super::function::ClassicalFunction;
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Largest key / input length accepted by [`toy_prf`].
pub const MAX_TOY_PRF_BITS: usize = 6;

/// Keyed family `{0,1}^key_bits × {0,1}^in_bits → {0,1}^out_bits`, held as
/// one table per key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrfFamily {
    key_bits: usize,
    in_bits: usize,
    out_bits: usize,
    functions: Vec<ClassicalFunction>,
}

impl PrfFamily {
    /// Family from explicit per-key functions (`2^key_bits` of them).
    pub fn from_functions(key_bits: usize, functions: Vec<ClassicalFunction>) -> Result<Self> {
        if functions.len() != 1 << key_bits {
            return Err(Error::InvalidParameter(format!(
                "{} functions for {key_bits} key bits",
                functions.len()
            )));
        }
        let in_bits = functions[0].in_bits();
        let out_bits = functions[0].out_bits();
        if functions
            .iter()
            .any(|f| f.in_bits() != in_bits || f.out_bits() != out_bits)
        {
            return Err(Error::InvalidParameter(
                "family members have different shapes".into(),
            ));
        }
        Ok(Self {
            key_bits,
            in_bits,
            out_bits,
            functions,
        })
    }

    pub fn key_bits(&self) -> usize {
        self.key_bits
    }

    pub fn in_bits(&self) -> usize {
        self.in_bits
    }

    pub fn out_bits(&self) -> usize {
        self.out_bits
    }

    pub fn num_keys(&self) -> usize {
        1 << self.key_bits
    }

    pub fn eval(&self, key: u64, x: u64) -> u64 {
        self.functions[key as usize].eval(x)
    }

    pub fn function(&self, key: u64) -> &ClassicalFunction {
        &self.functions[key as usize]
    }
}

/// Toy PRF: the table of key `k` is filled from the ChaCha stream
/// `(master_seed, k)`, so `master_seed` fixes the entire family.
/// Key length and input length are both `lambda`.
pub fn toy_prf(lambda: usize, out_bits: usize, master_seed: u64) -> Result<PrfFamily> {
    if lambda == 0 || lambda > MAX_TOY_PRF_BITS {
        return Err(Error::InvalidParameter(format!(
            "toy PRF supports 1..={MAX_TOY_PRF_BITS} key bits, got {lambda}"
        )));
    }
    if out_bits == 0 || out_bits > 63 {
        return Err(Error::InvalidParameter(format!(
            "output width {out_bits} outside 1..=63"
        )));
    }
    let functions = (0..1u64 << lambda)
        .map(|k| {
            let mut rng = SimRng::substream(master_seed, k);
            let table = (0..1u64 << lambda)
                .map(|_| rng.random::<u64>() >> (64 - out_bits))
                .collect();
            ClassicalFunction::new(lambda, out_bits, table)
        })
        .collect::<Result<Vec<_>>>()?;
    PrfFamily::from_functions(lambda, functions)
}

/// Default PRF output length, three times the security parameter.
pub fn default_out_bits(lambda: usize) -> usize {
    3 * lambda
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_default_length() {
        let f = toy_prf(2, default_out_bits(2), 1).unwrap();
        let g = toy_prf(2, default_out_bits(2), 1).unwrap();
        assert_eq!(f, g);
        assert_eq!(f.out_bits(), 6);
        for k in 0..4 {
            for x in 0..4 {
                assert_eq!(f.eval(k, x), f.eval(k, x));
                assert!(f.eval(k, x) < 64);
            }
        }
    }

    #[test]
    fn distinct_keys_distinct_tables() {
        let f = toy_prf(2, 6, 99).unwrap();
        for a in 0..4 {
            for b in (a + 1)..4 {
                assert_ne!(f.function(a).table(), f.function(b).table());
            }
        }
    }

    #[test]
    fn rejects_large_lambda() {
        assert!(toy_prf(7, 21, 0).is_err());
    }
}
