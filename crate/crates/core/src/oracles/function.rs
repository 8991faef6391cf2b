use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::statevector::UnitaryOp;

/// Largest domain (in bits) for which a full table is sampled.
pub const MAX_DOMAIN_BITS: usize = 20;

/// A function `{0,1}^in_bits → {0,1}^out_bits` stored as a full table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassicalFunction {
    in_bits: usize,
    out_bits: usize,
    table: Arc<Vec<u64>>,
}

impl ClassicalFunction {
    pub fn new(in_bits: usize, out_bits: usize, table: Vec<u64>) -> Result<Self> {
        if in_bits > MAX_DOMAIN_BITS {
            return Err(Error::DomainTooLarge {
                bits: in_bits,
                max: MAX_DOMAIN_BITS,
            });
        }
        if out_bits == 0 || out_bits > 63 {
            return Err(Error::InvalidParameter(format!(
                "output width {out_bits} outside 1..=63"
            )));
        }
        if table.len() != 1 << in_bits {
            return Err(Error::InvalidParameter(format!(
                "table has {} entries, expected {}",
                table.len(),
                1u64 << in_bits
            )));
        }
        if let Some(v) = table.iter().find(|&&v| v >> out_bits != 0) {
            return Err(Error::InvalidParameter(format!(
                "table entry {v:#x} exceeds {out_bits} bits"
            )));
        }
        Ok(Self {
            in_bits,
            out_bits,
            table: Arc::new(table),
        })
    }

    /// Constant-zero function.
    pub fn zero(in_bits: usize, out_bits: usize) -> Result<Self> {
        Self::new(in_bits, out_bits, vec![0; 1 << in_bits.min(MAX_DOMAIN_BITS)])
    }

    pub fn in_bits(&self) -> usize {
        self.in_bits
    }

    pub fn out_bits(&self) -> usize {
        self.out_bits
    }

    pub fn table(&self) -> &[u64] {
        &self.table
    }

    pub fn eval(&self, x: u64) -> u64 {
        self.table[x as usize]
    }

    /// Copy with `overrides` applied as `(x, value)` pairs.
    pub fn with_values(&self, overrides: &[(u64, u64)]) -> Result<Self> {
        let mut table = self.table.as_ref().clone();
        for &(x, v) in overrides {
            *table.get_mut(x as usize).ok_or_else(|| {
                Error::InvalidParameter(format!("input {x} outside the domain"))
            })? = v;
        }
        Self::new(self.in_bits, self.out_bits, table)
    }

    /// Sorted, deduplicated image.
    pub fn range(&self) -> Vec<u64> {
        let mut r = self.table.as_ref().clone();
        r.sort_unstable();
        r.dedup();
        r
    }

    /// Hex text form: a header line followed by one zero-padded row per input.
    pub fn to_text(&self) -> String {
        let digits = self.out_bits.div_ceil(4);
        let mut s = format!("# in_bits={} out_bits={}\n", self.in_bits, self.out_bits);
        for v in self.table.iter() {
            let _ = writeln!(s, "{v:0digits$x}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidParameter("empty function text".into()))?;
        let mut in_bits = None;
        let mut out_bits = None;
        for tok in header.trim_start_matches('#').split_whitespace() {
            match tok.split_once('=') {
                Some(("in_bits", v)) => in_bits = v.parse::<usize>().ok(),
                Some(("out_bits", v)) => out_bits = v.parse::<usize>().ok(),
                _ => {}
            }
        }
        let (in_bits, out_bits) = in_bits.zip(out_bits).ok_or_else(|| {
            Error::InvalidParameter(format!("malformed function header `{header}`"))
        })?;
        let table = lines
            .map(|l| {
                u64::from_str_radix(l, 16)
                    .map_err(|e| Error::InvalidParameter(format!("bad hex row `{l}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(in_bits, out_bits, table)
    }

    pub(crate) fn shared_table(&self) -> Arc<Vec<u64>> {
        Arc::clone(&self.table)
    }
}

/// Truly random function with i.i.d. uniform table entries.
pub fn sample_random_function(
    in_bits: usize,
    out_bits: usize,
    rng: &mut SimRng,
) -> Result<ClassicalFunction> {
    if in_bits > MAX_DOMAIN_BITS {
        return Err(Error::DomainTooLarge {
            bits: in_bits,
            max: MAX_DOMAIN_BITS,
        });
    }
    let table = (0..1u64 << in_bits)
        .map(|_| rng.random::<u64>() >> (64 - out_bits.clamp(1, 63)))
        .collect();
    ClassicalFunction::new(in_bits, out_bits, table)
}

/// XOR oracle `|x⟩|y⟩ ↦ |x⟩|y ⊕ f(x)⟩` on segments `input` and `output`.
pub fn lift_to_oracle(f: &ClassicalFunction, input: &str, output: &str) -> Result<UnitaryOp> {
    crate::statevector::check_budget(f.in_bits() + f.out_bits())?;
    UnitaryOp::xor_oracle(input, output, f.in_bits(), f.out_bits(), f.shared_table())
}
