use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on the number of simulated qubits.
pub const DEFAULT_MAX_QUBITS: usize = 24;

static MAX_QUBITS: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_QUBITS);

/// Current qubit budget applied to every new [`RegisterLayout`].
pub fn max_qubits() -> usize {
    MAX_QUBITS.load(Ordering::Relaxed)
}

/// Overrides the qubit budget. Intended to be called once at program start.
pub fn set_max_qubits(max: usize) {
    MAX_QUBITS.store(max, Ordering::Relaxed);
}

/// Checks `required` against the current budget.
pub fn check_budget(required: usize) -> Result<()> {
    let max = max_qubits();
    if required > max {
        Err(Error::QubitBudget { required, max })
    } else {
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub width: usize,
}

/// Named, ordered register segments.
///
/// Qubit 0 is the most significant bit of an amplitude index, so the first
/// segment occupies the highest bits and each segment stores its value
/// most-significant-bit first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    segments: Vec<Segment>,
    total_qubits: usize,
}

/// Resolved position of a segment inside an amplitude index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SegmentSlot {
    pub shift: usize,
    pub width: usize,
}

impl SegmentSlot {
    pub fn mask(&self) -> usize {
        ((1usize << self.width) - 1) << self.shift
    }

    pub fn value(&self, index: usize) -> usize {
        (index >> self.shift) & ((1usize << self.width) - 1)
    }

    pub fn place(&self, value: usize) -> usize {
        value << self.shift
    }
}

impl RegisterLayout {
    pub fn new<S: Into<String>>(segments: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let segments: Vec<Segment> = segments
            .into_iter()
            .map(|(name, width)| Segment {
                name: name.into(),
                width,
            })
            .collect();
        for (i, s) in segments.iter().enumerate() {
            if s.width == 0 {
                return Err(Error::InvalidParameter(format!(
                    "segment `{}` has zero width",
                    s.name
                )));
            }
            if segments[..i].iter().any(|t| t.name == s.name) {
                return Err(Error::DuplicateSegment(s.name.clone()));
            }
        }
        let total_qubits = segments.iter().map(|s| s.width).sum();
        check_budget(total_qubits)?;
        Ok(Self {
            segments,
            total_qubits,
        })
    }

    /// Single-segment layout.
    pub fn single(name: &str, width: usize) -> Result<Self> {
        Self::new([(name, width)])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_qubits(&self) -> usize {
        self.total_qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.total_qubits
    }

    pub fn contains(&self, name: &str) -> bool {
        self.segments.iter().any(|s| s.name == name)
    }

    pub fn width(&self, name: &str) -> Result<usize> {
        self.segments
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.width)
            .ok_or_else(|| Error::UnknownSegment(name.to_string()))
    }

    pub fn slot(&self, name: &str) -> Result<SegmentSlot> {
        let mut offset = 0;
        for s in &self.segments {
            if s.name == name {
                return Ok(SegmentSlot {
                    shift: self.total_qubits - offset - s.width,
                    width: s.width,
                });
            }
            offset += s.width;
        }
        Err(Error::UnknownSegment(name.to_string()))
    }

    /// Bit shifts of every qubit of the listed segments, most significant
    /// local qubit first.
    pub fn qubit_shifts(&self, names: &[String]) -> Result<Vec<usize>> {
        let mut shifts = Vec::new();
        for name in names {
            let slot = self.slot(name)?;
            for b in (0..slot.width).rev() {
                let shift = slot.shift + b;
                if shifts.contains(&shift) {
                    return Err(Error::DuplicateSegment(name.clone()));
                }
                shifts.push(shift);
            }
        }
        Ok(shifts)
    }

    /// Concatenation `self ⊗ other`.
    pub fn concat(&self, other: &RegisterLayout) -> Result<Self> {
        let segs = self
            .segments
            .iter()
            .chain(other.segments.iter())
            .map(|s| (s.name.clone(), s.width));
        Self::new(segs)
    }

    /// Composes an amplitude index from per-segment values; unlisted
    /// segments are zero.
    pub fn index_of(&self, values: &[(&str, usize)]) -> Result<usize> {
        let mut idx = 0;
        for (name, v) in values {
            let slot = self.slot(name)?;
            if *v >> slot.width != 0 {
                return Err(Error::InvalidParameter(format!(
                    "value {v} does not fit segment `{name}` of width {}",
                    slot.width
                )));
            }
            idx |= slot.place(*v);
        }
        Ok(idx)
    }
}

impl fmt::Display for RegisterLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .segments
            .iter()
            .map(|s| format!("{}[{}]", s.name, s.width))
            .collect();
        write!(f, "{}", parts.join(" ⊗ "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_segment_is_most_significant() {
        let l = RegisterLayout::new([("a", 2), ("b", 3)]).unwrap();
        assert_eq!(l.total_qubits(), 5);
        assert_eq!(l.slot("a").unwrap().shift, 3);
        assert_eq!(l.slot("b").unwrap().shift, 0);
        assert_eq!(l.index_of(&[("a", 1), ("b", 2)]).unwrap(), 0b01_010);
    }

    #[test]
    fn rejects_duplicates_and_budget() {
        assert!(matches!(
            RegisterLayout::new([("a", 1), ("a", 1)]),
            Err(Error::DuplicateSegment(_))
        ));
        assert!(matches!(
            RegisterLayout::new([("a", 20), ("b", 5)]),
            Err(Error::QubitBudget {
                required: 25,
                max: 24
            })
        ));
    }

    #[test]
    fn qubit_shifts_are_msb_first() {
        let l = RegisterLayout::new([("a", 2), ("b", 1)]).unwrap();
        assert_eq!(
            l.qubit_shifts(&["b".into(), "a".into()]).unwrap(),
            vec![0, 2, 1]
        );
    }
}
