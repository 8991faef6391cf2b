use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::layout::RegisterLayout;
use super::state::{StateVector, C64};
use crate::error::{Error, Result};

/// Unitarity tolerance on ‖U†U − I‖_max.
pub const UNITARY_TOLERANCE: f64 = 1e-10;

/// Largest register (in qubits) that may be materialized as a dense matrix.
pub const MAX_DENSE_QUBITS: usize = 12;

/// A unitary acting on named segments of a register layout.
///
/// Structured forms are applied by index arithmetic; only `Dense` bodies
/// carry an explicit matrix, and that matrix spans only the target segments.
#[derive(Clone, Debug)]
pub struct UnitaryOp {
    body: Body,
}

#[derive(Clone, Debug)]
enum Body {
    Identity,
    Dense {
        targets: Vec<String>,
        matrix: Arc<DMatrix<C64>>,
    },
    Hadamard {
        target: String,
    },
    XorOracle {
        input: String,
        output: String,
        in_bits: usize,
        out_bits: usize,
        table: Arc<Vec<u64>>,
    },
    XorConst {
        target: String,
        value: usize,
    },
    FlipIfZero {
        condition: Vec<String>,
        flag: String,
    },
    Controlled {
        control: String,
        branches: Vec<UnitaryOp>,
    },
    Product(Vec<UnitaryOp>),
}

#[derive(Clone, Copy, Debug)]
struct Constraint {
    mask: usize,
    value: usize,
}

impl Constraint {
    const NONE: Constraint = Constraint { mask: 0, value: 0 };

    fn holds(&self, index: usize) -> bool {
        index & self.mask == self.value
    }

    fn and(self, mask: usize, value: usize) -> Constraint {
        Constraint {
            mask: self.mask | mask,
            value: self.value | value,
        }
    }
}

impl UnitaryOp {
    pub fn identity() -> Self {
        Self {
            body: Body::Identity,
        }
    }

    /// Dense unitary on the concatenation of `targets` (first target most
    /// significant). Rejects matrices that are not unitary within
    /// [`UNITARY_TOLERANCE`].
    pub fn dense<S: Into<String>>(
        targets: impl IntoIterator<Item = S>,
        matrix: DMatrix<C64>,
    ) -> Result<Self> {
        let deviation = unitarity_deviation(&matrix);
        if deviation > UNITARY_TOLERANCE {
            return Err(Error::NonUnitary { deviation });
        }
        Ok(Self {
            body: Body::Dense {
                targets: targets.into_iter().map(Into::into).collect(),
                matrix: Arc::new(matrix),
            },
        })
    }

    /// Hadamard on every qubit of `target`.
    pub fn hadamard(target: &str) -> Self {
        Self {
            body: Body::Hadamard {
                target: target.to_string(),
            },
        }
    }

    /// `|x⟩|y⟩ ↦ |x⟩|y ⊕ table[x]⟩`.
    pub fn xor_oracle(
        input: &str,
        output: &str,
        in_bits: usize,
        out_bits: usize,
        table: Arc<Vec<u64>>,
    ) -> Result<Self> {
        if table.len() != 1usize << in_bits {
            return Err(Error::InvalidParameter(format!(
                "oracle table has {} entries, expected 2^{in_bits}",
                table.len()
            )));
        }
        if out_bits < 64 && table.iter().any(|&v| v >> out_bits != 0) {
            return Err(Error::InvalidParameter(format!(
                "oracle table entry exceeds {out_bits} output bits"
            )));
        }
        Ok(Self {
            body: Body::XorOracle {
                input: input.to_string(),
                output: output.to_string(),
                in_bits,
                out_bits,
                table,
            },
        })
    }

    /// `|x⟩ ↦ |x ⊕ value⟩` on one segment.
    pub fn xor_const(target: &str, value: usize) -> Self {
        Self {
            body: Body::XorConst {
                target: target.to_string(),
                value,
            },
        }
    }

    /// Flips the single-qubit `flag` iff every `condition` segment is all-zero.
    pub fn flip_if_zero<S: Into<String>>(condition: impl IntoIterator<Item = S>, flag: &str) -> Self {
        Self {
            body: Body::FlipIfZero {
                condition: condition.into_iter().map(Into::into).collect(),
                flag: flag.to_string(),
            },
        }
    }

    /// Block-diagonal operator: `branches[v]` acts when `control` holds `v`.
    /// Requires exactly `2^width(control)` branches (checked on application).
    pub fn controlled(control: &str, branches: Vec<UnitaryOp>) -> Self {
        Self {
            body: Body::Controlled {
                control: control.to_string(),
                branches,
            },
        }
    }

    /// Sequential composition; `ops[0]` is applied first.
    pub fn product(ops: Vec<UnitaryOp>) -> Self {
        Self {
            body: Body::Product(ops),
        }
    }

    /// `other ∘ self`.
    pub fn then(self, other: UnitaryOp) -> Self {
        match self.body {
            Body::Product(mut ops) => {
                ops.push(other);
                Self::product(ops)
            }
            body => Self::product(vec![Self { body }, other]),
        }
    }

    pub fn adjoint(&self) -> Self {
        let body = match &self.body {
            Body::Dense { targets, matrix } => Body::Dense {
                targets: targets.clone(),
                matrix: Arc::new(matrix.adjoint()),
            },
            Body::Controlled { control, branches } => Body::Controlled {
                control: control.clone(),
                branches: branches.iter().map(UnitaryOp::adjoint).collect(),
            },
            Body::Product(ops) => Body::Product(ops.iter().rev().map(UnitaryOp::adjoint).collect()),
            // Hadamard layers, XOR permutations and the zero-test flip are involutions.
            other => other.clone(),
        };
        Self { body }
    }

    /// Returns `U·s`.
    pub fn apply(&self, s: &StateVector) -> Result<StateVector> {
        let mut amps = s.amps().to_vec();
        self.apply_constrained(s.layout(), &mut amps, Constraint::NONE)?;
        Ok(StateVector::from_raw(s.layout().clone(), amps))
    }

    /// Applies in place to a raw amplitude buffer laid out as `layout`.
    pub fn apply_to_amps(&self, layout: &RegisterLayout, amps: &mut [C64]) -> Result<()> {
        if amps.len() != layout.dim() {
            return Err(Error::LayoutMismatch(format!(
                "{} amplitudes for {layout}",
                amps.len()
            )));
        }
        self.apply_constrained(layout, amps, Constraint::NONE)
    }

    /// Dense matrix of this operator over the full `layout`.
    pub fn to_dense(&self, layout: &RegisterLayout) -> Result<DMatrix<C64>> {
        if layout.total_qubits() > MAX_DENSE_QUBITS {
            return Err(Error::DimensionBudget {
                dim: layout.dim(),
                max: 1 << MAX_DENSE_QUBITS,
            });
        }
        let dim = layout.dim();
        let mut m = DMatrix::zeros(dim, dim);
        let mut col = vec![C64::new(0.0, 0.0); dim];
        for j in 0..dim {
            col.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
            col[j] = C64::new(1.0, 0.0);
            self.apply_constrained(layout, &mut col, Constraint::NONE)?;
            for (i, a) in col.iter().enumerate() {
                m[(i, j)] = *a;
            }
        }
        Ok(m)
    }

    /// Bit mask of every qubit this operator may act on.
    fn touched_mask(&self, layout: &RegisterLayout) -> Result<usize> {
        Ok(match &self.body {
            Body::Identity => 0,
            Body::Dense { targets, .. } => mask_of(layout, targets)?,
            Body::Hadamard { target } | Body::XorConst { target, .. } => layout.slot(target)?.mask(),
            Body::XorOracle { input, output, .. } => {
                layout.slot(input)?.mask() | layout.slot(output)?.mask()
            }
            Body::FlipIfZero { condition, flag } => {
                mask_of(layout, condition)? | layout.slot(flag)?.mask()
            }
            Body::Controlled { control, branches } => {
                let mut m = layout.slot(control)?.mask();
                for b in branches {
                    m |= b.touched_mask(layout)?;
                }
                m
            }
            Body::Product(ops) => {
                let mut m = 0;
                for o in ops {
                    m |= o.touched_mask(layout)?;
                }
                m
            }
        })
    }

    fn apply_constrained(&self, layout: &RegisterLayout, amps: &mut [C64], c: Constraint) -> Result<()> {
        match &self.body {
            Body::Identity => Ok(()),
            Body::Dense { targets, matrix } => apply_dense(layout, amps, targets, matrix, c),
            Body::Hadamard { target } => {
                let slot = layout.slot(target)?;
                check_disjoint(slot.mask(), c)?;
                for b in 0..slot.width {
                    hadamard_qubit(amps, slot.shift + b, c);
                }
                Ok(())
            }
            Body::XorOracle {
                input,
                output,
                in_bits,
                out_bits,
                table,
            } => {
                let si = layout.slot(input)?;
                let so = layout.slot(output)?;
                if si.width != *in_bits || so.width != *out_bits {
                    return Err(Error::LayoutMismatch(format!(
                        "oracle {in_bits}→{out_bits} bits applied to segments of width {}→{}",
                        si.width, so.width
                    )));
                }
                check_disjoint(so.mask(), c)?;
                for i in 0..amps.len() {
                    if !c.holds(i) {
                        continue;
                    }
                    let j = i ^ so.place(table[si.value(i)] as usize);
                    if i < j {
                        amps.swap(i, j);
                    }
                }
                Ok(())
            }
            Body::XorConst { target, value } => {
                let slot = layout.slot(target)?;
                if value >> slot.width != 0 {
                    return Err(Error::InvalidParameter(format!(
                        "constant {value} exceeds width of `{target}`"
                    )));
                }
                check_disjoint(slot.mask(), c)?;
                let d = slot.place(*value);
                if d != 0 {
                    for i in 0..amps.len() {
                        let j = i ^ d;
                        if i < j && c.holds(i) {
                            amps.swap(i, j);
                        }
                    }
                }
                Ok(())
            }
            Body::FlipIfZero { condition, flag } => {
                let fslot = layout.slot(flag)?;
                if fslot.width != 1 {
                    return Err(Error::InvalidParameter(format!(
                        "flag segment `{flag}` must be a single qubit"
                    )));
                }
                check_disjoint(fslot.mask(), c)?;
                let cmask = mask_of(layout, condition)?;
                if cmask & fslot.mask() != 0 {
                    return Err(Error::InvalidParameter("flag overlaps condition".into()));
                }
                let fbit = fslot.mask();
                for i in 0..amps.len() {
                    if i & fbit == 0 && i & cmask == 0 && c.holds(i) {
                        amps.swap(i, i | fbit);
                    }
                }
                Ok(())
            }
            Body::Controlled { control, branches } => {
                let slot = layout.slot(control)?;
                if branches.len() != 1usize << slot.width {
                    return Err(Error::InvalidParameter(format!(
                        "{} branches for a {}-qubit control",
                        branches.len(),
                        slot.width
                    )));
                }
                for b in branches {
                    if b.touched_mask(layout)? & slot.mask() != 0 {
                        return Err(Error::InvalidParameter(format!(
                            "controlled branch acts on its control `{control}`"
                        )));
                    }
                }
                check_disjoint(slot.mask(), c)?;
                for (v, b) in branches.iter().enumerate() {
                    b.apply_constrained(layout, amps, c.and(slot.mask(), slot.place(v)))?;
                }
                Ok(())
            }
            Body::Product(ops) => {
                for o in ops {
                    o.apply_constrained(layout, amps, c)?;
                }
                Ok(())
            }
        }
    }
}

fn mask_of(layout: &RegisterLayout, names: &[String]) -> Result<usize> {
    let mut m = 0;
    for n in names {
        m |= layout.slot(n)?.mask();
    }
    Ok(m)
}

fn check_disjoint(mask: usize, c: Constraint) -> Result<()> {
    if mask & c.mask != 0 {
        Err(Error::InvalidParameter(
            "operator acts on a qubit it is controlled by".into(),
        ))
    } else {
        Ok(())
    }
}

fn hadamard_qubit(amps: &mut [C64], shift: usize, c: Constraint) {
    let bit = 1usize << shift;
    for i in 0..amps.len() {
        if i & bit == 0 && c.holds(i) {
            let a = amps[i];
            let b = amps[i | bit];
            amps[i] = (a + b) * FRAC_1_SQRT_2;
            amps[i | bit] = (a - b) * FRAC_1_SQRT_2;
        }
    }
}

fn apply_dense(
    layout: &RegisterLayout,
    amps: &mut [C64],
    targets: &[String],
    m: &DMatrix<C64>,
    c: Constraint,
) -> Result<()> {
    let shifts = layout.qubit_shifts(targets)?;
    let k = shifts.len();
    let local = 1usize << k;
    if m.nrows() != local || m.ncols() != local {
        return Err(Error::LayoutMismatch(format!(
            "{}x{} matrix on {k} target qubits",
            m.nrows(),
            m.ncols()
        )));
    }
    let tmask = shifts.iter().fold(0usize, |acc, s| acc | (1 << s));
    check_disjoint(tmask, c)?;
    let offsets: Vec<usize> = (0..local)
        .map(|l| {
            shifts
                .iter()
                .enumerate()
                .filter(|(t, _)| (l >> (k - 1 - t)) & 1 == 1)
                .fold(0usize, |acc, (_, s)| acc | (1 << s))
        })
        .collect();
    let mut buf = vec![C64::new(0.0, 0.0); local];
    for base in 0..amps.len() {
        if base & tmask != 0 || !c.holds(base) {
            continue;
        }
        for (b, off) in buf.iter_mut().zip(&offsets) {
            *b = amps[base | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (col, b) in buf.iter().enumerate() {
                acc += m[(r, col)] * b;
            }
            amps[base | off] = acc;
        }
    }
    Ok(())
}

/// ‖M†M − I‖_max.
pub fn unitarity_deviation(m: &DMatrix<C64>) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let g = m.adjoint() * m;
    let mut dev: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    dev
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn x_gate() -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
    }

    #[test]
    fn hadamard_layer_gives_uniform_superposition() {
        let layout = RegisterLayout::single("x", 3).unwrap();
        let s = UnitaryOp::hadamard("x").apply(&StateVector::zero(layout)).unwrap();
        for a in s.amps() {
            assert!((a - c(8f64.sqrt().recip())).norm() < 1e-15);
        }
    }

    #[test]
    fn identity_is_noop() {
        let layout = RegisterLayout::new([("a", 2), ("b", 1)]).unwrap();
        let s = StateVector::basis(layout, 5).unwrap();
        assert_eq!(UnitaryOp::identity().apply(&s).unwrap(), s);
    }

    #[test]
    fn dense_rejects_non_unitary() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
        assert!(matches!(
            UnitaryOp::dense(["q"], m),
            Err(Error::NonUnitary { .. })
        ));
    }

    #[test]
    fn dense_on_second_segment() {
        let layout = RegisterLayout::new([("a", 1), ("b", 1)]).unwrap();
        let op = UnitaryOp::dense(["b"], x_gate()).unwrap();
        let s = StateVector::basis(layout, 0b10).unwrap();
        assert_eq!(op.apply(&s).unwrap().amp(0b11), c(1.0));
    }

    #[test]
    fn unknown_target_is_layout_error() {
        let layout = RegisterLayout::single("a", 1).unwrap();
        let op = UnitaryOp::hadamard("zz");
        assert!(matches!(
            op.apply(&StateVector::zero(layout)),
            Err(Error::UnknownSegment(_))
        ));
    }

    #[test]
    fn controlled_selects_branch() {
        let layout = RegisterLayout::new([("k", 1), ("t", 1)]).unwrap();
        let op = UnitaryOp::controlled(
            "k",
            vec![UnitaryOp::identity(), UnitaryOp::dense(["t"], x_gate()).unwrap()],
        );
        let s0 = StateVector::basis(layout.clone(), 0b00).unwrap();
        let s1 = StateVector::basis(layout, 0b10).unwrap();
        assert_eq!(op.apply(&s0).unwrap().amp(0b00), c(1.0));
        assert_eq!(op.apply(&s1).unwrap().amp(0b11), c(1.0));
    }

    #[test]
    fn controlled_branch_may_not_touch_control() {
        let layout = RegisterLayout::new([("k", 1), ("t", 1)]).unwrap();
        let op = UnitaryOp::controlled("k", vec![UnitaryOp::hadamard("k"), UnitaryOp::identity()]);
        assert!(op.apply(&StateVector::zero(layout)).is_err());
    }

    #[test]
    fn flip_if_zero_uses_negative_controls() {
        let layout = RegisterLayout::new([("p", 2), ("f", 1)]).unwrap();
        let op = UnitaryOp::flip_if_zero(["p"], "f");
        let z = StateVector::basis(layout.clone(), 0b000).unwrap();
        assert_eq!(op.apply(&z).unwrap().amp(0b001), c(1.0));
        let nz = StateVector::basis(layout, 0b100).unwrap();
        assert_eq!(op.apply(&nz).unwrap().amp(0b100), c(1.0));
    }

    #[test]
    fn dense_materialization_budget() {
        let layout = RegisterLayout::single("a", 13).unwrap();
        assert!(matches!(
            UnitaryOp::identity().to_dense(&layout),
            Err(Error::DimensionBudget { .. })
        ));
    }
}
