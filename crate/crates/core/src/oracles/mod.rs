//! Classical keyed functions, their XOR-oracle lifts, and keyed unitary
//! families.

mod function;
mod keyed;
mod prf;

pub use function::{lift_to_oracle, sample_random_function, ClassicalFunction, MAX_DOMAIN_BITS};
pub use keyed::{controlled_keyed_adjoint, KeyedUnitaryFamily};
pub use prf::{default_out_bits, toy_prf, PrfFamily, MAX_TOY_PRF_BITS};
