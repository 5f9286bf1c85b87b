//! Fermionic coefficient tensors, Pauli-string algebra and the Jordan-Wigner map.

mod jordan_wigner;
mod pauli;
mod tensors;

pub use jordan_wigner::{interleaved_order, jordan_wigner, normal_order};
pub use pauli::{
    pauli_matrix, Pauli, PauliString, PauliSum, DENSE_WIDTH_LIMIT, MAX_WIDTH,
    TRUNCATION_THRESHOLD,
};
#[allow(unused_imports)]
pub(crate) use pauli::inner;
pub use tensors::{CoefficientTensors, TwoBodyOrdering};
