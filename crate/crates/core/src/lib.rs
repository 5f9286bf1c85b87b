//! Orbital-rotated Fermi-Hubbard (ORFH) benchmark instances and the solvers used to
//! study them: exact diagonalization, Bethe-ansatz references, generalized
//! Hartree-Fock, Pauli measurement grouping, statevector VQE and two-site DMRG.

pub mod analysis;
pub mod dmrg;
pub mod error;
pub mod io;
pub mod model;
pub mod operator;
pub mod measurement;
pub mod reference;
pub mod scf;
pub mod vqe;

pub use error::{Error, Result};
pub use model::{build_hubbard, rotate, rotate_hubbard, sample_rotation, HubbardParams, InstanceDescriptor, OrbitalRotation};
pub use num_complex::Complex64;
pub use operator::{interleaved_order, jordan_wigner, normal_order, pauli_matrix, CoefficientTensors, Pauli, PauliString, PauliSum, TwoBodyOrdering};
