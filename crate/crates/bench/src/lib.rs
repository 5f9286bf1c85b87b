//! Fixtures shared by the benchmarks.

use orfh_core::{build_hubbard, jordan_wigner, rotate_hubbard, sample_rotation, CoefficientTensors, HubbardParams, PauliSum};

/// Half-filled ring of `n_sites`, rotated with `seed` when given.
pub fn tensors(n_sites: usize, seed: Option<u64>) -> CoefficientTensors {
    let params = HubbardParams::half_filled(n_sites);
    match seed {
        Some(s) => rotate_hubbard(&params, &sample_rotation(2 * n_sites, s, false).unwrap()).unwrap(),
        None => build_hubbard(&params).unwrap(),
    }
}

pub fn pauli_sum(n_sites: usize, seed: Option<u64>) -> PauliSum {
    jordan_wigner(&tensors(n_sites, seed)).unwrap()
}
