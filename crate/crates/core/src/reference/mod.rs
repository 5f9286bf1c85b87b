//! Exact references: diagonalization of Pauli sums (dense or Lanczos, full register
//! or a fixed particle-number sector) and Bethe-ansatz energies of the Hubbard ring.

mod bethe;
mod lanczos;
mod sparse;
pub mod special;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use bethe::{
    bethe_bulk_energy_density, bethe_half_filled_energy, solve_lieb_wu, BetheSolution,
};
pub use lanczos::{lowest_eigenpairs, lowest_eigenpairs_from, Eigenpair, LanczosConfig};
pub use sparse::{Basis, SparseOperator, SPARSE_WIDTH_LIMIT};

use crate::error::{Error, Result};
use crate::operator::{PauliSum, DENSE_WIDTH_LIMIT};

/// Bases at or below this dimension are diagonalized densely by [`Method::Auto`].
pub const AUTO_DENSE_DIM: usize = 1024;

const DEGENERACY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundStateResult {
    pub energy: f64,
    /// Amplitudes on the full `2^width` register, basis index bit `k` = qubit `k`.
    #[serde(skip)]
    pub statevector: Option<Vec<Complex64>>,
    /// Another returned eigenvalue lies within `1e-8`.
    pub degenerate: bool,
    pub residual: f64,
}

/// `k` lowest eigenpairs of `sum` on the full register.
pub fn exact_ground_state(sum: &PauliSum, k: usize) -> Result<Vec<GroundStateResult>> {
    exact_eigenstates(sum, &Basis::Full { width: sum.width() }, k, Method::Auto)
}

/// `k` lowest eigenpairs restricted to states with `particles` occupied modes.
pub fn sector_ground_state(sum: &PauliSum, particles: usize, k: usize) -> Result<Vec<GroundStateResult>> {
    let basis = Basis::Particles {
        width: sum.width(),
        particles,
    };
    exact_eigenstates(sum, &basis, k, Method::Auto)
}

pub fn exact_eigenstates(
    sum: &PauliSum,
    basis: &Basis,
    k: usize,
    method: Method,
) -> Result<Vec<GroundStateResult>> {
    if method == Method::Dense && sum.width() > DENSE_WIDTH_LIMIT {
        return Err(Error::WidthTooLarge {
            width: sum.width(),
            limit: DENSE_WIDTH_LIMIT,
        });
    }
    let op = SparseOperator::from_pauli_sum(sum, basis)?;
    let dense = match method {
        Method::Dense => true,
        Method::Lanczos => false,
        Method::Auto => op.dim() <= AUTO_DENSE_DIM,
    };
    let pairs = if dense {
        dense_eigenpairs(&op, k)?
    } else {
        lowest_eigenpairs(|v, out| op.apply(v, out), op.dim(), k, &LanczosConfig::default())?
    };
    let values: Vec<f64> = pairs.iter().map(|p| p.value).collect();
    Ok(pairs
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let degenerate = values
                .iter()
                .enumerate()
                .any(|(j, v)| j != i && (v - p.value).abs() < DEGENERACY_TOLERANCE);
            GroundStateResult {
                energy: p.value,
                statevector: Some(op.embed(&p.vector)),
                degenerate,
                residual: p.residual,
            }
        })
        .collect())
}

/// Full sorted spectrum of `sum` on `basis` by dense diagonalization.
pub fn spectrum(sum: &PauliSum, basis: &Basis) -> Result<Vec<f64>> {
    let op = SparseOperator::from_pauli_sum(sum, basis)?;
    let mut values: Vec<f64> = SymmetricEigen::new(op.to_dense()).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Full spectrum assembled from every particle-number sector of a number-conserving
/// operator, sorted ascending.
pub fn spectrum_by_sectors(sum: &PauliSum) -> Result<Vec<f64>> {
    let width = sum.width();
    let mut all = Vec::with_capacity(1 << width);
    for particles in 0..=width {
        all.extend(spectrum(sum, &Basis::Particles { width, particles })?);
    }
    all.sort_by(f64::total_cmp);
    Ok(all)
}

fn dense_eigenpairs(op: &SparseOperator, k: usize) -> Result<Vec<Eigenpair>> {
    if k > op.dim() {
        return Err(Error::InvalidParameter(format!(
            "requested {k} eigenpairs of a {}-dimensional operator",
            op.dim()
        )));
    }
    let eig = SymmetricEigen::new(op.to_dense());
    let mut order: Vec<usize> = (0..op.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut out = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let vector: Vec<Complex64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let mut hv = vec![Complex64::new(0.0, 0.0); vector.len()];
        op.apply(&vector, &mut hv);
        let value = eig.eigenvalues[idx];
        let residual = hv
            .iter()
            .zip(&vector)
            .map(|(h, x)| (h - x * value).norm_sqr())
            .sum::<f64>()
            .sqrt();
        out.push(Eigenpair {
            value,
            vector,
            residual,
        });
    }
    Ok(out)
}
