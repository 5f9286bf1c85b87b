//! Test oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use orfh_core::model::GaussianStream;
use orfh_core::{
    build_hubbard, jordan_wigner, rotate_hubbard, sample_rotation, CoefficientTensors, Complex64, HubbardParams,
    PauliSum, TwoBodyOrdering,
};

pub type C = Complex64;

pub fn c(re: f64) -> C {
    C::new(re, 0.0)
}

/// `c_k` on an occupation bitstring: sign from the occupied modes below `k`.
fn annihilate(k: usize, state: u64) -> Option<(f64, u64)> {
    if state & (1 << k) == 0 {
        return None;
    }
    let sign = if (state & ((1u64 << k) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, state ^ (1 << k)))
}

fn create(k: usize, state: u64) -> Option<(f64, u64)> {
    if state & (1 << k) != 0 {
        return None;
    }
    let sign = if (state & ((1u64 << k) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, state | (1 << k)))
}

/// Applies a product of ladder operators, rightmost first; `true` = creation.
fn apply_word(word: &[(bool, usize)], state: u64) -> Option<(f64, u64)> {
    let mut sign = 1.0;
    let mut s = state;
    for &(dagger, k) in word.iter().rev() {
        let (f, next) = if dagger { create(k, s)? } else { annihilate(k, s)? };
        sign *= f;
        s = next;
    }
    Some((sign, s))
}

/// Dense Fock-space matrix built from second-quantized operators directly,
/// independent of the qubit mapping.
pub fn fock_matrix(t: &CoefficientTensors) -> DMatrix<C> {
    let n = t.n_spin_orbitals();
    let dim = 1usize << n;
    let mut h = DMatrix::<C>::zeros(dim, dim);
    for b in 0..dim as u64 {
        h[(b as usize, b as usize)] += c(t.constant());
        for p in 0..n {
            for q in 0..n {
                let v = t.one_body()[(p, q)];
                if v.norm() == 0.0 {
                    continue;
                }
                if let Some((f, out)) = apply_word(&[(true, p), (false, q)], b) {
                    h[(out as usize, b as usize)] += v * f;
                }
            }
        }
        for (&[p, q, r, s], &v) in t.two_body() {
            let word = match t.ordering() {
                TwoBodyOrdering::Interleaved => [(true, p), (false, q), (true, r), (false, s)],
                TwoBodyOrdering::Normal => [(true, p), (true, q), (false, r), (false, s)],
            };
            if let Some((f, out)) = apply_word(&word, b) {
                h[(out as usize, b as usize)] += v * (0.5 * f);
            }
        }
    }
    h
}

/// Number operator in the same basis.
pub fn number_matrix(n_spin_orbitals: usize) -> DMatrix<C> {
    let dim = 1usize << n_spin_orbitals;
    DMatrix::from_fn(dim, dim, |i, j| if i == j { c((i as u64).count_ones() as f64) } else { c(0.0) })
}

/// `S_z = ½ Σ_i (n_2i − n_2i+1)`.
pub fn sz_matrix(n_spin_orbitals: usize) -> DMatrix<C> {
    let dim = 1usize << n_spin_orbitals;
    let up: u64 = (0..n_spin_orbitals).step_by(2).map(|k| 1u64 << k).sum();
    DMatrix::from_fn(dim, dim, |i, j| {
        if i != j {
            return c(0.0);
        }
        let b = i as u64;
        c(0.5 * ((b & up).count_ones() as f64 - (b & !up).count_ones() as f64))
    })
}

pub fn sorted_eigenvalues(m: &DMatrix<C>) -> Vec<f64> {
    let mut e: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

pub fn max_abs(m: &DMatrix<C>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn fh(n_sites: usize) -> CoefficientTensors {
    build_hubbard(&HubbardParams::half_filled(n_sites)).unwrap()
}

pub fn orfh(n_sites: usize, seed: u64) -> CoefficientTensors {
    let p = HubbardParams::half_filled(n_sites);
    rotate_hubbard(&p, &sample_rotation(2 * n_sites, seed, false).unwrap()).unwrap()
}

pub fn fh_sum(n_sites: usize) -> PauliSum {
    jordan_wigner(&fh(n_sites)).unwrap()
}

pub fn orfh_sum(n_sites: usize, seed: u64) -> PauliSum {
    jordan_wigner(&orfh(n_sites, seed)).unwrap()
}

/// Hermitian tensors with seeded Gaussian entries, `density` = fraction of the
/// two-body index quadruples populated (before hermitian completion).
pub fn random_hermitian_tensors(n: usize, seed: u64, density: f64, ordering: TwoBodyOrdering) -> CoefficientTensors {
    let mut g = GaussianStream::new(seed);
    let mut t = CoefficientTensors::zeros_with_ordering(n, ordering);
    t.set_constant(g.standard_normal());
    for p in 0..n {
        t.add_one_body(p, p, c(g.standard_normal()));
        for q in p + 1..n {
            let z = C::new(g.standard_normal(), g.standard_normal());
            t.add_one_body(p, q, z);
            t.add_one_body(q, p, z.conj());
        }
    }
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    if g.uniform() >= density {
                        continue;
                    }
                    let z = C::new(g.standard_normal(), g.standard_normal()) * 0.5;
                    // both orderings: the adjoint of a†b c†d-type words reverses indices
                    let partner = [s, r, q, p];
                    t.add_two_body([p, q, r, s], z);
                    t.add_two_body(partner, z.conj());
                }
            }
        }
    }
    t
}

/// Sorted eigenvalues of a number-conserving matrix, diagonalized block by block
/// over fixed-popcount subspaces.
pub fn sector_eigenvalues(m: &DMatrix<C>) -> Vec<f64> {
    let dim = m.nrows();
    let width = dim.trailing_zeros();
    let mut all = Vec::with_capacity(dim);
    for k in 0..=width {
        let states: Vec<usize> = (0..dim).filter(|b| b.count_ones() == k).collect();
        let block = DMatrix::from_fn(states.len(), states.len(), |i, j| m[(states[i], states[j])]);
        all.extend(block.symmetric_eigen().eigenvalues.iter().copied());
    }
    all.sort_by(f64::total_cmp);
    all
}

/// Random hermitian sum of `terms` real-weighted strings on `width` qubits.
pub fn random_pauli_sum(width: usize, terms: usize, seed: u64) -> PauliSum {
    let mut g = GaussianStream::new(seed);
    let mask = (1u64 << width) as f64;
    let strings = (0..terms).map(|_| {
        let x = (g.uniform() * mask) as u64;
        let z = (g.uniform() * mask) as u64;
        (c(g.standard_normal()), orfh_core::PauliString::from_masks(x, z))
    });
    let list: Vec<_> = strings.collect();
    PauliSum::from_terms(width, c(g.standard_normal()), list).unwrap()
}

/// Normalized Gaussian state on `width` qubits.
pub fn random_state(width: usize, seed: u64) -> Vec<C> {
    let mut g = GaussianStream::new(seed);
    let mut v: Vec<C> = (0..1usize << width).map(|_| C::new(g.standard_normal(), g.standard_normal())).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

/// Variance of the outcome distribution when `m` is measured in its eigenbasis.
pub fn outcome_variance(m: &DMatrix<C>, state: &[C]) -> f64 {
    let eig = m.clone().symmetric_eigen();
    let psi = nalgebra::DVector::from_column_slice(state);
    let (mut mean, mut second) = (0.0, 0.0);
    for k in 0..m.nrows() {
        let p = (eig.eigenvectors.column(k).adjoint() * &psi)[(0, 0)].norm_sqr();
        let lambda = eig.eigenvalues[k];
        mean += p * lambda;
        second += p * lambda * lambda;
    }
    second - mean * mean
}

/// Shots the optimally allocated estimator needs to reach standard error `eps`,
/// found by minimizing `Σ σ_G² / m_G` over allocations `m_G = M w_G` by brute
/// force over the simplex direction given by `σ_G` perturbations.
pub fn brute_force_shots(variances: &[f64], eps: f64) -> f64 {
    // for fixed weights the estimator variance is (Σ σ_G² / w_G) / M
    let cost = |w: &[f64]| variances.iter().zip(w).map(|(v, w)| if *v == 0.0 { 0.0 } else { v / w }).sum::<f64>();
    let sigma: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
    let total: f64 = sigma.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let best: Vec<f64> = sigma.iter().map(|s| s / total).collect();
    let mut best_cost = cost(&best);
    // no perturbed allocation may beat the proportional one
    let mut g = GaussianStream::new(99);
    for _ in 0..200 {
        let mut w: Vec<f64> = best.iter().map(|b| b * (1.0 + 0.2 * g.standard_normal()).abs().max(1e-6)).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let trial = cost(&w);
        assert!(trial >= best_cost * (1.0 - 1e-12));
        best_cost = best_cost.min(trial);
    }
    best_cost / (eps * eps)
}
