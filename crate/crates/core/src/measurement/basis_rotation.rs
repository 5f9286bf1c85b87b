//! Low-rank factorization of the two-body tensor into squared one-body operators.
//!
//! The interleaved two-body part is rewritten as
//! `½ Σ h_pqrs E_pq E_rs = ½ Σ_l λ_l O_l² + one-body`, where `E_pq = c†_p c_q`,
//! `O_l = Σ_pq (M_l)_pq E_pq` and `M_l` is hermitian. Each `O_l²` is a quadratic
//! form in number operators after the rotation that diagonalizes `M_l`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{interleaved_order, CoefficientTensors};

/// Factors with `|λ| ≤` this are dropped.
pub const FACTOR_THRESHOLD: f64 = 1e-10;

const COMMUTATOR_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Factor {
    pub eigenvalue: f64,
    /// Hermitian `M_l`.
    pub matrix: DMatrix<Complex64>,
}

#[derive(Debug, Clone)]
pub struct Factorization {
    /// One-body operator including the reordering corrections.
    pub one_body: DMatrix<Complex64>,
    pub factors: Vec<Factor>,
    pub constant: f64,
}

/// Orthonormal basis of hermitian `n × n` matrices as sparse `(p, q, value)` lists.
fn hermitian_basis(n: usize) -> Vec<Vec<(usize, usize, Complex64)>> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::with_capacity(n * n);
    for p in 0..n {
        basis.push(vec![(p, p, Complex64::new(1.0, 0.0))]);
    }
    for p in 0..n {
        for q in p + 1..n {
            basis.push(vec![(p, q, Complex64::new(r, 0.0)), (q, p, Complex64::new(r, 0.0))]);
            basis.push(vec![(p, q, Complex64::new(0.0, r)), (q, p, Complex64::new(0.0, -r))]);
        }
    }
    basis
}

pub fn factorize(tensors: &CoefficientTensors) -> Result<Factorization> {
    if !tensors.is_hermitian(1e-10) {
        return Err(Error::NotHermitian(tensors.hermiticity_defect()));
    }
    let tensors = interleaved_order(tensors);
    let n = tensors.n_spin_orbitals();
    let h = tensors.dense_two_body();
    let idx = |p: usize, q: usize, r: usize, s: usize| ((p * n + q) * n + r) * n + s;

    let mut one_body = tensors.one_body().clone();
    for (&[p, q, r, s], &v) in tensors.two_body() {
        if q == r {
            one_body[(p, s)] += v * 0.25;
        }
        if s == p {
            one_body[(r, q)] -= v * 0.25;
        }
    }

    let basis = hermitian_basis(n);
    let dim = basis.len();
    let mut g = DMatrix::<f64>::zeros(dim, dim);
    let mut worst_imag: f64 = 0.0;
    for a in 0..dim {
        for b in a..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(p, q, ta) in &basis[a] {
                for &(r, s, tb) in &basis[b] {
                    let w = (h[idx(p, q, r, s)] + h[idx(r, s, p, q)]) * 0.5;
                    acc += ta.conj() * w * tb.conj();
                }
            }
            worst_imag = worst_imag.max(acc.im.abs());
            g[(a, b)] = acc.re;
            g[(b, a)] = acc.re;
        }
    }
    if worst_imag > 1e-8 {
        return Err(Error::NotHermitian(worst_imag));
    }

    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .abs()
            .total_cmp(&eig.eigenvalues[a].abs())
            .then(a.cmp(&b))
    });
    let mut factors = Vec::new();
    for l in order {
        let lambda = eig.eigenvalues[l];
        if lambda.abs() <= FACTOR_THRESHOLD {
            continue;
        }
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for (a, entries) in basis.iter().enumerate() {
            let coef = eig.eigenvectors[(a, l)];
            for &(p, q, t) in entries {
                m[(p, q)] += t * coef;
            }
        }
        factors.push(Factor {
            eigenvalue: lambda,
            matrix: m,
        });
    }
    Ok(Factorization {
        one_body,
        factors,
        constant: tensors.constant(),
    })
}

fn commutator_norm(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a * b - b * a).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Greedy partition of factors into sets with pairwise commuting `M_l`, visiting
/// factors in their stored order.
pub fn commuting_sets(factors: &[Factor]) -> Vec<Vec<usize>> {
    let mut sets: Vec<Vec<usize>> = Vec::new();
    for (l, f) in factors.iter().enumerate() {
        let home = sets.iter_mut().find(|set| {
            set.iter()
                .all(|&m| commutator_norm(&f.matrix, &factors[m].matrix) < COMMUTATOR_TOLERANCE)
        });
        match home {
            Some(set) => set.push(l),
            None => sets.push(vec![l]),
        }
    }
    sets
}

/// Unitary whose columns are a joint eigenbasis of the given commuting hermitian
/// matrices, from the eigenvectors of a generic linear combination.
pub fn joint_eigenbasis(matrices: &[&DMatrix<Complex64>]) -> DMatrix<Complex64> {
    let n = matrices[0].nrows();
    let mut combo = DMatrix::<Complex64>::zeros(n, n);
    for (i, m) in matrices.iter().enumerate() {
        // incommensurate weights so that distinct joint eigenvalues stay distinct
        let w = 1.0 + ((i as f64 + 1.0) * std::f64::consts::SQRT_2).fract();
        combo += *m * Complex64::new(w, 0.0);
    }
    let combo = (&combo + combo.adjoint()) * Complex64::new(0.5, 0.0);
    combo.symmetric_eigen().eigenvectors
}

/// Tensors of `½ Σ_{l∈set} λ_l O_l²`.
pub fn factor_tensors(factors: &[Factor], set: &[usize], n: usize) -> CoefficientTensors {
    let mut t = CoefficientTensors::zeros(n);
    for &l in set {
        let f = &factors[l];
        for p in 0..n {
            for q in 0..n {
                let a = f.matrix[(p, q)];
                if a.norm() < 1e-15 {
                    continue;
                }
                for r in 0..n {
                    for s in 0..n {
                        let v = a * f.matrix[(r, s)] * f.eigenvalue;
                        if v.norm() >= 1e-15 {
                            t.add_two_body([p, q, r, s], v);
                        }
                    }
                }
            }
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hubbard, rotate_hubbard, sample_rotation, HubbardParams};
    use crate::operator::jordan_wigner;

    fn reassembled(f: &Factorization, n: usize) -> CoefficientTensors {
        let all: Vec<usize> = (0..f.factors.len()).collect();
        let mut t = factor_tensors(&f.factors, &all, n);
        for p in 0..n {
            for q in 0..n {
                t.add_one_body(p, q, f.one_body[(p, q)]);
            }
        }
        t.set_constant(f.constant);
        t
    }

    #[test]
    fn factorization_reproduces_the_operator() {
        let params = HubbardParams::half_filled(3);
        let t = rotate_hubbard(&params, &sample_rotation(6, 5, false).unwrap()).unwrap();
        let f = factorize(&t).unwrap();
        let a = jordan_wigner(&t).unwrap().to_matrix().unwrap();
        let b = jordan_wigner(&reassembled(&f, 6)).unwrap().to_matrix().unwrap();
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn hubbard_factors_are_on_site_densities() {
        let t = build_hubbard(&HubbardParams::half_filled(4)).unwrap();
        let f = factorize(&t).unwrap();
        // n↑ ± n↓ on every site
        assert_eq!(f.factors.len(), 8);
        for factor in &f.factors {
            assert!((factor.eigenvalue.abs() - 1.0).abs() < 1e-12);
            for p in 0..8 {
                for q in 0..8 {
                    if p != q {
                        assert!(factor.matrix[(p, q)].norm() < 1e-12);
                    }
                }
            }
        }
        assert_eq!(commuting_sets(&f.factors).len(), 1);
    }

    #[test]
    fn joint_basis_diagonalizes_commuting_factors() {
        let params = HubbardParams::half_filled(3);
        let t = rotate_hubbard(&params, &sample_rotation(6, 9, true).unwrap()).unwrap();
        let f = factorize(&t).unwrap();
        let sets = commuting_sets(&f.factors);
        assert_eq!(sets.len(), 1);
        let mats: Vec<&DMatrix<Complex64>> = sets[0].iter().map(|&l| &f.factors[l].matrix).collect();
        let u = joint_eigenbasis(&mats);
        for m in mats {
            let d = u.adjoint() * m * &u;
            for i in 0..6 {
                for j in 0..6 {
                    if i != j {
                        assert!(d[(i, j)].norm() < 1e-9);
                    }
                }
            }
        }
    }
}
