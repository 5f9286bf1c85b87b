use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Operator ordering of the stored two-body tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoBodyOrdering {
    /// `1/2 Σ h_pqrs c†_p c_q c†_r c_s`
    Interleaved,
    /// `1/2 Σ h_pqrs c†_p c†_q c_r c_s`
    Normal,
}

impl TwoBodyOrdering {
    /// Whether index slot `k` of a two-body key carries a creation operator.
    pub(crate) fn creation_slots(self) -> [bool; 4] {
        match self {
            TwoBodyOrdering::Interleaved => [true, false, true, false],
            TwoBodyOrdering::Normal => [true, true, false, false],
        }
    }
}

/// Second-quantized Hamiltonian over `n` spin-orbitals:
///
/// `H = constant + Σ h_pq c†_p c_q + 1/2 Σ h_pqrs O_pqrs`
///
/// where `O_pqrs` is `c†_p c_q c†_r c_s` or `c†_p c†_q c_r c_s` depending on
/// [`TwoBodyOrdering`]. Spin-orbital `2i` is site `i` spin up, `2i + 1` spin down.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensors {
    n_spin_orbitals: usize,
    one_body: DMatrix<Complex64>,
    two_body: BTreeMap<[usize; 4], Complex64>,
    constant: f64,
    ordering: TwoBodyOrdering,
}

impl CoefficientTensors {
    pub fn zeros(n_spin_orbitals: usize) -> Self {
        Self::zeros_with_ordering(n_spin_orbitals, TwoBodyOrdering::Interleaved)
    }

    pub fn zeros_with_ordering(n_spin_orbitals: usize, ordering: TwoBodyOrdering) -> Self {
        Self {
            n_spin_orbitals,
            one_body: DMatrix::zeros(n_spin_orbitals, n_spin_orbitals),
            two_body: BTreeMap::new(),
            constant: 0.0,
            ordering,
        }
    }

    pub fn from_parts(
        one_body: DMatrix<Complex64>,
        two_body: BTreeMap<[usize; 4], Complex64>,
        constant: f64,
        ordering: TwoBodyOrdering,
    ) -> Result<Self> {
        let n = one_body.nrows();
        if one_body.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: one_body.ncols(),
            });
        }
        if let Some(key) = two_body.keys().find(|k| k.iter().any(|&i| i >= n)) {
            return Err(Error::InvalidParameter(format!(
                "two-body index {key:?} out of range for {n} spin-orbitals"
            )));
        }
        Ok(Self {
            n_spin_orbitals: n,
            one_body,
            two_body,
            constant,
            ordering,
        })
    }

    pub fn n_spin_orbitals(&self) -> usize {
        self.n_spin_orbitals
    }

    pub fn one_body(&self) -> &DMatrix<Complex64> {
        &self.one_body
    }

    pub fn two_body(&self) -> &BTreeMap<[usize; 4], Complex64> {
        &self.two_body
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn ordering(&self) -> TwoBodyOrdering {
        self.ordering
    }

    pub fn set_constant(&mut self, constant: f64) {
        self.constant = constant;
    }

    pub fn add_one_body(&mut self, p: usize, q: usize, value: Complex64) {
        self.one_body[(p, q)] += value;
    }

    /// Accumulates into a two-body entry; entries that cancel exactly are removed.
    pub fn add_two_body(&mut self, key: [usize; 4], value: Complex64) {
        assert!(
            key.iter().all(|&i| i < self.n_spin_orbitals),
            "two-body index {key:?} out of range"
        );
        let entry = self.two_body.entry(key).or_insert(Complex64::new(0.0, 0.0));
        *entry += value;
        if *entry == Complex64::new(0.0, 0.0) {
            self.two_body.remove(&key);
        }
    }

    pub fn two_body_entry(&self, key: [usize; 4]) -> Complex64 {
        self.two_body
            .get(&key)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Largest violation of `h_pq = conj(h_qp)` and of the two-body hermiticity
    /// relation for the stored ordering.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.n_spin_orbitals;
        let mut worst: f64 = 0.0;
        for p in 0..n {
            for q in 0..n {
                worst = worst.max((self.one_body[(p, q)] - self.one_body[(q, p)].conj()).norm());
            }
        }
        for (&key, &value) in &self.two_body {
            let partner = self.two_body_entry(self.adjoint_key(key));
            worst = worst.max((value - partner.conj()).norm());
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Index quadruple of the adjoint operator product.
    pub(crate) fn adjoint_key(&self, [p, q, r, s]: [usize; 4]) -> [usize; 4] {
        match self.ordering {
            // h_pqrs = conj(h_qpsr); exact whenever the pair operators E_pq, E_rs
            // of each factor commute, which holds for Hubbard, rotated Hubbard and
            // symmetric chemists' integrals.
            TwoBodyOrdering::Interleaved => [q, p, s, r],
            TwoBodyOrdering::Normal => [s, r, q, p],
        }
    }

    /// Largest absolute imaginary part among all stored coefficients.
    pub fn max_imaginary(&self) -> f64 {
        let one = self.one_body.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        let two = self.two_body.values().map(|z| z.im.abs()).fold(0.0, f64::max);
        one.max(two)
    }

    pub fn is_real(&self) -> bool {
        self.max_imaginary() == 0.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.one_body *= Complex64::new(factor, 0.0);
        for value in out.two_body.values_mut() {
            *value *= factor;
        }
        out.constant *= factor;
        out
    }

    /// Dense copy of the two-body tensor, row-major over `(p, q, r, s)`.
    pub fn dense_two_body(&self) -> Vec<Complex64> {
        let n = self.n_spin_orbitals;
        let mut dense = vec![Complex64::new(0.0, 0.0); n * n * n * n];
        for (&[p, q, r, s], &v) in &self.two_body {
            dense[((p * n + q) * n + r) * n + s] = v;
        }
        dense
    }
}
