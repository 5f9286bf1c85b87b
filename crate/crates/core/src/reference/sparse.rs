use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operator::{PauliString, PauliSum};

/// Largest register handled by the sparse solvers.
pub const SPARSE_WIDTH_LIMIT: usize = 20;

const LEAK_TOLERANCE: f64 = 1e-10;

/// Computational-basis subset on which an operator is represented.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Basis {
    Full { width: usize },
    /// States with exactly `particles` qubits set.
    Particles { width: usize, particles: usize },
}

impl Basis {
    pub fn width(&self) -> usize {
        match *self {
            Basis::Full { width } | Basis::Particles { width, .. } => width,
        }
    }

    pub fn states(&self) -> Vec<u64> {
        match *self {
            Basis::Full { width } => (0..1u64 << width).collect(),
            Basis::Particles { width, particles } => (0..1u64 << width)
                .filter(|b| b.count_ones() as usize == particles)
                .collect(),
        }
    }
}

/// Hermitian operator in compressed-row form over an explicit basis.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    width: usize,
    states: Vec<u64>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
}

impl SparseOperator {
    /// Builds `⟨b'|H|b⟩` for all basis states. Fails if `H` maps amplitude outside
    /// the basis or is not hermitian.
    pub fn from_pauli_sum(sum: &PauliSum, basis: &Basis) -> Result<Self> {
        let width = sum.width();
        if basis.width() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                actual: basis.width(),
            });
        }
        if width > SPARSE_WIDTH_LIMIT {
            return Err(Error::WidthTooLarge {
                width,
                limit: SPARSE_WIDTH_LIMIT,
            });
        }
        if !sum.is_hermitian(1e-10) {
            return Err(Error::NotHermitian(sum.max_imaginary()));
        }
        let states = basis.states();
        let mut index = vec![u32::MAX; 1usize << width];
        for (i, &b) in states.iter().enumerate() {
            index[b as usize] = i as u32;
        }

        // Strings sharing an X mask map each basis state to the same target.
        let mut by_flip: BTreeMap<u64, Vec<(Complex64, PauliString)>> = BTreeMap::new();
        for &(c, p) in sum.terms() {
            by_flip.entry(p.x_mask()).or_default().push((c, p));
        }
        let groups: Vec<(u64, Vec<(Complex64, PauliString)>)> = by_flip.into_iter().collect();
        let identity = sum.identity().re;

        // Column b lists ⟨b'|H|b⟩; hermiticity makes row b the conjugates.
        let rows: Vec<Result<Vec<(u32, Complex64)>>> = states
            .par_iter()
            .map(|&b| {
                let mut entries = Vec::new();
                let mut diag = Complex64::new(identity, 0.0);
                for (flip, terms) in &groups {
                    let mut amp = Complex64::new(0.0, 0.0);
                    for &(c, p) in terms {
                        amp += c * p.apply_to_basis(b).0;
                    }
                    if *flip == 0 {
                        diag += amp;
                        continue;
                    }
                    if amp.norm() < 1e-15 {
                        continue;
                    }
                    let target = b ^ flip;
                    let j = index[target as usize];
                    if j == u32::MAX {
                        if amp.norm() > LEAK_TOLERANCE {
                            return Err(Error::SectorLeak);
                        }
                        continue;
                    }
                    entries.push((j, amp.conj()));
                }
                if diag.norm() > 0.0 {
                    entries.push((index[b as usize], Complex64::new(diag.re, 0.0)));
                }
                entries.sort_by_key(|e| e.0);
                Ok(entries)
            })
            .collect();

        let mut row_ptr = Vec::with_capacity(states.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (j, v) in row? {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            width,
            states,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `out = H · v`.
    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(v.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        out.par_iter_mut().enumerate().for_each(|(r, o)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * v[self.cols[k] as usize];
            }
            *o = acc;
        });
    }

    pub fn expectation(&self, v: &[Complex64]) -> f64 {
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        self.apply(v, &mut out);
        v.iter().zip(&out).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for r in 0..n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k] as usize)] += self.vals[k];
            }
        }
        m
    }

    /// Embeds a basis-local vector into the full `2^width` register.
    pub fn embed(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut full = vec![Complex64::new(0.0, 0.0); 1usize << self.width];
        for (&b, &a) in self.states.iter().zip(v) {
            full[b as usize] = a;
        }
        full
    }
}
