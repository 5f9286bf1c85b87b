use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use super::pauli::{i_pow, PauliString, PauliSum, MAX_WIDTH};
use super::tensors::{CoefficientTensors, TwoBodyOrdering};
use crate::error::{Error, Result};

/// Operator `coef · X^x Z^z` (X factors to the left of Z factors).
#[derive(Debug, Clone, Copy)]
struct XzTerm {
    x: u64,
    z: u64,
    coef: Complex64,
}

impl XzTerm {
    fn mul(&self, other: &XzTerm) -> XzTerm {
        let sign = if (self.z & other.x).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        XzTerm {
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            coef: self.coef * other.coef * sign,
        }
    }

    /// `X^x Z^z = (-i)^{|x & z|} P` with `P` the labelled Pauli string.
    fn into_labelled(self) -> (Complex64, PauliString) {
        let y = (self.x & self.z).count_ones();
        (self.coef * i_pow(3 * y), PauliString::from_masks(self.x, self.z))
    }
}

type XzOp = Vec<XzTerm>;

fn ladder(mode: usize, creation: bool) -> XzOp {
    let bit = 1u64 << mode;
    let below = bit - 1;
    // c†_j = Z_<j (X_j - iY_j)/2 and c_j = Z_<j (X_j + iY_j)/2, with iY = -XZ.
    let second = if creation { 0.5 } else { -0.5 };
    vec![
        XzTerm {
            x: bit,
            z: below,
            coef: Complex64::new(0.5, 0.0),
        },
        XzTerm {
            x: bit,
            z: below | bit,
            coef: Complex64::new(second, 0.0),
        },
    ]
}

fn product(a: &XzOp, b: &XzOp) -> XzOp {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for s in a {
        for t in b {
            out.push(s.mul(t));
        }
    }
    out
}

/// Accumulator keyed by masks; addition order per key is fixed by the caller.
#[derive(Default)]
struct Accumulator {
    map: HashMap<(u64, u64), Complex64>,
}

impl Accumulator {
    fn add_scaled(&mut self, op: &XzOp, scale: Complex64) {
        for t in op {
            *self
                .map
                .entry((t.x, t.z))
                .or_insert(Complex64::new(0.0, 0.0)) += t.coef * scale;
        }
    }

    fn absorb(&mut self, other: Accumulator, order: &[(u64, u64)]) {
        for key in order {
            if let Some(v) = other.map.get(key) {
                *self.map.entry(*key).or_insert(Complex64::new(0.0, 0.0)) += *v;
            }
        }
    }
}

const CHUNK: usize = 2048;

/// Jordan-Wigner image of a coefficient tensor set on `n_spin_orbitals` qubits,
/// qubit `k` = spin-orbital `k`.
pub fn jordan_wigner(tensors: &CoefficientTensors) -> Result<PauliSum> {
    let n = tensors.n_spin_orbitals();
    if n > MAX_WIDTH {
        return Err(Error::WidthTooLarge {
            width: n,
            limit: MAX_WIDTH,
        });
    }
    let creators: Vec<XzOp> = (0..n).map(|j| ladder(j, true)).collect();
    let annihilators: Vec<XzOp> = (0..n).map(|j| ladder(j, false)).collect();
    let mut hopping: Vec<XzOp> = Vec::with_capacity(n * n);
    for p in 0..n {
        for q in 0..n {
            hopping.push(product(&creators[p], &annihilators[q]));
        }
    }

    let mut acc = Accumulator::default();
    for p in 0..n {
        for q in 0..n {
            let h = tensors.one_body()[(p, q)];
            if h != Complex64::new(0.0, 0.0) {
                acc.add_scaled(&hopping[p * n + q], h);
            }
        }
    }

    let entries: Vec<([usize; 4], Complex64)> =
        tensors.two_body().iter().map(|(k, v)| (*k, *v)).collect();
    let ordering = tensors.ordering();
    let partials: Vec<(Accumulator, Vec<(u64, u64)>)> = entries
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut part = Accumulator::default();
            let mut order = Vec::new();
            for &([p, q, r, s], v) in chunk {
                let op = match ordering {
                    TwoBodyOrdering::Interleaved => {
                        product(&hopping[p * n + q], &hopping[r * n + s])
                    }
                    TwoBodyOrdering::Normal => product(
                        &product(&creators[p], &creators[q]),
                        &product(&annihilators[r], &annihilators[s]),
                    ),
                };
                for t in &op {
                    if !part.map.contains_key(&(t.x, t.z)) {
                        order.push((t.x, t.z));
                    }
                    *part
                        .map
                        .entry((t.x, t.z))
                        .or_insert(Complex64::new(0.0, 0.0)) += t.coef * v * 0.5;
                }
            }
            (part, order)
        })
        .collect();
    for (part, order) in partials {
        acc.absorb(part, &order);
    }

    let mut identity = Complex64::new(tensors.constant(), 0.0);
    let mut merged: HashMap<PauliString, Complex64> = HashMap::with_capacity(acc.map.len());
    for ((x, z), coef) in acc.map {
        let (c, p) = XzTerm { x, z, coef }.into_labelled();
        if p.is_identity() {
            identity += c;
        } else {
            *merged.entry(p).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
    }
    Ok(PauliSum::from_merged(n, identity, merged))
}

/// Rewrites interleaved `c†c c†c` products into normal order `c†c†cc`, moving the
/// anticommutator contributions into the one-body matrix. Already normal-ordered
/// input is returned unchanged.
pub fn normal_order(tensors: &CoefficientTensors) -> CoefficientTensors {
    if tensors.ordering() == TwoBodyOrdering::Normal {
        return tensors.clone();
    }
    let n = tensors.n_spin_orbitals();
    let mut out = CoefficientTensors::zeros_with_ordering(n, TwoBodyOrdering::Normal);
    out.set_constant(tensors.constant());
    for p in 0..n {
        for q in 0..n {
            out.add_one_body(p, q, tensors.one_body()[(p, q)]);
        }
    }
    // c†p cq c†r cs = δqr c†p cs - c†p c†r cq cs
    for (&[p, q, r, s], &v) in tensors.two_body() {
        if q == r {
            out.add_one_body(p, s, v * 0.5);
        }
        out.add_two_body([p, r, q, s], -v);
    }
    out
}

/// Inverse of [`normal_order`]: rewrites `c†p c†q cr cs` as `δqr c†p cs − c†p cr c†q cs`.
pub fn interleaved_order(tensors: &CoefficientTensors) -> CoefficientTensors {
    if tensors.ordering() == TwoBodyOrdering::Interleaved {
        return tensors.clone();
    }
    let n = tensors.n_spin_orbitals();
    let mut out = CoefficientTensors::zeros_with_ordering(n, TwoBodyOrdering::Interleaved);
    out.set_constant(tensors.constant());
    for p in 0..n {
        for q in 0..n {
            out.add_one_body(p, q, tensors.one_body()[(p, q)]);
        }
    }
    for (&[p, q, r, s], &v) in tensors.two_body() {
        if q == r {
            out.add_one_body(p, s, v * 0.5);
        }
        out.add_two_body([p, r, q, s], -v);
    }
    out
}
