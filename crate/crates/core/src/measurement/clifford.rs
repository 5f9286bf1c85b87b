//! Clifford circuits that map a commuting set of Pauli strings to Z strings.

use serde::{Deserialize, Serialize};

use crate::operator::PauliString;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum CliffordGate {
    H { qubit: usize },
    S { qubit: usize },
    Cnot { control: usize, target: usize },
    Cz { a: usize, b: usize },
}

/// A string under conjugation, `sign · P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignedString {
    pub negative: bool,
    pub string: PauliString,
}

impl SignedString {
    pub fn new(string: PauliString) -> Self {
        Self {
            negative: false,
            string,
        }
    }

    /// `G P G†` using the stabilizer-tableau update rules.
    pub fn conjugate(self, gate: CliffordGate) -> Self {
        let (mut x, mut z) = (self.string.x_mask(), self.string.z_mask());
        let mut neg = self.negative;
        let bit = |m: u64, k: usize| (m >> k) & 1 == 1;
        match gate {
            CliffordGate::H { qubit } => {
                let (xa, za) = (bit(x, qubit), bit(z, qubit));
                neg ^= xa && za;
                x = (x & !(1 << qubit)) | ((za as u64) << qubit);
                z = (z & !(1 << qubit)) | ((xa as u64) << qubit);
            }
            CliffordGate::S { qubit } => {
                let (xa, za) = (bit(x, qubit), bit(z, qubit));
                neg ^= xa && za;
                z ^= (xa as u64) << qubit;
            }
            CliffordGate::Cnot { control, target } => {
                let (xc, zc) = (bit(x, control), bit(z, control));
                let (xt, zt) = (bit(x, target), bit(z, target));
                neg ^= xc && zt && (xt == zc);
                x ^= (xc as u64) << target;
                z ^= (zt as u64) << control;
            }
            CliffordGate::Cz { a, b } => {
                let h = CliffordGate::H { qubit: b };
                let cnot = CliffordGate::Cnot {
                    control: a,
                    target: b,
                };
                let s = SignedString {
                    negative: neg,
                    string: PauliString::from_masks(x, z),
                };
                return s.conjugate(h).conjugate(cnot).conjugate(h);
            }
        }
        SignedString {
            negative: neg,
            string: PauliString::from_masks(x, z),
        }
    }

    pub fn conjugate_all(self, gates: &[CliffordGate]) -> Self {
        gates.iter().fold(self, |s, &g| s.conjugate(g))
    }
}

/// Gates `G_1 … G_m` (applied in order) such that every string of the mutually
/// commuting `strings` becomes `± Z…Z` after conjugation.
pub fn diagonalizing_circuit(strings: &[PauliString]) -> Vec<CliffordGate> {
    let mut gates = Vec::new();
    for &p in strings {
        let g = SignedString::new(p).conjugate_all(&gates);
        let x = g.string.x_mask();
        if x == 0 {
            continue;
        }
        let pivot = x.trailing_zeros() as usize;
        let mut step = Vec::new();
        if (g.string.z_mask() >> pivot) & 1 == 1 {
            step.push(CliffordGate::S { qubit: pivot });
        }
        for j in 0..64 {
            if j != pivot && (x >> j) & 1 == 1 {
                step.push(CliffordGate::Cnot {
                    control: pivot,
                    target: j,
                });
            }
        }
        let reduced = g.conjugate_all(&step);
        let z = reduced.string.z_mask() & !(1 << pivot);
        for j in 0..64 {
            if (z >> j) & 1 == 1 {
                step.push(CliffordGate::Cz { a: pivot, b: j });
            }
        }
        step.push(CliffordGate::H { qubit: pivot });
        gates.extend(step);
    }
    gates
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    use crate::operator::PauliSum;

    fn matrix_of(p: PauliString, width: usize) -> DMatrix<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        PauliSum::from_terms(width, Complex64::new(0.0, 0.0), [(one, p)])
            .unwrap()
            .to_matrix()
            .unwrap()
    }

    fn gate_matrix(g: CliffordGate, width: usize) -> DMatrix<Complex64> {
        let dim = 1usize << width;
        let mut m = DMatrix::zeros(dim, dim);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for b in 0..dim {
            match g {
                CliffordGate::H { qubit } => {
                    let high = if (b >> qubit) & 1 == 1 { -r } else { r };
                    m[(b & !(1 << qubit), b)] += Complex64::new(r, 0.0);
                    m[(b | (1 << qubit), b)] += Complex64::new(high, 0.0);
                }
                CliffordGate::S { qubit } => {
                    m[(b, b)] = if (b >> qubit) & 1 == 1 { Complex64::new(0.0, 1.0) } else { Complex64::new(1.0, 0.0) };
                }
                CliffordGate::Cnot { control, target } => {
                    let out = if (b >> control) & 1 == 1 { b ^ (1 << target) } else { b };
                    m[(out, b)] = Complex64::new(1.0, 0.0);
                }
                CliffordGate::Cz { a, b: c } => {
                    let both = (b >> a) & 1 == 1 && (b >> c) & 1 == 1;
                    m[(b, b)] = Complex64::new(if both { -1.0 } else { 1.0 }, 0.0);
                }
            }
        }
        m
    }

    #[test]
    fn single_gate_rules_match_matrices() {
        let width = 2;
        let gates = [
            CliffordGate::H { qubit: 0 },
            CliffordGate::S { qubit: 1 },
            CliffordGate::Cnot { control: 0, target: 1 },
            CliffordGate::Cnot { control: 1, target: 0 },
            CliffordGate::Cz { a: 0, b: 1 },
        ];
        for x in 0..4u64 {
            for z in 0..4u64 {
                let p = PauliString::from_masks(x, z);
                for &g in &gates {
                    let u = gate_matrix(g, width);
                    let lhs = &u * matrix_of(p, width) * u.adjoint();
                    let out = SignedString::new(p).conjugate(g);
                    let sign = if out.negative { -1.0 } else { 1.0 };
                    let rhs = matrix_of(out.string, width) * Complex64::new(sign, 0.0);
                    assert!((lhs - rhs).norm() < 1e-12, "{g:?} on {p}");
                }
            }
        }
    }

    #[test]
    fn diagonalizes_commuting_set() {
        let strings: Vec<PauliString> = ["X0 X1", "Y0 Y1", "Z0 Z1", "X2 Z3", "Z2 X3"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let gates = diagonalizing_circuit(&strings);
        for &p in &strings {
            let out = SignedString::new(p).conjugate_all(&gates);
            assert_eq!(out.string.x_mask(), 0, "{p}");
        }
    }
}
