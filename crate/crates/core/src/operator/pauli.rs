use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Pauli terms whose merged coefficient magnitude falls below this are dropped.
pub const TRUNCATION_THRESHOLD: f64 = 1e-12;

/// Largest width for which dense matrices are built.
pub const DENSE_WIDTH_LIMIT: usize = 14;

/// Largest supported register width.
pub const MAX_WIDTH: usize = 64;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    fn label(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// `i^k` for `k` taken mod 4.
pub(crate) fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => I,
        2 => Complex64::new(-1.0, 0.0),
        _ => -I,
    }
}

/// Tensor product of single-qubit Paulis, identity on absent qubits.
///
/// Stored as bit masks: qubit `k` carries X if only bit `k` of `x` is set, Z if only
/// bit `k` of `z` is set, and Y if both are set. Basis state index bit `k` is the
/// occupation of qubit `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PauliString {
    x: u64,
    z: u64,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    pub fn from_masks(x: u64, z: u64) -> Self {
        Self { x, z }
    }

    pub fn from_factors(factors: &[(usize, Pauli)]) -> Result<Self> {
        let mut out = Self::IDENTITY;
        for &(q, p) in factors {
            if q >= MAX_WIDTH {
                return Err(Error::InvalidParameter(format!("qubit index {q} out of range")));
            }
            let bit = 1u64 << q;
            if (out.x | out.z) & bit != 0 {
                return Err(Error::InvalidParameter(format!("qubit {q} listed twice")));
            }
            match p {
                Pauli::X => out.x |= bit,
                Pauli::Z => out.z |= bit,
                Pauli::Y => {
                    out.x |= bit;
                    out.z |= bit;
                }
            }
        }
        Ok(out)
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn is_identity(&self) -> bool {
        self.support() == 0
    }

    pub fn weight(&self) -> u32 {
        self.support().count_ones()
    }

    /// Highest qubit index touched plus one (0 for the identity).
    pub fn min_width(&self) -> usize {
        64 - self.support().leading_zeros() as usize
    }

    pub fn get(&self, qubit: usize) -> Option<Pauli> {
        let bit = 1u64 << qubit;
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => None,
            (true, false) => Some(Pauli::X),
            (false, true) => Some(Pauli::Z),
            (true, true) => Some(Pauli::Y),
        }
    }

    pub fn factors(&self) -> Vec<(usize, Pauli)> {
        (0..self.min_width())
            .filter_map(|q| self.get(q).map(|p| (q, p)))
            .collect()
    }

    pub(crate) fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Operator-level commutation (even number of anticommuting positions).
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Every shared qubit carries the same Pauli.
    pub fn qubitwise_commutes_with(&self, other: &PauliString) -> bool {
        let shared = self.support() & other.support();
        (self.x ^ other.x) & shared == 0 && (self.z ^ other.z) & shared == 0
    }

    /// Product `self · other = phase · result`.
    pub fn multiply(&self, other: &PauliString) -> (Complex64, PauliString) {
        let out = PauliString {
            x: self.x ^ other.x,
            z: self.z ^ other.z,
        };
        // P = i^{y} X^x Z^z and Z^z1 X^x2 = (-1)^{|z1 & x2|} X^x2 Z^z1.
        let k = self.y_count() + other.y_count() + 2 * (self.z & other.x).count_ones() + 4
            - out.y_count() % 4;
        (i_pow(k), out)
    }

    /// `P |b⟩ = phase |b'⟩`.
    #[inline]
    pub fn apply_to_basis(&self, basis: u64) -> (Complex64, u64) {
        let sign = (self.z & basis).count_ones() % 2;
        (i_pow(self.y_count() + 2 * sign), basis ^ self.x)
    }

    fn code(&self, qubit: usize) -> u8 {
        match self.get(qubit) {
            None => 0,
            Some(Pauli::X) => 1,
            Some(Pauli::Y) => 2,
            Some(Pauli::Z) => 3,
        }
    }
}

/// Canonical order: lexicographic over per-qubit labels `I < X < Y < Z`, qubit 0 first.
impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        let diff = (self.x ^ other.x) | (self.z ^ other.z);
        if diff == 0 {
            return Ordering::Equal;
        }
        let q = diff.trailing_zeros() as usize;
        self.code(q).cmp(&other.code(q))
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "I");
        }
        let parts: Vec<String> = self
            .factors()
            .into_iter()
            .map(|(q, p)| format!("{}{}", p.label(), q))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut factors = Vec::new();
        for token in s.split_whitespace() {
            if token == "I" {
                continue;
            }
            let mut chars = token.chars();
            let pauli = match chars.next() {
                Some('X') => Pauli::X,
                Some('Y') => Pauli::Y,
                Some('Z') => Pauli::Z,
                _ => {
                    return Err(Error::Parse {
                        line: 0,
                        message: format!("bad Pauli factor '{token}'"),
                    })
                }
            };
            let qubit: usize = chars.as_str().parse().map_err(|_| Error::Parse {
                line: 0,
                message: format!("bad qubit index in '{token}'"),
            })?;
            factors.push((qubit, pauli));
        }
        PauliString::from_factors(&factors)
    }
}

/// Weighted sum of Pauli strings on a fixed register.
///
/// Terms are merged, truncated below [`TRUNCATION_THRESHOLD`] and kept in canonical
/// string order; the identity component is held separately.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    width: usize,
    identity: Complex64,
    terms: Vec<(Complex64, PauliString)>,
}

impl PauliSum {
    pub fn zero(width: usize) -> Self {
        Self {
            width,
            identity: Complex64::new(0.0, 0.0),
            terms: Vec::new(),
        }
    }

    /// Merges duplicate strings; identity strings go to the offset.
    pub fn from_terms<I>(width: usize, identity: Complex64, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Complex64, PauliString)>,
    {
        if width > MAX_WIDTH {
            return Err(Error::WidthTooLarge {
                width,
                limit: MAX_WIDTH,
            });
        }
        let mut identity = identity;
        let mut merged: HashMap<PauliString, Complex64> = HashMap::new();
        for (c, p) in terms {
            if p.min_width() > width {
                return Err(Error::InvalidParameter(format!(
                    "string '{p}' does not fit in {width} qubits"
                )));
            }
            if p.is_identity() {
                identity += c;
            } else {
                *merged.entry(p).or_insert(Complex64::new(0.0, 0.0)) += c;
            }
        }
        Ok(Self::from_merged(width, identity, merged))
    }

    pub(crate) fn from_merged(
        width: usize,
        identity: Complex64,
        merged: HashMap<PauliString, Complex64>,
    ) -> Self {
        let mut terms: Vec<(Complex64, PauliString)> = merged
            .into_iter()
            .filter(|(_, c)| c.norm() >= TRUNCATION_THRESHOLD)
            .map(|(p, c)| (c, p))
            .collect();
        terms.sort_by(|a, b| a.1.cmp(&b.1));
        Self {
            width,
            identity,
            terms,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn identity(&self) -> Complex64 {
        self.identity
    }

    pub fn terms(&self) -> &[(Complex64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest imaginary part over all coefficients (including the identity).
    pub fn max_imaginary(&self) -> f64 {
        self.terms
            .iter()
            .map(|(c, _)| c.im.abs())
            .fold(self.identity.im.abs(), f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_imaginary() <= tol
    }

    /// Copy with all imaginary parts dropped.
    pub fn real_part(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|&(c, p)| (Complex64::new(c.re, 0.0), p))
            .collect::<Vec<_>>();
        Self::from_terms(self.width, Complex64::new(self.identity.re, 0.0), terms)
            .expect("same width")
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let terms = indices.iter().map(|&i| self.terms[i]).collect::<Vec<_>>();
        Self::from_terms(self.width, Complex64::new(0.0, 0.0), terms).expect("same width")
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let terms = self.terms.iter().map(|&(c, p)| (c * factor, p));
        Self::from_terms(self.width, self.identity * factor, terms).expect("same width")
    }

    pub fn add(&self, other: &PauliSum) -> Result<Self> {
        if self.width != other.width {
            return Err(Error::DimensionMismatch {
                expected: self.width,
                actual: other.width,
            });
        }
        let terms = self.terms.iter().chain(other.terms.iter()).copied();
        Self::from_terms(self.width, self.identity + other.identity, terms)
    }

    /// `out = H · state`.
    pub fn apply(&self, state: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let dim = self.check_state(state)?;
        if out.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: out.len(),
            });
        }
        for (o, s) in out.iter_mut().zip(state) {
            *o = self.identity * s;
        }
        for &(c, p) in &self.terms {
            for (b, amp) in state.iter().enumerate() {
                if *amp == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let (phase, target) = p.apply_to_basis(b as u64);
                out[target as usize] += c * phase * amp;
            }
        }
        Ok(())
    }

    /// `⟨ψ|H|ψ⟩` (not divided by the norm).
    pub fn expectation(&self, state: &[Complex64]) -> Result<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); state.len()];
        self.apply(state, &mut out)?;
        Ok(inner(state, &out))
    }

    fn check_state(&self, state: &[Complex64]) -> Result<usize> {
        if self.width >= usize::BITS as usize - 1 {
            return Err(Error::WidthTooLarge {
                width: self.width,
                limit: usize::BITS as usize - 2,
            });
        }
        let dim = 1usize << self.width;
        if state.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: state.len(),
            });
        }
        Ok(dim)
    }

    /// Dense `2^width × 2^width` matrix.
    pub fn to_matrix(&self) -> Result<DMatrix<Complex64>> {
        pauli_matrix(self)
    }

    /// One term per line, `(<re>,<im>) X0 Z3`; the identity offset is written as a
    /// bare coefficient. A leading `# width=<n>` line records the register width.
    pub fn to_text(&self) -> String {
        let mut out = format!("# width={}\n", self.width);
        out.push_str(&format!(
            "({:e},{:e})\n",
            self.identity.re, self.identity.im
        ));
        for (c, p) in &self.terms {
            out.push_str(&format!("({:e},{:e}) {}\n", c.re, c.im, p));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut width: Option<usize> = None;
        let mut identity = Complex64::new(0.0, 0.0);
        let mut terms = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(w) = comment.trim().strip_prefix("width=") {
                    width = Some(w.trim().parse().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("bad width '{w}'"),
                    })?);
                }
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let rest = line
                .strip_prefix('(')
                .ok_or_else(|| parse_err("expected '(' to open coefficient".into()))?;
            let close = rest
                .find(')')
                .ok_or_else(|| parse_err("unterminated coefficient".into()))?;
            let (re, im) = rest[..close]
                .split_once(',')
                .ok_or_else(|| parse_err("coefficient must be (re,im)".into()))?;
            let re: f64 = re.trim().parse().map_err(|_| parse_err(format!("bad real part '{re}'")))?;
            let im: f64 = im.trim().parse().map_err(|_| parse_err(format!("bad imaginary part '{im}'")))?;
            let string: PauliString = rest[close + 1..].parse().map_err(|e| match e {
                Error::Parse { message, .. } => parse_err(message),
                other => other,
            })?;
            let c = Complex64::new(re, im);
            if string.is_identity() {
                identity += c;
            } else {
                terms.push((c, string));
            }
        }
        let width = match width {
            Some(w) => w,
            None => terms.iter().map(|(_, p)| p.min_width()).max().unwrap_or(0),
        };
        Self::from_terms(width, identity, terms)
    }
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Dense matrix of a Pauli sum; entry `(b', b)` is `⟨b'|H|b⟩`.
pub fn pauli_matrix(sum: &PauliSum) -> Result<DMatrix<Complex64>> {
    if sum.width > DENSE_WIDTH_LIMIT {
        return Err(Error::WidthTooLarge {
            width: sum.width,
            limit: DENSE_WIDTH_LIMIT,
        });
    }
    let dim = 1usize << sum.width;
    let mut m = DMatrix::from_diagonal_element(dim, dim, sum.identity);
    for &(c, p) in &sum.terms {
        for b in 0..dim {
            let (phase, target) = p.apply_to_basis(b as u64);
            m[(target as usize, b)] += c * phase;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn z0_matrix_is_diag_one_minus_one() {
        let sum = PauliSum::from_terms(1, c(0.0), [(c(1.0), ps("Z0"))]).unwrap();
        let m = pauli_matrix(&sum).unwrap();
        assert_eq!(m[(0, 0)], c(1.0));
        assert_eq!(m[(1, 1)], c(-1.0));
        assert_eq!(m[(0, 1)], c(0.0));
    }

    #[test]
    fn xx_plus_yy_is_hopping_block() {
        let sum =
            PauliSum::from_terms(2, c(0.0), [(c(0.5), ps("X0 X1")), (c(0.5), ps("Y0 Y1"))]).unwrap();
        let m = pauli_matrix(&sum).unwrap();
        for r in 0..4 {
            for col in 0..4 {
                let expected = if (r, col) == (1, 2) || (r, col) == (2, 1) { 1.0 } else { 0.0 };
                assert!((m[(r, col)] - c(expected)).norm() < 1e-15, "({r},{col})");
            }
        }
    }

    #[test]
    fn dense_guard() {
        let sum = PauliSum::zero(15);
        assert!(matches!(
            pauli_matrix(&sum),
            Err(Error::WidthTooLarge { width: 15, .. })
        ));
    }

    #[test]
    fn single_qubit_products() {
        let (x, y, z) = (ps("X0"), ps("Y0"), ps("Z0"));
        assert_eq!(x.multiply(&y), (I, z));
        assert_eq!(y.multiply(&z), (I, x));
        assert_eq!(z.multiply(&x), (I, y));
        assert_eq!(y.multiply(&x), (-I, z));
        assert_eq!(x.multiply(&x), (c(1.0), PauliString::IDENTITY));
    }

    #[test]
    fn multiply_matches_dense_product() {
        let strings = ["X0 Y1", "Y0 Z2", "Z0 Z1 X2", "Y0 Y1 Y2", "X1"];
        for a in strings {
            for b in strings {
                let pa = PauliSum::from_terms(3, c(0.0), [(c(1.0), ps(a))]).unwrap();
                let pb = PauliSum::from_terms(3, c(0.0), [(c(1.0), ps(b))]).unwrap();
                let (phase, prod) = ps(a).multiply(&ps(b));
                let expected = pauli_matrix(&pa).unwrap() * pauli_matrix(&pb).unwrap();
                let got = if prod.is_identity() {
                    DMatrix::from_diagonal_element(8, 8, phase)
                } else {
                    pauli_matrix(&PauliSum::from_terms(3, c(0.0), [(phase, prod)]).unwrap())
                        .unwrap()
                };
                assert!((expected - got).norm() < 1e-14, "{a} * {b}");
            }
        }
    }

    #[test]
    fn commutation_rules() {
        assert!(ps("X0 X1").commutes_with(&ps("Z0 Z1")));
        assert!(!ps("X0 X1").qubitwise_commutes_with(&ps("Z0 Z1")));
        assert!(!ps("X0").commutes_with(&ps("Z0")));
        assert!(ps("Z0").qubitwise_commutes_with(&ps("Z0 X1")));
    }

    #[test]
    fn text_roundtrip_and_canonical_form() {
        let p = ps("Z3 X0");
        assert_eq!(p.to_string(), "X0 Z3");
        let sum = PauliSum::from_terms(
            4,
            c(0.25),
            [(Complex64::new(0.5, -0.125), ps("X0 Z3")), (c(-1.0), ps("Y1"))],
        )
        .unwrap();
        let text = sum.to_text();
        assert!(text.contains("(5e-1,-1.25e-1) X0 Z3"));
        assert_eq!(PauliSum::from_text(&text).unwrap(), sum);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = PauliSum::from_text("# width=2\n(1,0) X0\n(1,0 Z1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = PauliSum::from_text("(1,0) Q0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn merging_and_truncation() {
        let sum = PauliSum::from_terms(
            2,
            c(0.0),
            [
                (c(1.0), ps("X0")),
                (c(-1.0), ps("X0")),
                (c(1e-13), ps("Z1")),
                (c(2.0), ps("Z0")),
                (c(1.0), ps("Z0")),
            ],
        )
        .unwrap();
        assert_eq!(sum.terms(), &[(c(3.0), ps("Z0"))]);
    }

    #[test]
    fn canonical_order() {
        let mut v = vec![ps("Z0"), ps("X1"), ps("X0 Z1"), ps("Y0"), ps("X0")];
        v.sort();
        let names: Vec<String> = v.iter().map(|p| p.to_string()).collect();
        assert_eq!(names, ["X1", "X0", "X0 Z1", "Y0", "Z0"]);
    }
}
