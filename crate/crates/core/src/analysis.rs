//! Structural metrics: Pauli term counts and induced coefficient norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{CoefficientTensors, PauliSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SourceTag {
    Orfh,
    Fh,
    Fcidump,
}

impl std::fmt::Display for SourceTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SourceTag::Orfh => "ORFH",
            SourceTag::Fh => "FH",
            SourceTag::Fcidump => "FCIDUMP",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub n_spin_orbitals: usize,
    pub source: SourceTag,
    pub pauli_term_count: usize,
    pub one_norm: f64,
    pub two_norm: f64,
}

impl StructureReport {
    pub fn new(tensors: &CoefficientTensors, sum: &PauliSum, source: SourceTag) -> Self {
        Self {
            n_spin_orbitals: tensors.n_spin_orbitals(),
            source,
            pauli_term_count: count_pauli_terms(sum),
            one_norm: coefficient_norm(tensors, 1),
            two_norm: coefficient_norm(tensors, 2),
        }
    }

    pub const CSV_HEADER: &'static str = "n_spin_orbitals,source,term_count,one_norm,two_norm";
}

/// Number of non-identity strings.
pub fn count_pauli_terms(sum: &PauliSum) -> usize {
    sum.len()
}

/// `(Σ |c_i|^p)^{1/p}` over the one-body entries `h_pq` and the two-body entries
/// `h_pqrs / 2`, i.e. the coefficients multiplying operator products in the stored
/// expansion. The constant is not included.
pub fn induced_p_norm(tensors: &CoefficientTensors, p: u32) -> Result<f64> {
    if p != 1 && p != 2 {
        return Err(Error::InvalidParameter(format!(
            "induced norm order must be 1 or 2, got {p}"
        )));
    }
    Ok(coefficient_norm(tensors, p))
}

fn coefficient_norm(tensors: &CoefficientTensors, p: u32) -> f64 {
    let one = tensors.one_body().iter().map(|z| z.norm());
    let two = tensors.two_body().values().map(|z| 0.5 * z.norm());
    let total: f64 = one.chain(two).map(|a| a.powi(p as i32)).sum();
    total.powf(1.0 / p as f64)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter("slope needs at least two points".into()));
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(Error::InvalidParameter("log-log slope needs positive data".into()));
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hubbard, HubbardParams};
    use crate::operator::jordan_wigner;

    #[test]
    fn hubbard_four_site_norms() {
        let t = build_hubbard(&HubbardParams::half_filled(4)).unwrap();
        // 16 hoppings of 1, 8 diagonals of 0.5, 4 interactions of 2U/2 = 1
        assert!((induced_p_norm(&t, 1).unwrap() - 24.0).abs() < 1e-12);
        assert!((induced_p_norm(&t, 2).unwrap() - 22f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_tensors_have_zero_norm() {
        let t = CoefficientTensors::zeros(4);
        assert_eq!(induced_p_norm(&t, 1).unwrap(), 0.0);
        assert_eq!(induced_p_norm(&t, 2).unwrap(), 0.0);
    }

    #[test]
    fn rejects_other_orders() {
        let t = CoefficientTensors::zeros(4);
        assert!(induced_p_norm(&t, 3).is_err());
        assert!(induced_p_norm(&t, 0).is_err());
    }

    #[test]
    fn empty_sum_counts_zero() {
        assert_eq!(count_pauli_terms(&PauliSum::zero(4)), 0);
    }

    #[test]
    fn hubbard_term_count_is_linear() {
        // Single-Z terms cancel at μ = U/2: 4N hopping strings plus N ZZ strings.
        for n in 3..7 {
            let sum = jordan_wigner(&build_hubbard(&HubbardParams::half_filled(n)).unwrap()).unwrap();
            assert_eq!(count_pauli_terms(&sum), 5 * n);
        }
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = (1..6).map(|x| (x as f64, 3.0 * (x as f64).powi(4))).collect();
        assert!((loglog_slope(&pts).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn norms_scale_linearly() {
        let t = build_hubbard(&HubbardParams::half_filled(3)).unwrap();
        let scaled = t.scaled(2.5);
        for p in [1, 2] {
            let a = induced_p_norm(&t, p).unwrap();
            let b = induced_p_norm(&scaled, p).unwrap();
            assert!((b - 2.5 * a).abs() < 1e-12);
        }
    }
}
