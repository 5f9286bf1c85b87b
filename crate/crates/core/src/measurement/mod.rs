//! Pauli-term grouping and shot-count estimation.
//!
//! Three grouping families are provided: qubitwise commuting (QWC), general
//! commuting (GC) and basis rotation (low-rank factorization of the two-body
//! tensor). For a grouping `{G}` measured with optimally allocated shots the
//! number of shots for standard error `ε` is `M = K / ε²` with
//! `K = (Σ_G √Var(O_G))²`.

mod basis_rotation;
mod clifford;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use basis_rotation::{factorize, Factor, Factorization, FACTOR_THRESHOLD};
pub use clifford::{diagonalizing_circuit, CliffordGate, SignedString};

use crate::error::{Error, Result};
use crate::operator::{
    jordan_wigner, CoefficientTensors, Pauli, PauliString, PauliSum, DENSE_WIDTH_LIMIT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupingMethod {
    #[serde(rename = "QWC")]
    Qwc,
    #[serde(rename = "GC")]
    Gc,
    #[serde(rename = "BASIS_ROTATION")]
    BasisRotation,
}

impl std::fmt::Display for GroupingMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GroupingMethod::Qwc => "QWC",
            GroupingMethod::Gc => "GC",
            GroupingMethod::BasisRotation => "BASIS_ROTATION",
        })
    }
}

/// How the members of a group are read out from one circuit execution.
#[derive(Debug, Clone)]
pub enum Prescription {
    /// Single-qubit measurement basis on each touched qubit.
    Qubitwise(Vec<(usize, Pauli)>),
    /// Clifford circuit after which every member is `± Z…Z`.
    Clifford(Vec<CliffordGate>),
    /// Orbital rotation (columns are the new orbitals) after which the group
    /// observable is diagonal in occupation numbers.
    OrbitalRotation(DMatrix<Complex64>),
}

#[derive(Debug, Clone)]
pub struct Group {
    /// Term indices into the grouped `PauliSum` for QWC and GC. For basis-rotation
    /// groups, indices into [`Grouping::factors`]; empty for the one-body group.
    pub members: Vec<usize>,
    pub prescription: Prescription,
    /// Group observable, for basis-rotation groups only.
    pub observable: Option<PauliSum>,
}

#[derive(Debug, Clone)]
pub struct Grouping {
    pub method: GroupingMethod,
    pub groups: Vec<Group>,
    /// Retained low-rank factors (basis rotation only).
    pub factors: Vec<Factor>,
}

impl Grouping {
    /// Observable measured by group `g`.
    pub fn group_observable(&self, sum: &PauliSum, g: usize) -> PauliSum {
        let group = &self.groups[g];
        match &group.observable {
            Some(obs) => obs.clone(),
            None => sum.subset(&group.members),
        }
    }

    /// Every term index in exactly one group and the method's compatibility rule
    /// holds within each group.
    pub fn is_valid_for(&self, sum: &PauliSum) -> bool {
        if self.method == GroupingMethod::BasisRotation {
            return true;
        }
        let mut seen = vec![false; sum.len()];
        for group in &self.groups {
            for &i in &group.members {
                if i >= seen.len() || seen[i] {
                    return false;
                }
                seen[i] = true;
            }
            for (a, &i) in group.members.iter().enumerate() {
                for &j in &group.members[a + 1..] {
                    let (p, q) = (sum.terms()[i].1, sum.terms()[j].1);
                    let ok = match self.method {
                        GroupingMethod::Qwc => p.qubitwise_commutes_with(&q),
                        _ => p.commutes_with(&q),
                    };
                    if !ok {
                        return false;
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Terms in coloring order: descending `|c|`, ties by canonical string order.
fn visit_order(sum: &PauliSum) -> Vec<usize> {
    let terms = sum.terms();
    let mut order: Vec<usize> = (0..terms.len()).collect();
    order.sort_by(|&a, &b| {
        terms[b]
            .0
            .norm()
            .total_cmp(&terms[a].0.norm())
            .then(terms[a].1.cmp(&terms[b].1))
    });
    order
}

fn greedy_color<F>(sum: &PauliSum, compatible: F) -> Vec<Vec<usize>>
where
    F: Fn(&PauliString, &PauliString) -> bool,
{
    let terms = sum.terms();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in visit_order(sum) {
        let p = &terms[i].1;
        match groups
            .iter_mut()
            .find(|g| g.iter().all(|&j| compatible(p, &terms[j].1)))
        {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
}

pub fn group_qubitwise(sum: &PauliSum) -> Grouping {
    let groups = greedy_color(sum, |a, b| a.qubitwise_commutes_with(b))
        .into_iter()
        .map(|members| {
            let mut bases: Vec<(usize, Pauli)> = Vec::new();
            for &i in &members {
                for (q, p) in sum.terms()[i].1.factors() {
                    if !bases.iter().any(|&(k, _)| k == q) {
                        bases.push((q, p));
                    }
                }
            }
            bases.sort_by_key(|&(q, _)| q);
            Group {
                members,
                prescription: Prescription::Qubitwise(bases),
                observable: None,
            }
        })
        .collect();
    Grouping {
        method: GroupingMethod::Qwc,
        groups,
        factors: Vec::new(),
    }
}

pub fn group_general_commuting(sum: &PauliSum) -> Grouping {
    let groups = greedy_color(sum, |a, b| a.commutes_with(b))
        .into_iter()
        .map(|members| {
            let strings: Vec<PauliString> = members.iter().map(|&i| sum.terms()[i].1).collect();
            Group {
                members,
                prescription: Prescription::Clifford(diagonalizing_circuit(&strings)),
                observable: None,
            }
        })
        .collect();
    Grouping {
        method: GroupingMethod::Gc,
        groups,
        factors: Vec::new(),
    }
}

/// One group for the one-body part and one per set of mutually commuting
/// factors; factors sharing an eigenbasis are measured after the same rotation.
pub fn group_basis_rotation(tensors: &CoefficientTensors) -> Result<Grouping> {
    let n = tensors.n_spin_orbitals();
    let f = factorize(tensors)?;
    let mut groups = Vec::new();

    let mut one = CoefficientTensors::zeros(n);
    for p in 0..n {
        for q in 0..n {
            one.add_one_body(p, q, f.one_body[(p, q)]);
        }
    }
    groups.push(Group {
        members: Vec::new(),
        prescription: Prescription::OrbitalRotation(basis_rotation::joint_eigenbasis(&[&f.one_body])),
        observable: Some(jordan_wigner(&one)?),
    });

    for set in basis_rotation::commuting_sets(&f.factors) {
        let mats: Vec<&DMatrix<Complex64>> = set.iter().map(|&l| &f.factors[l].matrix).collect();
        let rotation = basis_rotation::joint_eigenbasis(&mats);
        let observable = jordan_wigner(&basis_rotation::factor_tensors(&f.factors, &set, n))?;
        groups.push(Group {
            members: set,
            prescription: Prescription::OrbitalRotation(rotation),
            observable: Some(observable),
        });
    }
    Ok(Grouping {
        method: GroupingMethod::BasisRotation,
        groups,
        factors: f.factors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotEstimate {
    pub k_factor: f64,
    pub epsilon: f64,
    pub shots: f64,
    /// `Var(O_G)` per group, after clamping.
    pub group_variances: Vec<f64>,
    /// Some group variance was negative beyond rounding and was clamped to zero.
    pub clamped: bool,
}

impl ShotEstimate {
    /// Share of `K` attributed to each group, `σ_G · Σσ`; the shares sum to `K`.
    pub fn group_contributions(&self) -> Vec<f64> {
        let total: f64 = self.group_variances.iter().map(|v| v.sqrt()).sum();
        self.group_variances.iter().map(|v| v.sqrt() * total).collect()
    }
}

/// Exact `K` and `M = K/ε²` of the grouping on `state`.
pub fn estimate_shots(
    grouping: &Grouping,
    sum: &PauliSum,
    state: &[Complex64],
    epsilon: f64,
) -> Result<ShotEstimate> {
    if sum.width() > DENSE_WIDTH_LIMIT {
        return Err(Error::WidthTooLarge {
            width: sum.width(),
            limit: DENSE_WIDTH_LIMIT,
        });
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let norm: f64 = state.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(norm));
    }
    let mut clamped = false;
    let mut variances = Vec::with_capacity(grouping.groups.len());
    for g in 0..grouping.groups.len() {
        let mut obs = grouping.group_observable(sum, g);
        if obs.width() != sum.width() {
            return Err(Error::DimensionMismatch {
                expected: sum.width(),
                actual: obs.width(),
            });
        }
        obs = obs.real_part();
        let mut out = vec![Complex64::new(0.0, 0.0); state.len()];
        obs.apply(state, &mut out)?;
        let second: f64 = out.iter().map(|z| z.norm_sqr()).sum();
        let first: f64 = state.iter().zip(&out).map(|(a, b)| (a.conj() * b).re).sum();
        let mut var = second - first * first;
        if var < 0.0 {
            if var < -1e-10 {
                clamped = true;
            }
            var = 0.0;
        }
        variances.push(var);
    }
    let k: f64 = variances.iter().map(|v| v.sqrt()).sum::<f64>().powi(2);
    Ok(ShotEstimate {
        k_factor: k,
        epsilon,
        shots: k / (epsilon * epsilon),
        group_variances: variances,
        clamped,
    })
}

#[derive(Serialize)]
struct GroupRecord<'a> {
    members: &'a [usize],
    #[serde(skip_serializing_if = "Option::is_none")]
    k_contribution: Option<f64>,
}

#[derive(Serialize)]
struct GroupingRecord<'a> {
    method: GroupingMethod,
    n_groups: usize,
    groups: Vec<GroupRecord<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_factor: Option<f64>,
}

/// JSON export: method, member index lists and, with an estimate, the per-group
/// share of `K`.
pub fn grouping_to_json(grouping: &Grouping, estimate: Option<&ShotEstimate>) -> Result<String> {
    let shares = estimate.map(ShotEstimate::group_contributions);
    let record = GroupingRecord {
        method: grouping.method,
        n_groups: grouping.groups.len(),
        groups: grouping
            .groups
            .iter()
            .enumerate()
            .map(|(g, group)| GroupRecord {
                members: &group.members,
                k_contribution: shares.as_ref().map(|s| s[g]),
            })
            .collect(),
        k_factor: estimate.map(|e| e.k_factor),
    };
    Ok(serde_json::to_string_pretty(&record)?)
}
