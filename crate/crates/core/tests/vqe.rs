mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use orfh_core::reference::exact_ground_state;
use orfh_core::vqe::{
    energy, gradient, initial_parameters, run_vqe, AnsatzCircuit, Objective, Optimizer, VqeTrajectory,
};
use proptest::prelude::*;

/// Single-qubit gate `g` on qubit `q` of `n`, qubit 0 least significant.
fn embed(g: &DMatrix<C>, q: usize, n: usize) -> DMatrix<C> {
    let mut m = DMatrix::from_element(1, 1, c(1.0));
    for k in (0..n).rev() {
        let factor = if k == q { g.clone() } else { DMatrix::identity(2, 2) };
        m = m.kronecker(&factor);
    }
    m
}

/// The ansatz as an explicit product of dense gate matrices.
fn dense_ansatz(n: usize, depth: usize, theta: &[f64]) -> DVector<C> {
    let dim = 1usize << n;
    let mut psi = DVector::<C>::zeros(dim);
    psi[0] = c(1.0);
    for layer in 0..=depth {
        if layer > 0 {
            for q in 0..n.saturating_sub(1) {
                let cz = DMatrix::from_fn(dim, dim, |i, j| {
                    if i != j {
                        c(0.0)
                    } else if (i >> q) & 3 == 3 {
                        c(-1.0)
                    } else {
                        c(1.0)
                    }
                });
                psi = cz * psi;
            }
        }
        for q in 0..n {
            let a = theta[layer * 2 * n + 2 * q];
            let b = theta[layer * 2 * n + 2 * q + 1];
            let rz = DMatrix::from_row_slice(2, 2, &[C::from_polar(1.0, -a / 2.0), c(0.0), c(0.0), C::from_polar(1.0, a / 2.0)]);
            let (s, co) = (b / 2.0).sin_cos();
            let ry = DMatrix::from_row_slice(2, 2, &[c(co), c(-s), c(s), c(co)]);
            psi = embed(&ry, q, n) * embed(&rz, q, n) * psi;
        }
    }
    psi
}

fn finite_difference(sum: &orfh_core::PauliSum, circuit: &AnsatzCircuit, theta: &[f64], h: f64) -> Vec<f64> {
    let e = |t: &[f64]| energy(sum, &circuit.apply(t).unwrap()).unwrap();
    (0..theta.len())
        .map(|i| {
            let mut p = theta.to_vec();
            let mut m = theta.to_vec();
            p[i] += h;
            m[i] -= h;
            (e(&p) - e(&m)) / (2.0 * h)
        })
        .collect()
}

#[test]
fn ansatz_matches_dense_circuit() {
    let circuit = AnsatzCircuit::new(4, 2).unwrap();
    let theta = initial_parameters(circuit.n_parameters(), 5, 3.0);
    let psi = circuit.apply(&theta).unwrap();
    let reference = dense_ansatz(4, 2, &theta);
    let worst = psi.iter().zip(reference.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-13);
}

#[test]
fn energies_respect_the_variational_bound() {
    let sum = orfh_sum(2, 0);
    let e0 = exact_ground_state(&sum, 1).unwrap()[0].energy;
    let circuit = AnsatzCircuit::new(4, 2).unwrap();
    for opt in Optimizer::ALL {
        let run = run_vqe(&sum, &circuit, opt, 1, 30).unwrap();
        assert!(run.energies.iter().all(|&e| e >= e0 - 1e-10), "{opt}");
        assert_eq!(run.energies.len(), run.evaluations_per_iteration.len());
        assert!(run.best_energy < run.energies[0]);
    }
}

#[test]
fn lbfgs_reaches_the_ground_state_of_a_small_instance() {
    let sum = fh_sum(2);
    let e0 = exact_ground_state(&sum, 1).unwrap()[0].energy;
    let circuit = AnsatzCircuit::new(4, 3).unwrap();
    for seed in 0..2 {
        let run = run_vqe(&sum, &circuit, Optimizer::Lbfgs, seed, 200).unwrap();
        assert!(run.best_energy - e0 < 1e-5, "{} vs {e0}", run.best_energy);
    }
}

#[test]
fn trajectory_csv() {
    let sum = fh_sum(2);
    let circuit = AnsatzCircuit::new(4, 1).unwrap();
    let run = run_vqe(&sum, &circuit, Optimizer::Spsa, 2, 3).unwrap();
    let rows = run.csv_rows(7);
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("SPSA,7,0,"));
    assert_eq!(VqeTrajectory::CSV_HEADER.split(',').count(), rows[0].split(',').count());
}

#[test]
fn same_seed_same_trajectory() {
    let sum = orfh_sum(2, 1);
    let circuit = AnsatzCircuit::new(4, 1).unwrap();
    for opt in Optimizer::ALL {
        let a = run_vqe(&sum, &circuit, opt, 9, 5).unwrap();
        let b = run_vqe(&sum, &circuit, opt, 9, 5).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn objective_counts_evaluations() {
    let sum = fh_sum(2);
    let circuit = AnsatzCircuit::new(4, 1).unwrap();
    let f = Objective::new(&sum, circuit).unwrap();
    let theta = vec![0.1; circuit.n_parameters()];
    f.energy(&theta).unwrap();
    f.gradient(&theta).unwrap();
    assert_eq!(f.evaluations(), 1 + 2 * circuit.n_parameters());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn parameter_shift_matches_finite_differences(seed in any::<u64>(), inst in 0u64..4) {
        let sum = orfh_sum(2, inst);
        let circuit = AnsatzCircuit::new(4, 2).unwrap();
        let theta = initial_parameters(circuit.n_parameters(), seed, 3.0);
        let exact = gradient(&sum, &circuit, &theta).unwrap();
        for h in [1e-5, 1e-6] {
            let fd = finite_difference(&sum, &circuit, &theta, h);
            let worst = exact.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(worst < 1e-6, "h={h}: {worst}");
        }
    }

    #[test]
    fn nft_sweeps_never_raise_the_energy(seed in any::<u64>(), inst in 0u64..4) {
        let sum = orfh_sum(2, inst);
        let circuit = AnsatzCircuit::new(4, 2).unwrap();
        let run = run_vqe(&sum, &circuit, Optimizer::Nft, seed, 8).unwrap();
        prop_assert!(run.energies.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}
