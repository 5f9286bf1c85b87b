//! Generalized (spin-orbital) Hartree-Fock and correlation energies.
//!
//! With `D_pq = ⟨c†_p c_q⟩` the mean-field energy of interleaved tensors is
//! `E = Σ h_pq D_pq + ½ Σ h_pqrs [D_pq D_rs + D_ps (δ_qr − D_rq)]` and the Fock
//! matrix is `F_ab = ∂E/∂D_ab`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GaussianStream;
use crate::operator::{interleaved_order, CoefficientTensors};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhfConfig {
    pub attempts: usize,
    /// Weight of the previous density in linear mixing.
    pub mixing: f64,
    /// Max-abs change of the density matrix between iterations.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Standard deviation of the hermitian noise added to the initial Fock matrix.
    pub perturbation: f64,
    pub seed: u64,
}

impl Default for GhfConfig {
    fn default() -> Self {
        Self {
            attempts: 8,
            mixing: 0.5,
            tolerance: 1e-10,
            max_iterations: 500,
            perturbation: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScfResult {
    pub hf_energy: f64,
    /// Columns are spin-orbitals in the input basis, sorted by orbital energy.
    #[serde(skip)]
    pub orbital_coefficients: DMatrix<Complex64>,
    pub orbital_energies: Vec<f64>,
    pub n_electrons: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Index of the winning randomized start.
    pub attempt: usize,
}

impl ScfResult {
    /// `D_pq = Σ_{i occupied} conj(C_pi) C_qi`.
    pub fn density(&self) -> DMatrix<Complex64> {
        density_from(&self.orbital_coefficients, self.n_electrons)
    }
}

/// `E_exact − E_HF`.
pub fn correlation_energy(e_exact: f64, e_hf: f64) -> f64 {
    e_exact - e_hf
}

/// `−E_corr / |E_exact|`: the fraction of the exact energy missed by mean field,
/// non-negative whenever the variational bound holds.
pub fn correlation_ratio(e_exact: f64, e_hf: f64) -> f64 {
    -correlation_energy(e_exact, e_hf) / e_exact.abs()
}

/// Best of `attempts` seeded GHF runs with default settings.
pub fn run_ghf(tensors: &CoefficientTensors, n_electrons: usize, attempts: usize) -> Result<ScfResult> {
    run_ghf_with(
        tensors,
        n_electrons,
        &GhfConfig {
            attempts,
            ..GhfConfig::default()
        },
    )
}

pub fn run_ghf_with(tensors: &CoefficientTensors, n_electrons: usize, config: &GhfConfig) -> Result<ScfResult> {
    let n = tensors.n_spin_orbitals();
    if n_electrons == 0 || n_electrons > n {
        return Err(Error::InvalidParameter(format!(
            "electron count {n_electrons} outside 1..={n}"
        )));
    }
    if config.attempts == 0 {
        return Err(Error::InvalidParameter("at least one SCF attempt is required".into()));
    }
    if !tensors.is_hermitian(1e-10) {
        return Err(Error::NotHermitian(tensors.hermiticity_defect()));
    }
    let model = MeanField::new(&interleaved_order(tensors));
    let runs: Vec<ScfResult> = (0..config.attempts)
        .into_par_iter()
        .map(|attempt| model.solve(n_electrons, config, attempt))
        .collect();
    let any_converged = runs.iter().any(|r| r.converged);
    let best = runs
        .into_iter()
        .filter(|r| r.converged || !any_converged)
        .min_by(|a, b| a.hf_energy.total_cmp(&b.hf_energy).then(a.attempt.cmp(&b.attempt)))
        .expect("at least one attempt");
    Ok(best)
}

fn density_from(c: &DMatrix<Complex64>, occupied: usize) -> DMatrix<Complex64> {
    let occ = c.columns(0, occupied);
    (occ * occ.adjoint()).transpose()
}

struct MeanField {
    constant: f64,
    /// `h_ab + ½ Σ_q h_aqqb`.
    core: DMatrix<Complex64>,
    one_body: DMatrix<Complex64>,
    two_body: Vec<([usize; 4], Complex64)>,
}

impl MeanField {
    fn new(tensors: &CoefficientTensors) -> Self {
        let mut core = tensors.one_body().clone();
        let two_body: Vec<([usize; 4], Complex64)> =
            tensors.two_body().iter().map(|(k, v)| (*k, *v)).collect();
        for &([p, q, r, s], v) in &two_body {
            if q == r {
                core[(p, s)] += v * 0.5;
            }
        }
        Self {
            constant: tensors.constant(),
            core,
            one_body: tensors.one_body().clone(),
            two_body,
        }
    }

    fn energy(&self, d: &DMatrix<Complex64>) -> f64 {
        let mut e = Complex64::new(self.constant, 0.0);
        e += self.one_body.component_mul(d).sum();
        for &([p, q, r, s], v) in &self.two_body {
            let mut w = d[(p, q)] * d[(r, s)] - d[(p, s)] * d[(r, q)];
            if q == r {
                w += d[(p, s)];
            }
            e += v * 0.5 * w;
        }
        e.re
    }

    fn fock(&self, d: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut f = self.core.clone();
        for &([p, q, r, s], v) in &self.two_body {
            let half = v * 0.5;
            f[(p, q)] += half * d[(r, s)];
            f[(r, s)] += half * d[(p, q)];
            f[(p, s)] -= half * d[(r, q)];
            f[(r, q)] -= half * d[(p, s)];
        }
        // symmetrize away rounding so the eigensolver sees an exactly hermitian matrix
        (&f + f.adjoint()) * Complex64::new(0.5, 0.0)
    }

    fn solve(&self, n_electrons: usize, config: &GhfConfig, attempt: usize) -> ScfResult {
        let n = self.core.nrows();
        let mut stream = GaussianStream::new(config.seed.wrapping_add(attempt as u64));
        let mut noise = DMatrix::<Complex64>::zeros(n, n);
        for a in 0..n {
            noise[(a, a)] = Complex64::new(stream.standard_normal(), 0.0);
            for b in a + 1..n {
                let z = Complex64::new(stream.standard_normal(), stream.standard_normal())
                    * std::f64::consts::FRAC_1_SQRT_2;
                noise[(a, b)] = z;
                noise[(b, a)] = z.conj();
            }
        }
        let mut fock = &self.core + noise * Complex64::new(config.perturbation, 0.0);
        let mut density: Option<DMatrix<Complex64>> = None;
        let mut iterations = 0;
        let mut converged = false;
        let (mut coefficients, mut energies) = aufbau(&fock);
        while iterations < config.max_iterations {
            iterations += 1;
            let fresh = density_from(&coefficients, n_electrons);
            let mixed = match &density {
                None => fresh.clone(),
                Some(old) => {
                    let change = (&fresh - old).iter().map(|z| z.norm()).fold(0.0, f64::max);
                    if change < config.tolerance {
                        converged = true;
                        break;
                    }
                    old * Complex64::new(config.mixing, 0.0)
                        + &fresh * Complex64::new(1.0 - config.mixing, 0.0)
                }
            };
            fock = self.fock(&mixed);
            density = Some(mixed);
            (coefficients, energies) = aufbau(&fock);
        }
        let final_density = density_from(&coefficients, n_electrons);
        ScfResult {
            hf_energy: self.energy(&final_density),
            orbital_coefficients: coefficients,
            orbital_energies: energies,
            n_electrons,
            converged,
            iterations,
            attempt,
        }
    }
}

fn aufbau(fock: &DMatrix<Complex64>) -> (DMatrix<Complex64>, Vec<f64>) {
    let eig = fock.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..fock.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let cols: Vec<_> = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    let energies = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    (DMatrix::from_columns(&cols), energies)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hubbard, HubbardParams};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn energy_gradient_is_the_fock_matrix() {
        let t = build_hubbard(&HubbardParams::with_interaction(3, 1.7)).unwrap();
        let model = MeanField::new(&t);
        let mut stream = GaussianStream::new(4);
        let n = 6;
        let mut d = DMatrix::<Complex64>::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                d[(a, b)] = Complex64::new(stream.standard_normal(), stream.standard_normal());
            }
        }
        let d = (&d + d.adjoint()) * c(0.5);
        let f = model.fock(&d);
        let h = 1e-6;
        for a in 0..n {
            for b in 0..n {
                let mut dp = d.clone();
                let mut dm = d.clone();
                dp[(a, b)] += c(h);
                dp[(b, a)] += c(h);
                dm[(a, b)] -= c(h);
                dm[(b, a)] -= c(h);
                let fd = (model.energy(&dp) - model.energy(&dm)) / (2.0 * h);
                let analytic = if a == b { f[(a, a)].re * 2.0 } else { 2.0 * f[(a, b)].re };
                assert!((fd - analytic).abs() < 1e-6, "({a},{b}) {fd} {analytic}");
            }
        }
    }

    #[test]
    fn free_fermions_are_exact() {
        // Ring of 6 sites at U = 0: filled sea −2 Σ cos k over k = 0, ±π/3 per spin.
        let t = build_hubbard(&HubbardParams {
            n_sites: 6,
            t: 1.0,
            u: 0.0,
            mu: 0.0,
        })
        .unwrap();
        let r = run_ghf(&t, 6, 2).unwrap();
        assert!(r.converged);
        assert!((r.hf_energy + 8.0).abs() < 1e-9);
    }

    #[test]
    fn density_is_idempotent_with_trace_n() {
        let t = build_hubbard(&HubbardParams::with_interaction(3, 2.0)).unwrap();
        let r = run_ghf(&t, 3, 4).unwrap();
        assert!(r.converged);
        let d = r.density();
        assert!((&d * &d - &d).iter().all(|z| z.norm() < 1e-10));
        assert!((d.trace() - c(3.0)).norm() < 1e-10);
        let overlap = r.orbital_coefficients.adjoint() * &r.orbital_coefficients;
        assert!((overlap - DMatrix::identity(6, 6)).iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn rejects_bad_electron_counts() {
        let t = build_hubbard(&HubbardParams::half_filled(2)).unwrap();
        assert!(run_ghf(&t, 0, 1).is_err());
        assert!(run_ghf(&t, 5, 1).is_err());
        assert!(run_ghf(&t, 2, 0).is_err());
    }

    #[test]
    fn correlation_energy_is_a_difference() {
        assert_eq!(correlation_energy(-3.0, -3.0), 0.0);
        assert_eq!(correlation_energy(-3.5, -3.0), -0.5);
        assert!((correlation_ratio(-4.0, -3.0) - 0.25).abs() < 1e-15);
    }
}
