//! Lieb-Wu equations of the periodic Hubbard ring and the bulk energy integral.
//!
//! With `u = U / 4t` and `θ(x) = 2 atan x` the logarithmic equations read
//!
//! ```text
//! L k_j = 2π I_j − Σ_β θ((sin k_j − λ_β) / u)
//! Σ_j θ((λ_α − sin k_j) / u) = 2π J_α + Σ_β θ((λ_α − λ_β) / 2u)
//! ```
//!
//! and the eigenvalue of `−t Σ (c†c + h.c.) + U Σ n↑ n↓` is `−2t Σ_j cos k_j`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::special::{bessel_j01, integrate};
use crate::error::{Error, Result};

const TOLERANCE: f64 = 1e-12;
const MAX_NEWTON: usize = 200;
const CONTINUATION_START: f64 = 50.0;
const CONTINUATION_STEPS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetheSolution {
    pub charge_momenta: Vec<f64>,
    pub spin_rapidities: Vec<f64>,
    /// `−2t Σ cos k_j`, without any chemical-potential shift.
    pub energy: f64,
    pub n_electrons: usize,
    pub converged: bool,
    /// Max-norm of the equations at the returned roots.
    pub residual: f64,
    /// Residual after each Newton step at the target coupling.
    pub residual_history: Vec<f64>,
}

impl BetheSolution {
    /// `energy − μ N_e`.
    pub fn total_energy(&self, mu: f64) -> f64 {
        self.energy - mu * self.n_electrons as f64
    }
}

fn theta(x: f64) -> f64 {
    2.0 * x.atan()
}

fn dtheta(x: f64) -> f64 {
    2.0 / (1.0 + x * x)
}

/// Symmetric run of `count` consecutive numbers, all integers when `integer` is
/// set and half-odd integers otherwise. When no symmetric run has the requested
/// parity the run is shifted up by one half.
fn quantum_numbers(count: usize, integer: bool) -> Vec<f64> {
    let first = -(count as f64 - 1.0) / 2.0;
    let is_integer = first.fract() == 0.0;
    let offset = if is_integer == integer { 0.0 } else { 0.5 };
    (0..count).map(|j| first + offset + j as f64).collect()
}

struct Equations {
    sites: f64,
    u: f64,
    i: Vec<f64>,
    j: Vec<f64>,
}

impl Equations {
    fn residual(&self, k: &[f64], lam: &[f64]) -> DVector<f64> {
        let ne = k.len();
        let mut r = DVector::zeros(ne + lam.len());
        for (a, &kj) in k.iter().enumerate() {
            let s: f64 = lam.iter().map(|&l| theta((kj.sin() - l) / self.u)).sum();
            r[a] = self.sites * kj - 2.0 * PI * self.i[a] + s;
        }
        for (a, &la) in lam.iter().enumerate() {
            let charge: f64 = k.iter().map(|&kj| theta((la - kj.sin()) / self.u)).sum();
            let spin: f64 = lam.iter().map(|&lb| theta((la - lb) / (2.0 * self.u))).sum();
            r[ne + a] = charge - 2.0 * PI * self.j[a] - spin;
        }
        r
    }

    fn jacobian(&self, k: &[f64], lam: &[f64]) -> DMatrix<f64> {
        let ne = k.len();
        let m = lam.len();
        let u = self.u;
        let mut jac = DMatrix::zeros(ne + m, ne + m);
        for (a, &kj) in k.iter().enumerate() {
            let (s, c) = kj.sin_cos();
            jac[(a, a)] = self.sites;
            for (b, &l) in lam.iter().enumerate() {
                let d = dtheta((s - l) / u) / u;
                jac[(a, a)] += d * c;
                jac[(a, ne + b)] = -d;
            }
        }
        for (a, &la) in lam.iter().enumerate() {
            let row = ne + a;
            for (b, &kj) in k.iter().enumerate() {
                let (s, c) = kj.sin_cos();
                let d = dtheta((la - s) / u) / u;
                jac[(row, b)] = -d * c;
                jac[(row, row)] += d;
            }
            for (b, &lb) in lam.iter().enumerate() {
                if b == a {
                    continue;
                }
                let d = dtheta((la - lb) / (2.0 * u)) / (2.0 * u);
                jac[(row, row)] -= d;
                jac[(row, ne + b)] = d;
            }
        }
        jac
    }

    /// Damped Newton from `(k, lam)`; returns the max-norm residual after each step.
    fn newton(&self, k: &mut [f64], lam: &mut [f64]) -> Vec<f64> {
        let ne = k.len();
        let mut r = self.residual(k, lam);
        let mut history = Vec::new();
        for _ in 0..MAX_NEWTON {
            let norm = r.amax();
            if norm < TOLERANCE {
                break;
            }
            let Some(step) = self.jacobian(k, lam).lu().solve(&(-&r)) else {
                break;
            };
            let mut scale = 1.0;
            let mut accepted = false;
            while scale > 1e-6 {
                let nk: Vec<f64> = k.iter().enumerate().map(|(a, v)| v + scale * step[a]).collect();
                let nl: Vec<f64> =
                    lam.iter().enumerate().map(|(a, v)| v + scale * step[ne + a]).collect();
                let nr = self.residual(&nk, &nl);
                if nr.amax() < norm {
                    k.copy_from_slice(&nk);
                    lam.copy_from_slice(&nl);
                    r = nr;
                    accepted = true;
                    break;
                }
                scale *= 0.5;
            }
            history.push(r.amax());
            if !accepted {
                break;
            }
        }
        history
    }
}

/// Solves the Lieb-Wu equations for `n_electrons` electrons, `n_down` of them spin
/// down, on a ring of `n_sites` sites, with real roots and the ground-state quantum
/// numbers. The coupling is reached by continuation from the strong-coupling limit.
pub fn solve_lieb_wu(
    n_sites: usize,
    n_electrons: usize,
    n_down: usize,
    t: f64,
    u: f64,
) -> Result<BetheSolution> {
    if n_sites < 2 || n_electrons == 0 || n_electrons > n_sites || 2 * n_down > n_electrons {
        return Err(Error::InvalidParameter(format!(
            "unsupported filling: {n_electrons} electrons, {n_down} down, {n_sites} sites"
        )));
    }
    if !(u > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Bethe solver needs t > 0 and U > 0, got t = {t}, U = {u}"
        )));
    }
    let target = u / (4.0 * t);
    let mut eq = Equations {
        sites: n_sites as f64,
        u: target.max(CONTINUATION_START),
        i: quantum_numbers(n_electrons, n_down % 2 == 0),
        j: quantum_numbers(n_down, (n_electrons - n_down) % 2 == 1),
    };

    // Strong-coupling guess: decoupled spin rapidities, uniformly shifted momenta.
    let ne = n_electrons as f64;
    let mut lam: Vec<f64> = eq.j.iter().map(|&j| eq.u * (PI * j / ne).tan()).collect();
    let phase: f64 = lam.iter().map(|&l| theta(l / eq.u)).sum();
    let mut k: Vec<f64> = eq.i.iter().map(|&i| (2.0 * PI * i + phase) / eq.sites).collect();

    let start = eq.u;
    let steps = if start > target { CONTINUATION_STEPS } else { 0 };
    for s in 0..=steps {
        eq.u = if steps == 0 {
            target
        } else {
            start * (target / start).powf(s as f64 / steps as f64)
        };
        let history = eq.newton(&mut k, &mut lam);
        if s == steps {
            let residual = eq.residual(&k, &lam).amax();
            if residual >= 1e-10 {
                return Err(Error::NoConvergence {
                    what: "Lieb-Wu Newton",
                    iterations: history.len(),
                    residual,
                });
            }
            let energy = -2.0 * t * k.iter().map(|k| k.cos()).sum::<f64>();
            return Ok(BetheSolution {
                charge_momenta: k,
                spin_rapidities: lam,
                energy,
                n_electrons,
                converged: true,
                residual,
                residual_history: history,
            });
        }
    }
    unreachable!()
}

/// Half-filled ground state of an even ring: `N` electrons, `N/2` spin down.
pub fn bethe_half_filled_energy(n_sites: usize, t: f64, u: f64) -> Result<BetheSolution> {
    if n_sites % 2 == 1 || n_sites == 0 {
        return Err(Error::InvalidParameter(format!(
            "half filling needs an even number of sites, got {n_sites}"
        )));
    }
    solve_lieb_wu(n_sites, n_sites, n_sites / 2, t, u)
}

/// Ground energy per site of the half-filled chain in units of `t = 1`:
/// `−4 ∫_0^∞ J0(ω) J1(ω) / (ω (1 + e^{ωU/2})) dω`.
pub fn bethe_bulk_energy_density(u: f64) -> Result<f64> {
    if !(u >= 0.0) || !u.is_finite() {
        return Err(Error::InvalidParameter(format!("U must be non-negative, got {u}")));
    }
    if u == 0.0 {
        return Ok(-4.0 / PI);
    }
    let f = |w: f64| {
        if w == 0.0 {
            return 0.25;
        }
        let (j0, j1) = bessel_j01(w);
        j0 * j1 / (w * (1.0 + (w * u / 2.0).exp()))
    };
    // e^{-ωU/2} < 1e-18 beyond this point; the bare tail decays like ω⁻².
    let upper = (90.0 / u).min(2e5);
    let panels = ((2.0 * upper).ceil() as usize).max(64);
    let coarse = integrate(f, 0.0, upper, panels, 16);
    let fine = integrate(f, 0.0, upper, 2 * panels, 16);
    let residual = (coarse - fine).abs();
    if residual > 1e-12 {
        return Err(Error::NoConvergence {
            what: "bulk energy quadrature",
            iterations: 2 * panels,
            residual,
        });
    }
    Ok(-4.0 * fine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantum_number_parity() {
        assert_eq!(quantum_numbers(3, true), vec![-1.0, 0.0, 1.0]);
        assert_eq!(quantum_numbers(2, false), vec![-0.5, 0.5]);
        assert_eq!(quantum_numbers(2, true), vec![0.0, 1.0]);
        assert_eq!(quantum_numbers(3, false), vec![-0.5, 0.5, 1.5]);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let eq = Equations {
            sites: 6.0,
            u: 0.4,
            i: quantum_numbers(6, false),
            j: quantum_numbers(3, true),
        };
        let k = vec![-1.9, -0.8, -0.2, 0.3, 0.9, 2.1];
        let lam = vec![-0.7, 0.1, 0.6];
        let jac = eq.jacobian(&k, &lam);
        let h = 1e-6;
        for c in 0..9 {
            let (mut kp, mut lp) = (k.clone(), lam.clone());
            let (mut km, mut lm) = (k.clone(), lam.clone());
            if c < 6 {
                kp[c] += h;
                km[c] -= h;
            } else {
                lp[c - 6] += h;
                lm[c - 6] -= h;
            }
            let fd = (eq.residual(&kp, &lp) - eq.residual(&km, &lm)) / (2.0 * h);
            for r in 0..9 {
                assert!((fd[r] - jac[(r, c)]).abs() < 1e-6, "({r},{c})");
            }
        }
    }

    #[test]
    fn bulk_density_at_zero() {
        assert!((bethe_bulk_energy_density(0.0).unwrap() + 4.0 / PI).abs() < 1e-15);
        assert!(bethe_bulk_energy_density(-1.0).is_err());
    }

    #[test]
    fn bulk_density_is_continuous_at_zero() {
        let e = bethe_bulk_energy_density(1e-3).unwrap();
        assert!((e + 4.0 / PI).abs() < 1e-2);
    }

    #[test]
    fn bulk_density_strong_coupling() {
        // Heisenberg limit: e ≈ −4 ln2 t²/U.
        let u = 200.0;
        let e = bethe_bulk_energy_density(u).unwrap();
        assert!((e / (-4.0 * 2f64.ln() / u) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn odd_ring_rejected() {
        assert!(bethe_half_filled_energy(5, 1.0, 1.0).is_err());
        assert!(bethe_half_filled_energy(4, 1.0, 0.0).is_err());
    }
}
