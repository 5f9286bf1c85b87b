use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

/// Settings for [`lowest_eigenpairs`].
#[derive(Debug, Clone, Copy)]
pub struct LanczosConfig {
    /// Required `‖Hv − θv‖`.
    pub tolerance: f64,
    /// Budget of matrix-vector products per eigenpair, across restarts.
    pub max_iterations: usize,
    /// Krylov basis size before an explicit restart.
    pub krylov_size: usize,
    pub seed: u64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 2000,
            krylov_size: 160,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<Complex64>,
    pub residual: f64,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn project_out(v: &mut [Complex64], basis: &[Vec<Complex64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
}

fn random_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let mut next = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
    (0..dim).map(|_| Complex64::new(next(), next())).collect()
}

/// Lowest `k` eigenpairs of a hermitian operator given by `apply(v, out)`, in
/// ascending order. Uses Lanczos with full reorthogonalization, explicit restarts
/// and locking of converged vectors, so degenerate eigenvalues are returned with
/// their multiplicity.
pub fn lowest_eigenpairs<F>(
    apply: F,
    dim: usize,
    k: usize,
    config: &LanczosConfig,
) -> Result<Vec<Eigenpair>>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    lowest_eigenpairs_from(apply, dim, k, config, None)
}

/// As [`lowest_eigenpairs`], seeding the first eigenpair's Krylov space with `start`.
pub fn lowest_eigenpairs_from<F>(
    apply: F,
    dim: usize,
    k: usize,
    config: &LanczosConfig,
    start: Option<&[Complex64]>,
) -> Result<Vec<Eigenpair>>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    if k > dim {
        return Err(Error::InvalidParameter(format!(
            "requested {k} eigenpairs of a {dim}-dimensional operator"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut locked: Vec<Vec<Complex64>> = Vec::new();
    let mut found = Vec::with_capacity(k);
    for target in 0..k {
        let mut v = match (target, start) {
            (0, Some(s)) if norm(s) > 1e-12 => s.to_vec(),
            _ => random_vector(dim, &mut rng),
        };
        project_out(&mut v, &locked);
        let mut nv = norm(&v);
        if nv < 1e-10 {
            v = random_vector(dim, &mut rng);
            project_out(&mut v, &locked);
            nv = norm(&v);
        }
        v.iter_mut().for_each(|z| *z /= nv);
        let pair = single_eigenpair(&apply, v, &locked, dim, config)?;
        locked.push(pair.vector.clone());
        found.push(pair);
    }
    found.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(found)
}

fn single_eigenpair<F>(
    apply: &F,
    mut start: Vec<Complex64>,
    locked: &[Vec<Complex64>],
    dim: usize,
    config: &LanczosConfig,
) -> Result<Eigenpair>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    let available = dim - locked.len();
    let krylov_cap = config.krylov_size.max(2).min(available);
    let mut used = 0usize;
    let mut best_residual = f64::INFINITY;
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    loop {
        let mut basis: Vec<Vec<Complex64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        loop {
            let m = basis.len();
            apply(&basis[m - 1], &mut w);
            used += 1;
            let a = dot(&basis[m - 1], &w).re;
            alpha.push(a);
            project_out(&mut w, locked);
            project_out(&mut w, &basis);
            let b = norm(&w);
            let exhausted = b < 1e-13 || m == krylov_cap;

            let check = exhausted || m % 4 == 0 || used >= config.max_iterations;
            if check {
                let y = lowest_ritz(&alpha, &beta);
                let estimate = b * y[m - 1].abs();
                if estimate < 0.5 * config.tolerance || exhausted || used >= config.max_iterations {
                    let mut x = vec![Complex64::new(0.0, 0.0); dim];
                    for (coef, vec) in y.iter().zip(&basis) {
                        for (xi, vi) in x.iter_mut().zip(vec) {
                            *xi += *vi * *coef;
                        }
                    }
                    project_out(&mut x, locked);
                    let nx = norm(&x);
                    x.iter_mut().for_each(|z| *z /= nx);
                    let mut hx = vec![Complex64::new(0.0, 0.0); dim];
                    apply(&x, &mut hx);
                    used += 1;
                    let value = dot(&x, &hx).re;
                    let residual = hx
                        .iter()
                        .zip(&x)
                        .map(|(h, xi)| (h - xi * value).norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    best_residual = best_residual.min(residual);
                    if residual < config.tolerance || (b < 1e-13 && m == available) {
                        return Ok(Eigenpair {
                            value,
                            vector: x,
                            residual,
                        });
                    }
                    if used >= config.max_iterations {
                        return Err(Error::NoConvergence {
                            what: "Lanczos",
                            iterations: used,
                            residual: best_residual,
                        });
                    }
                    if exhausted {
                        start = x;
                        break;
                    }
                }
            }
            beta.push(b);
            let next: Vec<Complex64> = w.iter().map(|z| z / b).collect();
            basis.push(next);
        }
    }
}

fn lowest_ritz(alpha: &[f64], beta: &[f64]) -> Vec<f64> {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let idx = eig.eigenvalues.imin();
    eig.eigenvectors.column(idx).iter().copied().collect()
}
