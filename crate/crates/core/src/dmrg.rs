//! Finite-system two-site DMRG on dense matrix-product states.
//!
//! Index conventions: MPS site tensors are `A[l, s, r]`, MPO site tensors are
//! `W[a, s, t, b]` holding `⟨s|W_ab|t⟩`, and environments are `E[bra, mpo, ket]`.
//! All are stored row-major. Qubit `j` is site `j` and basis bit `j` is its
//! physical index.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::format_g12;
use crate::model::GaussianStream;
use crate::operator::{jordan_wigner, CoefficientTensors, PauliSum};

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Relative singular-value cutoff used when compiling MPOs.
pub const MPO_TOLERANCE: f64 = 1e-12;

/// `c = a·b` (or `c += a·b`) on strided row/column views.
#[allow(clippy::too_many_arguments)]
fn gemm(
    (m, k, n): (usize, usize, usize),
    a: &[C],
    (rsa, csa): (usize, usize),
    b: &[C],
    (rsb, csb): (usize, usize),
    accumulate: bool,
    c: &mut [C],
    (rsc, csc): (usize, usize),
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        if !accumulate {
            for i in 0..m {
                for j in 0..n {
                    c[i * rsc + j * csc] = ZERO;
                }
            }
        }
        return;
    }
    assert!((m - 1) * rsa + (k - 1) * csa < a.len());
    assert!((k - 1) * rsb + (n - 1) * csb < b.len());
    assert!((m - 1) * rsc + (n - 1) * csc < c.len());
    let beta = if accumulate { [1.0, 0.0] } else { [0.0, 0.0] };
    // SAFETY: bounds asserted above; Complex64 is repr(C) with layout [re, im].
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            rsa as isize,
            csa as isize,
            b.as_ptr() as *const [f64; 2],
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr() as *mut [f64; 2],
            rsc as isize,
            csc as isize,
        );
    }
}

fn conj(v: &[C]) -> Vec<C> {
    v.iter().map(|z| z.conj()).collect()
}

fn norm(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `σ_p[s][t]` for `p = x_bit + 2 z_bit`: I, X, Z, Y.
fn pauli_element(p: usize, s: usize, t: usize) -> C {
    match (p, s, t) {
        (0, s, t) if s == t => ONE,
        (1, s, t) if s != t => ONE,
        (2, 0, 0) => ONE,
        (2, 1, 1) => -ONE,
        (3, 0, 1) => C::new(0.0, -1.0),
        (3, 1, 0) => C::new(0.0, 1.0),
        _ => ZERO,
    }
}

#[derive(Debug, Clone)]
struct MpoSite {
    wl: usize,
    wr: usize,
    data: Vec<C>,
}

impl MpoSite {
    fn at(&self, a: usize, s: usize, t: usize, b: usize) -> C {
        self.data[((a * 2 + s) * 2 + t) * self.wr + b]
    }
}

#[derive(Debug, Clone)]
pub struct Mpo {
    sites: Vec<MpoSite>,
    /// Frobenius norm (in the Pauli-coefficient metric) of everything discarded
    /// during compression.
    pub residual: f64,
    /// Pauli strings plus identity that went in.
    pub source_terms: usize,
}

impl Mpo {
    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// Dimensions of the `n − 1` inner bonds.
    pub fn bond_dimensions(&self) -> Vec<usize> {
        self.sites.iter().skip(1).map(|s| s.wl).collect()
    }

    pub fn max_bond_dimension(&self) -> usize {
        self.bond_dimensions().into_iter().max().unwrap_or(1)
    }

    /// `⟨x|H|y⟩`.
    pub fn element(&self, x: u64, y: u64) -> C {
        let mut v = vec![ONE];
        for (j, site) in self.sites.iter().enumerate() {
            let s = ((x >> j) & 1) as usize;
            let t = ((y >> j) & 1) as usize;
            let mut next = vec![ZERO; site.wr];
            for (a, &va) in v.iter().enumerate() {
                if va == ZERO {
                    continue;
                }
                for (b, nb) in next.iter_mut().enumerate() {
                    *nb += va * site.at(a, s, t, b);
                }
            }
            v = next;
        }
        v[0]
    }

    /// Dense matrix; for checks on small systems.
    pub fn to_dense(&self) -> Result<DMatrix<C>> {
        let n = self.n_sites();
        if n > 12 {
            return Err(Error::WidthTooLarge { width: n, limit: 12 });
        }
        let dim = 1usize << n;
        Ok(DMatrix::from_fn(dim, dim, |x, y| self.element(x as u64, y as u64)))
    }
}

/// Exact operator Schmidt decomposition of a Pauli sum, site by site from the
/// left. The coefficient matrix between the current left bond and the distinct
/// remaining suffixes is split with an SVD, keeping singular values above
/// `tolerance` times the largest.
pub fn compile_mpo(sum: &PauliSum, tolerance: f64) -> Mpo {
    let n = sum.width().max(1);
    let mut keys: Vec<(u64, u64)> = Vec::with_capacity(sum.len() + 1);
    let mut coefs: Vec<C> = Vec::with_capacity(sum.len() + 1);
    if sum.identity() != ZERO {
        keys.push((0, 0));
        coefs.push(sum.identity());
    }
    for (c, s) in sum.terms() {
        keys.push((s.x_mask(), s.z_mask()));
        coefs.push(*c);
    }
    if keys.is_empty() {
        keys.push((0, 0));
        coefs.push(ZERO);
    }
    let source_terms = keys.len();
    let mut rows = 1;
    let mut coefficients = DMatrix::from_row_slice(1, keys.len(), &coefs);
    let mut sites = Vec::with_capacity(n);
    let mut discarded = 0.0;
    for j in 0..n {
        let bit = 1u64 << j;
        let mut index: HashMap<(u64, u64), usize> = HashMap::new();
        let mut next_keys = Vec::new();
        let mut placement = Vec::with_capacity(keys.len());
        for &(x, z) in &keys {
            let p = ((x & bit != 0) as usize) + 2 * ((z & bit != 0) as usize);
            let rest = (x & !bit, z & !bit);
            let col = *index.entry(rest).or_insert_with(|| {
                next_keys.push(rest);
                next_keys.len() - 1
            });
            placement.push((p, col));
        }
        let mut split = DMatrix::<C>::zeros(4 * rows, next_keys.len());
        for (c, &(p, col)) in placement.iter().enumerate() {
            for a in 0..rows {
                split[(a * 4 + p, col)] += coefficients[(a, c)];
            }
        }
        let (left, remainder) = if j + 1 == n {
            (split, DMatrix::from_element(1, 1, ONE))
        } else {
            let (u, dropped) = row_space(&split, tolerance);
            discarded += dropped;
            let rem = u.adjoint() * &split;
            (u, rem)
        };
        let wr = left.ncols();
        let mut data = vec![ZERO; rows * 4 * wr];
        for a in 0..rows {
            for b in 0..wr {
                for p in 0..4 {
                    let w = left[(a * 4 + p, b)];
                    if w == ZERO {
                        continue;
                    }
                    for s in 0..2 {
                        for t in 0..2 {
                            data[((a * 2 + s) * 2 + t) * wr + b] += w * pauli_element(p, s, t);
                        }
                    }
                }
            }
        }
        sites.push(MpoSite { wl: rows, wr, data });
        rows = wr;
        coefficients = remainder;
        keys = next_keys;
    }
    Mpo {
        sites,
        residual: discarded.sqrt(),
        source_terms,
    }
}

/// Orthonormal basis of the dominant column space of `m`, plus the discarded
/// squared singular values.
fn row_space(m: &DMatrix<C>, tolerance: f64) -> (DMatrix<C>, f64) {
    let (rows, cols) = m.shape();
    // reduce a wide matrix to its square triangular factor first
    let core = if cols > rows {
        let r = m.adjoint().qr().r();
        r.adjoint()
    } else {
        m.clone()
    };
    let svd = core.svd(true, false);
    let u = svd.u.expect("left vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let top = order.first().map(|&i| svd.singular_values[i]).unwrap_or(0.0);
    let mut keep: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| svd.singular_values[i] > tolerance * top)
        .collect();
    if keep.is_empty() {
        keep.push(order[0]);
    }
    let dropped: f64 = order
        .iter()
        .filter(|i| !keep.contains(i))
        .map(|&i| svd.singular_values[i].powi(2))
        .sum();
    let cols: Vec<_> = keep.iter().map(|&i| u.column(i).into_owned()).collect();
    (DMatrix::from_columns(&cols), dropped)
}

/// `⟨x|H|y⟩` straight from the Pauli sum.
pub fn pauli_sum_element(sum: &PauliSum, x: u64, y: u64) -> C {
    let mut v = if x == y { sum.identity() } else { ZERO };
    for (c, s) in sum.terms() {
        if x ^ y == s.x_mask() {
            let (phase, _) = s.apply_to_basis(y);
            v += c * phase;
        }
    }
    v
}

/// Largest deviation between MPO and Pauli-sum matrix elements over `samples`
/// seeded basis pairs. Half the pairs are connected by a term of the sum, so
/// that off-diagonal elements are exercised as well as zeros.
pub fn mpo_fidelity(mpo: &Mpo, sum: &PauliSum, samples: usize, seed: u64) -> f64 {
    let n = mpo.n_sites();
    let mut stream = GaussianStream::new(seed);
    let mut draw = |limit: u64| ((stream.uniform() * limit as f64) as u64).min(limit - 1);
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let x = draw(1u64 << n);
        let y = if i % 2 == 0 && !sum.is_empty() {
            let term = draw(sum.len() as u64) as usize;
            x ^ sum.terms()[term].1.x_mask()
        } else {
            draw(1u64 << n)
        };
        worst = worst.max((mpo.element(x, y) - pauli_sum_element(sum, x, y)).norm());
    }
    worst
}

#[derive(Debug, Clone)]
struct MpsSite {
    dl: usize,
    dr: usize,
    data: Vec<C>,
}

#[derive(Debug, Clone)]
pub struct Mps {
    sites: Vec<MpsSite>,
    center: usize,
}

impl Mps {
    /// Seeded random product state; every site vector is normalized.
    pub fn random_product(n_sites: usize, seed: u64) -> Self {
        let mut stream = GaussianStream::new(seed);
        let sites = (0..n_sites)
            .map(|_| {
                let mut v: Vec<C> = (0..2)
                    .map(|_| C::new(stream.standard_normal(), stream.standard_normal()))
                    .collect();
                let nv = norm(&v);
                v.iter_mut().for_each(|z| *z /= nv);
                MpsSite { dl: 1, dr: 1, data: v }
            })
            .collect();
        Self { sites, center: 0 }
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn bond_dimensions(&self) -> Vec<usize> {
        self.sites.iter().skip(1).map(|s| s.dl).collect()
    }

    /// `max ‖A†A − 1‖` over sites left of the center (left-orthonormality) and
    /// `‖BB† − 1‖` over sites right of it.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, site) in self.sites.iter().enumerate() {
            if j == self.center {
                continue;
            }
            let (dl, dr) = (site.dl, site.dr);
            let m = DMatrix::from_row_slice(2 * dl, dr, &site.data);
            let gram = if j < self.center {
                m.adjoint() * &m
            } else {
                let m = DMatrix::from_row_slice(dl, 2 * dr, &site.data);
                &m * m.adjoint()
            };
            let id = DMatrix::<C>::identity(gram.nrows(), gram.ncols());
            worst = worst.max((gram - id).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        worst
    }

    pub fn norm(&self) -> f64 {
        let mut env = vec![ONE];
        let mut d = 1;
        for site in &self.sites {
            // env'[x', y'] = Σ conj(A[x,s,x']) env[x,y] A[y,s,y']
            let mut tmp = vec![ZERO; d * 2 * site.dr];
            gemm((d, d, 2 * site.dr), &env, (d, 1), &site.data, (2 * site.dr, 1), false, &mut tmp, (2 * site.dr, 1));
            let ac = conj(&site.data);
            let mut next = vec![ZERO; site.dr * site.dr];
            gemm(
                (site.dr, 2 * d, site.dr),
                &ac,
                (1, site.dr),
                &tmp,
                (site.dr, 1),
                false,
                &mut next,
                (site.dr, 1),
            );
            env = next;
            d = site.dr;
        }
        env[0].re.sqrt()
    }

    /// Full amplitude vector, basis bit `j` = site `j`.
    pub fn to_statevector(&self) -> Result<Vec<C>> {
        let n = self.n_sites();
        if n > 20 {
            return Err(Error::WidthTooLarge { width: n, limit: 20 });
        }
        // rows: basis prefixes with bit j = site j, columns: right bond
        let mut acc = vec![ONE];
        let mut prefixes = 1usize;
        for site in &self.sites {
            let mut next = vec![ZERO; prefixes * 2 * site.dr];
            for p in 0..prefixes {
                for s in 0..2 {
                    let row = p + s * prefixes;
                    gemm(
                        (1, site.dl, site.dr),
                        &acc[p * site.dl..],
                        (0, 1),
                        &site.data[s * site.dr..],
                        (2 * site.dr, 1),
                        false,
                        &mut next[row * site.dr..],
                        (0, 1),
                    );
                }
            }
            acc = next;
            prefixes *= 2;
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone)]
struct Env {
    d: usize,
    data: Vec<C>,
}

impl Env {
    fn boundary() -> Self {
        Env { d: 1, data: vec![ONE] }
    }
}

fn left_update(env: &Env, a: &MpsSite, w: &MpoSite) -> Env {
    let (dl, dr, wl, wr) = (a.dl, a.dr, w.wl, w.wr);
    // P[x,a,t,y'] = Σ_y L[x,a,y] A[y,t,y']
    let mut p = vec![ZERO; dl * wl * 2 * dr];
    gemm((dl * wl, dl, 2 * dr), &env.data, (dl, 1), &a.data, (2 * dr, 1), false, &mut p, (2 * dr, 1));
    // Q[x,s,b,y'] = Σ_{a,t} W[a,s,t,b] P[x,a,t,y']
    let mut q = vec![ZERO; dl * 2 * wr * dr];
    for x in 0..dl {
        for s in 0..2 {
            for t in 0..2 {
                gemm(
                    (wr, wl, dr),
                    &w.data[(s * 2 + t) * wr..],
                    (1, 4 * wr),
                    &p[(x * wl * 2 + t) * dr..],
                    (2 * dr, 1),
                    t == 1,
                    &mut q[(x * 2 + s) * wr * dr..],
                    (dr, 1),
                );
            }
        }
    }
    // L'[x',b,y'] = Σ_{x,s} conj(A[x,s,x']) Q[x,s,b,y']
    let ac = conj(&a.data);
    let mut out = vec![ZERO; dr * wr * dr];
    gemm((dr, 2 * dl, wr * dr), &ac, (1, dr), &q, (wr * dr, 1), false, &mut out, (wr * dr, 1));
    Env { d: dr, data: out }
}

fn right_update(env: &Env, a: &MpsSite, w: &MpoSite) -> Env {
    let (dl, dr, wl, wr) = (a.dl, a.dr, w.wl, w.wr);
    // P[y,t,z,c] = Σ_r A[y,t,r] R[z,c,r]
    let mut p = vec![ZERO; 2 * dl * dr * wr];
    gemm((2 * dl, dr, dr * wr), &a.data, (dr, 1), &env.data, (1, dr), false, &mut p, (dr * wr, 1));
    // Q[y,s,z,a] = Σ_{t,c} P[y,t,z,c] W[a,s,t,c]
    let mut q = vec![ZERO; dl * 2 * dr * wl];
    for y in 0..dl {
        for s in 0..2 {
            for t in 0..2 {
                gemm(
                    (dr, wr, wl),
                    &p[(y * 2 + t) * dr * wr..],
                    (wr, 1),
                    &w.data[(s * 2 + t) * wr..],
                    (1, 4 * wr),
                    t == 1,
                    &mut q[(y * 2 + s) * dr * wl..],
                    (wl, 1),
                );
            }
        }
    }
    // R'[x,a,y] = Σ_{s,z} conj(A[x,s,z]) Q[y,s,z,a]
    let ac = conj(&a.data);
    let mut out = vec![ZERO; dl * wl * dl];
    for y in 0..dl {
        gemm(
            (dl, 2 * dr, wl),
            &ac,
            (2 * dr, 1),
            &q[y * 2 * dr * wl..],
            (wl, 1),
            false,
            &mut out[y..],
            (wl * dl, dl),
        );
    }
    Env { d: dl, data: out }
}

/// Two-site effective Hamiltonian with the MPO halves absorbed into the
/// environments: `LW[x,s,b,y,t]` and `WR[b,u,r,v,z]`.
struct TwoSite {
    dl: usize,
    dr: usize,
    wm: usize,
    lw: Vec<C>,
    wr: Vec<C>,
    scratch: std::cell::RefCell<Vec<C>>,
}

impl TwoSite {
    fn new(left: &Env, w1: &MpoSite, w2: &MpoSite, right: &Env) -> Self {
        let (dl, dr, wl, wm, wrr) = (left.d, right.d, w1.wl, w1.wr, w2.wr);
        let mut lw = vec![ZERO; dl * 2 * wm * dl * 2];
        for x in 0..dl {
            for s in 0..2 {
                for t in 0..2 {
                    gemm(
                        (wm, wl, dl),
                        &w1.data[(s * 2 + t) * wm..],
                        (1, 4 * wm),
                        &left.data[x * wl * dl..],
                        (dl, 1),
                        false,
                        &mut lw[(x * 2 + s) * wm * dl * 2 + t..],
                        (2 * dl, 2),
                    );
                }
            }
        }
        let mut wr = vec![ZERO; wm * 2 * dr * 2 * dr];
        for v in 0..2 {
            for u in 0..2 {
                for z in 0..dr {
                    gemm(
                        (wm, wrr, dr),
                        &w2.data[(v * 2 + u) * wrr..],
                        (4 * wrr, 1),
                        &right.data[z * wrr * dr..],
                        (dr, 1),
                        false,
                        &mut wr[(u * dr * 2 + v) * dr + z..],
                        (4 * dr * dr, 2 * dr),
                    );
                }
            }
        }
        TwoSite {
            dl,
            dr,
            wm,
            lw,
            wr,
            scratch: std::cell::RefCell::new(vec![ZERO; dl * 2 * wm * 2 * dr]),
        }
    }

    fn dim(&self) -> usize {
        4 * self.dl * self.dr
    }

    fn apply(&self, theta: &[C], out: &mut [C]) {
        let (dl, dr, wm) = (self.dl, self.dr, self.wm);
        let mut t = self.scratch.borrow_mut();
        gemm((dl * 2 * wm, 2 * dl, 2 * dr), &self.lw, (2 * dl, 1), theta, (2 * dr, 1), false, &mut t, (2 * dr, 1));
        gemm((dl * 2, wm * 2 * dr, 2 * dr), &t, (wm * 2 * dr, 1), &self.wr, (2 * dr, 1), false, out, (2 * dr, 1));
    }
}

struct LocalSolution {
    value: f64,
    vector: Vec<C>,
    converged: bool,
}

/// Lowest eigenpair by restarted Lanczos from `start`, with full
/// reorthogonalization. Returns the best Ritz pair even without convergence.
fn local_ground(op: &TwoSite, start: &[C], krylov: usize, tol: f64, restarts: usize) -> LocalSolution {
    let dim = op.dim();
    let cap = krylov.max(2).min(dim);
    let mut v: Vec<C> = start.to_vec();
    let nv = norm(&v);
    v.iter_mut().for_each(|z| *z /= nv);
    let mut w = vec![ZERO; dim];
    let mut best = LocalSolution {
        value: f64::INFINITY,
        vector: v.clone(),
        converged: false,
    };
    for _ in 0..=restarts {
        let mut basis = vec![v.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        loop {
            let m = basis.len();
            op.apply(&basis[m - 1], &mut w);
            alpha.push(dot(&basis[m - 1], &w).re);
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &w);
                    w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = norm(&w);
            let done = b < 1e-14 || m == cap;
            if done || m % 4 == 0 {
                let (theta, y) = lowest_ritz(&alpha, &beta);
                let estimate = b * y[m - 1].abs();
                if done || estimate < tol {
                    let mut x = vec![ZERO; dim];
                    for (coef, vec) in y.iter().zip(&basis) {
                        x.iter_mut().zip(vec).for_each(|(xi, vi)| *xi += vi * *coef);
                    }
                    let nx = norm(&x);
                    x.iter_mut().for_each(|z| *z /= nx);
                    let converged = estimate < tol || (b < 1e-14 && m == dim);
                    if theta < best.value {
                        best = LocalSolution {
                            value: theta,
                            vector: x.clone(),
                            converged,
                        };
                    }
                    if converged {
                        best.converged = true;
                        return best;
                    }
                    v = x;
                    break;
                }
            }
            beta.push(b);
            basis.push(w.iter().map(|z| z / b).collect());
        }
    }
    best
}

fn lowest_ritz(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
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
    (eig.eigenvalues[idx], eig.eigenvectors.column(idx).iter().copied().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmrgConfig {
    pub max_bond: usize,
    /// Sweeps including warm-up; one sweep is left-to-right then back.
    pub max_sweeps: usize,
    /// Stop once a full-bond sweep changes the energy by less than this.
    pub energy_tol: f64,
    pub seed: u64,
    pub warmup_sweeps: usize,
    pub warmup_bond: usize,
    /// Largest discarded weight `Σ s²` tolerated below the bond cap.
    pub cutoff: f64,
    pub krylov: usize,
    pub local_tol: f64,
    pub restarts: usize,
}

impl Default for DmrgConfig {
    fn default() -> Self {
        Self {
            max_bond: 32,
            max_sweeps: 20,
            energy_tol: 1e-10,
            seed: 0,
            warmup_sweeps: 2,
            warmup_bond: 8,
            cutoff: 1e-12,
            krylov: 24,
            local_tol: 1e-9,
            restarts: 6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DmrgResult {
    pub energy: f64,
    /// `⟨ψ|H|ψ⟩` after every sweep, warm-up included.
    pub sweep_energies: Vec<f64>,
    pub max_bond_used: usize,
    pub sweeps: usize,
    /// Sum of discarded weights over all truncations.
    pub truncation_error: f64,
    /// Local eigenproblems that hit the iteration budget.
    pub solver_failures: usize,
}

pub fn dmrg_run(mpo: &Mpo, max_bond: usize, max_sweeps: usize, energy_tol: f64, seed: u64) -> Result<DmrgResult> {
    let config = DmrgConfig {
        max_bond,
        max_sweeps,
        energy_tol,
        seed,
        ..DmrgConfig::default()
    };
    Ok(dmrg_run_with(mpo, &config)?.0)
}

struct Sweeper<'a> {
    mpo: &'a Mpo,
    mps: Mps,
    left: Vec<Env>,
    right: Vec<Env>,
    config: &'a DmrgConfig,
    truncation: f64,
    failures: usize,
}

impl Sweeper<'_> {
    fn optimize(&mut self, j: usize, bond: usize, moving_right: bool) -> Result<()> {
        let (a, b) = (&self.mps.sites[j], &self.mps.sites[j + 1]);
        let (dl, dm, dr) = (a.dl, a.dr, b.dr);
        let mut theta = vec![ZERO; 2 * dl * 2 * dr];
        gemm((2 * dl, dm, 2 * dr), &a.data, (dm, 1), &b.data, (2 * dr, 1), false, &mut theta, (2 * dr, 1));
        let op = TwoSite::new(&self.left[j], &self.mpo.sites[j], &self.mpo.sites[j + 1], &self.right[j + 2]);
        let solution = local_ground(&op, &theta, self.config.krylov, self.config.local_tol, self.config.restarts);
        if !solution.converged {
            self.failures += 1;
        }
        let mut piece = split(&solution.vector, dl, dr, bond, self.config.cutoff, moving_right);
        // a truncated update that ends above the incoming state is undone
        let before = rayleigh(&op, &theta);
        if rayleigh(&op, &piece.product()) > before {
            piece = split(&theta, dl, dr, bond, self.config.cutoff, moving_right);
        }
        self.truncation += piece.discarded;
        let (keep, left, right) = (piece.keep, piece.left, piece.right);
        self.mps.sites[j] = MpsSite {
            dl,
            dr: keep,
            data: left,
        };
        self.mps.sites[j + 1] = MpsSite {
            dl: keep,
            dr,
            data: right,
        };
        if moving_right {
            self.mps.center = j + 1;
            self.left[j + 1] = left_update(&self.left[j], &self.mps.sites[j], &self.mpo.sites[j]);
        } else {
            self.mps.center = j;
            self.right[j + 1] = right_update(&self.right[j + 2], &self.mps.sites[j + 1], &self.mpo.sites[j + 1]);
        }
        Ok(())
    }

    /// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩` with the center at site 0.
    fn energy(&self) -> f64 {
        let site = &self.mps.sites[0];
        let e = right_update(&self.right[1], site, &self.mpo.sites[0]);
        let nrm: f64 = site.data.iter().map(|z| z.norm_sqr()).sum();
        e.data[0].re / nrm
    }
}

fn rayleigh(op: &TwoSite, v: &[C]) -> f64 {
    let mut hv = vec![ZERO; v.len()];
    op.apply(v, &mut hv);
    dot(v, &hv).re / dot(v, v).re
}

/// Truncated SVD of a two-site tensor, singular values renormalized and folded
/// into the half the sweep moves towards.
struct Split {
    dl: usize,
    dr: usize,
    keep: usize,
    left: Vec<C>,
    right: Vec<C>,
    discarded: f64,
}

impl Split {
    fn product(&self) -> Vec<C> {
        let mut out = vec![ZERO; 4 * self.dl * self.dr];
        gemm(
            (2 * self.dl, self.keep, 2 * self.dr),
            &self.left,
            (self.keep, 1),
            &self.right,
            (2 * self.dr, 1),
            false,
            &mut out,
            (2 * self.dr, 1),
        );
        out
    }
}

fn split(theta: &[C], dl: usize, dr: usize, bond: usize, cutoff: f64, moving_right: bool) -> Split {
    let m = DMatrix::from_row_slice(2 * dl, 2 * dr, theta);
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let weights: Vec<f64> = order.iter().map(|&i| svd.singular_values[i].powi(2)).collect();
    let total: f64 = weights.iter().sum();
    let mut keep = weights.len().min(bond);
    while keep > 1 && weights[keep - 1..].iter().sum::<f64>() <= cutoff * total {
        keep -= 1;
    }
    let discarded: f64 = weights[keep..].iter().sum::<f64>() / total;
    let kept_norm = weights[..keep].iter().sum::<f64>().sqrt();
    let mut left = vec![ZERO; 2 * dl * keep];
    let mut right = vec![ZERO; keep * 2 * dr];
    for (k, &i) in order[..keep].iter().enumerate() {
        let s = svd.singular_values[i] / kept_norm;
        let (ls, rs) = if moving_right { (1.0, s) } else { (s, 1.0) };
        for row in 0..2 * dl {
            left[row * keep + k] = u[(row, i)] * ls;
        }
        for col in 0..2 * dr {
            right[k * 2 * dr + col] = vt[(i, col)] * rs;
        }
    }
    Split {
        dl,
        dr,
        keep,
        left,
        right,
        discarded,
    }
}

/// DMRG with full settings, returning the final state as well.
pub fn dmrg_run_with(mpo: &Mpo, config: &DmrgConfig) -> Result<(DmrgResult, Mps)> {
    if config.max_bond < 2 {
        return Err(Error::InvalidParameter(format!(
            "max_bond must be at least 2, got {}",
            config.max_bond
        )));
    }
    let n = mpo.n_sites();
    if n < 2 {
        return Err(Error::InvalidParameter("DMRG needs at least two sites".into()));
    }
    if config.max_sweeps == 0 {
        return Err(Error::InvalidParameter("at least one sweep is required".into()));
    }
    let mps = Mps::random_product(n, config.seed);
    let mut right = vec![Env::boundary(); n + 1];
    for j in (1..n).rev() {
        right[j] = right_update(&right[j + 1], &mps.sites[j], &mpo.sites[j]);
    }
    let mut sweeper = Sweeper {
        mpo,
        mps,
        left: vec![Env::boundary(); n + 1],
        right,
        config,
        truncation: 0.0,
        failures: 0,
    };
    let mut energies = Vec::new();
    for sweep in 0..config.max_sweeps {
        let bond = if sweep < config.warmup_sweeps {
            config.warmup_bond.min(config.max_bond)
        } else {
            config.max_bond
        };
        for j in 0..n - 2 {
            sweeper.optimize(j, bond, true)?;
        }
        for j in (0..n - 1).rev() {
            sweeper.optimize(j, bond, false)?;
        }
        let e = sweeper.energy();
        let settled = sweep >= config.warmup_sweeps
            && energies
                .last()
                .is_some_and(|&prev: &f64| (prev - e).abs() < config.energy_tol);
        energies.push(e);
        if settled {
            break;
        }
    }
    let result = DmrgResult {
        energy: *energies.last().expect("at least one sweep"),
        max_bond_used: sweeper.mps.bond_dimensions().into_iter().max().unwrap_or(1),
        sweeps: energies.len(),
        sweep_energies: energies,
        truncation_error: sweeper.truncation,
        solver_failures: sweeper.failures,
    };
    Ok((result, sweeper.mps))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorScanRow {
    pub model: String,
    pub n_sites: usize,
    pub bond: usize,
    pub sweeps: usize,
    pub energy: f64,
    pub reference: f64,
    pub error: f64,
}

impl ErrorScanRow {
    pub const CSV_HEADER: &'static str = "model,n_sites,D,sweeps,E_DMRG,E_reference,error";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.model,
            self.n_sites,
            self.bond,
            self.sweeps,
            format_g12(self.energy),
            format_g12(self.reference),
            format_g12(self.error)
        )
    }
}

/// DMRG errors against a shared reference for the unrotated (`FH`) and rotated
/// (`ORFH`) model at every bond dimension. Runs execute concurrently; rows come
/// back FH first, each model in the order of `bonds`.
pub fn error_scan(
    fh: &CoefficientTensors,
    orfh: &CoefficientTensors,
    n_sites: usize,
    bonds: &[usize],
    reference: f64,
    config: &DmrgConfig,
) -> Result<Vec<ErrorScanRow>> {
    let mpos = [
        ("FH", compile_mpo(&jordan_wigner(fh)?, MPO_TOLERANCE)),
        ("ORFH", compile_mpo(&jordan_wigner(orfh)?, MPO_TOLERANCE)),
    ];
    let jobs: Vec<(usize, usize)> = (0..2).flat_map(|m| bonds.iter().map(move |&d| (m, d))).collect();
    jobs.par_iter()
        .map(|&(m, bond)| {
            let (model, mpo) = &mpos[m];
            let cfg = DmrgConfig {
                max_bond: bond,
                ..*config
            };
            let (r, _) = dmrg_run_with(mpo, &cfg)?;
            Ok(ErrorScanRow {
                model: model.to_string(),
                n_sites,
                bond,
                sweeps: r.sweeps,
                energy: r.energy,
                reference,
                error: r.energy - reference,
            })
        })
        .collect()
}
