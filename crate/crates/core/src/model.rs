//! Periodic 1D Fermi-Hubbard tensors, Haar-random orbital rotations, and the
//! orbital-rotated (ORFH) instances built from them.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::CoefficientTensors;

/// Identifier of the random stream used for rotations. Part of every instance
/// descriptor: ChaCha20 seeded through `rand_core`'s `seed_from_u64`, uniforms from
/// the top 53 bits of each `u64`, Gaussians by Box-Muller (cosine branch first),
/// matrix entries filled row-major, real part before imaginary part.
pub const PRNG_ID: &str = "chacha20-seed_from_u64-boxmuller-v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HubbardParams {
    pub n_sites: usize,
    pub t: f64,
    pub u: f64,
    pub mu: f64,
}

impl HubbardParams {
    /// `t = 1`, `U = 1`, `μ = U/2`.
    pub fn half_filled(n_sites: usize) -> Self {
        Self::with_interaction(n_sites, 1.0)
    }

    /// `t = 1` and `μ = U/2` for the given `U`.
    pub fn with_interaction(n_sites: usize, u: f64) -> Self {
        Self {
            n_sites,
            t: 1.0,
            u,
            mu: u / 2.0,
        }
    }

    pub fn n_spin_orbitals(&self) -> usize {
        2 * self.n_sites
    }

    fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::InvalidParameter(format!(
                "Hubbard ring needs at least 2 sites, got {}",
                self.n_sites
            )));
        }
        if !(self.t.is_finite() && self.u.is_finite() && self.mu.is_finite()) {
            return Err(Error::InvalidParameter("non-finite Hubbard parameter".into()));
        }
        Ok(())
    }
}

/// Tensors of the periodic Hubbard ring.
///
/// For two sites both bond terms connect the same pair, so the effective hopping
/// between them is `2t`.
pub fn build_hubbard(params: &HubbardParams) -> Result<CoefficientTensors> {
    params.validate()?;
    let n = params.n_sites;
    let mut tensors = CoefficientTensors::zeros(2 * n);
    let hop = Complex64::new(-params.t, 0.0);
    for i in 0..n {
        let j = (i + 1) % n;
        for spin in 0..2 {
            let (a, b) = (2 * i + spin, 2 * j + spin);
            tensors.add_one_body(a, b, hop);
            tensors.add_one_body(b, a, hop);
        }
    }
    for p in 0..2 * n {
        tensors.add_one_body(p, p, Complex64::new(-params.mu, 0.0));
    }
    if params.u != 0.0 {
        for i in 0..n {
            tensors.add_two_body([2 * i, 2 * i, 2 * i + 1, 2 * i + 1], Complex64::new(2.0 * params.u, 0.0));
        }
    }
    Ok(tensors)
}

/// Single-particle basis change `c†_k → Σ_p u_kp c†_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalRotation {
    matrix: DMatrix<Complex64>,
    seed: Option<u64>,
    real: bool,
}

impl OrbitalRotation {
    pub fn identity(dimension: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dimension, dimension),
            seed: None,
            real: true,
        }
    }

    /// Wraps an explicit matrix after checking unitarity to `1e-10`.
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: matrix.ncols(),
            });
        }
        let defect = unitarity_defect(&matrix);
        if defect > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "rotation is not unitary (defect {defect:.3e})"
            )));
        }
        let real = matrix.iter().all(|z| z.im == 0.0);
        Ok(Self {
            matrix,
            seed: None,
            real,
        })
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.matrix)
    }
}

fn unitarity_defect(m: &DMatrix<Complex64>) -> f64 {
    let dim = m.nrows();
    let prod = m * m.adjoint();
    (prod - DMatrix::<Complex64>::identity(dim, dim))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Gaussian stream behind [`PRNG_ID`].
pub struct GaussianStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }
}

/// Haar-random unitary (or orthogonal, with `real`) matrix of even `dimension ≥ 4`:
/// QR of a Gaussian matrix with the phases of `R`'s diagonal moved into `Q`.
pub fn sample_rotation(dimension: usize, seed: u64, real: bool) -> Result<OrbitalRotation> {
    if dimension % 2 != 0 || dimension < 4 {
        return Err(Error::InvalidParameter(format!(
            "rotation dimension must be even and at least 4, got {dimension}"
        )));
    }
    let mut stream = GaussianStream::new(seed);
    let mut entries = Vec::with_capacity(dimension * dimension);
    for _ in 0..dimension * dimension {
        let re = stream.standard_normal();
        let im = if real { 0.0 } else { stream.standard_normal() };
        entries.push(Complex64::new(re, im));
    }
    let gaussian = DMatrix::from_row_slice(dimension, dimension, &entries);
    let qr = gaussian.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dimension {
        let d = r[(j, j)];
        let phase = if d.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { d / d.norm() };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    if real {
        q.iter_mut().for_each(|z| z.im = 0.0);
    }
    Ok(OrbitalRotation {
        matrix: q,
        seed: Some(seed),
        real,
    })
}

/// Applies the rotation to arbitrary tensors by substituting each creation index
/// with `u` and each annihilation index with `conj(u)`.
pub fn rotate(tensors: &CoefficientTensors, rotation: &OrbitalRotation) -> Result<CoefficientTensors> {
    let n = tensors.n_spin_orbitals();
    if rotation.dimension() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: rotation.dimension(),
        });
    }
    let u = rotation.matrix();
    // h'_pq = Σ_kl u_kp h_kl conj(u_lq)
    let one = u.transpose() * tensors.one_body() * u.map(|z| z.conj());

    let mut dense = tensors.dense_two_body();
    if !tensors.two_body().is_empty() {
        let slots = tensors.ordering().creation_slots();
        for (axis, creation) in slots.into_iter().enumerate() {
            dense = transform_axis(&dense, n, axis, u, creation);
        }
    }
    let mut out = CoefficientTensors::zeros_with_ordering(n, tensors.ordering());
    out.set_constant(tensors.constant());
    for p in 0..n {
        for q in 0..n {
            out.add_one_body(p, q, one[(p, q)]);
        }
    }
    if !tensors.two_body().is_empty() {
        insert_dense(&mut out, &dense, n);
    }
    Ok(out)
}

fn insert_dense(out: &mut CoefficientTensors, dense: &[Complex64], n: usize) {
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let v = dense[((p * n + q) * n + r) * n + s];
                    if v != Complex64::new(0.0, 0.0) {
                        out.add_two_body([p, q, r, s], v);
                    }
                }
            }
        }
    }
}

/// `T'[.., p, ..] = Σ_k w(u_kp) T[.., k, ..]` along one axis of a dense `n^4` tensor,
/// with `w` the identity for creation slots and conjugation otherwise.
fn transform_axis(
    tensor: &[Complex64],
    n: usize,
    axis: usize,
    u: &DMatrix<Complex64>,
    creation: bool,
) -> Vec<Complex64> {
    let stride = n.pow(3 - axis as u32);
    let outer = tensor.len() / (stride * n);
    let mut out = vec![Complex64::new(0.0, 0.0); tensor.len()];
    for o in 0..outer {
        let base = o * n * stride;
        for k in 0..n {
            let src = &tensor[base + k * stride..base + (k + 1) * stride];
            if src.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                continue;
            }
            for p in 0..n {
                let w = if creation { u[(k, p)] } else { u[(k, p)].conj() };
                if w == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let dst = &mut out[base + p * stride..base + (p + 1) * stride];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
    }
    out
}

/// Closed-form rotated Hubbard tensors:
///
/// `h_pq = -t Σ_i (u_{2i,p} u*_{2i+2,q} + u_{2i+2,p} u*_{2i,q} + u_{2i+1,p} u*_{2i+3,q}
///        + u_{2i+3,p} u*_{2i+1,q}) - μ δ_pq`
///
/// `h_pqrs = 2U Σ_i u_{2i,p} u*_{2i,q} u_{2i+1,r} u*_{2i+1,s}`
///
/// with site indices taken modulo the ring. The chemical potential sits outside the
/// site sum.
pub fn rotate_hubbard(params: &HubbardParams, rotation: &OrbitalRotation) -> Result<CoefficientTensors> {
    params.validate()?;
    let n_sites = params.n_sites;
    let n = 2 * n_sites;
    if rotation.dimension() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: rotation.dimension(),
        });
    }
    let u = rotation.matrix();
    let mut tensors = CoefficientTensors::zeros(n);
    for p in 0..n {
        for q in 0..n {
            let mut h = Complex64::new(0.0, 0.0);
            for i in 0..n_sites {
                let (a, b) = (2 * i, (2 * i + 2) % n);
                let (c, d) = (2 * i + 1, (2 * i + 3) % n);
                h += u[(a, p)] * u[(b, q)].conj()
                    + u[(b, p)] * u[(a, q)].conj()
                    + u[(c, p)] * u[(d, q)].conj()
                    + u[(d, p)] * u[(c, q)].conj();
            }
            h *= -params.t;
            if p == q {
                h -= params.mu;
            }
            tensors.add_one_body(p, q, h);
        }
    }
    if params.u != 0.0 {
        let mut dense = vec![Complex64::new(0.0, 0.0); n * n * n * n];
        for i in 0..n_sites {
            let up: Vec<Complex64> = (0..n).map(|p| u[(2 * i, p)]).collect();
            let down: Vec<Complex64> = (0..n).map(|p| u[(2 * i + 1, p)]).collect();
            let scale = 2.0 * params.u;
            for p in 0..n {
                for q in 0..n {
                    let pq = up[p] * up[q].conj() * scale;
                    for r in 0..n {
                        let pqr = pq * down[r];
                        let row = ((p * n + q) * n + r) * n;
                        for s in 0..n {
                            dense[row + s] += pqr * down[s].conj();
                        }
                    }
                }
            }
        }
        insert_dense(&mut tensors, &dense, n);
    }
    Ok(tensors)
}

/// Everything needed to regenerate an instance bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub n_sites: usize,
    pub t: f64,
    pub u: f64,
    pub mu: f64,
    pub seed: u64,
    pub real_flag: bool,
    /// `false` produces the original Hubbard tensors.
    #[serde(default = "default_rotated")]
    pub rotated: bool,
    pub prng_id: String,
}

fn default_rotated() -> bool {
    true
}

impl InstanceDescriptor {
    pub fn new(params: HubbardParams, seed: u64, real_flag: bool, rotated: bool) -> Self {
        Self {
            n_sites: params.n_sites,
            t: params.t,
            u: params.u,
            mu: params.mu,
            seed,
            real_flag,
            rotated,
            prng_id: PRNG_ID.to_string(),
        }
    }

    pub fn params(&self) -> HubbardParams {
        HubbardParams {
            n_sites: self.n_sites,
            t: self.t,
            u: self.u,
            mu: self.mu,
        }
    }

    pub fn rotation(&self) -> Result<OrbitalRotation> {
        if self.prng_id != PRNG_ID {
            return Err(Error::InvalidParameter(format!(
                "unsupported prng '{}' (this build provides '{PRNG_ID}')",
                self.prng_id
            )));
        }
        sample_rotation(2 * self.n_sites, self.seed, self.real_flag)
    }

    pub fn build(&self) -> Result<CoefficientTensors> {
        let params = self.params();
        if self.rotated {
            rotate_hubbard(&params, &self.rotation()?)
        } else {
            build_hubbard(&params)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_ring() {
        assert!(build_hubbard(&HubbardParams::half_filled(1)).is_err());
    }

    #[test]
    fn hubbard_entries() {
        let t = build_hubbard(&HubbardParams::half_filled(4)).unwrap();
        assert_eq!(t.one_body()[(0, 2)], Complex64::new(-1.0, 0.0));
        assert_eq!(t.one_body()[(1, 7)], Complex64::new(-1.0, 0.0));
        assert_eq!(t.one_body()[(0, 1)], Complex64::new(0.0, 0.0));
        assert_eq!(t.one_body()[(5, 5)], Complex64::new(-0.5, 0.0));
        assert_eq!(t.two_body().len(), 4);
        assert_eq!(t.two_body_entry([4, 4, 5, 5]), Complex64::new(2.0, 0.0));
        assert!(t.is_hermitian(0.0));
    }

    #[test]
    fn two_site_ring_doubles_the_bond() {
        let t = build_hubbard(&HubbardParams::half_filled(2)).unwrap();
        assert_eq!(t.one_body()[(0, 2)], Complex64::new(-2.0, 0.0));
        assert_eq!(t.one_body()[(3, 1)], Complex64::new(-2.0, 0.0));
    }

    #[test]
    fn rotation_is_deterministic_and_unitary() {
        let a = sample_rotation(8, 11, false).unwrap();
        let b = sample_rotation(8, 11, false).unwrap();
        assert_eq!(a, b);
        assert!(a.unitarity_defect() < 1e-12);
        let c = sample_rotation(8, 12, false).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn real_rotation_is_orthogonal() {
        let r = sample_rotation(6, 3, true).unwrap();
        assert!(r.matrix().iter().all(|z| z.im == 0.0));
        assert!(r.unitarity_defect() < 1e-12);
        let det = r.matrix().map(|z| z.re).determinant();
        assert!((det.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_odd_dimension() {
        assert!(sample_rotation(5, 0, false).is_err());
        assert!(sample_rotation(2, 0, false).is_err());
    }

    #[test]
    fn identity_rotation_reproduces_input() {
        let params = HubbardParams::half_filled(3);
        let original = build_hubbard(&params).unwrap();
        let id = OrbitalRotation::identity(6);
        assert_eq!(rotate(&original, &id).unwrap(), original);
        let closed = rotate_hubbard(&params, &id).unwrap();
        assert_eq!(closed, original);
    }

    #[test]
    fn closed_form_matches_generic_rotation() {
        let params = HubbardParams {
            n_sites: 3,
            t: 0.8,
            u: 1.3,
            mu: 0.4,
        };
        let rot = sample_rotation(6, 5, false).unwrap();
        let generic = rotate(&build_hubbard(&params).unwrap(), &rot).unwrap();
        let closed = rotate_hubbard(&params, &rot).unwrap();
        assert!((generic.one_body() - closed.one_body()).norm() < 1e-12);
        let keys: std::collections::BTreeSet<_> =
            generic.two_body().keys().chain(closed.two_body().keys()).collect();
        for k in keys {
            let d = (generic.two_body_entry(*k) - closed.two_body_entry(*k)).norm();
            assert!(d < 1e-12, "{k:?}: {d}");
        }
    }

    #[test]
    fn rotated_tensors_stay_hermitian() {
        let rot = sample_rotation(8, 2, false).unwrap();
        let t = rotate_hubbard(&HubbardParams::half_filled(4), &rot).unwrap();
        assert!(t.is_hermitian(1e-12));
        assert!(t.max_imaginary() > 1e-3);
        let real = sample_rotation(8, 2, true).unwrap();
        let t = rotate_hubbard(&HubbardParams::half_filled(4), &real).unwrap();
        assert!(t.is_real());
    }

    #[test]
    fn dimension_mismatch() {
        let t = build_hubbard(&HubbardParams::half_filled(2)).unwrap();
        let rot = sample_rotation(6, 0, false).unwrap();
        assert!(matches!(rotate(&t, &rot), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn descriptor_roundtrip() {
        let d = InstanceDescriptor::new(HubbardParams::half_filled(3), 9, true, true);
        let json = serde_json::to_string(&d).unwrap();
        let back: InstanceDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(back.build().unwrap(), d.build().unwrap());
    }
}
