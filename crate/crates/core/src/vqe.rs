//! Statevector VQE with a hardware-efficient ansatz and four optimizers.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GaussianStream;
use crate::operator::{PauliSum, DENSE_WIDTH_LIMIT};
use crate::reference::{Basis, SparseOperator};

/// Rotation layers of `RZ` then `RY` on every qubit, separated by `CZ` ladders
/// on neighbouring qubits: `R, (CZ, R) × depth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzCircuit {
    pub n_qubits: usize,
    pub depth: usize,
}

impl AnsatzCircuit {
    pub fn new(n_qubits: usize, depth: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > DENSE_WIDTH_LIMIT {
            return Err(Error::WidthTooLarge {
                width: n_qubits,
                limit: DENSE_WIDTH_LIMIT,
            });
        }
        Ok(Self { n_qubits, depth })
    }

    /// `2 · n_qubits · (depth + 1)`; parameter `l·2n + 2q` is the `RZ` angle of qubit
    /// `q` in rotation layer `l` and `l·2n + 2q + 1` its `RY` angle.
    pub fn n_parameters(&self) -> usize {
        2 * self.n_qubits * (self.depth + 1)
    }

    /// State prepared from `|0…0⟩`.
    pub fn apply(&self, parameters: &[f64]) -> Result<Vec<Complex64>> {
        if parameters.len() != self.n_parameters() {
            return Err(Error::DimensionMismatch {
                expected: self.n_parameters(),
                actual: parameters.len(),
            });
        }
        let mut state = vec![Complex64::new(0.0, 0.0); 1 << self.n_qubits];
        state[0] = Complex64::new(1.0, 0.0);
        let per_layer = 2 * self.n_qubits;
        for layer in 0..=self.depth {
            if layer > 0 {
                for q in 0..self.n_qubits.saturating_sub(1) {
                    cz(&mut state, q, q + 1);
                }
            }
            let angles = &parameters[layer * per_layer..(layer + 1) * per_layer];
            for q in 0..self.n_qubits {
                rz(&mut state, q, angles[2 * q]);
                ry(&mut state, q, angles[2 * q + 1]);
            }
        }
        Ok(state)
    }
}

/// Shorthand for [`AnsatzCircuit::apply`].
pub fn apply_ansatz(circuit: &AnsatzCircuit, parameters: &[f64]) -> Result<Vec<Complex64>> {
    circuit.apply(parameters)
}

fn rz(state: &mut [Complex64], q: usize, theta: f64) {
    let lo = Complex64::from_polar(1.0, -theta / 2.0);
    let hi = lo.conj();
    for (b, amp) in state.iter_mut().enumerate() {
        *amp *= if (b >> q) & 1 == 1 { hi } else { lo };
    }
}

fn ry(state: &mut [Complex64], q: usize, theta: f64) {
    let (s, c) = (theta / 2.0).sin_cos();
    let bit = 1 << q;
    for b in 0..state.len() {
        if b & bit == 0 {
            let (a0, a1) = (state[b], state[b | bit]);
            state[b] = a0 * c - a1 * s;
            state[b | bit] = a0 * s + a1 * c;
        }
    }
}

fn cz(state: &mut [Complex64], a: usize, b: usize) {
    let mask = (1 << a) | (1 << b);
    for (i, amp) in state.iter_mut().enumerate() {
        if i & mask == mask {
            *amp = -*amp;
        }
    }
}

/// `⟨ψ|H|ψ⟩` for a normalized state.
pub fn energy(sum: &PauliSum, state: &[Complex64]) -> Result<f64> {
    let norm: f64 = state.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(norm));
    }
    Ok(sum.expectation(state)?.re)
}

/// `E(θ)` and its gradient, counting energy evaluations.
pub struct Objective {
    op: SparseOperator,
    circuit: AnsatzCircuit,
    evaluations: std::cell::Cell<usize>,
}

impl Objective {
    pub fn new(sum: &PauliSum, circuit: AnsatzCircuit) -> Result<Self> {
        if sum.width() != circuit.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: circuit.n_qubits,
                actual: sum.width(),
            });
        }
        let op = SparseOperator::from_pauli_sum(sum, &Basis::Full { width: sum.width() })?;
        Ok(Self {
            op,
            circuit,
            evaluations: std::cell::Cell::new(0),
        })
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations.get()
    }

    pub fn energy(&self, parameters: &[f64]) -> Result<f64> {
        let state = self.circuit.apply(parameters)?;
        self.evaluations.set(self.evaluations.get() + 1);
        Ok(self.op.expectation(&state))
    }

    /// Two-point parameter-shift rule, `∂E/∂θ_i = [E(θ + π/2 e_i) − E(θ − π/2 e_i)] / 2`.
    pub fn gradient(&self, parameters: &[f64]) -> Result<Vec<f64>> {
        let mut shifted = parameters.to_vec();
        let mut grad = Vec::with_capacity(parameters.len());
        for i in 0..parameters.len() {
            shifted[i] = parameters[i] + std::f64::consts::FRAC_PI_2;
            let plus = self.energy(&shifted)?;
            shifted[i] = parameters[i] - std::f64::consts::FRAC_PI_2;
            let minus = self.energy(&shifted)?;
            shifted[i] = parameters[i];
            grad.push(0.5 * (plus - minus));
        }
        Ok(grad)
    }
}

/// Parameter-shift gradient of `⟨H⟩` at `parameters`.
pub fn gradient(sum: &PauliSum, circuit: &AnsatzCircuit, parameters: &[f64]) -> Result<Vec<f64>> {
    Objective::new(sum, *circuit)?.gradient(parameters)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Optimizer {
    Adam,
    Lbfgs,
    Nft,
    Spsa,
}

impl Optimizer {
    pub const ALL: [Optimizer; 4] = [Optimizer::Adam, Optimizer::Lbfgs, Optimizer::Nft, Optimizer::Spsa];
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Optimizer::Adam => "ADAM",
            Optimizer::Lbfgs => "LBFGS",
            Optimizer::Nft => "NFT",
            Optimizer::Spsa => "SPSA",
        })
    }
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ADAM" => Ok(Optimizer::Adam),
            "LBFGS" | "L-BFGS" => Ok(Optimizer::Lbfgs),
            "NFT" => Ok(Optimizer::Nft),
            "SPSA" => Ok(Optimizer::Spsa),
            _ => Err(Error::InvalidParameter(format!("unknown optimizer '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VqeConfig {
    pub adam_step: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub spsa_a: f64,
    pub spsa_c: f64,
    pub spsa_alpha: f64,
    pub spsa_gamma: f64,
    pub lbfgs_memory: usize,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    /// Half-width of the uniform initial-parameter interval.
    pub init_scale: f64,
}

impl Default for VqeConfig {
    fn default() -> Self {
        Self {
            adam_step: 0.05,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            spsa_a: 0.2,
            spsa_c: 0.1,
            spsa_alpha: 0.602,
            spsa_gamma: 0.101,
            lbfgs_memory: 10,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
            init_scale: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeTrajectory {
    pub optimizer: Optimizer,
    pub seed: u64,
    /// Entry 0 is the initial energy, entry `k` the energy after iteration `k`.
    pub energies: Vec<f64>,
    pub best_energy: f64,
    pub evaluations: usize,
    /// Evaluation count at the end of each entry of `energies`.
    pub evaluations_per_iteration: Vec<usize>,
    pub parameters: Vec<f64>,
}

impl VqeTrajectory {
    pub const CSV_HEADER: &'static str = "optimizer,trial,iteration,energy,evaluations";

    /// Rows matching [`Self::CSV_HEADER`].
    pub fn csv_rows(&self, trial: usize) -> Vec<String> {
        self.energies
            .iter()
            .zip(&self.evaluations_per_iteration)
            .enumerate()
            .map(|(k, (e, n))| format!("{},{trial},{k},{},{n}", self.optimizer, crate::io::format_g12(*e)))
            .collect()
    }
}

pub fn initial_parameters(count: usize, seed: u64, scale: f64) -> Vec<f64> {
    let mut stream = GaussianStream::new(seed);
    (0..count).map(|_| scale * (2.0 * stream.uniform() - 1.0)).collect()
}

pub fn run_vqe(
    sum: &PauliSum,
    circuit: &AnsatzCircuit,
    optimizer: Optimizer,
    seed: u64,
    max_iterations: usize,
) -> Result<VqeTrajectory> {
    run_vqe_with(sum, circuit, optimizer, seed, max_iterations, &VqeConfig::default())
}

pub fn run_vqe_with(
    sum: &PauliSum,
    circuit: &AnsatzCircuit,
    optimizer: Optimizer,
    seed: u64,
    max_iterations: usize,
    config: &VqeConfig,
) -> Result<VqeTrajectory> {
    let objective = Objective::new(sum, *circuit)?;
    let mut theta = initial_parameters(circuit.n_parameters(), seed, config.init_scale);
    let mut record = Recorder::default();
    let e0 = objective.energy(&theta)?;
    record.push(e0, &objective);
    match optimizer {
        Optimizer::Adam => adam(&objective, &mut theta, max_iterations, config, &mut record)?,
        Optimizer::Lbfgs => lbfgs(&objective, &mut theta, e0, max_iterations, config, &mut record)?,
        Optimizer::Nft => nft(&objective, &mut theta, e0, max_iterations, &mut record)?,
        Optimizer::Spsa => spsa(&objective, &mut theta, seed, max_iterations, config, &mut record)?,
    }
    let best_energy = record.energies.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(VqeTrajectory {
        optimizer,
        seed,
        energies: record.energies,
        best_energy,
        evaluations: objective.evaluations(),
        evaluations_per_iteration: record.evaluations,
        parameters: theta,
    })
}

#[derive(Default)]
struct Recorder {
    energies: Vec<f64>,
    evaluations: Vec<usize>,
}

impl Recorder {
    fn push(&mut self, energy: f64, objective: &Objective) {
        self.energies.push(energy);
        self.evaluations.push(objective.evaluations());
    }
}

fn adam(
    f: &Objective,
    theta: &mut [f64],
    iterations: usize,
    cfg: &VqeConfig,
    record: &mut Recorder,
) -> Result<()> {
    let mut m = vec![0.0; theta.len()];
    let mut v = vec![0.0; theta.len()];
    for k in 1..=iterations {
        let g = f.gradient(theta)?;
        let bias1 = 1.0 - cfg.adam_beta1.powi(k as i32);
        let bias2 = 1.0 - cfg.adam_beta2.powi(k as i32);
        for i in 0..theta.len() {
            m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g[i];
            v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
            theta[i] -= cfg.adam_step * (m[i] / bias1) / ((v[i] / bias2).sqrt() + cfg.adam_epsilon);
        }
        let e = f.energy(theta)?;
        record.push(e, f);
    }
    Ok(())
}

fn spsa(
    f: &Objective,
    theta: &mut [f64],
    seed: u64,
    iterations: usize,
    cfg: &VqeConfig,
    record: &mut Recorder,
) -> Result<()> {
    // independent stream from the initial parameters
    let mut stream = GaussianStream::new(seed ^ 0x5350_5341);
    let stability = iterations as f64 / 10.0;
    let mut plus = theta.to_vec();
    let mut minus = theta.to_vec();
    for k in 0..iterations {
        let a_k = cfg.spsa_a / (k as f64 + 1.0 + stability).powf(cfg.spsa_alpha);
        let c_k = cfg.spsa_c / (k as f64 + 1.0).powf(cfg.spsa_gamma);
        let delta: Vec<f64> = (0..theta.len())
            .map(|_| if stream.uniform() < 0.5 { -1.0 } else { 1.0 })
            .collect();
        for i in 0..theta.len() {
            plus[i] = theta[i] + c_k * delta[i];
            minus[i] = theta[i] - c_k * delta[i];
        }
        let diff = (f.energy(&plus)? - f.energy(&minus)?) / (2.0 * c_k);
        for i in 0..theta.len() {
            theta[i] -= a_k * diff * delta[i];
        }
        let e = f.energy(theta)?;
        record.push(e, f);
    }
    Ok(())
}

/// Sequential single-parameter minimization: `E(θ_d)` is `A + B cos θ_d + C sin θ_d`,
/// fixed by the current value and the two shifts `±2π/3`.
fn nft(f: &Objective, theta: &mut [f64], e0: f64, sweeps: usize, record: &mut Recorder) -> Result<()> {
    let shift = 2.0 * std::f64::consts::FRAC_PI_3;
    let mut current = e0;
    for _ in 0..sweeps {
        for d in 0..theta.len() {
            let t0 = theta[d];
            theta[d] = t0 + shift;
            let e_plus = f.energy(theta)?;
            theta[d] = t0 - shift;
            let e_minus = f.energy(theta)?;
            let a = (current + e_plus + e_minus) / 3.0;
            let b = current - a;
            let c = (e_plus - e_minus) / 3f64.sqrt();
            let candidate = a - b.hypot(c);
            if candidate < current {
                theta[d] = t0 + c.atan2(b) + std::f64::consts::PI;
                current = candidate;
            } else {
                theta[d] = t0;
            }
        }
        // re-anchor on an actual evaluation so rounding cannot accumulate
        let measured = f.energy(theta)?;
        current = measured;
        record.push(measured, f);
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lbfgs(
    f: &Objective,
    theta: &mut [f64],
    e0: f64,
    iterations: usize,
    cfg: &VqeConfig,
    record: &mut Recorder,
) -> Result<()> {
    let n = theta.len();
    let mut history: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> = Default::default();
    let mut energy = e0;
    let mut grad = f.gradient(theta)?;
    for _ in 0..iterations {
        if dot(&grad, &grad).sqrt() < 1e-10 {
            break;
        }
        // two-loop recursion
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let alpha = rho * dot(s, &q);
            for i in 0..n {
                q[i] -= alpha * y[i];
            }
            alphas.push(alpha);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), alpha) in history.iter().zip(alphas.iter().rev()) {
            let beta = rho * dot(y, &q);
            for i in 0..n {
                q[i] += s[i] * (alpha - beta);
            }
        }
        let mut direction: Vec<f64> = q.iter().map(|v| -v).collect();
        if dot(&direction, &grad) >= 0.0 {
            history.clear();
            direction = grad.iter().map(|v| -v).collect();
        }
        let Some((step, e_new, g_new)) = wolfe_search(f, theta, energy, &grad, &direction, cfg)? else {
            break;
        };
        let s: Vec<f64> = direction.iter().map(|d| d * step).collect();
        let y: Vec<f64> = g_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        for i in 0..n {
            theta[i] += s[i];
        }
        let sy = dot(&s, &y);
        if sy > 1e-14 {
            if history.len() == cfg.lbfgs_memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        energy = e_new;
        grad = g_new;
        record.push(energy, f);
    }
    Ok(())
}

type LineResult = Option<(f64, f64, Vec<f64>)>;

/// Strong-Wolfe line search: bracketing, then zoom by quadratic interpolation
/// safeguarded with bisection. Returns step, energy and gradient at the new point.
fn wolfe_search(
    f: &Objective,
    theta: &[f64],
    e0: f64,
    g0: &[f64],
    direction: &[f64],
    cfg: &VqeConfig,
) -> Result<LineResult> {
    let slope0 = dot(g0, direction);
    let at = |alpha: f64| -> Vec<f64> { theta.iter().zip(direction).map(|(t, d)| t + alpha * d).collect() };
    let phi = |alpha: f64| -> Result<(f64, Vec<f64>, f64)> {
        let x = at(alpha);
        let e = f.energy(&x)?;
        let g = f.gradient(&x)?;
        let slope = dot(&g, direction);
        Ok((e, g, slope))
    };
    let mut lo = (0.0, e0, slope0);
    let mut alpha = 1.0;
    let mut first = true;
    for _ in 0..20 {
        let (e, g, slope) = phi(alpha)?;
        if e > e0 + cfg.wolfe_c1 * alpha * slope0 || (!first && e >= lo.1) {
            return zoom(f, &at, e0, slope0, lo, (alpha, e, slope), direction, cfg);
        }
        if slope.abs() <= -cfg.wolfe_c2 * slope0 {
            return Ok(Some((alpha, e, g)));
        }
        if slope >= 0.0 {
            return zoom(f, &at, e0, slope0, (alpha, e, slope), lo, direction, cfg);
        }
        lo = (alpha, e, slope);
        alpha *= 2.0;
        first = false;
    }
    Ok(None)
}

#[allow(clippy::too_many_arguments)]
fn zoom(
    f: &Objective,
    at: &dyn Fn(f64) -> Vec<f64>,
    e0: f64,
    slope0: f64,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
    direction: &[f64],
    cfg: &VqeConfig,
) -> Result<LineResult> {
    for _ in 0..30 {
        // quadratic interpolation from lo's value and slope, kept inside the bracket
        let (a_lo, a_hi) = (lo.0, hi.0);
        let d = a_hi - a_lo;
        let denom = 2.0 * (hi.1 - lo.1 - lo.2 * d);
        let mut alpha = if denom.abs() > 1e-300 { a_lo - lo.2 * d * d / denom } else { f64::NAN };
        let (min, max) = (a_lo.min(a_hi), a_lo.max(a_hi));
        let margin = 0.1 * (max - min);
        if !alpha.is_finite() || alpha < min + margin || alpha > max - margin {
            alpha = 0.5 * (a_lo + a_hi);
        }
        let x = at(alpha);
        let e = f.energy(&x)?;
        if e > e0 + cfg.wolfe_c1 * alpha * slope0 || e >= lo.1 {
            hi = (alpha, e, f64::NAN);
            let g = f.gradient(&x)?;
            hi.2 = dot(&g, direction);
        } else {
            let g = f.gradient(&x)?;
            let slope = dot(&g, direction);
            if slope.abs() <= -cfg.wolfe_c2 * slope0 {
                return Ok(Some((alpha, e, g)));
            }
            if slope * (a_hi - a_lo) >= 0.0 {
                hi = lo;
            }
            lo = (alpha, e, slope);
        }
        if (hi.0 - lo.0).abs() < 1e-12 {
            break;
        }
    }
    if lo.0 > 0.0 {
        let x = at(lo.0);
        let g = f.gradient(&x)?;
        return Ok(Some((lo.0, lo.1, g)));
    }
    Ok(None)
}
