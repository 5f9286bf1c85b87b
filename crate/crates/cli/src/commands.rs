//! Subcommand implementations. Each writes its files through an [`OutputDir`] and
//! returns the config recorded in the manifest.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context as _, Result};
use clap::{Args, ValueEnum};
use orfh_core::analysis::{count_pauli_terms, induced_p_norm};
use orfh_core::dmrg::{compile_mpo, dmrg_run_with, DmrgConfig, MPO_TOLERANCE};
use orfh_core::io::{read_fcidump, tensors_to_json, write_fcidump};
use orfh_core::measurement::{
    estimate_shots, group_basis_rotation, group_general_commuting, group_qubitwise, grouping_to_json, Grouping,
};
use orfh_core::reference::{
    bethe_bulk_energy_density, bethe_half_filled_energy, exact_eigenstates, exact_ground_state,
    sector_ground_state, Basis, Method,
};
use orfh_core::scf::{correlation_energy, correlation_ratio, run_ghf_with, GhfConfig};
use orfh_core::vqe::{run_vqe, AnsatzCircuit, Optimizer};
use orfh_core::{jordan_wigner, rotate, sample_rotation, PauliSum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::instance::{Instance, InstanceArgs, Model};
use crate::output::{pretty, Cell, FileHash, Format, OutputDir, Table};
use crate::Failure;

/// Per-run state handed to every subcommand.
pub struct Context {
    pub seed: u64,
    pub format: Format,
    pub out: OutputDir,
    pub inputs: Vec<FileHash>,
}

impl Context {
    fn report(&mut self, stem: &str, table: &Table) -> Result<()> {
        let ext = match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        let text = table.render(self.format)?;
        self.out.write(&format!("{stem}.{ext}"), &text)?;
        print!("{text}");
        Ok(())
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Also write the instance as FCIDUMP (spin-free instances only)
    #[arg(long)]
    pub fcidump: bool,
}

pub fn generate(args: &GenerateArgs, ctx: &mut Context) -> Result<()> {
    let inst = args.instance.resolve(ctx.seed, &mut ctx.inputs)?;
    write_instance(&inst, ctx)?;
    if let Some(d) = &inst.descriptor {
        ctx.out.write("instance.json", &pretty(d)?)?;
    }
    if args.fcidump {
        ctx.out.write("instance.fcidump", &write_fcidump(&inst.tensors, inst.n_electrons)?)?;
    }
    println!("{} instance on {} qubits", inst.label, inst.tensors.n_spin_orbitals());
    Ok(())
}

fn write_instance(inst: &Instance, ctx: &mut Context) -> Result<()> {
    ctx.out.write("tensors.json", &tensors_to_json(&inst.tensors)?)?;
    ctx.out.write("hamiltonian.txt", &jordan_wigner(&inst.tensors)?.to_text())?;
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct IngestArgs {
    /// FCIDUMP file
    pub fcidump: PathBuf,
    /// Apply a seeded random orbital rotation to the ingested tensors
    #[arg(long)]
    pub rotate: bool,
    /// Use a real orthogonal rotation
    #[arg(long)]
    pub real: bool,
}

#[derive(Serialize)]
struct IngestRecord {
    n_orbitals: usize,
    n_electrons: usize,
    rotated: bool,
    seed: Option<u64>,
    real_flag: bool,
}

pub fn ingest(args: &IngestArgs, ctx: &mut Context) -> Result<()> {
    let text = fs::read_to_string(&args.fcidump).with_context(|| format!("reading {}", args.fcidump.display()))?;
    ctx.inputs.push(FileHash::of_file(&args.fcidump)?);
    let dump = read_fcidump(&text)?;
    let tensors = if args.rotate {
        let u = sample_rotation(dump.tensors.n_spin_orbitals(), ctx.seed, args.real)?;
        rotate(&dump.tensors, &u)?
    } else {
        dump.tensors
    };
    let inst = Instance {
        label: "FCIDUMP",
        tensors,
        n_electrons: dump.n_electrons,
        descriptor: None,
        n_sites: None,
        seed: None,
    };
    write_instance(&inst, ctx)?;
    let record = IngestRecord {
        n_orbitals: dump.n_orbitals,
        n_electrons: dump.n_electrons,
        rotated: args.rotate,
        seed: args.rotate.then_some(ctx.seed),
        real_flag: args.real,
    };
    ctx.out.write("ingest.json", &pretty(&record)?)?;
    println!("{} spatial orbitals, {} electrons", dump.n_orbitals, dump.n_electrons);
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Lattice sizes to scan [default: --sites]
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    /// Rotation seeds to scan [default: --seed]
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
}

const ANALYZE_COLUMNS: [&str; 7] = ["model", "n_sites", "seed", "n_qubits", "term_count", "one_norm", "two_norm"];

fn analyze_row(inst: &Instance) -> Result<Vec<Cell>> {
    let sum = jordan_wigner(&inst.tensors)?;
    Ok(vec![
        inst.label.into(),
        inst.n_sites.into(),
        inst.seed.into(),
        inst.tensors.n_spin_orbitals().into(),
        count_pauli_terms(&sum).into(),
        induced_p_norm(&inst.tensors, 1)?.into(),
        induced_p_norm(&inst.tensors, 2)?.into(),
    ])
}

pub fn analyze(args: &AnalyzeArgs, ctx: &mut Context) -> Result<()> {
    let mut table = Table::new(&ANALYZE_COLUMNS);
    if args.instance.input.is_some() {
        table.push(analyze_row(&args.instance.resolve(ctx.seed, &mut ctx.inputs)?)?);
    } else {
        let sizes = if args.sizes.is_empty() { vec![args.instance.sites] } else { args.sizes.clone() };
        let seeds = if args.seeds.is_empty() { vec![ctx.seed] } else { args.seeds.clone() };
        let mut jobs = Vec::new();
        for &n in &sizes {
            for model in args.instance.models() {
                match model {
                    Model::Fh => jobs.push((n, model, 0)),
                    _ => jobs.extend(seeds.iter().map(|&s| (n, model, s))),
                }
            }
        }
        let rows: Vec<Result<Vec<Cell>>> = jobs
            .par_iter()
            .map(|&(n, model, seed)| analyze_row(&args.instance.with_size(n).generate(model, seed)?))
            .collect();
        for row in rows {
            table.push(row?);
        }
    }
    ctx.report("analyze", &table)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct HfArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Interaction strengths to scan [default: --u]
    #[arg(long, value_delimiter = ',')]
    pub us: Vec<f64>,
    /// Randomized GHF starts; the lowest energy wins
    #[arg(long, default_value_t = 8)]
    pub attempts: usize,
    /// Skip the exact sector ground state
    #[arg(long)]
    pub no_exact: bool,
}

pub fn hf(args: &HfArgs, ctx: &mut Context) -> Result<()> {
    let mut instances = Vec::new();
    if args.instance.input.is_some() {
        instances.push((args.instance.resolve(ctx.seed, &mut ctx.inputs)?, None));
    } else {
        let us = if args.us.is_empty() { vec![args.instance.u] } else { args.us.clone() };
        for model in args.instance.models() {
            for &u in &us {
                instances.push((args.instance.with_interaction(u).generate(model, ctx.seed)?, Some(u)));
            }
        }
    }
    let config = GhfConfig {
        attempts: args.attempts,
        seed: ctx.seed,
        ..GhfConfig::default()
    };
    let mut table = Table::new(&[
        "model", "n_sites", "seed", "U", "n_electrons", "E_HF", "E_exact", "E_corr", "corr_ratio", "converged",
    ]);
    for (inst, u) in &instances {
        let scf = run_ghf_with(&inst.tensors, inst.n_electrons, &config)?;
        let exact = if args.no_exact {
            None
        } else {
            let sum = jordan_wigner(&inst.tensors)?;
            Some(sector_ground_state(&sum, inst.n_electrons, 1)?[0].energy)
        };
        table.push(vec![
            inst.label.into(),
            inst.n_sites.into(),
            inst.seed.into(),
            (*u).into(),
            inst.n_electrons.into(),
            scf.hf_energy.into(),
            exact.into(),
            exact.map(|e| correlation_energy(e, scf.hf_energy)).into(),
            exact.map(|e| correlation_ratio(e, scf.hf_energy)).into(),
            scf.converged.into(),
        ]);
    }
    ctx.report("hf", &table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    /// Dense below 1024 basis states, Lanczos above
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExactArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Number of lowest eigenpairs
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Restrict to the --electrons particle-number sector
    #[arg(long)]
    pub sector: bool,
    #[arg(long, value_enum, default_value_t = SolverMethod::Auto)]
    pub method: SolverMethod,
}

pub fn exact(args: &ExactArgs, ctx: &mut Context) -> Result<()> {
    let inst = args.instance.resolve(ctx.seed, &mut ctx.inputs)?;
    let sum = jordan_wigner(&inst.tensors)?;
    let width = sum.width();
    let basis = if args.sector {
        Basis::Particles {
            width,
            particles: inst.n_electrons,
        }
    } else {
        Basis::Full { width }
    };
    let method = match args.method {
        SolverMethod::Auto => Method::Auto,
        SolverMethod::Dense => Method::Dense,
        SolverMethod::Lanczos => Method::Lanczos,
    };
    let pairs = exact_eigenstates(&sum, &basis, args.k, method)?;
    let mut table = Table::new(&["index", "energy", "residual", "degenerate"]);
    for (i, p) in pairs.iter().enumerate() {
        table.push(vec![i.into(), p.energy.into(), p.residual.into(), p.degenerate.into()]);
    }
    ctx.report("exact", &table)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BetheArgs {
    /// Even ring sizes
    #[arg(long, value_delimiter = ',', default_value = "6")]
    pub sizes: Vec<usize>,
    /// Interaction strengths
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub us: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
}

pub fn bethe(args: &BetheArgs, ctx: &mut Context) -> Result<()> {
    let mut table = Table::new(&[
        "n_sites", "t", "U", "E", "E_total", "E_per_site", "e_bulk", "residual", "converged",
    ]);
    for &n in &args.sizes {
        for &u in &args.us {
            let sol = bethe_half_filled_energy(n, args.t, u)?;
            let bulk = args.t * bethe_bulk_energy_density(u / args.t)?;
            table.push(vec![
                n.into(),
                args.t.into(),
                u.into(),
                sol.energy.into(),
                sol.total_energy(u / 2.0).into(),
                (sol.energy / n as f64).into(),
                bulk.into(),
                sol.residual.into(),
                sol.converged.into(),
            ]);
        }
    }
    ctx.report("bethe", &table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupMethod {
    Qwc,
    Gc,
    BasisRotation,
    All,
}

impl GroupMethod {
    fn expand(self) -> Vec<GroupMethod> {
        match self {
            GroupMethod::All => vec![GroupMethod::Qwc, GroupMethod::Gc, GroupMethod::BasisRotation],
            m => vec![m],
        }
    }

    fn group(self, inst: &Instance, sum: &PauliSum) -> Result<Grouping> {
        Ok(match self {
            GroupMethod::Qwc => group_qubitwise(sum),
            GroupMethod::Gc => group_general_commuting(sum),
            GroupMethod::BasisRotation => group_basis_rotation(&inst.tensors)?,
            GroupMethod::All => unreachable!("expanded before grouping"),
        })
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GroupArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, value_enum, default_value_t = GroupMethod::All)]
    pub method: GroupMethod,
}

pub fn group(args: &GroupArgs, ctx: &mut Context) -> Result<()> {
    let inst = args.instance.resolve(ctx.seed, &mut ctx.inputs)?;
    let sum = jordan_wigner(&inst.tensors)?;
    let mut table = Table::new(&["method", "n_terms", "n_groups"]);
    let mut details = Vec::new();
    for m in args.method.expand() {
        let grouping = m.group(&inst, &sum)?;
        table.push(vec![grouping.method.to_string().into(), sum.len().into(), grouping.groups.len().into()]);
        details.push(serde_json::from_str::<serde_json::Value>(&grouping_to_json(&grouping, None)?)?);
    }
    match ctx.format {
        Format::Csv => ctx.report("group", &table),
        Format::Json => {
            let text = pretty(&details)?;
            ctx.out.write("group.json", &text)?;
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ShotsArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Target standard error of the energy estimate
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = GroupMethod::All)]
    pub method: GroupMethod,
    /// Use the ground state of the --electrons sector instead of the full register
    #[arg(long)]
    pub sector: bool,
}

pub fn shots(args: &ShotsArgs, ctx: &mut Context) -> Result<()> {
    let inst = args.instance.resolve(ctx.seed, &mut ctx.inputs)?;
    let sum = jordan_wigner(&inst.tensors)?;
    if sum.width() > orfh_core::operator::DENSE_WIDTH_LIMIT {
        bail!(Failure::capability(format!(
            "shot estimation needs exact variances on at most {} qubits, got {}",
            orfh_core::operator::DENSE_WIDTH_LIMIT,
            sum.width()
        )));
    }
    let ground = if args.sector {
        sector_ground_state(&sum, inst.n_electrons, 1)?
    } else {
        exact_ground_state(&sum, 1)?
    };
    let state = ground[0].statevector.clone().context("ground state vector")?;
    let mut table = Table::new(&["method", "n_groups", "K", "epsilon", "shots", "clamped"]);
    for m in args.method.expand() {
        let grouping = m.group(&inst, &sum)?;
        let est = estimate_shots(&grouping, &sum, &state, args.eps)?;
        table.push(vec![
            grouping.method.to_string().into(),
            grouping.groups.len().into(),
            est.k_factor.into(),
            est.epsilon.into(),
            est.shots.into(),
            est.clamped.into(),
        ]);
    }
    ctx.report("shots", &table)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VqeArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Optimizers to run [default: all four]
    #[arg(long, value_delimiter = ',')]
    pub optimizers: Vec<Optimizer>,
    /// Trials per optimizer; trial i starts from seed + i
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Iterations (sweeps for NFT)
    #[arg(long, default_value_t = 100)]
    pub iterations: usize,
    /// Entangling layers of the ansatz
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
}

pub fn vqe(args: &VqeArgs, ctx: &mut Context) -> Result<()> {
    let inst = args.instance.resolve(ctx.seed, &mut ctx.inputs)?;
    let sum = jordan_wigner(&inst.tensors)?;
    let circuit = AnsatzCircuit::new(sum.width(), args.depth)?;
    let optimizers = if args.optimizers.is_empty() { Optimizer::ALL.to_vec() } else { args.optimizers.clone() };
    let jobs: Vec<(Optimizer, usize)> =
        optimizers.iter().flat_map(|&o| (0..args.trials).map(move |t| (o, t))).collect();
    let seed = ctx.seed;
    let runs: Vec<_> = jobs
        .par_iter()
        .map(|&(opt, trial)| run_vqe(&sum, &circuit, opt, seed + trial as u64, args.iterations).map(|r| (trial, r)))
        .collect();
    let mut table = Table::new(&["optimizer", "trial", "iteration", "energy", "evaluations"]);
    for run in runs {
        let (trial, r) = run?;
        for (k, (e, n)) in r.energies.iter().zip(&r.evaluations_per_iteration).enumerate() {
            table.push(vec![r.optimizer.to_string().into(), trial.into(), k.into(), (*e).into(), (*n).into()]);
        }
    }
    ctx.report("vqe", &table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    /// Exact diagonalization of the full register
    Ed,
    /// Finite-ring Bethe ansatz (generated instances, even N, μ = U/2)
    Bethe,
    None,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DmrgArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Bond-dimension caps to scan
    #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
    pub bonds: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub sweeps: usize,
    /// Stop once a sweep changes the energy by less than this
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Reference::Ed)]
    pub reference: Reference,
}

pub fn dmrg(args: &DmrgArgs, ctx: &mut Context) -> Result<()> {
    let instances: Vec<Instance> = if args.instance.input.is_some() {
        vec![args.instance.resolve(ctx.seed, &mut ctx.inputs)?]
    } else {
        args.instance
            .models()
            .into_iter()
            .map(|m| args.instance.generate(m, ctx.seed))
            .collect::<Result<_>>()?
    };
    let sums: Vec<PauliSum> = instances.iter().map(|i| jordan_wigner(&i.tensors)).collect::<Result<_, _>>()?;
    let reference = match args.reference {
        Reference::Ed => Some(exact_ground_state(&sums[0], 1)?[0].energy),
        Reference::Bethe => {
            if args.instance.input.is_some() {
                bail!(Failure::invalid("the Bethe reference needs a generated Hubbard instance"));
            }
            let p = args.instance.params();
            Some(bethe_half_filled_energy(p.n_sites, p.t, p.u)?.total_energy(p.mu))
        }
        Reference::None => None,
    };
    let mpos: Vec<_> = sums.iter().map(|s| compile_mpo(s, MPO_TOLERANCE)).collect();
    let jobs: Vec<(usize, usize)> = (0..mpos.len()).flat_map(|m| args.bonds.iter().map(move |&d| (m, d))).collect();
    let seed = ctx.seed;
    let runs: Vec<_> = jobs
        .par_iter()
        .map(|&(m, bond)| {
            let cfg = DmrgConfig {
                max_bond: bond,
                max_sweeps: args.sweeps,
                energy_tol: args.tol,
                seed,
                ..DmrgConfig::default()
            };
            dmrg_run_with(&mpos[m], &cfg).map(|(r, _)| (m, bond, r))
        })
        .collect();
    let mut table = Table::new(&[
        "model", "n_sites", "D", "sweeps", "E_DMRG", "E_reference", "error", "max_bond_used", "truncation_error",
        "mpo_bond",
    ]);
    for run in runs {
        let (m, bond, r) = run?;
        table.push(vec![
            instances[m].label.into(),
            instances[m].n_sites.into(),
            bond.into(),
            r.sweeps.into(),
            r.energy.into(),
            reference.into(),
            reference.map(|e| r.energy - e).into(),
            r.max_bond_used.into(),
            r.truncation_error.into(),
            mpos[m].max_bond_dimension().into(),
        ]);
    }
    ctx.report("dmrg", &table)
}
