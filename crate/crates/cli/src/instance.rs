//! Instance selection shared by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use orfh_core::io::{read_fcidump, tensors_from_json};
use orfh_core::{CoefficientTensors, HubbardParams, InstanceDescriptor};
use serde::{Deserialize, Serialize};

use crate::output::FileHash;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Orbital-rotated Hubbard ring
    Orfh,
    /// Original Hubbard ring
    Fh,
    /// Both, where the command supports a comparison
    Both,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct InstanceArgs {
    /// Number of lattice sites N (2N qubits)
    #[arg(long, default_value_t = 4)]
    pub sites: usize,
    /// Hopping amplitude
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// On-site repulsion
    #[arg(long, default_value_t = 1.0)]
    pub u: f64,
    /// Chemical potential [default: U/2]
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, value_enum, default_value_t = Model::Orfh)]
    pub model: Model,
    /// Sample a real orthogonal rotation instead of a complex unitary one
    #[arg(long)]
    pub real: bool,
    /// Tensors JSON (from `generate`/`ingest`) or an FCIDUMP file; replaces the
    /// generated instance
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Electron count for sector-resolved solvers [default: N, or NELEC]
    #[arg(long)]
    pub electrons: Option<usize>,
}

pub struct Instance {
    pub label: &'static str,
    pub tensors: CoefficientTensors,
    pub n_electrons: usize,
    /// Present for generated instances.
    pub descriptor: Option<InstanceDescriptor>,
    /// Lattice size of generated instances.
    pub n_sites: Option<usize>,
    pub seed: Option<u64>,
}

impl InstanceArgs {
    pub fn params(&self) -> HubbardParams {
        HubbardParams {
            n_sites: self.sites,
            t: self.t,
            u: self.u,
            mu: self.mu.unwrap_or(self.u / 2.0),
        }
    }

    pub fn with_size(&self, sites: usize) -> Self {
        Self {
            sites,
            ..self.clone()
        }
    }

    pub fn with_interaction(&self, u: f64) -> Self {
        Self {
            u,
            ..self.clone()
        }
    }

    /// Models requested, with `Both` expanded FH first.
    pub fn models(&self) -> Vec<Model> {
        match self.model {
            Model::Both => vec![Model::Fh, Model::Orfh],
            m => vec![m],
        }
    }

    pub fn single_model(&self) -> Result<Model> {
        if self.model == Model::Both {
            bail!(crate::Failure::invalid("this command takes a single model, not 'both'"));
        }
        Ok(self.model)
    }

    pub fn generate(&self, model: Model, seed: u64) -> Result<Instance> {
        let rotated = match model {
            Model::Orfh => true,
            Model::Fh => false,
            Model::Both => bail!(crate::Failure::invalid("this command takes a single model, not 'both'")),
        };
        let descriptor = InstanceDescriptor::new(self.params(), seed, self.real, rotated);
        let tensors = descriptor.build()?;
        Ok(Instance {
            label: if rotated { "ORFH" } else { "FH" },
            tensors,
            n_electrons: self.electrons.unwrap_or(self.sites),
            descriptor: Some(descriptor),
            n_sites: Some(self.sites),
            seed: rotated.then_some(seed),
        })
    }

    /// The `--input` file if given, otherwise the generated single-model instance.
    pub fn resolve(&self, seed: u64, inputs: &mut Vec<FileHash>) -> Result<Instance> {
        match &self.input {
            Some(path) => {
                inputs.push(FileHash::of_file(path)?);
                load(path, self.electrons)
            }
            None => self.generate(self.single_model()?, seed),
        }
    }
}

fn load(path: &Path, electrons: Option<usize>) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_json = text.trim_start().starts_with('{');
    if is_json {
        let tensors = tensors_from_json(&text)?;
        let n = tensors.n_spin_orbitals();
        Ok(Instance {
            label: "INPUT",
            n_electrons: electrons.unwrap_or(n / 2),
            tensors,
            descriptor: None,
            n_sites: None,
            seed: None,
        })
    } else {
        let dump = read_fcidump(&text)?;
        Ok(Instance {
            label: "FCIDUMP",
            n_electrons: electrons.unwrap_or(dump.n_electrons),
            tensors: dump.tensors,
            descriptor: None,
            n_sites: None,
            seed: None,
        })
    }
}
