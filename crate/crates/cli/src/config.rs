//! Run configuration: per-command defaults, overlaid by an optional JSON
//! file, overlaid by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Validate,
    Renorm,
    Cramer,
    Clt,
    Kernel,
    Bl,
    Hierarchy,
    Spectrum,
    BwScaling,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Renorm => "renorm",
            Command::Cramer => "cramer",
            Command::Clt => "clt",
            Command::Kernel => "kernel",
            Command::Bl => "bl",
            Command::Hierarchy => "hierarchy",
            Command::Spectrum => "spectrum",
            Command::BwScaling => "bw-scaling",
            Command::Report => "report",
        }
    }
}

/// Fully resolved configuration. The output directory is not part of the
/// hash, so the same experiment written to two places is byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub potential: String,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub sigma: f64,
    pub ks: Vec<usize>,
    pub m_grid: Vec<f64>,
    pub ns: Vec<usize>,
    pub generations: usize,
    pub cases: usize,
    pub windows: BTreeMap<String, f64>,
    pub grids: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
}

/// The JSON file: every field optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub command: Option<Command>,
    pub potential: Option<String>,
    pub params: Option<BTreeMap<String, f64>>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub sigma: Option<f64>,
    pub ks: Option<Vec<usize>>,
    pub m_grid: Option<Vec<f64>>,
    pub ns: Option<Vec<usize>>,
    pub generations: Option<usize>,
    pub cases: Option<usize>,
    pub windows: Option<BTreeMap<String, f64>>,
    pub grids: Option<BTreeMap<String, f64>>,
    pub tolerances: Option<BTreeMap<String, f64>>,
}

fn map(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
    entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let potential = match command {
            Command::BwScaling => "barthe-wolff",
            _ => "cosine-perturbed",
        };
        let m_grid = match command {
            Command::Cramer => (0..25).map(|i| -3.0 + 0.25 * i as f64).collect(),
            Command::Hierarchy => vec![0.0, 0.5],
            Command::BwScaling => vec![0.5, 1.0, 2.0, 4.0],
            _ => vec![-2.0, -1.0, 0.0, 1.0, 2.0],
        };
        let ns = match command {
            Command::BwScaling => vec![2],
            _ => vec![2, 3, 4],
        };
        RunConfig {
            command,
            potential: potential.into(),
            params: BTreeMap::new(),
            seed: 20240611,
            output_dir: PathBuf::from("out"),
            sigma: 0.7,
            ks: vec![4, 16, 64, 256],
            m_grid,
            ns,
            generations: 5,
            cases: 100,
            windows: map(&[("renorm", 24.0), ("validate", 12.0), ("convexity", 3.0)]),
            grids: map(&[("knots", 8193.0), ("validate_points", 4097.0)]),
            tolerances: map(&[
                ("slack", 1e-9),
                ("fidelity", 1e-7),
                ("crosscheck", 1e-4),
                ("phi_identity", 1e-4),
                ("hbar2", 1e-6),
                ("kernel_identity", 1e-5),
                ("covariance", 1e-6),
                ("clt_scaled_factor", 4.0),
                ("entropy", 1e-6),
                ("product", 1e-8),
                ("pythagoras", 1e-12),
                ("macro_gradient", 1e-4),
                ("marginal", 1e-3),
                ("richardson", 1e-2),
                ("bw_relative", 2e-2),
            ]),
        }
    }

    pub fn overlay(&mut self, p: PartialConfig) {
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = p.$field { self.$field = v; } )* };
        }
        take!(potential, seed, output_dir, sigma, ks, m_grid, ns, generations, cases);
        macro_rules! merge {
            ($($field:ident),*) => { $( if let Some(v) = p.$field { self.$field.extend(v); } )* };
        }
        merge!(params, windows, grids, tolerances);
    }

    pub fn load(path: &Path) -> Result<PartialConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (group, entries) in [("tolerances", &self.tolerances), ("windows", &self.windows), ("grids", &self.grids)] {
            for (k, v) in entries {
                if !(*v > 0.0) || !v.is_finite() {
                    return Err(CliError::Config(format!("{group}.{k} must be positive, got {v}")));
                }
            }
        }
        if self.ks.is_empty() || self.m_grid.is_empty() || self.ns.is_empty() {
            return Err(CliError::Config("Ks, m-grid and N lists must be nonempty".into()));
        }
        if let Some(n) = self.ns.iter().find(|n| !(2..=4).contains(*n)) {
            return Err(CliError::Config(format!("N = {n} outside 2..=4")));
        }
        if self.m_grid.iter().any(|m| !m.is_finite()) || !self.sigma.is_finite() {
            return Err(CliError::Config("non-finite m or sigma".into()));
        }
        Ok(())
    }

    pub fn tol(&self, key: &str) -> f64 {
        self.tolerances[key]
    }

    pub fn grid(&self, key: &str) -> f64 {
        self.grids[key]
    }

    pub fn window(&self, key: &str) -> f64 {
        self.windows[key]
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}
