//! Experiment configuration files.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use dgbo::diagnostics::{analytic_data, rough_data};
use dgbo::resonance::PartitionConstants;
use dgbo::scan::ScanRequest;
use dgbo::solver::SimConfig;
use dgbo::spectral::{DispersionSymbol, SpectralField};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub partition_constants: Option<PartitionConstants>,
    #[serde(default)]
    pub simulation: Option<Simulation>,
    #[serde(default)]
    pub smoothing: Option<SmoothingSection>,
    #[serde(default)]
    pub normalform: Option<NormalFormSection>,
    #[serde(default)]
    pub counterexample: Option<CounterexampleSection>,
    #[serde(default)]
    pub lemma_check: Option<LemmaCheckSection>,
    #[serde(default)]
    pub scan: Option<ScanSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Simulation {
    #[serde(flatten)]
    pub sim: SimConfig,
    pub initial: InitialData,
    /// Sobolev indices written as extra columns of `norms.csv`.
    #[serde(default = "default_norms")]
    pub norms: Vec<f64>,
}

fn default_norms() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `ĝ(ξ) = amp·ξ^{−s−1/2−eps}` with seeded random phases.
    Rough { s: f64, eps: f64, amp: f64 },
    /// `ĝ(ξ) = amp·e^{−decay·ξ}·e^{i(0.7ξ + 0.3)}`.
    Analytic { amp: f64, decay: f64 },
    /// Explicit `[ξ, re, im]` triples for positive `ξ`.
    Modes { modes: Vec<(i64, f64, f64)> },
}

impl InitialData {
    pub fn build(&self, sim: &SimConfig, seed: u64) -> dgbo::Result<SpectralField> {
        let grid = sim.grid;
        match *self {
            InitialData::Rough { s, eps, amp } => Ok(rough_data(grid, s, eps, amp, seed)),
            InitialData::Analytic { amp, decay } => Ok(analytic_data(grid, amp, decay)),
            InitialData::Modes { ref modes } => {
                if let Some(&(xi, _, _)) = modes.iter().find(|m| m.0 <= 0) {
                    return Err(dgbo::Error::InvalidParameter(format!(
                        "initial modes must have positive frequency, got {xi}"
                    )));
                }
                let pairs: Vec<(i64, Complex64)> = modes.iter().map(|&(x, re, im)| (x, Complex64::new(re, im))).collect();
                SpectralField::from_pairs(grid, &pairs)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingSection {
    pub s: f64,
    pub a_grid: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalFormSection {
    pub depth_n: usize,
    #[serde(default)]
    pub depth_m: usize,
    #[serde(default)]
    pub s: f64,
    #[serde(default = "yes")]
    pub truncation_check: bool,
    /// Largest acceptable identity residual; exceeding it is an invariant
    /// violation.
    #[serde(default)]
    pub max_residual: Option<f64>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSection {
    pub n_list: Vec<usize>,
    pub s: f64,
    pub a: f64,
    pub sym: DispersionSymbol,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaCheckSection {
    /// Random vectors per size for the zero-sum identity and for the
    /// max-equivalence bracket; random vectors per multiset for the multiset
    /// identity.
    pub trials: usize,
    #[serde(default = "default_max_n")]
    pub zero_sum_max_n: usize,
    #[serde(default = "default_max_m")]
    pub multiset_max_m: usize,
    /// Vectors for the multiset identity are capped at this many per multiset.
    #[serde(default = "default_multiset_trials")]
    pub multiset_trials: usize,
}

fn default_max_n() -> usize {
    7
}

fn default_max_m() -> usize {
    6
}

fn default_multiset_trials() -> usize {
    20
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub requests: Vec<ScanRequest>,
    pub syms: Vec<DispersionSymbol>,
}
