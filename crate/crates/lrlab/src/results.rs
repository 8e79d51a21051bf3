use lrlab_core::metrics::{FitResult, MarginReport, ScanRecord};
use lrlab_core::proofcheck::ProofCheckReport;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;

pub const TOOL_VERSION: &str = concat!("lrlab ", env!("CARGO_PKG_VERSION"));

pub const SEED_SCHEME: &str = "realization i draws disorder from (base_seed, slot, disorder, stream i) and grain g of \
G from (base_seed, slot, grain, stream i*G+g); sweeps set slot to the sweep index";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub scenario_id: String,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginEntry {
    /// Which records were checked, e.g. the scenario id and B support.
    pub label: String,
    pub report: MarginReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis: String,
    pub index: usize,
    pub value: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub base_seed: u64,
    pub slot: u64,
    pub n_realizations: u64,
    pub seed_scheme: String,
    pub tool_version: String,
    pub sweep: Option<SweepPoint>,
}

/// Everything one scenario run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub config: ScenarioConfig,
    /// Per-realization records in realization order, then aggregated records.
    pub records: Vec<ScanRecord>,
    pub fits: Vec<FitEntry>,
    pub proof_checks: Vec<ProofCheckReport>,
    pub margins: Vec<MarginEntry>,
    pub provenance: Provenance,
    /// Checks that were not run, with the reason.
    pub skipped: Vec<String>,
    pub wall_time_s: f64,
}

impl ResultSet {
    pub fn config_hash(&self) -> &str {
        &self.provenance.config_hash
    }

    pub fn all_passed(&self) -> bool {
        self.proof_checks.iter().all(|r| r.pass) && self.margins.iter().all(|m| m.report.passed())
    }
}
