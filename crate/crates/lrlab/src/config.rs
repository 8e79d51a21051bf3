//! Scenario configuration: one JSON document per scenario.

use std::path::Path;

use lrlab_core::metrics::{BoundKind, Statistic, NOISE_FLOOR};
use lrlab_core::models::{GrainScale, Ramp, Waveform};
use lrlab_core::{LocalOperator, SiteInterval};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario_id: String,
    #[serde(default)]
    pub mode: Mode,
    pub model: ModelConfig,
    pub disorder: DisorderConfig,
    #[serde(default)]
    pub perturbations: Vec<PerturbationConfig>,
    pub probes: ProbeConfig,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Unperturbed scan and lightcone fit.
    #[default]
    Lightcone,
    /// Perturbed scan checked against the full/far bounds.
    Perturbed,
    /// Local disorder rewritten as global disorder plus undo terms.
    Dual,
    /// A single GOE grain, checked against the single-perturbation bound.
    Avalanche,
    /// Step-by-step checks of the stability argument.
    Proofcheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Xxz,
    Custom,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub n_sites: usize,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub boundary: Boundary,
    /// Terms of a custom model.
    #[serde(default)]
    pub terms: Vec<TermConfig>,
}

/// `coeff` times a Pauli string starting at `site`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub op: String,
    pub site: usize,
    #[serde(default = "one")]
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderConfig {
    /// Disordered sites `[lo, hi]`; the whole chain when absent.
    #[serde(default)]
    pub region: Option<[usize; 2]>,
    #[serde(default)]
    pub width: f64,
    pub base_seed: u64,
    pub n_realizations: u64,
    /// Third counter slot; sweeps set it to the sweep index.
    #[serde(default)]
    pub slot: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicDrive {
    pub omega: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum PerturbationConfig {
    /// strength · op at `site`, optionally times sin(ωt + φ).
    Field {
        op: String,
        site: usize,
        strength: f64,
        #[serde(default)]
        drive: Option<HarmonicDrive>,
    },
    /// GOE matrix added on `support`.
    Grain {
        support: [usize; 2],
        #[serde(default = "normalized")]
        scale: GrainScale,
    },
    /// Model bonds inside `support` replaced by a GOE matrix.
    Avalanche {
        support: [usize; 2],
        #[serde(default = "normalized")]
        scale: GrainScale,
    },
    /// strength · op · ramp(t/τ)
    Adiabatic {
        op: String,
        site: usize,
        strength: f64,
        tau: f64,
        #[serde(default = "linear")]
        ramp: Ramp,
    },
    /// strength · op · waveform(t mod T / T)
    Periodic {
        op: String,
        site: usize,
        strength: f64,
        period: f64,
        #[serde(default = "cosine")]
        waveform: Waveform,
    },
}

impl PerturbationConfig {
    pub fn support(&self) -> SiteInterval {
        match self {
            PerturbationConfig::Field { op, site, .. }
            | PerturbationConfig::Adiabatic { op, site, .. }
            | PerturbationConfig::Periodic { op, site, .. } => {
                SiteInterval { lo: *site, hi: site + op.len().max(1) - 1 }
            }
            PerturbationConfig::Grain { support, .. } | PerturbationConfig::Avalanche { support, .. } => {
                SiteInterval { lo: support[0], hi: support[1] }
            }
        }
    }

    fn op(&self) -> Option<&str> {
        match self {
            PerturbationConfig::Field { op, .. }
            | PerturbationConfig::Adiabatic { op, .. }
            | PerturbationConfig::Periodic { op, .. } => Some(op),
            _ => None,
        }
    }
}

/// A Pauli string placed at `site`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub op: String,
    pub site: usize,
}

impl OperatorSpec {
    pub fn build(&self) -> lrlab_core::Result<LocalOperator> {
        LocalOperator::pauli_string(self.site, &self.op)
    }
}

/// The same Pauli string at several positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSet {
    pub op: String,
    pub sites: Vec<usize>,
}

impl ProbeSet {
    pub fn build(&self) -> lrlab_core::Result<Vec<LocalOperator>> {
        self.sites.iter().map(|&s| LocalOperator::pauli_string(s, &self.op)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub a: OperatorSpec,
    pub b: ProbeSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGrid {
    List(Vec<f64>),
    /// `count` evenly spaced points from `start` to `stop` inclusive.
    Range { start: f64, stop: f64, count: usize },
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        match self {
            TimeGrid::List(v) => v.clone(),
            TimeGrid::Range { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub times: TimeGrid,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Free fermions when the scan qualifies, dense otherwise.
    #[default]
    Auto,
    Dense,
    FreeFermion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplittingConfig {
    pub cut: usize,
    pub half_width: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "mean")]
    pub statistic: Statistic,
    /// Multiplier on the fitted K.
    #[serde(default = "two")]
    pub safety: f64,
    #[serde(default = "noise_floor")]
    pub noise_floor: f64,
    /// Bounds to check; an empty list picks the mode's default.
    #[serde(default)]
    pub bounds: Vec<BoundKind>,
    /// Free-region fraction n of the full bound.
    #[serde(default = "one")]
    pub free_region_n: f64,
    #[serde(default)]
    pub engine: Engine,
    /// Extra restriction-error scans at these radii.
    #[serde(default)]
    pub restriction_radii: Vec<usize>,
    #[serde(default)]
    pub splitting: Option<SplittingConfig>,
    /// Proof checks run in proofcheck mode.
    #[serde(default = "all_checks")]
    pub checks: Vec<ProofCheckKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProofCheckKind {
    InteractionPicture,
    CommutingFactorization,
    Duhamel,
    Splitting,
    RestrictionEquivalence,
    Assembly,
}

impl ProofCheckKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProofCheckKind::InteractionPicture => "interaction_picture",
            ProofCheckKind::CommutingFactorization => "commuting_factorization",
            ProofCheckKind::Duhamel => "duhamel",
            ProofCheckKind::Splitting => "splitting",
            ProofCheckKind::RestrictionEquivalence => "restriction_equivalence",
            ProofCheckKind::Assembly => "assembly",
        }
    }

    pub const ALL: [ProofCheckKind; 6] = [
        ProofCheckKind::InteractionPicture,
        ProofCheckKind::CommutingFactorization,
        ProofCheckKind::Duhamel,
        ProofCheckKind::Splitting,
        ProofCheckKind::RestrictionEquivalence,
        ProofCheckKind::Assembly,
    ];
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            statistic: Statistic::Mean,
            safety: 2.0,
            noise_floor: NOISE_FLOOR,
            bounds: Vec::new(),
            free_region_n: 1.0,
            engine: Engine::Auto,
            restriction_radii: Vec::new(),
            splitting: None,
            checks: all_checks(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, formats: all_formats() }
    }
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn default_tol() -> f64 {
    1e-8
}
fn noise_floor() -> f64 {
    NOISE_FLOOR
}
fn mean() -> Statistic {
    Statistic::Mean
}
fn normalized() -> GrainScale {
    GrainScale::Normalized
}
fn linear() -> Ramp {
    Ramp::Linear
}
fn cosine() -> Waveform {
    Waveform::Cosine
}
fn all_checks() -> Vec<ProofCheckKind> {
    ProofCheckKind::ALL.to_vec()
}
fn all_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.into(), source })?;
        let cfg = Self::from_json(&text).map_err(|source| HarnessError::Json { path: path.into(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON (sorted keys, no whitespace, defaults
    /// filled in) of every block except `output`.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("output");
        }
        let canonical = serde_json::to_string(&value).expect("value serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.schedule.times.points()
    }

    pub fn disorder_region(&self) -> SiteInterval {
        match self.disorder.region {
            Some([lo, hi]) => SiteInterval { lo, hi },
            None => SiteInterval { lo: 0, hi: self.model.n_sites.saturating_sub(1) },
        }
    }

    /// Bounds checked in this mode.
    pub fn bounds(&self) -> Vec<BoundKind> {
        if !self.analysis.bounds.is_empty() {
            return self.analysis.bounds.clone();
        }
        match self.mode {
            Mode::Lightcone => vec![BoundKind::Unperturbed],
            Mode::Perturbed | Mode::Dual => vec![BoundKind::Full],
            Mode::Avalanche => vec![BoundKind::Single],
            Mode::Proofcheck => vec![BoundKind::Splitting],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenario_id.is_empty() || self.scenario_id.contains([',', '"', '\n']) {
            return Err(invalid("scenario_id", "must be non-empty and free of commas, quotes and newlines"));
        }
        let n = self.model.n_sites;
        if n == 0 {
            return Err(invalid("model.n_sites", "must be at least 1"));
        }
        if !self.model.delta.is_finite() {
            return Err(invalid("model.delta", "must be finite"));
        }
        let in_chain = |iv: SiteInterval| iv.lo <= iv.hi && iv.hi < n;
        match self.model.kind {
            ModelKind::Xxz if !self.model.terms.is_empty() => {
                return Err(invalid("model.terms", "only custom models take explicit terms"));
            }
            ModelKind::Custom if self.model.terms.is_empty() => {
                return Err(invalid("model.terms", "a custom model needs at least one term"));
            }
            _ => {}
        }
        for (i, t) in self.model.terms.iter().enumerate() {
            let path = format!("model.terms[{i}]");
            check_op(&format!("{path}.op"), &t.op, t.site, n)?;
            if !t.coeff.is_finite() {
                return Err(invalid(format!("{path}.coeff"), "must be finite"));
            }
        }

        let d = &self.disorder;
        if d.n_realizations == 0 {
            return Err(invalid("disorder.n_realizations", "must be at least 1"));
        }
        if !(d.width >= 0.0 && d.width.is_finite()) {
            return Err(invalid("disorder.width", "must be finite and >= 0"));
        }
        if !in_chain(self.disorder_region()) {
            return Err(invalid("disorder.region", format!("must be [lo, hi] with lo <= hi < {n}")));
        }

        for (i, p) in self.perturbations.iter().enumerate() {
            let path = format!("perturbations[{i}]");
            if let Some(op) = p.op() {
                check_op(&format!("{path}.op"), op, p.support().lo, n)?;
            } else if !in_chain(p.support()) {
                return Err(invalid(format!("{path}.support"), format!("must be [lo, hi] with lo <= hi < {n}")));
            }
            match p {
                PerturbationConfig::Field { strength, drive, .. } => {
                    finite(&format!("{path}.strength"), *strength)?;
                    if let Some(dr) = drive {
                        finite(&format!("{path}.drive.omega"), dr.omega)?;
                        finite(&format!("{path}.drive.phase"), dr.phase)?;
                    }
                }
                PerturbationConfig::Adiabatic { strength, tau, .. } => {
                    finite(&format!("{path}.strength"), *strength)?;
                    positive(&format!("{path}.tau"), *tau)?;
                }
                PerturbationConfig::Periodic { strength, period, .. } => {
                    finite(&format!("{path}.strength"), *strength)?;
                    positive(&format!("{path}.period"), *period)?;
                }
                PerturbationConfig::Grain { scale, .. } | PerturbationConfig::Avalanche { scale, .. } => {
                    if let GrainScale::Sigma(s) = scale {
                        positive(&format!("{path}.scale.sigma"), *s)?;
                    }
                }
            }
        }

        check_op("probes.a.op", &self.probes.a.op, self.probes.a.site, n)?;
        if self.probes.b.sites.is_empty() {
            return Err(invalid("probes.b.sites", "needs at least one site"));
        }
        for (i, &s) in self.probes.b.sites.iter().enumerate() {
            check_op(&format!("probes.b.sites[{i}]"), &self.probes.b.op, s, n)?;
        }

        let times = self.times();
        if times.is_empty() {
            return Err(invalid("schedule.times", "needs at least one time"));
        }
        if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("schedule.times", "times must be finite and >= 0"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("schedule.times", "times must be strictly increasing"));
        }
        positive("schedule.tol", self.schedule.tol)?;

        let a = &self.analysis;
        positive("analysis.safety", a.safety)?;
        positive("analysis.noise_floor", a.noise_floor)?;
        if !(a.free_region_n >= 1.0 && a.free_region_n.is_finite()) {
            return Err(invalid("analysis.free_region_n", "must be finite and >= 1"));
        }
        if a.restriction_radii.iter().any(|&r| r >= n) {
            return Err(invalid("analysis.restriction_radii", format!("radii must be below {n}")));
        }
        if a.engine == Engine::FreeFermion && !self.free_fermion_ok() {
            return Err(invalid(
                "analysis.engine",
                "free fermions need an unperturbed xxz model with delta = 0 and sigma^z probes",
            ));
        }
        self.validate_mode()
    }

    /// Whether the scan is an unperturbed XX chain with σ^z probes.
    pub fn free_fermion_ok(&self) -> bool {
        self.model.kind == ModelKind::Xxz
            && self.model.delta == 0.0
            && self.probes.a.op == "z"
            && self.probes.b.op == "z"
            && self.analysis.restriction_radii.is_empty()
    }

    fn validate_mode(&self) -> Result<()> {
        let a = self.probes.a.build().map_err(|e| invalid("probes.a", e.to_string()))?.support();
        let bs: Vec<SiteInterval> =
            self.probes.b.build().map_err(|e| invalid("probes.b", e.to_string()))?.iter().map(|b| b.support()).collect();
        for (i, b) in bs.iter().enumerate() {
            if a.distance(b) == 0 {
                return Err(invalid(format!("probes.b.sites[{i}]"), "B must not overlap A"));
            }
        }
        let bounds = self.bounds();
        match self.mode {
            Mode::Lightcone => {
                if bounds.iter().any(|b| *b != BoundKind::Unperturbed) {
                    return Err(invalid("analysis.bounds", "lightcone mode checks only the unperturbed bound"));
                }
            }
            Mode::Perturbed | Mode::Dual => {
                if self.mode == Mode::Perturbed && self.perturbations.is_empty() {
                    return Err(invalid("perturbations", "perturbed mode needs at least one perturbation"));
                }
                if self.mode == Mode::Dual {
                    if self.disorder.region.is_none() || self.disorder_region() == (SiteInterval { lo: 0, hi: self.model.n_sites - 1 }) {
                        return Err(invalid("disorder.region", "dual mode needs disorder on a proper sub-region"));
                    }
                    if self.model.kind != ModelKind::Xxz {
                        return Err(invalid("model.kind", "dual mode rewrites an xxz model"));
                    }
                    if !self.perturbations.is_empty() {
                        return Err(invalid("perturbations", "dual mode derives its perturbations from the disorder"));
                    }
                }
                for (k, bound) in bounds.iter().enumerate() {
                    if !matches!(bound, BoundKind::Full | BoundKind::Far) {
                        return Err(invalid(format!("analysis.bounds[{k}]"), "perturbed scenarios check full or far bounds"));
                    }
                }
                let supports = self.perturbation_supports();
                for (i, b) in bs.iter().enumerate() {
                    for bound in &bounds {
                        check_geometry(*bound, a, *b, &supports, self.analysis.free_region_n)
                            .map_err(|m| invalid(format!("probes.b.sites[{i}]"), m))?;
                    }
                }
            }
            Mode::Avalanche => {
                let single = matches!(
                    self.perturbations.as_slice(),
                    [PerturbationConfig::Grain { .. }] | [PerturbationConfig::Avalanche { .. }]
                );
                if !single {
                    return Err(invalid("perturbations", "avalanche mode needs exactly one grain or avalanche term"));
                }
                if bounds != [BoundKind::Single] {
                    return Err(invalid("analysis.bounds", "avalanche mode checks the single-perturbation bound"));
                }
                let h = self.perturbations[0].support();
                for (i, b) in bs.iter().enumerate() {
                    if h.distance(b) == 0 {
                        return Err(invalid(format!("probes.b.sites[{i}]"), "B must not overlap the grain"));
                    }
                }
            }
            Mode::Proofcheck => {
                let Some(s) = self.analysis.splitting else {
                    return Err(invalid("analysis.splitting", "proofcheck mode needs a cut and half-width"));
                };
                if s.cut + 1 >= self.model.n_sites {
                    return Err(invalid("analysis.splitting.cut", "the cut must leave sites on its right"));
                }
                for (i, p) in self.perturbations.iter().enumerate() {
                    let sup = p.support();
                    if !(sup.hi + s.half_width < s.cut || sup.lo > s.cut + s.half_width) {
                        return Err(invalid(format!("perturbations[{i}]"), "intersects the free region around the cut"));
                    }
                }
                if self.model.n_sites > lrlab_core::proofcheck::MAX_CHECK_SITES {
                    return Err(invalid("model.n_sites", "proof checks are capped at 10 sites"));
                }
                if bounds != [BoundKind::Splitting] {
                    return Err(invalid("analysis.bounds", "proofcheck mode checks the splitting bound"));
                }
            }
        }
        Ok(())
    }

    /// Supports of all perturbations, including the undo terms of dual mode.
    pub fn perturbation_supports(&self) -> Vec<SiteInterval> {
        if self.mode == Mode::Dual {
            let region = self.disorder_region();
            return (0..self.model.n_sites).filter(|&j| !region.contains(j)).map(SiteInterval::site).collect();
        }
        self.perturbations.iter().map(|p| p.support()).collect()
    }
}

/// Preconditions of the perturbed bounds for one (A, B) pair.
pub fn check_geometry(
    bound: BoundKind,
    a: SiteInterval,
    b: SiteInterval,
    supports: &[SiteInterval],
    n: f64,
) -> std::result::Result<(), String> {
    let d = a.distance(&b);
    match bound {
        BoundKind::Full => {
            // Longest run of perturbation-free sites strictly between A and B.
            let (lo, hi) = if a.hi < b.lo { (a.hi + 1, b.lo) } else { (b.hi + 1, a.lo) };
            let (mut best, mut run) = (0usize, 0usize);
            for j in lo..hi {
                if supports.iter().any(|s| s.contains(j)) {
                    run = 0;
                } else {
                    run += 1;
                    best = best.max(run);
                }
            }
            let need = ((d as f64 / n).ceil() as usize).saturating_sub(1);
            if best < need {
                return Err(format!("free region between A and B has {best} sites, needs {need} (dist {d}, n {n})"));
            }
            Ok(())
        }
        BoundKind::Far => match supports.iter().map(|s| s.distance(&b)).min() {
            Some(m) if m < d => Err(format!("a perturbation sits at distance {m} < dist(A,B) = {d} from B")),
            _ => Ok(()),
        },
        _ => Ok(()),
    }
}

fn check_op(path: &str, op: &str, site: usize, n: usize) -> Result<()> {
    if op.is_empty() || !op.chars().all(|c| matches!(c, 'i' | 'x' | 'y' | 'z')) {
        return Err(invalid(path, format!("`{op}` is not a Pauli string over i, x, y, z")));
    }
    if site + op.len() > n {
        return Err(invalid(path, format!("`{op}` at site {site} runs past the {n}-site chain")));
    }
    Ok(())
}

fn finite(path: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, "must be finite"))
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, "must be positive and finite"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ScenarioConfig {
        ScenarioConfig::from_json(
            r#"{
                "scenario_id": "t",
                "model": {"kind": "xxz", "n_sites": 4},
                "disorder": {"width": 1.0, "base_seed": 3, "n_realizations": 2},
                "probes": {"a": {"op": "z", "site": 0}, "b": {"op": "z", "sites": [2, 3]}},
                "schedule": {"times": {"start": 0.0, "stop": 1.0, "count": 3}}
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_and_grid() {
        let c = base();
        c.validate().unwrap();
        assert_eq!(c.times(), vec![0.0, 0.5, 1.0]);
        assert_eq!(c.analysis.safety, 2.0);
        assert_eq!(c.bounds(), vec![BoundKind::Unperturbed]);
    }

    #[test]
    fn hash_ignores_output_and_tracks_physics() {
        let c = base();
        let mut d = c.clone();
        d.output.dir = Some("elsewhere".into());
        assert_eq!(c.hash(), d.hash());
        d.disorder.width = 1.5;
        assert_ne!(c.hash(), d.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn validation_reports_field_paths() {
        let mut c = base();
        c.disorder.n_realizations = 0;
        match c.validate() {
            Err(HarnessError::Validation { path, .. }) => assert_eq!(path, "disorder.n_realizations"),
            other => panic!("{other:?}"),
        }
        let mut c = base();
        c.probes.b.sites = vec![1, 7];
        match c.validate() {
            Err(HarnessError::Validation { path, .. }) => assert_eq!(path, "probes.b.sites[1]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn full_bound_geometry() {
        let a = SiteInterval::site(0);
        let b = SiteInterval::site(6);
        assert!(check_geometry(BoundKind::Full, a, b, &[SiteInterval::site(8)], 1.0).is_ok());
        assert!(check_geometry(BoundKind::Full, a, b, &[SiteInterval::site(3)], 1.0).is_err());
        // n = 2 asks for ⌈6/2⌉ − 1 = 2 free sites; sites 4 and 5 are free.
        assert!(check_geometry(BoundKind::Full, a, b, &[SiteInterval::site(3)], 2.0).is_ok());
        assert!(check_geometry(BoundKind::Far, a, b, &[SiteInterval::site(3)], 1.0).is_err());
        assert!(check_geometry(BoundKind::Far, a, SiteInterval::site(3), &[SiteInterval::site(9)], 1.0).is_ok());
    }
}
