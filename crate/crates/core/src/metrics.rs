//! Measured lightcone quantities, bound evaluators and lightcone fits.

use std::collections::BTreeMap;
use std::sync::Arc;

use faer::linalg::solvers::SolveLstsq;
use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::lattice::{Lattice, SiteInterval};
use crate::models::{Hamiltonian, PerturbationTerm};
use crate::operator::{commutator_norm, embed, restrict, spectral_norm, LocalOperator};
use crate::propagation::{evolve_full, Propagator, TimeOrderedOptions};
use crate::{Error, Result};

/// Values below this are indistinguishable from round-off and are left out
/// of log-space fits.
pub const NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Commutator,
    RestrictionError,
    SplittingError,
    Entropy,
}

impl RecordKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RecordKind::Commutator => "commutator",
            RecordKind::RestrictionError => "restriction_error",
            RecordKind::SplittingError => "splitting_error",
            RecordKind::Entropy => "entropy",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "commutator" => Some(RecordKind::Commutator),
            "restriction_error" => Some(RecordKind::RestrictionError),
            "splitting_error" => Some(RecordKind::SplittingError),
            "entropy" => Some(RecordKind::Entropy),
            _ => None,
        }
    }
}

/// One measured point. `realization` is `None` for aggregated records, whose
/// `value` is the ensemble statistic and `stderr` its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub scenario_id: String,
    pub kind: RecordKind,
    pub realization: Option<u64>,
    pub d: usize,
    pub t: f64,
    pub value: f64,
    pub stderr: Option<f64>,
    pub a_support: SiteInterval,
    pub b_support: SiteInterval,
}

/// Labels attached to every record a scan produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordMeta {
    pub scenario_id: String,
    pub realization: Option<u64>,
}

impl RecordMeta {
    pub fn new(scenario_id: impl Into<String>, realization: Option<u64>) -> Self {
        Self { scenario_id: scenario_id.into(), realization }
    }

    pub fn record(&self, kind: RecordKind, d: usize, t: f64, value: f64, a: SiteInterval, b: SiteInterval) -> ScanRecord {
        ScanRecord {
            scenario_id: self.scenario_id.clone(),
            kind,
            realization: self.realization,
            d,
            t,
            value,
            stderr: None,
            a_support: a,
            b_support: b,
        }
    }
}

/// ‖[W(t)† a W(t), b]‖ for every b and t, where W is e^{−iHt} without
/// perturbations and the full evolution of H + Σ h_j(t) otherwise.
pub fn commutator_profile(
    h: &Hamiltonian,
    a: &LocalOperator,
    bs: &[LocalOperator],
    times: &[f64],
    perturbations: &[PerturbationTerm],
    opts: &TimeOrderedOptions,
    meta: &RecordMeta,
) -> Result<Vec<ScanRecord>> {
    let lattice = h.lattice();
    let a_global = embed(a, &lattice)?;
    let b_globals = bs.iter().map(|b| embed(b, &lattice)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(times.len() * bs.len());
    let mut push = |t: f64, at: &crate::GlobalOperator| -> Result<()> {
        for (b, bg) in bs.iter().zip(&b_globals) {
            let v = commutator_norm(at, bg)?;
            out.push(meta.record(RecordKind::Commutator, a.support().distance(&b.support()), t, v, a.support(), b.support()));
        }
        Ok(())
    };
    if perturbations.is_empty() {
        let frame = Propagator::new(h)?.frame(&a_global)?;
        for &t in times {
            push(t, &frame.at(t))?;
        }
    } else {
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&i, &j| times[i].total_cmp(&times[j]));
        let sorted: Vec<f64> = order.iter().map(|&i| times[i]).collect();
        let evolutions = evolve_full(h, perturbations, &sorted, opts)?;
        let mut evolved = vec![None; times.len()];
        for (slot, w) in order.iter().zip(evolutions) {
            evolved[*slot] = Some(a_global.conjugated_by(&w)?);
        }
        for (&t, at) in times.iter().zip(evolved) {
            push(t, &at.expect("every time evolved"))?;
        }
    }
    Ok(out)
}

/// ‖A(t) − (A(t))_{B_r(A)}‖ for every radius r and time t, with the ball
/// clipped to the lattice.
pub fn restriction_scan(
    prop: &Propagator,
    a: &LocalOperator,
    radii: &[usize],
    times: &[f64],
    meta: &RecordMeta,
) -> Result<Vec<ScanRecord>> {
    let lattice = prop.lattice();
    let frame = prop.frame(&embed(a, &lattice)?)?;
    let mut out = Vec::with_capacity(radii.len() * times.len());
    for &t in times {
        let at = frame.at(t);
        for &r in radii {
            let ball = a.support().ball(r, &lattice);
            let v = spectral_norm(&at.sub(&restrict(&at, ball)?)?)?;
            out.push(meta.record(RecordKind::RestrictionError, r, t, v, a.support(), ball));
        }
    }
    Ok(out)
}

pub fn restriction_error(prop: &Propagator, a: &LocalOperator, radius: usize, t: f64, meta: &RecordMeta) -> Result<ScanRecord> {
    Ok(restriction_scan(prop, a, &[radius], &[t], meta)?.remove(0))
}

/// Ensemble statistic used when aggregating realizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Mean,
    Max,
}

type CellKey = (String, RecordKind, usize, u64, SiteInterval, SiteInterval);

fn cell_key(r: &ScanRecord) -> CellKey {
    (r.scenario_id.clone(), r.kind, r.d, r.t.to_bits(), r.a_support, r.b_support)
}

/// Reduces per-realization records to one record per (scenario, kind, d, t,
/// supports) cell. Within a cell values are combined in realization order,
/// so the result does not depend on the order of `records`.
pub fn aggregate(records: &[ScanRecord], statistic: Statistic) -> Vec<ScanRecord> {
    let mut cells: BTreeMap<CellKey, Vec<&ScanRecord>> = BTreeMap::new();
    for r in records {
        cells.entry(cell_key(r)).or_default().push(r);
    }
    let mut out = Vec::with_capacity(cells.len());
    for (_, mut members) in cells {
        members.sort_by_key(|r| r.realization);
        let n = members.len();
        let values: Vec<f64> = members.iter().map(|r| r.value).collect();
        let (value, stderr) = match statistic {
            Statistic::Mean => {
                let mean = values.iter().sum::<f64>() / n as f64;
                let stderr = (n >= 2).then(|| {
                    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                    (var / n as f64).sqrt()
                });
                (mean, stderr)
            }
            Statistic::Max => (values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)), None),
        };
        let first = members[0];
        out.push(ScanRecord { realization: None, value, stderr, ..first.clone() });
    }
    out.sort_by(|x, y| {
        (x.kind, &x.scenario_id, x.d, x.a_support, x.b_support)
            .cmp(&(y.kind, &y.scenario_id, y.d, y.a_support, y.b_support))
            .then(x.t.total_cmp(&y.t))
    });
    out
}

/// Runs `realization` for indices 0..n and aggregates; returns (raw, aggregated).
pub fn disorder_average<F>(n_realizations: u64, statistic: Statistic, mut realization: F) -> Result<(Vec<ScanRecord>, Vec<ScanRecord>)>
where
    F: FnMut(u64) -> Result<Vec<ScanRecord>>,
{
    if n_realizations == 0 {
        return Err(Error::Parameter("at least one realization is required".into()));
    }
    let mut raw = Vec::new();
    for i in 0..n_realizations {
        raw.extend(realization(i)?);
    }
    let agg = aggregate(&raw, statistic);
    Ok((raw, agg))
}

/// Time dependence f(t) of a lightcone bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "shape")]
pub enum FShape {
    /// t^β
    Power { beta: f64 },
    /// e^{vt/ξ}
    Exponential { v: f64 },
    Constant,
}

/// Constants (K, ξ, n, f) of a lightcone bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub k: f64,
    pub xi: f64,
    pub n: f64,
    pub f: FShape,
}

impl BoundParams {
    pub fn new(k: f64, xi: f64, n: f64, f: FShape) -> Result<Self> {
        let p = Self { k, xi, n, f };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::Parameter(format!("K must be positive, got {}", self.k)));
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return Err(Error::Parameter(format!("xi must be positive, got {}", self.xi)));
        }
        if !(self.n >= 1.0 && self.n.is_finite()) {
            return Err(Error::Parameter(format!("n must be >= 1, got {}", self.n)));
        }
        match self.f {
            FShape::Power { beta } if !(beta >= 0.0 && beta.is_finite()) => {
                Err(Error::Parameter(format!("f = t^beta must be non-decreasing, got beta = {beta}")))
            }
            FShape::Exponential { v } if !(v >= 0.0 && v.is_finite()) => {
                Err(Error::Parameter(format!("f = e^(vt/xi) must be non-decreasing, got v = {v}")))
            }
            _ => Ok(()),
        }
    }

    pub fn f(&self, t: f64) -> f64 {
        match self.f {
            FShape::Power { beta } => {
                if beta == 0.0 {
                    1.0
                } else {
                    t.max(0.0).powf(beta)
                }
            }
            FShape::Exponential { v } => (v * t / self.xi).exp(),
            FShape::Constant => 1.0,
        }
    }

    /// ∫_0^t f(s) h(s) ds
    pub fn integral_f_h(&self, t: f64, envelope: &Envelope) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match envelope {
            Envelope::Constant(h) => {
                let int_f = match self.f {
                    FShape::Power { beta } => t.powf(beta + 1.0) / (beta + 1.0),
                    FShape::Exponential { v } if v > 0.0 => self.xi / v * ((v * t / self.xi).exp() - 1.0),
                    FShape::Exponential { .. } | FShape::Constant => t,
                };
                h * int_f
            }
            Envelope::Function(h) => adaptive_simpson(&|s| self.f(s) * h(s), 0.0, t, 1e-13, 48),
        }
    }
}

/// h_max(t), the bound on the perturbation norms.
#[derive(Clone)]
pub enum Envelope {
    Constant(f64),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Envelope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Envelope::Constant(h) => write!(f, "Envelope::Constant({h})"),
            Envelope::Function(_) => write!(f, "Envelope::Function(..)"),
        }
    }
}

impl Envelope {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Envelope::Constant(h) => *h,
            Envelope::Function(h) => h(t),
        }
    }

    /// max_j envelope_j(t) over a set of perturbations; constant when every
    /// term is time independent.
    pub fn from_terms(terms: &[PerturbationTerm]) -> Self {
        if terms.iter().all(|p| p.is_constant()) {
            return Envelope::Constant(terms.iter().fold(0.0, |m, p| m.max(p.base_norm())));
        }
        let terms = terms.to_vec();
        Envelope::Function(Arc::new(move |t| terms.iter().fold(0.0, |m, p| m.max(p.envelope(t)))))
    }

    /// Pointwise maximum of several envelopes (e.g. over realizations).
    pub fn max_of(envelopes: Vec<Envelope>) -> Self {
        if envelopes.iter().all(|e| matches!(e, Envelope::Constant(_))) {
            return Envelope::Constant(envelopes.iter().fold(0.0, |m, e| m.max(e.at(0.0))));
        }
        Envelope::Function(Arc::new(move |t| envelopes.iter().fold(0.0, |m, e| m.max(e.at(t)))))
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    simpson_step(f, a, fa, b, fb, m, fm, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, m: f64, fm: f64, whole: f64, tol: f64, depth: usize) -> f64 {
    let (left, lm, flm) = simpson(f, a, fa, m, fm);
    let (right, rm, frm) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol.max(f64::EPSILON * (left + right).abs()) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
}

/// Which right-hand side to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// K‖A‖‖B‖ e^{−d/ξ} f(t)
    Unperturbed,
    /// 2K h‖B‖ e^{−d/ξ} (t^β + 8h t^{β+1}/(β+1)), power-law f and constant h only.
    SingleSlow,
    /// 2K‖A‖‖B‖ e^{−(1−1/2n)d/ξ} f(t) + 16K‖A‖‖B‖ξ e^{−d/(2nξ)} ∫f h
    Full,
    /// 2K‖A‖‖B‖ e^{−d/ξ} f(t) + 16K‖A‖‖B‖ξ e^{−d_min/ξ} ∫f h
    Far,
    /// 2K h(t)‖B‖ e^{−d/ξ} f(t) + 16K h(t)‖B‖ e^{−d/ξ} ∫f h
    Single,
    /// 4Kξ e^{−w/ξ} ∫f h, with d read as the half-width w of the free region.
    Splitting,
    /// K‖A‖ f(t) e^{−a/ξ}, with d read as the restriction radius a.
    Restriction,
}

impl BoundKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundKind::Unperturbed => "unperturbed",
            BoundKind::SingleSlow => "single_slow",
            BoundKind::Full => "full",
            BoundKind::Far => "far",
            BoundKind::Single => "single",
            BoundKind::Splitting => "splitting",
            BoundKind::Restriction => "restriction",
        }
    }
}

/// Geometry and norms a right-hand side may need.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundGeometry {
    pub distance: f64,
    pub norm_a: Option<f64>,
    pub norm_b: Option<f64>,
    pub d_min: Option<f64>,
}

fn need(v: Option<f64>, what: &str, kind: BoundKind) -> Result<f64> {
    v.ok_or_else(|| Error::Parameter(format!("bound '{}' needs {what}", kind.as_str())))
}

/// Evaluates the chosen right-hand side at time t.
pub fn evaluate_bound(kind: BoundKind, params: &BoundParams, geom: &BoundGeometry, t: f64, envelope: &Envelope) -> Result<f64> {
    params.validate()?;
    let (k, xi, d) = (params.k, params.xi, geom.distance);
    let value = match kind {
        BoundKind::Unperturbed => {
            let (na, nb) = (need(geom.norm_a, "norm_a", kind)?, need(geom.norm_b, "norm_b", kind)?);
            k * na * nb * (-d / xi).exp() * params.f(t)
        }
        BoundKind::SingleSlow => {
            let nb = need(geom.norm_b, "norm_b", kind)?;
            let (FShape::Power { beta }, Envelope::Constant(h)) = (params.f, envelope) else {
                return Err(Error::Parameter("single_slow needs f = t^beta and a constant envelope".into()));
            };
            let tb = if beta == 0.0 { 1.0 } else { t.powf(beta) };
            2.0 * k * h * nb * (-d / xi).exp() * (tb + 8.0 * h * t.powf(beta + 1.0) / (beta + 1.0))
        }
        BoundKind::Full => {
            let (na, nb) = (need(geom.norm_a, "norm_a", kind)?, need(geom.norm_b, "norm_b", kind)?);
            let n = params.n;
            2.0 * k * na * nb * (-(1.0 - 1.0 / (2.0 * n)) * d / xi).exp() * params.f(t)
                + 16.0 * k * na * nb * xi * (-d / (2.0 * n * xi)).exp() * params.integral_f_h(t, envelope)
        }
        BoundKind::Far => {
            let (na, nb) = (need(geom.norm_a, "norm_a", kind)?, need(geom.norm_b, "norm_b", kind)?);
            let d_min = need(geom.d_min, "d_min", kind)?;
            if d_min < d {
                return Err(Error::Geometry(format!("bound 'far' needs d_min >= dist(A,B), got {d_min} < {d}")));
            }
            2.0 * k * na * nb * (-d / xi).exp() * params.f(t)
                + 16.0 * k * na * nb * xi * (-d_min / xi).exp() * params.integral_f_h(t, envelope)
        }
        BoundKind::Single => {
            let nb = need(geom.norm_b, "norm_b", kind)?;
            let h = envelope.at(t);
            2.0 * k * h * nb * (-d / xi).exp() * params.f(t)
                + 16.0 * k * h * nb * (-d / xi).exp() * params.integral_f_h(t, envelope)
        }
        BoundKind::Splitting => 4.0 * k * xi * (-d / xi).exp() * params.integral_f_h(t, envelope),
        BoundKind::Restriction => {
            let na = need(geom.norm_a, "norm_a", kind)?;
            k * na * params.f(t) * (-d / xi).exp()
        }
    };
    Ok(value)
}

/// Everything `check_bound` needs besides the records; the distance of each
/// cell is read from the record.
#[derive(Debug, Clone)]
pub struct BoundCheck {
    pub kind: BoundKind,
    pub params: BoundParams,
    pub norm_a: Option<f64>,
    pub norm_b: Option<f64>,
    pub d_min: Option<f64>,
    pub envelope: Envelope,
    /// Saturation value of the measured quantity (2‖A‖‖B‖ for commutators).
    pub trivial_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginCell {
    pub d: usize,
    pub t: f64,
    pub mean: f64,
    pub stderr: Option<f64>,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub kind: BoundKind,
    pub params: BoundParams,
    pub n_cells: usize,
    pub violations: Vec<MarginCell>,
    pub min_relative_margin: f64,
    pub uninformative_fraction: f64,
    pub tightest: Option<MarginCell>,
}

impl MarginReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Compares aggregated records against a right-hand side cell by cell. A cell
/// violates the bound when its mean exceeds the RHS by more than three
/// standard errors.
pub fn check_bound(records: &[ScanRecord], check: &BoundCheck) -> Result<MarginReport> {
    let mut violations = Vec::new();
    let mut min_rel = f64::INFINITY;
    let mut tightest: Option<MarginCell> = None;
    let mut uninformative = 0usize;
    for r in records {
        let geom = BoundGeometry { distance: r.d as f64, norm_a: check.norm_a, norm_b: check.norm_b, d_min: check.d_min };
        let rhs = evaluate_bound(check.kind, &check.params, &geom, r.t, &check.envelope)?;
        let margin = rhs - r.value;
        let cell = MarginCell { d: r.d, t: r.t, mean: r.value, stderr: r.stderr, rhs, margin };
        if margin < -3.0 * r.stderr.unwrap_or(0.0) {
            violations.push(cell.clone());
        }
        let rel = if rhs > 0.0 { margin / rhs } else if margin >= 0.0 { 0.0 } else { f64::NEG_INFINITY };
        if rel < min_rel {
            min_rel = rel;
            tightest = Some(cell);
        }
        if rhs >= check.trivial_cap {
            uninformative += 1;
        }
    }
    let n = records.len();
    Ok(MarginReport {
        kind: check.kind,
        params: check.params,
        n_cells: n,
        violations,
        min_relative_margin: if n == 0 { f64::NAN } else { min_rel },
        uninformative_fraction: if n == 0 { 0.0 } else { uninformative as f64 / n as f64 },
        tightest,
    })
}

/// Least-squares estimates of ln value = ln K + β ln t − d/ξ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub k: f64,
    pub xi: f64,
    pub beta: f64,
    pub rms_log_residual: f64,
    pub n_points: usize,
    /// Points below the noise floor.
    pub n_discarded: usize,
    /// Points at t <= 0, where ln t is undefined.
    pub n_excluded_time: usize,
}

impl FitResult {
    /// Power-law bound parameters with K scaled by `safety` and β clamped at 0.
    pub fn bound_params(&self, safety: f64) -> Result<BoundParams> {
        BoundParams::new(self.k * safety, self.xi, 1.0, FShape::Power { beta: self.beta.max(0.0) })
    }
}

pub fn fit_lightcone(records: &[ScanRecord], noise_floor: f64) -> Result<FitResult> {
    let mut pts = Vec::new();
    let (mut discarded, mut excluded) = (0usize, 0usize);
    for r in records {
        if !(r.t > 0.0) {
            excluded += 1;
        } else if !(r.value >= noise_floor) {
            discarded += 1;
        } else {
            pts.push((r.d as f64, r.t, r.value));
        }
    }
    let distinct = |f: &dyn Fn(&(f64, f64, f64)) -> f64| {
        let mut v: Vec<u64> = pts.iter().map(|p| f(p).to_bits()).collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    };
    let (nd, nt) = (distinct(&|p| p.0), distinct(&|p| p.1));
    if nd < 3 || nt < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 distances and 3 times above the noise floor, have {nd} and {nt}"
        )));
    }
    let m = pts.len();
    let design = Mat::from_fn(m, 3, |i, j| match j {
        0 => 1.0,
        1 => pts[i].1.ln(),
        _ => -pts[i].0,
    });
    let rhs = Mat::from_fn(m, 1, |i, _| pts[i].2.ln());
    let coef = design.qr().solve_lstsq(&rhs);
    let (ln_k, beta, inv_xi) = (coef[(0, 0)], coef[(1, 0)], coef[(2, 0)]);
    if !(inv_xi > 0.0) {
        return Err(Error::Fit(format!("data do not decay with distance (1/xi = {inv_xi})")));
    }
    let resid = &design * &coef - &rhs;
    let rms = (resid.norm_l2().powi(2) / m as f64).sqrt();
    Ok(FitResult {
        k: ln_k.exp(),
        xi: 1.0 / inv_xi,
        beta,
        rms_log_residual: rms,
        n_points: m,
        n_discarded: discarded,
        n_excluded_time: excluded,
    })
}

/// Solves C t_max^β = e^{d/(2ξ)} for t_max.
pub fn t_max_horizon(c: f64, beta: f64, xi: f64, d: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::UndefinedHorizon(beta));
    }
    if !(c > 0.0 && xi > 0.0) {
        return Err(Error::Parameter(format!("t_max needs C > 0 and xi > 0, got C = {c}, xi = {xi}")));
    }
    Ok(((d / (2.0 * xi)).exp() / c).powf(1.0 / beta))
}

/// Von Neumann entropy (natural log) of sites 0..=cut in a pure state.
pub fn entanglement_entropy(state: &[c64], lattice: &Lattice, cut: usize) -> Result<f64> {
    if state.len() != lattice.dim() {
        return Err(Error::Shape(format!("state has length {}, lattice dimension is {}", state.len(), lattice.dim())));
    }
    lattice.check(SiteInterval::site(cut))?;
    let norm = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Normalization(norm));
    }
    let left = lattice.block_dim(cut + 1);
    let right = lattice.dim() / left;
    if right == 1 {
        return Ok(0.0);
    }
    let m = Mat::from_fn(left, right, |i, j| state[i * right + j]);
    let svals = m.singular_values().map_err(|_| Error::Eigen)?;
    Ok(svals
        .iter()
        .map(|s| s * s)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum::<f64>()
        .max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(d: usize, t: f64, value: f64, realization: Option<u64>) -> ScanRecord {
        RecordMeta::new("s", realization).record(RecordKind::Commutator, d, t, value, SiteInterval::site(0), SiteInterval::site(d))
    }

    #[test]
    fn full_and_single_bound_arithmetic() {
        let p = BoundParams::new(1.0, 1.0, 1.0, FShape::Power { beta: 1.0 }).unwrap();
        let g = BoundGeometry { distance: 10.0, norm_a: Some(1.0), norm_b: Some(1.0), d_min: None };
        let full = evaluate_bound(BoundKind::Full, &p, &g, 1.0, &Envelope::Constant(1.0)).unwrap();
        assert!((full - 10.0 * (-5f64).exp()).abs() <= 1e-12);

        let g = BoundGeometry { distance: 5.0, norm_b: Some(1.0), ..Default::default() };
        let single = evaluate_bound(BoundKind::Single, &p, &g, 2.0, &Envelope::Constant(1.0)).unwrap();
        let slow = evaluate_bound(BoundKind::SingleSlow, &p, &g, 2.0, &Envelope::Constant(1.0)).unwrap();
        assert!((single - 36.0 * (-5f64).exp()).abs() <= 1e-12);
        assert!((slow - single).abs() <= 1e-12);
        assert_eq!(evaluate_bound(BoundKind::Single, &p, &g, 0.0, &Envelope::Constant(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn missing_geometry_is_reported() {
        let p = BoundParams::new(1.0, 1.0, 1.0, FShape::Constant).unwrap();
        let g = BoundGeometry { distance: 1.0, ..Default::default() };
        assert!(matches!(evaluate_bound(BoundKind::Full, &p, &g, 1.0, &Envelope::Constant(1.0)), Err(Error::Parameter(_))));
        assert!(BoundParams::new(0.0, 1.0, 1.0, FShape::Constant).is_err());
        assert!(BoundParams::new(1.0, 1.0, 0.5, FShape::Constant).is_err());
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let p = BoundParams::new(1.0, 1.3, 1.0, FShape::Power { beta: 0.7 }).unwrap();
        let closed = p.integral_f_h(3.0, &Envelope::Constant(2.0));
        let numeric = p.integral_f_h(3.0, &Envelope::Function(Arc::new(|_| 2.0)));
        assert!((closed - numeric).abs() < 1e-9);
        let p = BoundParams::new(1.0, 1.3, 1.0, FShape::Exponential { v: 0.4 }).unwrap();
        let closed = p.integral_f_h(2.0, &Envelope::Constant(1.0));
        let numeric = p.integral_f_h(2.0, &Envelope::Function(Arc::new(|_| 1.0)));
        assert!((closed - numeric).abs() < 1e-11);
    }

    #[test]
    fn aggregation_is_order_independent() {
        let mut recs = vec![rec(1, 1.0, 0.5, Some(1)), rec(1, 1.0, 0.3, Some(0)), rec(2, 1.0, 0.1, Some(0))];
        let a = aggregate(&recs, Statistic::Mean);
        recs.reverse();
        let b = aggregate(&recs, Statistic::Mean);
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert!((a[0].value - 0.4).abs() < 1e-15);
        assert!(a[0].stderr.unwrap() > 0.0);
        assert!(a[1].stderr.is_none());
    }

    #[test]
    fn half_rhs_gives_half_margin() {
        let p = BoundParams::new(1.0, 1.0, 1.0, FShape::Power { beta: 1.0 }).unwrap();
        let recs: Vec<ScanRecord> = (1..4)
            .flat_map(|d| (1..4).map(move |t| (d, t as f64)))
            .map(|(d, t)| rec(d, t, 0.5 * t * (-(d as f64)).exp(), None))
            .collect();
        let check = BoundCheck {
            kind: BoundKind::Unperturbed,
            params: p,
            norm_a: Some(1.0),
            norm_b: Some(1.0),
            d_min: None,
            envelope: Envelope::Constant(0.0),
            trivial_cap: 2.0,
        };
        let report = check_bound(&recs, &check).unwrap();
        assert!(report.passed());
        assert!((report.min_relative_margin - 0.5).abs() < 1e-12);
    }

    #[test]
    fn horizon_cases() {
        assert!((t_max_horizon(1.0, 1.0, 1.0, 10.0).unwrap() - 5f64.exp()).abs() < 1e-9);
        assert!((t_max_horizon(2.0, 0.5, 1.0, 0.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(t_max_horizon(1.0, 0.0, 1.0, 1.0), Err(Error::UndefinedHorizon(_))));
    }

    #[test]
    fn entropy_examples() {
        let lat = Lattice::spins(2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let singlet = [c64::new(0.0, 0.0), c64::new(s, 0.0), c64::new(-s, 0.0), c64::new(0.0, 0.0)];
        assert!((entanglement_entropy(&singlet, &lat, 0).unwrap() - 2f64.ln()).abs() < 1e-12);
        let product = [c64::new(1.0, 0.0), c64::new(0.0, 0.0), c64::new(0.0, 0.0), c64::new(0.0, 0.0)];
        assert!(entanglement_entropy(&product, &lat, 0).unwrap().abs() < 1e-15);
        let bad = [c64::new(1.0, 0.0), c64::new(1.0, 0.0), c64::new(0.0, 0.0), c64::new(0.0, 0.0)];
        assert!(matches!(entanglement_entropy(&bad, &lat, 0), Err(Error::Normalization(_))));
    }
}
