//! Hamiltonians, perturbations, disorder ensembles and drive schedules.

use std::f64::consts::PI;

use faer::{c64, Mat};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::lattice::{Lattice, SiteInterval};
use crate::linalg;
use crate::operator::{embed, pauli, GlobalOperator, LocalOperator};
use crate::rng::{Purpose, StreamKey};
use crate::{Error, Result};

/// A sum of Hermitian local terms together with its assembled matrix.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    lattice: Lattice,
    terms: Vec<LocalOperator>,
    matrix: GlobalOperator,
}

impl Hamiltonian {
    pub fn from_terms(lattice: Lattice, terms: Vec<LocalOperator>) -> Result<Self> {
        let mut acc = linalg::zeros(lattice.dim());
        for term in &terms {
            if !term.is_hermitian() {
                return Err(Error::Parameter(format!("term on {} is not Hermitian", term.support())));
            }
            acc += embed(term, &lattice)?.matrix();
        }
        Ok(Self { lattice, terms, matrix: GlobalOperator::new(lattice, acc)? })
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn terms(&self) -> &[LocalOperator] {
        &self.terms
    }

    pub fn matrix(&self) -> &GlobalOperator {
        &self.matrix
    }

    /// This Hamiltonian plus extra Hermitian terms.
    pub fn with_terms(&self, extra: impl IntoIterator<Item = LocalOperator>) -> Result<Self> {
        let mut terms = self.terms.clone();
        terms.extend(extra);
        Self::from_terms(self.lattice, terms)
    }

    /// `H + Σ_j h_j(t)` as a global matrix.
    pub fn total_at(&self, perturbations: &[PerturbationTerm], t: f64) -> Result<GlobalOperator> {
        let mut acc = self.matrix.matrix().to_owned();
        for p in perturbations {
            acc += embed(&p.generator(t), &self.lattice)?.matrix();
        }
        GlobalOperator::new(self.lattice, acc)
    }
}

/// Nearest-neighbour bond σ^xσ^x + σ^yσ^y + Δσ^zσ^z.
pub fn xxz_bond(delta: f64) -> Mat<c64> {
    let xx = linalg::kron(pauli('x').unwrap().as_ref(), pauli('x').unwrap().as_ref());
    let yy = linalg::kron(pauli('y').unwrap().as_ref(), pauli('y').unwrap().as_ref());
    let zz = linalg::kron(pauli('z').unwrap().as_ref(), pauli('z').unwrap().as_ref());
    Mat::from_fn(4, 4, |i, j| xx[(i, j)] + yy[(i, j)] + zz[(i, j)] * delta)
}

/// Open XXZ chain Σ_j (σ^x_jσ^x_{j+1} + σ^y_jσ^y_{j+1} + Δσ^z_jσ^z_{j+1}).
pub fn build_xxz(lattice: Lattice, delta: f64) -> Result<Hamiltonian> {
    if lattice.num_sites() < 2 {
        return Err(Error::Size(format!("an XXZ chain needs at least 2 sites, got {}", lattice.num_sites())));
    }
    if lattice.local_dim() != 2 {
        return Err(Error::Parameter("the XXZ chain is defined for spin-1/2 sites".into()));
    }
    if !delta.is_finite() {
        return Err(Error::Parameter("delta must be finite".into()));
    }
    let bond = xxz_bond(delta);
    let terms = (0..lattice.num_sites() - 1)
        .map(|j| LocalOperator::spin(SiteInterval { lo: j, hi: j + 1 }, bond.clone()))
        .collect::<Result<Vec<_>>>()?;
    Hamiltonian::from_terms(lattice, terms)
}

/// Piecewise-linear table on increasing abscissae, clamped at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Table {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(Error::Parameter("table needs equally many (>= 1) abscissae and values".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) || xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::Parameter("table abscissae must be finite and strictly increasing".into()));
        }
        Ok(Self { xs, ys })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let k = self.xs.partition_point(|&v| v <= x);
        let (x0, x1, y0, y1) = (self.xs[k - 1], self.xs[k], self.ys[k - 1], self.ys[k]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    fn max_abs(&self) -> f64 {
        self.ys.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ramp {
    /// clamp(x, 0, 1)
    Linear,
    Table(Table),
}

impl Ramp {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Ramp::Linear => x.clamp(0.0, 1.0),
            Ramp::Table(t) => t.eval(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    /// cos(2πx) over one period.
    Cosine,
    Constant,
    /// Values over one period, abscissae in [0, 1).
    Table(Table),
}

impl Waveform {
    fn eval(&self, phase: f64) -> f64 {
        match self {
            Waveform::Cosine => (2.0 * PI * phase).cos(),
            Waveform::Constant => 1.0,
            Waveform::Table(t) => t.eval(phase),
        }
    }

    fn max_abs(&self) -> f64 {
        match self {
            Waveform::Cosine | Waveform::Constant => 1.0,
            Waveform::Table(t) => t.max_abs(),
        }
    }
}

/// One scalar factor of a time profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ProfileFactor {
    /// ramp(t / tau)
    Adiabatic { tau: f64, ramp: Ramp },
    /// waveform((t mod period) / period)
    Periodic { period: f64, waveform: Waveform },
    /// sin(omega t + phase)
    Harmonic { omega: f64, phase: f64 },
}

impl ProfileFactor {
    fn value(&self, t: f64) -> f64 {
        match self {
            ProfileFactor::Adiabatic { tau, ramp } => ramp.eval(t / tau),
            ProfileFactor::Periodic { period, waveform } => waveform.eval((t / period).rem_euclid(1.0)),
            ProfileFactor::Harmonic { omega, phase } => (omega * t + phase).sin(),
        }
    }

    /// Upper bound on |value(t)|.
    fn bound(&self, t: f64) -> f64 {
        match self {
            ProfileFactor::Periodic { waveform, .. } => waveform.max_abs(),
            other => other.value(t).abs(),
        }
    }
}

/// Real scalar multiplying a perturbation's base operator; the product of its
/// factors (the empty product is the constant 1).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeProfile {
    pub factors: Vec<ProfileFactor>,
}

impl TimeProfile {
    pub fn constant() -> Self {
        Self::default()
    }

    pub fn harmonic(omega: f64, phase: f64) -> Self {
        Self { factors: vec![ProfileFactor::Harmonic { omega, phase }] }
    }

    pub fn is_constant(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn value(&self, t: f64) -> f64 {
        self.factors.iter().map(|f| f.value(t)).product()
    }

    pub fn bound(&self, t: f64) -> f64 {
        self.factors.iter().map(|f| f.bound(t)).product()
    }
}

/// h(t) = profile(t) · base, with a fixed support.
#[derive(Debug, Clone)]
pub struct PerturbationTerm {
    base: LocalOperator,
    base_norm: f64,
    profile: TimeProfile,
}

impl PerturbationTerm {
    pub fn new(base: LocalOperator, profile: TimeProfile) -> Result<Self> {
        if !base.is_hermitian() {
            return Err(Error::Parameter(format!("perturbation on {} is not Hermitian", base.support())));
        }
        let base_norm = base.norm()?;
        Ok(Self { base, base_norm, profile })
    }

    pub fn constant(base: LocalOperator) -> Result<Self> {
        Self::new(base, TimeProfile::constant())
    }

    pub fn support(&self) -> SiteInterval {
        self.base.support()
    }

    pub fn base(&self) -> &LocalOperator {
        &self.base
    }

    pub fn base_norm(&self) -> f64 {
        self.base_norm
    }

    pub fn profile(&self) -> &TimeProfile {
        &self.profile
    }

    pub fn is_constant(&self) -> bool {
        self.profile.is_constant()
    }

    pub fn generator(&self, t: f64) -> LocalOperator {
        self.base.scaled(self.profile.value(t))
    }

    /// h_max(t): an upper bound on ‖generator(t)‖.
    pub fn envelope(&self, t: f64) -> f64 {
        self.profile.bound(t) * self.base_norm
    }

    fn with_factor(&self, factor: ProfileFactor) -> Self {
        let mut profile = self.profile.clone();
        profile.factors.push(factor);
        Self { base: self.base.clone(), base_norm: self.base_norm, profile }
    }
}

/// Uniform on-site disorder ω_j ∈ [−W, W] over a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub region: SiteInterval,
    pub width: f64,
    pub base_seed: u64,
    /// Extra counter slot, used by sweeps to decorrelate sweep points.
    #[serde(default)]
    pub slot: u64,
}

impl DisorderSpec {
    pub fn new(region: SiteInterval, width: f64, base_seed: u64) -> Result<Self> {
        if !(width >= 0.0 && width.is_finite()) {
            return Err(Error::Parameter(format!("disorder width must be finite and >= 0, got {width}")));
        }
        Ok(Self { region, width, base_seed, slot: 0 })
    }

    /// ω_j for one realization, as a pure function of (seed, slot, realization, site).
    pub fn field(&self, realization: u64, site: usize) -> f64 {
        let key = StreamKey::new(self.base_seed, self.slot, Purpose::Disorder);
        self.width * (2.0 * key.site_uniform(realization, site) - 1.0)
    }
}

fn sigma_z_term(site: usize, coeff: f64) -> LocalOperator {
    LocalOperator::spin(SiteInterval::site(site), pauli('z').unwrap()).unwrap().scaled(coeff)
}

/// One term ω_jσ^z_j per site of the region.
pub fn build_disorder_field(
    spec: &DisorderSpec,
    lattice: &Lattice,
    realization: u64,
) -> Result<Vec<PerturbationTerm>> {
    lattice.check(spec.region)?;
    (spec.region.lo..=spec.region.hi)
        .map(|j| PerturbationTerm::constant(sigma_z_term(j, spec.field(realization, j))))
        .collect()
}

/// Scale of the Gaussian entries of a GOE grain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrainScale {
    /// σ = 1/√(r^n), so that the norm stays O(1) as the grain grows.
    Normalized,
    /// σ = 1.
    Unnormalized,
    Sigma(f64),
}

/// Real symmetric Gaussian matrix on `support` (off-diagonal variance σ²,
/// diagonal 2σ²), drawn from the grain stream of `realization`.
pub fn build_goe_grain(
    support: SiteInterval,
    local_dim: usize,
    key: StreamKey,
    realization: u64,
    scale: GrainScale,
) -> Result<LocalOperator> {
    let n = support.len();
    let dim = local_dim
        .checked_pow(n as u32)
        .filter(|&d| d <= crate::lattice::DEFAULT_DENSE_CAP)
        .ok_or_else(|| Error::Budget {
            what: format!("GOE grain on {n} sites"),
            dim: usize::MAX,
            cap: crate::lattice::DEFAULT_DENSE_CAP,
        })?;
    let sigma = match scale {
        GrainScale::Normalized => 1.0 / (dim as f64).sqrt(),
        GrainScale::Unnormalized => 1.0,
        GrainScale::Sigma(s) if s > 0.0 && s.is_finite() => s,
        GrainScale::Sigma(s) => return Err(Error::Parameter(format!("grain sigma must be positive, got {s}"))),
    };
    let mut rng = key.stream(realization);
    let a: Vec<f64> = (0..dim * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let m = Mat::from_fn(dim, dim, |i, j| {
        c64::new(sigma * (a[i * dim + j] + a[j * dim + i]) / std::f64::consts::SQRT_2, 0.0)
    });
    LocalOperator::new(support, local_dim, m)
}

/// Time-independent perturbation that deletes the model's terms lying inside
/// `region` and inserts `grain` there.
pub fn build_avalanche(model: &Hamiltonian, region: SiteInterval, grain: &LocalOperator) -> Result<PerturbationTerm> {
    if grain.support() != region {
        return Err(Error::Shape(format!("grain lives on {} but the region is {}", grain.support(), region)));
    }
    model.lattice().check(region)?;
    let mut m = grain.matrix().to_owned();
    for term in model.terms().iter().filter(|t| region.contains_interval(&t.support())) {
        m -= term.widened(region)?.matrix();
    }
    PerturbationTerm::constant(LocalOperator::new(region, grain.local_dim(), m)?)
}

/// The same total Hamiltonian written with disorder everywhere plus local
/// terms that remove it outside the region.
#[derive(Debug, Clone)]
pub struct DualPair {
    pub h_prime: Hamiltonian,
    pub undo_terms: Vec<PerturbationTerm>,
}

pub fn build_dual_pair(clean: &Hamiltonian, spec: &DisorderSpec, realization: u64) -> Result<DualPair> {
    let lattice = clean.lattice();
    lattice.check(spec.region)?;
    let n = lattice.num_sites();
    let everywhere = (0..n).map(|j| sigma_z_term(j, spec.field(realization, j)));
    let h_prime = clean.with_terms(everywhere)?;
    let undo_terms = (0..n)
        .filter(|&j| !spec.region.contains(j))
        .map(|j| PerturbationTerm::constant(sigma_z_term(j, -spec.field(realization, j))))
        .collect::<Result<Vec<_>>>()?;
    Ok(DualPair { h_prime, undo_terms })
}

/// h(t) = ramp(t/τ) · h0(t).
pub fn make_adiabatic(h0: &PerturbationTerm, tau: f64, ramp: Ramp) -> Result<PerturbationTerm> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Parameter(format!("ramp time must be positive, got {tau}")));
    }
    Ok(h0.with_factor(ProfileFactor::Adiabatic { tau, ramp }))
}

/// h(t) = waveform((t mod T)/T) · h0(t).
pub fn make_periodic(h0: &PerturbationTerm, period: f64, waveform: Waveform) -> Result<PerturbationTerm> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::Parameter(format!("period must be positive, got {period}")));
    }
    Ok(h0.with_factor(ProfileFactor::Periodic { period, waveform }))
}
