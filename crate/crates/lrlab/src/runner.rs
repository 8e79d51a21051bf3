//! Scenario execution: realizations run on a worker pool and are reduced in
//! realization order, so results do not depend on the number of workers.

use std::collections::BTreeMap;
use std::time::Instant;

use lrlab_core::freefermion::FreeFermionChain;
use lrlab_core::metrics::{
    aggregate, check_bound, commutator_profile, fit_lightcone, restriction_scan, BoundCheck, BoundKind, BoundParams,
    Envelope, FitResult, RecordKind, RecordMeta, ScanRecord, Statistic,
};
use lrlab_core::models::{
    build_avalanche, build_disorder_field, build_dual_pair, build_goe_grain, build_xxz, make_adiabatic, make_periodic,
    DisorderSpec, Hamiltonian, PerturbationTerm, TimeProfile,
};
use lrlab_core::operator::embed;
use lrlab_core::proofcheck::{
    splitting_error_scan, verify_assembly, verify_commuting_factorization, verify_duhamel, verify_interaction_picture,
    verify_restriction_equivalence, ProofCheckReport,
};
use lrlab_core::propagation::{partition_free_region, InteractionFrames, Propagator, TimeOrderedOptions};
use lrlab_core::rng::{Purpose, StreamKey};
use lrlab_core::{c64, linalg, Lattice, LocalOperator, Mat, SiteInterval};
use rayon::prelude::*;

use crate::config::{Engine, Mode, ModelKind, PerturbationConfig, ProofCheckKind, ScenarioConfig};
use crate::error::{invalid, HarnessError, Result};
use crate::results::{FitEntry, MarginEntry, Provenance, ResultSet, SweepPoint, SEED_SCHEME, TOOL_VERSION};

/// Dense checks that build full time-ordered matrices stop at this many sites.
const DENSE_CHECK_SITES: usize = 6;

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { workers: std::thread::available_parallelism().map_or(1, |n| n.get()) }
    }
}

/// Runs `f` for every realization on a pool of `workers` threads and returns
/// the results in realization order.
fn ordered_map<T, F>(workers: usize, n: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let out: Vec<Result<T>> = pool.install(|| (0..n).into_par_iter().map(&f).collect());
    out.into_iter().collect()
}

/// Models and perturbations of one realization, built from the config alone.
struct Builder<'a> {
    cfg: &'a ScenarioConfig,
    spec: DisorderSpec,
    opts: TimeOrderedOptions,
    a: LocalOperator,
    bs: Vec<LocalOperator>,
    times: Vec<f64>,
}

impl<'a> Builder<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<Self> {
        let mut spec = DisorderSpec::new(cfg.disorder_region(), cfg.disorder.width, cfg.disorder.base_seed)?;
        spec.slot = cfg.disorder.slot;
        Ok(Self {
            cfg,
            spec,
            opts: TimeOrderedOptions::with_tol(cfg.schedule.tol),
            a: cfg.probes.a.build()?,
            bs: cfg.probes.b.build()?,
            times: cfg.times(),
        })
    }

    fn lattice(&self) -> Result<Lattice> {
        Ok(Lattice::spins(self.cfg.model.n_sites)?)
    }

    fn clean(&self) -> Result<Hamiltonian> {
        let lattice = self.lattice()?;
        Ok(match self.cfg.model.kind {
            ModelKind::Xxz => build_xxz(lattice, self.cfg.model.delta)?,
            ModelKind::Custom => {
                let terms = self
                    .cfg
                    .model
                    .terms
                    .iter()
                    .map(|t| Ok(LocalOperator::pauli_string(t.site, &t.op)?.scaled(t.coeff)))
                    .collect::<lrlab_core::Result<Vec<_>>>()?;
                Hamiltonian::from_terms(lattice, terms)?
            }
        })
    }

    /// Clean model plus the disorder of realization r.
    fn disordered(&self, r: u64) -> Result<Hamiltonian> {
        let clean = self.clean()?;
        let field = build_disorder_field(&self.spec, &clean.lattice(), r)?;
        Ok(clean.with_terms(field.iter().map(|p| p.base().clone()))?)
    }

    /// On-site fields of realization r, optionally extended to the whole chain.
    fn fields(&self, r: u64, everywhere: bool) -> Vec<f64> {
        (0..self.cfg.model.n_sites)
            .map(|j| if everywhere || self.spec.region.contains(j) { self.spec.field(r, j) } else { 0.0 })
            .collect()
    }

    fn perturbations(&self, h: &Hamiltonian, r: u64) -> Result<Vec<PerturbationTerm>> {
        let grains = self
            .cfg
            .perturbations
            .iter()
            .filter(|p| matches!(p, PerturbationConfig::Grain { .. } | PerturbationConfig::Avalanche { .. }))
            .count() as u64;
        let key = StreamKey::new(self.cfg.disorder.base_seed, self.cfg.disorder.slot, Purpose::Grain);
        let mut grain_index = 0u64;
        let mut out = Vec::with_capacity(self.cfg.perturbations.len());
        for p in &self.cfg.perturbations {
            let term = match p {
                PerturbationConfig::Field { op, site, strength, drive } => {
                    let base = LocalOperator::pauli_string(*site, op)?.scaled(*strength);
                    match drive {
                        Some(d) => PerturbationTerm::new(base, TimeProfile::harmonic(d.omega, d.phase))?,
                        None => PerturbationTerm::constant(base)?,
                    }
                }
                PerturbationConfig::Grain { scale, .. } | PerturbationConfig::Avalanche { scale, .. } => {
                    let support = p.support();
                    let stream = r * grains + grain_index;
                    grain_index += 1;
                    let grain = build_goe_grain(support, 2, key, stream, *scale)?;
                    if matches!(p, PerturbationConfig::Avalanche { .. }) {
                        build_avalanche(h, support, &grain)?
                    } else {
                        PerturbationTerm::constant(grain)?
                    }
                }
                PerturbationConfig::Adiabatic { op, site, strength, tau, ramp } => {
                    let h0 = PerturbationTerm::constant(LocalOperator::pauli_string(*site, op)?.scaled(*strength))?;
                    make_adiabatic(&h0, *tau, ramp.clone())?
                }
                PerturbationConfig::Periodic { op, site, strength, period, waveform } => {
                    let h0 = PerturbationTerm::constant(LocalOperator::pauli_string(*site, op)?.scaled(*strength))?;
                    make_periodic(&h0, *period, waveform.clone())?
                }
            };
            out.push(term);
        }
        Ok(out)
    }

    fn use_free_fermions(&self) -> bool {
        match self.cfg.analysis.engine {
            Engine::Auto => self.cfg.free_fermion_ok(),
            Engine::Dense => false,
            Engine::FreeFermion => true,
        }
    }

    /// Unperturbed ‖[A(t), B]‖ records. `h` builds the dense model on demand;
    /// `everywhere` selects the free-fermion fields of the dual model.
    fn reference_scan<F>(&self, r: u64, id: &str, everywhere: bool, h: F) -> Result<Vec<ScanRecord>>
    where
        F: FnOnce() -> Result<Hamiltonian>,
    {
        let meta = RecordMeta::new(id, Some(r));
        if self.use_free_fermions() {
            let chain = FreeFermionChain::xx(&self.fields(r, everywhere))?;
            let mut out = Vec::with_capacity(self.times.len() * self.bs.len());
            for &t in &self.times {
                for b in &self.bs {
                    let v = chain.zz_commutator_norm(self.a.support().lo, b.support().lo, t)?;
                    let d = self.a.support().distance(&b.support());
                    out.push(meta.record(RecordKind::Commutator, d, t, v, self.a.support(), b.support()));
                }
            }
            return Ok(out);
        }
        Ok(commutator_profile(&h()?, &self.a, &self.bs, &self.times, &[], &self.opts, &meta)?)
    }

    fn norm_b(&self) -> Result<f64> {
        Ok(self.bs.iter().map(|b| b.norm()).collect::<lrlab_core::Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max))
    }
}

/// Largest excess of a commutator record over 2‖A‖‖B‖.
fn cap_report(records: &[ScanRecord], norm_a: f64, norm_b: f64) -> ProofCheckReport {
    let cap = 2.0 * norm_a * norm_b;
    let excess = records
        .iter()
        .filter(|r| r.kind == RecordKind::Commutator)
        .fold(f64::NEG_INFINITY, |m, r| m.max(r.value - cap));
    ProofCheckReport::new("trivial_cap", excess.max(-cap), 0.0, 1e-10).with("cap", cap)
}

/// One report per check name: the instance with the smallest margin, with
/// the pass flag and failure count taken over all instances.
fn summarize(reports: Vec<ProofCheckReport>) -> Vec<ProofCheckReport> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<ProofCheckReport>> = BTreeMap::new();
    for r in reports {
        if !groups.contains_key(&r.name) {
            order.push(r.name.clone());
        }
        groups.entry(r.name.clone()).or_default().push(r);
    }
    order
        .into_iter()
        .map(|name| {
            let group = &groups[&name];
            let slack = |r: &ProofCheckReport| r.rhs + r.tol - r.lhs;
            let worst = group.iter().fold(&group[0], |w, r| if slack(r) < slack(w) { r } else { w });
            let failures = group.iter().filter(|r| !r.pass).count();
            let mut out = worst.clone().with("instances", group.len()).with("failures", failures);
            out.pass = failures == 0;
            out
        })
        .collect()
}

fn fit_entry(
    id: &str,
    records: &[ScanRecord],
    kind: RecordKind,
    floor: f64,
    skipped: &mut Vec<String>,
) -> Option<FitResult> {
    let selected: Vec<ScanRecord> = records.iter().filter(|r| r.kind == kind).cloned().collect();
    match fit_lightcone(&selected, floor) {
        Ok(fit) => Some(fit),
        Err(e) => {
            skipped.push(format!("{id} {} fit: {e}", kind.as_str()));
            None
        }
    }
}

fn only(records: &[ScanRecord], kind: RecordKind, id: &str) -> Vec<ScanRecord> {
    records.iter().filter(|r| r.kind == kind && r.scenario_id == id).cloned().collect()
}

/// Accumulates the pieces of a result set.
struct Outcome {
    raw: Vec<ScanRecord>,
    statistic: Statistic,
    fits: Vec<FitEntry>,
    reports: Vec<ProofCheckReport>,
    margins: Vec<MarginEntry>,
    skipped: Vec<String>,
}

impl Outcome {
    fn new(statistic: Statistic) -> Self {
        Self { raw: Vec::new(), statistic, fits: Vec::new(), reports: Vec::new(), margins: Vec::new(), skipped: Vec::new() }
    }

    fn aggregated(&self) -> Vec<ScanRecord> {
        aggregate(&self.raw, self.statistic)
    }

    fn fit(&mut self, id: &str, records: &[ScanRecord], kind: RecordKind, floor: f64) -> Option<FitResult> {
        let fit = fit_entry(id, records, kind, floor, &mut self.skipped)?;
        self.fits.push(FitEntry { scenario_id: id.to_string(), fit: fit.clone() });
        Some(fit)
    }

    fn margin(&mut self, label: String, records: &[ScanRecord], check: &BoundCheck) -> Result<()> {
        let report = check_bound(records, check)?;
        self.margins.push(MarginEntry { label, report });
        Ok(())
    }
}

pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<ResultSet> {
    cfg.validate()?;
    let start = Instant::now();
    let builder = Builder::new(cfg)?;
    let outcome = match cfg.mode {
        Mode::Lightcone => run_lightcone(&builder, opts)?,
        Mode::Perturbed | Mode::Dual => run_perturbed(&builder, opts)?,
        Mode::Avalanche => run_avalanche(&builder, opts)?,
        Mode::Proofcheck => run_proofcheck(&builder, opts)?,
    };
    let mut records = outcome.raw.clone();
    records.extend(outcome.aggregated());
    Ok(ResultSet {
        config: cfg.clone(),
        records,
        fits: outcome.fits,
        proof_checks: summarize(outcome.reports),
        margins: outcome.margins,
        provenance: Provenance {
            config_hash: cfg.hash(),
            base_seed: cfg.disorder.base_seed,
            slot: cfg.disorder.slot,
            n_realizations: cfg.disorder.n_realizations,
            seed_scheme: SEED_SCHEME.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            sweep: None,
        },
        skipped: outcome.skipped,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn unperturbed_check(b: &Builder<'_>, fit: &FitResult, n: f64) -> Result<BoundCheck> {
    let (norm_a, norm_b) = (b.a.norm()?, b.norm_b()?);
    Ok(BoundCheck {
        kind: BoundKind::Unperturbed,
        params: BoundParams { n, ..fit.bound_params(b.cfg.analysis.safety)? },
        norm_a: Some(norm_a),
        norm_b: Some(norm_b),
        d_min: None,
        envelope: Envelope::Constant(0.0),
        trivial_cap: 2.0 * norm_a * norm_b,
    })
}

fn run_lightcone(b: &Builder<'_>, opts: &RunOptions) -> Result<Outcome> {
    let cfg = b.cfg;
    let id = cfg.scenario_id.as_str();
    let radii = &cfg.analysis.restriction_radii;
    let per = ordered_map(opts.workers, cfg.disorder.n_realizations, |r| {
        let mut dense = None;
        let mut recs = b.reference_scan(r, id, false, || {
            let h = b.disordered(r)?;
            dense = Some(h.clone());
            Ok(h)
        })?;
        if !radii.is_empty() {
            let h = match dense {
                Some(h) => h,
                None => b.disordered(r)?,
            };
            recs.extend(restriction_scan(&Propagator::new(&h)?, &b.a, radii, &b.times, &RecordMeta::new(id, Some(r)))?);
        }
        let cap = cap_report(&recs, b.a.norm()?, b.norm_b()?);
        Ok((recs, cap))
    })?;
    let mut out = Outcome::new(cfg.analysis.statistic);
    for (recs, cap) in per {
        out.raw.extend(recs);
        out.reports.push(cap);
    }
    let agg = only(&out.aggregated(), RecordKind::Commutator, id);
    if let Some(fit) = out.fit(id, &agg, RecordKind::Commutator, cfg.analysis.noise_floor) {
        let check = unperturbed_check(b, &fit, 1.0)?;
        out.margin(format!("{id} unperturbed"), &agg, &check)?;
    }
    Ok(out)
}

fn run_perturbed(b: &Builder<'_>, opts: &RunOptions) -> Result<Outcome> {
    let cfg = b.cfg;
    let id = cfg.scenario_id.as_str();
    let reference_id = format!("{id}/reference");
    let dual = cfg.mode == Mode::Dual;
    let per = ordered_map(opts.workers, cfg.disorder.n_realizations, |r| {
        let mut reports = Vec::new();
        let (h, perts) = if dual {
            let clean = b.clean()?;
            let pair = build_dual_pair(&clean, &b.spec, r)?;
            let local = build_disorder_field(&b.spec, &clean.lattice(), r)?;
            let lhs = clean.total_at(&local, 0.0)?;
            let rhs = pair.h_prime.total_at(&pair.undo_terms, 0.0)?;
            let diff = lrlab_core::operator::spectral_norm(&lhs.sub(&rhs)?)?;
            reports.push(ProofCheckReport::new("dual_pair", diff, 0.0, 1e-13).with("realization", r));
            (pair.h_prime, pair.undo_terms)
        } else {
            let h = b.disordered(r)?;
            let perts = b.perturbations(&h, r)?;
            (h, perts)
        };
        let mut recs = b.reference_scan(r, &reference_id, dual, || Ok(h.clone()))?;
        let meta = RecordMeta::new(id, Some(r));
        recs.extend(commutator_profile(&h, &b.a, &b.bs, &b.times, &perts, &b.opts, &meta)?);
        reports.push(cap_report(&recs, b.a.norm()?, b.norm_b()?));
        Ok((recs, reports, Envelope::from_terms(&perts)))
    })?;
    let mut out = Outcome::new(cfg.analysis.statistic);
    let mut envelopes = Vec::new();
    for (recs, reports, env) in per {
        out.raw.extend(recs);
        out.reports.extend(reports);
        envelopes.push(env);
    }
    let envelope = Envelope::max_of(envelopes);
    let agg = out.aggregated();
    let reference = only(&agg, RecordKind::Commutator, &reference_id);
    let measured = only(&agg, RecordKind::Commutator, id);
    let Some(fit) = out.fit(&reference_id, &reference, RecordKind::Commutator, cfg.analysis.noise_floor) else {
        return Ok(out);
    };
    let base = unperturbed_check(b, &fit, cfg.analysis.free_region_n)?;
    let supports = cfg.perturbation_supports();
    for kind in cfg.bounds() {
        match kind {
            BoundKind::Full => {
                let check = BoundCheck { kind, envelope: envelope.clone(), ..base.clone() };
                out.margin(format!("{id} full"), &measured, &check)?;
            }
            BoundKind::Far => {
                for probe in &b.bs {
                    let bsup = probe.support();
                    let d_min = supports.iter().map(|s| s.distance(&bsup)).min().unwrap_or(usize::MAX);
                    let check = BoundCheck {
                        kind,
                        d_min: Some(if d_min == usize::MAX { f64::INFINITY } else { d_min as f64 }),
                        envelope: envelope.clone(),
                        ..base.clone()
                    };
                    let cells: Vec<ScanRecord> = measured.iter().filter(|r| r.b_support == bsup).cloned().collect();
                    out.margin(format!("{id} far B={bsup}"), &cells, &check)?;
                }
            }
            other => return Err(invalid("analysis.bounds", format!("{} is not a perturbed bound", other.as_str()))),
        }
    }
    Ok(out)
}

fn run_avalanche(b: &Builder<'_>, opts: &RunOptions) -> Result<Outcome> {
    let cfg = b.cfg;
    let id = cfg.scenario_id.as_str();
    let reference_id = format!("{id}/reference");
    let norm_b = b.norm_b()?;
    let per = ordered_map(opts.workers, cfg.disorder.n_realizations, |r| {
        let h = b.disordered(r)?;
        let perts = b.perturbations(&h, r)?;
        let mut recs = b.reference_scan(r, &reference_id, false, || Ok(h.clone()))?;
        let meta = RecordMeta::new(id, Some(r));
        let grain = perts[0].base();
        let measured = commutator_profile(&h, grain, &b.bs, &b.times, &perts, &b.opts, &meta)?;
        let reports = vec![
            cap_report(&recs, b.a.norm()?, norm_b).with("realization", r),
            cap_report(&measured, perts[0].base_norm(), norm_b).with("realization", r),
        ];
        recs.extend(measured);
        Ok((recs, reports, Envelope::from_terms(&perts)))
    })?;
    let mut out = Outcome::new(cfg.analysis.statistic);
    let mut envelopes = Vec::new();
    for (recs, reports, env) in per {
        out.raw.extend(recs);
        out.reports.extend(reports);
        envelopes.push(env);
    }
    let envelope = Envelope::max_of(envelopes);
    let agg = out.aggregated();
    let reference = only(&agg, RecordKind::Commutator, &reference_id);
    let measured = only(&agg, RecordKind::Commutator, id);
    if let Some(fit) = out.fit(&reference_id, &reference, RecordKind::Commutator, cfg.analysis.noise_floor) {
        let h_max = envelope.at(0.0);
        let check = BoundCheck {
            kind: BoundKind::Single,
            params: fit.bound_params(cfg.analysis.safety)?,
            norm_a: None,
            norm_b: Some(norm_b),
            d_min: None,
            envelope,
            trivial_cap: 2.0 * h_max * norm_b,
        };
        out.margin(format!("{id} single"), &measured, &check)?;
    }
    Ok(out)
}

/// Reduced frame generator of `terms` onto `region`, embedded in the chain.
fn embedded_reduced(frames: &InteractionFrames, region: SiteInterval, lattice: &Lattice, s: f64) -> lrlab_core::Result<Mat<c64>> {
    if frames.is_empty() {
        return Ok(linalg::zeros(lattice.dim()));
    }
    let local = LocalOperator::new(region, lattice.local_dim(), frames.reduced_generator(s, region)?)?;
    Ok(embed(&local, lattice)?.into_matrix())
}

/// Per-realization checks that need no fitted constants.
fn dense_checks(
    b: &Builder<'_>,
    h: &Hamiltonian,
    prop: &Propagator,
    perts: &[PerturbationTerm],
    r: u64,
) -> Result<Vec<ProofCheckReport>> {
    let cfg = b.cfg;
    let checks = &cfg.analysis.checks;
    let split = cfg.analysis.splitting.expect("validated");
    let lattice = h.lattice();
    let t = *b.times.last().expect("validated");
    let mut out = Vec::new();
    if checks.contains(&ProofCheckKind::InteractionPicture) && lattice.num_sites() <= DENSE_CHECK_SITES {
        out.push(verify_interaction_picture(h, perts, t, &b.opts)?.with("realization", r));
    }
    let wants_generators =
        checks.contains(&ProofCheckKind::CommutingFactorization) || checks.contains(&ProofCheckKind::Duhamel);
    if wants_generators && lattice.num_sites() <= DENSE_CHECK_SITES {
        let (left, right) = partition_free_region(perts, split.cut, split.half_width, &lattice)?;
        let (lf, rf, all) = (
            InteractionFrames::new(prop, &left)?,
            InteractionFrames::new(prop, &right)?,
            InteractionFrames::new(prop, perts)?,
        );
        let left_region = SiteInterval { lo: 0, hi: split.cut };
        let right_region = SiteInterval { lo: split.cut + 1, hi: lattice.num_sites() - 1 };
        let g1 = |s: f64| embedded_reduced(&lf, left_region, &lattice, s);
        let g2 = |s: f64| embedded_reduced(&rf, right_region, &lattice, s);
        if checks.contains(&ProofCheckKind::CommutingFactorization) {
            out.push(verify_commuting_factorization(&g1, &g2, lattice.dim(), t, &b.opts)?.with("realization", r));
        }
        if checks.contains(&ProofCheckKind::Duhamel) {
            let g = |s: f64| Ok(all.generator(s).into_matrix());
            let e = |s: f64| Ok(g1(s)? + g2(s)?);
            out.push(verify_duhamel(&g, &e, lattice.dim(), t, &b.opts)?.with("realization", r));
        }
    }
    if checks.contains(&ProofCheckKind::Assembly) {
        if let Some(probe) = b.bs.iter().find(|p| p.support().lo > split.cut) {
            out.push(
                verify_assembly(h, perts, &b.a, probe, split.cut, split.half_width, t, &b.opts)?.with("realization", r),
            );
        }
    }
    Ok(out)
}

fn run_proofcheck(b: &Builder<'_>, opts: &RunOptions) -> Result<Outcome> {
    let cfg = b.cfg;
    let id = cfg.scenario_id.as_str();
    let reference_id = format!("{id}/reference");
    let split = cfg.analysis.splitting.expect("validated");
    let checks = &cfg.analysis.checks;
    let mut radii: Vec<usize> = b.bs.iter().map(|p| b.a.support().distance(&p.support()) - 1).collect();
    radii.extend(&cfg.analysis.restriction_radii);
    radii.sort_unstable();
    radii.dedup();

    let per = ordered_map(opts.workers, cfg.disorder.n_realizations, |r| {
        let h = b.disordered(r)?;
        let perts = b.perturbations(&h, r)?;
        let prop = Propagator::new(&h)?;
        let mut recs = b.reference_scan(r, &reference_id, false, || Ok(h.clone()))?;
        let mut reports = vec![cap_report(&recs, b.a.norm()?, b.norm_b()?).with("realization", r)];
        if checks.contains(&ProofCheckKind::RestrictionEquivalence) {
            recs.extend(restriction_scan(&prop, &b.a, &radii, &b.times, &RecordMeta::new(&reference_id, Some(r)))?);
        }
        if checks.contains(&ProofCheckKind::Splitting) {
            let meta = RecordMeta::new(id, Some(r));
            recs.extend(splitting_error_scan(&h, &prop, &perts, split.cut, split.half_width, &b.times, &b.opts, &meta)?);
        }
        reports.extend(dense_checks(b, &h, &prop, &perts, r)?);
        Ok((recs, reports, Envelope::from_terms(&perts), prop))
    })?;

    let mut out = Outcome::new(cfg.analysis.statistic);
    if cfg.model.n_sites > DENSE_CHECK_SITES {
        let dense = [
            ProofCheckKind::InteractionPicture,
            ProofCheckKind::CommutingFactorization,
            ProofCheckKind::Duhamel,
        ];
        for kind in dense.iter().filter(|k| checks.contains(k)) {
            out.skipped.push(format!("{}: dense time-ordered checks are limited to {DENSE_CHECK_SITES} sites", kind.as_str()));
        }
    }
    let mut envelopes = Vec::new();
    let mut props = Vec::new();
    for (recs, reports, env, prop) in per {
        out.raw.extend(recs);
        out.reports.extend(reports);
        envelopes.push(env);
        props.push(prop);
    }
    let envelope = Envelope::max_of(envelopes);
    let agg = out.aggregated();
    let floor = cfg.analysis.noise_floor;
    let reference = only(&agg, RecordKind::Commutator, &reference_id);
    let fit = out.fit(&reference_id, &reference, RecordKind::Commutator, floor);

    if checks.contains(&ProofCheckKind::Splitting) {
        if let Some(fit) = &fit {
            let check = BoundCheck {
                kind: BoundKind::Splitting,
                params: fit.bound_params(cfg.analysis.safety)?,
                norm_a: None,
                norm_b: None,
                d_min: None,
                envelope,
                trivial_cap: 2.0,
            };
            let measured = only(&agg, RecordKind::SplittingError, id);
            out.margin(format!("{id} splitting w={}", split.half_width), &measured, &check)?;
        }
    }

    if checks.contains(&ProofCheckKind::RestrictionEquivalence) {
        // Restriction errors are fitted on their ensemble maximum, since the
        // check runs realization by realization.
        let raw_restriction: Vec<ScanRecord> =
            out.raw.iter().filter(|r| r.kind == RecordKind::RestrictionError).cloned().collect();
        let worst = aggregate(&raw_restriction, Statistic::Max);
        let restriction_id = format!("{reference_id}/restriction");
        if let Some(rfit) = out.fit(&restriction_id, &worst, RecordKind::RestrictionError, floor) {
            let params = rfit.bound_params(1.0)?;
            let safety = cfg.analysis.safety;
            let times: Vec<f64> = b.times.iter().copied().filter(|&t| t > 0.0).collect();
            let per = ordered_map(opts.workers, props.len() as u64, |r| {
                let prop = &props[r as usize];
                let mut reports = Vec::new();
                for &t in &times {
                    for probe in &b.bs {
                        let radius = b.a.support().distance(&probe.support()) - 1;
                        let pair = verify_restriction_equivalence(prop, &b.a, radius, probe, t, &params, safety)?;
                        reports.extend(pair.into_iter().map(|rep| rep.with("realization", r)));
                    }
                }
                Ok(reports)
            })?;
            out.reports.extend(per.into_iter().flatten());
        }
    }
    Ok(out)
}

/// Resolves a dotted path such as `disorder.width` or `perturbations.0.tau`.
fn axis_slot<'v>(value: &'v mut serde_json::Value, axis: &str) -> Result<&'v mut serde_json::Value> {
    let mut cur = value;
    for seg in axis.split('.') {
        cur = match cur {
            serde_json::Value::Object(map) => map.get_mut(seg),
            serde_json::Value::Array(items) => seg.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| HarnessError::UnknownAxis(axis.to_string()))?;
    }
    if cur.is_number() || cur.is_string() || cur.is_boolean() {
        Ok(cur)
    } else {
        Err(HarnessError::UnknownAxis(axis.to_string()))
    }
}

/// One run per value of `axis`. Sweep point i uses disorder slot
/// `slot + i`, so points draw independent disorder.
pub fn run_sweep(
    cfg: &ScenarioConfig,
    axis: &str,
    values: &[serde_json::Value],
    opts: &RunOptions,
) -> Result<Vec<ResultSet>> {
    let base = serde_json::to_value(cfg).expect("config serializes");
    axis_slot(&mut base.clone(), axis)?;
    let mut out = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate() {
        let mut value = base.clone();
        *axis_slot(&mut value, axis)? = v.clone();
        let mut point: ScenarioConfig =
            serde_json::from_value(value).map_err(|e| invalid(axis, format!("value {v}: {e}")))?;
        if axis != "disorder.slot" {
            point.disorder.slot = cfg.disorder.slot + i as u64;
        }
        let mut rs = run_scenario(&point, opts)?;
        rs.provenance.sweep = Some(SweepPoint { axis: axis.to_string(), index: i, value: v.clone() });
        out.push(rs);
    }
    Ok(out)
}
