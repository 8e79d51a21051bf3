//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use lrlab::export::export;
use lrlab::{run_scenario, ResultSet, RunOptions, ScenarioConfig};
use lrlab_core::metrics::{
    evaluate_bound, fit_lightcone, BoundGeometry, BoundKind, BoundParams, Envelope, FShape, RecordKind, RecordMeta, NOISE_FLOOR,
    ScanRecord,
};
use lrlab_core::models::{build_disorder_field, build_dual_pair, build_xxz, DisorderSpec, Hamiltonian, PerturbationTerm, TimeProfile};
use lrlab_core::operator::{embed, pauli_twirl, restrict, spectral_norm};
use lrlab_core::proofcheck::{verify_commuting_factorization, verify_duhamel, verify_interaction_picture};
use lrlab_core::propagation::TimeOrderedOptions;
use lrlab_core::rng::{Purpose, StreamKey};
use lrlab_core::{c64, linalg, Error, GlobalOperator, Lattice, LocalOperator, Mat, SiteInterval};

type Outcome = Result<String, String>;

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed <= limit, || format!("runtime {:.1} s exceeds {:.0} s", elapsed.as_secs_f64(), limit.as_secs_f64()))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Uniform draws in [-1, 1) from a counter-based test stream.
struct Draws {
    key: StreamKey,
    next: usize,
}

impl Draws {
    fn new(seed: u64) -> Self {
        Self { key: StreamKey::new(seed, 0, Purpose::Test(seed)), next: 0 }
    }

    fn uniform(&mut self) -> f64 {
        self.next += 1;
        2.0 * self.key.site_uniform(0, self.next) - 1.0
    }

    fn complex(&mut self, n: usize) -> Mat<c64> {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = c64::new(self.uniform(), self.uniform());
            }
        }
        m
    }

    fn hermitian(&mut self, n: usize) -> Mat<c64> {
        let m = self.complex(n);
        Mat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
    }
}

fn scaled(m: &Mat<c64>, s: f64) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

fn pauli(site: usize, op: &str) -> LocalOperator {
    LocalOperator::pauli_string(site, op).unwrap()
}

fn load(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)).unwrap()
}

fn config(text: &str) -> ScenarioConfig {
    ScenarioConfig::from_json(text).unwrap()
}

fn workers() -> RunOptions {
    RunOptions::default()
}

/// Suites whose records criterion 10 inspects.
#[derive(Default)]
struct Collected {
    runs: Vec<ResultSet>,
}

fn raw<'a>(rs: &'a ResultSet, id: &'a str, kind: RecordKind) -> impl Iterator<Item = &'a ScanRecord> + 'a {
    rs.records.iter().filter(move |r| r.realization.is_some() && r.scenario_id == id && r.kind == kind)
}

const ZZ_PAIR: &str = r#"{
    "scenario_id": "zz-pair",
    "model": {"kind": "custom", "n_sites": 2, "terms": [{"op": "zz", "site": 0}]},
    "disorder": {"width": 0.0, "base_seed": 1, "n_realizations": 1},
    "probes": {"a": {"op": "x", "site": 0}, "b": {"op": "x", "sites": [1]}},
    "schedule": {"times": {"start": 0.05, "stop": 2.5, "count": 50}},
    "analysis": {"restriction_radii": [0]}
}"#;

fn criterion_1(c: &mut Collected) -> Outcome {
    let start = Instant::now();
    let rs = run_scenario(&config(ZZ_PAIR), &workers()).map_err(err)?;
    let elapsed = start.elapsed();
    let (mut n_comm, mut n_restr, mut worst) = (0, 0, 0.0f64);
    for r in raw(&rs, "zz-pair", RecordKind::Commutator) {
        worst = worst.max((r.value - 2.0 * (2.0 * r.t).sin().abs()).abs());
        n_comm += 1;
    }
    for r in raw(&rs, "zz-pair", RecordKind::RestrictionError) {
        ensure(r.d == 0, || format!("restriction radius {}", r.d))?;
        worst = worst.max((r.value - (2.0 * r.t).sin().abs()).abs());
        n_restr += 1;
    }
    ensure(n_comm == 50 && n_restr == 50, || format!("{n_comm} commutator and {n_restr} restriction records"))?;
    ensure(worst <= 1e-10, || format!("max deviation {worst:e}"))?;
    within(elapsed, Duration::from_secs(1))?;
    c.runs.push(rs);
    Ok(format!("max deviation {worst:.1e} over 50 times, {:.2} s", elapsed.as_secs_f64()))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut draws = Draws::new(2);
    let lattice = Lattice::spins(4).map_err(err)?;
    let m = draws.hermitian(16);
    let h = Hamiltonian::from_terms(lattice, vec![LocalOperator::new(lattice.full(), 2, m).map_err(err)?]).map_err(err)?;
    let drive = [PerturbationTerm::new(pauli(2, "x").scaled(0.8), TimeProfile::harmonic(1.7, 0.4)).map_err(err)?];
    let opts = TimeOrderedOptions::with_tol(1e-8);
    let mut worst = 0.0f64;
    for t in [0.5, 1.0, 2.0] {
        let r = verify_interaction_picture(&h, &drive, t, &opts).map_err(err)?;
        worst = worst.max(r.lhs);
    }
    ensure(worst <= 1e-7, || format!("residual {worst:e}"))?;
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("max residual {worst:.1e} at tol 1e-8, {:.2} s", start.elapsed().as_secs_f64()))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut draws = Draws::new(3);
    let lattice = Lattice::spins(6).map_err(err)?;
    let x = embed(&LocalOperator::spin(SiteInterval { lo: 0, hi: 1 }, draws.hermitian(4)).map_err(err)?, &lattice)
        .map_err(err)?
        .into_matrix();
    let y = embed(&LocalOperator::spin(SiteInterval { lo: 3, hi: 5 }, draws.hermitian(8)).map_err(err)?, &lattice)
        .map_err(err)?
        .into_matrix();
    let g1 = |s: f64| Ok(scaled(&x, (1.1 * s + 0.3).sin()));
    let g2 = |s: f64| Ok(scaled(&y, 1.0 + 0.5 * (0.7 * s).cos()));
    let opts = TimeOrderedOptions::with_tol(1e-8);
    let mut worst = 0.0f64;
    for t in [0.5, 1.0, 2.0] {
        worst = worst.max(verify_commuting_factorization(&g1, &g2, lattice.dim(), t, &opts).map_err(err)?.lhs);
    }
    ensure(worst <= 1e-7, || format!("residual {worst:e}"))?;
    let z = embed(&pauli(1, "z"), &lattice).map_err(err)?.into_matrix();
    let clash = |s: f64| Ok(scaled(&z, 1.0 + s));
    let guard = verify_commuting_factorization(&g1, &clash, lattice.dim(), 1.0, &opts);
    ensure(matches!(guard, Err(Error::Geometry(_))), || format!("non-commuting pair accepted: {guard:?}"))?;
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("max residual {worst:.1e}, non-commuting pair rejected, {:.2} s", start.elapsed().as_secs_f64()))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let opts = TimeOrderedOptions::default();
    let mut draws = Draws::new(4);
    let mut failures = 0;
    for _ in 0..100 {
        let (a, b) = (draws.hermitian(4), draws.hermitian(4));
        let (ga, gb) = (|_: f64| Ok(a.clone()), |_: f64| Ok(b.clone()));
        if !verify_duhamel(&ga, &gb, 4, 1.0, &opts).map_err(err)?.pass {
            failures += 1;
        }
    }
    ensure(failures == 0, || format!("{failures} of 100 random pairs fail"))?;
    let sx = pauli(0, "x").into_matrix();
    let g = |_: f64| Ok(sx.clone());
    let zero = |_: f64| Ok(linalg::zeros(2));
    let r = verify_duhamel(&g, &zero, 2, PI, &opts).map_err(err)?;
    ensure(r.pass && (r.lhs - 2.0).abs() < 1e-8 && (r.rhs - PI).abs() < 1e-9, || {
        format!("analytic case lhs {} rhs {}", r.lhs, r.rhs)
    })?;
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("0/100 failures, analytic lhs {:.10} <= {:.10}, {:.2} s", r.lhs, r.rhs, start.elapsed().as_secs_f64()))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut draws = Draws::new(5);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let n = 2 + k % 3;
        let lattice = Lattice::spins(n).map_err(err)?;
        let x = GlobalOperator::new(lattice, draws.complex(lattice.dim())).map_err(err)?;
        let lo = k % n;
        let hi = lo + (k / 3) % (n - lo);
        let region = SiteInterval { lo, hi };
        let diff = pauli_twirl(&x, region).map_err(err)?.sub(&restrict(&x, region).map_err(err)?).map_err(err)?;
        worst = worst.max(spectral_norm(&diff).map_err(err)?);
    }
    ensure(worst <= 1e-12, || format!("max difference {worst:e}"))?;
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("max difference {worst:.1e} over 20 operators, {:.2} s", start.elapsed().as_secs_f64()))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let clean = build_xxz(Lattice::spins(8).map_err(err)?, 0.0).map_err(err)?;
    let spec = DisorderSpec::new(SiteInterval { lo: 2, hi: 5 }, 5.0, 66).map_err(err)?;
    let mut worst = 0.0f64;
    for r in 0..10 {
        let local = build_disorder_field(&spec, &clean.lattice(), r).map_err(err)?;
        let pair = build_dual_pair(&clean, &spec, r).map_err(err)?;
        let lhs = clean.total_at(&local, 0.0).map_err(err)?;
        let rhs = pair.h_prime.total_at(&pair.undo_terms, 0.0).map_err(err)?;
        worst = worst.max(spectral_norm(&lhs.sub(&rhs).map_err(err)?).map_err(err)?);
    }
    ensure(worst <= 1e-13, || format!("max difference {worst:e}"))?;
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("max difference {worst:.1e} over 10 realizations, {:.2} s", start.elapsed().as_secs_f64()))
}

fn criterion_7(c: &mut Collected) -> Outcome {
    let start = Instant::now();
    let (k, xi, beta) = (0.7, 1.3, 1.0);
    let meta = RecordMeta::new("synthetic", None);
    let mut synthetic = Vec::new();
    for d in 1..=8 {
        for j in 1..=10 {
            let t = 0.5 * j as f64;
            let v = k * (-(d as f64) / xi).exp() * t.powf(beta);
            synthetic.push(meta.record(RecordKind::Commutator, d, t, v, SiteInterval::site(0), SiteInterval::site(d)));
        }
    }
    let fit = fit_lightcone(&synthetic, NOISE_FLOOR).map_err(err)?;
    let dev = [(fit.k - k).abs(), (fit.xi - xi).abs(), (fit.beta - beta).abs()].into_iter().fold(0.0, f64::max);
    ensure(dev <= 1e-6, || format!("synthetic fit off by {dev:e}: {fit:?}"))?;

    let cfg = load("lightcone_xx.json");
    let rs = run_scenario(&cfg, &workers()).map_err(err)?;
    c.runs.push(rs.clone());
    let fitted = rs.fits.first().ok_or_else(|| format!("no lightcone fit: {:?}", rs.skipped))?;
    let margin = rs.margins.first().ok_or("no margin report")?;
    let fit_line = format!(
        "XX fit K {:.3} xi {:.3} beta {:.3} (rms log residual {:.3}), {}/{} violations at safety {}",
        fitted.fit.k,
        fitted.fit.xi,
        fitted.fit.beta,
        fitted.fit.rms_log_residual,
        margin.report.violations.len(),
        margin.report.n_cells,
        cfg.analysis.safety
    );
    ensure(fitted.fit.beta <= 0.2, || format!("fitted beta {:.3} > 0.2; {fit_line}", fitted.fit.beta))?;
    ensure(margin.report.violations.is_empty(), || format!("violations; {fit_line}"))?;
    within(start.elapsed(), Duration::from_secs(15 * 60))?;
    Ok(format!("synthetic dev {dev:.1e}; {fit_line}, {:.1} s", start.elapsed().as_secs_f64()))
}

fn grain_config(n_sites: usize, n_realizations: u64) -> ScenarioConfig {
    let sites: Vec<usize> = (3..=6).map(|d| d + 1).filter(|&s| s < n_sites).collect();
    config(&format!(
        r#"{{
            "scenario_id": "grain",
            "mode": "avalanche",
            "model": {{"kind": "xxz", "n_sites": {n_sites}, "delta": 0.0}},
            "disorder": {{"width": 8.0, "base_seed": 808, "n_realizations": {n_realizations}}},
            "perturbations": [{{"kind": "grain", "support": [0, 1]}}],
            "probes": {{"a": {{"op": "z", "site": 1}}, "b": {{"op": "z", "sites": {sites:?}}}}},
            "schedule": {{"times": [1.0, 2.0, 3.0, 4.0, 5.0]}}
        }}"#
    ))
}

fn criterion_8(c: &mut Collected) -> Outcome {
    let start = Instant::now();
    let rs = run_scenario(&grain_config(10, 100), &workers()).map_err(err)?;
    c.runs.push(rs.clone());
    let fitted = rs.fits.first().ok_or_else(|| format!("no reference fit: {:?}", rs.skipped))?;
    let margin = rs.margins.first().ok_or("no margin report")?;
    let ds: Vec<usize> = raw(&rs, "grain", RecordKind::Commutator).map(|r| r.d).collect();
    ensure(ds.iter().min() == Some(&3) && ds.iter().max() == Some(&6), || format!("distances {ds:?}"))?;
    ensure(margin.report.violations.is_empty(), || {
        format!("{} violations, first {:?}", margin.report.violations.len(), margin.report.violations.first())
    })?;
    within(start.elapsed(), Duration::from_secs(15 * 60))?;
    let summary = format!(
        "fit K {:.3} xi {:.3} beta {:.3}; 0/{} violations, min relative margin {:.3}, {:.1} s",
        fitted.fit.k,
        fitted.fit.xi,
        fitted.fit.beta,
        margin.report.n_cells,
        margin.report.min_relative_margin,
        start.elapsed().as_secs_f64()
    );
    Ok(summary)
}

fn splitting_config(n_sites: usize, cut: usize, w: usize, n_realizations: u64) -> ScenarioConfig {
    let (left, right) = (cut - w - 1, cut + w + 1);
    let sites: Vec<usize> = (2..n_sites).collect();
    config(&format!(
        r#"{{
            "scenario_id": "split-w{w}",
            "mode": "proofcheck",
            "model": {{"kind": "xxz", "n_sites": {n_sites}, "delta": 0.0}},
            "disorder": {{"width": 8.0, "base_seed": 909, "n_realizations": {n_realizations}}},
            "perturbations": [
                {{"kind": "field", "op": "z", "site": {left}, "strength": 1.0}},
                {{"kind": "field", "op": "z", "site": {right}, "strength": 1.0}}
            ],
            "probes": {{"a": {{"op": "z", "site": 0}}, "b": {{"op": "z", "sites": {sites:?}}}}},
            "schedule": {{"times": [0.5, 1.0, 1.5, 2.0]}},
            "analysis": {{"splitting": {{"cut": {cut}, "half_width": {w}}}, "checks": ["splitting"]}}
        }}"#
    ))
}

fn criterion_9(c: &mut Collected) -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for w in [2, 3] {
        let rs = run_scenario(&splitting_config(10, 4, w, 50), &workers()).map_err(err)?;
        c.runs.push(rs.clone());
        let margin = rs.margins.first().ok_or_else(|| format!("w = {w}: no splitting check: {:?}", rs.skipped))?;
        let n = raw(&rs, &format!("split-w{w}"), RecordKind::SplittingError).count();
        ensure(n == 200, || format!("w = {w}: {n} splitting records"))?;
        ensure(margin.report.violations.is_empty(), || {
            format!("w = {w}: {} violations, first {:?}", margin.report.violations.len(), margin.report.violations.first())
        })?;
        let tightest = margin.report.tightest.as_ref().ok_or("no cells")?;
        parts.push(format!("w={w}: 0/{} violations, max mean {:.1e} vs rhs {:.1e}", margin.report.n_cells, tightest.mean, tightest.rhs));
    }
    within(start.elapsed(), Duration::from_secs(15 * 60))?;
    Ok(format!("{}, {:.1} s", parts.join("; "), start.elapsed().as_secs_f64()))
}

fn csv_payload(rs: &ResultSet, dir: &Path) -> Result<Vec<u8>, String> {
    export(rs, dir).map_err(err)?;
    let mut bytes = std::fs::read(dir.join("records.csv")).map_err(err)?;
    bytes.extend(std::fs::read(dir.join("fits.csv")).map_err(err)?);
    Ok(bytes)
}

fn criterion_10(c: &Collected) -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    for rs in &c.runs {
        for cap in rs.proof_checks.iter().filter(|p| p.name == "trivial_cap") {
            ensure(cap.pass, || format!("{}: commutator exceeds 2|A||B| by {:e}", rs.config.scenario_id, cap.lhs))?;
        }
        // Pauli probes have unit norm; the grain-commutator records are
        // covered by the per-realization cap reports above.
        let grain_measured = rs.config.mode == lrlab::Mode::Avalanche;
        for r in rs.records.iter().filter(|r| r.kind == RecordKind::Commutator) {
            if grain_measured && r.scenario_id == rs.config.scenario_id {
                continue;
            }
            ensure(r.value <= 2.0 + 1e-10, || format!("{}: record {} > 2", r.scenario_id, r.value))?;
            checked += 1;
        }
    }

    let tmp = tempfile::tempdir().map_err(err)?;
    let suites = [
        ("lightcone", load("lightcone_xx.json")),
        ("grain", grain_config(8, 10)),
        ("splitting", splitting_config(8, 4, 1, 6)),
        ("zz-pair", config(ZZ_PAIR)),
    ];
    for (name, cfg) in &suites {
        let mut payloads = Vec::new();
        for w in [1, 4, 8] {
            let rs = run_scenario(cfg, &RunOptions { workers: w }).map_err(err)?;
            payloads.push(csv_payload(&rs, &tmp.path().join(format!("{name}-{w}")))?);
        }
        ensure(payloads.windows(2).all(|p| p[0] == p[1]), || format!("{name}: CSV differs across worker counts"))?;
    }
    Ok(format!(
        "{checked} Pauli-probe records <= 2, all cap reports pass; {} suites byte-identical for workers 1/4/8, {:.1} s",
        suites.len(),
        start.elapsed().as_secs_f64()
    ))
}

fn criterion_11() -> Outcome {
    let start = Instant::now();
    let params = BoundParams::new(1.0, 1.0, 1.0, FShape::Power { beta: 1.0 }).map_err(err)?;
    let unit = Envelope::Constant(1.0);
    let full_geom = BoundGeometry { distance: 10.0, norm_a: Some(1.0), norm_b: Some(1.0), d_min: None };
    let full = evaluate_bound(BoundKind::Full, &params, &full_geom, 1.0, &unit).map_err(err)?;
    let full_expected = 10.0 * (-5.0f64).exp();
    ensure((full - full_expected).abs() <= 1e-12, || format!("full {full} vs {full_expected}"))?;

    let single_geom = BoundGeometry { distance: 5.0, norm_b: Some(1.0), ..Default::default() };
    let single = evaluate_bound(BoundKind::Single, &params, &single_geom, 2.0, &unit).map_err(err)?;
    let slow = evaluate_bound(BoundKind::SingleSlow, &params, &single_geom, 2.0, &unit).map_err(err)?;
    let single_expected = 36.0 * (-5.0f64).exp();
    ensure((single - slow).abs() <= 1e-12 && (single - single_expected).abs() <= 1e-12, || {
        format!("single {single}, closed form {slow}, expected {single_expected}")
    })?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("full {full:.6} (10e^-5), single {single:.5} = closed form {slow:.5} (36e^-5)"))
}

fn main() {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: usize| only.is_empty() || only.contains(&n);
    let mut collected = Collected::default();
    let mut failed = 0;
    let mut report = |n: usize, name: &str, outcome: Outcome| match outcome {
        Ok(detail) => println!("PASS criterion {n:>2} {name}: {detail}"),
        Err(detail) => {
            failed += 1;
            println!("FAIL criterion {n:>2} {name}: {detail}");
        }
    };
    if wanted(1) {
        report(1, "two-site closed form", criterion_1(&mut collected));
    }
    if wanted(2) {
        report(2, "interaction picture", criterion_2());
    }
    if wanted(3) {
        report(3, "commuting factorization", criterion_3());
    }
    if wanted(4) {
        report(4, "Duhamel inequality", criterion_4());
    }
    if wanted(5) {
        report(5, "twirl equals partial trace", criterion_5());
    }
    if wanted(6) {
        report(6, "dual-pair exactness", criterion_6());
    }
    if wanted(7) {
        report(7, "lightcone fit", criterion_7(&mut collected));
    }
    if wanted(8) {
        report(8, "single-perturbation bound", criterion_8(&mut collected));
    }
    if wanted(9) {
        report(9, "splitting bound", criterion_9(&mut collected));
    }
    if wanted(10) {
        report(10, "trivial cap and determinism", criterion_10(&collected));
    }
    if wanted(11) {
        report(11, "bound arithmetic", criterion_11());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
