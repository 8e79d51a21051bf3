//! Numerical checks of the individual steps in the stability argument:
//! interaction-picture factorization, factorization of commuting
//! time-ordered exponentials, the Duhamel estimate, support restriction and
//! the splitting of the interaction factor into left and right parts.

use std::collections::BTreeMap;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::lattice::{Lattice, SiteInterval};
use crate::linalg;
use crate::metrics::{adaptive_simpson, evaluate_bound, BoundGeometry, BoundKind, BoundParams, Envelope, RecordKind, RecordMeta, ScanRecord};
use crate::models::{Hamiltonian, PerturbationTerm};
use crate::operator::{commutator_norm, embed, restrict, spectral_norm, GlobalOperator, LocalOperator};
use crate::propagation::{
    evolve_full, interaction_factor, split_factors, time_ordered_checkpoints, FactorMethod, Propagator, TimeOrderedOptions,
};
use crate::{Error, Result};

/// Sites above which the proof checks refuse to build full time-ordered matrices.
pub const MAX_CHECK_SITES: usize = 10;

/// Outcome of one check: for identities `lhs` is the residual and `rhs` is 0;
/// for inequalities both sides are reported. `pass ⇔ lhs ≤ rhs + tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofCheckReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
    pub pass: bool,
    pub metadata: BTreeMap<String, String>,
}

impl ProofCheckReport {
    pub fn new(name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self { name: name.into(), lhs, rhs, tol, pass: lhs <= rhs + tol, metadata: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }
}

fn guard_size(lattice: &Lattice, max_sites: usize) -> Result<()> {
    if lattice.num_sites() > max_sites {
        return Err(Error::Budget {
            what: format!("proof check on {} sites", lattice.num_sites()),
            dim: lattice.dim(),
            cap: lattice.block_dim(max_sites),
        });
    }
    Ok(())
}

/// ‖V(t) − e^{−iHt} T(t)‖ with V integrated directly from H + h(s) and T
/// integrated from the frame generators.
pub fn verify_interaction_picture(
    h: &Hamiltonian,
    perturbations: &[PerturbationTerm],
    t: f64,
    opts: &TimeOrderedOptions,
) -> Result<ProofCheckReport> {
    let lattice = h.lattice();
    guard_size(&lattice, 8)?;
    let prop = Propagator::new(h)?;
    let v = if perturbations.iter().all(|p| p.is_constant()) {
        evolve_full(h, perturbations, &[t], opts)?.remove(0)
    } else {
        let gen = |s: f64| h.total_at(perturbations, s).map(|g| g.into_matrix());
        GlobalOperator::new(lattice, time_ordered_checkpoints(gen, lattice.dim(), &[t], opts)?.remove(0))?
    };
    let tf = interaction_factor(&prop, h, perturbations, &[t], opts, FactorMethod::Integrated)?.remove(0);
    let rhs = prop.evolve_exact(t).mul(&tf)?;
    let residual = spectral_norm(&v.sub(&rhs)?)?;
    Ok(ProofCheckReport::new("interaction_picture", residual, 0.0, 10.0 * opts.tol)
        .with("t", t)
        .with("num_sites", lattice.num_sites())
        .with("perturbations", perturbations.len()))
}

/// A time-dependent generator on a `dim`-dimensional space.
pub type Generator<'a> = &'a dyn Fn(f64) -> Result<Mat<c64>>;

/// Largest absolute commutator defect tolerated by the factorization check.
pub const COMMUTATION_DEFECT: f64 = 1e-12;

/// ‖T_{g1+g2} − T_{g1} T_{g2}‖ after checking [g1(s1), g2(s2)] = 0 on a grid.
pub fn verify_commuting_factorization(
    g1: Generator<'_>,
    g2: Generator<'_>,
    dim: usize,
    t: f64,
    opts: &TimeOrderedOptions,
) -> Result<ProofCheckReport> {
    let grid: Vec<f64> = (0..=8).map(|k| t * k as f64 / 8.0).collect();
    let a: Vec<Mat<c64>> = grid.iter().map(|&s| g1(s)).collect::<Result<_>>()?;
    let b: Vec<Mat<c64>> = grid.iter().map(|&s| g2(s)).collect::<Result<_>>()?;
    let mut defect = 0.0f64;
    for x in &a {
        for y in &b {
            defect = defect.max(linalg::spectral_norm((x * y - y * x).as_ref())?);
        }
    }
    if defect > COMMUTATION_DEFECT {
        return Err(Error::Geometry(format!(
            "generators do not commute at all time pairs (defect {defect:e})"
        )));
    }
    let sum = |s: f64| Ok(g1(s)? + g2(s)?);
    let t_sum = time_ordered_checkpoints(sum, dim, &[t], opts)?.remove(0);
    let t1 = time_ordered_checkpoints(|s| g1(s), dim, &[t], opts)?.remove(0);
    let t2 = time_ordered_checkpoints(|s| g2(s), dim, &[t], opts)?.remove(0);
    let residual = linalg::spectral_norm((&t_sum - &t1 * &t2).as_ref())?;
    Ok(ProofCheckReport::new("commuting_factorization", residual, 0.0, 10.0 * opts.tol)
        .with("t", t)
        .with("commutation_defect", defect))
}

/// ‖T_g(t) − T_e(t)‖ ≤ ∫_0^t ‖g(s) − e(s)‖ ds.
pub fn verify_duhamel(g: Generator<'_>, e: Generator<'_>, dim: usize, t: f64, opts: &TimeOrderedOptions) -> Result<ProofCheckReport> {
    let tg = time_ordered_checkpoints(|s| g(s), dim, &[t], opts)?.remove(0);
    let te = time_ordered_checkpoints(|s| e(s), dim, &[t], opts)?.remove(0);
    let lhs = linalg::spectral_norm((&tg - &te).as_ref())?;
    let failure = std::cell::Cell::new(None);
    let integrand = |s: f64| match g(s).and_then(|x| Ok(linalg::spectral_norm((x - e(s)?).as_ref())?)) {
        Ok(v) => v,
        Err(err) => {
            failure.set(Some(err));
            0.0
        }
    };
    let quad_tol = 1e-10;
    let rhs = adaptive_simpson(&integrand, 0.0, t, quad_tol, 30);
    if let Some(err) = failure.take() {
        return Err(err);
    }
    // Both exponentials carry integration error up to 10·tol each.
    Ok(ProofCheckReport::new("duhamel", lhs, rhs, quad_tol + 20.0 * opts.tol).with("t", t))
}

/// ‖T(t) − T̂(t)T̄(t)‖ per time, with T from the exact full evolution and the
/// split factors integrated in their local spaces. Records use d = w.
#[allow(clippy::too_many_arguments)]
pub fn splitting_error_scan(
    h: &Hamiltonian,
    prop: &Propagator,
    perturbations: &[PerturbationTerm],
    cut: usize,
    half_width: usize,
    times: &[f64],
    opts: &TimeOrderedOptions,
    meta: &RecordMeta,
) -> Result<Vec<ScanRecord>> {
    let lattice = h.lattice();
    guard_size(&lattice, MAX_CHECK_SITES)?;
    let exact = interaction_factor(prop, h, perturbations, times, opts, FactorMethod::FromFullEvolution)?;
    let split = split_factors(prop, perturbations, cut, half_width, times, opts)?;
    let left = SiteInterval { lo: 0, hi: cut };
    let right = SiteInterval { lo: cut + 1, hi: lattice.num_sites() - 1 };
    let mut out = Vec::with_capacity(times.len());
    for (tf, sf) in exact.iter().zip(&split) {
        let prod = sf.left.mul(&sf.right)?;
        let swapped = sf.right.mul(&sf.left)?;
        let order_defect = (prod.matrix() - swapped.matrix()).norm_max();
        if order_defect > 1e-12 {
            return Err(Error::Numeric(format!("split factors fail to commute (defect {order_defect:e})")));
        }
        let v = spectral_norm(&tf.sub(&prod)?)?;
        out.push(meta.record(RecordKind::SplittingError, half_width, sf.t, v, left, right));
    }
    Ok(out)
}

/// Single-instance splitting check against 4Kξe^{−w/ξ}∫f h_max with K
/// multiplied by `safety`.
#[allow(clippy::too_many_arguments)]
pub fn verify_splitting_bound(
    h: &Hamiltonian,
    perturbations: &[PerturbationTerm],
    cut: usize,
    half_width: usize,
    t: f64,
    fitted: &BoundParams,
    safety: f64,
    opts: &TimeOrderedOptions,
) -> Result<ProofCheckReport> {
    let prop = Propagator::new(h)?;
    let meta = RecordMeta::new("splitting", None);
    let lhs = if perturbations.is_empty() {
        0.0
    } else {
        splitting_error_scan(h, &prop, perturbations, cut, half_width, &[t], opts, &meta)?[0].value
    };
    let params = BoundParams { k: fitted.k * safety, ..*fitted };
    let geom = BoundGeometry { distance: half_width as f64, ..Default::default() };
    let rhs = evaluate_bound(BoundKind::Splitting, &params, &geom, t, &Envelope::from_terms(perturbations))?;
    Ok(ProofCheckReport::new("splitting_bound", lhs, rhs, 0.0)
        .with("t", t)
        .with("cut", cut)
        .with("half_width", half_width))
}

/// Both directions of the equivalence between commutator bounds and support
/// restriction:
/// (i) ‖A(t) − (A(t))_{B_r(A)}‖ ≤ (safety·K)‖A‖ f(t) e^{−r/ξ};
/// (ii) ‖[A(t), B]‖ ≤ 2‖B‖ ‖A(t) − (A(t))_{B_{d−1}(A)}‖ + ‖[(A(t))_{B_{d−1}(A)}, B]‖,
///      where the last term vanishes because the ball stops short of B.
#[allow(clippy::too_many_arguments)]
pub fn verify_restriction_equivalence(
    prop: &Propagator,
    a: &LocalOperator,
    radius: usize,
    b: &LocalOperator,
    t: f64,
    fitted: &BoundParams,
    safety: f64,
) -> Result<[ProofCheckReport; 2]> {
    let lattice = prop.lattice();
    let d = a.support().distance(&b.support());
    if d == 0 {
        return Err(Error::Geometry("A and B overlap; the commutator direction needs dist(A,B) >= 1".into()));
    }
    let at = prop.heisenberg(&embed(a, &lattice)?, t)?;
    let norm_a = a.norm()?;
    let ball = a.support().ball(radius, &lattice);
    let err_r = spectral_norm(&at.sub(&restrict(&at, ball)?)?)?;
    let params = BoundParams { k: fitted.k * safety, ..*fitted };
    let geom = BoundGeometry { distance: radius as f64, norm_a: Some(norm_a), ..Default::default() };
    let rhs_i = evaluate_bound(BoundKind::Restriction, &params, &geom, t, &Envelope::Constant(0.0))?;
    let first = ProofCheckReport::new("restriction_bound", err_r, rhs_i, 0.0)
        .with("t", t)
        .with("radius", radius);

    let bg = embed(b, &lattice)?;
    let inner_ball = a.support().ball(d - 1, &lattice);
    let restricted = restrict(&at, inner_ball)?;
    let err_d = spectral_norm(&at.sub(&restricted)?)?;
    let remainder = commutator_norm(&restricted, &bg)?;
    let lhs = commutator_norm(&at, &bg)?;
    let rhs_ii = 2.0 * b.norm()? * err_d + remainder;
    let second = ProofCheckReport::new("restriction_to_commutator", lhs, rhs_ii, 1e-10)
        .with("t", t)
        .with("distance", d)
        .with("restricted_commutator", remainder);
    Ok([first, second])
}

/// The assembly step: with B right of the cut,
/// ‖[V†AV, B]‖ ≤ 4‖A‖‖B‖‖T − T̂T̄‖ + ‖[A(t), T̄BT̄†]‖.
#[allow(clippy::too_many_arguments)]
pub fn verify_assembly(
    h: &Hamiltonian,
    perturbations: &[PerturbationTerm],
    a: &LocalOperator,
    b: &LocalOperator,
    cut: usize,
    half_width: usize,
    t: f64,
    opts: &TimeOrderedOptions,
) -> Result<ProofCheckReport> {
    let lattice = h.lattice();
    guard_size(&lattice, MAX_CHECK_SITES)?;
    if b.support().lo <= cut {
        return Err(Error::Geometry(format!("B on {} must lie right of the cut {cut}", b.support())));
    }
    let prop = Propagator::new(h)?;
    let (ag, bg) = (embed(a, &lattice)?, embed(b, &lattice)?);
    let v = evolve_full(h, perturbations, &[t], opts)?.remove(0);
    let lhs = commutator_norm(&ag.conjugated_by(&v)?, &bg)?;
    let tf = interaction_factor(&prop, h, perturbations, &[t], opts, FactorMethod::FromFullEvolution)?.remove(0);
    let sf = split_factors(&prop, perturbations, cut, half_width, &[t], opts)?.remove(0);
    let split_err = spectral_norm(&tf.sub(&sf.left.mul(&sf.right)?)?)?;
    let dressed_b = bg.conjugated_by(&sf.right.adjoint())?;
    let tail = commutator_norm(&prop.heisenberg(&ag, t)?, &dressed_b)?;
    let rhs = 4.0 * a.norm()? * b.norm()? * split_err + tail;
    Ok(ProofCheckReport::new("assembly", lhs, rhs, 1e-9)
        .with("t", t)
        .with("splitting_error", split_err)
        .with("dressed_commutator", tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::pauli;

    #[test]
    fn duhamel_analytic_case() {
        let x = pauli('x').unwrap();
        let g = move |_: f64| Ok(x.clone());
        let e = |_: f64| Ok(linalg::zeros(2));
        let r = verify_duhamel(&g, &e, 2, std::f64::consts::PI, &TimeOrderedOptions::default()).unwrap();
        assert!((r.lhs - 2.0).abs() < 1e-8);
        assert!((r.rhs - std::f64::consts::PI).abs() < 1e-9);
        assert!(r.pass);
        let same = verify_duhamel(&e, &e, 2, 1.0, &TimeOrderedOptions::default()).unwrap();
        assert_eq!(same.lhs, 0.0);
    }

    #[test]
    fn factorization_guard() {
        let x = pauli('x').unwrap();
        let z = pauli('z').unwrap();
        let g1 = move |_: f64| Ok(x.clone());
        let g2 = move |_: f64| Ok(z.clone());
        let r = verify_commuting_factorization(&g1, &g2, 2, 1.0, &TimeOrderedOptions::default());
        assert!(matches!(r, Err(Error::Geometry(_))));
        let zero = |_: f64| Ok(linalg::zeros(2));
        let r = verify_commuting_factorization(&g1, &zero, 2, 1.0, &TimeOrderedOptions::default()).unwrap();
        assert!(r.lhs < 1e-14 && r.pass);
    }
}
