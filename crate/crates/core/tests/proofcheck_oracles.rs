mod common;

use common::*;
use faer::{c64, Mat};
use lrlab_core::linalg;
use lrlab_core::metrics::{aggregate, fit_lightcone, restriction_error, restriction_scan, BoundParams, FShape, RecordMeta, Statistic, NOISE_FLOOR};
use lrlab_core::models::{Hamiltonian, PerturbationTerm, TimeProfile};
use lrlab_core::operator::embed;
use lrlab_core::proofcheck::{
    verify_assembly, verify_commuting_factorization, verify_duhamel, verify_interaction_picture,
    verify_restriction_equivalence, verify_splitting_bound,
};
use lrlab_core::propagation::{Propagator, TimeOrderedOptions};
use lrlab_core::{Error, Lattice};

fn unit_params() -> BoundParams {
    BoundParams::new(1.0, 1.0, 1.0, FShape::Power { beta: 1.0 }).unwrap()
}

#[test]
fn interaction_picture_cases() {
    let opts = TimeOrderedOptions::with_tol(1e-8);
    let h = random_hamiltonian(4, 61);
    let zero = [PerturbationTerm::constant(pauli_at(0, "x").scaled(0.0)).unwrap()];
    let r = verify_interaction_picture(&h, &zero, 1.0, &opts).unwrap();
    assert!(r.lhs <= 1e-12, "h = 0 residual {}", r.lhs);

    let lattice = Lattice::spins(3).unwrap();
    let ising = Hamiltonian::from_terms(lattice, vec![pauli_at(0, "zz"), pauli_at(1, "zz").scaled(-0.4)]).unwrap();
    let commuting = [PerturbationTerm::new(pauli_at(2, "z"), TimeProfile::harmonic(1.0, 0.0)).unwrap()];
    let r = verify_interaction_picture(&ising, &commuting, 1.5, &opts).unwrap();
    assert!(r.pass && r.lhs <= 10.0 * opts.tol);

    let driven = [PerturbationTerm::new(pauli_at(0, "x"), TimeProfile::harmonic(1.0, 0.0)).unwrap()];
    let r = verify_interaction_picture(&h, &driven, 2.0, &opts).unwrap();
    assert!(r.lhs <= 1e-7, "residual {}", r.lhs);
}

#[test]
fn commuting_factorization_cases() {
    let lattice = Lattice::spins(4).unwrap();
    let x0 = embed(&pauli_at(0, "x"), &lattice).unwrap().into_matrix();
    let y3 = embed(&pauli_at(3, "y"), &lattice).unwrap().into_matrix();
    let opts = TimeOrderedOptions::with_tol(1e-8);
    let g1 = |s: f64| Ok(&x0 * faer::Scale(c64::new(s.sin(), 0.0)));
    let g2 = |s: f64| Ok(&y3 * faer::Scale(c64::new(1.0 + s * s, 0.0)));
    let r = verify_commuting_factorization(&g1, &g2, 16, 1.2, &opts).unwrap();
    assert!(r.pass && r.lhs <= 1e-7, "residual {}", r.lhs);

    let zero = |_: f64| Ok(linalg::zeros(16));
    let r = verify_commuting_factorization(&g1, &zero, 16, 1.2, &opts).unwrap();
    assert!(r.lhs <= 1e-14, "g2 = 0 residual {}", r.lhs);

    let z0 = embed(&pauli_at(0, "z"), &lattice).unwrap().into_matrix();
    let clash = |_: f64| Ok(z0.clone());
    assert!(matches!(verify_commuting_factorization(&g1, &clash, 16, 1.2, &opts), Err(Error::Geometry(_))));
}

#[test]
fn duhamel_cases() {
    let opts = TimeOrderedOptions::default();
    let sx = Mat::from_fn(2, 2, |i, j| c64::new(if i != j { 1.0 } else { 0.0 }, 0.0));
    let g = |_: f64| Ok(sx.clone());
    let r = verify_duhamel(&g, &g, 2, 1.0, &opts).unwrap();
    assert!(r.lhs == 0.0 && r.pass);

    let zero = |_: f64| Ok(linalg::zeros(2));
    let r = verify_duhamel(&g, &zero, 2, std::f64::consts::PI, &opts).unwrap();
    assert!((r.lhs - 2.0).abs() < 1e-8);
    assert!((r.rhs - std::f64::consts::PI).abs() < 1e-9);
    assert!(r.pass);

    let mut rg = rng(3);
    for _ in 0..20 {
        let (a, b) = (random_hermitian(4, &mut rg), random_hermitian(4, &mut rg));
        let ga = |_: f64| Ok(a.clone());
        let gb = |_: f64| Ok(b.clone());
        assert!(verify_duhamel(&ga, &gb, 4, 1.0, &opts).unwrap().pass);
    }
}

#[test]
fn splitting_bound_cases() {
    let opts = TimeOrderedOptions::default();
    let h = disordered_xx(10, 16.0, 5, 0);
    let r = verify_splitting_bound(&h, &[], 4, 2, 1.0, &unit_params(), 2.0, &opts).unwrap();
    assert_eq!(r.lhs, 0.0);

    let far = [PerturbationTerm::constant(pauli_at(0, "z")).unwrap()];
    let t = 1.0;
    let r = verify_splitting_bound(&h, &far, 8, 7, t, &unit_params(), 2.0, &opts).unwrap();
    assert!(r.lhs < 1e-6, "far-left splitting error {}", r.lhs);
    // Oracle: by Duhamel the error is at most ∫ ‖σ^z_0(s) − restriction to [0, 8]‖ ds.
    let prop = Propagator::new(&h).unwrap();
    let meta = RecordMeta::new("duhamel", Some(0));
    let leak = (0..=20)
        .map(|k| restriction_error(&prop, &pauli_at(0, "z"), 8, t * k as f64 / 20.0, &meta).unwrap().value)
        .fold(0.0f64, f64::max);
    assert!(r.lhs <= t * leak + 1e-9, "splitting {} vs leak {leak}", r.lhs);

    let lhs: Vec<f64> = (1..=3)
        .map(|w| verify_splitting_bound(&h, &far, w + 1, w, 1.0, &unit_params(), 2.0, &opts).unwrap().lhs)
        .collect();
    assert!(lhs.windows(2).all(|p| p[1] <= p[0] * 1.05 + 1e-12), "{lhs:?}");
}

#[test]
fn restriction_equivalence_two_site_equality() {
    let prop = Propagator::new(&zz_pair()).unwrap();
    for k in 1..20 {
        let t = 0.17 * k as f64;
        let [_, second] = verify_restriction_equivalence(&prop, &pauli_at(0, "x"), 0, &pauli_at(1, "x"), t, &unit_params(), 1.0)
            .unwrap();
        let expected = 2.0 * (2.0 * t).sin().abs();
        assert!((second.lhs - expected).abs() < 1e-12);
        assert!((second.rhs - expected).abs() < 1e-12);
        assert!(second.pass);
        let [full, _] = verify_restriction_equivalence(&prop, &pauli_at(0, "x"), 1, &pauli_at(1, "x"), t, &unit_params(), 1.0)
            .unwrap();
        assert!(full.lhs == 0.0 && full.pass);
    }
}

#[test]
fn restriction_equivalence_on_disordered_chain() {
    let n = 10;
    let a = pauli_at(0, "z");
    let b = pauli_at(4, "z");
    let times = [1.0, 2.0, 3.0, 4.0, 5.0];
    let mut recs = Vec::new();
    let mut props = Vec::new();
    for r in 0..4 {
        let prop = Propagator::new(&disordered_xx(n, 8.0, 21, r)).unwrap();
        let meta = RecordMeta::new("restrict", Some(r));
        recs.extend(restriction_scan(&prop, &a, &[1, 2, 3, 4, 5], &times, &meta).unwrap());
        props.push(prop);
    }
    let fit = fit_lightcone(&aggregate(&recs, Statistic::Max), NOISE_FLOOR).unwrap();
    let params = fit.bound_params(1.0).unwrap();
    for prop in &props {
        for &t in &times {
            let [first, second] = verify_restriction_equivalence(prop, &a, 3, &b, t, &params, 2.0).unwrap();
            assert!(first.pass, "restriction {} > {} at t = {t}", first.lhs, first.rhs);
            assert!(second.pass, "commutator {} > {} at t = {t}", second.lhs, second.rhs);
        }
    }
}

#[test]
fn assembly_inequality_holds() {
    let h = disordered_xx(8, 4.0, 9, 1);
    let perts = [
        PerturbationTerm::new(pauli_at(0, "x").scaled(0.7), TimeProfile::harmonic(2.0, 0.3)).unwrap(),
        PerturbationTerm::constant(pauli_at(7, "z").scaled(0.5)).unwrap(),
    ];
    for t in [0.5, 1.0] {
        let r = verify_assembly(&h, &perts, &pauli_at(2, "z"), &pauli_at(5, "x"), 3, 2, t, &TimeOrderedOptions::default())
            .unwrap();
        assert!(r.pass, "{} > {}", r.lhs, r.rhs);
    }
}
