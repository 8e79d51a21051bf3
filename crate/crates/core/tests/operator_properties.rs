use faer::{c64, Mat, Side};
use lrlab_core::linalg;
use lrlab_core::operator::{commutator_norm, distance, embed, pauli_twirl, restrict, spectral_norm};
use lrlab_core::{GlobalOperator, Lattice, LocalOperator, SiteInterval};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> Mat<c64> {
    Mat::from_fn(n, n, |_, _| c64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0))
}

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> Mat<c64> {
    let a = random_matrix(n, rng);
    Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

fn random_global(lattice: Lattice, seed: u64) -> GlobalOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GlobalOperator::new(lattice, random_matrix(lattice.dim(), &mut rng)).unwrap()
}

fn interval(n: usize) -> impl Strategy<Value = SiteInterval> {
    (0..n).prop_flat_map(move |lo| (Just(lo), lo..n)).prop_map(|(lo, hi)| SiteInterval { lo, hi })
}

#[test]
fn embedding_preserves_the_norm_of_a_random_hermitian() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let h = random_hermitian(4, &mut rng);
    let local = LocalOperator::spin(SiteInterval { lo: 0, hi: 1 }, h.clone()).unwrap();
    let lattice = Lattice::spins(4).unwrap();
    let global = embed(&local, &lattice).unwrap();
    // Oracle: eigenvalues of the 4x4 block and of the full 16x16 matrix.
    let small = h.self_adjoint_eigenvalues(Side::Lower).unwrap();
    let big = global.matrix().self_adjoint_eigenvalues(Side::Lower).unwrap();
    let small_norm = small[0].abs().max(small[3].abs());
    let big_norm = big[0].abs().max(big[15].abs());
    assert!((small_norm - big_norm).abs() < 1e-12);
    assert!((spectral_norm(&global).unwrap() - small_norm).abs() < 1e-12);
}

#[test]
fn scaled_unitary_has_norm_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = random_hermitian(8, &mut rng);
    let u = linalg::exp_hermitian(h.as_ref(), 1.0).unwrap();
    let lattice = Lattice::spins(3).unwrap();
    let two_u = GlobalOperator::new(lattice, Mat::from_fn(8, 8, |i, j| u[(i, j)] * 2.0)).unwrap();
    let svals = two_u.matrix().singular_values().unwrap();
    assert!(svals.iter().all(|s| (s - 2.0).abs() < 1e-12));
    assert!((spectral_norm(&two_u).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn twirl_matches_restriction_on_random_hermitian() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let lattice = Lattice::spins(4).unwrap();
    let x = GlobalOperator::new(lattice, random_hermitian(16, &mut rng)).unwrap();
    let region = SiteInterval::site(0);
    let twirled = pauli_twirl(&x, region).unwrap();
    let restricted = restrict(&x, region).unwrap();
    assert!((twirled.matrix() - restricted.matrix()).norm_max() <= 1e-12);
}

#[test]
fn restriction_of_interior_region_matches_explicit_partial_trace() {
    // Oracle: x = a ⊗ b ⊗ c restricted to the middle site is (tr a / 2)(tr c / 2) b.
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (a, b, c) = (random_matrix(2, &mut rng), random_matrix(2, &mut rng), random_matrix(2, &mut rng));
    let x = linalg::kron(linalg::kron(a.as_ref(), b.as_ref()).as_ref(), c.as_ref());
    let lattice = Lattice::spins(3).unwrap();
    let r = restrict(&GlobalOperator::new(lattice, x).unwrap(), SiteInterval::site(1)).unwrap();
    let factor = (a[(0, 0)] + a[(1, 1)]) * (c[(0, 0)] + c[(1, 1)]) * 0.25;
    let id = linalg::identity(2);
    let scaled_b = Mat::from_fn(2, 2, |i, j| b[(i, j)] * factor);
    let expected = linalg::kron(linalg::kron(id.as_ref(), scaled_b.as_ref()).as_ref(), id.as_ref());
    assert!((r.matrix() - expected.as_ref()).norm_max() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn commutator_respects_trivial_bound(seed in any::<u64>(), n in 1usize..4) {
        let lattice = Lattice::spins(n).unwrap();
        let x = random_global(lattice, seed);
        let y = random_global(lattice, seed.wrapping_add(1));
        let c = commutator_norm(&x, &y).unwrap();
        prop_assert!(c <= 2.0 * x.norm().unwrap() * y.norm().unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn restriction_is_idempotent_and_contractive(seed in any::<u64>(), region in interval(4)) {
        let lattice = Lattice::spins(4).unwrap();
        let x = random_global(lattice, seed);
        let once = restrict(&x, region).unwrap();
        let twice = restrict(&once, region).unwrap();
        prop_assert!((once.matrix() - twice.matrix()).norm_max() <= 1e-15);
        prop_assert!(once.norm().unwrap() <= x.norm().unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn restriction_is_linear(seed in any::<u64>(), region in interval(3), s in -2.0f64..2.0) {
        let lattice = Lattice::spins(3).unwrap();
        let x = random_global(lattice, seed);
        let y = random_global(lattice, seed ^ 0xabcdef);
        let combo = x.add(&y.scaled(c64::new(s, 0.0))).unwrap();
        let lhs = restrict(&combo, region).unwrap();
        let rhs = restrict(&x, region).unwrap().add(&restrict(&y, region).unwrap().scaled(c64::new(s, 0.0))).unwrap();
        prop_assert!((lhs.matrix() - rhs.matrix()).norm_max() <= 1e-13);
    }

    #[test]
    fn twirl_equals_restriction(seed in any::<u64>(), n in 1usize..5, region_seed in any::<u64>()) {
        let lattice = Lattice::spins(n).unwrap();
        let lo = (region_seed % n as u64) as usize;
        let hi = lo + ((region_seed / 7) % (n - lo) as u64) as usize;
        let region = SiteInterval { lo, hi };
        let x = random_global(lattice, seed);
        let a = pauli_twirl(&x, region).unwrap();
        let b = restrict(&x, region).unwrap();
        prop_assert!((a.matrix() - b.matrix()).norm_max() <= 1e-12);
    }

    #[test]
    fn embedding_preserves_norm(seed in any::<u64>(), region in interval(4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(1 << region.len(), &mut rng);
        let local = LocalOperator::spin(region, m).unwrap();
        let global = embed(&local, &Lattice::spins(4).unwrap()).unwrap();
        let want = local.norm().unwrap();
        prop_assert!((global.norm().unwrap() - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn distance_is_symmetric_and_monotone(a in interval(12), b in interval(12), grow in 0usize..3) {
        prop_assert_eq!(distance(a, b), distance(b, a));
        let bigger = SiteInterval { lo: a.lo.saturating_sub(grow), hi: (a.hi + grow).min(11) };
        prop_assert!(distance(bigger, b) <= distance(a, b));
        let brute = (a.lo..=a.hi).flat_map(|i| (b.lo..=b.hi).map(move |j| i.abs_diff(j))).min().unwrap();
        prop_assert_eq!(distance(a, b), brute);
    }
}
