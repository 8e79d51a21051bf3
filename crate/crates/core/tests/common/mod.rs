#![allow(dead_code)]

use faer::{c64, Mat};
use lrlab_core::models::{build_disorder_field, build_xxz, DisorderSpec, Hamiltonian};
use lrlab_core::{Lattice, LocalOperator, SiteInterval};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> Mat<c64> {
    let a = Mat::from_fn(n, n, |_, _| c64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0));
    Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// Hamiltonian given by one dense Hermitian term on the whole chain.
pub fn random_hamiltonian(num_sites: usize, seed: u64) -> Hamiltonian {
    let lattice = Lattice::spins(num_sites).unwrap();
    let m = random_hermitian(lattice.dim(), &mut rng(seed));
    let term = LocalOperator::spin(lattice.full(), m).unwrap();
    Hamiltonian::from_terms(lattice, vec![term]).unwrap()
}

/// XX chain with uniform disorder of width `w` on every site.
pub fn disordered_xx(num_sites: usize, w: f64, seed: u64, realization: u64) -> Hamiltonian {
    let lattice = Lattice::spins(num_sites).unwrap();
    let spec = DisorderSpec::new(lattice.full(), w, seed).unwrap();
    let field = build_disorder_field(&spec, &lattice, realization).unwrap();
    build_xxz(lattice, 0.0).unwrap().with_terms(field.iter().map(|p| p.base().clone())).unwrap()
}

pub fn pauli_at(site: usize, p: &str) -> LocalOperator {
    LocalOperator::pauli_string(site, p).unwrap()
}

/// H = σ^z ⊗ σ^z on two sites.
pub fn zz_pair() -> Hamiltonian {
    let lattice = Lattice::spins(2).unwrap();
    Hamiltonian::from_terms(lattice, vec![LocalOperator::pauli_string(0, "zz").unwrap()]).unwrap()
}

pub fn interval(lo: usize, hi: usize) -> SiteInterval {
    SiteInterval { lo, hi }
}
