//! Seeded generators for random test inputs.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ComplexMatrix, DensityMatrix, StateVector};

/// Reproducible generator used by every stochastic routine in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream for sub-task `index` of a seeded computation.
pub fn child_rng(seed: u64, index: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

/// Standard normal sample via Box-Muller.
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(gaussian(rng), gaussian(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, |_, _| complex_gaussian(rng));
    g.hermitian_part()
}

/// Haar-random pure state.
pub fn random_state_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    let amps: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
    StateVector::normalized(amps).expect("gaussian vector is nonzero")
}

/// Random density matrix of the given rank from a Ginibre ensemble.
pub fn random_density_matrix<R: Rng + ?Sized>(
    dim: usize,
    rank: usize,
    rng: &mut R,
) -> DensityMatrix {
    let rank = rank.clamp(1, dim);
    let mut acc = ComplexMatrix::zeros(dim);
    for _ in 0..rank {
        let v: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        acc = &acc + &ComplexMatrix::outer(&v, &v);
    }
    let tr = acc.trace().re;
    DensityMatrix::from_trusted(acc.scale(1.0 / tr))
}

/// Full-rank random density matrix.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    random_density_matrix(dim, dim, rng)
}
