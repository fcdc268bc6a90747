//! Pure-state decompositions: same-diagonal splits, local search, steering and protocol
//! simulation.

mod same_diag;
mod search;
mod steering;

pub use same_diag::same_diagonal_decomposition;
pub use search::{ensemble_search, ensemble_search_with, Objective, SearchConfig};
pub use steering::{steering_measurement, SteeringMeasurement};

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rayon::prelude::*;

use crate::dnorm::pure_distillation_fidelity;
use crate::error::{Error, Result};
use crate::hermat::random::child_rng;
use crate::hermat::{eig_hermitian, ComplexMatrix, DensityMatrix, StateVector};

/// Smallest weight an ensemble may carry.
pub const MIN_WEIGHT: f64 = 1e-12;

/// Largest reconstruction error accepted between an ensemble and the state it claims to split.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

const SHOTS_PER_BATCH: usize = 1 << 14;

/// Weighted pure states `{w_i, ψ_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub weights: Vec<f64>,
    pub atoms: Vec<StateVector>,
}

impl Ensemble {
    pub fn new(weights: Vec<f64>, atoms: Vec<StateVector>) -> Result<Self> {
        if weights.is_empty() || weights.len() != atoms.len() {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} atoms",
                weights.len(),
                atoms.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= MIN_WEIGHT)) {
            return Err(Error::NotDistribution(format!(
                "weight {w} below {MIN_WEIGHT}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::NotDistribution(format!("weights sum to {total}")));
        }
        let d = atoms[0].dim();
        for a in &atoms {
            if a.dim() != d {
                return Err(Error::DimMismatch(a.dim(), d));
            }
            if !a.is_normalized(1e-9) {
                return Err(Error::InvalidInput(format!("atom has norm {}", a.norm())));
            }
        }
        Ok(Self { weights, atoms })
    }

    /// Spectral decomposition of `ρ`, dropping eigenvalues below [`MIN_WEIGHT`].
    pub fn eigen(rho: &DensityMatrix) -> Result<Self> {
        let e = eig_hermitian(rho.mat())?;
        let mut weights = Vec::new();
        let mut atoms = Vec::new();
        for k in (0..rho.dim()).rev() {
            if e.values[k] >= MIN_WEIGHT {
                weights.push(e.values[k]);
                atoms.push(StateVector::new(e.column(k)));
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(weights, atoms)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].dim()
    }

    /// `Σ_i w_i ψ_i ψ_i†`.
    pub fn average(&self) -> ComplexMatrix {
        let d = self.dim();
        let mut out = ComplexMatrix::zeros(d);
        for (w, a) in self.weights.iter().zip(&self.atoms) {
            let amp = a.amplitudes();
            for i in 0..d {
                for j in 0..d {
                    out[(i, j)] += amp[i] * amp[j].conj() * *w;
                }
            }
        }
        out
    }

    /// Frobenius distance between the average and `rho`.
    pub fn reconstruction_residual(&self, rho: &DensityMatrix) -> Result<f64> {
        if rho.dim() != self.dim() {
            return Err(Error::DimMismatch(rho.dim(), self.dim()));
        }
        Ok((&self.average() - rho.mat()).frobenius_norm())
    }

    /// Largest `| |ψ_i[k]|² − ρ_kk |` over atoms and entries.
    pub fn diagonal_residual(&self, rho: &DensityMatrix) -> f64 {
        let diag = rho.diag();
        self.atoms
            .iter()
            .flat_map(|a| {
                a.amplitudes()
                    .iter()
                    .zip(&diag)
                    .map(|(z, p)| (z.norm_sqr() - p).abs())
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }
}

/// Samples steering outcomes with probability `w_i` and scores each branch by the pure-state
/// distillation fidelity of its atom. Returns the sample mean and its standard error.
pub fn simulate_protocol(
    rho: &DensityMatrix,
    target: &Ensemble,
    m: usize,
    shots: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let residual = target.reconstruction_residual(rho)?;
    if residual > RECONSTRUCTION_TOL {
        return Err(Error::IncompatibleEnsemble(residual));
    }
    if shots == 0 {
        return Err(Error::InvalidInput("shots must be positive".into()));
    }
    let scores = target
        .atoms
        .iter()
        .map(|a| pure_distillation_fidelity(a, m))
        .collect::<Result<Vec<f64>>>()?;
    let sampler =
        WeightedIndex::new(&target.weights).map_err(|e| Error::NotDistribution(e.to_string()))?;

    let batches = shots.div_ceil(SHOTS_PER_BATCH);
    let counts = (0..batches)
        .into_par_iter()
        .map(|b| {
            let n = SHOTS_PER_BATCH.min(shots - b * SHOTS_PER_BATCH);
            let mut rng = child_rng(seed, b as u64);
            let mut c = vec![0usize; scores.len()];
            for _ in 0..n {
                c[sampler.sample(&mut rng)] += 1;
            }
            c
        })
        .reduce(
            || vec![0usize; scores.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    let n = shots as f64;
    let mean = counts
        .iter()
        .zip(&scores)
        .map(|(&c, f)| c as f64 * f)
        .sum::<f64>()
        / n;
    let stderr = if shots > 1 {
        let ss: f64 = counts
            .iter()
            .zip(&scores)
            .map(|(&c, f)| c as f64 * (f - mean).powi(2))
            .sum();
        (ss / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok((mean, stderr))
}

pub(crate) fn zero_vec(d: usize) -> Vec<Complex64> {
    vec![Complex64::new(0.0, 0.0); d]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_weights() {
        let a = StateVector::basis(2, 0);
        assert!(Ensemble::new(vec![0.5], vec![a.clone()]).is_err());
        assert!(Ensemble::new(vec![1.0, 0.0], vec![a.clone(), a.clone()]).is_err());
        assert!(Ensemble::new(vec![1.0], vec![a.scaled(2.0)]).is_err());
    }

    #[test]
    fn eigen_ensemble_reconstructs() {
        let rho = DensityMatrix::diagonal(&[0.2, 0.5, 0.3]).unwrap();
        let e = Ensemble::eigen(&rho).unwrap();
        assert_eq!(e.len(), 3);
        assert!(e.reconstruction_residual(&rho).unwrap() < 1e-14);
    }

    #[test]
    fn single_atom_simulation_is_exact() {
        let psi = StateVector::from_real(&[0.8, 0.6]);
        let rho = DensityMatrix::pure(&psi).unwrap();
        let ens = Ensemble::new(vec![1.0], vec![psi.clone()]).unwrap();
        let (mean, se) = simulate_protocol(&rho, &ens, 2, 1000, 3).unwrap();
        assert_eq!(mean, pure_distillation_fidelity(&psi, 2).unwrap());
        assert_eq!(se, 0.0);
    }

    #[test]
    fn plus_minus_simulation_scores_one() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let ens = Ensemble::new(
            vec![0.5, 0.5],
            vec![
                StateVector::from_real(&[s, s]),
                StateVector::from_real(&[s, -s]),
            ],
        )
        .unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        let (mean, se) = simulate_protocol(&rho, &ens, 2, 100_000, 9).unwrap();
        assert!((mean - 1.0).abs() < 1e-12);
        assert!(se < 1e-12);
    }

    #[test]
    fn same_diagonal_simulation_matches_closed_form() {
        let rho = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
        let ens = same_diagonal_decomposition(&rho).unwrap();
        let (mean, se) = simulate_protocol(&rho, &ens, 2, 100_000, 11).unwrap();
        let exact = (2.0 + 3f64.sqrt()) / 4.0;
        assert!((mean - exact).abs() <= 3.0 * se.max(1e-12), "{mean} {se}");
    }

    #[test]
    fn simulation_is_deterministic() {
        let rho = DensityMatrix::diagonal(&[0.6, 0.4]).unwrap();
        let ens = Ensemble::eigen(&rho).unwrap();
        let a = simulate_protocol(&rho, &ens, 2, 50_000, 5).unwrap();
        let b = simulate_protocol(&rho, &ens, 2, 50_000, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mismatched_target_rejected() {
        let rho = DensityMatrix::maximally_mixed(2);
        let ens = Ensemble::new(vec![1.0], vec![StateVector::basis(2, 0)]).unwrap();
        assert!(matches!(
            simulate_protocol(&rho, &ens, 2, 10, 0),
            Err(Error::IncompatibleEnsemble(_))
        ));
    }
}
