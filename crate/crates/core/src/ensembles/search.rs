//! Local search over pure-state decompositions.
//!
//! Every decomposition of `ρ = Σ_j λ_j e_j e_j†` into `K` atoms has the form
//! `√w_i ψ_i = Σ_j U_ij √λ_j e_j` for a `K × r` isometry `U`. The search moves a free complex
//! `K × r` matrix `G` and orthonormalizes its columns, so every candidate reconstructs `ρ`
//! exactly.

use num_complex::Complex64;
use rayon::prelude::*;

use super::{same_diagonal_decomposition, Ensemble, MIN_WEIGHT};
use crate::dnorm::pure_distillation_fidelity;
use crate::error::{Error, Result};
use crate::hermat::random::{child_rng, gaussian};
use crate::hermat::{eig_hermitian, entropy_bits, ComplexMatrix, DensityMatrix, StateVector};

/// Convex-roof objectives over pure-state decompositions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// `max Σ p_i F(ψ_i, m)`: assisted fidelity of distillation.
    MaxAvgPureFidelity(usize),
    /// `min max_i ‖ψ_i‖∞²`.
    MinMaxInfNormSq,
    /// `max Σ p_i S(Δ(ψ_i))`: coherence of assistance.
    MaxAvgDiagEntropy,
}

impl Objective {
    fn maximizes(self) -> bool {
        !matches!(self, Objective::MinMaxInfNormSq)
    }

    pub fn evaluate(self, ens: &Ensemble) -> Result<f64> {
        Ok(match self {
            Objective::MaxAvgPureFidelity(m) => {
                let mut acc = 0.0;
                for (w, a) in ens.weights.iter().zip(&ens.atoms) {
                    acc += w * pure_distillation_fidelity(a, m)?;
                }
                acc
            }
            Objective::MinMaxInfNormSq => ens
                .atoms
                .iter()
                .map(|a| a.linf().powi(2))
                .fold(0.0, f64::max),
            Objective::MaxAvgDiagEntropy => ens
                .weights
                .iter()
                .zip(&ens.atoms)
                .map(|(w, a)| {
                    let p: Vec<f64> = a.amplitudes().iter().map(|z| z.norm_sqr()).collect();
                    w * entropy_bits(&p)
                })
                .sum(),
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    pub restarts: usize,
    /// Objective evaluations allowed per restart.
    pub evaluations: usize,
    pub seed: u64,
    pub initial_step: f64,
    pub min_step: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            evaluations: 10_000,
            seed: 0xe75e_b1e5,
            initial_step: 0.5,
            min_step: 1e-9,
        }
    }
}

pub fn ensemble_search(
    rho: &DensityMatrix,
    objective: Objective,
    atoms_cap: usize,
) -> Result<(Ensemble, f64)> {
    ensemble_search_with(rho, objective, atoms_cap, &SearchConfig::default())
}

pub fn ensemble_search_with(
    rho: &DensityMatrix,
    objective: Objective,
    atoms_cap: usize,
    cfg: &SearchConfig,
) -> Result<(Ensemble, f64)> {
    if let Objective::MaxAvgPureFidelity(0) = objective {
        return Err(Error::BadM(0.0));
    }
    let basis = SupportBasis::new(rho)?;
    let r = basis.rank();
    if atoms_cap < r {
        return Err(Error::InvalidInput(format!(
            "atoms_cap {atoms_cap} is below the rank {r} of the state"
        )));
    }
    if r == 1 {
        let ens = basis.ensemble(&ComplexMatrix::identity(1), 1)?;
        let v = objective.evaluate(&ens)?;
        return Ok((ens, v));
    }

    let k = atoms_cap;
    let sign = if objective.maximizes() { 1.0 } else { -1.0 };
    let score = |g: &[Complex64]| -> f64 {
        basis
            .ensemble_from_params(g, k)
            .and_then(|e| objective.evaluate(&e))
            .map(|v| sign * v)
            .unwrap_or(f64::NEG_INFINITY)
    };

    let mut starts: Vec<(Vec<Complex64>, f64)> = Vec::new();
    if rho.dim() <= 3 {
        if let Ok(sd) = same_diagonal_decomposition(rho) {
            if let Some(g) = basis.params_from_ensemble(&sd, k) {
                starts.push((g, cfg.initial_step * 1e-2));
            }
        }
    }
    // Eigen-ensemble: U = identity padded with zero rows.
    let mut eig_start = vec![Complex64::new(0.0, 0.0); k * r];
    for j in 0..r {
        eig_start[j * r + j] = Complex64::new(1.0, 0.0);
    }
    starts.push((eig_start, cfg.initial_step));
    let fixed = starts.len();
    for i in 0..cfg.restarts.saturating_sub(fixed) {
        let mut rng = child_rng(cfg.seed, i as u64);
        let g: Vec<Complex64> = (0..k * r)
            .map(|_| Complex64::new(gaussian(&mut rng), gaussian(&mut rng)))
            .collect();
        starts.push((g, cfg.initial_step));
    }

    let results: Vec<(Vec<Complex64>, f64)> = starts
        .into_par_iter()
        .map(|(g, step)| pattern_search(g, step, cfg, &score))
        .collect();
    let (best_g, _) = results
        .into_iter()
        .fold(None::<(Vec<Complex64>, f64)>, |acc, cur| match acc {
            Some(a) if a.1 >= cur.1 => Some(a),
            _ => Some(cur),
        })
        .ok_or_else(|| Error::NumericalFailure("no search start".into()))?;
    let ens = basis.ensemble_from_params(&best_g, k)?;
    let residual = (&ens.average() - rho.mat()).frobenius_norm();
    if residual > 1e-8 {
        return Err(Error::NumericalFailure(format!(
            "ensemble reconstruction residual {residual:.3e}"
        )));
    }
    let value = objective.evaluate(&ens)?;
    Ok((ens, value))
}

/// Coordinate-wise pattern search on the real and imaginary parts of `g`, maximizing `score`.
fn pattern_search(
    mut g: Vec<Complex64>,
    mut step: f64,
    cfg: &SearchConfig,
    score: &impl Fn(&[Complex64]) -> f64,
) -> (Vec<Complex64>, f64) {
    let mut best = score(&g);
    let mut evals = 1usize;
    while step >= cfg.min_step && evals < cfg.evaluations {
        let mut improved = false;
        for idx in 0..2 * g.len() {
            for dir in [1.0, -1.0] {
                let old = g[idx / 2];
                let delta = dir * step;
                if idx % 2 == 0 {
                    g[idx / 2].re += delta;
                } else {
                    g[idx / 2].im += delta;
                }
                let s = score(&g);
                evals += 1;
                if s > best {
                    best = s;
                    improved = true;
                    break;
                }
                g[idx / 2] = old;
            }
            if evals >= cfg.evaluations {
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (g, best)
}

/// Eigen-data of `ρ` on its support.
pub(crate) struct SupportBasis {
    sqrt_values: Vec<f64>,
    /// Eigenvectors `e_j` (support only).
    vectors: Vec<Vec<Complex64>>,
    dim: usize,
}

impl SupportBasis {
    pub(crate) fn new(rho: &DensityMatrix) -> Result<Self> {
        let e = eig_hermitian(rho.mat())?;
        let top = e.max_value();
        let mut sqrt_values = Vec::new();
        let mut vectors = Vec::new();
        for k in (0..rho.dim()).rev() {
            if e.values[k] > 1e-13 * top.max(1.0) {
                sqrt_values.push(e.values[k].sqrt());
                vectors.push(e.column(k));
            }
        }
        Ok(Self {
            sqrt_values,
            vectors,
            dim: rho.dim(),
        })
    }

    pub(crate) fn rank(&self) -> usize {
        self.sqrt_values.len()
    }

    /// Orthonormalizes the columns of the `k × r` matrix `g` (row-major) and builds the ensemble.
    fn ensemble_from_params(&self, g: &[Complex64], k: usize) -> Result<Ensemble> {
        let r = self.rank();
        // U = G (G†G)^{-1/2}
        let gram = ComplexMatrix::from_fn(r, |a, b| {
            (0..k).map(|i| g[i * r + a].conj() * g[i * r + b]).sum()
        });
        let e = eig_hermitian(&gram)?;
        if e.min_value() <= 1e-14 * e.max_value().max(1e-300) {
            return Err(Error::NumericalFailure("degenerate search point".into()));
        }
        let inv_sqrt = e.map_values(|l| 1.0 / l.sqrt());
        let u: Vec<Complex64> = (0..k)
            .flat_map(|i| {
                (0..r)
                    .map(|b| (0..r).map(|a| g[i * r + a] * inv_sqrt[(a, b)]).sum())
                    .collect::<Vec<Complex64>>()
            })
            .collect();
        self.ensemble_from_isometry(&u, k)
    }

    fn ensemble(&self, u: &ComplexMatrix, k: usize) -> Result<Ensemble> {
        let flat: Vec<Complex64> = u.as_slice().to_vec();
        self.ensemble_from_isometry(&flat, k)
    }

    /// Atoms `√w_i ψ_i = Σ_j U_ij √λ_j e_j` for a row-major `k × r` isometry.
    fn ensemble_from_isometry(&self, u: &[Complex64], k: usize) -> Result<Ensemble> {
        let r = self.rank();
        let mut weights = Vec::new();
        let mut atoms = Vec::new();
        for i in 0..k {
            let mut amp = vec![Complex64::new(0.0, 0.0); self.dim];
            for j in 0..r {
                let c = u[i * r + j] * self.sqrt_values[j];
                for (a, e) in amp.iter_mut().zip(&self.vectors[j]) {
                    *a += c * e;
                }
            }
            let w: f64 = amp.iter().map(|z| z.norm_sqr()).sum();
            if w < MIN_WEIGHT {
                continue;
            }
            weights.push(w);
            atoms.push(StateVector::new(amp).scaled(1.0 / w.sqrt()));
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ensemble::new(weights, atoms)
    }

    /// Inverse map: `U_ij = ⟨e_j|√w_i ψ_i⟩ / √λ_j`, padded with zero rows to `k` atoms.
    fn params_from_ensemble(&self, ens: &Ensemble, k: usize) -> Option<Vec<Complex64>> {
        let r = self.rank();
        if ens.len() > k {
            return None;
        }
        let mut g = vec![Complex64::new(0.0, 0.0); k * r];
        for (i, (w, a)) in ens.weights.iter().zip(&ens.atoms).enumerate() {
            for j in 0..r {
                let overlap: Complex64 = self.vectors[j]
                    .iter()
                    .zip(a.amplitudes())
                    .map(|(e, z)| e.conj() * z)
                    .sum();
                g[i * r + j] = overlap * w.sqrt() / self.sqrt_values[j];
            }
        }
        Some(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dnorm::mnorm;
    use crate::hermat::random::{random_density, random_density_matrix, seeded_rng};
    use crate::hermat::{delta_vector, shannon_entropy};

    #[test]
    fn qubit_fidelity_matches_bound() {
        let mut rng = seeded_rng(41);
        for _ in 0..5 {
            let rho = random_density(2, &mut rng);
            let (ens, v) = ensemble_search(&rho, Objective::MaxAvgPureFidelity(2), 4).unwrap();
            let nb = mnorm(&delta_vector(&rho), 2.0).unwrap().value;
            assert!((v - nb * nb / 2.0).abs() < 1e-5);
            assert!((&ens.average() - rho.mat()).frobenius_norm() < 1e-8);
        }
    }

    #[test]
    fn pure_input_single_atom() {
        let mut rng = seeded_rng(42);
        let rho = random_density_matrix(4, 1, &mut rng);
        let (ens, v) = ensemble_search(&rho, Objective::MinMaxInfNormSq, 4).unwrap();
        assert_eq!(ens.len(), 1);
        assert!((v - ens.atoms[0].linf().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn qubit_entropy_reaches_diagonal_entropy() {
        let rho = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
        let (_, v) = ensemble_search(&rho, Objective::MaxAvgDiagEntropy, 2).unwrap();
        let s = shannon_entropy(&[0.75, 0.25]).unwrap();
        assert!((v - s).abs() < 1e-4, "{v} vs {s}");
        assert!((s - 0.811_278_124_459_132_8).abs() < 1e-12);
    }

    #[test]
    fn ququart_min_max_is_above_relaxation() {
        let mut rng = seeded_rng(43);
        let rho = random_density(4, &mut rng);
        let cfg = SearchConfig {
            restarts: 4,
            evaluations: 2000,
            ..SearchConfig::default()
        };
        let (_, v) = ensemble_search_with(&rho, Objective::MinMaxInfNormSq, 6, &cfg).unwrap();
        assert!(v >= rho.max_diag() - 1e-12);
    }

    #[test]
    fn cap_below_rank_rejected() {
        let rho = DensityMatrix::maximally_mixed(3);
        assert!(matches!(
            ensemble_search(&rho, Objective::MaxAvgDiagEntropy, 2),
            Err(Error::InvalidInput(_))
        ));
    }
}
