//! Measurements on the purifying system that steer the other half onto a chosen ensemble.
//!
//! Reshape the purification as `ψ = Σ_{a,b} M_ab |a⟩|b⟩`. Measuring `E` on the first factor
//! leaves the second in `Mᵀ Eᵀ M̄` (unnormalized), so `E_i = e_i e_i†` with
//! `e_i = √w_i M conj(ρ_B⁺ ψ_i)` produces `w_i ψ_i ψ_i†`.

use num_complex::Complex64;

use super::{zero_vec, Ensemble, RECONSTRUCTION_TOL};
use crate::error::{Error, Result};
use crate::hermat::{eig_hermitian, partial_trace_first, ComplexMatrix, StateVector};

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringMeasurement {
    /// POVM elements on the purifying system.
    pub operators: Vec<ComplexMatrix>,
    pub dim_a: usize,
}

impl SteeringMeasurement {
    /// `‖Σ_i E_i − 𝟙‖_F`.
    pub fn completeness_residual(&self) -> f64 {
        let mut sum = ComplexMatrix::zeros(self.dim_a);
        for e in &self.operators {
            sum = &sum + e;
        }
        (&sum - &ComplexMatrix::identity(self.dim_a)).frobenius_norm()
    }

    /// Unnormalized post-measurement states `Tr_A[(E_i ⊗ 𝟙) ψψ†]` on the second factor.
    pub fn branch_states(&self, purification: &StateVector) -> Result<Vec<ComplexMatrix>> {
        let m = reshape(purification, self.dim_a)?;
        let da = self.dim_a;
        Ok(self
            .operators
            .iter()
            .map(|e| {
                ComplexMatrix::from_fn(m.dim_b, |b, bp| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for a in 0..da {
                        for ap in 0..da {
                            acc += e[(ap, a)] * m.at(a, b) * m.at(ap, bp).conj();
                        }
                    }
                    acc
                })
            })
            .collect())
    }
}

/// Builds the measurement on the first `dim_a` factor of `purification` that realizes `target`.
pub fn steering_measurement(
    purification: &StateVector,
    dim_a: usize,
    target: &Ensemble,
) -> Result<SteeringMeasurement> {
    if !purification.is_normalized(1e-9) {
        return Err(Error::NotAPurification(format!(
            "joint vector has norm {}",
            purification.norm()
        )));
    }
    let m = reshape(purification, dim_a)?;
    let dim_b = m.dim_b;
    if target.dim() != dim_b {
        return Err(Error::DimMismatch(target.dim(), dim_b));
    }
    let rho_b = partial_trace_first(purification, dim_a, dim_b)?;
    let residual = (&target.average() - &rho_b).frobenius_norm();
    if residual > RECONSTRUCTION_TOL {
        return Err(Error::IncompatibleEnsemble(residual));
    }

    let e = eig_hermitian(&rho_b)?;
    let cutoff = 1e-12 * e.max_value().max(1e-300);
    let pinv = e.map_values(|l| if l > cutoff { 1.0 / l } else { 0.0 });

    let mut operators = Vec::with_capacity(target.len());
    for (w, atom) in target.weights.iter().zip(&target.atoms) {
        let y: Vec<Complex64> = pinv
            .matvec(atom.amplitudes())
            .into_iter()
            .map(|z| z.conj() * w.sqrt())
            .collect();
        let mut v = zero_vec(dim_a);
        for (a, va) in v.iter_mut().enumerate() {
            *va = (0..dim_b).map(|b| m.at(a, b) * y[b]).sum();
        }
        operators.push(ComplexMatrix::outer(&v, &v));
    }
    // Whatever lies outside the range of M never touches the state; park it on outcome 0.
    let mut total = ComplexMatrix::zeros(dim_a);
    for op in &operators {
        total = &total + op;
    }
    let complement = &ComplexMatrix::identity(dim_a) - &total;
    operators[0] = (&operators[0] + &complement).hermitian_part();
    Ok(SteeringMeasurement { operators, dim_a })
}

/// Coefficients `M_ab` of a joint vector, row-major `dim_a × dim_b`.
struct Coefficients {
    data: Vec<Complex64>,
    dim_b: usize,
}

impl Coefficients {
    fn at(&self, a: usize, b: usize) -> Complex64 {
        self.data[a * self.dim_b + b]
    }
}

fn reshape(purification: &StateVector, dim_a: usize) -> Result<Coefficients> {
    let n = purification.dim();
    if dim_a == 0 || !n.is_multiple_of(dim_a) {
        return Err(Error::NotAPurification(format!(
            "joint dimension {n} is not a multiple of {dim_a}"
        )));
    }
    Ok(Coefficients {
        data: purification.amplitudes().to_vec(),
        dim_b: n / dim_a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::same_diagonal_decomposition;
    use crate::hermat::random::{random_density, seeded_rng};
    use crate::hermat::{purify, DensityMatrix};

    fn check(psi: &StateVector, dim_a: usize, target: &Ensemble) -> SteeringMeasurement {
        let meas = steering_measurement(psi, dim_a, target).unwrap();
        assert!(meas.completeness_residual() < 1e-9);
        let branches = meas.branch_states(psi).unwrap();
        for (i, (w, atom)) in target.weights.iter().zip(&target.atoms).enumerate() {
            let want = atom.projector().scale(*w);
            let got = &branches[i];
            assert!((got - &want).frobenius_norm() < 1e-8);
            let p = got.trace().re;
            assert!((p - w).abs() < 1e-9);
            let fid = atom.projector().inner_re(got) / p;
            assert!(fid > 1.0 - 1e-8);
        }
        for e in &meas.operators {
            assert!(eig_hermitian(e).unwrap().min_value() > -1e-10);
        }
        meas
    }

    #[test]
    fn bell_state_steered_to_plus_minus() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::from_real(&[s, 0.0, 0.0, s]);
        let target = Ensemble::new(
            vec![0.5, 0.5],
            vec![
                StateVector::from_real(&[s, s]),
                StateVector::from_real(&[s, -s]),
            ],
        )
        .unwrap();
        let meas = check(&bell, 2, &target);
        // Alice measures the X basis: E_± = |±⟩⟨±|.
        let plus = StateVector::from_real(&[s, s]).projector();
        assert!((&meas.operators[0] - &plus).frobenius_norm() < 1e-12);
    }

    #[test]
    fn eigen_ensemble_is_schmidt_basis() {
        let mut rng = seeded_rng(71);
        let rho = random_density(3, &mut rng);
        let psi = purify(&rho).unwrap();
        let target = Ensemble::eigen(&rho).unwrap();
        let meas = check(&psi, 3, &target);
        for op in &meas.operators {
            let e = eig_hermitian(op).unwrap();
            assert!((e.max_value() - 1.0).abs() < 1e-9);
            assert!(e.values[..2].iter().all(|v| v.abs() < 1e-9));
            // Rank-one projector onto a computational basis vector of the purifying system.
            assert!((op.diagonal_real().iter().cloned().fold(0.0, f64::max) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn random_qutrit_same_diagonal() {
        let mut rng = seeded_rng(72);
        for _ in 0..5 {
            let rho = random_density(3, &mut rng);
            let psi = purify(&rho).unwrap();
            let target = same_diagonal_decomposition(&rho).unwrap();
            check(&psi, 3, &target);
        }
    }

    #[test]
    fn larger_purifying_system() {
        let rho = DensityMatrix::diagonal(&[0.7, 0.3]).unwrap();
        // |ψ⟩ = √0.7 |0⟩|0⟩ + √0.3 |2⟩|1⟩ with a three-level purifying system.
        let mut amp = vec![Complex64::new(0.0, 0.0); 6];
        amp[0] = Complex64::new(0.7f64.sqrt(), 0.0);
        amp[5] = Complex64::new(0.3f64.sqrt(), 0.0);
        let psi = StateVector::new(amp);
        let target = same_diagonal_decomposition(&rho).unwrap();
        check(&psi, 3, &target);
    }

    #[test]
    fn errors() {
        let rho = DensityMatrix::maximally_mixed(2);
        let psi = purify(&rho).unwrap();
        let wrong = Ensemble::new(vec![1.0], vec![StateVector::basis(2, 0)]).unwrap();
        assert!(matches!(
            steering_measurement(&psi, 2, &wrong),
            Err(Error::IncompatibleEnsemble(_))
        ));
        let target = Ensemble::eigen(&rho).unwrap();
        assert!(matches!(
            steering_measurement(&psi, 3, &target),
            Err(Error::NotAPurification(_))
        ));
        assert!(matches!(
            steering_measurement(&psi.scaled(2.0), 2, &target),
            Err(Error::NotAPurification(_))
        ));
    }
}
