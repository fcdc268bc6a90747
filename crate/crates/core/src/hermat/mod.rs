//! Dense complex-Hermitian linear algebra: states, dephasing, square roots, fidelity.

mod eig;
mod matrix;
pub mod random;
mod state;

pub use eig::{eig_hermitian, eig_hermitian_with, Eigh};
pub use matrix::ComplexMatrix;
pub use state::{DensityMatrix, StateVector};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Numerical tolerances shared by the kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Maximum `|a_ij - conj(a_ji)|` accepted as Hermitian.
    pub hermitian_check: f64,
    /// Eigenvalues above `-psd` count as nonnegative and get clamped.
    pub psd: f64,
    /// Allowed deviation of a density matrix trace from 1.
    pub trace: f64,
    /// Jacobi stops once the off-diagonal Frobenius norm falls below this fraction of the total.
    pub jacobi_off_diagonal: f64,
    pub jacobi_max_sweeps: usize,
    /// Largest matrix dimension `tensor_power` will materialize.
    pub dim_cap: usize,
    /// Tolerance for probability vectors.
    pub distribution: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian_check: 1e-9,
            psd: 1e-10,
            trace: 1e-10,
            jacobi_off_diagonal: 1e-13,
            jacobi_max_sweeps: 100,
            dim_cap: 1024,
            distribution: 1e-9,
        }
    }
}

/// Fully dephasing channel Δ: keeps the diagonal, zeros everything else.
pub fn dephase(rho: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::from_trusted(ComplexMatrix::diag(&rho.diag()))
}

pub fn sqrtm_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    sqrtm_psd_with(m, &Tolerances::default())
}

pub fn sqrtm_psd_with(m: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    let e = eig_hermitian_with(m, tol)?;
    if e.min_value() < -tol.psd {
        return Err(Error::NotPsd(e.min_value()));
    }
    Ok(e.map_values(|l| l.max(0.0).sqrt()))
}

/// Squared fidelity `F(ρ,σ) = ‖√ρ√σ‖₁²`.
///
/// The trace norm is evaluated as `Tr √(√ρ σ √ρ)` so only Hermitian eigenproblems are needed.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch(rho.dim(), sigma.dim()));
    }
    let tol = Tolerances::default();
    let sr = sqrtm_psd_with(rho.mat(), &tol)?;
    let inner = sr.matmul(sigma.mat()).matmul(&sr).hermitian_part();
    let e = eig_hermitian_with(&inner, &tol)?;
    if e.min_value() < -tol.psd {
        return Err(Error::NotPsd(e.min_value()));
    }
    let trace_norm: f64 = e.values.iter().map(|&l| l.max(0.0).sqrt()).sum();
    Ok((trace_norm * trace_norm).clamp(0.0, 1.0))
}

pub fn tensor_power(rho: &DensityMatrix, n: usize) -> Result<DensityMatrix> {
    tensor_power_capped(rho, n, Tolerances::default().dim_cap)
}

pub fn tensor_power_capped(rho: &DensityMatrix, n: usize, cap: usize) -> Result<DensityMatrix> {
    if n == 0 {
        return Err(Error::InvalidInput("tensor power needs n >= 1".into()));
    }
    let dim = checked_pow(rho.dim(), n).filter(|&d| d <= cap);
    let Some(_) = dim else {
        return Err(Error::CapExceeded {
            dim: checked_pow(rho.dim(), n).unwrap_or(usize::MAX),
            cap,
        });
    };
    let mut out = rho.clone();
    for _ in 1..n {
        out = out.kron(rho);
    }
    Ok(out)
}

pub(crate) fn checked_pow(base: usize, n: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..n {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// Base-2 Shannon entropy with `0 log 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> Result<f64> {
    let tol = Tolerances::default().distribution;
    if let Some(&bad) = p.iter().find(|&&x| x < -tol || !x.is_finite()) {
        return Err(Error::NotDistribution(format!("entry {bad}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::NotDistribution(format!("sums to {total}")));
    }
    Ok(entropy_bits(p))
}

/// Entropy of a (trusted) probability vector, in bits.
pub(crate) fn entropy_bits(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum::<f64>()
        .max(0.0)
}

/// δ(ρ): the vector of square roots of the diagonal of ρ.
pub fn delta_vector(rho: &DensityMatrix) -> StateVector {
    StateVector::new(
        rho.diag()
            .into_iter()
            .map(|x| Complex64::new(x.max(0.0).sqrt(), 0.0))
            .collect(),
    )
}

/// Reduced state on the second factor of a joint vector ordered `a * dim_b + b`.
pub fn partial_trace_first(
    joint: &StateVector,
    dim_a: usize,
    dim_b: usize,
) -> Result<ComplexMatrix> {
    if joint.dim() != dim_a * dim_b {
        return Err(Error::DimMismatch(joint.dim(), dim_a * dim_b));
    }
    let amp = joint.amplitudes();
    Ok(ComplexMatrix::from_fn(dim_b, |b, bp| {
        (0..dim_a)
            .map(|a| amp[a * dim_b + b] * amp[a * dim_b + bp].conj())
            .sum()
    }))
}

/// Canonical purification `Σ_j √λ_j |j⟩_A |e_j⟩_B` with the purifying system first.
pub fn purify(rho: &DensityMatrix) -> Result<StateVector> {
    let d = rho.dim();
    let e = eig_hermitian(rho.mat())?;
    let mut amp = vec![Complex64::new(0.0, 0.0); d * d];
    for j in 0..d {
        let w = e.values[j].max(0.0).sqrt();
        for b in 0..d {
            amp[j * d + b] = e.vectors[(b, j)] * w;
        }
    }
    Ok(StateVector::new(amp))
}

#[cfg(test)]
mod tests {
    use super::random::{random_density, random_state_vector, seeded_rng};
    use super::*;

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn plus() -> StateVector {
        StateVector::from_real(&[SQRT_HALF, SQRT_HALF])
    }

    #[test]
    fn dephase_plus_is_maximally_mixed() {
        let rho = DensityMatrix::pure(&plus()).unwrap();
        let d = dephase(&rho);
        assert!((d.mat() - &ComplexMatrix::diag(&[0.5, 0.5])).frobenius_norm() < 1e-15);
    }

    #[test]
    fn dephase_fixes_diagonal_states() {
        let rho = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        assert_eq!(dephase(&rho), rho);
    }

    #[test]
    fn dephase_commutes_with_tensor_product() {
        let mut rng = seeded_rng(1);
        for _ in 0..20 {
            let a = random_density(2, &mut rng);
            let b = random_density(2, &mut rng);
            let lhs = dephase(&a.kron(&b));
            let rhs = dephase(&a).kron(&dephase(&b));
            assert!((lhs.mat() - rhs.mat()).max_abs() < 1e-15);
        }
    }

    #[test]
    fn sqrtm_examples() {
        let s = sqrtm_psd(&ComplexMatrix::diag(&[4.0, 1.0])).unwrap();
        assert!((&s - &ComplexMatrix::diag(&[2.0, 1.0])).frobenius_norm() < 1e-14);
        let i = sqrtm_psd(&ComplexMatrix::identity(3)).unwrap();
        assert!((&i - &ComplexMatrix::identity(3)).frobenius_norm() < 1e-14);
    }

    #[test]
    fn sqrtm_random_psd_squares_back() {
        let mut rng = seeded_rng(2);
        for d in 2..7 {
            let rho = random_density(d, &mut rng);
            let s = sqrtm_psd(rho.mat()).unwrap();
            assert!((&s.matmul(&s) - rho.mat()).frobenius_norm() < 1e-9);
        }
    }

    #[test]
    fn sqrtm_rejects_indefinite() {
        let m = ComplexMatrix::diag(&[1.0, -1e-3]);
        assert!(matches!(sqrtm_psd(&m), Err(Error::NotPsd(_))));
    }

    #[test]
    fn fidelity_examples() {
        let mut rng = seeded_rng(3);
        let rho = random_density(3, &mut rng);
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);

        let a = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let b = DensityMatrix::maximally_mixed(2);
        assert!((fidelity(&a, &b).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fidelity_of_pure_states_is_overlap() {
        let mut rng = seeded_rng(4);
        for d in 2..6 {
            let psi = random_state_vector(d, &mut rng);
            let phi = random_state_vector(d, &mut rng);
            let f = fidelity(
                &DensityMatrix::pure(&psi).unwrap(),
                &DensityMatrix::pure(&phi).unwrap(),
            )
            .unwrap();
            assert!((f - psi.inner(&phi).norm_sqr()).abs() < 1e-8, "d={d}");
        }
    }

    #[test]
    fn fidelity_dim_mismatch() {
        let a = DensityMatrix::maximally_mixed(2);
        let b = DensityMatrix::maximally_mixed(3);
        assert!(matches!(fidelity(&a, &b), Err(Error::DimMismatch(2, 3))));
    }

    #[test]
    fn tensor_power_examples() {
        let rho = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        assert_eq!(tensor_power(&rho, 1).unwrap(), rho);
        let sq = tensor_power(&rho, 2).unwrap();
        let want = [0.09, 0.21, 0.21, 0.49];
        for (x, y) in sq.diag().iter().zip(want) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(matches!(
            tensor_power_capped(&rho, 11, 1024),
            Err(Error::CapExceeded {
                dim: 2048,
                cap: 1024
            })
        ));
    }

    #[test]
    fn tensor_power_max_diag_is_multiplicative() {
        let mut rng = seeded_rng(5);
        for n in 1..4 {
            let rho = random_density(3, &mut rng);
            let p = tensor_power(&rho, n).unwrap();
            assert!((p.max_diag() - rho.max_diag().powi(n as i32)).abs() < 1e-14);
        }
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(shannon_entropy(&[1.0, 0.0]).unwrap(), 0.0);
        assert!((shannon_entropy(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        assert!((shannon_entropy(&[0.5, 0.25, 0.25]).unwrap() - 1.5).abs() < 1e-15);
        assert!(matches!(
            shannon_entropy(&[0.5, 0.6]),
            Err(Error::NotDistribution(_))
        ));
        assert!(matches!(
            shannon_entropy(&[1.5, -0.5]),
            Err(Error::NotDistribution(_))
        ));
    }

    #[test]
    fn delta_vector_examples() {
        let rho = DensityMatrix::diagonal(&[0.25, 0.75]).unwrap();
        let d = delta_vector(&rho).magnitudes();
        assert!((d[0] - 0.5).abs() < 1e-15);
        assert!((d[1] - 0.75f64.sqrt()).abs() < 1e-15);

        let psi = DensityMatrix::pure(&StateVector::max_coherent(4)).unwrap();
        for x in delta_vector(&psi).magnitudes() {
            assert!((x - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn delta_vector_is_multiplicative() {
        let mut rng = seeded_rng(6);
        let a = random_density(2, &mut rng);
        let b = random_density(3, &mut rng);
        let lhs = delta_vector(&a.kron(&b)).magnitudes();
        let rhs = delta_vector(&a).kron(&delta_vector(&b)).magnitudes();
        for (x, y) in lhs.iter().zip(&rhs) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn purification_reduces_to_state() {
        let mut rng = seeded_rng(8);
        let rho = random_density(3, &mut rng);
        let phi = purify(&rho).unwrap();
        let red = partial_trace_first(&phi, 3, 3).unwrap();
        assert!((&red - rho.mat()).frobenius_norm() < 1e-12);
    }
}
