use num_complex::Complex64;

use super::{eig_hermitian_with, ComplexMatrix, Tolerances};
use crate::error::{Error, Result};

/// Complex amplitude vector. Normalization is checked where it matters, not on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Rescales to unit ℓ2 norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let v = Self::new(amplitudes);
        let n = v.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidInput("cannot normalize a zero vector".into()));
        }
        Ok(v.scaled(1.0 / n))
    }

    /// Computational basis vector `e_index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut a = vec![Complex64::new(0.0, 0.0); dim];
        a[index] = Complex64::new(1.0, 0.0);
        Self::new(a)
    }

    /// Maximally coherent state `Ψ_m`: uniform superposition of `dim` basis states.
    pub fn max_coherent(dim: usize) -> Self {
        let a = 1.0 / (dim as f64).sqrt();
        Self::new(vec![Complex64::new(a, 0.0); dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.amplitudes.iter().map(|z| z * s).collect())
    }

    /// Entrywise magnitudes `|v_i|`.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm()).collect()
    }

    pub fn l1(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm()).sum()
    }

    pub fn linf(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim(), other.dim());
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                out.push(a * b);
            }
        }
        Self::new(out)
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates with the default tolerances.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(mat, &Tolerances::default())
    }

    pub fn with_tolerances(mat: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        let defect = mat.hermitian_defect();
        if defect > tol.hermitian_check {
            return Err(Error::NonHermitian(defect));
        }
        let mat = mat.hermitian_part();
        let tr = mat.trace().re;
        if (tr - 1.0).abs() > tol.trace {
            return Err(Error::BadTrace(tr));
        }
        let e = eig_hermitian_with(&mat, tol)?;
        if e.min_value() < -tol.psd {
            return Err(Error::NotPsd(e.min_value()));
        }
        Ok(Self { mat })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_trusted(mat: ComplexMatrix) -> Self {
        Self {
            mat: mat.hermitian_part(),
        }
    }

    pub fn pure(psi: &StateVector) -> Result<Self> {
        if !psi.is_normalized(1e-10) {
            return Err(Error::InvalidInput(format!(
                "pure state has norm {}",
                psi.norm()
            )));
        }
        Ok(Self::from_trusted(psi.projector()))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_trusted(ComplexMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    /// Diagonal (incoherent) state; entries must form a probability vector.
    pub fn diagonal(p: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::diag(p))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_mat(self) -> ComplexMatrix {
        self.mat
    }

    /// Diagonal entries `ρ_ii`.
    pub fn diag(&self) -> Vec<f64> {
        self.mat.diagonal_real()
    }

    /// `‖Δ(ρ)‖∞`: largest diagonal entry.
    pub fn max_diag(&self) -> f64 {
        self.diag().into_iter().fold(0.0, f64::max)
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self::from_trusted(self.mat.kron(&other.mat))
    }
}
