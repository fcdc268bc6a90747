//! Assisted distillation quantities: fidelities, rates and the coherence of assistance.
//!
//! For `d ≤ 3`, and for declared tensor powers of such states, the assisted fidelity equals
//! `‖δ(ρ)‖²_[m] / m` with `δ(ρ)` the entrywise square root of the diagonal. Larger dimensions
//! get bounds, and every result carries a flag saying which kind it is.

use crate::dnorm::{clip_unit, mnorm_magnitudes};
use crate::ensembles::{ensemble_search, Objective};
use crate::error::{Error, Result};
use crate::hermat::{checked_pow, delta_vector, entropy_bits, DensityMatrix};
use crate::sdpsolve::{max_fidelity_over_mm, min_diag_over_ball};

/// Slack added before flooring `1/θ`, so solver noise on an exact integer does not drop it by one.
pub const LOGFLOOR_GUARD: f64 = 1e-9;

/// What the caller promises about the structure of the input state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exactness {
    #[default]
    Undeclared,
    /// The state is `σ^{⊗copies}` with `dim σ = base_dim`.
    TensorPower { base_dim: usize, copies: usize },
}

impl Exactness {
    /// Whether the closed forms are exact for a state of dimension `dim`.
    pub fn is_exact(self, dim: usize) -> bool {
        match self {
            _ if dim <= 3 => true,
            Exactness::Undeclared => false,
            Exactness::TensorPower { base_dim, copies } => {
                base_dim <= 3 && checked_pow(base_dim, copies) == Some(dim)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// Target dimension `2^rate` attained by the reported one-shot rate.
    pub m_requested: usize,
    /// `‖δ(ρ)‖²_[m] / m` at `m_requested`.
    pub fidelity_bound: f64,
    /// Relaxed fidelity at `m_requested`, `None` when the SDP was not run.
    pub fidelity_sdp: Option<f64>,
    pub one_shot_rate_bits: f64,
    pub relaxed_rate_bits: f64,
    pub zero_error_bits: f64,
    /// `false` means `one_shot_rate_bits` and `zero_error_bits` are upper bounds.
    pub exact_flag: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroErrorRate {
    pub one_shot_bits: f64,
    pub asymptotic_bits_per_copy: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceOfAssistance {
    /// Exact value when `exact`, otherwise the best lower bound found.
    pub value_bits: f64,
    /// `S(Δ(ρ))`, always an upper bound.
    pub upper_bits: f64,
    pub exact: bool,
}

/// `⌊x + guard⌋` as an integer target dimension, at least 1.
pub fn floor_dimension(x: f64) -> usize {
    if !x.is_finite() {
        return usize::MAX;
    }
    ((x + LOGFLOOR_GUARD).floor() as usize).max(1)
}

/// `x ↦ log₂⌊2^x⌋`.
pub fn logfloor(x: f64) -> f64 {
    (floor_dimension(x.exp2()) as f64).log2()
}

pub fn assisted_fidelity_bound(rho: &DensityMatrix, m: usize) -> Result<f64> {
    assisted_fidelity_from_delta(&delta_vector(rho).magnitudes(), m)
}

/// The bound evaluated on a precomputed `δ` vector, e.g. a Kronecker power built without the
/// full matrix.
pub fn assisted_fidelity_from_delta(delta: &[f64], m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::BadM(0.0));
    }
    let n = mnorm_magnitudes(delta, m as f64)?.value;
    Ok(clip_unit(n * n / m as f64))
}

/// Maximum fidelity between `ρ` and a state with every diagonal entry at most `1/m`.
pub fn assisted_fidelity_sdp(rho: &DensityMatrix, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::BadM(0.0));
    }
    max_fidelity_over_mm(rho, m as f64)
}

/// Best average pure-state fidelity over decompositions found by local search.
pub fn best_ensemble_fidelity(rho: &DensityMatrix, m: usize) -> Result<f64> {
    let (_, v) = ensemble_search(rho, Objective::MaxAvgPureFidelity(m), atoms_cap(rho.dim()))?;
    Ok(v)
}

pub fn zero_error_rate(rho: &DensityMatrix) -> ZeroErrorRate {
    zero_error_rate_with(rho, Exactness::Undeclared)
}

pub fn zero_error_rate_with(rho: &DensityMatrix, exactness: Exactness) -> ZeroErrorRate {
    let q = rho.max_diag();
    ZeroErrorRate {
        one_shot_bits: (floor_dimension(1.0 / q) as f64).log2(),
        asymptotic_bits_per_copy: -q.log2(),
        exact: exactness.is_exact(rho.dim()),
    }
}

pub fn one_shot_rate(rho: &DensityMatrix, eps: f64, exactness: Exactness) -> Result<RateReport> {
    one_shot_rate_with(rho, eps, exactness, true)
}

/// As [`one_shot_rate`]; `with_fidelity_sdp = false` skips the fidelity SDP at the attained `m`.
pub fn one_shot_rate_with(
    rho: &DensityMatrix,
    eps: f64,
    exactness: Exactness,
    with_fidelity_sdp: bool,
) -> Result<RateReport> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidInput(format!("eps = {eps} outside [0, 1)")));
    }
    let theta = min_diag_over_ball(rho, eps)?;
    if !(theta > 0.0) {
        return Err(Error::NumericalFailure(format!("relaxed ϑ = {theta}")));
    }
    let m = floor_dimension(1.0 / theta);
    let relaxed = (m as f64).log2();
    let exact = exactness.is_exact(rho.dim());
    let fidelity_sdp = if with_fidelity_sdp {
        Some(assisted_fidelity_sdp(rho, m)?)
    } else {
        None
    };
    Ok(RateReport {
        m_requested: m,
        fidelity_bound: assisted_fidelity_bound(rho, m)?,
        fidelity_sdp,
        one_shot_rate_bits: relaxed,
        relaxed_rate_bits: relaxed,
        zero_error_bits: zero_error_rate_with(rho, exactness).one_shot_bits,
        exact_flag: exact,
    })
}

/// Largest integer `m` with `‖δ(ρ)‖²_[m] / m ≥ 1 − eps`.
pub fn max_dimension_by_fidelity(rho: &DensityMatrix, eps: f64) -> Result<usize> {
    let delta = delta_vector(rho).magnitudes();
    let mut best = 1;
    // Beyond d the bound decreases like ‖δ‖₁²/m, so d / (1 - eps) caps the scan.
    let limit = ((rho.dim() as f64) / (1.0 - eps)).ceil() as usize + 1;
    for m in 1..=limit {
        if assisted_fidelity_from_delta(&delta, m)? >= 1.0 - eps - 1e-12 {
            best = m;
        }
    }
    Ok(best)
}

/// Upper bound on `ϑ(ω)`, the smallest achievable `max_i ‖ψ_i‖∞²` over decompositions.
/// Exact for `d ≤ 3`, where it equals the largest diagonal entry.
pub fn theta_upper(omega: &DensityMatrix) -> Result<(f64, bool)> {
    if omega.dim() <= 3 {
        return Ok((omega.max_diag(), true));
    }
    let (_, v) = ensemble_search(omega, Objective::MinMaxInfNormSq, atoms_cap(omega.dim()))?;
    Ok((v.max(omega.max_diag()), false))
}

pub fn coherence_of_assistance(rho: &DensityMatrix) -> Result<CoherenceOfAssistance> {
    let upper = entropy_bits(&rho.diag());
    if rho.dim() <= 3 {
        return Ok(CoherenceOfAssistance {
            value_bits: upper,
            upper_bits: upper,
            exact: true,
        });
    }
    let (_, v) = ensemble_search(rho, Objective::MaxAvgDiagEntropy, atoms_cap(rho.dim()))?;
    Ok(CoherenceOfAssistance {
        value_bits: v.min(upper),
        upper_bits: upper,
        exact: false,
    })
}

/// Enough atoms to hold a same-diagonal warm start for `d ≤ 3`.
fn atoms_cap(d: usize) -> usize {
    if d <= 3 {
        d * d
    } else {
        2 * d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermat::random::{random_density, seeded_rng};
    use crate::hermat::{tensor_power, StateVector};

    fn diag(p: &[f64]) -> DensityMatrix {
        DensityMatrix::diagonal(p).unwrap()
    }

    #[test]
    fn maximally_mixed_qubit_is_perfect() {
        let f = assisted_fidelity_bound(&DensityMatrix::maximally_mixed(2), 2).unwrap();
        assert!((f - 1.0).abs() < 1e-15);
    }

    #[test]
    fn qubit_closed_form() {
        for q in [0.5, 0.6, 0.75, 0.9, 0.99] {
            let f = assisted_fidelity_bound(&diag(&[q, 1.0 - q]), 2).unwrap();
            let want = 0.5 + (q * (1.0 - q)).sqrt();
            assert!((f - want).abs() < 1e-12, "{q}: {f} vs {want}");
        }
    }

    #[test]
    fn qutrit_m3_value() {
        let f = assisted_fidelity_bound(&diag(&[0.5, 0.25, 0.25]), 3).unwrap();
        let want = (0.5f64.sqrt() + 0.5 + 0.5).powi(2) / 3.0;
        assert!((f - want).abs() < 1e-12);
        assert!((f - 0.971_40).abs() < 1e-5);
    }

    #[test]
    fn sdp_matches_bound_for_small_dims() {
        let mut rng = seeded_rng(101);
        for d in [2, 3] {
            for _ in 0..5 {
                let rho = random_density(d, &mut rng);
                for m in 2..=d {
                    let a = assisted_fidelity_bound(&rho, m).unwrap();
                    let b = assisted_fidelity_sdp(&rho, m).unwrap();
                    assert!((a - b).abs() < 1e-6, "d={d} m={m}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn sdp_in_relaxed_set_is_one() {
        let rho = diag(&[0.3, 0.3, 0.4]);
        assert!((assisted_fidelity_sdp(&rho, 2).unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn ququart_chain() {
        let mut rng = seeded_rng(102);
        let rho = random_density(4, &mut rng);
        let lower = best_ensemble_fidelity(&rho, 2).unwrap();
        let sdp = assisted_fidelity_sdp(&rho, 2).unwrap();
        let bound = assisted_fidelity_bound(&rho, 2).unwrap();
        assert!(lower <= sdp + 1e-6);
        assert!(sdp <= bound + 1e-6);
    }

    #[test]
    fn zero_error_examples() {
        let psi2 = DensityMatrix::pure(&StateVector::max_coherent(2)).unwrap();
        let z = zero_error_rate(&psi2);
        assert_eq!((z.one_shot_bits, z.exact), (1.0, true));
        assert!((z.asymptotic_bits_per_copy - 1.0).abs() < 1e-12);

        let z = zero_error_rate(&diag(&[0.6, 0.4]));
        assert_eq!(z.one_shot_bits, 0.0);
        assert!((z.asymptotic_bits_per_copy + 0.6f64.log2()).abs() < 1e-15);

        let z = zero_error_rate(&diag(&[0.5, 0.25, 0.25]));
        assert_eq!((z.one_shot_bits, z.asymptotic_bits_per_copy), (1.0, 1.0));

        let cube = tensor_power(&diag(&[0.6, 0.4]), 3).unwrap();
        assert!(!zero_error_rate(&cube).exact);
        let declared = Exactness::TensorPower {
            base_dim: 2,
            copies: 3,
        };
        let z = zero_error_rate_with(&cube, declared);
        assert_eq!(z.one_shot_bits, 2.0);
        assert!(z.exact);
    }

    #[test]
    fn one_shot_rate_examples() {
        let psi3 = DensityMatrix::pure(&StateVector::max_coherent(3)).unwrap();
        let r = one_shot_rate(&psi3, 0.0, Exactness::Undeclared).unwrap();
        assert!((r.one_shot_rate_bits - 3f64.log2()).abs() < 1e-12, "{r:?}");
        assert_eq!(r.m_requested, 3);

        let r = one_shot_rate(&diag(&[0.6, 0.4]), 0.0, Exactness::Undeclared).unwrap();
        assert_eq!(r.one_shot_rate_bits, 0.0);

        let cube = tensor_power(&diag(&[0.6, 0.4]), 3).unwrap();
        let declared = Exactness::TensorPower {
            base_dim: 2,
            copies: 3,
        };
        let r = one_shot_rate(&cube, 0.0, declared).unwrap();
        assert_eq!(r.one_shot_rate_bits, 2.0);
        assert!(r.exact_flag);
        assert!(r.one_shot_rate_bits <= r.relaxed_rate_bits);
    }

    #[test]
    fn rate_matches_fidelity_scan_and_grows_with_eps() {
        let mut rng = seeded_rng(103);
        for d in [2, 3] {
            let rho = random_density(d, &mut rng);
            let mut last = 0.0;
            for eps in [0.0, 0.05, 0.1, 0.2] {
                let r = one_shot_rate_with(&rho, eps, Exactness::Undeclared, false).unwrap();
                assert!(r.relaxed_rate_bits >= last);
                last = r.relaxed_rate_bits;
                assert_eq!(r.m_requested, max_dimension_by_fidelity(&rho, eps).unwrap());
                assert!(r.fidelity_bound >= 1.0 - eps - 1e-7);
            }
        }
    }

    #[test]
    fn logfloor_quantizes() {
        assert_eq!(logfloor(1.0), 1.0);
        assert_eq!(logfloor(3f64.log2() - 1e-12), 3f64.log2());
        assert_eq!(logfloor(1.9), 3f64.log2());
        assert_eq!(logfloor(0.3), 0.0);
    }

    #[test]
    fn theta_and_coherence() {
        let psi = StateVector::from_real(&[0.8, 0.6]);
        let rho = DensityMatrix::pure(&psi).unwrap();
        let (t, exact) = theta_upper(&rho).unwrap();
        assert!(exact && (t - 0.64).abs() < 1e-12);

        let c = coherence_of_assistance(&diag(&[0.5, 0.5])).unwrap();
        assert!((c.value_bits - 1.0).abs() < 1e-12 && c.exact);
        let c = coherence_of_assistance(&diag(&[0.5, 0.25, 0.25])).unwrap();
        assert!((c.value_bits - 1.5).abs() < 1e-12);

        let mut rng = seeded_rng(104);
        let omega = random_density(4, &mut rng);
        let (t, exact) = theta_upper(&omega).unwrap();
        assert!(!exact && t >= omega.max_diag());
        let c = coherence_of_assistance(&omega).unwrap();
        assert!(!c.exact && c.value_bits <= c.upper_bits);
    }

    #[test]
    fn exactness_rules() {
        assert!(Exactness::Undeclared.is_exact(3));
        assert!(!Exactness::Undeclared.is_exact(4));
        let t = Exactness::TensorPower {
            base_dim: 3,
            copies: 2,
        };
        assert!(t.is_exact(9));
        assert!(!t.is_exact(8));
    }
}
