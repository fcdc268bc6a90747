//! Small dense SDP solver and the two programs used by the distillation quantities:
//! the largest fidelity to a state with all diagonal entries at most `1/m`, and the smallest
//! largest-diagonal-entry over the fidelity ball around a state.
//!
//! Fidelity enters through the block `[[ρ, X], [X†, ω]] ⪰ 0`, whose largest `Re Tr X` is
//! `‖√ρ√ω‖₁`. The `ρ` corner is written in the eigenbasis of `ρ` restricted to its support,
//! so rank-deficient (e.g. pure) states keep a strictly feasible program.

mod ipm;
mod problem;

pub use ipm::{solve, solve_with, SdpSolution, SdpStatus, SolverOptions};
pub use problem::{LinearFunctional, SdpProblem, Sense};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hermat::{eig_hermitian, ComplexMatrix, DensityMatrix};

/// Eigenvalues below this are treated as outside the support.
const SUPPORT_TOL: f64 = 1e-12;

/// `ρ = V Λ V†` restricted to the support: eigenvalues and the `dim × rank` isometry.
struct Support {
    values: Vec<f64>,
    vectors: Vec<Vec<Complex64>>,
}

fn support(rho: &DensityMatrix) -> Result<Support> {
    let e = eig_hermitian(rho.mat())?;
    let top = e.max_value().max(f64::MIN_POSITIVE);
    let mut values = Vec::new();
    let mut vectors = Vec::new();
    for k in (0..rho.dim()).rev() {
        if e.values[k] > SUPPORT_TOL * top.max(1.0) {
            values.push(e.values[k]);
            vectors.push(e.column(k));
        }
    }
    Ok(Support { values, vectors })
}

/// Fixes the top-left `r × r` corner of `block` to `diag(values)`.
fn fix_corner(p: &mut SdpProblem, block: usize, values: &[f64]) {
    let r = values.len();
    for a in 0..r {
        let mut f = LinearFunctional::new();
        f.add_real(block, a, a, 1.0);
        p.add_equality(f, values[a]);
        for b in (a + 1)..r {
            let mut re = LinearFunctional::new();
            re.add_real(block, a, b, 1.0);
            p.add_equality(re, 0.0);
            let mut im = LinearFunctional::new();
            im.add(block, a, b, Complex64::new(0.0, -1.0));
            p.add_equality(im, 0.0);
        }
    }
}

/// Fixes the `dim × dim` sub-block starting at `offset` to the Hermitian matrix `m`.
fn fix_subblock(p: &mut SdpProblem, block: usize, offset: usize, m: &ComplexMatrix) {
    let d = m.dim();
    for i in 0..d {
        let mut f = LinearFunctional::new();
        f.add_real(block, offset + i, offset + i, 1.0);
        p.add_equality(f, m[(i, i)].re);
        for j in (i + 1)..d {
            let mut re = LinearFunctional::new();
            re.add_real(block, offset + i, offset + j, 1.0);
            p.add_equality(re, m[(i, j)].re);
            let mut im = LinearFunctional::new();
            im.add(block, offset + i, offset + j, Complex64::new(0.0, -1.0));
            p.add_equality(im, m[(i, j)].im);
        }
    }
}

/// `Re Tr(V Y)` where `Y` is the `r × n` upper-right corner of the fidelity block.
fn fidelity_objective(block: usize, sup: &Support, n: usize) -> LinearFunctional {
    let r = sup.values.len();
    let mut f = LinearFunctional::new();
    for (b, vec) in sup.vectors.iter().enumerate() {
        for (a, &v) in vec.iter().enumerate().take(n) {
            // V[a][b] · Y[b][a], Y[b][a] = Z[b][r + a]
            f.add(block, b, r + a, v);
        }
    }
    f
}

/// Plain fidelity program: its optimum is `‖√ρ√σ‖₁ = √F(ρ,σ)`.
pub fn build_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<SdpProblem> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch(rho.dim(), sigma.dim()));
    }
    let d = rho.dim();
    let sup = support(rho)?;
    let r = sup.values.len();
    let mut p = SdpProblem::new(vec![r + d], Sense::Maximize);
    fix_corner(&mut p, 0, &sup.values);
    fix_subblock(&mut p, 0, r, sigma.mat());
    p.objective = fidelity_objective(0, &sup, d);
    Ok(p)
}

/// `max Re Tr X` over `[[ρ, X], [X†, ω]] ⪰ 0`, `Tr ω = 1`, `ω_ii ≤ 1/m`.
///
/// The optimum is `√F̃(ρ, m)`. For `m` above the dimension, `ρ` is zero-padded to `⌈m⌉`
/// levels. When `m` equals the (padded) dimension the diagonal of `ω` is pinned to `1/m`.
pub fn build_fidelity_over_mm(rho: &DensityMatrix, m: f64) -> Result<SdpProblem> {
    if !(m >= 1.0) || !m.is_finite() {
        return Err(Error::BadM(m));
    }
    let d = rho.dim();
    let n = d.max((m - 1e-12).ceil() as usize);
    let sup = support(rho)?;
    let r = sup.values.len();
    let mut p = SdpProblem::new(vec![r + n], Sense::Maximize);
    fix_corner(&mut p, 0, &sup.values);
    let cap = 1.0 / m;
    if (n as f64 * cap - 1.0).abs() <= 1e-12 {
        for i in 0..n {
            let mut f = LinearFunctional::new();
            f.add_real(0, r + i, r + i, 1.0);
            p.add_equality(f, cap);
        }
    } else {
        let mut tr = LinearFunctional::new();
        for i in 0..n {
            tr.add_real(0, r + i, r + i, 1.0);
        }
        p.add_equality(tr, 1.0);
        for i in 0..n {
            let s = p.add_block(1);
            let mut f = LinearFunctional::new();
            f.add_real(0, r + i, r + i, 1.0).add_real(s, 0, 0, 1.0);
            p.add_equality(f, cap);
        }
    }
    p.objective = fidelity_objective(0, &sup, n);
    Ok(p)
}

/// `min t` over `ω` in the ball `F(ρ, ω) ≥ 1 - ε` with `ω_ii ≤ t`; the optimum is
/// `min ‖Δ(ω)‖∞` over the ball.
///
/// At `ε = 0` the ball is `{ρ}` and the program reduces to `min t` s.t. `t ≥ ρ_ii`.
pub fn build_min_diag_over_ball(rho: &DensityMatrix, eps: f64) -> Result<SdpProblem> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidInput(format!("eps = {eps} outside [0, 1)")));
    }
    let d = rho.dim();
    let diag = rho.diag();
    if eps == 0.0 {
        let mut p = SdpProblem::new(Vec::new(), Sense::Minimize);
        let t = p.add_block(1);
        for &rii in &diag {
            let s = p.add_block(1);
            let mut f = LinearFunctional::new();
            f.add_real(t, 0, 0, 1.0).add_real(s, 0, 0, -1.0);
            p.add_equality(f, rii);
        }
        p.objective.add_real(t, 0, 0, 1.0);
        return Ok(p);
    }

    let sup = support(rho)?;
    let r = sup.values.len();
    let mut p = SdpProblem::new(vec![r + d], Sense::Minimize);
    let t = p.add_block(1);
    fix_corner(&mut p, 0, &sup.values);
    let mut tr = LinearFunctional::new();
    for i in 0..d {
        tr.add_real(0, r + i, r + i, 1.0);
    }
    p.add_equality(tr, 1.0);
    for i in 0..d {
        let s = p.add_block(1);
        let mut f = LinearFunctional::new();
        f.add_real(0, r + i, r + i, 1.0)
            .add_real(s, 0, 0, 1.0)
            .add_real(t, 0, 0, -1.0);
        p.add_equality(f, 0.0);
    }
    let u = p.add_block(1);
    let mut fid = fidelity_objective(0, &sup, d);
    fid.add_real(u, 0, 0, -1.0);
    p.add_equality(fid, (1.0 - eps).sqrt());
    p.objective.add_real(t, 0, 0, 1.0);
    Ok(p)
}

/// `F(ρ, σ)` through the fidelity program (squared optimum).
pub fn fidelity_sdp(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let sol = solve(&build_fidelity(rho, sigma)?)?.require_optimal()?;
    Ok(sol.primal_value.max(0.0).powi(2).min(1.0))
}

/// `F̃(ρ, m) = max_{ω ∈ MM_m} F(ρ, ω)`.
pub fn max_fidelity_over_mm(rho: &DensityMatrix, m: f64) -> Result<f64> {
    let sol = solve(&build_fidelity_over_mm(rho, m)?)?.require_optimal()?;
    let root = 0.5 * (sol.primal_value + sol.dual_value);
    Ok(root.max(0.0).powi(2).min(1.0))
}

/// `min_{ω ∈ B_ε(ρ)} ‖Δ(ω)‖∞`.
pub fn min_diag_over_ball(rho: &DensityMatrix, eps: f64) -> Result<f64> {
    let sol = solve(&build_min_diag_over_ball(rho, eps)?)?.require_optimal()?;
    Ok(0.5 * (sol.primal_value + sol.dual_value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermat::random::{random_density, random_density_matrix, seeded_rng};
    use crate::hermat::{fidelity, StateVector};

    #[test]
    fn trivial_pure_state_optimum() {
        // max Tr(ω diag(1,0)) s.t. Tr ω = 1
        let mut p = SdpProblem::new(vec![2], Sense::Maximize);
        p.objective.add_real(0, 0, 0, 1.0);
        let mut tr = LinearFunctional::new();
        tr.add_real(0, 0, 0, 1.0).add_real(0, 1, 1, 1.0);
        p.add_equality(tr, 1.0);
        let sol = solve(&p).unwrap().require_optimal().unwrap();
        assert!((sol.primal_value - 1.0).abs() < 1e-7);
        assert!(sol.gap() <= 1e-7 * (1.0 + sol.primal_value.abs()));
    }

    #[test]
    fn fidelity_with_itself_is_one() {
        let mut rng = seeded_rng(21);
        let rho = random_density(3, &mut rng);
        assert!((fidelity_sdp(&rho, &rho).unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn fidelity_sdp_matches_eigen_route() {
        let mut rng = seeded_rng(22);
        for k in 0..50 {
            let d = 2 + k % 2;
            let a = random_density(d, &mut rng);
            let b = random_density(d, &mut rng);
            let sdp = fidelity_sdp(&a, &b).unwrap();
            let eig = fidelity(&a, &b).unwrap();
            assert!((sdp - eig).abs() < 1e-6, "d={d} sdp={sdp} eig={eig}");
        }
    }

    #[test]
    fn fidelity_sdp_handles_pure_rho() {
        let mut rng = seeded_rng(23);
        let a = random_density_matrix(3, 1, &mut rng);
        let b = random_density(3, &mut rng);
        let sdp = fidelity_sdp(&a, &b).unwrap();
        assert!((sdp - fidelity(&a, &b).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn flat_diagonal_state_is_inside() {
        let rho = DensityMatrix::maximally_mixed(2);
        assert!((max_fidelity_over_mm(&rho, 2.0).unwrap() - 1.0).abs() < 1e-7);
        let psi = DensityMatrix::pure(&StateVector::max_coherent(3)).unwrap();
        for m in [1.0, 2.0, 3.0] {
            assert!((max_fidelity_over_mm(&psi, m).unwrap() - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn qubit_diag_three_quarters() {
        let rho = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
        let f = max_fidelity_over_mm(&rho, 2.0).unwrap();
        assert!((f - (2.0 + 3f64.sqrt()) / 4.0).abs() < 1e-6, "{f}");
    }

    #[test]
    fn qutrit_m3_closed_form() {
        let mut rng = seeded_rng(24);
        for _ in 0..5 {
            let rho = random_density(3, &mut rng);
            let want = rho.diag().iter().map(|x| x.sqrt()).sum::<f64>().powi(2) / 3.0;
            let f = max_fidelity_over_mm(&rho, 3.0).unwrap();
            assert!((f - want).abs() < 1e-6, "{f} vs {want}");
        }
    }

    #[test]
    fn min_diag_at_zero_eps() {
        let psi = DensityMatrix::pure(&StateVector::max_coherent(2)).unwrap();
        assert!((min_diag_over_ball(&psi, 0.0).unwrap() - 0.5).abs() < 1e-9);
        let mut rng = seeded_rng(25);
        let rho = random_density(3, &mut rng);
        assert!((min_diag_over_ball(&rho, 0.0).unwrap() - rho.max_diag()).abs() < 1e-7);
    }

    #[test]
    fn min_diag_qubit_grid_oracle() {
        let rho = DensityMatrix::diagonal(&[0.6, 0.4]).unwrap();
        let sdp = min_diag_over_ball(&rho, 0.02).unwrap();
        assert!(sdp < 0.6 && sdp >= 0.4 - 1e-9, "{sdp}");
        // Brute-force over real qubit states diag(a, 1-a) + c X: scan for the smallest
        // max(a, 1-a) keeping F ≥ 0.98.
        let mut best: f64 = 1.0;
        for i in 0..=400 {
            let a = 0.4 + 0.2 * i as f64 / 400.0;
            for j in 0..=200 {
                let c = -0.49 + 0.98 * j as f64 / 200.0;
                if c * c > a * (1.0 - a) {
                    continue;
                }
                let w =
                    DensityMatrix::new(ComplexMatrix::from_real_rows(&[&[a, c], &[c, 1.0 - a]]))
                        .unwrap();
                if fidelity(&rho, &w).unwrap() >= 0.98 {
                    best = best.min(a.max(1.0 - a));
                }
            }
        }
        assert!(sdp <= best + 1e-9, "sdp {sdp} grid {best}");
        assert!(sdp >= best - 1e-3, "sdp {sdp} grid {best}");
    }

    #[test]
    fn rank_deficient_equalities_rejected() {
        let mut p = SdpProblem::new(vec![2], Sense::Maximize);
        let mut f = LinearFunctional::new();
        f.add_real(0, 0, 0, 1.0);
        p.add_equality(f.clone(), 0.5);
        p.add_equality(f, 0.5);
        assert!(matches!(solve(&p), Err(Error::IllPosed(_))));
    }

    #[test]
    fn block_cap_enforced() {
        let p = SdpProblem::new(vec![300], Sense::Minimize);
        assert!(matches!(solve(&p), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn infeasible_problem_is_not_optimal() {
        // Tr ω = 1 with ω_00 = 2 and ω_11 ≥ 0 cannot hold.
        let mut p = SdpProblem::new(vec![2], Sense::Minimize);
        let mut tr = LinearFunctional::new();
        tr.add_real(0, 0, 0, 1.0).add_real(0, 1, 1, 1.0);
        p.add_equality(tr, 1.0);
        let mut f = LinearFunctional::new();
        f.add_real(0, 0, 0, 1.0);
        p.add_equality(f, 2.0);
        let sol = solve(&p).unwrap();
        assert_ne!(sol.status, SdpStatus::Optimal);
    }
}
