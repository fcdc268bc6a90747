//! Infeasible-start primal-dual interior point method with Mehrotra predictor-corrector steps
//! and the HKM search direction, on complex Hermitian blocks.
//!
//! Internally every problem is put in the form
//!
//! ```text
//! min ⟨C, X⟩  s.t. ⟨A_k, X⟩ = b_k,  X ⪰ 0        (primal)
//! max bᵀy     s.t. S = C - Σ y_k A_k ⪰ 0          (dual)
//! ```

use std::collections::HashMap;

use num_complex::Complex64;

use super::problem::{Entry, LinearFunctional, SdpProblem, Sense};
use crate::error::{Error, Result};
use crate::hermat::{eig_hermitian, ComplexMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// Objective at the primal iterate, in the problem's own sense.
    pub primal_value: f64,
    /// Objective of the dual iterate, in the problem's own sense.
    pub dual_value: f64,
    pub primal_blocks: Vec<ComplexMatrix>,
    pub dual_slack: Vec<ComplexMatrix>,
    pub multipliers: Vec<f64>,
    pub status: SdpStatus,
    pub iterations: usize,
    /// `‖b - A(X)‖₂`.
    pub primal_residual: f64,
    /// Frobenius norm of `C - S - Aᵀy`.
    pub dual_residual: f64,
}

impl SdpSolution {
    /// Returns the solution if optimal, otherwise a descriptive error.
    pub fn require_optimal(self) -> Result<Self> {
        match self.status {
            SdpStatus::Optimal => Ok(self),
            SdpStatus::MaxIter => Err(Error::ConvergenceFailure(format!(
                "SDP stopped after {} iterations (gap {:.3e}, primal residual {:.3e})",
                self.iterations,
                (self.primal_value - self.dual_value).abs(),
                self.primal_residual
            ))),
            SdpStatus::Infeasible => Err(Error::NumericalFailure(
                "SDP reported primal infeasibility".into(),
            )),
        }
    }

    pub fn gap(&self) -> f64 {
        (self.primal_value - self.dual_value).abs()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Early-exit targets.
    pub target_gap: f64,
    pub target_feasibility: f64,
    /// Thresholds for certifying `Optimal` when the iteration stalls.
    pub accept_gap: f64,
    pub accept_feasibility: f64,
    pub step_fraction: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub block_cap: usize,
    /// Relative pivot tolerance for detecting linearly dependent equalities.
    pub rank_tolerance: f64,
    pub infeasibility_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            target_gap: 1e-11,
            target_feasibility: 1e-11,
            accept_gap: 1e-7,
            accept_feasibility: 1e-8,
            step_fraction: 0.98,
            sigma_min: 0.1,
            sigma_max: 0.9,
            block_cap: 256,
            rank_tolerance: 1e-12,
            infeasibility_tolerance: 1e-8,
        }
    }
}

pub fn solve(p: &SdpProblem) -> Result<SdpSolution> {
    solve_with(p, &SolverOptions::default())
}

pub fn solve_with(p: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    validate(p, opts)?;
    check_rank(p, opts)?;
    Ipm::new(p, opts).run()
}

fn validate(p: &SdpProblem, opts: &SolverOptions) -> Result<()> {
    for &d in &p.block_dims {
        if d == 0 {
            return Err(Error::InvalidInput("empty SDP block".into()));
        }
        if d > opts.block_cap {
            return Err(Error::CapExceeded {
                dim: d,
                cap: opts.block_cap,
            });
        }
    }
    let fs = std::iter::once(&p.objective).chain(p.equalities.iter().map(|(f, _)| f));
    for f in fs {
        if let Some(b) = f.max_block() {
            if b >= p.block_dims.len() {
                return Err(Error::InvalidInput(format!(
                    "functional references block {b}"
                )));
            }
        }
        for (b, &d) in p.block_dims.iter().enumerate() {
            if f.max_index(b).is_some_and(|i| i >= d) {
                return Err(Error::InvalidInput(format!(
                    "functional index out of range for block {b} of size {d}"
                )));
            }
        }
    }
    if p.equalities.iter().any(|(f, _)| f.entries.is_empty()) {
        return Err(Error::IllPosed("empty equality constraint".into()));
    }
    Ok(())
}

/// Rejects problems whose constraint functionals are linearly dependent.
fn check_rank(p: &SdpProblem, opts: &SolverOptions) -> Result<()> {
    let m = p.equalities.len();
    let maps: Vec<HashMap<(usize, usize, usize), Complex64>> = p
        .equalities
        .iter()
        .map(|(f, _)| {
            f.entries
                .iter()
                .map(|e| ((e.block, e.row, e.col), e.coeff))
                .collect()
        })
        .collect();
    let mut gram = vec![0.0; m * m];
    for k in 0..m {
        for l in k..m {
            let (small, large) = if maps[k].len() <= maps[l].len() {
                (&maps[k], &maps[l])
            } else {
                (&maps[l], &maps[k])
            };
            let g: f64 = small
                .iter()
                .filter_map(|(key, a)| large.get(key).map(|b| (a.conj() * b).re))
                .sum();
            gram[k * m + l] = g;
            gram[l * m + k] = g;
        }
    }
    let max_diag = (0..m).map(|k| gram[k * m + k]).fold(0.0, f64::max);
    if cholesky_in_place(&mut gram, m, opts.rank_tolerance * max_diag).is_none() {
        return Err(Error::IllPosed(
            "equality constraints are linearly dependent".into(),
        ));
    }
    Ok(())
}

/// Real Cholesky `M = L Lᵀ` stored in the lower triangle; fails on pivots below `min_pivot`.
fn cholesky_in_place(a: &mut [f64], n: usize, min_pivot: f64) -> Option<()> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > min_pivot) {
            return None;
        }
        let djj = d.sqrt();
        a[j * n + j] = djj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / djj;
        }
    }
    Some(())
}

fn cholesky_solve(l: &[f64], n: usize, rhs: &mut [f64]) {
    for i in 0..n {
        let mut s = rhs[i];
        for k in 0..i {
            s -= l[i * n + k] * rhs[k];
        }
        rhs[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * rhs[k];
        }
        rhs[i] = s / l[i * n + i];
    }
}

/// Gaussian elimination with partial pivoting, used when Cholesky of the Schur matrix fails.
fn lu_solve(mut a: Vec<f64>, n: usize, rhs: &mut [f64]) -> Option<()> {
    for col in 0..n {
        let piv =
            (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            rhs.swap(col, piv);
        }
        for i in (col + 1)..n {
            let f = a[i * n + col] / a[col * n + col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[i * n + k] -= f * a[col * n + k];
            }
            rhs[i] -= f * rhs[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for k in (i + 1)..n {
            s -= a[i * n + k] * rhs[k];
        }
        rhs[i] = s / a[i * n + i];
    }
    Some(())
}

type Blocks = Vec<ComplexMatrix>;

fn blocks_inner(a: &[ComplexMatrix], b: &[ComplexMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.inner_re(y)).sum()
}

fn blocks_norm(a: &[ComplexMatrix]) -> f64 {
    a.iter()
        .map(|x| x.frobenius_norm().powi(2))
        .sum::<f64>()
        .sqrt()
}

fn blocks_axpy(alpha: f64, x: &[ComplexMatrix], y: &[ComplexMatrix]) -> Blocks {
    y.iter()
        .zip(x)
        .map(|(yb, xb)| (yb + &xb.scale(alpha)).hermitian_part())
        .collect()
}

struct Ipm<'a> {
    opts: &'a SolverOptions,
    dims: Vec<usize>,
    /// Objective in minimization form.
    c: Blocks,
    c_norm: f64,
    cons: Vec<&'a LinearFunctional>,
    b: Vec<f64>,
    b_norm: f64,
    flip: f64,
}

struct Iterate {
    x: Blocks,
    y: Vec<f64>,
    s: Blocks,
}

struct Direction {
    dx: Blocks,
    dy: Vec<f64>,
    ds: Blocks,
}

impl<'a> Ipm<'a> {
    fn new(p: &'a SdpProblem, opts: &'a SolverOptions) -> Self {
        let flip = match p.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut c: Blocks = p
            .block_dims
            .iter()
            .map(|&d| ComplexMatrix::zeros(d))
            .collect();
        p.objective.accumulate(flip, &mut c);
        let c_norm = blocks_norm(&c);
        let b: Vec<f64> = p.equalities.iter().map(|(_, v)| *v).collect();
        let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self {
            opts,
            dims: p.block_dims.clone(),
            c,
            c_norm,
            cons: p.equalities.iter().map(|(f, _)| f).collect(),
            b,
            b_norm,
            flip,
        }
    }

    fn total_dim(&self) -> f64 {
        self.dims.iter().sum::<usize>() as f64
    }

    fn apply_a(&self, x: &[ComplexMatrix]) -> Vec<f64> {
        self.cons.iter().map(|f| f.eval(x)).collect()
    }

    fn apply_at(&self, y: &[f64]) -> Blocks {
        let mut out: Blocks = self.dims.iter().map(|&d| ComplexMatrix::zeros(d)).collect();
        for (f, &yk) in self.cons.iter().zip(y) {
            if yk != 0.0 {
                f.accumulate(yk, &mut out);
            }
        }
        out
    }

    fn initial_point(&self) -> Iterate {
        let n = self.total_dim();
        let mut xi: f64 = 10f64.max(n.sqrt());
        let mut eta: f64 = 10f64.max(n.sqrt()).max(self.c_norm);
        for (f, &bk) in self.cons.iter().zip(&self.b) {
            let an = f.frobenius_sq().sqrt();
            xi = xi.max(n * (1.0 + bk.abs()) / (1.0 + an));
            eta = eta.max(an);
        }
        let eta = eta.max(1.0 + self.c_norm);
        Iterate {
            x: self
                .dims
                .iter()
                .map(|&d| ComplexMatrix::identity(d).scale(xi))
                .collect(),
            y: vec![0.0; self.cons.len()],
            s: self
                .dims
                .iter()
                .map(|&d| ComplexMatrix::identity(d).scale(eta))
                .collect(),
        }
    }

    /// `M_kl = Re Tr(A_k X A_l Z)` with `Z = S⁻¹`, exploiting the sparsity of the `A_k`.
    fn schur(&self, x: &[ComplexMatrix], z: &[ComplexMatrix]) -> Vec<f64> {
        let m = self.cons.len();
        let mut out = vec![0.0; m * m];
        for k in 0..m {
            for l in k..m {
                let v = schur_entry(&self.cons[k].entries, &self.cons[l].entries, x, z);
                out[k * m + l] = v;
                out[l * m + k] = v;
            }
        }
        out
    }

    fn residuals(&self, it: &Iterate) -> (Vec<f64>, Blocks) {
        let ax = self.apply_a(&it.x);
        let rp: Vec<f64> = self.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = self.apply_at(&it.y);
        let rd: Blocks = self
            .c
            .iter()
            .zip(&it.s)
            .zip(&aty)
            .map(|((c, s), a)| &(c - s) - a)
            .collect();
        (rp, rd)
    }

    /// Solves the Newton system for the given complementarity target
    /// `X ΔS + ΔX S = base·S`, i.e. `ΔX = base - X ΔS Z`.
    fn direction(
        &self,
        it: &Iterate,
        z: &[ComplexMatrix],
        chol: &SchurFactor,
        rp: &[f64],
        rd: &[ComplexMatrix],
        base: &[ComplexMatrix],
    ) -> Option<Direction> {
        // R = base - X Rd Z
        let r: Blocks = base
            .iter()
            .zip(&it.x)
            .zip(rd)
            .zip(z)
            .map(|(((bb, x), d), zz)| bb - &x.matmul(d).matmul(zz))
            .collect();
        let ar = self.apply_a(&r);
        let mut dy: Vec<f64> = rp.iter().zip(&ar).map(|(p, a)| p - a).collect();
        chol.solve(&mut dy)?;
        let atdy = self.apply_at(&dy);
        let ds: Blocks = rd
            .iter()
            .zip(&atdy)
            .map(|(d, a)| (d - a).hermitian_part())
            .collect();
        let dx: Blocks = base
            .iter()
            .zip(&it.x)
            .zip(&ds)
            .zip(z)
            .map(|(((bb, x), d), zz)| (bb - &x.matmul(d).matmul(zz)).hermitian_part())
            .collect();
        Some(Direction { dx, dy, ds })
    }

    fn run(&self) -> Result<SdpSolution> {
        let opts = self.opts;
        let n = self.total_dim();
        let mut it = self.initial_point();
        let mut best: Option<(f64, Iterate, usize)> = None;
        let mut stalled = 0usize;
        let mut iterations = 0usize;

        for iter in 0..opts.max_iter {
            iterations = iter;
            let (rp, rd) = self.residuals(&it);
            let pobj = blocks_inner(&self.c, &it.x);
            let dobj: f64 = self.b.iter().zip(&it.y).map(|(b, y)| b * y).sum();
            let mu = blocks_inner(&it.x, &it.s) / n;
            let pres = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + self.b_norm);
            let dres = blocks_norm(&rd) / (1.0 + self.c_norm);
            let gap = (pobj - dobj).abs().max(mu * n) / (1.0 + pobj.abs());

            let merit = gap.max(pres).max(dres);
            if best.as_ref().is_none_or(|(bm, _, _)| merit < *bm) {
                best = Some((
                    merit,
                    Iterate {
                        x: it.x.clone(),
                        y: it.y.clone(),
                        s: it.s.clone(),
                    },
                    iter,
                ));
            }
            if gap <= opts.target_gap
                && pres <= opts.target_feasibility
                && dres <= opts.target_feasibility
            {
                break;
            }
            if self.primal_infeasible(&it, dobj) {
                return Ok(self.finish(it, SdpStatus::Infeasible, iter));
            }

            let Some(z) =
                it.s.iter()
                    .map(|s| s.inverse_hpd())
                    .collect::<Option<Blocks>>()
            else {
                break;
            };
            let m = self.schur(&it.x, &z);
            let Some(chol) = SchurFactor::new(m, self.cons.len()) else {
                break;
            };

            // Predictor.
            let base_aff: Blocks = it.x.iter().map(|x| x.scale(-1.0)).collect();
            let Some(aff) = self.direction(&it, &z, &chol, &rp, &rd, &base_aff) else {
                break;
            };
            let ap = self.max_step(&it.x, &aff.dx).min(1.0);
            let ad = self.max_step(&it.s, &aff.ds).min(1.0);
            let x_aff = blocks_axpy(ap, &aff.dx, &it.x);
            let s_aff = blocks_axpy(ad, &aff.ds, &it.s);
            let mu_aff = blocks_inner(&x_aff, &s_aff) / n;
            let sigma = (mu_aff / mu)
                .max(0.0)
                .powi(3)
                .clamp(opts.sigma_min, opts.sigma_max);

            // Corrector: base = σμZ - X - ΔXa ΔSa Z.
            let base: Blocks =
                it.x.iter()
                    .zip(&z)
                    .zip(aff.dx.iter().zip(&aff.ds))
                    .map(|((x, zz), (dxa, dsa))| {
                        let t = &zz.scale(sigma * mu) - x;
                        &t - &dxa.matmul(dsa).matmul(zz)
                    })
                    .collect();
            let Some(dir) = self.direction(&it, &z, &chol, &rp, &rd, &base) else {
                break;
            };
            let ap = (opts.step_fraction * self.max_step(&it.x, &dir.dx)).min(1.0);
            let ad = (opts.step_fraction * self.max_step(&it.s, &dir.ds)).min(1.0);
            if ap < 1e-12 && ad < 1e-12 {
                stalled += 1;
                if stalled > 3 {
                    break;
                }
            } else {
                stalled = 0;
            }
            it.x = blocks_axpy(ap, &dir.dx, &it.x);
            it.s = blocks_axpy(ad, &dir.ds, &it.s);
            for (y, d) in it.y.iter_mut().zip(&dir.dy) {
                *y += ad * d;
            }
            iterations = iter + 1;
        }

        let (rp, rd) = self.residuals(&it);
        let pobj = blocks_inner(&self.c, &it.x);
        let dobj: f64 = self.b.iter().zip(&it.y).map(|(b, y)| b * y).sum();
        let pres = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + self.b_norm);
        let dres = blocks_norm(&rd) / (1.0 + self.c_norm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
        let merit = gap.max(pres).max(dres);
        let final_it = match best {
            Some((bm, b_it, b_iter)) if bm < merit => {
                iterations = iterations.max(b_iter);
                b_it
            }
            _ => it,
        };
        let mut sol = self.finish(final_it, SdpStatus::MaxIter, iterations);
        let primal_ok = sol.primal_residual <= opts.accept_feasibility * (1.0 + self.b_norm);
        let gap_ok = sol.gap() <= opts.accept_gap * (1.0 + sol.primal_value.abs());
        let psd_ok = sol
            .primal_blocks
            .iter()
            .all(|x| eig_hermitian(x).is_ok_and(|e| e.min_value() >= -1e-9));
        if primal_ok && gap_ok && psd_ok {
            sol.status = SdpStatus::Optimal;
        }
        Ok(sol)
    }

    /// Detects a dual improving ray: `bᵀy > 0` with `Aᵀy ⪯ 0` after normalization.
    fn primal_infeasible(&self, it: &Iterate, dobj: f64) -> bool {
        if !(dobj > 1e8 * (1.0 + self.c_norm)) {
            return false;
        }
        let yhat: Vec<f64> = it.y.iter().map(|v| v / dobj).collect();
        let aty = self.apply_at(&yhat);
        aty.iter().all(|blk| {
            eig_hermitian(blk).is_ok_and(|e| e.max_value() <= self.opts.infeasibility_tolerance)
        })
    }

    /// Largest `α` with `X + α ΔX ⪰ 0`.
    fn max_step(&self, x: &[ComplexMatrix], dx: &[ComplexMatrix]) -> f64 {
        let mut alpha = f64::INFINITY;
        for (xb, db) in x.iter().zip(dx) {
            let lam = if xb.dim() == 1 {
                db[(0, 0)].re / xb[(0, 0)].re
            } else {
                let Some(l) = xb.cholesky() else {
                    return 0.0;
                };
                let li = l.lower_triangular_inverse();
                let t = li.matmul(db).matmul(&li.adjoint()).hermitian_part();
                match eig_hermitian(&t) {
                    Ok(e) => e.min_value(),
                    Err(_) => return 0.0,
                }
            };
            if lam < 0.0 {
                alpha = alpha.min(-1.0 / lam);
            }
        }
        alpha
    }

    fn finish(&self, it: Iterate, status: SdpStatus, iterations: usize) -> SdpSolution {
        let (rp, rd) = self.residuals(&it);
        let pobj = blocks_inner(&self.c, &it.x);
        let dobj: f64 = self.b.iter().zip(&it.y).map(|(b, y)| b * y).sum();
        SdpSolution {
            primal_value: self.flip * pobj,
            dual_value: self.flip * dobj,
            primal_blocks: it.x,
            dual_slack: it.s,
            multipliers: it.y.iter().map(|v| self.flip * v).collect(),
            status,
            iterations,
            primal_residual: rp.iter().map(|v| v * v).sum::<f64>().sqrt(),
            dual_residual: blocks_norm(&rd),
        }
    }
}

/// `Re Tr(A_k X A_l Z)` for sparse Hermitian `A_k`, `A_l`.
fn schur_entry(ak: &[Entry], al: &[Entry], x: &[ComplexMatrix], z: &[ComplexMatrix]) -> f64 {
    let mut acc = 0.0;
    for e in ak {
        for f in al {
            if e.block != f.block {
                continue;
            }
            // Tr(A_k X A_l Z) ∋ a_{ij} X_{j p} b_{p q} Z_{q i}
            let v = e.coeff * x[e.block][(e.col, f.row)] * f.coeff * z[e.block][(f.col, e.row)];
            acc += v.re;
        }
    }
    acc
}

enum SchurFactor {
    Cholesky(Vec<f64>, usize),
    Dense(Vec<f64>, usize),
}

impl SchurFactor {
    fn new(mut m: Vec<f64>, n: usize) -> Option<Self> {
        let backup = m.clone();
        if cholesky_in_place(&mut m, n, 0.0).is_some() {
            return Some(Self::Cholesky(m, n));
        }
        // Near a degenerate optimum the Schur matrix loses definiteness to rounding; a tiny
        // diagonal shift keeps the step usable and the next residual corrects it.
        let scale = (0..n).map(|i| backup[i * n + i].abs()).fold(0.0, f64::max);
        for rel in [1e-14, 1e-12, 1e-10] {
            let mut shifted = backup.clone();
            for i in 0..n {
                shifted[i * n + i] += rel * scale;
            }
            if cholesky_in_place(&mut shifted, n, 0.0).is_some() {
                return Some(Self::Cholesky(shifted, n));
            }
        }
        if backup.iter().all(|v| v.is_finite()) {
            Some(Self::Dense(backup, n))
        } else {
            None
        }
    }

    fn solve(&self, rhs: &mut [f64]) -> Option<()> {
        match self {
            Self::Cholesky(l, n) => {
                cholesky_solve(l, *n, rhs);
                Some(())
            }
            Self::Dense(a, n) => lu_solve(a.clone(), *n, rhs),
        }
        .filter(|_| rhs.iter().all(|v| v.is_finite()))
    }
}
