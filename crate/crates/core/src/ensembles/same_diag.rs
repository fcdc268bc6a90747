//! Pure-state decompositions whose atoms all share the diagonal of the decomposed state.
//!
//! Writing `ρ = D^{1/2} X D^{1/2}` with `D = Δ(ρ)` turns the task into splitting the
//! correlation matrix `X` (unit diagonal, PSD) into rank-one terms `v v†` with unimodular
//! `v`. Each such `v` maps back to the atom `D^{1/2} v`, which has diagonal `D`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;

use super::Ensemble;
use crate::error::{Error, Result};
use crate::hermat::random::{seeded_rng, SeededRng};
use crate::hermat::{eig_hermitian, ComplexMatrix, DensityMatrix, StateVector};

/// Diagonal entries at or below this are treated as zero and removed before decomposing.
const ZERO_DIAGONAL: f64 = 1e-13;
/// Eigenvalues of a correlation matrix below this count as zero for rank decisions.
const RANK_TOL: f64 = 1e-9;
const GRID: usize = 64;
const MAX_EXTRACTIONS: usize = 16;
const RESTARTS: usize = 10;
const MAX_ATOMS_D3: usize = 9;
const RESIDUAL_TARGET: f64 = 1e-8;

pub fn same_diagonal_decomposition(rho: &DensityMatrix) -> Result<Ensemble> {
    let d = rho.dim();
    if d > 3 {
        return Err(Error::DimTooLarge(d));
    }
    let diag = rho.diag();
    let support: Vec<usize> = (0..d).filter(|&i| diag[i] > ZERO_DIAGONAL).collect();
    let k = support.len();
    let sub = rho.mat().submatrix(&support);
    let sqrt_d: Vec<f64> = support.iter().map(|&i| diag[i].sqrt()).collect();
    let x = ComplexMatrix::from_fn(k, |i, j| {
        if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            sub[(i, j)] / (sqrt_d[i] * sqrt_d[j])
        }
    });

    let mut last_err = None;
    for restart in 0..RESTARTS {
        let mut rng = seeded_rng(0x5a4d_0000 + restart as u64);
        let terms = match k {
            1 => vec![(1.0, vec![Complex64::new(1.0, 0.0)])],
            2 => split_correlation_2(&x),
            _ => match split_correlation_3(&x, &mut rng, restart > 0) {
                Ok(t) => t,
                Err(e) => {
                    last_err = Some(e);
                    continue;
                }
            },
        };
        let ens = map_back(&terms, &support, &sqrt_d, d)?;
        let recon = (&ens.average() - rho.mat()).frobenius_norm();
        let diag_dev = ens
            .atoms
            .iter()
            .flat_map(|a| {
                a.amplitudes()
                    .iter()
                    .zip(&diag)
                    .map(|(z, p)| (z.norm_sqr() - p).abs())
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max);
        if recon <= RESIDUAL_TARGET && diag_dev <= RESIDUAL_TARGET {
            return Ok(ens);
        }
        last_err = Some(Error::NumericalFailure(format!(
            "same-diagonal decomposition residuals {recon:.3e} / {diag_dev:.3e}"
        )));
    }
    Err(last_err.unwrap_or_else(|| Error::NumericalFailure("decomposition failed".into())))
}

fn map_back(
    terms: &[(f64, Vec<Complex64>)],
    support: &[usize],
    sqrt_d: &[f64],
    dim: usize,
) -> Result<Ensemble> {
    let mut weights = Vec::new();
    let mut atoms = Vec::new();
    for (w, v) in terms {
        if *w < super::MIN_WEIGHT {
            continue;
        }
        let mut amp = vec![Complex64::new(0.0, 0.0); dim];
        for (a, &i) in support.iter().enumerate() {
            amp[i] = v[a] * sqrt_d[a];
        }
        weights.push(*w);
        atoms.push(StateVector::normalized(amp)?);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ensemble::new(weights, atoms)
}

/// `X = [[1, c], [c̄, 1]]` with `c = |c| e^{iθ}` splits into `(1, ±e^{-iθ})` with weights
/// `(1 ± |c|)/2`.
fn split_correlation_2(x: &ComplexMatrix) -> Vec<(f64, Vec<Complex64>)> {
    let c = x[(0, 1)];
    let r = c.norm().min(1.0);
    let phase = if r > 0.0 {
        (c / c.norm()).conj()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let one = Complex64::new(1.0, 0.0);
    vec![
        (0.5 * (1.0 + r), vec![one, phase]),
        (0.5 * (1.0 - r), vec![one, -phase]),
    ]
}

fn unimodular(alpha: f64, beta: f64) -> Vec<Complex64> {
    vec![
        Complex64::new(1.0, 0.0),
        Complex64::from_polar(1.0, alpha),
        Complex64::from_polar(1.0, beta),
    ]
}

/// Pseudo-inverse and rank of a Hermitian PSD matrix.
fn pinv_rank(x: &ComplexMatrix) -> Result<(ComplexMatrix, usize, ComplexMatrix)> {
    let e = eig_hermitian(x)?;
    let rank = e.values.iter().filter(|&&l| l > RANK_TOL).count();
    let pinv = e.map_values(|l| if l > RANK_TOL { 1.0 / l } else { 0.0 });
    Ok((pinv, rank, e.vectors))
}

/// Repeatedly removes the largest multiple `λ v v†` of a unimodular `v` from the range of `X`,
/// renormalizing the remainder back to unit diagonal, until a rank-one matrix remains.
fn split_correlation_3(
    x: &ComplexMatrix,
    rng: &mut SeededRng,
    jitter: bool,
) -> Result<Vec<(f64, Vec<Complex64>)>> {
    let mut x = x.clone();
    let mut remaining = 1.0;
    let mut out = Vec::new();
    for _ in 0..MAX_EXTRACTIONS {
        let (pinv, rank, vectors) = pinv_rank(&x)?;
        match rank {
            0 => return Err(Error::NumericalFailure("zero correlation matrix".into())),
            1 => {
                let u: Vec<Complex64> = (0..3).map(|i| vectors[(i, 2)]).collect();
                let phase0 = u[0] / u[0].norm();
                let v: Vec<Complex64> = u.iter().map(|z| z / phase0 / z.norm()).collect();
                out.push((remaining, v));
                return Ok(out);
            }
            2 => {
                let kernel: Vec<Complex64> = (0..3).map(|i| vectors[(i, 0)]).collect();
                let v = best_in_range(&kernel, &pinv)?;
                let lambda = 1.0 / pinv.quad_form(&v);
                x = deflate(&x, &v, lambda);
                out.push((remaining * lambda, v));
                remaining *= 1.0 - lambda;
            }
            _ => {
                let (alpha, beta) = maximize_weight(&pinv, rng, jitter);
                let v = unimodular(alpha, beta);
                let lambda = 1.0 / pinv.quad_form(&v);
                x = deflate(&x, &v, lambda);
                out.push((remaining * lambda, v));
                remaining *= 1.0 - lambda;
            }
        }
        if out.len() > MAX_ATOMS_D3 {
            break;
        }
    }
    Err(Error::NumericalFailure(
        "correlation matrix extraction did not terminate".into(),
    ))
}

/// `(X - λ v v†) / (1 - λ)`, with the diagonal reset to exactly one.
fn deflate(x: &ComplexMatrix, v: &[Complex64], lambda: f64) -> ComplexMatrix {
    let n = x.dim();
    let rest = &(x - &ComplexMatrix::outer(v, v).scale(lambda)).scale(1.0 / (1.0 - lambda));
    let d: Vec<f64> = (0..n)
        .map(|i| rest[(i, i)].re.max(f64::MIN_POSITIVE).sqrt())
        .collect();
    ComplexMatrix::from_fn(n, |i, j| {
        if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            rest[(i, j)] / (d[i] * d[j])
        }
    })
    .hermitian_part()
}

/// Unimodular `v = (1, v₁, v₂)` orthogonal to `kernel`: the three terms `k̄_i v_i` must close a
/// triangle. Among the (at most two) closures, returns the one with the larger weight.
fn best_in_range(kernel: &[Complex64], pinv: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let c: Vec<Complex64> = kernel.iter().map(|z| z.conj()).collect();
    let mags: Vec<f64> = c.iter().map(|z| z.norm()).collect();
    let scale = mags.iter().copied().fold(0.0, f64::max);
    let tiny = 1e-12 * scale;
    let one = Complex64::new(1.0, 0.0);
    let unit = |z: Complex64| if z.norm() > 0.0 { z / z.norm() } else { one };

    let mut candidates = Vec::new();
    if let Some(zero) = (0..3).find(|&i| mags[i] <= tiny) {
        // One side vanishes: the other two terms cancel and the free phase is arbitrary.
        let (p, q) = match zero {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let mut v = vec![one; 3];
        v[q] = unit(-c[p] / c[q]);
        candidates.push(v);
    } else {
        let (a, b, cc) = (mags[0], mags[1], mags[2]);
        let cos_phi = ((cc * cc - a * a - b * b) / (2.0 * a * b)).clamp(-1.0, 1.0);
        let phi = cos_phi.acos();
        let base = c[0] / a;
        for sign in [1.0, -1.0] {
            let t1 = base * Complex64::from_polar(b, sign * phi);
            let v1 = unit(t1 / c[1]);
            let t2 = -(c[0] + c[1] * v1);
            let v2 = unit(t2 / c[2]);
            candidates.push(vec![one, v1, v2]);
        }
    }
    candidates
        .into_iter()
        .map(|v| {
            let w = 1.0 / pinv.quad_form(&v);
            (w, v)
        })
        .filter(|(w, _)| w.is_finite() && *w > 0.0)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, v)| v)
        .ok_or_else(|| Error::NumericalFailure("no unimodular vector in range".into()))
}

/// Maximizes `λ(α, β) = 1 / (v† X⁻¹ v)` over a 64×64 phase grid, then polishes each angle by
/// golden-section search.
fn maximize_weight(inv: &ComplexMatrix, rng: &mut SeededRng, jitter: bool) -> (f64, f64) {
    let lam = |a: f64, b: f64| 1.0 / inv.quad_form(&unimodular(a, b));
    let (off_a, off_b) = if jitter {
        (
            rng.gen::<f64>() * TAU / GRID as f64,
            rng.gen::<f64>() * TAU / GRID as f64,
        )
    } else {
        (0.0, 0.0)
    };
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..GRID {
        let a = off_a + TAU * i as f64 / GRID as f64;
        for j in 0..GRID {
            let b = off_b + TAU * j as f64 / GRID as f64;
            let l = lam(a, b);
            if l > best.0 {
                best = (l, a, b);
            }
        }
    }
    let (_, mut a, mut b) = best;
    let h = TAU / GRID as f64;
    for _ in 0..4 {
        a = golden_max(|t| lam(t, b), a - h, a + h);
        b = golden_max(|t| lam(a, t), b - h, b + h);
    }
    (a.rem_euclid(TAU), b.rem_euclid(TAU))
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
        if hi - lo < 1e-12 * PI {
            break;
        }
    }
    0.5 * (lo + hi)
}
