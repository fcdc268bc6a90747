//! The subcommands. Each returns the text to print on stdout.

use std::path::Path;

use cohdist::distill::{
    assisted_fidelity_bound, assisted_fidelity_sdp, one_shot_rate_with, zero_error_rate_with,
    Exactness,
};
use cohdist::dnorm::{mnorm, mnorm_dual_oracle};
use cohdist::ensembles::same_diagonal_decomposition;
use cohdist::hermat::random::{random_density, random_state_vector, seeded_rng};
use cohdist::hermat::DensityMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::curves::{self, Family};
use crate::format::{sig6, table};
use crate::statefile::{LoadedState, StateFile};
use crate::CliError;

/// Largest state dimension for which the semidefinite programs are run.
pub const DEFAULT_SDP_CAP: usize = 8;

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub cap: usize,
    pub sdp_cap: usize,
    pub json: bool,
}

/// Reads, validates and expands a state file, optionally dumping the result.
pub fn load_state(
    path: &Path,
    copies: usize,
    dump: Option<&Path>,
    s: &Settings,
) -> Result<LoadedState, CliError> {
    let state = StateFile::read(path)?.load(s.cap)?.expand(copies, s.cap)?;
    if let Some(out) = dump {
        let file = StateFile::from_state(&state.rho, state.declared_base());
        std::fs::write(out, file.to_json() + "\n")?;
    }
    Ok(state)
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes") + "\n"
}

#[derive(Debug, Serialize)]
struct FidelityRow {
    m: usize,
    copies: usize,
    dim: usize,
    fidelity_bound: f64,
    fidelity_sdp: Option<f64>,
    exact: bool,
}

pub fn fidelity(
    path: &Path,
    ms: &[usize],
    copies: usize,
    dump: Option<&Path>,
    s: &Settings,
) -> Result<String, CliError> {
    let state = load_state(path, copies, dump, s)?;
    let rho = &state.rho;
    let exact = state.exactness.is_exact(rho.dim());
    let mut rows = Vec::new();
    for &m in ms {
        let bound = assisted_fidelity_bound(rho, m)?;
        let sdp = if rho.dim() <= s.sdp_cap {
            Some(assisted_fidelity_sdp(rho, m)?)
        } else {
            None
        };
        rows.push(FidelityRow {
            m,
            copies,
            dim: rho.dim(),
            fidelity_bound: bound,
            fidelity_sdp: sdp,
            exact,
        });
    }
    if s.json {
        return Ok(to_json(&rows));
    }
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.m.to_string(),
                r.copies.to_string(),
                r.dim.to_string(),
                sig6(r.fidelity_bound),
                r.fidelity_sdp.map_or("-".into(), sig6),
                r.exact.to_string(),
            ]
        })
        .collect();
    Ok(table(
        &["m", "copies", "dim", "F_bound", "F_sdp", "exact"],
        &cells,
    ))
}

#[derive(Debug, Serialize)]
struct RateOutput {
    eps: f64,
    copies: usize,
    dim: usize,
    m_requested: usize,
    fidelity_bound: f64,
    fidelity_sdp: Option<f64>,
    one_shot_rate_bits: f64,
    relaxed_rate_bits: f64,
    zero_error_bits: f64,
    zero_error_asymptotic_bits_per_copy: f64,
    exact: bool,
}

pub fn rate(
    path: &Path,
    eps: f64,
    copies: usize,
    dump: Option<&Path>,
    s: &Settings,
) -> Result<String, CliError> {
    if !(0.0..1.0).contains(&eps) {
        return Err(CliError::Input(format!("--eps {eps} outside [0, 1)")));
    }
    let base = load_state(path, 1, None, s)?;
    let state = load_state(path, copies, dump, s)?;
    let d = state.rho.dim();
    if eps > 0.0 && d > s.sdp_cap {
        return Err(CliError::Capacity(format!(
            "eps > 0 needs a semidefinite program of dimension {d}, above the cap {}",
            s.sdp_cap
        )));
    }
    let report = one_shot_rate_with(&state.rho, eps, state.exactness, d <= s.sdp_cap)?;
    // Per copy of the declared base state when there is one, else per copy of the file state.
    let base_copies = match base.exactness {
        Exactness::TensorPower { copies, .. } => copies,
        Exactness::Undeclared => 1,
    };
    let asymptotic = zero_error_rate_with(&base.rho, base.exactness).asymptotic_bits_per_copy
        / base_copies as f64;
    let out = RateOutput {
        eps,
        copies,
        dim: d,
        m_requested: report.m_requested,
        fidelity_bound: report.fidelity_bound,
        fidelity_sdp: report.fidelity_sdp,
        one_shot_rate_bits: report.one_shot_rate_bits,
        relaxed_rate_bits: report.relaxed_rate_bits,
        zero_error_bits: report.zero_error_bits,
        zero_error_asymptotic_bits_per_copy: asymptotic,
        exact: report.exact_flag,
    };
    if s.json {
        return Ok(to_json(&out));
    }
    let kind = if out.exact { "exact" } else { "upper bound" };
    let rows = vec![
        vec!["m_requested".into(), out.m_requested.to_string()],
        vec!["fidelity_bound".into(), sig6(out.fidelity_bound)],
        vec![
            "fidelity_sdp".into(),
            out.fidelity_sdp.map_or("-".into(), sig6),
        ],
        vec![
            "one_shot_rate_bits".into(),
            format!("{} ({kind})", sig6(out.one_shot_rate_bits)),
        ],
        vec!["relaxed_rate_bits".into(), sig6(out.relaxed_rate_bits)],
        vec![
            "zero_error_bits".into(),
            format!("{} ({kind})", sig6(out.zero_error_bits)),
        ],
        vec![
            "zero_error_asymptotic".into(),
            format!(
                "{} bits/copy",
                sig6(out.zero_error_asymptotic_bits_per_copy)
            ),
        ],
    ];
    Ok(table(&["quantity", "value"], &rows))
}

#[derive(Debug, Serialize)]
struct Decomposition {
    dim: usize,
    weights: Vec<f64>,
    atoms: Vec<Vec<[f64; 2]>>,
    reconstruction_residual: f64,
    diagonal_residual: f64,
}

fn complex(z: Complex64) -> String {
    // Rounding residue from the phase fixing is not worth showing.
    let clean = |x: f64| if x.abs() < 1e-15 { 0.0 } else { x };
    let z = Complex64::new(clean(z.re), clean(z.im));
    let sign = if z.im < 0.0 { '-' } else { '+' };
    format!("{}{sign}{}i", sig6(z.re), sig6(z.im.abs()))
}

pub fn decompose(
    path: &Path,
    copies: usize,
    dump: Option<&Path>,
    out: Option<&Path>,
    s: &Settings,
) -> Result<String, CliError> {
    let state = load_state(path, copies, dump, s)?;
    let rho = &state.rho;
    let ens = same_diagonal_decomposition(rho)?;
    let dec = Decomposition {
        dim: rho.dim(),
        weights: ens.weights.clone(),
        atoms: ens
            .atoms
            .iter()
            .map(|a| a.amplitudes().iter().map(|z| [z.re, z.im]).collect())
            .collect(),
        reconstruction_residual: ens.reconstruction_residual(rho)?,
        diagonal_residual: ens.diagonal_residual(rho),
    };
    if let Some(p) = out {
        std::fs::write(p, to_json(&dec))?;
    }
    if s.json {
        return Ok(to_json(&dec));
    }
    let rows: Vec<Vec<String>> = ens
        .weights
        .iter()
        .zip(&ens.atoms)
        .map(|(w, a)| {
            let amps: Vec<String> = a.amplitudes().iter().map(|z| complex(*z)).collect();
            vec![sig6(*w), amps.join(" ")]
        })
        .collect();
    let mut text = table(&["weight", "atom"], &rows);
    text.push_str(&format!(
        "reconstruction residual {:.3e}\ndiagonal residual {:.3e}\n",
        dec.reconstruction_residual, dec.diagonal_residual
    ));
    Ok(text)
}

pub fn figure(spec: &Path, out: &Path) -> Result<String, CliError> {
    let text = std::fs::read_to_string(spec)
        .map_err(|e| CliError::Input(format!("{}: {e}", spec.display())))?;
    let specs = curves::parse_specs(&text)?;
    let points = curves::evaluate(&specs)?;
    std::fs::write(out, curves::to_csv(&points))?;
    Ok(format!(
        "wrote {} rows to {}\n",
        points.len(),
        out.display()
    ))
}

/// Quick numerical checks. Returns the report and whether every check passed.
pub fn selftest(seed: u64) -> Result<(String, bool), CliError> {
    let mut rng = seeded_rng(seed);
    let mut lines = Vec::new();
    let mut all = true;
    let mut check = |name: &str, worst: f64, tol: f64| {
        let ok = worst <= tol;
        all &= ok;
        lines.push(format!(
            "{} {name}: worst deviation {worst:.2e} (tolerance {tol:.0e})",
            if ok { "PASS" } else { "FAIL" }
        ));
    };

    let mut worst: f64 = 0.0;
    for d in 2..=6 {
        let v = random_state_vector(d, &mut rng);
        let l2 = v.norm();
        worst = worst
            .max((mnorm(&v, 1.0)?.value - l2).abs())
            .max((mnorm(&v, d as f64)?.value - v.l1()).abs())
            .max((mnorm(&v, 2.5)?.value - mnorm_dual_oracle(&v, 2.5)?).abs());
    }
    check("m-norm special cases and dual agreement", worst, 1e-9);

    let mut worst: f64 = 0.0;
    for d in 2..=5 {
        let rho = random_density(d, &mut rng);
        let q = rho.max_diag();
        let want = if q <= 0.5 {
            1.0
        } else {
            0.5 + (q * (1.0 - q)).sqrt()
        };
        worst = worst.max((assisted_fidelity_bound(&rho, 2)? - want).abs());
    }
    check("two-level closed form", worst, 1e-9);

    let mut worst: f64 = 0.0;
    for d in [2, 3] {
        let rho = random_density(d, &mut rng);
        worst =
            worst.max((assisted_fidelity_sdp(&rho, 2)? - assisted_fidelity_bound(&rho, 2)?).abs());
    }
    check("relaxed fidelity equals bound", worst, 1e-6);

    let rho = random_density(3, &mut rng);
    let ens = same_diagonal_decomposition(&rho)?;
    check(
        "same-diagonal decomposition",
        ens.reconstruction_residual(&rho)?
            .max(ens.diagonal_residual(&rho)),
        1e-8,
    );

    let z = zero_error_rate_with(&DensityMatrix::diagonal(&[0.6, 0.4])?, Default::default());
    check(
        "zero-error rate",
        (z.asymptotic_bits_per_copy + 0.6f64.log2())
            .abs()
            .max(z.one_shot_bits.abs()),
        1e-12,
    );

    let f = cohdist::distill::assisted_fidelity_from_delta(&Family::Diag.delta(0.9), 2)?;
    check("figure anchor", (f - 0.8).abs(), 1e-9);

    let mut text = lines.join("\n");
    text.push('\n');
    Ok((text, all))
}
