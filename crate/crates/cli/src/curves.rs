//! Assisted-fidelity curves for the three qubit families `ρ(p)` and their tensor powers.

use std::cmp::Ordering;

use cohdist::distill::assisted_fidelity_from_delta;
use cohdist::hermat::{ComplexMatrix, DensityMatrix};
use rayon::prelude::*;
use serde::Deserialize;

use crate::format::full;
use crate::CliError;

pub const CSV_HEADER: &str = "family,p,n,m,F_assisted";

/// Largest `n` accepted in a curve spec; `2^n` entries of `δ^{⊗n}` are materialized.
pub const MAX_COPIES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `p|0⟩⟨0| + (1-p)|1⟩⟨1|`
    Diag,
    /// `[[p, p(1-p)], [p(1-p), 1-p]]`
    Offdiag,
    /// `p Ψ₂ + (1-p) 𝟙/2`
    Depolarized,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Diag => "diag",
            Family::Offdiag => "offdiag",
            Family::Depolarized => "depolarized",
        }
    }

    pub fn state(self, p: f64) -> DensityMatrix {
        let c = match self {
            Family::Diag => 0.0,
            Family::Offdiag => p * (1.0 - p),
            Family::Depolarized => p / 2.0,
        };
        let (a, b) = match self {
            Family::Depolarized => (0.5, 0.5),
            _ => (p, 1.0 - p),
        };
        DensityMatrix::new(ComplexMatrix::from_real_rows(&[&[a, c], &[c, b]]))
            .expect("family members are valid states for p in [0, 1]")
    }

    /// `δ(ρ(p))`, the entrywise square root of the diagonal.
    pub fn delta(self, p: f64) -> [f64; 2] {
        match self {
            Family::Diag | Family::Offdiag => [p.sqrt(), (1.0 - p).sqrt()],
            Family::Depolarized => [0.5f64.sqrt(), 0.5f64.sqrt()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub family: Family,
    pub p_grid: Vec<f64>,
    pub copies: Vec<usize>,
    pub m: usize,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(CurveSpec),
    Many(Vec<CurveSpec>),
}

/// Parses a single spec or an array of specs.
pub fn parse_specs(text: &str) -> Result<Vec<CurveSpec>, CliError> {
    let specs = match serde_json::from_str::<OneOrMany>(text) {
        Ok(OneOrMany::One(s)) => vec![s],
        Ok(OneOrMany::Many(v)) => v,
        Err(e) => return Err(CliError::Input(format!("curve spec: {e}"))),
    };
    for s in &specs {
        if s.m == 0 {
            return Err(CliError::Input("m must be at least 1".into()));
        }
        if let Some(p) = s.p_grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(CliError::Input(format!("p = {p} outside [0, 1]")));
        }
        if let Some(n) = s.copies.iter().find(|&&n| n == 0 || n > MAX_COPIES) {
            return Err(CliError::Input(format!(
                "copies {n} outside 1..={MAX_COPIES}"
            )));
        }
    }
    Ok(specs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub family: Family,
    pub p: f64,
    pub n: usize,
    pub m: usize,
    pub fidelity: f64,
}

/// `δ^{⊗n}` for a two-entry `δ`.
pub fn kron_power(delta: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..n {
        out = out
            .iter()
            .flat_map(|a| delta.iter().map(move |b| a * b))
            .collect();
    }
    out
}

pub fn evaluate(specs: &[CurveSpec]) -> Result<Vec<CurvePoint>, CliError> {
    let grid: Vec<(Family, f64, usize, usize)> = specs
        .iter()
        .flat_map(|s| {
            s.copies
                .iter()
                .flat_map(move |&n| s.p_grid.iter().map(move |&p| (s.family, p, n, s.m)))
        })
        .collect();
    let mut points = grid
        .into_par_iter()
        .map(|(family, p, n, m)| {
            let delta = kron_power(&family.delta(p), n);
            let fidelity = assisted_fidelity_from_delta(&delta, m)?;
            Ok(CurvePoint {
                family,
                p,
                n,
                m,
                fidelity,
            })
        })
        .collect::<Result<Vec<_>, cohdist::Error>>()?;
    points.sort_by(|a, b| {
        a.family
            .name()
            .cmp(b.family.name())
            .then(a.n.cmp(&b.n))
            .then(a.p.total_cmp(&b.p))
            .then(a.m.cmp(&b.m))
    });
    points.dedup_by(|a, b| {
        a.family == b.family && a.n == b.n && a.m == b.m && a.p.total_cmp(&b.p) == Ordering::Equal
    });
    Ok(points)
}

pub fn to_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for pt in points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            pt.family.name(),
            full(pt.p),
            pt.n,
            pt.m,
            full(pt.fidelity)
        ));
    }
    out
}
