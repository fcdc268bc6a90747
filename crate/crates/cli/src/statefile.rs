//! JSON state files: `{"dim": d, "entries": [[[re, im], ...], ...]}` with an optional
//! `declared_base` promise and an optional `renormalize` flag.

use std::path::Path;

use cohdist::distill::Exactness;
use cohdist::hermat::{ComplexMatrix, DensityMatrix, Tolerances};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredBase {
    pub dim_sigma: usize,
    pub copies: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dim: usize,
    pub entries: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_base: Option<DeclaredBase>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub renormalize: bool,
}

/// A validated state together with what is known about its structure.
#[derive(Debug, Clone)]
pub struct LoadedState {
    pub rho: DensityMatrix,
    pub exactness: Exactness,
}

fn tolerances(cap: usize) -> Tolerances {
    Tolerances {
        hermitian_check: 1e-9,
        psd: 1e-9,
        trace: 1e-8,
        dim_cap: cap,
        ..Tolerances::default()
    }
}

impl StateFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("state file: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn from_state(rho: &DensityMatrix, declared_base: Option<DeclaredBase>) -> Self {
        let m = rho.mat();
        let d = rho.dim();
        Self {
            dim: d,
            entries: (0..d)
                .map(|i| (0..d).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
            declared_base,
            renormalize: false,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state files always serialize")
    }

    /// Checks shape, cap and declared structure, then validates the density matrix.
    pub fn load(&self, cap: usize) -> Result<LoadedState, CliError> {
        let d = self.dim;
        if d == 0 {
            return Err(CliError::Input("dim must be positive".into()));
        }
        if d > cap {
            return Err(CliError::Capacity(format!(
                "dimension {d} exceeds cap {cap}"
            )));
        }
        if self.entries.len() != d || self.entries.iter().any(|r| r.len() != d) {
            return Err(CliError::Input(format!("entries must be a {d}x{d} array")));
        }
        let flat: Vec<Complex64> = self
            .entries
            .iter()
            .flatten()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect();
        if flat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(CliError::Input("entries must be finite".into()));
        }
        let mut mat = ComplexMatrix::from_row_major(d, flat)?;
        if self.renormalize {
            let tr = mat.trace().re;
            if !(tr > 0.0) {
                return Err(CliError::Input(format!("cannot renormalize trace {tr}")));
            }
            mat = mat.scale(1.0 / tr);
        }
        let rho = DensityMatrix::with_tolerances(mat, &tolerances(cap))?;
        let exactness = match self.declared_base {
            None => Exactness::Undeclared,
            Some(b) => {
                let matches = b.dim_sigma >= 1
                    && b.copies >= 1
                    && (b.dim_sigma as u128)
                        .checked_pow(b.copies as u32)
                        .is_some_and(|v| v == d as u128);
                if !matches {
                    return Err(CliError::Input(format!(
                        "declared base {}^{} does not match dim {d}",
                        b.dim_sigma, b.copies
                    )));
                }
                Exactness::TensorPower {
                    base_dim: b.dim_sigma,
                    copies: b.copies,
                }
            }
        };
        Ok(LoadedState { rho, exactness })
    }
}

impl LoadedState {
    /// `ρ^{⊗copies}` with the structural promise carried along.
    pub fn expand(&self, copies: usize, cap: usize) -> Result<LoadedState, CliError> {
        if copies == 0 {
            return Err(CliError::Input("copies must be at least 1".into()));
        }
        if copies == 1 {
            return Ok(self.clone());
        }
        let rho = cohdist::hermat::tensor_power_capped(&self.rho, copies, cap)?;
        let exactness = match self.exactness {
            Exactness::TensorPower {
                base_dim,
                copies: c,
            } => Exactness::TensorPower {
                base_dim,
                copies: c * copies,
            },
            Exactness::Undeclared => Exactness::TensorPower {
                base_dim: self.rho.dim(),
                copies,
            },
        };
        Ok(LoadedState { rho, exactness })
    }

    pub fn declared_base(&self) -> Option<DeclaredBase> {
        match self.exactness {
            Exactness::TensorPower { base_dim, copies } => Some(DeclaredBase {
                dim_sigma: base_dim,
                copies,
            }),
            Exactness::Undeclared => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HALF: &str = r#"{"dim": 2, "entries": [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]}"#;

    #[test]
    fn parses_maximally_mixed() {
        let s = StateFile::parse(HALF).unwrap().load(16).unwrap();
        assert_eq!(s.rho.dim(), 2);
        assert_eq!(s.exactness, Exactness::Undeclared);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cases = [
            r#"{"dim": 2, "entries": [[[1, 0]]]}"#,
            r#"{"dim": 2, "entries": [[[0.5, 0], [0.1, 0]], [[0, 0], [0.5, 0]]]}"#,
            r#"{"dim": 2, "entries": [[[1.2, 0], [0, 0]], [[0, 0], [-0.2, 0]]]}"#,
            r#"{"dim": 2, "entries": [[[0.6, 0], [0, 0]], [[0, 0], [0.6, 0]]]}"#,
            r#"{"dim": 2}"#,
            r#"not json"#,
        ];
        for c in cases {
            let r = StateFile::parse(c).and_then(|f| f.load(16));
            assert_eq!(r.unwrap_err().exit_code(), 2, "{c}");
        }
    }

    #[test]
    fn renormalize_flag() {
        let text =
            r#"{"dim": 2, "entries": [[[3, 0], [0, 0]], [[0, 0], [1, 0]]], "renormalize": true}"#;
        let s = StateFile::parse(text).unwrap().load(16).unwrap();
        assert!((s.rho.diag()[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn cap_is_capacity_error() {
        let f = StateFile::parse(HALF).unwrap();
        assert_eq!(f.load(1).unwrap_err().exit_code(), 3);
        let s = f.load(16).unwrap();
        assert_eq!(s.expand(5, 16).unwrap_err().exit_code(), 3);
        assert_eq!(s.expand(4, 16).unwrap().rho.dim(), 16);
    }

    #[test]
    fn declared_base_checked() {
        let bad = r#"{"dim": 2, "entries": [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]],
                      "declared_base": {"dim_sigma": 3, "copies": 1}}"#;
        assert!(StateFile::parse(bad).unwrap().load(16).is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let text = r#"{"dim": 2, "entries": [[[0.7, 0], [0.1, -0.2]], [[0.1, 0.2], [0.3, 0]]]}"#;
        let s = StateFile::parse(text).unwrap().load(16).unwrap();
        let dumped = StateFile::from_state(&s.rho, None).to_json();
        let back = StateFile::parse(&dumped).unwrap().load(16).unwrap();
        assert!((back.rho.mat() - s.rho.mat()).max_abs() <= 1e-12);
    }
}
