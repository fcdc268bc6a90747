//! Library side of the `cohdist` command-line tool.

pub mod commands;
pub mod curves;
pub mod error;
pub mod format;
pub mod statefile;

pub use error::CliError;

/// Dimension cap used when neither `--cap` nor `COHDIST_CAP` is given.
pub const DEFAULT_CAP: usize = 1024;

/// Resolves the dimension cap: the flag wins over the environment, which wins over the default.
pub fn resolve_cap(flag: Option<usize>, env: Option<&str>) -> Result<usize, CliError> {
    if let Some(c) = flag {
        return Ok(c);
    }
    match env {
        Some(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("COHDIST_CAP={s:?} is not a positive integer"))),
        None => Ok(DEFAULT_CAP),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_precedence() {
        assert_eq!(resolve_cap(Some(8), Some("64")).unwrap(), 8);
        assert_eq!(resolve_cap(None, Some("64")).unwrap(), 64);
        assert_eq!(resolve_cap(None, None).unwrap(), DEFAULT_CAP);
        assert_eq!(resolve_cap(None, Some("x")).unwrap_err().exit_code(), 2);
    }
}
