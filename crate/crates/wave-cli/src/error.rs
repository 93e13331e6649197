//! Exit codes and the JSON error record.

use serde_json::json;

/// Exit code of a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit code for I/O and other runtime failures outside the numerical contract.
pub const EXIT_RUNTIME: i32 = 1;
/// Exit code for invalid input: bad flags or config, out-of-domain arguments, budgets.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit code when a resolution certificate (or a convergence/aliasing guard) fails.
pub const EXIT_RESOLUTION: i32 = 3;

/// Failure of a CLI run.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Lib(htwave::Error),
    Internal(String),
}

impl From<htwave::Error> for CliError {
    fn from(e: htwave::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    /// Short machine-readable kind.
    pub fn kind(&self) -> &'static str {
        use htwave::Error as E;
        match self {
            CliError::Validation(_) => "validation",
            CliError::Internal(_) => "internal",
            CliError::Lib(e) => match e {
                E::Dimension(_) => "dimension",
                E::InvalidArgument(_) => "invalid_argument",
                E::SingularTime(_) => "singular_time",
                E::Pole(_) => "pole",
                E::Budget(_) => "budget",
                E::Quadrature { .. } => "quadrature",
                E::Resolution(_) => "resolution",
                E::Truncation(_) => "truncation",
                E::Aliasing(_) => "aliasing",
                E::Fit(_) => "fit",
                E::Io(_) => "io",
                E::Json(_) => "json",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        use htwave::Error as E;
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Internal(_) => EXIT_RUNTIME,
            CliError::Lib(e) => match e {
                E::Quadrature { .. } | E::Resolution(_) | E::Truncation(_) | E::Aliasing(_) => EXIT_RESOLUTION,
                E::Io(_) | E::Json(_) => EXIT_RUNTIME,
                _ => EXIT_VALIDATION,
            },
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Validation(m) | CliError::Internal(m) => m.clone(),
            CliError::Lib(e) => e.to_string(),
        }
    }

    /// One-line JSON record: `{"error":{"kind":..,"message":..,"exit_code":..}}`.
    pub fn record(&self) -> String {
        json!({ "error": { "kind": self.kind(), "message": self.message(), "exit_code": self.exit_code() } }).to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes() {
        assert_eq!(CliError::Lib(htwave::Error::Budget("x".into())).exit_code(), EXIT_VALIDATION);
        assert_eq!(CliError::Lib(htwave::Error::Resolution("x".into())).exit_code(), EXIT_RESOLUTION);
        assert_eq!(CliError::Validation("x".into()).exit_code(), EXIT_VALIDATION);
        let rec: serde_json::Value = serde_json::from_str(&CliError::Validation("bad".into()).record()).unwrap();
        assert_eq!(rec["error"]["exit_code"], 2);
        assert_eq!(rec["error"]["message"], "bad");
    }
}
