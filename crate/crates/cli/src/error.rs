use safe_core::elevation::ElevationError;
use safe_core::p1812::P1812Error;
use safe_core::profile::ProfileError;
use safe_core::ret::RetError;
use safe_core::safe::SafeError;
use safe_core::validation::ValidationError;
use serde_json::json;
use thiserror::Error;

/// Error classes, one exit code each.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Coverage(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Foliage(String),
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Input(_) => 4,
            CliError::Coverage(_) => 5,
            CliError::Domain(_) => 6,
            CliError::Foliage(_) => 7,
            CliError::Validation(_) => 8,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Input(_) => "input",
            CliError::Coverage(_) => "coverage",
            CliError::Domain(_) => "domain",
            CliError::Foliage(_) => "foliage-parameters",
            CliError::Validation(_) => "validation",
        }
    }

    pub fn to_json(&self) -> String {
        json!({
            "error": {
                "kind": self.kind(),
                "exit_code": self.exit_code(),
                "message": self.to_string(),
            }
        })
        .to_string()
    }
}

impl From<ElevationError> for CliError {
    fn from(e: ElevationError) -> Self {
        match e {
            ElevationError::NoCoverage { .. } | ElevationError::TransformFailure { .. } => {
                CliError::Coverage(e.to_string())
            }
            ElevationError::NegativeInput(_) => CliError::Config(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        match e {
            ProfileError::Elevation(inner) => inner.into(),
            ProfileError::NonPositive(_) => CliError::Config(e.to_string()),
            ProfileError::Invalid(_) => CliError::Input(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<P1812Error> for CliError {
    fn from(e: P1812Error) -> Self {
        match e {
            P1812Error::EnvironmentOutOfRange(_) => CliError::Config(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<RetError> for CliError {
    fn from(e: RetError) -> Self {
        match e {
            RetError::Elevation(inner) => inner.into(),
            RetError::NegativeLimit(_) => CliError::Config(e.to_string()),
            _ => CliError::Foliage(e.to_string()),
        }
    }
}

impl From<SafeError> for CliError {
    fn from(e: SafeError) -> Self {
        match e {
            SafeError::Profile(inner) => inner.into(),
            SafeError::P1812(inner) => inner.into(),
            SafeError::Ret(inner) => inner.into(),
            SafeError::EmptyRegion | SafeError::InvalidConfig(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        match e {
            ValidationError::Prediction(inner) => inner.into(),
            ValidationError::Io { .. }
            | ValidationError::Csv(_)
            | ValidationError::InvalidRecord { .. }
            | ValidationError::CoordinateOutOfRange { .. } => CliError::Input(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}
