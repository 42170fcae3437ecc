use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate layout: street width {street_m} m is not positive (built-area ratio too high)")]
    DegenerateLayout { street_m: f64 },

    #[error("value {0} is outside the open interval (0, 1)")]
    Domain(f64),

    #[error("unknown material `{0}`")]
    UnknownMaterial(String),

    #[error("frequency {ghz} GHz is outside the supported range [1, 100] GHz")]
    FrequencyOutOfRange { ghz: f64 },

    #[error("unsupported band {ghz} GHz (supported bands: 4.6, 8.2, 15, 28 GHz)")]
    UnsupportedBand { ghz: f64 },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("could not place UE after {attempts} rejection-sampling attempts (degenerate layout?)")]
    DropFailed { attempts: usize },

    #[error("invalid config key `{key}`: {reason}")]
    ConfigValue { key: String, reason: String },

    #[error("config parse error at line {line}, column {column}: {msg}")]
    ConfigParse { line: usize, column: usize, msg: String },

    #[error("geometry import, line {line}: {msg}")]
    Import { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
