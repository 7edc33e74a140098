use thiserror::Error;

/// Errors raised by the simulator, planner and scenario front end.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Draft lift exceeded the vehicle weight; the machine would pitch over.
    #[error("flip instability at half-cycle {half_cycle}: lift {lift:.3} N exceeds weight {weight:.3} N")]
    Flip {
        half_cycle: u64,
        lift: f64,
        weight: f64,
    },

    /// The vehicle cannot generate traction for the commanded stroke.
    #[error("vehicle stuck at half-cycle {half_cycle}: {reason}")]
    Stuck { half_cycle: u64, reason: String },

    /// Rotation about an anchor is undefined for the current geometry.
    #[error("degenerate rotation: {0}")]
    Degenerate(String),

    #[error("planning error: {0}")]
    Planning(String),

    /// Scenario or configuration rejected during validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
