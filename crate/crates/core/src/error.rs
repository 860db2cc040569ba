use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid value for `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("amplitude and density live on different grids")]
    GridMismatch,

    #[error("state has zero weighted norm")]
    ZeroNorm,

    #[error("no-jump norm grew by {growth:.3e} (relative) in the step ending at t = {time}")]
    NormGrowth { time: f64, growth: f64 },

    #[error("amplitude became non-finite at t = {0}")]
    NonFinite(f64),

    #[error("flux conservation breached: emitted + residual = {total:.9} (|deviation| = {deviation:.3e})")]
    FluxBreach { total: f64, deviation: f64 },

    #[error("emission probability {0:.9} overshoots 1 beyond tolerance")]
    EmissionOvershoot(f64),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
