use thiserror::Error;

/// Errors raised by the numerical toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("source support exceeds the admissible radius: {0}")]
    SupportViolation(String),
    #[error("inadmissible exponent tuple: {0}")]
    InadmissibleExponents(String),
    #[error("region too small for the grid: {0}")]
    RegionTooSmall(String),
    #[error("iteration diverged: {0}")]
    Diverged(String),
    #[error("smallness gate exceeded: measured {measured:.3e} > allowed {allowed:.3e}")]
    SmallnessGate { measured: f64, allowed: f64 },
    #[error("time step {dt:.3e} violates the CFL gate; suggested dt = {suggested:.3e}")]
    Cfl { dt: f64, suggested: f64 },
    #[error("solution blew up at t = {t:.4e} (max |v| = {vmax:.3e})")]
    BlowUp { t: f64, vmax: f64 },
    #[error(
        "divergence repair missed its tolerances after {iterations} sweeps: support leak {leak:.3e}, agreement {agreement:.3e}"
    )]
    RepairTolerance { iterations: usize, leak: f64, agreement: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
