use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Real spectral parameter on `[z0(|p|), inf)`; use the band-edge entry point for `z = z0`.
    #[error("z = {z} lies on the essential spectrum [{edge}, inf)")]
    OnEssentialSpectrum { z: f64, edge: f64 },

    #[error("pole: {0}")]
    Pole(String),

    /// `det U = 0`: the spectral parameter hit the point spectrum.
    #[error("reduced matrix U is singular at z = {re}{im:+}i")]
    Singular { re: f64, im: f64 },

    #[error("root solver did not converge after {iterations} iterations (bracket [{lo}, {hi}], F = {f_lo:e} .. {f_hi:e})")]
    NoConvergence {
        iterations: usize,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
