//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("invalid parameter {name}: {reason} (got {value})")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
        value: f64,
    },

    /// Two fields were combined that do not live on the same grid.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A norm or kernel-distance integral does not converge for the requested index.
    #[error("divergent integral: Sobolev index s={s} requires s > {required} in dimension {dim}")]
    DivergentNorm { s: f64, required: f64, dim: usize },

    /// Picard iteration did not contract within the allowed number of sweeps.
    #[error(
        "Picard iteration failed to contract: residual {residual:.3e} after {iters} iterations \
         (time step too large relative to the contraction condition)"
    )]
    PicardDiverged { residual: f64, iters: u32 },

    /// The per-step energy inequality was violated beyond tolerance.
    #[error("energy increased at t={t}: {before:.17e} -> {after:.17e}")]
    EnergyIncrease { t: f64, before: f64, after: f64 },

    /// Uniform time floor exceeded one of the per-alpha existence times it must undercut.
    #[error("uniform time floor {t0:.6e} exceeds existence time {t_alpha:.6e} at alpha={alpha}")]
    UniformFloorViolated { t0: f64, t_alpha: f64, alpha: f64 },

    /// Rate fitting was asked to take logs of non-positive errors.
    #[error(
        "non-positive error {error:.3e} at alpha={alpha}: trajectories are indistinguishable; \
         use the kernel-only mode (c_pert = 0) with finer measurement instead"
    )]
    NonPositiveError { alpha: f64, error: f64 },

    /// A parameter sweep aborted; identifies the failing alpha.
    #[error("sweep failed at alpha = {alpha}: {source}")]
    Sweep {
        alpha: f64,
        #[source]
        source: Box<Error>,
    },

    /// A field snapshot file is malformed.
    #[error("bad snapshot file: {0}")]
    SnapshotFormat(String),

    /// Underlying I/O failure, with the offending path.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: &'static str, value: f64) -> Self {
        Error::InvalidParameter {
            name,
            reason,
            value,
        }
    }
}
