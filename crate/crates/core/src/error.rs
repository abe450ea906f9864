use std::fmt;

use crate::lattice::Offset;

/// Errors raised by the reconstruction library.
#[derive(Debug, thiserror::Error)]
pub enum WddError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("nonphysical measurement: entry ({row}, {col}) = {value:e} is negative")]
    Nonphysical { row: usize, col: usize, value: f64 },

    #[error("window generation failed after {attempts} attempts; first vanishing coefficient at {violation}")]
    WindowGeneration {
        attempts: usize,
        violation: WindowViolation,
    },

    #[error("ill-conditioned deconvolution: window coefficient at offset {offset}, frequency {freq} has magnitude {magnitude:e}")]
    IllConditioned {
        offset: Offset,
        freq: usize,
        magnitude: f64,
    },

    #[error("incomplete spectrum: zero-frequency coefficient of offset {offset} is not available")]
    IncompleteSpectrum { offset: Offset },

    #[error("power iteration did not converge in {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("degenerate zero-frequency system for offset {offset}: singular values {sigma_max:e}, {sigma_min:e}; the lost coefficient is not identifiable from this data (try the phase-object method)")]
    DegenerateSystem {
        offset: Offset,
        sigma_max: f64,
        sigma_min: f64,
    },

    #[error("insufficient diagonals: need at least {needed}, have {available}")]
    InsufficientDiagonals { needed: usize, available: usize },

    #[error("not a phase object: offset {offset} carries spectral energy {energy:e} beyond the bound {bound:e}")]
    NotPhaseObject { offset: Offset, energy: f64, bound: f64 },

    #[error("inconsistent phase system for offset {offset}: {reason}")]
    InconsistentSystem { offset: Offset, reason: String },

    #[error("ambiguity resolution failed: candidate residuals {winner:e} and {loser:e} are not separated")]
    AmbiguityResolution { winner: f64, loser: f64 },

    #[error("rank pair ({first}, {second}) leaves the lost coefficients undetermined by lags 1 and 2")]
    ImpossibleRankPair { first: usize, second: usize },

    #[error("empty or zero-norm input: {0}")]
    ZeroNorm(&'static str),
}

pub type Result<T> = std::result::Result<T, WddError>;

/// First window coefficient that failed the nonvanishing test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowViolation {
    pub offset: Offset,
    pub freq: usize,
    pub magnitude: f64,
}

impl fmt::Display for WindowViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(offset {}, frequency {}, |coefficient| = {:e})",
            self.offset, self.freq, self.magnitude
        )
    }
}
