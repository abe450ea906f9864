//! Wigner distribution deconvolution for ptychography with per-frequency
//! background removal.

pub mod error;
pub mod forward;
pub mod fourier;
pub mod general;
pub mod lattice;
pub mod metrics;
pub mod phase;
pub mod planar;
pub mod signal;
pub mod wdd;

pub use error::{Result, WddError, WindowViolation};
pub use forward::{Background, MeasurementGrid, ObjectKind, ObjectSpec, Window};
pub use lattice::{Field, Offset, Shape};
pub use phase::{PhaseObjectResult, PhaseOutcome, PhaseSystem, RankClass};
pub use planar::{ComplexImage, DiagonalIndexSet, DiagonalMode, Method};
pub use signal::{sgn, ComplexSignal, SpectralPair};
pub use wdd::{BandedLift, DiagonalSpectrum};
