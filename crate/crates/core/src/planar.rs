//! Two-dimensional objects: square images scanned over every 2D shift.
//!
//! The 1D machinery is written against [`Shape`], so the pipelines here only
//! choose the set of diagonal offsets and run the shared stages.

use num_complex::Complex64;

use crate::error::{Result, WddError};
use crate::forward::{self, MeasurementGrid, ObjectSpec, Window};
use crate::general;
use crate::lattice::{Field, Offset, Shape};
use crate::metrics;
use crate::phase::{self, DroppedLag};
use crate::wdd::{self, Estimate};

/// Largest background-invariant residual accepted as a verified phase
/// reconstruction.
pub const VERIFY_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexImage {
    shape: Shape,
    entries: Vec<Complex64>,
}

impl ComplexImage {
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(WddError::InvalidParameter {
                name: "shape",
                reason: format!("image dimensions must be positive, got {rows}x{cols}"),
            });
        }
        if entries.len() != rows * cols {
            return Err(WddError::Dimension {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        Ok(ComplexImage {
            shape: Shape { rows, cols },
            entries,
        })
    }

    pub fn from_fn(d: usize, f: impl Fn(usize, usize) -> Complex64) -> Result<Self> {
        let entries = (0..d * d).map(|p| f(p / d.max(1), p % d.max(1))).collect();
        Self::new(d, d, entries)
    }

    /// Random `d x d` image from a random object family.
    pub fn generate(spec: &ObjectSpec, d: usize) -> Result<Self> {
        let shape = Shape::square(d);
        Self::new(d, d, spec.generate_on(shape)?)
    }

    /// `u v^T`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Result<Self> {
        let entries = u.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
        Self::new(u.len(), v.len(), entries)
    }

    pub fn rows(&self) -> usize {
        self.shape.rows
    }

    pub fn cols(&self) -> usize {
        self.shape.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.entries[self.shape.index(r % self.shape.rows, c % self.shape.cols)]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.entries
    }
}

impl Field for ComplexImage {
    fn shape(&self) -> Shape {
        self.shape
    }

    fn values(&self) -> &[Complex64] {
        &self.entries
    }
}

/// Offsets of the diagonals used by a 2D reconstruction, main diagonal first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagonalIndexSet {
    pub gamma: usize,
    pub pairs: Vec<Offset>,
}

impl DiagonalIndexSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, o: Offset) -> bool {
        self.pairs.contains(&o)
    }
}

fn zero_first(mut pairs: Vec<Offset>) -> Vec<Offset> {
    pairs.sort_by_key(|o| (!o.is_zero(), o.row, o.col));
    pairs
}

/// `{(j1, j2) : 0 <= j1 < g, -g < j2 < g, -g < j1 + j2 < g}`.
pub fn index_set(gamma: usize) -> Result<DiagonalIndexSet> {
    if gamma == 0 {
        return Err(WddError::InvalidParameter {
            name: "gamma",
            reason: "must be at least 1".into(),
        });
    }
    let g = gamma as i64;
    let pairs = (0..g)
        .flat_map(|a| (1 - g..g).map(move |b| Offset::new(a, b)))
        .filter(|o| (o.row + o.col).abs() < g)
        .collect();
    Ok(DiagonalIndexSet {
        gamma,
        pairs: zero_first(pairs),
    })
}

/// `{(j1, j2) : 0 <= j1 < delta, -delta < j2 < delta}`.
pub fn all_set(delta: usize) -> Result<DiagonalIndexSet> {
    if delta == 0 {
        return Err(WddError::InvalidParameter {
            name: "delta",
            reason: "must be at least 1".into(),
        });
    }
    let g = delta as i64;
    let pairs = (0..g)
        .flat_map(|a| (1 - g..g).map(move |b| Offset::new(a, b)))
        .collect();
    Ok(DiagonalIndexSet {
        gamma: delta,
        pairs: zero_first(pairs),
    })
}

/// Diffraction intensities of an image under every 2D shift of the window.
pub fn simulate_2d(x: &ComplexImage, w: &Window) -> Result<MeasurementGrid> {
    if x.shape() != w.shape() {
        return Err(WddError::Dimension {
            expected: x.shape().len(),
            found: w.shape().len(),
        });
    }
    forward::simulate(x, w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagonalMode {
    Gamma(usize),
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Vanilla,
    General,
    Phase,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanarReconstruction {
    pub image: ComplexImage,
    /// Pixels whose phase could not be synchronized.
    pub unresolved: Vec<usize>,
    /// Phase method: offsets left out because their system was not rank two.
    pub dropped: Vec<DroppedLag>,
    /// Phase method: background-invariant residual and whether it passed.
    pub verification: Option<(f64, bool)>,
}

impl PlanarReconstruction {
    /// False only for phase reconstructions that failed the a-posteriori check.
    pub fn verified(&self) -> bool {
        self.verification.is_none_or(|(_, ok)| ok)
    }
}

fn image_of(est: Estimate) -> Result<ComplexImage> {
    ComplexImage::new(est.shape.rows, est.shape.cols, est.values)
}

/// Reconstruction of a square image from (possibly background-corrupted)
/// 2D ptychographic measurements.
pub fn reconstruct_2d(
    y: &MeasurementGrid,
    w: &Window,
    mode: DiagonalMode,
    method: Method,
) -> Result<PlanarReconstruction> {
    let shape = y.shape();
    if shape.rows != shape.cols || shape.rows < 2 {
        return Err(WddError::InvalidParameter {
            name: "shape",
            reason: format!("expected a square image of side at least 2, got {shape}"),
        });
    }
    if shape != w.shape() {
        return Err(WddError::Dimension {
            expected: shape.len(),
            found: w.shape().len(),
        });
    }
    let set = match mode {
        DiagonalMode::Gamma(g) => {
            if g > w.support() {
                return Err(WddError::InvalidParameter {
                    name: "gamma",
                    reason: format!("need gamma <= delta = {}, got {g}", w.support()),
                });
            }
            index_set(g)?
        }
        DiagonalMode::All => all_set(w.support())?,
    };
    let offsets = &set.pairs;
    match method {
        Method::Vanilla => {
            let est = wdd::algorithm1_on(y, w, offsets)?;
            Ok(PlanarReconstruction {
                unresolved: est.unresolved.clone(),
                image: image_of(est)?,
                dropped: Vec::new(),
                verification: None,
            })
        }
        Method::General => {
            if set.len() < 2 {
                return Err(WddError::InsufficientDiagonals {
                    needed: 2,
                    available: set.len(),
                });
            }
            let (est, _) = general::algorithm2_on(y, w, offsets)?;
            Ok(PlanarReconstruction {
                unresolved: est.unresolved.clone(),
                image: image_of(est)?,
                dropped: Vec::new(),
                verification: None,
            })
        }
        Method::Phase => {
            wdd::require_window(w, offsets)?;
            let spec = wdd::deconvolve(&wdd::wdd_rows(y, offsets), w, true)?;
            let (repaired, dropped) = phase::repair_rank2(&spec)?;
            let est = wdd::recover(&repaired, true)?;
            let unresolved = est.unresolved.clone();
            let image = image_of(est)?;
            let residual = metrics::background_invariant_residual(&image, w, y)?;
            Ok(PlanarReconstruction {
                image,
                unresolved,
                dropped,
                verification: Some((residual, residual <= VERIFY_TOL)),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_set_small_cases() {
        assert_eq!(index_set(1).unwrap().pairs, vec![Offset::ZERO]);
        let two = index_set(2).unwrap();
        let mut want = vec![
            Offset::new(0, -1),
            Offset::new(0, 0),
            Offset::new(0, 1),
            Offset::new(1, -1),
            Offset::new(1, 0),
        ];
        let mut got = two.pairs.clone();
        want.sort();
        got.sort();
        assert_eq!(got, want);
        assert_eq!(two.pairs[0], Offset::ZERO);
        assert!(index_set(0).is_err());
    }

    #[test]
    fn all_set_size() {
        for delta in 1..7 {
            assert_eq!(all_set(delta).unwrap().len(), delta * (2 * delta - 1));
        }
    }

    #[test]
    fn outer_product_layout() {
        let u = [Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)];
        let v = [Complex64::new(0.0, 1.0), Complex64::new(3.0, 0.0)];
        let img = ComplexImage::outer(&u, &v).unwrap();
        assert_eq!(img.get(1, 0), Complex64::new(0.0, 2.0));
        assert_eq!(img.get(0, 1), Complex64::new(3.0, 0.0));
    }

    #[test]
    fn rectangular_input_rejected() {
        let y = MeasurementGrid::new(Shape { rows: 2, cols: 3 }, vec![0.0; 36]).unwrap();
        let w = forward::make_window_2d(4, 2, 1).unwrap();
        assert!(reconstruct_2d(&y, &w, DiagonalMode::Gamma(2), Method::Vanilla).is_err());
    }
}
