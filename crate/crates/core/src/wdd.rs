//! Wigner distribution deconvolution: transform, deconvolution, banded lift,
//! magnitude estimation and eigenvector phase synchronization.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, WddError};
use crate::forward::{check_window_offsets, MeasurementGrid, Window};
use crate::fourier;
use crate::lattice::{Offset, Shape};
use crate::signal::{sgn, ComplexSignal};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `F^{-1} Y F` evaluated on a subset of lag rows.
#[derive(Clone, Debug, PartialEq)]
pub struct WddTable {
    shape: Shape,
    offsets: Vec<Offset>,
    rows: Vec<Vec<Complex64>>,
}

impl WddTable {
    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn offsets(&self) -> &[Offset] {
        &self.offsets
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.rows[i]
    }

    /// Row for a lag, if it was computed.
    pub fn row_for(&self, o: Offset) -> Option<&[Complex64]> {
        self.offsets
            .iter()
            .position(|&p| self.shape.same_offset(p, o))
            .map(|i| self.rows[i].as_slice())
    }

    /// Entry `(j, k)` with `j` a lag row and `k` a flat frequency index.
    pub fn get(&self, o: Offset, k: usize) -> Option<Complex64> {
        self.row_for(o).map(|r| r[k])
    }
}

/// Full `n x n` table, rows indexed by every lattice lag in flat order.
pub fn wdd_transform(y: &MeasurementGrid) -> WddTable {
    let shape = y.shape();
    let offsets: Vec<Offset> = (0..shape.len())
        .map(|p| {
            let (r, c) = shape.coords(p);
            Offset::new(r as i64, c as i64)
        })
        .collect();
    wdd_rows(y, &offsets)
}

/// Rows `j` of `F^{-1} Y F` for the requested lags only.
///
/// Each frequency row of `Y` is transformed over the scan index and folded
/// into the requested outputs, so memory stays at `O(n * |offsets|)`.
pub fn wdd_rows(y: &MeasurementGrid, offsets: &[Offset]) -> WddTable {
    let shape = y.shape();
    let n = shape.len();
    let empty = || vec![vec![ZERO; n]; offsets.len()];
    let sums = (0..n)
        .into_par_iter()
        .fold(
            || (empty(), vec![ZERO; n]),
            |(mut acc, mut buf), l| {
                for (r, v) in y.values()[l * n..(l + 1) * n].iter().enumerate() {
                    buf[r] = Complex64::new(*v, 0.0);
                }
                fourier::transform_in_place(shape, &mut buf, false);
                for (row, &o) in acc.iter_mut().zip(offsets) {
                    let phase = Complex64::from_polar(1.0, shape.angle(o, l));
                    for (t, z) in row.iter_mut().zip(&buf) {
                        *t += phase * z;
                    }
                }
                (acc, buf)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(empty, |mut a, b| {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    *x += y;
                }
            }
            a
        });
    let scale = 1.0 / n as f64;
    let rows = sums
        .into_iter()
        .map(|r| r.into_iter().map(|v| v * scale).collect())
        .collect();
    WddTable {
        shape,
        offsets: offsets.to_vec(),
        rows,
    }
}

/// Fourier coefficients `f^j_k` of the diagonals `x . S_j conj(x)` for a set of
/// lags, with a flag per lag telling whether the `k = 0` entry is known.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalSpectrum {
    shape: Shape,
    offsets: Vec<Offset>,
    coeffs: Vec<Vec<Complex64>>,
    zero_valid: Vec<bool>,
}

impl DiagonalSpectrum {
    pub fn new(shape: Shape, offsets: Vec<Offset>, coeffs: Vec<Vec<Complex64>>, zero_valid: Vec<bool>) -> Result<Self> {
        if coeffs.len() != offsets.len() || zero_valid.len() != offsets.len() {
            return Err(WddError::Dimension {
                expected: offsets.len(),
                found: coeffs.len().min(zero_valid.len()),
            });
        }
        if let Some(bad) = coeffs.iter().find(|r| r.len() != shape.len()) {
            return Err(WddError::Dimension {
                expected: shape.len(),
                found: bad.len(),
            });
        }
        Ok(DiagonalSpectrum {
            shape,
            offsets,
            coeffs,
            zero_valid,
        })
    }

    /// Exact spectrum of a known object.
    pub fn from_object(shape: Shape, x: &[Complex64], offsets: &[Offset]) -> Self {
        let coeffs = offsets
            .iter()
            .map(|&o| {
                let diag: Vec<Complex64> = (0..shape.len())
                    .map(|p| x[p] * x[shape.translate(p, o)].conj())
                    .collect();
                fourier::dft(shape, &diag)
            })
            .collect();
        DiagonalSpectrum {
            shape,
            offsets: offsets.to_vec(),
            coeffs,
            zero_valid: vec![true; offsets.len()],
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn offsets(&self) -> &[Offset] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn index_of(&self, o: Offset) -> Option<usize> {
        self.offsets.iter().position(|&p| self.shape.same_offset(p, o))
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.coeffs[i]
    }

    pub fn zero_valid(&self, i: usize) -> bool {
        self.zero_valid[i]
    }

    pub fn is_complete(&self) -> bool {
        self.zero_valid.iter().all(|&v| v)
    }

    /// Installs a repaired zero-frequency coefficient.
    pub fn set_zero(&mut self, i: usize, value: Complex64) {
        self.coeffs[i][0] = value;
        self.zero_valid[i] = true;
    }

    /// Drops the zero-frequency entry of row `i`.
    pub fn invalidate_zero(&mut self, i: usize) {
        self.coeffs[i][0] = ZERO;
        self.zero_valid[i] = false;
    }

    /// Keeps only the listed rows, in the given order.
    pub fn restrict(&self, offsets: &[Offset]) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(offsets.len());
        let mut valid = Vec::with_capacity(offsets.len());
        for &o in offsets {
            let i = self.index_of(o).ok_or(WddError::IncompleteSpectrum { offset: o })?;
            coeffs.push(self.coeffs[i].clone());
            valid.push(self.zero_valid[i]);
        }
        Ok(DiagonalSpectrum {
            shape: self.shape,
            offsets: offsets.to_vec(),
            coeffs,
            zero_valid: valid,
        })
    }

    /// The diagonal itself, `IDFT(f^j)`.
    pub fn diagonal(&self, i: usize) -> Result<Vec<Complex64>> {
        if !self.zero_valid[i] {
            return Err(WddError::IncompleteSpectrum {
                offset: self.offsets[i],
            });
        }
        Ok(fourier::idft(self.shape, &self.coeffs[i]))
    }
}

/// Diagonal spectra from table rows: `f^j_k = conj(T_{j,k} / F[conj(w) . S_j w]_k)`.
///
/// With the measurement model `|F[S_{-r} x . w]_l|^2` the table factors as
/// `T_{j,k} = conj(f^j_k) F[conj(w) . S_j w]_k`. With `drop_zero` the
/// `k = 0` entries are discarded, which removes every trace of a
/// shift-independent background.
pub fn deconvolve(t: &WddTable, w: &Window, drop_zero: bool) -> Result<DiagonalSpectrum> {
    if t.shape() != w.shape() {
        return Err(WddError::Dimension {
            expected: t.shape().len(),
            found: w.shape().len(),
        });
    }
    let tau = w.tolerance();
    let rows: Vec<Result<Vec<Complex64>>> = t
        .offsets()
        .par_iter()
        .zip(t.rows.par_iter())
        .map(|(&o, row)| {
            let spec = w.ambiguity_spectrum(o);
            let start = usize::from(drop_zero);
            let mut out = vec![ZERO; row.len()];
            for k in start..row.len() {
                let m = spec[k].norm();
                if !(m > tau) {
                    return Err(WddError::IllConditioned {
                        offset: o,
                        freq: k,
                        magnitude: m,
                    });
                }
                out[k] = (row[k] / spec[k]).conj();
            }
            Ok(out)
        })
        .collect();
    let coeffs = rows.into_iter().collect::<Result<Vec<_>>>()?;
    DiagonalSpectrum::new(
        t.shape(),
        t.offsets().to_vec(),
        coeffs,
        vec![!drop_zero; t.offsets().len()],
    )
}

/// Sparse Hermitian matrix holding the recovered diagonals of `x x^*`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedLift {
    shape: Shape,
    offsets: Vec<Offset>,
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl BandedLift {
    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn size(&self) -> usize {
        self.shape.len()
    }

    /// Lags whose diagonals were placed (their negatives are filled by symmetry).
    pub fn offsets(&self) -> &[Offset] {
        &self.offsets
    }

    pub fn row(&self, r: usize) -> &[(usize, Complex64)] {
        &self.rows[r]
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        match self.rows[r].binary_search_by_key(&c, |e| e.0) {
            Ok(i) => self.rows[r][i].1,
            Err(_) => ZERO,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let n = self.size();
        let mut m = vec![vec![ZERO; n]; n];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[r][c] = v;
            }
        }
        m
    }

    /// Exact Hermitian symmetry, entry by entry.
    pub fn is_hermitian(&self) -> bool {
        self.rows
            .iter()
            .enumerate()
            .all(|(r, row)| row.iter().all(|&(c, v)| self.get(c, r) == v.conj()))
    }

    pub fn max_abs(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|e| e.1.norm()))
            .fold(0.0, f64::max)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// Places `IDFT(f^j)` on the lag-`j` off-diagonal and its conjugate on lag `-j`.
pub fn assemble_lift(spec: &DiagonalSpectrum) -> Result<BandedLift> {
    let shape = spec.shape();
    let n = shape.len();
    let mut rows: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); n];
    for (i, &o) in spec.offsets().iter().enumerate() {
        let g = spec.diagonal(i)?;
        for (p, v) in g.into_iter().enumerate() {
            let q = shape.translate(p, o);
            if q == p {
                rows[p].insert(p, Complex64::new(v.re, 0.0));
            } else {
                rows[p].insert(q, v);
                rows[q].insert(p, v.conj());
            }
        }
    }
    Ok(BandedLift {
        shape,
        offsets: spec.offsets().to_vec(),
        rows: rows.into_iter().map(|m| m.into_iter().collect()).collect(),
    })
}

/// `sqrt(max(0, Re X_ll))`.
pub fn magnitudes(x: &BandedLift) -> Vec<f64> {
    (0..x.size()).map(|l| x.get(l, l).re.max(0.0).sqrt()).collect()
}

/// Relative size below which lift entries count as zero in `sgn(X)`.
pub const SIGN_THRESHOLD: f64 = 1e-12;

/// Default relative eigenvector tolerance.
pub const SYNC_TOLERANCE: f64 = 1e-12;

/// Iteration cap used when the caller does not supply one.
///
/// The band mask has its second eigenvalue within `O(1/n^2)` of the first,
/// so the cap grows quadratically.
pub fn default_iterations(n: usize) -> usize {
    (20 * n * n).max(2000)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSync {
    /// Unimodular phases, zero where the phase could not be determined.
    pub phases: Vec<Complex64>,
    /// Indices whose phase is unrecoverable (their lift rows vanish).
    pub unresolved: Vec<usize>,
    pub iterations: usize,
    pub eigenvalue: f64,
}

/// Top eigenvector of `sgn(X)` by power iteration from the normalized all-ones
/// vector; returns its entrywise phases.
pub fn phase_sync(x: &BandedLift, iters: usize, tol: f64) -> Result<PhaseSync> {
    let n = x.size();
    let distinct = x
        .offsets()
        .iter()
        .filter(|o| !x.shape().same_offset(**o, Offset::ZERO))
        .count();
    if distinct == 0 && n > 1 {
        return Err(WddError::InsufficientDiagonals {
            needed: 2,
            available: 1,
        });
    }
    let cutoff = SIGN_THRESHOLD * x.max_abs();
    let sign: Vec<Vec<(usize, Complex64)>> = x
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .filter(|e| e.1.norm() > cutoff)
                .map(|&(c, v)| (c, sgn(v)))
                .collect()
        })
        .collect();
    // Shifting by the Gershgorin radius makes the operator positive
    // semidefinite, so the iteration cannot lock onto a negative eigenvalue.
    let shift = sign.iter().map(Vec::len).max().unwrap_or(0) as f64;
    let apply = |v: &[Complex64], out: &mut [Complex64]| {
        for ((o, row), vi) in out.iter_mut().zip(&sign).zip(v) {
            *o = row.iter().map(|&(c, s)| s * v[c]).sum::<Complex64>() + shift * vi;
        }
    };
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    let mut v = vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n];
    let mut next = vec![ZERO; n];
    let mut prev_step = f64::INFINITY;
    let mut step = f64::INFINITY;
    let mut lambda = 0.0;
    let floor = 64.0 * f64::EPSILON * (n as f64).sqrt();
    let mut done = None;
    for it in 1..=iters {
        apply(&v, &mut next);
        let nv = norm(&next);
        if nv == 0.0 {
            return Err(WddError::ZeroNorm("sign matrix annihilates the start vector"));
        }
        lambda = v.iter().zip(&next).map(|(a, b)| (a.conj() * b).re).sum::<f64>() - shift;
        next.iter_mut().for_each(|z| *z /= nv);
        step = v.iter().zip(&next).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        std::mem::swap(&mut v, &mut next);
        // Geometric extrapolation of the remaining distance to the limit.
        let rate = (step / prev_step).clamp(0.0, 1.0 - 1e-15);
        let remaining = if it > 2 { step / (1.0 - rate) } else { f64::INFINITY };
        if remaining <= tol || step <= floor {
            done = Some(it);
            break;
        }
        prev_step = step;
    }
    let Some(iterations) = done else {
        return Err(WddError::NoConvergence {
            iterations: iters,
            residual: step,
        });
    };
    let vmax = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut unresolved = Vec::new();
    let phases = v
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            if z.norm() <= 1e-10 * vmax || sign[i].is_empty() {
                unresolved.push(i);
                ZERO
            } else {
                sgn(z)
            }
        })
        .collect();
    Ok(PhaseSync {
        phases,
        unresolved,
        iterations,
        eigenvalue: lambda,
    })
}

/// Object estimate on a lattice with the indices whose phase was lost.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub shape: Shape,
    pub values: Vec<Complex64>,
    pub unresolved: Vec<usize>,
}

impl Estimate {
    pub fn signal(&self) -> ComplexSignal {
        ComplexSignal::new(self.values.clone()).expect("estimate is nonempty")
    }
}

/// Shared tail of every pipeline: lift, magnitudes (or ones), phase sync.
pub fn recover(spec: &DiagonalSpectrum, unit_modulus: bool) -> Result<Estimate> {
    let lift = assemble_lift(spec)?;
    let n = lift.size();
    if n == 1 {
        let m = if unit_modulus { 1.0 } else { magnitudes(&lift)[0] };
        return Ok(Estimate {
            shape: lift.shape(),
            values: vec![Complex64::new(m, 0.0)],
            unresolved: Vec::new(),
        });
    }
    let sync = phase_sync(&lift, default_iterations(n), SYNC_TOLERANCE)?;
    let mags = if unit_modulus { vec![1.0; n] } else { magnitudes(&lift) };
    Ok(Estimate {
        shape: lift.shape(),
        values: mags.iter().zip(&sync.phases).map(|(m, p)| p * *m).collect(),
        unresolved: sync.unresolved,
    })
}

/// Lags `0, 1, ..., gamma - 1` on a line.
pub fn band_offsets(gamma: usize) -> Vec<Offset> {
    (0..gamma as i64).map(Offset::lag).collect()
}

pub(crate) fn require_window(w: &Window, offsets: &[Offset]) -> Result<()> {
    let check = check_window_offsets(w, offsets);
    match check.violation {
        None => Ok(()),
        Some(v) => Err(WddError::IllConditioned {
            offset: v.offset,
            freq: v.freq,
            magnitude: v.magnitude,
        }),
    }
}

pub(crate) fn validate_band(y: &MeasurementGrid, w: &Window, gamma: usize) -> Result<()> {
    if y.shape() != w.shape() {
        return Err(WddError::Dimension {
            expected: y.size(),
            found: w.shape().len(),
        });
    }
    if gamma == 0 || gamma > w.support() {
        return Err(WddError::InvalidParameter {
            name: "gamma",
            reason: format!("need 1 <= gamma <= delta = {}, got {gamma}", w.support()),
        });
    }
    Ok(())
}

/// Vanilla WDD on a measurement grid, keeping the zero-frequency column.
pub fn algorithm1_on(y: &MeasurementGrid, w: &Window, offsets: &[Offset]) -> Result<Estimate> {
    require_window(w, offsets)?;
    let t = wdd_rows(y, offsets);
    let spec = deconvolve(&t, w, false)?;
    recover(&spec, false)
}

/// Vanilla WDD reconstruction of a 1D object from `gamma` diagonals.
pub fn algorithm1(y: &MeasurementGrid, w: &Window, gamma: usize) -> Result<ComplexSignal> {
    validate_band(y, w, gamma)?;
    Ok(algorithm1_on(y, w, &band_offsets(gamma))?.signal())
}
