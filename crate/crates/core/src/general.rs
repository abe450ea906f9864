//! Repair of the discarded zero-frequency coefficients for arbitrary objects.
//!
//! The rank-one structure of `x x^*` ties every pair of diagonals together.
//! Pairing each diagonal with the main one leaves two real unknowns per lag,
//! solved in the least-squares sense; the main diagonal's own coefficient
//! follows from the `s = 0` relation.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, WddError};
use crate::forward::{MeasurementGrid, Window};
use crate::fourier;
use crate::lattice::{Offset, Shape};
use crate::signal::ComplexSignal;
use crate::wdd::{self, DiagonalSpectrum, Estimate};

/// `|z_{j,s}|` at or below `Z_THRESHOLD * n^2` selects the two-row form.
pub const Z_THRESHOLD: f64 = 1e-10;

/// Relative singular-value gate for the two-unknown least-squares solve.
pub const RANK_THRESHOLD: f64 = 1e-8;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn row_index(spec: &DiagonalSpectrum, o: Offset) -> Result<usize> {
    spec.index_of(o).ok_or(WddError::IncompleteSpectrum { offset: o })
}

/// `c_{l,j,s}` by direct summation over `k` outside `{0, s}`.
pub fn cross_term(spec: &DiagonalSpectrum, ell: Offset, j: Offset, s: usize) -> Result<Complex64> {
    let shape = spec.shape();
    let fl = spec.row(row_index(spec, ell)?);
    let fj = spec.row(row_index(spec, j)?);
    let mut acc = ZERO;
    for k in 1..shape.len() {
        if k == s {
            continue;
        }
        let ks = shape.translate(k, point_offset(shape, shape.negate(s)));
        let al = Complex64::from_polar(1.0, -shape.angle(ell, ks));
        let aj = Complex64::from_polar(1.0, -shape.angle(j, ks));
        acc += al * fj[k] * fj[ks].conj() - aj * fl[k] * fl[ks].conj();
    }
    Ok(acc)
}

fn point_offset(shape: Shape, p: usize) -> Offset {
    let (r, c) = shape.coords(p);
    Offset::new(r as i64, c as i64)
}

/// `c_{l,j,s}` for every `s` at once.
///
/// With `g = IDFT` of a row whose zero entry is removed,
/// `c_{l,j,.} = n F(g_j . conj(S_l g_j) - g_l . conj(S_j g_l))`.
pub fn cross_terms(spec: &DiagonalSpectrum, ell: Offset, j: Offset) -> Result<Vec<Complex64>> {
    let shape = spec.shape();
    let n = shape.len();
    let hollow = |o: Offset| -> Result<Vec<Complex64>> {
        let mut row = spec.row(row_index(spec, o)?).to_vec();
        row[0] = ZERO;
        Ok(fourier::idft(shape, &row))
    };
    let gl = hollow(ell)?;
    let gj = hollow(j)?;
    let prod: Vec<Complex64> = (0..n)
        .map(|p| gj[p] * gj[shape.translate(p, ell)].conj() - gl[p] * gl[shape.translate(p, j)].conj())
        .collect();
    Ok(fourier::dft(shape, &prod).into_iter().map(|v| v * n as f64).collect())
}

/// Which relation a row of [`ZeroFreqSystem`] came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowSource {
    /// Real or imaginary half of the relation with `z_{j,s} = 0`.
    Split { s: usize, imaginary: bool },
    /// Imaginary part after multiplying by `conj(z_{j,s})`.
    Projected { s: usize },
}

impl RowSource {
    pub fn frequency(&self) -> usize {
        match *self {
            RowSource::Split { s, .. } | RowSource::Projected { s } => s,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemRow {
    pub coeffs: (f64, f64),
    pub rhs: f64,
    pub source: RowSource,
}

/// Real linear system in `(Re f^j_0, Im f^j_0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroFreqSystem {
    pub offset: Offset,
    pub rows: Vec<SystemRow>,
}

/// Singular values of a 2x2 matrix, descending.
fn singular_values_2x2(a: f64, b: f64, c: f64, d: f64) -> (f64, f64) {
    let fro = a * a + b * b + c * c + d * d;
    let det = (a * d - b * c).abs();
    let disc = (fro * fro - 4.0 * det * det).max(0.0).sqrt();
    let s1 = ((fro + disc) / 2.0).sqrt();
    let s2 = if s1 > 0.0 { det / s1 } else { 0.0 };
    (s1, s2)
}

/// Least-squares solution of an `m x 2` system through a Gram-Schmidt QR
/// with one reorthogonalization pass. Returns the solution and the singular
/// values of the matrix.
pub(crate) fn least_squares_2(rows: &[((f64, f64), f64)]) -> ((f64, f64), (f64, f64)) {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let a1: Vec<f64> = rows.iter().map(|r| r.0 .0).collect();
    let a2: Vec<f64> = rows.iter().map(|r| r.0 .1).collect();
    let rhs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let r11 = norm(&a1);
    if r11 == 0.0 {
        let r22 = norm(&a2);
        return ((0.0, 0.0), (r22, 0.0));
    }
    let q1: Vec<f64> = a1.iter().map(|v| v / r11).collect();
    let mut v = a2.clone();
    let mut r12 = 0.0;
    for _ in 0..2 {
        let h = dot(&q1, &v);
        r12 += h;
        v.iter_mut().zip(&q1).for_each(|(x, q)| *x -= h * q);
    }
    let r22 = norm(&v);
    let sv = singular_values_2x2(r11, r12, 0.0, r22);
    if r22 == 0.0 {
        return ((0.0, 0.0), sv);
    }
    let q2: Vec<f64> = v.iter().map(|x| x / r22).collect();
    let (b1, b2) = (dot(&q1, &rhs), dot(&q2, &rhs));
    let y = b2 / r22;
    let x = (b1 - r12 * y) / r11;
    ((x, y), sv)
}

impl ZeroFreqSystem {
    /// Stacks one or two rows per frequency `s != 0`.
    pub fn build(spec: &DiagonalSpectrum, j: Offset) -> Result<Self> {
        let shape = spec.shape();
        let n = shape.len();
        let f0 = spec.row(row_index(spec, Offset::ZERO)?);
        let fj = spec.row(row_index(spec, j)?);
        let c = cross_terms(spec, Offset::ZERO, j)?;
        let tau = Z_THRESHOLD * (n * n) as f64;
        let mut rows = Vec::with_capacity(2 * n);
        for s in 1..n {
            let fs = fj[s];
            let fm = fj[shape.negate(s)];
            let z = (Complex64::from_polar(1.0, shape.angle(j, s)) + 1.0) * f0[s];
            if z.norm() <= tau {
                rows.push(SystemRow {
                    coeffs: (fm.re + fs.re, fm.im + fs.im),
                    rhs: -c[s].re,
                    source: RowSource::Split { s, imaginary: false },
                });
                rows.push(SystemRow {
                    coeffs: (fs.im - fm.im, fm.re - fs.re),
                    rhs: -c[s].im,
                    source: RowSource::Split { s, imaginary: true },
                });
            } else {
                let q = fm * z;
                let r = fs * z.conj();
                rows.push(SystemRow {
                    coeffs: (q.im - r.im, r.re - q.re),
                    rhs: (c[s] * z.conj()).im,
                    source: RowSource::Projected { s },
                });
            }
        }
        if let Some(bad) = rows
            .iter()
            .find(|r| !(r.coeffs.0.is_finite() && r.coeffs.1.is_finite() && r.rhs.is_finite()))
        {
            return Err(WddError::InvalidParameter {
                name: "spectrum",
                reason: format!("non-finite system row at frequency {}", bad.source.frequency()),
            });
        }
        Ok(ZeroFreqSystem { offset: j, rows })
    }

    pub fn singular_values(&self) -> (f64, f64) {
        let data: Vec<((f64, f64), f64)> = self.rows.iter().map(|r| (r.coeffs, r.rhs)).collect();
        least_squares_2(&data).1
    }

    /// Minimum-residual `(Re, Im)` of the lost coefficient.
    pub fn solve(&self) -> Result<Complex64> {
        if self.rows.len() < 2 {
            return Err(WddError::DegenerateSystem {
                offset: self.offset,
                sigma_max: 0.0,
                sigma_min: 0.0,
            });
        }
        let data: Vec<((f64, f64), f64)> = self.rows.iter().map(|r| (r.coeffs, r.rhs)).collect();
        let ((a, b), (s1, s2)) = least_squares_2(&data);
        if !(s1 > 0.0) || s2 <= RANK_THRESHOLD * s1 {
            return Err(WddError::DegenerateSystem {
                offset: self.offset,
                sigma_max: s1,
                sigma_min: s2,
            });
        }
        Ok(Complex64::new(a, b))
    }

    /// Largest absolute row residual at a candidate value.
    pub fn residual(&self, value: Complex64) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.coeffs.0 * value.re + r.coeffs.1 * value.im - r.rhs).abs())
            .fold(0.0, f64::max)
    }
}

/// Lost coefficient `f^j_0` for one lag `j != 0`.
pub fn solve_zero_freq(spec: &DiagonalSpectrum, j: Offset) -> Result<Complex64> {
    if spec.shape().same_offset(j, Offset::ZERO) {
        return Err(WddError::InvalidParameter {
            name: "j",
            reason: "the main diagonal is repaired by solve_zero_zero".into(),
        });
    }
    ZeroFreqSystem::build(spec, j)?.solve()
}

/// Estimate of `f^0_0` together with whether the averaged square was clamped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroZero {
    pub value: f64,
    pub clamped: bool,
}

/// `f^0_0 = sqrt(max(0, mean_j [c_{0,j,0} + |f^j_0|^2]))` from pairs
/// `(c_{0,j,0}, f^j_0)`.
pub fn solve_zero_zero(terms: &[(Complex64, Complex64)]) -> Result<ZeroZero> {
    if terms.is_empty() {
        return Err(WddError::InsufficientDiagonals {
            needed: 2,
            available: 1,
        });
    }
    let mean = terms.iter().map(|(c, f)| c.re + f.norm_sqr()).sum::<f64>() / terms.len() as f64;
    Ok(ZeroZero {
        value: mean.max(0.0).sqrt(),
        clamped: mean < 0.0,
    })
}

/// Summary of a repair pass.
#[derive(Clone, Debug, PartialEq)]
pub struct RepairReport {
    pub zero_zero: ZeroZero,
    /// `(lag, sigma_max, sigma_min)` of each solved system.
    pub conditioning: Vec<(Offset, f64, f64)>,
}

/// Restores every `k = 0` coefficient of a spectrum whose first row is the
/// main diagonal. Lags are solved independently, then the main diagonal.
pub fn repair(spec: &mut DiagonalSpectrum) -> Result<RepairReport> {
    let shape = spec.shape();
    let zero = row_index(spec, Offset::ZERO)?;
    let lags: Vec<(usize, Offset)> = spec
        .offsets()
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, o)| !shape.same_offset(*o, Offset::ZERO))
        .collect();
    if lags.is_empty() {
        return Err(WddError::InsufficientDiagonals {
            needed: 2,
            available: 1,
        });
    }
    let frozen: &DiagonalSpectrum = spec;
    let solved: Vec<Result<(usize, Offset, Complex64, (f64, f64), Complex64)>> = lags
        .par_iter()
        .map(|&(i, o)| {
            let sys = ZeroFreqSystem::build(frozen, o)?;
            let value = sys.solve()?;
            let c00 = cross_terms(frozen, Offset::ZERO, o)?[0];
            Ok((i, o, value, sys.singular_values(), c00))
        })
        .collect();
    let solved = solved.into_iter().collect::<Result<Vec<_>>>()?;
    let terms: Vec<(Complex64, Complex64)> = solved.iter().map(|s| (s.4, s.2)).collect();
    let zz = solve_zero_zero(&terms)?;
    let mut conditioning = Vec::with_capacity(solved.len());
    for (i, o, value, (s1, s2), _) in solved {
        spec.set_zero(i, value);
        conditioning.push((o, s1, s2));
    }
    spec.set_zero(zero, Complex64::new(zz.value, 0.0));
    Ok(RepairReport {
        zero_zero: zz,
        conditioning,
    })
}

/// Background-robust reconstruction for a set of lags starting with zero.
pub fn algorithm2_on(y: &MeasurementGrid, w: &Window, offsets: &[Offset]) -> Result<(Estimate, RepairReport)> {
    wdd::require_window(w, offsets)?;
    let t = wdd::wdd_rows(y, offsets);
    let mut spec = wdd::deconvolve(&t, w, true)?;
    let report = repair(&mut spec)?;
    Ok((wdd::recover(&spec, false)?, report))
}

/// Reconstruction of a 1D object from measurements with unknown background.
pub fn algorithm2(y: &MeasurementGrid, w: &Window, gamma: usize) -> Result<ComplexSignal> {
    wdd::validate_band(y, w, gamma)?;
    if gamma < 2 {
        return Err(WddError::InsufficientDiagonals {
            needed: 2,
            available: gamma,
        });
    }
    Ok(algorithm2_on(y, w, &wdd::band_offsets(gamma))?.0.signal())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{ObjectKind, ObjectSpec};
    use crate::wdd::band_offsets;

    fn spectrum(x: &ComplexSignal, gamma: usize) -> DiagonalSpectrum {
        DiagonalSpectrum::from_object(x.shape(), x.as_slice(), &band_offsets(gamma))
    }

    #[test]
    fn constant_object_has_no_cross_terms() {
        let spec = spectrum(&ComplexSignal::ones(6), 3);
        for s in 0..6 {
            assert!(cross_term(&spec, Offset::lag(0), Offset::lag(2), s).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn cross_term_vanishes_on_equal_lags() {
        let x = ObjectSpec::new(ObjectKind::RandomComplex, 3).generate(8).unwrap();
        let spec = spectrum(&x, 3);
        for s in 0..8 {
            assert_eq!(cross_term(&spec, Offset::lag(2), Offset::lag(2), s).unwrap(), ZERO);
        }
    }

    #[test]
    fn fft_route_matches_direct_sum() {
        let x = ObjectSpec::new(ObjectKind::RandomComplex, 5).generate(9).unwrap();
        let spec = spectrum(&x, 3);
        for (l, j) in [(0, 1), (0, 2), (1, 2), (2, 1)] {
            let fast = cross_terms(&spec, Offset::lag(l), Offset::lag(j)).unwrap();
            for (s, v) in fast.iter().enumerate() {
                let slow = cross_term(&spec, Offset::lag(l), Offset::lag(j), s).unwrap();
                assert!((v - slow).norm() < 1e-10, "({l},{j},{s})");
            }
        }
    }

    #[test]
    fn constant_object_is_degenerate() {
        let mut spec = spectrum(&ComplexSignal::ones(8), 3);
        for i in 0..3 {
            spec.invalidate_zero(i);
        }
        assert!(matches!(
            solve_zero_freq(&spec, Offset::lag(1)),
            Err(WddError::DegenerateSystem { .. })
        ));
    }

    #[test]
    fn zero_zero_of_phase_object_is_n() {
        let x = ObjectSpec::new(ObjectKind::RandomPhase, 1).generate(10).unwrap();
        let spec = spectrum(&x, 3);
        let terms: Vec<_> = (1..3)
            .map(|j| {
                (
                    cross_terms(&spec, Offset::ZERO, Offset::lag(j)).unwrap()[0],
                    spec.row(j as usize)[0],
                )
            })
            .collect();
        let zz = solve_zero_zero(&terms).unwrap();
        assert!((zz.value - 10.0).abs() < 1e-10);
        assert!(!zz.clamped);
    }

    #[test]
    fn zero_zero_clamps() {
        let zz = solve_zero_zero(&[(Complex64::new(-1e-15, 0.0), ZERO)]).unwrap();
        assert_eq!(zz.value, 0.0);
        assert!(zz.clamped);
        assert!(solve_zero_zero(&[]).is_err());
    }

    #[test]
    fn no_row_uses_zero_frequency() {
        let x = ObjectSpec::new(ObjectKind::RandomComplex, 8).generate(12).unwrap();
        let sys = ZeroFreqSystem::build(&spectrum(&x, 2), Offset::lag(1)).unwrap();
        assert!(sys.rows.iter().all(|r| r.source.frequency() != 0));
        assert!(sys.rows.len() >= 11);
    }

    #[test]
    fn two_by_two_singular_values() {
        let (a, b) = singular_values_2x2(3.0, 0.0, 0.0, 2.0);
        assert!((a - 3.0).abs() < 1e-15 && (b - 2.0).abs() < 1e-15);
        let (a, b) = singular_values_2x2(1.0, 1.0, 1.0, 1.0);
        assert!((a - 2.0).abs() < 1e-15 && b.abs() < 1e-15);
    }

    #[test]
    fn least_squares_exact_fit() {
        let rows = [((1.0, 2.0), 5.0), ((3.0, -1.0), 1.0), ((0.5, 0.5), 1.5)];
        let ((x, y), (s1, s2)) = least_squares_2(&rows);
        assert!((x - 1.0).abs() < 1e-14 && (y - 2.0).abs() < 1e-14);
        assert!(s1 >= s2 && s2 > 0.0);
    }
}
