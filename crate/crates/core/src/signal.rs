//! Complex signals on `Z_d` and the shift/modulation/reflection operators.
//!
//! Conventions: `(S_r x)_j = x_{j+r}`, `(M_r x)_j = exp(2 pi i j r / d) x_j`,
//! `(R x)_j = x_{-j}`. Indices are reduced with `rem_euclid`, so negative
//! and oversized shifts are valid.

use std::ops::Index;

use num_complex::Complex64;

use crate::error::{Result, WddError};
use crate::fourier;
use crate::lattice::Shape;

/// Phase of a complex number, with `sgn(0) = 0`.
#[inline]
pub fn sgn(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        z / r
    }
}

/// Length-`d` complex vector; houses objects, windows, diagonals and spectra.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSignal {
    entries: Vec<Complex64>,
}

impl ComplexSignal {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(WddError::InvalidParameter {
                name: "length",
                reason: "a signal needs at least one entry".into(),
            });
        }
        Ok(ComplexSignal { entries })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(d: usize) -> Self {
        assert!(d > 0);
        ComplexSignal {
            entries: vec![Complex64::new(0.0, 0.0); d],
        }
    }

    pub fn ones(d: usize) -> Self {
        assert!(d > 0);
        ComplexSignal {
            entries: vec![Complex64::new(1.0, 0.0); d],
        }
    }

    /// Standard basis vector `e_k`.
    pub fn delta(d: usize, k: usize) -> Self {
        let mut s = Self::zeros(d);
        s.entries[k % d] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn shape(&self) -> Shape {
        Shape::line(self.len())
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.entries
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex64> {
        self.entries.iter()
    }

    #[inline]
    fn wrap(&self, i: i64) -> usize {
        i.rem_euclid(self.len() as i64) as usize
    }

    /// Entry at a possibly negative or oversized index.
    #[inline]
    pub fn at(&self, i: i64) -> Complex64 {
        self.entries[self.wrap(i)]
    }

    pub fn dft(&self) -> Self {
        ComplexSignal {
            entries: fourier::dft(self.shape(), &self.entries),
        }
    }

    pub fn idft(&self) -> Self {
        ComplexSignal {
            entries: fourier::idft(self.shape(), &self.entries),
        }
    }

    pub fn shift(&self, r: i64) -> Self {
        let d = self.len() as i64;
        ComplexSignal {
            entries: (0..d).map(|j| self.at(j + r)).collect(),
        }
    }

    pub fn modulate(&self, r: i64) -> Self {
        let d = self.len();
        let r = self.wrap(r);
        ComplexSignal {
            entries: self
                .entries
                .iter()
                .enumerate()
                .map(|(j, &v)| {
                    let t = ((j * r) % d) as f64 / d as f64;
                    v * Complex64::from_polar(1.0, std::f64::consts::TAU * t)
                })
                .collect(),
        }
    }

    pub fn reflect(&self) -> Self {
        let d = self.len() as i64;
        ComplexSignal {
            entries: (0..d).map(|j| self.at(-j)).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        ComplexSignal {
            entries: self.entries.iter().map(|v| v.conj()).collect(),
        }
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        ComplexSignal {
            entries: self.entries.iter().map(|&v| v * alpha).collect(),
        }
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(WddError::Dimension {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(())
    }

    /// Entrywise product.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        Ok(ComplexSignal {
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a * b).collect(),
        })
    }

    /// Circular convolution `(x * y)_j = sum_k x_{j-k} y_k`, evaluated through
    /// the convolution theorem.
    pub fn circ_convolve(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        let fx = self.dft();
        let fy = other.dft();
        Ok(fx.hadamard(&fy)?.idft())
    }

    /// The diagonal `x . S_j conj(x)`: entry `k` is `x_k conj(x_{k+j})`.
    pub fn diagonal(&self, j: i64) -> Self {
        let d = self.len() as i64;
        ComplexSignal {
            entries: (0..d).map(|k| self.at(k) * self.at(k + j).conj()).collect(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.entries.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Entrywise phases, `sgn(0) = 0`.
    pub fn phases(&self) -> Self {
        ComplexSignal {
            entries: self.entries.iter().map(|&v| sgn(v)).collect(),
        }
    }

    /// Largest entrywise deviation from another signal.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for ComplexSignal {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.entries[i]
    }
}

impl From<ComplexSignal> for Vec<Complex64> {
    fn from(s: ComplexSignal) -> Self {
        s.entries
    }
}

/// A signal together with its DFT.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralPair {
    pub time: ComplexSignal,
    pub freq: ComplexSignal,
}

impl SpectralPair {
    pub fn from_time(time: ComplexSignal) -> Self {
        let freq = time.dft();
        SpectralPair { time, freq }
    }

    pub fn from_freq(freq: ComplexSignal) -> Self {
        let time = freq.idft();
        SpectralPair { time, freq }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sig(v: &[(f64, f64)]) -> ComplexSignal {
        ComplexSignal::new(v.iter().map(|&(a, b)| c(a, b)).collect()).unwrap()
    }

    #[test]
    fn delta_and_constant_transforms() {
        let f = ComplexSignal::delta(4, 0).dft();
        assert!(f.max_abs_diff(&ComplexSignal::ones(4)) < 1e-15);
        let g = ComplexSignal::ones(4).dft();
        assert!(g.max_abs_diff(&sig(&[(4.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)])) < 1e-14);
    }

    #[test]
    fn shift_index_chase() {
        let x = sig(&[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);
        assert_eq!(x.shift(0), x);
        assert_eq!(x.shift(1), sig(&[(2.0, 0.0), (3.0, 0.0), (1.0, 0.0)]));
        assert_eq!(x.shift(-2), x.shift(1));
        assert_eq!(x.reflect(), sig(&[(1.0, 0.0), (3.0, 0.0), (2.0, 0.0)]));
    }

    #[test]
    fn small_convolution_by_hand() {
        let x = sig(&[(1.0, 0.0), (1.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        let y = x.circ_convolve(&x).unwrap();
        let want = sig(&[(1.0, 0.0), (2.0, 0.0), (1.0, 0.0), (0.0, 0.0)]);
        assert!(y.max_abs_diff(&want) < 1e-14);
        let e0 = ComplexSignal::delta(4, 0);
        assert!(x.circ_convolve(&e0).unwrap().max_abs_diff(&x) < 1e-15);
    }

    #[test]
    fn convolution_length_mismatch() {
        let err = ComplexSignal::ones(3).circ_convolve(&ComplexSignal::ones(4));
        assert!(matches!(err, Err(WddError::Dimension { .. })));
    }

    #[test]
    fn diagonal_special_cases() {
        let x = sig(&[(1.0, 2.0), (-0.5, 0.3), (0.2, -1.0)]);
        let d0 = x.diagonal(0);
        for k in 0..3 {
            assert!((d0[k] - c(x[k].norm_sqr(), 0.0)).norm() < 1e-15);
        }
        let ones = ComplexSignal::ones(5);
        for j in -3..7 {
            assert_eq!(ones.diagonal(j), ones);
        }
        assert_eq!(x.diagonal(1)[2], x[2] * x[0].conj());
    }

    #[test]
    fn empty_signal_rejected() {
        assert!(ComplexSignal::new(vec![]).is_err());
    }

    #[test]
    fn sgn_of_zero_is_zero() {
        assert_eq!(sgn(c(0.0, 0.0)), c(0.0, 0.0));
        assert!((sgn(c(3.0, 4.0)) - c(0.6, 0.8)).norm() < 1e-16);
    }
}
