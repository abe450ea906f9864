//! Reconstruction and measurement error metrics.

use num_complex::Complex64;

use crate::error::{Result, WddError};
use crate::forward::{simulate, MeasurementGrid, Window};
use crate::lattice::Field;

/// Phase `theta = arg <x~, x>` that best aligns `estimate` to `truth`; zero
/// when the inner product vanishes.
pub fn alignment_phase(truth: &[Complex64], estimate: &[Complex64]) -> f64 {
    let inner: Complex64 = estimate.iter().zip(truth).map(|(e, t)| e.conj() * t).sum();
    if inner == Complex64::new(0.0, 0.0) {
        0.0
    } else {
        inner.arg()
    }
}

/// `min_theta ||x - e^{i theta} x~|| / ||x||`.
pub fn aligned_error(truth: &[Complex64], estimate: &[Complex64]) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(WddError::Dimension {
            expected: truth.len(),
            found: estimate.len(),
        });
    }
    let norm = truth.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(WddError::ZeroNorm("reference object"));
    }
    let rot = Complex64::from_polar(1.0, alignment_phase(truth, estimate));
    let err = truth
        .iter()
        .zip(estimate)
        .map(|(t, e)| (t - rot * e).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(err / norm)
}

/// Estimate rotated onto `truth` by the optimal global phase.
pub fn align(truth: &[Complex64], estimate: &[Complex64]) -> Vec<Complex64> {
    let rot = Complex64::from_polar(1.0, alignment_phase(truth, estimate));
    estimate.iter().map(|e| rot * e).collect()
}

/// `||Y(x~) - Y||_F / ||Y||_F` with `Y(x~)` simulated from the estimate.
pub fn measurement_error<F: Field>(estimate: &F, w: &Window, reference: &MeasurementGrid) -> Result<f64> {
    let rec = simulate(estimate, w)?;
    let denom = reference.frobenius();
    if denom == 0.0 {
        return Err(WddError::ZeroNorm("reference measurement grid"));
    }
    Ok(rec.difference(reference)?.frobenius() / denom)
}

/// Mismatch between a noisy grid and the simulation of an estimate after
/// removing each frequency row's mean over scan positions. Any
/// shift-independent background cancels, so exact reconstructions score at
/// roundoff level even on noisy data.
pub fn background_invariant_residual<F: Field>(estimate: &F, w: &Window, noisy: &MeasurementGrid) -> Result<f64> {
    let rec = simulate(estimate, w)?;
    let residual = noisy.difference(&rec)?.without_row_means();
    let scale = noisy.without_row_means().frobenius().max(rec.frobenius());
    if scale == 0.0 {
        return Err(WddError::ZeroNorm("measurement grid"));
    }
    Ok(residual.frobenius() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(entries: &[(f64, f64)]) -> Vec<Complex64> {
        entries.iter().map(|&(a, b)| Complex64::new(a, b)).collect()
    }

    #[test]
    fn global_phase_is_free() {
        let x = v(&[(1.0, 0.5), (-0.3, 0.2), (0.0, -1.0)]);
        let rot: Vec<Complex64> = x.iter().map(|z| z * Complex64::from_polar(1.0, 1.3)).collect();
        assert!(aligned_error(&x, &rot).unwrap() <= 1e-12);
        let neg: Vec<Complex64> = x.iter().map(|z| -z).collect();
        assert!(aligned_error(&x, &neg).unwrap() <= 1e-12);
    }

    #[test]
    fn orthogonal_estimate_gives_unit_or_more() {
        let x = v(&[(1.0, 0.0), (0.0, 0.0)]);
        let y = v(&[(0.0, 0.0), (1.0, 0.0)]);
        assert!((aligned_error(&x, &y).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_reference_rejected() {
        let z = v(&[(0.0, 0.0); 3]);
        assert!(matches!(aligned_error(&z, &z), Err(WddError::ZeroNorm(_))));
    }
}
