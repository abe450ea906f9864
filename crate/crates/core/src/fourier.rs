//! Unnormalized forward DFT and `1/n`-normalized inverse over a [`Shape`].
//!
//! `(F x)_k = sum_l exp(-2 pi i <k, l>) x_l`, inverse carries the `1/n`.
//! Any length is supported (mixed radix / Bluestein via `rustfft`).

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::lattice::Shape;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// In-place unnormalized transform along both axes of `shape`.
pub fn transform_in_place(shape: Shape, data: &mut [Complex64], inverse: bool) {
    assert_eq!(data.len(), shape.len(), "buffer does not match shape");
    if shape.is_empty() {
        return;
    }
    if shape.cols > 1 {
        // rustfft processes consecutive chunks of the plan length.
        plan(shape.cols, inverse).process(data);
    }
    if shape.rows > 1 {
        let fft = plan(shape.rows, inverse);
        let mut column = vec![Complex64::new(0.0, 0.0); shape.rows];
        for c in 0..shape.cols {
            for r in 0..shape.rows {
                column[r] = data[r * shape.cols + c];
            }
            fft.process(&mut column);
            for r in 0..shape.rows {
                data[r * shape.cols + c] = column[r];
            }
        }
    }
}

pub fn dft(shape: Shape, x: &[Complex64]) -> Vec<Complex64> {
    let mut out = x.to_vec();
    transform_in_place(shape, &mut out, false);
    out
}

pub fn idft(shape: Shape, x: &[Complex64]) -> Vec<Complex64> {
    let mut out = x.to_vec();
    transform_in_place(shape, &mut out, true);
    let scale = 1.0 / shape.len() as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Real-input convenience: DFT of a real vector.
pub fn dft_real(shape: Shape, x: &[f64]) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_in_place(shape, &mut out, false);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_transform_matches_separable_sum() {
        let shape = Shape::square(3);
        let x: Vec<Complex64> = (0..9)
            .map(|i| Complex64::new(i as f64 * 0.5 - 1.0, (i * i) as f64 * 0.1))
            .collect();
        let fx = dft(shape, &x);
        for k in 0..9 {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..9 {
                let (kr, kc) = shape.coords(k);
                let (lr, lc) = shape.coords(l);
                let t = (kr * lr) as f64 / 3.0 + (kc * lc) as f64 / 3.0;
                acc += x[l] * Complex64::from_polar(1.0, -std::f64::consts::TAU * t);
            }
            assert!((acc - fx[k]).norm() < 1e-12);
        }
        let back = idft(shape, &fx);
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
