//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C = Complex64;

pub fn cis(t: f64) -> C {
    C::from_polar(1.0, t)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<C> {
    (0..d)
        .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

pub fn m(i: i64, d: usize) -> usize {
    i.rem_euclid(d as i64) as usize
}

/// `O(d^2)` forward DFT.
pub fn naive_dft(x: &[C]) -> Vec<C> {
    let d = x.len();
    (0..d)
        .map(|k| (0..d).map(|l| x[l] * cis(-TAU * ((k * l) % d) as f64 / d as f64)).sum())
        .collect()
}

pub fn naive_idft(x: &[C]) -> Vec<C> {
    let d = x.len();
    (0..d)
        .map(|k| {
            (0..d)
                .map(|l| x[l] * cis(TAU * ((k * l) % d) as f64 / d as f64))
                .sum::<C>()
                / d as f64
        })
        .collect()
}

/// Double-loop circular convolution.
pub fn naive_convolve(x: &[C], y: &[C]) -> Vec<C> {
    let d = x.len();
    (0..d)
        .map(|j| (0..d).map(|k| x[m(j as i64 - k as i64, d)] * y[k]).sum())
        .collect()
}

/// Triple-loop measurement oracle `|sum_k e^{-2 pi i l k/d} x_{k-r} w_k|^2`.
pub fn naive_simulate(x: &[C], w: &[C]) -> Vec<Vec<f64>> {
    let d = x.len();
    let mut y = vec![vec![0.0; d]; d];
    for (l, row) in y.iter_mut().enumerate() {
        for (r, v) in row.iter_mut().enumerate() {
            let s: C = (0..d)
                .map(|k| cis(-TAU * ((l * k) % d) as f64 / d as f64) * x[m(k as i64 - r as i64, d)] * w[k])
                .sum();
            *v = s.norm_sqr();
        }
    }
    y
}

/// `F[x . S_j conj(x)]_k` by direct summation.
pub fn naive_f(x: &[C], j: i64, k: usize) -> C {
    let d = x.len();
    (0..d)
        .map(|l| cis(-TAU * ((l * k) % d) as f64 / d as f64) * x[l] * x[m(l as i64 + j, d)].conj())
        .sum()
}

/// `F[conj(w) . S_j w]_k` by direct summation.
pub fn naive_window_factor(w: &[C], j: i64, k: usize) -> C {
    let d = w.len();
    (0..d)
        .map(|l| cis(-TAU * ((l * k) % d) as f64 / d as f64) * w[l].conj() * w[m(l as i64 + j, d)])
        .sum()
}

/// `F^{-1} Y F` by explicit matrix products.
pub fn naive_wdd(y: &[Vec<f64>]) -> Vec<Vec<C>> {
    let d = y.len();
    let mut t = vec![vec![C::new(0.0, 0.0); d]; d];
    for (j, row) in t.iter_mut().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            let mut acc = C::new(0.0, 0.0);
            for (l, yl) in y.iter().enumerate() {
                for (r, &yr) in yl.iter().enumerate() {
                    acc += cis(TAU * ((j * l) % d) as f64 / d as f64) / d as f64
                        * yr
                        * cis(-TAU * ((r * k) % d) as f64 / d as f64);
                }
            }
            *v = acc;
        }
    }
    t
}

/// Top eigenvector of a dense Hermitian matrix via its real symmetric embedding.
pub fn dense_top_eigenvector(a: &[Vec<C>]) -> Vec<C> {
    let n = a.len();
    let emb = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = a[i % n][j % n];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let eig = emb.symmetric_eigen();
    let (idx, _) =
        eig.eigenvalues.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
        );
    let col: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
    (0..n).map(|i| C::new(col[i], col[i + n])).collect()
}

/// Singular values of a real `rows x 2` matrix, descending.
pub fn dense_singular_values(rows: &[(f64, f64)]) -> (f64, f64) {
    let m = DMatrix::from_fn(rows.len(), 2, |i, j| if j == 0 { rows[i].0 } else { rows[i].1 });
    let sv = m.singular_values();
    let (a, b) = (sv[0], sv[1]);
    (a.max(b), a.min(b))
}

/// Aligned error by exhaustive search over `points` equally spaced phases.
pub fn grid_search_error(x: &[C], e: &[C], points: usize) -> f64 {
    let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    (0..points)
        .map(|i| {
            let r = cis(TAU * i as f64 / points as f64);
            x.iter().zip(e).map(|(a, b)| (a - r * b).norm_sqr()).sum::<f64>().sqrt()
        })
        .fold(f64::INFINITY, f64::min)
        / norm
}
