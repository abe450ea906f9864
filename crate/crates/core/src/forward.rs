//! Ptychographic forward model: windows, measurement grids, backgrounds,
//! test objects, and constructions of object/background pairs that no
//! algorithm can tell apart.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, WddError, WindowViolation};
use crate::fourier;
use crate::lattice::{Field, Offset, Shape};
use crate::signal::ComplexSignal;

/// Attempts made by [`make_window`] before giving up.
pub const WINDOW_ATTEMPTS: usize = 100;

/// Relative nonvanishing threshold for window spectra, scaled by `n ||w||_inf^2`.
pub const WINDOW_TOLERANCE: f64 = 1e-12;

/// Known illumination, supported on `[0, delta)` along every axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    shape: Shape,
    values: Vec<Complex64>,
    support: usize,
}

impl Window {
    pub fn new(signal: ComplexSignal, support: usize) -> Result<Self> {
        let shape = Shape::line(signal.len());
        Self::on_shape(shape, signal.into_vec(), support)
    }

    /// Window on an arbitrary lattice; entries outside the support box must be zero.
    pub fn on_shape(shape: Shape, values: Vec<Complex64>, support: usize) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(WddError::Dimension {
                expected: shape.len(),
                found: values.len(),
            });
        }
        let extent = shape.cols.min(if shape.is_line() { shape.cols } else { shape.rows });
        if support == 0 || support >= extent {
            return Err(WddError::InvalidParameter {
                name: "delta",
                reason: format!("support {support} must satisfy 1 <= delta < {extent}"),
            });
        }
        for (p, v) in values.iter().enumerate() {
            let (r, c) = shape.coords(p);
            let inside = c < support && (shape.is_line() || r < support);
            if !inside && *v != Complex64::new(0.0, 0.0) {
                return Err(WddError::InvalidParameter {
                    name: "window",
                    reason: format!("entry {p} lies outside the support but is nonzero"),
                });
            }
        }
        Ok(Window { shape, values, support })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn support(&self) -> usize {
        self.support
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// 1D view of the window.
    pub fn signal(&self) -> ComplexSignal {
        ComplexSignal::new(self.values.clone()).expect("window is nonempty")
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `F[conj(w) . S_o w]`, the window factor of the WDD identity.
    pub fn ambiguity_spectrum(&self, o: Offset) -> Vec<Complex64> {
        let prod: Vec<Complex64> = (0..self.shape.len())
            .map(|p| self.values[p].conj() * self.values[self.shape.translate(p, o)])
            .collect();
        fourier::dft(self.shape, &prod)
    }

    pub fn tolerance(&self) -> f64 {
        WINDOW_TOLERANCE * self.shape.len() as f64 * self.norm_inf().powi(2)
    }
}

/// Outcome of the window nonvanishing test.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowCheck {
    pub passed: bool,
    pub violation: Option<WindowViolation>,
}

/// Checks `|F[conj(w) . S_j w]_k| > tau_w` for `0 <= j < gamma` and every `k`.
///
/// Negative lags need no separate pass: `|F[conj(w) . S_{-j} w]_k|` equals
/// `|F[conj(w) . S_j w]_{-k}|`.
pub fn check_window(w: &Window, gamma: usize) -> WindowCheck {
    let offsets: Vec<Offset> = (0..gamma as i64).map(Offset::lag).collect();
    check_window_offsets(w, &offsets)
}

pub fn check_window_offsets(w: &Window, offsets: &[Offset]) -> WindowCheck {
    let tau = w.tolerance();
    for &o in offsets {
        let spec = w.ambiguity_spectrum(o);
        if let Some((k, v)) = spec.iter().enumerate().find(|(_, v)| !(v.norm() > tau)) {
            return WindowCheck {
                passed: false,
                violation: Some(WindowViolation {
                    offset: o,
                    freq: k,
                    magnitude: v.norm(),
                }),
            };
        }
    }
    WindowCheck {
        passed: true,
        violation: None,
    }
}

fn gaussian_profile(delta: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let df = delta as f64;
    let sigma = df / 4.0;
    let center = df / 2.0 + rng.gen_range(0.05 * df..=0.2 * df);
    (0..delta)
        .map(|k| (-(k as f64 - center).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect()
}

/// Gaussian-bell window with a seeded random offset of its center.
///
/// The offset breaks the symmetry that would make the window spectrum vanish.
/// The result satisfies [`check_window`] with `gamma = delta`.
pub fn make_window(d: usize, delta: usize, seed: u64) -> Result<Window> {
    if delta == 0 || delta >= d {
        return Err(WddError::InvalidParameter {
            name: "delta",
            reason: format!("support {delta} must satisfy 1 <= delta < d = {d}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut first = None;
    for _ in 0..WINDOW_ATTEMPTS {
        let profile = gaussian_profile(delta, &mut rng);
        let mut values = vec![Complex64::new(0.0, 0.0); d];
        for (k, v) in profile.into_iter().enumerate() {
            values[k] = Complex64::new(v, 0.0);
        }
        let w = Window::on_shape(Shape::line(d), values, delta)?;
        let check = check_window(&w, delta);
        if check.passed {
            return Ok(w);
        }
        first.get_or_insert(check.violation.expect("failed check has a violation"));
    }
    Err(WddError::WindowGeneration {
        attempts: WINDOW_ATTEMPTS,
        violation: first.expect("at least one attempt"),
    })
}

/// Separable 2D window `w(r, c) = u(r) v(c)` from two independent 1D bells.
pub fn make_window_2d(d: usize, delta: usize, seed: u64) -> Result<Window> {
    let u = make_window(d, delta, seed)?;
    let v = make_window(d, delta, seed.wrapping_add(0x9E37_79B9_7F4A_7C15))?;
    let shape = Shape::square(d);
    let mut values = vec![Complex64::new(0.0, 0.0); shape.len()];
    for r in 0..delta {
        for c in 0..delta {
            values[shape.index(r, c)] = u.values()[r] * v.values()[c];
        }
    }
    Window::on_shape(shape, values, delta)
}

/// Real `n x n` intensity table; row `l` is the detector frequency, column `r`
/// the scan position. For 2D data both indices are flattened row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementGrid {
    shape: Shape,
    values: Vec<f64>,
}

impl MeasurementGrid {
    pub fn new(shape: Shape, values: Vec<f64>) -> Result<Self> {
        let n = shape.len();
        if values.len() != n * n {
            return Err(WddError::Dimension {
                expected: n * n,
                found: values.len(),
            });
        }
        Ok(MeasurementGrid { shape, values })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Side length `n` of the square table.
    pub fn size(&self) -> usize {
        self.shape.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, freq: usize, shift: usize) -> f64 {
        self.values[freq * self.size() + shift]
    }

    pub fn frobenius(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Entrywise difference `self - other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(MeasurementGrid {
            shape: self.shape,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(WddError::Dimension {
                expected: self.values.len(),
                found: other.values.len(),
            });
        }
        Ok(())
    }

    /// Removes the mean over scan positions from every frequency row. What
    /// remains is blind to any shift-independent background.
    pub fn without_row_means(&self) -> Self {
        let n = self.size();
        let mut values = self.values.clone();
        for row in values.chunks_mut(n) {
            let mean = row.iter().sum::<f64>() / n as f64;
            row.iter_mut().for_each(|v| *v -= mean);
        }
        MeasurementGrid {
            shape: self.shape,
            values,
        }
    }
}

/// Shift-independent per-frequency offset `b_l`.
#[derive(Clone, Debug, PartialEq)]
pub struct Background {
    shape: Shape,
    values: Vec<f64>,
}

impl Background {
    pub fn new(shape: Shape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(WddError::Dimension {
                expected: shape.len(),
                found: values.len(),
            });
        }
        Ok(Background { shape, values })
    }

    pub fn zeros(shape: Shape) -> Self {
        Background {
            shape,
            values: vec![0.0; shape.len()],
        }
    }

    pub fn constant(shape: Shape, level: f64) -> Self {
        Background {
            shape,
            values: vec![level; shape.len()],
        }
    }

    /// Seeded nonnegative background with entries uniform in `[0, amplitude]`.
    pub fn random(shape: Shape, amplitude: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Background {
            shape,
            values: (0..shape.len()).map(|_| amplitude * rng.gen::<f64>()).collect(),
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Background {
            shape: self.shape,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Noise-free intensities `Y_{l,r} = |F[S_{-r} x . w]_l|^2`.
pub fn simulate<F: Field>(x: &F, w: &Window) -> Result<MeasurementGrid> {
    let shape = x.shape();
    if shape != w.shape() {
        return Err(WddError::Dimension {
            expected: shape.len(),
            found: w.shape().len(),
        });
    }
    let n = shape.len();
    let xv = x.values();
    let support: Vec<usize> = (0..n).filter(|&p| w.values()[p] != Complex64::new(0.0, 0.0)).collect();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|r| {
            let (rr, rc) = shape.coords(r);
            let back = Offset::new(-(rr as i64), -(rc as i64));
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for &k in &support {
                buf[k] = xv[shape.translate(k, back)] * w.values()[k];
            }
            fourier::transform_in_place(shape, &mut buf, false);
            buf.iter().map(|v| v.norm_sqr()).collect()
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for (r, col) in columns.iter().enumerate() {
        for (l, v) in col.iter().enumerate() {
            values[l * n + r] = *v;
        }
    }
    MeasurementGrid::new(shape, values)
}

/// `Y~_{l,r} = Y_{l,r} + b_l`; rejects tables with negative entries.
pub fn add_background(y: &MeasurementGrid, b: &Background) -> Result<MeasurementGrid> {
    if y.shape() != b.shape() {
        return Err(WddError::Dimension {
            expected: y.size(),
            found: b.values().len(),
        });
    }
    let n = y.size();
    let mut values = y.values().to_vec();
    for (l, row) in values.chunks_mut(n).enumerate() {
        for (r, v) in row.iter_mut().enumerate() {
            *v += b.values()[l];
            if *v < 0.0 {
                return Err(WddError::Nonphysical {
                    row: l,
                    col: r,
                    value: *v,
                });
            }
        }
    }
    MeasurementGrid::new(y.shape(), values)
}

/// `||Y - Y~||_F / ||Y||_F`.
pub fn noise_level(clean: &MeasurementGrid, noisy: &MeasurementGrid) -> Result<f64> {
    let denom = clean.frobenius();
    if denom == 0.0 {
        return Err(WddError::ZeroNorm("clean measurement grid"));
    }
    Ok(noisy.difference(clean)?.frobenius() / denom)
}

/// Rescales `b` so that adding it to `y` produces the requested noise level.
pub fn scale_to_noise_level(y: &MeasurementGrid, b: &Background, level: f64) -> Result<Background> {
    let denom = y.frobenius();
    if denom == 0.0 {
        return Err(WddError::ZeroNorm("clean measurement grid"));
    }
    // ||1 b^T||_F = sqrt(n) ||b||_2
    let current = (y.size() as f64).sqrt() * b.norm();
    if current == 0.0 {
        return Err(WddError::ZeroNorm("background"));
    }
    Ok(b.scaled(level * denom / current))
}

/// Families of test objects.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ObjectKind {
    /// Entries uniform on the annulus `0.1 <= |x_k| <= 1`.
    RandomComplex,
    /// Unimodular entries with uniform arguments.
    RandomPhase,
    /// `x_k = exp(2 pi i k m / d)`.
    Modulation { m: i64 },
    /// Alternating-phase object `x^1` of the second ambiguity family.
    Type2 { m: i64, rho: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectSpec {
    pub kind: ObjectKind,
    pub seed: u64,
}

impl ObjectSpec {
    pub fn new(kind: ObjectKind, seed: u64) -> Self {
        ObjectSpec { kind, seed }
    }

    pub fn generate(&self, d: usize) -> Result<ComplexSignal> {
        let values = self.generate_values(d)?;
        ComplexSignal::new(values)
    }

    /// Entries on an arbitrary lattice (random kinds only for 2D).
    pub fn generate_on(&self, shape: Shape) -> Result<Vec<Complex64>> {
        if shape.is_line() {
            return self.generate_values(shape.cols);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        match self.kind {
            ObjectKind::RandomComplex => Ok((0..shape.len()).map(|_| annulus(&mut rng)).collect()),
            ObjectKind::RandomPhase => Ok((0..shape.len()).map(|_| unimodular(&mut rng)).collect()),
            _ => Err(WddError::InvalidParameter {
                name: "object",
                reason: "structured ambiguity objects are one-dimensional".into(),
            }),
        }
    }

    fn generate_values(&self, d: usize) -> Result<Vec<Complex64>> {
        if d == 0 {
            return Err(WddError::InvalidParameter {
                name: "d",
                reason: "length must be positive".into(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        match self.kind {
            ObjectKind::RandomComplex => Ok((0..d).map(|_| annulus(&mut rng)).collect()),
            ObjectKind::RandomPhase => Ok((0..d).map(|_| unimodular(&mut rng)).collect()),
            ObjectKind::Modulation { m } => Ok(modulation_object(d, m).into_vec()),
            ObjectKind::Type2 { m, rho } => Ok(type2_object(d, m, rho, 1)?.into_vec()),
        }
    }
}

fn annulus(rng: &mut ChaCha8Rng) -> Complex64 {
    // Area-uniform radius on 0.1 <= r <= 1.
    let r = rng.gen_range(0.01f64..=1.0).sqrt();
    Complex64::from_polar(r, rng.gen_range(0.0..TAU))
}

fn unimodular(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(1.0, rng.gen_range(0.0..TAU))
}

/// `x^m_k = exp(2 pi i k m / d)`.
pub fn modulation_object(d: usize, m: i64) -> ComplexSignal {
    let m = m.rem_euclid(d as i64) as usize;
    ComplexSignal::new(
        (0..d)
            .map(|k| Complex64::from_polar(1.0, TAU * ((k * m) % d) as f64 / d as f64))
            .collect(),
    )
    .expect("d > 0")
}

/// Phase object whose consecutive phase increments take only two values,
/// so its first diagonal is two-valued. Requires `d >= 3`.
pub fn two_step_object(d: usize, seed: u64) -> Result<ComplexSignal> {
    if d < 3 {
        return Err(WddError::InvalidParameter {
            name: "d",
            reason: format!("need at least 3 entries, got {d}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = rng.gen_range(1..d);
    let turns = rng.gen_range(0..d as i64) as f64;
    let alpha = rng.gen_range(0.0..TAU);
    // p steps of alpha and d - p steps of beta close the loop
    let beta = (TAU * turns - p as f64 * alpha) / (d - p) as f64;
    let mut steps: Vec<f64> = (0..d).map(|k| if k < p { alpha } else { beta }).collect();
    steps.shuffle(&mut rng);
    let mut theta = rng.gen_range(0.0..TAU);
    let mut x = Vec::with_capacity(d);
    for s in &steps {
        x.push(Complex64::from_polar(1.0, theta));
        theta += s;
    }
    ComplexSignal::new(x)
}

/// The pair member `x^q` (`q` in {1, 2}) of the alternating-phase family:
/// `exp(-2 pi i k m / d)` times `1` on even `k` and
/// `-(-1)^q exp((-1)^q i rho / 2)` on odd `k`.
pub fn type2_object(d: usize, m: i64, rho: f64, q: u8) -> Result<ComplexSignal> {
    if d % 2 != 0 {
        return Err(WddError::InvalidParameter {
            name: "d",
            reason: format!("the alternating-phase family needs even d, got {d}"),
        });
    }
    if !(rho > -PI && rho < PI) {
        return Err(WddError::InvalidParameter {
            name: "rho",
            reason: format!("rho = {rho} must lie in (-pi, pi)"),
        });
    }
    if q != 1 && q != 2 {
        return Err(WddError::InvalidParameter {
            name: "q",
            reason: "pair member must be 1 or 2".into(),
        });
    }
    let sign = if q == 1 { -1.0 } else { 1.0 };
    let odd = -sign * Complex64::from_polar(1.0, sign * 0.5 * rho);
    let m = m.rem_euclid(d as i64) as usize;
    ComplexSignal::new(
        (0..d)
            .map(|k| {
                let carrier = Complex64::from_polar(1.0, -TAU * ((k * m) % d) as f64 / d as f64);
                if k % 2 == 0 {
                    carrier
                } else {
                    carrier * odd
                }
            })
            .collect(),
    )
}

/// Which ambiguity family to construct.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AmbiguityKind {
    /// All-ones object against the modulation `x^m`.
    TypeI { m: i64 },
    /// The two alternating-phase objects `x^1`, `x^2`.
    TypeII { m: i64, rho: f64 },
}

/// Two object/background pairs with entrywise identical noisy measurements.
#[derive(Clone, Debug)]
pub struct AmbiguousPair {
    pub first: (ComplexSignal, Background),
    pub second: (ComplexSignal, Background),
}

impl AmbiguousPair {
    pub fn measurements(&self, w: &Window) -> Result<(MeasurementGrid, MeasurementGrid)> {
        let a = add_background(&simulate(&self.first.0, w)?, &self.first.1)?;
        let b = add_background(&simulate(&self.second.0, w)?, &self.second.1)?;
        Ok((a, b))
    }
}

pub fn make_ambiguous_pair(kind: AmbiguityKind, w: &Window) -> Result<AmbiguousPair> {
    let d = w.shape().len();
    if !w.shape().is_line() {
        return Err(WddError::InvalidParameter {
            name: "window",
            reason: "ambiguity constructions are one-dimensional".into(),
        });
    }
    let (x1, x2) = match kind {
        AmbiguityKind::TypeI { m } => (ComplexSignal::ones(d), modulation_object(d, m)),
        AmbiguityKind::TypeII { m, rho } => (type2_object(d, m, rho, 1)?, type2_object(d, m, rho, 2)?),
    };
    let (b1, b2) = matching_backgrounds(&x1, &x2, w)?;
    Ok(AmbiguousPair {
        first: (x1, b1),
        second: (x2, b2),
    })
}

/// Backgrounds that equalize the zero-frequency column of the WDD tables of
/// two objects whose diagonal spectra already agree away from frequency 0.
///
/// With `W_j = F[conj(w) . S_j w]_0`, the difference obeys
/// `F^{-1}(b2 - b1)_j = conj(f^{j,1}_0 - f^{j,2}_0) W_j / d`. Both backgrounds
/// then share a constant lift that makes every measurement at least 1.
fn matching_backgrounds(x1: &ComplexSignal, x2: &ComplexSignal, w: &Window) -> Result<(Background, Background)> {
    let d = x1.len();
    let shape = Shape::line(d);
    let diff: Vec<Complex64> = (0..d as i64)
        .map(|j| {
            let f1: Complex64 = x1.diagonal(j).iter().sum();
            let f2: Complex64 = x2.diagonal(j).iter().sum();
            let wj = w.ambiguity_spectrum(Offset::lag(j))[0];
            (f1 - f2).conj() * wj / d as f64
        })
        .collect();
    let delta_b = fourier::dft(shape, &diff);
    let scale = delta_b.iter().map(|v| v.norm()).fold(1.0, f64::max);
    if let Some(bad) = delta_b.iter().find(|v| v.im.abs() > 1e-9 * scale) {
        return Err(WddError::InvalidParameter {
            name: "background",
            reason: format!(
                "constructed background difference is not real (imaginary part {:e})",
                bad.im
            ),
        });
    }
    let raw2: Vec<f64> = delta_b.iter().map(|v| v.re).collect();
    let y1 = simulate(x1, w)?;
    let y2 = simulate(x2, w)?;
    let mut lowest: f64 = y1.values().iter().copied().fold(f64::INFINITY, f64::min);
    for (l, row) in y2.values().chunks(d).enumerate() {
        for v in row {
            lowest = lowest.min(v + raw2[l]);
        }
    }
    let lift = (-lowest).max(0.0) + 1.0;
    let b1 = Background::constant(shape, lift);
    let b2 = Background::new(shape, raw2.iter().map(|v| v + lift).collect())?;
    Ok((b1, b2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_window() -> Window {
        Window::new(ComplexSignal::from_real(&[1.0, 1.0, 0.0, 0.0]).unwrap(), 2).unwrap()
    }

    #[test]
    fn delta_window_passes() {
        let w = Window::new(ComplexSignal::delta(6, 0), 1).unwrap();
        assert!(check_window(&w, 1).passed);
    }

    #[test]
    fn symmetric_box_window_rejected_at_frequency_two() {
        let check = check_window(&box_window(), 1);
        assert!(!check.passed);
        let v = check.violation.unwrap();
        assert_eq!((v.offset, v.freq), (Offset::lag(0), 2));
    }

    #[test]
    fn window_support_enforced() {
        let s = ComplexSignal::from_real(&[1.0, 0.5, 0.2, 0.0]).unwrap();
        assert!(Window::new(s.clone(), 2).is_err());
        assert!(Window::new(s.clone(), 4).is_err());
        assert!(Window::new(s, 3).is_ok());
    }

    #[test]
    fn generated_window_is_deterministic_and_admissible() {
        for (d, delta) in [(16, 4), (32, 8), (64, 16)] {
            let a = make_window(d, delta, 11).unwrap();
            let b = make_window(d, delta, 11).unwrap();
            assert_eq!(a, b);
            assert!(check_window(&a, delta).passed);
            assert!(a.values()[delta..].iter().all(|v| *v == Complex64::new(0.0, 0.0)));
        }
        assert!(make_window(8, 8, 0).is_err());
    }

    #[test]
    fn delta_object_gives_constant_columns() {
        let w = make_window(12, 4, 3).unwrap();
        let y = simulate(&ComplexSignal::delta(12, 0), &w).unwrap();
        for r in 0..12 {
            let want = w.values()[r].norm_sqr();
            for l in 0..12 {
                assert!((y.get(l, r) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn background_adds_per_row() {
        let w = make_window(8, 3, 1).unwrap();
        let x = ObjectSpec::new(ObjectKind::RandomComplex, 4).generate(8).unwrap();
        let y = simulate(&x, &w).unwrap();
        assert_eq!(add_background(&y, &Background::zeros(y.shape())).unwrap(), y);
        let yt = add_background(&y, &Background::constant(y.shape(), 0.75)).unwrap();
        for (a, b) in yt.values().iter().zip(y.values()) {
            assert_eq!(*a, b + 0.75);
        }
        let neg = Background::constant(y.shape(), -1e6);
        assert!(matches!(add_background(&y, &neg), Err(WddError::Nonphysical { .. })));
    }

    #[test]
    fn noise_level_edge_cases() {
        let w = make_window(8, 3, 1).unwrap();
        let x = ObjectSpec::new(ObjectKind::RandomPhase, 2).generate(8).unwrap();
        let y = simulate(&x, &w).unwrap();
        assert_eq!(noise_level(&y, &y).unwrap(), 0.0);
        let doubled = MeasurementGrid::new(y.shape(), y.values().iter().map(|v| 2.0 * v).collect()).unwrap();
        assert!((noise_level(&y, &doubled).unwrap() - 1.0).abs() < 1e-14);
        let zero = MeasurementGrid::new(y.shape(), vec![0.0; 64]).unwrap();
        assert!(matches!(noise_level(&zero, &y), Err(WddError::ZeroNorm(_))));
    }

    #[test]
    fn type2_requires_even_length() {
        assert!(type2_object(7, 1, 0.7, 1).is_err());
        assert!(type2_object(8, 1, PI, 1).is_err());
        let w = make_window(9, 3, 0).unwrap();
        let err = make_ambiguous_pair(AmbiguityKind::TypeII { m: 1, rho: 0.7 }, &w);
        assert!(matches!(err, Err(WddError::InvalidParameter { name: "d", .. })));
    }

    #[test]
    fn degenerate_type1_pair_is_identical() {
        let w = make_window(8, 3, 5).unwrap();
        let pair = make_ambiguous_pair(AmbiguityKind::TypeI { m: 0 }, &w).unwrap();
        assert_eq!(pair.first.0, ComplexSignal::ones(8));
        assert_eq!(pair.second.0, ComplexSignal::ones(8));
        let (a, b) = pair.measurements(&w).unwrap();
        assert!(a.max_abs_diff(&b) <= 1e-12);
    }
}
