//! Phase objects (`|x_k| = 1`) under background noise.
//!
//! For unimodular objects every diagonal is unimodular too, which pins the
//! magnitude of each lost coefficient and reduces its argument to a small
//! real system whose rank decides between unique recovery and the two
//! ambiguous families.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Result, WddError};
use crate::forward::{MeasurementGrid, Window};
use crate::fourier;
use crate::general::least_squares_2;
use crate::lattice::{Offset, Shape};
use crate::signal::ComplexSignal;
use crate::wdd::{self, DiagonalSpectrum};

/// Relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-8;
/// `|f^j_0|` (and `|a_k|`) at or below `ZERO_TOL * n` counts as zero.
pub const ZERO_TOL: f64 = 1e-8;
/// Slack on the unimodularity energy bound.
pub const ENERGY_TOL: f64 = 1e-6;
/// Circular distance within which candidate arguments agree.
pub const AGREEMENT_TOL: f64 = 1e-6;
/// Largest accepted residual of the argument system, relative to `n^2`.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Largest accepted diagonal-relation residual of the selected candidate.
pub const SELECTION_TOL: f64 = 1e-6;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Numerical rank of the `n x 2` matrix `A^j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RankClass {
    Rank0,
    Rank1,
    Rank2,
}

impl RankClass {
    pub fn value(self) -> usize {
        match self {
            RankClass::Rank0 => 0,
            RankClass::Rank1 => 1,
            RankClass::Rank2 => 2,
        }
    }
}

/// Representative of an angle in `[0, 2 pi)`.
pub fn wrap_angle(t: f64) -> f64 {
    let r = t.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance between two angles on the circle.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// `|f^j_0|` from the unimodularity of the diagonals:
/// `|f^j_0|^2 = n^2 - sum_{k != 0} |f^j_k|^2`.
///
/// The main diagonal of a phase object is the all-ones vector, so for `j = 0`
/// the nonzero frequencies must carry no energy.
pub fn zero_freq_magnitude(spec: &DiagonalSpectrum, j: Offset) -> Result<f64> {
    let i = spec.index_of(j).ok_or(WddError::IncompleteSpectrum { offset: j })?;
    let n = spec.shape().len() as f64;
    let energy: f64 = spec.row(i)[1..].iter().map(|v| v.norm_sqr()).sum();
    let bound = if spec.shape().same_offset(j, Offset::ZERO) {
        ENERGY_TOL * n * n
    } else {
        n * n * (1.0 + ENERGY_TOL)
    };
    if energy > bound {
        return Err(WddError::NotPhaseObject {
            offset: j,
            energy,
            bound,
        });
    }
    Ok((n * n - energy).max(0.0).sqrt())
}

/// The argument system of one lag: rows `(Re a_k, Im a_k)`, right-hand side
/// `(n^2 / (2|f_0|)) (1 - (|a_k|^2 + |f_0|^2) / n^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSystem {
    pub offset: Offset,
    /// `a = n IDFT(0, f_1, ..., f_{n-1})`.
    pub a: Vec<Complex64>,
    /// Empty when the lost coefficient is zero.
    pub rhs: Vec<f64>,
    pub zero_mag: f64,
}

impl PhaseSystem {
    fn n(&self) -> f64 {
        self.a.len() as f64
    }

    /// True when `|f^j_0|` vanishes and no argument needs to be found.
    pub fn is_zero_coefficient(&self) -> bool {
        self.zero_mag <= ZERO_TOL * self.n()
    }

    pub fn matrix(&self) -> Vec<(f64, f64)> {
        self.a.iter().map(|v| (v.re, v.im)).collect()
    }

    pub fn singular_values(&self) -> (f64, f64) {
        let rows: Vec<((f64, f64), f64)> = self.a.iter().map(|v| ((v.re, v.im), 0.0)).collect();
        least_squares_2(&rows).1
    }

    /// Largest row residual of the system at argument `phi`.
    pub fn residual(&self, phi: f64) -> f64 {
        let (c, s) = (phi.cos(), phi.sin());
        self.a
            .iter()
            .zip(&self.rhs)
            .map(|(a, r)| (a.re * c + a.im * s - r).abs())
            .fold(0.0, f64::max)
    }

    /// The coefficient `|f_0| e^{i phi}`.
    pub fn coefficient(&self, phi: f64) -> Complex64 {
        Complex64::from_polar(self.zero_mag, phi)
    }

    /// Indices `k` with `|a_k|` large enough to carry an argument.
    fn usable(&self) -> impl Iterator<Item = usize> + '_ {
        let floor = ZERO_TOL * self.n();
        (0..self.a.len()).filter(move |&k| self.a[k].norm() > floor)
    }

    /// Clamped arccos argument of row `k`.
    fn cosine(&self, k: usize) -> f64 {
        (self.rhs[k] / self.a[k].norm()).clamp(-1.0, 1.0)
    }

    /// The two arguments allowed by row `k`.
    pub fn row_candidates(&self, k: usize) -> (f64, f64) {
        let base = self.a[k].arg();
        let alpha = self.cosine(k).acos();
        (wrap_angle(base - alpha), wrap_angle(base + alpha))
    }
}

/// Assembles the argument system of lag `j` from a spectrum whose nonzero
/// frequencies are known.
pub fn build_system(spec: &DiagonalSpectrum, j: Offset) -> Result<PhaseSystem> {
    let i = spec.index_of(j).ok_or(WddError::IncompleteSpectrum { offset: j })?;
    let shape = spec.shape();
    let n = shape.len() as f64;
    let zero_mag = zero_freq_magnitude(spec, j)?;
    let mut hollow = spec.row(i).to_vec();
    hollow[0] = ZERO;
    let a: Vec<Complex64> = fourier::idft(shape, &hollow).into_iter().map(|v| v * n).collect();
    let rhs = if zero_mag <= ZERO_TOL * n {
        Vec::new()
    } else {
        a.iter()
            .map(|ak| n * n / (2.0 * zero_mag) * (1.0 - (ak.norm_sqr() + zero_mag * zero_mag) / (n * n)))
            .collect()
    };
    Ok(PhaseSystem {
        offset: j,
        a,
        rhs,
        zero_mag,
    })
}

/// Rank of `A^j` from its singular values `s1 >= s2`: zero if
/// `s1 <= RANK_TOL n^2`, one if `s2 <= RANK_TOL s1`, two otherwise.
pub fn classify_rank(sys: &PhaseSystem) -> RankClass {
    let (s1, s2) = sys.singular_values();
    let n = sys.n();
    if s1 <= RANK_TOL * n * n {
        RankClass::Rank0
    } else if s2 <= RANK_TOL * s1 {
        RankClass::Rank1
    } else {
        RankClass::Rank2
    }
}

fn refine(sys: &PhaseSystem, phi: f64) -> f64 {
    let mut best = phi;
    let mut best_res = sys.residual(phi);
    let mut cur = phi;
    for _ in 0..4 {
        let (c, s) = (cur.cos(), cur.sin());
        let (mut num, mut den) = (0.0, 0.0);
        for (a, r) in sys.a.iter().zip(&sys.rhs) {
            let res = a.re * c + a.im * s - r;
            let der = -a.re * s + a.im * c;
            num += res * der;
            den += der * der;
        }
        if den == 0.0 {
            break;
        }
        cur -= num / den;
        let res = sys.residual(cur);
        if res < best_res {
            best = cur;
            best_res = res;
        }
    }
    wrap_angle(best)
}

/// The unique argument of a rank-two system.
///
/// Candidates come from the best-conditioned row; the one matching an allowed
/// value of every other usable row is kept.
pub fn solve_rank2(sys: &PhaseSystem) -> Result<f64> {
    if sys.is_zero_coefficient() {
        return Err(WddError::InconsistentSystem {
            offset: sys.offset,
            reason: "lost coefficient is zero; there is no argument to solve for".into(),
        });
    }
    let usable: Vec<usize> = sys.usable().collect();
    let Some(&pivot) = usable
        .iter()
        .min_by(|&&p, &&q| sys.cosine(p).abs().total_cmp(&sys.cosine(q).abs()))
    else {
        return Err(WddError::InconsistentSystem {
            offset: sys.offset,
            reason: "no row carries an argument".into(),
        });
    };
    let (c1, c2) = sys.row_candidates(pivot);
    let agrees = |phi: f64| {
        usable.iter().all(|&k| {
            let (p, q) = sys.row_candidates(k);
            circular_distance(phi, p).min(circular_distance(phi, q)) <= AGREEMENT_TOL
        })
    };
    let survivors: Vec<f64> = [c1, c2].into_iter().filter(|&p| agrees(p)).collect();
    let phi = match survivors.as_slice() {
        [] => {
            return Err(WddError::InconsistentSystem {
                offset: sys.offset,
                reason: "candidate arguments of different rows do not intersect".into(),
            })
        }
        [p] => *p,
        [p, q, ..] => {
            if sys.residual(*p) <= sys.residual(*q) {
                *p
            } else {
                *q
            }
        }
    };
    let phi = refine(sys, phi);
    let res = sys.residual(phi);
    let n = sys.n();
    if !(res <= RESIDUAL_TOL * n * n) {
        return Err(WddError::InconsistentSystem {
            offset: sys.offset,
            reason: format!("residual {res:e} exceeds {:e}", RESIDUAL_TOL * n * n),
        });
    }
    Ok(phi)
}

/// The two arguments of a rank-one system, taken from row 0 or the first row
/// with nonvanishing `a_k`.
pub fn solve_rank1_pair(sys: &PhaseSystem) -> Result<(f64, f64)> {
    if sys.is_zero_coefficient() {
        return Err(WddError::InconsistentSystem {
            offset: sys.offset,
            reason: "lost coefficient is zero; there is no argument to solve for".into(),
        });
    }
    let k = sys.usable().next().ok_or_else(|| WddError::InconsistentSystem {
        offset: sys.offset,
        reason: "rank one claimed but every a_k vanishes".into(),
    })?;
    Ok(sys.row_candidates(k))
}

/// Outcome of [`select_candidate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub residuals: [f64; 2],
}

/// Picks the completion of `f^1` whose diagonal `g` satisfies
/// `g . S_1 g = IDFT(f^2)`, as every phase object does.
pub fn select_candidate(shape: Shape, f1: [&[Complex64]; 2], f2: &[Complex64]) -> Result<Selection> {
    if f1[0] == f1[1] {
        return Err(WddError::InvalidParameter {
            name: "candidates",
            reason: "the two completions coincide".into(),
        });
    }
    let target = fourier::idft(shape, f2);
    let step = Offset::lag(1);
    let residual = |f: &[Complex64]| {
        let g = fourier::idft(shape, f);
        (0..g.len())
            .map(|p| (g[p] * g[shape.translate(p, step)] - target[p]).norm())
            .fold(0.0, f64::max)
    };
    let residuals = [residual(f1[0]), residual(f1[1])];
    let index = usize::from(residuals[1] < residuals[0]);
    let (win, lose) = (residuals[index], residuals[1 - index]);
    if !(win <= SELECTION_TOL) || !(lose >= 10.0 * win) {
        return Err(WddError::AmbiguityResolution {
            winner: win,
            loser: lose,
        });
    }
    Ok(Selection { index, residuals })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Rebuilds a phase object from one diagonal with lag coprime to `d`, using
/// `x_{k+j} = conj(g_k) x_k` from the gauge `x_0 = 1`.
pub fn propagate(diagonal: &[Complex64], j: usize) -> Result<ComplexSignal> {
    let d = diagonal.len();
    if d == 0 || gcd(j % d, d) != 1 {
        return Err(WddError::InvalidParameter {
            name: "j",
            reason: format!("lag {j} is not coprime with {d}"),
        });
    }
    let mut x = vec![ZERO; d];
    let mut k = 0;
    x[0] = Complex64::new(1.0, 0.0);
    for _ in 1..d {
        let next = (k + j) % d;
        x[next] = crate::signal::sgn(diagonal[k].conj() * x[k]);
        k = next;
    }
    ComplexSignal::new(x)
}

/// Outcome of phase-object recovery.
#[derive(Clone, Debug, PartialEq)]
pub enum PhaseOutcome {
    Unique(ComplexSignal),
    /// Modulation family: every `x^m = (e^{2 pi i k m / d})_k` explains the data.
    AmbiguousTypeI {
        d: usize,
    },
    /// Alternating-phase family; both completions are returned.
    AmbiguousTypeII {
        first: ComplexSignal,
        second: ComplexSignal,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseObjectResult {
    pub outcome: PhaseOutcome,
    /// Ranks of `A^1` and, when it was needed, `A^2`.
    pub ranks: (RankClass, Option<RankClass>),
    /// Number of diagonals used for the final lift.
    pub gamma: usize,
}

impl PhaseObjectResult {
    pub fn unique(&self) -> Option<&ComplexSignal> {
        match &self.outcome {
            PhaseOutcome::Unique(x) => Some(x),
            _ => None,
        }
    }
}

/// Modulation objects explaining a type I outcome.
pub fn type1_candidates(d: usize) -> Vec<ComplexSignal> {
    (0..d as i64).map(|m| crate::forward::modulation_object(d, m)).collect()
}

/// Spectrum of lags 0, 1, 2 with nonzero frequencies only; the main diagonal
/// is completed as the all-ones vector.
fn phase_spectrum(y: &MeasurementGrid, w: &Window) -> Result<DiagonalSpectrum> {
    let offsets = wdd::band_offsets(3);
    wdd::require_window(w, &offsets)?;
    let mut spec = wdd::deconvolve(&wdd::wdd_rows(y, &offsets), w, true)?;
    zero_freq_magnitude(&spec, Offset::ZERO)?;
    spec.set_zero(0, Complex64::new(y.size() as f64, 0.0));
    Ok(spec)
}

/// Ranks of `A^1` and `A^2` of a spectrum.
pub fn rank_pair(spec: &DiagonalSpectrum) -> Result<(RankClass, RankClass)> {
    let r1 = classify_rank(&build_system(spec, Offset::lag(1))?);
    let r2 = classify_rank(&build_system(spec, Offset::lag(2))?);
    Ok((r1, r2))
}

fn with_zero(spec: &DiagonalSpectrum, lag: usize, value: Complex64) -> Vec<Complex64> {
    let mut row = spec.row(lag).to_vec();
    row[0] = value;
    row
}

/// Recovery of a 1D phase object from measurements with unknown background.
pub fn algorithm3(y: &MeasurementGrid, w: &Window) -> Result<PhaseObjectResult> {
    if !y.shape().is_line() {
        return Err(WddError::InvalidParameter {
            name: "shape",
            reason: "use the planar reconstruction for images".into(),
        });
    }
    wdd::validate_band(y, w, 3)?;
    let d = y.size();
    let mut spec = phase_spectrum(y, w)?;
    let s1 = build_system(&spec, Offset::lag(1))?;
    let r1 = classify_rank(&s1);
    let finish = |spec: &DiagonalSpectrum, gamma: usize, ranks| -> Result<PhaseObjectResult> {
        let est = wdd::recover(&spec.restrict(&wdd::band_offsets(gamma))?, true)?;
        Ok(PhaseObjectResult {
            outcome: PhaseOutcome::Unique(est.signal()),
            ranks,
            gamma,
        })
    };
    if s1.is_zero_coefficient() {
        spec.set_zero(1, ZERO);
        return finish(&spec, 2, (r1, None));
    }
    match r1 {
        RankClass::Rank0 => Ok(PhaseObjectResult {
            outcome: PhaseOutcome::AmbiguousTypeI { d },
            ranks: (r1, None),
            gamma: 1,
        }),
        RankClass::Rank2 => {
            let phi = solve_rank2(&s1)?;
            spec.set_zero(1, s1.coefficient(phi));
            finish(&spec, 2, (r1, None))
        }
        RankClass::Rank1 => {
            let s2 = build_system(&spec, Offset::lag(2))?;
            let r2 = classify_rank(&s2);
            let ranks = (r1, Some(r2));
            let (p1, p2) = solve_rank1_pair(&s1)?;
            let cands = [
                with_zero(&spec, 1, s1.coefficient(p1)),
                with_zero(&spec, 1, s1.coefficient(p2)),
            ];
            let second_known = s2.is_zero_coefficient() || r2 == RankClass::Rank2;
            match (d % 2 == 0, r2) {
                (_, RankClass::Rank1) if !s2.is_zero_coefficient() => {
                    Err(WddError::ImpossibleRankPair { first: 1, second: 1 })
                }
                (false, RankClass::Rank0) if !second_known => Err(WddError::ImpossibleRankPair { first: 1, second: 0 }),
                (true, RankClass::Rank0) if !second_known => {
                    let shape = spec.shape();
                    let g1 = fourier::idft(shape, &cands[0]);
                    let g2 = fourier::idft(shape, &cands[1]);
                    Ok(PhaseObjectResult {
                        outcome: PhaseOutcome::AmbiguousTypeII {
                            first: propagate(&g1, 1)?,
                            second: propagate(&g2, 1)?,
                        },
                        ranks,
                        gamma: 2,
                    })
                }
                _ => {
                    let f20 = if s2.is_zero_coefficient() {
                        ZERO
                    } else {
                        s2.coefficient(solve_rank2(&s2)?)
                    };
                    spec.set_zero(2, f20);
                    let pick = select_candidate(spec.shape(), [&cands[0], &cands[1]], spec.row(2))?;
                    spec.set_zero(1, cands[pick.index][0]);
                    finish(&spec, 3, ranks)
                }
            }
        }
    }
}

/// Lags whose argument system could not be solved uniquely.
#[derive(Clone, Debug, PartialEq)]
pub struct DroppedLag {
    pub offset: Offset,
    pub rank: RankClass,
}

/// Fills every lost coefficient whose system has rank two (or whose
/// coefficient vanishes) and returns the spectrum restricted to those lags,
/// with the main diagonal set to all ones.
pub fn repair_rank2(spec: &DiagonalSpectrum) -> Result<(DiagonalSpectrum, Vec<DroppedLag>)> {
    let shape = spec.shape();
    let n = shape.len() as f64;
    let zero = spec
        .index_of(Offset::ZERO)
        .ok_or(WddError::IncompleteSpectrum { offset: Offset::ZERO })?;
    zero_freq_magnitude(spec, Offset::ZERO)?;
    let mut out = spec.clone();
    out.set_zero(zero, Complex64::new(n, 0.0));
    let mut keep = vec![Offset::ZERO];
    let mut dropped = Vec::new();
    for (i, &o) in spec.offsets().iter().enumerate() {
        if i == zero {
            continue;
        }
        let sys = build_system(spec, o)?;
        if sys.is_zero_coefficient() {
            out.set_zero(i, ZERO);
            keep.push(o);
            continue;
        }
        match classify_rank(&sys) {
            RankClass::Rank2 => {
                out.set_zero(i, sys.coefficient(solve_rank2(&sys)?));
                keep.push(o);
            }
            rank => dropped.push(DroppedLag { offset: o, rank }),
        }
    }
    Ok((out.restrict(&keep)?, dropped))
}
