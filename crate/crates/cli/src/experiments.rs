//! Scripted desk-scale scenarios producing result tables.

use std::time::Instant;

use ptycho_wdd::forward::{
    add_background, make_ambiguous_pair, make_window, make_window_2d, noise_level, scale_to_noise_level, simulate,
    AmbiguityKind,
};
use ptycho_wdd::metrics::{aligned_error, measurement_error};
use ptycho_wdd::phase::algorithm3;
use ptycho_wdd::planar::{reconstruct_2d, simulate_2d};
use ptycho_wdd::wdd::{algorithm1, band_offsets};
use ptycho_wdd::{
    general, Background, ComplexImage, DiagonalMode, MeasurementGrid, Method, ObjectKind, ObjectSpec, PhaseOutcome,
};

use crate::config::{method_name, mode_name};
use crate::error::{exit, CliError};

pub const NAMES: &[&str] = &["table-general", "table-phase", "noise-sweep", "ambiguity-demo"];

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    /// Column-aligned text rendering.
    pub fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|i| {
                self.rows
                    .iter()
                    .map(|r| r[i].len())
                    .chain([self.columns[i].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let render = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        let mut out = format!("{}\n{}\n", self.name, render(&self.columns));
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1)));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&render(r));
            out.push('\n');
        }
        out
    }
}

fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

fn random_background(y: &MeasurementGrid, level: f64, seed: u64) -> Result<MeasurementGrid, CliError> {
    if level == 0.0 {
        return Ok(y.clone());
    }
    let b = scale_to_noise_level(y, &Background::random(y.shape(), 1.0, seed), level)?;
    Ok(add_background(y, &b)?)
}

fn table_phase(seed: u64) -> Result<Table, CliError> {
    let mut t = Table::new(
        "table-phase",
        &[
            "dim",
            "d",
            "delta",
            "noise_level",
            "aligned_error",
            "measurement_error",
            "runtime_s",
        ],
    );
    for delta in [8usize, 16] {
        let d = 64;
        let (mut err, mut merr, mut level) = (0.0f64, 0.0f64, 0.0);
        let start = Instant::now();
        for s in 0..3u64 {
            let seed = seed.wrapping_add(100 * delta as u64 + s);
            let x = ObjectSpec::new(ObjectKind::RandomPhase, seed).generate(d)?;
            let w = make_window(d, delta, seed)?;
            let clean = simulate(&x, &w)?;
            let noisy = random_background(&clean, 3.5, seed)?;
            level = noise_level(&clean, &noisy)?;
            let est = algorithm3(&noisy, &w)?;
            let est = est
                .unique()
                .ok_or_else(|| CliError::format("unexpected ambiguous outcome"))?;
            err = err.max(aligned_error(x.as_slice(), est.as_slice())?);
            merr = merr.max(measurement_error(est, &w, &clean)?);
        }
        t.push(vec![
            "1".into(),
            d.to_string(),
            delta.to_string(),
            format!("{level:.2}"),
            sci(err),
            sci(merr),
            format!("{:.3}", start.elapsed().as_secs_f64()),
        ]);
    }
    for delta in [8usize, 16] {
        let d = 64;
        let seed = seed.wrapping_add(7000 + delta as u64);
        let start = Instant::now();
        let x = ComplexImage::generate(&ObjectSpec::new(ObjectKind::RandomPhase, seed), d)?;
        let w = make_window_2d(d, delta, seed)?;
        let clean = simulate_2d(&x, &w)?;
        let noisy = random_background(&clean, 3.5, seed)?;
        let res = reconstruct_2d(&noisy, &w, DiagonalMode::Gamma(2), Method::Phase)?;
        t.push(vec![
            "2".into(),
            d.to_string(),
            delta.to_string(),
            format!("{:.2}", noise_level(&clean, &noisy)?),
            sci(aligned_error(x.as_slice(), res.image.as_slice())?),
            sci(measurement_error(&res.image, &w, &clean)?),
            format!("{:.3}", start.elapsed().as_secs_f64()),
        ]);
    }
    Ok(t)
}

fn table_general(seed: u64) -> Result<Table, CliError> {
    let mut t = Table::new(
        "table-general",
        &[
            "dim",
            "d",
            "delta",
            "noise_level",
            "diagonals",
            "method",
            "aligned_error",
            "measurement_error",
        ],
    );
    let x1 = ObjectSpec::new(ObjectKind::RandomComplex, seed).generate(32)?;
    let w1 = make_window(32, 8, seed)?;
    let y1 = simulate(&x1, &w1)?;
    let x2 = ComplexImage::generate(&ObjectSpec::new(ObjectKind::RandomComplex, seed), 16)?;
    let w2 = make_window_2d(16, 4, seed)?;
    let y2 = simulate_2d(&x2, &w2)?;
    for level in [0.0, 1.6, 3.5] {
        let n1 = random_background(&y1, level, seed.wrapping_add(1))?;
        let n2 = random_background(&y2, level, seed.wrapping_add(2))?;
        for mode in [DiagonalMode::Gamma(3), DiagonalMode::All] {
            for method in [Method::Vanilla, Method::General] {
                let offsets = match mode {
                    DiagonalMode::Gamma(g) => band_offsets(g),
                    DiagonalMode::All => band_offsets(w1.support()),
                };
                let est = match method {
                    Method::General => general::algorithm2_on(&n1, &w1, &offsets)?.0.signal(),
                    _ => ptycho_wdd::wdd::algorithm1_on(&n1, &w1, &offsets)?.signal(),
                };
                t.push(vec![
                    "1".into(),
                    "32".into(),
                    "8".into(),
                    format!("{level:.2}"),
                    mode_name(mode),
                    method_name(method).into(),
                    sci(aligned_error(x1.as_slice(), est.as_slice())?),
                    sci(measurement_error(&est, &w1, &y1)?),
                ]);
                let res = reconstruct_2d(&n2, &w2, mode, method)?;
                t.push(vec![
                    "2".into(),
                    "16".into(),
                    "4".into(),
                    format!("{level:.2}"),
                    mode_name(mode),
                    method_name(method).into(),
                    sci(aligned_error(x2.as_slice(), res.image.as_slice())?),
                    sci(measurement_error(&res.image, &w2, &y2)?),
                ]);
            }
        }
    }
    Ok(t)
}

/// Background amplitudes as multiples of the mean clean intensity.
pub const SWEEP: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 4.0];

fn noise_sweep(seed: u64) -> Result<Table, CliError> {
    let mut t = Table::new(
        "noise-sweep",
        &[
            "amplitude",
            "noise_level",
            "vanilla_error",
            "general_error",
            "phase_error",
        ],
    );
    let d = 32;
    let w = make_window(d, 8, seed)?;
    let x = ObjectSpec::new(ObjectKind::RandomComplex, seed).generate(d)?;
    let p = ObjectSpec::new(ObjectKind::RandomPhase, seed).generate(d)?;
    let (yx, yp) = (simulate(&x, &w)?, simulate(&p, &w)?);
    let unit = Background::random(yx.shape(), 1.0, seed.wrapping_add(5));
    let mean = |y: &MeasurementGrid| y.values().iter().sum::<f64>() / y.values().len() as f64;
    let (ax, ap) = (mean(&yx), mean(&yp));
    for amp in SWEEP {
        let nx = add_background(&yx, &unit.scaled(amp * ax))?;
        let np = add_background(&yp, &unit.scaled(amp * ap))?;
        let van = algorithm1(&nx, &w, 3)?;
        let gen = general::algorithm2(&nx, &w, 3)?;
        let ph = algorithm3(&np, &w)?;
        let ph = ph
            .unique()
            .ok_or_else(|| CliError::format("unexpected ambiguous outcome"))?;
        t.push(vec![
            format!("{amp}"),
            format!("{:.3}", noise_level(&yx, &nx)?),
            sci(aligned_error(x.as_slice(), van.as_slice())?),
            sci(aligned_error(x.as_slice(), gen.as_slice())?),
            sci(aligned_error(p.as_slice(), ph.as_slice())?),
        ]);
    }
    Ok(t)
}

fn ambiguity_demo(seed: u64) -> Result<Table, CliError> {
    let mut t = Table::new(
        "ambiguity-demo",
        &[
            "family",
            "d",
            "grid_difference",
            "outcome_first",
            "outcome_second",
            "exit_code",
        ],
    );
    let w = make_window(8, 3, seed)?;
    for (name, kind) in [
        ("type-I (m=3)", AmbiguityKind::TypeI { m: 3 }),
        ("type-II (m=1 rho=0.7)", AmbiguityKind::TypeII { m: 1, rho: 0.7 }),
    ] {
        let pair = make_ambiguous_pair(kind, &w)?;
        let (a, b) = pair.measurements(&w)?;
        let diff = a.max_abs_diff(&b) / a.max_abs();
        let label = |y: &MeasurementGrid| -> Result<(String, i32), CliError> {
            Ok(match algorithm3(y, &w)?.outcome {
                PhaseOutcome::Unique(_) => ("unique".into(), exit::SUCCESS),
                PhaseOutcome::AmbiguousTypeI { .. } => ("ambiguous-type-I".into(), exit::AMBIGUOUS_TYPE_I),
                PhaseOutcome::AmbiguousTypeII { .. } => ("ambiguous-type-II".into(), exit::AMBIGUOUS_TYPE_II),
            })
        };
        let (o1, code) = label(&a)?;
        let (o2, _) = label(&b)?;
        t.push(vec![name.into(), "8".into(), sci(diff), o1, o2, code.to_string()]);
    }
    Ok(t)
}

pub fn run(name: &str, seed: u64) -> Result<Table, CliError> {
    match name {
        "table-phase" => table_phase(seed),
        "table-general" => table_general(seed),
        "noise-sweep" => noise_sweep(seed),
        "ambiguity-demo" => ambiguity_demo(seed),
        other => Err(CliError::usage(
            "experiment",
            format!("{other:?}: expected one of {}", NAMES.join(", ")),
        )),
    }
}
