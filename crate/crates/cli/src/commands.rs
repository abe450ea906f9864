use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use ptycho_wdd::forward::{self, add_background, make_window, make_window_2d, scale_to_noise_level};
use ptycho_wdd::metrics::{aligned_error, background_invariant_residual, measurement_error};
use ptycho_wdd::phase::algorithm3;
use ptycho_wdd::planar::reconstruct_2d;
use ptycho_wdd::wdd::{algorithm1_on, band_offsets};
use ptycho_wdd::{
    general, Background, ComplexImage, ComplexSignal, DiagonalMode, Field, MeasurementGrid, Method, ObjectSpec,
    PhaseOutcome, Shape, Window,
};

use crate::config::{
    method_name, mode_name, BackgroundKind, ExperimentConfig, GridChoice, ObjectChoice, ReconstructConfig,
};
use crate::error::{exit, CliError};
use crate::format::{self, ComplexArray, Format, RealArray};

pub const OBJECT: &str = "object";
pub const WINDOW: &str = "window";
pub const BACKGROUND: &str = "background";
pub const CLEAN: &str = "clean";
pub const NOISY: &str = "noisy";
pub const RECONSTRUCTION: &str = "reconstruction";
pub const REPORT: &str = "report.txt";

fn dims_of(shape: Shape) -> Vec<usize> {
    if shape.is_line() {
        vec![shape.cols]
    } else {
        vec![shape.rows, shape.cols]
    }
}

fn shape_of(dims: &[usize]) -> Shape {
    match dims {
        [d] => Shape::line(*d),
        [r, c] => Shape { rows: *r, cols: *c },
        _ => unreachable!("arrays have rank 1 or 2"),
    }
}

pub fn field_array(x: &impl Field) -> ComplexArray {
    ComplexArray {
        dims: dims_of(x.shape()),
        data: x.values().to_vec(),
    }
}

pub fn window_array(w: &Window) -> ComplexArray {
    ComplexArray {
        dims: dims_of(w.shape()),
        data: w.values().to_vec(),
    }
}

pub fn grid_array(y: &MeasurementGrid) -> RealArray {
    RealArray {
        dims: vec![y.size(), y.size()],
        data: y.values().to_vec(),
    }
}

pub fn background_array(b: &Background) -> RealArray {
    RealArray {
        dims: dims_of(b.shape()),
        data: b.values().to_vec(),
    }
}

fn path_for(dir: &Path, stem: &str, format: Format, complex: bool) -> PathBuf {
    dir.join(format!("{stem}.{}", format.extension(complex)))
}

/// Locates `stem.ptyc`/`stem.ptyr` or `stem.csv` inside `dir`.
pub fn find(dir: &Path, stem: &str, complex: bool) -> Result<PathBuf, CliError> {
    for format in [Format::Bin, Format::Csv] {
        let p = path_for(dir, stem, format, complex);
        if p.is_file() {
            return Ok(p);
        }
    }
    Err(CliError::usage("in", format!("{} holds no {stem} file", dir.display())))
}

fn support_of(values: &[Complex64], shape: Shape) -> usize {
    let mut extent = 0;
    for (p, v) in values.iter().enumerate() {
        if *v != Complex64::new(0.0, 0.0) {
            let (r, c) = shape.coords(p);
            extent = extent.max(c + 1);
            if !shape.is_line() {
                extent = extent.max(r + 1);
            }
        }
    }
    extent
}

pub fn window_from_array(a: ComplexArray) -> Result<Window, CliError> {
    let shape = shape_of(&a.dims);
    let support = support_of(&a.data, shape);
    Ok(Window::on_shape(shape, a.data, support)?)
}

pub fn grid_from_array(a: RealArray, shape: Shape) -> Result<MeasurementGrid, CliError> {
    let n = shape.len();
    if a.dims != [n, n] {
        return Err(CliError::format(format!(
            "grid has dims {:?}, the window implies {n}x{n}",
            a.dims
        )));
    }
    Ok(MeasurementGrid::new(shape, a.data)?)
}

fn make_object(cfg: &ExperimentConfig) -> Result<ComplexArray, CliError> {
    let shape = if cfg.planar {
        Shape::square(cfg.d)
    } else {
        Shape::line(cfg.d)
    };
    let values = match cfg.object {
        ObjectChoice::Ones => vec![Complex64::new(1.0, 0.0); shape.len()],
        ObjectChoice::Kind(kind) => ObjectSpec::new(kind, cfg.seed).generate_on(shape)?,
    };
    Ok(ComplexArray {
        dims: dims_of(shape),
        data: values,
    })
}

fn make_background(cfg: &ExperimentConfig, clean: &MeasurementGrid) -> Result<Background, CliError> {
    let shape = clean.shape();
    let amp = cfg.background.amplitude;
    let base = match &cfg.background.kind {
        BackgroundKind::None => return Ok(Background::zeros(shape)),
        BackgroundKind::Constant => Background::constant(shape, amp),
        BackgroundKind::Random => Background::random(shape, amp, cfg.seed.wrapping_add(1)),
        BackgroundKind::ImageFile(path) => {
            let a = format::read_real(path)?;
            if a.data.len() != shape.len() {
                return Err(CliError::usage(
                    "bg-file",
                    format!(
                        "{} holds {} values, expected {}",
                        path.display(),
                        a.data.len(),
                        shape.len()
                    ),
                ));
            }
            Background::new(shape, a.data.iter().map(|v| v * amp).collect())?
        }
    };
    match cfg.background.noise_level {
        Some(level) if base.norm() > 0.0 => Ok(scale_to_noise_level(clean, &base, level)?),
        Some(level) if level > 0.0 => Err(CliError::usage(
            "noise-level",
            "the background is zero and cannot be scaled",
        )),
        _ => Ok(base),
    }
}

#[derive(Clone, Debug)]
pub struct SimulateOutput {
    pub files: Vec<PathBuf>,
    pub noise_level: f64,
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<SimulateOutput, CliError> {
    let window = if cfg.planar {
        make_window_2d(cfg.d, cfg.delta, cfg.seed)?
    } else {
        make_window(cfg.d, cfg.delta, cfg.seed)?
    };
    let object = make_object(cfg)?;
    let clean = match cfg.planar {
        true => forward::simulate(&ComplexImage::new(cfg.d, cfg.d, object.data.clone())?, &window)?,
        false => forward::simulate(&ComplexSignal::new(object.data.clone())?, &window)?,
    };
    let background = make_background(cfg, &clean)?;
    let noisy = add_background(&clean, &background)?;
    let noise_level = if clean.frobenius() > 0.0 {
        forward::noise_level(&clean, &noisy)?
    } else {
        0.0
    };
    let dir = &cfg.out;
    let files = vec![
        path_for(dir, OBJECT, cfg.format, true),
        path_for(dir, WINDOW, cfg.format, true),
        path_for(dir, BACKGROUND, cfg.format, false),
        path_for(dir, CLEAN, cfg.format, false),
        path_for(dir, NOISY, cfg.format, false),
    ];
    format::write_complex(&files[0], &object)?;
    format::write_complex(&files[1], &window_array(&window))?;
    format::write_real(&files[2], &background_array(&background))?;
    format::write_real(&files[3], &grid_array(&clean))?;
    format::write_real(&files[4], &grid_array(&noisy))?;
    Ok(SimulateOutput { files, noise_level })
}

/// Result of a reconstruction run: report text, written files and exit status.
#[derive(Clone, Debug)]
pub struct ReconstructOutput {
    pub report: String,
    pub files: Vec<PathBuf>,
    pub status: i32,
}

enum Outcome {
    Unique {
        values: Vec<Complex64>,
        notes: Vec<(String, String)>,
    },
    TypeI,
    TypeII(ComplexSignal, ComplexSignal),
}

fn run_1d(y: &MeasurementGrid, w: &Window, method: Method, mode: DiagonalMode) -> Result<Outcome, CliError> {
    let offsets = match mode {
        DiagonalMode::Gamma(g) => band_offsets(g),
        DiagonalMode::All => band_offsets(w.support()),
    };
    let unique = |values: Vec<Complex64>, unresolved: usize, mut notes: Vec<(String, String)>| {
        notes.push(("unresolved".into(), unresolved.to_string()));
        Outcome::Unique { values, notes }
    };
    Ok(match method {
        Method::Vanilla => {
            let est = algorithm1_on(y, w, &offsets)?;
            unique(est.values, est.unresolved.len(), Vec::new())
        }
        Method::General => {
            if offsets.len() < 2 {
                return Err(CliError::usage("gamma", "the general method needs gamma >= 2"));
            }
            let (est, rep) = general::algorithm2_on(y, w, &offsets)?;
            let notes = vec![("zero_zero_clamped".into(), rep.zero_zero.clamped.to_string())];
            unique(est.values, est.unresolved.len(), notes)
        }
        Method::Phase => {
            let res = algorithm3(y, w)?;
            let ranks = match res.ranks {
                (a, Some(b)) => format!("{},{}", a.value(), b.value()),
                (a, None) => a.value().to_string(),
            };
            match res.outcome {
                PhaseOutcome::Unique(x) => unique(
                    x.into_vec(),
                    0,
                    vec![("ranks".into(), ranks), ("gamma_used".into(), res.gamma.to_string())],
                ),
                PhaseOutcome::AmbiguousTypeI { .. } => Outcome::TypeI,
                PhaseOutcome::AmbiguousTypeII { first, second } => Outcome::TypeII(first, second),
            }
        }
    })
}

fn run_2d(y: &MeasurementGrid, w: &Window, method: Method, mode: DiagonalMode) -> Result<Outcome, CliError> {
    let res = reconstruct_2d(y, w, mode, method)?;
    let mut notes = vec![("unresolved".to_string(), res.unresolved.len().to_string())];
    if let Some((residual, ok)) = res.verification {
        notes.push(("verification_residual".into(), format!("{residual:e}")));
        notes.push(("verified".into(), ok.to_string()));
        let dropped: Vec<String> = res.dropped.iter().map(|l| format!("{}", l.offset)).collect();
        notes.push(("dropped_offsets".into(), dropped.join(";")));
    }
    Ok(Outcome::Unique {
        values: res.image.into_vec(),
        notes,
    })
}

enum Estimate {
    Line(ComplexSignal),
    Image(ComplexImage),
}

impl Estimate {
    fn new(shape: Shape, values: Vec<Complex64>) -> Result<Self, CliError> {
        Ok(if shape.is_line() {
            Estimate::Line(ComplexSignal::new(values)?)
        } else {
            Estimate::Image(ComplexImage::new(shape.rows, shape.cols, values)?)
        })
    }
}

impl Field for Estimate {
    fn shape(&self) -> Shape {
        match self {
            Estimate::Line(x) => x.shape(),
            Estimate::Image(x) => x.shape(),
        }
    }

    fn values(&self) -> &[Complex64] {
        match self {
            Estimate::Line(x) => x.as_slice(),
            Estimate::Image(x) => x.as_slice(),
        }
    }
}

/// Unit-modulus check on the dataset's stored object, if there is one.
fn stored_object_is_phase(dir: &Path) -> Result<bool, CliError> {
    let Ok(path) = find(dir, OBJECT, true) else {
        return Ok(false);
    };
    let object = format::read_complex(&path)?;
    Ok(object.data.iter().all(|z| (z.norm() - 1.0).abs() <= 1e-9))
}

pub fn reconstruct(cfg: &ReconstructConfig) -> Result<ReconstructOutput, CliError> {
    if cfg.method == Method::Phase && !cfg.phase_declared && !stored_object_is_phase(&cfg.input)? {
        return Err(CliError::usage(
            "method",
            "the phase method needs a phase-type object or assume-phase = true",
        ));
    }
    let window_path = find(&cfg.input, WINDOW, true)?;
    let out_format = cfg.format.unwrap_or_else(|| Format::of_path(&window_path));
    let window = window_from_array(format::read_complex(&window_path)?)?;
    let shape = window.shape();
    let stem = match cfg.grid {
        GridChoice::Noisy => NOISY,
        GridChoice::Clean => CLEAN,
    };
    let grid = grid_from_array(format::read_real(&find(&cfg.input, stem, false)?)?, shape)?;
    let clean = match cfg.grid {
        GridChoice::Clean => Some(grid.clone()),
        GridChoice::Noisy => find(&cfg.input, CLEAN, false)
            .ok()
            .map(|p| format::read_real(&p).and_then(|a| grid_from_array(a, shape)))
            .transpose()?,
    };
    let d = if shape.is_line() { shape.cols } else { shape.rows };
    let mode = cfg.resolve_mode(window.support(), d)?;

    let start = Instant::now();
    let outcome = if shape.is_line() {
        run_1d(&grid, &window, cfg.method, mode)?
    } else {
        run_2d(&grid, &window, cfg.method, mode)?
    };
    let runtime = start.elapsed().as_secs_f64();

    let mut report = String::new();
    let mut line = |k: &str, v: &dyn std::fmt::Display| {
        let _ = writeln!(report, "{k}={v}");
    };
    line("method", &method_name(cfg.method));
    line("shape", &shape);
    line("delta", &window.support());
    line("diagonals", &mode_name(mode));
    line("grid", &stem);
    let mut files = Vec::new();
    let status = match outcome {
        Outcome::Unique { values, notes } => {
            let est = Estimate::new(shape, values)?;
            let (reference, name) = match &clean {
                Some(c) => (c, "clean"),
                None => (&grid, "input"),
            };
            line("outcome", &"unique");
            line("runtime_seconds", &format!("{runtime:.6}"));
            line(
                "measurement_error",
                &format!("{:e}", measurement_error(&est, &window, reference)?),
            );
            line("measurement_reference", &name);
            line(
                "background_invariant_residual",
                &format!("{:e}", background_invariant_residual(&est, &window, &grid)?),
            );
            for (k, v) in &notes {
                line(k, v);
            }
            let p = path_for(&cfg.out, RECONSTRUCTION, out_format, true);
            format::write_complex(&p, &field_array(&est))?;
            files.push(p);
            exit::SUCCESS
        }
        Outcome::TypeI => {
            line("outcome", &"ambiguous-type-I");
            line("runtime_seconds", &format!("{runtime:.6}"));
            exit::AMBIGUOUS_TYPE_I
        }
        Outcome::TypeII(a, b) => {
            line("outcome", &"ambiguous-type-II");
            line("runtime_seconds", &format!("{runtime:.6}"));
            for (i, c) in [a, b].iter().enumerate() {
                let p = path_for(&cfg.out, &format!("candidate-{}", i + 1), out_format, true);
                format::write_complex(&p, &field_array(c))?;
                files.push(p);
            }
            exit::AMBIGUOUS_TYPE_II
        }
    };
    let report_path = cfg.out.join(REPORT);
    format::write_atomic(&report_path, report.as_bytes())?;
    files.push(report_path);
    Ok(ReconstructOutput { report, files, status })
}

/// Aligned relative error between two stored arrays.
pub fn evaluate(truth: &Path, estimate: &Path) -> Result<f64, CliError> {
    let x = format::read_complex(truth)?;
    let e = format::read_complex(estimate)?;
    if x.dims != e.dims {
        return Err(CliError::usage(
            "estimate",
            format!("dims {:?} differ from the truth's {:?}", e.dims, x.dims),
        ));
    }
    Ok(aligned_error(&x.data, &e.data)?)
}
