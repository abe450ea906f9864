//! Flat `key = value` settings, merged from a config file and command-line
//! overrides, and the per-verb configurations built from them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ptycho_wdd::{DiagonalMode, Method, ObjectKind};

use crate::error::CliError;
use crate::format::Format;

pub const KEYS: &[&str] = &[
    "d",
    "d2",
    "delta",
    "gamma",
    "all-diagonals",
    "method",
    "object",
    "background",
    "bg-amp",
    "bg-file",
    "noise-level",
    "seed",
    "in",
    "out",
    "format",
    "assume-phase",
    "grid",
];

/// Raw settings; later insertions override earlier ones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage("config", format!("line {}: expected key = value", i + 1)))?;
            s.set(k.trim(), v.trim())?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KEYS.contains(&key) {
            return Err(CliError::usage(key, "unknown setting"));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn merge(&mut self, other: &Settings) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::usage(key, format!("{v:?}: {e}"))))
            .transpose()
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.parsed(key)?.ok_or_else(|| CliError::usage(key, "missing"))
    }

    fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key) {
            None | Some("false") | Some("0") | Some("no") => Ok(false),
            Some("true") | Some("1") | Some("yes") | Some("") => Ok(true),
            Some(v) => Err(CliError::usage(key, format!("{v:?} is not a boolean"))),
        }
    }
}

/// Object families selectable by name.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ObjectChoice {
    Ones,
    Kind(ObjectKind),
}

impl ObjectChoice {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = |why: &str| CliError::usage("object", format!("{s:?}: {why}"));
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or("");
        let args: Vec<&str> = parts.collect();
        let num = |i: usize| -> Result<f64, CliError> {
            args.get(i)
                .ok_or_else(|| bad("missing parameter"))?
                .parse::<f64>()
                .map_err(|_| bad("parameter is not a number"))
        };
        let choice = match name {
            "ones" => ObjectChoice::Ones,
            "random" | "random-complex" => ObjectChoice::Kind(ObjectKind::RandomComplex),
            "random-phase" => ObjectChoice::Kind(ObjectKind::RandomPhase),
            "modulation" => ObjectChoice::Kind(ObjectKind::Modulation { m: num(0)? as i64 }),
            "type2" => ObjectChoice::Kind(ObjectKind::Type2 {
                m: num(0)? as i64,
                rho: num(1)?,
            }),
            _ => return Err(bad("expected ones, random, random-phase, modulation:M or type2:M:RHO")),
        };
        Ok(choice)
    }

    pub fn is_phase(&self) -> bool {
        !matches!(self, ObjectChoice::Kind(ObjectKind::RandomComplex))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BackgroundKind {
    None,
    Constant,
    Random,
    ImageFile(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackgroundSpec {
    pub kind: BackgroundKind,
    pub amplitude: f64,
    /// Rescale the background to this noise level instead of using `amplitude`.
    pub noise_level: Option<f64>,
}

fn parse_method(s: &str) -> Result<Method, CliError> {
    match s {
        "vanilla" => Ok(Method::Vanilla),
        "general" => Ok(Method::General),
        "phase" => Ok(Method::Phase),
        _ => Err(CliError::usage(
            "method",
            format!("{s:?}: expected vanilla, general or phase"),
        )),
    }
}

pub fn method_name(m: Method) -> &'static str {
    match m {
        Method::Vanilla => "vanilla",
        Method::General => "general",
        Method::Phase => "phase",
    }
}

pub fn mode_name(m: DiagonalMode) -> String {
    match m {
        DiagonalMode::Gamma(g) => format!("gamma={g}"),
        DiagonalMode::All => "all".into(),
    }
}

fn parse_format(s: &Settings) -> Result<Format, CliError> {
    match s.get("format") {
        None => Ok(Format::Bin),
        Some(v) => Format::parse(v).ok_or_else(|| CliError::usage("format", format!("{v:?}: expected bin or csv"))),
    }
}

fn parse_mode(s: &Settings, delta: Option<usize>) -> Result<DiagonalMode, CliError> {
    if s.flag("all-diagonals")? {
        return Ok(DiagonalMode::All);
    }
    let gamma = match s.parsed::<usize>("gamma")? {
        Some(g) => g,
        None => delta.map_or(3, |d| d.min(3)),
    };
    if gamma == 0 {
        return Err(CliError::usage("gamma", "must be at least 1"));
    }
    Ok(DiagonalMode::Gamma(gamma))
}

fn check_band(mode: DiagonalMode, delta: usize, d: usize) -> Result<(), CliError> {
    if let DiagonalMode::Gamma(g) = mode {
        if g > delta {
            return Err(CliError::usage("gamma", format!("gamma = {g} exceeds delta = {delta}")));
        }
    }
    if delta >= d {
        return Err(CliError::usage(
            "delta",
            format!("delta = {delta} must be smaller than d = {d}"),
        ));
    }
    Ok(())
}

fn check_phase(method: Method, object: Option<ObjectChoice>, s: &Settings) -> Result<(), CliError> {
    if method == Method::Phase && !s.flag("assume-phase")? && !object.is_some_and(|o| o.is_phase()) {
        return Err(CliError::usage(
            "method",
            "the phase method needs a phase-type object or assume-phase = true",
        ));
    }
    Ok(())
}

/// Everything `simulate` needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub planar: bool,
    pub delta: usize,
    pub mode: DiagonalMode,
    pub seed: u64,
    pub object: ObjectChoice,
    pub background: BackgroundSpec,
    pub method: Method,
    pub out: PathBuf,
    pub format: Format,
}

impl ExperimentConfig {
    pub fn from_settings(s: &Settings) -> Result<Self, CliError> {
        let d: usize = s.required("d")?;
        if d < 2 {
            return Err(CliError::usage("d", "must be at least 2"));
        }
        let planar = match s.parsed::<usize>("d2")? {
            None => false,
            Some(d2) if d2 == d => true,
            Some(d2) => {
                return Err(CliError::usage(
                    "d2",
                    format!("only square images are supported (d = {d}, d2 = {d2})"),
                ))
            }
        };
        let delta: usize = s.required("delta")?;
        if delta == 0 {
            return Err(CliError::usage("delta", "must be at least 1"));
        }
        let mode = parse_mode(s, Some(delta))?;
        check_band(mode, delta, d)?;
        let object = ObjectChoice::parse(s.get("object").unwrap_or("random"))?;
        if planar
            && !matches!(object, ObjectChoice::Ones)
            && !matches!(
                object,
                ObjectChoice::Kind(ObjectKind::RandomComplex | ObjectKind::RandomPhase)
            )
        {
            return Err(CliError::usage("object", "structured objects are one-dimensional"));
        }
        let method = parse_method(s.get("method").unwrap_or("general"))?;
        check_phase(method, Some(object), s)?;
        let kind = match s.get("background").unwrap_or("none") {
            "none" => BackgroundKind::None,
            "constant" => BackgroundKind::Constant,
            "random" => BackgroundKind::Random,
            "image-file" => BackgroundKind::ImageFile(
                s.get("bg-file")
                    .map(PathBuf::from)
                    .ok_or_else(|| CliError::usage("bg-file", "required for background = image-file"))?,
            ),
            other => {
                return Err(CliError::usage(
                    "background",
                    format!("{other:?}: expected none, constant, random or image-file"),
                ))
            }
        };
        let amplitude = s.parsed::<f64>("bg-amp")?.unwrap_or(1.0);
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(CliError::usage("bg-amp", "must be a finite nonnegative number"));
        }
        let noise_level = s.parsed::<f64>("noise-level")?;
        if noise_level.is_some_and(|l| !(l >= 0.0 && l.is_finite())) {
            return Err(CliError::usage("noise-level", "must be a finite nonnegative number"));
        }
        Ok(ExperimentConfig {
            d,
            planar,
            delta,
            mode,
            seed: s.parsed("seed")?.unwrap_or(0),
            object,
            background: BackgroundSpec {
                kind,
                amplitude,
                noise_level,
            },
            method,
            out: s.get("out").map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
            format: parse_format(s)?,
        })
    }
}

/// Which grid of a simulated dataset to reconstruct from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridChoice {
    Noisy,
    Clean,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructConfig {
    pub input: PathBuf,
    pub out: PathBuf,
    pub method: Method,
    /// `None` until the window support is known.
    pub mode: Option<DiagonalMode>,
    pub grid: GridChoice,
    /// `None` follows the input dataset.
    pub format: Option<Format>,
    /// Phase-type object named or `assume-phase` set; otherwise the
    /// dataset's stored object decides.
    pub phase_declared: bool,
}

impl ReconstructConfig {
    pub fn from_settings(s: &Settings) -> Result<Self, CliError> {
        let input = PathBuf::from(s.get("in").ok_or_else(|| CliError::usage("in", "missing"))?);
        let method = parse_method(s.get("method").unwrap_or("general"))?;
        let object = s.get("object").map(ObjectChoice::parse).transpose()?;
        let phase_declared = s.flag("assume-phase")? || object.is_some_and(|o| o.is_phase());
        let explicit = s.flag("all-diagonals")? || s.get("gamma").is_some();
        let mode = if explicit { Some(parse_mode(s, None)?) } else { None };
        let grid = match s.get("grid").unwrap_or("noisy") {
            "noisy" => GridChoice::Noisy,
            "clean" => GridChoice::Clean,
            other => return Err(CliError::usage("grid", format!("{other:?}: expected noisy or clean"))),
        };
        Ok(ReconstructConfig {
            out: s.get("out").map(PathBuf::from).unwrap_or_else(|| input.clone()),
            input,
            method,
            mode,
            grid,
            format: s.get("format").map(|_| parse_format(s)).transpose()?,
            phase_declared,
        })
    }

    /// Diagonal mode once the window support is known, checked against it.
    pub fn resolve_mode(&self, delta: usize, d: usize) -> Result<DiagonalMode, CliError> {
        let mode = self.mode.unwrap_or(DiagonalMode::Gamma(delta.min(3)));
        check_band(mode, delta, d)?;
        Ok(mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(pairs: &[(&str, &str)]) -> Settings {
        let mut s = Settings::default();
        for (k, v) in pairs {
            s.set(k, v).unwrap();
        }
        s
    }

    #[test]
    fn file_syntax() {
        let s = Settings::parse("# run\nd = 32\n\ndelta=8 # window\nobject = random-phase\n").unwrap();
        assert_eq!(s.get("d"), Some("32"));
        assert_eq!(s.get("delta"), Some("8"));
        assert!(Settings::parse("d 32").is_err());
        assert!(Settings::parse("colour = red").is_err());
    }

    #[test]
    fn overrides_win() {
        let mut s = settings(&[("d", "32"), ("seed", "1")]);
        s.merge(&settings(&[("seed", "7")]));
        assert_eq!(s.get("seed"), Some("7"));
        assert_eq!(s.get("d"), Some("32"));
    }

    #[test]
    fn band_invariants() {
        let ok = settings(&[("d", "32"), ("delta", "8"), ("gamma", "3")]);
        assert!(ExperimentConfig::from_settings(&ok).is_ok());
        for (k, v, field) in [("gamma", "9", "gamma"), ("delta", "32", "delta"), ("d2", "16", "d2")] {
            let mut s = ok.clone();
            s.set(k, v).unwrap();
            match ExperimentConfig::from_settings(&s) {
                Err(CliError::Usage { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn phase_method_needs_phase_object() {
        let mut s = settings(&[("d", "16"), ("delta", "4"), ("method", "phase")]);
        assert!(ExperimentConfig::from_settings(&s).is_err());
        s.set("object", "random-phase").unwrap();
        assert!(ExperimentConfig::from_settings(&s).is_ok());
        // reconstruct defers to the dataset unless told otherwise
        let mut r = settings(&[("in", "x"), ("method", "phase")]);
        assert!(!ReconstructConfig::from_settings(&r).unwrap().phase_declared);
        r.set("assume-phase", "true").unwrap();
        assert!(ReconstructConfig::from_settings(&r).unwrap().phase_declared);
    }

    #[test]
    fn object_names() {
        assert_eq!(
            ObjectChoice::parse("type2:1:0.7").unwrap(),
            ObjectChoice::Kind(ObjectKind::Type2 { m: 1, rho: 0.7 })
        );
        assert!(ObjectChoice::parse("modulation").is_err());
        assert!(ObjectChoice::parse("blob").is_err());
    }
}
