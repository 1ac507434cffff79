//! Configuration-driven experiment runner.
//!
//! Config files are flat `key = value` lines; `#` starts a comment.
//! Dimensioned keys need a unit suffix (`175 um`, `38ns`, `2.9719e5 /cm`).
//! Every key and its default is listed in [`KEYS`]; `defaults` prints them.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | bad command line |
//! | 3 | invalid configuration |
//! | 4 | file could not be read or written |
//! | 5 | inconsistent scene or phase matching |
//! | 6 | counting simulation error |
//! | 7 | map analysis error |

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::analysis::{self, summarize_rates, AnalysisError, TwoSpotFit};
use crate::biphoton::{BeamSize, Scene, SceneError, SceneParams};
use crate::counting::{
    calibrate_triple, simulate_scan, simulate_triple, CountingError, Detector, GateConfig,
    MeasuredRates, ScanGrid, ScanSetup, TripleDetectors, TripleModel,
};
use crate::map::{GridMap, MapError};
use crate::phasematch::{Crystal, PhaseMatchError};
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Scan,
    Triple,
    Analyze,
    Full,
}

impl std::str::FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "scan" => Ok(Experiment::Scan),
            "triple" => Ok(Experiment::Triple),
            "analyze" => Ok(Experiment::Analyze),
            "full" => Ok(Experiment::Full),
            other => Err(format!("unknown experiment '{other}'")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("line {line}: expected 'key = value'")]
    Syntax { line: usize },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: key '{key}' given twice")]
    Duplicate { key: String, line: usize },
    #[error("line {line}: '{key}' needs a unit ({expected})")]
    MissingUnit { key: String, line: usize, expected: &'static str },
    #[error("line {line}: '{key}': unknown unit '{unit}' ({expected})")]
    BadUnit { key: String, line: usize, unit: String, expected: &'static str },
    #[error("line {line}: '{key}': cannot parse '{value}'")]
    BadValue { key: String, line: usize, value: String },
    #[error("line {line}: '{key}' = {value} is out of range ({rule})")]
    OutOfRange { key: String, line: usize, value: f64, rule: &'static str },
    #[error("line {line}: '{key}' conflicts with '{other}'")]
    Conflict { key: String, other: &'static str, line: usize },
    #[error("no experiment selected: set 'experiment' or use a subcommand")]
    MissingExperiment,
    #[error("invalid scene: {0}")]
    Scene(#[from] SceneError),
    #[error("invalid setup: {0}")]
    Counting(#[from] CountingError),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(ConfigError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Map { path: PathBuf, source: MapError },
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Counting(CountingError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Scene(s) => CliError::Scene(s),
            other => CliError::Config(other),
        }
    }
}

impl From<CountingError> for CliError {
    fn from(e: CountingError) -> Self {
        match e {
            CountingError::Scene(s) => CliError::Scene(s),
            other => CliError::Counting(other),
        }
    }
}

impl From<PhaseMatchError> for CliError {
    fn from(e: PhaseMatchError) -> Self {
        CliError::Scene(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Read { .. }) => 4,
            CliError::Config(_) => 3,
            CliError::Io { .. } | CliError::Map { .. } => 4,
            CliError::Scene(_) => 5,
            CliError::Counting(_) => 6,
            CliError::Analysis(_) => 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Length,
    Time,
    Rate,
    Wavenumber,
    Angle,
    Real,
    Integer,
    Count,
    Text,
}

impl Kind {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Kind::Length => &[("nm", 1e-7), ("um", 1e-4), ("mm", 0.1), ("cm", 1.0), ("m", 100.0)],
            Kind::Time => &[("ps", 1e-12), ("ns", 1e-9), ("us", 1e-6), ("ms", 1e-3), ("s", 1.0)],
            Kind::Rate => &[("/s", 1.0), ("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9)],
            Kind::Wavenumber => &[("/um", 1e4), ("/mm", 10.0), ("/cm", 1.0), ("/m", 0.01)],
            Kind::Angle => &[("deg", std::f64::consts::PI / 180.0), ("rad", 1.0)],
            _ => &[],
        }
    }

    fn unit_list(self) -> &'static str {
        match self {
            Kind::Length => "nm, um, mm, cm, m",
            Kind::Time => "ps, ns, us, ms, s",
            Kind::Rate => "/s, Hz, kHz, MHz, GHz",
            Kind::Wavenumber => "/um, /mm, /cm, /m",
            Kind::Angle => "deg, rad",
            _ => "",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Range {
    Any,
    Positive,
    NonNegative,
    /// (0, 1]
    Efficiency,
}

impl Range {
    fn check(self, v: f64) -> Option<&'static str> {
        let ok = v.is_finite()
            && match self {
                Range::Any => true,
                Range::Positive => v > 0.0,
                Range::NonNegative => v >= 0.0,
                Range::Efficiency => v > 0.0 && v <= 1.0,
            };
        match (ok, self) {
            (true, _) => None,
            (false, Range::Any) => Some("must be finite"),
            (false, Range::Positive) => Some("must be > 0"),
            (false, Range::NonNegative) => Some("must be >= 0"),
            (false, Range::Efficiency) => Some("must be in (0, 1]"),
        }
    }
}

pub struct KeySpec {
    pub key: &'static str,
    pub kind: Kind,
    pub range: Range,
    /// Default in config syntax; `auto` means derived from other keys.
    pub default: &'static str,
    pub doc: &'static str,
}

const fn key(key: &'static str, kind: Kind, range: Range, default: &'static str, doc: &'static str) -> KeySpec {
    KeySpec { key, kind, range, default, doc }
}

pub const KEYS: &[KeySpec] = &[
    key("experiment", Kind::Text, Range::Any, "none", "scan | triple | analyze | full"),
    key("seed", Kind::Count, Range::Any, "1", "master random seed"),
    key("output.dir", Kind::Text, Range::Any, "out", "output directory, relative to the config file"),
    key("pump.l", Kind::Integer, Range::Any, "4", "pump topological charge"),
    key("pump.p", Kind::Count, Range::Any, "0", "pump radial index"),
    key("pump.z_r", Kind::Length, Range::Positive, "0.5 cm", "Rayleigh range in the crystal"),
    key("pump.w0", Kind::Length, Range::Positive, "auto", "waist in the crystal; replaces pump.z_r"),
    key("pump.lambda", Kind::Length, Range::Positive, "351.1 nm", "vacuum pump wavelength"),
    key("crystal.l_c", Kind::Length, Range::Positive, "2 mm", "BBO length"),
    key("crystal.n_s", Kind::Real, Range::Positive, "1.6648", "signal refractive index"),
    key("crystal.n_p", Kind::Real, Range::Positive, "1.66068", "pump refractive index"),
    key("crystal.cut_polar", Kind::Angle, Range::Any, "35.2 deg", "cut angle theta"),
    key("crystal.cut_azimuth", Kind::Angle, Range::Any, "90 deg", "cut angle phi"),
    key("scene.k_p", Kind::Wavenumber, Range::Positive, "2.9719e5 /cm", "pump wavevector in the crystal"),
    key("scene.k_s", Kind::Wavenumber, Range::Positive, "1.4897e5 /cm", "signal wavevector in the crystal"),
    key("scene.d", Kind::Length, Range::Positive, "auto", "crystal to detection plane; auto puts the ring at 3.7 cm"),
    key("detector.aperture", Kind::Length, Range::Positive, "175 um", "scanning and fixed detector aperture"),
    key("detector.efficiency", Kind::Real, Range::Efficiency, "1", "quantum efficiency of every detector"),
    key("detector.dark_rate", Kind::Rate, Range::NonNegative, "0 /s", "dark counts of every detector"),
    key("fixed.x", Kind::Length, Range::Any, "-3.7 cm", "fixed detector x"),
    key("fixed.y", Kind::Length, Range::Any, "0 cm", "fixed detector y"),
    key("grid.x_min", Kind::Length, Range::Any, "3.2 cm", "scan window"),
    key("grid.x_max", Kind::Length, Range::Any, "4.2 cm", "scan window"),
    key("grid.y_min", Kind::Length, Range::Any, "-1 cm", "scan window"),
    key("grid.y_max", Kind::Length, Range::Any, "1 cm", "scan window"),
    key("grid.step", Kind::Length, Range::Positive, "250 um", "scan step"),
    key("grid.dwell", Kind::Time, Range::NonNegative, "20 s", "dwell time per position"),
    key("scan.pair_rate", Kind::Rate, Range::NonNegative, "2.5e8 /s", "pairs emitted into the whole cone"),
    key("scan.background_rate", Kind::Rate, Range::NonNegative, "0 /s", "uncorrelated singles per detector"),
    key("gate.trigger", Kind::Time, Range::Positive, "5 ns", "coincidence gate of the scan"),
    key("gate.pulse_width", Kind::Time, Range::Positive, "38 ns", "trigger pulse width of the triple circuit"),
    key("gate.window", Kind::Time, Range::Positive, "76 ns", "accidental-rate window"),
    key("triple.model", Kind::Text, Range::Any, "quantum", "quantum | semiclassical"),
    key("triple.duration", Kind::Time, Range::NonNegative, "1e4 s", "acquisition time"),
    key("triple.aperture", Kind::Length, Range::Positive, "1 mm", "GRIN lens aperture"),
    key("triple.r_trig", Kind::Rate, Range::NonNegative, "564 /s", "target trigger rate"),
    key("triple.r_ctop", Kind::Rate, Range::NonNegative, "4.1 /s", "target top coincidence rate"),
    key("triple.r_cbot", Kind::Rate, Range::NonNegative, "2.7 /s", "target bottom coincidence rate"),
    key("triple.r_top", Kind::Rate, Range::NonNegative, "21479 /s", "target top singles rate"),
    key("triple.r_bot", Kind::Rate, Range::NonNegative, "22486 /s", "target bottom singles rate"),
    key("analyze.input", Kind::Text, Range::Any, "auto", "map to fit; auto uses output.dir/coincidence_map.csv"),
];

/// The `defaults` dump: every key with its default and a short note.
pub fn defaults_text() -> String {
    let width = KEYS.iter().map(|k| k.key.len() + k.default.len() + 3).max().unwrap_or(0);
    let mut out = String::from("# oam-spdc configuration keys and defaults\n");
    for k in KEYS {
        let line = format!("{} = {}", k.key, k.default);
        writeln!(out, "{line:<width$}  # {}", k.doc).unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Number(f64),
    Integer(i64),
    Count(u64),
    Text(String),
    Auto,
}

fn split_unit(raw: &str) -> (&str, &str) {
    let unit_start = raw
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_ascii_alphabetic() || *c == '/')
        .last()
        .map(|(i, _)| i)
        .unwrap_or(raw.len());
    (raw[..unit_start].trim(), raw[unit_start..].trim())
}

fn parse_value(spec: &KeySpec, raw: &str, line: usize) -> Result<Value, ConfigError> {
    let bad = || ConfigError::BadValue { key: spec.key.to_string(), line, value: raw.to_string() };
    if spec.kind == Kind::Text {
        return Ok(Value::Text(raw.to_string()));
    }
    if raw == "auto" && spec.default == "auto" {
        return Ok(Value::Auto);
    }
    let value = match spec.kind {
        Kind::Integer => Value::Integer(raw.parse().map_err(|_| bad())?),
        Kind::Count => Value::Count(raw.parse().map_err(|_| bad())?),
        Kind::Real => Value::Number(raw.parse().map_err(|_| bad())?),
        Kind::Text => unreachable!(),
        kind => {
            let (number, unit) = split_unit(raw);
            if unit.is_empty() {
                return Err(ConfigError::MissingUnit { key: spec.key.to_string(), line, expected: kind.unit_list() });
            }
            let factor = kind.units().iter().find(|(u, _)| *u == unit).map(|(_, f)| *f).ok_or_else(|| {
                ConfigError::BadUnit { key: spec.key.to_string(), line, unit: unit.to_string(), expected: kind.unit_list() }
            })?;
            let n: f64 = number.parse().map_err(|_| bad())?;
            Value::Number(n * factor)
        }
    };
    if let Value::Number(v) = value {
        if let Some(rule) = spec.range.check(v) {
            return Err(ConfigError::OutOfRange { key: spec.key.to_string(), line, value: v, rule });
        }
    }
    Ok(value)
}

/// Detector settings shared by every module in a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSettings {
    pub aperture: f64,
    pub efficiency: f64,
    pub dark_rate: f64,
}

impl DetectorSettings {
    pub fn at(&self, center: Point) -> Result<Detector, CountingError> {
        Detector::new(center, self.aperture, self.efficiency, self.dark_rate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripleSettings {
    pub model: TripleModel,
    pub duration: f64,
    pub aperture: f64,
    pub targets: MeasuredRates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub scene: SceneParams,
    pub detector: DetectorSettings,
    pub fixed: Point,
    pub grid: ScanGrid,
    pub pair_rate: f64,
    pub background_rate: f64,
    pub gates: GateConfig,
    pub triple: TripleSettings,
    pub analyze_input: Option<PathBuf>,
}

impl RunConfig {
    pub fn experiment(&self) -> Result<Experiment, ConfigError> {
        self.experiment.ok_or(ConfigError::MissingExperiment)
    }

    pub fn build_scene(&self) -> Result<Scene, SceneError> {
        Scene::new(self.scene)
    }

    pub fn scan_setup(&self) -> Result<ScanSetup, CountingError> {
        Ok(ScanSetup {
            fixed: self.detector.at(self.fixed)?,
            scanning: self.detector.at(Point::default())?,
            background_rate: self.background_rate,
        })
    }

    pub fn triple_detectors(&self, scene: &Scene) -> Result<TripleDetectors, CountingError> {
        let lenses = TripleDetectors::on_split_spots(scene, self.triple.aperture)?;
        let settings = DetectorSettings { aperture: self.triple.aperture, ..self.detector };
        TripleDetectors::new(
            settings.at(lenses.trig.center)?,
            settings.at(lenses.top.center)?,
            settings.at(lenses.bot.center)?,
        )
    }

    /// Map read by the analyze step.
    pub fn analyze_path(&self) -> PathBuf {
        self.analyze_input.clone().unwrap_or_else(|| self.output_dir.join("coincidence_map.csv"))
    }
}

/// Parses config text. Relative paths are resolved against `base`.
pub fn parse_config_str(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
    let specs: HashMap<&str, &KeySpec> = KEYS.iter().map(|k| (k.key, k)).collect();
    let mut given: HashMap<&str, (Value, usize)> = HashMap::new();
    for (index, raw_line) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let (k, v) = (k.trim(), v.trim());
        let spec = specs.get(k).ok_or_else(|| ConfigError::UnknownKey { key: k.to_string(), line })?;
        if given.contains_key(spec.key) {
            return Err(ConfigError::Duplicate { key: k.to_string(), line });
        }
        given.insert(spec.key, (parse_value(spec, v, line)?, line));
    }

    let get = |k: &str| -> Value {
        match given.get(k) {
            Some((v, _)) => v.clone(),
            None => {
                let spec = specs[k];
                parse_value(spec, spec.default, 0).expect("defaults parse")
            }
        }
    };
    let line_of = |k: &str| given.get(k).map(|(_, l)| *l).unwrap_or(0);
    let num = |k: &str| match get(k) {
        Value::Number(v) => v,
        other => unreachable!("{k} is {other:?}"),
    };
    let opt_num = |k: &str| match get(k) {
        Value::Number(v) => Some(v),
        _ => None,
    };
    let text_of = |k: &str| match get(k) {
        Value::Text(s) => s,
        other => unreachable!("{k} is {other:?}"),
    };
    let bad = |k: &str, v: String| ConfigError::BadValue { key: k.to_string(), line: line_of(k), value: v };

    let experiment = match text_of("experiment").as_str() {
        "none" => None,
        s => Some(s.parse::<Experiment>().map_err(|_| bad("experiment", s.to_string()))?),
    };
    let model = text_of("triple.model");
    let model = model.parse::<TripleModel>().map_err(|_| bad("triple.model", model.clone()))?;
    let seed = match get("seed") {
        Value::Count(s) => s,
        _ => unreachable!(),
    };
    let l = match get("pump.l") {
        Value::Integer(l) => i32::try_from(l).map_err(|_| bad("pump.l", l.to_string()))?,
        _ => unreachable!(),
    };
    let p = match get("pump.p") {
        Value::Count(p) => u32::try_from(p).map_err(|_| bad("pump.p", p.to_string()))?,
        _ => unreachable!(),
    };
    let beam = match opt_num("pump.w0") {
        Some(w0) => {
            if given.contains_key("pump.z_r") {
                return Err(ConfigError::Conflict { key: "pump.w0".into(), other: "pump.z_r", line: line_of("pump.w0") });
            }
            BeamSize::Waist(w0)
        }
        None => BeamSize::RayleighRange(num("pump.z_r")),
    };
    let crystal = Crystal::new(
        num("crystal.l_c"),
        num("crystal.n_s"),
        num("crystal.n_p"),
        num("crystal.cut_polar"),
        num("crystal.cut_azimuth"),
    )
    .map_err(SceneError::from)?;
    let scene = SceneParams {
        l,
        p,
        pump_wavelength: num("pump.lambda"),
        beam,
        crystal,
        k_pump: num("scene.k_p"),
        k_signal: num("scene.k_s"),
        detector_distance: opt_num("scene.d"),
    };
    let resolve = |s: String| {
        let path = PathBuf::from(s);
        if path.is_absolute() {
            path
        } else {
            base.join(path)
        }
    };
    let analyze_input = match text_of("analyze.input").as_str() {
        "auto" => None,
        s => Some(resolve(s.to_string())),
    };
    let config = RunConfig {
        experiment,
        seed,
        output_dir: resolve(text_of("output.dir")),
        scene,
        detector: DetectorSettings {
            aperture: num("detector.aperture"),
            efficiency: num("detector.efficiency"),
            dark_rate: num("detector.dark_rate"),
        },
        fixed: Point::new(num("fixed.x"), num("fixed.y")),
        grid: ScanGrid::new(
            num("grid.x_min"),
            num("grid.x_max"),
            num("grid.y_min"),
            num("grid.y_max"),
            num("grid.step"),
            num("grid.dwell"),
        )?,
        pair_rate: num("scan.pair_rate"),
        background_rate: num("scan.background_rate"),
        gates: GateConfig::new(num("gate.trigger"), num("gate.pulse_width"), Some(num("gate.window")))?,
        triple: TripleSettings {
            model,
            duration: num("triple.duration"),
            aperture: num("triple.aperture"),
            targets: MeasuredRates {
                r_trig: num("triple.r_trig"),
                r_ctop: num("triple.r_ctop"),
                r_cbot: num("triple.r_cbot"),
                r_top: num("triple.r_top"),
                r_bot: num("triple.r_bot"),
                r_triple: 0.0,
            },
        },
        analyze_input,
    };
    config.build_scene()?;
    Ok(config)
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::Read { path: path.to_path_buf(), message: e.to_string() })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base)
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io { path: path.to_path_buf(), message: e.to_string() };
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("output");
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

pub fn fit_report(fit: &TwoSpotFit, inferred_l: f64) -> String {
    let mut out = String::new();
    for (k, s) in fit.spots.iter().enumerate() {
        let n = k + 1;
        writeln!(out, "spot{n}_amplitude = {:.6e}", s.amplitude).unwrap();
        writeln!(out, "spot{n}_x_cm = {:.6e}", s.x).unwrap();
        writeln!(out, "spot{n}_y_cm = {:.6e}", s.y).unwrap();
        writeln!(out, "spot{n}_sigma_x_cm = {:.6e}", s.sigma_x).unwrap();
        writeln!(out, "spot{n}_sigma_y_cm = {:.6e}", s.sigma_y).unwrap();
    }
    writeln!(out, "offset = {:.6e}", fit.offset).unwrap();
    writeln!(out, "rss = {:.6e}", fit.rss).unwrap();
    writeln!(out, "iterations = {}", fit.iterations).unwrap();
    writeln!(out, "delta_y0_cm = {:.6e}", fit.delta_y0).unwrap();
    writeln!(out, "inferred_l = {inferred_l:.6e}").unwrap();
    writeln!(out, "rounded_l = {}", inferred_l.round() as i64).unwrap();
    out
}

/// Fits a map and infers the pump charge with the scene's geometry.
pub fn analyze_map(scene: &Scene, map: &GridMap) -> Result<(TwoSpotFit, f64), AnalysisError> {
    let fit = analysis::fit_two_spots(map)?;
    let l = analysis::infer_l_for_scene(scene, fit.delta_y0)?;
    Ok((fit, l))
}

fn run_scan(config: &RunConfig, scene: &Scene) -> Result<(GridMap, Vec<PathBuf>), CliError> {
    let result = simulate_scan(scene, &config.scan_setup()?, &config.grid, config.pair_rate, &config.gates, config.seed)?;
    let coincidences = result.coincidence_map();
    let a = config.output_dir.join("coincidence_map.csv");
    let b = config.output_dir.join("singles_map.csv");
    write_atomic(&a, &coincidences.to_csv())?;
    write_atomic(&b, &result.singles_map().to_csv())?;
    Ok((coincidences, vec![a, b]))
}

fn run_triple(config: &RunConfig, scene: &Scene) -> Result<PathBuf, CliError> {
    let detectors = config.triple_detectors(scene)?;
    let rates = calibrate_triple(&config.triple.targets, &detectors, &config.gates)?;
    let record = simulate_triple(
        config.triple.model,
        &rates,
        &detectors,
        &config.gates,
        config.triple.duration,
        config.seed,
    )?;
    let summary = summarize_rates(&record, config.gates.effective_window);
    let mut text = format!("model = {}\nduration_s = {:.6e}\n", config.triple.model, record.duration);
    text.push_str(&summary.to_report());
    let path = config.output_dir.join("rates.txt");
    write_atomic(&path, &text)?;
    Ok(path)
}

fn run_analyze(scene: &Scene, map: &GridMap, out_dir: &Path) -> Result<PathBuf, CliError> {
    let (fit, l) = analyze_map(scene, map)?;
    let path = out_dir.join("fit.txt");
    write_atomic(&path, &fit_report(&fit, l))?;
    Ok(path)
}

fn read_map(path: &Path) -> Result<GridMap, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    GridMap::from_csv(&text).map_err(|source| CliError::Map { path: path.to_path_buf(), source })
}

/// Runs the selected experiment and returns the files written.
pub fn run(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let experiment = config.experiment()?;
    let scene = config.build_scene()?;
    let mut written = Vec::new();
    match experiment {
        Experiment::Scan => written.extend(run_scan(config, &scene)?.1),
        Experiment::Triple => written.push(run_triple(config, &scene)?),
        Experiment::Analyze => {
            let map = read_map(&config.analyze_path())?;
            written.push(run_analyze(&scene, &map, &config.output_dir)?);
        }
        Experiment::Full => {
            let (map, files) = run_scan(config, &scene)?;
            written.extend(files);
            written.push(run_triple(config, &scene)?);
            written.push(run_analyze(&scene, &map, &config.output_dir)?);
        }
    }
    Ok(written)
}

#[derive(Debug, Parser)]
#[command(name = "oam-spdc", version, about = "Split-spot quantum images from an OAM-carrying pump")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Raster the scanning detector and write coincidence and singles maps
    Scan(RunArgs),
    /// Simulate the triple-coincidence experiment and write rates.txt
    Triple(RunArgs),
    /// Fit a coincidence map and infer the pump charge
    Analyze(RunArgs),
    /// Scan, triple and analyze in one run
    Full(RunArgs),
    /// Print every configuration key with its default
    Defaults,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides output.dir
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Executes a parsed command line; returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let (experiment, args) = match cli.command {
        Command::Defaults => {
            print!("{}", defaults_text());
            return 0;
        }
        Command::Scan(a) => (Experiment::Scan, a),
        Command::Triple(a) => (Experiment::Triple, a),
        Command::Analyze(a) => (Experiment::Analyze, a),
        Command::Full(a) => (Experiment::Full, a),
    };
    let result = parse_config(&args.config).map_err(CliError::from).and_then(|mut config| {
        config.experiment = Some(experiment);
        if let Some(seed) = args.seed {
            config.seed = seed;
        }
        if let Some(out) = args.out {
            config.output_dir = out;
        }
        run(&config)
    });
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
