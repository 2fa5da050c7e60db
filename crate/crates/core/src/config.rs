//! Experiment configuration files.
//!
//! A config is a TOML document. Every key is optional; anything left out is
//! filled from per-experiment defaults, and keys the loader does not know
//! are reported together with their full paths.
//!
//! ```toml
//! experiment = "thermal_transport"
//! device = "paper-device"
//! F = [0, 15]
//! initial_state = "X+X+000"
//! t_max = 300
//! dt_sample = 2
//!
//! [noise]
//! kind = "lindblad"
//!
//! [shots]
//! n_shots = 2000
//! n_groups = 10
//! seed = 7
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::analysis::ExtractionMode;
use crate::dynamics::{DephasingModel, StateSpec, DEFAULT_LINDBLAD_STEP_NS, MAX_LINDBLAD_SITES};
use crate::error::{Error, Result};
use crate::measurement::ConfusionMatrix;
use crate::model::{DeviceParams, PAPER_DEVICE};

pub const DEFAULT_T_MAX_NS: f64 = 300.0;
pub const DEFAULT_DT_SAMPLE_NS: f64 = 2.0;
/// Upper bound on the number of sampled times per trajectory.
pub const MAX_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SpinTransport,
    WslScan,
    ThermalTransport,
    SpinCurrent,
    DecoherenceCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::SpinTransport,
        ExperimentKind::WslScan,
        ExperimentKind::ThermalTransport,
        ExperimentKind::SpinCurrent,
        ExperimentKind::DecoherenceCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SpinTransport => "spin_transport",
            ExperimentKind::WslScan => "wsl_scan",
            ExperimentKind::ThermalTransport => "thermal_transport",
            ExperimentKind::SpinCurrent => "spin_current",
            ExperimentKind::DecoherenceCheck => "decoherence_check",
        }
    }

    pub fn default_initial_state(self, n_sites: usize) -> String {
        let head = match self {
            ExperimentKind::ThermalTransport => "X+X+",
            _ => "1",
        };
        let used = if head == "1" { 1 } else { 2 };
        let mut s = String::from(head);
        s.extend(std::iter::repeat_n('0', n_sites.saturating_sub(used)));
        s
    }

    pub fn default_gradients_mhz(self) -> Vec<f64> {
        match self {
            ExperimentKind::SpinTransport | ExperimentKind::DecoherenceCheck => vec![0.0],
            ExperimentKind::WslScan => vec![5.0, 7.5, 10.0, 12.5, 15.0],
            ExperimentKind::ThermalTransport => vec![0.0, 15.0],
            ExperimentKind::SpinCurrent => vec![0.0, 10.0],
        }
    }

    /// Default shot budget per sampled time when shots are simulated.
    pub fn default_shots(self) -> (usize, usize) {
        match self {
            ExperimentKind::ThermalTransport => (2000, 10),
            _ => (600, 6),
        }
    }

    /// Whether the observables need two basis settings, each taking half the
    /// shot budget.
    pub fn splits_shots(self) -> bool {
        matches!(self, ExperimentKind::ThermalTransport | ExperimentKind::SpinCurrent)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().replace('-', "_");
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| {
                let names: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                Error::Usage(format!("unknown experiment `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    Ideal,
    Lindblad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub kind: NoiseMode,
    pub dephasing: DephasingModel,
    pub step_ns: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HamiltonianKind {
    Xy,
    BoseHubbard { fock_cutoff: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotConfig {
    /// Shots per sampled time, summed over basis settings.
    pub n_shots: usize,
    pub n_groups: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReadoutConfig {
    Perfect,
    /// Per-qubit fidelities taken from the device parameters.
    TableS1,
    Custom { f0: Vec<f64>, f1: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub extraction: ExtractionMode,
    /// Scale of the boundary-arrival localization length estimate.
    pub alpha: f64,
}

/// A fully resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub device_preset: Option<String>,
    pub device: DeviceParams,
    #[serde(rename = "F_mhz")]
    pub gradients_mhz: Vec<f64>,
    pub initial_state: String,
    pub t_max_ns: f64,
    pub dt_sample_ns: f64,
    pub hamiltonian: HamiltonianKind,
    pub noise: NoiseConfig,
    pub shots: Option<ShotConfig>,
    pub readout: ReadoutConfig,
    pub readout_correction: bool,
    pub analysis: AnalysisConfig,
    pub output_dir: PathBuf,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<ExperimentKind>,
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults for `kind` on the named preset device.
    pub fn defaults(kind: ExperimentKind, preset: &str) -> Result<Self> {
        let device = DeviceParams::preset(preset)?;
        let mut cfg = Self::for_device(kind, device);
        cfg.device_preset = Some(preset.to_string());
        Ok(cfg)
    }

    /// Defaults for `kind` on an explicit device; ideal noise, no shots.
    pub fn for_device(kind: ExperimentKind, device: DeviceParams) -> Self {
        let noise = match kind {
            ExperimentKind::DecoherenceCheck => NoiseMode::Lindblad,
            _ => NoiseMode::Ideal,
        };
        let analysis = AnalysisConfig {
            extraction: ExtractionMode::RawWavefront,
            alpha: 1.0,
        };
        ExperimentConfig {
            experiment: kind,
            device_preset: None,
            initial_state: kind.default_initial_state(device.n_qubits),
            device,
            gradients_mhz: kind.default_gradients_mhz(),
            t_max_ns: DEFAULT_T_MAX_NS,
            dt_sample_ns: DEFAULT_DT_SAMPLE_NS,
            hamiltonian: HamiltonianKind::Xy,
            noise: NoiseConfig {
                kind: noise,
                dephasing: DephasingModel::default(),
                step_ns: DEFAULT_LINDBLAD_STEP_NS,
            },
            shots: None,
            readout: ReadoutConfig::TableS1,
            readout_correction: false,
            analysis,
            output_dir: PathBuf::from("out"),
        }
    }

    /// Loads a config file's text, applies overrides and validates.
    pub fn from_toml_str(text: &str, overrides: &Overrides) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        resolve(table, overrides)
    }

    /// A config built from overrides and defaults alone.
    pub fn from_overrides(overrides: &Overrides) -> Result<Self> {
        resolve(Table::new(), overrides)
    }

    pub fn n_sites(&self) -> usize {
        self.device.n_qubits
    }

    pub fn state_spec(&self) -> Result<StateSpec> {
        StateSpec::parse(&self.initial_state)
    }

    /// Sampling grid 0, dt, 2dt, … up to and including t_max.
    pub fn times(&self) -> Vec<f64> {
        let n = (self.t_max_ns / self.dt_sample_ns + 1e-9).floor() as usize + 1;
        (0..n).map(|k| k as f64 * self.dt_sample_ns).collect()
    }

    pub fn confusion(&self) -> Vec<ConfusionMatrix> {
        match &self.readout {
            ReadoutConfig::Perfect => ConfusionMatrix::perfect_set(self.n_sites()),
            ReadoutConfig::TableS1 => ConfusionMatrix::from_device(&self.device),
            ReadoutConfig::Custom { f0, f1 } => f0
                .iter()
                .zip(f1)
                .map(|(&f0, &f1)| ConfusionMatrix { f0, f1 })
                .collect(),
        }
    }

    /// Shots actually drawn: only Lindblad runs are sampled.
    pub fn active_shots(&self) -> Option<ShotConfig> {
        match self.noise.kind {
            NoiseMode::Lindblad => self.shots,
            NoiseMode::Ideal => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_max_ns.is_finite() && self.t_max_ns > 0.0) {
            return Err(Error::validation("t_max", format!("must be > 0, got {}", self.t_max_ns)));
        }
        if !(self.dt_sample_ns.is_finite() && self.dt_sample_ns > 0.0) {
            return Err(Error::validation("dt_sample", format!("must be > 0, got {}", self.dt_sample_ns)));
        }
        if self.dt_sample_ns > self.t_max_ns {
            return Err(Error::validation("dt_sample", format!("must be ≤ t_max = {}", self.t_max_ns)));
        }
        if self.t_max_ns / self.dt_sample_ns > MAX_SAMPLES as f64 {
            return Err(Error::validation("dt_sample", format!("more than {MAX_SAMPLES} samples requested")));
        }
        if self.gradients_mhz.is_empty() {
            return Err(Error::validation("F", "needs at least one gradient"));
        }
        for (i, f) in self.gradients_mhz.iter().enumerate() {
            if !f.is_finite() {
                return Err(Error::validation(format!("F[{i}]"), format!("must be finite, got {f}")));
            }
            if self.experiment == ExperimentKind::WslScan && *f < 0.0 {
                return Err(Error::validation(format!("F[{i}]"), format!("scan gradients must be ≥ 0, got {f}")));
            }
        }
        self.device.validate().map_err(|e| match e {
            Error::Validation { path, message } => Error::validation(path, message),
            other => Error::validation("device", other.to_string()),
        })?;
        let spec = StateSpec::parse(&self.initial_state).map_err(|e| Error::validation("initial_state", e.to_string()))?;
        if spec.n_sites() != self.n_sites() {
            return Err(Error::validation(
                "initial_state",
                format!("has {} sites but the device has {}", spec.n_sites(), self.n_sites()),
            ));
        }
        let lindblad = self.noise.kind == NoiseMode::Lindblad;
        if !(self.noise.step_ns.is_finite() && self.noise.step_ns > 0.0) {
            return Err(Error::validation("noise.step_ns", format!("must be > 0, got {}", self.noise.step_ns)));
        }
        if lindblad && self.n_sites() > MAX_LINDBLAD_SITES {
            return Err(Error::validation(
                "noise.kind",
                format!("lindblad evolution supports at most {MAX_LINDBLAD_SITES} qubits"),
            ));
        }
        if self.experiment == ExperimentKind::DecoherenceCheck && !lindblad {
            return Err(Error::validation("noise.kind", "decoherence_check compares against lindblad evolution"));
        }
        if let HamiltonianKind::BoseHubbard { fock_cutoff } = self.hamiltonian {
            if !(2..=8).contains(&fock_cutoff) {
                return Err(Error::validation("hamiltonian.fock_cutoff", format!("must be in 2..=8, got {fock_cutoff}")));
            }
            if lindblad {
                return Err(Error::validation("hamiltonian.kind", "bose-hubbard runs are unitary only"));
            }
            if !matches!(self.experiment, ExperimentKind::SpinTransport | ExperimentKind::WslScan) {
                return Err(Error::validation(
                    "hamiltonian.kind",
                    format!("bose-hubbard is not available for {}", self.experiment),
                ));
            }
            if spec.excitation_number().is_none() {
                return Err(Error::validation("initial_state", "bose-hubbard runs need a Fock initial state"));
            }
        }
        if let Some(shots) = self.shots {
            if !lindblad {
                return Err(Error::validation("shots", "shots are only simulated for lindblad runs"));
            }
            if shots.n_shots == 0 {
                return Err(Error::validation("shots.n_shots", "must be positive"));
            }
            if shots.n_groups == 0 {
                return Err(Error::validation("shots.n_groups", "must be positive"));
            }
            let per_setting = if self.experiment.splits_shots() {
                if shots.n_shots % 2 != 0 {
                    return Err(Error::validation("shots.n_shots", "must be even: it is split over two basis settings"));
                }
                shots.n_shots / 2
            } else {
                shots.n_shots
            };
            if per_setting % shots.n_groups != 0 {
                return Err(Error::validation(
                    "shots.n_groups",
                    format!("{per_setting} shots per setting do not divide into {} groups", shots.n_groups),
                ));
            }
        }
        if let ReadoutConfig::Custom { f0, f1 } = &self.readout {
            for (name, list) in [("f0", f0), ("f1", f1)] {
                if list.len() != self.n_sites() {
                    return Err(Error::validation(
                        format!("readout.{name}"),
                        format!("needs {} entries, got {}", self.n_sites(), list.len()),
                    ));
                }
                if let Some(i) = list.iter().position(|x| !(0.0..=1.0).contains(x)) {
                    return Err(Error::validation(format!("readout.{name}[{i}]"), "must lie in [0, 1]"));
                }
            }
        }
        if self.readout_correction {
            for (i, c) in self.confusion().iter().enumerate() {
                if c.inverse().is_err() {
                    return Err(Error::validation(
                        "readout_correction",
                        format!("confusion matrix of qubit {} is singular", i + 1),
                    ));
                }
            }
        }
        if !(self.analysis.alpha.is_finite() && self.analysis.alpha > 0.0) {
            return Err(Error::validation("analysis.alpha", "must be > 0"));
        }
        Ok(())
    }
}

/// Reads values out of a TOML table, removing each key it consumes so the
/// leftovers can be reported as unknown.
struct Section {
    path: String,
    table: Table,
}

impl Section {
    fn new(path: impl Into<String>, table: Table) -> Self {
        Section {
            path: path.into(),
            table,
        }
    }

    fn key_path(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn take(&mut self, key: &str) -> Option<(String, Value)> {
        self.table.remove(key).map(|v| (self.key_path(key), v))
    }

    fn finish(self, unknown: &mut Vec<String>) {
        unknown.extend(self.table.keys().map(|k| {
            if self.path.is_empty() {
                k.clone()
            } else {
                format!("{}.{k}", self.path)
            }
        }));
    }
}

fn type_error(path: &str, expected: &str, got: &Value) -> Error {
    Error::validation(path, format!("expected {expected}, found {}", got.type_str()))
}

fn as_f64(path: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Integer(i) => Ok(*i as f64),
        Value::Float(f) => Ok(*f),
        other => Err(type_error(path, "a number", other)),
    }
}

fn as_u64(path: &str, v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        Value::Integer(i) => Err(Error::validation(path, format!("must be ≥ 0, got {i}"))),
        other => Err(type_error(path, "a non-negative integer", other)),
    }
}

fn as_str<'a>(path: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| type_error(path, "a string", v))
}

fn as_bool(path: &str, v: &Value) -> Result<bool> {
    v.as_bool().ok_or_else(|| type_error(path, "a boolean", v))
}

fn as_f64_list(path: &str, v: &Value) -> Result<Vec<f64>> {
    match v {
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, x)| as_f64(&format!("{path}[{i}]"), x))
            .collect(),
        scalar => Ok(vec![as_f64(path, scalar)?]),
    }
}

fn parse_enum<T: for<'de> Deserialize<'de>>(path: &str, v: &Value, expected: &str) -> Result<T> {
    let s = as_str(path, v)?;
    T::deserialize(Value::String(s.to_string()))
        .map_err(|_| Error::validation(path, format!("unknown value `{s}` (expected {expected})")))
}

/// A value that is either a bare kind string or a table with a `kind` key.
fn kinded(path: &str, v: Value) -> Result<(String, Section)> {
    match v {
        Value::String(s) => Ok((s, Section::new(path, Table::new()))),
        Value::Table(t) => {
            let mut sec = Section::new(path, t);
            match sec.take("kind") {
                Some((p, k)) => Ok((as_str(&p, &k)?.to_string(), sec)),
                None => Ok((String::new(), sec)),
            }
        }
        other => Err(type_error(path, "a string or table", &other)),
    }
}

fn resolve(table: Table, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut unknown = Vec::new();
    let mut root = Section::new("", table);

    let file_kind = match root.take("experiment") {
        Some((p, v)) => Some(as_str(&p, &v)?.parse::<ExperimentKind>()?),
        None => None,
    };
    let kind = match (overrides.experiment, file_kind) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::Usage(format!(
                "config declares experiment `{b}` but `{a}` was requested"
            )))
        }
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => return Err(Error::Usage("no experiment given".into())),
    };

    let (preset, device) = resolve_device(root.take("device"), overrides, &mut unknown)?;
    let mut cfg = ExperimentConfig::for_device(kind, device);
    cfg.device_preset = preset;

    if let Some((p, v)) = root.take("F") {
        cfg.gradients_mhz = as_f64_list(&p, &v)?;
    }
    if let Some((p, v)) = root.take("initial_state") {
        cfg.initial_state = as_str(&p, &v)?.to_string();
    }
    if let Some((p, v)) = root.take("t_max") {
        cfg.t_max_ns = as_f64(&p, &v)?;
    }
    if let Some((p, v)) = root.take("dt_sample") {
        cfg.dt_sample_ns = as_f64(&p, &v)?;
    }
    if let Some((p, v)) = root.take("hamiltonian") {
        let (k, mut sec) = kinded(&p, v)?;
        let cutoff = match sec.take("fock_cutoff") {
            Some((p, v)) => Some(as_u64(&p, &v)? as usize),
            None => None,
        };
        cfg.hamiltonian = match k.as_str() {
            "" | "xy" if cutoff.is_none() => HamiltonianKind::Xy,
            "" | "bose-hubbard" => HamiltonianKind::BoseHubbard {
                fock_cutoff: cutoff.unwrap_or(3),
            },
            "xy" => {
                return Err(Error::validation(
                    format!("{p}.fock_cutoff"),
                    "only applies to bose-hubbard",
                ))
            }
            other => {
                return Err(Error::validation(
                    format!("{p}.kind"),
                    format!("unknown value `{other}` (expected xy or bose-hubbard)"),
                ))
            }
        };
        sec.finish(&mut unknown);
    }
    if let Some((p, v)) = root.take("noise") {
        let (k, mut sec) = kinded(&p, v)?;
        if !k.is_empty() {
            cfg.noise.kind = parse_enum(&format!("{p}.kind"), &Value::String(k), "ideal or lindblad")?;
        }
        if let Some((p, v)) = sec.take("dephasing") {
            cfg.noise.dephasing = parse_enum(&p, &v, "t2-star or pure")?;
        }
        if let Some((p, v)) = sec.take("step_ns") {
            cfg.noise.step_ns = as_f64(&p, &v)?;
        }
        sec.finish(&mut unknown);
    }
    let mut explicit_shots = false;
    if let Some((p, v)) = root.take("shots") {
        match v {
            Value::String(s) if s == "none" => cfg.shots = None,
            Value::Table(t) => {
                let mut sec = Section::new(p, t);
                let (n, g) = kind.default_shots();
                let mut shots = ShotConfig {
                    n_shots: n,
                    n_groups: g,
                    seed: 0,
                };
                if let Some((p, v)) = sec.take("n_shots") {
                    shots.n_shots = as_u64(&p, &v)? as usize;
                }
                if let Some((p, v)) = sec.take("n_groups") {
                    shots.n_groups = as_u64(&p, &v)? as usize;
                }
                if let Some((p, v)) = sec.take("seed") {
                    shots.seed = as_u64(&p, &v)?;
                }
                sec.finish(&mut unknown);
                cfg.shots = Some(shots);
                explicit_shots = true;
            }
            other => return Err(type_error(&p, "\"none\" or a table", &other)),
        }
    } else if cfg.noise.kind == NoiseMode::Lindblad {
        let (n, g) = kind.default_shots();
        cfg.shots = Some(ShotConfig {
            n_shots: n,
            n_groups: g,
            seed: 0,
        });
    }
    if let Some((p, v)) = root.take("readout") {
        let (k, mut sec) = kinded(&p, v)?;
        cfg.readout = match k.as_str() {
            "perfect" => ReadoutConfig::Perfect,
            "table-s1" => ReadoutConfig::TableS1,
            "custom" => {
                let mut list = |key: &str| match sec.take(key) {
                    Some((p, v)) => as_f64_list(&p, &v),
                    None => Err(Error::validation(sec.key_path(key), "required for custom readout")),
                };
                let f0 = list("f0")?;
                let f1 = list("f1")?;
                ReadoutConfig::Custom { f0, f1 }
            }
            other => {
                return Err(Error::validation(
                    format!("{p}.kind"),
                    format!("unknown value `{other}` (expected perfect, table-s1 or custom)"),
                ))
            }
        };
        sec.finish(&mut unknown);
    }
    if let Some((p, v)) = root.take("readout_correction") {
        cfg.readout_correction = as_bool(&p, &v)?;
    }
    let mut explicit_extraction = false;
    if let Some((p, v)) = root.take("analysis") {
        let Value::Table(t) = v else {
            return Err(type_error(&p, "a table", &v));
        };
        let mut sec = Section::new(p, t);
        if let Some((p, v)) = sec.take("extraction") {
            cfg.analysis.extraction = parse_enum(&p, &v, "gaussian-fit or raw-wavefront")?;
            explicit_extraction = true;
        }
        if let Some((p, v)) = sec.take("alpha") {
            cfg.analysis.alpha = as_f64(&p, &v)?;
        }
        sec.finish(&mut unknown);
    }
    if !explicit_extraction && cfg.noise.kind == NoiseMode::Lindblad {
        cfg.analysis.extraction = ExtractionMode::GaussianFit;
    }
    if let Some((p, v)) = root.take("output_dir") {
        cfg.output_dir = PathBuf::from(as_str(&p, &v)?);
    }
    root.finish(&mut unknown);
    if !unknown.is_empty() {
        unknown.sort();
        return Err(Error::UnknownKeys(unknown));
    }

    if let Some(seed) = overrides.seed {
        if let Some(s) = cfg.shots.as_mut() {
            s.seed = seed;
        }
    }
    if let Some(dir) = &overrides.output_dir {
        cfg.output_dir = dir.clone();
    }
    if !explicit_shots && cfg.noise.kind == NoiseMode::Ideal {
        cfg.shots = None;
    }
    cfg.validate()?;
    Ok(cfg)
}

const DEVICE_FIELDS: [&str; 6] = [
    "couplings_mhz",
    "anharmonicity_mhz",
    "t1_us",
    "t2_star_us",
    "readout_f0",
    "readout_f1",
];

fn resolve_device(
    entry: Option<(String, Value)>,
    overrides: &Overrides,
    unknown: &mut Vec<String>,
) -> Result<(Option<String>, DeviceParams)> {
    let from_preset = |name: &str, path: &str| {
        DeviceParams::preset(name).map_err(|e| Error::validation(path, e.to_string()))
    };
    let Some((path, value)) = entry else {
        let name = overrides.preset.clone().unwrap_or_else(|| PAPER_DEVICE.to_string());
        let device = from_preset(&name, "device")?;
        return Ok((Some(name), device));
    };
    match value {
        Value::String(name) => {
            let name = overrides.preset.clone().unwrap_or(name);
            let device = from_preset(&name, &path)?;
            Ok((Some(name), device))
        }
        Value::Table(t) => {
            let mut sec = Section::new(path.clone(), t);
            let preset = match sec.take("preset") {
                Some((p, v)) => Some(as_str(&p, &v)?.to_string()),
                None => None,
            }
            .or_else(|| overrides.preset.clone());
            let mut fields = Table::new();
            if let Some(name) = &preset {
                let base = from_preset(name, &format!("{path}.preset"))?;
                let Value::Table(t) = Value::try_from(&base).expect("device serializes") else {
                    unreachable!("device serializes to a table");
                };
                fields = t;
            }
            let n_override = sec.take("n_qubits");
            for key in DEVICE_FIELDS {
                if let Some((_, v)) = sec.take(key) {
                    fields.insert(key.to_string(), v);
                }
            }
            if let Some((p, v)) = n_override {
                let n = as_u64(&p, &v)? as usize;
                fields.insert("n_qubits".into(), Value::Integer(n as i64));
                if preset.is_some() {
                    truncate_fields(&mut fields, n, &p)?;
                }
            }
            sec.finish(unknown);
            for key in std::iter::once("n_qubits").chain(DEVICE_FIELDS) {
                if !fields.contains_key(key) {
                    return Err(Error::validation(format!("{path}.{key}"), "missing (no preset given)"));
                }
            }
            let device: DeviceParams = Value::Table(fields)
                .try_into()
                .map_err(|e: toml::de::Error| Error::validation(path.clone(), e.message().to_string()))?;
            Ok((preset, device))
        }
        other => Err(type_error(&path, "a preset name or table", &other)),
    }
}

/// Cuts preset lists down when `n_qubits` selects a prefix of the device.
fn truncate_fields(fields: &mut Table, n: usize, path: &str) -> Result<()> {
    for key in DEVICE_FIELDS {
        if let Some(Value::Array(items)) = fields.get_mut(key) {
            let want = if key == "couplings_mhz" { n.saturating_sub(1) } else { n };
            if items.len() < want {
                return Err(Error::validation(
                    path,
                    format!("preset has only {} entries for {key}", items.len()),
                ));
            }
            items.truncate(want);
        }
    }
    Ok(())
}
