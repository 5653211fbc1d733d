//! Batch front end behind the `depinn` binary: run configurations, verb
//! execution and artifact emission (JSON, CSV, SVG).
//!
//! A run is described by a [`RunConfig`] with a model block, one command
//! and an output block. Every JSON document carries `schema: 1` and the
//! resolved configuration.

mod args;
mod scan;
mod svg;
mod verbs;

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::model::{make_builtin, modify_band, verify_properties, BuiltinSpec, GeneratingFunction};

pub use args::{Cli, CliCommand};
pub use scan::{farey_grid, force_grid, scan_rows, ScanArgs, ScanRow, ScanVariable};
pub use svg::{write_scatter_svg, write_xy_svg};
pub use verbs::*;

/// Version of the JSON document layout.
pub const SCHEMA: u32 = 1;

/// Samples used by the model property check before a run.
const PROPERTY_SAMPLES: usize = 2000;

/// Which chain to build.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    Builtin(BuiltinSpec),
    /// `h = k (x' - x - a)^2 / 2 + Σ_j [c_j cos(2πjx) + s_j sin(2πjx)]`,
    /// with derivatives taken by finite differences.
    Fourier { k: f64, a: f64, cos: Vec<f64>, sin: Vec<f64> },
}

/// Model block: a builtin or Fourier chain, optionally extended beyond a
/// spacing band `[M, N]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub band_extension: Option<(i64, i64)>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self { kind: ModelKind::Builtin(BuiltinSpec::StandardFk { k: 1.0 }), band_extension: None }
    }
}

impl ModelSpec {
    pub fn builtin(spec: BuiltinSpec) -> Self {
        Self { kind: ModelKind::Builtin(spec), band_extension: None }
    }

    /// The builtin parameters, when the model is one.
    pub fn as_builtin(&self) -> Option<&BuiltinSpec> {
        match &self.kind {
            ModelKind::Builtin(b) => Some(b),
            ModelKind::Fourier { .. } => None,
        }
    }

    /// Builds the generating function without validation.
    pub fn build_unchecked(&self) -> Result<GeneratingFunction> {
        let h = match &self.kind {
            ModelKind::Builtin(spec) => make_builtin(spec)?,
            ModelKind::Fourier { k, a, cos, sin } => {
                if !(*k > 0.0) || !k.is_finite() {
                    return Err(Error::InvalidParameter(format!("fourier: k must be positive, got {k}")));
                }
                let (k, a) = (*k, *a);
                let cos = Arc::new(cos.clone());
                let sin = Arc::new(sin.clone());
                let two_pi = 2.0 * std::f64::consts::PI;
                GeneratingFunction::from_fn("fourier", k, crate::model::BUILTIN_BAND, move |x, xp| {
                    let d = xp - x - a;
                    let mut v = 0.5 * k * d * d;
                    for (j, c) in cos.iter().enumerate() {
                        v += c * (two_pi * (j + 1) as f64 * x).cos();
                    }
                    for (j, s) in sin.iter().enumerate() {
                        v += s * (two_pi * (j + 1) as f64 * x).sin();
                    }
                    v
                })?
            }
        };
        match self.band_extension {
            Some((m, n)) => modify_band(&h, m, n),
            None => Ok(h),
        }
    }

    /// Builds the generating function and checks periodicity, the twist
    /// bound and finiteness on a fixed sample.
    pub fn build(&self) -> Result<GeneratingFunction> {
        let h = self.build_unchecked()?;
        let report = verify_properties(&h, PROPERTY_SAMPLES);
        if !report.is_valid() {
            return Err(Error::InvalidParameter(format!(
                "model fails its property check: periodicity {:.2e}, min(-h12) {:.4} against c = {:.4}, {} non-finite samples",
                report.max_periodicity_violation, report.min_neg_h12, report.c, report.non_finite
            )));
        }
        Ok(h)
    }

    fn to_map(&self) -> Map<String, Value> {
        let mut map = match &self.kind {
            ModelKind::Builtin(spec) => match serde_json::to_value(spec) {
                Ok(Value::Object(m)) => m,
                _ => Map::new(),
            },
            ModelKind::Fourier { k, a, cos, sin } => {
                let v = json!({ "kind": "fourier", "k": k, "a": a, "cos": cos, "sin": sin });
                v.as_object().cloned().unwrap_or_default()
            }
        };
        if let Some((m, n)) = self.band_extension {
            map.insert("band_extension".into(), json!([m, n]));
        }
        map
    }

    fn from_map(mut map: Map<String, Value>) -> std::result::Result<Self, String> {
        let band_extension = match map.remove("band_extension") {
            None => None,
            Some(v) => Some(
                serde_json::from_value::<(i64, i64)>(v).map_err(|e| format!("band_extension: {e}"))?,
            ),
        };
        let kind_name = map.get("kind").and_then(Value::as_str).unwrap_or("").to_string();
        let kind = if kind_name == "fourier" {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Fourier {
                #[allow(dead_code)]
                kind: String,
                #[serde(default = "one")]
                k: f64,
                #[serde(default)]
                a: f64,
                #[serde(default)]
                cos: Vec<f64>,
                #[serde(default)]
                sin: Vec<f64>,
            }
            fn one() -> f64 {
                1.0
            }
            let f: Fourier = serde_json::from_value(Value::Object(map)).map_err(|e| format!("model: {e}"))?;
            ModelKind::Fourier { k: f.k, a: f.a, cos: f.cos, sin: f.sin }
        } else {
            ModelKind::Builtin(serde_json::from_value(Value::Object(map)).map_err(|e| format!("model: {e}"))?)
        };
        Ok(Self { kind, band_extension })
    }
}

impl Serialize for ModelSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_map().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let map = Map::<String, Value>::deserialize(d)?;
        Self::from_map(map).map_err(serde::de::Error::custom)
    }
}

/// Artifact formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            other => Err(Error::Config(format!("unknown format {other:?} (expected json, csv, svg)"))),
        }
    }
}

/// Where and how artifacts are written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    /// Artifact directory; without it only the JSON document on stdout is
    /// produced.
    pub dir: Option<PathBuf>,
    pub formats: Vec<Format>,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: None, formats: vec![Format::Json, Format::Csv], jobs: 0 }
    }
}

impl OutputBlock {
    pub fn wants(&self, f: Format) -> bool {
        self.dir.is_some() && self.formats.contains(&f)
    }
}

/// A complete run: model, one command, output settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSpec,
    pub command: Command,
    #[serde(default)]
    pub output: OutputBlock,
}

impl RunConfig {
    /// Parses a TOML document; syntax and schema errors are configuration
    /// errors.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

/// A file produced by a run.
#[derive(Clone, Debug, Serialize)]
pub struct Artifact {
    pub name: String,
    pub format: Format,
    #[serde(skip)]
    pub contents: String,
}

impl Artifact {
    pub fn csv(name: impl Into<String>, contents: String) -> Self {
        Self { name: name.into(), format: Format::Csv, contents }
    }

    pub fn svg(name: impl Into<String>, contents: String) -> Self {
        Self { name: name.into(), format: Format::Svg, contents }
    }
}

/// Result of one verb: a JSON value, a one-line summary and side files.
#[derive(Clone, Debug)]
pub struct VerbOutput {
    pub result: Value,
    pub summary: String,
    pub artifacts: Vec<Artifact>,
}

/// Outcome of [`execute`]: the JSON document and the files written.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub document: Value,
    pub summary: String,
    pub written: Vec<PathBuf>,
}

/// Validates the model, runs the command on a pool of `output.jobs`
/// workers and writes the requested artifacts.
pub fn execute(config: &RunConfig) -> Result<RunOutcome> {
    let h = config.model.build()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.output.jobs)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let out = pool.install(|| run_command(&config.command, &config.model, &h))?;
    let mut written = Vec::new();
    let files: Vec<&Artifact> = out.artifacts.iter().filter(|a| config.output.wants(a.format)).collect();
    let document = json!({
        "schema": SCHEMA,
        "verb": config.command.verb(),
        "config": config,
        "summary": out.summary,
        "result": out.result,
        "artifacts": files.iter().map(|a| a.name.clone()).collect::<Vec<_>>(),
    });
    if let Some(dir) = &config.output.dir {
        fs::create_dir_all(dir)?;
        for a in files {
            let path = dir.join(&a.name);
            fs::write(&path, &a.contents)?;
            written.push(path);
        }
        if config.output.formats.contains(&Format::Json) {
            let path = dir.join(format!("{}.json", config.command.verb()));
            fs::write(&path, to_pretty(&document))?;
            written.push(path);
        }
    }
    Ok(RunOutcome { document, summary: out.summary, written })
}

/// JSON document describing a failed run.
pub fn failure_document(config: Option<&RunConfig>, err: &Error) -> Value {
    json!({
        "schema": SCHEMA,
        "verb": config.map(|c| c.command.verb()),
        "config": config,
        "error": {
            "message": err.to_string(),
            "kind": error_kind(err),
            "exit_code": err.exit_code(),
        },
    })
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::InvalidParameter(_) => "invalid_parameter",
        Error::NonFinite { .. } => "non_finite",
        Error::InconsistentWindow(_) => "inconsistent_window",
        Error::BandEscape { .. } => "band_escape",
        Error::StepUnderflow { .. } => "step_underflow",
        Error::Newton(_) => "newton",
        Error::BracketExhausted(_) => "bracket_exhausted",
        Error::NotEquilibrium(_) => "not_equilibrium",
        Error::Consistency(_) => "consistency",
        Error::NoSolution(_) => "no_solution",
        Error::Undetermined(_) => "undetermined",
        Error::Config(_) => "config",
        Error::Io(_) => "io",
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialise");
    s.push('\n');
    s
}

pub(crate) fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialise to JSON")
}
