//! Experiment specification: flat key-value configuration files, command
//! line overrides, and the reverse serialisation.
//!
//! Precedence, lowest first: built-in defaults, the config file, the
//! `KSDUO_OUTPUT_DIR` environment variable (output directory only), then
//! command-line overrides.

use crate::model::{validate_params, ModelParams, PARAM_NAMES};
use crate::solver::{Advection, Scheme, SolverConfig};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;
use toml::{Table, Value};

pub const OUTPUT_DIR_ENV: &str = "KSDUO_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "ksduo-out";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("unknown key `{key}`")]
    UnknownKey { key: String },
    #[error("key `{key}` expects {expected}, found {found}")]
    TypeMismatch {
        key: String,
        expected: &'static str,
        found: String,
    },
    #[error("key `{key}`: {message}")]
    Constraint { key: String, message: String },
    #[error("override `{0}` is not of the form key=value")]
    BadOverride(String),
}

impl ConfigError {
    /// The configuration key the error is about, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey { key }
            | ConfigError::TypeMismatch { key, .. }
            | ConfigError::Constraint { key, .. } => Some(key),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Command {
    #[default]
    Table,
    Bifurcation,
    Simulate,
    Sweep,
    Analyze,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Table => "table",
            Command::Bifurcation => "bifurcation",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Analyze => "analyze",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        [
            Command::Table,
            Command::Bifurcation,
            Command::Simulate,
            Command::Sweep,
            Command::Analyze,
        ]
        .into_iter()
        .find(|c| c.as_str().eq_ignore_ascii_case(s))
        .ok_or(())
    }
}

/// Solver settings that a sweep may vary besides the model parameters.
pub const SWEEPABLE_SOLVER_KEYS: [&str; 4] = ["dx", "dt", "t_end", "steady_tol"];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub command: Command,
    pub params: ModelParams,
    pub solver: SolverConfig,
    /// Initial perturbation `amplitude * cos(wavenumber * pi * x)`.
    pub amplitude: f64,
    pub wavenumber: f64,
    /// Mode truncation for the critical-chi search.
    pub kmax: u32,
    /// Rows printed by `table` and `bifurcation`.
    pub rows: u32,
    pub sweep: Option<SweepAxis>,
    /// Also simulate each sweep point.
    pub sweep_simulate: bool,
    /// Worker threads for sweeps; 0 uses every available processor.
    pub workers: usize,
    pub output_dir: PathBuf,
    pub emit_plots: bool,
    /// Trajectory directory read by `analyze`.
    pub input_dir: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            command: Command::default(),
            params: ModelParams::default(),
            solver: SolverConfig::default(),
            amplitude: 0.01,
            wavenumber: 2.4,
            kmax: crate::linear_analysis::DEFAULT_KMAX,
            rows: 10,
            sweep: None,
            sweep_simulate: false,
            workers: 0,
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            emit_plots: false,
            input_dir: None,
        }
    }
}

fn type_name(v: &Value) -> String {
    match v {
        Value::String(s) => format!("string {s:?}"),
        Value::Integer(i) => format!("integer {i}"),
        Value::Float(x) => format!("float {x}"),
        Value::Boolean(b) => format!("boolean {b}"),
        Value::Datetime(_) => "datetime".into(),
        Value::Array(_) => "array".into(),
        Value::Table(_) => "table".into(),
    }
}

fn mismatch(key: &str, expected: &'static str, v: &Value) -> ConfigError {
    ConfigError::TypeMismatch {
        key: key.into(),
        expected,
        found: type_name(v),
    }
}

fn as_f64(key: &str, v: &Value) -> Result<f64, ConfigError> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(mismatch(key, "a number", v)),
    }
}

fn as_count(key: &str, v: &Value) -> Result<usize, ConfigError> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(mismatch(key, "a nonnegative integer", v)),
    }
}

fn as_bool(key: &str, v: &Value) -> Result<bool, ConfigError> {
    v.as_bool().ok_or_else(|| mismatch(key, "a boolean", v))
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str, ConfigError> {
    v.as_str().ok_or_else(|| mismatch(key, "a string", v))
}

fn enum_value<T>(key: &str, v: &Value, options: &[(&str, T)]) -> Result<T, ConfigError>
where
    T: Copy,
{
    let s = as_str(key, v)?;
    options
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(s))
        .map(|(_, t)| *t)
        .ok_or_else(|| ConfigError::Constraint {
            key: key.into(),
            message: format!(
                "`{s}` is not one of {}",
                options.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
            ),
        })
}

const SCHEMES: [(&str, Scheme); 2] = [("SemiImplicit", Scheme::SemiImplicit), ("Explicit", Scheme::Explicit)];
const ADVECTIONS: [(&str, Advection); 2] = [("Central", Advection::Central), ("Upwind", Advection::Upwind)];

impl ExperimentSpec {
    /// Applies one key. Unknown keys and wrongly typed values are errors
    /// naming the key.
    pub fn set(&mut self, key: &str, v: &Value) -> Result<(), ConfigError> {
        if PARAM_NAMES.contains(&key) {
            let x = as_f64(key, v)?;
            self.params.set(key, x);
            return Ok(());
        }
        let s = &mut self.solver;
        match key {
            "command" => {
                let name = as_str(key, v)?;
                self.command = name.parse().map_err(|_| ConfigError::Constraint {
                    key: key.into(),
                    message: format!("`{name}` is not one of table, bifurcation, simulate, sweep, analyze"),
                })?;
            }
            "dx" => s.dx = as_f64(key, v)?,
            "dt" => s.dt = as_f64(key, v)?,
            "t_end" => s.t_end = as_f64(key, v)?,
            "steady_tol" => s.steady_tol = as_f64(key, v)?,
            "blowup_ceiling" => s.blowup_ceiling = as_f64(key, v)?,
            "snapshot_every" => s.snapshot_every = as_count(key, v)?,
            "series_every" => s.series_every = as_count(key, v)?,
            "stop_when_steady" => s.stop_when_steady = as_bool(key, v)?,
            "scheme" => s.scheme = enum_value(key, v, &SCHEMES)?,
            "advection" => s.advection = enum_value(key, v, &ADVECTIONS)?,
            "amplitude" => self.amplitude = as_f64(key, v)?,
            "wavenumber" => self.wavenumber = as_f64(key, v)?,
            "kmax" => self.kmax = as_count(key, v)?.try_into().map_err(|_| mismatch(key, "a u32", v))?,
            "rows" => self.rows = as_count(key, v)?.try_into().map_err(|_| mismatch(key, "a u32", v))?,
            "sweep_axis" => {
                let name = as_str(key, v)?.to_string();
                self.sweep.get_or_insert_with(|| SweepAxis {
                    name: String::new(),
                    values: Vec::new(),
                });
                self.sweep.as_mut().expect("just inserted").name = name;
            }
            "sweep_values" => {
                let values = match v {
                    Value::Array(items) => items.iter().map(|x| as_f64(key, x)).collect::<Result<Vec<_>, _>>()?,
                    other => vec![as_f64(key, other)?],
                };
                self.sweep.get_or_insert_with(|| SweepAxis {
                    name: String::new(),
                    values: Vec::new(),
                });
                self.sweep.as_mut().expect("just inserted").values = values;
            }
            "sweep_simulate" => self.sweep_simulate = as_bool(key, v)?,
            "workers" => self.workers = as_count(key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(as_str(key, v)?),
            "emit_plots" => self.emit_plots = as_bool(key, v)?,
            "input_dir" => self.input_dir = Some(PathBuf::from(as_str(key, v)?)),
            _ => return Err(ConfigError::UnknownKey { key: key.into() }),
        }
        Ok(())
    }

    /// Every key with its current value, in canonical order.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new();
        let mut put = |k: &str, v: Value| {
            t.insert(k.to_string(), v);
        };
        put("command", Value::String(self.command.as_str().into()));
        for name in PARAM_NAMES {
            put(name, Value::Float(self.params.get(name).expect("known name")));
        }
        let s = &self.solver;
        put("dx", Value::Float(s.dx));
        put("dt", Value::Float(s.dt));
        put("t_end", Value::Float(s.t_end));
        put("scheme", Value::String(format!("{:?}", s.scheme)));
        put("advection", Value::String(format!("{:?}", s.advection)));
        put("snapshot_every", Value::Integer(s.snapshot_every as i64));
        put("series_every", Value::Integer(s.series_every as i64));
        put("steady_tol", Value::Float(s.steady_tol));
        put("stop_when_steady", Value::Boolean(s.stop_when_steady));
        put("blowup_ceiling", Value::Float(s.blowup_ceiling));
        put("amplitude", Value::Float(self.amplitude));
        put("wavenumber", Value::Float(self.wavenumber));
        put("kmax", Value::Integer(self.kmax.into()));
        put("rows", Value::Integer(self.rows.into()));
        if let Some(axis) = &self.sweep {
            put("sweep_axis", Value::String(axis.name.clone()));
            put(
                "sweep_values",
                Value::Array(axis.values.iter().map(|&x| Value::Float(x)).collect()),
            );
        }
        put("sweep_simulate", Value::Boolean(self.sweep_simulate));
        put("workers", Value::Integer(self.workers as i64));
        put("output_dir", Value::String(self.output_dir.to_string_lossy().into_owned()));
        put("emit_plots", Value::Boolean(self.emit_plots));
        if let Some(dir) = &self.input_dir {
            put("input_dir", Value::String(dir.to_string_lossy().into_owned()));
        }
        t
    }

    /// Config-file text that [`parse_config`] maps back to `self`.
    pub fn to_config_string(&self) -> String {
        toml::to_string(&self.to_table()).expect("flat table of scalars and arrays always serialises")
    }

    /// Checks the constraints the chosen command depends on.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let constraint = |key: &str, message: String| ConfigError::Constraint {
            key: key.into(),
            message,
        };
        match self.command {
            Command::Table | Command::Bifurcation | Command::Sweep | Command::Simulate => {
                // every command builds on the equilibrium, so all
                // conditions apply
                if let Some(v) = validate_params(&self.params).first() {
                    return Err(constraint(v.field, v.message.clone()));
                }
            }
            Command::Analyze => {
                if self.input_dir.is_none() {
                    return Err(constraint("input_dir", "analyze needs a trajectory directory".into()));
                }
            }
        }
        if self.kmax == 0 {
            return Err(constraint("kmax", "must be at least 1".into()));
        }
        if self.command == Command::Sweep {
            let Some(axis) = &self.sweep else {
                return Err(constraint("sweep_axis", "sweep needs sweep_axis and sweep_values".into()));
            };
            if !(PARAM_NAMES.contains(&axis.name.as_str()) || SWEEPABLE_SOLVER_KEYS.contains(&axis.name.as_str())) {
                return Err(constraint(
                    "sweep_axis",
                    format!("`{}` is not a model parameter or one of {SWEEPABLE_SOLVER_KEYS:?}", axis.name),
                ));
            }
            if axis.values.is_empty() {
                return Err(constraint("sweep_values", "must be nonempty".into()));
            }
        }
        Ok(())
    }

    /// The spec with the sweep axis set to `value`.
    pub fn at_sweep_value(&self, name: &str, value: f64) -> ExperimentSpec {
        let mut out = self.clone();
        if !out.params.set(name, value) {
            match name {
                "dx" => out.solver.dx = value,
                "dt" => out.solver.dt = value,
                "t_end" => out.solver.t_end = value,
                "steady_tol" => out.solver.steady_tol = value,
                _ => {}
            }
        }
        out
    }
}

/// Builds a spec from config text.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
    let mut spec = ExperimentSpec::default();
    apply_table(&mut spec, &table)?;
    Ok(spec)
}

fn apply_table(spec: &mut ExperimentSpec, table: &Table) -> Result<(), ConfigError> {
    for (key, value) in table {
        spec.set(key, value)?;
    }
    Ok(())
}

/// Parses a `key=value` override. The value is read as a config value when
/// possible and as a bare string otherwise, so `scheme=Explicit` works
/// without quotes.
pub fn parse_override(arg: &str) -> Result<(String, Value), ConfigError> {
    let (key, raw) = arg.split_once('=').ok_or_else(|| ConfigError::BadOverride(arg.into()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::BadOverride(arg.into()));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

/// Resolves a spec from an optional config file, the output-directory
/// environment override, and command-line overrides, then validates it.
pub fn load_config(
    path: Option<&Path>,
    env_output_dir: Option<&str>,
    overrides: &[(String, Value)],
) -> Result<ExperimentSpec, ConfigError> {
    let mut spec = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            parse_config(&text)?
        }
        None => ExperimentSpec::default(),
    };
    if let Some(dir) = env_output_dir.filter(|d| !d.is_empty()) {
        spec.output_dir = PathBuf::from(dir);
    }
    for (key, value) in overrides {
        spec.set(key, value)?;
    }
    spec.validate()?;
    Ok(spec)
}
