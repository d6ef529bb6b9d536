use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ksduo::acceptance;
use ksduo::config::{load_config, parse_override, Command, ConfigError, OUTPUT_DIR_ENV};
use ksduo::experiment::{run_experiment, ExperimentError, EXIT_ACCEPTANCE, EXIT_IO, EXIT_OK};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use toml::Value;

/// Stability tables, bifurcation coefficients and simulations for a
/// two-species chemotaxis-competition system.
#[derive(Parser)]
#[command(name = "ksduo", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Thresholds chi_tilde, chi_hat per mode and the critical chi0.
    Table(Common),
    /// Bifurcation coefficients K2 and local branch stability per mode.
    Bifurcation(Common),
    /// Time integration from the perturbed equilibrium.
    Simulate(Common),
    /// One row per value of a parameter axis, computed in parallel.
    Sweep(Common),
    /// Summarise a trajectory directory written by `simulate`.
    Analyze(Common),
    /// Run the acceptance suite; exits 4 if any check fails.
    Selftest {
        /// Print results as JSON lines.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Flat key-value config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config file and KSDUO_OUTPUT_DIR.
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
    /// Trajectory directory (analyze only).
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    plots: bool,
    /// Sweep worker threads; 0 means all processors.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    d1: Option<f64>,
    #[arg(long)]
    d2: Option<f64>,
    #[arg(long)]
    chi: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    mu1: Option<f64>,
    #[arg(long)]
    mu2: Option<f64>,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Interval length.
    #[arg(short = 'L', long = "L")]
    length: Option<f64>,
    /// Any config key, as key=value (repeatable).
    #[arg(value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn overrides(&self, command: Command) -> Result<Vec<(String, Value)>, ConfigError> {
        let mut out = vec![("command".to_string(), Value::String(command.as_str().into()))];
        for arg in &self.set {
            out.push(parse_override(arg)?);
        }
        let params = [
            ("d1", self.d1),
            ("d2", self.d2),
            ("chi", self.chi),
            ("xi", self.xi),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("a1", self.a1),
            ("a2", self.a2),
            ("lambda", self.lambda),
            ("L", self.length),
        ];
        out.extend(params.iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), Value::Float(v)))));
        let path = |p: &PathBuf| Value::String(p.to_string_lossy().into_owned());
        if let Some(dir) = &self.output_dir {
            out.push(("output_dir".into(), path(dir)));
        }
        if let Some(dir) = &self.input {
            out.push(("input_dir".into(), path(dir)));
        }
        if self.plots {
            out.push(("emit_plots".into(), Value::Boolean(true)));
        }
        if let Some(n) = self.workers {
            out.push(("workers".into(), Value::Integer(n as i64)));
        }
        Ok(out)
    }
}

fn report_error(kind: &str, key: Option<String>, message: String, code: i32) -> ExitCode {
    let record = json!({ "error": kind, "key": key, "message": message, "exit_code": code });
    eprintln!("{record}");
    ExitCode::from(code as u8)
}

fn run(common: &Common, command: Command) -> anyhow::Result<ExitCode> {
    let env_dir = std::env::var(OUTPUT_DIR_ENV).ok();
    let overrides = match common.overrides(command) {
        Ok(o) => o,
        Err(e) => return Ok(fail(ExperimentError::Config(e))),
    };
    let spec = match load_config(common.config.as_deref(), env_dir.as_deref(), &overrides) {
        Ok(s) => s,
        Err(e) => return Ok(fail(ExperimentError::Config(e))),
    };
    log::info!("running {} into {}", spec.command, spec.output_dir.display());
    let outcome = match run_experiment(&spec) {
        Ok(o) => o,
        Err(e) => return Ok(fail(e)),
    };
    // keep the resolved spec next to the outputs so the run can be repeated
    let resolved = spec.output_dir.join("config.toml");
    std::fs::write(&resolved, spec.to_config_string())
        .with_context(|| format!("writing {}", resolved.display()))?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    for msg in &outcome.numerical_failures {
        let _ = report_error("numerical", None, msg.clone(), outcome.exit_code());
    }
    Ok(ExitCode::from(outcome.exit_code() as u8))
}

fn fail(e: ExperimentError) -> ExitCode {
    report_error(e.kind(), e.key(), e.to_string(), e.exit_code())
}

fn selftest(json_lines: bool) -> ExitCode {
    let results = acceptance::run_all();
    for r in &results {
        if json_lines {
            println!("{}", serde_json::to_string(r).expect("plain struct serialises"));
        } else {
            println!("{r}");
        }
    }
    if results.iter().all(|r| r.passed) {
        ExitCode::from(EXIT_OK as u8)
    } else {
        ExitCode::from(EXIT_ACCEPTANCE as u8)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (common, command) = match &cli.command {
        Sub::Selftest { json } => return selftest(*json),
        Sub::Table(c) => (c, Command::Table),
        Sub::Bifurcation(c) => (c, Command::Bifurcation),
        Sub::Simulate(c) => (c, Command::Simulate),
        Sub::Sweep(c) => (c, Command::Sweep),
        Sub::Analyze(c) => (c, Command::Analyze),
    };
    match run(common, command) {
        Ok(code) => code,
        Err(e) => report_error("io", None, format!("{e:#}"), EXIT_IO),
    }
}
