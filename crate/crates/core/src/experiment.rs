//! Runs a resolved [`ExperimentSpec`] and writes its CSV (and optional SVG)
//! outputs. Every numeric cell goes through [`fmt_num`], and sweeps merge
//! their results in axis order, so identical specs give identical files.

use crate::bifurcation::{branch_info, BifurcationError};
use crate::config::{Command, ConfigError, ExperimentSpec};
use crate::diagnostics::{
    check_mass_bound, count_spikes, detect_period, dominant_mode, mode_amplitudes, rms_spectrum, DiagnosticsError,
    PeriodOptions, PeriodVerdict,
};
use crate::linear_analysis::{chi_hat, chi_tilde, critical_chi, AnalysisError, ModeWavenumber, StabilityReport};
use crate::model::{compute_equilibrium, ModelError, ModelParams};
use crate::output::{fmt_num, line_plot, Series};
use crate::solver::{initial_state, run, Grid, SeriesSample, SolverError, State, Termination, Trajectory};
use rayon::prelude::*;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ACCEPTANCE: i32 = 4;

/// Highest mode resolved by the diagnostics.
pub const DIAGNOSTIC_KCUT: usize = 20;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Bifurcation(#[from] BifurcationError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error("plot {}: {message}", path.display())]
    Plot { path: PathBuf, message: String },
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) | ExperimentError::Model(_) | ExperimentError::Analysis(_) => EXIT_CONFIG,
            ExperimentError::Diagnostics(_) => EXIT_CONFIG,
            ExperimentError::Solver(SolverError::BlowUp { .. }) => EXIT_NUMERICAL,
            ExperimentError::Solver(_) => EXIT_CONFIG,
            ExperimentError::Bifurcation(BifurcationError::Analysis(_)) => EXIT_CONFIG,
            ExperimentError::Bifurcation(_) => EXIT_NUMERICAL,
            ExperimentError::Io { .. }
            | ExperimentError::Csv { .. }
            | ExperimentError::Input { .. }
            | ExperimentError::Plot { .. } => EXIT_IO,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentError::Config(_) | ExperimentError::Model(_) | ExperimentError::Analysis(_) => "config",
            ExperimentError::Solver(SolverError::BlowUp { .. }) => "blow_up",
            ExperimentError::Solver(_) | ExperimentError::Diagnostics(_) => "config",
            ExperimentError::Bifurcation(BifurcationError::NearSingular { .. }) => "near_singular",
            ExperimentError::Bifurcation(BifurcationError::Analysis(_)) => "config",
            ExperimentError::Bifurcation(_) => "numerical",
            ExperimentError::Io { .. } | ExperimentError::Csv { .. } => "io",
            ExperimentError::Input { .. } => "input",
            ExperimentError::Plot { .. } => "plot",
        }
    }

    /// The configuration key at fault, when there is one.
    pub fn key(&self) -> Option<String> {
        match self {
            ExperimentError::Config(e) => e.key().map(str::to_string),
            ExperimentError::Model(ModelError::Invalid(v)) => v.first().map(|v| v.field.to_string()),
            ExperimentError::Solver(SolverError::InvalidConfig { field, .. })
            | ExperimentError::Solver(SolverError::InvalidParams { field, .. }) => Some(field.to_string()),
            _ => None,
        }
    }
}

/// What a successful run produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Rows that could not be computed (for example a near-singular
    /// double-mode system). Files are still written; the exit status is 3.
    pub numerical_failures: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.numerical_failures.is_empty() {
            EXIT_OK
        } else {
            EXIT_NUMERICAL
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes a header and rows of preformatted cells; returns the open file
/// so callers can append footer lines.
fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<fs::File, ExperimentError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(r).map_err(csv_err(path))?;
    }
    w.into_inner().map_err(|e| ExperimentError::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })
}

fn ensure_dir(dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Outcome, ExperimentError> {
    spec.validate()?;
    ensure_dir(&spec.output_dir)?;
    match spec.command {
        Command::Table => write_table(spec),
        Command::Bifurcation => write_bifurcation(spec),
        Command::Simulate => write_simulation(spec),
        Command::Sweep => write_sweep(spec),
        Command::Analyze => write_analysis(spec),
    }
}

fn stability(p: &ModelParams, kmax: u32) -> Result<StabilityReport, ExperimentError> {
    let eq = compute_equilibrium(p)?;
    Ok(critical_chi(p, &eq, kmax)?)
}

fn write_table(spec: &ExperimentSpec) -> Result<Outcome, ExperimentError> {
    let p = &spec.params;
    let eq = compute_equilibrium(p)?;
    let report = critical_chi(p, &eq, spec.kmax)?;
    let rows = (1..=spec.rows)
        .map(|k| {
            let mode = ModeWavenumber::new(k, p.length)?;
            Ok(vec![
                k.to_string(),
                fmt_num(chi_tilde(mode, p, &eq)),
                fmt_num(chi_hat(mode, p, &eq)),
            ])
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    let path = spec.output_dir.join("table.csv");
    let mut file = write_csv(&path, &["k", "chi_tilde", "chi_hat"], &rows)?;
    writeln!(
        file,
        "# chi0={}, argmin_k={}, loss_type={}",
        fmt_num(report.chi0),
        report.argmin_k,
        report.loss_type
    )
    .map_err(io_err(&path))?;
    Ok(Outcome {
        files: vec![path],
        numerical_failures: Vec::new(),
    })
}

fn write_bifurcation(spec: &ExperimentSpec) -> Result<Outcome, ExperimentError> {
    let p = &spec.params;
    let eq = compute_equilibrium(p)?;
    let report = critical_chi(p, &eq, spec.kmax)?;
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for k in 1..=spec.rows {
        match branch_info(k, p, &eq, &report) {
            Ok(b) => rows.push(vec![
                k.to_string(),
                fmt_num(b.chi_k),
                fmt_num(b.p_k),
                fmt_num(b.q_k),
                fmt_num(b.k2),
                fmt_num(b.lambda_star),
                b.k2_asymptotic_sign.to_string(),
                b.predicted_stability_near_bifurcation.to_string(),
                "ok".into(),
            ]),
            Err(BifurcationError::Analysis(e)) => return Err(e.into()),
            Err(e) => {
                let status = match e {
                    BifurcationError::Degenerate { .. } => "Degenerate",
                    BifurcationError::NearSingular { .. } => "NearSingular",
                    _ => "Singular",
                };
                if !matches!(e, BifurcationError::Degenerate { .. }) {
                    failures.push(e.to_string());
                }
                let mut row = vec![k.to_string()];
                row.extend(std::iter::repeat_n("NaN".to_string(), 5));
                row.extend(["0".into(), "NotApplicable".into(), status.into()]);
                rows.push(row);
            }
        }
    }
    let path = spec.output_dir.join("bifurcation.csv");
    write_csv(
        &path,
        &[
            "k",
            "chi_k",
            "P_k",
            "Q_k",
            "K2",
            "lambda_star",
            "K2_asymptotic_sign",
            "predicted_stability",
            "status",
        ],
        &rows,
    )?;
    Ok(Outcome {
        files: vec![path],
        numerical_failures: failures,
    })
}

/// Observables of a finished or recorded trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySummary {
    pub dominant_mode: usize,
    pub period: PeriodVerdict,
    pub spike_count: usize,
    pub mass_bound_ok: bool,
}

impl TrajectorySummary {
    pub fn period_cell(&self) -> String {
        match self.period {
            PeriodVerdict::Periodic(e) => fmt_num(e.period),
            PeriodVerdict::Steady => "Steady".into(),
            PeriodVerdict::NotPeriodic { .. } => "NotPeriodic".into(),
        }
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.dominant_mode.to_string(),
            self.period_cell(),
            self.spike_count.to_string(),
            self.mass_bound_ok.to_string(),
        ]
    }
}

const SUMMARY_HEADER: [&str; 4] = ["dominant_mode", "period", "spike_count", "mass_bound_ok"];

/// Period of `u(0, t)`, spike count of the final `u`, and the dominant
/// mode: of the final profile, or of the RMS spectrum over the second half
/// of the snapshots when the series oscillates. `steady` is the solver's
/// own verdict; a run stopped at steady state has no oscillation to time.
pub fn summarize(
    snapshots: &[State],
    series: &[SeriesSample],
    grid: &Grid,
    p: &ModelParams,
    steady: bool,
) -> Result<TrajectorySummary, ExperimentError> {
    let last = snapshots.last().ok_or_else(|| ExperimentError::Input {
        path: PathBuf::new(),
        message: "trajectory has no snapshots".into(),
    })?;
    let kcut = DIAGNOSTIC_KCUT.min(grid.n.saturating_sub(1) / 2);
    let times: Vec<f64> = series.iter().map(|s| s.t).collect();
    let u0: Vec<f64> = series.iter().map(|s| s.u_at_x0).collect();
    let period = if steady {
        PeriodVerdict::Steady
    } else {
        detect_period(&times, &u0, &PeriodOptions::default())
    };
    let spectrum = if matches!(period, PeriodVerdict::Periodic(_)) {
        let late: Vec<&[f64]> = snapshots[snapshots.len() / 2..].iter().map(|s| s.u.as_slice()).collect();
        rms_spectrum(&late, grid, kcut)?
    } else {
        mode_amplitudes(&last.u, grid, kcut)?
    };
    Ok(TrajectorySummary {
        dominant_mode: dominant_mode(&spectrum).k,
        period,
        spike_count: count_spikes(&last.u),
        mass_bound_ok: check_mass_bound(series, p).ok(),
    })
}

fn simulate(spec: &ExperimentSpec) -> Result<Trajectory, ExperimentError> {
    let p = &spec.params;
    let eq = compute_equilibrium(p)?;
    let grid = Grid::with_spacing(p.length, spec.solver.dx)?;
    let s0 = initial_state(&grid, &eq, spec.amplitude, spec.wavenumber)?;
    Ok(run(s0, &grid, p, &spec.solver, &mut [])?)
}

const SERIES_HEADER: [&str; 6] = ["t", "u_at_x0", "u_at_midpoint", "mass_u", "mass_v", "Linf_u"];

fn series_row(s: &SeriesSample) -> Vec<String> {
    [s.t, s.u_at_x0, s.u_at_midpoint, s.mass_u, s.mass_v, s.linf_u]
        .iter()
        .map(|&x| fmt_num(x))
        .collect()
}

fn profile_rows(grid: &Grid, s: &State) -> Vec<Vec<String>> {
    (0..grid.n)
        .map(|i| vec![fmt_num(grid.x[i]), fmt_num(s.u[i]), fmt_num(s.v[i]), fmt_num(s.w[i])])
        .collect()
}

fn profile_name(index: usize) -> String {
    format!("profile_{index:05}.csv")
}

fn write_simulation(spec: &ExperimentSpec) -> Result<Outcome, ExperimentError> {
    let tr = simulate(spec)?;
    let dir = &spec.output_dir;
    let profiles = dir.join("profiles");
    ensure_dir(&profiles)?;
    let mut files = Vec::new();
    let mut index = Vec::new();
    for (i, s) in tr.snapshots.iter().enumerate() {
        let name = profile_name(i);
        let path = profiles.join(&name);
        write_csv(&path, &["x", "u", "v", "w"], &profile_rows(&tr.grid, s))?;
        index.push(vec![i.to_string(), fmt_num(s.t), format!("profiles/{name}")]);
        files.push(path);
    }
    let index_path = dir.join("snapshots.csv");
    write_csv(&index_path, &["index", "t", "file"], &index)?;
    let series_path = dir.join("series.csv");
    let rows: Vec<Vec<String>> = tr.series.iter().map(series_row).collect();
    write_csv(&series_path, &SERIES_HEADER, &rows)?;

    let summary = summarize(&tr.snapshots, &tr.series, &tr.grid, &spec.params, tr.termination == Termination::Steady)?;
    let last = tr.final_state();
    let summary_path = dir.join("summary.csv");
    let mut header = vec!["termination", "t_final", "steps", "negative_steps"];
    header.extend(SUMMARY_HEADER);
    let mut row = vec![
        tr.termination.to_string(),
        fmt_num(last.t),
        tr.steps.to_string(),
        tr.negative_steps.to_string(),
    ];
    row.extend(summary.cells());
    write_csv(&summary_path, &header, &[row])?;
    files.extend([index_path, series_path, summary_path]);

    if spec.emit_plots {
        let x = &tr.grid.x;
        let profile_svg = dir.join("profile.svg");
        line_plot(
            &profile_svg,
            &format!("profiles at t = {}", fmt_num(last.t)),
            "x",
            &[
                Series { label: "u", xs: x, ys: &last.u },
                Series { label: "v", xs: x, ys: &last.v },
                Series { label: "w", xs: x, ys: &last.w },
            ],
        )
        .map_err(|message| ExperimentError::Plot {
            path: profile_svg.clone(),
            message,
        })?;
        let t: Vec<f64> = tr.series.iter().map(|s| s.t).collect();
        let u0: Vec<f64> = tr.series.iter().map(|s| s.u_at_x0).collect();
        let um: Vec<f64> = tr.series.iter().map(|s| s.u_at_midpoint).collect();
        let series_svg = dir.join("series.svg");
        line_plot(
            &series_svg,
            "time series",
            "t",
            &[
                Series { label: "u(0, t)", xs: &t, ys: &u0 },
                Series { label: "u(L/2, t)", xs: &t, ys: &um },
            ],
        )
        .map_err(|message| ExperimentError::Plot {
            path: series_svg.clone(),
            message,
        })?;
        files.extend([profile_svg, series_svg]);
    }
    Ok(Outcome {
        files,
        numerical_failures: Vec::new(),
    })
}

fn write_sweep(spec: &ExperimentSpec) -> Result<Outcome, ExperimentError> {
    let axis = spec.sweep.clone().expect("validated sweep has an axis");
    let point = |value: f64| -> Result<Vec<String>, ExperimentError> {
        let at = spec.at_sweep_value(&axis.name, value);
        at.validate()?;
        let r = stability(&at.params, at.kmax)?;
        let mut row = vec![
            fmt_num(value),
            fmt_num(r.chi0),
            r.argmin_k.to_string(),
            r.loss_type.to_string(),
            r.min_chi_tilde.0.to_string(),
            fmt_num(r.min_chi_tilde.1),
            r.min_chi_hat.0.to_string(),
            fmt_num(r.min_chi_hat.1),
            r.classification.to_string(),
        ];
        if spec.sweep_simulate {
            let tr = simulate(&at)?;
            let s = summarize(&tr.snapshots, &tr.series, &tr.grid, &at.params, tr.termination == Termination::Steady)?;
            row.push(tr.termination.to_string());
            row.extend(s.cells());
        }
        Ok(row)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| ExperimentError::Io {
            path: spec.output_dir.clone(),
            source: std::io::Error::other(e.to_string()),
        })?;
    let results: Vec<Result<Vec<String>, ExperimentError>> =
        pool.install(|| axis.values.par_iter().map(|&v| point(v)).collect());
    let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut header = vec![
        axis.name.as_str(),
        "chi0",
        "argmin_k",
        "loss_type",
        "k_chi_tilde",
        "min_chi_tilde",
        "k_chi_hat",
        "min_chi_hat",
        "classification",
    ];
    if spec.sweep_simulate {
        header.push("termination");
        header.extend(SUMMARY_HEADER);
    }
    let path = spec.output_dir.join("sweep.csv");
    write_csv(&path, &header, &rows)?;
    Ok(Outcome {
        files: vec![path],
        numerical_failures: Vec::new(),
    })
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>, ExperimentError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err(path))?;
    let got: Vec<String> = rdr.headers().map_err(csv_err(path))?.iter().map(str::to_string).collect();
    let cols: Vec<usize> = header
        .iter()
        .map(|h| {
            got.iter().position(|g| g == h).ok_or_else(|| ExperimentError::Input {
                path: path.to_path_buf(),
                message: format!("missing column `{h}`"),
            })
        })
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let row = cols
            .iter()
            .map(|&c| {
                let cell = rec.get(c).unwrap_or("");
                cell.trim().parse::<f64>().map_err(|_| ExperimentError::Input {
                    path: path.to_path_buf(),
                    message: format!("row {}: `{cell}` is not a number", line + 2),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(row);
    }
    Ok(out)
}

/// A trajectory read back from the files written by `simulate`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordedTrajectory {
    pub grid: Grid,
    pub snapshots: Vec<State>,
    pub series: Vec<SeriesSample>,
    /// `summary.csv` is present and records a steady termination.
    pub steady: bool,
}

/// Reads `snapshots.csv`, the profiles it lists, and `series.csv`. The grid
/// is rebuilt from the profile cell count and checked against `length`.
pub fn read_trajectory(dir: &Path, length: f64) -> Result<RecordedTrajectory, ExperimentError> {
    let index_path = dir.join("snapshots.csv");
    let mut rdr = csv::Reader::from_path(&index_path).map_err(csv_err(&index_path))?;
    let mut snapshots = Vec::new();
    let mut grid: Option<Grid> = None;
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(&index_path))?;
        let bad = |message: String| ExperimentError::Input {
            path: index_path.clone(),
            message,
        };
        let t: f64 = rec
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("bad time in {rec:?}")))?;
        let file = rec.get(2).ok_or_else(|| bad(format!("missing file in {rec:?}")))?;
        let path = dir.join(file);
        let rows = read_rows(&path, &["x", "u", "v", "w"])?;
        let g = match &grid {
            Some(g) => g.clone(),
            None => {
                let g = Grid::new(length, rows.len())?;
                grid = Some(g.clone());
                g
            }
        };
        if rows.len() != g.n || rows.iter().zip(&g.x).any(|(r, x)| (r[0] - x).abs() > 1e-6 * length) {
            return Err(ExperimentError::Input {
                path,
                message: format!("cell centres do not match a uniform grid on L = {length}"),
            });
        }
        let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<_>>();
        snapshots.push(State {
            u: col(1),
            v: col(2),
            w: col(3),
            t,
        });
    }
    let grid = grid.ok_or_else(|| ExperimentError::Input {
        path: index_path.clone(),
        message: "no snapshots listed".into(),
    })?;
    let series_path = dir.join("series.csv");
    let series = read_rows(&series_path, &SERIES_HEADER)?
        .into_iter()
        .map(|r| SeriesSample {
            t: r[0],
            u_at_x0: r[1],
            u_at_midpoint: r[2],
            mass_u: r[3],
            mass_v: r[4],
            linf_u: r[5],
        })
        .collect();
    let steady = recorded_termination(dir)?.is_some_and(|t| t == Termination::Steady.to_string());
    Ok(RecordedTrajectory {
        grid,
        snapshots,
        series,
        steady,
    })
}

/// The `termination` cell of `summary.csv`, if the file exists.
fn recorded_termination(dir: &Path) -> Result<Option<String>, ExperimentError> {
    let path = dir.join("summary.csv");
    if !path.exists() {
        return Ok(None);
    }
    let mut rdr = csv::Reader::from_path(&path).map_err(csv_err(&path))?;
    let col = rdr
        .headers()
        .map_err(csv_err(&path))?
        .iter()
        .position(|h| h == "termination");
    let first = rdr.records().next().transpose().map_err(csv_err(&path))?;
    Ok(col.zip(first).and_then(|(c, r)| r.get(c).map(str::to_string)))
}

fn write_analysis(spec: &ExperimentSpec) -> Result<Outcome, ExperimentError> {
    let input = spec.input_dir.as_deref().expect("validated analyze spec has an input");
    let rec = read_trajectory(input, spec.params.length)?;
    let summary = summarize(&rec.snapshots, &rec.series, &rec.grid, &spec.params, rec.steady)?;
    let path = spec.output_dir.join("analysis.csv");
    write_csv(&path, &SUMMARY_HEADER, &[summary.cells()])?;
    Ok(Outcome {
        files: vec![path],
        numerical_failures: Vec::new(),
    })
}
