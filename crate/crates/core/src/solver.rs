//! Finite-volume time stepping on a uniform cell-centred grid.
//!
//! Fields live at cell centres `x_i = (i + 1/2) dx`. Walls are handled with
//! mirror ghost cells, so every face flux through `x = 0` and `x = L` is
//! exactly zero and the discrete totals `Σ u dx`, `Σ v dx` change only
//! through kinetics.
//!
//! The chemotactic flux through face `i + 1/2` is
//! `chi * u_face * (w[i+1] - w[i]) / dx`, with `u_face` either the mean of the
//! two neighbours (central) or the donor cell picked by the sign of the
//! gradient (upwind).

use crate::diagnostics::SteadyDetector;
use crate::linalg::Tridiagonal;
use crate::model::{Equilibrium, ModelParams};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub const MIN_CELLS: usize = 8;
pub const DEFAULT_BLOWUP_CEILING: f64 = 1e12;
/// Consecutive quiet steps required before a run is declared steady.
pub const STEADY_WINDOW: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver setting {field}: {message}")]
    InvalidConfig { field: &'static str, message: String },
    #[error("invalid parameter {field}: {message}")]
    InvalidParams { field: &'static str, message: String },
    #[error("field {field} blew up at t = {t} (value {value:e})")]
    BlowUp { t: f64, field: Field, value: f64 },
    #[error("state has {got} cells but the grid has {want}")]
    GridMismatch { got: usize, want: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    U,
    V,
    W,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::U => "u",
            Field::V => "v",
            Field::W => "w",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub length: f64,
    pub n: usize,
    pub dx: f64,
    pub x: Vec<f64>,
}

impl Grid {
    pub fn new(length: f64, n: usize) -> Result<Self, SolverError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(SolverError::InvalidParams {
                field: "L",
                message: "L must be positive".into(),
            });
        }
        if n < MIN_CELLS {
            return Err(SolverError::InvalidConfig {
                field: "dx",
                message: format!("grid needs at least {MIN_CELLS} cells, got {n}"),
            });
        }
        let dx = length / n as f64;
        let x = (0..n).map(|i| (i as f64 + 0.5) * dx).collect();
        Ok(Self { length, n, dx, x })
    }

    /// Grid with `n = round(L / dx)` cells; the spacing is then adjusted so
    /// that `n dx = L`.
    pub fn with_spacing(length: f64, dx: f64) -> Result<Self, SolverError> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(SolverError::InvalidConfig {
                field: "dx",
                message: "dx must be positive".into(),
            });
        }
        let n = (length / dx).round();
        Self::new(length, if n.is_finite() { n as usize } else { 0 })
    }

    /// Midpoint-rule integral of a cell-centred field.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.dx
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub t: f64,
}

impl State {
    pub fn uniform(n: usize, eq: &Equilibrium) -> Self {
        Self {
            u: vec![eq.u_bar; n],
            v: vec![eq.v_bar; n],
            w: vec![eq.w_bar; n],
            t: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn field(&self, f: Field) -> &[f64] {
        match f {
            Field::U => &self.u,
            Field::V => &self.v,
            Field::W => &self.w,
        }
    }

    /// `max_i |a_i - b_i|` over all three fields.
    pub fn max_abs_diff(&self, other: &State) -> f64 {
        [Field::U, Field::V, Field::W]
            .iter()
            .flat_map(|&f| self.field(f).iter().zip(other.field(f)))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Equilibrium plus `amplitude * cos(wavenumber * pi * x)` in every field.
pub fn initial_state(
    grid: &Grid,
    eq: &Equilibrium,
    amplitude: f64,
    wavenumber: f64,
) -> Result<State, SolverError> {
    let mut s = State::uniform(grid.n, eq);
    for (i, &x) in grid.x.iter().enumerate() {
        let bump = amplitude * (wavenumber * std::f64::consts::PI * x).cos();
        s.u[i] += bump;
        s.v[i] += bump;
        s.w[i] += bump;
    }
    for f in [Field::U, Field::V, Field::W] {
        if s.field(f).iter().any(|&x| !(x > 0.0)) {
            return Err(SolverError::InvalidConfig {
                field: "amplitude",
                message: format!("perturbation makes {f} nonpositive"),
            });
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Scheme {
    Explicit,
    #[default]
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Advection {
    #[default]
    Central,
    Upwind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub advection: Advection,
    /// Steps between stored snapshots and observer calls.
    pub snapshot_every: usize,
    /// Steps between time-series samples.
    pub series_every: usize,
    pub steady_tol: f64,
    /// Stop as soon as the state is steady.
    pub stop_when_steady: bool,
    pub blowup_ceiling: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dx: 0.01,
            dt: 0.01,
            t_end: 100.0,
            scheme: Scheme::SemiImplicit,
            advection: Advection::Central,
            snapshot_every: 1000,
            series_every: 10,
            steady_tol: 1e-8,
            stop_when_steady: true,
            blowup_ceiling: DEFAULT_BLOWUP_CEILING,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, grid: &Grid, p: &ModelParams) -> Result<(), SolverError> {
        let bad = |field, message: &str| {
            Err(SolverError::InvalidConfig {
                field,
                message: message.into(),
            })
        };
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt", "dt must be positive");
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return bad("t_end", "t_end must be nonnegative");
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every", "snapshot_every must be at least 1");
        }
        if self.series_every == 0 {
            return bad("series_every", "series_every must be at least 1");
        }
        if !(self.steady_tol >= 0.0) {
            return bad("steady_tol", "steady_tol must be nonnegative");
        }
        if !(self.blowup_ceiling > 0.0) {
            return bad("blowup_ceiling", "blowup_ceiling must be positive");
        }
        if self.scheme == Scheme::Explicit {
            let bound = explicit_dt_bound(grid, p);
            if self.dt > bound {
                return Err(SolverError::InvalidConfig {
                    field: "dt",
                    message: format!("explicit scheme needs dt <= dx^2 / (2 max(d1, d2, 1)) = {bound:e}"),
                });
            }
        }
        Ok(())
    }
}

/// Largest stable forward-Euler step for the diffusion part.
pub fn explicit_dt_bound(grid: &Grid, p: &ModelParams) -> f64 {
    grid.dx * grid.dx / (2.0 * p.d1.max(p.d2).max(1.0))
}

/// Parameter checks for simulation. Unlike the analysis, the solver accepts
/// `mu1 = mu2 = 0` and `lambda = 0` (conservation test mode) and any finite
/// competition coefficients.
pub fn validate_for_simulation(p: &ModelParams) -> Result<(), SolverError> {
    for name in crate::model::PARAM_NAMES {
        let value = p.get(name).unwrap_or(f64::NAN);
        if !value.is_finite() {
            return Err(SolverError::InvalidParams {
                field: name,
                message: format!("{name} must be finite"),
            });
        }
    }
    for (name, value) in [("d1", p.d1), ("d2", p.d2), ("L", p.length)] {
        if value <= 0.0 {
            return Err(SolverError::InvalidParams {
                field: name,
                message: format!("{name} must be positive"),
            });
        }
    }
    for (name, value) in [("mu1", p.mu1), ("mu2", p.mu2), ("lambda", p.lambda)] {
        if value < 0.0 {
            return Err(SolverError::InvalidParams {
                field: name,
                message: format!("{name} must be nonnegative"),
            });
        }
    }
    Ok(())
}

/// What a single step observed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    /// `max |Δfield| / dt` over the three fields.
    pub max_rate: f64,
    /// `u` or `v` went below `-10 eps scale`.
    pub negative: bool,
}

/// A time stepper bound to one grid, parameter set and configuration, with
/// the implicit operators factorised once.
#[derive(Debug, Clone)]
pub struct Solver {
    grid: Grid,
    params: ModelParams,
    cfg: SolverConfig,
    implicit: Option<[Tridiagonal; 3]>,
    flux: Vec<f64>,
    scratch: State,
}

fn implicit_operator(n: usize, dx: f64, dt: f64, diff: f64, decay: f64) -> Tridiagonal {
    let r = diff / (dx * dx);
    let mut lower = vec![-r; n];
    let mut upper = vec![-r; n];
    let mut diag = vec![1.0 / dt + decay + 2.0 * r; n];
    lower[0] = 0.0;
    upper[n - 1] = 0.0;
    diag[0] -= r;
    diag[n - 1] -= r;
    Tridiagonal::new(&lower, &diag, &upper)
}

/// Discrete Neumann Laplacian times `coef`, added into `out`.
fn add_laplacian(out: &mut [f64], f: &[f64], coef: f64, dx: f64) {
    let n = f.len();
    let c = coef / (dx * dx);
    for i in 0..n {
        let left = if i == 0 { f[0] } else { f[i - 1] };
        let right = if i + 1 == n { f[n - 1] } else { f[i + 1] };
        out[i] += c * (left - 2.0 * f[i] + right);
    }
}

/// Adds `-(coef u w_x)_x` in conservative face form to `out`; `flux` holds
/// the `n + 1` face values, zero at both walls.
fn add_taxis(
    out: &mut [f64],
    flux: &mut [f64],
    density: &[f64],
    w: &[f64],
    coef: f64,
    dx: f64,
    advection: Advection,
) {
    if coef == 0.0 {
        return;
    }
    let n = density.len();
    flux[0] = 0.0;
    flux[n] = 0.0;
    for i in 0..n - 1 {
        let grad = (w[i + 1] - w[i]) / dx;
        let face = match advection {
            Advection::Central => 0.5 * (density[i] + density[i + 1]),
            // coef * grad > 0 moves mass from i to i + 1
            Advection::Upwind if coef * grad >= 0.0 => density[i],
            Advection::Upwind => density[i + 1],
        };
        flux[i + 1] = coef * face * grad;
    }
    for i in 0..n {
        out[i] -= (flux[i + 1] - flux[i]) / dx;
    }
}

impl Solver {
    pub fn new(grid: Grid, params: ModelParams, cfg: SolverConfig) -> Result<Self, SolverError> {
        validate_for_simulation(&params)?;
        cfg.validate(&grid, &params)?;
        let n = grid.n;
        let implicit = match cfg.scheme {
            Scheme::Explicit => None,
            Scheme::SemiImplicit => Some([
                implicit_operator(n, grid.dx, cfg.dt, params.d1, 0.0),
                implicit_operator(n, grid.dx, cfg.dt, params.d2, 0.0),
                implicit_operator(n, grid.dx, cfg.dt, 1.0, params.lambda),
            ]),
        };
        Ok(Self {
            scratch: State {
                u: vec![0.0; n],
                v: vec![0.0; n],
                w: vec![0.0; n],
                t: 0.0,
            },
            flux: vec![0.0; n + 1],
            grid,
            params,
            cfg,
            implicit,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Advances `state` by one step in place.
    pub fn step(&mut self, state: &mut State) -> Result<StepReport, SolverError> {
        let n = self.grid.n;
        if state.len() != n {
            return Err(SolverError::GridMismatch {
                got: state.len(),
                want: n,
            });
        }
        let p = self.params;
        let (dt, dx) = (self.cfg.dt, self.grid.dx);
        let mut next = std::mem::take(&mut self.scratch);

        // w first, sourced by beginning-of-step u + v
        match &self.implicit {
            Some(ops) => {
                for i in 0..n {
                    next.w[i] = state.w[i] / dt + state.u[i] + state.v[i];
                }
                ops[2].solve_in_place(&mut next.w);
            }
            None => {
                for i in 0..n {
                    next.w[i] = state.u[i] + state.v[i] - p.lambda * state.w[i];
                }
                add_laplacian(&mut next.w, &state.w, 1.0, dx);
                for i in 0..n {
                    next.w[i] = state.w[i] + dt * next.w[i];
                }
            }
        }

        // explicit tendencies for u and v: kinetics and taxis
        for i in 0..n {
            let (u, v) = (state.u[i], state.v[i]);
            next.u[i] = p.mu1 * (1.0 - u - p.a1 * v) * u;
            next.v[i] = p.mu2 * (1.0 - p.a2 * u - v) * v;
        }
        let w_drive = if self.implicit.is_some() { &next.w } else { &state.w };
        let adv = self.cfg.advection;
        add_taxis(&mut next.u, &mut self.flux, &state.u, w_drive, p.chi, dx, adv);
        add_taxis(&mut next.v, &mut self.flux, &state.v, w_drive, p.xi, dx, adv);
        let mut tend_u = std::mem::take(&mut next.u);
        let mut tend_v = std::mem::take(&mut next.v);
        match &self.implicit {
            Some(ops) => {
                for i in 0..n {
                    tend_u[i] += state.u[i] / dt;
                    tend_v[i] += state.v[i] / dt;
                }
                ops[0].solve_in_place(&mut tend_u);
                ops[1].solve_in_place(&mut tend_v);
            }
            None => {
                add_laplacian(&mut tend_u, &state.u, p.d1, dx);
                add_laplacian(&mut tend_v, &state.v, p.d2, dx);
                for i in 0..n {
                    tend_u[i] = state.u[i] + dt * tend_u[i];
                    tend_v[i] = state.v[i] + dt * tend_v[i];
                }
            }
        }
        next.u = tend_u;
        next.v = tend_v;
        next.t = state.t + dt;

        let mut report = StepReport::default();
        for f in [Field::U, Field::V, Field::W] {
            let (new, old) = (next.field(f), state.field(f));
            let mut scale = 0.0f64;
            let mut min = f64::INFINITY;
            for (a, b) in new.iter().zip(old) {
                if !a.is_finite() || a.abs() > self.cfg.blowup_ceiling {
                    let t = next.t;
                    let value = *a;
                    self.scratch = next;
                    return Err(SolverError::BlowUp { t, field: f, value });
                }
                report.max_rate = report.max_rate.max((a - b).abs() / dt);
                scale = scale.max(a.abs());
                min = min.min(*a);
            }
            if f != Field::W && min < -10.0 * f64::EPSILON * scale {
                report.negative = true;
            }
        }
        std::mem::swap(state, &mut next);
        self.scratch = next;
        Ok(report)
    }
}

/// One step from `state`, returning the new state.
pub fn step(state: &State, grid: &Grid, p: &ModelParams, cfg: &SolverConfig) -> Result<State, SolverError> {
    let mut solver = Solver::new(grid.clone(), *p, *cfg)?;
    let mut s = state.clone();
    solver.step(&mut s)?;
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    TEnd,
    Steady,
    BlowUp,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::TEnd => "TEnd",
            Termination::Steady => "Steady",
            Termination::BlowUp => "BlowUp",
        })
    }
}

/// One row of the time-series record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesSample {
    pub t: f64,
    pub u_at_x0: f64,
    pub u_at_midpoint: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    #[serde(rename = "Linf_u")]
    pub linf_u: f64,
}

impl SeriesSample {
    pub fn of(state: &State, grid: &Grid) -> Self {
        Self {
            t: state.t,
            u_at_x0: state.u[0],
            u_at_midpoint: state.u[grid.n / 2],
            mass_u: grid.integrate(&state.u),
            mass_v: grid.integrate(&state.v),
            linf_u: state.u.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid,
    /// Initial state, every `snapshot_every`-th state, and the final state.
    pub snapshots: Vec<State>,
    pub series: Vec<SeriesSample>,
    pub termination: Termination,
    pub steps: u64,
    /// Steps on which `u` or `v` dipped below zero.
    pub negative_steps: u64,
}

impl Trajectory {
    pub fn final_state(&self) -> &State {
        self.snapshots.last().expect("trajectory always holds the initial state")
    }
}

/// Callback invoked with every stored snapshot.
pub type Observer<'a> = dyn FnMut(&State) + 'a;

/// Integrates until `t_end`, or until the state is steady when
/// `stop_when_steady` is set.
pub fn run(
    initial: State,
    grid: &Grid,
    p: &ModelParams,
    cfg: &SolverConfig,
    observers: &mut [&mut Observer<'_>],
) -> Result<Trajectory, SolverError> {
    let mut solver = Solver::new(grid.clone(), *p, *cfg)?;
    run_with(&mut solver, initial, observers)
}

pub fn run_with(
    solver: &mut Solver,
    initial: State,
    observers: &mut [&mut Observer<'_>],
) -> Result<Trajectory, SolverError> {
    let grid = solver.grid().clone();
    let cfg = *solver.config();
    if initial.len() != grid.n {
        return Err(SolverError::GridMismatch {
            got: initial.len(),
            want: grid.n,
        });
    }
    let t0 = initial.t;
    let total = (cfg.t_end / cfg.dt).round() as u64;
    let mut state = initial;
    let mut snapshots = vec![state.clone()];
    let mut series = vec![SeriesSample::of(&state, &grid)];
    for obs in observers.iter_mut() {
        obs(&state);
    }
    let mut detector = SteadyDetector::new(cfg.steady_tol, STEADY_WINDOW);
    let mut termination = Termination::TEnd;
    let mut negative_steps = 0;
    let mut steps = 0;
    while steps < total {
        let report = solver.step(&mut state)?;
        steps += 1;
        state.t = t0 + steps as f64 * cfg.dt;
        if report.negative {
            if negative_steps == 0 {
                log::warn!("negative density at t = {}; consider upwind advection or a finer grid", state.t);
            }
            negative_steps += 1;
        }
        let steady = detector.push(report.max_rate);
        let last = steps == total || (steady && cfg.stop_when_steady);
        if steps % cfg.series_every as u64 == 0 || last {
            series.push(SeriesSample::of(&state, &grid));
        }
        if steps % cfg.snapshot_every as u64 == 0 || last {
            snapshots.push(state.clone());
            for obs in observers.iter_mut() {
                obs(&state);
            }
        }
        if steady && cfg.stop_when_steady {
            termination = Termination::Steady;
            break;
        }
    }
    if termination == Termination::TEnd && detector.is_steady() {
        termination = Termination::Steady;
    }
    Ok(Trajectory {
        grid,
        snapshots,
        series,
        termination,
        steps,
        negative_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::compute_equilibrium;
    use std::f64::consts::PI;

    fn baseline() -> (ModelParams, Equilibrium) {
        let p = ModelParams::default();
        (p, compute_equilibrium(&p).unwrap())
    }

    #[test]
    fn grid_spacing_is_consistent() {
        let g = Grid::with_spacing(0.5, 0.01).unwrap();
        assert_eq!(g.n, 50);
        assert!((g.dx * g.n as f64 - 0.5).abs() < 1e-15);
        assert!(Grid::new(1.0, 7).is_err());
    }

    #[test]
    fn initial_state_matches_perturbation() {
        let (p, eq) = baseline();
        let g = Grid::with_spacing(p.length, 0.01).unwrap();
        let zero = initial_state(&g, &eq, 0.0, 2.4).unwrap();
        assert!(zero.u.iter().all(|&u| u == eq.u_bar));
        let plus = initial_state(&g, &eq, 0.01, 2.4).unwrap();
        let minus = initial_state(&g, &eq, -0.01, 2.4).unwrap();
        for i in 0..g.n {
            assert!((plus.u[i] - eq.u_bar + minus.u[i] - eq.u_bar).abs() < 1e-15);
        }
        let want = eq.u_bar + 0.01 * (2.4 * PI * g.x[0]).cos();
        assert!((plus.u[0] - want).abs() < 1e-15);
        assert!((plus.u[0] - (eq.u_bar + 0.01)).abs() < 1e-4);
        assert!(initial_state(&g, &eq, 1.0, 2.4).is_err());
    }

    #[test]
    fn explicit_step_bound_is_enforced() {
        let (p, _) = baseline();
        let g = Grid::with_spacing(p.length, 0.01).unwrap();
        let cfg = SolverConfig {
            scheme: Scheme::Explicit,
            ..Default::default()
        };
        assert!(matches!(
            Solver::new(g.clone(), p, cfg),
            Err(SolverError::InvalidConfig { field: "dt", .. })
        ));
        let ok = SolverConfig {
            dt: explicit_dt_bound(&g, &p),
            ..cfg
        };
        assert!(Solver::new(g, p, ok).is_ok());
    }

    #[test]
    fn equilibrium_is_a_fixed_point_of_one_step() {
        let (p, eq) = baseline();
        let p = p.with_chi(100.0);
        let g = Grid::with_spacing(p.length, 0.01).unwrap();
        let s0 = State::uniform(g.n, &eq);
        let s1 = step(&s0, &g, &p, &SolverConfig::default()).unwrap();
        assert!(s1.max_abs_diff(&s0) < 1e-13);
    }

    #[test]
    fn zero_end_time_returns_initial_state() {
        let (p, eq) = baseline();
        let g = Grid::with_spacing(p.length, 0.01).unwrap();
        let s0 = initial_state(&g, &eq, 0.01, 2.4).unwrap();
        let cfg = SolverConfig {
            t_end: 0.0,
            ..Default::default()
        };
        let traj = run(s0.clone(), &g, &p, &cfg, &mut []).unwrap();
        assert_eq!(traj.snapshots, vec![s0]);
        assert_eq!(traj.termination, Termination::TEnd);
        assert_eq!(traj.steps, 0);
    }

    #[test]
    fn blow_up_is_reported() {
        let (p, eq) = baseline();
        let g = Grid::with_spacing(p.length, 0.01).unwrap();
        let s0 = initial_state(&g, &eq, 0.01, 2.4).unwrap();
        let cfg = SolverConfig {
            blowup_ceiling: 0.6,
            ..Default::default()
        };
        let err = run(s0, &g, &p, &cfg, &mut []).unwrap_err();
        assert!(matches!(err, SolverError::BlowUp { .. }));
    }

    #[test]
    fn observers_see_every_snapshot() {
        let (p, eq) = baseline();
        let g = Grid::with_spacing(p.length, 0.01).unwrap();
        let s0 = initial_state(&g, &eq, 0.01, 2.4).unwrap();
        let cfg = SolverConfig {
            t_end: 1.0,
            snapshot_every: 25,
            stop_when_steady: false,
            ..Default::default()
        };
        let mut seen = Vec::new();
        let mut obs = |s: &State| seen.push(s.t);
        let traj = run(s0, &g, &p, &cfg, &mut [&mut obs]).unwrap();
        assert_eq!(traj.snapshots.len(), 5);
        assert_eq!(seen.len(), 5);
        assert!((seen[4] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn solver_accepts_conservation_test_mode() {
        let p = ModelParams {
            mu1: 0.0,
            mu2: 0.0,
            lambda: 0.0,
            ..Default::default()
        };
        assert!(validate_for_simulation(&p).is_ok());
        let bad = ModelParams { d1: 0.0, ..p };
        assert!(matches!(
            validate_for_simulation(&bad),
            Err(SolverError::InvalidParams { field: "d1", .. })
        ));
    }

    #[test]
    fn upwind_taxis_conserves_mass() {
        let p = ModelParams {
            mu1: 0.0,
            mu2: 0.0,
            lambda: 0.0,
            chi: 5.0,
            ..Default::default()
        };
        let g = Grid::new(1.0, 64).unwrap();
        let mut s = State {
            u: g.x.iter().map(|x| 1.0 + 0.3 * (PI * x).cos()).collect(),
            v: vec![1.0; g.n],
            w: g.x.iter().map(|x| 2.0 + (2.0 * PI * x).cos()).collect(),
            t: 0.0,
        };
        let cfg = SolverConfig {
            advection: Advection::Upwind,
            dt: 2e-4,
            ..Default::default()
        };
        let mut solver = Solver::new(g.clone(), p, cfg).unwrap();
        let m0 = g.integrate(&s.u);
        for _ in 0..100 {
            solver.step(&mut s).unwrap();
        }
        assert!((g.integrate(&s.u) - m0).abs() < 1e-13);
    }
}
