//! The ten acceptance checks, shared by the `selftest` subcommand and the
//! `acceptance` integration test.
//!
//! Each check returns a [`CriterionResult`]; nothing here panics on a
//! failed comparison. Simulation checks record the mass-bound report of
//! every run they perform so that criterion 9 can audit all of them.

use crate::bifurcation::{
    compute_k2, double_mode_system, k2_asymptotic_sign, k2_leading_term, mean_system, projection_integrals,
    rhs_g, second_order_matrix, solve_double_mode_system, solve_mean_system,
};
use crate::diagnostics::{
    check_mass_bound, count_spikes, dominant_mode, mode_amplitudes, rms_spectrum, detect_period, MassBoundReport,
    PeriodOptions, PeriodVerdict,
};
use crate::linalg::{cramer, Mat3};
use crate::linear_analysis::{
    char_coeffs, chi_hat, chi_tilde, critical_chi, dominant_growth_rate, LossType, ModeWavenumber, DEFAULT_KMAX,
};
use crate::model::{compute_equilibrium, Equilibrium, ModelParams};
use crate::oracles;
use crate::solver::{
    initial_state, run, Advection, Grid, Scheme, SolverConfig, SolverError, State, Termination, Trajectory,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "criterion {:>2} {verdict}: {}: {}", self.id, self.name, self.detail)
    }
}

/// Mass-bound reports of every simulation run, labelled by run.
pub type MassLog = Vec<(String, MassBoundReport)>;

fn baseline() -> ModelParams {
    ModelParams::default()
}

fn hopf_regime() -> ModelParams {
    ModelParams {
        d1: 5.0,
        lambda: 5.0,
        xi: 0.1,
        ..ModelParams::default()
    }
}

fn spike_regime() -> ModelParams {
    ModelParams {
        d1: 0.2,
        d2: 0.3,
        lambda: 0.5,
        chi: 20.0,
        xi: 50.0,
        ..ModelParams::default()
    }
}

fn equilibrium(p: &ModelParams) -> Equilibrium {
    compute_equilibrium(p).expect("acceptance parameter sets are coexistence sets")
}

fn relerr(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Standard run from the perturbed equilibrium `0.01 cos(2.4 pi x)`.
fn simulate(p: &ModelParams, cfg: &SolverConfig) -> Result<Trajectory, SolverError> {
    let eq = equilibrium(p);
    let grid = Grid::with_spacing(p.length, cfg.dx)?;
    let s0 = initial_state(&grid, &eq, 0.01, 2.4)?;
    run(s0, &grid, p, cfg, &mut [])
}

const THRESHOLD_TABLE: [(f64, f64); 7] = [
    (61.0, 75.2),
    (238.6, 290.2),
    (534.7, 648.4),
    (949.2, 1150.0),
    (1482.2, 1794.9),
    (2133.6, 2583.1),
    (2903.4, 3514.6),
];

pub fn criterion_1() -> CriterionResult {
    let p = baseline();
    let eq = equilibrium(&p);
    let mut worst = 0.0f64;
    let mut misses = Vec::new();
    for (i, &(want_t, want_h)) in THRESHOLD_TABLE.iter().enumerate() {
        let k = i as u32 + 1;
        let mode = ModeWavenumber::new(k, p.length).expect("positive length");
        let (t, h) = (chi_tilde(mode, &p, &eq), chi_hat(mode, &p, &eq));
        let err = (t - want_t).abs().max((h - want_h).abs());
        worst = worst.max(err);
        if err > 0.05 {
            misses.push(format!("k={k} got ({t:.3}, {h:.3})"));
        }
    }
    CriterionResult {
        id: 1,
        name: "threshold table",
        passed: misses.is_empty(),
        detail: format!("max |error| {worst:.4} (tol 0.05) {}", misses.join("; ")),
    }
}

const CRITICAL_K0: [u32; 10] = [1, 1, 2, 3, 3, 4, 4, 5, 5, 6];
const CRITICAL_CHI0: [f64; 10] = [
    4.5868, 4.8455, 4.4330, 4.5868, 4.4260, 4.4815, 4.4290, 4.4465, 4.4327, 4.4330,
];

pub fn criterion_2() -> CriterionResult {
    let mut misses = Vec::new();
    let mut worst = 0.0f64;
    for (i, (&k0, &chi0)) in CRITICAL_K0.iter().zip(&CRITICAL_CHI0).enumerate() {
        let length = 3.0 + 2.0 * i as f64;
        let p = baseline().with_length(length);
        let eq = equilibrium(&p);
        match critical_chi(&p, &eq, DEFAULT_KMAX) {
            Ok(r) => {
                worst = worst.max((r.chi0 - chi0).abs());
                if r.argmin_k != k0 || (r.chi0 - chi0).abs() > 5e-4 {
                    misses.push(format!("L={length}: k0={} chi0={:.5}", r.argmin_k, r.chi0));
                }
            }
            Err(e) => misses.push(format!("L={length}: {e}")),
        }
    }
    CriterionResult {
        id: 2,
        name: "critical mode versus length",
        passed: misses.is_empty(),
        detail: format!("max |chi0 error| {worst:.6} (tol 0.0005) {}", misses.join("; ")),
    }
}

const HOPF_K1: [u32; 14] = [1, 1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4, 5];
const HOPF_CHI0: [f64; 14] = [
    129.0, 69.7, 63.2, 66.5, 64.5, 63.2, 64.2, 63.8, 63.2, 63.7, 63.5, 63.2, 63.5, 63.4,
];

pub fn criterion_3() -> CriterionResult {
    let mut misses = Vec::new();
    let mut worst = 0.0f64;
    for (i, (&k1, &chi0)) in HOPF_K1.iter().zip(&HOPF_CHI0).enumerate() {
        let length = 1.0 + i as f64;
        let p = hopf_regime().with_length(length);
        let eq = equilibrium(&p);
        match critical_chi(&p, &eq, DEFAULT_KMAX) {
            Ok(r) => {
                worst = worst.max((r.chi0 - chi0).abs());
                if r.argmin_k != k1 || (r.chi0 - chi0).abs() > 0.05 || r.loss_type != LossType::Hopf {
                    misses.push(format!(
                        "L={length}: k1={} chi0={:.3} {}",
                        r.argmin_k, r.chi0, r.loss_type
                    ));
                }
            }
            Err(e) => misses.push(format!("L={length}: {e}")),
        }
    }
    CriterionResult {
        id: 3,
        name: "Hopf thresholds versus length",
        passed: misses.is_empty(),
        detail: format!("max |chi0 error| {worst:.4} (tol 0.05) {}", misses.join("; ")),
    }
}

/// Large-diffusion parameters on `L = 1` with `lambda = factor * lambda_star`
/// for the critical mode. `k0` is resolved self-consistently since
/// `lambda_star` depends on it.
fn k2_case(d: f64, factor: f64) -> Result<(ModelParams, u32, f64), String> {
    let mut k0 = 1;
    for _ in 0..8 {
        let base = ModelParams {
            d1: d,
            d2: d,
            length: 1.0,
            ..baseline()
        };
        let (_, lambda_star) = k2_asymptotic_sign(k0, &base).map_err(|e| e.to_string())?;
        let p = ModelParams {
            lambda: factor * lambda_star,
            ..base
        };
        let eq = equilibrium(&p);
        let r = critical_chi(&p, &eq, DEFAULT_KMAX).map_err(|e| e.to_string())?;
        if r.argmin_k == k0 {
            return Ok((p, k0, lambda_star));
        }
        k0 = r.argmin_k;
    }
    Err(format!("critical mode did not settle for d = {d}, factor {factor}"))
}

pub fn criterion_4() -> CriterionResult {
    let mut parts = Vec::new();
    let mut passed = true;
    for (factor, want_positive) in [(0.5, true), (2.0, false)] {
        match k2_case(1e4, factor).and_then(|(p, k0, ls)| {
            let eq = equilibrium(&p);
            compute_k2(k0, &p, &eq).map(|b| (b.k2, k0, ls)).map_err(|e| e.to_string())
        }) {
            Ok((k2, k0, ls)) => {
                let ok = if want_positive { k2 > 0.0 } else { k2 < 0.0 };
                passed &= ok;
                parts.push(format!("k0={k0} lambda*={ls:.3} lambda={factor}lambda*: K2={k2:.4e}"));
            }
            Err(e) => {
                passed = false;
                parts.push(e);
            }
        }
    }
    for factor in [0.5, 2.0] {
        match k2_case(1e5, factor).and_then(|(p, k0, _)| {
            let eq = equilibrium(&p);
            let exact = compute_k2(k0, &p, &eq).map_err(|e| e.to_string())?.k2;
            let lead = k2_leading_term(k0, &p, &eq).map_err(|e| e.to_string())?;
            Ok(exact / lead)
        }) {
            Ok(ratio) => {
                passed &= (0.9..=1.1).contains(&ratio);
                parts.push(format!("d=1e5 lambda={factor}lambda*: exact/leading={ratio:.5}"));
            }
            Err(e) => {
                passed = false;
                parts.push(e);
            }
        }
    }
    CriterionResult {
        id: 4,
        name: "K2 sign law",
        passed,
        detail: parts.join("; "),
    }
}

/// A random coexistence parameter set with moderate coefficients.
pub fn random_params(rng: &mut impl Rng) -> ModelParams {
    ModelParams {
        d1: rng.gen_range(0.2..5.0),
        d2: rng.gen_range(0.05..2.0),
        chi: 0.0,
        xi: rng.gen_range(0.05..2.0),
        mu1: rng.gen_range(0.5..2.0),
        mu2: rng.gen_range(0.5..2.0),
        a1: rng.gen_range(0.05..0.95),
        a2: rng.gen_range(0.05..0.95),
        lambda: rng.gen_range(0.2..3.0),
        length: rng.gen_range(0.5..3.0),
    }
}

fn vec_relerr(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let scale = a.iter().chain(b).fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

pub const ORACLE_SEED: u64 = 0x6b73_6475_6f00_0005;
pub const ORACLE_SETS: usize = 50;

pub fn criterion_5() -> CriterionResult {
    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
    let sets: Vec<(ModelParams, f64)> = (0..ORACLE_SETS)
        .map(|_| {
            let p = random_params(&mut rng);
            let chi_frac = rng.gen_range(0.0..2.0);
            (p, chi_frac)
        })
        .collect();

    struct Worst {
        thresholds: f64,
        rh_mismatch: usize,
        rh_checked: usize,
        cramer: f64,
        g: f64,
        failures: Vec<String>,
    }
    let mut w = Worst {
        thresholds: 0.0,
        rh_mismatch: 0,
        rh_checked: 0,
        cramer: 0.0,
        g: 0.0,
        failures: Vec::new(),
    };
    let g_errors: Vec<Result<f64, String>> = sets
        .par_iter()
        .map(|(p, _)| {
            let eq = equilibrium(p);
            let exact = projection_integrals(1, p, &eq).map_err(|e| e.to_string())?.g_value;
            let cells = 1024 * p.length.ceil() as usize;
            let bvp = oracles::corrector_quadrature_extrapolated(1, p, &eq, cells)
                .ok_or_else(|| "BVP oracle singular".to_string())?;
            Ok(relerr(exact, bvp.g))
        })
        .collect();

    for (i, ((p, chi_frac), g_err)) in sets.iter().zip(g_errors).enumerate() {
        let eq = equilibrium(p);
        let chi0 = critical_chi(p, &eq, DEFAULT_KMAX).map(|r| r.chi0).unwrap_or(f64::NAN);
        let chi = chi_frac * chi0;
        for k in 1..=6 {
            let mode = ModeWavenumber::new(k, p.length).expect("positive length");
            let (t, h) = (chi_tilde(mode, p, &eq), chi_hat(mode, p, &eq));
            match (oracles::bisect_chi_tilde(mode, p, &eq), oracles::bisect_chi_hat(mode, p, &eq)) {
                (Some(bt), Some(bh)) => w.thresholds = w.thresholds.max(relerr(t, bt)).max(relerr(h, bh)),
                _ => w.failures.push(format!("set {i} k={k}: bisection found no root")),
            }
            if relerr(chi, t) > 1e-3 && relerr(chi, h) > 1e-3 {
                w.rh_checked += 1;
                let rh = char_coeffs(mode, chi, p, &eq).routh_hurwitz_stable();
                if rh != oracles::spectrally_stable(mode, chi, p, &eq) {
                    w.rh_mismatch += 1;
                    w.failures.push(format!("set {i} k={k}: Routh-Hurwitz disagrees at chi={chi:.4}"));
                }
            }
        }
        let systems: Vec<Result<(Mat3, [f64; 3]), String>> = vec![
            mean_system(1, p, &eq).map_err(|e| e.to_string()),
            double_mode_system(1, p, &eq, chi_tilde(ModeWavenumber::new(1, p.length).unwrap(), p, &eq))
                .map_err(|e| e.to_string()),
            (|| {
                let mean = solve_mean_system(1, p, &eq).map_err(|e| e.to_string())?;
                let ct = chi_tilde(ModeWavenumber::new(1, p.length).unwrap(), p, &eq);
                let double = solve_double_mode_system(1, p, &eq, ct).map_err(|e| e.to_string())?;
                let g = rhs_g(1, p, &eq, &double, &mean).map_err(|e| e.to_string())?;
                let a = second_order_matrix(1, p, &eq).map_err(|e| e.to_string())?;
                Ok((a, [g, 0.0, 0.0]))
            })(),
        ];
        for sys in systems {
            match sys {
                Ok((m, rhs)) => match (cramer(&m, &rhs), oracles::lu_solve(&m, &rhs)) {
                    (Some(c), Some(lu)) => w.cramer = w.cramer.max(vec_relerr(&c.x, &lu)),
                    _ => w.failures.push(format!("set {i}: singular 3x3 system")),
                },
                Err(e) => w.failures.push(format!("set {i}: {e}")),
            }
        }
        match g_err {
            Ok(e) => w.g = w.g.max(e),
            Err(e) => w.failures.push(format!("set {i}: {e}")),
        }
    }
    let passed = w.failures.is_empty() && w.thresholds <= 1e-6 && w.cramer <= 1e-10 && w.g <= 1e-6;
    let mut detail = format!(
        "{ORACLE_SETS} sets: thresholds rel {:.2e} (tol 1e-6); Routh-Hurwitz {}/{} agree; Cramer vs LU rel {:.2e} (tol 1e-10); G vs BVP rel {:.2e} (tol 1e-6)",
        w.thresholds,
        w.rh_checked - w.rh_mismatch,
        w.rh_checked,
        w.cramer,
        w.g
    );
    if !w.failures.is_empty() {
        detail.push_str(&format!("; {}", w.failures.join("; ")));
    }
    CriterionResult {
        id: 5,
        name: "oracle equivalence",
        passed,
        detail,
    }
}

pub fn criterion_6(mass: &mut MassLog) -> CriterionResult {
    let cases = [(7.0, 2usize), (9.0, 3), (11.0, 3), (13.0, 4)];
    let runs: Vec<_> = cases
        .par_iter()
        .map(|&(length, _)| {
            let p = ModelParams {
                chi: 6.0,
                length,
                ..baseline()
            };
            let cfg = SolverConfig {
                t_end: 20_000.0,
                ..SolverConfig::default()
            };
            (p, simulate(&p, &cfg))
        })
        .collect();
    let mut passed = true;
    let mut parts = Vec::new();
    for ((length, want), (p, r)) in cases.iter().zip(runs) {
        match r {
            Ok(tr) => {
                mass.push((format!("wavemode L={length}"), check_mass_bound(&tr.series, &p)));
                let f = tr.final_state();
                let dom = mode_amplitudes(&f.u, &tr.grid, 20).map(|s| dominant_mode(&s).k);
                let ok = tr.termination == Termination::Steady && dom.as_ref().is_ok_and(|k| k == want);
                passed &= ok;
                parts.push(format!(
                    "L={length}: {} at t={:.0}, mode {}",
                    tr.termination,
                    f.t,
                    dom.map_or_else(|e| e.to_string(), |k| k.to_string())
                ));
            }
            Err(e) => {
                passed = false;
                parts.push(format!("L={length}: {e}"));
            }
        }
    }
    CriterionResult {
        id: 6,
        name: "wavemode selection",
        passed,
        detail: parts.join("; "),
    }
}

pub fn criterion_7(mass: &mut MassLog) -> CriterionResult {
    // explicit taxis at chi = 1000 needs a much smaller step than dx = 0.01
    let cases = [(100.0, 1e-2), (1000.0, 1e-4)];
    let runs: Vec<_> = cases
        .par_iter()
        .map(|&(chi, dt)| {
            let p = baseline().with_chi(chi);
            let cfg = SolverConfig {
                dt,
                t_end: 500.0,
                ..SolverConfig::default()
            };
            (p, simulate(&p, &cfg))
        })
        .collect();
    let mut passed = true;
    let mut parts = Vec::new();
    let mut spike = Vec::new();
    for ((chi, _), (p, r)) in cases.iter().zip(runs) {
        match r {
            Ok(tr) => {
                mass.push((format!("boundary layer chi={chi}"), check_mass_bound(&tr.series, &p)));
                let f = tr.final_state();
                let monotone = f.u.windows(2).all(|w| w[1] < w[0]);
                let dom = mode_amplitudes(&f.u, &tr.grid, 20).map(|s| dominant_mode(&s).k).unwrap_or(0);
                passed &= tr.termination == Termination::Steady && monotone && dom == 1;
                spike.push(f.u[0]);
                parts.push(format!(
                    "chi={chi}: {} at t={:.1}, strictly decreasing {monotone}, mode {dom}, u(0)={:.4}",
                    tr.termination, f.t, f.u[0]
                ));
            }
            Err(e) => {
                passed = false;
                parts.push(format!("chi={chi}: {e}"));
            }
        }
    }
    let increasing = spike.len() == 2 && spike[1] > spike[0];
    passed &= increasing;
    parts.push(format!("u(0) increasing with chi: {increasing}"));
    CriterionResult {
        id: 7,
        name: "monotone boundary layer",
        passed,
        detail: parts.join("; "),
    }
}

pub fn criterion_8(mass: &mut MassLog) -> CriterionResult {
    // (L, expected dominant mode, accepted period band)
    let cases: [(f64, Option<usize>, (f64, f64)); 5] = [
        (4.0, None, (11.0 * 0.8, 11.0 * 1.2)),
        (6.0, Some(2), (6.0, 10.0)),
        (8.0, Some(3), (6.0, 10.0)),
        (12.0, Some(4), (6.0, 10.0)),
        (14.0, Some(5), (6.0, 10.0)),
    ];
    let runs: Vec<_> = cases
        .par_iter()
        .map(|&(length, _, _)| {
            let p = hopf_regime().with_chi(80.0).with_length(length);
            let cfg = SolverConfig {
                t_end: 600.0,
                stop_when_steady: false,
                series_every: 1,
                snapshot_every: 50,
                ..SolverConfig::default()
            };
            (p, simulate(&p, &cfg))
        })
        .collect();
    let mut passed = true;
    let mut parts = Vec::new();
    for ((length, want_mode, (lo, hi)), (p, r)) in cases.iter().zip(runs) {
        let tr = match r {
            Ok(tr) => tr,
            Err(e) => {
                passed = false;
                parts.push(format!("L={length}: {e}"));
                continue;
            }
        };
        mass.push((format!("Hopf L={length}"), check_mass_bound(&tr.series, &p)));
        let t: Vec<f64> = tr.series.iter().map(|s| s.t).collect();
        let u0: Vec<f64> = tr.series.iter().map(|s| s.u_at_x0).collect();
        let verdict = detect_period(&t, &u0, &PeriodOptions::default());
        let period_ok = matches!(verdict, PeriodVerdict::Periodic(e) if (*lo..=*hi).contains(&e.period));
        let period = match verdict {
            PeriodVerdict::Periodic(e) => format!("period {:.2}", e.period),
            other => format!("{other:?}"),
        };
        let late: Vec<&[f64]> = tr.snapshots[tr.snapshots.len() / 2..].iter().map(|s| s.u.as_slice()).collect();
        let mode = rms_spectrum(&late, &tr.grid, 20).map(|s| dominant_mode(&s).k).unwrap_or(0);
        let mode_ok = want_mode.is_none_or(|m| m == mode);
        passed &= period_ok && mode_ok;
        parts.push(format!("L={length}: {period} (band [{lo:.1}, {hi:.1}]), mode {mode}"));
    }
    CriterionResult {
        id: 8,
        name: "Hopf oscillation",
        passed,
        detail: parts.join("; "),
    }
}

/// Spike counts of `u` sampled every `every` time units.
fn spike_history(p: &ModelParams, cfg: &SolverConfig) -> Result<(Trajectory, Vec<(f64, usize)>), SolverError> {
    let tr = simulate(p, cfg)?;
    let counts = tr.snapshots.iter().map(|s| (s.t, count_spikes(&s.u))).collect();
    Ok((tr, counts))
}

pub fn criterion_10(mass: &mut MassLog) -> CriterionResult {
    let mut passed = true;
    let mut parts = Vec::new();

    let short = spike_regime().with_length(0.5);
    let short_cfg = SolverConfig {
        t_end: 200.0,
        stop_when_steady: false,
        snapshot_every: 50,
        ..SolverConfig::default()
    };
    match spike_history(&short, &short_cfg) {
        Ok((tr, counts)) => {
            mass.push(("coarsening L=0.5".into(), check_mass_bound(&tr.series, &short)));
            let last = counts.last().map_or(0, |c| c.1);
            passed &= last == 1;
            parts.push(format!("L=0.5: final spike count {last}"));
        }
        Err(e) => {
            passed = false;
            parts.push(format!("L=0.5: {e}"));
        }
    }

    // dt = 0.01 overshoots the steep spikes at L = 10; upwinding keeps the
    // densities positive
    let long = spike_regime().with_length(10.0);
    let dt = 2e-3;
    let long_cfg = SolverConfig {
        dt,
        t_end: 300.0,
        advection: Advection::Upwind,
        stop_when_steady: false,
        snapshot_every: (0.5 / dt).round() as usize,
        ..SolverConfig::default()
    };
    match spike_history(&long, &long_cfg) {
        Ok((tr, counts)) => {
            mass.push(("coarsening L=10".into(), check_mass_bound(&tr.series, &long)));
            let initial = counts[0].1;
            // the pattern has formed once the count first departs from the
            // count of the initial perturbation
            let formed = counts.iter().position(|c| c.1 != initial).unwrap_or(counts.len() - 1);
            let after = &counts[formed..];
            let early_max = after.iter().map(|c| c.1).max().unwrap_or(0);
            let last = after.last().map_or(0, |c| c.1);
            let rise = after.windows(2).find(|w| w[1].1 > w[0].1);
            let non_increasing = rise.is_none();
            passed &= non_increasing && last < early_max;
            let trace: Vec<String> = after
                .iter()
                .enumerate()
                .filter(|(i, c)| *i == 0 || c.1 != after[i - 1].1)
                .map(|(_, c)| format!("{}@{:.1}", c.1, c.0))
                .take(16)
                .collect();
            parts.push(format!(
                "L=10: pattern forms at t={:.1} with {early_max} spikes, final {last}, non-increasing {non_increasing}{}; count changes {}",
                after[0].0,
                rise.map_or(String::new(), |w| format!(" (rises {}->{} at t={:.1})", w[0].1, w[1].1, w[1].0)),
                trace.join(" ")
            ));
        }
        Err(e) => {
            passed = false;
            parts.push(format!("L=10: {e}"));
        }
    }
    CriterionResult {
        id: 10,
        name: "coarsening",
        passed,
        detail: parts.join("; "),
    }
}

/// Largest deviation from the equilibrium after `steps` steps from it.
fn fixed_point_drift(scheme: Scheme, dt: f64, steps: usize) -> Result<f64, SolverError> {
    let p = baseline().with_chi(61.0);
    let eq = equilibrium(&p);
    let grid = Grid::with_spacing(p.length, 0.01)?;
    let cfg = SolverConfig {
        dt,
        scheme,
        t_end: dt * steps as f64,
        stop_when_steady: false,
        snapshot_every: steps,
        series_every: steps,
        ..SolverConfig::default()
    };
    let s0 = State::uniform(grid.n, &eq);
    let tr = run(s0.clone(), &grid, &p, &cfg, &mut [])?;
    Ok(tr.final_state().max_abs_diff(&s0))
}

/// Error of `u` against the exact decaying cosine for pure diffusion.
fn diffusion_error(cells: usize) -> Result<f64, SolverError> {
    let p = ModelParams {
        d1: 1.0,
        chi: 0.0,
        xi: 0.0,
        mu1: 0.0,
        mu2: 0.0,
        lambda: 0.0,
        length: 1.0,
        ..baseline()
    };
    let grid = Grid::new(p.length, cells)?;
    let (dt, t_end) = (1e-7, 0.1);
    let cfg = SolverConfig {
        dx: grid.dx,
        dt,
        t_end,
        stop_when_steady: false,
        snapshot_every: usize::MAX,
        series_every: usize::MAX,
        ..SolverConfig::default()
    };
    let wn = PI / p.length;
    let s0 = State {
        u: grid.x.iter().map(|x| 1.0 + (wn * x).cos()).collect(),
        v: vec![1.0; grid.n],
        w: vec![1.0; grid.n],
        t: 0.0,
    };
    let tr = run(s0, &grid, &p, &cfg, &mut [])?;
    let decay = (-p.d1 * wn * wn * t_end).exp();
    Ok(grid
        .x
        .iter()
        .zip(&tr.final_state().u)
        .fold(0.0f64, |m, (x, u)| m.max((u - 1.0 - decay * (wn * x).cos()).abs())))
}

/// Mass drift per unit time with kinetics and decay disabled.
fn conservation_drift() -> Result<(f64, Trajectory, ModelParams), SolverError> {
    let p = ModelParams {
        chi: 50.0,
        mu1: 0.0,
        mu2: 0.0,
        lambda: 0.0,
        ..baseline()
    };
    let grid = Grid::with_spacing(p.length, 0.01)?;
    let cfg = SolverConfig {
        dt: 1e-3,
        t_end: 10.0,
        stop_when_steady: false,
        series_every: 100,
        ..SolverConfig::default()
    };
    let wn = PI / p.length;
    let s0 = State {
        u: grid.x.iter().map(|x| 0.6 + 0.1 * (wn * x).cos()).collect(),
        v: grid.x.iter().map(|x| 0.6 - 0.1 * (2.0 * wn * x).cos()).collect(),
        w: grid.x.iter().map(|x| 1.0 + 0.1 * (wn * x).cos()).collect(),
        t: 0.0,
    };
    let tr = run(s0, &grid, &p, &cfg, &mut [])?;
    let first = tr.series[0];
    let drift = tr
        .series
        .iter()
        .skip(1)
        .map(|s| ((s.mass_u - first.mass_u).abs() + (s.mass_v - first.mass_v).abs()) / (s.t - first.t))
        .fold(0.0f64, f64::max);
    Ok((drift, tr, p))
}

/// Fitted exponential rate of mode `k0` against the dominant eigenvalue.
fn linear_rate() -> Result<(f64, f64, Trajectory, ModelParams), SolverError> {
    let base = baseline();
    let eq = equilibrium(&base);
    let report = critical_chi(&base, &eq, DEFAULT_KMAX).map_err(|e| SolverError::InvalidParams {
        field: "chi",
        message: e.to_string(),
    })?;
    let k0 = report.min_chi_tilde.0;
    let mode = ModeWavenumber::new(k0, base.length).expect("positive length");
    let p = base.with_chi(1.05 * chi_tilde(mode, &base, &eq));
    let predicted = dominant_growth_rate(&char_coeffs(mode, p.chi, &p, &eq));
    let grid = Grid::with_spacing(p.length, 0.01)?;
    let dt = 1e-3;
    let cfg = SolverConfig {
        dt,
        t_end: 10.0,
        stop_when_steady: false,
        snapshot_every: 100,
        ..SolverConfig::default()
    };
    let s0 = initial_state(&grid, &eq, 1e-6, 2.4)?;
    let tr = run(s0, &grid, &p, &cfg, &mut [])?;
    // least-squares slope of log|a_k0| over the second half, after the
    // decaying eigen-directions have died out
    let pts: Vec<(f64, f64)> = tr
        .snapshots
        .iter()
        .filter(|s| s.t >= 0.5 * cfg.t_end - 1e-9)
        .map(|s| {
            let a = mode_amplitudes(&s.u, &grid, k0 as usize).expect("k0 below Nyquist").amplitudes[k0 as usize];
            (s.t, a.abs().ln())
        })
        .collect();
    let n = pts.len() as f64;
    let (mt, my) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t / n, b + y / n));
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (y - my), b + (t - mt) * (t - mt)));
    Ok((num / den, predicted, tr, p))
}

/// Largest difference between the two schemes after one time unit.
fn scheme_agreement() -> Result<(f64, f64), SolverError> {
    let p = baseline().with_chi(100.0);
    let eq = equilibrium(&p);
    let grid = Grid::with_spacing(p.length, 0.02)?;
    let dt = 1e-4;
    let finals: Vec<State> = [Scheme::Explicit, Scheme::SemiImplicit]
        .iter()
        .map(|&scheme| {
            let cfg = SolverConfig {
                dx: grid.dx,
                dt,
                t_end: 1.0,
                scheme,
                stop_when_steady: false,
                ..SolverConfig::default()
            };
            let s0 = initial_state(&grid, &eq, 0.01, 2.4)?;
            Ok(run(s0, &grid, &p, &cfg, &mut [])?.final_state().clone())
        })
        .collect::<Result<_, SolverError>>()?;
    let scale = [&finals[1].u, &finals[1].v, &finals[1].w]
        .iter()
        .flat_map(|f| f.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    Ok((finals[0].max_abs_diff(&finals[1]), 10.0 * dt * scale))
}

pub fn criterion_9(mass: &mut MassLog) -> CriterionResult {
    let mut passed = true;
    let mut parts = Vec::new();
    let fail = |parts: &mut Vec<String>, msg: String| {
        parts.push(msg);
        false
    };

    let steps = 100_000;
    for (scheme, dt) in [(Scheme::SemiImplicit, 1e-2), (Scheme::Explicit, 4e-5)] {
        match fixed_point_drift(scheme, dt, steps) {
            Ok(d) => {
                passed &= d < 1e-10;
                parts.push(format!("{scheme:?} fixed-point drift {d:.2e} over {steps} steps (tol 1e-10)"));
            }
            Err(e) => passed &= fail(&mut parts, format!("fixed point: {e}")),
        }
    }

    match (diffusion_error(16), diffusion_error(32)) {
        (Ok(e1), Ok(e2)) => {
            let ratio = e1 / e2;
            passed &= ratio >= 3.9;
            parts.push(format!("diffusion error ratio {ratio:.3} on dx halving (min 3.9)"));
        }
        (Err(e), _) | (_, Err(e)) => passed &= fail(&mut parts, format!("convergence: {e}")),
    }

    match conservation_drift() {
        Ok((drift, tr, p)) => {
            mass.push(("conservation".into(), check_mass_bound(&tr.series, &p)));
            passed &= drift <= 1e-12;
            parts.push(format!("mass drift {drift:.2e} per unit time (tol 1e-12)"));
        }
        Err(e) => passed &= fail(&mut parts, format!("conservation: {e}")),
    }

    match linear_rate() {
        Ok((fitted, predicted, tr, p)) => {
            mass.push(("linear rate".into(), check_mass_bound(&tr.series, &p)));
            let rel = relerr(fitted, predicted);
            passed &= (fitted - predicted).abs() <= 0.15 * predicted.abs();
            parts.push(format!(
                "growth rate {fitted:.4} vs eigenvalue {predicted:.4} (rel {rel:.3}, tol 0.15)"
            ));
        }
        Err(e) => passed &= fail(&mut parts, format!("linear rate: {e}")),
    }

    match scheme_agreement() {
        Ok((diff, tol)) => {
            passed &= diff <= tol;
            parts.push(format!("explicit vs semi-implicit {diff:.2e} (tol {tol:.2e})"));
        }
        Err(e) => passed &= fail(&mut parts, format!("scheme agreement: {e}")),
    }

    let violations: Vec<&str> = mass.iter().filter(|(_, r)| !r.ok()).map(|(l, _)| l.as_str()).collect();
    let worst = mass
        .iter()
        .map(|(_, r)| r.u.min_residual.min(r.v.min_residual))
        .fold(f64::INFINITY, f64::min);
    passed &= violations.is_empty();
    parts.push(format!(
        "mass bound on {} runs: min slack {worst:.3e}, violations [{}]",
        mass.len(),
        violations.join(", ")
    ));

    CriterionResult {
        id: 9,
        name: "solver properties",
        passed,
        detail: parts.join("; "),
    }
}

/// Runs every criterion in order. Criterion 9 audits the mass bound of the
/// simulation runs made by 6, 7, 8 and 10, so it is evaluated last.
pub fn run_all() -> Vec<CriterionResult> {
    let mut mass = MassLog::new();
    let mut out = vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(&mut mass),
        criterion_7(&mut mass),
        criterion_8(&mut mass),
        criterion_10(&mut mass),
    ];
    out.push(criterion_9(&mut mass));
    out.sort_by_key(|r| r.id);
    out
}
