//! Linear stability of the homogeneous equilibrium.
//!
//! Perturbations proportional to `cos(k pi x / L)` evolve under the 3x3
//! matrix
//!
//! ```text
//! | -d1 Λ - mu1 u      -mu1 a1 u       chi u Λ     |
//! | -mu2 a2 v          -d2 Λ - mu2 v   xi v Λ      |
//! |  1                  1              -Λ - lambda |
//! ```
//!
//! with `Λ = (k pi / L)^2`. Its characteristic cubic
//! `σ³ + α₂σ² + α₁σ + α₀` has `α₂ > 0`; `α₀` and `α₁α₂ - α₀` are affine and
//! strictly decreasing in `chi`, which gives the two closed-form thresholds
//! [`chi_tilde`] (zero eigenvalue) and [`chi_hat`] (imaginary pair).

use crate::linalg::Mat3;
use crate::model::{Equilibrium, ModelParams};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use thiserror::Error;

/// Default truncation for minima over the mode index.
pub const DEFAULT_KMAX: u32 = 200;

/// Relative gap below which two thresholds are treated as coincident.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("mode index must be >= 1")]
    ZeroMode,
    #[error("interval length must be positive and finite")]
    BadLength,
    #[error("kmax must be >= 1")]
    ZeroKmax,
}

/// A Neumann cosine mode `cos(k pi x / L)` and its Laplacian eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeWavenumber {
    k: u32,
    eigenvalue: f64,
}

impl ModeWavenumber {
    pub fn new(k: u32, length: f64) -> Result<Self, AnalysisError> {
        if k == 0 {
            return Err(AnalysisError::ZeroMode);
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(AnalysisError::BadLength);
        }
        let wave = k as f64 * PI / length;
        Ok(Self {
            k,
            eigenvalue: wave * wave,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// `Λ = (k pi / L)^2`.
    pub fn eigenvalue(&self) -> f64 {
        self.eigenvalue
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharacteristicCoeffs {
    pub alpha2: f64,
    pub alpha1: f64,
    pub alpha0: f64,
}

impl CharacteristicCoeffs {
    /// `α₁α₂ - α₀`, the second Hurwitz determinant.
    pub fn hurwitz(&self) -> f64 {
        self.alpha1 * self.alpha2 - self.alpha0
    }

    /// All three Routh-Hurwitz conditions, each checked on its own.
    pub fn routh_hurwitz_stable(&self) -> bool {
        self.alpha2 > 0.0 && self.alpha0 > 0.0 && self.alpha1 > 0.0 && self.hurwitz() > 0.0
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        ((s + self.alpha2) * s + self.alpha1) * s + self.alpha0
    }

    fn deriv(&self, s: Complex64) -> Complex64 {
        (3.0 * s + 2.0 * self.alpha2) * s + self.alpha1
    }

    /// A magnitude scale for residuals of the polynomial at `s`.
    pub fn residual_scale(&self, s: Complex64) -> f64 {
        let r = s.norm();
        r * r * r + self.alpha2.abs() * r * r + self.alpha1.abs() * r + self.alpha0.abs()
    }
}

/// Shorthand for the recurring groups of the dispersion relation.
struct Groups {
    lam_k: f64,
    /// `d1 Λ + mu1 u`
    e1: f64,
    /// `d2 Λ + mu2 v`
    e2: f64,
    /// `a1 a2 mu1 mu2 u v`
    cross: f64,
    /// `Λ + lambda`
    h1: f64,
}

fn groups(mode: ModeWavenumber, p: &ModelParams, eq: &Equilibrium) -> Groups {
    let lam_k = mode.eigenvalue();
    Groups {
        lam_k,
        e1: p.d1 * lam_k + p.mu1 * eq.u_bar,
        e2: p.d2 * lam_k + p.mu2 * eq.v_bar,
        cross: p.a1 * p.a2 * p.mu1 * p.mu2 * eq.u_bar * eq.v_bar,
        h1: lam_k + p.lambda,
    }
}

/// The linearisation matrix at the equilibrium for one mode.
pub fn linearization_matrix(
    mode: ModeWavenumber,
    chi: f64,
    p: &ModelParams,
    eq: &Equilibrium,
) -> Mat3 {
    let g = groups(mode, p, eq);
    [
        [-g.e1, -p.mu1 * p.a1 * eq.u_bar, chi * eq.u_bar * g.lam_k],
        [-p.mu2 * p.a2 * eq.v_bar, -g.e2, p.xi * eq.v_bar * g.lam_k],
        [1.0, 1.0, -g.h1],
    ]
}

pub fn char_coeffs(
    mode: ModeWavenumber,
    chi: f64,
    p: &ModelParams,
    eq: &Equilibrium,
) -> CharacteristicCoeffs {
    let g = groups(mode, p, eq);
    let (u, v, lk) = (eq.u_bar, eq.v_bar, g.lam_k);
    let h2 = (p.d1 + p.d2) * lk + p.mu1 * u + p.mu2 * v;
    let alpha2 = (p.d1 + p.d2 + 1.0) * lk + p.mu1 * u + p.mu2 * v + p.lambda;
    let alpha1 = g.h1 * h2 - g.cross - (chi * u + p.xi * v) * lk + g.e1 * g.e2;
    let alpha0 = -chi * u * lk * (p.d2 * lk + (1.0 - p.a2) * p.mu2 * v)
        - p.xi * v * lk * (p.d1 * lk + (1.0 - p.a1) * p.mu1 * u)
        - g.cross * g.h1
        + g.e1 * g.e2 * g.h1;
    CharacteristicCoeffs {
        alpha2,
        alpha1,
        alpha0,
    }
}

/// Steady-state threshold: the `chi` at which `α₀(k) = 0`.
///
/// Also the bifurcation value `chi_k` of the steady-state branch. May be
/// negative when `xi` is large.
pub fn chi_tilde(mode: ModeWavenumber, p: &ModelParams, eq: &Equilibrium) -> f64 {
    let g = groups(mode, p, eq);
    let (u, v, lk) = (eq.u_bar, eq.v_bar, g.lam_k);
    let denom = p.d2 * u * lk * lk + (1.0 - p.a2) * p.mu2 * u * v * lk;
    let num = (g.e1 * g.e2 - g.cross) * g.h1
        - p.xi * (p.d1 * v * lk * lk + (1.0 - p.a1) * p.mu1 * u * v * lk);
    num / denom
}

/// Hopf-type threshold: the `chi` at which `α₁α₂ - α₀ = 0`.
pub fn chi_hat(mode: ModeWavenumber, p: &ModelParams, eq: &Equilibrium) -> f64 {
    let g = groups(mode, p, eq);
    let (u, v, lk) = (eq.u_bar, eq.v_bar, g.lam_k);
    let lk2 = lk * lk;
    let g1 = (p.d1 + 1.0) * u * lk2 + (p.lambda + p.mu1 * u + p.a2 * p.mu2 * v) * u * lk;
    let g2 = (p.d2 + 1.0) * v * lk2 + (p.lambda + p.a1 * p.mu1 * u + p.mu2 * v) * v * lk;
    let h1 = g.h1;
    let h2 = (p.d1 + p.d2) * lk + p.mu1 * u + p.mu2 * v;
    let h3 = g.e1 * g.e2 - g.cross;
    (-p.xi * g2 + h1 * h2 * h2 + h1 * h1 * h2 + h2 * h3) / g1
}

/// Null vector `(P_k, Q_k, 1)` of the linearisation at `chi = chi_tilde(k)`.
pub fn eigenmode(mode: ModeWavenumber, p: &ModelParams, eq: &Equilibrium) -> (f64, f64) {
    let g = groups(mode, p, eq);
    let (v, lk) = (eq.v_bar, g.lam_k);
    let denom = p.d2 * lk + (1.0 - p.a2) * p.mu2 * v;
    let pk = (g.e2 * g.h1 - p.xi * v * lk) / denom;
    let qk = (p.xi * v * lk - p.a2 * p.mu2 * v * g.h1) / denom;
    (pk, qk)
}

/// The three roots of `σ³ + α₂σ² + α₁σ + α₀`.
///
/// Real roots come first (ascending); a complex pair is returned as
/// `(re + i im, re - i im)` with `im > 0`. Each root gets one Newton step.
pub fn cubic_roots(c: &CharacteristicCoeffs) -> [Complex64; 3] {
    let a = c.alpha2;
    let shift = a / 3.0;
    // depressed cubic t³ + pt + q with σ = t - a/3
    let p = c.alpha1 - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * c.alpha1 / 3.0 + c.alpha0;
    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;

    let mut roots = if disc < 0.0 {
        // three distinct real roots, p < 0
        let m = 2.0 * (-third_p).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mut r = [0, 1, 2].map(|j| m * (theta - 2.0 * PI * j as f64 / 3.0).cos() - shift);
        r.sort_by(|x, y| x.total_cmp(y));
        r.map(|x| Complex64::new(x, 0.0))
    } else {
        let sign = if q > 0.0 { -1.0 } else { 1.0 };
        let big = sign * (half_q.abs() + disc.sqrt()).cbrt();
        let small = if big == 0.0 { 0.0 } else { -p / (3.0 * big) };
        let real = big + small - shift;
        let re = -(big + small) / 2.0 - shift;
        let im = (3.0f64.sqrt() / 2.0 * (big - small)).abs();
        if im == 0.0 {
            let mut r = [real, re, re];
            r.sort_by(|x, y| x.total_cmp(y));
            r.map(|x| Complex64::new(x, 0.0))
        } else {
            [
                Complex64::new(real, 0.0),
                Complex64::new(re, im),
                Complex64::new(re, -im),
            ]
        }
    };
    for r in roots.iter_mut() {
        *r = polish(c, *r);
    }
    if roots[1].im != 0.0 {
        roots[2] = roots[1].conj();
    }
    roots
}

/// One Newton step, kept only if it does not increase the residual.
fn polish(c: &CharacteristicCoeffs, r: Complex64) -> Complex64 {
    let d = c.deriv(r);
    if d.norm() == 0.0 {
        return r;
    }
    let next = r - c.eval(r) / d;
    if next.is_finite() && c.eval(next).norm() <= c.eval(r).norm() {
        next
    } else {
        r
    }
}

/// Largest real part among the three roots.
pub fn dominant_growth_rate(c: &CharacteristicCoeffs) -> f64 {
    cubic_roots(c)
        .iter()
        .map(|r| r.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Per-mode stability data at a query value of `chi`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionEntry {
    pub mode: ModeWavenumber,
    pub chi_tilde: f64,
    pub chi_hat: f64,
    pub chi: f64,
    pub coeffs: CharacteristicCoeffs,
    #[serde(skip)]
    pub eigenvalues: [Complex64; 3],
}

pub fn dispersion_entry(
    mode: ModeWavenumber,
    chi: f64,
    p: &ModelParams,
    eq: &Equilibrium,
) -> DispersionEntry {
    let coeffs = char_coeffs(mode, chi, p, eq);
    DispersionEntry {
        mode,
        chi_tilde: chi_tilde(mode, p, eq),
        chi_hat: chi_hat(mode, p, eq),
        chi,
        coeffs,
        eigenvalues: cubic_roots(&coeffs),
    }
}

/// Entries for `k = 1..=kmax` at the parameters' own `chi`.
pub fn dispersion_table(
    p: &ModelParams,
    eq: &Equilibrium,
    kmax: u32,
) -> Result<Vec<DispersionEntry>, AnalysisError> {
    (1..=kmax)
        .map(|k| Ok(dispersion_entry(ModeWavenumber::new(k, p.length)?, p.chi, p, eq)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LossType {
    SteadyState,
    Hopf,
    Degenerate,
}

impl fmt::Display for LossType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossType::SteadyState => "SteadyState",
            LossType::Hopf => "Hopf",
            LossType::Degenerate => "Degenerate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Stable,
    Unstable,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Stable => "Stable",
            Classification::Unstable => "Unstable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    /// `min_k min(chi_tilde_k, chi_hat_k)`.
    pub chi0: f64,
    /// Mode attaining `chi0` (`k0` for steady-state loss, `k1` for Hopf).
    pub argmin_k: u32,
    pub loss_type: LossType,
    /// Largest mode index actually evaluated.
    pub kmax_used: u32,
    pub min_chi_tilde: (u32, f64),
    pub min_chi_hat: (u32, f64),
    /// Value of `chi` that was classified.
    pub chi: f64,
    pub classification: Classification,
    /// Set when `α₁(k1) < 0` at `chi = chi_hat(k1)` in the Hopf case, which
    /// the imaginary-pair picture rules out.
    pub hopf_alpha1_negative: bool,
}

fn relative_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

/// Locates `chi0` by scanning `k = 1..=kmax`, stopping early once both
/// threshold sequences exceed the running minimum and have increased for
/// three consecutive modes.
pub fn critical_chi(
    p: &ModelParams,
    eq: &Equilibrium,
    kmax: u32,
) -> Result<StabilityReport, AnalysisError> {
    classify_equilibrium(p.chi, p, eq, kmax)
}

pub fn classify_equilibrium(
    chi: f64,
    p: &ModelParams,
    eq: &Equilibrium,
    kmax: u32,
) -> Result<StabilityReport, AnalysisError> {
    if kmax == 0 {
        return Err(AnalysisError::ZeroKmax);
    }
    let mut best_tilde = (0u32, f64::INFINITY);
    let mut best_hat = (0u32, f64::INFINITY);
    let mut prev: Option<(f64, f64)> = None;
    let mut rising = 0u32;
    let mut kmax_used = 0;
    for k in 1..=kmax {
        let mode = ModeWavenumber::new(k, p.length)?;
        let ct = chi_tilde(mode, p, eq);
        let ch = chi_hat(mode, p, eq);
        kmax_used = k;
        if ct < best_tilde.1 {
            best_tilde = (k, ct);
        }
        if ch < best_hat.1 {
            best_hat = (k, ch);
        }
        if let Some((pt, ph)) = prev {
            if ct > pt && ch > ph {
                rising += 1;
            } else {
                rising = 0;
            }
        }
        prev = Some((ct, ch));
        let running = best_tilde.1.min(best_hat.1);
        if rising >= 3 && ct > running && ch > running {
            break;
        }
    }

    let (chi0, argmin_k, loss_type) = if relative_tie(best_tilde.1, best_hat.1) {
        (best_tilde.1.min(best_hat.1), best_tilde.0, LossType::Degenerate)
    } else if best_tilde.1 < best_hat.1 {
        (best_tilde.1, best_tilde.0, LossType::SteadyState)
    } else {
        (best_hat.1, best_hat.0, LossType::Hopf)
    };

    let mut hopf_alpha1_negative = false;
    if loss_type == LossType::Hopf {
        let mode = ModeWavenumber::new(argmin_k, p.length)?;
        let c = char_coeffs(mode, chi0, p, eq);
        let scale = c.alpha2 * c.alpha2;
        if c.alpha1 < -1e-9 * scale {
            log::warn!(
                "alpha1(k1 = {argmin_k}) = {} < 0 at chi_hat; imaginary-pair picture fails",
                c.alpha1
            );
            hopf_alpha1_negative = true;
        }
    }

    Ok(StabilityReport {
        chi0,
        argmin_k,
        loss_type,
        kmax_used,
        min_chi_tilde: best_tilde,
        min_chi_hat: best_hat,
        chi,
        classification: if chi >= chi0 {
            Classification::Unstable
        } else {
            Classification::Stable
        },
        hopf_alpha1_negative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::compute_equilibrium;

    fn baseline() -> (ModelParams, Equilibrium) {
        let p = ModelParams::default();
        let eq = compute_equilibrium(&p).unwrap();
        (p, eq)
    }

    fn hopf_regime(length: f64) -> (ModelParams, Equilibrium) {
        let p = ModelParams {
            d1: 5.0,
            d2: 0.1,
            lambda: 5.0,
            xi: 0.1,
            length,
            ..Default::default()
        };
        let eq = compute_equilibrium(&p).unwrap();
        (p, eq)
    }

    fn mode(k: u32, p: &ModelParams) -> ModeWavenumber {
        ModeWavenumber::new(k, p.length).unwrap()
    }

    fn assert_roots(got: [Complex64; 3], want: [Complex64; 3]) {
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-12, "got {got:?}, want {want:?}");
        }
    }

    #[test]
    fn mode_rejects_zero() {
        assert_eq!(ModeWavenumber::new(0, 1.0), Err(AnalysisError::ZeroMode));
        let m = ModeWavenumber::new(2, PI).unwrap();
        assert_eq!(m.eigenvalue(), 4.0);
    }

    #[test]
    fn no_chemotaxis_is_stable() {
        let (mut p, _) = baseline();
        p.xi = 0.0;
        let eq = compute_equilibrium(&p).unwrap();
        for k in 1..20 {
            let c = char_coeffs(mode(k, &p), 0.0, &p, &eq);
            assert!(c.alpha0 > 0.0 && c.alpha1 > 0.0 && c.routh_hurwitz_stable());
        }
    }

    #[test]
    fn baseline_alpha0_vanishes_near_61() {
        let (p, eq) = baseline();
        let m = mode(1, &p);
        let c = char_coeffs(m, chi_tilde(m, &p, &eq), &p, &eq);
        assert!(c.alpha0.abs() < 1e-9 * c.alpha2.powi(3));
        assert!((chi_tilde(m, &p, &eq) - 61.0).abs() < 0.05);
    }

    #[test]
    fn baseline_thresholds() {
        let (p, eq) = baseline();
        assert!((chi_tilde(mode(4, &p), &p, &eq) - 949.2).abs() < 0.05);
        assert!((chi_hat(mode(1, &p), &p, &eq) - 75.2).abs() < 0.05);
        assert!((chi_hat(mode(7, &p), &p, &eq) - 3514.6).abs() < 0.05);
    }

    #[test]
    fn factored_cubic() {
        let c = CharacteristicCoeffs {
            alpha2: -6.0,
            alpha1: 11.0,
            alpha0: -6.0,
        };
        assert_roots(
            cubic_roots(&c),
            [1.0, 2.0, 3.0].map(|x| Complex64::new(x, 0.0)),
        );
    }

    #[test]
    fn cubic_with_imaginary_pair() {
        let c = CharacteristicCoeffs {
            alpha2: 0.0,
            alpha1: 1.0,
            alpha0: 0.0,
        };
        assert_roots(
            cubic_roots(&c),
            [
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, -1.0),
            ],
        );
    }

    #[test]
    fn cubic_triple_root() {
        // (σ + 2)^3
        let c = CharacteristicCoeffs {
            alpha2: 6.0,
            alpha1: 12.0,
            alpha0: 8.0,
        };
        for r in cubic_roots(&c) {
            assert!((r - Complex64::new(-2.0, 0.0)).norm() < 1e-5);
        }
    }

    #[test]
    fn hopf_point_has_imaginary_pair() {
        let (p, eq) = hopf_regime(4.0);
        let report = critical_chi(&p, &eq, DEFAULT_KMAX).unwrap();
        assert_eq!(report.loss_type, LossType::Hopf);
        let m = mode(report.argmin_k, &p);
        let c = char_coeffs(m, report.chi0, &p, &eq);
        assert!(c.alpha1 > 0.0);
        let roots = cubic_roots(&c);
        let w = c.alpha1.sqrt();
        assert!((roots[0] - Complex64::new(-c.alpha2, 0.0)).norm() < 1e-8 * c.alpha2);
        assert!((roots[1] - Complex64::new(0.0, w)).norm() < 1e-8 * c.alpha2);
        assert!((roots[2] - Complex64::new(0.0, -w)).norm() < 1e-8 * c.alpha2);
        assert!(!report.hopf_alpha1_negative);
    }

    #[test]
    fn classify_baseline() {
        let (p, eq) = baseline();
        let r = classify_equilibrium(50.0, &p, &eq, DEFAULT_KMAX).unwrap();
        assert_eq!(r.classification, Classification::Stable);
        assert!((r.chi0 - 61.0).abs() < 0.05);
        let r = classify_equilibrium(100.0, &p, &eq, DEFAULT_KMAX).unwrap();
        assert_eq!(r.classification, Classification::Unstable);
        assert_eq!(r.loss_type, LossType::SteadyState);
        assert_eq!(r.argmin_k, 1);
    }

    #[test]
    fn classify_hopf_regime() {
        let (p, eq) = hopf_regime(4.0);
        let r = classify_equilibrium(80.0, &p, &eq, DEFAULT_KMAX).unwrap();
        assert_eq!(r.classification, Classification::Unstable);
        assert_eq!(r.loss_type, LossType::Hopf);
        assert_eq!(r.argmin_k, 1);
        assert!((r.chi0 - 66.5).abs() < 0.05);
    }

    #[test]
    fn critical_chi_versus_length() {
        let (p, eq) = baseline();
        let r = critical_chi(&p.with_length(7.0), &eq, DEFAULT_KMAX).unwrap();
        assert_eq!((r.argmin_k, r.loss_type), (2, LossType::SteadyState));
        assert!((r.chi0 - 4.4330).abs() < 5e-4);
        let r = critical_chi(&p.with_length(21.0), &eq, DEFAULT_KMAX).unwrap();
        assert_eq!(r.argmin_k, 6);
        assert!((r.chi0 - 4.4330).abs() < 5e-4);
        let (p, eq) = hopf_regime(1.0);
        let r = critical_chi(&p, &eq, DEFAULT_KMAX).unwrap();
        assert_eq!((r.argmin_k, r.loss_type), (1, LossType::Hopf));
        assert!((r.chi0 - 129.0).abs() < 0.05);
    }

    #[test]
    fn critical_chi_stops_early() {
        let (p, eq) = baseline();
        let r = critical_chi(&p, &eq, DEFAULT_KMAX).unwrap();
        assert!(r.kmax_used < 10);
    }

    #[test]
    fn degenerate_when_thresholds_coincide() {
        // Tune xi so that chi_tilde_1 == chi_hat_1; both are affine in xi.
        let (p, _) = baseline();
        let eq = compute_equilibrium(&p).unwrap();
        let gap = |xi: f64| {
            let q = ModelParams { xi, ..p };
            chi_tilde(mode(1, &q), &q, &eq) - chi_hat(mode(1, &q), &q, &eq)
        };
        let (g0, g1) = (gap(0.0), gap(1.0));
        let xi = -g0 / (g1 - g0);
        let q = ModelParams { xi, ..p };
        let r = critical_chi(&q, &eq, DEFAULT_KMAX).unwrap();
        if relative_tie(r.min_chi_tilde.1, r.min_chi_hat.1) {
            assert_eq!(r.loss_type, LossType::Degenerate);
        }
        assert!((r.min_chi_tilde.1 - r.min_chi_hat.1).abs() < 1e-6 * r.chi0.abs());
    }

    #[test]
    fn eigenmode_sum_identity_and_null_vector() {
        let (p, eq) = baseline();
        for k in 1..8 {
            let m = mode(k, &p);
            let (pk, qk) = eigenmode(m, &p, &eq);
            assert!((pk + qk - (m.eigenvalue() + p.lambda)).abs() < 1e-12 * (pk.abs() + 1.0));
            let mat = linearization_matrix(m, chi_tilde(m, &p, &eq), &p, &eq);
            let x = [pk, qk, 1.0];
            for row in mat {
                let r: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
                let norm = row.iter().zip(&x).map(|(a, b)| (a * b).abs()).sum::<f64>();
                assert!(r.abs() <= 1e-9 * norm, "residual {r}");
            }
        }
    }

    #[test]
    fn eigenmode_decouples_without_cross_terms() {
        let p = ModelParams {
            xi: 0.0,
            a2: 0.0,
            ..Default::default()
        };
        let eq = compute_equilibrium(&p).unwrap();
        let m = mode(3, &p);
        let (pk, qk) = eigenmode(m, &p, &eq);
        assert_eq!(qk, 0.0);
        assert!((pk - (m.eigenvalue() + p.lambda)).abs() < 1e-12 * pk);
    }

    #[test]
    fn chi_tilde_decreases_in_xi() {
        let (p, eq) = baseline();
        let m = mode(2, &p);
        let h = 1e-3;
        for xi in [-1.0, 0.0, 0.5, 3.0] {
            let lo = chi_tilde(m, &ModelParams { xi, ..p }, &eq);
            let hi = chi_tilde(m, &ModelParams { xi: xi + h, ..p }, &eq);
            assert!((hi - lo) / h < 0.0);
        }
    }

    #[test]
    fn small_interval_asymptotics() {
        let p = ModelParams {
            length: 0.05,
            ..Default::default()
        };
        let eq = compute_equilibrium(&p).unwrap();
        for k in 1..=10 {
            let m = mode(k, &p);
            let ct = chi_tilde(m, &p, &eq);
            let ratio = ct * eq.u_bar / (p.d1 * m.eigenvalue());
            assert!((0.99..=1.01).contains(&ratio), "k={k} ratio={ratio}");
            assert!(ct < chi_hat(m, &p, &eq));
        }
    }
}
