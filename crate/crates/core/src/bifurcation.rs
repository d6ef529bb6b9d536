//! Weakly nonlinear analysis of the steady-state branches.
//!
//! At `chi = chi_k` a branch of nonconstant steady states leaves the
//! equilibrium along `(P_k, Q_k, 1) cos(k pi x / L)`. Writing the branch as
//! `chi_k(s) = chi_k + s K1 + s² K2 + o(s²)`, the first coefficient vanishes
//! (pitchfork) and `K2` is a finite combination of projections of the
//! second- and third-order correctors. Those projections solve three 3x3
//! systems:
//!
//! * the mean system (projections against `1`),
//! * the double-mode system (projections against `cos(2k pi x / L)`),
//! * the second-order system (third-order correctors against `cos(k pi x / L)`),
//!   whose right-hand side is the scalar `G`.
//!
//! Every system is solved by Cramer's rule with compensated determinants.

use crate::linalg::{self, cramer, det3, row_norms, Mat3};
use crate::linear_analysis::{
    self, chi_hat, chi_tilde, eigenmode, AnalysisError, LossType, ModeWavenumber,
    StabilityReport,
};
use crate::model::{Equilibrium, ModelParams};
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use thiserror::Error;

/// `|det C|` below this fraction of the product of its row norms counts as
/// resonant.
pub const NEAR_SINGULAR_RTOL: f64 = 1e-10;

/// Diffusion rates below this are outside the regime where the asymptotic
/// sign law is meaningful.
pub const DEFAULT_LARGE_DIFFUSION_FLOOR: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BifurcationError {
    #[error("competition matrix is singular (a1 * a2 = 1)")]
    SingularMean,
    #[error("double-mode system is near singular at k = {k}: |det C| = {det:e}, row-norm product {scale:e}")]
    NearSingular { k: u32, det: f64, scale: f64 },
    #[error("chi_tilde and chi_hat coincide at k = {k}; the kernel is not one-dimensional")]
    Degenerate { k: u32 },
    #[error("second-order system is singular at k = {k}")]
    SingularSecondOrder { k: u32 },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Projections of the correctors needed to assemble `K2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionIntegrals {
    pub mean_phi1: f64,
    pub mean_psi1: f64,
    pub mean_gamma1: f64,
    pub double_phi1: f64,
    pub double_psi1: f64,
    pub double_gamma1: f64,
    pub second_phi2: f64,
    pub second_psi2: f64,
    pub second_gamma2: f64,
    pub g_value: f64,
}

/// Local stability of a branch near its bifurcation point, as predicted by
/// the sign of `K2` and the loss type of the equilibrium. Only meaningful
/// for `chi` close to `chi_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LocalStability {
    Stable,
    Unstable,
    NotApplicable,
}

impl fmt::Display for LocalStability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LocalStability::Stable => "Stable",
            LocalStability::Unstable => "Unstable",
            LocalStability::NotApplicable => "NotApplicable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchInfo {
    pub k: u32,
    pub chi_k: f64,
    pub p_k: f64,
    pub q_k: f64,
    /// Always zero: the bifurcation is a pitchfork.
    pub k1: f64,
    pub k2: f64,
    pub k2_asymptotic_sign: i8,
    pub lambda_star: f64,
    /// `d1` or `d2` is below the large-diffusion floor, so the asymptotic
    /// sign is only indicative.
    pub asymptotic_regime_warning: bool,
    pub predicted_stability_near_bifurcation: LocalStability,
    pub integrals: ProjectionIntegrals,
}

/// Shared per-mode quantities.
struct ModeData {
    lam_k: f64,
    chi_k: f64,
    pk: f64,
    qk: f64,
}

fn mode_data(k: u32, p: &ModelParams, eq: &Equilibrium) -> Result<ModeData, AnalysisError> {
    let mode = ModeWavenumber::new(k, p.length)?;
    let (pk, qk) = eigenmode(mode, p, eq);
    Ok(ModeData {
        lam_k: mode.eigenvalue(),
        chi_k: chi_tilde(mode, p, eq),
        pk,
        qk,
    })
}

/// Matrix `B` and right-hand side of the mean system.
pub fn mean_system(k: u32, p: &ModelParams, eq: &Equilibrium) -> Result<(Mat3, [f64; 3]), AnalysisError> {
    let m = mode_data(k, p, eq)?;
    let len = p.length;
    let b = [
        [1.0, p.a1, 0.0],
        [p.a2, 1.0, 0.0],
        [1.0, 1.0, -p.lambda],
    ];
    let rhs = [
        -len / (2.0 * eq.u_bar) * m.pk * (m.pk + p.a1 * m.qk),
        -len / (2.0 * eq.v_bar) * m.qk * (m.qk + p.a2 * m.pk),
        0.0,
    ];
    Ok((b, rhs))
}

/// Integrals of the second-order correctors over `(0, L)`.
pub fn solve_mean_system(
    k: u32,
    p: &ModelParams,
    eq: &Equilibrium,
) -> Result<[f64; 3], BifurcationError> {
    let (b, rhs) = mean_system(k, p, eq)?;
    cramer(&b, &rhs)
        .map(|s| s.x)
        .ok_or(BifurcationError::SingularMean)
}

/// Matrix `C` and right-hand side of the double-mode system at `chi`.
pub fn double_mode_system(
    k: u32,
    p: &ModelParams,
    eq: &Equilibrium,
    chi_k: f64,
) -> Result<(Mat3, [f64; 3]), AnalysisError> {
    let m = mode_data(k, p, eq)?;
    let (u, v, len) = (eq.u_bar, eq.v_bar, p.length);
    let lam2 = 4.0 * m.lam_k;
    let c = [
        [-(p.d1 * lam2 + p.mu1 * u), -p.a1 * p.mu1 * u, chi_k * u * lam2],
        [-p.a2 * p.mu2 * v, -(p.d2 * lam2 + p.mu2 * v), p.xi * v * lam2],
        [1.0, 1.0, -(lam2 + p.lambda)],
    ];
    let rhs = [
        -chi_k * len / 2.0 * m.pk * m.lam_k + p.mu1 * len / 4.0 * m.pk * (m.pk + p.a1 * m.qk),
        -p.xi * len / 2.0 * m.qk * m.lam_k + p.mu2 * len / 4.0 * m.qk * (m.qk + p.a2 * m.pk),
        0.0,
    ];
    Ok((c, rhs))
}

/// Projections of the second-order correctors against `cos(2k pi x / L)`.
pub fn solve_double_mode_system(
    k: u32,
    p: &ModelParams,
    eq: &Equilibrium,
    chi_k: f64,
) -> Result<[f64; 3], BifurcationError> {
    let (c, rhs) = double_mode_system(k, p, eq, chi_k)?;
    let det = det3(&c);
    let scale: f64 = row_norms(&c).iter().product();
    if det.abs() < NEAR_SINGULAR_RTOL * scale {
        return Err(BifurcationError::NearSingular { k, det, scale });
    }
    cramer(&c, &rhs)
        .map(|s| s.x)
        .ok_or(BifurcationError::NearSingular { k, det, scale })
}

/// The scalar right-hand side `G` of the second-order system.
pub fn rhs_g(
    k: u32,
    p: &ModelParams,
    eq: &Equilibrium,
    double: &[f64; 3],
    mean: &[f64; 3],
) -> Result<f64, AnalysisError> {
    Ok(linalg::compensated_sum(&g_terms(k, p, eq, double, mean)?))
}

/// The five terms of `G`, in the order they are usually written.
pub fn g_terms(
    k: u32,
    p: &ModelParams,
    _eq: &Equilibrium,
    double: &[f64; 3],
    mean: &[f64; 3],
) -> Result<[f64; 5], AnalysisError> {
    let m = mode_data(k, p, _eq)?;
    let (pk, qk, lk) = (m.pk, m.qk, m.lam_k);
    let half_a2mu2 = p.a2 * p.mu2 / 2.0;
    Ok([
        half_a2mu2 * qk * double[0],
        (p.xi / 2.0 * lk + half_a2mu2 * pk + p.mu2 * qk) * double[1],
        -p.xi * qk * lk * double[2],
        half_a2mu2 * qk * mean[0],
        (half_a2mu2 * pk + p.mu2 * qk - p.xi / 2.0 * lk) * mean[1],
    ])
}

/// Matrix `A` of the second-order system (also the orthogonality matrix
/// that forces `K1 = 0`).
pub fn second_order_matrix(k: u32, p: &ModelParams, eq: &Equilibrium) -> Result<Mat3, AnalysisError> {
    let m = mode_data(k, p, eq)?;
    let v = eq.v_bar;
    Ok([
        [-p.a2 * p.mu2 * v, -(p.d2 * m.lam_k + p.mu2 * v), p.xi * v * m.lam_k],
        [1.0, 1.0, -(m.lam_k + p.lambda)],
        [m.pk, m.qk, 1.0],
    ])
}

/// `det A` in its expanded, manifestly positive form
/// `D + (N_P² + N_Q²) / D` with `D = d2 Λ + (1 - a2) mu2 v`,
/// `N_P = P_k D` and `N_Q = Q_k D`.
pub fn second_order_det_expanded(k: u32, p: &ModelParams, eq: &Equilibrium) -> Result<f64, AnalysisError> {
    let m = mode_data(k, p, eq)?;
    let v = eq.v_bar;
    let lk = m.lam_k;
    let h1 = lk + p.lambda;
    let d = p.d2 * lk + (1.0 - p.a2) * p.mu2 * v;
    let np = (p.d2 * lk + p.mu2 * v) * h1 - p.xi * v * lk;
    let nq = p.xi * v * lk - p.a2 * p.mu2 * v * h1;
    Ok(d + (np * np + nq * nq) / d)
}

/// Projections of the third-order correctors against `cos(k pi x / L)`.
pub fn solve_second_order_system(
    k: u32,
    p: &ModelParams,
    eq: &Equilibrium,
    g: f64,
) -> Result<[f64; 3], BifurcationError> {
    let a = second_order_matrix(k, p, eq)?;
    cramer(&a, &[g, 0.0, 0.0])
        .map(|s| s.x)
        .ok_or(BifurcationError::SingularSecondOrder { k })
}

/// All projections entering `K2` for mode `k`.
pub fn projection_integrals(
    k: u32,
    p: &ModelParams,
    eq: &Equilibrium,
) -> Result<ProjectionIntegrals, BifurcationError> {
    let m = mode_data(k, p, eq)?;
    let mean = solve_mean_system(k, p, eq)?;
    let double = solve_double_mode_system(k, p, eq, m.chi_k)?;
    let g = rhs_g(k, p, eq, &double, &mean)?;
    let second = solve_second_order_system(k, p, eq, g)?;
    Ok(ProjectionIntegrals {
        mean_phi1: mean[0],
        mean_psi1: mean[1],
        mean_gamma1: mean[2],
        double_phi1: double[0],
        double_psi1: double[1],
        double_gamma1: double[2],
        second_phi2: second[0],
        second_psi2: second[1],
        second_gamma2: second[2],
        g_value: g,
    })
}

/// The eight terms whose sum equals `u (k pi)² / (2L) * K2`.
fn k2_terms(m: &ModeData, p: &ModelParams, eq: &Equilibrium, ints: &ProjectionIntegrals) -> [f64; 8] {
    let (u, pk, qk, lk) = (eq.u_bar, m.pk, m.qk, m.lam_k);
    let a1mu1 = p.a1 * p.mu1;
    let e1 = p.d1 * lk + p.mu1 * u;
    [
        ((p.d1 * lk / (2.0 * u) + 1.5 * p.mu1) * pk + a1mu1 * qk) * ints.double_phi1,
        a1mu1 / 2.0 * pk * ints.double_psi1,
        -((p.d1 * lk / u + p.mu1) * pk * pk + a1mu1 * pk * qk) * ints.double_gamma1,
        e1 * ints.second_phi2,
        a1mu1 * u * ints.second_psi2,
        -(e1 * pk + a1mu1 * u * qk) * ints.second_gamma2,
        -(p.d1 * lk / (2.0 * u) - p.mu1 / 2.0) * pk * ints.mean_phi1,
        a1mu1 / 2.0 * pk * ints.mean_psi1,
    ]
}

/// Threshold decay rate `(14 - 2 a1 a2) (k pi / L)² / (1 - a1 a2)` and the
/// sign of `lambda_star - lambda`.
pub fn k2_asymptotic_sign(k: u32, p: &ModelParams) -> Result<(i8, f64), AnalysisError> {
    let mode = ModeWavenumber::new(k, p.length)?;
    let prod = p.a1 * p.a2;
    let lambda_star = (14.0 - 2.0 * prod) * mode.eigenvalue() / (1.0 - prod);
    let diff = lambda_star - p.lambda;
    let sign = if diff > 0.0 {
        1
    } else if diff < 0.0 {
        -1
    } else {
        0
    };
    Ok((sign, lambda_star))
}

/// Leading large-diffusion value of `K2`:
/// `(2L / (u (k pi)²)) * L (Λ + lambda)³ (lambda_star - lambda) d1 / (48 u²)`.
/// The bracket is the leading part of `u (k pi)² / (2L) * K2`, the same
/// normalisation used by the exact assembly.
pub fn k2_leading_term(k: u32, p: &ModelParams, eq: &Equilibrium) -> Result<f64, AnalysisError> {
    let mode = ModeWavenumber::new(k, p.length)?;
    let (_, lambda_star) = k2_asymptotic_sign(k, p)?;
    let h1 = mode.eigenvalue() + p.lambda;
    let kpi = k as f64 * PI;
    let bracket = p.length * h1.powi(3) * (lambda_star - p.lambda) * p.d1 / (48.0 * eq.u_bar * eq.u_bar);
    Ok(2.0 * p.length / (eq.u_bar * kpi * kpi) * bracket)
}

/// Leading-order `chi_k` and `P_k` for large diffusion rates.
pub fn asymptotic_expansions(k: u32, p: &ModelParams, eq: &Equilibrium) -> Result<(f64, f64), AnalysisError> {
    let mode = ModeWavenumber::new(k, p.length)?;
    let h1 = mode.eigenvalue() + p.lambda;
    Ok((h1 * p.d1 / eq.u_bar, h1))
}

/// Local stability of branch `k` given the equilibrium's loss report.
pub fn predicted_stability(k: u32, k2: f64, report: &StabilityReport) -> LocalStability {
    match report.loss_type {
        LossType::Hopf => LocalStability::Unstable,
        LossType::Degenerate => LocalStability::NotApplicable,
        LossType::SteadyState if k != report.argmin_k => LocalStability::Unstable,
        LossType::SteadyState if k2 > 0.0 => LocalStability::Stable,
        LossType::SteadyState if k2 < 0.0 => LocalStability::Unstable,
        LossType::SteadyState => LocalStability::NotApplicable,
    }
}

/// Full branch data for mode `k`, using a precomputed stability report of
/// the equilibrium (see [`linear_analysis::critical_chi`]).
pub fn branch_info(
    k: u32,
    p: &ModelParams,
    eq: &Equilibrium,
    report: &StabilityReport,
) -> Result<BranchInfo, BifurcationError> {
    let m = mode_data(k, p, eq)?;
    let mode = ModeWavenumber::new(k, p.length)?;
    let ch = chi_hat(mode, p, eq);
    if (m.chi_k - ch).abs() <= linear_analysis::TIE_TOLERANCE * m.chi_k.abs().max(ch.abs()) {
        return Err(BifurcationError::Degenerate { k });
    }
    let ints = projection_integrals(k, p, eq)?;
    let kpi = k as f64 * PI;
    let scaled = linalg::compensated_sum(&k2_terms(&m, p, eq, &ints));
    let k2 = scaled * 2.0 * p.length / (eq.u_bar * kpi * kpi);
    let (sign, lambda_star) = k2_asymptotic_sign(k, p)?;
    Ok(BranchInfo {
        k,
        chi_k: m.chi_k,
        p_k: m.pk,
        q_k: m.qk,
        k1: 0.0,
        k2,
        k2_asymptotic_sign: sign,
        lambda_star,
        asymptotic_regime_warning: p.d1.min(p.d2) < DEFAULT_LARGE_DIFFUSION_FLOOR,
        predicted_stability_near_bifurcation: predicted_stability(k, k2, report),
        integrals: ints,
    })
}

/// Branch data for mode `k`; the equilibrium's loss report is computed with
/// the default mode truncation.
pub fn compute_k2(k: u32, p: &ModelParams, eq: &Equilibrium) -> Result<BranchInfo, BifurcationError> {
    let report = linear_analysis::critical_chi(p, eq, linear_analysis::DEFAULT_KMAX)?;
    branch_info(k, p, eq, &report)
}

/// Residual `M x - rhs` of a 3x3 system, for substitute-back checks.
pub fn residual(m: &Mat3, x: &[f64; 3], rhs: &[f64; 3]) -> [f64; 3] {
    let mx = linalg::mat_vec(m, x);
    [mx[0] - rhs[0], mx[1] - rhs[1], mx[2] - rhs[2]]
}

/// Scale for [`residual`]: `max_i sum_j |m_ij x_j| + |rhs_i|`.
pub fn residual_scale(m: &Mat3, x: &[f64; 3], rhs: &[f64; 3]) -> f64 {
    m.iter()
        .zip(rhs)
        .map(|(row, r)| row.iter().zip(x).map(|(a, b)| (a * b).abs()).sum::<f64>() + r.abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_analysis::critical_chi;
    use crate::model::compute_equilibrium;

    fn setup(p: ModelParams) -> (ModelParams, Equilibrium) {
        let eq = compute_equilibrium(&p).unwrap();
        (p, eq)
    }

    fn large_diffusion(d: f64, lambda: f64) -> (ModelParams, Equilibrium) {
        setup(ModelParams {
            d1: d,
            d2: d,
            lambda,
            length: 1.0,
            ..Default::default()
        })
    }

    fn max_abs(r: [f64; 3]) -> f64 {
        r.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn mean_system_decouples_without_competition() {
        let (p, eq) = setup(ModelParams {
            a1: 0.0,
            a2: 0.0,
            ..Default::default()
        });
        let m = mode_data(1, &p, &eq).unwrap();
        let s = solve_mean_system(1, &p, &eq).unwrap();
        let len = p.length;
        assert!((s[0] + len / (2.0 * eq.u_bar) * m.pk * m.pk).abs() < 1e-12 * m.pk * m.pk);
        assert!((s[1] + len / (2.0 * eq.v_bar) * m.qk * m.qk).abs() < 1e-12 * (1.0 + m.qk * m.qk));
    }

    #[test]
    fn mean_gamma_is_mass_over_lambda() {
        let (p, eq) = setup(ModelParams::default());
        for k in 1..5 {
            let s = solve_mean_system(k, &p, &eq).unwrap();
            assert!((s[2] - (s[0] + s[1]) / p.lambda).abs() < 1e-12 * s[2].abs());
            let (b, rhs) = mean_system(k, &p, &eq).unwrap();
            assert!(max_abs(residual(&b, &s, &rhs)) <= 1e-12 * residual_scale(&b, &s, &rhs));
        }
    }

    #[test]
    fn double_mode_substitute_back() {
        let (p, eq) = setup(ModelParams::default());
        for k in 1..5 {
            let chi_k = mode_data(k, &p, &eq).unwrap().chi_k;
            let s = solve_double_mode_system(k, &p, &eq, chi_k).unwrap();
            let (c, rhs) = double_mode_system(k, &p, &eq, chi_k).unwrap();
            assert!(max_abs(residual(&c, &s, &rhs)) <= 1e-12 * residual_scale(&c, &s, &rhs));
        }
    }

    #[test]
    fn double_mode_determinant_asymptotics() {
        let (p, eq) = large_diffusion(1e6, 0.5);
        let p = ModelParams { length: 0.5, ..p };
        let m = mode_data(1, &p, &eq).unwrap();
        let (c, rhs) = double_mode_system(1, &p, &eq, m.chi_k).unwrap();
        let dd = p.d1 * p.d2;
        let lk = m.lam_k;
        let want = -48.0 * lk.powi(3);
        let got = det3(&c) / dd;
        assert!(((got - want) / want).abs() < 0.02, "{got} vs {want}");
        let c1 = det3(&linalg::replace_column(&c, 0, &rhs)) / dd;
        let want1 = -2.0 * p.length * lk * lk * (4.0 * lk + p.lambda) * (lk + p.lambda).powi(2) / eq.u_bar;
        assert!(((c1 - want1) / want1).abs() < 0.02, "{c1} vs {want1}");
    }

    #[test]
    fn near_singular_double_mode_is_reported() {
        let (p, eq) = setup(ModelParams::default());
        // choose chi so that mode 2k is exactly critical
        let mode2 = ModeWavenumber::new(2, p.length).unwrap();
        let resonant = chi_tilde(mode2, &p, &eq);
        let err = solve_double_mode_system(1, &p, &eq, resonant).unwrap_err();
        assert!(matches!(err, BifurcationError::NearSingular { k: 1, .. }));
    }

    #[test]
    fn g_vanishes_without_cross_coupling() {
        let (p, eq) = setup(ModelParams {
            a2: 0.0,
            xi: 0.0,
            ..Default::default()
        });
        let ints = projection_integrals(1, &p, &eq).unwrap();
        assert_eq!(ints.g_value, 0.0);
        assert_eq!(
            [ints.second_phi2, ints.second_psi2, ints.second_gamma2],
            [0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn g_assembly_order_is_irrelevant() {
        let (p, eq) = setup(ModelParams::default());
        let chi_k = mode_data(1, &p, &eq).unwrap().chi_k;
        let mean = solve_mean_system(1, &p, &eq).unwrap();
        let double = solve_double_mode_system(1, &p, &eq, chi_k).unwrap();
        let terms = g_terms(1, &p, &eq, &double, &mean).unwrap();
        let forward = linalg::compensated_sum(&terms);
        let mut rev = terms;
        rev.reverse();
        let backward = linalg::compensated_sum(&rev);
        assert!(forward.is_finite());
        assert!((forward - backward).abs() <= 1e-15 * terms.iter().map(|t| t.abs()).sum::<f64>());
    }

    #[test]
    fn second_order_determinant_matches_expanded_form() {
        for p in [
            ModelParams::default(),
            ModelParams { xi: 3.0, a2: 0.9, ..Default::default() },
            ModelParams { d2: 7.0, lambda: 4.0, length: 3.0, ..Default::default() },
        ] {
            let eq = compute_equilibrium(&p).unwrap();
            for k in 1..6 {
                let a = second_order_matrix(k, &p, &eq).unwrap();
                let det = det3(&a);
                let expanded = second_order_det_expanded(k, &p, &eq).unwrap();
                assert!(det > 0.0);
                assert!(((det - expanded) / expanded).abs() < 1e-10, "{det} vs {expanded}");
            }
        }
    }

    #[test]
    fn homogeneous_first_order_system_is_trivial() {
        // K1 = 0 because the projections of the first correctors vanish.
        let (p, eq) = setup(ModelParams::default());
        let a = second_order_matrix(2, &p, &eq).unwrap();
        let s = cramer(&a, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.x, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_g_gives_zero_second_projections() {
        let (p, eq) = setup(ModelParams::default());
        assert_eq!(solve_second_order_system(1, &p, &eq, 0.0).unwrap(), [0.0; 3]);
    }

    #[test]
    fn lambda_star_values() {
        let p = ModelParams {
            length: PI,
            ..Default::default()
        };
        let (_, ls) = k2_asymptotic_sign(1, &p).unwrap();
        assert!((ls - 18.0).abs() < 1e-12);
        let p0 = ModelParams {
            a1: 0.0,
            a2: 0.0,
            ..p
        };
        let (_, ls0) = k2_asymptotic_sign(1, &p0).unwrap();
        assert!((ls0 - 14.0).abs() < 1e-12);
        let at = ModelParams { lambda: ls0, ..p0 };
        assert_eq!(k2_asymptotic_sign(1, &at).unwrap().0, 0);
    }

    #[test]
    fn k2_sign_follows_lambda_threshold() {
        let (p, _) = large_diffusion(1e4, 1.0);
        let lambda_star = k2_asymptotic_sign(1, &p).unwrap().1;
        for (factor, sign) in [(0.5, 1.0), (2.0, -1.0)] {
            let (p, eq) = large_diffusion(1e4, factor * lambda_star);
            let report = critical_chi(&p, &eq, 200).unwrap();
            assert_eq!(report.loss_type, LossType::SteadyState);
            let b = branch_info(report.argmin_k, &p, &eq, &report).unwrap();
            assert!(b.k2 * sign > 0.0, "factor {factor}: K2 = {}", b.k2);
            assert_eq!(b.k1, 0.0);
        }
    }

    #[test]
    fn k2_small_lambda_gives_stable_branch() {
        let (p, eq) = large_diffusion(1e4, 1.0);
        let report = critical_chi(&p, &eq, 200).unwrap();
        let b = branch_info(report.argmin_k, &p, &eq, &report).unwrap();
        assert!(b.k2 > 0.0);
        assert_eq!(b.predicted_stability_near_bifurcation, LocalStability::Stable);
        assert!(!b.asymptotic_regime_warning);
        let other = branch_info(report.argmin_k + 1, &p, &eq, &report).unwrap();
        assert_eq!(other.predicted_stability_near_bifurcation, LocalStability::Unstable);
    }

    #[test]
    fn k2_approaches_leading_term() {
        let (p, eq) = large_diffusion(1e5, 1.0);
        let b = compute_k2(1, &p, &eq).unwrap();
        let lead = k2_leading_term(1, &p, &eq).unwrap();
        let ratio = b.k2 / lead;
        assert!((0.95..=1.05).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn hopf_loss_makes_every_branch_unstable() {
        let (p, eq) = setup(ModelParams {
            d1: 5.0,
            d2: 0.1,
            lambda: 5.0,
            xi: 0.1,
            length: 4.0,
            ..Default::default()
        });
        let report = critical_chi(&p, &eq, 200).unwrap();
        assert_eq!(report.loss_type, LossType::Hopf);
        for k in 1..5 {
            let b = branch_info(k, &p, &eq, &report).unwrap();
            assert_eq!(b.predicted_stability_near_bifurcation, LocalStability::Unstable);
            assert!(b.asymptotic_regime_warning);
        }
    }

    #[test]
    fn asymptotic_expansions_match_large_diffusion() {
        let (p, eq) = large_diffusion(1e6, 0.5);
        let m = mode_data(1, &p, &eq).unwrap();
        let (chi_lead, p_lead) = asymptotic_expansions(1, &p, &eq).unwrap();
        let ratio = m.chi_k / chi_lead;
        assert!((0.999..=1.001).contains(&ratio));
        let scale = p_lead;
        assert!(m.qk.abs() <= 1e-4 * scale);
        assert!((m.pk - p_lead).abs() <= 1e-4 * scale);
    }
}
