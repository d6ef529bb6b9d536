//! System parameters and the homogeneous positive equilibrium.
//!
//! The model is the one-dimensional two-species chemotaxis system with
//! Lotka-Volterra competition on `(0, L)`:
//!
//! ```text
//! u_t = (d1 u_x - chi u w_x)_x + mu1 (1 - u - a1 v) u
//! v_t = (d2 v_x - xi  v w_x)_x + mu2 (1 - a2 u - v) v
//! w_t =  w_xx - lambda w + u + v
//! ```
//!
//! with homogeneous Neumann conditions for all three fields.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// The ten scalar coefficients of the system plus the interval length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d1: f64,
    pub d2: f64,
    pub chi: f64,
    pub xi: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub a1: f64,
    pub a2: f64,
    pub lambda: f64,
    #[serde(rename = "L")]
    pub length: f64,
}

impl Default for ModelParams {
    /// The baseline parameter set on `L = 0.5` with `chi = 0`.
    fn default() -> Self {
        Self {
            d1: 1.0,
            d2: 0.1,
            chi: 0.0,
            xi: 0.5,
            mu1: 1.0,
            mu2: 1.0,
            a1: 0.5,
            a2: 0.5,
            lambda: 0.5,
            length: 0.5,
        }
    }
}

/// Names accepted by [`ModelParams::get`] and [`ModelParams::set`], in
/// canonical order.
pub const PARAM_NAMES: [&str; 10] = [
    "d1", "d2", "chi", "xi", "mu1", "mu2", "a1", "a2", "lambda", "L",
];

impl ModelParams {
    pub fn with_chi(mut self, chi: f64) -> Self {
        self.chi = chi;
        self
    }

    pub fn with_length(mut self, length: f64) -> Self {
        self.length = length;
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "d1" => self.d1,
            "d2" => self.d2,
            "chi" => self.chi,
            "xi" => self.xi,
            "mu1" => self.mu1,
            "mu2" => self.mu2,
            "a1" => self.a1,
            "a2" => self.a2,
            "lambda" => self.lambda,
            "L" => self.length,
            _ => return None,
        })
    }

    /// Sets a parameter by name; returns `false` for unknown names.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let slot = match name {
            "d1" => &mut self.d1,
            "d2" => &mut self.d2,
            "chi" => &mut self.chi,
            "xi" => &mut self.xi,
            "mu1" => &mut self.mu1,
            "mu2" => &mut self.mu2,
            "a1" => &mut self.a1,
            "a2" => &mut self.a2,
            "lambda" => &mut self.lambda,
            "L" => &mut self.length,
            _ => return false,
        };
        *slot = value;
        true
    }
}

/// Which use of the parameters a violated constraint rules out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    /// A sign or finiteness constraint of the PDE itself; simulation is
    /// meaningless.
    Sign,
    /// The competition constraint `0 <= a_i < 1`; the positive equilibrium
    /// does not exist, so the analysis modules cannot run, but the solver can.
    Equilibrium,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub field: &'static str,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Outcome of [`validate_params`]. Empty means every constraint holds.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Validation {
    pub violations: Vec<Violation>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// No sign violations; the time-dependent solver may run.
    pub fn simulable(&self) -> bool {
        self.violations.iter().all(|v| v.kind != ViolationKind::Sign)
    }

    /// Everything holds, including the competition constraint.
    pub fn analyzable(&self) -> bool {
        self.is_ok()
    }

    pub fn first(&self) -> Option<&Violation> {
        self.violations.first()
    }
}

/// Checks every parameter constraint and reports all violations at once.
pub fn validate_params(p: &ModelParams) -> Validation {
    let mut out = Vec::new();
    let mut sign = |field: &'static str, message: String| {
        out.push(Violation {
            field,
            kind: ViolationKind::Sign,
            message,
        })
    };
    for name in PARAM_NAMES {
        let value = p.get(name).unwrap_or(f64::NAN);
        if !value.is_finite() {
            sign(name, format!("{name} must be finite"));
        }
    }
    for (name, value) in [
        ("d1", p.d1),
        ("d2", p.d2),
        ("mu1", p.mu1),
        ("mu2", p.mu2),
        ("lambda", p.lambda),
        ("L", p.length),
    ] {
        if value.is_finite() && value <= 0.0 {
            sign(name, format!("{name} must be positive"));
        }
    }
    for (name, value) in [("a1", p.a1), ("a2", p.a2)] {
        if !value.is_finite() {
            continue;
        }
        if value < 0.0 {
            out.push(Violation {
                field: name,
                kind: ViolationKind::Equilibrium,
                message: format!("{name} must be >= 0 for positive equilibrium (condition 0 <= a < 1)"),
            });
        } else if value >= 1.0 {
            out.push(Violation {
                field: name,
                kind: ViolationKind::Equilibrium,
                message: format!("{name} must be < 1 for positive equilibrium (condition 0 <= a < 1)"),
            });
        }
    }
    Validation { violations: out }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter {}", .0.first().map(|v| v.to_string()).unwrap_or_default())]
    Invalid(Validation),
    #[error("competition matrix is singular (a1 * a2 = 1)")]
    SingularCompetition,
}

/// The spatially homogeneous positive steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub u_bar: f64,
    pub v_bar: f64,
    pub w_bar: f64,
}

/// Computes `(u, v, w) = ((1-a1)/(1-a1 a2), (1-a2)/(1-a1 a2), (2-a1-a2)/(lambda (1-a1 a2)))`.
pub fn compute_equilibrium(p: &ModelParams) -> Result<Equilibrium, ModelError> {
    let validation = validate_params(p);
    if !validation.is_ok() {
        return Err(ModelError::Invalid(validation));
    }
    let det = 1.0 - p.a1 * p.a2;
    if det == 0.0 {
        return Err(ModelError::SingularCompetition);
    }
    let u_bar = (1.0 - p.a1) / det;
    let v_bar = (1.0 - p.a2) / det;
    Ok(Equilibrium {
        u_bar,
        v_bar,
        w_bar: (u_bar + v_bar) / p.lambda,
    })
}

impl Equilibrium {
    /// Residuals of the three kinetic identities at this state.
    pub fn residuals(&self, p: &ModelParams) -> [f64; 3] {
        [
            1.0 - self.u_bar - p.a1 * self.v_bar,
            1.0 - p.a2 * self.u_bar - self.v_bar,
            p.lambda * self.w_bar - self.u_bar - self.v_bar,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-14 * b.abs().max(1.0)
    }

    #[test]
    fn defaults_are_valid() {
        assert!(validate_params(&ModelParams::default()).is_ok());
    }

    #[test]
    fn a1_at_one_violates_competition_bound() {
        let p = ModelParams {
            a1: 1.0,
            ..Default::default()
        };
        let v = validate_params(&p);
        assert_eq!(v.violations.len(), 1);
        assert_eq!(v.violations[0].field, "a1");
        assert!(v.violations[0].message.contains("a1 must be < 1"));
        assert!(v.simulable());
        assert!(!v.analyzable());
    }

    #[test]
    fn negative_d2_is_a_sign_violation() {
        let p = ModelParams {
            d2: -0.1,
            ..Default::default()
        };
        let v = validate_params(&p);
        assert_eq!(v.violations[0].field, "d2");
        assert_eq!(v.violations[0].message, "d2 must be positive");
        assert!(!v.simulable());
    }

    #[test]
    fn reports_all_violations() {
        let p = ModelParams {
            d1: 0.0,
            lambda: -1.0,
            a2: 2.0,
            ..Default::default()
        };
        let fields: Vec<_> = validate_params(&p)
            .violations
            .iter()
            .map(|v| v.field)
            .collect();
        assert_eq!(fields, vec!["d1", "lambda", "a2"]);
    }

    #[test]
    fn equilibrium_without_competition() {
        let p = ModelParams {
            a1: 0.0,
            a2: 0.0,
            lambda: 1.0,
            ..Default::default()
        };
        let e = compute_equilibrium(&p).unwrap();
        assert_eq!((e.u_bar, e.v_bar, e.w_bar), (1.0, 1.0, 2.0));
    }

    #[test]
    fn equilibrium_symmetric_competition() {
        let p = ModelParams {
            a1: 0.5,
            a2: 0.5,
            lambda: 0.5,
            ..Default::default()
        };
        let e = compute_equilibrium(&p).unwrap();
        assert!(close(e.u_bar, 2.0 / 3.0));
        assert_eq!(e.u_bar, e.v_bar);
        assert!(close(e.w_bar, 8.0 / 3.0));
    }

    #[test]
    fn equilibrium_asymmetric_competition() {
        let p = ModelParams {
            a1: 0.5,
            a2: 0.25,
            lambda: 1.0,
            ..Default::default()
        };
        let e = compute_equilibrium(&p).unwrap();
        assert!(close(e.u_bar, 4.0 / 7.0));
        assert!(close(e.v_bar, 6.0 / 7.0));
        assert!(close(e.w_bar, 10.0 / 7.0));
    }

    #[test]
    fn equilibrium_rejects_a_ge_one() {
        let p = ModelParams {
            a2: 1.0,
            ..Default::default()
        };
        assert!(matches!(compute_equilibrium(&p), Err(ModelError::Invalid(_))));
    }

    #[test]
    fn set_and_get_roundtrip_names() {
        let mut p = ModelParams::default();
        for (i, name) in PARAM_NAMES.iter().enumerate() {
            assert!(p.set(name, i as f64 + 0.5));
        }
        for (i, name) in PARAM_NAMES.iter().enumerate() {
            assert_eq!(p.get(name), Some(i as f64 + 0.5));
        }
        assert!(!p.set("gamma", 1.0));
        assert_eq!(p.get("gamma"), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn equilibrium_residuals_vanish(
                a1 in 0.0..0.999f64,
                a2 in 0.0..0.999f64,
                lambda in 1e-3..100.0f64,
            ) {
                let p = ModelParams { a1, a2, lambda, ..Default::default() };
                let e = compute_equilibrium(&p).unwrap();
                prop_assert!(e.u_bar > 0.0 && e.v_bar > 0.0 && e.w_bar > 0.0);
                for r in e.residuals(&p) {
                    prop_assert!(r.abs() <= 1e-12 * (1.0 + e.w_bar * lambda));
                }
            }

            #[test]
            fn symmetric_competition_gives_equal_densities(a in 0.0..0.999f64) {
                let p = ModelParams { a1: a, a2: a, ..Default::default() };
                let e = compute_equilibrium(&p).unwrap();
                prop_assert_eq!(e.u_bar, e.v_bar);
            }
        }
    }
}
