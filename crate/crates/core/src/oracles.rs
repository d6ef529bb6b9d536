//! Independent reference computations used to cross-check the closed forms.
//!
//! Nothing here shares arithmetic with the production paths beyond the
//! linearisation matrix itself:
//!
//! * characteristic coefficients come from traces and minors of that matrix
//!   (via nalgebra), and thresholds from bisection on them;
//! * eigenvalues come from nalgebra's Schur decomposition;
//! * 3x3 systems are solved by LU with partial pivoting;
//! * the corrector projections and `G` come from a finite-difference
//!   solution of the second-order boundary-value problem on a fine grid.
//!
//! These routines are slow by design and live in the library only so that
//! `selftest` can run them.

use crate::linalg::Mat3;
use crate::linear_analysis::{chi_tilde, eigenmode, linearization_matrix, ModeWavenumber};
use crate::model::{Equilibrium, ModelParams};
use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use std::f64::consts::PI;

fn to_na(m: &Mat3) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| m[i][j])
}

/// `(α₂, α₁, α₀)` of `det(σI - J)` from trace, principal minors and determinant.
pub fn coeffs_from_matrix(m: &Mat3) -> (f64, f64, f64) {
    let j = to_na(m);
    let minors = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)]
        + j[(0, 0)] * j[(2, 2)] - j[(0, 2)] * j[(2, 0)]
        + j[(1, 1)] * j[(2, 2)] - j[(1, 2)] * j[(2, 1)];
    (-j.trace(), minors, -j.determinant())
}

fn alpha0_at(mode: ModeWavenumber, chi: f64, p: &ModelParams, eq: &Equilibrium) -> f64 {
    coeffs_from_matrix(&linearization_matrix(mode, chi, p, eq)).2
}

fn hurwitz_at(mode: ModeWavenumber, chi: f64, p: &ModelParams, eq: &Equilibrium) -> f64 {
    let (a2, a1, a0) = coeffs_from_matrix(&linearization_matrix(mode, chi, p, eq));
    a1 * a2 - a0
}

/// Root of a strictly decreasing function, bracketed by doubling outwards
/// from zero.
fn bisect_decreasing(f: impl Fn(f64) -> f64) -> Option<f64> {
    let f0 = f(0.0);
    if f0 == 0.0 {
        return Some(0.0);
    }
    let dir = if f0 > 0.0 { 1.0 } else { -1.0 };
    let mut reach = 1.0;
    while (f(dir * reach) > 0.0) == (f0 > 0.0) {
        reach *= 2.0;
        if reach > 1e300 {
            return None;
        }
    }
    let (mut lo, mut hi) = if dir > 0.0 { (0.0, reach) } else { (-reach, 0.0) };
    for _ in 0..2200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Bisection root of `α₀(chi) = 0`.
pub fn bisect_chi_tilde(mode: ModeWavenumber, p: &ModelParams, eq: &Equilibrium) -> Option<f64> {
    bisect_decreasing(|chi| alpha0_at(mode, chi, p, eq))
}

/// Bisection root of `α₁α₂ - α₀ = 0`.
pub fn bisect_chi_hat(mode: ModeWavenumber, p: &ModelParams, eq: &Equilibrium) -> Option<f64> {
    bisect_decreasing(|chi| hurwitz_at(mode, chi, p, eq))
}

/// Eigenvalues of the linearisation by Schur decomposition.
pub fn eigenvalues(mode: ModeWavenumber, chi: f64, p: &ModelParams, eq: &Equilibrium) -> [Complex64; 3] {
    let ev = to_na(&linearization_matrix(mode, chi, p, eq)).complex_eigenvalues();
    [ev[0], ev[1], ev[2]]
}

/// Every eigenvalue has negative real part.
pub fn spectrally_stable(mode: ModeWavenumber, chi: f64, p: &ModelParams, eq: &Equilibrium) -> bool {
    eigenvalues(mode, chi, p, eq).iter().all(|z| z.re < 0.0)
}

/// LU with partial pivoting.
pub fn lu_solve(m: &Mat3, rhs: &[f64; 3]) -> Option<[f64; 3]> {
    let x = to_na(m).lu().solve(&Vector3::from_column_slice(rhs))?;
    Some([x[0], x[1], x[2]])
}

/// Square band matrix with `kl = ku = half` stored densely per row over the
/// widened band that partial pivoting can fill.
struct BandedSystem {
    n: usize,
    half: usize,
    /// Row `i` holds columns `i - half ..= i + 2 half`.
    rows: Vec<Vec<f64>>,
}

impl BandedSystem {
    fn new(n: usize, half: usize) -> Self {
        Self {
            n,
            half,
            rows: vec![vec![0.0; 3 * half + 1]; n],
        }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        j + self.half - i
    }

    fn set(&mut self, i: usize, j: usize, value: f64) {
        let s = self.slot(i, j);
        self.rows[i][s] = value;
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.half < i || j > i + 2 * self.half {
            0.0
        } else {
            self.rows[i][self.slot(i, j)]
        }
    }

    fn solve(mut self, mut b: Vec<f64>) -> Option<Vec<f64>> {
        let (n, h) = (self.n, self.half);
        for col in 0..n {
            let last = (col + h).min(n - 1);
            let pivot = (col..=last).max_by(|&a, &c| self.get(a, col).abs().total_cmp(&self.get(c, col).abs()))?;
            if self.get(pivot, col) == 0.0 {
                return None;
            }
            if pivot != col {
                // rows within `h` of each other share the widened window
                // up to a shift, so swap entry by entry
                for j in col..(col + 2 * h + 1).min(n) {
                    let (a, c) = (self.get(col, j), self.get(pivot, j));
                    self.set(col, j, c);
                    if j <= pivot + 2 * h {
                        self.set(pivot, j, a);
                    }
                }
                b.swap(col, pivot);
            }
            let p = self.get(col, col);
            for r in col + 1..=last {
                let f = self.get(r, col) / p;
                if f == 0.0 {
                    continue;
                }
                for j in col..(col + 2 * h + 1).min(n) {
                    let v = self.get(r, j) - f * self.get(col, j);
                    if j <= r + 2 * h {
                        self.set(r, j, v);
                    }
                }
                b[r] -= f * b[col];
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for (j, bj) in b.iter().enumerate().take((i + 2 * h + 1).min(n)).skip(i + 1) {
                acc -= self.get(i, j) * bj;
            }
            b[i] = acc / self.get(i, i);
        }
        Some(b)
    }
}

/// Projections of the second-order correctors and the value of `G`
/// obtained from a grid solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectorQuadrature {
    /// `∫φ₁, ∫ψ₁, ∫γ₁`.
    pub mean: [f64; 3],
    /// `∫φ₁ cos(2kπx/L)`, likewise for `ψ₁`, `γ₁`.
    pub double: [f64; 3],
    pub g: f64,
    pub cells: usize,
}

/// Second-order correctors by finite differences on `cells` cells, with the
/// mode-`k` component projected out, then `G` by quadrature of the
/// `v`-equation forcing tested against `cos(kπx/L)`.
pub fn corrector_quadrature(
    k: u32,
    p: &ModelParams,
    eq: &Equilibrium,
    cells: usize,
) -> Option<CorrectorQuadrature> {
    let mode = ModeWavenumber::new(k, p.length).ok()?;
    let lam = mode.eigenvalue();
    let root_lam = lam.sqrt();
    let chi = chi_tilde(mode, p, eq);
    let (pk, qk) = eigenmode(mode, p, eq);
    let (u, v) = (eq.u_bar, eq.v_bar);
    let n = cells;
    let h = p.length / n as f64;
    let x: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
    let c1: Vec<f64> = x.iter().map(|&x| (k as f64 * PI * x / p.length).cos()).collect();
    let s1: Vec<f64> = x.iter().map(|&x| (k as f64 * PI * x / p.length).sin()).collect();
    let c2: Vec<f64> = x.iter().map(|&x| (2.0 * k as f64 * PI * x / p.length).cos()).collect();

    let ih2 = 1.0 / (h * h);
    // coupling block for each neighbour; the diagonal block carries the
    // local terms minus twice (or once, at a wall) the neighbour block
    let off = Matrix3::new(
        p.d1 * ih2, 0.0, -chi * u * ih2,
        0.0, p.d2 * ih2, -p.xi * v * ih2,
        0.0, 0.0, ih2,
    );
    let local = Matrix3::new(
        -p.mu1 * u, -p.mu1 * p.a1 * u, 0.0,
        -p.mu2 * p.a2 * v, -p.mu2 * v, 0.0,
        1.0, 1.0, -p.lambda,
    );
    let rhs: Vec<Vector3<f64>> = (0..n)
        .map(|i| {
            let sq = c1[i] * c1[i];
            Vector3::new(
                -chi * pk * lam * c2[i] + p.mu1 * pk * (pk + p.a1 * qk) * sq,
                -p.xi * qk * lam * c2[i] + p.mu2 * qk * (qk + p.a2 * pk) * sq,
                0.0,
            )
        })
        .collect();
    let diag = |i: usize| {
        let neighbours = if i == 0 || i + 1 == n { 1.0 } else { 2.0 };
        local - off * neighbours
    };

    // Gaussian elimination with partial pivoting on the banded system;
    // the operator is indefinite, so unpivoted block elimination is unstable
    let mut band = BandedSystem::new(3 * n, 5);
    for i in 0..n {
        let d = diag(i);
        for r in 0..3 {
            for c in 0..3 {
                band.set(3 * i + r, 3 * i + c, d[(r, c)]);
                if i > 0 {
                    band.set(3 * i + r, 3 * (i - 1) + c, off[(r, c)]);
                }
                if i + 1 < n {
                    band.set(3 * i + r, 3 * (i + 1) + c, off[(r, c)]);
                }
            }
        }
    }
    let flat: Vec<f64> = rhs.iter().flat_map(|r| [r[0], r[1], r[2]]).collect();
    let x = band.solve(flat)?;
    let mut sol: Vec<Vector3<f64>> = x.chunks(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect();

    // the operator is nearly singular on mode k; drop that component
    let norm: f64 = c1.iter().map(|c| c * c).sum();
    let proj: Vector3<f64> = sol.iter().zip(&c1).map(|(s, c)| s * *c).sum::<Vector3<f64>>() / norm;
    for (s, c) in sol.iter_mut().zip(&c1) {
        *s -= proj * *c;
    }

    let mean: Vector3<f64> = sol.iter().sum::<Vector3<f64>>() * h;
    let double: Vector3<f64> = sol.iter().zip(&c2).map(|(s, c)| s * *c).sum::<Vector3<f64>>() * h;

    let field = |j: usize| -> Vec<f64> { sol.iter().map(|s| s[j]).collect() };
    let (phi, psi, gam) = (field(0), field(1), field(2));
    let deriv = |f: &[f64], i: usize| -> f64 {
        let left = if i == 0 { f[0] } else { f[i - 1] };
        let right = if i + 1 == n { f[n - 1] } else { f[i + 1] };
        (right - left) / (2.0 * h)
    };
    let mut g = 0.0;
    for i in 0..n {
        let gam_xx = p.lambda * gam[i] - phi[i] - psi[i];
        let sq = c1[i] * c1[i];
        let taxis = -root_lam * (deriv(&psi, i) + qk * deriv(&gam, i)) * s1[i] * c1[i]
            + (-lam * psi[i] + qk * gam_xx) * sq;
        let kinetic = (p.a2 * qk * phi[i] + (p.a2 * pk + 2.0 * qk) * psi[i]) * sq;
        g += p.xi * taxis + p.mu2 * kinetic;
    }
    g *= h;

    Some(CorrectorQuadrature {
        mean: [mean[0], mean[1], mean[2]],
        double: [double[0], double[1], double[2]],
        g,
        cells: n,
    })
}

/// [`corrector_quadrature`] at `cells` and `2 cells`, combined by Richardson
/// extrapolation for a fourth-order estimate.
pub fn corrector_quadrature_extrapolated(
    k: u32,
    p: &ModelParams,
    eq: &Equilibrium,
    cells: usize,
) -> Option<CorrectorQuadrature> {
    let coarse = corrector_quadrature(k, p, eq, cells)?;
    let fine = corrector_quadrature(k, p, eq, 2 * cells)?;
    let ex = |a: f64, b: f64| (4.0 * b - a) / 3.0;
    Some(CorrectorQuadrature {
        mean: [0, 1, 2].map(|j| ex(coarse.mean[j], fine.mean[j])),
        double: [0, 1, 2].map(|j| ex(coarse.double[j], fine.double[j])),
        g: ex(coarse.g, fine.g),
        cells: 2 * cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifurcation::{projection_integrals, solve_double_mode_system, solve_mean_system};
    use crate::linear_analysis::{char_coeffs, chi_hat};
    use crate::model::compute_equilibrium;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn matrix_coefficients_match_closed_form() {
        let p = ModelParams::default();
        let eq = compute_equilibrium(&p).unwrap();
        for k in 1..8 {
            let mode = ModeWavenumber::new(k, p.length).unwrap();
            let c = char_coeffs(mode, 42.0, &p, &eq);
            let (a2, a1, a0) = coeffs_from_matrix(&linearization_matrix(mode, 42.0, &p, &eq));
            assert!(rel(a2, c.alpha2) < 1e-12);
            assert!(rel(a1, c.alpha1) < 1e-12);
            assert!(rel(a0, c.alpha0) < 1e-10);
        }
    }

    #[test]
    fn bisection_reproduces_thresholds() {
        let p = ModelParams::default();
        let eq = compute_equilibrium(&p).unwrap();
        let mode = ModeWavenumber::new(1, p.length).unwrap();
        assert!(rel(bisect_chi_tilde(mode, &p, &eq).unwrap(), chi_tilde(mode, &p, &eq)) < 1e-9);
        assert!(rel(bisect_chi_hat(mode, &p, &eq).unwrap(), chi_hat(mode, &p, &eq)) < 1e-9);
    }

    #[test]
    fn lu_agrees_with_known_solution() {
        let m = [[0.0, 2.0, 1.0], [1.0, 0.0, 0.0], [3.0, 1.0, 4.0]];
        let x = lu_solve(&m, &[5.0, 1.0, 16.0]).unwrap();
        for (a, b) in x.iter().zip([1.0, 1.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn grid_correctors_match_projection_systems() {
        let p = ModelParams {
            length: 2.0,
            ..Default::default()
        };
        let eq = compute_equilibrium(&p).unwrap();
        let mode = ModeWavenumber::new(1, p.length).unwrap();
        let chi = chi_tilde(mode, &p, &eq);
        let q = corrector_quadrature_extrapolated(1, &p, &eq, 2048).unwrap();
        let mean = solve_mean_system(1, &p, &eq).unwrap();
        let double = solve_double_mode_system(1, &p, &eq, chi).unwrap();
        for j in 0..3 {
            assert!(rel(q.mean[j], mean[j]) < 1e-6, "mean {j}: {} vs {}", q.mean[j], mean[j]);
            assert!(rel(q.double[j], double[j]) < 1e-6, "double {j}: {} vs {}", q.double[j], double[j]);
        }
        let g = projection_integrals(1, &p, &eq).unwrap().g_value;
        assert!(rel(q.g, g) < 1e-6, "G {} vs {}", q.g, g);
    }
}
