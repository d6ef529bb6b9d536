//! Small dense and banded linear algebra used by the analysis and solver
//! modules.
//!
//! 3x3 determinants are expanded with error-free transformations
//! (`two_sum`, `two_prod`) so that the result is as accurate as if it had
//! been computed in roughly twice the working precision. The bifurcation
//! matrices contain products of order `d1 * d2` that cancel almost exactly.

pub type Mat3 = [[f64; 3]; 3];

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Compensated sum of the given terms (Ogita-Rump-Oishi `Sum2`).
pub fn compensated_sum(terms: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for &t in terms {
        let (ns, e) = two_sum(s, t);
        s = ns;
        c += e;
    }
    s + c
}

/// Pushes the product `a * b * c` as a short expansion of exact-ish parts.
fn push_triple(out: &mut Vec<f64>, sign: f64, a: f64, b: f64, c: f64) {
    let (p, pe) = two_prod(a, b);
    let (q, qe) = two_prod(p, c);
    out.push(sign * q);
    out.push(sign * qe);
    out.push(sign * pe * c);
}

/// Determinant by cofactor expansion with compensated accumulation.
pub fn det3(m: &Mat3) -> f64 {
    let mut parts = Vec::with_capacity(18);
    push_triple(&mut parts, 1.0, m[0][0], m[1][1], m[2][2]);
    push_triple(&mut parts, -1.0, m[0][0], m[1][2], m[2][1]);
    push_triple(&mut parts, -1.0, m[0][1], m[1][0], m[2][2]);
    push_triple(&mut parts, 1.0, m[0][1], m[1][2], m[2][0]);
    push_triple(&mut parts, 1.0, m[0][2], m[1][0], m[2][1]);
    push_triple(&mut parts, -1.0, m[0][2], m[1][1], m[2][0]);
    compensated_sum(&parts)
}

/// `m` with column `col` replaced by `rhs`.
pub fn replace_column(m: &Mat3, col: usize, rhs: &[f64; 3]) -> Mat3 {
    let mut out = *m;
    for (row, value) in out.iter_mut().zip(rhs) {
        row[col] = *value;
    }
    out
}

pub fn row_norms(m: &Mat3) -> [f64; 3] {
    m.map(|row| row.iter().map(|x| x * x).sum::<f64>().sqrt())
}

pub fn mat_vec(m: &Mat3, x: &[f64; 3]) -> [f64; 3] {
    m.map(|row| compensated_sum(&[row[0] * x[0], row[1] * x[1], row[2] * x[2]]))
}

/// Solution of a 3x3 system by Cramer's rule, with the determinants kept
/// for callers that report them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CramerSolution {
    pub x: [f64; 3],
    pub det: f64,
    pub minors: [f64; 3],
}

/// Cramer's rule; `None` when the determinant is exactly zero.
pub fn cramer(m: &Mat3, rhs: &[f64; 3]) -> Option<CramerSolution> {
    let det = det3(m);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let minors = [0, 1, 2].map(|c| det3(&replace_column(m, c, rhs)));
    Some(CramerSolution {
        x: minors.map(|d| d / det),
        det,
        minors,
    })
}

/// LU factorisation of a tridiagonal matrix (Thomas algorithm), reusable
/// across right-hand sides.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    lower: Vec<f64>,
    upper_mod: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl Tridiagonal {
    /// `lower[i]` multiplies `x[i-1]` in row `i` (so `lower[0]` is unused);
    /// `upper[i]` multiplies `x[i+1]` (`upper[n-1]` unused).
    ///
    /// No pivoting: the matrix must be diagonally dominant, which holds for
    /// every implicit operator the solver assembles.
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Self {
        let n = diag.len();
        assert!(n > 0 && lower.len() == n && upper.len() == n);
        let mut upper_mod = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut pivot = diag[0];
        inv_pivot[0] = 1.0 / pivot;
        upper_mod[0] = upper[0] * inv_pivot[0];
        for i in 1..n {
            pivot = diag[i] - lower[i] * upper_mod[i - 1];
            inv_pivot[i] = 1.0 / pivot;
            upper_mod[i] = upper[i] * inv_pivot[i];
        }
        Self {
            lower: lower.to_vec(),
            upper_mod,
            inv_pivot,
        }
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper_mod[i] * rhs[i + 1];
        }
    }
}
