//! Dense complex linear algebra for the small matrices this crate works with.
//!
//! Everything here is `O(n^3)` and aimed at `n <= 64`. Hermitian eigenproblems
//! use cyclic two-sided Jacobi; singular values come from one-sided (Hestenes)
//! Jacobi, which keeps small singular values accurate to high relative
//! precision. All thresholds are relative to the largest singular value or the
//! Frobenius norm of the matrix at hand.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{KreinError, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Maximum number of Jacobi sweeps before giving up on further refinement.
const MAX_SWEEPS: usize = 100;

/// Every numerical cutoff used by the toolkit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative singular-value cutoff for rank, invertibility and membership.
    pub rank_tol: f64,
    /// Relative Hermitian-deviation cutoff.
    pub sym_tol: f64,
    /// Relative reconstruction residual.
    pub recon_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_tol: 1e-10,
            sym_tol: 1e-10,
            recon_tol: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn new(rank_tol: f64, sym_tol: f64, recon_tol: f64) -> Result<Self> {
        let tol = Self {
            rank_tol,
            sym_tol,
            recon_tol,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rank_tol", self.rank_tol),
            ("sym_tol", self.sym_tol),
            ("recon_tol", self.recon_tol),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(KreinError::InvalidTolerances(format!(
                    "{name} = {v} must lie in (0, 1)"
                )));
            }
        }
        Ok(())
    }
}

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6e}{:+.6e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries. Fails on a length mismatch or
    /// non-finite data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(KreinError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(KreinError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Real row-major entries. Panics on a length mismatch.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count mismatch");
        Self {
            rows,
            cols,
            data: data.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(KreinError::DimensionMismatch {
                    expected: c,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(r, c, data)
    }

    /// Matrix whose columns are the given vectors, each of length `rows`.
    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "column length mismatch");
            for (i, &z) in col.iter().enumerate() {
                m[(i, j)] = z;
            }
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diag(&d)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row-major view of the entries.
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> Vec<C64> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn columns(&self) -> Vec<Vec<C64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Sum of the moduli of all entries.
    pub fn abs_sum(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).sum()
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols, "vector length mismatch");
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Keeps the listed columns, in order.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, idx.len());
        for (jj, &j) in idx.iter().enumerate() {
            for i in 0..self.rows {
                out[(i, jj)] = self[(i, j)];
            }
        }
        out
    }

    /// Relative Hermitian deviation `‖A − Aᴴ‖_F / ‖A‖_F` (0 for the zero matrix).
    pub fn hermitian_deviation(&self) -> f64 {
        let norm = self.norm_fro();
        if norm == 0.0 {
            return 0.0;
        }
        let mut dev = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                dev += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        dev.sqrt() / norm
    }

    /// Checks squareness and the relative Hermitian deviation against `sym_tol`.
    pub fn check_hermitian(&self, sym_tol: f64) -> Result<()> {
        if !self.is_square() {
            return Err(KreinError::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let deviation = self.hermitian_deviation();
        if deviation > sym_tol {
            return Err(KreinError::NotHermitian { deviation });
        }
        Ok(())
    }

    /// `(A + Aᴴ) / 2`.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square(), "hermitian_part of a non-square matrix");
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        out
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch"
        );
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch"
        );
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Vector helpers on plain coordinate slices.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    // yᴴx: linear in x, conjugate-linear in y
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub_vec(x: &[C64], y: &[C64]) -> Vec<C64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: ComplexMatrix,
}

/// Unitary 2x2 rotation `Q` acting on coordinates `(p, q)` that diagonalizes
/// the Hermitian block `[[a, b], [conj(b), d]]` via `Qᴴ H Q`.
///
/// Returns `(qpp, qpq, qqp, qqq)`.
fn jacobi_rotation(a: f64, d: f64, b: C64) -> (C64, C64, C64, C64) {
    let abs_b = b.norm();
    let phase = b / abs_b;
    let tau = (d - a) / (2.0 * abs_b);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // Q = D R Dᴴ with D = diag(1, conj(phase)), R the real rotation [[c, s], [-s, c]].
    (
        C64::new(c, 0.0),
        phase * s,
        -phase.conj() * s,
        C64::new(c, 0.0),
    )
}

/// Eigenvalues and eigenvectors of a Hermitian matrix.
///
/// The input must pass [`ComplexMatrix::check_hermitian`] at `tol.sym_tol`;
/// only its Hermitian part is decomposed.
pub fn hermitian_eig(a: &ComplexMatrix, tol: &Tolerances) -> Result<HermitianEig> {
    a.check_hermitian(tol.sym_tol)?;
    let n = a.rows();
    let mut m = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = m.norm_fro();
    if n == 0 {
        return Ok(HermitianEig {
            values: Vec::new(),
            vectors: v,
        });
    }

    // Off-diagonal entries at this level no longer move any eigenvalue by
    // more than a rounding error of the largest one.
    let negligible = 1e-3 * f64::EPSILON * scale;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let b = m[(p, q)];
                if b.norm() <= negligible || b.norm() <= f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                let (qpp, qpq, qqp, qqq) = jacobi_rotation(m[(p, p)].re, m[(q, q)].re, b);
                // M <- M Q
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * qpp + mkq * qqp;
                    m[(k, q)] = mkp * qpq + mkq * qqq;
                }
                // M <- Qᴴ M
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = qpp.conj() * mpk + qqp.conj() * mqk;
                    m[(q, k)] = qpq.conj() * mpk + qqq.conj() * mqk;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * qpp + vkq * qqp;
                    v[(k, q)] = vkp * qpq + vkq * qqq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = v.select_columns(&order);
    Ok(HermitianEig { values, vectors })
}

/// Singular values (descending) and right singular vectors of a matrix.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `min(rows, cols)` singular values, largest first.
    pub values: Vec<f64>,
    /// Right singular vectors as columns (`cols x cols`, unitary), ordered
    /// to match `values`. Only present when the matrix has at least as many
    /// rows as columns.
    pub right: Option<ComplexMatrix>,
}

/// One-sided Jacobi on the columns of a tall (or square) matrix.
fn one_sided_jacobi(a: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let (m, n) = (a.rows(), a.cols());
    debug_assert!(m >= n);
    let mut u = a.clone();
    let mut v = ComplexMatrix::identity(n);
    if n == 0 {
        return (Vec::new(), v);
    }
    let tol = f64::EPSILON * (m as f64).sqrt();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = ZERO;
                for k in 0..m {
                    let up = u[(k, p)];
                    let uq = u[(k, q)];
                    alpha += up.norm_sqr();
                    beta += uq.norm_sqr();
                    gamma += up.conj() * uq;
                }
                if gamma.norm() <= tol * (alpha * beta).sqrt() || gamma.norm() == 0.0 {
                    continue;
                }
                rotated = true;
                let (qpp, qpq, qqp, qqq) = jacobi_rotation(alpha, beta, gamma);
                for k in 0..m {
                    let up = u[(k, p)];
                    let uq = u[(k, q)];
                    u[(k, p)] = up * qpp + uq * qqp;
                    u[(k, q)] = up * qpq + uq * qqq;
                }
                for k in 0..n {
                    let vp = v[(k, p)];
                    let vq = v[(k, q)];
                    v[(k, p)] = vp * qpp + vq * qqp;
                    v[(k, q)] = vp * qpq + vq * qqq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|j| norm2(&u.column(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let values = order.iter().map(|&i| norms[i]).collect();
    (values, v.select_columns(&order))
}

/// Full list of singular values, with right singular vectors for tall input.
pub fn svd(a: &ComplexMatrix) -> Result<Svd> {
    if a.is_empty() {
        return Err(KreinError::EmptyMatrix);
    }
    if a.rows() >= a.cols() {
        let (values, right) = one_sided_jacobi(a);
        Ok(Svd {
            values,
            right: Some(right),
        })
    } else {
        let (values, _) = one_sided_jacobi(&a.adjoint());
        Ok(Svd {
            values,
            right: None,
        })
    }
}

/// `(sigma_min, sigma_max)`: the smallest of the `min(rows, cols)` singular
/// values and the spectral norm.
pub fn singular_extremes(a: &ComplexMatrix) -> Result<(f64, f64)> {
    let s = svd(a)?;
    let max = s.values[0];
    let min = *s.values.last().expect("nonempty");
    Ok((min, max))
}

/// Number of singular values above `rank_tol * sigma_max`.
pub fn numeric_rank(a: &ComplexMatrix, tol: &Tolerances) -> Result<usize> {
    let s = svd(a)?;
    let cutoff = tol.rank_tol * s.values[0];
    Ok(s.values.iter().filter(|&&x| x > cutoff).count())
}

/// Spectral norm, 0 for an empty matrix.
pub fn spectral_norm(a: &ComplexMatrix) -> f64 {
    if a.is_empty() {
        0.0
    } else {
        singular_extremes(a).map(|(_, max)| max).unwrap_or(0.0)
    }
}

/// Fails with [`KreinError::Singular`] unless `sigma_min > rank_tol * sigma_max`.
pub fn check_invertible(a: &ComplexMatrix, tol: &Tolerances) -> Result<(f64, f64)> {
    if !a.is_square() {
        return Err(KreinError::NonSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let (sigma_min, sigma_max) = singular_extremes(a)?;
    if !(sigma_min > tol.rank_tol * sigma_max) {
        return Err(KreinError::Singular {
            sigma_min,
            sigma_max,
        });
    }
    Ok((sigma_min, sigma_max))
}

/// Solves `A X = B` by Gaussian elimination with partial pivoting.
/// The caller is responsible for checking conditioning first.
fn lu_solve(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let n = a.rows();
    assert_eq!(b.rows(), n);
    let r = b.cols();
    let mut lu = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| lu[(i, k)].norm().total_cmp(&lu[(j, k)].norm()))
            .expect("nonempty range");
        if piv != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
            for j in 0..r {
                let t = x[(k, j)];
                x[(k, j)] = x[(piv, j)];
                x[(piv, j)] = t;
            }
        }
        let d = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / d;
            if f == ZERO {
                continue;
            }
            for j in k..n {
                let t = lu[(k, j)];
                lu[(i, j)] -= f * t;
            }
            for j in 0..r {
                let t = x[(k, j)];
                x[(i, j)] -= f * t;
            }
        }
    }
    for k in (0..n).rev() {
        for j in 0..r {
            let mut s = x[(k, j)];
            for i in k + 1..n {
                s -= lu[(k, i)] * x[(i, j)];
            }
            x[(k, j)] = s / lu[(k, k)];
        }
    }
    x
}

/// Solves `A X = B` for square, numerically invertible `A`.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    check_invertible(a, tol)?;
    if b.rows() != a.rows() {
        return Err(KreinError::DimensionMismatch {
            expected: a.rows(),
            found: b.rows(),
        });
    }
    Ok(lu_solve(a, b))
}

/// Inverse of a square matrix with `sigma_min > rank_tol * sigma_max`.
pub fn invert(a: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    check_invertible(a, tol)?;
    Ok(lu_solve(a, &ComplexMatrix::identity(a.rows())))
}
