//! The Krein space itself: an indefinite metric `[x, y] = yᴴ G x` and its
//! fundamental decomposition `K = K⁺ ⊕ K⁻`.
//!
//! Vectors are stored in *ambient* coordinates, the basis in which `G` is
//! written. The decomposition also provides *canonical* coordinates `W⁻¹x`,
//! in which the metric becomes `diag(+1, …, +1, −1, …, −1)`: the first `p`
//! canonical coordinates describe `K⁺`, the last `q` describe `K⁻`.

use std::fmt;

use crate::error::{KreinError, Result};
use crate::numerics::{self, dot, hermitian_eig, norm2, ComplexMatrix, Tolerances, C64};

/// One of the two halves of the fundamental decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn other(self) -> Self {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }

    /// `+1` on `K⁺`, `−1` on `K⁻`.
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        })
    }
}

/// An element of the Krein space in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct KreinVector(Vec<C64>);

impl KreinVector {
    pub fn new(coords: Vec<C64>) -> Result<Self> {
        if coords
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(KreinError::NonFinite);
        }
        Ok(Self(coords))
    }

    pub fn from_real(coords: &[f64]) -> Self {
        Self(coords.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![C64::new(0.0, 0.0); n])
    }

    pub fn coords(&self) -> &[C64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<C64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(self.0.iter().map(|&z| z * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(numerics::sub_vec(&self.0, &other.0))
    }

    /// Euclidean norm of the ambient coordinates.
    pub fn euclidean_norm(&self) -> f64 {
        norm2(&self.0)
    }
}

impl From<Vec<C64>> for KreinVector {
    fn from(coords: Vec<C64>) -> Self {
        Self(coords)
    }
}

/// Hermitian, nondegenerate metric matrix `G` defining `[x, y] = yᴴ G x`.
#[derive(Debug, Clone, PartialEq)]
pub struct KreinMetric {
    g: ComplexMatrix,
    tol: Tolerances,
}

impl KreinMetric {
    pub fn new(g: ComplexMatrix, tol: Tolerances) -> Result<Self> {
        tol.validate()?;
        g.check_hermitian(tol.sym_tol)?;
        if g.is_empty() {
            return Err(KreinError::EmptyMatrix);
        }
        let (sigma_min, sigma_max) = numerics::singular_extremes(&g)?;
        if !(sigma_min > tol.rank_tol * sigma_max) {
            return Err(KreinError::DegenerateMetric {
                eigenvalue: sigma_min,
            });
        }
        Ok(Self { g, tol })
    }

    /// `G = diag(+1 × p, −1 × q)`.
    pub fn signature(p: usize, q: usize, tol: Tolerances) -> Result<Self> {
        let diag: Vec<f64> = std::iter::repeat_n(1.0, p)
            .chain(std::iter::repeat_n(-1.0, q))
            .collect();
        Self::new(ComplexMatrix::from_real_diag(&diag), tol)
    }

    pub fn dim(&self) -> usize {
        self.g.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.g
    }

    pub fn tol(&self) -> &Tolerances {
        &self.tol
    }

    pub fn with_tol(&self, tol: Tolerances) -> Result<Self> {
        Self::new(self.g.clone(), tol)
    }

    fn check_dim(&self, x: &KreinVector) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(KreinError::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(())
    }

    /// `[x, y]`: linear in `x`, conjugate-linear in `y`.
    pub fn inner(&self, x: &KreinVector, y: &KreinVector) -> Result<C64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        Ok(dot(&self.g.mul_vec(x.coords()), y.coords()))
    }
}

/// `[x, y] = Σ conj(y_j) G_jk x_k`.
pub fn indefinite_inner(x: &KreinVector, y: &KreinVector, m: &KreinMetric) -> Result<C64> {
    m.inner(x, y)
}

/// The splitting `K = K⁺ ⊕ K⁻` together with canonical coordinates.
#[derive(Debug, Clone)]
pub struct FundamentalDecomposition {
    p: usize,
    q: usize,
    /// Columns are the canonical basis: `Wᴴ G W = diag(J)`.
    w: ComplexMatrix,
    w_inv: ComplexMatrix,
    signs: Vec<i8>,
    eigenvalues: Vec<f64>,
    p_plus: ComplexMatrix,
    p_minus: ComplexMatrix,
}

/// Makes the first entry of non-negligible modulus real and positive.
fn normalize_phase(v: &mut [C64]) {
    let scale = norm2(v);
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-8 * scale).copied() {
        let phase = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

impl FundamentalDecomposition {
    /// Eigendecomposes `G`; positive eigenvectors span `K⁺`, negative ones `K⁻`.
    ///
    /// Within each sign class eigenvectors are ordered by descending `|λ|`,
    /// and each is phase-normalized so its first non-negligible entry is
    /// real positive.
    pub fn new(m: &KreinMetric) -> Result<Self> {
        let tol = m.tol();
        let eig = hermitian_eig(m.matrix(), tol)?;
        let n = m.dim();
        let max_abs = eig.values.iter().map(|l| l.abs()).fold(0.0, f64::max);
        if let Some(&bad) = eig
            .values
            .iter()
            .find(|l| l.abs() <= tol.rank_tol * max_abs)
        {
            return Err(KreinError::DegenerateMetric { eigenvalue: bad });
        }

        let mut pos: Vec<usize> = (0..n).filter(|&i| eig.values[i] > 0.0).collect();
        let mut neg: Vec<usize> = (0..n).filter(|&i| eig.values[i] < 0.0).collect();
        // Ascending input; stable sort keeps Jacobi order on ties.
        pos.sort_by(|&a, &b| eig.values[b].abs().total_cmp(&eig.values[a].abs()));
        neg.sort_by(|&a, &b| eig.values[b].abs().total_cmp(&eig.values[a].abs()));
        let (p, q) = (pos.len(), neg.len());

        let order: Vec<usize> = pos.iter().chain(&neg).copied().collect();
        let mut basis = Vec::with_capacity(n);
        let mut eigenvalues = Vec::with_capacity(n);
        for &i in &order {
            let mut v = eig.vectors.column(i);
            normalize_phase(&mut v);
            basis.push(v);
            eigenvalues.push(eig.values[i]);
        }
        let v = ComplexMatrix::from_columns(n, &basis);

        let mut w = v.clone();
        let mut w_inv = v.adjoint();
        for (k, &lambda) in eigenvalues.iter().enumerate() {
            let s = lambda.abs().sqrt();
            for i in 0..n {
                w[(i, k)] /= s;
                w_inv[(k, i)] *= s;
            }
        }

        let plus_idx: Vec<usize> = (0..p).collect();
        let minus_idx: Vec<usize> = (p..n).collect();
        let v_plus = v.select_columns(&plus_idx);
        let v_minus = v.select_columns(&minus_idx);
        let p_plus = &v_plus * &v_plus.adjoint();
        let p_minus = &v_minus * &v_minus.adjoint();

        let signs = std::iter::repeat_n(1, p)
            .chain(std::iter::repeat_n(-1, q))
            .collect();

        Ok(Self {
            p,
            q,
            w,
            w_inv,
            signs,
            eigenvalues,
            p_plus,
            p_minus,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.p + self.q
    }

    /// Dimension of the requested half.
    pub fn half_dim(&self, side: Side) -> usize {
        match side {
            Side::Plus => self.p,
            Side::Minus => self.q,
        }
    }

    pub fn w(&self) -> &ComplexMatrix {
        &self.w
    }

    pub fn w_inv(&self) -> &ComplexMatrix {
        &self.w_inv
    }

    /// `J`: `+1` repeated `p` times, then `−1` repeated `q` times.
    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// Eigenvalues of `G` in canonical-basis order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projector(&self, side: Side) -> &ComplexMatrix {
        match side {
            Side::Plus => &self.p_plus,
            Side::Minus => &self.p_minus,
        }
    }

    fn range(&self, side: Side) -> std::ops::Range<usize> {
        match side {
            Side::Plus => 0..self.p,
            Side::Minus => self.p..self.p + self.q,
        }
    }

    fn check_dim(&self, x: &KreinVector) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(KreinError::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(())
    }

    /// Full canonical coordinates `W⁻¹x`.
    pub fn canonical(&self, x: &KreinVector) -> Result<Vec<C64>> {
        self.check_dim(x)?;
        Ok(self.w_inv.mul_vec(x.coords()))
    }

    /// Canonical coordinates of the projection of `x` onto one half.
    pub fn canonical_half(&self, x: &KreinVector, side: Side) -> Result<Vec<C64>> {
        let y = self.canonical(x)?;
        Ok(y[self.range(side)].to_vec())
    }

    /// Ambient vector `W y` from full canonical coordinates.
    pub fn from_canonical(&self, y: &[C64]) -> Result<KreinVector> {
        if y.len() != self.dim() {
            return Err(KreinError::DimensionMismatch {
                expected: self.dim(),
                found: y.len(),
            });
        }
        Ok(KreinVector(self.w.mul_vec(y)))
    }

    /// Ambient vector of `K±` from canonical coordinates of that half.
    pub fn embed(&self, y: &[C64], side: Side) -> Result<KreinVector> {
        let range = self.range(side);
        if y.len() != range.len() {
            return Err(KreinError::DimensionMismatch {
                expected: range.len(),
                found: y.len(),
            });
        }
        let mut full = vec![C64::new(0.0, 0.0); self.dim()];
        full[range].copy_from_slice(y);
        self.from_canonical(&full)
    }

    /// `P± x`.
    pub fn project(&self, x: &KreinVector, side: Side) -> Result<KreinVector> {
        self.check_dim(x)?;
        Ok(KreinVector(self.projector(side).mul_vec(x.coords())))
    }

    /// Hilbert norm induced by the decomposition, computed in canonical
    /// coordinates.
    pub fn j_norm(&self, x: &KreinVector) -> Result<f64> {
        Ok(norm2(&self.canonical(x)?))
    }

    /// The canonical basis vectors `w_k` of one half, in ambient coordinates.
    pub fn basis(&self, side: Side) -> Vec<KreinVector> {
        self.range(side)
            .map(|k| KreinVector(self.w.column(k)))
            .collect()
    }

    /// `‖P_other x‖_J / ‖x‖_J` (0 for the zero vector).
    pub fn off_half_residual(&self, x: &KreinVector, side: Side) -> Result<f64> {
        let y = self.canonical(x)?;
        let total = norm2(&y);
        if total == 0.0 {
            return Ok(0.0);
        }
        Ok(norm2(&y[self.range(side.other())]) / total)
    }
}

/// A metric bundled with its fundamental decomposition. Families keep a
/// shared handle to one of these.
#[derive(Debug, Clone)]
pub struct KreinSpace {
    metric: KreinMetric,
    fd: FundamentalDecomposition,
}

impl KreinSpace {
    pub fn new(metric: KreinMetric) -> Result<Self> {
        let fd = FundamentalDecomposition::new(&metric)?;
        Ok(Self { metric, fd })
    }

    pub fn metric(&self) -> &KreinMetric {
        &self.metric
    }

    pub fn fd(&self) -> &FundamentalDecomposition {
        &self.fd
    }

    pub fn tol(&self) -> &Tolerances {
        self.metric.tol()
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn inner(&self, x: &KreinVector, y: &KreinVector) -> Result<C64> {
        self.metric.inner(x, y)
    }
}

/// Computes the fundamental decomposition of a metric.
pub fn fundamental_decomposition(m: &KreinMetric) -> Result<FundamentalDecomposition> {
    FundamentalDecomposition::new(m)
}

/// `([P₊x, P₊x] − [P₋x, P₋x])^{1/2}`.
pub fn j_norm(x: &KreinVector, fd: &FundamentalDecomposition, m: &KreinMetric) -> Result<f64> {
    let xp = fd.project(x, Side::Plus)?;
    let xm = fd.project(x, Side::Minus)?;
    let sq = m.inner(&xp, &xp)?.re - m.inner(&xm, &xm)?.re;
    Ok(sq.max(0.0).sqrt())
}

/// True iff `[e_i, e_j] = ±δ_ij` within `rank_tol`.
pub fn is_orthonormal_basis(vs: &[KreinVector], m: &KreinMetric) -> Result<bool> {
    if vs.len() != m.dim() {
        return Err(KreinError::DimensionMismatch {
            expected: m.dim(),
            found: vs.len(),
        });
    }
    let tol = m.tol().rank_tol;
    for (i, ei) in vs.iter().enumerate() {
        for (j, ej) in vs.iter().enumerate() {
            let v = m.inner(ei, ej)?;
            let ok = if i == j {
                (v.norm() - 1.0).abs() <= tol && v.im.abs() <= tol
            } else {
                v.norm() <= tol
            };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Decides `x = y` for two vectors of one half by pairing `x − y` against the
/// canonical basis of that half.
pub fn equality_via_pairings(
    x: &KreinVector,
    y: &KreinVector,
    side: Side,
    fd: &FundamentalDecomposition,
    m: &KreinMetric,
) -> Result<bool> {
    let tol = m.tol().rank_tol;
    for v in [x, y] {
        let residual = fd.off_half_residual(v, side)?;
        if residual > tol {
            return Err(KreinError::NotInSubspace { residual });
        }
    }
    let threshold = tol * (fd.j_norm(x)? + fd.j_norm(y)?);
    let diff = x.sub(y);
    for w in fd.basis(side) {
        if m.inner(&diff, &w)?.norm() > threshold {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn diag(d: &[f64]) -> KreinMetric {
        KreinMetric::new(ComplexMatrix::from_real_diag(d), tol()).unwrap()
    }

    fn v(x: &[f64]) -> KreinVector {
        KreinVector::from_real(x)
    }

    fn check_decomposition(m: &KreinMetric, fd: &FundamentalDecomposition) {
        let j: Vec<f64> = fd.signs().iter().map(|&s| s as f64).collect();
        let wgw = &(&fd.w().adjoint() * m.matrix()) * fd.w();
        let err = (&wgw - &ComplexMatrix::from_real_diag(&j)).max_abs();
        assert!(err <= 1e-10 * m.matrix().norm_fro(), "WᴴGW error {err}");
        let sum = fd.projector(Side::Plus) + fd.projector(Side::Minus);
        assert!((&sum - &ComplexMatrix::identity(fd.dim())).max_abs() < 1e-12);
        let prod = fd.projector(Side::Plus) * fd.projector(Side::Minus);
        assert!(prod.max_abs() < 1e-12);
    }

    #[test]
    fn inner_product_examples() {
        let m = diag(&[1.0, -1.0]);
        assert_eq!(m.inner(&v(&[1.0, 0.0]), &v(&[1.0, 0.0])).unwrap().re, 1.0);
        assert_eq!(m.inner(&v(&[0.0, 1.0]), &v(&[0.0, 1.0])).unwrap().re, -1.0);
        assert_eq!(m.inner(&v(&[1.0, 1.0]), &v(&[1.0, 1.0])).unwrap().re, 0.0);
        assert!(matches!(
            indefinite_inner(&v(&[1.0]), &v(&[1.0, 0.0]), &m),
            Err(KreinError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn inner_product_is_sesquilinear() {
        let m = diag(&[2.0, -1.0]);
        let i = C64::new(0.0, 1.0);
        let x = KreinVector::new(vec![C64::new(1.0, 2.0), C64::new(-0.5, 1.0)]).unwrap();
        let y = KreinVector::new(vec![C64::new(0.3, -1.0), C64::new(2.0, 0.25)]).unwrap();
        let xy = m.inner(&x, &y).unwrap();
        let yx = m.inner(&y, &x).unwrap();
        assert!((xy - yx.conj()).norm() < 1e-15);
        // linear in the first slot, conjugate-linear in the second
        assert!((m.inner(&x.scale(i), &y).unwrap() - i * xy).norm() < 1e-15);
        assert!((m.inner(&x, &y.scale(i)).unwrap() + i * xy).norm() < 1e-15);
    }

    #[test]
    fn decomposition_of_signature_matrix() {
        let m = diag(&[1.0, -1.0]);
        let fd = fundamental_decomposition(&m).unwrap();
        assert_eq!((fd.p(), fd.q()), (1, 1));
        assert_eq!(fd.signs(), &[1, -1]);
        assert_eq!(fd.w(), &ComplexMatrix::identity(2));
        check_decomposition(&m, &fd);
    }

    #[test]
    fn decomposition_rescales_eigenvectors() {
        let m = diag(&[3.0, -2.0]);
        let fd = fundamental_decomposition(&m).unwrap();
        let expected = ComplexMatrix::from_real_diag(&[3f64.powf(-0.5), 2f64.powf(-0.5)]);
        assert!((fd.w() - &expected).max_abs() < 1e-15);
        check_decomposition(&m, &fd);
    }

    #[test]
    fn decomposition_of_swap_metric() {
        let m =
            KreinMetric::new(ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]), tol()).unwrap();
        let fd = fundamental_decomposition(&m).unwrap();
        assert_eq!((fd.p(), fd.q()), (1, 1));
        let r = 0.5f64.sqrt();
        let plus = fd.w().column(0);
        let minus = fd.w().column(1);
        assert!((plus[0].re - r).abs() < 1e-14 && (plus[1].re - r).abs() < 1e-14);
        assert!((minus[0].re - r).abs() < 1e-14 && (minus[1].re + r).abs() < 1e-14);
        check_decomposition(&m, &fd);
    }

    #[test]
    fn sign_classes_sorted_by_magnitude() {
        let m = diag(&[-0.5, 2.0, -4.0, 1.0]);
        let fd = fundamental_decomposition(&m).unwrap();
        assert_eq!(fd.eigenvalues(), &[2.0, 1.0, -4.0, -0.5]);
        assert_eq!((fd.p(), fd.q()), (2, 2));
    }

    #[test]
    fn degenerate_metric_rejected() {
        let g = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
        assert!(matches!(
            KreinMetric::new(g, tol()),
            Err(KreinError::DegenerateMetric { .. })
        ));
    }

    #[test]
    fn j_norm_examples() {
        let m = diag(&[1.0, -1.0]);
        let fd = fundamental_decomposition(&m).unwrap();
        for (x, expected) in [
            (v(&[1.0, 0.0]), 1.0),
            (v(&[1.0, 1.0]), 2f64.sqrt()),
            (v(&[0.0, 2.0]), 2.0),
        ] {
            assert!((j_norm(&x, &fd, &m).unwrap() - expected).abs() < 1e-15);
            assert!((fd.j_norm(&x).unwrap() - expected).abs() < 1e-15);
        }
        assert_eq!(m.inner(&v(&[1.0, 1.0]), &v(&[1.0, 1.0])).unwrap().re, 0.0);
    }

    #[test]
    fn orthonormal_basis_examples() {
        let m = diag(&[1.0, -1.0]);
        assert!(is_orthonormal_basis(&[v(&[1.0, 0.0]), v(&[0.0, 1.0])], &m).unwrap());
        assert!(!is_orthonormal_basis(&[v(&[1.0, 0.0]), v(&[1.0, 1.0])], &m).unwrap());
        assert!(!is_orthonormal_basis(&[v(&[2.0, 0.0]), v(&[0.0, 1.0])], &m).unwrap());
        assert!(is_orthonormal_basis(&[v(&[1.0, 0.0])], &m).is_err());
    }

    #[test]
    fn equality_via_pairings_examples() {
        let m = diag(&[1.0, -1.0]);
        let fd = fundamental_decomposition(&m).unwrap();
        let x = v(&[1.0, 0.0]);
        assert!(equality_via_pairings(&x, &x, Side::Plus, &fd, &m).unwrap());
        assert!(!equality_via_pairings(&x, &v(&[0.5, 0.0]), Side::Plus, &fd, &m).unwrap());
        assert!(equality_via_pairings(&x, &v(&[1.0 + 1e-15, 0.0]), Side::Plus, &fd, &m).unwrap());
        assert!(matches!(
            equality_via_pairings(&x, &v(&[1.0, 1.0]), Side::Plus, &fd, &m),
            Err(KreinError::NotInSubspace { .. })
        ));
        let y = v(&[0.0, 3.0]);
        assert!(equality_via_pairings(&y, &y, Side::Minus, &fd, &m).unwrap());
    }
}
