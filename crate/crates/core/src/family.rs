//! Indexed vector families, their signature-based index split and the
//! synthesis/analysis operators.

use std::sync::Arc;

use crate::error::{KreinError, Result};
use crate::metric::{KreinSpace, KreinVector, Side};
use crate::numerics::{numeric_rank, ComplexMatrix, C64};

/// A finite family `{f_n}` split into `I₊ = {n : [f_n, f_n] ≥ 0}` and
/// `I₋ = {n : [f_n, f_n] < 0}`.
///
/// Both index lists preserve the original family order.
#[derive(Debug, Clone)]
pub struct VectorFamily {
    space: Arc<KreinSpace>,
    vectors: Vec<KreinVector>,
    i_plus: Vec<usize>,
    i_minus: Vec<usize>,
    neutral: Vec<usize>,
}

/// Coefficients indexed by `I₊` and `I₋`, in index-list order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSequence {
    pub plus: Vec<C64>,
    pub minus: Vec<C64>,
}

impl CoefficientSequence {
    pub fn half(&self, side: Side) -> &[C64] {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }
}

/// Per-half and total completeness of a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Completeness {
    pub plus: bool,
    pub minus: bool,
    pub total: bool,
}

impl VectorFamily {
    /// Classifies each vector by the sign of `[f_n, f_n]`.
    ///
    /// Values within `rank_tol · ‖f_n‖_J²` of zero count as neutral; they go to
    /// `I₊` and are recorded in [`VectorFamily::neutral`].
    pub fn split(space: Arc<KreinSpace>, vectors: Vec<KreinVector>) -> Result<Self> {
        let tol = space.tol().rank_tol;
        let mut i_plus = Vec::new();
        let mut i_minus = Vec::new();
        let mut neutral = Vec::new();
        for (n, f) in vectors.iter().enumerate() {
            let self_inner = space.inner(f, f)?.re;
            let scale = space.fd().j_norm(f)?.powi(2);
            if self_inner.abs() <= tol * scale {
                neutral.push(n);
                i_plus.push(n);
            } else if self_inner > 0.0 {
                i_plus.push(n);
            } else {
                i_minus.push(n);
            }
        }
        Ok(Self {
            space,
            vectors,
            i_plus,
            i_minus,
            neutral,
        })
    }

    pub fn space(&self) -> &Arc<KreinSpace> {
        &self.space
    }

    pub fn vectors(&self) -> &[KreinVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn i_plus(&self) -> &[usize] {
        &self.i_plus
    }

    pub fn i_minus(&self) -> &[usize] {
        &self.i_minus
    }

    pub fn indices(&self, side: Side) -> &[usize] {
        match side {
            Side::Plus => &self.i_plus,
            Side::Minus => &self.i_minus,
        }
    }

    /// Indices whose `[f_n, f_n]` vanished within tolerance.
    pub fn neutral(&self) -> &[usize] {
        &self.neutral
    }

    pub fn has_neutral(&self) -> bool {
        !self.neutral.is_empty()
    }

    /// The vectors of one half, in index order.
    pub fn half(&self, side: Side) -> impl Iterator<Item = &KreinVector> + '_ {
        self.indices(side).iter().map(move |&n| &self.vectors[n])
    }

    /// `dim(K±) × |I±|` matrix of canonical coordinates of `P± f_n`, `n ∈ I±`.
    pub fn canonical_matrix(&self, side: Side) -> Result<ComplexMatrix> {
        let fd = self.space.fd();
        let cols = self
            .half(side)
            .map(|f| fd.canonical_half(f, side))
            .collect::<Result<Vec<_>>>()?;
        Ok(ComplexMatrix::from_columns(fd.half_dim(side), &cols))
    }

    /// For each index, whether `f_n` lies in the half its class requires:
    /// `‖P∓ f_n‖_J ≤ rank_tol · ‖f_n‖_J`.
    pub fn subspace_membership(&self) -> Vec<bool> {
        let tol = self.space.tol().rank_tol;
        let fd = self.space.fd();
        let mut out = vec![true; self.vectors.len()];
        for side in [Side::Plus, Side::Minus] {
            for &n in self.indices(side) {
                // dimensions were validated by `split`
                let residual = fd
                    .off_half_residual(&self.vectors[n], side)
                    .expect("dimension checked at construction");
                out[n] = residual <= tol;
            }
        }
        out
    }

    /// True iff every vector lies in its class's half.
    pub fn is_clean(&self) -> bool {
        self.subspace_membership().into_iter().all(|ok| ok)
    }

    /// `(Σ_{I₊} c_n f_n, Σ_{I₋} c_n f_n)`.
    pub fn synthesis(&self, c: &CoefficientSequence) -> Result<(KreinVector, KreinVector)> {
        let mut out = [
            KreinVector::zeros(self.space.dim()),
            KreinVector::zeros(self.space.dim()),
        ];
        for (k, side) in [Side::Plus, Side::Minus].into_iter().enumerate() {
            let idx = self.indices(side);
            let coeffs = c.half(side);
            if coeffs.len() != idx.len() {
                return Err(KreinError::DimensionMismatch {
                    expected: idx.len(),
                    found: coeffs.len(),
                });
            }
            let mut acc = vec![C64::new(0.0, 0.0); self.space.dim()];
            for (&n, &cn) in idx.iter().zip(coeffs) {
                crate::numerics::axpy(cn, self.vectors[n].coords(), &mut acc);
            }
            out[k] = KreinVector::from(acc);
        }
        let [plus, minus] = out;
        Ok((plus, minus))
    }

    /// `{[f, f_n]}` split by `I₊` and `I₋`.
    pub fn analysis(&self, f: &KreinVector) -> Result<CoefficientSequence> {
        let pair = |side| -> Result<Vec<C64>> {
            self.half(side)
                .map(|fn_| self.space.inner(f, fn_))
                .collect()
        };
        Ok(CoefficientSequence {
            plus: pair(Side::Plus)?,
            minus: pair(Side::Minus)?,
        })
    }

    /// Spanning checks on `K⁺`, `K⁻` and the whole space, via numeric rank
    /// in canonical coordinates.
    pub fn completeness(&self) -> Completeness {
        let fd = self.space.fd();
        let tol = self.space.tol();
        let half_complete = |side| {
            let need = fd.half_dim(side);
            let m = self.canonical_matrix(side).expect("dimension checked");
            if need == 0 {
                return true;
            }
            if m.cols() == 0 {
                return false;
            }
            numeric_rank(&m, tol).is_ok_and(|r| r == need)
        };
        let total = if self.vectors.is_empty() {
            false
        } else {
            let cols = self
                .vectors
                .iter()
                .map(|f| fd.canonical(f))
                .collect::<Result<Vec<_>>>()
                .expect("dimension checked");
            let m = ComplexMatrix::from_columns(fd.dim(), &cols);
            numeric_rank(&m, tol).is_ok_and(|r| r == fd.dim())
        };
        Completeness {
            plus: half_complete(Side::Plus),
            minus: half_complete(Side::Minus),
            total,
        }
    }
}

/// Builds a family and its index split.
pub fn split_indices(space: &Arc<KreinSpace>, vectors: Vec<KreinVector>) -> Result<VectorFamily> {
    VectorFamily::split(Arc::clone(space), vectors)
}
