//! Positive and negative Gram matrices of a family and the criteria built
//! on them: Bessel bounds, the absolute-sum bound and Gram invertibility.

use crate::error::Result;
use crate::family::VectorFamily;
use crate::metric::Side;
use crate::numerics::{singular_extremes, ComplexMatrix, Tolerances};

/// Gram matrices over `I₊ × I₊` and `I₋ × I₋`, entry `(i, j) = [f_i, f_j]`.
///
/// The negative Gram matrix is stored as computed (negative semidefinite for
/// a clean family). Empty halves have zero norms and zero `sigma_min`.
#[derive(Debug, Clone)]
pub struct GramPair {
    pub g_plus: ComplexMatrix,
    pub g_minus: ComplexMatrix,
    pub norm_plus: f64,
    pub norm_minus: f64,
    pub sigma_min_plus: f64,
    pub sigma_min_minus: f64,
}

impl GramPair {
    pub fn matrix(&self, side: Side) -> &ComplexMatrix {
        match side {
            Side::Plus => &self.g_plus,
            Side::Minus => &self.g_minus,
        }
    }

    pub fn norm(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.norm_plus,
            Side::Minus => self.norm_minus,
        }
    }

    pub fn sigma_min(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.sigma_min_plus,
            Side::Minus => self.sigma_min_minus,
        }
    }
}

fn extremes_or_zero(m: &ComplexMatrix) -> (f64, f64) {
    if m.is_empty() {
        (0.0, 0.0)
    } else {
        singular_extremes(m).expect("nonempty")
    }
}

/// Half Gram matrix `[f_i, f_j]` for `i, j` in one index class.
pub fn half_gram(fam: &VectorFamily, side: Side) -> Result<ComplexMatrix> {
    let vs: Vec<_> = fam.half(side).collect();
    let k = vs.len();
    let mut g = ComplexMatrix::zeros(k, k);
    let space = fam.space();
    for i in 0..k {
        for j in i..k {
            let v = space.inner(vs[i], vs[j])?;
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
        g[(i, i)].im = 0.0;
    }
    Ok(g)
}

/// Builds both Gram matrices via the indefinite inner product.
pub fn gram_matrices(fam: &VectorFamily) -> Result<GramPair> {
    let g_plus = half_gram(fam, Side::Plus)?;
    let g_minus = half_gram(fam, Side::Minus)?;
    let (sigma_min_plus, norm_plus) = extremes_or_zero(&g_plus);
    let (sigma_min_minus, norm_minus) = extremes_or_zero(&g_minus);
    Ok(GramPair {
        g_plus,
        g_minus,
        norm_plus,
        norm_minus,
        sigma_min_plus,
        sigma_min_minus,
    })
}

/// Optimal Bessel bounds `(B, B′)` of the two halves: the spectral norms of
/// the Gram matrices.
pub fn bessel_from_gram(gp: &GramPair) -> (f64, f64) {
    (gp.norm_plus, gp.norm_minus)
}

/// `Σ_{j,n} |M_{j,n}|`, an upper bound for the spectral norm of a Hermitian
/// matrix.
pub fn absolute_sum_bound(m: &ComplexMatrix, tol: &Tolerances) -> Result<f64> {
    m.check_hermitian(tol.sym_tol)?;
    let s = m.abs_sum();
    debug_assert!(m.is_empty() || singular_extremes(m)?.1 <= s * (1.0 + 1e-12));
    Ok(s)
}

/// `Σ_{j,n ∈ I} |[f_j, f_n]|` over the whole index set, halves mixed.
pub fn absolute_sum_bessel_test(fam: &VectorFamily) -> Result<f64> {
    let space = fam.space();
    let vs = fam.vectors();
    let mut total = 0.0;
    for fj in vs {
        for fn_ in vs {
            total += space.inner(fj, fn_)?.norm();
        }
    }
    Ok(total)
}

/// Gram invertibility per half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramInvertibility {
    pub plus: bool,
    pub minus: bool,
    /// `(sigma_min(g_plus), sigma_min(g_minus))`.
    pub sigma_mins: (f64, f64),
}

/// A half counts as invertible when `sigma_min > rank_tol · sigma_max`; an
/// empty half is invertible.
pub fn gram_invertibility(gp: &GramPair, tol: &Tolerances) -> GramInvertibility {
    let ok = |side| {
        let m = gp.matrix(side);
        m.is_empty() || gp.sigma_min(side) > tol.rank_tol * gp.norm(side)
    };
    GramInvertibility {
        plus: ok(Side::Plus),
        minus: ok(Side::Minus),
        sigma_mins: (gp.sigma_min_plus, gp.sigma_min_minus),
    }
}
