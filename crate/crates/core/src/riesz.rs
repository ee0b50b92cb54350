//! Riesz bases of a Krein space.
//!
//! A Riesz basis is the image of a canonical orthonormal basis under a pair
//! of bounded bijections `U⁺` on `K⁺` and `U⁻` on `K⁻`. All operator algebra
//! here happens in canonical coordinates, where the metric restricted to
//! `K±` is `±` the Euclidean inner product and Hilbert adjoints are conjugate
//! transposes. Vectors are converted to ambient coordinates only when a
//! family is built.
//!
//! Two independent tests decide whether a family is a Riesz basis:
//! [`riesz_via_inequalities`] (completeness plus positive lower bounds in
//! the synthesis inequalities) and [`riesz_via_gram`] (completeness plus
//! invertible Gram matrices). [`factor_riesz`] is a third, constructive one.

use std::fmt;
use std::sync::Arc;

use crate::error::{KreinError, Result};
use crate::family::{Completeness, VectorFamily};
use crate::gram::{bessel_from_gram, gram_invertibility, gram_matrices};
use crate::metric::{KreinSpace, KreinVector, Side};
use crate::numerics::{
    check_invertible, invert, singular_extremes, svd, ComplexMatrix, Tolerances, C64,
};

/// Bounded bijections `U⁺` (`p × p`) and `U⁻` (`q × q`) in canonical
/// coordinates, with their norms and inverse norms. Empty halves have all
/// four quantities equal to zero.
#[derive(Debug, Clone)]
pub struct OperatorPair {
    u_plus: ComplexMatrix,
    u_minus: ComplexMatrix,
    norm_plus: f64,
    norm_minus: f64,
    inv_norm_plus: f64,
    inv_norm_minus: f64,
}

fn operator_norms(u: &ComplexMatrix, tol: &Tolerances) -> Result<(f64, f64)> {
    if !u.is_square() {
        return Err(KreinError::NonSquare {
            rows: u.rows(),
            cols: u.cols(),
        });
    }
    if u.is_empty() {
        return Ok((0.0, 0.0));
    }
    let (sigma_min, sigma_max) = check_invertible(u, tol).map_err(|e| match e {
        KreinError::Singular {
            sigma_min,
            sigma_max,
        } => KreinError::SingularOperator {
            sigma_min,
            sigma_max,
        },
        other => other,
    })?;
    Ok((sigma_max, 1.0 / sigma_min))
}

impl OperatorPair {
    pub fn new(u_plus: ComplexMatrix, u_minus: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        let (norm_plus, inv_norm_plus) = operator_norms(&u_plus, tol)?;
        let (norm_minus, inv_norm_minus) = operator_norms(&u_minus, tol)?;
        Ok(Self {
            u_plus,
            u_minus,
            norm_plus,
            norm_minus,
            inv_norm_plus,
            inv_norm_minus,
        })
    }

    pub fn identity(p: usize, q: usize) -> Self {
        Self::new(
            ComplexMatrix::identity(p),
            ComplexMatrix::identity(q),
            &Tolerances::default(),
        )
        .expect("identity is invertible")
    }

    pub fn u(&self, side: Side) -> &ComplexMatrix {
        match side {
            Side::Plus => &self.u_plus,
            Side::Minus => &self.u_minus,
        }
    }

    pub fn u_plus(&self) -> &ComplexMatrix {
        &self.u_plus
    }

    pub fn u_minus(&self) -> &ComplexMatrix {
        &self.u_minus
    }

    /// `‖U±‖`.
    pub fn norm(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.norm_plus,
            Side::Minus => self.norm_minus,
        }
    }

    /// `‖(U±)⁻¹‖`.
    pub fn inv_norm(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.inv_norm_plus,
            Side::Minus => self.inv_norm_minus,
        }
    }

    fn check_space(&self, space: &KreinSpace) -> Result<()> {
        let fd = space.fd();
        for side in [Side::Plus, Side::Minus] {
            if self.u(side).rows() != fd.half_dim(side) {
                return Err(KreinError::DimensionMismatch {
                    expected: fd.half_dim(side),
                    found: self.u(side).rows(),
                });
            }
        }
        Ok(())
    }
}

/// `(A, B, A′, B′)`: lower/upper constants on `K⁺`, then on `K⁻`. An empty
/// half reports zeros.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameBounds {
    pub a: f64,
    pub b: f64,
    pub a_prime: f64,
    pub b_prime: f64,
}

impl FrameBounds {
    pub fn lower(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.a,
            Side::Minus => self.a_prime,
        }
    }

    pub fn upper(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.b,
            Side::Minus => self.b_prime,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a, self.b, self.a_prime, self.b_prime]
    }
}

/// Why a family failed a Riesz test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailureReason {
    IncompletePlus,
    IncompleteMinus,
    GramSingularPlus,
    GramSingularMinus,
    MixedMembership,
    None,
}

impl FailureReason {
    pub const ALL: [FailureReason; 6] = [
        FailureReason::IncompletePlus,
        FailureReason::IncompleteMinus,
        FailureReason::GramSingularPlus,
        FailureReason::GramSingularMinus,
        FailureReason::MixedMembership,
        FailureReason::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureReason::IncompletePlus => "incomplete_plus",
            FailureReason::IncompleteMinus => "incomplete_minus",
            FailureReason::GramSingularPlus => "gram_singular_plus",
            FailureReason::GramSingularMinus => "gram_singular_minus",
            FailureReason::MixedMembership => "mixed_membership",
            FailureReason::None => "none",
        }
    }

    fn incomplete(side: Side) -> Self {
        match side {
            Side::Plus => FailureReason::IncompletePlus,
            Side::Minus => FailureReason::IncompleteMinus,
        }
    }

    fn singular(side: Side) -> Self {
        match side {
            Side::Plus => FailureReason::GramSingularPlus,
            Side::Minus => FailureReason::GramSingularMinus,
        }
    }
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FailureReason {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        FailureReason::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown failure reason {s:?}"))
    }
}

/// Outcome of a Riesz test.
///
/// `margins` holds, per half, the relative lower bound (`A/B` for the
/// inequality test, `σ_min/σ_max` of the Gram matrix for the Gram test);
/// the half passes when its margin exceeds `rank_tol`. Empty halves report 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RieszVerdict {
    pub is_riesz: bool,
    pub complete: Completeness,
    pub bounds_witness: Option<FrameBounds>,
    pub failure_reason: FailureReason,
    pub margins: (f64, f64),
}

/// A certified Riesz basis: its operators, duals and optimal bounds.
#[derive(Debug, Clone)]
pub struct RieszCertificate {
    pub ops: OperatorPair,
    pub family: VectorFamily,
    /// Duals aligned with `family`: `duals.vectors()[n]` pairs with `f_n`.
    pub duals: VectorFamily,
    pub bounds: FrameBounds,
}

/// Places plus-half and minus-half vectors at the given family indices.
fn interleave(
    space: &Arc<KreinSpace>,
    plus: Vec<KreinVector>,
    minus: Vec<KreinVector>,
    i_plus: &[usize],
    i_minus: &[usize],
) -> Result<VectorFamily> {
    let n = i_plus.len() + i_minus.len();
    let mut slots: Vec<Option<KreinVector>> = vec![None; n];
    for (&i, v) in i_plus.iter().zip(plus) {
        slots[i] = Some(v);
    }
    for (&i, v) in i_minus.iter().zip(minus) {
        slots[i] = Some(v);
    }
    let vectors = slots
        .into_iter()
        .map(|s| s.expect("index lists cover the family"))
        .collect();
    VectorFamily::split(Arc::clone(space), vectors)
}

fn columns_as_vectors(
    space: &KreinSpace,
    m: &ComplexMatrix,
    side: Side,
) -> Result<Vec<KreinVector>> {
    m.columns()
        .iter()
        .map(|c| space.fd().embed(c, side))
        .collect()
}

/// `{U⁺e_n}_{n<p} ∪ {U⁻e_n}_{n<q}` in ambient coordinates, plus half first.
pub fn construct_riesz(ops: &OperatorPair, space: &Arc<KreinSpace>) -> Result<VectorFamily> {
    ops.check_space(space)?;
    let mut vectors = columns_as_vectors(space, ops.u_plus(), Side::Plus)?;
    vectors.extend(columns_as_vectors(space, ops.u_minus(), Side::Minus)?);
    VectorFamily::split(Arc::clone(space), vectors)
}

fn inverse_adjoint(u: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    if u.is_empty() {
        return Ok(u.clone());
    }
    Ok(invert(u, tol)
        .map_err(|e| match e {
            KreinError::Singular {
                sigma_min,
                sigma_max,
            } => KreinError::SingularOperator {
                sigma_min,
                sigma_max,
            },
            other => other,
        })?
        .adjoint())
}

fn dual_halves(
    ops: &OperatorPair,
    space: &KreinSpace,
) -> Result<(Vec<KreinVector>, Vec<KreinVector>)> {
    let tol = space.tol();
    let plus = inverse_adjoint(ops.u_plus(), tol)?;
    let minus = inverse_adjoint(ops.u_minus(), tol)?;
    Ok((
        columns_as_vectors(space, &plus, Side::Plus)?,
        columns_as_vectors(space, &minus, Side::Minus)?,
    ))
}

/// `g_n = ((U±)⁻¹)ᴴ e_n`, plus half first (the order of [`construct_riesz`]).
pub fn dual_sequence(ops: &OperatorPair, space: &Arc<KreinSpace>) -> Result<VectorFamily> {
    ops.check_space(space)?;
    let (mut vectors, minus) = dual_halves(ops, space)?;
    vectors.extend(minus);
    VectorFamily::split(Arc::clone(space), vectors)
}

fn check_same_split(a: &VectorFamily, b: &VectorFamily) -> Result<()> {
    if a.i_plus() != b.i_plus() || a.i_minus() != b.i_minus() {
        return Err(KreinError::SplitMismatch);
    }
    Ok(())
}

/// Largest deviation of `[f_n, g_m]` from `+δ` on `I₊`, `−δ` on `I₋` and `0`
/// across halves.
pub fn biorthogonality_residual(fam: &VectorFamily, duals: &VectorFamily) -> Result<f64> {
    check_same_split(fam, duals)?;
    let space = fam.space();
    let sign = |n: usize| {
        if fam.i_minus().contains(&n) {
            -1.0
        } else {
            1.0
        }
    };
    let mut worst: f64 = 0.0;
    for (n, f) in fam.vectors().iter().enumerate() {
        for (m, g) in duals.vectors().iter().enumerate() {
            let target = if n == m { sign(n) } else { 0.0 };
            let v = space.inner(f, g)?;
            worst = worst.max((v - C64::new(target, 0.0)).norm());
        }
    }
    Ok(worst)
}

/// `[f_n, g_m] = ±δ_nm` within `rank_tol` times the product of the largest
/// `J`-norms in the two families.
pub fn biorthogonality_check(fam: &VectorFamily, duals: &VectorFamily) -> Result<bool> {
    let residual = biorthogonality_residual(fam, duals)?;
    let fd = fam.space().fd();
    let max_norm = |f: &VectorFamily| -> Result<f64> {
        f.vectors()
            .iter()
            .map(|v| fd.j_norm(v))
            .try_fold(0.0f64, |acc, x| x.map(|x| acc.max(x)))
    };
    let scale = (max_norm(fam)? * max_norm(duals)?).max(1.0);
    Ok(residual <= fam.space().tol().rank_tol * scale)
}

/// Expands `f ∈ K±` against the dual pairing.
///
/// On `K⁺` this is `Σ_{I₊} [f, g_n] f_n`. On `K⁻` the Hilbert inner product
/// is `−[·,·]`, so the expansion is `−Σ_{I₋} [f, g_n] f_n`.
pub fn reconstruct(
    f: &KreinVector,
    fam: &VectorFamily,
    duals: &VectorFamily,
    side: Side,
) -> Result<KreinVector> {
    check_same_split(fam, duals)?;
    let space = fam.space();
    let residual = space.fd().off_half_residual(f, side)?;
    if residual > space.tol().rank_tol {
        return Err(KreinError::NotInSubspace { residual });
    }
    let mut acc = vec![C64::new(0.0, 0.0); space.dim()];
    for (fn_, gn) in fam.half(side).zip(duals.half(side)) {
        let coeff = space.inner(f, gn)? * side.sign();
        crate::numerics::axpy(coeff, fn_.coords(), &mut acc);
    }
    Ok(KreinVector::from(acc))
}

/// `A = 1/‖(U⁺)⁻¹‖²`, `B = ‖U⁺‖²`, and likewise on `K⁻`.
pub fn optimal_frame_bounds(ops: &OperatorPair) -> FrameBounds {
    let lower = |side| {
        let inv = ops.inv_norm(side);
        if inv == 0.0 {
            0.0
        } else {
            1.0 / (inv * inv)
        }
    };
    FrameBounds {
        a: lower(Side::Plus),
        b: ops.norm(Side::Plus).powi(2),
        a_prime: lower(Side::Minus),
        b_prime: ops.norm(Side::Minus).powi(2),
    }
}

/// Extreme eigenvalues of `CᴴC`, where `C` holds canonical coordinates of
/// one half, read off the singular values of `C` without forming `CᴴC`.
fn synthesis_extremes(fam: &VectorFamily, side: Side) -> Result<(f64, f64)> {
    let c = fam.canonical_matrix(side)?;
    if c.cols() == 0 {
        return Ok((0.0, 0.0));
    }
    if c.rows() == 0 {
        return Ok((0.0, 0.0));
    }
    let s = svd(&c)?;
    let top = s.values[0];
    // more coefficients than dimensions: CᴴC has a kernel
    let bottom = if c.cols() > c.rows() {
        0.0
    } else {
        *s.values.last().expect("nonempty")
    };
    Ok((bottom * bottom, top * top))
}

/// Optimal constants in `A Σ|c_n|² ≤ ‖Σ c_n f_n‖²_J ≤ B Σ|c_n|²` on each half.
///
/// Requires every `I₊` vector in `K⁺` and every `I₋` vector in `K⁻`.
pub fn frame_inequality_bounds(fam: &VectorFamily) -> Result<FrameBounds> {
    if !fam.is_clean() {
        return Err(KreinError::MixedMembership);
    }
    let (a, b) = synthesis_extremes(fam, Side::Plus)?;
    let (a_prime, b_prime) = synthesis_extremes(fam, Side::Minus)?;
    Ok(FrameBounds {
        a,
        b,
        a_prime,
        b_prime,
    })
}

fn first_incomplete(c: &Completeness) -> Option<FailureReason> {
    [Side::Plus, Side::Minus]
        .into_iter()
        .find(|&s| match s {
            Side::Plus => !c.plus,
            Side::Minus => !c.minus,
        })
        .map(FailureReason::incomplete)
}

fn failed(complete: Completeness, reason: FailureReason, margins: (f64, f64)) -> RieszVerdict {
    RieszVerdict {
        is_riesz: false,
        complete,
        bounds_witness: None,
        failure_reason: reason,
        margins,
    }
}

/// Completeness on both halves plus strictly positive lower bounds in the
/// synthesis inequalities.
pub fn riesz_via_inequalities(fam: &VectorFamily, tol: &Tolerances) -> RieszVerdict {
    let complete = fam.completeness();
    let bounds = match frame_inequality_bounds(fam) {
        Ok(b) => b,
        Err(_) => return failed(complete, FailureReason::MixedMembership, (0.0, 0.0)),
    };
    let margin = |side| {
        if fam.indices(side).is_empty() {
            1.0
        } else if bounds.upper(side) > 0.0 {
            bounds.lower(side) / bounds.upper(side)
        } else {
            0.0
        }
    };
    let margins = (margin(Side::Plus), margin(Side::Minus));
    if let Some(reason) = first_incomplete(&complete) {
        return failed(complete, reason, margins);
    }
    for (side, m) in [(Side::Plus, margins.0), (Side::Minus, margins.1)] {
        if !(m > tol.rank_tol) {
            return failed(complete, FailureReason::singular(side), margins);
        }
    }
    RieszVerdict {
        is_riesz: true,
        complete,
        bounds_witness: Some(bounds),
        failure_reason: FailureReason::None,
        margins,
    }
}

/// Completeness on both halves plus invertible positive and negative Gram
/// matrices.
pub fn riesz_via_gram(fam: &VectorFamily, tol: &Tolerances) -> RieszVerdict {
    let complete = fam.completeness();
    let gp = match gram_matrices(fam) {
        Ok(g) => g,
        Err(_) => return failed(complete, FailureReason::MixedMembership, (0.0, 0.0)),
    };
    let margin = |side| {
        if gp.matrix(side).is_empty() {
            1.0
        } else if gp.norm(side) > 0.0 {
            gp.sigma_min(side) / gp.norm(side)
        } else {
            0.0
        }
    };
    let margins = (margin(Side::Plus), margin(Side::Minus));
    if !fam.is_clean() {
        return failed(complete, FailureReason::MixedMembership, margins);
    }
    if let Some(reason) = first_incomplete(&complete) {
        return failed(complete, reason, margins);
    }
    let inv = gram_invertibility(&gp, tol);
    if !inv.plus {
        return failed(complete, FailureReason::GramSingularPlus, margins);
    }
    if !inv.minus {
        return failed(complete, FailureReason::GramSingularMinus, margins);
    }
    // For a clean family the Gram spectrum is the synthesis spectrum:
    // B = ‖g₊‖, B′ = ‖g₋‖, A = σ_min(g₊), A′ = σ_min(g₋).
    let (b, b_prime) = bessel_from_gram(&gp);
    let bounds = FrameBounds {
        a: gp.sigma_min_plus,
        b,
        a_prime: gp.sigma_min_minus,
        b_prime,
    };
    RieszVerdict {
        is_riesz: true,
        complete,
        bounds_witness: Some(bounds),
        failure_reason: FailureReason::None,
        margins,
    }
}

/// Reads off `U±` from a Riesz family: column `k` of `U⁺` holds the
/// canonical `K⁺` coordinates of the `k`-th `I₊` vector.
pub fn factor_riesz(fam: &VectorFamily, tol: &Tolerances) -> Result<OperatorPair> {
    if !fam.is_clean() {
        return Err(KreinError::NotRiesz(FailureReason::MixedMembership));
    }
    let fd = fam.space().fd();
    for side in [Side::Plus, Side::Minus] {
        let found = fam.indices(side).len();
        let expected = fd.half_dim(side);
        if found != expected {
            return Err(KreinError::CountMismatch { expected, found });
        }
    }
    let u_plus = fam.canonical_matrix(Side::Plus)?;
    let u_minus = fam.canonical_matrix(Side::Minus)?;
    let to_not_riesz = |side| {
        move |e| match e {
            KreinError::SingularOperator { .. } => {
                KreinError::NotRiesz(FailureReason::singular(side))
            }
            other => other,
        }
    };
    operator_norms(&u_plus, tol).map_err(to_not_riesz(Side::Plus))?;
    operator_norms(&u_minus, tol).map_err(to_not_riesz(Side::Minus))?;
    OperatorPair::new(u_plus, u_minus, tol)
}

impl RieszCertificate {
    /// Factors a Riesz family and attaches its duals (aligned with the
    /// family's own order) and optimal bounds.
    pub fn from_family(fam: &VectorFamily) -> Result<Self> {
        let space = fam.space();
        let ops = factor_riesz(fam, space.tol())?;
        let (plus, minus) = dual_halves(&ops, space)?;
        let duals = interleave(space, plus, minus, fam.i_plus(), fam.i_minus())?;
        check_same_split(fam, &duals)?;
        let bounds = optimal_frame_bounds(&ops);
        Ok(Self {
            ops,
            family: fam.clone(),
            duals,
            bounds,
        })
    }

    /// Certificate for `construct_riesz(ops)`.
    pub fn from_operators(ops: OperatorPair, space: &Arc<KreinSpace>) -> Result<Self> {
        let family = construct_riesz(&ops, space)?;
        let duals = dual_sequence(&ops, space)?;
        check_same_split(&family, &duals)?;
        let bounds = optimal_frame_bounds(&ops);
        Ok(Self {
            ops,
            family,
            duals,
            bounds,
        })
    }
}

/// The linear map `h_n ↦ g_n` on one half, in canonical coordinates of that
/// half, with the a-priori bound `√(B/A)` on its norm.
#[derive(Debug, Clone)]
pub struct SpanOperator {
    pub operator: ComplexMatrix,
    pub norm: f64,
    pub norm_bound: f64,
}

/// Builds the operator sending each `h_n` to `g_n` over the chosen index
/// class. `A` is the lower Riesz bound of the `h`-vectors and `B` the Bessel
/// bound of the `g`-vectors.
pub fn span_operator(
    h_fam: &VectorFamily,
    g_fam: &VectorFamily,
    side: Side,
) -> Result<SpanOperator> {
    let count = h_fam.indices(side).len();
    if g_fam.indices(side).len() != count {
        return Err(KreinError::CountMismatch {
            expected: count,
            found: g_fam.indices(side).len(),
        });
    }
    let dim = h_fam.space().fd().half_dim(side);
    if count != dim {
        return Err(KreinError::CountMismatch {
            expected: dim,
            found: count,
        });
    }
    for fam in [h_fam, g_fam] {
        let membership = fam.subspace_membership();
        if fam.indices(side).iter().any(|&n| !membership[n]) {
            return Err(KreinError::MixedMembership);
        }
    }
    let tol = h_fam.space().tol();
    let (lower, upper_h) = synthesis_extremes(h_fam, side)?;
    if !(lower > tol.rank_tol * upper_h) {
        return Err(KreinError::LowerBoundZero { lower });
    }
    let gp = gram_matrices(g_fam)?;
    let bessel = gp.norm(side);

    let h = h_fam.canonical_matrix(side)?;
    let g = g_fam.canonical_matrix(side)?;
    let operator = &g * &invert(&h, tol)?;
    let norm = if operator.is_empty() {
        0.0
    } else {
        singular_extremes(&operator)?.1
    };
    let norm_bound = (bessel / lower).sqrt();
    debug_assert!(norm <= norm_bound * (1.0 + 1e-8), "{norm} > {norm_bound}");
    Ok(SpanOperator {
        operator,
        norm,
        norm_bound,
    })
}
