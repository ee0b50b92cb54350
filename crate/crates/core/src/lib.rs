//! Riesz bases, Gram matrices and biorthogonal duals in finite-dimensional
//! Krein spaces.
//!
//! A Krein space here is `Cⁿ` with an indefinite inner product
//! `[x, y] = yᴴ G x` for a Hermitian invertible `G`. The crate builds the
//! fundamental decomposition `K = K⁺ ⊕ K⁻`, splits vector families by the
//! sign of `[f_n, f_n]`, and decides whether a family is a Riesz basis by
//! several independent routes that can be checked against each other.
//!
//! ```
//! use std::sync::Arc;
//! use krein_core::{metric::{KreinMetric, KreinSpace}, riesz, numerics::Tolerances};
//!
//! let tol = Tolerances::default();
//! let space = Arc::new(KreinSpace::new(KreinMetric::signature(2, 1, tol).unwrap()).unwrap());
//! let fam = riesz::construct_riesz(&riesz::OperatorPair::identity(2, 1), &space).unwrap();
//! assert!(riesz::riesz_via_gram(&fam, &tol).is_riesz);
//! ```

// NaN-safe threshold tests are written as `!(x > t)` throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod family;
pub mod generate;
pub mod gram;
pub mod metric;
pub mod numerics;
pub mod riesz;

pub use error::{KreinError, Result};
pub use family::{CoefficientSequence, Completeness, VectorFamily};
pub use gram::GramPair;
pub use metric::{FundamentalDecomposition, KreinMetric, KreinSpace, KreinVector, Side};
pub use numerics::{ComplexMatrix, Tolerances, C64};
pub use riesz::{FailureReason, FrameBounds, OperatorPair, RieszCertificate, RieszVerdict};
