//! Dense complex linear algebra kernels.
//!
//! Everything here is hand-rolled on top of a column-major [`DenseMatrix`]:
//! LU with partial pivoting, Cholesky, cyclic Jacobi eigen/SVD, a complex
//! single-shift QZ iteration, and a generalized Sylvester solver built on QZ.
//! The kernels favour determinism over peak speed: no threading, no
//! fast-math, fixed sweep orders, so repeated runs produce bit-identical
//! results.

mod cholesky;
mod dense;
mod eig;
mod lu;
mod svd;
mod sylvester;

pub mod qz;

pub use cholesky::cholesky;
pub use dense::{vaxpy, vdot, vnorm2, vscale, DenseMatrix, HermitianMatrix};
pub use eig::{
    dense_gep_eig, dense_gep_eig_unchecked, eig_hermitian, hermitian_definite_eig,
    normalize_with_phase, GepKind, GepPair,
};
pub use lu::LuFactors;
pub use qz::{generalized_schur, SchurPair};
pub use svd::{jacobi_svd, rank_estimate, svd_top2, Svd};
pub use sylvester::{
    solve_generalized_sylvester, GeneralizedSylvesterPlan, SylvesterMode, SylvesterSolution,
};

use thiserror::Error;

/// Errors surfaced by the dense kernels.
#[derive(Debug, Error)]
pub enum LinalgError {
    /// A Cholesky pivot failed, i.e. the matrix is not positive definite.
    #[error("matrix is not positive definite (pivot {pivot} is {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    /// The QZ iteration did not deflate within its sweep budget.
    #[error("QZ failed to converge within {sweeps} sweeps on order {order}")]
    NoConvergence { sweeps: usize, order: usize },

    /// A singular Sylvester operator met a right-hand side outside its range.
    #[error("singular Sylvester operator, right-hand side is inconsistent")]
    SingularOperator,

    /// More than a tenth of the eigenvalue pairs of a pencil were 0/0.
    #[error("pencil is numerically singular ({indeterminate}/{total} indeterminate pairs)")]
    SingularPencil { indeterminate: usize, total: usize },
}

/// Relative subdiagonal threshold and relative `T`-diagonal threshold used by
/// the QZ deflation tests.
pub(crate) const QZ_EPS: f64 = f64::EPSILON;

/// QZ gives up after `30 * order` sweeps.
pub(crate) const QZ_MAX_SWEEPS_PER_ORDER: usize = 30;

/// A diagonal 1x1 block of the triangularized Sylvester operator counts as
/// deficient when its modulus falls below `1e-12` times the block scale.
pub(crate) const SYLVESTER_PIVOT_RTOL: f64 = 1e-12;

/// Default relative cutoff for numerical rank decisions.
pub const RANK_RTOL: f64 = 1e-10;
