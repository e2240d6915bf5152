//! Solvers for nonlinear eigenvalue problems with one quadratic rational
//! eigenvector nonlinearity,
//!
//! ```text
//!     A v = lambda B v + (v^H P v / v^H Q v) C v,
//! ```
//!
//! where `A`, `C`, `P` are Hermitian and `B`, `Q` are Hermitian positive
//! definite. Writing `mu = v^H P v / v^H Q v`, every solution is a real pair
//! `(lambda, mu)` together with an eigenvector `v`.
//!
//! The central device is a compact linearization: the problem is embedded in
//! a two-parameter matrix pencil built from hat matrices of order `2n - 1`,
//! whose operator determinants `Delta_0`, `Delta_1`, `Delta_2` of order
//! `2n^2 - n` carry the full solution set. Structure-exploiting Arnoldi
//! iterations on `Delta_0^{-1} Delta_1` (or its shifted variants) recover the
//! genuine solutions while filtering the spurious families introduced by the
//! embedding.
//!
//! Module layout:
//!
//! * [`linalg`]: dense complex kernels (QZ, SVD, Cholesky, generalized
//!   Sylvester solves) shared by everything else.
//! * [`problem`]: problem container, residuals, and the bivariate polynomial
//!   system `det M = 0`, `trace(S adj M) = 0` attached to it.
//! * [`linearization`]: hat matrices, Delta operators, subspace tests, and
//!   classification of candidate eigenvectors.
//! * [`arnoldi`]: the filtering, two-sided, and singular-pencil Arnoldi
//!   solvers with convergence tracking.
//! * [`oracle`]: slow reference paths (dense Delta eigensolve, SCF
//!   multistart) used to cross-check the fast solvers.

pub mod arnoldi;
pub mod instances;
pub mod linalg;
pub mod linearization;
pub mod oracle;
pub mod problem;

pub use num_complex::Complex64;
