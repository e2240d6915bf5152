//! Data model and basic calculus for the eigenvector-nonlinear problem
//!
//! ```text
//!     A v = lambda B v + (v^H P v / v^H Q v) C v
//! ```
//!
//! with Hermitian `A`, `C`, `P` and Hermitian positive definite `B`, `Q`.
//! Writing `mu(v) = v^H P v / v^H Q v`, a solution is a pair of real scalars
//! `(lambda, mu)` together with a vector satisfying `M(lambda, mu) v = 0` and
//! `v^H S(mu) v = 0`, where
//!
//! ```text
//!     M(lambda, mu) = A - lambda B - mu C,      S(mu) = P - mu Q.
//! ```
//!
//! Eliminating `v` turns this into two bivariate polynomial equations,
//! `det M = 0` and `trace(S adj(M)) = 0`, which this module can evaluate and
//! whose real roots it can screen with a definiteness test on the restriction
//! of `S` to the null space of `M`.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{
    cholesky, eig_hermitian, jacobi_svd, vdot, vnorm2, DenseMatrix, HermitianMatrix, LuFactors,
};

/// Relative tolerance for accepting an input matrix as Hermitian.
pub const HERMITIAN_RTOL: f64 = 1e-13;

/// Two eigenvalue candidates count as the same solution when both scalars
/// agree to this tolerance, relative to `1 + |value|`.
pub const DUPLICATE_RTOL: f64 = 1e-6;

/// Tolerances shared by classification and filtering. The defaults sit about
/// three orders of magnitude above the dense kernel accuracy, so a candidate
/// that fails them is wrong, not merely noisy.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Bound on `|Im lambda|` relative to `1 + |Re lambda|` below which an
    /// eigenvalue counts as real.
    pub tol_real: f64,
    /// Bound on the normalized problem residual of a genuine solution.
    pub tol_res: f64,
    /// Relative singular value cutoff defining numerical null spaces.
    pub tol_rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_real: 1e-8,
            tol_res: 1e-8,
            tol_rank: 1e-8,
        }
    }
}

/// Names of the five problem matrices, for error reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixSymbol {
    A,
    B,
    C,
    P,
    Q,
}

impl fmt::Display for MatrixSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MatrixSymbol::A => "A",
            MatrixSymbol::B => "B",
            MatrixSymbol::C => "C",
            MatrixSymbol::P => "P",
            MatrixSymbol::Q => "Q",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("matrix {0} is not Hermitian to working precision")]
    NotHermitian(MatrixSymbol),
    #[error("matrix {0} is not positive definite")]
    NotPositiveDefinite(MatrixSymbol),
    #[error("inconsistent dimensions: {0}")]
    DimensionMismatch(String),
    #[error("zero vector passed where an eigenvector candidate was expected")]
    ZeroVector,
    #[error("no numerical null space at (lambda, mu) = ({lambda}, {mu}); point is not on det M = 0")]
    EmptyNullSpace { lambda: f64, mu: f64 },
}

/// The five matrices defining one problem instance.
///
/// The fields are public so that test code can assemble exotic instances
/// directly; [`NepvProblem::new`] is the checked construction path and
/// [`NepvProblem::validate`] re-establishes the invariants for an instance
/// of unknown provenance.
#[derive(Debug, Clone)]
pub struct NepvProblem {
    pub a: HermitianMatrix,
    pub b: HermitianMatrix,
    pub c: HermitianMatrix,
    pub p: HermitianMatrix,
    pub q: HermitianMatrix,
}

impl NepvProblem {
    /// Checked construction: all five matrices square of one order `n >= 2`,
    /// Hermitian to [`HERMITIAN_RTOL`], with `B` and `Q` positive definite.
    pub fn new(
        a: DenseMatrix,
        b: DenseMatrix,
        c: DenseMatrix,
        p: DenseMatrix,
        q: DenseMatrix,
    ) -> Result<Self, ProblemError> {
        let n = a.rows();
        for (m, sym) in [
            (&a, MatrixSymbol::A),
            (&b, MatrixSymbol::B),
            (&c, MatrixSymbol::C),
            (&p, MatrixSymbol::P),
            (&q, MatrixSymbol::Q),
        ] {
            if !m.is_square() || m.rows() != n {
                return Err(ProblemError::DimensionMismatch(format!(
                    "{} is {}x{}, expected {}x{}",
                    sym,
                    m.rows(),
                    m.cols(),
                    n,
                    n
                )));
            }
        }
        if n < 2 {
            return Err(ProblemError::DimensionMismatch(format!(
                "order {} is below the minimum of 2",
                n
            )));
        }
        let wrap = |m: DenseMatrix, sym: MatrixSymbol| {
            HermitianMatrix::new(m, HERMITIAN_RTOL).ok_or(ProblemError::NotHermitian(sym))
        };
        let problem = NepvProblem {
            a: wrap(a, MatrixSymbol::A)?,
            b: wrap(b, MatrixSymbol::B)?,
            c: wrap(c, MatrixSymbol::C)?,
            p: wrap(p, MatrixSymbol::P)?,
            q: wrap(q, MatrixSymbol::Q)?,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn order(&self) -> usize {
        self.a.order()
    }

    /// Re-checks the invariants: consistent order of at least 2 and positive
    /// definite `B`, `Q` (Hermitian structure is carried by the field types).
    pub fn validate(&self) -> Result<(), ProblemError> {
        let n = self.a.order();
        for (m, sym) in [
            (&self.b, MatrixSymbol::B),
            (&self.c, MatrixSymbol::C),
            (&self.p, MatrixSymbol::P),
            (&self.q, MatrixSymbol::Q),
        ] {
            if m.order() != n {
                return Err(ProblemError::DimensionMismatch(format!(
                    "{} has order {}, A has order {}",
                    sym,
                    m.order(),
                    n
                )));
            }
        }
        if n < 2 {
            return Err(ProblemError::DimensionMismatch(format!(
                "order {} is below the minimum of 2",
                n
            )));
        }
        cholesky(&self.b).map_err(|_| ProblemError::NotPositiveDefinite(MatrixSymbol::B))?;
        cholesky(&self.q).map_err(|_| ProblemError::NotPositiveDefinite(MatrixSymbol::Q))?;
        Ok(())
    }

    /// `M(lambda, mu) = A - lambda B - mu C`.
    pub fn m_at(&self, lambda: Complex64, mu: Complex64) -> DenseMatrix {
        let mut m = self.a.as_dense().clone();
        let bd = self.b.as_dense().data();
        let cd = self.c.as_dense().data();
        for (k, t) in m.data_mut().iter_mut().enumerate() {
            *t -= lambda * bd[k] + mu * cd[k];
        }
        m
    }

    /// `S(mu) = P - mu Q`.
    pub fn s_at(&self, mu: Complex64) -> DenseMatrix {
        let mut s = self.p.as_dense().clone();
        let qd = self.q.as_dense().data();
        for (k, t) in s.data_mut().iter_mut().enumerate() {
            *t -= mu * qd[k];
        }
        s
    }
}

/// The pencil pair `(M(lambda, mu), S(mu))`, rebuilt on demand so it can
/// never go stale against the problem it came from.
#[derive(Debug, Clone)]
pub struct MuPencilPoint {
    pub m: DenseMatrix,
    pub s: DenseMatrix,
}

impl MuPencilPoint {
    pub fn new(problem: &NepvProblem, lambda: Complex64, mu: Complex64) -> Self {
        MuPencilPoint {
            m: problem.m_at(lambda, mu),
            s: problem.s_at(mu),
        }
    }
}

/// Where a candidate eigenpair of the linearization ends up after
/// verification against the original problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// Real `(lambda, mu)` with an eigenvector whose problem residual passes.
    Genuine,
    /// Eigenvector of the form `(Rx) (x) (x, 0)` coming from the rectangular
    /// two-parameter problem attached to the right of the linearization.
    SpuriousRightRmep,
    /// Its left-sided counterpart, which lies outside the structured
    /// subspace and carries no rank-one structure.
    SpuriousLeftRmep,
    /// Eigenvalue with a non-negligible imaginary part.
    SpuriousComplex,
    /// Real root of the polynomial system screened out by the definiteness
    /// test on the restricted `S`.
    RejectedDefiniteness,
    /// Not yet checked, or the checks were inconclusive.
    Unverified,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Genuine => "genuine",
            Classification::SpuriousRightRmep => "spurious_right_rmep",
            Classification::SpuriousLeftRmep => "spurious_left_rmep",
            Classification::SpuriousComplex => "spurious_complex",
            Classification::RejectedDefiniteness => "rejected_definiteness",
            Classification::Unverified => "unverified",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One verified (or rejected) eigenpair candidate.
#[derive(Debug, Clone)]
pub struct CandidateSolution {
    pub lambda: Complex64,
    pub mu: Complex64,
    /// Normalized so `v^H B v = 1` whenever the candidate carries a usable
    /// eigenvector; empty for candidates without one.
    pub v: Vec<Complex64>,
    pub residual_nepv: f64,
    pub residual_mu: f64,
    pub classification: Classification,
}

impl CandidateSolution {
    /// Duplicate test on the two scalars; eigenvectors are deliberately not
    /// compared since they are only determined up to phase (and up to
    /// rotation inside degenerate eigenspaces).
    pub fn same_eigenvalue(&self, other: &CandidateSolution) -> bool {
        let dl = (self.lambda - other.lambda).norm();
        let dm = (self.mu - other.mu).norm();
        dl <= DUPLICATE_RTOL * (1.0 + self.lambda.norm())
            && dm <= DUPLICATE_RTOL * (1.0 + self.mu.norm())
    }
}

/// The nonlinearity `mu(v) = v^H P v / v^H Q v`, a real number for `v != 0`
/// because both forms are real and the denominator is positive.
pub fn mu_of(problem: &NepvProblem, v: &[Complex64]) -> Result<f64, ProblemError> {
    if vnorm2(v) == 0.0 {
        return Err(ProblemError::ZeroVector);
    }
    let pv = problem.p.quadratic_form(v);
    let qv = problem.q.quadratic_form(v);
    let mu = pv / qv;
    debug_assert!(
        {
            // The structured quadratic form discards the imaginary part by
            // construction; confirm against the unstructured evaluation.
            let zp = vdot(v, &problem.p.as_dense().matvec(v));
            let zq = vdot(v, &problem.q.as_dense().matvec(v));
            let full = zp / zq;
            full.im.abs() <= 1e-12 * full.norm() + 1e-15
        },
        "quadratic form ratio has a non-negligible imaginary part"
    );
    Ok(mu)
}

/// Rescales `v` to unit `B`-norm.
pub fn b_normalize(problem: &NepvProblem, v: &[Complex64]) -> Result<Vec<Complex64>, ProblemError> {
    if vnorm2(v) == 0.0 {
        return Err(ProblemError::ZeroVector);
    }
    let bnorm = problem.b.quadratic_form(v).sqrt();
    Ok(v.iter().map(|z| z.scale(1.0 / bnorm)).collect())
}

/// Normalized residuals of the eigenpair `(lambda, v)` with `mu = mu(v)`.
///
/// The first component is `||A v - lambda B v - mu C v||` scaled by
/// `(||A||_F + |lambda| ||B||_F + |mu| ||C||_F) ||v||`; the second measures
/// `v^H S(mu) v` on the analogous scale and is zero by construction here,
/// serving as a cross-check when `mu` comes from elsewhere.
pub fn nepv_residual(
    problem: &NepvProblem,
    lambda: Complex64,
    v: &[Complex64],
) -> Result<(f64, f64), ProblemError> {
    let mu = mu_of(problem, v)?;
    residuals_with_mu(problem, lambda, Complex64::new(mu, 0.0), v)
}

/// Residuals as in [`nepv_residual`] but with an externally supplied `mu`.
pub fn residuals_with_mu(
    problem: &NepvProblem,
    lambda: Complex64,
    mu: Complex64,
    v: &[Complex64],
) -> Result<(f64, f64), ProblemError> {
    let vn = vnorm2(v);
    if vn == 0.0 {
        return Err(ProblemError::ZeroVector);
    }
    let mut r = problem.a.as_dense().matvec(v);
    let bv = problem.b.as_dense().matvec(v);
    let cv = problem.c.as_dense().matvec(v);
    for i in 0..r.len() {
        r[i] -= lambda * bv[i] + mu * cv[i];
    }
    let scale_m = problem.a.as_dense().fro_norm()
        + lambda.norm() * problem.b.as_dense().fro_norm()
        + mu.norm() * problem.c.as_dense().fro_norm();
    let residual_nepv = vnorm2(&r) / (scale_m * vn);
    let pv = problem.p.quadratic_form(v);
    let qv = problem.q.quadratic_form(v);
    let scale_s = problem.p.as_dense().fro_norm() + mu.norm() * problem.q.as_dense().fro_norm();
    let residual_mu = (Complex64::new(pv, 0.0) - mu * qv).norm() / (scale_s * vn * vn);
    Ok((residual_nepv, residual_mu))
}

/// Relative rank cutoff used when evaluating the adjugate near the
/// determinantal variety and when extracting null spaces in the filter.
const ADJ_RANK_RTOL: f64 = 1e-8;

/// Evaluates the eliminated polynomial system `(det M, trace(S adj M))`.
///
/// The adjugate is never formed by cofactors. On well-conditioned `M` it is
/// `det(M) M^{-1}`; within [`ADJ_RANK_RTOL`] of rank `n - 1` it degenerates
/// to the rank-one limit built from the smallest singular pair, and below
/// that both polynomials vanish identically.
pub fn eval_polynomials(
    problem: &NepvProblem,
    lambda: Complex64,
    mu: Complex64,
) -> (Complex64, Complex64) {
    let m = problem.m_at(lambda, mu);
    let s = problem.s_at(mu);
    let n = m.rows();
    if n == 1 {
        return (m[(0, 0)], s[(0, 0)]);
    }
    let f = jacobi_svd(&m);
    let smax = f.sigma[0];
    let deficient = f.sigma.iter().filter(|&&sv| sv <= ADJ_RANK_RTOL * smax).count();
    if smax == 0.0 || deficient >= 2 {
        return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    }
    if deficient == 0 {
        let lu = LuFactors::new(&m);
        let det = lu.det();
        let minv = lu.inverse();
        return (det, det * trace_product(&s, &minv));
    }
    // Rank n - 1: adj(M) = det(U) conj(det(V)) (prod of leading sigmas)
    // v_n u_n^H, the limit of det(M) M^{-1} as sigma_n goes to zero.
    let last = n - 1;
    let mut u_last = f.u.col(last).to_vec();
    if vnorm2(&u_last) < 0.5 {
        // An exactly zero singular value leaves no left vector behind.
        u_last = complete_unit_column(&f.u, last);
    }
    let mut u_full = f.u.clone();
    u_full.col_mut(last).copy_from_slice(&u_last);
    let phase = LuFactors::new(&u_full).det() * LuFactors::new(&f.v).det().conj();
    let det: Complex64 = phase * f.sigma.iter().product::<f64>();
    let prefix: f64 = f.sigma[..last].iter().product();
    let v_last = f.v.col(last);
    let g = phase.scale(prefix) * vdot(&u_last, &s.matvec(v_last));
    (det, g)
}

fn trace_product(s: &DenseMatrix, x: &DenseMatrix) -> Complex64 {
    let n = s.rows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += s[(i, j)] * x[(j, i)];
        }
    }
    acc
}

/// Unit vector orthogonal to every column of `u` except `skip`, chosen as
/// the best-conditioned completion over canonical starting vectors.
fn complete_unit_column(u: &DenseMatrix, skip: usize) -> Vec<Complex64> {
    let n = u.rows();
    let mut best = vec![Complex64::new(0.0, 0.0); n];
    let mut best_norm = -1.0;
    for start in 0..n {
        let mut cand = vec![Complex64::new(0.0, 0.0); n];
        cand[start] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for j in 0..u.cols() {
                if j == skip {
                    continue;
                }
                let proj = vdot(u.col(j), &cand);
                for (t, &w) in cand.iter_mut().zip(u.col(j)) {
                    *t -= proj * w;
                }
            }
        }
        let nn = vnorm2(&cand);
        if nn > best_norm {
            best_norm = nn;
            best = cand;
        }
    }
    for z in best.iter_mut() {
        *z = z.scale(1.0 / best_norm);
    }
    best
}

/// Outcome of [`definiteness_filter`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Accept,
    Reject,
}

/// Screens a real root `(lambda, mu)` of the polynomial system.
///
/// Restricting `S(mu)` to the numerical null space of `M(lambda, mu)` gives
/// a small Hermitian matrix; a genuine eigenvector forces `v^H S v = 0`, so
/// the root survives only if that restriction is indefinite or singular. A
/// one-dimensional null space always passes: its single diagonal entry being
/// numerically nonzero says nothing at this tolerance, and the residual
/// check downstream is the reliable judge there.
pub fn definiteness_filter(
    problem: &NepvProblem,
    lambda: f64,
    mu: f64,
) -> Result<FilterDecision, ProblemError> {
    let m = problem.m_at(Complex64::new(lambda, 0.0), Complex64::new(mu, 0.0));
    let f = jacobi_svd(&m);
    let null = f.null_space(ADJ_RANK_RTOL);
    let k = null.len();
    if k == 0 {
        return Err(ProblemError::EmptyNullSpace { lambda, mu });
    }
    if k == 1 {
        return Ok(FilterDecision::Accept);
    }
    let s = problem.s_at(Complex64::new(mu, 0.0));
    let n = problem.order();
    let mut vmat = DenseMatrix::zeros(n, k);
    for (j, col) in null.iter().enumerate() {
        vmat.col_mut(j).copy_from_slice(col);
    }
    let shat = HermitianMatrix::enforce(&vmat.adjoint() * &s.matmul(&vmat));
    let (eigs, _) = eig_hermitian(&shat);
    let emax = eigs.iter().fold(0.0f64, |acc, e| acc.max(e.abs()));
    let ztol = ADJ_RANK_RTOL * emax;
    let has_pos = eigs.iter().any(|&e| e > ztol);
    let has_neg = eigs.iter().any(|&e| e < -ztol);
    let has_zero = eigs.iter().any(|&e| e.abs() <= ztol);
    if (has_pos && has_neg) || has_zero {
        Ok(FilterDecision::Accept)
    } else {
        Ok(FilterDecision::Reject)
    }
}

/// Upper bound on the number of isolated solutions: the generic count `n^2`
/// capped by the mixed-volume count `n (2r + 1) - r (r + 1)` for `C` of
/// rank `r`. The two coincide at full rank.
pub fn solution_count_bound(n: usize, rank_c: usize) -> usize {
    debug_assert!(rank_c <= n);
    let r = rank_c;
    (n * n).min(n * (2 * r + 1) - r * (r + 1))
}
