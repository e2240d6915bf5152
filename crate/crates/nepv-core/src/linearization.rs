//! Compact linearization and its operator determinants.
//!
//! A problem of order `n` is coupled with an auxiliary full-column-rank
//! matrix `R` of size `n x (n - 1)` to form three Hermitian hat matrices of
//! order `2n - 1`.  The two pencils built from them share eigenvectors with
//! the original problem, and their operator determinants `Delta_0`,
//! `Delta_1`, `Delta_2` of order `2n^2 - n` turn the pair into ordinary
//! generalized eigenvalue problems: `Delta_1 z = lambda Delta_0 z` and
//! `Delta_2 z = mu Delta_0 z` with decomposable eigenvectors `z = v (x) w`.
//!
//! Nothing downstream ever forms a Delta matrix to iterate.  A [`BigVector`]
//! of length `2n^2 - n` is read as a `(2n - 1) x n` matrix `[W; V]`, on
//! which every Delta acts through two products with the hat matrices, and
//! shifted systems `(Delta_1 - sigma Delta_0) x = b` collapse to a
//! generalized Sylvester equation of the same small sizes.  The dense
//! assembly [`explicit_deltas`] exists only for cross-checks and reference
//! solves at small order.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::{
    hermitian_definite_eig, jacobi_svd, normalize_with_phase, rank_estimate, svd_top2,
    DenseMatrix, GeneralizedSylvesterPlan, HermitianMatrix, LinalgError, RANK_RTOL,
};
use crate::problem::{
    b_normalize, mu_of, residuals_with_mu, CandidateSolution, Classification, NepvProblem,
    Tolerances,
};

/// Largest problem order for which Delta matrices are assembled densely.
/// `n = 12` already means matrices of order `276`.
pub const EXPLICIT_MAX_N: usize = 12;

/// Candidate eigenvectors whose `V` block is below this fraction of the
/// whole vector are attributed to the right rectangular family.
const RIGHT_FAMILY_RTOL: f64 = 1e-8;

/// Acceptance ratio `sigma_2 / sigma_1` for the symmetrized `V` block to
/// count as rank one.
const RANK_ONE_RTOL: f64 = 1e-6;

/// Default relative tolerance for the rectangular alignment scan in
/// [`delta0_probe`].
const PROBE_RTOL: f64 = 1e-8;

/// The alignment scan solves a compressed eigenvalue problem and one SVD
/// per candidate; above this order it is skipped and the verdict is the
/// generic one.
const PROBE_SCAN_MAX_N: usize = 32;

#[derive(Debug, Error)]
pub enum LinearizationError {
    /// `R` must be `n x (n - 1)` with full column rank.
    #[error("auxiliary matrix R is rank deficient")]
    RankDeficientR,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// Dense Delta assembly is refused above [`EXPLICIT_MAX_N`].
    #[error("dense assembly capped at order {max}, got {n}")]
    TooLarge { n: usize, max: usize },
    /// The shifted pencil `Delta_1 - sigma Delta_0` is singular at this
    /// shift, or the right-hand side is inconsistent with a singular one.
    #[error("shift collides with an eigenvalue of the shifted pencil")]
    ShiftIsEigenvalue,
    #[error("zero vector passed where an eigenvector candidate was expected")]
    ZeroVector,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// How to produce the auxiliary matrix `R`.
///
/// The random variants draw from a fixed ChaCha stream, so the same seed
/// yields the same matrix on every platform and run.
#[derive(Clone, Debug)]
pub enum RSpec {
    /// Entries with independent standard normal real and imaginary parts.
    Random { seed: u64 },
    /// Identity of order `n - 1` on top, one random complex row at the
    /// bottom.  Useful when iterates should stay close to the original
    /// coordinates, e.g. for discretized differential operators.
    IdentityPlusRandomRow { seed: u64 },
    /// Caller-supplied matrix, validated for shape and rank.
    Explicit(DenseMatrix),
}

/// Deterministic generator behind every seeded draw in this crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with independent standard normal real and imaginary parts,
/// filled in column-major order from `rng`.
pub fn complex_gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

/// The hat matrices of one problem instance together with the `R` that
/// produced them.
///
/// With `M = [0, R^H X; X R, D]` for corner blocks `D = P`, `0`, `Q`, the
/// three members are
///
/// ```text
/// Ahat = [0, R^H A; A R, P]
/// Bhat = [0, R^H B; B R, 0]
/// Chat = [0, R^H C; C R, Q]
/// ```
///
/// all Hermitian of order `2n - 1`.
#[derive(Clone, Debug)]
pub struct CompactLinearization {
    pub problem: NepvProblem,
    pub r: DenseMatrix,
    pub ahat: HermitianMatrix,
    pub bhat: HermitianMatrix,
    pub chat: HermitianMatrix,
    /// Seed used to draw `R`, when it was drawn rather than supplied.
    pub rng_seed: Option<u64>,
}

impl CompactLinearization {
    /// Order `n` of the underlying problem.
    pub fn order(&self) -> usize {
        self.problem.order()
    }

    /// Order `2n - 1` of the hat matrices.
    pub fn hat_order(&self) -> usize {
        2 * self.order() - 1
    }

    /// Order `2n^2 - n` of the operator determinants.
    pub fn big_order(&self) -> usize {
        let n = self.order();
        n * (2 * n - 1)
    }

    /// Matrix-free view of one operator determinant.
    pub fn delta(&self, which: Delta) -> DeltaOperator<'_> {
        DeltaOperator { lin: self, which }
    }

    /// Coefficients `(L1, X1, L2, X2)` such that the chosen Delta acts as
    /// `Z -> L1 Z X1^T - L2 Z X2^T`, i.e. equals `X1 (x) L1 - X2 (x) L2`.
    fn coefficients(&self, which: Delta) -> (&HermitianMatrix, &HermitianMatrix, &HermitianMatrix, &HermitianMatrix) {
        let p = &self.problem;
        match which {
            Delta::Delta0 => (&self.chat, &p.b, &self.bhat, &p.c),
            Delta::Delta1 => (&self.chat, &p.a, &self.ahat, &p.c),
            Delta::Delta2 => (&self.ahat, &p.b, &self.bhat, &p.a),
        }
    }
}

fn hat_matrix(x: &HermitianMatrix, corner: Option<&HermitianMatrix>, r: &DenseMatrix) -> HermitianMatrix {
    let n = x.order();
    let xr = x.as_dense() * r;
    let mut hat = DenseMatrix::zeros(2 * n - 1, 2 * n - 1);
    // The top-right block is the exact elementwise adjoint of the stored
    // bottom-left one, so the assembled matrix is Hermitian to the bit.
    hat.set_block(0, n - 1, &xr.adjoint());
    hat.set_block(n - 1, 0, &xr);
    if let Some(d) = corner {
        hat.set_block(n - 1, n - 1, d.as_dense());
    }
    HermitianMatrix::from_exact(hat)
}

/// Builds the hat matrices for `problem` with an `R` described by `r_spec`.
pub fn build_linearization(
    problem: &NepvProblem,
    r_spec: &RSpec,
) -> Result<CompactLinearization, LinearizationError> {
    let n = problem.order();
    let (r, rng_seed) = match r_spec {
        RSpec::Random { seed } => (complex_gaussian(n, n - 1, &mut seeded_rng(*seed)), Some(*seed)),
        RSpec::IdentityPlusRandomRow { seed } => {
            let mut r = DenseMatrix::zeros(n, n - 1);
            r.set_block(0, 0, &DenseMatrix::identity(n - 1));
            r.set_block(n - 1, 0, &complex_gaussian(1, n - 1, &mut seeded_rng(*seed)));
            (r, Some(*seed))
        }
        RSpec::Explicit(m) => {
            if m.rows() != n || m.cols() != n - 1 {
                return Err(LinearizationError::DimensionMismatch(format!(
                    "R must be {} x {}, got {} x {}",
                    n,
                    n - 1,
                    m.rows(),
                    m.cols()
                )));
            }
            (m.clone(), None)
        }
    };
    if rank_estimate(&r, RANK_RTOL) != n - 1 {
        return Err(LinearizationError::RankDeficientR);
    }
    Ok(CompactLinearization {
        ahat: hat_matrix(&problem.a, Some(&problem.p), &r),
        bhat: hat_matrix(&problem.b, None, &r),
        chat: hat_matrix(&problem.c, Some(&problem.q), &r),
        problem: problem.clone(),
        r,
        rng_seed,
    })
}

/// Vector of length `2n^2 - n`, stored as the column-major stacking of a
/// `(2n - 1) x n` matrix `[W; V]` with `W` of size `(n - 1) x n` and `V`
/// of size `n x n`.
///
/// Eigenvectors of the determinant pencils that correspond to solutions of
/// the original problem have `V` complex symmetric and rank one; the
/// structured subspace tests below are phrased in terms of these blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct BigVector {
    n: usize,
    data: Vec<Complex64>,
}

impl BigVector {
    pub fn new(n: usize, data: Vec<Complex64>) -> Result<Self, LinearizationError> {
        let expect = n * (2 * n - 1);
        if data.len() != expect {
            return Err(LinearizationError::DimensionMismatch(format!(
                "vector of length {} for problem order {n}, expected {expect}",
                data.len()
            )));
        }
        Ok(BigVector { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        BigVector { n, data: vec![Complex64::new(0.0, 0.0); n * (2 * n - 1)] }
    }

    /// Wraps a `(2n - 1) x n` matrix; its column-major data is the vector.
    pub fn from_matrix(zmat: &DenseMatrix) -> Self {
        let n = zmat.cols();
        assert_eq!(zmat.rows(), 2 * n - 1, "matrix is not (2n - 1) x n");
        BigVector { n, data: zmat.data().to_vec() }
    }

    /// Stacks `W` of size `(n - 1) x n` over `V` of size `n x n`.
    pub fn from_blocks(w: &DenseMatrix, v: &DenseMatrix) -> Self {
        let n = v.rows();
        assert_eq!(v.cols(), n);
        assert_eq!((w.rows(), w.cols()), (n - 1, n));
        let mut zmat = DenseMatrix::zeros(2 * n - 1, n);
        zmat.set_block(0, 0, w);
        zmat.set_block(n - 1, 0, v);
        Self::from_matrix(&zmat)
    }

    /// Order `n` of the problem this vector belongs to.
    pub fn problem_order(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::vnorm2(&self.data)
    }

    /// The `(2n - 1) x n` matrix view `[W; V]`.
    pub fn reshape(&self) -> DenseMatrix {
        DenseMatrix::from_col_major(2 * self.n - 1, self.n, &self.data)
    }

    /// Top block `W`, size `(n - 1) x n`.
    pub fn w_block(&self) -> DenseMatrix {
        self.reshape().block(0, 0, self.n - 1, self.n)
    }

    /// Bottom block `V`, size `n x n`.
    pub fn v_block(&self) -> DenseMatrix {
        self.reshape().block(self.n - 1, 0, self.n, self.n)
    }

    /// Whether `V` is complex symmetric to `tol` times the norm of the
    /// whole vector.  Scaling by `|z|` rather than `|V|` keeps vectors
    /// with a vanishing `V` block inside the subspace, where they belong.
    pub fn in_z(&self, tol: f64) -> bool {
        let v = self.v_block();
        let asym = (&v - &v.transpose()).fro_norm();
        asym <= tol * self.norm()
    }

    /// Whether the vector lies in the smaller invariant subspace: `V`
    /// negligible against the whole vector and `R W` complex symmetric.
    pub fn in_w(&self, r: &DenseMatrix, tol: f64) -> bool {
        if self.v_block().fro_norm() > tol * self.norm() {
            return false;
        }
        let rw = r * &self.w_block();
        let asym = (&rw - &rw.transpose()).fro_norm();
        asym <= tol * rw.fro_norm()
    }

    /// Orthogonal projection onto the structured subspace: `W` is kept,
    /// `V` is replaced by its symmetric part.  Vectors already in the
    /// subspace come back bit for bit.
    pub fn project_onto_z(&self) -> BigVector {
        let v = self.v_block();
        let sym = DenseMatrix::from_fn(self.n, self.n, |i, j| (v[(i, j)] + v[(j, i)]) * 0.5);
        BigVector::from_blocks(&self.w_block(), &sym)
    }
}

/// Selector for one of the three operator determinants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Delta {
    Delta0,
    Delta1,
    Delta2,
}

/// Matrix-free application of one operator determinant.
///
/// Each apply is two hat-sized products and two problem-sized products,
/// `O(n^3)` instead of the `O(n^4)` of a dense multiply by the assembled
/// matrix.
#[derive(Clone, Copy)]
pub struct DeltaOperator<'a> {
    lin: &'a CompactLinearization,
    which: Delta,
}

impl DeltaOperator<'_> {
    pub fn which(&self) -> Delta {
        self.which
    }

    pub fn apply(&self, z: &BigVector) -> Result<BigVector, LinearizationError> {
        if z.problem_order() != self.lin.order() {
            return Err(LinearizationError::DimensionMismatch(format!(
                "vector for order {}, operator for order {}",
                z.problem_order(),
                self.lin.order()
            )));
        }
        let (l1, x1, l2, x2) = self.lin.coefficients(self.which);
        let zmat = z.reshape();
        let t1 = &(l1.as_dense() * &zmat) * &x1.as_dense().transpose();
        let t2 = &(l2.as_dense() * &zmat) * &x2.as_dense().transpose();
        Ok(BigVector::from_matrix(&(&t1 - &t2)))
    }
}

/// Assembles `Delta_0`, `Delta_1`, `Delta_2` densely.  Refused above
/// [`EXPLICIT_MAX_N`]; iteration never needs these.
pub fn explicit_deltas(
    lin: &CompactLinearization,
) -> Result<(HermitianMatrix, HermitianMatrix, HermitianMatrix), LinearizationError> {
    let n = lin.order();
    if n > EXPLICIT_MAX_N {
        return Err(LinearizationError::TooLarge { n, max: EXPLICIT_MAX_N });
    }
    Ok((
        kron_difference(lin, Delta::Delta0),
        kron_difference(lin, Delta::Delta1),
        kron_difference(lin, Delta::Delta2),
    ))
}

fn kron_difference(lin: &CompactLinearization, which: Delta) -> HermitianMatrix {
    let (l1, x1, l2, x2) = lin.coefficients(which);
    let (l1, x1, l2, x2) = (l1.as_dense(), x1.as_dense(), l2.as_dense(), x2.as_dense());
    let m = lin.hat_order();
    let d = DenseMatrix::from_fn(lin.big_order(), lin.big_order(), |row, col| {
        let (i, k) = (row / m, row % m);
        let (j, l) = (col / m, col % m);
        x1[(i, j)] * l1[(k, l)] - x2[(i, j)] * l2[(k, l)]
    });
    // Kronecker products of Hermitian factors inherit conjugate symmetry
    // exactly in floating point, so no symmetrization is needed.
    HermitianMatrix::from_exact(d)
}

/// Factored form of `Delta_1 - sigma Delta_0`, reusable across right-hand
/// sides.  Building it costs two dense generalized Schur decompositions;
/// each solve is then a Sylvester back-substitution.
pub struct ShiftedSolver {
    plan: GeneralizedSylvesterPlan,
    sigma: Complex64,
    n: usize,
}

impl ShiftedSolver {
    pub fn new(lin: &CompactLinearization, sigma: Complex64) -> Result<Self, LinearizationError> {
        let n = lin.order();
        let a = lin.problem.a.as_dense();
        let b = lin.problem.b.as_dense();
        let gamma = DenseMatrix::from_fn(n, n, |i, j| a[(i, j)] - sigma * b[(i, j)]);
        let m = lin.hat_order();
        let gamma_hat =
            DenseMatrix::from_fn(m, m, |i, j| lin.ahat[(i, j)] - sigma * lin.bhat[(i, j)]);
        // (Delta_1 - sigma Delta_0) vec(X) = vec(Chat X Gamma^T - Gammahat X C^T)
        // with Gamma = A - sigma B and Gammahat = Ahat - sigma Bhat.
        let plan = GeneralizedSylvesterPlan::new(
            lin.chat.as_dense(),
            &gamma,
            &gamma_hat,
            lin.problem.c.as_dense(),
        )?;
        Ok(ShiftedSolver { plan, sigma, n })
    }

    pub fn sigma(&self) -> Complex64 {
        self.sigma
    }

    /// Solves `(Delta_1 - sigma Delta_0) x = rhs`.
    ///
    /// When the shifted pencil is singular but the right-hand side is
    /// consistent, the minimum-norm particular solution is returned; an
    /// inconsistent right-hand side reports [`LinearizationError::ShiftIsEigenvalue`].
    pub fn solve(&self, rhs: &BigVector) -> Result<BigVector, LinearizationError> {
        if rhs.problem_order() != self.n {
            return Err(LinearizationError::DimensionMismatch(format!(
                "right-hand side for order {}, solver for order {}",
                rhs.problem_order(),
                self.n
            )));
        }
        match self.plan.solve(&rhs.reshape()) {
            Ok(sol) => Ok(BigVector::from_matrix(&sol.x)),
            Err(LinalgError::SingularOperator) => Err(LinearizationError::ShiftIsEigenvalue),
            Err(e) => Err(e.into()),
        }
    }
}

/// One-off shifted solve.  Iterating callers should hold a
/// [`ShiftedSolver`] instead of paying for the Schur decompositions on
/// every step.
pub fn shifted_solve(
    lin: &CompactLinearization,
    sigma: Complex64,
    rhs: &BigVector,
) -> Result<BigVector, LinearizationError> {
    ShiftedSolver::new(lin, sigma)?.solve(rhs)
}

/// Outcome of the `Delta_0` regularity probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Delta0Probe {
    /// No structural reason for singularity was found.
    Regular,
    /// `rank(C) < n - 1`; the whole pencil is singular and only the
    /// unprojected iteration with deflation makes sense.
    SingularLowRankC { rank: usize },
    /// Some eigenvector of `(C, B)` lies in the column space of `R`, which
    /// makes `Delta_0` singular for this particular `R`.  Redrawing `R`
    /// removes the problem.
    SingularRAlignment,
}

/// Checks the two structural singularity mechanisms of `Delta_0`.
///
/// `Delta_0` is singular exactly when `C R x = theta B R x` has a solution;
/// any such `theta` is real and is an eigenvalue of `(C, B)` whose
/// eigenvector lies in the column space of `R`.  The probe first tests
/// `rank(C)`, which decides singularity regardless of `R`, then scans the
/// real candidate values `theta` from the compressed pencil
/// `(R^H C R, R^H B R)` against the rectangular one.  The scan is skipped
/// above a fixed order cap, so a [`Delta0Probe::Regular`] verdict is
/// generic rather than certified.
pub fn delta0_probe(lin: &CompactLinearization) -> Delta0Probe {
    delta0_probe_with_tol(lin, PROBE_RTOL)
}

pub fn delta0_probe_with_tol(lin: &CompactLinearization, tol: f64) -> Delta0Probe {
    let n = lin.order();
    let c = lin.problem.c.as_dense();
    let rank_c = rank_estimate(c, RANK_RTOL);
    if rank_c < n - 1 {
        return Delta0Probe::SingularLowRankC { rank: rank_c };
    }
    if n > PROBE_SCAN_MAX_N {
        return Delta0Probe::Regular;
    }
    let cr = c * &lin.r;
    let br = lin.problem.b.as_dense() * &lin.r;
    let compressed_c = HermitianMatrix::enforce(&lin.r.adjoint() * &cr);
    let compressed_b = HermitianMatrix::enforce(&lin.r.adjoint() * &br);
    let Ok((candidates, _)) = hermitian_definite_eig(&compressed_c, &compressed_b) else {
        // R passed the rank test, so R^H B R is positive definite up to
        // conditioning; if it fails numerically the scan has no basis.
        return Delta0Probe::Regular;
    };
    let scale_c = cr.fro_norm();
    let scale_b = br.fro_norm();
    for theta in candidates {
        let shifted =
            DenseMatrix::from_fn(n, n - 1, |i, j| cr[(i, j)] - Complex64::from(theta) * br[(i, j)]);
        let svd = jacobi_svd(&shifted);
        let smin = svd.sigma.last().copied().unwrap_or(0.0);
        if smin <= tol * (scale_c + theta.abs() * scale_b) {
            return Delta0Probe::SingularRAlignment;
        }
    }
    Delta0Probe::Regular
}

/// Classifies a converged eigenvector of the determinant pencil.
///
/// The decision follows the structure of the eigenvector itself: a
/// negligible `V` block can only come from the right rectangular family, a
/// genuinely complex `lambda` cannot solve the original problem, and
/// otherwise `V` must be rank one with its dominant left singular vector
/// solving the problem at `mu` recomputed from the vector.  Anything that
/// fails those checks stays [`Classification::Unverified`]; callers with
/// more context (such as the dense reference solve) may refine that label.
///
/// For genuine solutions the returned eigenvector is `B`-normalized with
/// its largest entry rotated to the positive real axis.  Spurious and
/// unverified candidates without a usable eigenvector report an empty `v`,
/// `mu = 0` and infinite residuals.
pub fn classify_eigvec(
    lin: &CompactLinearization,
    lambda: Complex64,
    z: &BigVector,
    tols: &Tolerances,
) -> Result<CandidateSolution, LinearizationError> {
    if z.problem_order() != lin.order() {
        return Err(LinearizationError::DimensionMismatch(format!(
            "vector for order {}, problem of order {}",
            z.problem_order(),
            lin.order()
        )));
    }
    let znorm = z.norm();
    if znorm == 0.0 {
        return Err(LinearizationError::ZeroVector);
    }
    let no_vector = |classification: Classification| CandidateSolution {
        lambda,
        mu: Complex64::new(0.0, 0.0),
        v: Vec::new(),
        residual_nepv: f64::INFINITY,
        residual_mu: f64::INFINITY,
        classification,
    };
    let v_block = z.v_block();
    if v_block.fro_norm() <= RIGHT_FAMILY_RTOL * znorm {
        return Ok(no_vector(Classification::SpuriousRightRmep));
    }
    if lambda.im.abs() > tols.tol_real * (1.0 + lambda.re.abs()) {
        return Ok(no_vector(Classification::SpuriousComplex));
    }
    let sym = DenseMatrix::from_fn(lin.order(), lin.order(), |i, j| {
        (v_block[(i, j)] + v_block[(j, i)]) * 0.5
    });
    let (s1, s2, mut v) = svd_top2(&sym);
    if s1 == 0.0 {
        return Ok(no_vector(Classification::Unverified));
    }
    normalize_with_phase(&mut v);
    let mu = mu_of(&lin.problem, &v).expect("unit vector");
    let mu = Complex64::new(mu, 0.0);
    let (residual_nepv, residual_mu) =
        residuals_with_mu(&lin.problem, lambda, mu, &v).expect("unit vector");
    let classification = if s2 <= RANK_ONE_RTOL * s1 && residual_nepv <= tols.tol_res {
        Classification::Genuine
    } else {
        Classification::Unverified
    };
    let v = b_normalize(&lin.problem, &v).expect("unit vector");
    Ok(CandidateSolution { lambda, mu, v, residual_nepv, residual_mu, classification })
}

/// Compressed pencil value `A(sigma) = L^T (R^H (x) R^H) ((A - sigma B) (x) C - C (x) (A - sigma B)) T`
/// of order `n(n - 1)/2`, whose regularity governs whether shifted solves
/// stay on the structured subspace.
///
/// `L` selects coordinates `e_j (x) e_i` with `i <= j` and `T` spans the
/// antisymmetric vectors `e_j (x) e_i - e_i (x) e_j` with `i < j`; both
/// collapse to index arithmetic on the two compressed factors, so the
/// `n^2`-sized Kronecker products are never formed.
pub fn lemma41_pencil(
    lin: &CompactLinearization,
    sigma: Complex64,
) -> Result<DenseMatrix, LinearizationError> {
    let n = lin.order();
    if n > EXPLICIT_MAX_N {
        return Err(LinearizationError::TooLarge { n, max: EXPLICIT_MAX_N });
    }
    let a = lin.problem.a.as_dense();
    let b = lin.problem.b.as_dense();
    let rh = lin.r.adjoint();
    let g = &rh * &DenseMatrix::from_fn(n, n, |i, j| a[(i, j)] - sigma * b[(i, j)]);
    let h = &rh * lin.problem.c.as_dense();
    let rows: Vec<(usize, usize)> =
        (0..n - 1).flat_map(|j| (0..=j).map(move |i| (i, j))).collect();
    let cols: Vec<(usize, usize)> = (0..n).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
    let ell = n * (n - 1) / 2;
    debug_assert_eq!(rows.len(), ell);
    debug_assert_eq!(cols.len(), ell);
    Ok(DenseMatrix::from_fn(ell, ell, |p, q| {
        let (ip, jp) = rows[p];
        let (iq, jq) = cols[q];
        (g[(jp, jq)] * h[(ip, iq)] - h[(jp, jq)] * g[(ip, iq)])
            - (g[(jp, iq)] * h[(ip, jq)] - h[(jp, iq)] * g[(ip, jq)])
    }))
}

/// Completes a solution `(lambda, mu, v)` of the original problem to an
/// eigenvector `w = [w1; alpha v]` of the hat pencil, where `[w1; alpha]`
/// spans the null space of the `n x n` matrix `[M R, S v]` at that
/// solution.  The output is meaningful only if the input actually solves
/// the problem; callers verify residuals on their side.
pub fn hat_eigenvector(
    lin: &CompactLinearization,
    lambda: Complex64,
    mu: Complex64,
    v: &[Complex64],
) -> Vec<Complex64> {
    let n = lin.order();
    assert_eq!(v.len(), n);
    let m = lin.problem.m_at(lambda, mu);
    let s = lin.problem.s_at(mu);
    let mr = &m * &lin.r;
    let sv = s.matvec(v);
    let mut bordered = DenseMatrix::zeros(n, n);
    bordered.set_block(0, 0, &mr);
    for (i, value) in sv.iter().enumerate() {
        bordered[(i, n - 1)] = *value;
    }
    let svd = jacobi_svd(&bordered);
    let null = svd.v.col(n - 1);
    let alpha = null[n - 1];
    let mut w = Vec::with_capacity(2 * n - 1);
    w.extend_from_slice(&null[..n - 1]);
    w.extend(v.iter().map(|vi| alpha * vi));
    w
}

/// Decomposable eigenvector `z = v (x) w` of the determinant pencils for a
/// solution `(lambda, mu, v)`, as the matrix `w v^T` in [`BigVector`] form.
pub fn embed_solution(
    lin: &CompactLinearization,
    lambda: Complex64,
    mu: Complex64,
    v: &[Complex64],
) -> BigVector {
    let w = hat_eigenvector(lin, lambda, mu, v);
    let outer = DenseMatrix::from_fn(2 * lin.order() - 1, lin.order(), |k, i| w[k] * v[i]);
    BigVector::from_matrix(&outer)
}
