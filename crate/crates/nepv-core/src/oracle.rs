//! Independent ground truth for the fast solvers.
//!
//! Two reference paths that share nothing with the Arnoldi machinery beyond
//! the problem definition:
//!
//! * [`dense_reference_solve`] forms the operator determinants explicitly at
//!   tiny `n` and runs the dense QZ solver on `(Delta_1, Delta_0)`, giving
//!   the complete eigenpair list with classifications. Singular pencils are
//!   handled by deflating the common null space of `Delta_0` and `Delta_1`
//!   before the dense solve.
//! * [`scf_multistart`] is the classical fixed-point baseline: substitute
//!   the current eigenvector into `mu(v)`, solve the resulting linear
//!   definite pencil, repeat. It finds genuine solutions only, and only
//!   those its basins of attraction reach, which is exactly what makes it an
//!   independent witness.
//!
//! [`cross_validate`] reconciles any two candidate lists with the duplicate
//! metric used elsewhere.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{
    dense_gep_eig, dense_gep_eig_unchecked, hermitian_definite_eig, jacobi_svd, vaxpy, vdot,
    vnorm2, vscale, DenseMatrix, HermitianMatrix, LinalgError,
};
use crate::linearization::{
    classify_eigvec, complex_gaussian, delta0_probe, explicit_deltas, seeded_rng, BigVector,
    CompactLinearization, Delta, Delta0Probe, LinearizationError,
};
use crate::problem::{
    b_normalize, mu_of, nepv_residual, CandidateSolution, Classification, NepvProblem,
    ProblemError, Tolerances,
};

/// The dense reference needs the explicit pencil and a full QZ sweep; past
/// this order it stops being a practical oracle.
const DENSE_MAX_N: usize = 8;

/// Relative residual every reference eigenpair must reproduce through the
/// matrix-free apply before it is accepted.
const ENTRY_RESIDUAL_RTOL: f64 = 1e-8;

/// Structured-subspace membership threshold used to tell left-family
/// spurious vectors (asymmetric trailing block) from unverified ones.
const LEFT_FAMILY_ZTOL: f64 = 1e-6;

/// Relative singular-value cutoff for the common null space of the stacked
/// pair when deflating a singular pencil.
const COMMON_NULL_RTOL: f64 = 1e-10;

/// SCF keeps a converged vector only when its problem residual is at this
/// level; anything worse is a stalled iteration, not a solution.
const SCF_KEEP_RESIDUAL: f64 = 1e-10;

/// Floor for the automatic damping reduction.
const MIN_DAMPING: f64 = 0.125;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("dense reference is limited to n <= {max}, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error(transparent)]
    Linearization(#[from] LinearizationError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// One eigenpair of the dense reference.
#[derive(Clone, Debug)]
pub struct ReferenceEntry {
    pub lambda: Complex64,
    /// Rayleigh quotient `z^H Delta_2 z / z^H Delta_0 z`. Falls back to the
    /// classifier's value when the denominator vanishes, which it does
    /// structurally for right-family vectors.
    pub mu: Complex64,
    pub z: BigVector,
    /// Classifier output: extracted eigenvector, residuals, classification.
    pub candidate: CandidateSolution,
}

impl ReferenceEntry {
    pub fn classification(&self) -> Classification {
        self.candidate.classification
    }
}

/// Full spectrum of the explicit pencil, sorted by eigenvalue.
#[derive(Clone, Debug)]
pub struct ReferenceSpectrum {
    pub entries: Vec<ReferenceEntry>,
    /// Dimension of the deflated common null space; zero for a regular
    /// pencil.
    pub deflated: usize,
}

impl ReferenceSpectrum {
    pub fn genuine(&self) -> impl Iterator<Item = &ReferenceEntry> {
        self.entries
            .iter()
            .filter(|e| e.classification() == Classification::Genuine)
    }

    pub fn count_with(&self, label: Classification) -> usize {
        self.entries
            .iter()
            .filter(|e| e.classification() == label)
            .count()
    }

    /// Clones the genuine entries into plain candidates, the shape
    /// [`cross_validate`] consumes.
    pub fn genuine_candidates(&self) -> Vec<CandidateSolution> {
        self.genuine().map(|e| e.candidate.clone()).collect()
    }
}

/// Complete dense eigensolve of the explicit pencil `(Delta_1, Delta_0)`.
///
/// Every returned pair is re-verified against the matrix-free operator
/// apply, which checks the QZ output and the operator implementation against
/// each other. A singular pencil (low-rank `C`) is deflated first: the
/// common null space of both operators is projected out and the compressed
/// pencil solved in its place, keeping only lifted eigenvectors that satisfy
/// the full-size pencil.
pub fn dense_reference_solve(lin: &CompactLinearization) -> Result<ReferenceSpectrum, OracleError> {
    let n = lin.order();
    if n > DENSE_MAX_N {
        return Err(OracleError::TooLarge { n, max: DENSE_MAX_N });
    }
    let (d0, d1, d2) = explicit_deltas(lin)?;
    // A structurally singular pencil must be deflated before QZ: with
    // `det(Delta_1 - lambda Delta_0)` identically zero, every lambda admits
    // a zero-residual direction, so a small QZ residual certifies nothing.
    // The probe catches this even when QZ itself would not complain.
    if let Delta0Probe::SingularLowRankC { .. } = delta0_probe(lin) {
        return dense_reference_singular(lin, &d0, &d1, &d2);
    }
    match dense_gep_eig(d1.as_dense(), d0.as_dense()) {
        Ok(pairs) => {
            let eigpairs: Vec<(Complex64, BigVector)> = pairs
                .into_iter()
                .filter_map(|p| {
                    let lambda = p.lambda()?;
                    Some((lambda, BigVector::new(n, p.v).expect("dimensions match")))
                })
                .collect();
            let entries = assemble_entries(lin, &d0, &d1, &d2, eigpairs)?;
            Ok(ReferenceSpectrum {
                entries,
                deflated: 0,
            })
        }
        Err(LinalgError::SingularPencil { .. }) => dense_reference_singular(lin, &d0, &d1, &d2),
        Err(e) => Err(e.into()),
    }
}

fn dense_reference_singular(
    lin: &CompactLinearization,
    d0: &HermitianMatrix,
    d1: &HermitianMatrix,
    d2: &HermitianMatrix,
) -> Result<ReferenceSpectrum, OracleError> {
    let big = lin.big_order();

    // The common null space of both operators is the null space of the
    // stacked pair; its orthogonal complement carries the normal rank.
    let mut stacked = DenseMatrix::zeros(2 * big, big);
    stacked.set_block(0, 0, d0.as_dense());
    stacked.set_block(big, 0, d1.as_dense());
    let svd = jacobi_svd(&stacked);
    let smax = svd.sigma[0].max(f64::MIN_POSITIVE);
    let keep: Vec<usize> = (0..big)
        .filter(|&j| svd.sigma[j] > COMMON_NULL_RTOL * smax)
        .collect();
    let deflated = big - keep.len();
    let q = DenseMatrix::from_fn(big, keep.len(), |i, j| svd.v[(i, keep[j])]);

    let qd0q = &q.adjoint() * &(d0.as_dense() * &q);
    let qd1q = &q.adjoint() * &(d1.as_dense() * &q);
    let pairs = match dense_gep_eig(&qd1q, &qd0q) {
        Ok(p) => p,
        // Leftover singular structure beyond the common null space; extract
        // the normal-rank eigenvalues and let the residual filter decide.
        Err(LinalgError::SingularPencil { .. }) => dense_gep_eig_unchecked(&qd1q, &qd0q)?,
        Err(e) => return Err(e.into()),
    };

    let bound0 = d0.as_dense().fro_norm();
    let bound1 = d1.as_dense().fro_norm();
    let mut eigpairs = Vec::new();
    for p in pairs {
        let Some(lambda) = p.lambda() else { continue };
        // Compression can manufacture eigenpairs that exist only in the
        // projected space; keep a lift only when the full pencil accepts it.
        let z = BigVector::new(lin.order(), q.matvec(&p.v)).expect("dimensions match");
        if pencil_residual(lin, lambda, &z, bound0, bound1)? <= ENTRY_RESIDUAL_RTOL {
            eigpairs.push((lambda, z));
        }
    }
    let entries = assemble_entries(lin, d0, d1, d2, eigpairs)?;
    Ok(ReferenceSpectrum { entries, deflated })
}

/// `||(Delta_1 - lambda Delta_0) z||` through the matrix-free applies,
/// relative to the pencil and vector scale.
fn pencil_residual(
    lin: &CompactLinearization,
    lambda: Complex64,
    z: &BigVector,
    bound0: f64,
    bound1: f64,
) -> Result<f64, OracleError> {
    let r1 = lin.delta(Delta::Delta1).apply(z)?;
    let r0 = lin.delta(Delta::Delta0).apply(z)?;
    let mut r = r1.into_vec();
    vaxpy(-lambda, r0.as_slice(), &mut r);
    Ok(vnorm2(&r) / ((bound1 + lambda.norm() * bound0) * z.norm()))
}

fn assemble_entries(
    lin: &CompactLinearization,
    d0: &HermitianMatrix,
    d1: &HermitianMatrix,
    d2: &HermitianMatrix,
    eigpairs: Vec<(Complex64, BigVector)>,
) -> Result<Vec<ReferenceEntry>, OracleError> {
    let tols = Tolerances::default();
    let bound0 = d0.as_dense().fro_norm();
    let bound1 = d1.as_dense().fro_norm();

    let mut entries = Vec::with_capacity(eigpairs.len());
    for (lambda, z) in eigpairs {
        let res = pencil_residual(lin, lambda, &z, bound0, bound1)?;
        assert!(
            res <= ENTRY_RESIDUAL_RTOL,
            "reference eigenpair failed re-verification (residual {res:.3e})"
        );

        let mut candidate = classify_eigvec(lin, lambda, &z, &tols)?;
        if candidate.classification == Classification::Unverified && !z.in_z(LEFT_FAMILY_ZTOL) {
            candidate.classification = Classification::SpuriousLeftRmep;
        }

        let d0z = d0.as_dense().matvec(z.as_slice());
        let d2z = d2.as_dense().matvec(z.as_slice());
        let den = vdot(z.as_slice(), &d0z);
        let znsq = z.norm() * z.norm();
        let mu = if den.norm() > 1e-10 * bound0 * znsq {
            vdot(z.as_slice(), &d2z) / den
        } else {
            candidate.mu
        };
        if candidate.classification == Classification::Genuine {
            let err = (mu - candidate.mu).norm();
            assert!(
                err <= 1e-6 * (1.0 + candidate.mu.norm()),
                "Rayleigh mu disagrees with mu(v) on a genuine pair ({err:.3e})"
            );
        }

        entries.push(ReferenceEntry {
            lambda,
            mu,
            z,
            candidate,
        });
    }
    entries.sort_by(|a, b| {
        (a.lambda.re, a.lambda.im)
            .partial_cmp(&(b.lambda.re, b.lambda.im))
            .expect("eigenvalues are finite")
    });
    Ok(entries)
}

/// Which eigenpair of the inner linear pencil an SCF run follows, indexing
/// eigenvalues in ascending order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchPolicy {
    /// Sweep all `n` branches per starting vector.
    All,
    Index(usize),
}

#[derive(Clone, Copy, Debug)]
pub struct ScfConfig {
    pub max_outer: usize,
    /// Mixing weight of the new eigenvector, in `(0, 1]`. Halved
    /// automatically (down to 0.125) when the iterate starts oscillating.
    pub damping: f64,
    pub branch: BranchPolicy,
    /// Fixed-point tolerance on `||v_{k+1} - v_k||`.
    pub tol_fix: f64,
}

impl Default for ScfConfig {
    fn default() -> Self {
        ScfConfig {
            max_outer: 300,
            damping: 1.0,
            branch: BranchPolicy::All,
            tol_fix: 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScfResult {
    /// Deduplicated converged solutions, sorted by eigenvalue.
    pub solutions: Vec<CandidateSolution>,
    /// Runs launched (trials times branches).
    pub attempts: usize,
    /// Runs that reached the fixed-point tolerance, before the residual
    /// filter.
    pub converged: usize,
}

/// Multi-start self-consistent field iteration.
///
/// For each seeded random start and each branch, alternate between
/// evaluating `mu(v)` and solving the frozen linear pencil
/// `(A - mu C, B)`, mixing the branch eigenvector into the iterate with the
/// configured damping. Non-convergent runs are dropped; converged vectors
/// must reproduce the problem residual at 1e-10 to count as solutions.
pub fn scf_multistart(problem: &NepvProblem, trials: usize, cfg: &ScfConfig) -> ScfResult {
    assert!(trials >= 1, "at least one trial");
    assert!(
        cfg.damping > 0.0 && cfg.damping <= 1.0,
        "damping must lie in (0, 1]"
    );
    assert!(cfg.tol_fix > 0.0, "fixed-point tolerance must be positive");

    let n = problem.order();
    let branches: Vec<usize> = match cfg.branch {
        BranchPolicy::All => (0..n).collect(),
        BranchPolicy::Index(j) => {
            assert!(j < n, "branch index out of range");
            vec![j]
        }
    };

    let mut attempts = 0usize;
    let mut converged = 0usize;
    let mut found: Vec<CandidateSolution> = Vec::new();
    for trial in 0..trials {
        let mut rng = seeded_rng(trial as u64);
        let v0raw = complex_gaussian(n, 1, &mut rng).data().to_vec();
        let Ok(v0) = b_normalize(problem, &v0raw) else {
            continue;
        };
        for &branch in &branches {
            attempts += 1;
            let Some((lambda, v)) = scf_run(problem, &v0, branch, cfg) else {
                continue;
            };
            converged += 1;
            let lambda = Complex64::from(lambda);
            let Ok((residual_nepv, residual_mu)) = nepv_residual(problem, lambda, &v) else {
                continue;
            };
            if residual_nepv > SCF_KEEP_RESIDUAL {
                continue;
            }
            let mu = mu_of(problem, &v).expect("converged iterate is nonzero");
            found.push(CandidateSolution {
                lambda,
                mu: Complex64::from(mu),
                v,
                residual_nepv,
                residual_mu,
                classification: Classification::Genuine,
            });
        }
    }

    found.sort_by(|a, b| a.residual_nepv.total_cmp(&b.residual_nepv));
    let mut solutions: Vec<CandidateSolution> = Vec::new();
    for cand in found {
        if !solutions.iter().any(|kept| kept.same_eigenvalue(&cand)) {
            solutions.push(cand);
        }
    }
    solutions.sort_by(|a, b| {
        (a.lambda.re, a.lambda.im)
            .partial_cmp(&(b.lambda.re, b.lambda.im))
            .expect("eigenvalues are finite")
    });
    ScfResult {
        solutions,
        attempts,
        converged,
    }
}

/// One SCF trajectory; returns the branch eigenvalue and the fixed-point
/// vector on convergence.
fn scf_run(
    problem: &NepvProblem,
    v0: &[Complex64],
    branch: usize,
    cfg: &ScfConfig,
) -> Option<(f64, Vec<Complex64>)> {
    let mut v = v0.to_vec();
    let mut damping = cfg.damping;
    let mut prev: Option<(Vec<Complex64>, f64)> = None;
    for _ in 0..cfg.max_outer {
        let mu = mu_of(problem, &v).ok()?;
        let frozen = HermitianMatrix::enforce(
            problem.a.as_dense() - &problem.c.as_dense().scale(Complex64::from(mu)),
        );
        let (eigs, vecs) = hermitian_definite_eig(&frozen, &problem.b).ok()?;
        let lambda = eigs[branch];

        let mut vnew = vecs.col(branch).to_vec();
        // Eigenvectors come back with an arbitrary phase; align to the
        // current iterate so the damped mix and the step size make sense.
        let d = vdot(&v, &vnew);
        if d.norm() > 0.0 {
            vscale(d.conj() / d.norm(), &mut vnew);
        }

        let mixed: Vec<Complex64> = v
            .iter()
            .zip(&vnew)
            .map(|(&a, &b)| a * (1.0 - damping) + b * damping)
            .collect();
        let vnext = b_normalize(problem, &mixed).ok()?;

        let step = dist(&vnext, &v);
        if step <= cfg.tol_fix {
            return Some((lambda, vnext));
        }
        // Oscillation: the iterate lands back near where it was two steps
        // ago while still moving; mix more cautiously.
        if let Some((vback, prev_step)) = &prev {
            if dist(&vnext, vback) < prev_step / 10.0 {
                damping = (damping * 0.5).max(MIN_DAMPING);
            }
        }
        prev = Some((std::mem::replace(&mut v, vnext), step));
    }
    None
}

fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Cross-validation report; deterministic for fixed inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossValidation {
    pub matched: usize,
    /// Reference eigenvalues with no partner among the found ones.
    pub missing: Vec<Complex64>,
    /// Found eigenvalues with no partner in the reference.
    pub extra: Vec<Complex64>,
}

/// Matches two candidate lists one-to-one on `(lambda, mu)` within `tol`
/// relative, the same metric used for deduplication.
pub fn cross_validate(
    found: &[CandidateSolution],
    reference: &[CandidateSolution],
    tol: f64,
) -> CrossValidation {
    let mut used = vec![false; found.len()];
    let mut matched = 0usize;
    let mut missing = Vec::new();
    for r in reference {
        let hit = found.iter().enumerate().position(|(i, f)| {
            !used[i]
                && (f.lambda - r.lambda).norm() <= tol * (1.0 + r.lambda.norm())
                && (f.mu - r.mu).norm() <= tol * (1.0 + r.mu.norm())
        });
        match hit {
            Some(i) => {
                used[i] = true;
                matched += 1;
            }
            None => missing.push(r.lambda),
        }
    }
    let extra = found
        .iter()
        .zip(&used)
        .filter(|(_, &u)| !u)
        .map(|(f, _)| f.lambda)
        .collect();
    CrossValidation {
        matched,
        missing,
        extra,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{four_solution_instance, four_solution_table};
    use crate::linearization::{build_linearization, RSpec};
    use crate::problem::solution_count_bound;

    fn random_hermitian(n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> DenseMatrix {
        let g = complex_gaussian(n, n, rng);
        &g + &g.adjoint()
    }

    fn random_hpd(n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> DenseMatrix {
        let g = complex_gaussian(n, n, rng);
        let mut m = &g * &g.adjoint();
        for i in 0..n {
            m[(i, i)] += Complex64::from(n as f64);
        }
        m
    }

    fn random_problem(n: usize, seed: u64) -> NepvProblem {
        let mut rng = seeded_rng(seed);
        let a = random_hermitian(n, &mut rng);
        let b = random_hpd(n, &mut rng);
        let c = random_hermitian(n, &mut rng);
        let p = random_hermitian(n, &mut rng);
        let q = random_hpd(n, &mut rng);
        NepvProblem::new(a, b, c, p, q).expect("random instance is well formed")
    }

    #[test]
    fn dense_reference_enumerates_table_instance() {
        let lin = build_linearization(&four_solution_instance(), &RSpec::Random { seed: 7 })
            .expect("table instance linearizes");
        let spectrum = dense_reference_solve(&lin).expect("reference solve");
        assert_eq!(spectrum.entries.len(), 6);
        assert_eq!(spectrum.deflated, 0);
        assert_eq!(spectrum.count_with(Classification::Genuine), 4);
        assert_eq!(spectrum.count_with(Classification::SpuriousRightRmep), 1);

        let table = four_solution_table();
        for entry in spectrum.genuine() {
            assert!(entry.lambda.im.abs() <= 1e-8 * (1.0 + entry.lambda.re.abs()));
            assert!(entry.mu.im.abs() <= 1e-8 * (1.0 + entry.mu.re.abs()));
            let hit = table.iter().any(|s| {
                (entry.lambda - Complex64::from(s.lambda)).norm() <= 1e-6
                    && (entry.mu - Complex64::from(s.mu)).norm() <= 1e-6
            });
            assert!(hit, "unexpected genuine pair {} {}", entry.lambda, entry.mu);
        }

        // The sixth entry is the left twin of the right-family pair; it may
        // surface with a complex eigenvalue on some reduction draws.
        let other: Vec<Classification> = spectrum
            .entries
            .iter()
            .map(|e| e.classification())
            .filter(|c| {
                *c != Classification::Genuine && *c != Classification::SpuriousRightRmep
            })
            .collect();
        assert_eq!(other.len(), 1);
        assert!(matches!(
            other[0],
            Classification::SpuriousLeftRmep | Classification::SpuriousComplex
        ));
    }

    #[test]
    fn dense_reference_with_equal_p_q_reduces_to_pencil() {
        let mut rng = seeded_rng(81);
        let n = 2;
        let a = random_hermitian(n, &mut rng);
        let b = random_hpd(n, &mut rng);
        let c = random_hermitian(n, &mut rng);
        let q = random_hpd(n, &mut rng);
        let problem =
            NepvProblem::new(a.clone(), b.clone(), c.clone(), q.clone(), q).expect("well formed");
        let lin =
            build_linearization(&problem, &RSpec::Random { seed: 81 }).expect("linearizes");
        let spectrum = dense_reference_solve(&lin).expect("reference solve");

        let shifted = HermitianMatrix::enforce(&a - &c);
        let hb = HermitianMatrix::enforce(b);
        let (mut eigs, _) = hermitian_definite_eig(&shifted, &hb).expect("definite pencil");
        eigs.sort_by(f64::total_cmp);
        let scale = 1.0 + eigs.iter().fold(0.0f64, |m, e| m.max(e.abs()));

        let mut genuine: Vec<f64> = spectrum.genuine().map(|e| e.lambda.re).collect();
        genuine.sort_by(f64::total_cmp);
        assert_eq!(genuine.len(), eigs.len());
        for (g, e) in genuine.iter().zip(&eigs) {
            assert!((g - e).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn dense_reference_counts_on_random_instances() {
        for seed in [91, 92, 93] {
            let problem = random_problem(3, seed);
            let lin =
                build_linearization(&problem, &RSpec::Random { seed }).expect("linearizes");
            let spectrum = dense_reference_solve(&lin).expect("reference solve");
            assert_eq!(spectrum.entries.len(), 15);
            assert_eq!(spectrum.count_with(Classification::SpuriousRightRmep), 3);
            let genuine = spectrum.genuine().count();
            assert!(genuine <= solution_count_bound(3, 3));
            for entry in spectrum.genuine() {
                assert!(entry.lambda.im.abs() <= 1e-8 * (1.0 + entry.lambda.re.abs()));
                assert!(entry.candidate.residual_nepv <= 1e-8);
            }
        }
    }

    #[test]
    fn dense_reference_deflates_singular_pencil() {
        let mut rng = seeded_rng(101);
        let n = 4;
        let a = random_hermitian(n, &mut rng);
        let b = random_hpd(n, &mut rng);
        let g = complex_gaussian(n, 2, &mut rng);
        let c = &g * &g.adjoint();
        let p = random_hermitian(n, &mut rng);
        let q = random_hpd(n, &mut rng);
        let problem = NepvProblem::new(a, b, c, p, q).expect("well formed");
        let lin =
            build_linearization(&problem, &RSpec::Random { seed: 101 }).expect("linearizes");

        let spectrum = dense_reference_solve(&lin).expect("singular path succeeds");
        assert!(spectrum.deflated > 0, "no common null space deflated");
        assert!(spectrum.entries.len() < lin.big_order());
        let genuine = spectrum.genuine().count();
        assert!(genuine <= solution_count_bound(4, 2));
        assert!(genuine >= 1);
    }

    #[test]
    fn scf_finds_subset_of_table_solutions() {
        let problem = four_solution_instance();
        let result = scf_multistart(&problem, 64, &ScfConfig::default());
        assert_eq!(result.attempts, 128);
        assert!(result.converged >= result.solutions.len());
        assert!(
            result.solutions.len() >= 2,
            "only {} table solutions reached",
            result.solutions.len()
        );

        let table = four_solution_table();
        for sol in &result.solutions {
            let hit = table.iter().any(|t| {
                (sol.lambda - Complex64::from(t.lambda)).norm() <= 1e-6
                    && (sol.mu - Complex64::from(t.mu)).norm() <= 1e-6
            });
            assert!(hit, "SCF produced a non-table pair {} {}", sol.lambda, sol.mu);
            assert!(sol.residual_nepv <= SCF_KEEP_RESIDUAL);
        }
    }

    #[test]
    fn scf_converges_immediately_for_equal_p_q() {
        let mut rng = seeded_rng(111);
        let n = 3;
        let a = random_hermitian(n, &mut rng);
        let b = random_hpd(n, &mut rng);
        let c = random_hermitian(n, &mut rng);
        let q = random_hpd(n, &mut rng);
        let problem =
            NepvProblem::new(a.clone(), b.clone(), c.clone(), q.clone(), q).expect("well formed");

        let result = scf_multistart(&problem, 4, &ScfConfig::default());
        // mu(v) = 1 for every v, so the frozen pencil never changes and each
        // branch fixes in one step.
        assert_eq!(result.converged, result.attempts);
        assert_eq!(result.solutions.len(), n);

        let shifted = HermitianMatrix::enforce(&a - &c);
        let hb = HermitianMatrix::enforce(b);
        let (mut eigs, _) = hermitian_definite_eig(&shifted, &hb).expect("definite pencil");
        eigs.sort_by(f64::total_cmp);
        let scale = 1.0 + eigs.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        for (sol, e) in result.solutions.iter().zip(&eigs) {
            assert!((sol.lambda.re - e).abs() <= 1e-8 * scale);
            assert!((sol.mu - Complex64::from(1.0)).norm() <= 1e-10);
        }
    }

    #[test]
    fn scf_solutions_appear_in_dense_genuine_set() {
        for seed in [121, 122] {
            let problem = random_problem(3, seed);
            let lin =
                build_linearization(&problem, &RSpec::Random { seed }).expect("linearizes");
            let spectrum = dense_reference_solve(&lin).expect("reference solve");
            let reference = spectrum.genuine_candidates();

            let result = scf_multistart(&problem, 8, &ScfConfig::default());
            assert!(!result.solutions.is_empty(), "SCF found nothing");
            let report = cross_validate(&result.solutions, &reference, 1e-7);
            assert!(
                report.extra.is_empty(),
                "SCF produced pairs outside the dense genuine set: {:?}",
                report.extra
            );
        }
    }

    #[test]
    fn cross_validate_counts_matches_and_gaps() {
        let problem = four_solution_instance();
        let lin = build_linearization(&problem, &RSpec::Random { seed: 7 })
            .expect("table instance linearizes");
        let reference = dense_reference_solve(&lin)
            .expect("reference solve")
            .genuine_candidates();

        let all = cross_validate(&reference, &reference, 1e-8);
        assert_eq!(all.matched, 4);
        assert!(all.missing.is_empty());
        assert!(all.extra.is_empty());

        let short = &reference[..3];
        let report = cross_validate(short, &reference, 1e-8);
        assert_eq!(report.matched, 3);
        assert_eq!(report.missing.len(), 1);
        assert!(report.extra.is_empty());

        let report = cross_validate(&reference, short, 1e-8);
        assert_eq!(report.matched, 3);
        assert!(report.missing.is_empty());
        assert_eq!(report.extra.len(), 1);
    }
}
