//! Shift-and-invert Arnoldi solvers built on the compact linearization.
//!
//! All drivers run the same Krylov recurrence. Starting from `z_0`, each step
//! applies `Delta_0`, solves the shifted pencil, and orthogonalizes:
//!
//! ```text
//!     w = (Delta_1 - sigma Delta_0)^{-1} Delta_0 z_k,
//! ```
//!
//! so a Ritz value `theta` of the implicit operator maps back to an
//! eigenvalue `lambda = sigma + 1 / theta` of `(Delta_1, Delta_0)`. Every
//! apply and solve stays matrix-free through [`DeltaOperator`] and
//! [`ShiftedSolver`]; nothing of order `2n^2 - n` is ever formed.
//!
//! The three drivers differ in how they keep the spurious families of the
//! linearization at bay:
//!
//! * [`filtering_arnoldi`] projects every new basis vector onto the invariant
//!   subspace `Z` (symmetric trailing block). The solve itself maps `Z` into
//!   `Z` in exact arithmetic, so the projection only removes roundoff drift;
//!   the Ritz spectrum is confined to the structured part of the pencil.
//! * Two-sided extraction ([`two_sided_ritz`], or [`Algorithm::TwoSided`]
//!   inside [`run_solver`]) keeps the filtered basis `Z_k` but replaces the
//!   Hessenberg matrix with the projected pencil
//!   `(Z_k^H Delta_1 Z_k, Z_k^H Delta_0 Z_k)`. Vectors of the right spurious
//!   family fall into the common null space of both projections and are
//!   removed by eps-deflation rather than showing up as Ritz values.
//! * [`standard_arnoldi_singular`] runs the recurrence without projection for
//!   problems with `rank(C) < n - 1`, where the whole pencil is singular but
//!   the shifted solves remain consistent on the Krylov ladder.
//!
//! [`run_solver`] wires a driver to [`delta0_probe`], per-iteration Ritz
//! extraction, convergence tracking ([`ConvergenceLog`]), and final
//! classification of the converged eigenvectors.
//!
//! [`DeltaOperator`]: crate::linearization::DeltaOperator

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{
    dense_gep_eig_unchecked, vaxpy, vdot, vnorm2, vscale, DenseMatrix, GepKind, LuFactors,
};
use crate::linearization::{
    build_linearization, classify_eigvec, complex_gaussian, delta0_probe, seeded_rng, BigVector,
    CompactLinearization, Delta, Delta0Probe, LinearizationError, RSpec, ShiftedSolver,
};
use crate::problem::{CandidateSolution, NepvProblem, ProblemError, Tolerances};

/// Ritz values with `|theta|` at or below this floor have no finite
/// `sigma + 1/theta` image and are reported without an eigenvalue.
const THETA_INVERT_FLOOR: f64 = 1e-14;

/// Relative cutoff for eps-deflation of the projected pencil: a generalized
/// eigenvalue whose `alpha` and `beta` are both this small against the norms
/// of the projected matrices belongs to a common near-null direction.
const DEFLATION_RTOL: f64 = 1e-10;

/// Two-sided runs stop once `sigma_min / sigma_max` of a random real
/// combination of the projected matrices falls below this ratio; past that
/// point the pencil carries no information.
const SINGULAR_STOP_RATIO: f64 = 1e-12;

/// Iteration counts for the power and inverse-power probes that estimate the
/// extreme singular values of the projected pencil. The stop test only needs
/// order-of-magnitude accuracy, so a short fixed sweep keeps the probe
/// deterministic and cheap.
const PROBE_POWER_STEPS: usize = 8;

/// A converged track must repeat its eigenvalue for this many consecutive
/// iterations (two consecutive small increments).
const CONVERGENCE_WINDOW: usize = 3;

/// Which Krylov driver [`run_solver`] dispatches to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// Shift-and-invert with per-step projection onto `Z`; Ritz values come
    /// from the Hessenberg matrix.
    Filtering,
    /// Filtered basis with Ritz values from the projected pencil
    /// `(Z^H Delta_1 Z, Z^H Delta_0 Z)`.
    TwoSided,
    /// Unprojected recurrence for singular pencils (`rank(C) < n - 1`).
    StandardSingular,
}

#[derive(Clone, Copy, Debug)]
pub struct ArnoldiOptions {
    /// A step is declared a breakdown when the orthogonalized vector retains
    /// less than this fraction of its pre-orthogonalization norm. At that
    /// point the basis spans an invariant subspace and the recurrence stops.
    pub breakdown_rtol: f64,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        ArnoldiOptions {
            breakdown_rtol: 1e-14,
        }
    }
}

#[derive(Debug, Error)]
pub enum ArnoldiError {
    #[error("{algorithm:?} does not apply when the pencil probe reports {probe:?}")]
    AlgorithmProbeMismatch {
        algorithm: Algorithm,
        probe: Delta0Probe,
    },
    #[error("projected pencil is singular; no Ritz values survive deflation")]
    ProjectedPencilSingular,
    #[error(transparent)]
    Linearization(#[from] LinearizationError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Krylov basis and Hessenberg recurrence data after `iteration()` steps.
///
/// In the normal course `basis` holds `iteration() + 1` orthonormal columns
/// `z_0, ..., z_k` and the stored coefficients satisfy
/// `K Z_k = Z_k H_k + beta_k z_{k+1} e_k^T` for the implicit operator `K`.
/// After a breakdown the trailing column is absent and the relation holds
/// with `beta_k` at roundoff level, so `span(basis)` is invariant.
#[derive(Clone, Debug)]
pub struct KrylovState {
    pub basis: Vec<BigVector>,
    /// Column `j` stores `h_{0,j}, ..., h_{j+1,j}`; the trailing entry is the
    /// subdiagonal norm `beta_j`.
    hcols: Vec<Vec<Complex64>>,
    pub sigma: Complex64,
    pub breakdown: bool,
    /// Largest relative asymmetry of the trailing block seen on any new basis
    /// vector before projection; stays zero when projection is off.
    pub max_pre_projection_asymmetry: f64,
}

impl KrylovState {
    pub fn iteration(&self) -> usize {
        self.hcols.len()
    }

    /// The leading `k x k` Hessenberg matrix of the recurrence.
    pub fn hessenberg(&self) -> DenseMatrix {
        let k = self.hcols.len();
        DenseMatrix::from_fn(k, k, |i, j| {
            if i < self.hcols[j].len() {
                self.hcols[j][i]
            } else {
                Complex64::default()
            }
        })
    }

    /// Subdiagonal norm `beta_k` produced by the latest step.
    pub fn beta_next(&self) -> f64 {
        self.hcols
            .last()
            .map(|col| col.last().expect("columns are never empty").norm())
            .unwrap_or(0.0)
    }

    /// Assembles `basis * y` over the first `y.len()` columns.
    pub fn combine(&self, y: &[Complex64]) -> BigVector {
        assert!(
            y.len() <= self.basis.len(),
            "coefficient vector longer than the basis"
        );
        let mut acc = BigVector::zeros(self.basis[0].problem_order());
        for (&c, z) in y.iter().zip(&self.basis) {
            vaxpy(c, z.as_slice(), acc.as_mut_slice());
        }
        acc
    }

    /// Largest entrywise deviation of `Z^H Z` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, zi) in self.basis.iter().enumerate() {
            for (j, zj) in self.basis.iter().enumerate().skip(i) {
                let g = vdot(zi.as_slice(), zj.as_slice());
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }
}

/// One Ritz approximation at a fixed iteration.
#[derive(Clone, Debug)]
pub struct RitzPoint {
    /// Raw generalized eigenvalue of the small problem: `theta` of the
    /// Hessenberg matrix for the filtering driver, `alpha / beta` of the
    /// projected pencil for the two-sided driver.
    pub theta: Complex64,
    /// Eigenvalue estimate for `(Delta_1, Delta_0)`; `None` when `theta` is
    /// too small to invert.
    pub lambda: Option<Complex64>,
    /// Cheap shift-invert residual bound `beta_k |e_k^H y| / |theta|^2`.
    /// Two-sided extraction has no such bound and reports NaN; converged
    /// tracks get an explicit pencil residual at the end of the run.
    pub residual_estimate: f64,
    /// Track assigned by [`ConvergenceLog::observe`]; `None` until observed
    /// or when the point carries no eigenvalue.
    pub history_id: Option<usize>,
    /// Coefficients of the Ritz vector in the Krylov basis.
    pub y: Vec<Complex64>,
}

#[derive(Clone, Debug)]
pub struct RitzSet {
    pub iteration: usize,
    pub points: Vec<RitzPoint>,
}

/// One row of the convergence history.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRecord {
    pub iteration: usize,
    pub history_id: usize,
    pub lambda: Complex64,
    pub residual_estimate: f64,
    /// `|lambda - lambda_final|` against the last value of the same track;
    /// NaN until [`ConvergenceLog::finalize`] runs.
    pub abs_error_vs_final: f64,
}

/// A track that passed the stabilization test.
#[derive(Clone, Debug)]
pub struct TrackConvergence {
    pub history_id: usize,
    /// First iteration at which the track had held its value for
    /// [`CONVERGENCE_WINDOW`] consecutive iterations.
    pub converged_at: usize,
    /// Final eigenvalue of the track.
    pub lambda: Complex64,
}

/// Append-only history of Ritz values across iterations.
///
/// Eigenvalue estimates move between iterations, so rows are stitched into
/// tracks greedily: each new value is matched to the nearest value of the
/// previous iteration, provided the distance stays below half the smallest
/// gap between previous values (ambiguous matches are worthless). Unmatched
/// values open fresh tracks; a track that misses an iteration is retired and
/// never resumed, which keeps every track's records consecutive.
#[derive(Debug, Default)]
pub struct ConvergenceLog {
    records: Vec<LogRecord>,
    /// `(history_id, lambda)` of the tracks alive after the last iteration.
    live: Vec<(usize, Complex64)>,
    next_id: usize,
    finalized: bool,
}

impl ConvergenceLog {
    pub fn new() -> Self {
        ConvergenceLog::default()
    }

    /// Ingests one iteration's Ritz values, assigning `history_id`s in place.
    pub fn observe(&mut self, iteration: usize, ritz: &mut RitzSet) {
        assert!(!self.finalized, "log already finalized");
        let trackable: Vec<usize> = (0..ritz.points.len())
            .filter(|&i| ritz.points[i].lambda.is_some())
            .collect();

        // Matching radius: half the minimum gap among the previous values.
        // Co-located duplicates (several Ritz copies of one multiple
        // eigenvalue) are skipped, otherwise they would zero the radius and
        // stall every other track.
        let mut cap = f64::INFINITY;
        for (i, &(_, li)) in self.live.iter().enumerate() {
            for &(_, lj) in self.live.iter().skip(i + 1) {
                let gap = (li - lj).norm();
                if gap > 1e-10 * (1.0 + li.norm()) {
                    cap = cap.min(0.5 * gap);
                }
            }
        }

        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (slot, &(_, prev)) in self.live.iter().enumerate() {
            for (pos, &point) in trackable.iter().enumerate() {
                let lambda = ritz.points[point].lambda.expect("filtered above");
                let d = (lambda - prev).norm();
                if d <= cap {
                    pairs.push((d, slot, pos));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut slot_taken = vec![false; self.live.len()];
        let mut assigned = vec![None; trackable.len()];
        for &(_, slot, pos) in &pairs {
            if !slot_taken[slot] && assigned[pos].is_none() {
                slot_taken[slot] = true;
                assigned[pos] = Some(self.live[slot].0);
            }
        }

        let mut next_live = Vec::with_capacity(trackable.len());
        for (pos, &point) in trackable.iter().enumerate() {
            let id = assigned[pos].unwrap_or_else(|| {
                let id = self.next_id;
                self.next_id += 1;
                id
            });
            let lambda = ritz.points[point].lambda.expect("filtered above");
            ritz.points[point].history_id = Some(id);
            next_live.push((id, lambda));
            self.records.push(LogRecord {
                iteration,
                history_id: id,
                lambda,
                residual_estimate: ritz.points[point].residual_estimate,
                abs_error_vs_final: f64::NAN,
            });
        }
        next_live.sort_by_key(|&(id, _)| id);
        self.live = next_live;
    }

    /// Fills `abs_error_vs_final` by comparing each record against the last
    /// value of its track.
    pub fn finalize(&mut self) {
        if self.finalized {
            return;
        }
        self.finalized = true;
        let mut finals: Vec<(usize, Complex64)> = Vec::new();
        for r in &self.records {
            match finals.iter_mut().find(|(id, _)| *id == r.history_id) {
                Some(slot) => slot.1 = r.lambda,
                None => finals.push((r.history_id, r.lambda)),
            }
        }
        for r in &mut self.records {
            let (_, last) = finals
                .iter()
                .find(|(id, _)| *id == r.history_id)
                .expect("every record belongs to a track");
            r.abs_error_vs_final = (r.lambda - last).norm();
        }
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    /// Tracks whose eigenvalue stabilized: the increment
    /// `|lambda_k - lambda_{k-1}| <= tol (1 + |lambda_k|)` held over
    /// [`CONVERGENCE_WINDOW`] consecutive iterations.
    pub fn converged_tracks(&self, tol: f64) -> Vec<TrackConvergence> {
        let mut ids: Vec<usize> = self.records.iter().map(|r| r.history_id).collect();
        ids.sort_unstable();
        ids.dedup();

        let mut out = Vec::new();
        for id in ids {
            let track: Vec<&LogRecord> =
                self.records.iter().filter(|r| r.history_id == id).collect();
            let mut streak = 0usize;
            let mut converged_at = None;
            for pair in track.windows(2) {
                let step = (pair[1].lambda - pair[0].lambda).norm();
                if step <= tol * (1.0 + pair[1].lambda.norm()) {
                    streak += 1;
                    if streak + 1 >= CONVERGENCE_WINDOW {
                        converged_at = Some(pair[1].iteration);
                        break;
                    }
                } else {
                    streak = 0;
                }
            }
            if let Some(converged_at) = converged_at {
                out.push(TrackConvergence {
                    history_id: id,
                    converged_at,
                    lambda: track.last().expect("track is nonempty").lambda,
                });
            }
        }
        out.sort_by_key(|t| t.converged_at);
        out
    }

    /// Overwrites the residual of a track's last record with an explicitly
    /// computed pencil residual.
    pub(crate) fn set_final_residual(&mut self, history_id: usize, value: f64) {
        if let Some(r) = self
            .records
            .iter_mut()
            .rev()
            .find(|r| r.history_id == history_id)
        {
            r.residual_estimate = value;
        }
    }
}

/// Random unit vector in the structured subspace `Z`: Gaussian leading block,
/// exactly symmetrized trailing block. Normalization scales both blocks by
/// the same real factor, so membership in `Z` is exact, not approximate.
pub fn random_start_in_z(n: usize, seed: u64) -> BigVector {
    let mut rng = seeded_rng(seed);
    let w = complex_gaussian(n - 1, n, &mut rng);
    let g = complex_gaussian(n, n, &mut rng);
    let v = (&g + &g.transpose()).scale(Complex64::from(0.5));
    let mut z = BigVector::from_blocks(&w, &v);
    let scale = Complex64::from(1.0 / z.norm());
    vscale(scale, z.as_mut_slice());
    z
}

enum Step {
    Advanced,
    Breakdown,
}

/// Shared recurrence engine. `next_rhs` lets a driver hand over an already
/// computed `Delta_0 z_k` instead of paying for a second apply.
struct Stepper<'a> {
    lin: &'a CompactLinearization,
    solver: ShiftedSolver,
    state: KrylovState,
    project: bool,
    breakdown_rtol: f64,
    next_rhs: Option<BigVector>,
}

impl<'a> Stepper<'a> {
    fn new(
        lin: &'a CompactLinearization,
        sigma: Complex64,
        z0: &BigVector,
        project: bool,
        opts: &ArnoldiOptions,
    ) -> Result<Self, ArnoldiError> {
        let nrm = z0.norm();
        if nrm == 0.0 {
            return Err(LinearizationError::ZeroVector.into());
        }
        let mut z = z0.clone();
        vscale(Complex64::from(1.0 / nrm), z.as_mut_slice());
        if project {
            z = z.project_onto_z();
        }
        let solver = ShiftedSolver::new(lin, sigma)?;
        Ok(Stepper {
            lin,
            solver,
            state: KrylovState {
                basis: vec![z],
                hcols: Vec::new(),
                sigma,
                breakdown: false,
                max_pre_projection_asymmetry: 0.0,
            },
            project,
            breakdown_rtol: opts.breakdown_rtol,
            next_rhs: None,
        })
    }

    fn step(&mut self) -> Result<Step, ArnoldiError> {
        let rhs = match self.next_rhs.take() {
            Some(r) => r,
            None => self
                .lin
                .delta(Delta::Delta0)
                .apply(self.state.basis.last().expect("basis is never empty"))?,
        };
        let mut w = self.solver.solve(&rhs)?;
        let scale = w.norm();

        // Modified Gram-Schmidt with one unconditional reorthogonalization
        // pass; the projection coefficients of both passes add up.
        let m = self.state.basis.len();
        let mut h = vec![Complex64::default(); m + 1];
        for _ in 0..2 {
            for (i, z) in self.state.basis.iter().enumerate() {
                let c = vdot(z.as_slice(), w.as_slice());
                vaxpy(-c, z.as_slice(), w.as_mut_slice());
                h[i] += c;
            }
        }
        let beta = w.norm();
        h[m] = Complex64::from(beta);

        if beta <= self.breakdown_rtol * scale {
            // The recurrence coefficients are still exact for the invariant
            // subspace, so the column is kept; only the basis stops growing.
            self.state.hcols.push(h);
            self.state.breakdown = true;
            return Ok(Step::Breakdown);
        }

        vscale(Complex64::from(1.0 / beta), w.as_mut_slice());
        if self.project {
            let v = w.v_block();
            let asym = (&v - &v.transpose()).fro_norm() / w.norm();
            if asym > self.state.max_pre_projection_asymmetry {
                self.state.max_pre_projection_asymmetry = asym;
            }
            w = w.project_onto_z();
        }
        self.state.hcols.push(h);
        self.state.basis.push(w);
        Ok(Step::Advanced)
    }
}

/// Ritz values of the Hessenberg recurrence, mapped back through
/// `lambda = sigma + 1 / theta`.
pub fn ritz_values(state: &KrylovState) -> RitzSet {
    let k = state.iteration();
    let mut points = Vec::new();
    if k > 0 {
        let h = state.hessenberg();
        let eye = DenseMatrix::identity(k);
        let pairs =
            dense_gep_eig_unchecked(&h, &eye).expect("QZ of a Hessenberg-identity pair converges");
        let beta = state.beta_next();
        for pair in pairs {
            let Some(theta) = pair.lambda() else { continue };
            let invertible = theta.norm() > THETA_INVERT_FLOOR;
            let lambda = invertible.then(|| state.sigma + theta.inv());
            // First-order perturbation of lambda(theta): the shift-invert
            // residual beta |e_k^H y| shrinks by |d lambda / d theta|.
            let residual_estimate = if invertible {
                beta * pair.v.last().expect("Ritz vector is nonempty").norm() / theta.norm_sqr()
            } else {
                f64::INFINITY
            };
            points.push(RitzPoint {
                theta,
                lambda,
                residual_estimate,
                history_id: None,
                y: pair.v,
            });
        }
    }
    RitzSet {
        iteration: k,
        points,
    }
}

fn arnoldi_with_log(
    lin: &CompactLinearization,
    sigma: Complex64,
    z0: &BigVector,
    k_max: usize,
    opts: &ArnoldiOptions,
    project: bool,
) -> Result<(KrylovState, ConvergenceLog, RitzSet), ArnoldiError> {
    let mut stepper = Stepper::new(lin, sigma, z0, project, opts)?;
    let mut log = ConvergenceLog::new();
    let mut last_ritz = RitzSet {
        iteration: 0,
        points: Vec::new(),
    };
    for k in 1..=k_max {
        let status = stepper.step()?;
        let mut ritz = ritz_values(&stepper.state);
        log.observe(k, &mut ritz);
        last_ritz = ritz;
        if matches!(status, Step::Breakdown) {
            break;
        }
    }
    log.finalize();
    Ok((stepper.state, log, last_ritz))
}

/// Projected Arnoldi: every basis vector is symmetrized after
/// orthogonalization, so the recurrence never leaves `Z`.
///
/// Requires a regular pencil ([`delta0_probe`] reporting
/// [`Delta0Probe::Regular`]); a shift that hits an eigenvalue surfaces as
/// [`LinearizationError::ShiftIsEigenvalue`] from the first solve.
pub fn filtering_arnoldi(
    lin: &CompactLinearization,
    sigma: Complex64,
    z0: &BigVector,
    k_max: usize,
    opts: &ArnoldiOptions,
) -> Result<(KrylovState, ConvergenceLog), ArnoldiError> {
    arnoldi_with_log(lin, sigma, z0, k_max, opts, true).map(|(s, l, _)| (s, l))
}

/// Unprojected Arnoldi for singular pencils (`rank(C) < n - 1`).
///
/// The shifted pencil is singular for every `sigma`, but the right-hand
/// sides produced by the recurrence stay in its range, so the consistent
/// minimum-norm solves of [`ShiftedSolver`] advance the basis. An
/// inconsistent solve surfaces as
/// [`LinearizationError::ShiftIsEigenvalue`].
pub fn standard_arnoldi_singular(
    lin: &CompactLinearization,
    sigma: Complex64,
    z0: &BigVector,
    k_max: usize,
    opts: &ArnoldiOptions,
) -> Result<(KrylovState, ConvergenceLog), ArnoldiError> {
    arnoldi_with_log(lin, sigma, z0, k_max, opts, false).map(|(s, l, _)| (s, l))
}

/// Projects both operator determinants onto the basis columns, returning
/// `(H0, H1)` with `H_i = Z^H Delta_i Z`. The pencil `H1 - lambda H0`
/// carries the two-sided extraction and turns singular once the basis
/// outgrows the non-annihilated part of the structured subspace.
pub fn projected_pencil(
    lin: &CompactLinearization,
    basis: &[BigVector],
) -> Result<(DenseMatrix, DenseMatrix), LinearizationError> {
    let m = basis.len();
    let mut h0 = DenseMatrix::zeros(m, m);
    let mut h1 = DenseMatrix::zeros(m, m);
    for j in 0..m {
        let d0 = lin.delta(Delta::Delta0).apply(&basis[j])?;
        let d1 = lin.delta(Delta::Delta1).apply(&basis[j])?;
        for i in 0..m {
            h0[(i, j)] = vdot(basis[i].as_slice(), d0.as_slice());
            h1[(i, j)] = vdot(basis[i].as_slice(), d1.as_slice());
        }
    }
    Ok((h0, h1))
}

/// Generalized eigenvalues of the projected pencil, with eps-deflation of
/// common near-null directions.
fn extract_pencil_points(
    h1: &DenseMatrix,
    h0: &DenseMatrix,
) -> Result<Vec<RitzPoint>, ArnoldiError> {
    let scale1 = h1.fro_norm();
    let scale0 = h0.fro_norm();
    let pairs =
        dense_gep_eig_unchecked(h1, h0).map_err(|_| ArnoldiError::ProjectedPencilSingular)?;
    let mut points = Vec::new();
    for pair in pairs {
        if pair.kind != GepKind::Finite {
            continue;
        }
        if pair.alpha.norm() <= DEFLATION_RTOL * scale1 && pair.beta.norm() <= DEFLATION_RTOL * scale0
        {
            continue;
        }
        let lambda = pair.alpha / pair.beta;
        points.push(RitzPoint {
            theta: lambda,
            lambda: Some(lambda),
            residual_estimate: f64::NAN,
            history_id: None,
            y: pair.v,
        });
    }
    if points.is_empty() {
        return Err(ArnoldiError::ProjectedPencilSingular);
    }
    Ok(points)
}

/// Two-sided Ritz extraction on an existing (filtered) basis.
///
/// Forms `H_1 = Z^H Delta_1 Z` and `H_0 = Z^H Delta_0 Z` with one operator
/// apply per column, checks that both came out Hermitian, and solves the
/// dense pencil. Eigenvalues are read off directly (no shift-invert map).
/// Once the basis contains more than `n^2` columns the pencil is singular by
/// construction; that state is reported as
/// [`ArnoldiError::ProjectedPencilSingular`] and should be treated as a stop
/// signal, not a failure.
pub fn two_sided_ritz(
    lin: &CompactLinearization,
    state: &KrylovState,
) -> Result<RitzSet, ArnoldiError> {
    let (h0, h1) = projected_pencil(lin, &state.basis)?;
    for (h, name) in [(&h0, "H0"), (&h1, "H1")] {
        let defect = h.hermitian_defect();
        assert!(
            defect <= 1e-12 * h.fro_norm().max(f64::MIN_POSITIVE),
            "projected {name} lost Hermitian structure (defect {defect:.3e})"
        );
    }
    let points = extract_pencil_points(&h1, &h0)?;
    Ok(RitzSet {
        iteration: state.iteration(),
        points,
    })
}

/// Estimates `sigma_min / sigma_max` of a Hermitian matrix by a short power
/// sweep and an LU-based inverse-power sweep. Zero pivots or non-finite
/// growth mean the matrix is singular to working precision.
fn hermitian_sigma_min_ratio(m: &DenseMatrix, rng: &mut ChaCha8Rng) -> f64 {
    let k = m.rows();
    if k == 0 {
        return 1.0;
    }
    let mut v = complex_gaussian(k, 1, rng).data().to_vec();
    let mut smax = 0.0;
    for _ in 0..PROBE_POWER_STEPS {
        v = m.matvec(&v);
        smax = vnorm2(&v);
        if smax == 0.0 || !smax.is_finite() {
            return 0.0;
        }
        vscale(Complex64::from(1.0 / smax), &mut v);
    }

    let lu = LuFactors::new(m);
    if lu.pivot_ratio() == 0.0 {
        return 0.0;
    }
    let mut u = complex_gaussian(k, 1, rng).data().to_vec();
    let mut growth = 1.0;
    for _ in 0..PROBE_POWER_STEPS {
        u = lu.solve(&u);
        growth = vnorm2(&u);
        if growth == 0.0 || !growth.is_finite() {
            return 0.0;
        }
        vscale(Complex64::from(1.0 / growth), &mut u);
    }
    1.0 / (growth * smax)
}

/// Frobenius bound on the operator norm of a `Delta` through its Kronecker
/// factors; usable at sizes where the explicit matrix is out of reach.
fn delta_norm_bound(lin: &CompactLinearization, which: Delta) -> f64 {
    let p = &lin.problem;
    let (x1, l1, x2, l2) = match which {
        Delta::Delta0 => (&p.b, &lin.chat, &p.c, &lin.bhat),
        Delta::Delta1 => (&p.a, &lin.chat, &p.c, &lin.ahat),
        Delta::Delta2 => (&p.b, &lin.ahat, &p.a, &lin.bhat),
    };
    x1.as_dense().fro_norm() * l1.as_dense().fro_norm()
        + x2.as_dense().fro_norm() * l2.as_dense().fro_norm()
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub sigma: Complex64,
    pub max_iter: usize,
    /// Relative stabilization tolerance for convergence tracking.
    pub tol_conv: f64,
    /// Residual threshold passed to eigenvector classification.
    pub tol_res: f64,
    /// Seeds the starting vector, the two-sided singularity probe, and (when
    /// `r_spec` is `None`) the reduction matrix.
    pub seed: u64,
    /// Overrides the default random reduction matrix.
    pub r_spec: Option<RSpec>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            algorithm: Algorithm::Filtering,
            sigma: Complex64::default(),
            max_iter: 100,
            tol_conv: 1e-8,
            tol_res: 1e-8,
            seed: 0,
            r_spec: None,
        }
    }
}

/// Classifies the converged tracks of a finished run and deduplicates them.
///
/// A breakdown means the basis spans an invariant subspace, so every Ritz
/// value of the final iteration is exact regardless of how recently its
/// track appeared; in that case all final tracks count as converged.
fn collect_candidates(
    lin: &CompactLinearization,
    state: &KrylovState,
    final_ritz: &RitzSet,
    log: &ConvergenceLog,
    config: &SolverConfig,
) -> Result<Vec<CandidateSolution>, ArnoldiError> {
    let tols = Tolerances {
        tol_res: config.tol_res,
        ..Tolerances::default()
    };
    let mut ids: Vec<usize> = log
        .converged_tracks(config.tol_conv)
        .iter()
        .map(|t| t.history_id)
        .collect();
    if state.breakdown {
        for point in &final_ritz.points {
            if let Some(id) = point.history_id {
                if !ids.contains(&id) {
                    ids.push(id);
                }
            }
        }
    }

    let mut out = Vec::new();
    for id in ids {
        let Some(point) = final_ritz
            .points
            .iter()
            .find(|p| p.history_id == Some(id))
        else {
            continue;
        };
        let lambda = point.lambda.expect("tracked points carry eigenvalues");
        let z = state.combine(&point.y);
        out.push(classify_eigvec(lin, lambda, &z, &tols)?);
    }

    // Duplicate tracks happen when two Ritz values settle on the same
    // eigenvalue; keep the copy with the smaller problem residual.
    out.sort_by(|a, b| a.residual_nepv.total_cmp(&b.residual_nepv));
    let mut unique: Vec<CandidateSolution> = Vec::new();
    for cand in out {
        if !unique.iter().any(|kept| kept.same_eigenvalue(&cand)) {
            unique.push(cand);
        }
    }
    unique.sort_by(|a, b| {
        (a.lambda - config.sigma)
            .norm()
            .total_cmp(&(b.lambda - config.sigma).norm())
    });
    Ok(unique)
}

/// End-to-end solve: probe the pencil, run the requested driver, track
/// convergence, classify the converged eigenvectors.
///
/// A track is converged once its eigenvalue stabilizes over three
/// consecutive iterations, or unconditionally at a breakdown (the basis is
/// then invariant and the final Ritz values are exact). Candidates are
/// deduplicated and sorted by distance from the shift. The log retains the
/// full per-iteration history, so callers can inspect convergence behavior
/// independently of the classified output.
pub fn run_solver(
    problem: &NepvProblem,
    config: &SolverConfig,
) -> Result<(Vec<CandidateSolution>, ConvergenceLog), ArnoldiError> {
    problem.validate()?;
    let r_spec = config
        .r_spec
        .clone()
        .unwrap_or(RSpec::Random { seed: config.seed });
    let lin = build_linearization(problem, &r_spec)?;

    let probe = delta0_probe(&lin);
    let applicable = match config.algorithm {
        Algorithm::Filtering | Algorithm::TwoSided => probe == Delta0Probe::Regular,
        Algorithm::StandardSingular => matches!(probe, Delta0Probe::SingularLowRankC { .. }),
    };
    if !applicable {
        return Err(ArnoldiError::AlgorithmProbeMismatch {
            algorithm: config.algorithm,
            probe,
        });
    }

    let z0 = random_start_in_z(problem.order(), config.seed);
    let opts = ArnoldiOptions::default();

    match config.algorithm {
        Algorithm::Filtering | Algorithm::StandardSingular => {
            let project = config.algorithm == Algorithm::Filtering;
            let (state, log, final_ritz) =
                arnoldi_with_log(&lin, config.sigma, &z0, config.max_iter, &opts, project)?;
            let candidates = collect_candidates(&lin, &state, &final_ritz, &log, config)?;
            Ok((candidates, log))
        }
        Algorithm::TwoSided => run_two_sided(&lin, &z0, config, &opts),
    }
}

fn run_two_sided(
    lin: &CompactLinearization,
    z0: &BigVector,
    config: &SolverConfig,
    opts: &ArnoldiOptions,
) -> Result<(Vec<CandidateSolution>, ConvergenceLog), ArnoldiError> {
    let mut stepper = Stepper::new(lin, config.sigma, z0, true, opts)?;
    // Probe randomness is decoupled from the start vector's seed stream.
    let mut rng = seeded_rng(config.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let rho = 0.5 + rng.gen::<f64>();

    let d0 = lin.delta(Delta::Delta0).apply(&stepper.state.basis[0])?;
    let d1 = lin.delta(Delta::Delta1).apply(&stepper.state.basis[0])?;
    let mut h0 = DenseMatrix::zeros(1, 1);
    let mut h1 = DenseMatrix::zeros(1, 1);
    append_projected_column(&mut h0, &stepper.state.basis, &d0);
    append_projected_column(&mut h1, &stepper.state.basis, &d1);
    stepper.next_rhs = Some(d0);

    let mut log = ConvergenceLog::new();
    let mut last_ritz = RitzSet {
        iteration: 0,
        points: Vec::new(),
    };
    for k in 1..=config.max_iter {
        if matches!(stepper.step()?, Step::Breakdown) {
            break;
        }
        // Delta_0 z_k doubles as the next solve's right-hand side, so each
        // iteration costs two operator applies in total.
        let d0 = lin
            .delta(Delta::Delta0)
            .apply(stepper.state.basis.last().expect("just appended"))?;
        let d1 = lin
            .delta(Delta::Delta1)
            .apply(stepper.state.basis.last().expect("just appended"))?;
        h0 = grown(&h0);
        h1 = grown(&h1);
        append_projected_column(&mut h0, &stepper.state.basis, &d0);
        append_projected_column(&mut h1, &stepper.state.basis, &d1);
        stepper.next_rhs = Some(d0);

        let probe = DenseMatrix::from_fn(h0.rows(), h0.cols(), |i, j| {
            h0[(i, j)] + Complex64::from(rho) * h1[(i, j)]
        });
        if hermitian_sigma_min_ratio(&probe, &mut rng) < SINGULAR_STOP_RATIO {
            // The projected pencil has degenerated; everything after this
            // point would be noise. Report the last healthy iteration.
            break;
        }
        match extract_pencil_points(&h1, &h0) {
            Ok(points) => {
                let mut ritz = RitzSet {
                    iteration: k,
                    points,
                };
                log.observe(k, &mut ritz);
                last_ritz = ritz;
            }
            Err(ArnoldiError::ProjectedPencilSingular) => break,
            Err(e) => return Err(e),
        }
    }
    log.finalize();

    // The cheap Hessenberg residual bound does not apply here; converged
    // tracks get an explicit pencil residual instead.
    let bound0 = delta_norm_bound(lin, Delta::Delta0);
    let bound1 = delta_norm_bound(lin, Delta::Delta1);
    for track in log.converged_tracks(config.tol_conv) {
        let Some(point) = last_ritz
            .points
            .iter()
            .find(|p| p.history_id == Some(track.history_id))
        else {
            continue;
        };
        let lambda = point.lambda.expect("tracked points carry eigenvalues");
        let z = stepper.state.combine(&point.y);
        let d1z = lin.delta(Delta::Delta1).apply(&z)?;
        let d0z = lin.delta(Delta::Delta0).apply(&z)?;
        let mut res = d1z.into_vec();
        vaxpy(-lambda, d0z.as_slice(), &mut res);
        let denom = (bound1 + lambda.norm() * bound0) * z.norm();
        log.set_final_residual(track.history_id, vnorm2(&res) / denom);
    }

    let candidates = collect_candidates(lin, &stepper.state, &last_ritz, &log, config)?;
    Ok((candidates, log))
}

fn grown(h: &DenseMatrix) -> DenseMatrix {
    let m = h.rows();
    let mut out = DenseMatrix::zeros(m + 1, m + 1);
    out.set_block(0, 0, h);
    out
}

/// Fills the last column (and conjugate row) of a projected matrix from the
/// image of the newest basis vector. The diagonal entry is forced real, so
/// the stored matrix is Hermitian by construction.
fn append_projected_column(h: &mut DenseMatrix, basis: &[BigVector], image: &BigVector) {
    let m = basis.len() - 1;
    for (i, z) in basis.iter().enumerate() {
        let val = vdot(z.as_slice(), image.as_slice());
        if i == m {
            h[(m, m)] = Complex64::new(val.re, 0.0);
        } else {
            h[(i, m)] = val;
            h[(m, i)] = val.conj();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{four_solution_instance, four_solution_table};
    use crate::linalg::{hermitian_definite_eig, jacobi_svd, HermitianMatrix};
    use crate::linearization::explicit_deltas;
    use crate::problem::Classification;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        let g = complex_gaussian(n, n, rng);
        &g + &g.adjoint()
    }

    fn random_hpd(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
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

    fn table_lin() -> CompactLinearization {
        build_linearization(&four_solution_instance(), &RSpec::Random { seed: 7 })
            .expect("table instance linearizes")
    }

    #[test]
    fn random_start_is_unit_structured_and_deterministic() {
        let z = random_start_in_z(5, 42);
        assert!((z.norm() - 1.0).abs() <= 1e-14);
        assert!(z.in_z(1e-15));
        assert_eq!(z, random_start_in_z(5, 42));
        assert_ne!(z, random_start_in_z(5, 43));
    }

    #[test]
    fn single_step_produces_scalar_hessenberg() {
        let lin = table_lin();
        let z0 = random_start_in_z(2, 1);
        let (state, _) = filtering_arnoldi(&lin, Complex64::default(), &z0, 1, &Default::default())
            .expect("one step succeeds");
        assert_eq!(state.iteration(), 1);
        assert_eq!(state.basis.len(), 2);
        let ritz = ritz_values(&state);
        assert_eq!(ritz.points.len(), 1);
        let p = &ritz.points[0];
        let expected = state.sigma + p.theta.inv();
        assert_eq!(p.lambda, Some(expected));
        assert!(p.residual_estimate.is_finite());
    }

    // The structured subspace of the 2 x 2 instance has dimension 5, so the
    // filtered recurrence must break down at step 5 with the full structured
    // spectrum in its Hessenberg matrix.
    #[test]
    fn filtering_exhausts_structured_subspace_of_table_instance() {
        let lin = table_lin();
        let z0 = random_start_in_z(2, 3);
        let (state, _) = filtering_arnoldi(&lin, Complex64::default(), &z0, 10, &Default::default())
            .expect("run completes");
        assert!(state.breakdown);
        assert_eq!(state.iteration(), 5);
        assert_eq!(state.basis.len(), 5);
        assert!(state.orthonormality_defect() <= 1e-10 * 5.0);
        assert!(state.max_pre_projection_asymmetry <= 1e-8);
        for z in &state.basis {
            assert!(z.in_z(1e-15));
        }

        let ritz = ritz_values(&state);
        assert_eq!(ritz.points.len(), 5);
        for sol in four_solution_table() {
            let hit = ritz
                .points
                .iter()
                .filter_map(|p| p.lambda)
                .any(|l| (l - Complex64::from(sol.lambda)).norm() <= 1e-6);
            assert!(hit, "missing lambda = {}", sol.lambda);
        }
    }

    // On the same full basis the Ritz values must reproduce the structured
    // part of the dense spectrum, not just the four genuine eigenvalues.
    #[test]
    fn full_basis_ritz_matches_structured_dense_spectrum() {
        let lin = table_lin();
        let z0 = random_start_in_z(2, 3);
        let (state, _) = filtering_arnoldi(&lin, Complex64::default(), &z0, 10, &Default::default())
            .expect("run completes");
        let mut ritz_lambdas: Vec<Complex64> =
            ritz_values(&state).points.iter().filter_map(|p| p.lambda).collect();

        let (d0, d1, _) = explicit_deltas(&lin).expect("small instance");
        let pairs = crate::linalg::dense_gep_eig(d1.as_dense(), d0.as_dense())
            .expect("regular dense pencil");
        let mut structured: Vec<Complex64> = pairs
            .iter()
            .filter(|p| {
                let z = BigVector::new(2, p.v.clone()).expect("dimension matches");
                p.lambda().is_some() && z.in_z(1e-6)
            })
            .map(|p| p.lambda().expect("filtered"))
            .collect();

        assert_eq!(structured.len(), 5);
        let key = |l: &Complex64| (l.re, l.im);
        structured.sort_by(|a, b| key(a).partial_cmp(&key(b)).expect("finite"));
        ritz_lambdas.sort_by(|a, b| key(a).partial_cmp(&key(b)).expect("finite"));
        for (r, s) in ritz_lambdas.iter().zip(&structured) {
            assert!((r - s).norm() <= 1e-7 * (1.0 + s.norm()), "{r} vs {s}");
        }
    }

    #[test]
    fn projection_keeps_drift_small_at_moderate_size() {
        let problem = random_problem(20, 11);
        let lin = build_linearization(&problem, &RSpec::Random { seed: 11 })
            .expect("random instance linearizes");
        let z0 = random_start_in_z(20, 12);
        let (state, log) =
            filtering_arnoldi(&lin, Complex64::new(0.1, 0.0), &z0, 50, &Default::default())
                .expect("run completes");
        assert!(!state.breakdown);
        assert_eq!(state.iteration(), 50);
        assert!(
            state.max_pre_projection_asymmetry <= 1e-6,
            "asymmetry {}",
            state.max_pre_projection_asymmetry
        );
        assert!(state.orthonormality_defect() <= 1e-10 * 50.0);
        assert!(!log.records().is_empty());
    }

    // With the basis spanning all of Z, the projected pencil has exactly one
    // common null direction (the right spurious family of the 2 x 2
    // instance); deflation removes it and the four genuine eigenvalues
    // remain. The Hessenberg spectrum on the same basis still carries the
    // spurious fifth value, which is what the two-sided extraction buys.
    #[test]
    fn two_sided_extraction_deflates_right_family() {
        let lin = table_lin();
        let z0 = random_start_in_z(2, 3);
        let (state, _) = filtering_arnoldi(&lin, Complex64::default(), &z0, 10, &Default::default())
            .expect("run completes");

        let two_sided = two_sided_ritz(&lin, &state).expect("deflation succeeds");
        assert_eq!(two_sided.points.len(), 4);
        let table = four_solution_table();
        for p in &two_sided.points {
            let lambda = p.lambda.expect("direct eigenvalues are finite");
            assert!(lambda.im.abs() <= 1e-8);
            let hit = table
                .iter()
                .any(|s| (lambda - Complex64::from(s.lambda)).norm() <= 1e-6);
            assert!(hit, "unexpected two-sided value {lambda}");
        }

        let hessenberg = ritz_values(&state);
        let spurious: Vec<Complex64> = hessenberg
            .points
            .iter()
            .filter_map(|p| p.lambda)
            .filter(|l| {
                table
                    .iter()
                    .all(|s| (l - Complex64::from(s.lambda)).norm() > 1e-3)
            })
            .collect();
        assert_eq!(spurious.len(), 1);
    }

    // Past n^2 basis columns the projected pencil is singular by
    // construction; the probe ratio collapses even though extraction can
    // still deflate its way to an answer.
    #[test]
    fn projected_pencil_degenerates_past_n_squared_columns() {
        let problem = random_problem(4, 21);
        let lin = build_linearization(&problem, &RSpec::Random { seed: 21 })
            .expect("random instance linearizes");
        let z0 = random_start_in_z(4, 22);
        let (state, _) = filtering_arnoldi(&lin, Complex64::default(), &z0, 16, &Default::default())
            .expect("run completes");
        assert_eq!(state.basis.len(), 17);

        let (h0, h1) = projected_pencil(&lin, &state.basis).expect("projections apply");
        let mut rng = seeded_rng(99);
        let rho = 0.5 + rng.gen::<f64>();
        let combo = DenseMatrix::from_fn(17, 17, |i, j| {
            h0[(i, j)] + Complex64::from(rho) * h1[(i, j)]
        });
        let svd = jacobi_svd(&combo);
        let ratio = svd.sigma[16] / svd.sigma[0];
        assert!(ratio <= 1e-10, "ratio {ratio:.3e}");

        match two_sided_ritz(&lin, &state) {
            Ok(set) => assert!(set.points.len() <= 16),
            Err(ArnoldiError::ProjectedPencilSingular) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    fn low_rank_c_problem(n: usize, rank: usize, seed: u64) -> NepvProblem {
        let mut rng = seeded_rng(seed);
        let a = random_hermitian(n, &mut rng);
        let b = random_hpd(n, &mut rng);
        let g = complex_gaussian(n, rank, &mut rng);
        let c = &g * &g.adjoint();
        let p = random_hermitian(n, &mut rng);
        let q = random_hpd(n, &mut rng);
        NepvProblem::new(a, b, c, p, q).expect("low rank instance is well formed")
    }

    // rank(C) = 2 < n - 1 makes the whole pencil singular, yet the shifted
    // solves remain consistent along the recurrence: applying the shifted
    // pencil to the solution must reproduce the right-hand side.
    #[test]
    fn singular_pencil_solves_stay_consistent() {
        let problem = low_rank_c_problem(5, 2, 31);
        let lin = build_linearization(&problem, &RSpec::Random { seed: 31 })
            .expect("instance linearizes");
        assert!(matches!(
            delta0_probe(&lin),
            Delta0Probe::SingularLowRankC { rank: 2 }
        ));

        let solver = ShiftedSolver::new(&lin, Complex64::default()).expect("plan builds");
        let d0 = lin.delta(Delta::Delta0);
        let d1 = lin.delta(Delta::Delta1);
        let mut z = random_start_in_z(5, 32);
        for _ in 0..10 {
            let rhs = d0.apply(&z).expect("apply");
            let x = solver.solve(&rhs).expect("consistent solve");
            let lhs = d1.apply(&x).expect("apply");
            let mut err = lhs.into_vec();
            vaxpy(-Complex64::from(1.0), rhs.as_slice(), &mut err);
            let scale = delta_norm_bound(&lin, Delta::Delta1) * x.norm() + rhs.norm();
            assert!(vnorm2(&err) <= 1e-8 * scale);
            let nrm = x.norm();
            z = x;
            vscale(Complex64::from(1.0 / nrm), z.as_mut_slice());
        }

        let z0 = random_start_in_z(5, 33);
        let (state, log) =
            standard_arnoldi_singular(&lin, Complex64::default(), &z0, 20, &Default::default())
                .expect("singular driver completes");
        assert_eq!(state.iteration(), 20);
        assert!(state.orthonormality_defect() <= 1e-10 * 20.0);
        assert_eq!(state.max_pre_projection_asymmetry, 0.0);
        assert!(!log.records().is_empty());
    }

    // With C = 0 the nonlinearity is gone and the eigenvalues are those of
    // the definite pencil (A, B). Each of them enters the pencil with an
    // n-dimensional eigenspace (the trailing block is u w^T with u free), so
    // the Ritz vectors need not symmetrize to rank one; the reduction is
    // checked on the eigenvalues, not the classification.
    #[test]
    fn zero_c_reduces_to_linear_definite_pencil() {
        let mut rng = seeded_rng(41);
        let n = 4;
        let a = random_hermitian(n, &mut rng);
        let b = random_hpd(n, &mut rng);
        let c = DenseMatrix::zeros(n, n);
        let p = random_hermitian(n, &mut rng);
        let q = random_hpd(n, &mut rng);
        let problem = NepvProblem::new(a.clone(), b.clone(), c, p, q).expect("well formed");

        let config = SolverConfig {
            algorithm: Algorithm::StandardSingular,
            sigma: Complex64::new(0.3, 0.0),
            max_iter: 30,
            ..SolverConfig::default()
        };
        let (candidates, _) = run_solver(&problem, &config).expect("solver runs");

        let ha = HermitianMatrix::enforce(a);
        let hb = HermitianMatrix::enforce(b);
        let (eigs, _) = hermitian_definite_eig(&ha, &hb).expect("definite pencil");
        let scale = 1.0 + eigs.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        for e in &eigs {
            let hit = candidates
                .iter()
                .any(|c| (c.lambda - Complex64::from(*e)).norm() <= 1e-8 * scale);
            assert!(hit, "eigenvalue {e} not recovered");
        }
    }

    // P = Q forces mu(v) = 1, so genuine solutions are exactly the
    // eigenpairs of (A - C, B). A full structured run must find all of them
    // and nothing else.
    #[test]
    fn equal_p_q_reduces_to_shifted_pencil() {
        let mut rng = seeded_rng(51);
        let n = 3;
        let a = random_hermitian(n, &mut rng);
        let b = random_hpd(n, &mut rng);
        let c = random_hermitian(n, &mut rng);
        let q = random_hpd(n, &mut rng);
        let problem =
            NepvProblem::new(a.clone(), b.clone(), c.clone(), q.clone(), q).expect("well formed");

        let config = SolverConfig {
            algorithm: Algorithm::Filtering,
            sigma: Complex64::new(0.15, 0.0),
            max_iter: 30,
            seed: 5,
            ..SolverConfig::default()
        };
        let (candidates, _) = run_solver(&problem, &config).expect("solver runs");
        let mut genuine: Vec<f64> = candidates
            .iter()
            .filter(|c| c.classification == Classification::Genuine)
            .map(|c| c.lambda.re)
            .collect();
        genuine.sort_by(f64::total_cmp);

        let shifted = HermitianMatrix::enforce(&a - &c);
        let hb = HermitianMatrix::enforce(b);
        let (mut eigs, _) = hermitian_definite_eig(&shifted, &hb).expect("definite pencil");
        eigs.sort_by(f64::total_cmp);
        let scale = 1.0 + eigs.iter().fold(0.0f64, |m, e| m.max(e.abs()));

        assert_eq!(genuine.len(), eigs.len());
        for (g, e) in genuine.iter().zip(&eigs) {
            assert!((g - e).abs() <= 1e-8 * scale, "{g} vs {e}");
        }
        for cand in &candidates {
            if cand.classification == Classification::Genuine {
                assert!((cand.mu - Complex64::from(1.0)).norm() <= 1e-8);
            }
        }
    }

    #[test]
    fn run_solver_recovers_table_solutions() {
        let problem = four_solution_instance();
        let config = SolverConfig {
            algorithm: Algorithm::Filtering,
            max_iter: 10,
            seed: 3,
            ..SolverConfig::default()
        };
        let (candidates, log) = run_solver(&problem, &config).expect("solver runs");
        let genuine: Vec<&CandidateSolution> = candidates
            .iter()
            .filter(|c| c.classification == Classification::Genuine)
            .collect();
        assert_eq!(genuine.len(), 4);

        let table = four_solution_table();
        for cand in &genuine {
            let sol = table
                .iter()
                .min_by(|a, b| {
                    (cand.lambda - Complex64::from(a.lambda))
                        .norm()
                        .total_cmp(&(cand.lambda - Complex64::from(b.lambda)).norm())
                })
                .expect("table is nonempty");
            assert!((cand.lambda - Complex64::from(sol.lambda)).norm() <= 1e-6);
            assert!((cand.mu - Complex64::from(sol.mu)).norm() <= 1e-6);
            assert!(cand.residual_nepv <= 1e-8);
        }

        // Candidates come back sorted by distance from the shift.
        for pair in candidates.windows(2) {
            assert!(
                (pair[0].lambda - config.sigma).norm() <= (pair[1].lambda - config.sigma).norm()
            );
        }
        assert!(!log.records().is_empty());
    }

    // Two-sided records carry NaN residual estimates until a track earns an
    // explicit pencil residual, so determinism is checked bitwise.
    fn records_bitwise_equal(a: &[LogRecord], b: &[LogRecord]) -> bool {
        a.len() == b.len()
            && a.iter().zip(b).all(|(x, y)| {
                x.iteration == y.iteration
                    && x.history_id == y.history_id
                    && x.lambda == y.lambda
                    && x.residual_estimate.to_bits() == y.residual_estimate.to_bits()
                    && x.abs_error_vs_final.to_bits() == y.abs_error_vs_final.to_bits()
            })
    }

    #[test]
    fn two_sided_driver_runs_and_tracks() {
        let problem = random_problem(3, 61);
        let config = SolverConfig {
            algorithm: Algorithm::TwoSided,
            max_iter: 8,
            tol_conv: 1e-2,
            seed: 61,
            ..SolverConfig::default()
        };
        let (_, log) = run_solver(&problem, &config).expect("driver completes");
        assert!(!log.records().is_empty());
        for r in log.records() {
            assert!(r.abs_error_vs_final.is_finite());
        }

        let (_, log2) = run_solver(&problem, &config).expect("driver completes");
        assert!(records_bitwise_equal(log.records(), log2.records()));
    }

    #[test]
    fn mismatched_algorithm_is_rejected() {
        let regular = four_solution_instance();
        let config = SolverConfig {
            algorithm: Algorithm::StandardSingular,
            ..SolverConfig::default()
        };
        match run_solver(&regular, &config) {
            Err(ArnoldiError::AlgorithmProbeMismatch { .. }) => {}
            other => panic!("expected mismatch, got {other:?}"),
        }

        let singular = low_rank_c_problem(5, 2, 71);
        let config = SolverConfig {
            algorithm: Algorithm::Filtering,
            ..SolverConfig::default()
        };
        match run_solver(&singular, &config) {
            Err(ArnoldiError::AlgorithmProbeMismatch { .. }) => {}
            other => panic!("expected mismatch, got {other:?}"),
        }
    }

    #[test]
    fn logs_are_bit_for_bit_deterministic() {
        let problem = four_solution_instance();
        let config = SolverConfig {
            algorithm: Algorithm::Filtering,
            max_iter: 10,
            seed: 9,
            ..SolverConfig::default()
        };
        let (c1, l1) = run_solver(&problem, &config).expect("first run");
        let (c2, l2) = run_solver(&problem, &config).expect("second run");
        assert_eq!(l1.records(), l2.records());
        assert_eq!(c1.len(), c2.len());
        for (a, b) in c1.iter().zip(&c2) {
            assert_eq!(a.lambda, b.lambda);
            assert_eq!(a.v, b.v);
        }
    }

    #[test]
    fn tracker_matches_nearby_values_and_opens_new_tracks() {
        let mut log = ConvergenceLog::new();
        let point = |l: f64| RitzPoint {
            theta: Complex64::default(),
            lambda: Some(Complex64::from(l)),
            residual_estimate: 0.0,
            history_id: None,
            y: Vec::new(),
        };

        let mut r1 = RitzSet {
            iteration: 1,
            points: vec![point(1.0), point(5.0)],
        };
        log.observe(1, &mut r1);
        let id_a = r1.points[0].history_id.expect("assigned");
        let id_b = r1.points[1].history_id.expect("assigned");
        assert_ne!(id_a, id_b);

        let mut r2 = RitzSet {
            iteration: 2,
            points: vec![point(4.999), point(1.001), point(9.0)],
        };
        log.observe(2, &mut r2);
        assert_eq!(r2.points[0].history_id, Some(id_b));
        assert_eq!(r2.points[1].history_id, Some(id_a));
        let id_c = r2.points[2].history_id.expect("assigned");
        assert!(id_c != id_a && id_c != id_b);

        // A value outside the matching radius (half the minimum gap, here
        // 0.5 * |4.999 - 1.001|) must open a new track rather than stretch
        // an old one.
        let mut r3 = RitzSet {
            iteration: 3,
            points: vec![point(7.0)],
        };
        log.observe(3, &mut r3);
        let id_d = r3.points[0].history_id.expect("assigned");
        assert!(id_d > id_c);

        log.finalize();
        assert!(log.records().iter().all(|r| r.abs_error_vs_final.is_finite()));
    }

    #[test]
    fn convergence_requires_three_stable_iterations() {
        let mut log = ConvergenceLog::new();
        let values = [2.0, 1.5, 1.4, 1.4 + 1e-12, 1.4 + 2e-12];
        for (k, v) in values.iter().enumerate() {
            let mut set = RitzSet {
                iteration: k + 1,
                points: vec![RitzPoint {
                    theta: Complex64::default(),
                    lambda: Some(Complex64::from(*v)),
                    residual_estimate: 0.0,
                    history_id: None,
                    y: Vec::new(),
                }],
            };
            log.observe(k + 1, &mut set);
        }
        log.finalize();
        let tracks = log.converged_tracks(1e-8);
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].converged_at, 5);
        assert!(log.converged_tracks(1e-14).is_empty());
    }

    // Shift-invert should surface the genuine eigenvalue nearest the shift
    // first. The ordering is a statistical property, not a theorem: assert
    // it holds on at least 90% of eligible trials.
    #[test]
    fn nearest_genuine_eigenvalue_tends_to_converge_first() {
        let sigma = Complex64::new(0.2, 0.0);
        let tols = Tolerances::default();
        let mut eligible = 0usize;
        let mut hits = 0usize;
        for trial in 0..50u64 {
            let problem = random_problem(10, 600 + trial);
            let lin = build_linearization(&problem, &RSpec::Random { seed: trial })
                .expect("instance linearizes");
            if delta0_probe(&lin) != Delta0Probe::Regular {
                continue;
            }
            let z0 = random_start_in_z(10, trial);
            let (state, log, final_ritz) =
                arnoldi_with_log(&lin, sigma, &z0, 60, &Default::default(), true)
                    .expect("run completes");

            let mut genuine: Vec<(usize, Complex64)> = Vec::new();
            for track in log.converged_tracks(1e-8) {
                let Some(point) = final_ritz
                    .points
                    .iter()
                    .find(|p| p.history_id == Some(track.history_id))
                else {
                    continue;
                };
                let lambda = point.lambda.expect("tracked");
                let z = state.combine(&point.y);
                let cand = classify_eigvec(&lin, lambda, &z, &tols).expect("classification runs");
                if cand.classification == Classification::Genuine {
                    genuine.push((track.converged_at, lambda));
                }
            }
            if genuine.len() < 2 {
                continue;
            }
            eligible += 1;
            let first = genuine
                .iter()
                .min_by(|a, b| a.0.cmp(&b.0).then((a.1 - sigma).norm().total_cmp(&(b.1 - sigma).norm())))
                .expect("nonempty");
            let nearest = genuine
                .iter()
                .min_by(|a, b| (a.1 - sigma).norm().total_cmp(&(b.1 - sigma).norm()))
                .expect("nonempty");
            if (first.1 - nearest.1).norm() <= 1e-6 * (1.0 + nearest.1.norm()) {
                hits += 1;
            }
        }
        assert!(eligible >= 30, "only {eligible} eligible trials");
        assert!(hits * 10 >= eligible * 9, "{hits}/{eligible} ordered");
    }
}
