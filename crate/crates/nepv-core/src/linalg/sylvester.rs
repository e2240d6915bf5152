//! Bartels-Stewart solver for the generalized Sylvester equation
//!
//! ```text
//!     A X B^T - C X D^T = E,      A, C of size p,  B, D of size q,
//! ```
//!
//! reduced by two generalized Schur decompositions, `(A, C)` and
//! `(B^T, D^T)`, to a triangular system that is back-substituted column by
//! column. Singular operators are supported: a negligible diagonal block
//! with a negligible adjusted right-hand side contributes a zero solution
//! component (minimum norm over the free directions in the Schur
//! coordinates), while a non-negligible one reports the system inconsistent.

use num_complex::Complex64;

use super::{generalized_schur, DenseMatrix, LinalgError, SYLVESTER_PIVOT_RTOL};

/// Outcome classification of a Sylvester solve.
#[derive(Clone, Debug, PartialEq)]
pub enum SylvesterMode {
    /// All diagonal blocks were safely invertible.
    Regular,
    /// `deficient` pivots were negligible but consistent; the returned `X`
    /// is a particular solution with zeros along the free directions.
    ConsistentUnderdetermined { deficient: usize },
}

pub struct SylvesterSolution {
    pub x: DenseMatrix,
    pub mode: SylvesterMode,
}

/// Adjusted right-hand side entries below this multiple of the local scale
/// count as consistent at a deficient pivot.
const CONSISTENCY_RTOL: f64 = 1e-8;

/// Precomputed Schur data for repeated solves against the same operator.
pub struct GeneralizedSylvesterPlan {
    p: usize,
    q: usize,
    q1: DenseMatrix,
    z1: DenseMatrix,
    sa: DenseMatrix,
    tc: DenseMatrix,
    q2: DenseMatrix,
    z2: DenseMatrix,
    sb: DenseMatrix,
    td: DenseMatrix,
    sa_max: f64,
    tc_max: f64,
}

impl GeneralizedSylvesterPlan {
    pub fn new(
        a: &DenseMatrix,
        b: &DenseMatrix,
        c: &DenseMatrix,
        d: &DenseMatrix,
    ) -> Result<Self, LinalgError> {
        assert!(a.is_square() && b.is_square() && c.is_square() && d.is_square());
        assert_eq!(a.rows(), c.rows(), "left coefficients must share order");
        assert_eq!(b.rows(), d.rows(), "right coefficients must share order");
        let f1 = generalized_schur(a, c)?;
        let f2 = generalized_schur(&b.transpose(), &d.transpose())?;
        let sa_max = f1.s.max_abs();
        let tc_max = f1.t.max_abs();
        Ok(GeneralizedSylvesterPlan {
            p: a.rows(),
            q: b.rows(),
            q1: f1.q,
            z1: f1.z,
            sa: f1.s,
            tc: f1.t,
            q2: f2.q,
            z2: f2.z,
            sb: f2.s,
            td: f2.t,
            sa_max,
            tc_max,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn solve(&self, e: &DenseMatrix) -> Result<SylvesterSolution, LinalgError> {
        assert_eq!(e.rows(), self.p, "right-hand side row mismatch");
        assert_eq!(e.cols(), self.q, "right-hand side column mismatch");
        let (p, q) = (self.p, self.q);
        let f = &(&self.q1.adjoint() * e) * &self.z2;
        let escale = e.max_abs().max(f64::MIN_POSITIVE);

        let mut y = DenseMatrix::zeros(p, q);
        // g_i = SA y_i, h_i = TC y_i, reused by later columns.
        let mut g = DenseMatrix::zeros(p, q);
        let mut h = DenseMatrix::zeros(p, q);
        let mut deficient = 0usize;
        for j in 0..q {
            let sbjj = self.sb[(j, j)];
            let tdjj = self.td[(j, j)];
            let mut r = f.col(j).to_vec();
            for i in 0..j {
                let cb = self.sb[(i, j)];
                let cd = self.td[(i, j)];
                if cb.norm_sqr() != 0.0 {
                    let gi = g.col(i);
                    for k in 0..p {
                        r[k] -= cb * gi[k];
                    }
                }
                if cd.norm_sqr() != 0.0 {
                    let hi = h.col(i);
                    for k in 0..p {
                        r[k] += cd * hi[k];
                    }
                }
            }
            // Back-substitute (sbjj SA - tdjj TC) y_j = r. A deficient pivot
            // aborts the cheap pass; the column is then redone rank-revealed.
            let block_scale = sbjj.norm() * self.sa_max + tdjj.norm() * self.tc_max;
            let piv_floor = SYLVESTER_PIVOT_RTOL * block_scale.max(f64::MIN_POSITIVE);
            let r0 = r.clone();
            let mut col_deficient = false;
            {
                let yj = y.col_mut(j);
                for i in (0..p).rev() {
                    let dpiv = sbjj * self.sa[(i, i)] - tdjj * self.tc[(i, i)];
                    if dpiv.norm() <= piv_floor {
                        col_deficient = true;
                        break;
                    }
                    yj[i] = r[i] / dpiv;
                    let yi = yj[i];
                    if yi.norm_sqr() != 0.0 {
                        let sac = self.sa.col(i);
                        let tcc = self.tc.col(i);
                        let a_coef = sbjj * yi;
                        let c_coef = tdjj * yi;
                        for k in 0..i {
                            r[k] -= a_coef * sac[k] - c_coef * tcc[k];
                        }
                    }
                }
            }
            if col_deficient {
                let dj = self.solve_deficient_column(sbjj, tdjj, &r0, escale, block_scale)?;
                deficient += dj.1;
                y.col_mut(j).copy_from_slice(&dj.0);
            }
            // Cache SA y_j and TC y_j for the coupling terms of later columns.
            {
                let yj = y.col(j).to_vec();
                let gj = g.col_mut(j);
                for (k, yk) in yj.iter().enumerate() {
                    if yk.norm_sqr() == 0.0 {
                        continue;
                    }
                    let sac = self.sa.col(k);
                    for i in 0..=k {
                        gj[i] += sac[i] * yk;
                    }
                }
                let hj = h.col_mut(j);
                for (k, yk) in yj.iter().enumerate() {
                    if yk.norm_sqr() == 0.0 {
                        continue;
                    }
                    let tcc = self.tc.col(k);
                    for i in 0..=k {
                        hj[i] += tcc[i] * yk;
                    }
                }
            }
        }
        let x = &(&self.z1 * &y) * &self.q2.adjoint();
        let mode = if deficient == 0 {
            SylvesterMode::Regular
        } else {
            SylvesterMode::ConsistentUnderdetermined { deficient }
        };
        Ok(SylvesterSolution { x, mode })
    }

    /// Minimum-norm least-squares solve of one singular triangular block
    /// `(sbjj SA - tdjj TC) y = r` via SVD, with a consistency check on the
    /// residual. Greedy zeroing of free components is not safe here: a zero
    /// row may couple to a zero column, making an adjusted entry look
    /// inconsistent even though the block system is solvable.
    fn solve_deficient_column(
        &self,
        sbjj: Complex64,
        tdjj: Complex64,
        r: &[Complex64],
        escale: f64,
        block_scale: f64,
    ) -> Result<(Vec<Complex64>, usize), LinalgError> {
        let p = self.p;
        let m = DenseMatrix::from_fn(p, p, |i, k| {
            if i > k {
                Complex64::new(0.0, 0.0)
            } else {
                sbjj * self.sa[(i, k)] - tdjj * self.tc[(i, k)]
            }
        });
        let svd = super::jacobi_svd(&m);
        let smax = svd.sigma.first().copied().unwrap_or(0.0);
        let cut = SYLVESTER_PIVOT_RTOL * smax.max(f64::MIN_POSITIVE);
        let mut yv = vec![Complex64::new(0.0, 0.0); p];
        let mut kept = 0usize;
        for (k, &s) in svd.sigma.iter().enumerate() {
            if s <= cut {
                continue;
            }
            kept += 1;
            let coef = super::vdot(svd.u.col(k), r) / s;
            for (t, &vk) in yv.iter_mut().zip(svd.v.col(k)) {
                *t += coef * vk;
            }
        }
        let my = m.matvec(&yv);
        let mut res = 0.0f64;
        for (a, b) in my.iter().zip(r) {
            res = res.max((a - b).norm());
        }
        let ymax = yv.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if res > CONSISTENCY_RTOL * (escale + block_scale * ymax) {
            return Err(LinalgError::SingularOperator);
        }
        Ok((yv, p - kept))
    }
}

/// One-shot convenience wrapper around [`GeneralizedSylvesterPlan`].
pub fn solve_generalized_sylvester(
    a: &DenseMatrix,
    b: &DenseMatrix,
    c: &DenseMatrix,
    d: &DenseMatrix,
    e: &DenseMatrix,
) -> Result<SylvesterSolution, LinalgError> {
    GeneralizedSylvesterPlan::new(a, b, c, d)?.solve(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rand_mat(rows: usize, cols: usize, seed: &mut u64) -> DenseMatrix {
        let next = move |s: &mut u64| {
            *s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((*s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        DenseMatrix::from_fn(rows, cols, |_, _| c(next(seed), next(seed)))
    }

    fn residual(
        a: &DenseMatrix,
        b: &DenseMatrix,
        cm: &DenseMatrix,
        d: &DenseMatrix,
        x: &DenseMatrix,
        e: &DenseMatrix,
    ) -> f64 {
        let lhs = &(&(a * x) * &b.transpose()) - &(&(cm * x) * &d.transpose());
        (&lhs - e).fro_norm()
    }

    #[test]
    fn regular_solves_across_shapes() {
        let mut seed = 2024;
        for (p, q) in [(1usize, 1usize), (1, 4), (4, 1), (3, 3), (5, 2), (6, 6)] {
            let a = rand_mat(p, p, &mut seed);
            let b = rand_mat(q, q, &mut seed);
            let cm = rand_mat(p, p, &mut seed);
            let d = rand_mat(q, q, &mut seed);
            let e = rand_mat(p, q, &mut seed);
            let sol = solve_generalized_sylvester(&a, &b, &cm, &d, &e).unwrap();
            assert_eq!(sol.mode, SylvesterMode::Regular);
            let scale = (a.fro_norm() * b.fro_norm() + cm.fro_norm() * d.fro_norm())
                * sol.x.fro_norm()
                + e.fro_norm();
            let r = residual(&a, &b, &cm, &d, &sol.x, &e);
            assert!(r <= 1e-10 * scale, "(p,q)=({p},{q}): residual {r:e}");
        }
    }

    #[test]
    fn matches_kronecker_oracle() {
        // vec(A X B^T - C X D^T) = (kron(B, A) - kron(D, C)) vec(X).
        let mut seed = 555;
        for _ in 0..20 {
            let (p, q) = (3usize, 4usize);
            let a = rand_mat(p, p, &mut seed);
            let b = rand_mat(q, q, &mut seed);
            let cm = rand_mat(p, p, &mut seed);
            let d = rand_mat(q, q, &mut seed);
            let e = rand_mat(p, q, &mut seed);
            let kron = |l: &DenseMatrix, r: &DenseMatrix| {
                DenseMatrix::from_fn(p * q, p * q, |i, j| {
                    l[(i / p, j / p)] * r[(i % p, j % p)]
                })
            };
            let op = &kron(&b, &a) - &kron(&d, &cm);
            let xk = super::super::LuFactors::new(&op).solve(e.data());
            let sol = solve_generalized_sylvester(&a, &b, &cm, &d, &e).unwrap();
            let mut diff = 0.0f64;
            for (idx, &xe) in sol.x.data().iter().enumerate() {
                diff = diff.max((xe - xk[idx]).norm());
            }
            let xnorm = sol.x.max_abs().max(1.0);
            assert!(diff <= 1e-9 * xnorm, "mismatch {diff:e}");
        }
    }

    #[test]
    fn consistent_singular_operator_returns_particular_solution() {
        let mut seed = 808;
        let (p, q) = (4usize, 3usize);
        let a = rand_mat(p, p, &mut seed);
        // C = A - u v^H makes A - C rank one, so X -> (A - C) X B^T is
        // singular with a large null space; D = B collapses the pencil.
        let u = rand_mat(p, 1, &mut seed);
        let v = rand_mat(p, 1, &mut seed);
        let mut cm = a.clone();
        for j in 0..p {
            for i in 0..p {
                cm[(i, j)] -= u[(i, 0)] * v[(j, 0)].conj();
            }
        }
        let b = rand_mat(q, q, &mut seed);
        let d = b.clone();
        let x0 = rand_mat(p, q, &mut seed);
        let e = &(&(&a * &x0) * &b.transpose()) - &(&(&cm * &x0) * &d.transpose());
        let sol = solve_generalized_sylvester(&a, &b, &cm, &d, &e).unwrap();
        match sol.mode {
            SylvesterMode::ConsistentUnderdetermined { deficient } => {
                assert!(deficient > 0)
            }
            SylvesterMode::Regular => panic!("operator should be detected as singular"),
        }
        let scale = (a.fro_norm() * b.fro_norm() + cm.fro_norm() * d.fro_norm())
            * sol.x.fro_norm().max(1.0)
            + e.fro_norm();
        let r = residual(&a, &b, &cm, &d, &sol.x, &e);
        assert!(r <= 1e-9 * scale, "residual {r:e}");
    }

    #[test]
    fn inconsistent_singular_operator_is_reported() {
        let mut seed = 909;
        let (p, q) = (4usize, 3usize);
        let a = rand_mat(p, p, &mut seed);
        let u = rand_mat(p, 1, &mut seed);
        let v = rand_mat(p, 1, &mut seed);
        let mut cm = a.clone();
        for j in 0..p {
            for i in 0..p {
                cm[(i, j)] -= u[(i, 0)] * v[(j, 0)].conj();
            }
        }
        let b = rand_mat(q, q, &mut seed);
        let d = b.clone();
        // A generic right-hand side is outside the rank-one range.
        let e = rand_mat(p, q, &mut seed);
        match solve_generalized_sylvester(&a, &b, &cm, &d, &e) {
            Err(LinalgError::SingularOperator) => {}
            Ok(sol) => panic!("expected inconsistency, got mode {:?}", sol.mode),
            Err(other) => panic!("unexpected error {other:?}"),
        }
    }
}
