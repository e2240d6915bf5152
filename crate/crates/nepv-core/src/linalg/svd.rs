//! Singular value decomposition by one-sided Jacobi rotations.
//!
//! Cyclic sweeps orthogonalize pairs of columns; the fixed sweep order makes
//! the result deterministic. Accuracy of small singular values is a strength
//! of the Jacobi approach, which matters for the rank decisions and null
//! space extractions built on top.

use num_complex::Complex64;

use super::{vdot, vnorm2, DenseMatrix};

/// Thin SVD `A = U diag(sigma) V^H` with `sigma` sorted descending.
///
/// `U` is `m x k`, `V` is `n x k` with `k = min(m, n)`. Columns of `U`
/// belonging to zero singular values are zero vectors.
pub struct Svd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    /// Columns of `V` spanning the numerical null space, i.e. right singular
    /// directions with `sigma <= rtol * sigma_max`.
    pub fn null_space(&self, rtol: f64) -> Vec<Vec<Complex64>> {
        let smax = self.sigma.first().copied().unwrap_or(0.0);
        let mut out = Vec::new();
        for (j, &s) in self.sigma.iter().enumerate() {
            if s <= rtol * smax {
                out.push(self.v.col(j).to_vec());
            }
        }
        out
    }

    pub fn rank(&self, rtol: f64) -> usize {
        let smax = self.sigma.first().copied().unwrap_or(0.0);
        self.sigma.iter().filter(|&&s| s > rtol * smax).count()
    }
}

const MAX_SWEEPS: usize = 60;

/// One-sided Jacobi SVD. Wide matrices are handled through the adjoint.
pub fn jacobi_svd(a: &DenseMatrix) -> Svd {
    if a.rows() < a.cols() {
        let f = jacobi_svd(&a.adjoint());
        return Svd {
            u: f.v,
            sigma: f.sigma,
            v: f.u,
        };
    }
    let (m, n) = (a.rows(), a.cols());
    let mut w = a.clone();
    let mut v = DenseMatrix::identity(n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let app = vnorm2(w.col(p)).powi(2);
                let aqq = vnorm2(w.col(q)).powi(2);
                let apq = vdot(w.col(p), w.col(q));
                let napq = apq.norm();
                if napq <= f64::EPSILON * (app * aqq).sqrt() || napq == 0.0 {
                    continue;
                }
                rotated = true;
                // Unitary J diagonalizing the 2x2 Gram matrix
                // [[app, apq], [conj(apq), aqq]].
                let phi = apq / napq;
                let tau = (aqq - app) / (2.0 * napq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                apply_pair_rotation(&mut w, p, q, c, s, phi);
                apply_pair_rotation(&mut v, p, q, c, s, phi);
            }
        }
        if !rotated {
            break;
        }
    }
    // Columns are now mutually orthogonal; read off the factors.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| vnorm2(w.col(j))).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let mut u = DenseMatrix::zeros(m, n);
    let mut vv = DenseMatrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma.push(s);
        vv.col_mut(dst).copy_from_slice(v.col(src));
        if s > 0.0 {
            let inv = 1.0 / s;
            let (uc, wc) = (u.col_mut(dst), w.col(src));
            for i in 0..m {
                uc[i] = wc[i].scale(inv);
            }
        }
    }
    Svd { u, sigma, v: vv }
}

/// Right-multiplies columns `(p, q)` by `J = [[c phi, s phi], [-s, c]]`.
fn apply_pair_rotation(m: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64, phi: Complex64) {
    let (cp, cq) = m.cols_mut_pair(p, q);
    let jp = phi.scale(c);
    let jq = phi.scale(s);
    for i in 0..cp.len() {
        let x = cp[i];
        let y = cq[i];
        cp[i] = jp * x - y.scale(s);
        cq[i] = jq * x + y.scale(c);
    }
}

/// Numerical rank: the number of singular values above `rtol * sigma_max`.
pub fn rank_estimate(m: &DenseMatrix, rtol: f64) -> usize {
    jacobi_svd(m).rank(rtol)
}

/// Two largest singular values and the dominant left singular vector.
///
/// Small matrices go through the full Jacobi factorization. Larger ones use
/// orthogonal iteration with Ritz extraction on a two-dimensional subspace
/// of the smaller side, then read the singular values off a single extra
/// application of the matrix. Measuring in the image space rather than on
/// `M^H M` keeps the `sigma_2` floor near `eps * sigma_1` instead of
/// `sqrt(eps) * sigma_1`, which the rank-one acceptance tests rely on.
pub fn svd_top2(m: &DenseMatrix) -> (f64, f64, Vec<Complex64>) {
    let (rows, cols) = (m.rows(), m.cols());
    if cols == 1 {
        let s = vnorm2(m.col(0));
        let u = if s > 0.0 {
            m.col(0).iter().map(|z| z.scale(1.0 / s)).collect()
        } else {
            m.col(0).to_vec()
        };
        return (s, 0.0, u);
    }
    if rows == 1 {
        return (m.fro_norm(), 0.0, vec![Complex64::new(1.0, 0.0)]);
    }
    if rows.max(cols) <= 48 {
        let f = jacobi_svd(m);
        return (f.sigma[0], f.sigma[1], f.u.col(0).to_vec());
    }
    if rows >= cols {
        let (x1, x2) = top2_right_basis(m);
        finalize_top2(m, &x1, &x2)
    } else {
        // Iterate on the adjoint; its dominant right direction is the left
        // vector we want, and the finalize step hands back `v_1` of `m`.
        let mh = m.adjoint();
        let (x1, x2) = top2_right_basis(&mh);
        let (s1, s2, v1) = finalize_top2(&mh, &x1, &x2);
        if s1 == 0.0 {
            return (0.0, 0.0, unit_at(rows, 0));
        }
        let mut u1 = m.matvec(&v1);
        let un = vnorm2(&u1);
        if un > 0.0 {
            for z in u1.iter_mut() {
                *z = z.scale(1.0 / un);
            }
        } else {
            u1 = unit_at(rows, 0);
        }
        (s1, s2, u1)
    }
}

/// Measures `sigma_1`, `sigma_2` and `u_1` given an orthonormal basis
/// `(v1, v2)` approximating the two dominant right directions of `m`.
fn finalize_top2(m: &DenseMatrix, v1: &[Complex64], v2: &[Complex64]) -> (f64, f64, Vec<Complex64>) {
    let w1 = m.matvec(v1);
    let s1 = vnorm2(&w1);
    if s1 == 0.0 {
        return (0.0, 0.0, unit_at(m.rows(), 0));
    }
    let u1: Vec<Complex64> = w1.iter().map(|z| z.scale(1.0 / s1)).collect();
    let mut w2 = m.matvec(v2);
    let proj = vdot(&u1, &w2);
    for (t, &u) in w2.iter_mut().zip(&u1) {
        *t -= proj * u;
    }
    let s2 = vnorm2(&w2).min(s1);
    (s1, s2, u1)
}

/// Ritz basis for the two dominant right singular directions of a tall
/// matrix, from orthogonal iteration on `M^H M` applied implicitly.
fn top2_right_basis(m: &DenseMatrix) -> (Vec<Complex64>, Vec<Complex64>) {
    let cols = m.cols();
    // Seed from the heaviest column, which cannot be orthogonal to the
    // dominant direction, plus a fixed pseudorandom companion.
    let mut jstar = 0;
    let mut best = 0.0;
    for j in 0..cols {
        let nj = vnorm2(m.col(j));
        if nj > best {
            best = nj;
            jstar = j;
        }
    }
    if best == 0.0 {
        return (unit_at(cols, 0), unit_at(cols, 1));
    }
    let seedcol: Vec<Complex64> = m.col(jstar).iter().map(|z| z.scale(1.0 / best)).collect();
    let mut x1 = m.adjoint_matvec(&seedcol);
    let n1 = vnorm2(&x1);
    for z in x1.iter_mut() {
        *z = z.scale(1.0 / n1);
    }
    let mut rng_seed = 0x9e3779b97f4a7c15u64;
    let mut x2 = pseudorandom_unit(cols, &mut rng_seed);
    while !orthonormalize_against(&mut x2, &x1) {
        x2 = pseudorandom_unit(cols, &mut rng_seed);
    }
    let mut th1 = 0.0;
    let mut th2 = 0.0;
    let max_it = 300;
    for it in 0..max_it {
        let z1 = m.adjoint_matvec(&m.matvec(&x1));
        let z2 = m.adjoint_matvec(&m.matvec(&x2));
        // Two-by-two Rayleigh quotient of M^H M on span(x1, x2), symmetrized.
        let b11 = vdot(&x1, &z1).re.max(0.0);
        let b22 = vdot(&x2, &z2).re.max(0.0);
        let b12 = (vdot(&x1, &z2) + vdot(&x2, &z1).conj()).scale(0.5);
        let (t1, t2, w0, w1) = herm2_eig(b11, b12, b22);
        let settled = it > 0
            && (t1 - th1).abs() <= 1e-13 * t1
            && (t2 - th2).abs() <= 1e-13 * t1;
        if settled || it + 1 == max_it || t1 == 0.0 {
            // Rotate the current basis into Ritz order before returning.
            let mut r1 = combine(&x1, &x2, w0, w1);
            let mut r2 = combine(&x1, &x2, -w1.conj(), w0.conj());
            let nr = vnorm2(&r1);
            if nr > 0.0 {
                for z in r1.iter_mut() {
                    *z = z.scale(1.0 / nr);
                }
            }
            if !orthonormalize_against(&mut r2, &r1) {
                r2 = unit_at(cols, if jstar == 0 { 1 } else { 0 });
                orthonormalize_against(&mut r2, &r1);
            }
            return (r1, r2);
        }
        th1 = t1;
        th2 = t2;
        let nz = vnorm2(&z1);
        if nz == 0.0 {
            continue;
        }
        x1 = z1;
        for z in x1.iter_mut() {
            *z = z.scale(1.0 / nz);
        }
        x2 = z2;
        if !orthonormalize_against(&mut x2, &x1) {
            // The image collapsed to one direction; probe a fresh one and
            // discard the stale Ritz history.
            x2 = pseudorandom_unit(cols, &mut rng_seed);
            while !orthonormalize_against(&mut x2, &x1) {
                x2 = pseudorandom_unit(cols, &mut rng_seed);
            }
            th2 = f64::INFINITY;
        }
    }
    unreachable!("orthogonal iteration exits inside the loop")
}

/// Eigenvalues (descending, clamped nonnegative) and the leading unit
/// eigenvector of the Hermitian matrix `[[a, b], [conj(b), c]]`.
fn herm2_eig(a: f64, b: Complex64, c: f64) -> (f64, f64, Complex64, Complex64) {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    if b.norm_sqr() == 0.0 {
        let (t1, t2) = (a.max(c).max(0.0), a.min(c).max(0.0));
        return if a >= c {
            (t1, t2.min(t1), one, zero)
        } else {
            (t1, t2.min(t1), zero, one)
        };
    }
    let rad = ((a - c) * (a - c) + 4.0 * b.norm_sqr()).sqrt();
    let t1 = 0.5 * (a + c + rad);
    if t1 <= 0.0 {
        return (0.0, 0.0, one, zero);
    }
    // Small eigenvalue via the determinant to dodge cancellation in tr - rad.
    let t2 = ((a * c - b.norm_sqr()) / t1).clamp(0.0, t1);
    let ga = t1 - a;
    let gc = t1 - c;
    // Both closed forms satisfy (A - t1) w = 0 through ga * gc = |b|^2; pick
    // the better conditioned one.
    let (w0, w1) = if gc >= ga {
        (Complex64::new(gc, 0.0), b.conj())
    } else {
        (b, Complex64::new(ga, 0.0))
    };
    let nw = (w0.norm_sqr() + w1.norm_sqr()).sqrt();
    (t1, t2, w0.scale(1.0 / nw), w1.scale(1.0 / nw))
}

fn unit_at(len: usize, k: usize) -> Vec<Complex64> {
    let mut e = vec![Complex64::new(0.0, 0.0); len];
    e[k] = Complex64::new(1.0, 0.0);
    e
}

fn pseudorandom_unit(len: usize, seed: &mut u64) -> Vec<Complex64> {
    let mut next = || {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let mut v: Vec<Complex64> = (0..len).map(|_| Complex64::new(next(), next())).collect();
    let n = vnorm2(&v);
    for z in v.iter_mut() {
        *z = z.scale(1.0 / n);
    }
    v
}

/// Subtracts the `base` component and normalizes; `false` when `x` collapses.
fn orthonormalize_against(x: &mut [Complex64], base: &[Complex64]) -> bool {
    for _ in 0..2 {
        let proj = vdot(base, x);
        for (t, &u) in x.iter_mut().zip(base) {
            *t -= proj * u;
        }
    }
    let n = vnorm2(x);
    if n <= f64::MIN_POSITIVE.sqrt() {
        return false;
    }
    for z in x.iter_mut() {
        *z = z.scale(1.0 / n);
    }
    true
}

fn combine(a: &[Complex64], b: &[Complex64], ca: Complex64, cb: Complex64) -> Vec<Complex64> {
    a.iter().zip(b).map(|(&x, &y)| ca * x + cb * y).collect()
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

    fn check_svd(a: &DenseMatrix) {
        let f = jacobi_svd(a);
        let k = a.rows().min(a.cols());
        assert_eq!(f.sigma.len(), k);
        // Reconstruction.
        let mut rec = DenseMatrix::zeros(a.rows(), a.cols());
        for j in 0..k {
            for cix in 0..a.cols() {
                let vj = f.v[(cix, j)].conj() * f.sigma[j];
                for r in 0..a.rows() {
                    rec[(r, cix)] += f.u[(r, j)] * vj;
                }
            }
        }
        let scale = a.fro_norm().max(1.0);
        assert!((&rec - a).fro_norm() <= 1e-12 * scale, "reconstruction failed");
        // Descending order, orthonormal V.
        for j in 1..k {
            assert!(f.sigma[j - 1] >= f.sigma[j]);
        }
        let vtv = &f.v.adjoint() * &f.v;
        assert!((&vtv - &DenseMatrix::identity(f.v.cols())).fro_norm() < 1e-12);
    }

    #[test]
    fn svd_of_random_matrices() {
        let mut seed = 12345;
        for (m, n) in [(1usize, 1usize), (3, 3), (5, 2), (2, 5), (8, 8), (9, 4)] {
            check_svd(&rand_mat(m, n, &mut seed));
        }
    }

    #[test]
    fn exact_rank_deficiency_is_detected() {
        let mut seed = 99;
        // rank 2 = product of 5x2 and 2x5.
        let a = rand_mat(5, 2, &mut seed);
        let b = rand_mat(2, 5, &mut seed);
        let m = &a * &b;
        assert_eq!(rank_estimate(&m, 1e-10), 2);
        let ns = jacobi_svd(&m).null_space(1e-10);
        assert_eq!(ns.len(), 3);
        for x in &ns {
            let mx = m.matvec(x);
            assert!(vnorm2(&mx) <= 1e-12 * m.fro_norm());
        }
    }

    #[test]
    fn top2_agrees_with_full_jacobi() {
        let mut seed = 31415;
        for (m, n) in [(3usize, 3usize), (10, 10), (30, 30), (60, 60), (90, 90), (100, 55), (55, 100)] {
            let a = rand_mat(m, n, &mut seed);
            let f = jacobi_svd(&a);
            let (s1, s2, u1) = svd_top2(&a);
            assert!((s1 - f.sigma[0]).abs() <= 1e-6 * f.sigma[0], "{m}x{n}");
            assert!(s2 <= f.sigma[1] * (1.0 + 1e-6), "{m}x{n}");
            assert!(s2 >= f.sigma[1] * (1.0 - 1e-6), "{m}x{n} s2={s2} vs {}", f.sigma[1]);
            let overlap = vdot(&u1, f.u.col(0)).norm();
            assert!(overlap >= 1.0 - 1e-6, "{m}x{n} overlap={overlap}");
        }
    }

    #[test]
    fn top2_on_near_rank_one() {
        let mut seed = 777;
        let n = 80;
        let x = rand_mat(n, 1, &mut seed);
        // Symmetric rank-one plus tiny noise.
        let mut m = DenseMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                m[(i, j)] = x[(i, 0)] * x[(j, 0)];
            }
        }
        let noise = rand_mat(n, n, &mut seed);
        let m = &m + &noise.scale(c(1e-12, 0.0));
        let (s1, s2, _) = svd_top2(&m);
        assert!(s2 / s1 < 1e-9);
    }
}
