//! Complex QZ iteration: generalized Schur decomposition of a matrix pencil
//! `(A, B)`, computing unitary `Q`, `Z` with `A = Q S Z^H`, `B = Q T Z^H`
//! and `S` upper triangular (via Hessenberg), `T` upper triangular.
//!
//! The implementation is the classical Moler-Stewart scheme: Givens QR of
//! `B`, Hessenberg-triangular reduction, then implicit single-shift bulge
//! chasing with complex shifts. No balancing is performed. Negligible `T`
//! diagonal entries are chased to the bottom of the active block and
//! deflated as infinite eigenvalues, so singular `B` is handled without
//! special-casing by callers.

// Index arithmetic follows the usual LAPACK-style block bookkeeping.
#![allow(clippy::mut_range_bound, clippy::manual_is_multiple_of, clippy::needless_range_loop)]

use num_complex::Complex64;

use super::{DenseMatrix, LinalgError, QZ_EPS, QZ_MAX_SWEEPS_PER_ORDER};

/// Generalized Schur decomposition of `(A, B)`.
///
/// `alphas[i] / betas[i]` enumerate the generalized eigenvalues sorted by
/// modulus then argument (infinite ones last); the `S`, `T` diagonals keep
/// the order in which the iteration deflated them.
pub struct SchurPair {
    pub s: DenseMatrix,
    pub t: DenseMatrix,
    pub q: DenseMatrix,
    pub z: DenseMatrix,
    pub alphas: Vec<Complex64>,
    pub betas: Vec<Complex64>,
}

impl SchurPair {
    /// Frobenius residuals `(|Q S Z^H - A|, |Q T Z^H - B|)`.
    pub fn residual(&self, a: &DenseMatrix, b: &DenseMatrix) -> (f64, f64) {
        let zh = self.z.adjoint();
        let ra = (&(&self.q * &self.s) * &zh, a);
        let rb = (&(&self.q * &self.t) * &zh, b);
        ((&ra.0 - ra.1).fro_norm(), (&rb.0 - rb.1).fro_norm())
    }
}

/// Plane rotation `G = [[c, s], [-conj(s), c]]` with real `c >= 0` chosen so
/// that `G [x; y] = [r; 0]`.
fn rotg(x: Complex64, y: Complex64) -> (f64, Complex64, Complex64) {
    let ny = y.norm();
    if ny == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0), x);
    }
    let nx = x.norm();
    if nx == 0.0 {
        return (0.0, y.conj() / ny, Complex64::new(ny, 0.0));
    }
    let d = (nx * nx + ny * ny).sqrt();
    let phase = x / nx;
    (nx / d, phase * y.conj() / d, phase * d)
}

/// Applies `G` to rows `(k1, k2)`, columns `jstart..`.
fn rot_rows(m: &mut DenseMatrix, k1: usize, k2: usize, c: f64, s: Complex64, jstart: usize) {
    let rows = m.rows();
    let data = m.data_mut();
    let sc = s.conj();
    for j in jstart..data.len() / rows {
        let base = j * rows;
        let x = data[base + k1];
        let y = data[base + k2];
        data[base + k1] = x.scale(c) + s * y;
        data[base + k2] = y.scale(c) - sc * x;
    }
}

/// Applies `G` on the right to columns `(j1, j2)`, rows `..iend`:
/// `col_j1 <- c col_j1 - conj(s) col_j2`, `col_j2 <- s col_j1 + c col_j2`.
fn rot_cols(m: &mut DenseMatrix, j1: usize, j2: usize, c: f64, s: Complex64, iend: usize) {
    let (c1, c2) = m.cols_mut_pair(j1, j2);
    let sc = s.conj();
    for i in 0..iend {
        let x = c1[i];
        let y = c2[i];
        c1[i] = x.scale(c) - sc * y;
        c2[i] = y.scale(c) + s * x;
    }
}

struct QzWork {
    s: DenseMatrix,
    t: DenseMatrix,
    q: DenseMatrix,
    z: DenseMatrix,
    n: usize,
    snorm: f64,
    tnorm: f64,
}

impl QzWork {
    /// Left rotation on rows `(k, k+1)` of both `S` and `T`, accumulated
    /// into `Q` (as `Q G^H`).
    fn left(&mut self, k: usize, c: f64, s: Complex64, js: usize, jt: usize) {
        rot_rows(&mut self.s, k, k + 1, c, s, js);
        rot_rows(&mut self.t, k, k + 1, c, s, jt);
        rot_cols(&mut self.q, k, k + 1, c, -s, self.n);
    }

    /// Right rotation on columns `(j, j+1)` of both, accumulated into `Z`.
    fn right(&mut self, j: usize, c: f64, s: Complex64, is: usize, it: usize) {
        rot_cols(&mut self.s, j, j + 1, c, s, is);
        rot_cols(&mut self.t, j, j + 1, c, s, it);
        rot_cols(&mut self.z, j, j + 1, c, s, self.n);
    }

    fn subdiag_tol(&self, i: usize) -> f64 {
        let local = self.s[(i - 1, i - 1)].norm() + self.s[(i, i)].norm();
        if local > 0.0 {
            QZ_EPS * local
        } else {
            QZ_EPS * self.snorm.max(f64::MIN_POSITIVE)
        }
    }

    fn t_diag_negligible(&self, j: usize) -> bool {
        self.t[(j, j)].norm() <= QZ_EPS * self.tnorm.max(f64::MIN_POSITIVE)
    }

    /// Reduces `T` to triangular form by Givens QR.
    fn triangularize_t(&mut self) {
        for j in 0..self.n {
            for i in (j + 1..self.n).rev() {
                if self.t[(i, j)].norm_sqr() == 0.0 {
                    continue;
                }
                let (c, s, r) = rotg(self.t[(i - 1, j)], self.t[(i, j)]);
                rot_rows(&mut self.s, i - 1, i, c, s, 0);
                rot_rows(&mut self.t, i - 1, i, c, s, j);
                self.t[(i - 1, j)] = r;
                self.t[(i, j)] = Complex64::new(0.0, 0.0);
                rot_cols(&mut self.q, i - 1, i, c, -s, self.n);
            }
        }
    }

    /// Reduces `S` to upper Hessenberg while keeping `T` triangular.
    fn hessenbergize_s(&mut self) {
        if self.n < 3 {
            return;
        }
        for j in 0..self.n - 2 {
            for i in (j + 2..self.n).rev() {
                if self.s[(i, j)].norm_sqr() == 0.0 {
                    continue;
                }
                let (c, s, r) = rotg(self.s[(i - 1, j)], self.s[(i, j)]);
                rot_rows(&mut self.s, i - 1, i, c, s, j);
                rot_rows(&mut self.t, i - 1, i, c, s, i - 1);
                self.s[(i - 1, j)] = r;
                self.s[(i, j)] = Complex64::new(0.0, 0.0);
                rot_cols(&mut self.q, i - 1, i, c, -s, self.n);
                // The left rotation fills T(i, i-1); restore triangularity.
                if self.t[(i, i - 1)].norm_sqr() != 0.0 {
                    let (c2, s2, r2) = rotg(self.t[(i, i)], self.t[(i, i - 1)]);
                    rot_cols(&mut self.s, i - 1, i, c2, s2, self.n);
                    rot_cols(&mut self.t, i - 1, i, c2, s2, i);
                    self.t[(i, i - 1)] = Complex64::new(0.0, 0.0);
                    self.t[(i, i)] = r2;
                    rot_cols(&mut self.z, i - 1, i, c2, s2, self.n);
                }
            }
        }
    }

    /// Chases a zero `T` diagonal at `j` down to row `hi`, then deflates an
    /// infinite eigenvalue at `(hi, hi)` by zeroing `S(hi, hi-1)`.
    fn deflate_infinite(&mut self, j: usize, lo: usize, hi: usize) {
        self.t[(j, j)] = Complex64::new(0.0, 0.0);
        for k in j..hi {
            // Move the zero one step down: eliminate T(k+1, k+1) against
            // T(k, k+1); the rotated T keeps column k zero in rows k, k+1.
            let (c, s, _r) = rotg(self.t[(k, k + 1)], self.t[(k + 1, k + 1)]);
            self.left(k, c, s, k.max(1) - 1, k);
            self.t[(k + 1, k + 1)] = Complex64::new(0.0, 0.0);
            // The left rotation put a bulge in S(k+1, k-1); clear it.
            if k > lo {
                let (c2, s2, _r2) = rotg(self.s[(k + 1, k)], self.s[(k + 1, k - 1)]);
                self.right(k - 1, c2, s2, k + 2, k + 1);
                self.s[(k + 1, k - 1)] = Complex64::new(0.0, 0.0);
            }
        }
        // T(hi, hi) is now zero; zero S(hi, hi-1) with a column rotation so
        // the pair (S(hi,hi), 0) deflates as an infinite eigenvalue.
        if hi > lo {
            let (c, s, _r) = rotg(self.s[(hi, hi)], self.s[(hi, hi - 1)]);
            self.right(hi - 1, c, s, self.n.min(hi + 1), hi);
            self.s[(hi, hi - 1)] = Complex64::new(0.0, 0.0);
        }
    }

    /// Wilkinson-style shift: the generalized eigenvalue of the trailing 2x2
    /// block of the pencil closest to the bottom-corner ratio.
    fn shift(&self, hi: usize) -> Complex64 {
        let (s11, s12) = (self.s[(hi - 1, hi - 1)], self.s[(hi - 1, hi)]);
        let (s21, s22) = (self.s[(hi, hi - 1)], self.s[(hi, hi)]);
        let (t11, t12) = (self.t[(hi - 1, hi - 1)], self.t[(hi - 1, hi)]);
        let t22 = self.t[(hi, hi)];
        let a = t11 * t22;
        let b = -(s11 * t22 + s22 * t11 - t12 * s21);
        let c = s11 * s22 - s12 * s21;
        let disc = (b * b - a * c * 4.0).sqrt();
        let q = if (b + disc).norm() >= (b - disc).norm() {
            -(b + disc) * 0.5
        } else {
            -(b - disc) * 0.5
        };
        let mut roots = Vec::with_capacity(2);
        if a.norm() > 0.0 {
            let r = q / a;
            if r.is_finite() {
                roots.push(r);
            }
        }
        if q.norm() > 0.0 {
            let r = c / q;
            if r.is_finite() {
                roots.push(r);
            }
        }
        let fallback = if t22.norm() > 0.0 {
            s22 / t22
        } else {
            Complex64::new(0.0, 0.0)
        };
        if roots.is_empty() {
            return fallback;
        }
        if t22.norm() == 0.0 {
            return roots[0];
        }
        let target = s22 / t22;
        roots
            .into_iter()
            .min_by(|x, y| (x - target).norm().total_cmp(&(y - target).norm()))
            .unwrap()
    }

    /// One implicit single-shift sweep on the active block `lo..=hi`.
    fn sweep(&mut self, lo: usize, hi: usize, shift: Complex64) {
        for k in lo..hi {
            // Left rotation: at k = lo it reflects the shift polynomial's
            // first column, afterwards it chases the bulge S(k+1, k-1).
            let (c, s) = if k == lo {
                let x1 = self.s[(lo, lo)] - shift * self.t[(lo, lo)];
                let x2 = self.s[(lo + 1, lo)];
                let (c, s, _) = rotg(x1, x2);
                (c, s)
            } else {
                let (c, s, r) = rotg(self.s[(k, k - 1)], self.s[(k + 1, k - 1)]);
                self.s[(k, k - 1)] = r;
                self.s[(k + 1, k - 1)] = Complex64::new(0.0, 0.0);
                (c, s)
            };
            self.left(k, c, s, k, k);
            // Restore T: eliminate the fill T(k+1, k) against T(k+1, k+1).
            let (c2, s2, r2) = rotg(self.t[(k + 1, k + 1)], self.t[(k + 1, k)]);
            rot_cols(&mut self.s, k, k + 1, c2, s2, self.n.min(k + 3));
            rot_cols(&mut self.t, k, k + 1, c2, s2, k + 1);
            self.t[(k + 1, k)] = Complex64::new(0.0, 0.0);
            self.t[(k + 1, k + 1)] = r2;
            rot_cols(&mut self.z, k, k + 1, c2, s2, self.n);
        }
    }
}

/// Computes the generalized Schur decomposition of a square pencil.
pub fn generalized_schur(a: &DenseMatrix, b: &DenseMatrix) -> Result<SchurPair, LinalgError> {
    assert!(a.is_square() && b.is_square(), "pencil must be square");
    assert_eq!(a.rows(), b.rows(), "pencil order mismatch");
    let n = a.rows();
    let mut w = QzWork {
        s: a.clone(),
        t: b.clone(),
        q: DenseMatrix::identity(n),
        z: DenseMatrix::identity(n),
        n,
        snorm: a.fro_norm(),
        tnorm: b.fro_norm(),
    };
    if n > 1 {
        w.triangularize_t();
        w.hessenbergize_s();
        qz_iterate(&mut w)?;
    }
    let (alphas, betas) = sorted_pairs(&w.s, &w.t);
    Ok(SchurPair {
        s: w.s,
        t: w.t,
        q: w.q,
        z: w.z,
        alphas,
        betas,
    })
}

fn qz_iterate(w: &mut QzWork) -> Result<(), LinalgError> {
    let n = w.n;
    let max_sweeps = QZ_MAX_SWEEPS_PER_ORDER * n;
    let mut total_sweeps = 0usize;
    let mut ilast = n - 1;
    let mut stagnation = 0usize;
    'deflate: loop {
        if ilast == 0 {
            return Ok(());
        }
        // Kill negligible subdiagonals, then strip converged 1x1 blocks.
        for i in 1..=ilast {
            if w.s[(i, i - 1)].norm_sqr() != 0.0 && w.s[(i, i - 1)].norm() <= w.subdiag_tol(i) {
                w.s[(i, i - 1)] = Complex64::new(0.0, 0.0);
            }
        }
        while ilast > 0 && w.s[(ilast, ilast - 1)].norm_sqr() == 0.0 {
            ilast -= 1;
            stagnation = 0;
            if ilast == 0 {
                return Ok(());
            }
        }
        // Active block [ifirst..=ilast] has nonzero subdiagonals throughout.
        let mut ifirst = ilast;
        while ifirst > 0 && w.s[(ifirst, ifirst - 1)].norm_sqr() != 0.0 {
            ifirst -= 1;
        }
        // Deflate infinite eigenvalues before sweeping.
        for j in ifirst..=ilast {
            if w.t_diag_negligible(j) {
                w.deflate_infinite(j, ifirst, ilast);
                ilast -= 1;
                stagnation = 0;
                continue 'deflate;
            }
        }
        if total_sweeps >= max_sweeps {
            return Err(LinalgError::NoConvergence {
                sweeps: max_sweeps,
                order: n,
            });
        }
        let shift = if stagnation > 0 && stagnation % 15 == 0 {
            // Exceptional shift to break symmetric stalls.
            let kick = w.s[(ilast, ilast - 1)].norm();
            let t22 = w.t[(ilast, ilast)];
            w.s[(ilast, ilast)] / t22 + Complex64::new(1.0, 0.5) * (kick / t22.norm())
        } else {
            w.shift(ilast)
        };
        w.sweep(ifirst, ilast, shift);
        total_sweeps += 1;
        stagnation += 1;
    }
}

/// Eigenvalue pairs from the triangular diagonals, sorted by modulus then
/// argument of `alpha/beta`; infinite pairs (tiny `beta`) go last, 0/0 pairs
/// after those.
fn sorted_pairs(s: &DenseMatrix, t: &DenseMatrix) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = s.rows();
    let sa = s.fro_norm().max(f64::MIN_POSITIVE);
    let sb = t.fro_norm().max(f64::MIN_POSITIVE);
    let mut idx: Vec<usize> = (0..n).collect();
    let class = |i: usize| -> (u8, f64, f64) {
        let alpha = s[(i, i)];
        let beta = t[(i, i)];
        let a_tiny = alpha.norm() <= 1e-12 * sa;
        let b_tiny = beta.norm() <= 1e-12 * sb;
        if a_tiny && b_tiny {
            (2, 0.0, 0.0)
        } else if b_tiny {
            (1, alpha.norm(), alpha.arg())
        } else {
            let lam = alpha / beta;
            (0, lam.norm(), lam.arg())
        }
    };
    idx.sort_by(|&i, &j| {
        let (ci, mi, ai) = class(i);
        let (cj, mj, aj) = class(j);
        ci.cmp(&cj)
            .then(mi.total_cmp(&mj))
            .then(ai.total_cmp(&aj))
            .then(i.cmp(&j))
    });
    let alphas = idx.iter().map(|&i| s[(i, i)]).collect();
    let betas = idx.iter().map(|&i| t[(i, i)]).collect();
    (alphas, betas)
}

/// Solves `(S - lambda T) y = 0` for upper triangular `S`, `T`, pinning
/// `y[pin] = 1` and `y[j] = 0` for `j > pin`. With `lambda = None` the
/// system is `T y = 0`, which extracts eigenvectors for infinite pairs.
pub(crate) fn triangular_null_vector(
    s: &DenseMatrix,
    t: &DenseMatrix,
    lambda: Option<Complex64>,
    pin: usize,
) -> Vec<Complex64> {
    let n = s.rows();
    let entry = |i: usize, j: usize| match lambda {
        Some(l) => s[(i, j)] - l * t[(i, j)],
        None => t[(i, j)],
    };
    let mut scale = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            scale = scale.max(entry(i, j).norm());
        }
    }
    let floor = QZ_EPS * scale.max(f64::MIN_POSITIVE);
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    y[pin] = Complex64::new(1.0, 0.0);
    for j in (0..pin).rev() {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in j + 1..=pin {
            acc += entry(j, k) * y[k];
        }
        let mut d = entry(j, j);
        if d.norm() < floor {
            d = Complex64::new(floor, 0.0);
        }
        y[j] = -acc / d;
        let m = y[j].norm();
        if m > 1e120 {
            // Guard against overflow in pathologically graded triangles;
            // uniform rescaling keeps the partial vector a null direction.
            let inv = m.recip();
            for v in y[j..=pin].iter_mut() {
                *v = v.scale(inv);
            }
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rand_mat(n: usize, seed: &mut u64) -> DenseMatrix {
        // Small deterministic LCG; quality is irrelevant here.
        let next = move |s: &mut u64| {
            *s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((*s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        DenseMatrix::from_fn(n, n, |_, _| c(next(seed), next(seed)))
    }

    #[test]
    fn rotg_zeroes_second_entry() {
        let (cc, s, r) = rotg(c(1.0, 2.0), c(-0.5, 0.7));
        let y2 = -s.conj() * c(1.0, 2.0) + c(-0.5, 0.7).scale(cc);
        assert!(y2.norm() < 1e-15);
        let y1 = c(1.0, 2.0).scale(cc) + s * c(-0.5, 0.7);
        assert!((y1 - r).norm() < 1e-15);
        assert!((cc * cc + s.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn schur_reconstructs_random_pencil() {
        let mut seed = 0x9e3779b97f4a7c15;
        for n in [1usize, 2, 3, 5, 8, 13] {
            let a = rand_mat(n, &mut seed);
            let b = rand_mat(n, &mut seed);
            let f = generalized_schur(&a, &b).unwrap();
            let (ra, rb) = f.residual(&a, &b);
            let tol = 1e-12 * (n as f64);
            assert!(ra <= tol * a.fro_norm(), "n={n}: |QSZ^H-A| = {ra:e}");
            assert!(rb <= tol * b.fro_norm(), "n={n}: |QTZ^H-B| = {rb:e}");
            // S is triangular (it deflated fully), T is triangular.
            for j in 0..n {
                for i in j + 1..n {
                    assert_eq!(f.t[(i, j)].norm(), 0.0);
                    assert!(f.s[(i, j)].norm() <= 1e-13 * a.fro_norm().max(1.0));
                }
            }
            // Q, Z unitary.
            let qtq = &f.q.adjoint() * &f.q;
            let ztz = &f.z.adjoint() * &f.z;
            assert!((&qtq - &DenseMatrix::identity(n)).fro_norm() < 1e-13 * n as f64);
            assert!((&ztz - &DenseMatrix::identity(n)).fro_norm() < 1e-13 * n as f64);
        }
    }

    #[test]
    fn eigenvalues_of_triangular_pencil_are_diagonal_ratios() {
        // Upper triangular inputs: eigenvalues are known exactly.
        let a = DenseMatrix::from_rows(&[
            vec![c(2.0, 1.0), c(5.0, 0.0), c(1.0, 1.0)],
            vec![c(0.0, 0.0), c(-3.0, 0.5), c(2.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(0.5, -2.0)],
        ]);
        let b = DenseMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.3, 0.0), c(0.0, 0.2)],
            vec![c(0.0, 0.0), c(2.0, 0.0), c(0.1, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        ]);
        let f = generalized_schur(&a, &b).unwrap();
        let mut expected: Vec<Complex64> = (0..3).map(|i| a[(i, i)] / b[(i, i)]).collect();
        expected.sort_by(|x, y| x.norm().total_cmp(&y.norm()).then(x.arg().total_cmp(&y.arg())));
        for (i, e) in expected.iter().enumerate() {
            let got = f.alphas[i] / f.betas[i];
            assert!((got - e).norm() < 1e-12 * e.norm().max(1.0), "{got} vs {e}");
        }
    }

    #[test]
    fn singular_b_yields_infinite_pair() {
        // B has rank 2; exactly one infinite eigenvalue expected.
        let mut seed = 42;
        let a = rand_mat(3, &mut seed);
        let g = rand_mat(3, &mut seed);
        // Project B's last direction away to force singularity.
        let mut b = g.clone();
        let col0 = b.col(0).to_vec();
        b.col_mut(2).copy_from_slice(&col0.iter().map(|z| z.scale(2.0)).collect::<Vec<_>>());
        let f = generalized_schur(&a, &b).unwrap();
        let (ra, rb) = f.residual(&a, &b);
        assert!(ra < 1e-12 && rb < 1e-12);
        let sb = b.fro_norm();
        let infinite = (0..3)
            .filter(|&i| f.betas[i].norm() <= 1e-10 * sb)
            .count();
        assert_eq!(infinite, 1);
    }

    #[test]
    fn hermitian_definite_pencil_gets_real_eigenvalues() {
        let mut seed = 7;
        let n = 6;
        let g = rand_mat(n, &mut seed);
        let h = rand_mat(n, &mut seed);
        let a = &g + &g.adjoint();
        let b = &h * &h.adjoint();
        let f = generalized_schur(&a, &b).unwrap();
        for i in 0..n {
            let lam = f.alphas[i] / f.betas[i];
            assert!(
                lam.im.abs() <= 1e-10 * (1.0 + lam.re.abs()),
                "nonreal eigenvalue {lam} of a Hermitian definite pencil"
            );
        }
    }
}
