use num_complex::Complex64;

use super::cholesky::{solve_lower, solve_lower_adjoint};
use super::qz::triangular_null_vector;
use super::{
    cholesky, generalized_schur, vnorm2, vscale, DenseMatrix, HermitianMatrix, LinalgError,
};

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian
/// matrix, by cyclic two-sided Jacobi rotations.
pub fn eig_hermitian(h: &HermitianMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = h.order();
    let mut a = h.as_dense().clone();
    let mut u = DenseMatrix::identity(n);
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let napq = apq.norm();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if napq <= 0.5 * f64::EPSILON * (app.abs() + aqq.abs()) || napq == 0.0 {
                    continue;
                }
                rotated = true;
                let phi = apq / napq;
                let tau = (aqq - app) / (2.0 * napq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J = [[c phi, s phi], [-s, c]]; apply A <- J^H A J, U <- U J.
                rotate_cols(&mut a, p, q, c, s, phi);
                rotate_rows(&mut a, p, q, c, s, phi);
                rotate_cols(&mut u, p, q, c, s, phi);
                // Clean the eliminated entry and keep the diagonal real.
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re).then(i.cmp(&j)));
    let vals = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vecs = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.col_mut(dst).copy_from_slice(u.col(src));
    }
    (vals, vecs)
}

fn rotate_cols(m: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64, phi: Complex64) {
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

fn rotate_rows(m: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64, phi: Complex64) {
    // Rows of J^H M: row_p <- c conj(phi) row_p - s row_q,
    //               row_q <- s conj(phi) row_p + c row_q.
    let jp = phi.conj().scale(c);
    let jq = phi.conj().scale(s);
    for j in 0..m.cols() {
        let x = m[(p, j)];
        let y = m[(q, j)];
        m[(p, j)] = jp * x - y.scale(s);
        m[(q, j)] = jq * x + y.scale(c);
    }
}

/// Eigenpairs of the Hermitian definite pencil `(A, B)` with `B` positive
/// definite: `A x = theta B x`, `theta` real ascending, `x^H B x = 1`.
pub fn hermitian_definite_eig(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
) -> Result<(Vec<f64>, DenseMatrix), LinalgError> {
    let n = a.order();
    assert_eq!(b.order(), n);
    let l = cholesky(b)?;
    // W = L^{-1} A L^{-H}, via two sets of triangular solves.
    let mut t = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let col = solve_lower(&l, a.as_dense().col(j));
        t.col_mut(j).copy_from_slice(&col);
    }
    let th = t.adjoint();
    let mut w = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let col = solve_lower(&l, th.col(j));
        w.col_mut(j).copy_from_slice(&col);
    }
    let w = HermitianMatrix::enforce(w);
    let (vals, u) = eig_hermitian(&w);
    let mut x = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let col = solve_lower_adjoint(&l, u.col(j));
        x.col_mut(j).copy_from_slice(&col);
    }
    Ok((vals, x))
}

/// One generalized eigenpair of a dense pencil.
#[derive(Clone, Debug, PartialEq)]
pub enum GepKind {
    Finite,
    Infinite,
    /// Both `alpha` and `beta` negligible: the pencil is singular at this
    /// index and the ratio carries no information.
    Indeterminate,
}

#[derive(Clone, Debug)]
pub struct GepPair {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub kind: GepKind,
    /// Unit 2-norm eigenvector (zero vector for indeterminate pairs).
    pub v: Vec<Complex64>,
}

impl GepPair {
    pub fn lambda(&self) -> Option<Complex64> {
        match self.kind {
            GepKind::Finite => Some(self.alpha / self.beta),
            _ => None,
        }
    }
}

/// All eigenpairs of the dense pencil `(A, B)` via the QZ decomposition.
///
/// Pairs are sorted by eigenvalue modulus then argument, finite first, then
/// infinite, then indeterminate. Fails with [`LinalgError::SingularPencil`]
/// when more than a tenth of the pairs are indeterminate.
pub fn dense_gep_eig(a: &DenseMatrix, b: &DenseMatrix) -> Result<Vec<GepPair>, LinalgError> {
    let pairs = dense_gep_eig_unchecked(a, b)?;
    let indeterminate = pairs.iter().filter(|p| p.kind == GepKind::Indeterminate).count();
    if indeterminate * 10 > a.rows() {
        return Err(LinalgError::SingularPencil {
            indeterminate,
            total: a.rows(),
        });
    }
    Ok(pairs)
}

/// Like [`dense_gep_eig`] but without the singular-pencil refusal: every
/// pair comes back, however many are indeterminate.  For callers that
/// expect a singular pencil and apply their own deflation policy.
pub fn dense_gep_eig_unchecked(
    a: &DenseMatrix,
    b: &DenseMatrix,
) -> Result<Vec<GepPair>, LinalgError> {
    let f = generalized_schur(a, b)?;
    let n = a.rows();
    let sa = a.fro_norm().max(f64::MIN_POSITIVE);
    let sb = b.fro_norm().max(f64::MIN_POSITIVE);
    let mut pairs = Vec::with_capacity(n);
    for i in 0..n {
        let alpha = f.s[(i, i)];
        let beta = f.t[(i, i)];
        let a_tiny = alpha.norm() <= 1e-12 * sa;
        let b_tiny = beta.norm() <= 1e-12 * sb;
        let kind = if a_tiny && b_tiny {
            GepKind::Indeterminate
        } else if b_tiny {
            GepKind::Infinite
        } else {
            GepKind::Finite
        };
        let v = match kind {
            GepKind::Finite => {
                let y = triangular_null_vector(&f.s, &f.t, Some(alpha / beta), i);
                f.z.matvec(&y)
            }
            GepKind::Infinite => {
                let y = triangular_null_vector(&f.s, &f.t, None, i);
                f.z.matvec(&y)
            }
            GepKind::Indeterminate => vec![Complex64::new(0.0, 0.0); n],
        };
        let mut v = v;
        normalize_with_phase(&mut v);
        pairs.push(GepPair {
            alpha,
            beta,
            kind,
            v,
        });
    }
    pairs.sort_by(|x, y| {
        let (cx, mx, ax) = gep_sort_key(x);
        let (cy, my, ay) = gep_sort_key(y);
        cx.cmp(&cy).then(mx.total_cmp(&my)).then(ax.total_cmp(&ay))
    });
    Ok(pairs)
}

fn gep_sort_key(p: &GepPair) -> (u8, f64, f64) {
    match p.kind {
        GepKind::Finite => {
            let l = p.alpha / p.beta;
            (0, l.norm(), l.arg())
        }
        GepKind::Infinite => (1, p.alpha.norm(), p.alpha.arg()),
        GepKind::Indeterminate => (2, 0.0, 0.0),
    }
}

/// Scales to unit 2-norm and rotates the phase so the largest-modulus entry
/// is real positive (ties broken by the lowest index).
pub fn normalize_with_phase(v: &mut [Complex64]) {
    let nrm = vnorm2(v);
    if nrm == 0.0 {
        return;
    }
    let mut imax = 0;
    let mut vmax = 0.0;
    for (i, z) in v.iter().enumerate() {
        let m = z.norm();
        if m > vmax * (1.0 + 1e-14) {
            vmax = m;
            imax = i;
        }
    }
    let piv = v[imax];
    let factor = piv.conj() / (piv.norm() * nrm);
    vscale(factor, v);
}
