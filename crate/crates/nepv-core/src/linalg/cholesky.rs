use num_complex::Complex64;

use super::{DenseMatrix, HermitianMatrix, LinalgError};

/// Cholesky factorization `H = L L^H` of a Hermitian positive definite
/// matrix; returns the lower triangular factor.
///
/// Fails with [`LinalgError::NotPositiveDefinite`] on the first nonpositive
/// (or nonfinite) pivot.
pub fn cholesky(h: &HermitianMatrix) -> Result<DenseMatrix, LinalgError> {
    let n = h.order();
    let a = h.as_dense();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L x = b` for lower triangular `L`.
pub(crate) fn solve_lower(l: &DenseMatrix, b: &[Complex64]) -> Vec<Complex64> {
    let n = l.rows();
    let mut x = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let lik = l[(i, k)];
            let xk = x[k];
            x[i] -= lik * xk;
        }
        x[i] /= l[(i, i)];
    }
    x
}

/// Solves `L^H x = b` for lower triangular `L`.
pub(crate) fn solve_lower_adjoint(l: &DenseMatrix, b: &[Complex64]) -> Vec<Complex64> {
    let n = l.rows();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        for k in i + 1..n {
            let lki = l[(k, i)].conj();
            let xk = x[k];
            x[i] -= lki * xk;
        }
        x[i] /= l[(i, i)].conj();
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn factorizes_spd() {
        // G G^H is Hermitian positive definite for invertible G.
        let g = DenseMatrix::from_rows(&[
            vec![c(2.0, 0.1), c(0.4, -0.3), c(0.0, 0.0)],
            vec![c(0.1, 0.9), c(3.0, 0.0), c(0.2, 0.2)],
            vec![c(-0.5, 0.0), c(0.0, 1.0), c(1.5, -0.4)],
        ]);
        let m = HermitianMatrix::enforce(&g * &g.adjoint());
        let l = cholesky(&m).unwrap();
        let rec = &l * &l.adjoint();
        let err = (&rec - m.as_dense()).fro_norm();
        assert!(err <= 1e-13 * 3.0 * m.as_dense().fro_norm());
        // Strictly lower triangular part of L^H must vanish.
        for j in 0..3 {
            for i in 0..j {
                assert_eq!(l[(i, j)], c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn rejects_indefinite() {
        let m = HermitianMatrix::enforce(DenseMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 0.0)],
            vec![c(2.0, 0.0), c(1.0, 0.0)],
        ]));
        match cholesky(&m) {
            Err(LinalgError::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn triangular_solves_invert_the_factor() {
        let g = DenseMatrix::from_rows(&[
            vec![c(1.5, 0.0), c(0.0, 0.0)],
            vec![c(0.3, -0.2), c(2.5, 0.0)],
        ]);
        let m = HermitianMatrix::enforce(&g * &g.adjoint());
        let l = cholesky(&m).unwrap();
        let b = [c(1.0, 2.0), c(-0.5, 0.7)];
        let y = solve_lower(&l, &b);
        let z = solve_lower_adjoint(&l, &y);
        // L L^H z = b.
        let back = m.as_dense().matvec(&z);
        for i in 0..2 {
            assert!((back[i] - b[i]).norm() < 1e-13);
        }
    }
}
