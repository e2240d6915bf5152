#![allow(clippy::manual_is_multiple_of, clippy::needless_range_loop)]

use num_complex::Complex64;

use super::DenseMatrix;

/// LU factorization with partial pivoting, `P A = L U`.
pub struct LuFactors {
    lu: DenseMatrix,
    piv: Vec<usize>,
    swaps: usize,
}

impl LuFactors {
    pub fn new(a: &DenseMatrix) -> Self {
        assert!(a.is_square());
        let n = a.rows();
        let mut lu = a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let mut imax = k;
            let mut vmax = lu[(k, k)].norm_sqr();
            for i in k + 1..n {
                let v = lu[(i, k)].norm_sqr();
                if v > vmax {
                    vmax = v;
                    imax = i;
                }
            }
            if imax != k {
                lu.swap_rows(imax, k);
                piv.swap(imax, k);
                swaps += 1;
            }
            let pivot = lu[(k, k)];
            if pivot.norm_sqr() == 0.0 {
                continue;
            }
            for i in k + 1..n {
                let m = lu[(i, k)] / pivot;
                lu[(i, k)] = m;
                if m.norm_sqr() == 0.0 {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= m * u;
                }
            }
        }
        LuFactors { lu, piv, swaps }
    }

    pub fn det(&self) -> Complex64 {
        let n = self.lu.rows();
        let mut d = Complex64::new(if self.swaps % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
        for i in 0..n {
            d *= self.lu[(i, i)];
        }
        d
    }

    /// Smallest pivot modulus relative to the largest; a crude singularity
    /// indicator that is cheap because the factorization is already done.
    pub fn pivot_ratio(&self) -> f64 {
        let n = self.lu.rows();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..n {
            let p = self.lu[(i, i)].norm();
            lo = lo.min(p);
            hi = hi.max(p);
        }
        if hi == 0.0 {
            0.0
        } else {
            lo / hi
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n);
        let mut x: Vec<Complex64> = (0..n).map(|i| b[self.piv[i]]).collect();
        for k in 0..n {
            let xk = x[k];
            if xk.norm_sqr() == 0.0 {
                continue;
            }
            for i in k + 1..n {
                let l = self.lu[(i, k)];
                x[i] -= l * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..n {
                s -= self.lu[(k, j)] * x[j];
            }
            x[k] = s / self.lu[(k, k)];
        }
        x
    }

    pub fn solve_mat(&self, b: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let xj = self.solve(b.col(j));
            out.col_mut(j).copy_from_slice(&xj);
        }
        out
    }

    pub fn inverse(&self) -> DenseMatrix {
        self.solve_mat(&DenseMatrix::identity(self.lu.rows()))
    }
}
