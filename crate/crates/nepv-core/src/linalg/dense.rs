use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

/// Dense complex matrix, column-major.
///
/// Shapes are part of every operation's contract; mismatches panic. Entries
/// are not checked for finiteness here, the problem-level validators do that
/// at the boundaries where data enters the system.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        DenseMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = DenseMatrix::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds from a column-major slice of length `rows * cols`.
    pub fn from_col_major(rows: usize, cols: usize, data: &[Complex64]) -> Self {
        assert_eq!(data.len(), rows * cols, "column-major data length mismatch");
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        DenseMatrix {
            rows,
            cols,
            data: data.to_vec(),
        }
    }

    /// Builds from row slices; handy for literal matrices in tests.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        assert!(r >= 1, "need at least one row");
        let c = rows[0].len();
        DenseMatrix::from_fn(r, c, |i, j| {
            assert_eq!(rows[i].len(), c, "ragged rows");
            rows[i][j]
        })
    }

    pub fn from_diag(d: &[Complex64]) -> Self {
        let mut m = DenseMatrix::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Interprets a vector as a single-column matrix.
    pub fn column(v: &[Complex64]) -> Self {
        DenseMatrix::from_col_major(v.len(), 1, v)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn col(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Borrows two distinct columns mutably at once.
    pub fn cols_mut_pair(&mut self, j1: usize, j2: usize) -> (&mut [Complex64], &mut [Complex64]) {
        assert_ne!(j1, j2);
        let r = self.rows;
        if j1 < j2 {
            let (lo, hi) = self.data.split_at_mut(j2 * r);
            (&mut lo[j1 * r..j1 * r + r], &mut hi[..r])
        } else {
            let (lo, hi) = self.data.split_at_mut(j1 * r);
            let second = &mut lo[j2 * r..j2 * r + r];
            (&mut hi[..r], second)
        }
    }

    pub fn swap_cols(&mut self, j1: usize, j2: usize) {
        if j1 == j2 {
            return;
        }
        let r = self.rows;
        for i in 0..r {
            self.data.swap(j1 * r + i, j2 * r + i);
        }
    }

    pub fn swap_rows(&mut self, i1: usize, i2: usize) {
        if i1 == i2 {
            return;
        }
        let r = self.rows;
        for j in 0..self.cols {
            self.data.swap(j * r + i1, j * r + i2);
        }
    }

    pub fn transpose(&self) -> Self {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conjugate(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| s * z)
    }

    /// Copies `block` into `self` with top-left corner at `(i0, j0)`.
    pub fn set_block(&mut self, i0: usize, j0: usize, block: &DenseMatrix) {
        assert!(i0 + block.rows <= self.rows && j0 + block.cols <= self.cols);
        for j in 0..block.cols {
            let src = block.col(j);
            let dst = &mut self.col_mut(j0 + j)[i0..i0 + block.rows];
            dst.copy_from_slice(src);
        }
    }

    pub fn block(&self, i0: usize, j0: usize, rows: usize, cols: usize) -> DenseMatrix {
        assert!(i0 + rows <= self.rows && j0 + cols <= self.cols);
        DenseMatrix::from_fn(rows, cols, |i, j| self[(i0 + i, j0 + j)])
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm of `self - self^H`; zero iff exactly Hermitian.
    pub fn hermitian_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut s = 0.0;
        for j in 0..self.cols {
            for i in 0..=j {
                let d = self[(i, j)] - self[(j, i)].conj();
                let w = if i == j { 1.0 } else { 2.0 };
                s += w * d.norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Matrix-vector product `self * x`, accumulated column-wise.
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        let mut y = vec![Complex64::new(0.0, 0.0); self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj.norm_sqr() == 0.0 {
                continue;
            }
            let cj = self.col(j);
            for i in 0..self.rows {
                y[i] += cj[i] * xj;
            }
        }
        y
    }

    /// `self^H * x`.
    pub fn adjoint_matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.rows, x.len(), "matvec dimension mismatch");
        (0..self.cols).map(|j| vdot(self.col(j), x)).collect()
    }

    /// Matrix product; a gaxpy kernel that skips bitwise-zero multipliers,
    /// which makes products against identity-like or banded factors cheap.
    /// Four output columns advance per pass so every streamed column of
    /// `self` is reused from cache; one pass per column is memory-bound on
    /// operands beyond the last-level cache. The innermost update is spelled
    /// out in real arithmetic, which vectorizes where the complex `mul` call
    /// does not.
    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let rows = self.rows;
        let mut out = DenseMatrix::zeros(rows, rhs.cols);
        let mut j0 = 0;
        while j0 < rhs.cols {
            let jb = (rhs.cols - j0).min(4);
            let ob = &mut out.data[j0 * rows..(j0 + jb) * rows];
            for k in 0..self.cols {
                let ak = self.col(k);
                for (c, oc) in ob.chunks_exact_mut(rows).enumerate() {
                    let bkj = rhs[(k, j0 + c)];
                    if bkj.norm_sqr() == 0.0 {
                        continue;
                    }
                    let (br, bi) = (bkj.re, bkj.im);
                    for (o, a) in oc.iter_mut().zip(ak) {
                        o.re += a.re * br - a.im * bi;
                        o.im += a.re * bi + a.im * br;
                    }
                }
            }
            j0 += jb;
        }
        out
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

impl Add for &DenseMatrix {
    type Output = DenseMatrix;

    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;

    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &DenseMatrix {
    type Output = DenseMatrix;

    fn neg(self) -> DenseMatrix {
        self.map(|z| -z)
    }
}

impl Mul for &DenseMatrix {
    type Output = DenseMatrix;

    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        let rmax = self.rows.min(8);
        let cmax = self.cols.min(8);
        for i in 0..rmax {
            write!(f, "  ")?;
            for j in 0..cmax {
                let z = self[(i, j)];
                write!(f, "{:>9.3e}{:+.3e}i ", z.re, z.im)?;
            }
            writeln!(f, "{}", if cmax < self.cols { "..." } else { "" })?;
        }
        if rmax < self.rows {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

/// Hermitian matrix with the property enforced exactly: the stored entries
/// satisfy `h[i][j] == conj(h[j][i])` bitwise and real diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    mat: DenseMatrix,
}

impl HermitianMatrix {
    /// Accepts a matrix already Hermitian to within `rtol * max_abs` and
    /// replaces it by its Hermitian part `(M + M^H) / 2`, stored exactly.
    pub fn new(mat: DenseMatrix, rtol: f64) -> Option<Self> {
        if !mat.is_square() {
            return None;
        }
        let defect = mat.hermitian_defect();
        if defect > rtol * mat.fro_norm().max(f64::MIN_POSITIVE) {
            return None;
        }
        Some(Self::enforce(mat))
    }

    /// Replaces `mat` by its Hermitian part without any tolerance check.
    pub fn enforce(mat: DenseMatrix) -> Self {
        assert!(mat.is_square());
        let n = mat.rows();
        let mut h = DenseMatrix::zeros(n, n);
        for j in 0..n {
            h[(j, j)] = Complex64::new(mat[(j, j)].re, 0.0);
            for i in 0..j {
                let v = (mat[(i, j)] + mat[(j, i)].conj()).scale(0.5);
                h[(i, j)] = v;
                h[(j, i)] = v.conj();
            }
        }
        HermitianMatrix { mat: h }
    }

    /// Wraps a matrix that is Hermitian by construction; debug-checked.
    pub fn from_exact(mat: DenseMatrix) -> Self {
        debug_assert_eq!(mat.hermitian_defect(), 0.0, "matrix not exactly Hermitian");
        HermitianMatrix { mat }
    }

    pub fn order(&self) -> usize {
        self.mat.rows()
    }

    pub fn as_dense(&self) -> &DenseMatrix {
        &self.mat
    }

    pub fn into_dense(self) -> DenseMatrix {
        self.mat
    }

    /// Real quadratic form `x^H M x`; the imaginary part cancels exactly in
    /// the pairwise summation below.
    pub fn quadratic_form(&self, x: &[Complex64]) -> f64 {
        let n = self.order();
        assert_eq!(x.len(), n);
        let mut s = 0.0;
        for j in 0..n {
            s += self.mat[(j, j)].re * x[j].norm_sqr();
            for i in 0..j {
                // conj(x_i) m_ij x_j + conj(x_j) conj(m_ij) x_i = 2 Re(...)
                s += 2.0 * (x[i].conj() * self.mat[(i, j)] * x[j]).re;
            }
        }
        s
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = Complex64;

    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.mat[idx]
    }
}

/// Conjugated dot product `x^H y`.
pub fn vdot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(&a, &b)| a.conj() * b).sum()
}

/// Euclidean norm.
pub fn vnorm2(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `y += a * x`.
pub fn vaxpy(a: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `x *= a`.
pub fn vscale(a: Complex64, x: &mut [Complex64]) {
    for xi in x.iter_mut() {
        *xi *= a;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn matmul_matches_hand_computation() {
        let a = DenseMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 1.0)],
            vec![c(0.0, -1.0), c(3.0, 0.0)],
        ]);
        let b = DenseMatrix::from_rows(&[
            vec![c(1.0, 1.0), c(0.0, 0.0)],
            vec![c(2.0, 0.0), c(1.0, -1.0)],
        ]);
        let p = &a * &b;
        assert_eq!(p[(0, 0)], c(1.0, 1.0) + c(4.0, 2.0));
        assert_eq!(p[(0, 1)], c(2.0, 1.0) * c(1.0, -1.0));
        assert_eq!(p[(1, 0)], c(0.0, -1.0) * c(1.0, 1.0) + c(6.0, 0.0));
        assert_eq!(p[(1, 1)], c(3.0, 0.0) * c(1.0, -1.0));
    }

    #[test]
    fn adjoint_and_transpose() {
        let a = DenseMatrix::from_rows(&[vec![c(1.0, 2.0), c(3.0, -1.0)]]);
        let at = a.transpose();
        let ah = a.adjoint();
        assert_eq!(at.rows(), 2);
        assert_eq!(at[(1, 0)], c(3.0, -1.0));
        assert_eq!(ah[(1, 0)], c(3.0, 1.0));
    }

    #[test]
    fn hermitian_enforce_is_exact() {
        let m = DenseMatrix::from_rows(&[
            vec![c(1.0, 0.3), c(2.0, 1.0)],
            vec![c(2.5, -0.5), c(4.0, -0.2)],
        ]);
        let h = HermitianMatrix::enforce(m);
        assert_eq!(h.as_dense().hermitian_defect(), 0.0);
        assert_eq!(h[(0, 0)].im, 0.0);
        assert_eq!(h[(0, 1)], h[(1, 0)].conj());
    }

    #[test]
    fn quadratic_form_is_real_part_exact() {
        let h = HermitianMatrix::enforce(DenseMatrix::from_rows(&[
            vec![c(2.0, 0.0), c(1.0, 3.0)],
            vec![c(1.0, -3.0), c(-1.0, 0.0)],
        ]));
        let x = [c(0.3, -0.7), c(1.1, 0.2)];
        let xhx = h.quadratic_form(&x);
        // Compare against the full complex evaluation.
        let hx = h.as_dense().matvec(&x);
        let full = vdot(&x, &hx);
        assert!((xhx - full.re).abs() <= 1e-14 * full.norm().max(1.0));
        assert!(full.im.abs() <= 1e-14);
    }

    #[test]
    fn cols_mut_pair_both_orders() {
        let mut m = DenseMatrix::identity(3);
        {
            let (c0, c2) = m.cols_mut_pair(0, 2);
            c0[1] = c(5.0, 0.0);
            c2[0] = c(7.0, 0.0);
        }
        assert_eq!(m[(1, 0)], c(5.0, 0.0));
        assert_eq!(m[(0, 2)], c(7.0, 0.0));
        let (c2, c0) = m.cols_mut_pair(2, 0);
        assert_eq!(c0[1], c(5.0, 0.0));
        assert_eq!(c2[0], c(7.0, 0.0));
    }
}
