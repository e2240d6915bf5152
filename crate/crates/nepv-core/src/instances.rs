//! Hand-sized problem instances with fully known behavior.
//!
//! Both are of order two and appear throughout the test suites: one attains
//! the maximal count of four solutions, the other carries a real root of the
//! eliminated polynomial system that is not an eigenvalue and must be caught
//! by the definiteness screen.

// Table values are frozen at full generator precision.
#![allow(clippy::excessive_precision)]

use num_complex::Complex64;

use crate::linalg::DenseMatrix;
use crate::problem::NepvProblem;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn herm2(d0: f64, off: Complex64, d1: f64) -> DenseMatrix {
    DenseMatrix::from_rows(&[vec![c(d0, 0.0), off], vec![off.conj(), c(d1, 0.0)]])
}

/// Order-two instance whose four solutions are tabulated in
/// [`four_solution_table`]; the generic bound `n^2 = 4` is attained.
pub fn four_solution_instance() -> NepvProblem {
    NepvProblem::new(
        herm2(4.0, c(3.0, 1.0), 1.0),
        herm2(16.0, c(2.0, -2.0), 9.0),
        herm2(-8.0, c(5.0, -10.0), -17.0),
        herm2(6.0, c(-1.0, 18.0), 4.0),
        herm2(6.0, c(2.0, 1.0), 4.0),
    )
    .expect("fixed instance is well formed")
}

/// A known solution of [`four_solution_instance`] to machine precision.
///
/// The values were obtained by secant iteration on the scalar fixed-point
/// condition `mu(v(mu)) = mu` along the eigenvalue branch of `(A - mu C, B)`,
/// starting from coarse published approximations; each refined triple leaves
/// a problem residual below `1e-15`.
#[derive(Debug, Clone, Copy)]
pub struct KnownSolution {
    pub lambda: f64,
    pub mu: f64,
    pub v: [Complex64; 2],
}

/// All four solutions of [`four_solution_instance`], eigenvectors in unit
/// Euclidean norm up to phase.
pub fn four_solution_table() -> [KnownSolution; 4] {
    [
        KnownSolution {
            lambda: 11.9362655806196454,
            mu: 4.01642023950707205,
            v: [
                c(4.38039551739443853e-2, 4.42424342064544174e-1),
                c(7.07255749596751970e-1, -5.49664642961697369e-1),
            ],
        },
        KnownSolution {
            lambda: -6.83820379011931961e-2,
            mu: 2.06865150304427724e-2,
            v: [
                c(5.20917145047991137e-1, -2.90687986292306744e-2),
                c(-7.87453952254246747e-1, 3.28202081072728968e-1),
            ],
        },
        KnownSolution {
            lambda: 1.90559700401294274e-1,
            mu: -1.42293686423395549,
            v: [
                c(7.83578810086357658e-1, 3.01297730920341178e-1),
                c(1.50807962464462292e-1, 5.21997015492635885e-1),
            ],
        },
        KnownSolution {
            lambda: 2.61236636398144095e-1,
            mu: -3.50983056894572709e-1,
            v: [
                c(3.96293274958683939e-1, -7.43668650182541913e-1),
                c(4.31168608906073114e-1, -3.22493735834045614e-1),
            ],
        },
    ]
}

/// Order-two instance for which `(lambda, mu) = (1, -2)` solves both
/// polynomial equations while `M(1, -2)` vanishes identically and the
/// restricted `S = P + 2Q` is positive definite, so no eigenvector exists
/// there. Exercises the rejection path of the definiteness screen.
pub fn rejected_root_instance() -> NepvProblem {
    NepvProblem::new(
        herm2(8.0, c(-9.0, -6.0), -4.0),
        herm2(8.0, c(3.0, 2.0), 8.0),
        herm2(0.0, c(6.0, 4.0), 6.0),
        herm2(-4.0, c(6.0, 6.0), 0.0),
        herm2(6.0, c(-3.0, -2.0), 3.0),
    )
    .expect("fixed instance is well formed")
}
