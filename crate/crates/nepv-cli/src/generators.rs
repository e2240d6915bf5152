//! The three experiment families: dense random, a discretized wave equation
//! with an eigenvector-dependent potential, and dense random with a low-rank
//! coefficient on the nonlinear term.

use nepv_core::linalg::{eig_hermitian, vaxpy, vdot, vnorm2, vscale, DenseMatrix, HermitianMatrix};
use nepv_core::linearization::{complex_gaussian, seeded_rng};
use nepv_core::problem::NepvProblem;
use nepv_core::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

fn symmetrized(g: &DenseMatrix) -> DenseMatrix {
    (g + &g.adjoint()).scale(Complex64::from(0.5))
}

/// Hermitian positive definite square root of `G G^H`.
fn hpd_sqrt(g: &DenseMatrix) -> DenseMatrix {
    let gram = HermitianMatrix::enforce(g * &g.adjoint());
    let (vals, u) = eig_hermitian(&gram);
    let scaled = DenseMatrix::from_fn(g.rows(), g.rows(), |i, j| {
        u[(i, j)] * vals[j].max(0.0).sqrt()
    });
    &scaled * &u.adjoint()
}

/// Modified Gram-Schmidt with reorthogonalization; the input columns are
/// Gaussian, hence full rank.
fn orthonormalized(g: &DenseMatrix) -> DenseMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(g.cols());
    for j in 0..g.cols() {
        let mut v = g.col(j).to_vec();
        for _ in 0..2 {
            for q in &cols {
                let h = vdot(q, &v);
                vaxpy(-h, q, &mut v);
            }
        }
        let norm = vnorm2(&v);
        assert!(norm > 0.0, "rank-deficient Gaussian draw");
        vscale(Complex64::from(1.0 / norm), &mut v);
        cols.push(v);
    }
    DenseMatrix::from_fn(g.rows(), g.cols(), |i, j| cols[j][i])
}

/// Dense random instance: `A`, `C`, `P` symmetrized complex Gaussian, `B`
/// and `Q` positive definite square roots of Gaussian Gram matrices.
pub fn gen_example1(n: usize, seed: u64) -> NepvProblem {
    assert!(n >= 2, "order must be at least 2");
    let mut rng = seeded_rng(seed);
    let a = symmetrized(&complex_gaussian(n, n, &mut rng));
    let b = hpd_sqrt(&complex_gaussian(n, n, &mut rng));
    let c = symmetrized(&complex_gaussian(n, n, &mut rng));
    let p = symmetrized(&complex_gaussian(n, n, &mut rng));
    let q = hpd_sqrt(&complex_gaussian(n, n, &mut rng));
    NepvProblem::new(a, b, c, p, q).expect("generated matrices are well formed")
}

/// Central-difference discretization of
///
/// ```text
/// -u'' + f(u) c(x) u = lambda u   on [-L/2, L/2],  u(+-L/2) = 0,
/// f(u) = integral of p(x) |u'(x)|^2,  p(x) = 5 cos(pi x / L),
/// c(x) = 1 - exp(-(10x - 1)^2 / 10),
/// ```
///
/// on `n` interior nodes of an equidistant mesh with `h = L / (n + 1)`. The
/// quadratic form of `P` approximates `f` by second-order differencing of
/// `u'` at the nodes, which makes `P` pentadiagonal with a zero first
/// off-diagonal; the boundary nodes enter through `p(x)` evaluated in closed
/// form. `B = Q = I` since the eigenvalue term and the normalization are
/// both plain Euclidean.
pub fn gen_example2(length: f64, n: usize) -> NepvProblem {
    assert!(n >= 4, "mesh needs at least 4 interior nodes");
    assert!(length > 0.0, "domain length must be positive");
    let h = length / (n as f64 + 1.0);
    let node = |i: usize| -0.5 * length + i as f64 * h;
    let c_of = |x: f64| 1.0 - (-(10.0 * x - 1.0).powi(2) / 10.0).exp();
    let p_of = |x: f64| 5.0 * (std::f64::consts::PI * x / length).cos();

    let mut a = DenseMatrix::zeros(n, n);
    let mut c = DenseMatrix::zeros(n, n);
    let mut p = DenseMatrix::zeros(n, n);
    let inv_h2 = 1.0 / (h * h);
    for k in 0..n {
        // Matrix row k corresponds to interior node x_{k+1}.
        a[(k, k)] = Complex64::from(2.0 * inv_h2);
        if k + 1 < n {
            a[(k, k + 1)] = Complex64::from(-inv_h2);
            a[(k + 1, k)] = Complex64::from(-inv_h2);
        }
        c[(k, k)] = Complex64::from(-c_of(node(k + 1)));
        p[(k, k)] = Complex64::from((p_of(node(k)) + p_of(node(k + 2))) * 0.25 * inv_h2);
        if k + 2 < n {
            let off = Complex64::from(-p_of(node(k + 2)) * 0.25 * inv_h2);
            p[(k, k + 2)] = off;
            p[(k + 2, k)] = off;
        }
    }
    let b = DenseMatrix::identity(n);
    let q = DenseMatrix::identity(n);
    NepvProblem::new(a, b, c, p, q).expect("discretization is well formed")
}

/// As [`gen_example1`] but with `C = G D G^H` of rank `r`: orthonormal
/// complex `G` and real Gaussian weights `D`, so `C` is Hermitian
/// indefinite of exactly rank `r` almost surely.
pub fn gen_example3(n: usize, r: usize, seed: u64) -> NepvProblem {
    assert!(n >= 2, "order must be at least 2");
    assert!(r + 1 < n, "rank must satisfy r < n - 1");
    let mut rng = seeded_rng(seed);
    let a = symmetrized(&complex_gaussian(n, n, &mut rng));
    let b = hpd_sqrt(&complex_gaussian(n, n, &mut rng));
    let c = if r == 0 {
        DenseMatrix::zeros(n, n)
    } else {
        let g = orthonormalized(&complex_gaussian(n, r, &mut rng));
        let weights: Vec<f64> = (0..r).map(|_| rng.sample(StandardNormal)).collect();
        let gw = DenseMatrix::from_fn(n, r, |i, j| g[(i, j)] * weights[j]);
        symmetrized(&(&gw * &g.adjoint()))
    };
    let p = symmetrized(&complex_gaussian(n, n, &mut rng));
    let q = hpd_sqrt(&complex_gaussian(n, n, &mut rng));
    NepvProblem::new(a, b, c, p, q).expect("generated matrices are well formed")
}
