use nepv_core::arnoldi::*;
use nepv_core::linalg::*;
use nepv_core::linearization::*;
use nepv_core::problem::*;
use num_complex::Complex64;
use std::time::Instant;

fn gen_example2(length: f64, n: usize) -> NepvProblem {
    let h = length / (n + 1) as f64;
    let node = |i: usize| -0.5 * length + i as f64 * h;
    let c_of = |x: f64| 1.0 - (-(10.0 * x - 1.0).powi(2) / 10.0).exp();
    let p_of = |x: f64| 5.0 * (std::f64::consts::PI * x / length).cos();
    let mut a = DenseMatrix::zeros(n, n);
    let mut c = DenseMatrix::zeros(n, n);
    let mut p = DenseMatrix::zeros(n, n);
    for k in 0..n {
        a[(k, k)] = Complex64::from(2.0 / (h * h));
        if k + 1 < n {
            a[(k, k + 1)] = Complex64::from(-1.0 / (h * h));
            a[(k + 1, k)] = Complex64::from(-1.0 / (h * h));
        }
        c[(k, k)] = Complex64::from(-c_of(node(k + 1)));
        p[(k, k)] = Complex64::from((p_of(node(k)) + p_of(node(k + 2))) * 0.25 / (h * h));
        if k + 2 < n {
            let v = Complex64::from(-p_of(node(k + 2)) * 0.25 / (h * h));
            p[(k, k + 2)] = v;
            p[(k + 2, k)] = v;
        }
    }
    NepvProblem::new(a, DenseMatrix::identity(n), c, p, DenseMatrix::identity(n)).unwrap()
}

fn main() {
    let n = 256usize;
    let problem = gen_example2(2.0, n);
    let t = Instant::now();
    let lin = build_linearization(&problem, &RSpec::Random { seed: 0 }).unwrap();
    println!("linearize: {:.2?}", t.elapsed());
    let t = Instant::now();
    let solver = ShiftedSolver::new(&lin, Complex64::from(50.0)).unwrap();
    println!("schur setup: {:.2?}", t.elapsed());
    let z0 = random_start_in_z(n, 0);
    let d0 = lin.delta(Delta::Delta0).apply(&z0).unwrap();
    let t = Instant::now();
    let mut z = d0.clone();
    for _ in 0..10 {
        z = solver.solve(&z).unwrap();
        let nrm = z.norm();
        let inv = Complex64::from(1.0 / nrm);
        for v in z.as_mut_slice() {
            *v *= inv;
        }
    }
    println!("10 solves: {:.2?}  ({:.0} ms each)", t.elapsed(), t.elapsed().as_millis() as f64 / 10.0);
    let t = Instant::now();
    for _ in 0..10 {
        let _ = lin.delta(Delta::Delta0).apply(&z0).unwrap();
    }
    println!("10 delta applies: {:.2?}", t.elapsed());
    // plain matmul benchmark at the plan's sizes
    let p = 2 * n - 1;
    let mut rng = seeded_rng(1);
    let a = complex_gaussian(p, p, &mut rng);
    let b = complex_gaussian(p, n, &mut rng);
    let t = Instant::now();
    let _ = &a * &b;
    println!("matmul {p}x{p} * {p}x{n}: {:.2?}", t.elapsed());
}
