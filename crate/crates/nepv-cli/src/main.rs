//! `nepv`: generate problem bundles, run the solvers, build references,
//! and cross-check results. Standard output carries machine-readable JSON
//! only; diagnostics go to standard error, controlled by `NEPV_LOG`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nepv_cli::bundle::{BundleError, ProblemBundle};
use nepv_cli::generators::{gen_example1, gen_example2, gen_example3};
use nepv_cli::plot;
use nepv_cli::report::{self, ReferenceFile, SolutionsFile, VerifyReport};
use nepv_core::arnoldi::{run_solver, Algorithm, ArnoldiError, SolverConfig};
use nepv_core::instances::four_solution_instance;
use nepv_core::linearization::{
    build_linearization, delta0_probe, Delta0Probe, LinearizationError, RSpec,
};
use nepv_core::oracle::{cross_validate, scf_multistart, OracleError, ScfConfig};
use nepv_core::problem::Classification;
use nepv_core::Complex64;

#[derive(Parser)]
#[command(
    name = "nepv",
    version,
    about = "Solvers for eigenvalue problems with a quadratic rational eigenvector nonlinearity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a problem bundle on disk.
    Gen {
        #[command(subcommand)]
        family: GenFamily,
    },
    /// Run a solver on a bundle and write solutions, a convergence log,
    /// and optional plots.
    Solve(SolveArgs),
    /// Build reference solutions: the dense spectrum for small orders plus
    /// a multi-start fixed-point iteration.
    Reference(ReferenceArgs),
    /// Cross-check a solutions file against a reference file.
    Verify(VerifyArgs),
    /// Report whether the linearized pencil is regular.
    Probe(ProbeArgs),
}

#[derive(Subcommand)]
enum GenFamily {
    /// Dense random instance.
    Example1 {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Discretized wave equation with an eigenvector-dependent potential.
    Example2 {
        /// Domain length.
        #[arg(long = "L")]
        length: f64,
        /// Interior mesh size.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dense random instance with a rank-r nonlinearity coefficient.
    Example3 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// The order-2 instance with four known solutions.
    Table {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AlgorithmArg {
    Filtering,
    TwoSided,
    Standard,
}

impl AlgorithmArg {
    fn to_core(self) -> Algorithm {
        match self {
            AlgorithmArg::Filtering => Algorithm::Filtering,
            AlgorithmArg::TwoSided => Algorithm::TwoSided,
            AlgorithmArg::Standard => Algorithm::StandardSingular,
        }
    }

    fn name(self) -> &'static str {
        match self {
            AlgorithmArg::Filtering => "filtering",
            AlgorithmArg::TwoSided => "two-sided",
            AlgorithmArg::Standard => "standard",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RSpecArg {
    /// Fully random complex reduction matrix.
    Random,
    /// Identity on top, one random row at the bottom.
    IdentityRow,
}

impl RSpecArg {
    fn to_core(self, seed: u64) -> RSpec {
        match self {
            RSpecArg::Random => RSpec::Random { seed },
            RSpecArg::IdentityRow => RSpec::IdentityPlusRandomRow { seed },
        }
    }
}

fn parse_shift(text: &str) -> Result<Complex64, String> {
    let mut parts = text.splitn(2, ',');
    let re: f64 = parts
        .next()
        .unwrap_or_default()
        .trim()
        .parse()
        .map_err(|_| format!("invalid shift `{text}`, expected `re` or `re,im`"))?;
    let im: f64 = match parts.next() {
        Some(s) => s
            .trim()
            .parse()
            .map_err(|_| format!("invalid shift `{text}`, expected `re` or `re,im`"))?,
        None => 0.0,
    };
    Ok(Complex64::new(re, im))
}

#[derive(Args)]
struct SolveArgs {
    /// Bundle directory produced by `gen`.
    bundle: PathBuf,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Filtering)]
    algorithm: AlgorithmArg,
    /// Shift as `re` or `re,im`.
    #[arg(long, default_value = "0", value_parser = parse_shift)]
    shift: Complex64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// Relative stabilization tolerance of the convergence tracker.
    #[arg(long, default_value_t = 1e-8)]
    tol_conv: f64,
    /// Relative residual bound a candidate must meet to be genuine.
    #[arg(long, default_value_t = 1e-8)]
    tol_res: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; defaults to the bundle directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also emit SVG plots.
    #[arg(long)]
    plots: bool,
    #[arg(long, value_enum, default_value_t = RSpecArg::Random)]
    r_spec: RSpecArg,
}

#[derive(Args)]
struct ReferenceArgs {
    bundle: PathBuf,
    /// Fixed-point starting vectors.
    #[arg(long, default_value_t = 64)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = RSpecArg::Random)]
    r_spec: RSpecArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    solutions: PathBuf,
    reference: PathBuf,
    /// Relative matching tolerance on eigenvalue pairs.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct ProbeArgs {
    bundle: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = RSpecArg::Random)]
    r_spec: RSpecArg,
}

enum AppError {
    /// Bad input from the caller: unreadable files, out-of-range
    /// parameters. Exits 2 like a flag parsing failure.
    Usage(String),
    /// The computation itself failed or was refused.
    Numerical {
        module: &'static str,
        message: String,
    },
    /// `verify` found reference eigenvalues with no partner.
    VerificationFailed { missing: usize },
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Usage(msg) => write!(f, "{msg}"),
            AppError::Numerical { module, message } => write!(f, "{module}: {message}"),
            AppError::VerificationFailed { missing } => {
                write!(f, "verification failed: {missing} reference eigenvalues unmatched")
            }
        }
    }
}

impl AppError {
    fn exit_code(&self) -> ExitCode {
        match self {
            AppError::Usage(_) => ExitCode::from(2),
            _ => ExitCode::from(1),
        }
    }
}

impl From<BundleError> for AppError {
    fn from(e: BundleError) -> Self {
        AppError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Usage(e.to_string())
    }
}

impl From<ArnoldiError> for AppError {
    fn from(e: ArnoldiError) -> Self {
        AppError::Numerical {
            module: "ArnoldiError",
            message: e.to_string(),
        }
    }
}

impl From<LinearizationError> for AppError {
    fn from(e: LinearizationError) -> Self {
        AppError::Numerical {
            module: "LinearizationError",
            message: e.to_string(),
        }
    }
}

impl From<OracleError> for AppError {
    fn from(e: OracleError) -> Self {
        AppError::Numerical {
            module: "OracleError",
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NEPV_LOG", "error")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nepv: {e}");
            e.exit_code()
        }
    }
}

fn run(command: Command) -> Result<(), AppError> {
    match command {
        Command::Gen { family } => gen(family),
        Command::Solve(args) => solve(args),
        Command::Reference(args) => reference(args),
        Command::Verify(args) => verify(args),
        Command::Probe(args) => probe(args),
    }
}

fn gen(family: GenFamily) -> Result<(), AppError> {
    let bundle = match family {
        GenFamily::Example1 { n, seed, out } => {
            if n < 2 {
                return Err(AppError::Usage("--n must be at least 2".into()));
            }
            let bundle = ProblemBundle::new(
                "example1",
                Some(seed),
                &[("n", n as f64)],
                gen_example1(n, seed),
            );
            (bundle, out)
        }
        GenFamily::Example2 { length, n, out } => {
            if n < 4 {
                return Err(AppError::Usage("--n must be at least 4".into()));
            }
            if length.is_nan() || length <= 0.0 {
                return Err(AppError::Usage("--L must be positive".into()));
            }
            let bundle = ProblemBundle::new(
                "example2",
                None,
                &[("L", length), ("n", n as f64)],
                gen_example2(length, n),
            );
            (bundle, out)
        }
        GenFamily::Example3 { n, r, seed, out } => {
            if n < 2 || r + 1 >= n {
                return Err(AppError::Usage(
                    "rank must satisfy 0 <= r < n - 1 with n >= 2".into(),
                ));
            }
            let bundle = ProblemBundle::new(
                "example3",
                Some(seed),
                &[("n", n as f64), ("r", r as f64)],
                gen_example3(n, r, seed),
            );
            (bundle, out)
        }
        GenFamily::Table { out } => {
            let bundle = ProblemBundle::new("table", None, &[], four_solution_instance());
            (bundle, out)
        }
    };
    let (bundle, out) = bundle;
    bundle.save(&out)?;
    log::info!(
        "wrote {} bundle of order {} to {}",
        bundle.manifest.generator,
        bundle.manifest.order,
        out.display()
    );
    println!(
        "{}",
        serde_json::json!({
            "out": out.display().to_string(),
            "generator": bundle.manifest.generator,
            "order": bundle.manifest.order,
        })
    );
    Ok(())
}

fn output_dir(requested: Option<PathBuf>, bundle_dir: &Path) -> Result<PathBuf, AppError> {
    let dir = requested.unwrap_or_else(|| bundle_dir.to_path_buf());
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn solve(args: SolveArgs) -> Result<(), AppError> {
    if args.max_iter < 1 {
        return Err(AppError::Usage("--max-iter must be at least 1".into()));
    }
    for tol in [args.tol_conv, args.tol_res] {
        if tol.is_nan() || tol <= 0.0 {
            return Err(AppError::Usage("tolerances must be positive".into()));
        }
    }
    let bundle = ProblemBundle::load(&args.bundle)?;
    let config = SolverConfig {
        algorithm: args.algorithm.to_core(),
        sigma: args.shift,
        max_iter: args.max_iter,
        tol_conv: args.tol_conv,
        tol_res: args.tol_res,
        seed: args.seed,
        r_spec: Some(args.r_spec.to_core(args.seed)),
    };

    let started = Instant::now();
    let (candidates, log) = run_solver(&bundle.problem, &config)?;
    let elapsed = started.elapsed();
    let iterations = log.records().iter().map(|r| r.iteration).max().unwrap_or(0);
    let genuine = candidates
        .iter()
        .filter(|c| c.classification == Classification::Genuine)
        .count();
    log::info!(
        "{} finished after {} iterations in {:.2?}: {} candidates, {} genuine",
        args.algorithm.name(),
        iterations,
        elapsed,
        candidates.len(),
        genuine
    );

    let out = output_dir(args.out, &args.bundle)?;
    let solutions = SolutionsFile::new(args.algorithm.name(), args.shift, args.seed, &candidates);
    report::write_json(&out.join(report::SOLUTIONS_FILE), &solutions)?;
    std::fs::write(
        out.join(report::CONVERGENCE_FILE),
        report::convergence_csv(log.records()),
    )?;
    if args.plots {
        std::fs::write(
            out.join(plot::CONVERGENCE_PLOT_FILE),
            plot::convergence_svg(log.records()),
        )?;
        let final_ritz: Vec<Complex64> = log
            .records()
            .iter()
            .filter(|r| r.iteration == iterations)
            .map(|r| r.lambda)
            .collect();
        let genuine_values: Vec<Complex64> = candidates
            .iter()
            .filter(|c| c.classification == Classification::Genuine)
            .map(|c| c.lambda)
            .collect();
        std::fs::write(
            out.join(plot::SPECTRUM_PLOT_FILE),
            plot::spectrum_svg(&final_ritz, &genuine_values),
        )?;
    }

    println!(
        "{}",
        serde_json::json!({
            "out": out.display().to_string(),
            "algorithm": args.algorithm.name(),
            "iterations": iterations,
            "candidates": candidates.len(),
            "genuine": genuine,
        })
    );
    Ok(())
}

fn reference(args: ReferenceArgs) -> Result<(), AppError> {
    if args.trials < 1 {
        return Err(AppError::Usage("--trials must be at least 1".into()));
    }
    let bundle = ProblemBundle::load(&args.bundle)?;
    let problem = &bundle.problem;

    let dense = if problem.order() <= 8 {
        let lin = build_linearization(problem, &args.r_spec.to_core(args.seed))?;
        Some(nepv_core::oracle::dense_reference_solve(&lin)?)
    } else {
        log::info!(
            "order {} is beyond the dense oracle; reference is fixed-point only",
            problem.order()
        );
        None
    };
    let scf = scf_multistart(problem, args.trials, &ScfConfig::default());
    log::info!(
        "fixed-point iteration: {} of {} runs converged, {} distinct solutions",
        scf.converged,
        scf.attempts,
        scf.solutions.len()
    );

    let out = output_dir(args.out, &args.bundle)?;
    let file = ReferenceFile::new(dense.as_ref(), &scf);
    report::write_json(&out.join(report::REFERENCE_FILE), &file)?;
    println!(
        "{}",
        serde_json::json!({
            "out": out.display().to_string(),
            "dense_entries": file.dense.len(),
            "dense_deflated": file.deflated,
            "scf_solutions": file.scf.len(),
        })
    );
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<(), AppError> {
    let solutions: SolutionsFile = report::read_json(&args.solutions)?;
    let reference: ReferenceFile = report::read_json(&args.reference)?;
    let found = solutions.genuine();
    let expected = reference.reference_set();
    let cv = cross_validate(&found, &expected, args.tol);
    let report = VerifyReport::from_cross_validation(&cv);
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    if report.missing.is_empty() {
        Ok(())
    } else {
        Err(AppError::VerificationFailed {
            missing: report.missing.len(),
        })
    }
}

fn probe(args: ProbeArgs) -> Result<(), AppError> {
    let bundle = ProblemBundle::load(&args.bundle)?;
    let lin = build_linearization(&bundle.problem, &args.r_spec.to_core(args.seed))?;
    let summary = match delta0_probe(&lin) {
        Delta0Probe::Regular => serde_json::json!({ "probe": "regular" }),
        Delta0Probe::SingularLowRankC { rank } => {
            serde_json::json!({ "probe": "singular_low_rank_c", "rank": rank })
        }
        Delta0Probe::SingularRAlignment => {
            serde_json::json!({ "probe": "singular_r_alignment" })
        }
    };
    println!("{summary}");
    Ok(())
}
