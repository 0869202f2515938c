mod experiments;
mod source;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spsd_cross::certified::{cca, cca2, quasi_cca};
use spsd_cross::local_search::{maxvol_ratio, maxvol_with};
use spsd_cross::matrix::{make_test_matrix, write_dense, write_dense_to_path};
use spsd_cross::{Error, TestMatrix, DEFAULT_RBAR, DEFAULT_TOL};

use experiments::{run_experiment, Experiment, ExperimentSpec};

/// Maximum-volume and certified cross approximation of SPSD matrices.
#[derive(Parser, Debug)]
#[command(name = "spsd-cross", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a test matrix in the dense text format.
    Gen {
        #[arg(long, value_parser = parse_kind)]
        kind: TestMatrix,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        rho: Option<f64>,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedy selection refined by local volume maximization.
    Maxvol {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Recompute the cached factors after every swap.
        #[arg(long)]
        no_update: bool,
    },
    /// Maximize det A(J,J) / det B(J,J).
    MaxvolRatio {
        #[arg(long, conflicts_with = "kind_a")]
        matrix_a: Option<PathBuf>,
        #[arg(long, value_parser = parse_kind)]
        kind_a: Option<TestMatrix>,
        #[arg(long, conflicts_with = "kind_b")]
        matrix_b: Option<PathBuf>,
        #[arg(long, value_parser = parse_kind)]
        kind_b: Option<TestMatrix>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Certified cross approximation.
    Cca {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        r: usize,
        #[arg(long, value_enum, default_value_t = Method::Cca)]
        method: Method,
        /// Block rank of the restarted method.
        #[arg(long, default_value_t = DEFAULT_RBAR)]
        rbar: usize,
    },
    /// Run one of the benchmark experiments and write CSV.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct Source {
    /// Matrix file in the dense text format.
    #[arg(long, conflicts_with = "kind")]
    matrix: Option<PathBuf>,
    #[arg(long, value_parser = parse_kind)]
    kind: Option<TestMatrix>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Cca,
    Cca2,
    Quasi,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_parser = parse_experiment)]
    experiment: Experiment,
    #[arg(long, value_parser = parse_kind)]
    kind: Option<TestMatrix>,
    /// Denominator matrix of the ratio experiments.
    #[arg(long, value_parser = parse_kind)]
    kind_b: Option<TestMatrix>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated sizes for the scaling experiments.
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    /// Largest rank of the rank sweeps.
    #[arg(long)]
    r_max: Option<usize>,
    /// Fixed rank of the scaling experiments.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    rbar: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    /// Timing repetitions; the median is reported.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    no_update: bool,
    /// Output CSV file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl BenchArgs {
    fn spec(&self) -> ExperimentSpec {
        let d = ExperimentSpec::defaults(self.experiment);
        ExperimentSpec {
            experiment: self.experiment,
            kind: self.kind.unwrap_or(d.kind),
            kind_b: self.kind_b.unwrap_or(d.kind_b),
            n: self.n.unwrap_or(d.n),
            ns: self.ns.clone().unwrap_or(d.ns),
            r_max: self.r_max.unwrap_or(d.r_max),
            r: self.r.unwrap_or(d.r),
            tol: self.tol.unwrap_or(d.tol),
            rbar: self.rbar.unwrap_or(d.rbar),
            rho: self.rho.or(d.rho),
            reps: self.reps.unwrap_or(d.reps),
            do_update: !self.no_update,
        }
    }
}

fn parse_kind(s: &str) -> Result<TestMatrix, String> {
    s.parse::<TestMatrix>().map_err(|e| e.to_string())
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    s.parse()
}

/// Failures mapped to exit codes: 2 for invalid input, 3 for numerical
/// breakdown.
enum Failure {
    Invalid(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Dimension(_) | Error::Parameter(_) | Error::Parse(_) | Error::CombinatorialGuard { .. } => {
                Failure::Invalid(e.to_string())
            }
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn print_indices(j: &[usize]) -> io::Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for i in j {
        writeln!(out, "{i}")?;
    }
    out.flush()
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen { kind, n, rho, out } => {
            let m = make_test_matrix(kind, n, rho)?.to_dense();
            match out {
                Some(path) => write_dense_to_path(&m, path)?,
                None => write_dense(&m, BufWriter::new(io::stdout().lock()))?,
            }
        }
        Command::Maxvol {
            source: s,
            r,
            tol,
            no_update,
        } => {
            let a = source::load(s.matrix.as_ref(), s.kind, s.n, s.rho)?;
            let res = maxvol_with(&a, r, tol, !no_update)?;
            print_indices(&res.j)?;
            eprintln!(
                "iterations: {} log_volume_gain: {:.6e} fallbacks: {} evaluations: {}",
                res.search.iterations,
                res.search.log_volume_gain,
                res.search.fallbacks,
                a.evaluations()
            );
            if res.breakdown {
                return Err(Failure::Numerical(format!(
                    "matrix has numerical rank {} < r = {r}",
                    res.j.len()
                )));
            }
        }
        Command::MaxvolRatio {
            matrix_a,
            kind_a,
            matrix_b,
            kind_b,
            n,
            rho,
            r,
            tol,
        } => {
            let a = source::load(matrix_a.as_ref(), kind_a, n, rho)?;
            let b = source::load(matrix_b.as_ref(), kind_b, n, rho)?;
            let res = maxvol_ratio(&a, &b, r, tol)?;
            print_indices(&res.j)?;
            eprintln!(
                "iterations: {} log_ratio_gain: {:.6e}",
                res.search.iterations, res.search.log_volume_gain
            );
            if res.breakdown {
                return Err(Failure::Numerical(format!(
                    "numerator has numerical rank {} < r = {r}",
                    res.j.len()
                )));
            }
        }
        Command::Cca {
            source: s,
            r,
            method,
            rbar,
        } => {
            let a = source::load(s.matrix.as_ref(), s.kind, s.n, s.rho)?;
            let res = match method {
                Method::Cca => cca(&a.to_dense(), r)?,
                Method::Cca2 => cca2(&a, r)?,
                Method::Quasi => quasi_cca(&a, r, rbar)?,
            };
            print_indices(&res.j)?;
            if res.diagnostics.flagged() {
                eprintln!("warning: some coefficient ratios were unreliable; the restarted method is more robust");
            }
            if let Some(last) = res.diagnostics.steps.last() {
                eprintln!("expected error: {:.6e}", last.expectation);
            }
            if res.exhausted {
                return Err(Failure::Numerical(format!(
                    "residual rank exhausted after {} pivots",
                    res.j.len()
                )));
            }
        }
        Command::Bench(args) => {
            let report = run_experiment(&args.spec())?;
            match &args.out {
                Some(path) => report.write_csv(BufWriter::new(File::create(path)?))?,
                None => report.write_csv(io::stdout().lock())?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical breakdown: {msg}");
            ExitCode::from(3)
        }
    }
}
