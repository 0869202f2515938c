//! The benchmark experiments and their CSV reports.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use spsd_cross::certified::{cca, nuclear_bound, quasi_cca};
use spsd_cross::greedy::{aca, aca_ratio};
use spsd_cross::local_search::{maxvol_ratio, maxvol_with, LocalSearchState};
use spsd_cross::matrix::{make_test_matrix, residual_norms, whiten};
use spsd_cross::oracle::{singular_values, tsvd_error, Norm};
use spsd_cross::{Error, MatrixHandle, Result, TestMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Gain,
    RatioGain,
    ScalingN,
    WhitenedError,
    CcaError,
    CcaScaling,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Self::Gain,
        Self::RatioGain,
        Self::ScalingN,
        Self::WhitenedError,
        Self::CcaError,
        Self::CcaScaling,
    ];

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Self::Gain => &["r", "time_aca_s", "time_maxvol_s", "log_gain", "it_count"],
            Self::RatioGain => &["r", "time_aca_ratio_s", "time_maxvol_ratio_s", "log_gain", "it_count"],
            Self::ScalingN => &["n", "time_aca_s", "time_maxvol_s", "time_aca_ratio_s", "time_maxvol_ratio_s"],
            Self::WhitenedError => &["r", "err2_aca_ratio", "err2_maxvol_ratio", "err2_tsvd"],
            Self::CcaError => &["r", "err_nuc_cca", "err_nuc_quasi_cca", "bound_thm", "err_nuc_tsvd"],
            Self::CcaScaling => &["n", "time_cca_s", "time_quasi_cca_s"],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gain => "gain",
            Self::RatioGain => "ratio-gain",
            Self::ScalingN => "scaling-n",
            Self::WhitenedError => "whitened-error",
            Self::CcaError => "cca-error",
            Self::CcaScaling => "cca-scaling",
        })
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.to_string() == s)
            .ok_or_else(|| format!("unknown experiment {s:?}"))
    }
}

/// Parameters of one experiment run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub kind: TestMatrix,
    /// Denominator matrix of the ratio experiments.
    pub kind_b: TestMatrix,
    pub n: usize,
    /// Sizes swept by the scaling experiments.
    pub ns: Vec<usize>,
    /// Largest rank of the rank sweeps.
    pub r_max: usize,
    /// Fixed rank of the scaling experiments.
    pub r: usize,
    pub tol: f64,
    pub rbar: usize,
    pub rho: Option<f64>,
    pub reps: usize,
    /// Low-rank updates in the local search. Always off for the Hilbert
    /// matrix, whose pivot blocks are too ill conditioned for them.
    pub do_update: bool,
}

impl ExperimentSpec {
    /// Desk-scale defaults for `experiment`.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            kind: TestMatrix::A1,
            kind_b: TestMatrix::A4,
            n: 256,
            ns: Vec::new(),
            r_max: 30,
            r: 16,
            tol: spsd_cross::DEFAULT_TOL,
            rbar: spsd_cross::DEFAULT_RBAR,
            rho: None,
            reps: 3,
            do_update: true,
        };
        match experiment {
            Experiment::Gain => base,
            // A4 needs n divisible by 6
            Experiment::RatioGain => Self { n: 252, ..base },
            Experiment::ScalingN => Self {
                ns: vec![240, 480, 960, 1920],
                ..base
            },
            Experiment::WhitenedError => Self {
                n: 252,
                r_max: 20,
                ..base
            },
            Experiment::CcaError => Self {
                kind: TestMatrix::A5,
                n: 100,
                r_max: 20,
                rho: Some(0.85),
                ..base
            },
            Experiment::CcaScaling => Self {
                kind: TestMatrix::A5,
                ns: vec![50, 100, 200, 400],
                r: 10,
                rho: Some(0.85),
                reps: 1,
                ..base
            },
        }
    }

    /// Matrix kinds the experiment generates.
    fn kinds(&self) -> Vec<TestMatrix> {
        match self.experiment {
            Experiment::RatioGain | Experiment::WhitenedError | Experiment::ScalingN => vec![self.kind, self.kind_b],
            _ => vec![self.kind],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let param = |msg: String| Err(Error::Parameter(msg));
        if self.reps == 0 {
            return param("--reps must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return param(format!("--tol must be positive, got {}", self.tol));
        }
        let sizes: Vec<usize> = match self.experiment {
            Experiment::ScalingN | Experiment::CcaScaling => self.ns.clone(),
            _ => vec![self.n],
        };
        if sizes.is_empty() {
            return param("--ns must list at least one size".into());
        }
        let rank = match self.experiment {
            Experiment::ScalingN | Experiment::CcaScaling => self.r,
            _ => self.r_max,
        };
        for &n in &sizes {
            if rank == 0 || rank > n {
                return param(format!("rank {rank} is not in 1..={n}"));
            }
            for kind in self.kinds() {
                if kind == TestMatrix::A4 && n % 6 != 0 {
                    return Err(Error::Dimension(format!("A4 needs n divisible by 6, got {n}")));
                }
                if kind == TestMatrix::A5 {
                    make_test_matrix(kind, 1, self.rho)?;
                }
            }
        }
        if matches!(self.experiment, Experiment::CcaError | Experiment::CcaScaling) && (self.rbar == 0 || self.rbar > rank) {
            return param(format!("--rbar must be in 1..={rank}, got {}", self.rbar));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub rows: Vec<Vec<f64>>,
    pub wall_clock_s: f64,
}

impl ExperimentReport {
    /// Writes the `#` metadata header followed by the CSV table.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let s = &self.spec;
        let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        writeln!(out, "# experiment: {}", s.experiment)?;
        writeln!(out, "# version: {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "# seed: none (inputs are deterministic)")?;
        writeln!(out, "# unix_time: {stamp}")?;
        writeln!(out, "# wall_clock_s: {:.3}", self.wall_clock_s)?;
        let rho = s.rho.map_or("-".to_string(), |r| r.to_string());
        writeln!(
            out,
            "# kind: {} kind_b: {} n: {} ns: {:?} r_max: {} r: {} tol: {} rbar: {} rho: {} reps: {} do_update: {}",
            s.kind, s.kind_b, s.n, s.ns, s.r_max, s.r, s.tol, s.rbar, rho, s.reps, s.do_update
        )?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(s.experiment.columns())?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_cell(*v)))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn format_cell(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.9e}")
    }
}

/// Median wall time in seconds, and the last result.
fn timed<T>(reps: usize, mut f: impl FnMut() -> Result<T>) -> Result<(f64, T)> {
    let mut times = Vec::with_capacity(reps);
    let mut last = None;
    for _ in 0..reps {
        let start = Instant::now();
        let v = f()?;
        times.push(start.elapsed().as_nanos() as f64 * 1e-9);
        last = Some(v);
    }
    times.sort_by(f64::total_cmp);
    Ok((times[reps / 2], last.expect("at least one repetition")))
}

fn log_det(a: &MatrixHandle, j: &[usize]) -> Result<f64> {
    Ok(LocalSearchState::new(a, j)?.log_volume())
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let start = Instant::now();
    let rows = match spec.experiment {
        Experiment::Gain => gain(spec)?,
        Experiment::RatioGain => ratio_gain(spec)?,
        Experiment::ScalingN => scaling_n(spec)?,
        Experiment::WhitenedError => whitened_error(spec)?,
        Experiment::CcaError => cca_error(spec)?,
        Experiment::CcaScaling => cca_scaling(spec)?,
    };
    debug_assert!(rows.iter().all(|r| r.len() == spec.experiment.columns().len()));
    Ok(ExperimentReport {
        spec: spec.clone(),
        rows,
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}

fn gain(spec: &ExperimentSpec) -> Result<Vec<Vec<f64>>> {
    let a = make_test_matrix(spec.kind, spec.n, spec.rho)?;
    let mut rows = Vec::new();
    for r in 1..=spec.r_max {
        let (t_aca, start) = timed(spec.reps, || aca(&a, r))?;
        let update = spec.do_update && spec.kind != TestMatrix::A3;
        let (t_max, res) = timed(spec.reps, || maxvol_with(&a, r, spec.tol, update))?;
        if start.breakdown {
            return Err(Error::Breakdown { found: start.j.len() });
        }
        let gain = log_det(&a, &res.j)? - log_det(&a, &start.j)?;
        rows.push(vec![r as f64, t_aca, t_max, gain, res.search.iterations as f64]);
    }
    Ok(rows)
}

fn ratio_gain(spec: &ExperimentSpec) -> Result<Vec<Vec<f64>>> {
    let a = make_test_matrix(spec.kind, spec.n, spec.rho)?;
    let b = make_test_matrix(spec.kind_b, spec.n, spec.rho)?;
    let mut rows = Vec::new();
    for r in 1..=spec.r_max {
        let (t_aca, start) = timed(spec.reps, || aca_ratio(&a, &b, r))?;
        let (t_max, res) = timed(spec.reps, || maxvol_ratio(&a, &b, r, spec.tol))?;
        if start.a.breakdown {
            return Err(Error::Breakdown { found: start.j().len() });
        }
        let ratio = |j: &[usize]| -> Result<f64> { Ok(log_det(&a, j)? - log_det(&b, j)?) };
        let gain = ratio(&res.j)? - ratio(start.j())?;
        rows.push(vec![r as f64, t_aca, t_max, gain, res.search.iterations as f64]);
    }
    Ok(rows)
}

fn scaling_n(spec: &ExperimentSpec) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for &n in &spec.ns {
        let a = make_test_matrix(spec.kind, n, spec.rho)?;
        let b = make_test_matrix(spec.kind_b, n, spec.rho)?;
        let update = spec.do_update && spec.kind != TestMatrix::A3;
        let (t_aca, _) = timed(spec.reps, || aca(&a, spec.r))?;
        let (t_max, _) = timed(spec.reps, || maxvol_with(&a, spec.r, spec.tol, update))?;
        let (t_aca_ratio, _) = timed(spec.reps, || aca_ratio(&a, &b, spec.r))?;
        let (t_max_ratio, _) = timed(spec.reps, || maxvol_ratio(&a, &b, spec.r, spec.tol))?;
        rows.push(vec![n as f64, t_aca, t_max, t_aca_ratio, t_max_ratio]);
    }
    Ok(rows)
}

fn whitened_error(spec: &ExperimentSpec) -> Result<Vec<Vec<f64>>> {
    let a = make_test_matrix(spec.kind, spec.n, spec.rho)?;
    let b = make_test_matrix(spec.kind_b, spec.n, spec.rho)?;
    let e = MatrixHandle::from_dense(whiten(&a, &b.to_dense())?);
    let sv = singular_values(&e.to_dense());
    let mut rows = Vec::new();
    for r in 1..=spec.r_max {
        let greedy = aca_ratio(&a, &b, r)?;
        let local = maxvol_ratio(&a, &b, r, spec.tol)?;
        let err_g = residual_norms(&e, greedy.j())?.spectral;
        let err_m = residual_norms(&e, &local.j)?.spectral;
        let tsvd = sv.get(r).copied().unwrap_or(0.0);
        rows.push(vec![r as f64, err_g, err_m, tsvd]);
    }
    Ok(rows)
}

fn cca_error(spec: &ExperimentSpec) -> Result<Vec<Vec<f64>>> {
    let a = make_test_matrix(spec.kind, spec.n, spec.rho)?;
    let dense = a.to_dense();
    let sv = singular_values(&dense);
    let mut rows = Vec::new();
    for r in 1..=spec.r_max {
        let certified = cca(&dense, r)?;
        let quasi = quasi_cca(&a, r, spec.rbar.min(r))?;
        if certified.exhausted || quasi.exhausted {
            return Err(Error::Breakdown { found: certified.j.len().min(quasi.j.len()) });
        }
        rows.push(vec![
            r as f64,
            residual_norms(&a, &certified.j)?.nuclear,
            residual_norms(&a, &quasi.j)?.nuclear,
            nuclear_bound(&sv, r),
            tsvd_error(&dense, r, Norm::Nuclear),
        ]);
    }
    Ok(rows)
}

fn cca_scaling(spec: &ExperimentSpec) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for &n in &spec.ns {
        let a = make_test_matrix(spec.kind, n, spec.rho)?;
        let dense = a.to_dense();
        let (t_cca, _) = timed(spec.reps, || cca(&dense, spec.r))?;
        let (t_quasi, _) = timed(spec.reps, || quasi_cca(&a, spec.r, spec.rbar))?;
        rows.push(vec![n as f64, t_cca, t_quasi]);
    }
    Ok(rows)
}
