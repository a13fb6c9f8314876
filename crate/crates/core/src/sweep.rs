//! Batch runs: lambda sweeps and the datasets behind the two standard figures
//! (adiabatic curves of a model, survival traces with their limits).

use rayon::prelude::*;

use crate::dynamics::{integrate_dimensionless, Trajectory};
use crate::error::{Error, Result};
use crate::lz::{lz_compare_with_trace, lz_survival, CompareSettings, LZComparison};
use crate::model::{uniform_grid, CurvePoint, DiabaticModel};

/// Environment variable that caps sweep parallelism.
pub const THREADS_ENV: &str = "CROSSING_LAB_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub lambdas: Vec<f64>,
    pub settings: CompareSettings,
    pub retain_traces: bool,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl SweepSpec {
    pub fn new(lambdas: Vec<f64>) -> Self {
        SweepSpec {
            lambdas,
            settings: CompareSettings::default(),
            retain_traces: false,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(Error::Spec("no lambda values to run".into()));
        }
        for &lambda in &self.lambdas {
            let ok = lambda.is_finite() && (lambda > 0.0 || (lambda == 0.0 && self.retain_traces));
            if !ok {
                return Err(Error::domain(format!(
                    "sweep lambda values must be > 0 (0 only with retained traces), got {lambda}"
                )));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::domain("thread count must be >= 1"));
        }
        self.settings.validate()
    }
}

/// Outcome for one lambda of a sweep. Failures are kept inline.
#[derive(Debug)]
pub struct SweepRecord {
    pub lambda: f64,
    pub outcome: Result<LZComparison>,
    pub trace: Option<Trajectory>,
}

fn in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::domain(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

fn run_one(lambda: f64, spec: &SweepSpec) -> SweepRecord {
    if lambda == 0.0 {
        // no closed-form comparison beyond the zero limit; keep the trace
        return match integrate_dimensionless(&spec.settings.problem(0.0)) {
            Ok(t) => SweepRecord {
                lambda,
                outcome: LZComparison::from_trajectory(&t, spec.settings.window_fraction),
                trace: Some(t),
            },
            Err(e) => SweepRecord {
                lambda,
                outcome: Err(e),
                trace: None,
            },
        };
    }
    match lz_compare_with_trace(lambda, &spec.settings) {
        Ok((c, t)) => SweepRecord {
            lambda,
            outcome: Ok(c),
            trace: spec.retain_traces.then_some(t),
        },
        Err(e) => SweepRecord {
            lambda,
            outcome: Err(e),
            trace: None,
        },
    }
}

/// One comparison per lambda, in input order. A failing lambda is recorded
/// in its slot and does not stop the others.
pub fn run_lambda_sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    in_pool(spec.threads, || {
        spec.lambdas
            .par_iter()
            .map(|&lambda| run_one(lambda, spec))
            .collect()
    })
}

/// Dataset for the two-panel curve figure.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFigure {
    pub points: Vec<CurvePoint>,
}

impl CurveFigure {
    /// Grid point with the smallest adiabatic gap.
    pub fn min_gap(&self) -> Option<&CurvePoint> {
        self.points
            .iter()
            .min_by(|a, b| a.adiabatic.gap.total_cmp(&b.adiabatic.gap))
    }

    /// `|c12|^2 = 1 - |c11|^2` at every grid point.
    pub fn c12_sq(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.adiabatic.c12_sq()).collect()
    }
}

/// Samples the model on `n_points` uniform points of `[r_lo, r_hi]`.
pub fn reproduce_curve_figure(
    model: &DiabaticModel,
    r_lo: f64,
    r_hi: f64,
    n_points: usize,
) -> Result<CurveFigure> {
    if n_points < 2 {
        return Err(Error::domain(format!(
            "need at least 2 points, got {n_points}"
        )));
    }
    if !(r_lo.is_finite() && r_hi.is_finite() && r_lo < r_hi) {
        return Err(Error::domain(format!("invalid range [{r_lo}, {r_hi}]")));
    }
    let grid = uniform_grid(r_lo, r_hi, n_points);
    Ok(CurveFigure {
        points: model.sample_curves(&grid)?,
    })
}

/// Survival traces and their limiting values.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityFigure {
    pub traces: Vec<(f64, Trajectory)>,
    /// `(lambda, exp(-2 pi / lambda))`, with 0 for `lambda = 0`.
    pub limits: Vec<(f64, f64)>,
}

/// Integrates one trace per lambda over `[settings.s0, settings.s_end]`.
/// `lambda = 0` is accepted and gives the undamped oscillation.
pub fn reproduce_probability_figure(
    lambdas: &[f64],
    settings: &CompareSettings,
    threads: Option<usize>,
) -> Result<ProbabilityFigure> {
    if lambdas.is_empty() {
        return Err(Error::Spec("no lambda values to run".into()));
    }
    let limits = lambdas
        .iter()
        .map(|&l| Ok((l, lz_survival(l)?)))
        .collect::<Result<Vec<_>>>()?;
    settings.validate()?;
    let traces = in_pool(threads, || {
        lambdas
            .par_iter()
            .map(|&l| integrate_dimensionless(&settings.problem(l)).map(|t| (l, t)))
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(ProbabilityFigure { traces, limits })
}
