//! Command-line front end.
//!
//! Every failure is reported as one line `error: <category>: <detail>` with
//! exit codes 2 (usage), 3 (domain), 4 (numerical) and 5 (I/O).

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::dynamics::{
    integrate_dimensionless, integrate_physical, survival_probability, CrossingPassage,
    DimensionlessLZProblem, StepControl, Trajectory, DEFAULT_MAX_PHASE, DEFAULT_REFINE_TOLERANCE,
    DEFAULT_S0, DEFAULT_STEP, DEFAULT_S_END, DEFAULT_WINDOW_FRACTION,
};
use crate::error::{Error, ErrorCategory};
use crate::lz::{lz_compare, lz_survival, CompareSettings};
use crate::model::DiabaticModel;
use crate::output::{self, fmt_f64};
use crate::sweep::{reproduce_curve_figure, run_lambda_sweep, SweepRecord, SweepSpec, THREADS_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "crossing-lab",
    version,
    about = "Avoided crossings and Landau-Zener passages of two-level models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the built-in model presets and their parameters
    Presets(PresetsArgs),
    /// Diabatic and adiabatic curves of a model on a uniform grid
    #[command(allow_negative_numbers = true)]
    Curves(CurvesArgs),
    /// Integrate one passage and write the amplitude trace
    #[command(allow_negative_numbers = true)]
    Evolve(EvolveArgs),
    /// Compare the integrated survival probability with exp(-2 pi / lambda)
    #[command(allow_negative_numbers = true)]
    Lz(LzArgs),
    /// Run a list of lambda values
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    Toy,
    IonicCovalent,
}

impl Preset {
    fn model(self) -> DiabaticModel {
        match self {
            Preset::Toy => DiabaticModel::toy(),
            Preset::IonicCovalent => DiabaticModel::ionic_covalent(),
        }
    }

    fn default_range(self) -> (f64, f64) {
        match self {
            Preset::Toy => (0.0, 1.0),
            Preset::IonicCovalent => (2.0, 20.0),
        }
    }
}

#[derive(Debug, Args)]
struct PresetsArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Base model; individual parameters below override its values
    #[arg(long, value_enum, default_value_t = Preset::Toy)]
    preset: Preset,
    /// Linear model: H11 at R = 0
    #[arg(long = "e1-0")]
    e1_0: Option<f64>,
    /// Linear model: slope of H11
    #[arg(long)]
    slope1: Option<f64>,
    /// Linear model: H22 at R = 0
    #[arg(long = "e2-0")]
    e2_0: Option<f64>,
    /// Linear model: slope of H22
    #[arg(long)]
    slope2: Option<f64>,
    /// Ionic-covalent model: flat covalent level
    #[arg(long)]
    e_cov: Option<f64>,
    /// Ionic-covalent model: ionic asymptote above the covalent level
    #[arg(long)]
    delta_inf: Option<f64>,
    /// Ionic-covalent model: Coulomb coefficient C in -C/R
    #[arg(long)]
    coulomb: Option<f64>,
    /// Real part of the coupling H12
    #[arg(long)]
    h12: Option<f64>,
    /// Imaginary part of the coupling H12
    #[arg(long)]
    h12_im: Option<f64>,
}

#[derive(Debug, Args)]
struct RangeArgs {
    /// Lower end of the R range (preset default when omitted: toy 0, ionic-covalent 2)
    #[arg(long)]
    rmin: Option<f64>,
    /// Upper end of the R range (preset default when omitted: toy 1, ionic-covalent 20)
    #[arg(long)]
    rmax: Option<f64>,
}

#[derive(Debug, Args)]
struct IntegrationArgs {
    /// Start of the dimensionless time window
    #[arg(long, default_value_t = DEFAULT_S0)]
    s0: f64,
    /// End of the dimensionless time window
    #[arg(long = "s-end", default_value_t = DEFAULT_S_END)]
    s_end: f64,
    /// Dimensionless base step
    #[arg(long, default_value_t = DEFAULT_STEP)]
    step: f64,
    /// Largest phase (rad) one RK4 substep may sweep
    #[arg(long, default_value_t = DEFAULT_MAX_PHASE)]
    max_phase: f64,
    /// Plain fixed-step RK4 (no phase-limited substeps)
    #[arg(long)]
    fixed_step: bool,
    /// Halve the step until p1 changes by less than --refine-tol
    #[arg(long)]
    refine: bool,
    #[arg(long, default_value_t = DEFAULT_REFINE_TOLERANCE)]
    refine_tol: f64,
}

impl IntegrationArgs {
    fn control(&self) -> StepControl {
        StepControl {
            step: self.step,
            max_phase_per_step: (!self.fixed_step).then_some(self.max_phase),
            refine: self.refine.then_some(self.refine_tol),
            ..StepControl::default()
        }
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output file (standard output when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct CurvesArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    range: RangeArgs,
    /// Number of grid points
    #[arg(long, default_value_t = 201)]
    points: usize,
    #[command(flatten)]
    output: OutputArgs,
    /// Also write a gnuplot script next to --out
    #[arg(long)]
    emit_plot_script: bool,
}

#[derive(Debug, Args)]
struct EvolveArgs {
    /// Adiabaticity parameter of the dimensionless equation
    #[arg(
        long,
        required_unless_present = "velocity",
        conflicts_with = "velocity"
    )]
    lambda: Option<f64>,
    /// Accept lambda <= 0 (free oscillation at 0, reversed slope ordering below)
    #[arg(long)]
    allow_signed: bool,
    /// Nuclear velocity; integrates the physical equations of the model passage
    #[arg(long)]
    velocity: Option<f64>,
    /// Reduced Planck constant in model units
    #[arg(long, default_value_t = 1.0)]
    hbar: f64,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    range: RangeArgs,
    #[command(flatten)]
    integration: IntegrationArgs,
    /// Fraction of trailing samples averaged for the survival estimate
    #[arg(long, default_value_t = DEFAULT_WINDOW_FRACTION)]
    window_fraction: f64,
    /// Keep every n-th sample in the output (automatic when omitted)
    #[arg(long)]
    stride: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct LzArgs {
    #[arg(long)]
    lambda: f64,
    #[command(flatten)]
    integration: IntegrationArgs,
    /// Fraction of trailing samples averaged for the survival estimate
    #[arg(long, default_value_t = DEFAULT_WINDOW_FRACTION)]
    window_fraction: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated lambda values
    #[arg(long, value_delimiter = ',', required = true)]
    lambdas: Vec<f64>,
    #[command(flatten)]
    integration: IntegrationArgs,
    /// Fraction of trailing samples averaged for the survival estimate
    #[arg(long, default_value_t = DEFAULT_WINDOW_FRACTION)]
    window_fraction: f64,
    /// Directory for all sweep outputs (must exist)
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the p1(s) trace of every lambda and the limit-lines file
    #[arg(long)]
    retain_traces: bool,
    /// Put all traces in one file instead of one file per lambda
    #[arg(long)]
    combined_traces: bool,
    /// Also write a gnuplot script referencing the written files
    #[arg(long)]
    emit_plot_script: bool,
}

struct Failure {
    category: ErrorCategory,
    detail: String,
}

impl Failure {
    fn usage(detail: impl Into<String>) -> Self {
        Failure {
            category: ErrorCategory::Usage,
            detail: detail.into(),
        }
    }

    fn domain(detail: impl Into<String>) -> Self {
        Failure {
            category: ErrorCategory::Domain,
            detail: detail.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            category: e.category(),
            detail: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, source: io::Error) -> Failure {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
    .into()
}

type CliResult = Result<(), Failure>;

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{}", e.render());
                return 0;
            }
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            let detail = first.strip_prefix("error: ").unwrap_or(first);
            let _ = writeln!(stderr, "error: usage: {detail}");
            return ErrorCategory::Usage.exit_code();
        }
    };

    let result = match cli.command {
        Command::Presets(a) => presets(&a, stdout),
        Command::Curves(a) => curves(&a, stdout),
        Command::Evolve(a) => evolve(&a, stdout),
        Command::Lz(a) => lz(&a, stdout),
        Command::Sweep(a) => sweep(&a, stdout, stderr),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let detail = f.detail.replace('\n', " ");
            let _ = writeln!(stderr, "error: {}: {detail}", f.category.as_str());
            f.category.exit_code()
        }
    }
}

fn build_model(args: &ModelArgs) -> Result<DiabaticModel, Failure> {
    let mut model = args.preset.model();
    let linear_flags = [args.e1_0, args.slope1, args.e2_0, args.slope2];
    let ionic_flags = [args.e_cov, args.delta_inf, args.coulomb];
    match &mut model {
        DiabaticModel::LinearCrossing {
            e1_0,
            slope1,
            e2_0,
            slope2,
            ..
        } => {
            if ionic_flags.iter().any(Option::is_some) {
                return Err(Failure::usage(
                    "--e-cov/--delta-inf/--coulomb need --preset ionic-covalent",
                ));
            }
            *e1_0 = args.e1_0.unwrap_or(*e1_0);
            *slope1 = args.slope1.unwrap_or(*slope1);
            *e2_0 = args.e2_0.unwrap_or(*e2_0);
            *slope2 = args.slope2.unwrap_or(*slope2);
        }
        DiabaticModel::IonicCovalent {
            covalent_level,
            ionic_asymptote,
            coulomb,
            ..
        } => {
            if linear_flags.iter().any(Option::is_some) {
                return Err(Failure::usage(
                    "--e1-0/--slope1/--e2-0/--slope2 need --preset toy",
                ));
            }
            *covalent_level = args.e_cov.unwrap_or(*covalent_level);
            *ionic_asymptote = args.delta_inf.unwrap_or(*ionic_asymptote);
            *coulomb = args.coulomb.unwrap_or(*coulomb);
        }
        DiabaticModel::Custom(_) => unreachable!("presets are parametric"),
    }
    if args.h12.is_some() || args.h12_im.is_some() {
        let current = match &model {
            DiabaticModel::LinearCrossing { h12, .. }
            | DiabaticModel::IonicCovalent { h12, .. } => *h12,
            DiabaticModel::Custom(_) => unreachable!(),
        };
        let coupling = Complex64::new(
            args.h12.unwrap_or(current.re),
            args.h12_im.unwrap_or(current.im),
        );
        model = model.with_coupling(coupling);
    }
    Ok(model)
}

fn resolve_range(model: &ModelArgs, range: &RangeArgs) -> Result<(f64, f64), Failure> {
    let (lo, hi) = model.preset.default_range();
    let lo = range.rmin.unwrap_or(lo);
    let hi = range.rmax.unwrap_or(hi);
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Failure::domain(format!(
            "rmin ({lo}) must be below rmax ({hi})"
        )));
    }
    Ok((lo, hi))
}

/// Writes through `f` to the file at `path`, or to `stdout` when no path is given.
fn emit<F>(path: Option<&Path>, stdout: &mut dyn Write, f: F) -> CliResult
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match path {
        Some(p) => output::write_file(p, |w| f(w)).map_err(Failure::from),
        None => f(stdout).map_err(|e| io_failure(Path::new("<stdout>"), e)),
    }
}

fn presets(args: &PresetsArgs, stdout: &mut dyn Write) -> CliResult {
    let rows = [
        (
            "toy",
            "LinearCrossing",
            "e1_0=1 slope1=1 e2_0=2 slope2=-1 h12=0.1",
            "model units",
        ),
        (
            "ionic-covalent",
            "IonicCovalent",
            "covalent_level=0 ionic_asymptote=1.53 coulomb=14.4 h12=0.05",
            "eV, Angstrom",
        ),
    ];
    let result = match args.format {
        Format::Csv => (|| {
            writeln!(stdout, "name,kind,parameters,units")?;
            for (name, kind, params, units) in rows {
                writeln!(stdout, "{name},{kind},{params},{units}")?;
            }
            Ok(())
        })(),
        Format::Json => {
            let items: Vec<serde_json::Value> = rows
                .iter()
                .map(|(name, kind, params, units)| {
                    serde_json::json!({"name": name, "kind": kind, "parameters": params, "units": units})
                })
                .collect();
            writeln!(stdout, "{}", serde_json::Value::Array(items))
        }
    };
    result.map_err(|e| io_failure(Path::new("<stdout>"), e))
}

fn curves(args: &CurvesArgs, stdout: &mut dyn Write) -> CliResult {
    let model = build_model(&args.model)?;
    let (lo, hi) = resolve_range(&args.model, &args.range)?;
    if args.points < 2 {
        return Err(Failure::domain(format!(
            "points must be >= 2, got {}",
            args.points
        )));
    }
    if args.emit_plot_script && args.output.out.is_none() {
        return Err(Failure::usage("--emit-plot-script needs --out"));
    }
    let figure = reproduce_curve_figure(&model, lo, hi, args.points)?;
    let out = args.output.out.as_deref();
    match args.output.format {
        Format::Csv => emit(out, stdout, |w| output::write_curves_csv(w, &figure.points))?,
        Format::Json => emit(out, stdout, |w| {
            let header: Vec<&str> = output::CURVES_HEADER.split(',').collect();
            let mut text = Vec::new();
            output::write_curves_csv(&mut text, &figure.points)?;
            let text = String::from_utf8(text).expect("ascii output");
            let rows: Vec<String> = text
                .lines()
                .skip(1)
                .map(|line| {
                    let fields: Vec<String> = header
                        .iter()
                        .zip(line.split(','))
                        .map(|(k, v)| format!("\"{k}\":{v}"))
                        .collect();
                    format!("{{{}}}", fields.join(","))
                })
                .collect();
            writeln!(w, "[{}]", rows.join(","))
        })?,
    }

    if let Some(path) = out {
        if args.emit_plot_script {
            let script_path = path.with_extension("gp");
            let script = output::curves_plot_script(&path.display().to_string());
            output::write_file(&script_path, |w| w.write_all(script.as_bytes()))?;
        }
        let summary = (|| {
            if let Some(min) = figure.min_gap() {
                writeln!(
                    stdout,
                    "min_gap={} at R={}",
                    fmt_f64(min.adiabatic.gap),
                    fmt_f64(min.r)
                )?;
            }
            if let Ok(rc) = model.find_crossing(lo, hi) {
                let slope = model.slope_difference(rc).unwrap_or(f64::NAN);
                writeln!(
                    stdout,
                    "crossing R_c={} slope_difference={}",
                    fmt_f64(rc),
                    fmt_f64(slope)
                )?;
            }
            Ok(())
        })();
        summary.map_err(|e| io_failure(Path::new("<stdout>"), e))?;
    }
    Ok(())
}

fn evolve(args: &EvolveArgs, stdout: &mut dyn Write) -> CliResult {
    let control = args.integration.control();
    let window = (args.integration.s0, args.integration.s_end);
    if args.stride == Some(0) {
        return Err(Failure::domain("stride must be >= 1"));
    }
    let trajectory: Trajectory = if let Some(lambda) = args.lambda {
        if lambda.is_nan() || (lambda <= 0.0 && !args.allow_signed) {
            return Err(Failure::domain("lambda must be > 0"));
        }
        let problem = DimensionlessLZProblem {
            allow_signed: args.allow_signed,
            ..DimensionlessLZProblem::new(lambda)
                .window(window.0, window.1)
                .control(control)
        };
        problem.validate()?;
        integrate_dimensionless(&problem)?
    } else {
        let velocity = args.velocity.expect("clap enforces lambda or velocity");
        let model = build_model(&args.model)?;
        let bracket = resolve_range(&args.model, &args.range)?;
        let passage =
            CrossingPassage::from_model(&model, bracket, velocity, args.hbar, window, control)?;
        integrate_physical(&passage.problem)?
    };

    let keep_every = args
        .stride
        .unwrap_or_else(|| output::thinning_factor(trajectory.len()));
    let out = args.output.out.as_deref();
    match args.output.format {
        Format::Csv => emit(out, stdout, |w| {
            output::write_trajectory_csv(w, &trajectory, keep_every)
        })?,
        Format::Json => emit(out, stdout, |w| {
            output::write_trajectory_json(w, &trajectory, keep_every)
        })?,
    }
    if out.is_some() {
        let tail = survival_probability(&trajectory, args.window_fraction).ok();
        let limit = lz_survival(trajectory.meta.lambda.abs()).ok();
        let line = format!(
            "lambda={} p1_final={} p1_tail={} p1_lz={} norm_drift={}",
            fmt_f64(trajectory.meta.lambda),
            fmt_f64(trajectory.last().p1()),
            tail.map_or("NaN".into(), fmt_f64),
            limit.map_or("NaN".into(), fmt_f64),
            fmt_f64(trajectory.norm_drift),
        );
        writeln!(stdout, "{line}").map_err(|e| io_failure(Path::new("<stdout>"), e))?;
    }
    Ok(())
}

fn compare_settings(
    integration: &IntegrationArgs,
    window_fraction: f64,
) -> Result<CompareSettings, Failure> {
    let settings = CompareSettings {
        s0: integration.s0,
        s_end: integration.s_end,
        window_fraction,
        control: integration.control(),
    };
    settings.validate()?;
    Ok(settings)
}

fn lz(args: &LzArgs, stdout: &mut dyn Write) -> CliResult {
    if args.lambda.is_nan() || args.lambda <= 0.0 {
        return Err(Failure::domain("lambda must be > 0"));
    }
    let settings = compare_settings(&args.integration, args.window_fraction)?;
    let comparison = lz_compare(args.lambda, &settings)?;
    let out = args.output.out.as_deref();
    match args.output.format {
        Format::Json => emit(out, stdout, |w| {
            output::write_comparison_json(w, &comparison)
        }),
        Format::Csv => {
            let record = SweepRecord {
                lambda: args.lambda,
                outcome: Ok(comparison),
                trace: None,
            };
            emit(out, stdout, |w| {
                output::write_sweep_csv(w, std::slice::from_ref(&record))
            })
        }
    }
}

fn threads_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Failure::usage(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

fn lambda_label(lambda: f64) -> String {
    format!("{lambda}").replace('-', "m")
}

fn sweep(args: &SweepArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    let settings = compare_settings(&args.integration, args.window_fraction)?;
    if args.combined_traces && !args.retain_traces {
        return Err(Failure::usage("--combined-traces needs --retain-traces"));
    }
    if !args.out_dir.is_dir() {
        return Err(io_failure(
            &args.out_dir,
            io::Error::new(io::ErrorKind::NotFound, "output directory does not exist"),
        ));
    }
    let spec = SweepSpec {
        lambdas: args.lambdas.clone(),
        settings,
        retain_traces: args.retain_traces,
        threads: threads_from_env()?,
    };
    spec.validate()?;
    let records = run_lambda_sweep(&spec)?;

    let mut written: Vec<PathBuf> = Vec::new();
    let table = match args.format {
        Format::Csv => args.out_dir.join("sweep.csv"),
        Format::Json => args.out_dir.join("sweep.json"),
    };
    output::write_file(&table, |w| match args.format {
        Format::Csv => output::write_sweep_csv(w, &records),
        Format::Json => output::write_sweep_json(w, &records),
    })?;
    written.push(table.clone());

    let mut trace_files: Vec<(f64, String)> = Vec::new();
    if args.retain_traces {
        let traces: Vec<(f64, &Trajectory)> = records
            .iter()
            .filter_map(|r| r.trace.as_ref().map(|t| (r.lambda, t)))
            .collect();
        let keep_every = traces
            .iter()
            .map(|(_, t)| output::thinning_factor(t.len()))
            .max()
            .unwrap_or(1);
        if args.combined_traces {
            let path = args.out_dir.join("traces.csv");
            output::write_file(&path, |w| {
                output::write_combined_traces_csv(w, &traces, keep_every)
            })?;
            written.push(path);
        } else {
            for (i, (lambda, t)) in traces.iter().enumerate() {
                let name = format!("trace_{i:02}_lambda_{}.csv", lambda_label(*lambda));
                let path = args.out_dir.join(&name);
                output::write_file(&path, |w| output::write_trajectory_csv(w, t, keep_every))?;
                trace_files.push((*lambda, name));
                written.push(path);
            }
        }
        let limits: Vec<(f64, f64)> = records
            .iter()
            .filter_map(|r| lz_survival(r.lambda).ok().map(|p| (r.lambda, p)))
            .collect();
        let path = args.out_dir.join("limits.csv");
        output::write_file(&path, |w| output::write_limits_csv(w, &limits))?;
        written.push(path);
    }

    if args.emit_plot_script {
        let script = if args.retain_traces && !args.combined_traces {
            output::probability_plot_script(&trace_files, "limits.csv")
        } else {
            format!(
                "set datafile separator ','\nset key autotitle columnhead\nset logscale x\n\
                 plot '{0}' using 1:2 with points title 'numeric', '{0}' using 1:3 with lines title 'exp(-2 pi/lambda)'\n",
                table.file_name().unwrap().to_string_lossy()
            )
        };
        let path = args.out_dir.join("plot.gp");
        output::write_file(&path, |w| w.write_all(script.as_bytes()))?;
        written.push(path);
    }

    for path in &written {
        writeln!(stdout, "wrote {}", path.display())
            .map_err(|e| io_failure(Path::new("<stdout>"), e))?;
    }

    let mut first_failure = None;
    for r in &records {
        if let Err(e) = &r.outcome {
            if r.lambda == 0.0 {
                continue;
            }
            let _ = writeln!(
                stderr,
                "error: {}: lambda={}: {e}",
                e.category().as_str(),
                r.lambda
            );
            first_failure.get_or_insert(e.category());
        }
    }
    match first_failure {
        None => Ok(()),
        Some(category) => Err(Failure {
            category,
            detail: "sweep finished with failed lambda values".into(),
        }),
    }
}
