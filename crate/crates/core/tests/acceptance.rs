//! Exit criteria for the library and CLI, one line per criterion.
//!
//! Run with `cargo test -p crossing-lab --test acceptance -- --nocapture`
//! to see the report.

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use crossing_lab::dynamics::{
    integrate_dimensionless, integrate_physical, reduce_to_dimensionless, DimensionlessLZProblem,
    PhysicalLZProblem, StepControl, Trajectory,
};
use crossing_lab::lz::{lz_compare, CompareSettings};
use crossing_lab::model::{adiabatic_solve, DiabaticModel};
use crossing_lab::sweep::reproduce_curve_figure;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn eigen_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let inputs: Vec<(f64, f64, Complex64)> = (0..1000)
        .map(|_| {
            (
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
                Complex64::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)),
            )
        })
        .collect();

    let start = Instant::now();
    let solutions: Vec<_> = inputs
        .iter()
        .map(|&(h11, h22, h12)| adiabatic_solve(h11, h22, h12))
        .collect();
    let elapsed = start.elapsed();

    let mut worst_trace = 0.0f64;
    let mut worst_det = 0.0f64;
    let mut worst_residual = 0.0f64;
    for (&(h11, h22, h12), s) in inputs.iter().zip(&solutions) {
        let trace_scale = f64::max(1.0, h11.abs() + h22.abs());
        worst_trace = worst_trace.max(((s.e1 + s.e2) - (h11 + h22)).abs() / trace_scale);
        let det = h11 * h22 - h12.norm_sqr();
        let det_scale = [1.0, (h11 * h22).abs(), h12.norm_sqr(), (s.e1 * s.e2).abs()]
            .into_iter()
            .fold(0.0, f64::max);
        worst_det = worst_det.max((s.e1 * s.e2 - det).abs() / det_scale);
        let scale = f64::max(1.0, s.gap);
        for (e, v) in [(s.e1, s.lower_state()), (s.e2, s.upper_state())] {
            let r0 = h11 * v[0] + h12 * v[1] - e * v[0];
            let r1 = h12.conj() * v[0] + h22 * v[1] - e * v[1];
            worst_residual = worst_residual.max(r0.norm().hypot(r1.norm()) / scale);
        }
    }
    check(
        worst_trace <= 1e-12
            && worst_det <= 1e-12
            && worst_residual <= 1e-12
            && elapsed < Duration::from_secs(1),
        format!(
            "trace {worst_trace:.1e}, det {worst_det:.1e}, residual {worst_residual:.1e}, {:.1} ms",
            elapsed.as_secs_f64() * 1e3
        ),
    )
}

fn toy_figure() -> Outcome {
    let fig =
        reproduce_curve_figure(&DiabaticModel::toy(), 0.0, 1.0, 201).map_err(|e| e.to_string())?;
    let min = fig.min_gap().unwrap();
    let first = fig.points[0].adiabatic.c11_sq();
    let mid = fig.points[100];
    let last = fig.points[200].adiabatic.c11_sq();
    check(
        min.r == 0.5
            && mid.r == 0.5
            && (min.adiabatic.gap - 0.2).abs() <= 1e-12
            && (mid.adiabatic.c11_sq() - 0.5).abs() <= 1e-12
            && first >= 0.99
            && last <= 0.01,
        format!(
            "min gap {:.10} at R={}, |c11|^2: {first:.6} / {:.6} / {last:.6}",
            min.adiabatic.gap,
            min.r,
            mid.adiabatic.c11_sq()
        ),
    )
}

fn free_oscillation() -> Outcome {
    let s0 = -10.0;
    let p = DimensionlessLZProblem::new(0.0).window(s0, s0 + 4.0 * PI);
    let t = integrate_dimensionless(&p).map_err(|e| e.to_string())?;
    let err = t
        .samples
        .iter()
        .map(|x| (x.c1 - Complex64::new((x.s - s0).cos(), 0.0)).norm())
        .fold(0.0, f64::max);
    check(
        err <= 1e-8,
        format!(
            "max |c1 - cos(s - s0)| = {err:.2e} over {} samples",
            t.len()
        ),
    )
}

fn physical_for(
    lambda: f64,
    coupling: Complex64,
    hbar: f64,
    velocity: f64,
    t_c: f64,
) -> PhysicalLZProblem {
    let scale = hbar / coupling.norm();
    PhysicalLZProblem {
        coupling,
        slope_difference: lambda * coupling.norm_sqr() / (hbar * velocity),
        velocity,
        hbar,
        t0: t_c - 10.0 * scale,
        t_c,
        t_end: t_c + 50.0 * scale,
        control: StepControl::default(),
    }
}

fn norm_conservation() -> Outcome {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for lambda in [2.0, 5.0, 10.0, 20.0] {
        let dim = integrate_dimensionless(&DimensionlessLZProblem::new(lambda))
            .map_err(|e| e.to_string())?;
        let phys = integrate_physical(&physical_for(
            lambda,
            Complex64::new(0.1, 0.0),
            1.0,
            1.0,
            0.0,
        ))
        .map_err(|e| e.to_string())?;
        worst = worst.max(dim.norm_drift).max(phys.norm_drift);
        parts.push(format!(
            "{lambda}: {:.1e}/{:.1e}",
            dim.norm_drift, phys.norm_drift
        ));
    }
    check(
        worst <= 1e-8,
        format!("drift (dimensionless/physical) {}", parts.join(", ")),
    )
}

fn landau_zener_limit() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for lambda in [4.0, 10.0] {
        let start = Instant::now();
        let c = lz_compare(lambda, &CompareSettings::default()).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        ok &= c.abs_error <= 0.02
            && elapsed < Duration::from_secs(10)
            && c.s0 == -10.0
            && c.s_end == 50.0;
        parts.push(format!(
            "lambda={lambda}: {:.5} vs {:.5} (|err| {:.4}, {:.2} s)",
            c.p1_numeric,
            c.p1_analytic,
            c.abs_error,
            elapsed.as_secs_f64()
        ));
    }
    check(ok, parts.join("; "))
}

fn cross_integrator() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let mut worst = 0.0f64;
    let mut lambdas = Vec::new();
    for _ in 0..5 {
        let coupling = Complex64::from_polar(rng.gen_range(0.5..1.5), rng.gen_range(0.0..TAU));
        let hbar = rng.gen_range(0.5..2.0);
        let scale = hbar / coupling.norm();
        let t_c = rng.gen_range(-5.0..5.0);
        let phys = PhysicalLZProblem {
            coupling,
            slope_difference: rng.gen_range(0.2..3.0),
            velocity: rng.gen_range(0.2..1.5),
            hbar,
            t0: t_c - 10.0 * scale,
            t_c,
            t_end: t_c + 50.0 * scale,
            control: StepControl::default(),
        };
        let dim = reduce_to_dimensionless(&phys).map_err(|e| e.to_string())?;
        let a = integrate_physical(&phys).map_err(|e| e.to_string())?;
        let b = integrate_dimensionless(&dim).map_err(|e| e.to_string())?;
        if a.len() != b.len() {
            return Err(format!("sample counts differ: {} vs {}", a.len(), b.len()));
        }
        let diff = a
            .samples
            .iter()
            .zip(&b.samples)
            .map(|(x, y)| (x.p1() - y.p1()).abs())
            .fold(0.0, f64::max);
        worst = worst.max(diff);
        lambdas.push(format!("{:.2}", dim.lambda));
    }
    check(
        worst <= 1e-6,
        format!(
            "max |dp1| = {worst:.1e} for lambda = [{}]",
            lambdas.join(", ")
        ),
    )
}

fn convergence_order() -> Outcome {
    let run = |h: f64| -> Result<Trajectory, String> {
        let p = DimensionlessLZProblem::new(1.0)
            .window(-10.0, 10.0)
            .control(StepControl::fixed(h));
        integrate_dimensionless(&p).map_err(|e| e.to_string())
    };
    // error of a run against the run with half its step, on the coarse grid
    let error = |coarse: &Trajectory, fine: &Trajectory| {
        coarse
            .samples
            .iter()
            .zip(fine.samples.iter().step_by(2))
            .map(|(a, b)| (a.c1 - b.c1).norm())
            .fold(0.0, f64::max)
    };
    let h = 0.02;
    let t1 = run(h)?;
    let t2 = run(h / 2.0)?;
    let t3 = run(h / 4.0)?;
    let e1 = error(&t1, &t2);
    let e2 = error(&t2, &t3);
    let ratio = e1 / e2;
    check(
        (12.0..=20.0).contains(&ratio),
        format!("E(h)={e1:.2e}, E(h/2)={e2:.2e}, ratio {ratio:.2}"),
    )
}

fn determinism() -> Outcome {
    let run = |dir: &std::path::Path, format: &str| -> Result<(), String> {
        let args = [
            "crossing-lab",
            "sweep",
            "--lambdas",
            "4,10",
            "--retain-traces",
            "--format",
            format,
            "--out-dir",
            dir.to_str().unwrap(),
        ];
        let (mut out, mut err) = (Vec::new(), Vec::new());
        match crossing_lab::cli::run(args, &mut out, &mut err) {
            0 => Ok(()),
            code => Err(format!("exit {code}: {}", String::from_utf8_lossy(&err))),
        }
    };
    let files = [
        "sweep.csv",
        "sweep.json",
        "limits.csv",
        "trace_00_lambda_4.csv",
        "trace_01_lambda_10.csv",
    ];
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    for dir in [a.path(), b.path()] {
        run(dir, "csv")?;
        run(dir, "json")?;
    }
    for name in files {
        let x = std::fs::read(a.path().join(name)).map_err(|e| format!("{name}: {e}"))?;
        let y = std::fs::read(b.path().join(name)).map_err(|e| format!("{name}: {e}"))?;
        if x != y {
            return Err(format!("{name} differs between runs"));
        }
    }
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.path().join("sweep.json")).unwrap())
            .map_err(|e| e.to_string())?;
    check(
        json.as_array().map(Vec::len) == Some(2),
        format!("{} files byte-identical across two sweeps", files.len()),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 8] = [
        (
            "AC1",
            "closed-form 2x2 eigenproblem identities",
            eigen_identities,
        ),
        ("AC2", "toy-model avoided crossing scan", toy_figure),
        (
            "AC3",
            "free oscillation oracle at lambda = 0",
            free_oscillation,
        ),
        (
            "AC4",
            "norm conservation of both integrators",
            norm_conservation,
        ),
        (
            "AC5",
            "Landau-Zener limit of tail-averaged survival",
            landau_zener_limit,
        ),
        (
            "AC6",
            "physical vs dimensionless integrator",
            cross_integrator,
        ),
        ("AC7", "fourth-order convergence of RK4", convergence_order),
        ("AC8", "byte-identical sweep outputs", determinism),
    ];

    let mut failures = Vec::new();
    for (id, name, criterion) in criteria {
        match criterion() {
            Ok(detail) => println!("[PASS] {id} {name}: {detail}"),
            Err(detail) => {
                println!("[FAIL] {id} {name}: {detail}");
                failures.push(id);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
