//! Stable text formats for curves, trajectories and comparison tables.
//!
//! Floats are written with 17 significant digits in scientific notation,
//! which round-trips every `f64` exactly. Lines end in `\n`. Identical
//! inputs always produce identical bytes.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::lz::LZComparison;
use crate::model::CurvePoint;
use crate::sweep::SweepRecord;

pub const CURVES_HEADER: &str = "R,H11,H22,ReH12,ImH12,E1,E2,gap,c11sq";
pub const TRAJECTORY_HEADER: &str = "s,re_c1,im_c1,re_c2,im_c2,p1,p2";
pub const SWEEP_HEADER: &str = "lambda,p1_numeric,p1_analytic,abs_error,rel_error";
pub const LIMITS_HEADER: &str = "lambda,p1_analytic";

/// Rows kept per trace file at most; longer traces are thinned.
pub const MAX_TRACE_ROWS: usize = 50_000;

/// Round-trip formatting of one float.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn json_f64(x: f64) -> String {
    if x.is_finite() {
        fmt_f64(x)
    } else {
        "null".to_string()
    }
}

fn json_str(s: &str) -> String {
    serde_json::Value::String(s.to_string()).to_string()
}

fn csv_row<W: Write + ?Sized>(w: &mut W, values: &[f64]) -> io::Result<()> {
    let line: Vec<String> = values.iter().map(|&v| fmt_f64(v)).collect();
    writeln!(w, "{}", line.join(","))
}

/// Keep-every factor that holds a trace under [`MAX_TRACE_ROWS`] rows.
pub fn thinning_factor(len: usize) -> usize {
    len.div_ceil(MAX_TRACE_ROWS).max(1)
}

fn thinned(t: &Trajectory, keep_every: usize) -> impl Iterator<Item = &crate::dynamics::Sample> {
    let keep_every = keep_every.max(1);
    let last = t.len() - 1;
    t.samples
        .iter()
        .enumerate()
        .filter(move |(i, _)| i % keep_every == 0 || *i == last)
        .map(|(_, s)| s)
}

pub fn write_curves_csv<W: Write + ?Sized>(w: &mut W, points: &[CurvePoint]) -> io::Result<()> {
    writeln!(w, "{CURVES_HEADER}")?;
    for p in points {
        let a = &p.adiabatic;
        csv_row(
            w,
            &[
                p.r,
                p.elements.h11,
                p.elements.h22,
                p.elements.h12.re,
                p.elements.h12.im,
                a.e1,
                a.e2,
                a.gap,
                a.c11_sq(),
            ],
        )?;
    }
    Ok(())
}

fn trajectory_metadata<W: Write + ?Sized>(
    w: &mut W,
    t: &Trajectory,
    keep_every: usize,
) -> io::Result<()> {
    writeln!(w, "# lambda={}", fmt_f64(t.meta.lambda))?;
    writeln!(w, "# s0={}", fmt_f64(t.meta.s0))?;
    writeln!(w, "# s_end={}", fmt_f64(t.meta.s_end))?;
    writeln!(w, "# step={}", fmt_f64(t.meta.step))?;
    writeln!(w, "# stride={}", t.meta.stride * keep_every.max(1))?;
    writeln!(w, "# norm_drift={}", fmt_f64(t.norm_drift))
}

/// Trajectory CSV with trailing `# key=value` metadata lines.
pub fn write_trajectory_csv<W: Write + ?Sized>(
    w: &mut W,
    t: &Trajectory,
    keep_every: usize,
) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for s in thinned(t, keep_every) {
        csv_row(
            w,
            &[s.s, s.c1.re, s.c1.im, s.c2.re, s.c2.im, s.p1(), s.p2()],
        )?;
    }
    trajectory_metadata(w, t, keep_every)
}

/// Several traces in one file, distinguished by a leading `lambda` column.
pub fn write_combined_traces_csv<W: Write + ?Sized>(
    w: &mut W,
    traces: &[(f64, &Trajectory)],
    keep_every: usize,
) -> io::Result<()> {
    writeln!(w, "lambda,{TRAJECTORY_HEADER}")?;
    for (lambda, t) in traces {
        for s in thinned(t, keep_every) {
            csv_row(
                w,
                &[
                    *lambda,
                    s.s,
                    s.c1.re,
                    s.c1.im,
                    s.c2.re,
                    s.c2.im,
                    s.p1(),
                    s.p2(),
                ],
            )?;
        }
    }
    Ok(())
}

pub fn write_trajectory_json<W: Write + ?Sized>(
    w: &mut W,
    t: &Trajectory,
    keep_every: usize,
) -> io::Result<()> {
    write!(
        w,
        "{{\"lambda\":{},\"s0\":{},\"s_end\":{},\"step\":{},\"stride\":{},\"norm_drift\":{},\"samples\":[",
        json_f64(t.meta.lambda),
        json_f64(t.meta.s0),
        json_f64(t.meta.s_end),
        json_f64(t.meta.step),
        t.meta.stride * keep_every.max(1),
        json_f64(t.norm_drift),
    )?;
    for (i, s) in thinned(t, keep_every).enumerate() {
        if i > 0 {
            write!(w, ",")?;
        }
        write!(
            w,
            "[{},{},{},{},{}]",
            json_f64(s.s),
            json_f64(s.c1.re),
            json_f64(s.c1.im),
            json_f64(s.c2.re),
            json_f64(s.c2.im)
        )?;
    }
    writeln!(w, "]}}")
}

fn comparison_fields(c: &LZComparison) -> String {
    format!(
        "\"lambda\":{},\"p1_numeric\":{},\"p1_analytic\":{},\"abs_error\":{},\"rel_error\":{},\"s0\":{},\"s_end\":{},\"step\":{}",
        json_f64(c.lambda),
        json_f64(c.p1_numeric),
        json_f64(c.p1_analytic),
        json_f64(c.abs_error),
        json_f64(c.rel_error),
        json_f64(c.s0),
        json_f64(c.s_end),
        json_f64(c.step),
    )
}

pub fn write_comparison_json<W: Write + ?Sized>(w: &mut W, c: &LZComparison) -> io::Result<()> {
    writeln!(w, "{{{}}}", comparison_fields(c))
}

/// Sweep CSV. Failed rows carry `NaN` and are followed by a `# error` comment.
pub fn write_sweep_csv<W: Write + ?Sized>(w: &mut W, records: &[SweepRecord]) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in records {
        match &r.outcome {
            Ok(c) => csv_row(
                w,
                &[
                    c.lambda,
                    c.p1_numeric,
                    c.p1_analytic,
                    c.abs_error,
                    c.rel_error,
                ],
            )?,
            Err(e) => {
                csv_row(w, &[r.lambda, f64::NAN, f64::NAN, f64::NAN, f64::NAN])?;
                writeln!(w, "# error lambda={}: {e}", fmt_f64(r.lambda))?;
            }
        }
    }
    Ok(())
}

/// JSON array with one summary object per record, in record order.
pub fn write_sweep_json<W: Write + ?Sized>(w: &mut W, records: &[SweepRecord]) -> io::Result<()> {
    write!(w, "[")?;
    for (i, r) in records.iter().enumerate() {
        if i > 0 {
            write!(w, ",")?;
        }
        match &r.outcome {
            Ok(c) => write!(w, "{{{}}}", comparison_fields(c))?,
            Err(e) => write!(
                w,
                "{{\"lambda\":{},\"error\":{}}}",
                json_f64(r.lambda),
                json_str(&e.to_string())
            )?,
        }
    }
    writeln!(w, "]")
}

pub fn write_limits_csv<W: Write + ?Sized>(w: &mut W, limits: &[(f64, f64)]) -> io::Result<()> {
    writeln!(w, "{LIMITS_HEADER}")?;
    for &(lambda, p) in limits {
        csv_row(w, &[lambda, p])?;
    }
    Ok(())
}

/// Gnuplot commands for the two panels of a curve scan.
pub fn curves_plot_script(csv_path: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set multiplot layout 1,2\n\
         set xlabel 'R'\n\
         set ylabel 'E'\n\
         plot '{csv_path}' using 1:6 with lines title 'E1', '' using 1:7 with lines title 'E2', \
         '' using 1:2 with lines dt 2 title 'H11', '' using 1:3 with lines dt 2 title 'H22'\n\
         set ylabel '|c11|^2'\n\
         plot '{csv_path}' using 1:9 with lines title '|c11|^2'\n\
         unset multiplot\n"
    )
}

/// Gnuplot commands overlaying `p1(s)` traces and their limit lines.
pub fn probability_plot_script(traces: &[(f64, String)], limits_path: &str) -> String {
    let mut script = String::from(
        "set datafile separator ','\n\
         set xlabel 's'\n\
         set ylabel '|c1|^2'\n\
         set yrange [0:1]\n",
    );
    script.push_str(&format!("# limit lines are listed in {limits_path}\n"));
    let mut plots = Vec::new();
    for (lambda, path) in traces {
        plots.push(format!(
            "'{path}' using 1:6 with lines title 'lambda={lambda}'"
        ));
        let limit = crate::lz::lz_survival(*lambda).unwrap_or(f64::NAN);
        plots.push(format!(
            "{} with lines dt 2 lc rgb 'dark-green' notitle",
            fmt_f64(limit)
        ));
    }
    script.push_str(&format!("plot {}\n", plots.join(", ")));
    script
}

/// Writes a file through `f`, reporting I/O failures with the path.
pub fn write_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let wrap = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(wrap)?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(wrap)?;
    w.flush().map_err(wrap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate_dimensionless, DimensionlessLZProblem};
    use crate::model::DiabaticModel;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0, 5e-324] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(1.4), "1.3999999999999999e0");
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn header_only_when_empty() {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{SWEEP_HEADER}\n"));
        let mut buf = Vec::new();
        write_curves_csv(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{CURVES_HEADER}\n")
        );
    }

    #[test]
    fn curves_rows() {
        let pts = DiabaticModel::toy().sample_curves(&[0.5]).unwrap();
        let mut buf = Vec::new();
        write_curves_csv(&mut buf, &pts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let row: Vec<f64> = text
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(row.len(), 9);
        assert_eq!(row[0], 0.5);
        assert!((row[7] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn trajectory_csv_layout() {
        let t =
            integrate_dimensionless(&DimensionlessLZProblem::new(1.0).window(0.0, 1.0)).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &t, 100).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRAJECTORY_HEADER);
        let rows = lines.iter().filter(|l| !l.starts_with('#')).count() - 1;
        // 2001 samples keeping every 100th plus the last
        assert_eq!(rows, 21);
        assert!(text.contains("# lambda=1.0000000000000000e0\n"));
        assert!(text.contains("# stride=100\n"));
        assert!(text.contains("# norm_drift="));
    }

    #[test]
    fn trajectory_json_parses() {
        let t =
            integrate_dimensionless(&DimensionlessLZProblem::new(1.0).window(0.0, 0.1)).unwrap();
        let mut buf = Vec::new();
        write_trajectory_json(&mut buf, &t, 1).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["samples"].as_array().unwrap().len(), t.len());
    }

    #[test]
    fn thinning_bounds_rows() {
        assert_eq!(thinning_factor(10), 1);
        assert_eq!(thinning_factor(MAX_TRACE_ROWS), 1);
        assert_eq!(thinning_factor(120_001), 3);
    }
}
