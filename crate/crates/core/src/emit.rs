//! Table, JSON and SVG output for sweeps.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::floquet::StabilityClass;
use crate::scan::{InstabilityInterval, RunConfig, TraceSample};

pub const CSV_HEADER: &str = "E,ln_E,trace,det_residual,class";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(mut w: W, samples: &[TraceSample]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for s in samples {
        let class = s.class.map_or("failed", |c| c.label());
        writeln!(
            w,
            "{},{},{},{},{class}",
            fmt17(s.energy),
            fmt17(s.ln_e),
            fmt17(s.trace),
            fmt17(s.det_residual)
        )?;
    }
    Ok(())
}

fn parse_field(field: Option<&str>, line: usize) -> Result<f64> {
    let f = field.ok_or_else(|| Error::Config(format!("line {line}: missing column")))?;
    f.parse().map_err(|_| Error::Config(format!("line {line}: bad number `{f}`")))
}

/// Reads a table written by [`write_csv`]. Failed rows come back with
/// `class = None` and a generic failure note.
pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<TraceSample>> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != CSV_HEADER {
        return Err(Error::Config(format!("expected header `{CSV_HEADER}`")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let energy = parse_field(cols.next(), i + 2)?;
        let ln_e = parse_field(cols.next(), i + 2)?;
        let trace = parse_field(cols.next(), i + 2)?;
        let det_residual = parse_field(cols.next(), i + 2)?;
        let label = cols.next().unwrap_or("").trim();
        let (class, failure) = if label == "failed" {
            (None, Some("failed".to_string()))
        } else {
            let mut c: StabilityClass = label.parse()?;
            c.trace = trace;
            (Some(c), None)
        };
        out.push(TraceSample {
            energy,
            ln_e,
            trace,
            det_residual,
            class,
            failure,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
struct Meta<'a> {
    potential: String,
    kappa: f64,
    e_min: f64,
    e_max: f64,
    grid: crate::scan::Grid,
    points: usize,
    tol: f64,
    tol_class: f64,
    collapse_tol: f64,
    max_det_residual: f64,
    failed_points: usize,
    version: &'a str,
}

/// `{intervals: [{e_lo, e_hi, sign, collapsed}], meta: {...}}`.
pub fn intervals_json(intervals: &[InstabilityInterval], samples: &[TraceSample], cfg: &RunConfig) -> Value {
    let meta = Meta {
        potential: cfg.potential.to_string(),
        kappa: cfg.kappa,
        e_min: cfg.e_min,
        e_max: cfg.e_max,
        grid: cfg.grid,
        points: cfg.points,
        tol: cfg.tol,
        tol_class: cfg.tol_class,
        collapse_tol: cfg.collapse_tol,
        max_det_residual: samples
            .iter()
            .filter(|s| s.is_ok())
            .map(|s| s.det_residual)
            .fold(0.0, f64::max),
        failed_points: samples.iter().filter(|s| !s.is_ok()).count(),
        version: env!("CARGO_PKG_VERSION"),
    };
    json!({ "intervals": intervals, "meta": meta })
}

const W: f64 = 800.0;
const H: f64 = 400.0;
const PAD: f64 = 40.0;

/// Trace against `ln E` as a polyline, with the two guide lines `tr = ±2`.
pub fn trace_svg(samples: &[TraceSample]) -> String {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.trace.is_finite())
        .map(|s| (s.ln_e, s.trace))
        .collect();
    let (x0, x1) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (x0, x1) = if x0 < x1 { (x0, x1) } else { (x0 - 1.0, x0 + 1.0) };
    let ymax = pts.iter().map(|p| p.1.abs()).fold(3.0, f64::max).min(10.0);
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H / 2.0 - y.clamp(-ymax, ymax) / ymax * (H / 2.0 - PAD);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(
        s,
        r##"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="#999"/>"##,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for g in [2.0, -2.0] {
        let _ = writeln!(
            s,
            r##"<line class="guide" x1="{PAD}" x2="{}" y1="{y:.2}" y2="{y:.2}" stroke="#c33" stroke-dasharray="4 3"/>"##,
            W - PAD,
            y = sy(g)
        );
    }
    let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#1f4e9c" stroke-width="1.2" points="{}"/>"##,
        path.join(" ")
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">ln E</text>"#,
        W / 2.0,
        H - 10.0
    );
    let _ = writeln!(s, r#"<text x="8" y="{}" font-size="12">tr</text>"#, H / 2.0);
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="{}" font-size="11">{x0:.2}</text><text x="{}" y="{}" font-size="11" text-anchor="end">{x1:.2}</text>"#,
        H - PAD + 14.0,
        W - PAD,
        H - PAD + 14.0
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::Monodromy;
    use crate::potential::Potential;
    use proptest::prelude::*;

    fn sample(e: f64, tr: f64) -> TraceSample {
        let m = Monodromy::from_entries([[tr, 1.0], [0.0, 0.0]], 1.0);
        TraceSample::from_monodromy(e, &m, 1e-6)
    }

    #[test]
    fn csv_has_header_and_failed_rows() {
        let err = Error::Quadrature(1.0);
        let rows = vec![sample(0.5, 1.0), TraceSample::failed(0.7, &err)];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("E,ln_E,trace,det_residual,class\n"));
        assert!(text.lines().nth(2).unwrap().ends_with(",failed"));
        let back = read_csv(text.as_bytes()).unwrap();
        assert!(back[1].trace.is_nan() && back[1].class.is_none());
    }

    #[test]
    fn svg_has_two_guides() {
        let rows: Vec<_> = (1..50).map(|i| sample(i as f64 * 0.1, (i as f64).sin() * 3.0)).collect();
        let svg = trace_svg(&rows);
        assert_eq!(svg.matches("<line").count(), 2);
        assert!(svg.contains("<polyline"));
    }

    #[test]
    fn json_shape() {
        let cfg = RunConfig::new(Potential::pendulum(), 1.0, 0.1, 10.0, 5);
        let iv = [InstabilityInterval { e_lo: 2.0, e_hi: 4.0, sign: -1, collapsed: false }];
        let v = intervals_json(&iv, &[sample(1.0, 0.0)], &cfg);
        assert_eq!(v["intervals"][0]["e_lo"], 2.0);
        assert_eq!(v["intervals"][0]["sign"], -1);
        assert_eq!(v["intervals"][0]["collapsed"], false);
        assert_eq!(v["meta"]["potential"], "pendulum");
        assert_eq!(v["meta"]["kappa"], 1.0);
    }

    proptest! {
        #[test]
        fn csv_round_trips_bitwise(rows in prop::collection::vec((1e-12f64..1e6, -1e3f64..1e3), 1..40)) {
            let samples: Vec<_> = rows.iter().map(|&(e, t)| sample(e, t)).collect();
            let mut buf = Vec::new();
            write_csv(&mut buf, &samples).unwrap();
            let back = read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), samples.len());
            for (a, b) in samples.iter().zip(&back) {
                prop_assert_eq!(a.energy.to_bits(), b.energy.to_bits());
                prop_assert_eq!(a.ln_e.to_bits(), b.ln_e.to_bits());
                prop_assert_eq!(a.trace.to_bits(), b.trace.to_bits());
                prop_assert_eq!(a.det_residual.to_bits(), b.det_residual.to_bits());
                prop_assert_eq!(a.class, b.class);
            }
        }
    }
}
