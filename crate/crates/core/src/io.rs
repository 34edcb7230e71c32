//! Trajectory JSONL, rate reports, CSV input and SVG plots.

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::Serialize;

use crate::analysis::{RateFit, RateModel};
use crate::dynamics::{ParticleEnsemble, Trajectory};
use crate::error::{Error, Result};
use crate::manifold::{Coords, Manifold};

#[derive(Serialize)]
struct SnapshotLine<'a> {
    t: f64,
    points: Vec<&'a [f64]>,
    masses: &'a [f64],
}

/// One JSON object `{"t", "points", "masses"}` followed by `\n`.
pub fn write_snapshot<M: Manifold, W: Write>(t: f64, e: &ParticleEnsemble<M>, mut out: W) -> Result<()> {
    let line = SnapshotLine { t, points: e.points().iter().map(Coords::as_slice).collect(), masses: e.masses() };
    serde_json::to_writer(&mut out, &line)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_trajectory_jsonl<M: Manifold, W: Write>(traj: &Trajectory<M>, mut out: W) -> Result<()> {
    for (t, s) in traj.times.iter().zip(&traj.states) {
        write_snapshot(*t, s, &mut out)?;
    }
    Ok(())
}

/// Entry of the JSON rate report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub model: RateModel,
    pub slope: f64,
    /// Decay rate guaranteed by the theoretical envelope, when one applies.
    pub bound_rate: Option<f64>,
    pub window: (f64, f64),
    pub r_squared: f64,
}

impl RateReport {
    pub fn new(fit: &RateFit, bound_rate: Option<f64>) -> Self {
        RateReport { model: fit.model, slope: fit.slope, bound_rate, window: fit.window, r_squared: fit.r_squared }
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize, W: Write>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Reads the `t` and `diameter` columns of a diagnostics CSV.
pub fn read_diameter_series<R: Read>(input: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::usage(format!("CSV has no {name:?} column")))
    };
    let (ti, di) = (column("t")?, column("diameter")?);
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::usage(format!("row {}: column {} is not a number", row + 2, headers[i].to_string())))
        };
        out.push((parse(ti)?, parse(di)?));
    }
    Ok(out)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

/// Semi-log (exponential model) or log-log (power model) plot of a diameter
/// series, with the fitted line drawn over its window.
pub fn diameter_svg(series: &[(f64, f64)], model: RateModel, fit: Option<&RateFit>) -> String {
    let xmap = |t: f64| match model {
        RateModel::Exponential => t,
        RateModel::Power => t.ln(),
    };
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, d)| *d > 0.0 && (model == RateModel::Exponential || *t > 0.0))
        .map(|(t, d)| (xmap(*t), d.ln()))
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if pts.len() >= 2 {
        let (x0, x1) = bounds(pts.iter().map(|p| p.0));
        let (y0, y1) = bounds(pts.iter().map(|p| p.1));
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
        let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
        let _ = writeln!(
            svg,
            r#"<path d="M{m} {b} H{r} M{m} {b} V{t}" stroke="black" fill="none"/>"#,
            m = MARGIN,
            b = HEIGHT - MARGIN,
            r = WIDTH - MARGIN,
            t = MARGIN
        );
        let xlabel = if model == RateModel::Exponential { "t" } else { "ln t" };
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{xlabel}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 20.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="18" y="{}" font-size="14" transform="rotate(-90 18 {})" text-anchor="middle">ln diameter</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0
        );
        let _ = writeln!(svg, r#"<text x="{MARGIN}" y="{}" font-size="11">{x0:.3}</text>"#, HEIGHT - MARGIN + 16.0);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{x1:.3}</text>"#,
            WIDTH - MARGIN,
            HEIGHT - MARGIN + 16.0
        );
        let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{y0:.3}</text>"#, MARGIN - 4.0, HEIGHT - MARGIN);
        let _ = writeln!(svg, r#"<text x="{}" y="{MARGIN}" font-size="11" text-anchor="end">{y1:.3}</text>"#, MARGIN - 4.0);
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" stroke="steelblue" stroke-width="1.5" fill="none"/>"#, path.join(" "));
        if let Some(f) = fit {
            let (a, b) = (xmap(f.window.0), xmap(f.window.1));
            let line = |x: f64| f.slope * x + f.intercept;
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="crimson" stroke-width="2" stroke-dasharray="6 4"/>"#,
                sx(a),
                sy(line(a)),
                sx(b),
                sy(line(b))
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" font-size="13" fill="crimson" text-anchor="end">slope {:.4}</text>"#,
                WIDTH - MARGIN,
                MARGIN - 10.0,
                f.slope
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}
