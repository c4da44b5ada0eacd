//! CSV results table and SVG radar chart.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no rows to emit")]
    NoRows,
    #[error("radar chart needs 1 to {MAX_SERIES} series, got {0}")]
    TooManySeries(usize),
    #[error("radar chart needs at least 3 categories, got {0}")]
    TooFewCategories(usize),
    #[error("series {label:?} has {got} values, expected {expected}")]
    SeriesMismatch {
        label: String,
        expected: usize,
        got: usize,
    },
    #[error("series {label:?} value {value} is outside [0, 100]")]
    OutOfRange { label: String, value: f64 },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub pipeline: String,
    pub models: String,
    pub mcr_percent: f64,
    pub khc: f64,
    pub grr_percent: f64,
}

pub const TABLE_HEADER: [&str; 5] = ["pipeline", "models", "MCR", "KHC", "GRR"];

fn two_dp(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// Renders rows in input order with a header line.
pub fn render_table(rows: &[TableRow]) -> Result<String, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::NoRows);
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(TABLE_HEADER)?;
    for r in rows {
        w.write_record([
            r.pipeline.clone(),
            r.models.clone(),
            two_dp(r.mcr_percent),
            two_dp(r.khc),
            two_dp(r.grr_percent),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Io {
        path: "<buffer>".into(),
        source: e.into_error(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn emit_table(rows: &[TableRow], path: &Path) -> Result<(), ReportError> {
    let body = render_table(rows)?;
    write_file(path, &body)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarSeries {
    pub label: String,
    /// One MCR percentage per category, in `categories` order.
    pub values: Vec<f64>,
}

pub const MAX_SERIES: usize = 4;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 680.0;
const CX: f64 = 360.0;
const CY: f64 = 310.0;
const RADIUS: f64 = 220.0;
const GRID: [u32; 5] = [20, 40, 60, 80, 100];
const COLORS: [&str; MAX_SERIES] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn num(v: f64) -> String {
    two_dp(v)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Point for axis `i` of `k` at `value` percent. Axis 0 points straight up;
/// axes proceed clockwise.
pub fn radar_point(i: usize, k: usize, value: f64) -> (f64, f64) {
    let theta = std::f64::consts::TAU * i as f64 / k as f64;
    let r = value / 100.0 * RADIUS;
    (CX + r * theta.sin(), CY - r * theta.cos())
}

pub const fn radar_radius() -> f64 {
    RADIUS
}

fn polygon_points(k: usize, value_at: impl Fn(usize) -> f64) -> String {
    (0..k)
        .map(|i| {
            let (x, y) = radar_point(i, k, value_at(i));
            format!("{},{}", num(x), num(y))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn render_radar(categories: &[String], series: &[RadarSeries]) -> Result<String, ReportError> {
    if series.is_empty() || series.len() > MAX_SERIES {
        return Err(ReportError::TooManySeries(series.len()));
    }
    let k = categories.len();
    if k < 3 {
        return Err(ReportError::TooFewCategories(k));
    }
    for s in series {
        if s.values.len() != k {
            return Err(ReportError::SeriesMismatch {
                label: s.label.clone(),
                expected: k,
                got: s.values.len(),
            });
        }
        if let Some(&value) = s.values.iter().find(|v| !(0.0..=100.0).contains(*v)) {
            return Err(ReportError::OutOfRange {
                label: s.label.clone(),
                value,
            });
        }
    }

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{1}" viewBox="0 0 {0} {1}" font-family="sans-serif" font-size="12">"#,
        WIDTH, HEIGHT
    );
    let _ = writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let _ = writeln!(w, r##"<g class="grid" fill="none" stroke="#cccccc">"##);
    for g in GRID {
        let _ = writeln!(
            w,
            r#"<polygon data-level="{g}" points="{}"/>"#,
            polygon_points(k, |_| f64::from(g))
        );
    }
    for i in 0..k {
        let (x, y) = radar_point(i, k, 100.0);
        let _ = writeln!(
            w,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            num(CX),
            num(CY),
            num(x),
            num(y)
        );
    }
    let _ = writeln!(w, "</g>");

    let _ = writeln!(w, r##"<g class="scale" fill="#888888" font-size="10">"##);
    for g in GRID {
        let (x, y) = radar_point(0, k, f64::from(g));
        let _ = writeln!(
            w,
            r#"<text x="{}" y="{}">{g}</text>"#,
            num(x + 3.0),
            num(y - 2.0)
        );
    }
    let _ = writeln!(w, "</g>");

    let _ = writeln!(w, r#"<g class="axes">"#);
    for (i, name) in categories.iter().enumerate() {
        let (x, y) = radar_point(i, k, 112.0);
        let anchor = if (x - CX).abs() < 1.0 {
            "middle"
        } else if x > CX {
            "start"
        } else {
            "end"
        };
        let _ = writeln!(
            w,
            r#"<text x="{}" y="{}" text-anchor="{anchor}" dominant-baseline="middle">{}</text>"#,
            num(x),
            num(y),
            escape(name)
        );
    }
    let _ = writeln!(w, "</g>");

    let _ = writeln!(w, r#"<g class="series">"#);
    for (s, color) in series.iter().zip(COLORS) {
        let _ = writeln!(
            w,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.15" stroke="{color}" stroke-width="2"><title>{}</title></polygon>"#,
            polygon_points(k, |i| s.values[i]),
            escape(&s.label)
        );
    }
    let _ = writeln!(w, "</g>");

    let _ = writeln!(w, r#"<g class="legend">"#);
    let legend_y = HEIGHT - 30.0 * series.len() as f64;
    for (j, (s, color)) in series.iter().zip(COLORS).enumerate() {
        let y = legend_y + 24.0 * j as f64;
        let _ = writeln!(
            w,
            r#"<rect x="40" y="{}" width="14" height="14" fill="{color}"/>"#,
            num(y)
        );
        let _ = writeln!(
            w,
            r#"<text x="62" y="{}" dominant-baseline="middle">{}</text>"#,
            num(y + 7.0),
            escape(&s.label)
        );
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

pub fn emit_radar(
    categories: &[String],
    series: &[RadarSeries],
    path: &Path,
) -> Result<(), ReportError> {
    let body = render_radar(categories, series)?;
    write_file(path, &body)
}

fn write_file(path: &Path, body: &str) -> Result<(), ReportError> {
    std::fs::write(path, body).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}
