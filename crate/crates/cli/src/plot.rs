use std::fmt::Write as _;
use std::fs;

use dc_control::experiment::AGGREGATE_COLUMNS;
use dc_control::{Error, Result};

use crate::PlotArgs;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const LEGEND: f64 = 110.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Mean performance of one algorithm along the grid, with its variance.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub algorithm: String,
    /// `(grid_value, mean_T, variance)` in grid order.
    pub points: Vec<(f64, f64, f64)>,
}

fn parse_field(record: &csv::StringRecord, index: usize, row: usize, line: usize) -> Result<Option<f64>> {
    let raw = record.get(index).unwrap_or("").trim();
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse::<f64>().map(Some).map_err(|_| Error::Parse {
        line,
        message: format!("row {row}: {} `{raw}` is not a number", AGGREGATE_COLUMNS[index]),
    })
}

/// Reads aggregate rows into one series per algorithm, in order of first appearance.
fn read_series(text: &str) -> Result<Vec<PlotSeries>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: format!("header: {e}"),
    })?;
    if headers.iter().ne(AGGREGATE_COLUMNS) {
        return Err(Error::Parse {
            line: 1,
            message: format!("header must be `{}`", AGGREGATE_COLUMNS.join(",")),
        });
    }
    let mut series: Vec<PlotSeries> = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let row = n + 1;
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(row + 1, |p| p.line() as usize),
            message: format!("row {row}: {e}"),
        })?;
        let line = record.position().map_or(row + 1, |p| p.line() as usize);
        let grid = parse_field(&record, 0, row, line)?.ok_or_else(|| Error::Parse {
            line,
            message: format!("row {row}: grid_value is empty"),
        })?;
        let algorithm = record.get(1).unwrap_or("").to_string();
        let Some(mean) = parse_field(&record, 2, row, line)? else {
            continue;
        };
        let variance = parse_field(&record, 3, row, line)?.unwrap_or(0.0);
        match series.iter_mut().find(|s| s.algorithm == algorithm) {
            Some(s) => s.points.push((grid, mean, variance)),
            None => series.push(PlotSeries {
                algorithm,
                points: vec![(grid, mean, variance)],
            }),
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(series)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Line chart of mean_T against the grid value, one polyline per series and a
/// band of one standard deviation around it.
pub fn render_svg(series: &[PlotSeries]) -> String {
    let points = || series.iter().flat_map(|s| s.points.iter());
    let (x0, x1) = range(points().map(|p| p.0));
    let (y0, y1) = range(points().flat_map(|p| {
        let sd = p.2.max(0.0).sqrt();
        [p.1 - sd, p.1 + sd]
    }));
    let plot_w = WIDTH - 2.0 * MARGIN - LEGEND;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * plot_h;

    let mut svg = String::new();
    let w = &mut svg;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    let (left, right, top, bottom) = (MARGIN, MARGIN + plot_w, MARGIN, HEIGHT - MARGIN);
    writeln!(
        w,
        r#"<g class="axes" stroke="black"><line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}"/><line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}"/></g>"#
    )
    .unwrap();
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(fx),
            bottom + 15.0,
            format_tick(fx)
        )
        .unwrap();
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 5.0,
            sy(fy) + 4.0,
            format_tick(fy)
        )
        .unwrap();
    }
    writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">grid value</text>"#, left + plot_w / 2.0, HEIGHT - 10.0).unwrap();
    writeln!(w, r#"<text x="15" y="{:.2}" transform="rotate(-90 15 {:.2})" text-anchor="middle">mean T</text>"#, top + plot_h / 2.0, top + plot_h / 2.0).unwrap();

    for (n, s) in series.iter().enumerate() {
        let color = COLORS[n % COLORS.len()];
        let name = escape(&s.algorithm);
        let upper = s.points.iter().map(|p| (p.0, p.1 + p.2.max(0.0).sqrt()));
        let lower = s.points.iter().rev().map(|p| (p.0, p.1 - p.2.max(0.0).sqrt()));
        let band: Vec<String> = upper.chain(lower).map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let line: Vec<String> = s.points.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
        writeln!(w, r#"<g class="series" data-algorithm="{name}">"#).unwrap();
        writeln!(w, r#"<polygon points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#, band.join(" ")).unwrap();
        writeln!(w, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" ")).unwrap();
        writeln!(w, "</g>").unwrap();
        let ly = top + 16.0 * n as f64;
        writeln!(
            w,
            r#"<g class="legend"><rect x="{:.2}" y="{:.2}" width="12" height="3" fill="{color}"/><text x="{:.2}" y="{:.2}">{name}</text></g>"#,
            right + 15.0,
            ly,
            right + 32.0,
            ly + 5.0
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

pub(crate) fn plot(args: &PlotArgs) -> Result<()> {
    let text = fs::read_to_string(&args.aggregate).map_err(|source| Error::Io {
        path: args.aggregate.clone(),
        source,
    })?;
    let series = read_series(&text)?;
    fs::write(&args.out, render_svg(&series)).map_err(|source| Error::Io {
        path: args.out.clone(),
        source,
    })
}
