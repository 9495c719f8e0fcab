//! Static SVG line charts with a logarithmic loss axis. Output depends only on
//! the input numbers, so identical data gives identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::LossSurface;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const LOG_FLOOR: f64 = 1e-15;

pub struct Series<'a> {
    pub label: String,
    pub color: String,
    pub values: &'a [f64],
}

/// Blue at `t = 0` through red at `t = 1`.
fn level_color(t: f64) -> String {
    let r = (255.0 * t).round() as u8;
    let b = (255.0 * (1.0 - t)).round() as u8;
    format!("#{r:02x}00{b:02x}")
}

fn chart(title: &str, series: &[Series<'_>], legend: bool) -> Result<String> {
    let points = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    if series.is_empty() || points == 0 {
        return Err(Error::Shape("nothing to plot".into()));
    }
    let logs = series
        .iter()
        .flat_map(|s| s.values.iter())
        .map(|v| v.max(LOG_FLOOR).log10());
    let (mut lo, mut hi) = logs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    lo = lo.floor();
    hi = hi.ceil();
    if hi <= lo {
        hi = lo + 1.0;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x_of = |i: usize| {
        if points == 1 {
            LEFT + plot_w / 2.0
        } else {
            LEFT + plot_w * i as f64 / (points - 1) as f64
        }
    };
    let y_of = |v: f64| TOP + plot_h * (hi - v.max(LOG_FLOOR).log10()) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<g stroke="black" stroke-width="1"><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}"/><line x1="{LEFT}" y1="{:.1}" x2="{:.1}" y2="{:.1}"/></g>"#,
        TOP + plot_h,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    let mut decade = lo as i32;
    while decade as f64 <= hi {
        let y = TOP + plot_h * (hi - decade as f64) / (hi - lo);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">1e{decade}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
        decade += 1;
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">iteration (1..{points})</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    for (k, ser) in series.iter().enumerate() {
        let mut pts = String::new();
        for (i, &v) in ser.values.iter().enumerate() {
            if i > 0 {
                pts.push(' ');
            }
            let _ = write!(pts, "{:.2},{:.2}", x_of(i), y_of(v));
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.2" points="{pts}"><title>{}</title></polyline>"#,
            ser.color,
            escape(&ser.label)
        );
        if legend {
            let y = TOP + 15.0 + 16.0 * k as f64;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{y:.1}" font-family="sans-serif" font-size="12" fill="{}" text-anchor="end">{}</text>"#,
                WIDTH - RIGHT - 5.0,
                ser.color,
                escape(&ser.label)
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One curve per history level `0..levels`, coloured blue (no history) to red.
pub fn loss_surface_svg(surface: &LossSurface, levels: usize, title: &str) -> Result<String> {
    if surface.is_empty() {
        return Err(Error::Shape("loss surface is empty".into()));
    }
    if levels == 0 || levels > surface.levels() {
        return Err(Error::Shape(format!(
            "cannot plot {levels} levels of a surface with {}",
            surface.levels()
        )));
    }
    let columns: Vec<Vec<f64>> = (0..levels).map(|h| surface.column(h)).collect();
    let series: Vec<Series<'_>> = columns
        .iter()
        .enumerate()
        .map(|(h, values)| Series {
            label: format!("history {h}"),
            color: level_color(if levels == 1 { 0.0 } else { h as f64 / (levels - 1) as f64 }),
            values,
        })
        .collect();
    chart(title, &series, false)
}

pub fn render_loss_svg(surface: &LossSurface, levels: usize, title: &str, path: &Path) -> Result<()> {
    let svg = loss_surface_svg(surface, levels, title)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}

/// Overlay of labelled curves, e.g. sum-over-history loss of several runs.
pub fn render_series_svg(title: &str, series: &[Series<'_>], path: &Path) -> Result<()> {
    let svg = chart(title, series, true)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}
