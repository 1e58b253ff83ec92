//! Minimal deterministic SVG line plots of the `norms.csv` columns.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::HarnessError;
use crate::scenario::read_norms_csv;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;

/// Formats with a fixed number of decimals so output is byte-stable.
fn px(v: f64) -> String {
    format!("{v:.3}")
}

/// One line plot; non-finite points are dropped. An empty series yields the axes only.
pub fn line_plot_svg(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let pts: Vec<(f64, f64)> = points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = WIDTH,
        h = HEIGHT
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(
        svg,
        r#"<path class="axes" d="M {} {} L {} {} L {} {}" stroke="black" fill="none"/>"#,
        px(x0),
        px(y1),
        px(x0),
        px(y0),
        px(x1),
        px(y0)
    );
    let _ = writeln!(svg, r#"<text x="{}" y="30" font-size="16" text-anchor="middle">{}</text>"#, px(WIDTH / 2.0), escape(title));
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
        px(WIDTH / 2.0),
        px(HEIGHT - 15.0),
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        px(HEIGHT / 2.0),
        px(HEIGHT / 2.0),
        escape(y_label)
    );
    if !pts.is_empty() {
        let (xmin, xmax) = bounds(pts.iter().map(|p| p.0));
        let (ymin, ymax) = bounds(pts.iter().map(|p| p.1));
        let sx = |x: f64| x0 + (x - xmin) / (xmax - xmin) * (x1 - x0);
        let sy = |y: f64| y0 - (y - ymin) / (ymax - ymin) * (y0 - y1);
        let mut d = String::new();
        for (k, &(x, y)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{} {}", if k == 0 { "M " } else { " L " }, px(sx(x)), px(sy(y)));
        }
        let _ = writeln!(svg, r#"<path class="series" d="{d}" stroke="steelblue" stroke-width="1.5" fill="none"/>"#);
        for (v, y) in [(ymin, y0), (ymax, y1)] {
            let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{v:.6e}</text>"#, px(x0 - 4.0), px(y));
        }
        for (v, x) in [(xmin, x0), (xmax, x1)] {
            let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="10" text-anchor="middle">{v:.4}</text>"#, px(x), px(y0 + 14.0));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Vertices of the `series` path of a plot produced by [`line_plot_svg`], in SVG coordinates.
pub fn parse_series_path(svg: &str) -> Option<Vec<(f64, f64)>> {
    let line = svg.lines().find(|l| l.contains(r#"class="series""#))?;
    let start = line.find(" d=\"")? + 4;
    let end = start + line[start..].find('"')?;
    let tokens: Vec<&str> = line[start..end].split_whitespace().filter(|t| *t != "M" && *t != "L").collect();
    tokens.chunks(2).map(|c| Some((c.first()?.parse().ok()?, c.get(1)?.parse().ok()?))).collect()
}

/// Writes `plots/<column>.svg` for every norm column of `norms.csv` in `run_dir`.
pub fn emit_plots(run_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let csv_path = run_dir.join("norms.csv");
    if !csv_path.is_file() {
        return Err(HarnessError::Input(format!("missing {}", csv_path.display())));
    }
    let (header, rows) = read_norms_csv(&csv_path)?;
    let dir = run_dir.join("plots");
    std::fs::create_dir_all(&dir)?;
    let mut written = Vec::new();
    for (c, name) in header.iter().enumerate().skip(1) {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[c])).collect();
        let path = dir.join(format!("{name}.svg"));
        std::fs::write(&path, line_plot_svg(name, "t", name, &pts))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_series_has_axes_only() {
        let svg = line_plot_svg("l2", "t", "l2", &[]);
        assert!(svg.contains(r#"class="axes""#));
        assert!(parse_series_path(&svg).is_none());
    }

    #[test]
    fn decreasing_series_maps_to_descending_polyline() {
        let pts: Vec<(f64, f64)> = (0..20).map(|k| (k as f64 * 0.1, (-(k as f64) * 0.3).exp())).collect();
        let path = parse_series_path(&line_plot_svg("l2", "t", "l2", &pts)).unwrap();
        assert_eq!(path.len(), 20);
        // screen y grows downwards
        assert!(path.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 >= w[0].1));
    }

    #[test]
    fn output_is_deterministic() {
        let pts = [(0.0, 1.0), (0.5, 0.25), (1.0, f64::NAN)];
        assert_eq!(line_plot_svg("a", "t", "a", &pts), line_plot_svg("a", "t", "a", &pts));
    }
}
