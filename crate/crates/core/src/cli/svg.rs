//! Minimal line-plot SVG for CLI artifacts.

use std::fmt::Write as _;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// One polyline per series on shared axes, with the data range printed in
/// the corner. Non-finite points are skipped.
pub fn write_xy_svg(title: &str, series: &[Vec<(f64, f64)>]) -> String {
    render(title, series, false)
}

/// Same axes as [`write_xy_svg`] with one dot per point.
pub fn write_scatter_svg(title: &str, series: &[Vec<(f64, f64)>]) -> String {
    render(title, series, true)
}

fn render(title: &str, series: &[Vec<(f64, f64)>], dots: bool) -> String {
    let (w, h, pad) = (640.0, 480.0, 40.0);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in series.iter().flatten().filter(|(x, y)| x.is_finite() && y.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1) = (0.0, 1.0);
    } else if x0 == x1 {
        (x0, x1) = (x0 - 1.0, x1 + 1.0);
    }
    if y0 > y1 {
        (y0, y1) = (0.0, 1.0);
    } else if y0 == y1 {
        (y0, y1) = (y0 - 1.0, y1 + 1.0);
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="#888"/>"##,
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    let _ = writeln!(s, r#"<text x="{pad}" y="24" font-family="sans-serif" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(
        s,
        r#"<text x="{pad}" y="{}" font-family="sans-serif" font-size="11">x: [{x0:.4e}, {x1:.4e}]  y: [{y0:.4e}, {y1:.4e}]</text>"#,
        h - 12.0
    );
    for (i, rows) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        if dots {
            for &(x, y) in rows.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
                let _ = writeln!(s, r#"<circle cx="{:.3}" cy="{:.3}" r="1" fill="{colour}"/>"#, sx(x), sy(y));
            }
            continue;
        }
        let points: Vec<String> = rows
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.3},{:.3}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.2" points="{}"/>"#,
            colour,
            points.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_ranges_still_render() {
        let svg = write_xy_svg("a < b", &[vec![(1.0, 2.0)], vec![]]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a &lt; b"));
        assert!(!svg.contains("NaN"));
        let dots = write_scatter_svg("d", &[vec![(0.0, 0.0), (1.0, f64::NAN), (2.0, 1.0)]]);
        assert_eq!(dots.matches("<circle").count(), 2);
    }
}
