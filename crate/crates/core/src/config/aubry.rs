use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::Sites;
use crate::error::Result;

/// `(n, x_n)` rows over the configuration's display range.
pub fn aubry_rows<S: Sites + ?Sized>(x: &S) -> Vec<(i64, f64)> {
    let (lo, hi) = x.display_range();
    (lo..=hi).map(|n| (n, x.site(n))).collect()
}

/// Writes a CSV with header `n,x`.
pub fn write_aubry_csv(path: &Path, rows: &[(i64, f64)]) -> Result<()> {
    let mut s = String::from("n,x\n");
    for (n, x) in rows {
        writeln!(s, "{n},{x:.17e}").expect("write to string");
    }
    fs::write(path, s)?;
    Ok(())
}

/// Writes an SVG with one polyline per series, site index horizontally and
/// position vertically.
pub fn write_aubry_svg(path: &Path, series: &[Vec<(i64, f64)>]) -> Result<()> {
    fs::write(path, aubry_svg(series))?;
    Ok(())
}

fn aubry_svg(series: &[Vec<(i64, f64)>]) -> String {
    let (w, h, pad) = (640.0, 480.0, 40.0);
    let pts = series.iter().flatten();
    let (mut n0, mut n1, mut x0, mut x1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(n, x) in pts {
        n0 = n0.min(n as f64);
        n1 = n1.max(n as f64);
        x0 = x0.min(x);
        x1 = x1.max(x);
    }
    if n1 <= n0 {
        n1 = n0 + 1.0;
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let sx = |n: f64| pad + (n - n0) / (n1 - n0) * (w - 2.0 * pad);
    let sy = |x: f64| h - pad - (x - x0) / (x1 - x0) * (h - 2.0 * pad);
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for (i, rows) in series.iter().enumerate() {
        let points: Vec<String> = rows
            .iter()
            .map(|&(n, x)| format!("{:.3},{:.3}", sx(n as f64), sy(x)))
            .collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            palette[i % palette.len()],
            points.join(" ")
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{PeriodicConfiguration, WindowConfiguration};

    #[test]
    fn csv_and_svg_contracts() {
        let dir = tempfile::tempdir().unwrap();
        let x = PeriodicConfiguration::uniform(1, 1, 0.25);
        let rows = aubry_rows(&x);
        assert_eq!(rows.len(), 3);
        let path = dir.path().join("a.csv");
        write_aubry_csv(&path, &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n,x"));
        assert_eq!(lines.count(), 3);

        let w = WindowConfiguration::from_fn(
            -2,
            3,
            PeriodicConfiguration::uniform(0, 1, 0.0),
            PeriodicConfiguration::uniform(0, 1, 1.0),
            |n| n as f64 / 6.0,
        )
        .unwrap();
        let wrows = aubry_rows(&w);
        assert_eq!(wrows.first().unwrap().0, -2);
        assert_eq!(wrows.last().unwrap().0, 3);
        let svg = dir.path().join("a.svg");
        write_aubry_svg(&svg, &[rows, wrows]).unwrap();
        let text = fs::read_to_string(&svg).unwrap();
        assert_eq!(text.matches("<polyline").count(), 2);
    }
}
