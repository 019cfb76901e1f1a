//! Standalone SVG plots.

use std::collections::BTreeSet;
use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Buckets per axis for cell plots.
const RASTER: usize = 256;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line plot with one polyline and legend entry per series.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x0, x1) = extent(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = extent(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let (x, y) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(x),
            HEIGHT - MARGIN + 16.0,
            tick(x)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            MARGIN - 6.0,
            sy(y) + 4.0,
            tick(y)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        for p in &points {
            let (x, y) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{colour}"/>"#);
        }
        let ly = MARGIN + 16.0 * (i as f64 + 1.0);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{ly:.1}" fill="{colour}">{}</text>"#,
            MARGIN + 8.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v.fract().abs() < 1e-9 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Cell map: every cell anchor as a light square, recurrent cells dark.
/// Cells are bucketed onto a fixed raster so the file size stays bounded.
pub fn cell_plot(title: &str, anchors: &[[f64; 2]], marked: &[bool]) -> String {
    let (x0, x1) = extent(anchors.iter().map(|a| a[0]));
    let (y0, y1) = extent(anchors.iter().map(|a| a[1]));
    let span = (x1 - x0).max(y1 - y0);
    let side = (HEIGHT - 2.0 * MARGIN) / RASTER as f64;
    let bucket = |v: f64, lo: f64| (((v - lo) / span * (RASTER - 1) as f64).round() as usize).min(RASTER - 1);

    let mut all = BTreeSet::new();
    let mut hit = BTreeSet::new();
    for (a, &m) in anchors.iter().zip(marked) {
        if !(a[0].is_finite() && a[1].is_finite()) {
            continue;
        }
        let key = (bucket(a[0], x0), bucket(a[1], y0));
        all.insert(key);
        if m {
            hit.insert(key);
        }
    }
    let mut out = String::new();
    header(&mut out, title);
    let left = (WIDTH - RASTER as f64 * side) / 2.0;
    let top = HEIGHT - MARGIN;
    for (set, colour) in [(&all, "#d0d0d0"), (&hit, "#b2182b")] {
        for &(i, j) in set {
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{side:.2}" height="{side:.2}" fill="{colour}"/>"#,
                left + i as f64 * side,
                top - (j as f64 + 1.0) * side
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{} of {} cells recurrent</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        marked.iter().filter(|&&m| m).count(),
        marked.len()
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_is_well_formed() {
        let svg = line_plot(
            "a < b",
            "n",
            "log s",
            &[Series {
                label: "eps 0.1".into(),
                points: vec![(1.0, 0.0), (2.0, 0.7), (3.0, f64::NAN)],
            }],
        );
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a &lt; b"));
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn cell_plot_marks_recurrent_cells() {
        let anchors: Vec<[f64; 2]> = (0..10).map(|i| [i as f64 / 9.0, 0.0]).collect();
        let marked: Vec<bool> = (0..10).map(|i| i < 3).collect();
        let svg = cell_plot("cells", &anchors, &marked);
        assert_eq!(svg.matches("#b2182b").count(), 3);
        assert_eq!(svg.matches("#d0d0d0").count(), 10);
        assert!(svg.contains("3 of 10 cells recurrent"));
    }
}
