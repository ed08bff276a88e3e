//! Minimal SVG emission for line charts and categorical heat maps.

use std::fmt::Write as _;

const W: f64 = 720.0;
const H: f64 = 460.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub struct Series {
    pub label: String,
    /// Points with a non-finite `y` break the line.
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub dashed: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.03 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn header(s: &mut String, title: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        (W - RIGHT + LEFT) / 2.0,
        escape(title)
    );
}

fn axes(s: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (bx, by) = (H - BOTTOM, W - RIGHT);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        by - LEFT,
        bx - TOP
    );
    for k in 0..=5 {
        let t = k as f64 / 5.0;
        let (x, y) = (f.x0 + t * (f.x1 - f.x0), f.y0 + t * (f.y1 - f.y0));
        let (px, py) = (f.px(x), f.py(y));
        let _ = writeln!(s, r#"<line x1="{px:.1}" y1="{bx}" x2="{px:.1}" y2="{}" stroke="black"/>"#, bx + 5.0);
        let _ = writeln!(s, r#"<text x="{px:.1}" y="{}" text-anchor="middle">{}</text>"#, bx + 18.0, tick(x));
        let _ = writeln!(s, r#"<line x1="{}" y1="{py:.1}" x2="{LEFT}" y2="{py:.1}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, LEFT - 8.0, py + 4.0, tick(y));
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
        (LEFT + by) / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        (TOP + bx) / 2.0,
        (TOP + bx) / 2.0,
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn legend(s: &mut String, entries: &[(String, &str, bool)], filled: bool) {
    for (k, (label, color, dashed)) in entries.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * k as f64;
        let x = W - RIGHT + 12.0;
        if filled {
            let _ = writeln!(s, r#"<rect x="{x}" y="{}" width="14" height="10" fill="{color}"/>"#, y - 8.0);
        } else {
            let dash = if *dashed { r#" stroke-dasharray="5,3""# } else { "" };
            let _ = writeln!(
                s,
                r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/>"#,
                x + 20.0
            );
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, x + 26.0, y + 4.0, escape(label));
    }
}

/// Line chart with optional vertical markers (e.g. transition points).
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], markers: &[f64]) -> String {
    let finite = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let ((y0, y1), (x0, x1)) = (widen(y0, y1), if x1 > x0 { (x0, x1) } else { widen(x0, x1) });
    let f = Frame { x0, x1, y0, y1 };
    let mut s = String::new();
    header(&mut s, title);
    axes(&mut s, &f, x_label, y_label);
    for &m in markers {
        let px = f.px(m);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.1}" y1="{TOP}" x2="{px:.1}" y2="{}" stroke="gray" stroke-dasharray="2,3"/>"#,
            H - BOTTOM
        );
    }
    for ser in series {
        let dash = if ser.dashed { r#" stroke-dasharray="5,3""# } else { "" };
        for run in ser.points.split(|p| !p.1.is_finite()).filter(|r| !r.is_empty()) {
            let pts: Vec<String> = run.iter().map(|&(x, y)| format!("{:.1},{:.1}", f.px(x), f.py(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                pts.join(" "),
                ser.color
            );
        }
    }
    let entries: Vec<(String, &str, bool)> = series.iter().map(|s| (s.label.clone(), s.color, s.dashed)).collect();
    legend(&mut s, &entries, false);
    s.push_str("</svg>\n");
    s
}

/// Heat map of categories `cells[ix][iy]` over the node coordinates `xs` and `ys`.
pub fn category_map(
    title: &str,
    x_label: &str,
    y_label: &str,
    xs: &[f64],
    ys: &[f64],
    cells: &[Vec<Option<usize>>],
    labels: &[(usize, String)],
) -> String {
    let half = |v: &[f64]| if v.len() > 1 { 0.5 * (v[1] - v[0]) } else { 0.5 };
    let (hx, hy) = (half(xs), half(ys));
    let f = Frame {
        x0: xs.first().copied().unwrap_or(0.0) - hx,
        x1: xs.last().copied().unwrap_or(1.0) + hx,
        y0: ys.first().copied().unwrap_or(0.0) - hy,
        y1: ys.last().copied().unwrap_or(1.0) + hy,
    };
    let color = |k: usize| PALETTE[k % PALETTE.len()];
    let mut s = String::new();
    header(&mut s, title);
    for (ix, col) in cells.iter().enumerate() {
        for (iy, cell) in col.iter().enumerate() {
            let Some(k) = cell else { continue };
            let (xa, xb) = (f.px(xs[ix] - hx), f.px(xs[ix] + hx));
            let (ya, yb) = (f.py(ys[iy] + hy), f.py(ys[iy] - hy));
            let _ = writeln!(
                s,
                r#"<rect x="{xa:.2}" y="{ya:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                xb - xa,
                yb - ya,
                color(*k)
            );
        }
    }
    axes(&mut s, &f, x_label, y_label);
    let entries: Vec<(String, &str, bool)> = labels.iter().map(|(k, l)| (l.clone(), color(*k), false)).collect();
    legend(&mut s, &entries, true);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_chart_breaks_at_gaps() {
        let s = line_chart(
            "t",
            "x",
            "y",
            &[Series {
                label: "a<b".into(),
                points: vec![(0.0, 1.0), (1.0, 2.0), (2.0, f64::NAN), (3.0, 1.0), (4.0, 0.0)],
                color: PALETTE[0],
                dashed: false,
            }],
            &[1.5],
        );
        assert_eq!(s.matches("<polyline").count(), 2);
        assert!(s.contains("a&lt;b"));
        assert!(s.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn category_map_skips_empty_cells() {
        let cells = vec![vec![Some(1), None], vec![Some(4), Some(4)]];
        let s = category_map("t", "x", "y", &[0.0, 1.0], &[0.0, 1.0], &cells, &[(1, "disk".into())]);
        // three cells plus the background and one legend swatch
        assert_eq!(s.matches("<rect").count(), 3 + 1 + 1 + 1);
    }
}
