//! Minimal SVG line charts.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const PANEL_HEIGHT: f64 = 260.0;
const SMALL_PANEL_HEIGHT: f64 = 110.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 30.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub struct Line {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

pub struct Panel {
    pub title: String,
    pub lines: Vec<Line>,
}

/// Round tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn bounds<'a>(vals: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
        return (lo - pad, hi + pad);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn draw_panel(out: &mut String, p: &Panel, top: f64, height: f64) {
    let (x0, x1) = bounds(p.lines.iter().flat_map(|l| &l.x));
    let (y0, y1) = bounds(p.lines.iter().flat_map(|l| &l.y));
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = height - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| top + MARGIN_TOP + (y1 - y) / (y1 - y0) * plot_h;
    let bottom = top + MARGIN_TOP + plot_h;

    let _ = writeln!(
        out,
        r#"<text x="{MARGIN_LEFT}" y="{:.1}" font-size="14" font-weight="bold">{}</text>"#,
        top + 18.0,
        escape(&p.title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN_LEFT}" y="{:.1}" width="{plot_w}" height="{plot_h:.1}" fill="none" stroke="#444"/>"##,
        top + MARGIN_TOP
    );
    for t in ticks(x0, x1, 8) {
        let x = sx(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.1}" y1="{bottom:.1}" x2="{x:.1}" y2="{:.1}" stroke="#444"/><text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">{t}</text>"##,
            bottom + 4.0,
            bottom + 16.0
        );
    }
    for t in ticks(y0, y1, 5) {
        let y = sy(t);
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{MARGIN_LEFT}" y2="{y:.1}" stroke="#444"/><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"##,
            MARGIN_LEFT - 4.0,
            MARGIN_LEFT - 6.0,
            y + 4.0,
            format_tick(t)
        );
    }
    for (i, l) in p.lines.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = l
            .x
            .iter()
            .zip(&l.y)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        if p.lines.len() > 1 {
            let lx = WIDTH - MARGIN_RIGHT - 150.0;
            let ly = top + MARGIN_TOP + 14.0 + 16.0 * i as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{lx}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}" font-size="12">{}</text>"#,
                lx + 20.0,
                lx + 25.0,
                ly + 4.0,
                escape(&l.label)
            );
        }
    }
}

fn format_tick(t: f64) -> String {
    if t == 0.0 || (t.abs() >= 0.01 && t.abs() < 1e5) {
        let s = format!("{t:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{t:.1e}")
    }
}

/// Vertically stacked panels sharing the page width.
pub fn render(panels: &[Panel]) -> String {
    let height = if panels.len() > 2 { SMALL_PANEL_HEIGHT } else { PANEL_HEIGHT };
    let total = height * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{total}" viewBox="0 0 {WIDTH} {total}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        draw_panel(&mut out, p, i as f64 * height, height);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round_and_inside() {
        let t = ticks(1871.0, 2022.0, 8);
        assert_eq!(t.first(), Some(&1880.0));
        assert_eq!(t.last(), Some(&2020.0));
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn render_has_one_polyline_per_line() {
        let p = Panel {
            title: "a < b".into(),
            lines: vec![
                Line { label: "obs".into(), x: vec![1.0, 2.0, 3.0], y: vec![1.0, 4.0, 2.0] },
                Line { label: "pred".into(), x: vec![1.0, 2.0, 3.0], y: vec![1.5, 3.0, f64::NAN] },
            ],
        };
        let s = render(&[p]);
        assert!(s.starts_with("<svg"));
        assert_eq!(s.matches("<polyline").count(), 2);
        assert!(s.contains("a &lt; b"));
        assert!(!s.contains("NaN"));
    }

    #[test]
    fn constant_line_does_not_divide_by_zero() {
        let p = Panel {
            title: String::new(),
            lines: vec![Line { label: "c".into(), x: vec![0.0, 1.0], y: vec![5.0, 5.0] }],
        };
        assert!(!render(&[p]).contains("inf"));
    }
}
