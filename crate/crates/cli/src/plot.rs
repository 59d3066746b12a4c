//! Minimal SVG line charts.

use std::fmt::Write;

const WIDTH: f64 = 520.0;
const HEIGHT: f64 = 360.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 50.0;
const MAX_POINTS: usize = 4000;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub color: &'static str,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, x: &[f64], y: &[f64], color: &'static str) -> Self {
        Series {
            label: label.into(),
            x: x.to_vec(),
            y: y.to_vec(),
            color,
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct Chart {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub series: Vec<Series>,
    /// Horizontal reference line.
    pub hline: Option<f64>,
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn bounds(series: &[Series], hline: Option<f64>) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for (&x, &y) in s.x.iter().zip(&s.y) {
            if x.is_finite() && y.is_finite() {
                b.0 = b.0.min(x);
                b.1 = b.1.max(x);
                b.2 = b.2.min(y);
                b.3 = b.3.max(y);
            }
        }
    }
    if let Some(h) = hline {
        b.2 = b.2.min(h);
        b.3 = b.3.max(h);
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if b.1 <= b.0 {
        b.1 = b.0 + 1.0;
    }
    let pad = if b.3 > b.2 { 0.05 * (b.3 - b.2) } else { 0.5 };
    (b.0, b.1, b.2 - pad, b.3 + pad)
}

impl Chart {
    /// Chart body translated to `(ox, oy)`.
    fn render_into(&self, out: &mut String, ox: f64, oy: f64) {
        let (x0, x1, y0, y1) = bounds(&self.series, self.hline);
        let pw = WIDTH - MARGIN_L - MARGIN_R;
        let ph = HEIGHT - MARGIN_T - MARGIN_B;
        let sx = |x: f64| ox + MARGIN_L + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| oy + MARGIN_T + (y1 - y) / (y1 - y0) * ph;
        let _ = writeln!(
            out,
            r#"<rect x="{:.1}" y="{:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="black"/>"#,
            ox + MARGIN_L,
            oy + MARGIN_T
        );
        for t in ticks(x0, x1) {
            let x = sx(t);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
                oy + MARGIN_T + ph,
                oy + MARGIN_T + ph + 5.0,
                oy + MARGIN_T + ph + 18.0,
                label(t)
            );
        }
        for t in ticks(y0, y1) {
            let y = sy(t);
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"#,
                ox + MARGIN_L - 5.0,
                ox + MARGIN_L,
                ox + MARGIN_L - 8.0,
                y + 4.0,
                label(t)
            );
        }
        if let Some(h) = self.hline {
            let y = sy(h);
            let _ = writeln!(
                out,
                r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#999" stroke-dasharray="2,3"/>"##,
                ox + MARGIN_L,
                ox + MARGIN_L + pw
            );
        }
        for s in &self.series {
            let stride = s.x.len().div_ceil(MAX_POINTS).max(1);
            let mut d = String::new();
            let mut pen_down = false;
            for (i, (&x, &y)) in s.x.iter().zip(&s.y).enumerate() {
                if i % stride != 0 && i + 1 != s.x.len() {
                    continue;
                }
                if !(x.is_finite() && y.is_finite()) {
                    pen_down = false;
                    continue;
                }
                let _ = write!(d, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, sx(x), sy(y));
                pen_down = true;
            }
            let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.4"{dash}/>"#,
                d.trim_end(),
                s.color
            );
        }
        for (i, s) in self.series.iter().enumerate() {
            let y = oy + MARGIN_T + 14.0 + 15.0 * i as f64;
            let x = ox + WIDTH - MARGIN_R - 150.0;
            let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<line x1="{x:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-width="2"{dash}/><text x="{:.1}" y="{y:.1}" font-size="11">{}</text>"#,
                y - 4.0,
                x + 20.0,
                y - 4.0,
                s.color,
                x + 25.0,
                escape(&s.label)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{}</text>"#,
            ox + MARGIN_L + pw / 2.0,
            oy + 22.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
            ox + MARGIN_L + pw / 2.0,
            oy + HEIGHT - 10.0,
            escape(&self.xlabel)
        );
        let (lx, ly) = (ox + 16.0, oy + MARGIN_T + ph / 2.0);
        let _ = writeln!(
            out,
            r#"<text x="{lx:.1}" y="{ly:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 {lx:.1} {ly:.1})">{}</text>"#,
            escape(&self.ylabel)
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Charts side by side in one SVG document.
pub fn figure(charts: &[Chart]) -> String {
    let w = WIDTH * charts.len().max(1) as f64;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{HEIGHT:.0}\" viewBox=\"0 0 {w:.0} {HEIGHT:.0}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for (i, c) in charts.iter().enumerate() {
        c.render_into(&mut out, WIDTH * i as f64, 0.0);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_steps() {
        assert_eq!(ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(ticks(25.0, 75.0), vec![30.0, 40.0, 50.0, 60.0, 70.0]);
    }

    #[test]
    fn renders_paths_and_labels() {
        let x = [0.0, 1.0, 2.0];
        let c = Chart {
            title: "a < b".into(),
            series: vec![Series::new("s", &x, &[1.0, f64::NAN, 3.0], PALETTE[0])],
            hline: Some(0.0),
            ..Chart::default()
        };
        let svg = figure(&[c]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("a &lt; b"));
        assert_eq!(svg.matches("<path").count(), 1);
        assert!(svg.contains("M") && !svg.contains("NaN"));
    }
}
