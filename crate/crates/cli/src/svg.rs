//! Static SVG line plots with axis ticks.

use std::fmt::Write;

use limit_shapes::geom::Point;

pub struct Series {
    pub points: Vec<Point>,
    pub color: &'static str,
    pub label: String,
    pub dashed: bool,
}

pub struct Plot {
    pub title: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub series: Vec<Series>,
    /// Keep one unit the same length on both axes.
    pub equal_aspect: bool,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;

/// Tick positions at a 1, 2 or 5 multiple of a power of ten.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

impl Plot {
    pub fn render(&self) -> String {
        let (mut x0, mut x1) = self.x_range;
        let (mut y0, mut y1) = self.y_range;
        let (mut pw, mut ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
        if self.equal_aspect {
            let scale = (pw / (x1 - x0)).min(ph / (y1 - y0));
            let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
            x0 = cx - 0.5 * pw / scale;
            x1 = cx + 0.5 * pw / scale;
            y0 = cy - 0.5 * ph / scale;
            y1 = cy + 0.5 * ph / scale;
        }
        pw = pw.max(1.0);
        ph = ph.max(1.0);
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for t in ticks(x0, x1) {
            let x = sx(t);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                HEIGHT - MARGIN,
                HEIGHT - MARGIN + 5.0,
                HEIGHT - MARGIN + 18.0,
                label(t)
            );
        }
        for t in ticks(y0, y1) {
            let y = sy(t);
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                MARGIN - 5.0,
                MARGIN - 8.0,
                y + 4.0,
                label(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<clipPath id="plot"><rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}"/></clipPath>"#
        );
        for (i, s) in self.series.iter().enumerate() {
            let mut path = String::new();
            for p in &s.points {
                if p.x.is_finite() && p.y.is_finite() {
                    let _ = write!(path, "{:.2},{:.2} ", sx(p.x), sy(p.y));
                }
            }
            let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<polyline clip-path="url(#plot)" fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
                s.color,
                path.trim_end()
            );
            let ly = MARGIN + 16.0 + 16.0 * i as f64;
            let lx = WIDTH - MARGIN - 150.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="1.5"{dash}/><text x="{}" y="{}">{}</text>"#,
                lx + 20.0,
                s.color,
                lx + 26.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_steps() {
        assert_eq!(ticks(0.0, 3.0), vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]);
        assert_eq!(ticks(-1.0, 1.0).len(), 5);
    }

    #[test]
    fn renders_series() {
        let svg = Plot {
            title: "t <1>".into(),
            x_range: (0.0, 1.0),
            y_range: (0.0, 1.0),
            series: vec![Series {
                points: vec![Point::new(0.0, 1.0), Point::new(1.0, 0.0)],
                color: "red",
                label: "line".into(),
                dashed: false,
            }],
            equal_aspect: true,
        }
        .render();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("t &lt;1&gt;"));
        assert!(svg.contains("polyline"));
    }
}
