//! Minimal deterministic SVG writer: every coordinate is printed with two
//! decimals, elements appear in call order, and nothing depends on time.

use std::fmt::Write as _;

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 560.0;
const MARGIN: f64 = 56.0;

/// Data rectangle mapped onto the drawing area.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Frame {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        let pad = |lo: f64, hi: f64| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        let (x_min, x_max) = pad(x_min, x_max);
        let (y_min, y_max) = pad(y_min, y_max);
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    /// Bounding box of the points with a 5% border.
    pub fn around(points: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let (mut a, mut b, mut c, mut d) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for (x, y) in points {
            if x.is_finite() && y.is_finite() {
                a = a.min(x);
                b = b.max(x);
                c = c.min(y);
                d = d.max(y);
            }
        }
        if !a.is_finite() {
            return Self::new(0.0, 1.0, 0.0, 1.0);
        }
        let (dx, dy) = ((b - a).max(1e-12) * 0.05, (d - c).max(1e-12) * 0.05);
        Self::new(a - dx, b + dx, c - dy, d + dy)
    }

    pub fn contains(&self, (x, y): (f64, f64)) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    fn map(&self, (x, y): (f64, f64)) -> (f64, f64) {
        let u = MARGIN + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - 2.0 * MARGIN);
        let v = HEIGHT
            - MARGIN
            - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - 2.0 * MARGIN);
        (u, v)
    }
}

/// Tick positions at 1, 2 or 5 times a power of ten.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    let s = format!("{:.6}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

pub struct Svg {
    frame: Frame,
    body: String,
}

impl Svg {
    pub fn new(frame: Frame) -> Self {
        Self {
            frame,
            body: String::new(),
        }
    }

    /// Axes box with ticks, labels and a title.
    pub fn axes(&mut self, title: &str, x_label: &str, y_label: &str) {
        let f = self.frame;
        let (x0, y0) = f.map((f.x_min, f.y_min));
        let (x1, y1) = f.map((f.x_max, f.y_max));
        let _ = writeln!(
            self.body,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444" stroke-width="1"/>"##,
            x0,
            y1,
            x1 - x0,
            y0 - y1
        );
        for t in ticks(f.x_min, f.x_max) {
            let (u, _) = f.map((t, f.y_min));
            let _ = writeln!(
                self.body,
                r##"<line x1="{u:.2}" y1="{y0:.2}" x2="{u:.2}" y2="{:.2}" stroke="#444"/>"##,
                y0 + 5.0
            );
            let _ = writeln!(
                self.body,
                r#"<text x="{u:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
                y0 + 18.0,
                label(t)
            );
        }
        for t in ticks(f.y_min, f.y_max) {
            let (_, v) = f.map((f.x_min, t));
            let _ = writeln!(
                self.body,
                r##"<line x1="{:.2}" y1="{v:.2}" x2="{x0:.2}" y2="{v:.2}" stroke="#444"/>"##,
                x0 - 5.0
            );
            let _ = writeln!(
                self.body,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
                x0 - 8.0,
                v + 4.0,
                label(t)
            );
        }
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="24" font-size="14" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 12.0,
            escape(x_label)
        );
        let _ = writeln!(
            self.body,
            r#"<text x="16" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(y_label)
        );
    }

    /// Polyline split wherever it leaves the frame.
    pub fn polyline(&mut self, points: &[(f64, f64)], style: &str) {
        let mut run: Vec<(f64, f64)> = Vec::new();
        for &p in points {
            if self.frame.contains(p) {
                run.push(self.frame.map(p));
            } else {
                self.flush(&mut run, style);
            }
        }
        self.flush(&mut run, style);
    }

    fn flush(&mut self, run: &mut Vec<(f64, f64)>, style: &str) {
        if run.len() >= 2 {
            let pts: Vec<String> = run.iter().map(|(u, v)| format!("{u:.2},{v:.2}")).collect();
            let _ = writeln!(
                self.body,
                r#"<polyline points="{}" fill="none" {style}/>"#,
                pts.join(" ")
            );
        }
        run.clear();
    }

    pub fn circle(&mut self, at: (f64, f64), radius: f64, style: &str) {
        if self.frame.contains(at) {
            let (u, v) = self.frame.map(at);
            let _ = writeln!(
                self.body,
                r#"<circle cx="{u:.2}" cy="{v:.2}" r="{radius:.2}" {style}/>"#
            );
        }
    }

    pub fn cross(&mut self, at: (f64, f64), size: f64, style: &str) {
        if self.frame.contains(at) {
            let (u, v) = self.frame.map(at);
            let _ = writeln!(
                self.body,
                r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" fill="none" {style}/>"#,
                u - size,
                v - size,
                u + size,
                v + size,
                u - size,
                v + size,
                u + size,
                v - size
            );
        }
    }

    /// Legend entries stacked in the top-right corner.
    pub fn legend(&mut self, entries: &[(&str, &str)]) {
        for (k, (name, style)) in entries.iter().enumerate() {
            let y = MARGIN + 14.0 + 16.0 * k as f64;
            let x = WIDTH - MARGIN - 150.0;
            let _ = writeln!(
                self.body,
                r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" {style}/>"#,
                x + 24.0
            );
            let _ = writeln!(
                self.body,
                r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
                x + 30.0,
                y + 4.0,
                escape(name)
            );
        }
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n{}</svg>\n",
            self.body
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_steps() {
        assert_eq!(ticks(0.0, 6.0), vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(
            ticks(-8.0, 4.0),
            vec![-8.0, -6.0, -4.0, -2.0, 0.0, 2.0, 4.0]
        );
        assert_eq!(label(-0.0), "0");
        assert_eq!(label(2.5), "2.5");
    }

    #[test]
    fn output_is_deterministic_and_clipped() {
        let draw = || {
            let mut s = Svg::new(Frame::new(-1.0, 1.0, -1.0, 1.0));
            s.axes("t", "x", "y");
            s.polyline(
                &[(-0.5, 0.0), (0.5, 0.0), (5.0, 0.0), (0.2, 0.2), (0.3, 0.3)],
                r##"stroke="#000""##,
            );
            s.circle((2.0, 0.0), 3.0, r##"fill="#888""##);
            s.finish()
        };
        let a = draw();
        assert_eq!(a, draw());
        assert_eq!(a.matches("<polyline").count(), 2);
        assert!(!a.contains("<circle"));
    }
}
