//! Minimal SVG output: polylines, dots and circles in a y-up world frame.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;

use crate::contour::Polyline;

pub struct SvgDoc {
    view: (f64, f64, f64, f64),
    width: f64,
    body: String,
    timestamp: bool,
}

impl SvgDoc {
    /// `view` is `(x_min, x_max, y_min, y_max)` in world coordinates.
    pub fn new(view: (f64, f64, f64, f64), width: f64) -> Self {
        SvgDoc { view, width, body: String::new(), timestamp: false }
    }

    pub fn with_timestamp(mut self, on: bool) -> Self {
        self.timestamp = on;
        self
    }

    fn stroke(&self) -> f64 {
        (self.view.1 - self.view.0).max(self.view.3 - self.view.2) / self.width
    }

    pub fn polyline(&mut self, p: &Polyline, color: &str) {
        if p.points.is_empty() {
            return;
        }
        let mut d = String::new();
        for (i, z) in p.points.iter().enumerate() {
            let _ = write!(d, "{}{:.6} {:.6} ", if i == 0 { "M" } else { "L" }, z.re, -z.im);
        }
        if p.closed {
            d.push('Z');
        }
        let _ = writeln!(
            self.body,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="{:.6}"/>"#,
            d.trim_end(),
            self.stroke()
        );
    }

    pub fn circle(&mut self, c: C64, r: f64, color: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.6}" cy="{:.6}" r="{:.6}" fill="none" stroke="{color}" stroke-width="{:.6}"/>"#,
            c.re,
            -c.im,
            r,
            self.stroke()
        );
    }

    pub fn dot(&mut self, c: C64, color: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.6}" cy="{:.6}" r="{:.6}" fill="{color}"/>"#,
            c.re,
            -c.im,
            2.0 * self.stroke()
        );
    }

    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.view;
        let h = self.width * (y1 - y0) / (x1 - x0);
        let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="{:.6} {:.6} {:.6} {:.6}">"#,
            self.width,
            h,
            x0,
            -y1,
            x1 - x0,
            y1 - y0
        );
        if self.timestamp {
            let secs = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            let _ = writeln!(s, "<!-- generated at unix time {secs} -->");
        }
        s.push_str(&self.body);
        s.push_str("</svg>\n");
        s
    }
}

/// Bounding box of a point cloud padded by `pad` times its extent (at least
/// `pad` absolute).
pub fn padded_view<'a>(points: impl IntoIterator<Item = &'a C64>, pad: f64) -> (f64, f64, f64, f64) {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for z in points {
        x0 = x0.min(z.re);
        x1 = x1.max(z.re);
        y0 = y0.min(z.im);
        y1 = y1.max(z.im);
    }
    if !x0.is_finite() {
        return (-1.0, 1.0, -1.0, 1.0);
    }
    let e = ((x1 - x0).max(y1 - y0) * pad).max(pad);
    (x0 - e, x1 + e, y0 - e, y1 + e)
}
