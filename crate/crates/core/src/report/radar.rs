use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::line::validate_dims;
use super::svg::{coord, num, Svg};
use super::ReportError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarSpec {
    pub title: String,
    /// Axis label and value, drawn clockwise from the top.
    pub axes: Vec<(String, f64)>,
    pub width: u32,
    pub height: u32,
}

impl RadarSpec {
    pub fn new(title: impl Into<String>, axes: Vec<(String, f64)>) -> Self {
        Self {
            title: title.into(),
            axes,
            width: super::DEFAULT_WIDTH,
            height: super::DEFAULT_HEIGHT,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.width as f64 / 2.0, self.height as f64 / 2.0 + 15.0)
    }

    pub fn radius(&self) -> f64 {
        (self.width.min(self.height) as f64 / 2.0 - 90.0).max(20.0)
    }

    /// Unit direction of axis `i`: up for the first, then clockwise.
    pub fn direction(&self, i: usize) -> (f64, f64) {
        let theta = 2.0 * PI * i as f64 / self.axes.len() as f64;
        (theta.sin(), -theta.cos())
    }

    /// Polygon vertex for axis `i` in canvas coordinates.
    pub fn vertex(&self, i: usize) -> (f64, f64) {
        let max = self.axes.iter().map(|a| a.1).fold(0.0, f64::max);
        let frac = if max > 0.0 { self.axes[i].1 / max } else { 0.0 };
        let (cx, cy) = self.center();
        let (dx, dy) = self.direction(i);
        let r = self.radius() * frac;
        (cx + r * dx, cy + r * dy)
    }

    fn validate(&self) -> Result<(), ReportError> {
        validate_dims(self.width, self.height)?;
        if self.axes.len() < 3 {
            return Err(ReportError::TooFewAxes(self.axes.len()));
        }
        for (label, v) in &self.axes {
            if !v.is_finite() {
                return Err(ReportError::NonFinite(label.clone()));
            }
            if *v < 0.0 {
                return Err(ReportError::Negative(label.clone()));
            }
        }
        Ok(())
    }
}

pub const ZERO_WARNING: &str = "warning: every value is zero";

/// Radar plot with values scaled to the largest one and printed at each
/// vertex.
pub fn render_radar(spec: &RadarSpec) -> Result<String, ReportError> {
    spec.validate()?;
    let (w, _) = (spec.width as f64, spec.height as f64);
    let (cx, cy) = spec.center();
    let radius = spec.radius();
    let n = spec.axes.len();
    let mut svg = Svg::new(spec.width, spec.height);
    svg.text(w / 2.0, 28.0, "middle", r#"font-size="16""#, &spec.title);

    for ring in 1..=4 {
        let r = radius * ring as f64 / 4.0;
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let (dx, dy) = spec.direction(i);
                (cx + r * dx, cy + r * dy)
            })
            .collect();
        svg.raw(&format!(
            r##"<polygon class="grid" points="{}" fill="none" stroke="#cccccc"/>"##,
            Svg::polyline_points(&pts)
        ));
    }
    for (i, (label, _)) in spec.axes.iter().enumerate() {
        let (dx, dy) = spec.direction(i);
        svg.line(cx, cy, cx + radius * dx, cy + radius * dy, r##"stroke="#999999""##);
        let anchor = if dx > 0.1 {
            "start"
        } else if dx < -0.1 {
            "end"
        } else {
            "middle"
        };
        let (lx, ly) = (cx + (radius + 14.0) * dx, cy + (radius + 14.0) * dy + 4.0 + 6.0 * dy);
        svg.text(lx, ly, anchor, r#"class="axis-label""#, label);
    }

    let vertices: Vec<(f64, f64)> = (0..n).map(|i| spec.vertex(i)).collect();
    svg.raw(&format!(
        r#"<polygon class="values" points="{}" fill="black" fill-opacity="0.2" stroke="black" stroke-width="2"/>"#,
        Svg::polyline_points(&vertices)
    ));
    for (i, (x, y)) in vertices.iter().enumerate() {
        let (dx, dy) = spec.direction(i);
        svg.raw(&format!(
            r#"<circle class="vertex" cx="{}" cy="{}" r="3" fill="black"/>"#,
            coord(*x),
            coord(*y)
        ));
        svg.text(
            x + 10.0 * dx,
            y + 10.0 * dy + 4.0,
            "middle",
            r#"class="value""#,
            &num(spec.axes[i].1),
        );
    }
    if spec.axes.iter().all(|a| a.1 == 0.0) {
        svg.text(cx, spec.height as f64 - 20.0, "middle", r#"class="warning" fill="red""#, ZERO_WARNING);
    }
    Ok(svg.finish())
}
