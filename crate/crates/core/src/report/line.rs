use serde::{Deserialize, Serialize};

use crate::trend::{RegressionModel, TimeSeries};

use super::svg::{coord, escape, nice_step, num, Svg};
use super::ReportError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Marker {
    Square,
    Triangle,
    Circle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpec {
    pub label: String,
    pub points: Vec<(i32, f64)>,
    pub marker: Marker,
    pub fit: Option<RegressionModel>,
}

impl SeriesSpec {
    pub fn from_series(label: impl Into<String>, series: &TimeSeries, marker: Marker) -> Self {
        Self {
            label: label.into(),
            points: series.points().to_vec(),
            marker,
            fit: None,
        }
    }

    pub fn with_fit(mut self, model: RegressionModel) -> Self {
        self.fit = Some(model);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineChartSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<SeriesSpec>,
    pub width: u32,
    pub height: u32,
}

impl LineChartSpec {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            width: super::DEFAULT_WIDTH,
            height: super::DEFAULT_HEIGHT,
        }
    }

    pub fn with_series(mut self, s: SeriesSpec) -> Self {
        self.series.push(s);
        self
    }
}

const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;
const MARKER: f64 = 4.0;
pub const SAMPLES_PER_YEAR: u32 = 10;

/// Maps data coordinates onto the plot area.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    width: f64,
    height: f64,
}

impl Frame {
    pub fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (self.width - LEFT - RIGHT)
    }

    pub fn py(&self, y: f64) -> f64 {
        self.height - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (self.height - TOP - BOTTOM)
    }
}

fn fit_samples(model: &RegressionModel) -> Vec<(f64, f64)> {
    let steps = (model.last_year - model.first_year) as u32 * SAMPLES_PER_YEAR;
    (0..=steps)
        .map(|k| {
            let t = model.first_year as f64 + k as f64 / SAMPLES_PER_YEAR as f64;
            (t, model.predict(t))
        })
        .collect()
}

pub(crate) fn validate_dims(width: u32, height: u32) -> Result<(), ReportError> {
    if !(200..=10_000).contains(&width) || !(200..=10_000).contains(&height) {
        return Err(ReportError::Dimensions { width, height });
    }
    Ok(())
}

/// Frame that holds every marker and fitted sample.
pub fn frame_for(spec: &LineChartSpec) -> Result<Frame, ReportError> {
    validate_dims(spec.width, spec.height)?;
    if spec.series.is_empty() {
        return Err(ReportError::TooFewPoints(0));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in &spec.series {
        if s.points.len() < 2 {
            return Err(ReportError::TooFewPoints(s.points.len()));
        }
        for &(t, v) in &s.points {
            if !v.is_finite() {
                return Err(ReportError::NonFinite(s.label.clone()));
            }
            xs.push(t as f64);
            ys.push(v);
        }
        if let Some(m) = &s.fit {
            for (t, v) in fit_samples(m) {
                if !v.is_finite() {
                    return Err(ReportError::NonFinite(s.label.clone()));
                }
                xs.push(t);
                ys.push(v);
            }
        }
    }
    let fold = |v: &[f64], f: fn(f64, f64) -> f64, init| v.iter().copied().fold(init, f);
    let (xmin, xmax) = (fold(&xs, f64::min, f64::INFINITY), fold(&xs, f64::max, f64::NEG_INFINITY));
    let (ymin, ymax) = (fold(&ys, f64::min, f64::INFINITY), fold(&ys, f64::max, f64::NEG_INFINITY));
    let (xmin, xmax) = if xmin == xmax { (xmin - 1.0, xmax + 1.0) } else { (xmin, xmax) };
    let ystep = nice_step((ymax.max(0.0) - ymin.min(0.0)).max(1.0), 5);
    let y0 = (ymin.min(0.0) / ystep).floor() * ystep;
    let y1 = (ymax.max(0.0) / ystep).ceil() * ystep;
    let y1 = if y1 <= y0 { y0 + ystep } else { y1 };
    Ok(Frame {
        x0: xmin - 0.5,
        x1: xmax + 0.5,
        y0,
        y1,
        width: spec.width as f64,
        height: spec.height as f64,
    })
}

fn marker(svg: &mut Svg, kind: Marker, x: f64, y: f64) {
    let el = match kind {
        Marker::Square => format!(
            r#"<rect class="marker" x="{}" y="{}" width="{}" height="{}" fill="black"/>"#,
            coord(x - MARKER),
            coord(y - MARKER),
            num(2.0 * MARKER),
            num(2.0 * MARKER)
        ),
        Marker::Circle => format!(
            r#"<circle class="marker" cx="{}" cy="{}" r="{}" fill="none" stroke="black"/>"#,
            coord(x),
            coord(y),
            num(MARKER)
        ),
        Marker::Triangle => format!(
            r#"<polygon class="marker" points="{}" fill="black"/>"#,
            Svg::polyline_points(&[
                (x, y - MARKER * 1.2),
                (x + MARKER * 1.1, y + MARKER * 0.8),
                (x - MARKER * 1.1, y + MARKER * 0.8),
            ])
        ),
    };
    svg.raw(&el);
}

/// Markers per series with an optional fitted curve sampled ten times a year.
pub fn render_line_chart(spec: &LineChartSpec) -> Result<String, ReportError> {
    let f = frame_for(spec)?;
    let (w, h) = (spec.width as f64, spec.height as f64);
    let mut svg = Svg::new(spec.width, spec.height);
    svg.text(w / 2.0, 28.0, "middle", r#"font-size="16""#, &spec.title);

    // axes and ticks
    let axis = r#"stroke="black""#;
    svg.line(LEFT, h - BOTTOM, w - RIGHT, h - BOTTOM, axis);
    svg.line(LEFT, TOP, LEFT, h - BOTTOM, axis);
    let (first, last) = ((f.x0 + 0.5).round() as i64, (f.x1 - 0.5).round() as i64);
    let xstep = nice_step((last - first) as f64, 10).max(1.0) as i64;
    let mut t = first;
    while t <= last {
        let x = f.px(t as f64);
        svg.line(x, h - BOTTOM, x, h - BOTTOM + 5.0, axis);
        svg.text(x, h - BOTTOM + 20.0, "middle", "", &t.to_string());
        t += xstep;
    }
    let ystep = nice_step(f.y1 - f.y0, 5);
    let ticks = ((f.y1 - f.y0) / ystep).round() as i64;
    for k in 0..=ticks {
        let v = f.y0 + k as f64 * ystep;
        // keep labels free of accumulated binary error
        let v = (v / ystep).round() * ystep;
        let y = f.py(v);
        svg.line(LEFT - 5.0, y, LEFT, y, axis);
        svg.line(LEFT, y, w - RIGHT, y, r##"stroke="#dddddd""##);
        svg.text(LEFT - 8.0, y + 4.0, "end", "", &num(v));
    }
    svg.text((LEFT + w - RIGHT) / 2.0, h - 15.0, "middle", "", &spec.x_label);
    svg.text(
        18.0,
        (TOP + h - BOTTOM) / 2.0,
        "middle",
        &format!(r#"transform="rotate(-90 18 {})""#, coord((TOP + h - BOTTOM) / 2.0)),
        &spec.y_label,
    );

    for s in &spec.series {
        svg.raw(&format!(r#"<g class="series" data-label="{}">"#, escape(&s.label)));
        if let Some(m) = &s.fit {
            let pts: Vec<(f64, f64)> = fit_samples(m).into_iter().map(|(t, v)| (f.px(t), f.py(v))).collect();
            let mut d = String::new();
            for (i, (x, y)) in pts.iter().enumerate() {
                d.push_str(if i == 0 { "M" } else { " L" });
                d.push_str(&format!("{} {}", coord(*x), coord(*y)));
            }
            svg.raw(&format!(r#"<path class="fit" d="{d}" fill="none" stroke="black" stroke-width="1.5"/>"#));
        }
        for &(t, v) in &s.points {
            marker(&mut svg, s.marker, f.px(t as f64), f.py(v));
        }
        svg.raw("</g>");
    }

    if spec.series.len() > 1 {
        for (i, s) in spec.series.iter().enumerate() {
            let y = TOP + 10.0 + i as f64 * 18.0;
            marker(&mut svg, s.marker, LEFT + 20.0, y);
            svg.text(LEFT + 32.0, y + 4.0, "start", "", &s.label);
        }
    }
    Ok(svg.finish())
}
