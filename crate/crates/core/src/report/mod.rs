//! CSV tables, plain-text reports and SVG charts. Every output is a pure
//! function of its input, so identical inputs give identical bytes.

mod line;
mod radar;
mod svg;
mod table;

use thiserror::Error;

pub use line::{frame_for, render_line_chart, Frame, LineChartSpec, Marker, SeriesSpec, SAMPLES_PER_YEAR};
pub use radar::{render_radar, RadarSpec, ZERO_WARNING};
pub use svg::{coord, escape, num};
pub use table::{categories_csv, fit_report, ledger_csv, ledger_report, multi_series_csv, series_csv};

pub const DEFAULT_WIDTH: u32 = 800;
pub const DEFAULT_HEIGHT: u32 = 600;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("canvas {width}x{height} outside 200..=10000")]
    Dimensions { width: u32, height: u32 },
    #[error("a line series needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("a radar chart needs at least 3 axes, got {0}")]
    TooFewAxes(usize),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("negative value on axis {0}")]
    Negative(String),
}
