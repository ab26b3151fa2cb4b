//! Publication and citation series, stepwise polynomial trend fits and
//! category counts.

mod category;
mod ols;
mod series;
mod stepwise;

use thiserror::Error;

pub use category::{category_counts, parse_category_specs, CategoryRow, CategorySpec, CategoryTable};
pub use series::{counts_per_year, cumulative_citations_per_year, CitationTotals, TimeSeries, YearCounts};
pub use stepwise::{
    fit_stepwise, predict, RegressionModel, Term, DEFAULT_ALPHA_ENTER, DEFAULT_ALPHA_EXIT,
    DEFAULT_MAX_DEGREE,
};

#[derive(Debug, Error, PartialEq)]
pub enum TrendError {
    #[error("year range {from}..{to} is empty")]
    Range { from: i32, to: i32 },
    #[error("years must strictly increase ({0} then {1})")]
    YearsNotIncreasing(i32, i32),
    #[error("value for {year} is not finite: {value}")]
    NonFinite { year: i32, value: f64 },
    #[error("need at least {need} fitted points, have {have}")]
    TooFewPoints { have: usize, need: usize },
    #[error("origin {t0} lies outside the fitted years {first}..{last}")]
    OriginOutOfRange { t0: i32, first: i32, last: i32 },
    #[error("{name} must lie in (0, 1), got {value}")]
    Alpha { name: &'static str, value: f64 },
    #[error("alpha_enter {enter} exceeds alpha_exit {exit}; stepwise selection could cycle")]
    AlphaOrder { enter: f64, exit: f64 },
    #[error("design matrix is rank deficient; collinear columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },
    #[error("category spec line {line}: {message}")]
    Spec { line: usize, message: String },
}
