use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;

use super::TrendError;

/// Yearly values. The partial year, if any, is shown in tables but never
/// fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    points: Vec<(i32, f64)>,
    partial_year: Option<i32>,
}

impl TimeSeries {
    pub fn new(points: Vec<(i32, f64)>, partial_year: Option<i32>) -> Result<Self, TrendError> {
        if let Some(w) = points.windows(2).find(|w| w[0].0 >= w[1].0) {
            return Err(TrendError::YearsNotIncreasing(w[0].0, w[1].0));
        }
        if let Some(&(year, v)) = points.iter().find(|(_, v)| !v.is_finite()) {
            return Err(TrendError::NonFinite { year, value: v });
        }
        Ok(Self {
            points,
            partial_year,
        })
    }

    pub fn points(&self) -> &[(i32, f64)] {
        &self.points
    }

    pub fn partial_year(&self) -> Option<i32> {
        self.partial_year
    }

    /// Points used for fitting.
    pub fn fit_points(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.points
            .iter()
            .copied()
            .filter(move |(t, _)| Some(*t) != self.partial_year)
    }

    pub fn value(&self, year: i32) -> Option<f64> {
        self.points.iter().find(|(t, _)| *t == year).map(|p| p.1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.points.iter().map(|p| p.1).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearCounts {
    pub series: TimeSeries,
    /// References with no usable year.
    pub unyeared: usize,
    /// References dated outside the requested range.
    pub out_of_range: usize,
}

fn year_buckets(from: i32, to: i32) -> Result<Vec<(i32, f64)>, TrendError> {
    if from > to {
        return Err(TrendError::Range { from, to });
    }
    Ok((from..=to).map(|t| (t, 0.0)).collect())
}

fn partial(corpus: &Corpus, to: i32) -> Option<i32> {
    (corpus.retrieval_date().year() == to).then_some(to)
}

pub fn counts_per_year(corpus: &Corpus, from: i32, to: i32) -> Result<YearCounts, TrendError> {
    let mut points = year_buckets(from, to)?;
    let (mut unyeared, mut out_of_range) = (0, 0);
    for r in corpus {
        match r.year {
            None => unyeared += 1,
            Some(y) if y < from || y > to => out_of_range += 1,
            Some(y) => points[(y - from) as usize].1 += 1.0,
        }
    }
    Ok(YearCounts {
        series: TimeSeries::new(points, partial(corpus, to))?,
        unyeared,
        out_of_range,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationTotals {
    /// Citation counts as of retrieval, summed by publication year.
    pub series: TimeSeries,
    /// In-range references with a citation count.
    pub covered: usize,
    /// In-range references without one, counted as zero.
    pub missing: usize,
}

impl CitationTotals {
    pub fn warning(&self) -> Option<String> {
        if self.missing == 0 {
            None
        } else if self.covered == 0 {
            Some(format!("no citation counts attached ({} references)", self.missing))
        } else {
            Some(format!(
                "{} of {} references have no citation count and were counted as zero",
                self.missing,
                self.missing + self.covered
            ))
        }
    }
}

pub fn cumulative_citations_per_year(
    corpus: &Corpus,
    from: i32,
    to: i32,
) -> Result<CitationTotals, TrendError> {
    let mut points = year_buckets(from, to)?;
    let (mut covered, mut missing) = (0, 0);
    for r in corpus {
        let Some(y) = r.year.filter(|y| (from..=to).contains(y)) else {
            continue;
        };
        match r.citation_count {
            Some(c) => {
                covered += 1;
                points[(y - from) as usize].1 += c as f64;
            }
            None => missing += 1,
        }
    }
    Ok(CitationTotals {
        series: TimeSeries::new(points, partial(corpus, to))?,
        covered,
        missing,
    })
}
