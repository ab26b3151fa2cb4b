use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::ols::{least_squares, norm, LeastSquares, RankDeficient};
use super::series::TimeSeries;
use super::TrendError;

pub const DEFAULT_MAX_DEGREE: u32 = 4;
pub const DEFAULT_ALPHA_ENTER: f64 = 0.05;
pub const DEFAULT_ALPHA_EXIT: f64 = 0.10;

/// Residuals below this fraction of |y| count as an exact fit. Without the
/// floor, rounding noise in a perfect fit produces arbitrary t-ratios.
const EXACT_FIT_REL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    /// Power of `(t - t0)`; 0 is the intercept.
    pub degree: u32,
    pub coef: f64,
    pub std_err: f64,
    /// Absent when the standard error is zero (exact fit).
    pub t_value: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub t0: i32,
    pub max_degree: u32,
    /// Intercept first, then selected degrees ascending.
    pub terms: Vec<Term>,
    /// Undefined for a constant series.
    pub r2: Option<f64>,
    pub sigma: f64,
    pub n_points: usize,
    pub first_year: i32,
    pub last_year: i32,
}

impl RegressionModel {
    pub fn selected_degrees(&self) -> Vec<u32> {
        self.terms.iter().map(|t| t.degree).filter(|d| *d > 0).collect()
    }

    pub fn coef(&self, degree: u32) -> Option<f64> {
        self.terms.iter().find(|t| t.degree == degree).map(|t| t.coef)
    }

    pub fn predict(&self, t: f64) -> f64 {
        let x = t - self.t0 as f64;
        self.terms.iter().map(|term| term.coef * x.powi(term.degree as i32)).sum()
    }
}

pub fn predict(model: &RegressionModel, t: i32) -> f64 {
    model.predict(t as f64)
}

struct Design {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Squared-residual floor below which a fit is exact.
    floor: f64,
}

struct Evaluated {
    degrees: Vec<u32>,
    fit: LeastSquares,
    /// p-values against the floored residual variance, per degree.
    p: Vec<f64>,
}

impl Design {
    fn columns(&self, degrees: &[u32]) -> Vec<Vec<f64>> {
        degrees
            .iter()
            .map(|&d| self.x.iter().map(|x| x.powi(d as i32)).collect())
            .collect()
    }

    fn df(&self, params: usize) -> f64 {
        (self.y.len() - params) as f64
    }

    fn evaluate(&self, selected: &BTreeSet<u32>) -> Result<Evaluated, RankDeficient> {
        let degrees: Vec<u32> = std::iter::once(0).chain(selected.iter().copied()).collect();
        let fit = least_squares(&self.columns(&degrees), &self.y)?;
        let df = self.df(degrees.len());
        let s2 = fit.ssr.max(self.floor) / df;
        let p = fit
            .unscaled_var
            .iter()
            .zip(&fit.coef)
            .map(|(v, c)| two_sided_p(c / (s2 * v).sqrt(), df))
            .collect();
        Ok(Evaluated { degrees, fit, p })
    }
}

fn two_sided_p(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

impl Evaluated {
    fn p_of(&self, degree: u32) -> f64 {
        let i = self.degrees.iter().position(|d| *d == degree).expect("degree in model");
        self.p[i]
    }
}

fn column_name(degree: u32) -> String {
    match degree {
        0 => "intercept".into(),
        1 => "(t-t0)".into(),
        d => format!("(t-t0)^{d}"),
    }
}

/// Polynomial in `(t - t0)` of degree at most `max_degree`, terms chosen by
/// forward selection with backward elimination. The intercept is always in.
pub fn fit_stepwise(
    series: &TimeSeries,
    t0: i32,
    max_degree: u32,
    alpha_enter: f64,
    alpha_exit: f64,
) -> Result<RegressionModel, TrendError> {
    for (name, a) in [("alpha_enter", alpha_enter), ("alpha_exit", alpha_exit)] {
        if !(a > 0.0 && a < 1.0) {
            return Err(TrendError::Alpha { name, value: a });
        }
    }
    if alpha_enter > alpha_exit {
        return Err(TrendError::AlphaOrder {
            enter: alpha_enter,
            exit: alpha_exit,
        });
    }
    let points: Vec<(i32, f64)> = series.fit_points().collect();
    let need = max_degree as usize + 2;
    if points.len() < need {
        return Err(TrendError::TooFewPoints {
            have: points.len(),
            need,
        });
    }
    let (first, last) = (points[0].0, points[points.len() - 1].0);
    if t0 < first || t0 > last {
        return Err(TrendError::OriginOutOfRange { t0, first, last });
    }

    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let design = Design {
        x: points.iter().map(|p| (p.0 - t0) as f64).collect(),
        floor: (EXACT_FIT_REL * norm(&y)).powi(2),
        y,
    };
    let n = design.y.len();
    let mean = design.y.iter().sum::<f64>() / n as f64;
    let sst: f64 = design.y.iter().map(|v| (v - mean).powi(2)).sum();
    if sst == 0.0 {
        // exact, so that a constant series reports sigma = 0 without rounding
        return Ok(RegressionModel {
            t0,
            max_degree,
            terms: vec![Term {
                degree: 0,
                coef: design.y[0],
                std_err: 0.0,
                t_value: None,
                p_value: None,
            }],
            r2: None,
            sigma: 0.0,
            n_points: n,
            first_year: first,
            last_year: last,
        });
    }
    let all: BTreeSet<u32> = (1..=max_degree).collect();
    design.evaluate(&all).map_err(|RankDeficient(k)| TrendError::RankDeficient {
        columns: (0..=k as u32).map(column_name).collect(),
    })?;
    let rank = |e: RankDeficient| TrendError::RankDeficient {
        columns: vec![column_name(e.0 as u32)],
    };

    let mut selected = BTreeSet::new();
    let mut visited = HashSet::from([Vec::<u32>::new()]);
    loop {
        let current = design.evaluate(&selected).map_err(rank)?;
        if current.fit.ssr <= design.floor {
            break;
        }
        let mut best: Option<(u32, f64)> = None;
        for &cand in all.difference(&selected) {
            let mut trial = selected.clone();
            trial.insert(cand);
            let p = design.evaluate(&trial).map_err(rank)?.p_of(cand);
            // strict comparison keeps the lowest degree on ties
            if best.is_none_or(|(_, bp)| p < bp) {
                best = Some((cand, p));
            }
        }
        let Some((cand, _)) = best.filter(|(_, p)| *p < alpha_enter) else {
            break;
        };
        selected.insert(cand);

        loop {
            let fit = design.evaluate(&selected).map_err(rank)?;
            let worst = selected
                .iter()
                .map(|&d| (d, fit.p_of(d)))
                .filter(|(_, p)| *p > alpha_exit)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            match worst {
                Some((d, _)) => {
                    selected.remove(&d);
                }
                None => break,
            }
        }
        if !visited.insert(selected.iter().copied().collect()) {
            break;
        }
    }

    let ev = design.evaluate(&selected).map_err(rank)?;
    let df = design.df(ev.degrees.len());
    let sigma = (ev.fit.ssr / df).sqrt();
    let r2 = Some((1.0 - ev.fit.ssr / sst).clamp(0.0, 1.0));
    let terms = ev
        .degrees
        .iter()
        .enumerate()
        .map(|(i, &degree)| {
            let coef = ev.fit.coef[i];
            let std_err = sigma * ev.fit.unscaled_var[i].sqrt();
            let t_value = (std_err > 0.0).then(|| coef / std_err);
            Term {
                degree,
                coef,
                std_err,
                t_value,
                p_value: t_value.map(|t| two_sided_p(t, df)),
            }
        })
        .collect();
    Ok(RegressionModel {
        t0,
        max_degree,
        terms,
        r2,
        sigma,
        n_points: n,
        first_year: first,
        last_year: last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(years: std::ops::RangeInclusive<i32>, f: impl Fn(f64) -> f64) -> TimeSeries {
        TimeSeries::new(years.map(|t| (t, f(t as f64))).collect(), None).unwrap()
    }

    fn fit(s: &TimeSeries, t0: i32) -> RegressionModel {
        fit_stepwise(s, t0, DEFAULT_MAX_DEGREE, DEFAULT_ALPHA_ENTER, DEFAULT_ALPHA_EXIT).unwrap()
    }

    #[test]
    fn recovers_publication_curve() {
        let s = series(2002..=2015, |t| 10.51 + 5.44 * (t - 2002.0).powi(2));
        let m = fit(&s, 2002);
        assert_eq!(m.selected_degrees(), [2]);
        assert!((m.coef(0).unwrap() - 10.51).abs() < 1e-6);
        assert!((m.coef(2).unwrap() - 5.44).abs() < 1e-6);
        assert!((m.r2.unwrap() - 1.0).abs() < 1e-12);
        assert!((predict(&m, 2012) - 554.51).abs() < 1e-6);
        assert!((predict(&m, 2002) - 10.51).abs() < 1e-6);
    }

    #[test]
    fn recovers_negative_intercept_curve() {
        let s = series(2003..=2015, |t| -0.45 + 0.35 * (t - 2003.0).powi(2));
        let m = fit(&s, 2003);
        assert_eq!(m.selected_degrees(), [2]);
        assert!((m.coef(0).unwrap() + 0.45).abs() < 1e-6);
        assert!((m.coef(2).unwrap() - 0.35).abs() < 1e-6);
    }

    #[test]
    fn constant_series_is_intercept_only() {
        let s = series(2000..=2010, |_| 7.0);
        let m = fit(&s, 2000);
        assert!(m.selected_degrees().is_empty());
        assert_eq!(m.r2, None);
        assert_eq!(m.sigma, 0.0);
        assert_eq!(m.coef(0), Some(7.0));
    }

    #[test]
    fn partial_year_is_not_fitted() {
        let mut pts: Vec<(i32, f64)> = (2002..=2015)
            .map(|t| (t, 10.51 + 5.44 * ((t - 2002) as f64).powi(2)))
            .collect();
        pts.push((2016, 3.0));
        let s = TimeSeries::new(pts, Some(2016)).unwrap();
        let m = fit(&s, 2002);
        assert_eq!(m.n_points, 14);
        assert_eq!(m.last_year, 2015);
        assert!((m.coef(2).unwrap() - 5.44).abs() < 1e-6);
    }

    #[test]
    fn preconditions() {
        let s = series(2000..=2004, |t| t);
        assert!(matches!(
            fit_stepwise(&s, 2000, 4, 0.05, 0.1),
            Err(TrendError::TooFewPoints { have: 5, need: 6 })
        ));
        let s = series(2000..=2010, |t| t);
        assert!(matches!(
            fit_stepwise(&s, 1999, 4, 0.05, 0.1),
            Err(TrendError::OriginOutOfRange { .. })
        ));
        assert!(fit_stepwise(&s, 2000, 4, 0.2, 0.1).is_err());
        assert!(fit_stepwise(&s, 2000, 4, 0.0, 0.1).is_err());
    }

    #[test]
    fn noise_keeps_the_real_term() {
        // deterministic wiggle standing in for noise
        let s = series(2002..=2015, |t| {
            10.51 + 5.44 * (t - 2002.0).powi(2) + 20.0 * (t * 1.7).sin()
        });
        let m = fit(&s, 2002);
        assert!(m.selected_degrees().contains(&2));
        let r2 = m.r2.unwrap();
        assert!(r2 > 0.99 && r2 <= 1.0);
        assert!(m.sigma > 0.0);
        for t in m.terms.iter().filter(|t| t.degree > 0) {
            assert!(t.p_value.unwrap() <= DEFAULT_ALPHA_EXIT);
        }
    }
}
