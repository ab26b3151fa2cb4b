use mapstudy_core::trend::{
    fit_stepwise, RegressionModel, TimeSeries, DEFAULT_ALPHA_ENTER, DEFAULT_ALPHA_EXIT,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn fit(s: &TimeSeries, t0: i32, max_degree: u32) -> RegressionModel {
    fit_stepwise(s, t0, max_degree, DEFAULT_ALPHA_ENTER, DEFAULT_ALPHA_EXIT).unwrap()
}

fn residuals(m: &RegressionModel, s: &TimeSeries) -> Vec<(f64, f64)> {
    s.fit_points()
        .map(|(t, y)| ((t - m.t0) as f64, y - m.predict(t as f64)))
        .collect()
}

#[test]
fn noisy_quadratic_keeps_its_quadratic_term() {
    let noise = Normal::new(0.0, 24.74).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2016);
    let mut hits = 0;
    let mut c2 = Vec::new();
    for _ in 0..200 {
        let pts = (2002..=2015)
            .map(|t| {
                let x = (t - 2002) as f64;
                (t, 10.51 + 5.44 * x * x + noise.sample(&mut rng))
            })
            .collect();
        let m = fit(&TimeSeries::new(pts, None).unwrap(), 2002, 4);
        if let Some(c) = m.coef(2) {
            hits += 1;
            if m.selected_degrees() == [2] {
                c2.push(c);
            }
        }
    }
    assert!(hits >= 190, "quadratic selected in {hits}/200");
    // mean of the quadratic-only estimates, against its sampling error
    let n = c2.len() as f64;
    let mean = c2.iter().sum::<f64>() / n;
    let sd = (c2.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mean - 5.44).abs() <= 2.0 * sd / n.sqrt() + 1e-9, "mean {mean} sd {sd}");
}

fn coef_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![0.5f64..5.0, -5.0f64..-0.5]
}

fn exact_series(degrees: &[u32], coefs: &[f64], c0: f64, n: usize, shift: i32) -> (TimeSeries, i32) {
    let start = 1990;
    let t0 = start + shift;
    let pts = (0..n as i32)
        .map(|i| {
            let x = (i - shift) as f64;
            let y = c0 + degrees.iter().map(|&d| coefs[d as usize] * x.powi(d as i32)).sum::<f64>();
            (start + i, y)
        })
        .collect();
    (TimeSeries::new(pts, None).unwrap(), t0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_single_column_data_is_recovered(
        degree in proptest::option::of(1u32..=4),
        coefs in proptest::collection::vec(coef_strategy(), 5),
        c0 in -50.0f64..50.0,
        n in 10usize..=30,
        shift in 0i32..5,
    ) {
        let degrees: Vec<u32> = degree.into_iter().collect();
        let (s, t0) = exact_series(&degrees, &coefs, c0, n, shift);
        let m = fit(&s, t0, 4);
        prop_assert_eq!(m.selected_degrees(), degrees.clone());
        prop_assert!((m.coef(0).unwrap() - c0).abs() < 1e-6);
        for &d in &degrees {
            prop_assert!((m.coef(d).unwrap() - coefs[d as usize]).abs() < 1e-6);
        }
    }

    #[test]
    fn exact_data_selected_set_has_exact_coefficients(
        degrees in proptest::sample::subsequence(vec![1u32, 2, 3, 4], 0..=4),
        coefs in proptest::collection::vec(coef_strategy(), 5),
        c0 in -50.0f64..50.0,
        n in 10usize..=30,
        shift in 0i32..5,
    ) {
        let (s, t0) = exact_series(&degrees, &coefs, c0, n, shift);
        let m = fit(&s, t0, 4);
        if m.selected_degrees() == degrees {
            prop_assert!((m.coef(0).unwrap() - c0).abs() < 1e-6);
            for &d in &degrees {
                prop_assert!((m.coef(d).unwrap() - coefs[d as usize]).abs() < 1e-6);
            }
        } else {
            // a wrong set can never fit exactly: the representation is unique
            prop_assert!(m.r2.unwrap() < 1.0 - 1e-12);
        }
    }

    #[test]
    fn residuals_are_orthogonal_and_r2_dominates(
        ys in proptest::collection::vec(0.0f64..500.0, 8..25),
        shift in 0usize..8,
    ) {
        let pts: Vec<(i32, f64)> = ys.iter().enumerate().map(|(i, y)| (2000 + i as i32, *y)).collect();
        let s = TimeSeries::new(pts, None).unwrap();
        let t0 = 2000 + (shift % ys.len()) as i32;
        let m = fit(&s, t0, 4);
        let res = residuals(&m, &s);
        let rnorm = res.iter().map(|r| r.1 * r.1).sum::<f64>().sqrt();
        for term in &m.terms {
            let col: Vec<f64> = res.iter().map(|(x, _)| x.powi(term.degree as i32)).collect();
            let cnorm = col.iter().map(|c| c * c).sum::<f64>().sqrt();
            let dot: f64 = col.iter().zip(&res).map(|(c, r)| c * r.1).sum();
            prop_assert!(dot.abs() <= 1e-8 * cnorm * rnorm.max(1.0), "degree {} dot {dot}", term.degree);
        }
        // intercept-only r2 is 0
        if let Some(r2) = m.r2 {
            prop_assert!((0.0..=1.0).contains(&r2));
        }
        prop_assert!(m.sigma >= 0.0);
        prop_assert!(m.terms.len() <= s.len());
    }
}

/// Greedy entry cannot reach every generating subset: with y = -1.87x +
/// 0.72x^2 + 0.5x^4 on 11 points, x^4 alone explains r2 = 0.99998 and
/// neither x nor x^2 is significant when added on its own. Kept as a record
/// of the limitation; run with `--ignored` to see it fail.
#[test]
#[ignore = "greedy stepwise entry misses jointly-significant terms"]
fn exact_data_recovers_any_generating_subset() {
    let (s, t0) = exact_series(&[1, 2, 4], &[0.5, -1.867616845464609, 0.7161423277346691, 0.5, 0.5], 0.0, 11, 2);
    assert_eq!(fit(&s, t0, 4).selected_degrees(), [1, 2, 4]);
}
