use std::f64::consts::{PI, SQRT_2};

use libm::erfc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("margin of error is zero: census required")]
    CensusRequired,
    #[error("population must be at least 1")]
    EmptyPopulation,
    #[error("{name} must lie in (0, 1), got {value}")]
    OutOfUnitInterval { name: &'static str, value: f64 },
    #[error("sample size {n} outside [1, {population}]")]
    SampleSize { n: u64, population: u64 },
}

fn unit(name: &'static str, value: f64) -> Result<f64, SamplingError> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(SamplingError::OutOfUnitInterval { name, value })
    }
}

/// Standard normal quantile. Rational approximation (Acklam) followed by one
/// Halley step against `erfc`, giving absolute error well below 1e-9.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile probability must lie in (0, 1)");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    };

    let halley = |x: f64| {
        let e = 0.5 * erfc(-x / SQRT_2) - p;
        let u = e * (2.0 * PI).sqrt() * (x * x / 2.0).exp();
        x - u / (1.0 + x * u / 2.0)
    };
    halley(x)
}

/// Two-sided critical value for a confidence level.
pub fn z_for_confidence(confidence: f64) -> Result<f64, SamplingError> {
    let c = unit("confidence", confidence)?;
    Ok(normal_quantile(1.0 - (1.0 - c) / 2.0))
}

/// Required sample size for estimating a proportion in a finite population.
///
/// `n0 = z^2 p (1-p) / e^2`, corrected to `n0 / (1 + (n0 - 1) / N)`, rounded
/// half away from zero and clamped to `[1, N]`.
pub fn sample_size(
    population: u64,
    confidence: f64,
    margin: f64,
    proportion: f64,
) -> Result<u64, SamplingError> {
    if population < 1 {
        return Err(SamplingError::EmptyPopulation);
    }
    if margin == 0.0 {
        return Err(SamplingError::CensusRequired);
    }
    let e = unit("margin", margin)?;
    let p = unit("proportion", proportion)?;
    let z = z_for_confidence(confidence)?;
    let n0 = z * z * p * (1.0 - p) / (e * e);
    let n = n0 / (1.0 + (n0 - 1.0) / population as f64);
    Ok((n.round() as u64).clamp(1, population))
}

/// Margin of error achieved by a sample of `n` out of `population`, with the
/// finite-population correction. A census has zero margin.
pub fn margin_of_error(
    n: u64,
    population: u64,
    confidence: f64,
    proportion: f64,
) -> Result<f64, SamplingError> {
    if population < 1 {
        return Err(SamplingError::EmptyPopulation);
    }
    if n < 1 || n > population {
        return Err(SamplingError::SampleSize { n, population });
    }
    let p = unit("proportion", proportion)?;
    let z = z_for_confidence(confidence)?;
    if n == population {
        return Ok(0.0);
    }
    let fpc = ((population - n) as f64 / (population - 1) as f64).sqrt();
    Ok(z * (p * (1.0 - p) / n as f64).sqrt() * fpc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_reference_values() {
        // tabulated standard normal quantiles
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((normal_quantile(0.995) - 2.575_829_303_548_901).abs() < 1e-12);
        assert!((normal_quantile(0.5)).abs() < 1e-15);
        assert!((normal_quantile(0.01) + 2.326_347_874_040_841).abs() < 1e-12);
        assert!((normal_quantile(1e-10) + 6.361_340_902_404_056).abs() < 1e-9);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let x = normal_quantile(p);
            let back = 0.5 * erfc(-x / SQRT_2);
            assert!((back - p).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn sample_size_examples() {
        assert_eq!(sample_size(4846, 0.95, 0.10, 0.5), Ok(94));
        assert_eq!(sample_size(50, 0.95, 0.10, 0.5), Ok(33));
        assert_eq!(sample_size(10, 0.99, 0.01, 0.5), Ok(10));
        assert_eq!(sample_size(1, 0.95, 0.5, 0.5), Ok(1));
    }

    #[test]
    fn sample_size_errors() {
        assert_eq!(sample_size(100, 0.95, 0.0, 0.5), Err(SamplingError::CensusRequired));
        assert_eq!(sample_size(0, 0.95, 0.1, 0.5), Err(SamplingError::EmptyPopulation));
        assert!(sample_size(100, 1.0, 0.1, 0.5).is_err());
        assert!(sample_size(100, 0.95, 0.1, 0.0).is_err());
    }

    #[test]
    fn margin_examples() {
        let e = margin_of_error(1668, 4846, 0.99, 0.5).unwrap();
        assert!((0.0254..=0.0258).contains(&e), "{e}");
        let e = margin_of_error(94, 4846, 0.95, 0.5).unwrap();
        assert!((e - 0.1001).abs() <= 0.0005, "{e}");
        assert_eq!(margin_of_error(4846, 4846, 0.95, 0.5), Ok(0.0));
        assert_eq!(margin_of_error(1, 1, 0.95, 0.5), Ok(0.0));
        assert!(margin_of_error(0, 10, 0.95, 0.5).is_err());
        assert!(margin_of_error(11, 10, 0.95, 0.5).is_err());
    }
}
