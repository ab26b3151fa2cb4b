//! Least squares by Householder QR.

/// Column `k` is (numerically) a combination of the columns before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct RankDeficient(pub usize);

#[derive(Debug, Clone)]
pub(crate) struct LeastSquares {
    pub coef: Vec<f64>,
    pub ssr: f64,
    /// Diagonal of `(X'X)^-1`.
    pub unscaled_var: Vec<f64>,
}

/// Solves `min |X b - y|` for `X` given as columns, all of length `y.len()`.
pub(crate) fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Result<LeastSquares, RankDeficient> {
    let n = y.len();
    let p = columns.len();
    assert!(p <= n, "more columns than rows");
    let mut a: Vec<Vec<f64>> = columns.to_vec();
    let mut qty = y.to_vec();
    let norms: Vec<f64> = columns.iter().map(|c| norm(c)).collect();

    for k in 0..p {
        let alpha = norm(&a[k][k..]);
        if alpha <= 1e-12 * norms[k].max(f64::MIN_POSITIVE) {
            return Err(RankDeficient(k));
        }
        // reflect a[k][k..] onto -sign(a_kk) * alpha * e1
        let alpha = if a[k][k] > 0.0 { -alpha } else { alpha };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |col: &mut [f64]| {
            let dot: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vnorm2;
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= f * vi;
            }
        };
        for col in a.iter_mut().skip(k + 1) {
            reflect(&mut col[k..]);
        }
        reflect(&mut qty[k..]);
        a[k][k] = alpha;
        for x in &mut a[k][k + 1..] {
            *x = 0.0;
        }
    }

    // R is upper triangular with R[i][j] = a[j][i]
    let r = |i: usize, j: usize| a[j][i];
    let mut coef = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| r(i, j) * coef[j]).sum();
        coef[i] = (qty[i] - s) / r(i, i);
    }

    // rows of R^-1 give the diagonal of (R'R)^-1
    let mut rinv = vec![vec![0.0; p]; p];
    for j in 0..p {
        rinv[j][j] = 1.0 / r(j, j);
        for i in (0..j).rev() {
            let s: f64 = (i + 1..=j).map(|k| r(i, k) * rinv[k][j]).sum();
            rinv[i][j] = -s / r(i, i);
        }
    }
    let unscaled_var = rinv.iter().map(|row| row.iter().map(|x| x * x).sum()).collect();

    let residuals: Vec<f64> = (0..n)
        .map(|i| y[i] - columns.iter().zip(&coef).map(|(c, b)| c[i] * b).sum::<f64>())
        .collect();
    let ssr = residuals.iter().map(|e| e * e).sum();
    Ok(LeastSquares {
        coef,
        ssr,
        unscaled_var,
    })
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    // scaled to avoid overflow for large powers
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}
