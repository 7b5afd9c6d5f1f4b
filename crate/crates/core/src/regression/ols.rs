//! Ordinary least squares with classical inference.
//!
//! The fit works in three sharded passes over column-major data: column
//! means, the centered cross-product matrix, and the residuals. The slope
//! system is scaled to unit diagonal and solved through its symmetric
//! eigendecomposition; the smallest eigenvalue doubles as a rank check.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::gram::{accumulate_columns, sharded_sum};
use crate::error::{Error, Result};

/// Reciprocal condition number below which the design is treated as singular.
pub const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
}

impl Estimate {
    /// Marked in reports when `p < .01`.
    pub fn is_significant(&self) -> bool {
        self.p < 0.01
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsFit {
    pub names: Vec<String>,
    pub n: usize,
    pub intercept: Estimate,
    pub coefficients: Vec<Estimate>,
    pub rss: f64,
    pub tss: f64,
    pub r2: f64,
    pub adj_r2: f64,
    pub bic: f64,
    /// Condition number of the unit-diagonal slope cross-product matrix.
    pub condition: f64,
    /// `max |Xᵀ r|` over the intercept and slope columns.
    pub max_abs_score: f64,
}

impl OlsFit {
    pub fn n_params(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficient(&self, name: &str) -> Option<&Estimate> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.coefficients[i])
    }
}

/// `1 - (1 - r2)(n - 1)/(n - p - 1)`.
pub fn adjusted_r2(r2: f64, n: usize, p: usize) -> Result<f64> {
    if n <= p + 1 {
        return Err(Error::InsufficientData { n, params: p + 1 });
    }
    Ok(1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n - p - 1) as f64)
}

/// `n ln(RSS/n) + (p+1) ln n`.
pub fn bic(rss: f64, n: usize, p: usize) -> f64 {
    let nf = n as f64;
    nf * (rss / nf).ln() + (p as f64 + 1.0) * nf.ln()
}

fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

fn estimate(value: f64, se: f64, df: f64) -> Estimate {
    let t = if se > 0.0 {
        value / se
    } else if value == 0.0 {
        f64::NAN
    } else {
        value.signum() * f64::INFINITY
    };
    Estimate {
        estimate: value,
        se,
        t,
        p: two_sided_p(t, df),
    }
}

/// Regresses `y` on an intercept plus `columns`.
pub fn fit_ols(names: &[&str], columns: &[&[f64]], y: &[f64]) -> Result<OlsFit> {
    assert_eq!(names.len(), columns.len(), "one name per column");
    let n = y.len();
    let p = columns.len();
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::Domain("columns differ in length".into()));
    }
    if n <= p + 1 {
        return Err(Error::InsufficientData { n, params: p + 1 });
    }
    if let Some(bad) = columns
        .iter()
        .chain(std::iter::once(&y))
        .position(|c| c.iter().any(|v| !v.is_finite()))
    {
        let name = names.get(bad).copied().unwrap_or("response");
        return Err(Error::Domain(format!("non-finite value in `{name}`")));
    }
    let nf = n as f64;

    // pass 1: means
    let mut all: Vec<&[f64]> = columns.to_vec();
    all.push(y);
    let means: Vec<f64> = all.iter().map(|c| sharded_sum(n, |r| c[r]) / nf).collect();

    // pass 2: centered cross products
    let gram = accumulate_columns(&all, &means);
    let cxx = DMatrix::from_fn(p, p, |i, j| gram.get(i, j));
    let cxy = DVector::from_fn(p, |i, _| gram.get(i, p));

    let (beta, cov_unscaled, condition) = solve_centered(names, &cxx, &cxy)?;
    let x_mean = DVector::from_fn(p, |i, _| means[i]);
    let intercept = means[p] - beta.dot(&x_mean);

    // pass 3: residuals
    let resid = |r: usize| {
        let mut fitted = intercept;
        for (k, c) in columns.iter().enumerate() {
            fitted += beta[k] * c[r];
        }
        y[r] - fitted
    };
    let rss = sharded_sum(n, |r| {
        let e = resid(r);
        e * e
    });
    let tss = sharded_sum(n, |r| {
        let d = y[r] - means[p];
        d * d
    });
    let mut max_abs_score = sharded_sum(n, resid).abs();
    for c in columns {
        max_abs_score = max_abs_score.max(sharded_sum(n, |r| c[r] * resid(r)).abs());
    }

    let df = (n - p - 1) as f64;
    let sigma2 = rss / df;
    let r2 = if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let coefficients: Vec<Estimate> = (0..p)
        .map(|k| estimate(beta[k], (sigma2 * cov_unscaled[(k, k)]).max(0.0).sqrt(), df))
        .collect();
    let var_intercept = sigma2 * (1.0 / nf + (&cov_unscaled * &x_mean).dot(&x_mean));
    let intercept = estimate(intercept, var_intercept.max(0.0).sqrt(), df);

    Ok(OlsFit {
        names: names.iter().map(|s| s.to_string()).collect(),
        n,
        intercept,
        coefficients,
        rss,
        tss,
        r2,
        adj_r2: adjusted_r2(r2, n, p)?,
        bic: bic(rss, n, p),
        condition,
        max_abs_score,
    })
}

/// Solves `cxx β = cxy`, returning `β`, `cxx⁻¹` and the condition estimate.
fn solve_centered(
    names: &[&str],
    cxx: &DMatrix<f64>,
    cxy: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>, f64)> {
    let p = cxx.nrows();
    if p == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0), 1.0));
    }
    if let Some(k) = (0..p).find(|&k| cxx[(k, k)] <= 0.0) {
        return Err(Error::RankDeficient {
            covariate: names[k].to_string(),
            condition: f64::INFINITY,
        });
    }
    let scale = DVector::from_fn(p, |i, _| 1.0 / cxx[(i, i)].sqrt());
    let corr = DMatrix::from_fn(p, p, |i, j| cxx[(i, j)] * scale[i] * scale[j]);
    let eig = SymmetricEigen::new(corr);
    let (imin, lmin) = eig.eigenvalues.argmin();
    let lmax = eig.eigenvalues.max();
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(lmin > RANK_TOLERANCE * lmax) {
        let v = eig.eigenvectors.column(imin);
        let (k, _) = v.iamax_full();
        return Err(Error::RankDeficient {
            covariate: names[k].to_string(),
            condition,
        });
    }
    let inv_l = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
    let corr_inv = &eig.eigenvectors * inv_l * eig.eigenvectors.transpose();
    let cov = DMatrix::from_fn(p, p, |i, j| corr_inv[(i, j)] * scale[i] * scale[j]);
    let beta = &cov * cxy;
    Ok((beta, cov, condition))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let fit = fit_ols(&["x"], &[&[1.0, 2.0, 3.0]], &[2.0, 4.0, 6.0]).unwrap();
        assert!((fit.coefficients[0].estimate - 2.0).abs() < 1e-12);
        assert!(fit.intercept.estimate.abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_response() {
        let x1 = [1.0, 5.0, 2.0, 8.0, 3.0];
        let x2 = [0.5, 0.1, 0.9, 0.3, 0.4];
        let fit = fit_ols(&["a", "b"], &[&x1, &x2], &[7.0; 5]).unwrap();
        for c in &fit.coefficients {
            assert!(c.estimate.abs() < 1e-12);
        }
        assert_eq!(fit.r2, 0.0);
        assert!((fit.intercept.estimate - 7.0).abs() < 1e-12);
    }

    #[test]
    fn insufficient_rows() {
        let err = fit_ols(&["a", "b"], &[&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { n: 3, params: 3 }));
    }

    #[test]
    fn collinear_columns_are_reported() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b: Vec<f64> = a.iter().map(|v| 2.0 * v + 1.0).collect();
        let c = [0.3, -1.0, 0.7, 0.2, 0.0, 0.5];
        let y = [1.0, 3.0, 2.0, 5.0, 4.0, 6.0];
        let err = fit_ols(&["a", "b", "c"], &[&a, &b, &c], &y).unwrap_err();
        match err {
            Error::RankDeficient { covariate, condition } => {
                assert!(covariate == "a" || covariate == "b", "{covariate}");
                assert!(condition > 1e12);
            }
            other => panic!("unexpected {other}"),
        }
        let err = fit_ols(&["k"], &[&[2.0; 6]], &y).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { ref covariate, .. } if covariate == "k"));
    }

    #[test]
    fn adjusted_r2_identities() {
        assert_eq!(adjusted_r2(1.0, 50, 3).unwrap(), 1.0);
        assert_eq!(adjusted_r2(0.37, 50, 0).unwrap(), 0.37);
        // 1 - 0.75 * 99/94
        let v = adjusted_r2(0.25, 100, 5).unwrap();
        assert!((v - 0.210_106_382_978_723_4).abs() < 1e-15, "{v}");
        assert!(adjusted_r2(0.5, 6, 5).is_err());
    }

    #[test]
    fn textbook_standard_errors() {
        // y = 1 + 2x with residuals (+1, -1, -1, +1): slope se = sqrt(2/5)/... computed by hand
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [4.0, 4.0, 6.0, 10.0];
        let fit = fit_ols(&["x"], &[&x], &y).unwrap();
        // sxx = 5, slope = sxy/sxx = 10/5 = 2, intercept = 6 - 2*2.5 = 1
        assert!((fit.coefficients[0].estimate - 2.0).abs() < 1e-12);
        assert!((fit.intercept.estimate - 1.0).abs() < 1e-12);
        // rss = 1+1+1+1 = 4, sigma2 = 2, se(slope) = sqrt(2/5)
        assert!((fit.rss - 4.0).abs() < 1e-12);
        assert!((fit.coefficients[0].se - (0.4f64).sqrt()).abs() < 1e-12);
        // se(intercept) = sqrt(2 * (1/4 + 2.5^2/5))
        assert!((fit.intercept.se - (2.0f64 * (0.25 + 1.25)).sqrt()).abs() < 1e-12);
        // t = 2/sqrt(.4) = 3.1623 on 2 df, two-sided p ≈ 0.0871
        assert!((fit.coefficients[0].p - 0.087_129).abs() < 1e-5, "{}", fit.coefficients[0].p);
    }
}
