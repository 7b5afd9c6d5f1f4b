//! Helpers shared by the integration and acceptance tests.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Normal};

use citewindow_core::regression::FunctionalForm;

/// Dense normal-equations OLS with an intercept, solved by Gauss-Jordan
/// elimination with partial pivoting on the uncentered `XᵀX`.
#[derive(Debug, Clone)]
pub struct DenseOls {
    /// Intercept first.
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub r2: f64,
    pub adj_r2: f64,
    pub rss: f64,
}

pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..k).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        let d = m[col][col];
        assert!(d != 0.0, "singular matrix");
        for v in m[col].iter_mut() {
            *v /= d;
        }
        for r in 0..k {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * k {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[k..].to_vec()).collect()
}

pub fn dense_ols(columns: &[Vec<f64>], y: &[f64]) -> DenseOls {
    let n = y.len();
    let p = columns.len();
    let x = |i: usize, j: usize| if j == 0 { 1.0 } else { columns[j - 1][i] };
    let k = p + 1;
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for i in 0..n {
        for a in 0..k {
            xty[a] += x(i, a) * y[i];
            for b in 0..k {
                xtx[a][b] += x(i, a) * x(i, b);
            }
        }
    }
    let inv = invert(&xtx);
    let beta: Vec<f64> = (0..k).map(|a| (0..k).map(|b| inv[a][b] * xty[b]).sum()).collect();
    let mut rss = 0.0;
    for i in 0..n {
        let fit: f64 = (0..k).map(|a| beta[a] * x(i, a)).sum();
        rss += (y[i] - fit).powi(2);
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let sigma2 = rss / (n - k) as f64;
    let se = (0..k).map(|a| (sigma2 * inv[a][a]).sqrt()).collect();
    let r2 = 1.0 - rss / tss;
    DenseOls {
        beta,
        se,
        r2,
        adj_r2: 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n - k) as f64,
        rss,
    }
}

/// A seeded regression instance with `p` correlated covariates.
pub fn ols_instance(seed: u64, n: usize, p: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Normal::new(0.0, 1.0).unwrap();
    let base: Vec<f64> = (0..n).map(|_| z.sample(&mut rng)).collect();
    let mut columns = Vec::with_capacity(p);
    for _ in 0..p {
        let mean = rng.random_range(-3.0..3.0);
        let sd = rng.random_range(0.5..3.0);
        let rho: f64 = rng.random_range(0.0..0.6);
        columns.push(
            base.iter()
                .map(|b| mean + sd * (rho * b + (1.0 - rho * rho).sqrt() * z.sample(&mut rng)))
                .collect::<Vec<f64>>(),
        );
    }
    let beta: Vec<f64> = (0..=p)
        .map(|_| {
            let m: f64 = rng.random_range(0.5..3.0);
            if rng.random_bool(0.5) { m } else { -m }
        })
        .collect();
    let noise = rng.random_range(0.1..2.0);
    let y = (0..n)
        .map(|i| beta[0] + (0..p).map(|j| beta[j + 1] * columns[j][i]).sum::<f64>() + noise * z.sample(&mut rng))
        .collect();
    (columns, y)
}

/// Count covariate and response generated under one functional form.
pub fn form_instance(seed: u64, n: usize, form: FunctionalForm) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geo = Geometric::new(0.08).unwrap();
    let eps = Normal::new(0.0, 10.0).unwrap();
    let x: Vec<f64> = (0..n).map(|_| 1.0 + geo.sample(&mut rng) as f64).collect();
    let y = x
        .iter()
        .map(|&v| {
            let signal = match form {
                FunctionalForm::Linear => 0.8 * v,
                FunctionalForm::Log => 12.0 * v.ln(),
                FunctionalForm::Quadratic => 0.8 * v - 0.012 * v * v,
            };
            40.0 + signal + eps.sample(&mut rng)
        })
        .collect();
    (x, y)
}

/// Average ranks of `v` (1-based).
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j + 2) as f64 / 2.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&average_ranks(a), &average_ranks(b))
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
