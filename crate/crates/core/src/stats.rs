//! Moment summaries of sampled statistic vectors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{PottsError, Result};

/// Central moments `(m2, m3, m4)` with divisor `n`.
pub fn central_moments(x: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Monte Carlo standard error of the mean of a correlated series, from
/// Geyer's initial monotone sequence estimate of the asymptotic variance.
/// Never smaller than the iid standard error.
pub fn mcse(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(x);
    let d: Vec<f64> = x.iter().map(|v| v - m).collect();
    let acov = |lag: usize| d[..n - lag].iter().zip(&d[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let g0 = acov(0);
    if g0 <= 0.0 {
        return 0.0;
    }
    let iid = (g0 * n as f64 / (n as f64 - 1.0) / n as f64).sqrt();
    let mut sigma2 = -g0;
    let mut prev = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = (acov(lag) + acov(lag + 1)).min(prev);
        if pair <= 0.0 {
            break;
        }
        sigma2 += 2.0 * pair;
        prev = pair;
        lag += 2;
    }
    (sigma2.max(0.0) / n as f64).sqrt().max(iid)
}

/// Mean, covariance and marginal shape of a sample of statistic vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub mean: Vec<f64>,
    /// Unbiased (`r - 1`) covariance, row-major.
    pub covariance: Vec<Vec<f64>>,
    pub skewness: Vec<Option<f64>>,
    /// Raw (non-excess) kurtosis.
    pub kurtosis: Vec<Option<f64>>,
    pub sample_size: usize,
}

impl StatsSummary {
    pub fn from_vectors(points: &[Vec<f64>]) -> Result<Self> {
        let r = points.len();
        if r == 0 {
            return Err(PottsError::EmptyBatch);
        }
        let d = points[0].len();
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(PottsError::DimensionMismatch {
                what: "sample point",
                expected: d,
                found: p.len(),
            });
        }
        let mut mean = vec![0.0; d];
        for p in points {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= r as f64);

        let mut covariance = vec![vec![0.0; d]; d];
        for p in points {
            for a in 0..d {
                let da = p[a] - mean[a];
                for b in a..d {
                    covariance[a][b] += da * (p[b] - mean[b]);
                }
            }
        }
        let denom = if r > 1 { (r - 1) as f64 } else { 1.0 };
        for v in covariance.iter_mut().flatten() {
            *v /= denom;
        }
        for a in 1..d {
            let (upper, lower) = covariance.split_at_mut(a);
            for (b, row) in upper.iter().enumerate() {
                lower[0][b] = row[a];
            }
        }

        let mut skewness = Vec::with_capacity(d);
        let mut kurtosis = Vec::with_capacity(d);
        for a in 0..d {
            let col: Vec<f64> = points.iter().map(|p| p[a]).collect();
            let (m2, m3, m4) = central_moments(&col);
            if m2 > 0.0 {
                skewness.push(Some(m3 / m2.powf(1.5)));
                kurtosis.push(Some(m4 / (m2 * m2)));
            } else {
                skewness.push(None);
                kurtosis.push(None);
            }
        }
        Ok(Self {
            mean,
            covariance,
            skewness,
            kurtosis,
            sample_size: r,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.covariance[i][j])
    }

    pub fn mean_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.mean)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.covariance[i][i]).sum()
    }
}
