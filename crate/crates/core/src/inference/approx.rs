//! Monte Carlo approximations of the log-likelihood ratio
//! `l(theta) - l(theta0)` from draws taken at `theta0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{PottsError, Result};
use crate::stats::StatsSummary;

fn check_dims(theta: &[f64], theta0: &[f64], g_obs: &[f64]) -> Result<()> {
    for (what, v) in [("theta0", theta0), ("observed statistics", g_obs)] {
        if v.len() != theta.len() {
            return Err(PottsError::DimensionMismatch {
                what,
                expected: theta.len(),
                found: v.len(),
            });
        }
    }
    Ok(())
}

/// Importance-sampling estimate
/// `(theta - theta0)' g - log( mean_j exp((theta - theta0)' G_j) )`
/// with its gradient `g - sum_j w_j G_j` (softmax weights `w`).
pub fn naive_loglik_ratio(
    theta: &[f64],
    theta0: &[f64],
    g_obs: &[f64],
    points: &[Vec<f64>],
) -> Result<(f64, Vec<f64>)> {
    check_dims(theta, theta0, g_obs)?;
    if points.is_empty() {
        return Err(PottsError::EmptyBatch);
    }
    if let Some(p) = points.iter().find(|p| p.len() != theta.len()) {
        return Err(PottsError::DimensionMismatch {
            what: "sample point",
            expected: theta.len(),
            found: p.len(),
        });
    }
    let delta: Vec<f64> = theta.iter().zip(theta0).map(|(a, b)| a - b).collect();
    Ok(naive_unchecked(&delta, g_obs, points))
}

pub(crate) fn naive_unchecked(delta: &[f64], g_obs: &[f64], points: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let dot = |v: &[f64]| delta.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let z: Vec<f64> = points.iter().map(|p| dot(p)).collect();
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = z.iter().map(|zi| (zi - max).exp()).collect();
    let total: f64 = w.iter().sum();
    let log_mean = max + total.ln() - (points.len() as f64).ln();
    let value = dot(g_obs) - log_mean;

    let mut grad = g_obs.to_vec();
    for (p, wi) in points.iter().zip(&w) {
        let wi = wi / total;
        for (gr, v) in grad.iter_mut().zip(p) {
            *gr -= wi * v;
        }
    }
    (value, grad)
}

/// Second-order cumulant approximation
/// `(theta - theta0)'(g - m0) - 1/2 (theta - theta0)' Sigma0 (theta - theta0)`.
pub fn cumulant_approx(
    theta: &[f64],
    theta0: &[f64],
    g_obs: &[f64],
    summary: &StatsSummary,
) -> Result<f64> {
    check_dims(theta, theta0, g_obs)?;
    if summary.dim() != theta.len() {
        return Err(PottsError::DimensionMismatch {
            what: "summary",
            expected: theta.len(),
            found: summary.dim(),
        });
    }
    let d = DVector::from_iterator(theta.len(), theta.iter().zip(theta0).map(|(a, b)| a - b));
    let diff = DVector::from_column_slice(g_obs) - summary.mean_vector();
    let sigma = summary.covariance_matrix();
    Ok(d.dot(&diff) - 0.5 * d.dot(&(sigma * &d)))
}

/// Maximizer of [`cumulant_approx`]: `theta0 + Sigma0^{-1} (g - m0)`.
///
/// A ridge `1e-8 * trace / dim` is added when the covariance condition number
/// exceeds `1e12`.
pub fn cumulant_maximizer(theta0: &[f64], g_obs: &[f64], summary: &StatsSummary) -> Result<Vec<f64>> {
    let dim = theta0.len();
    check_dims(theta0, theta0, g_obs)?;
    if summary.dim() != dim {
        return Err(PottsError::DimensionMismatch {
            what: "summary",
            expected: dim,
            found: summary.dim(),
        });
    }
    let trace = summary.trace();
    let mut sigma = summary.covariance_matrix();
    let scale = summary
        .mean
        .iter()
        .map(|m| m.abs())
        .fold(1.0f64, f64::max);
    if trace.is_nan() || trace <= 1e-12 * scale * scale {
        return Err(PottsError::DegenerateBatch(
            "sampled statistics are constant; covariance is zero".into(),
        ));
    }

    let eig = sigma.clone().symmetric_eigen();
    let max_ev = eig.eigenvalues.max();
    let min_ev = eig.eigenvalues.min();
    if min_ev <= 0.0 || max_ev / min_ev > 1e12 {
        sigma += DMatrix::identity(dim, dim) * (1e-8 * trace / dim as f64);
    }

    let rhs = DVector::from_column_slice(g_obs) - summary.mean_vector();
    let step = match sigma.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => sigma
            .lu()
            .solve(&rhs)
            .ok_or_else(|| PottsError::DegenerateBatch("covariance is singular".into()))?,
    };
    let theta: Vec<f64> = theta0.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(PottsError::DegenerateBatch("cumulant step is not finite".into()));
    }
    Ok(theta)
}
