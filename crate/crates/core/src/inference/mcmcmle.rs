//! Monte Carlo maximum likelihood: partial stepping, a final polish with the
//! naive approximation, and a moment check at the estimate.

use std::time::Instant;

use super::approx::naive_unchecked;
use super::hull::in_convex_hull;
use super::optimize::maximize;
use super::report::{FitMethod, FitReport, MomentCheck, PolishStatus};
use super::stepping::{draw, partial_stepping, SteppingConfig, TAG_CHECK, TAG_FINAL};
use crate::error::{PottsError, Result};
use crate::lattice::{suff_stats, Grid, PottsParams};
use crate::sampler::{Model, SampleBatch};
use crate::stats::{mcse, mean};

#[derive(Clone, Debug)]
pub struct McmcmleOutcome {
    pub report: FitReport,
    /// Draws at the reported estimate (the moment-check batch).
    pub batch: SampleBatch,
}

/// Polish rounds allowed; a round whose importance weights are too uneven
/// is followed by a fresh batch at its estimate.
const MAX_POLISH_ROUNDS: usize = 5;
const MIN_EFFECTIVE_FRACTION: f64 = 0.5;

/// Kish effective sample size over `n` for weights `exp(delta . g_i)`.
fn effective_sample_fraction(delta: &[f64], points: &[Vec<f64>]) -> f64 {
    let lw: Vec<f64> = points.iter().map(|g| delta.iter().zip(g).map(|(d, v)| d * v).sum()).collect();
    let max = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (s1, s2) = lw.iter().fold((0.0, 0.0), |(a, b), l| {
        let w = (l - max).exp();
        (a + w, b + w * w)
    });
    s1 * s1 / s2 / points.len() as f64
}

fn column(points: &[Vec<f64>], a: usize) -> Vec<f64> {
    points.iter().map(|p| p[a]).collect()
}

/// Fits the classical or tapered model by Monte Carlo maximum likelihood.
///
/// A fit whose stepping did not converge is still returned, with
/// `converged = false` and the last reference point as the estimate.
pub fn mcmcmle(grid: &Grid, model: &Model, theta_init: &[f64], config: &SteppingConfig) -> Result<FitReport> {
    mcmcmle_full(grid, model, theta_init, config).map(|o| o.report)
}

pub fn mcmcmle_full(
    grid: &Grid,
    model: &Model,
    theta_init: &[f64],
    config: &SteppingConfig,
) -> Result<McmcmleOutcome> {
    let started = Instant::now();
    let observed = suff_stats(grid);
    let g_obs = observed.g();
    let stepping = partial_stepping(grid, theta_init, model, config)?;
    let theta0 = stepping.theta_final.clone();

    let mut polish = PolishStatus::Skipped;
    let mut objective = None;
    let mut final_se = vec![0.0; g_obs.len()];
    let mut theta = theta0.clone();
    let mut polish_reference = None;
    let mut polish_rounds = 0;
    if stepping.trace.converged {
        // The last update is untested; the last reference point is known to
        // hold the observed statistics inside its batch's hull.
        let mut fallbacks = vec![theta0.clone()];
        if let Some(last) = stepping.trace.iterations.last() {
            if last.theta0 != theta0 {
                fallbacks.push(last.theta0.clone());
            }
        }
        fallbacks.reverse();
        polish = PolishStatus::OutsideHull;
        let mut next: Option<Vec<f64>> = None;
        while polish_rounds < MAX_POLISH_ROUNDS {
            let Some(reference) = next.take().or_else(|| fallbacks.pop()) else { break };
            let chain = config.chain(TAG_FINAL, polish_rounds as u64, config.final_sample_size);
            polish_rounds += 1;
            let batch = draw(grid, model, &reference, &chain, config.sampler)?;
            let points = batch.g_vectors();
            if !in_convex_hull(&g_obs, &points)? {
                if polish == PolishStatus::OutsideHull {
                    theta = reference;
                    continue;
                }
                break;
            }
            fallbacks.clear();
            final_se = (0..g_obs.len()).map(|a| mcse(&column(&points, a))).collect();
            polish_reference = Some(reference.clone());
            let start = vec![0.0; reference.len()];
            let (delta, status, value) =
                match maximize(|d| naive_unchecked(d, &g_obs, &points), &start, &config.optimizer) {
                    Ok(r) => (r.x, PolishStatus::Converged, Some(r.value)),
                    Err(PottsError::NonConvergence { best, .. }) => {
                        let v = naive_unchecked(&best, &g_obs, &points).0;
                        (best, PolishStatus::BestIterate, Some(v))
                    }
                    Err(e) => return Err(e),
                };
            if !delta.iter().all(|v| v.is_finite()) {
                polish = PolishStatus::BestIterate;
                theta = reference;
                break;
            }
            theta = reference.iter().zip(&delta).map(|(a, b)| a + b).collect();
            polish = status;
            objective = value;
            if effective_sample_fraction(&delta, &points) >= MIN_EFFECTIVE_FRACTION {
                break;
            }
            next = Some(theta.clone());
        }
    }

    let chain = config.chain(TAG_CHECK, 0, config.final_sample_size);
    let batch = draw(grid, model, &theta, &chain, config.sampler)?;
    let points = batch.g_vectors();
    let dim = g_obs.len();
    let simulated_mean: Vec<f64> = (0..dim).map(|a| mean(&column(&points, a))).collect();
    // The estimate itself carries the error of the batch it was fitted on.
    let standard_error: Vec<f64> = (0..dim)
        .map(|a| (mcse(&column(&points, a)).powi(2) + final_se[a].powi(2)).sqrt())
        .collect();
    let check = MomentCheck::new(g_obs, simulated_mean, standard_error, points.len(), chain.seed);

    let method = match model {
        Model::Classical => FitMethod::McmcmlePotts,
        Model::Tapered(_) => FitMethod::McmcmleTapered,
    };
    let mut report = FitReport::new(method, PottsParams::from_theta(&theta)?, observed, config.batch.seed);
    report.tapering = model.tapering().cloned();
    report.converged = stepping.trace.converged;
    report.trace = Some(stepping.trace);
    report.polish = Some(polish);
    report.polish_reference = polish_reference;
    report.polish_rounds = polish_rounds;
    report.moment_check = Some(check);
    report.objective = objective;
    report.config = Some(serde_json::to_value(config)?);
    report.wall_time_secs = Some(started.elapsed().as_secs_f64());
    Ok(McmcmleOutcome { report, batch })
}
