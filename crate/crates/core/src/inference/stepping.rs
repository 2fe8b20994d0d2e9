//! Partial stepping: moves the importance-sampling reference point towards
//! the MLE in steps small enough that the approximations stay trustworthy.

use serde::{Deserialize, Serialize};

use super::approx::{cumulant_maximizer, naive_unchecked};
use super::hull::{convex_hull_gamma, GammaSearch};
use super::optimize::{maximize, OptimOptions};
use crate::error::{PottsError, Result};
use crate::lattice::{suff_stats, Grid, PottsParams};
use crate::sampler::{derive_seed, sample, ChainConfig, Model, SampleBatch, SamplerKind};
use crate::stats::StatsSummary;

pub(crate) const TAG_STEP: u64 = 1;
pub(crate) const TAG_FINAL: u64 = 2;
pub(crate) const TAG_CHECK: u64 = 3;

/// Log-likelihood-ratio approximation used for the stepping updates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Approximation {
    #[default]
    Cumulant,
    Naive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SteppingConfig {
    pub max_iterations: usize,
    /// Chain settings for every stepping batch; the seed is the base seed of
    /// the whole fit.
    pub batch: ChainConfig,
    pub sampler: SamplerKind,
    pub approx: Approximation,
    pub gamma: GammaSearch,
    /// Draws for the final polish and for the moment check.
    pub final_sample_size: usize,
    pub optimizer: OptimOptions,
}

impl Default for SteppingConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            batch: ChainConfig::default(),
            sampler: SamplerKind::Gibbs,
            approx: Approximation::Cumulant,
            gamma: GammaSearch::default(),
            final_sample_size: 1000,
            optimizer: OptimOptions::default(),
        }
    }
}

impl SteppingConfig {
    pub fn validate(&self) -> Result<()> {
        self.batch.validate()?;
        if self.max_iterations == 0 {
            return Err(PottsError::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if self.final_sample_size == 0 {
            return Err(PottsError::InvalidConfig("final_sample_size must be >= 1".into()));
        }
        let g = &self.gamma;
        if !(g.tolerance > 0.0 && g.gamma_min > 0.0 && g.gamma_min <= 1.0) {
            return Err(PottsError::InvalidConfig(
                "gamma tolerance and gamma_min must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn chain(&self, tag: u64, index: u64, sample_size: usize) -> ChainConfig {
        ChainConfig {
            seed: derive_seed(self.batch.seed, tag, index),
            sample_size,
            keep_grids: false,
            ..self.batch.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteppingIteration {
    /// Parameter at which the batch was drawn.
    pub theta0: Vec<f64>,
    /// Batch mean of `G`.
    pub mean: Vec<f64>,
    /// Step length; absent when the search stalled.
    pub gamma: Option<f64>,
    /// `gamma g_obs + (1 - gamma) mean`.
    pub pseudo_obs: Option<Vec<f64>>,
    /// Batch means of `T_1, .., T_K`.
    pub color_means: Vec<f64>,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    Stall,
    DegenerateBatch,
    Diverged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteppingTrace {
    pub iterations: Vec<SteppingIteration>,
    pub converged: bool,
    pub iterations_used: usize,
    pub stop_reason: StopReason,
}

impl SteppingTrace {
    pub fn gammas(&self) -> Vec<Option<f64>> {
        self.iterations.iter().map(|i| i.gamma).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SteppingOutcome {
    pub trace: SteppingTrace,
    /// Last reference point: the update computed in the final iteration.
    pub theta_final: Vec<f64>,
    pub last_batch: Option<SampleBatch>,
}

/// Draws a batch at `theta` under `model`.
pub(crate) fn draw(
    grid: &Grid,
    model: &Model,
    theta: &[f64],
    chain: &ChainConfig,
    kind: SamplerKind,
) -> Result<SampleBatch> {
    let params = PottsParams::from_theta(theta)?;
    sample(grid.lattice().clone(), grid.num_colors(), model, &params, chain, kind)
}

fn naive_update(theta0: &[f64], target: &[f64], points: &[Vec<f64>], opts: &OptimOptions) -> Vec<f64> {
    let start = vec![0.0; theta0.len()];
    let delta = match maximize(|d| naive_unchecked(d, target, points), &start, opts) {
        Ok(r) => r.x,
        Err(PottsError::NonConvergence { best, .. }) => best,
        Err(_) => start,
    };
    theta0.iter().zip(&delta).map(|(a, b)| a + b).collect()
}

/// Runs partial stepping from `theta_init`.
///
/// Non-convergence (iteration budget, stalled step search, a batch with no
/// spread, divergent updates) is reported through the trace, not as an error.
pub fn partial_stepping(
    grid: &Grid,
    theta_init: &[f64],
    model: &Model,
    config: &SteppingConfig,
) -> Result<SteppingOutcome> {
    config.validate()?;
    let k = grid.num_colors();
    if theta_init.len() != k {
        return Err(PottsError::DimensionMismatch {
            what: "theta_init",
            expected: k,
            found: theta_init.len(),
        });
    }
    if let Some(t) = model.tapering() {
        t.check(k, grid.num_cells())?;
    }
    let g_obs = suff_stats(grid).g();

    let mut theta0 = theta_init.to_vec();
    let mut iterations = Vec::new();
    let mut ones_in_a_row = 0;
    let mut last_batch = None;
    let mut stop_reason = StopReason::MaxIterations;

    for t in 0..config.max_iterations {
        let chain = config.chain(TAG_STEP, t as u64, config.batch.sample_size);
        let batch = draw(grid, model, &theta0, &chain, config.sampler)?;
        let points = batch.g_vectors();
        let summary = StatsSummary::from_vectors(&points)?;
        let color_means = (0..k).map(|c| crate::stats::mean(&batch.counts_of(c))).collect();
        let mut record = SteppingIteration {
            theta0: theta0.clone(),
            mean: summary.mean.clone(),
            gamma: None,
            pseudo_obs: None,
            color_means,
            seed: chain.seed,
        };

        let gamma = match convex_hull_gamma(&g_obs, &summary.mean, &points, &config.gamma) {
            Ok(g) => g,
            Err(PottsError::SteppingStall { .. }) => {
                iterations.push(record);
                last_batch = Some(batch);
                stop_reason = StopReason::Stall;
                break;
            }
            Err(e) => return Err(e),
        };
        let target: Vec<f64> = g_obs
            .iter()
            .zip(&summary.mean)
            .map(|(g, m)| gamma * g + (1.0 - gamma) * m)
            .collect();
        record.gamma = Some(gamma);
        record.pseudo_obs = Some(target.clone());
        iterations.push(record);

        let next = match config.approx {
            Approximation::Cumulant => match cumulant_maximizer(&theta0, &target, &summary) {
                Ok(v) => v,
                Err(PottsError::DegenerateBatch(_)) => {
                    last_batch = Some(batch);
                    stop_reason = StopReason::DegenerateBatch;
                    break;
                }
                Err(e) => return Err(e),
            },
            Approximation::Naive => naive_update(&theta0, &target, &points, &config.optimizer),
        };
        last_batch = Some(batch);
        if next.iter().any(|v| !v.is_finite()) {
            stop_reason = StopReason::Diverged;
            break;
        }
        theta0 = next;

        ones_in_a_row = if gamma >= 1.0 { ones_in_a_row + 1 } else { 0 };
        if ones_in_a_row >= 2 {
            stop_reason = StopReason::Converged;
            break;
        }
    }

    let converged = stop_reason == StopReason::Converged;
    Ok(SteppingOutcome {
        trace: SteppingTrace {
            iterations_used: iterations.len(),
            iterations,
            converged,
            stop_reason,
        },
        theta_final: theta0,
        last_batch,
    })
}
