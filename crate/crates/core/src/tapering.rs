//! Lack-of-fit diagnosis and selection of the tapering weight.

use serde::{Deserialize, Serialize};

use crate::error::{PottsError, Result};
use crate::inference::{mcmcmle_full, FitReport, SteppingConfig, SteppingTrace, StopReason};
use crate::lattice::{suff_stats, Grid, SuffStats, TaperingSpec};
use crate::sampler::{Model, SampleBatch};
use crate::stats::central_moments;

/// Bimodality coefficient of the uniform distribution; the unimodality bound.
pub const UNIMODAL_BOUND: f64 = 5.0 / 9.0;
pub const MIN_BIMODALITY_SAMPLES: usize = 100;

/// `(skewness^2 + 1) / kurtosis`, with raw (non-excess) kurtosis.
pub fn bimodality_coefficient(samples: &[f64]) -> Result<f64> {
    if samples.len() < MIN_BIMODALITY_SAMPLES {
        return Err(PottsError::OutOfRange {
            what: "bimodality sample size",
            value: samples.len(),
            limit: MIN_BIMODALITY_SAMPLES,
        });
    }
    let (m2, m3, m4) = central_moments(samples);
    if m2.is_nan() || m2 <= 0.0 {
        return Err(PottsError::DegenerateData("sample has zero variance".into()));
    }
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2);
    Ok((skew * skew + 1.0) / kurt)
}

pub fn is_unimodal(samples: &[f64]) -> Result<bool> {
    Ok(bimodality_coefficient(samples)? <= UNIMODAL_BOUND)
}

/// Bimodality coefficients of `T_1, .., T_{K-1}`; `None` where undefined.
pub fn color_bimodality(batch: &SampleBatch) -> Vec<Option<f64>> {
    let k = batch.params.num_colors();
    (0..k - 1).map(|c| bimodality_coefficient(&batch.counts_of(c)).ok()).collect()
}

/// `max_k T_k / min_k T_k` (infinite when a color is absent).
pub fn proportion_ratio(stats: &SuffStats) -> f64 {
    let max = stats.t.iter().copied().max().unwrap_or(0) as f64;
    let min = stats.t.iter().copied().min().unwrap_or(0) as f64;
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recommendation {
    ClassicalOk,
    NeedsTapering,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosisRoute {
    NonConvergence,
    Bimodality,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisEvidence {
    pub stepping_converged: bool,
    pub stop_reason: StopReason,
    pub gamma_trajectory: Vec<Option<f64>>,
    /// Largest change of the batch mean of each `T_k` between consecutive
    /// stepping iterations.
    pub oscillation_amplitude: Vec<f64>,
    /// Some amplitude exceeds half the number of cells.
    pub oscillation: bool,
    pub proportion_ratio: f64,
    /// Per `T_1..T_{K-1}` at the fitted parameter; empty without a batch.
    pub bimodality: Vec<Option<f64>>,
    pub beta_pl: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisReport {
    pub recommendation: Recommendation,
    /// Which rule fired, if tapering is recommended.
    pub route: Option<DiagnosisRoute>,
    pub evidence: DiagnosisEvidence,
}

pub const DEFAULT_PROPORTION_RATIO: f64 = 1.5;

/// Decides between the classical and the tapered model from a classical
/// stepping attempt and, when it converged, draws at the fitted parameter.
pub fn diagnose(
    grid: &Grid,
    pl_fit: &FitReport,
    stepping: &SteppingTrace,
    batch: Option<&SampleBatch>,
    proportion_ratio_threshold: f64,
) -> DiagnosisReport {
    let stats = suff_stats(grid);
    let k = grid.num_colors();
    let half = 0.5 * grid.num_cells() as f64;
    let oscillation_amplitude: Vec<f64> = (0..k)
        .map(|c| {
            stepping
                .iterations
                .windows(2)
                .map(|w| (w[1].color_means[c] - w[0].color_means[c]).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let oscillation = oscillation_amplitude.iter().any(|&a| a > half);
    let ratio = proportion_ratio(&stats);
    let bimodality = match (stepping.converged, batch) {
        (true, Some(b)) => color_bimodality(b),
        _ => Vec::new(),
    };

    let route = if !stepping.converged {
        Some(DiagnosisRoute::NonConvergence)
    } else if ratio <= proportion_ratio_threshold
        && bimodality.iter().any(|l| l.is_some_and(|l| l > UNIMODAL_BOUND))
    {
        Some(DiagnosisRoute::Bimodality)
    } else {
        None
    };
    DiagnosisReport {
        recommendation: if route.is_some() {
            Recommendation::NeedsTapering
        } else {
            Recommendation::ClassicalOk
        },
        route,
        evidence: DiagnosisEvidence {
            stepping_converged: stepping.converged,
            stop_reason: stepping.stop_reason,
            gamma_trajectory: stepping.gammas(),
            oscillation_amplitude,
            oscillation,
            proportion_ratio: ratio,
            bimodality,
            beta_pl: pl_fit.estimates.beta,
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TauRoute {
    /// Bimodality when the observed color proportions are near-equal,
    /// convergence otherwise.
    #[default]
    Auto,
    Bimodality,
    Convergence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TauSearchConfig {
    pub tau_init: f64,
    pub shrink: f64,
    pub max_steps: usize,
    pub route: TauRoute,
    pub proportion_ratio_threshold: f64,
}

impl Default for TauSearchConfig {
    fn default() -> Self {
        Self {
            tau_init: 0.002,
            shrink: 0.9,
            max_steps: 30,
            route: TauRoute::Auto,
            proportion_ratio_threshold: DEFAULT_PROPORTION_RATIO,
        }
    }
}

impl TauSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_init > 0.0 && self.tau_init.is_finite()) {
            return Err(PottsError::InvalidConfig("tau_init must be > 0".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(PottsError::InvalidConfig("shrink must lie in (0, 1)".into()));
        }
        if self.max_steps == 0 {
            return Err(PottsError::InvalidConfig("max_steps must be >= 1".into()));
        }
        Ok(())
    }

    /// The route actually used for observed statistics `stats`.
    pub fn resolve_route(&self, stats: &SuffStats) -> TauRoute {
        match self.route {
            TauRoute::Auto if proportion_ratio(stats) <= self.proportion_ratio_threshold => TauRoute::Bimodality,
            TauRoute::Auto => TauRoute::Convergence,
            r => r,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauStep {
    pub tau: f64,
    pub converged: bool,
    pub bimodality: Vec<Option<f64>>,
    pub unimodal: Option<bool>,
    /// The route criterion held at this tau.
    pub passed: bool,
    pub estimates: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauSearchTrace {
    pub route: TauRoute,
    pub config: TauSearchConfig,
    pub steps: Vec<TauStep>,
    /// The criterion never failed within `max_steps`.
    pub floor_not_found: bool,
}

#[derive(Clone, Debug)]
pub struct TauChoice {
    pub tau: f64,
    /// Fit at the retained tau, with the search trace attached.
    pub report: FitReport,
}

/// Shrinks a common tapering weight from `tau_init` until the route
/// criterion fails and keeps the smallest weight at which it held.
///
/// Each fit is started from the previous fit's estimate; the first from
/// `theta_init`.
pub fn choose_tau(
    grid: &Grid,
    theta_init: &[f64],
    search: &TauSearchConfig,
    fit: &SteppingConfig,
) -> Result<TauChoice> {
    search.validate()?;
    let observed = suff_stats(grid);
    let route = search.resolve_route(&observed);

    let mut steps: Vec<TauStep> = Vec::new();
    let mut best: Option<(f64, FitReport)> = None;
    let mut start = theta_init.to_vec();
    let mut tau = search.tau_init;
    let mut floor_not_found = true;

    for _ in 0..search.max_steps {
        let spec = TaperingSpec::centered_on(tau, &observed)?;
        let outcome = mcmcmle_full(grid, &Model::Tapered(spec), &start, fit)?;
        let report = outcome.report;
        let converged = report.converged;
        let (bimodality, unimodal) = if converged {
            let b = color_bimodality(&outcome.batch);
            let u = b.iter().all(|l| l.is_some_and(|l| l <= UNIMODAL_BOUND));
            (b, Some(u))
        } else {
            (Vec::new(), None)
        };
        let passed = match route {
            TauRoute::Bimodality => converged && unimodal == Some(true),
            _ => converged,
        };
        steps.push(TauStep {
            tau,
            converged,
            bimodality,
            unimodal,
            passed,
            estimates: report.estimates.theta(),
        });
        if !passed {
            floor_not_found = false;
            break;
        }
        start = report.estimates.theta();
        best = Some((tau, report));
        tau *= search.shrink;
    }

    let trace = TauSearchTrace {
        route,
        config: search.clone(),
        steps,
        floor_not_found,
    };
    let Some((tau, mut report)) = best else {
        return Err(PottsError::TauSearch(format!(
            "the criterion already fails at tau_init = {}; retry with a larger tau_init",
            search.tau_init
        )));
    };
    report.tau_search = Some(trace);
    Ok(TauChoice { tau, report })
}
