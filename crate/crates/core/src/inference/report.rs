use serde::{Deserialize, Serialize};

use super::stepping::SteppingTrace;
use crate::lattice::{PottsParams, SuffStats, TaperingSpec};
use crate::tapering::{DiagnosisReport, TauSearchTrace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    PseudoLikelihood,
    McmcmlePotts,
    McmcmleTapered,
}

/// Simulated mean of `G` at the estimate against the observed value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub observed: Vec<f64>,
    pub simulated_mean: Vec<f64>,
    pub standard_error: Vec<f64>,
    pub z_scores: Vec<f64>,
    /// Every `|z| <= 4`.
    pub passed: bool,
    pub sample_size: usize,
    pub seed: u64,
}

impl MomentCheck {
    pub const THRESHOLD: f64 = 4.0;

    pub fn new(
        observed: Vec<f64>,
        simulated_mean: Vec<f64>,
        standard_error: Vec<f64>,
        sample_size: usize,
        seed: u64,
    ) -> Self {
        let z_scores: Vec<f64> = observed
            .iter()
            .zip(&simulated_mean)
            .zip(&standard_error)
            .map(|((o, m), se)| {
                let d = m - o;
                if *se > 0.0 {
                    d / se
                } else if d == 0.0 {
                    0.0
                } else {
                    d.signum() * f64::INFINITY
                }
            })
            .collect();
        let passed = z_scores.iter().all(|z| z.abs() <= Self::THRESHOLD);
        Self {
            observed,
            simulated_mean,
            standard_error,
            z_scores,
            passed,
            sample_size,
            seed,
        }
    }

    /// Largest relative deviation `|mean - observed| / observed` over the
    /// coordinates with a nonzero observation.
    pub fn max_relative_error(&self) -> f64 {
        self.observed
            .iter()
            .zip(&self.simulated_mean)
            .filter(|(o, _)| **o != 0.0)
            .map(|(o, m)| ((m - o) / o).abs())
            .fold(0.0, f64::max)
    }
}

/// How the final naive-approximation optimization ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolishStatus {
    Converged,
    /// Optimizer budget exhausted; the best iterate is reported.
    BestIterate,
    /// Observed statistics outside every final batch's hull, where the
    /// approximation has no maximum; the last reference point is reported.
    OutsideHull,
    /// Stepping did not converge, so no polish was attempted.
    Skipped,
}

/// Model conventions, stated so reports are interpretable on their own.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub neighborhood: String,
    pub pair_counting: String,
    pub color_labels: String,
    pub reference_color: usize,
    pub statistic_order: String,
}

impl Conventions {
    pub fn for_colors(k: usize) -> Self {
        Self {
            neighborhood: "rook (4 nearest neighbors)".into(),
            pair_counting: "each unordered neighbor pair counted once".into(),
            color_labels: "1-based".into(),
            reference_color: k,
            statistic_order: "(T_1, .., T_{K-1}, S); theta = (alpha_1, .., alpha_{K-1}, beta)".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub method: FitMethod,
    pub estimates: PottsParams,
    pub tapering: Option<TaperingSpec>,
    pub observed: SuffStats,
    /// For maximum likelihood: whether partial stepping converged.
    pub converged: bool,
    pub trace: Option<SteppingTrace>,
    pub polish: Option<PolishStatus>,
    /// Parameter at which the final batch for the polish was drawn.
    #[serde(default)]
    pub polish_reference: Option<Vec<f64>>,
    /// Final batches drawn for the polish.
    #[serde(default)]
    pub polish_rounds: usize,
    pub moment_check: Option<MomentCheck>,
    /// Objective value at the estimate (log pseudo-likelihood, or the
    /// approximate log-likelihood ratio of the final polish).
    pub objective: Option<f64>,
    pub diagnosis: Option<DiagnosisReport>,
    pub tau_search: Option<TauSearchTrace>,
    pub seed: u64,
    pub config: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
    pub conventions: Conventions,
}

impl FitReport {
    pub fn new(method: FitMethod, estimates: PottsParams, observed: SuffStats, seed: u64) -> Self {
        let k = observed.t.len();
        Self {
            method,
            estimates,
            tapering: None,
            observed,
            converged: false,
            trace: None,
            polish: None,
            polish_reference: None,
            polish_rounds: 0,
            moment_check: None,
            objective: None,
            diagnosis: None,
            tau_search: None,
            seed,
            config: None,
            wall_time_secs: None,
            conventions: Conventions::for_colors(k),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_scores() {
        let m = MomentCheck::new(vec![10.0, 20.0, 5.0], vec![11.0, 20.0, 5.0], vec![0.5, 1.0, 0.0], 100, 1);
        assert_eq!(m.z_scores, vec![2.0, 0.0, 0.0]);
        assert!(m.passed);
        assert!((m.max_relative_error() - 0.1).abs() < 1e-15);
        let m = MomentCheck::new(vec![10.0], vec![13.0], vec![0.5], 100, 1);
        assert!(!m.passed);
        let m = MomentCheck::new(vec![10.0], vec![10.5], vec![0.0], 100, 1);
        assert!(!m.passed);
    }

    #[test]
    fn json_round_trip() {
        let st = SuffStats { t: vec![3, 4, 2], s: 7 };
        let mut r = FitReport::new(FitMethod::McmcmlePotts, PottsParams::zero(3), st, 42);
        r.wall_time_secs = Some(1.5);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"mcmcmle_potts\""));
        let back: FitReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        r.wall_time_secs = None;
        assert!(!serde_json::to_string(&r).unwrap().contains("wall_time"));
    }
}
