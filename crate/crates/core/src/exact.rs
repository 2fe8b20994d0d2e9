//! Exhaustive enumeration of tiny lattices.
//!
//! Used as a reference for the samplers and the likelihood machinery: it gives
//! the exact normalizing constant, the exact distribution of the sufficient
//! statistics and their exact mean and covariance.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{PottsError, Result};
use crate::lattice::{log_weight, suff_stats, Grid, Lattice, PottsParams, SuffStats, TaperingSpec};

pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

#[derive(Clone, Debug)]
pub struct ExactDistribution {
    /// Distinct statistic values with their total probability, sorted.
    pub table: Vec<(SuffStats, f64)>,
    pub log_normalizer: f64,
    /// `E[G]` with `G = (T_1, .., T_{K-1}, S)`.
    pub mean: Vec<f64>,
    /// `Cov[G]`, row-major.
    pub covariance: Vec<Vec<f64>>,
    pub num_states: u64,
    params: PottsParams,
    tapering: Option<TaperingSpec>,
}

impl ExactDistribution {
    /// Probability of one particular configuration.
    pub fn state_probability(&self, grid: &Grid) -> f64 {
        (log_weight(&suff_stats(grid), &self.params, self.tapering.as_ref()) - self.log_normalizer)
            .exp()
    }
}

/// Enumerates all `K^(W*H)` configurations.
pub fn exact_distribution(
    lattice: Arc<Lattice>,
    num_colors: usize,
    params: &PottsParams,
    tapering: Option<&TaperingSpec>,
    cap: u64,
) -> Result<ExactDistribution> {
    params.check_colors(num_colors)?;
    if let Some(tap) = tapering {
        tap.check(num_colors, lattice.num_cells())?;
    }
    let n = lattice.num_cells();
    let states = (num_colors as f64).powi(n as i32);
    if states > cap as f64 {
        return Err(PottsError::EnumerationCap { states, cap });
    }
    let num_states = states as u64;

    let mut grid = Grid::uniform(lattice, num_colors, 0)?;
    let mut counts: BTreeMap<SuffStats, u64> = BTreeMap::new();
    for _ in 0..num_states {
        *counts.entry(suff_stats(&grid)).or_default() += 1;
        // Odometer increment over base-K digits.
        let cells = grid.cells_mut();
        for c in cells.iter_mut() {
            if (*c as usize) + 1 < num_colors {
                *c += 1;
                break;
            }
            *c = 0;
        }
    }

    let logs: Vec<f64> = counts
        .iter()
        .map(|(st, &mult)| (mult as f64).ln() + log_weight(st, params, tapering))
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_normalizer = max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln();

    let table: Vec<(SuffStats, f64)> = counts
        .into_keys()
        .zip(&logs)
        .map(|(st, l)| (st, (l - log_normalizer).exp()))
        .collect();

    let dim = num_colors;
    let mut mean = vec![0.0; dim];
    for (st, p) in &table {
        for (m, g) in mean.iter_mut().zip(st.g()) {
            *m += p * g;
        }
    }
    let mut covariance = vec![vec![0.0; dim]; dim];
    for (st, p) in &table {
        let g = st.g();
        for a in 0..dim {
            for b in 0..dim {
                covariance[a][b] += p * (g[a] - mean[a]) * (g[b] - mean[b]);
            }
        }
    }

    Ok(ExactDistribution {
        table,
        log_normalizer,
        mean,
        covariance,
        num_states,
        params: params.clone(),
        tapering: tapering.cloned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;

    fn lat(w: usize, h: usize) -> Arc<Lattice> {
        Arc::new(Lattice::new(w, h, Boundary::Free).unwrap())
    }

    #[test]
    fn independence_normalizer() {
        let p = PottsParams::new(vec![0.4, -0.7], 0.0).unwrap();
        let d = exact_distribution(lat(2, 3), 3, &p, None, DEFAULT_ENUMERATION_CAP).unwrap();
        let expected = 6.0 * (0.4f64.exp() + (-0.7f64).exp() + 1.0).ln();
        assert!((d.log_normalizer - expected).abs() < 1e-12);
    }

    #[test]
    fn uniform_two_by_two() {
        let p = PottsParams::zero(2);
        let d = exact_distribution(lat(2, 2), 2, &p, None, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(d.num_states, 16);
        let g = Grid::uniform(lat(2, 2), 2, 1).unwrap();
        assert!((d.state_probability(&g) - 1.0 / 16.0).abs() < 1e-15);
        let total: f64 = d.table.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((d.mean[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let p = PottsParams::new(vec![0.2, 0.1], 0.8).unwrap();
        let tap = TaperingSpec::new(vec![0.3, 0.1], vec![2.0, 3.0]).unwrap();
        for t in [None, Some(&tap)] {
            let d = exact_distribution(lat(3, 3), 3, &p, t, DEFAULT_ENUMERATION_CAP).unwrap();
            let total: f64 = d.table.iter().map(|(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_s_by_direct_state_sum() {
        // Independent route: sum S * p over every state using state_probability.
        let p = PottsParams::new(vec![0.0], 0.4).unwrap();
        let d = exact_distribution(lat(3, 3), 2, &p, None, DEFAULT_ENUMERATION_CAP).unwrap();
        let mut es = 0.0;
        for code in 0u32..512 {
            let cells = (0..9).map(|i| ((code >> i) & 1) as u8).collect();
            let g = Grid::new(lat(3, 3), 2, cells).unwrap();
            es += suff_stats(&g).s as f64 * d.state_probability(&g);
        }
        assert!((es - d.mean[1]).abs() < 1e-10);
        assert!(es > 6.0 && es < 12.0);
    }

    #[test]
    fn cap_enforced() {
        let p = PottsParams::zero(2);
        assert!(matches!(
            exact_distribution(lat(5, 5), 2, &p, None, 1000),
            Err(PottsError::EnumerationCap { .. })
        ));
    }
}
