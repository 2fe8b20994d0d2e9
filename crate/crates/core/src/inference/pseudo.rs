//! Maximum pseudo-likelihood: the product over sites of each site's full
//! conditional distribution given its neighbors.

use std::time::Instant;

use super::optimize::{maximize, OptimOptions};
use super::report::{FitMethod, FitReport};
use crate::error::{PottsError, Result};
use crate::lattice::{suff_stats, Grid, PottsParams};

/// Per-site data needed by the pseudo-likelihood: the site's color and the
/// number of its neighbors carrying each color.
struct SiteTable {
    colors: Vec<usize>,
    neighbor_counts: Vec<u8>,
    k: usize,
}

impl SiteTable {
    fn new(grid: &Grid) -> Self {
        let k = grid.num_colors();
        let n = grid.num_cells();
        let mut neighbor_counts = vec![0u8; n * k];
        for site in 0..n {
            for j in grid.lattice().neighbors(site) {
                neighbor_counts[site * k + grid.color(j)] += 1;
            }
        }
        Self {
            colors: (0..n).map(|i| grid.color(i)).collect(),
            neighbor_counts,
            k,
        }
    }

    fn evaluate(&self, alpha: &[f64], beta: f64) -> (f64, Vec<f64>) {
        let k = self.k;
        let mut value = 0.0;
        let mut grad = vec![0.0; k];
        let mut a = vec![0.0; k];
        for (site, &x) in self.colors.iter().enumerate() {
            let counts = &self.neighbor_counts[site * k..(site + 1) * k];
            for l in 0..k {
                a[l] = alpha.get(l).copied().unwrap_or(0.0) + beta * counts[l] as f64;
            }
            let max = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = a.iter().map(|v| (v - max).exp()).sum();
            let log_z = max + z.ln();
            value += a[x] - log_z;

            let mut expected_n = 0.0;
            for l in 0..k {
                let p = (a[l] - log_z).exp();
                if l < k - 1 {
                    grad[l] -= p;
                }
                expected_n += p * counts[l] as f64;
            }
            if x < k - 1 {
                grad[x] += 1.0;
            }
            grad[k - 1] += counts[x] as f64 - expected_n;
        }
        (value, grad)
    }
}

/// Log pseudo-likelihood and its gradient in `(alpha_1, .., alpha_{K-1}, beta)`.
pub fn pseudo_log_likelihood(grid: &Grid, params: &PottsParams) -> Result<(f64, Vec<f64>)> {
    params.check_colors(grid.num_colors())?;
    Ok(SiteTable::new(grid).evaluate(&params.alpha, params.beta))
}

/// Maximizes the pseudo-likelihood, started from the log color proportions
/// and `beta = 0`.
pub fn fit_pseudolikelihood(grid: &Grid) -> Result<FitReport> {
    fit_pseudolikelihood_with(grid, &OptimOptions::default())
}

pub fn fit_pseudolikelihood_with(grid: &Grid, opts: &OptimOptions) -> Result<FitReport> {
    let started = Instant::now();
    let stats = suff_stats(grid);
    let k = grid.num_colors();
    let present = stats.t.iter().filter(|&&t| t > 0).count();
    if present < 2 {
        return Err(PottsError::DegenerateData(
            "grid is monochrome; the interaction estimate diverges".into(),
        ));
    }
    if let Some(c) = stats.t.iter().position(|&t| t == 0) {
        return Err(PottsError::DegenerateData(format!(
            "color {} never occurs; its field estimate diverges",
            c + 1
        )));
    }

    let table = SiteTable::new(grid);
    let reference = stats.t[k - 1] as f64;
    let mut x0: Vec<f64> = stats.t[..k - 1]
        .iter()
        .map(|&t| (t as f64 / reference).ln())
        .collect();
    x0.push(0.0);

    let result = maximize(
        |theta| {
            let (alpha, beta) = theta.split_at(k - 1);
            table.evaluate(alpha, beta[0])
        },
        &x0,
        opts,
    )?;
    let estimates = PottsParams::from_theta(&result.x)?;
    let mut report = FitReport::new(FitMethod::PseudoLikelihood, estimates, stats, 0);
    report.converged = true;
    report.objective = Some(result.value);
    report.wall_time_secs = Some(started.elapsed().as_secs_f64());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Boundary, Lattice};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn random_grid(rng: &mut ChaCha8Rng, w: usize, h: usize, k: usize) -> Grid {
        let l = Arc::new(Lattice::new(w, h, Boundary::Periodic).unwrap());
        let cells = (0..w * h).map(|_| rng.random_range(0..k) as u8).collect();
        Grid::new(l, k, cells).unwrap()
    }

    #[test]
    fn independence_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_grid(&mut rng, 5, 6, 3);
        let (v, _) = pseudo_log_likelihood(&g, &PottsParams::zero(3)).unwrap();
        assert!((v + 30.0 * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn two_cell_closed_form() {
        let l = Arc::new(Lattice::new(2, 1, Boundary::Free).unwrap());
        let g = Grid::uniform(l, 2, 0).unwrap();
        for beta in [-0.5, 0.0, 0.3, 2.0] {
            let (v, _) = pseudo_log_likelihood(&g, &PottsParams::new(vec![0.0], beta).unwrap()).unwrap();
            let expected = 2.0 * (beta - (beta.exp() + 1.0).ln());
            assert!((v - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = 1e-5;
        for _ in 0..100 {
            let k = rng.random_range(2..5);
            let g = random_grid(&mut rng, 4, 5, k);
            let theta: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p = PottsParams::from_theta(&theta).unwrap();
            let (_, grad) = pseudo_log_likelihood(&g, &p).unwrap();
            for i in 0..k {
                let mut up = theta.clone();
                let mut dn = theta.clone();
                up[i] += h;
                dn[i] -= h;
                let fu = pseudo_log_likelihood(&g, &PottsParams::from_theta(&up).unwrap()).unwrap().0;
                let fd = pseudo_log_likelihood(&g, &PottsParams::from_theta(&dn).unwrap()).unwrap().0;
                let fd_grad = (fu - fd) / (2.0 * h);
                let rel = (fd_grad - grad[i]).abs() / grad[i].abs().max(1.0);
                assert!(rel < 1e-6, "component {i}: {fd_grad} vs {}", grad[i]);
            }
        }
    }

    #[test]
    fn degenerate_grids() {
        let l = Arc::new(Lattice::new(4, 4, Boundary::Periodic).unwrap());
        let mono = Grid::uniform(l.clone(), 3, 1).unwrap();
        assert!(matches!(fit_pseudolikelihood(&mono), Err(PottsError::DegenerateData(_))));
        let cells = (0..16).map(|i| (i % 2) as u8).collect();
        let missing = Grid::new(l, 3, cells).unwrap();
        assert!(matches!(fit_pseudolikelihood(&missing), Err(PottsError::DegenerateData(_))));
    }

    #[test]
    fn fit_reaches_stationary_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_grid(&mut rng, 10, 10, 3);
        let fit = fit_pseudolikelihood(&g).unwrap();
        let (_, grad) = pseudo_log_likelihood(&g, &fit.estimates).unwrap();
        assert!(grad.iter().all(|v| v.abs() < 1e-6));
        assert!(fit.estimates.beta.abs() < 0.5);
    }
}
