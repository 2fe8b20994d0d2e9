#![allow(dead_code)]

use std::sync::Arc;

use pottslab::{Boundary, Grid, Lattice};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Brute-force enumeration of a small lattice, written without the library's
/// neighbor tables.
pub struct Enumeration {
    pub w: usize,
    pub h: usize,
    pub k: usize,
    /// `(T_1..T_K, S)` per state index `sum_i c_i K^i`.
    pub stats: Vec<(Vec<u32>, u32)>,
}

impl Enumeration {
    pub fn new(w: usize, h: usize, k: usize, boundary: Boundary) -> Self {
        let n = w * h;
        let mut edges = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                match boundary {
                    Boundary::Free => {
                        if x + 1 < w {
                            edges.push((i, i + 1));
                        }
                        if y + 1 < h {
                            edges.push((i, i + w));
                        }
                    }
                    Boundary::Periodic => {
                        edges.push((i, y * w + (x + 1) % w));
                        edges.push((i, ((y + 1) % h) * w + x));
                    }
                }
            }
        }
        let states = k.pow(n as u32);
        let mut cells = vec![0usize; n];
        let stats = (0..states)
            .map(|idx| {
                let mut r = idx;
                for c in cells.iter_mut() {
                    *c = r % k;
                    r /= k;
                }
                let mut t = vec![0u32; k];
                for &c in &cells {
                    t[c] += 1;
                }
                let s = edges.iter().filter(|&&(a, b)| cells[a] == cells[b]).count() as u32;
                (t, s)
            })
            .collect();
        Self { w, h, k, stats }
    }

    pub fn num_states(&self) -> usize {
        self.stats.len()
    }

    /// State probabilities under `alpha`, `beta` and an optional
    /// `(tau, center)` penalty on colors `1..K-1`.
    pub fn probabilities(&self, alpha: &[f64], beta: f64, taper: Option<(&[f64], &[f64])>) -> Vec<f64> {
        let lw: Vec<f64> = self
            .stats
            .iter()
            .map(|(t, s)| {
                let mut v = beta * *s as f64;
                for (a, &c) in alpha.iter().zip(t) {
                    v += a * c as f64;
                }
                if let Some((tau, m)) = taper {
                    for ((tk, mk), &c) in tau.iter().zip(m).zip(t) {
                        v -= tk * (c as f64 - mk).powi(2);
                    }
                }
                v
            })
            .collect();
        let max = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = lw.iter().map(|v| (v - max).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|v| v / z).collect()
    }

    pub fn grid(&self, lattice: &Arc<Lattice>, idx: usize) -> Grid {
        let mut r = idx;
        let cells = (0..self.w * self.h)
            .map(|_| {
                let c = r % self.k;
                r /= self.k;
                c as u8
            })
            .collect();
        Grid::new(lattice.clone(), self.k, cells).unwrap()
    }
}

pub fn state_index(grid: &Grid) -> usize {
    let k = grid.num_colors();
    grid.cells().iter().rev().fold(0, |acc, &c| acc * k + c as usize)
}

pub fn state_counts(grids: &[Grid], num_states: usize) -> Vec<u64> {
    let mut counts = vec![0u64; num_states];
    for g in grids {
        counts[state_index(g)] += 1;
    }
    counts
}

/// Pearson chi-square p-value, pooling the smallest cells until each bin
/// expects at least 5.
pub fn chi_square_p(observed: &[u64], expected: &[f64]) -> f64 {
    let n: u64 = observed.iter().sum();
    let mut order: Vec<usize> = (0..expected.len()).collect();
    order.sort_by(|&a, &b| expected[a].partial_cmp(&expected[b]).unwrap());
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut po, mut pe) = (0.0, 0.0);
    for &i in &order {
        let e = expected[i] * n as f64;
        if e < 5.0 {
            po += observed[i] as f64;
            pe += e;
            if pe >= 5.0 {
                bins.push((po, pe));
                po = 0.0;
                pe = 0.0;
            }
        } else {
            bins.push((observed[i] as f64, e));
        }
    }
    if pe > 0.0 {
        if let Some(b) = bins.first_mut() {
            b.0 += po;
            b.1 += pe;
        }
    }
    let stat: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    1.0 - ChiSquared::new((bins.len() - 1) as f64).unwrap().cdf(stat)
}

pub fn mean_and_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Batch-means standard error of the mean with `sqrt(n)` batches.
pub fn batch_means_se(x: &[f64]) -> f64 {
    let b = (x.len() as f64).sqrt() as usize;
    let means: Vec<f64> = x.chunks_exact(x.len() / b).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    let (_, v) = mean_and_var(&means);
    (v / means.len() as f64).sqrt()
}
