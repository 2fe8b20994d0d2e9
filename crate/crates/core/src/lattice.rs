//! Rectangular lattices, colorings and the Potts sufficient statistics.
//!
//! Colors are 0-based inside the library (`0..K`); files and reports use
//! 1-based labels. Neighborhoods are the four rook neighbors. With a periodic
//! boundary both dimensions must be at least 3 so that no pair of cells is
//! joined by two edges.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{PottsError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Free,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Periodic => f.write_str("periodic"),
            Boundary::Free => f.write_str("free"),
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = PottsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "free" => Ok(Boundary::Free),
            other => Err(PottsError::InvalidConfig(format!("unknown boundary `{other}`"))),
        }
    }
}

const NO_NEIGHBOR: u32 = u32::MAX;

/// Lattice topology: dimensions, boundary rule, neighbor lists and the edge set.
#[derive(Clone, Debug)]
pub struct Lattice {
    width: usize,
    height: usize,
    boundary: Boundary,
    neighbors: Vec<[u32; 4]>,
    edges: Vec<(u32, u32)>,
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height && self.boundary == other.boundary
    }
}

impl Eq for Lattice {}

impl Lattice {
    pub fn new(width: usize, height: usize, boundary: Boundary) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(PottsError::InvalidGrid(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if boundary == Boundary::Periodic && width.min(height) < 3 {
            return Err(PottsError::InvalidGrid(format!(
                "periodic boundary needs width and height >= 3, got {width}x{height}"
            )));
        }
        let n = width * height;
        if n >= NO_NEIGHBOR as usize {
            return Err(PottsError::InvalidGrid(format!("{n} cells is too many")));
        }

        let mut edges = Vec::with_capacity(2 * n);
        for r in 0..height {
            for c in 0..width {
                let i = r * width + c;
                // Right and down neighbors give every unordered pair exactly once.
                if c + 1 < width {
                    edges.push((i, i + 1));
                } else if boundary == Boundary::Periodic {
                    edges.push((r * width, i));
                }
                if r + 1 < height {
                    edges.push((i, i + width));
                } else if boundary == Boundary::Periodic {
                    edges.push((c, i));
                }
            }
        }
        for e in edges.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();

        let mut neighbors = vec![[NO_NEIGHBOR; 4]; n];
        let mut degree = vec![0usize; n];
        for &(i, j) in &edges {
            neighbors[i][degree[i]] = j as u32;
            degree[i] += 1;
            neighbors[j][degree[j]] = i as u32;
            degree[j] += 1;
        }
        let edges = edges.into_iter().map(|(i, j)| (i as u32, j as u32)).collect();

        Ok(Self {
            width,
            height,
            boundary,
            neighbors,
            edges,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    /// Unordered neighbor pairs `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn neighbors(&self, site: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors[site]
            .iter()
            .take_while(|&&j| j != NO_NEIGHBOR)
            .map(|&j| j as usize)
    }
}

/// A coloring of a lattice with `num_colors` colors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    lattice: Arc<Lattice>,
    num_colors: usize,
    cells: Vec<u8>,
}

impl Grid {
    /// Builds a grid from 0-based colors in row-major order.
    pub fn new(lattice: Arc<Lattice>, num_colors: usize, cells: Vec<u8>) -> Result<Self> {
        if !(2..=255).contains(&num_colors) {
            return Err(PottsError::InvalidGrid(format!(
                "number of colors must be in 2..=255, got {num_colors}"
            )));
        }
        if cells.len() != lattice.num_cells() {
            return Err(PottsError::DimensionMismatch {
                what: "grid cells",
                expected: lattice.num_cells(),
                found: cells.len(),
            });
        }
        if let Some(pos) = cells.iter().position(|&c| c as usize >= num_colors) {
            return Err(PottsError::InvalidGrid(format!(
                "cell {pos} has color {} outside 1..={num_colors}",
                cells[pos] as usize + 1
            )));
        }
        Ok(Self {
            lattice,
            num_colors,
            cells,
        })
    }

    pub fn uniform(lattice: Arc<Lattice>, num_colors: usize, color: u8) -> Result<Self> {
        let n = lattice.num_cells();
        Self::new(lattice, num_colors, vec![color; n])
    }

    /// Builds a grid from 1-based labels.
    pub fn from_labels(lattice: Arc<Lattice>, num_colors: usize, labels: &[u32]) -> Result<Self> {
        let cells = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                if l == 0 || l as usize > num_colors {
                    Err(PottsError::InvalidGrid(format!(
                        "cell {i} has label {l} outside 1..={num_colors}"
                    )))
                } else {
                    Ok((l - 1) as u8)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(lattice, num_colors, cells)
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn num_colors(&self) -> usize {
        self.num_colors
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    #[inline]
    pub fn color(&self, site: usize) -> usize {
        self.cells[site] as usize
    }

    /// Recolors one site. The caller guarantees `color < num_colors`.
    #[inline]
    pub(crate) fn set_color(&mut self, site: usize, color: usize) {
        debug_assert!(color < self.num_colors);
        self.cells[site] = color as u8;
    }

    pub(crate) fn cells_mut(&mut self) -> &mut [u8] {
        &mut self.cells
    }

    /// Number of neighbors of `site` carrying `color`.
    #[inline]
    pub fn neighbor_count(&self, site: usize, color: usize) -> usize {
        self.lattice
            .neighbors(site)
            .filter(|&j| self.cells[j] as usize == color)
            .count()
    }

    pub fn labels(&self) -> Vec<u32> {
        self.cells.iter().map(|&c| c as u32 + 1).collect()
    }
}

/// Per-color counts `T_k` and the concordant-pair count `S`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SuffStats {
    pub t: Vec<u64>,
    pub s: u64,
}

impl SuffStats {
    /// The statistic vector `(T_1, .., T_{K-1}, S)` paired with `(alpha, beta)`.
    pub fn g(&self) -> Vec<f64> {
        let k = self.t.len();
        let mut g: Vec<f64> = self.t[..k - 1].iter().map(|&v| v as f64).collect();
        g.push(self.s as f64);
        g
    }

    pub fn total(&self) -> u64 {
        self.t.iter().sum()
    }
}

pub fn suff_stats(grid: &Grid) -> SuffStats {
    let mut t = vec![0u64; grid.num_colors];
    for &c in &grid.cells {
        t[c as usize] += 1;
    }
    let s = grid
        .lattice
        .edges()
        .iter()
        .filter(|&&(i, j)| grid.cells[i as usize] == grid.cells[j as usize])
        .count() as u64;
    SuffStats { t, s }
}

/// Change in `S` if `site` were recolored to `new_color`.
pub fn delta_s(grid: &Grid, site: usize, new_color: usize) -> Result<i64> {
    if site >= grid.num_cells() {
        return Err(PottsError::OutOfRange {
            what: "site",
            value: site,
            limit: grid.num_cells(),
        });
    }
    if new_color >= grid.num_colors {
        return Err(PottsError::OutOfRange {
            what: "color",
            value: new_color,
            limit: grid.num_colors,
        });
    }
    Ok(delta_s_unchecked(grid, site, new_color))
}

#[inline]
pub(crate) fn delta_s_unchecked(grid: &Grid, site: usize, new_color: usize) -> i64 {
    let old = grid.color(site);
    if old == new_color {
        return 0;
    }
    let mut d = 0i64;
    for j in grid.lattice.neighbors(site) {
        let c = grid.cells[j] as usize;
        d += (c == new_color) as i64 - (c == old) as i64;
    }
    d
}

/// `theta = (alpha_1, .., alpha_{K-1}, beta)`; `alpha_K = 0` is implicit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PottsParams {
    pub alpha: Vec<f64>,
    pub beta: f64,
}

impl PottsParams {
    /// Estimators may return a slightly negative `beta`, so only finiteness
    /// is enforced here; cluster sampling checks `beta >= 0` itself.
    pub fn new(alpha: Vec<f64>, beta: f64) -> Result<Self> {
        if alpha.iter().any(|a| !a.is_finite()) || !beta.is_finite() {
            return Err(PottsError::InvalidParams(format!(
                "non-finite parameter in alpha={alpha:?}, beta={beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn zero(num_colors: usize) -> Self {
        Self {
            alpha: vec![0.0; num_colors - 1],
            beta: 0.0,
        }
    }

    pub fn from_theta(theta: &[f64]) -> Result<Self> {
        if theta.len() < 2 {
            return Err(PottsError::DimensionMismatch {
                what: "theta",
                expected: 2,
                found: theta.len(),
            });
        }
        let (alpha, beta) = theta.split_at(theta.len() - 1);
        Self::new(alpha.to_vec(), beta[0])
    }

    pub fn theta(&self) -> Vec<f64> {
        let mut v = self.alpha.clone();
        v.push(self.beta);
        v
    }

    pub fn num_colors(&self) -> usize {
        self.alpha.len() + 1
    }

    /// `alpha_k` for 0-based color `k`, with the reference color mapping to 0.
    #[inline]
    pub fn alpha_of(&self, color: usize) -> f64 {
        self.alpha.get(color).copied().unwrap_or(0.0)
    }

    /// Checks that `alpha` has one entry per non-reference color.
    pub fn check_colors(&self, num_colors: usize) -> Result<()> {
        if self.alpha.len() + 1 != num_colors {
            return Err(PottsError::DimensionMismatch {
                what: "alpha",
                expected: num_colors - 1,
                found: self.alpha.len(),
            });
        }
        Ok(())
    }
}

/// Quadratic count penalty `sum_k tau_k (T_k - m_k)^2` over colors `1..K-1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaperingSpec {
    pub tau: Vec<f64>,
    pub center: Vec<f64>,
}

impl TaperingSpec {
    pub fn new(tau: Vec<f64>, center: Vec<f64>) -> Result<Self> {
        if tau.len() != center.len() {
            return Err(PottsError::DimensionMismatch {
                what: "tapering center",
                expected: tau.len(),
                found: center.len(),
            });
        }
        if tau.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(PottsError::InvalidParams(format!(
                "tapering weights must be finite and >= 0, got {tau:?}"
            )));
        }
        if center.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(PottsError::InvalidParams(format!(
                "tapering center must be finite and >= 0, got {center:?}"
            )));
        }
        Ok(Self { tau, center })
    }

    /// Common weight `tau` for every color, centered on the observed counts.
    pub fn centered_on(tau: f64, stats: &SuffStats) -> Result<Self> {
        let k = stats.t.len();
        let center = stats.t[..k - 1].iter().map(|&v| v as f64).collect();
        Self::new(vec![tau; k - 1], center)
    }

    pub(crate) fn check(&self, num_colors: usize, num_cells: usize) -> Result<()> {
        if self.tau.len() + 1 != num_colors {
            return Err(PottsError::DimensionMismatch {
                what: "tau",
                expected: num_colors - 1,
                found: self.tau.len(),
            });
        }
        if self.center.iter().any(|&m| m > num_cells as f64) {
            return Err(PottsError::InvalidParams(format!(
                "tapering center {:?} exceeds the {num_cells} cells",
                self.center
            )));
        }
        Ok(())
    }

    /// The tapering term for counts `t` (all K colors).
    pub fn penalty(&self, t: &[u64]) -> f64 {
        self.tau
            .iter()
            .zip(&self.center)
            .zip(t)
            .map(|((tau, m), &c)| tau * (c as f64 - m).powi(2))
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.tau.iter().all(|&t| t == 0.0)
    }
}

/// `sum_k alpha_k T_k + beta S - tapering term`.
pub fn unnormalized_log_prob(
    grid: &Grid,
    params: &PottsParams,
    tapering: Option<&TaperingSpec>,
) -> Result<f64> {
    params.check_colors(grid.num_colors)?;
    if let Some(tap) = tapering {
        tap.check(grid.num_colors, grid.num_cells())?;
    }
    Ok(log_weight(&suff_stats(grid), params, tapering))
}

pub(crate) fn log_weight(
    stats: &SuffStats,
    params: &PottsParams,
    tapering: Option<&TaperingSpec>,
) -> f64 {
    let linear: f64 = params
        .alpha
        .iter()
        .zip(&stats.t)
        .map(|(a, &t)| a * t as f64)
        .sum::<f64>()
        + params.beta * stats.s as f64;
    match tapering {
        Some(tap) => linear - tap.penalty(&stats.t),
        None => linear,
    }
}

/// Critical interaction `log(1 + sqrt(K))`.
pub fn phase_transition_beta(num_colors: usize) -> Result<f64> {
    if num_colors < 2 {
        return Err(PottsError::InvalidParams(format!(
            "phase transition needs K >= 2, got {num_colors}"
        )));
    }
    Ok((1.0 + (num_colors as f64).sqrt()).ln())
}
