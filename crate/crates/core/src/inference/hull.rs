//! Convex-hull membership and the partial-stepping step length.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{PottsError, Result};

/// Residual (in normalized coordinates) below which a point counts as inside.
pub const HULL_TOLERANCE: f64 = 1e-8;

/// Sample points shifted and scaled per coordinate, with duplicates removed.
/// Membership is affine invariant, so this only conditions the LP.
pub struct NormalizedHull {
    center: Vec<f64>,
    scale: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    points: Vec<Vec<f64>>,
}

impl NormalizedHull {
    pub fn new(points: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(PottsError::EmptyBatch);
        };
        let d = first.len();
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(PottsError::DimensionMismatch {
                what: "hull point",
                expected: d,
                found: p.len(),
            });
        }
        let r = points.len() as f64;
        let center: Vec<f64> = (0..d).map(|a| points.iter().map(|p| p[a]).sum::<f64>() / r).collect();
        let scale: Vec<f64> = (0..d)
            .map(|a| {
                let s = points.iter().map(|p| (p[a] - center[a]).abs()).fold(0.0, f64::max);
                if s > 0.0 { s } else { 1.0 }
            })
            .collect();
        let mut normalized: Vec<Vec<f64>> = points
            .iter()
            .map(|p| (0..d).map(|a| (p[a] - center[a]) / scale[a]).collect())
            .collect();
        normalized.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        normalized.dedup();
        let lower = (0..d)
            .map(|a| normalized.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min))
            .collect();
        let upper = (0..d)
            .map(|a| normalized.iter().map(|p| p[a]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        Ok(Self {
            center,
            scale,
            lower,
            upper,
            points: normalized,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        let d = self.dim();
        if point.len() != d {
            return Err(PottsError::DimensionMismatch {
                what: "hull query",
                expected: d,
                found: point.len(),
            });
        }
        let q: Vec<f64> = (0..d).map(|a| (point[a] - self.center[a]) / self.scale[a]).collect();
        if q.iter().any(|v| !v.is_finite()) {
            return Ok(false);
        }
        for ((v, lo), hi) in q.iter().zip(&self.lower).zip(&self.upper) {
            if *v < lo - HULL_TOLERANCE || *v > hi + HULL_TOLERANCE {
                return Ok(false);
            }
        }
        let close = |p: &Vec<f64>| p.iter().zip(&q).all(|(x, y)| (x - y).abs() <= HULL_TOLERANCE);
        if self.points.iter().any(close) {
            return Ok(true);
        }
        if self.points.len() == 1 {
            return Ok(false);
        }
        Ok(self.l1_residual(&q)? <= HULL_TOLERANCE)
    }

    /// `min ||sum_i l_i p_i - q||_1` over the simplex, as an LP.
    fn l1_residual(&self, q: &[f64]) -> Result<f64> {
        let d = self.dim();
        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let lambdas: Vec<_> = self.points.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
        let pos: Vec<_> = (0..d).map(|_| lp.add_var(1.0, (0.0, f64::INFINITY))).collect();
        let neg: Vec<_> = (0..d).map(|_| lp.add_var(1.0, (0.0, f64::INFINITY))).collect();

        let sum: Vec<_> = lambdas.iter().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(sum.as_slice(), ComparisonOp::Eq, 1.0);
        for a in 0..d {
            let mut row: Vec<_> = lambdas
                .iter()
                .zip(&self.points)
                .filter(|(_, p)| p[a] != 0.0)
                .map(|(&v, p)| (v, p[a]))
                .collect();
            row.push((pos[a], 1.0));
            row.push((neg[a], -1.0));
            lp.add_constraint(row.as_slice(), ComparisonOp::Eq, q[a]);
        }
        let solution = lp
            .solve()
            .map_err(|e| PottsError::LinearProgram(e.to_string()))?
            .into_solution()
            .map_err(|_| PottsError::LinearProgram("solve interrupted".into()))?;
        Ok(solution.objective())
    }
}

/// Whether `point` is a convex combination of `points`.
pub fn in_convex_hull(point: &[f64], points: &[Vec<f64>]) -> Result<bool> {
    NormalizedHull::new(points)?.contains(point)
}

/// Which point the margin test extrapolates from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MarginAnchor {
    /// `1.05 gamma g + (1 - 1.05 gamma) zeta_hat(gamma)`.
    #[default]
    Interpolated,
    /// `1.05 gamma g + (1 - 1.05 gamma) zeta_bar`.
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaSearch {
    pub tolerance: f64,
    pub gamma_min: f64,
    pub anchor: MarginAnchor,
}

impl Default for GammaSearch {
    fn default() -> Self {
        Self {
            tolerance: 1e-3,
            gamma_min: 1e-3,
            anchor: MarginAnchor::Interpolated,
        }
    }
}

/// Point whose hull membership decides whether `gamma` is admissible.
pub fn margin_point(gamma: f64, g_obs: &[f64], mean: &[f64], anchor: MarginAnchor) -> Vec<f64> {
    let a = 1.05 * gamma;
    g_obs
        .iter()
        .zip(mean)
        .map(|(&g, &m)| {
            let base = match anchor {
                MarginAnchor::Interpolated => gamma * g + (1.0 - gamma) * m,
                MarginAnchor::Mean => m,
            };
            a * g + (1.0 - a) * base
        })
        .collect()
}

/// Largest admissible `gamma` in `(0, 1]`.
///
/// A 20-point scan brackets the admissibility boundary, which is then refined
/// by bisection to `search.tolerance`. Fails with
/// [`PottsError::SteppingStall`] when even `gamma_min` is inadmissible.
pub fn convex_hull_gamma(
    g_obs: &[f64],
    mean: &[f64],
    points: &[Vec<f64>],
    search: &GammaSearch,
) -> Result<f64> {
    if g_obs.len() != mean.len() {
        return Err(PottsError::DimensionMismatch {
            what: "sample mean",
            expected: g_obs.len(),
            found: mean.len(),
        });
    }
    let hull = NormalizedHull::new(points)?;
    let admissible = |gamma: f64| hull.contains(&margin_point(gamma, g_obs, mean, search.anchor));

    if admissible(1.0)? {
        return Ok(1.0);
    }
    const SCAN: usize = 20;
    let mut lo = None;
    for i in (1..SCAN).rev() {
        let gamma = i as f64 / SCAN as f64;
        if admissible(gamma)? {
            lo = Some(gamma);
            break;
        }
    }
    let (mut lo, mut hi) = match lo {
        Some(l) => (l, l + 1.0 / SCAN as f64),
        None => {
            if !admissible(search.gamma_min)? {
                return Err(PottsError::SteppingStall {
                    gamma_min: search.gamma_min,
                });
            }
            (search.gamma_min, 1.0 / SCAN as f64)
        }
    };
    while hi - lo > search.tolerance {
        let mid = 0.5 * (lo + hi);
        if admissible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Monotone-chain hull plus a winding test; independent of the LP.
    fn polygon_contains(points: &[Vec<f64>], q: &[f64]) -> Option<bool> {
        let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
            (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
        };
        let mut hull: Vec<(f64, f64)> = Vec::new();
        for &p in &pts {
            while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        let lower = hull.len() + 1;
        for &p in pts.iter().rev().skip(1) {
            while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
        if hull.len() < 3 {
            return None;
        }
        let q = (q[0], q[1]);
        let mut min_margin = f64::INFINITY;
        for i in 0..hull.len() {
            let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
            let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
            min_margin = min_margin.min(cross(a, b, q) / len);
        }
        // Skip queries within rounding distance of an edge.
        if min_margin.abs() < 1e-6 {
            return None;
        }
        Some(min_margin > 0.0)
    }

    #[test]
    fn membership_examples() {
        let tri = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(in_convex_hull(&[0.0, 1.0], &tri).unwrap());
        assert!(in_convex_hull(&[0.2, 0.2], &tri).unwrap());
        assert!(!in_convex_hull(&[2.0, 0.0], &tri).unwrap());
        assert!(!in_convex_hull(&[0.6, 0.6], &tri).unwrap());
        assert!(in_convex_hull(&[0.5, 0.5], &tri).unwrap());
        assert!(in_convex_hull(&[1.0, 2.0], &[vec![1.0, 2.0]]).unwrap());
        assert!(!in_convex_hull(&[1.0, 2.5], &[vec![1.0, 2.0]]).unwrap());
        assert!(in_convex_hull(&[1.0], &tri).is_err());
        assert!(in_convex_hull(&[1.0], &[]).is_err());
    }

    #[test]
    fn degenerate_flat_hull() {
        // Points on a segment inside 3-D.
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64, 7.0]).collect();
        assert!(in_convex_hull(&[4.5, 9.0, 7.0], &pts).unwrap());
        assert!(!in_convex_hull(&[4.5, 9.1, 7.0], &pts).unwrap());
        assert!(!in_convex_hull(&[4.5, 9.0, 7.1], &pts).unwrap());
    }

    #[test]
    fn agrees_with_polygon_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut checked = 0;
        let mut sets = Vec::new();
        for _ in 0..20 {
            let n = rng.random_range(3..30);
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random_range(-5.0..5.0), rng.random_range(-1.0..3.0)])
                .collect();
            sets.push((NormalizedHull::new(&pts).unwrap(), pts));
        }
        for i in 0..10_000 {
            let (hull, pts) = &sets[i % sets.len()];
            let q = [rng.random_range(-6.0..6.0), rng.random_range(-2.0..4.0)];
            if let Some(expected) = polygon_contains(pts, &q) {
                assert_eq!(hull.contains(&q).unwrap(), expected, "query {q:?}");
                checked += 1;
            }
        }
        assert!(checked > 9_900);
    }

    #[test]
    fn gamma_examples() {
        let pts = vec![vec![0.0], vec![1.0]];
        let s = GammaSearch::default();
        assert_eq!(convex_hull_gamma(&[0.5], &[0.5], &pts, &s).unwrap(), 1.0);
        assert_eq!(convex_hull_gamma(&[0.8], &[0.5], &pts, &s).unwrap(), 1.0);

        // Root of 1.575 g^2 - 3.075 g + 0.5 = 0, cross-checked by a fine grid.
        let root = (3.075 - (3.075f64 * 3.075 - 4.0 * 1.575 * 0.5).sqrt()) / (2.0 * 1.575);
        let grid_root = (1..=100_000)
            .map(|i| i as f64 / 100_000.0)
            .take_while(|&g| margin_point(g, &[2.0], &[0.5], MarginAnchor::Interpolated)[0] <= 1.0)
            .last()
            .unwrap();
        assert!((root - grid_root).abs() < 1e-5);
        assert!((root - 0.1790).abs() < 1e-4);
        let gamma = convex_hull_gamma(&[2.0], &[0.5], &pts, &s).unwrap();
        assert!(gamma <= root + 1e-12 && root - gamma <= 1e-3, "{gamma}");

        // Original anchor: 0.5 + 1.575 g <= 1.
        let mean_anchor = GammaSearch { anchor: MarginAnchor::Mean, ..s.clone() };
        let gamma = convex_hull_gamma(&[2.0], &[0.5], &pts, &mean_anchor).unwrap();
        assert!((gamma - 0.5 / 1.575).abs() <= 1e-3);
    }

    #[test]
    fn gamma_stall() {
        // Observation off the affine hull of the sample: nothing is admissible.
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let s = GammaSearch::default();
        assert!(matches!(
            convex_hull_gamma(&[0.5, 1.0], &[0.5, 0.0], &pts, &s),
            Err(PottsError::SteppingStall { .. })
        ));
    }

    #[test]
    fn gamma_is_one_when_observation_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let pts: Vec<Vec<f64>> = (0..50)
                .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let s = crate::stats::StatsSummary::from_vectors(&pts).unwrap();
            let g: Vec<f64> = (0..3).map(|_| rng.random_range(-0.3..0.3)).collect();
            if in_convex_hull(&g, &pts).unwrap() {
                assert_eq!(convex_hull_gamma(&g, &s.mean, &pts, &GammaSearch::default()).unwrap(), 1.0);
            }
        }
    }
}
