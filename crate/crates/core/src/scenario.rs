//! Benchmark lattices: argmax labeling of independent Gaussian fields with a
//! gamma-exponential covariance.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{PottsError, Result};
use crate::lattice::{Boundary, Grid, Lattice};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub width: usize,
    pub height: usize,
    pub num_classes: usize,
    /// Constant mean of each class's latent field.
    pub mu: Vec<f64>,
    /// Length scale, in cell-spacing units.
    pub length: f64,
    /// Kernel exponent in `(0, 2]`.
    pub gamma: f64,
    /// Added to the covariance diagonal.
    pub nugget: f64,
    pub seed: u64,
    /// Boundary recorded on the generated grid.
    #[serde(default)]
    pub boundary: Boundary,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(PottsError::InvalidConfig("scenario dimensions must be positive".into()));
        }
        if !(2..=255).contains(&self.num_classes) {
            return Err(PottsError::InvalidConfig(format!(
                "num_classes must lie in 2..=255, got {}",
                self.num_classes
            )));
        }
        if self.mu.len() != self.num_classes {
            return Err(PottsError::DimensionMismatch {
                what: "mu",
                expected: self.num_classes,
                found: self.mu.len(),
            });
        }
        if self.mu.iter().any(|m| !m.is_finite()) {
            return Err(PottsError::InvalidConfig("mu must be finite".into()));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(PottsError::InvalidConfig("length must be > 0".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 2.0) {
            return Err(PottsError::InvalidConfig("kernel exponent must lie in (0, 2]".into()));
        }
        if !(self.nugget >= 0.0 && self.nugget.is_finite()) {
            return Err(PottsError::InvalidConfig("nugget must be >= 0".into()));
        }
        Ok(())
    }
}

/// `exp(-(d_ij / l)^gamma) + nugget 1{i = j}` over unit-spaced cell centers
/// in row-major order.
pub fn gamma_exp_cov(config: &ScenarioConfig) -> Result<DMatrix<f64>> {
    config.validate()?;
    let (w, m) = (config.width, config.width * config.height);
    let pos = |i: usize| ((i % w) as f64, (i / w) as f64);
    let mut cov = DMatrix::zeros(m, m);
    for i in 0..m {
        let (xi, yi) = pos(i);
        cov[(i, i)] = 1.0 + config.nugget;
        for j in 0..i {
            let (xj, yj) = pos(j);
            let d = ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt();
            let v = (-(d / config.length).powf(config.gamma)).exp();
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(cov)
}

/// Factorized covariance, reusable across seeds.
pub struct ScenarioGenerator {
    config: ScenarioConfig,
    factor: Cholesky<f64, Dyn>,
    lattice: Arc<Lattice>,
}

impl ScenarioGenerator {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        let cov = gamma_exp_cov(config)?;
        let factor = Cholesky::new(cov).ok_or_else(|| {
            PottsError::Factorization(
                "covariance is not numerically positive definite; add a nugget".into(),
            )
        })?;
        let lattice = Arc::new(Lattice::new(config.width, config.height, config.boundary)?);
        Ok(Self {
            config: config.clone(),
            factor,
            lattice,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    /// One labeled grid; fields are drawn class by class from one stream.
    pub fn generate(&self, seed: u64) -> Result<Grid> {
        let m = self.lattice.num_cells();
        let l = self.factor.l();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = vec![f64::NEG_INFINITY; m];
        let mut label = vec![0u8; m];
        for (k, &mu) in self.config.mu.iter().enumerate() {
            let z = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
            let field = &l * z;
            for i in 0..m {
                let v = field[i] + mu;
                // Strict comparison keeps the lowest index on ties.
                if v > best[i] {
                    best[i] = v;
                    label[i] = k as u8;
                }
            }
        }
        Grid::new(self.lattice.clone(), self.config.num_classes, label)
    }
}

pub fn generate_scenario(config: &ScenarioConfig) -> Result<Grid> {
    ScenarioGenerator::new(config)?.generate(config.seed)
}

/// The six benchmark presets on a 30x30 grid with four classes:
/// equal means (1-3) or means `(1, 0.5, 0, 0)` (4-6), each at moderate,
/// strong-with-noise and strong-with-little-noise correlation.
pub fn builtin_scenarios() -> Vec<ScenarioConfig> {
    let levels = [(2.0, 0.25), (5.0, 0.10), (8.0, 0.01)];
    let means = [vec![0.0; 4], vec![1.0, 0.5, 0.0, 0.0]];
    let mut out = Vec::with_capacity(6);
    for mu in &means {
        for &(length, nugget) in &levels {
            out.push(ScenarioConfig {
                width: 30,
                height: 30,
                num_classes: 4,
                mu: mu.clone(),
                length,
                gamma: 1.5,
                nugget,
                seed: out.len() as u64 + 1,
                boundary: Boundary::Periodic,
            });
        }
    }
    out
}

/// Preset `n` in `1..=6`.
pub fn builtin_scenario(n: usize) -> Result<ScenarioConfig> {
    if !(1..=6).contains(&n) {
        return Err(PottsError::OutOfRange {
            what: "scenario preset",
            value: n,
            limit: 6,
        });
    }
    Ok(builtin_scenarios().swap_remove(n - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::suff_stats;
    use rand::Rng;

    fn small(seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            width: 8,
            height: 7,
            num_classes: 3,
            mu: vec![0.0; 3],
            length: 2.0,
            gamma: 1.0,
            nugget: 0.1,
            seed,
            boundary: Boundary::Periodic,
        }
    }

    #[test]
    fn covariance_entries() {
        let c = ScenarioConfig { length: 1.0, gamma: 1.0, nugget: 0.0, ..small(0) };
        let cov = gamma_exp_cov(&c).unwrap();
        assert!((cov[(0, 1)] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((cov[(0, 8)] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((cov[(0, 9)] - (-(2.0f64.sqrt())).exp()).abs() < 1e-15);
        let c = small(0);
        let cov = gamma_exp_cov(&c).unwrap();
        for i in 0..cov.nrows() {
            assert_eq!(cov[(i, i)], 1.1);
            for j in 0..i {
                assert_eq!(cov[(i, j)], cov[(j, i)]);
            }
        }
    }

    #[test]
    fn covariance_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let c = ScenarioConfig {
                width: rng.random_range(2..8),
                height: rng.random_range(2..8),
                length: rng.random_range(0.1..10.0),
                gamma: rng.random_range(0.05..=2.0),
                nugget: rng.random_range(0.0..0.5),
                ..small(0)
            };
            let cov = gamma_exp_cov(&c).unwrap();
            let trace = cov.trace();
            let eig = cov.symmetric_eigen();
            assert!(eig.eigenvalues.min() >= -1e-8 * trace, "{c:?}");
        }
    }

    #[test]
    fn deterministic_and_complete() {
        let a = generate_scenario(&small(3)).unwrap();
        let b = generate_scenario(&small(3)).unwrap();
        let c = generate_scenario(&small(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.num_cells(), 56);
    }

    #[test]
    fn dominant_mean_wins() {
        let gen = ScenarioGenerator::new(&ScenarioConfig { mu: vec![3.0, 0.0, 0.0], ..small(0) }).unwrap();
        for seed in 0..20 {
            let st = suff_stats(&gen.generate(seed).unwrap());
            assert!(st.t[0] > st.t[1] + st.t[2], "{st:?}");
        }
    }

    #[test]
    fn equal_means_give_equal_counts() {
        let gen = ScenarioGenerator::new(&small(0)).unwrap();
        let reps = 50;
        let counts: Vec<Vec<f64>> = (0..reps)
            .map(|s| suff_stats(&gen.generate(s).unwrap()).t.iter().map(|&v| v as f64).collect())
            .collect();
        let expected = 56.0 / 3.0;
        for k in 0..3 {
            let col: Vec<f64> = counts.iter().map(|c| c[k]).collect();
            let m = crate::stats::mean(&col);
            let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (reps as f64 - 1.0)).sqrt();
            let se = sd / (reps as f64).sqrt();
            assert!((m - expected).abs() < 4.0 * se, "class {k}: {m} vs {expected} (se {se})");
        }
    }

    #[test]
    fn short_length_is_near_independent() {
        let c = ScenarioConfig { width: 30, height: 30, length: 0.05, nugget: 0.5, ..small(9) };
        let st = suff_stats(&generate_scenario(&c).unwrap());
        for &t in &st.t {
            assert!((t as f64 - 300.0).abs() < 4.0 * (900.0f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt());
        }
        // Independent cells: each of the 1800 pairs concordant with prob 1/3.
        assert!((st.s as f64 - 600.0).abs() < 4.0 * (1800.0f64 * (2.0 / 9.0)).sqrt() * 1.5);
    }

    #[test]
    fn presets() {
        let p = builtin_scenarios();
        assert_eq!(p.len(), 6);
        assert_eq!(p[3].mu, vec![1.0, 0.5, 0.0, 0.0]);
        assert!(p[..3].iter().all(|c| c.mu == vec![0.0; 4]));
        assert!(p.iter().all(|c| c.width == 30 && c.height == 30 && c.num_classes == 4));
        assert!(p.iter().all(|c| c.validate().is_ok()));
        assert_eq!(builtin_scenario(5).unwrap(), p[4]);
        assert!(builtin_scenario(0).is_err() && builtin_scenario(7).is_err());
    }

    #[test]
    fn singular_covariance_suggests_nugget() {
        // gamma = 2 with a long length scale is numerically singular.
        let c = ScenarioConfig { width: 10, height: 10, length: 50.0, gamma: 2.0, nugget: 0.0, ..small(0) };
        match ScenarioGenerator::new(&c) {
            Err(PottsError::Factorization(msg)) => assert!(msg.contains("nugget")),
            other => panic!("expected a factorization error, got {:?}", other.err()),
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(gamma_exp_cov(&ScenarioConfig { gamma: 2.5, ..small(0) }).is_err());
        assert!(gamma_exp_cov(&ScenarioConfig { length: 0.0, ..small(0) }).is_err());
        assert!(gamma_exp_cov(&ScenarioConfig { nugget: -1.0, ..small(0) }).is_err());
        assert!(gamma_exp_cov(&ScenarioConfig { mu: vec![0.0; 2], ..small(0) }).is_err());
    }
}
