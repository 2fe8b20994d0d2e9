//! MCMC simulation from the classical and tapered Potts models.
//!
//! Two kernels are provided. The Gibbs kernel alternates a raster-order sweep
//! of single-site updates with a global color-relabeling ("swap") move, which
//! lets the chain jump between the near-monochrome modes that appear above the
//! phase transition. The Swendsen-Wang kernel recolors bond clusters and is
//! only available for the classical model: the tapering term couples every
//! site through the global color counts.

mod gibbs;
mod swendsen_wang;
mod union_find;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PottsError, Result};
use crate::lattice::{suff_stats, Grid, Lattice, PottsParams, SuffStats, TaperingSpec};

pub use gibbs::{gibbs_sample, gibbs_sweep, symmetric_swap, tapered_gibbs_sample};
pub use swendsen_wang::{swendsen_wang_sample, swendsen_wang_step};
pub use union_find::UnionFind;

pub type ChainRng = ChaCha8Rng;

type ChainOutput = Result<(Vec<SuffStats>, Vec<Grid>)>;

/// Acceptance rule for the color-swap move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SwapRule {
    /// Accept iff the odds are at least one. Only invariant when `alpha = 0`.
    Greedy,
    /// Accept with probability `min(1, odds)`.
    #[default]
    Metropolis,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    #[default]
    Gibbs,
    SwendsenWang,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Model {
    #[default]
    Classical,
    Tapered(TaperingSpec),
}

impl Model {
    pub fn tapering(&self) -> Option<&TaperingSpec> {
        match self {
            Model::Classical => None,
            Model::Tapered(t) => Some(t),
        }
    }
}

/// Single-site update used by the Gibbs sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SiteUpdate {
    /// Draw the cell from its full conditional over all K colors.
    #[default]
    HeatBath,
    /// Propose a uniform different color, accept with `min(1, ratio)`.
    /// Periodic for K = 2 at `beta = 0`.
    Metropolis,
}

/// Starting configuration of every chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InitState {
    /// A monochrome configuration of a uniformly chosen color.
    #[default]
    Monochrome,
    /// Independent uniform colors.
    Random,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Retained draws (across all chains).
    pub sample_size: usize,
    /// Iterations discarded at the start of every chain.
    pub burn_in: usize,
    /// Iterations between retained draws.
    pub thinning: usize,
    pub seed: u64,
    #[serde(default)]
    pub keep_grids: bool,
    #[serde(default = "one")]
    pub chains: usize,
    #[serde(default)]
    pub swap_rule: SwapRule,
    #[serde(default)]
    pub init: InitState,
    #[serde(default)]
    pub site_update: SiteUpdate,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            sample_size: 500,
            burn_in: 500,
            thinning: 1,
            seed: 0,
            keep_grids: false,
            chains: 1,
            swap_rule: SwapRule::default(),
            init: InitState::default(),
            site_update: SiteUpdate::default(),
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_size == 0 {
            return Err(PottsError::InvalidConfig("sample_size must be >= 1".into()));
        }
        if self.thinning == 0 {
            return Err(PottsError::InvalidConfig("thinning must be >= 1".into()));
        }
        if self.chains == 0 {
            return Err(PottsError::InvalidConfig("chains must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SampleBatch {
    pub stats: Vec<SuffStats>,
    pub grids: Option<Vec<Grid>>,
    pub config: ChainConfig,
    pub params: PottsParams,
    pub tapering: Option<TaperingSpec>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    /// Statistic vectors `G(Y_j) = (T_1, .., T_{K-1}, S)`.
    pub fn g_vectors(&self) -> Vec<Vec<f64>> {
        self.stats.iter().map(SuffStats::g).collect()
    }

    /// Draws of `T_k` for a 0-based color.
    pub fn counts_of(&self, color: usize) -> Vec<f64> {
        self.stats.iter().map(|s| s.t[color] as f64).collect()
    }

    pub fn concordance(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.s as f64).collect()
    }
}

/// A chain's current configuration together with its running statistics.
#[derive(Clone, Debug)]
pub struct ChainState {
    grid: Grid,
    counts: Vec<u64>,
    s: u64,
}

impl ChainState {
    pub fn new(grid: Grid) -> Self {
        let st = suff_stats(&grid);
        Self {
            grid,
            counts: st.t,
            s: st.s,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn into_grid(self) -> Grid {
        self.grid
    }

    pub fn stats(&self) -> SuffStats {
        SuffStats {
            t: self.counts.clone(),
            s: self.s,
        }
    }

    fn recount(&mut self) {
        let st = suff_stats(&self.grid);
        self.counts = st.t;
        self.s = st.s;
    }
}

/// Independent stream for chain `chain` of a run seeded with `seed`.
pub fn chain_rng(seed: u64, chain: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

/// Mixes a base seed with a tag and an index (splitmix64 finalizer).
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    let mut z = seed
        ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED69);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Worker threads for multi-chain runs, capped by `POTTSLAB_THREADS`.
pub fn worker_threads() -> usize {
    let avail = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var("POTTSLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .map_or(avail, |n| n.min(avail.max(1)))
}

/// Runs `config.chains` independent chains and concatenates their draws in
/// chain order.
pub fn sample(
    lattice: Arc<Lattice>,
    num_colors: usize,
    model: &Model,
    params: &PottsParams,
    config: &ChainConfig,
    kind: SamplerKind,
) -> Result<SampleBatch> {
    config.validate()?;
    params.check_colors(num_colors)?;
    if let Some(tap) = model.tapering() {
        tap.check(num_colors, lattice.num_cells())?;
    }
    if kind == SamplerKind::SwendsenWang {
        if model.tapering().is_some() {
            return Err(PottsError::InvalidConfig(
                "Swendsen-Wang is not available for the tapered model".into(),
            ));
        }
        if params.beta < 0.0 {
            return Err(PottsError::InvalidParams(format!(
                "Swendsen-Wang needs beta >= 0, got {}",
                params.beta
            )));
        }
    }
    if num_colors > 255 {
        return Err(PottsError::InvalidConfig("at most 255 colors".into()));
    }

    let chains = config.chains;
    let shares: Vec<usize> = (0..chains)
        .map(|c| config.sample_size / chains + usize::from(c < config.sample_size % chains))
        .collect();

    let run = |c: usize| {
        run_chain(
            lattice.clone(),
            num_colors,
            model,
            params,
            config,
            kind,
            c as u64,
            shares[c],
        )
    };

    let results: Vec<ChainOutput> = if chains == 1 {
        vec![run(0)]
    } else {
        let threads = worker_threads().min(chains);
        let mut slots: Vec<Option<ChainOutput>> =
            (0..chains).map(|_| None).collect();
        for wave in (0..chains).collect::<Vec<_>>().chunks(threads) {
            let out: Vec<_> = std::thread::scope(|scope| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|&c| (c, scope.spawn(move || run(c))))
                    .collect();
                handles
                    .into_iter()
                    .map(|(c, h)| (c, h.join().expect("sampling thread panicked")))
                    .collect()
            });
            for (c, r) in out {
                slots[c] = Some(r);
            }
        }
        slots.into_iter().map(|s| s.expect("every chain ran")).collect()
    };

    let mut stats = Vec::with_capacity(config.sample_size);
    let mut grids = Vec::new();
    for r in results {
        let (s, g) = r?;
        stats.extend(s);
        grids.extend(g);
    }
    Ok(SampleBatch {
        stats,
        grids: config.keep_grids.then_some(grids),
        config: config.clone(),
        params: params.clone(),
        tapering: model.tapering().cloned(),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_chain(
    lattice: Arc<Lattice>,
    num_colors: usize,
    model: &Model,
    params: &PottsParams,
    config: &ChainConfig,
    kind: SamplerKind,
    chain: u64,
    draws: usize,
) -> Result<(Vec<SuffStats>, Vec<Grid>)> {
    let mut rng = chain_rng(config.seed, chain);
    let start = match config.init {
        InitState::Monochrome => Grid::uniform(lattice, num_colors, rng.random_range(0..num_colors) as u8)?,
        InitState::Random => {
            let cells = (0..lattice.num_cells()).map(|_| rng.random_range(0..num_colors) as u8).collect();
            Grid::new(lattice, num_colors, cells)?
        }
    };
    let mut state = ChainState::new(start);
    let tapering = model.tapering();
    let mut workspace = match kind {
        SamplerKind::SwendsenWang => Some(UnionFind::new(state.grid.num_cells())),
        SamplerKind::Gibbs => None,
    };

    let mut step = |state: &mut ChainState, rng: &mut ChainRng| match workspace.as_mut() {
        Some(uf) => swendsen_wang::step_state(state, params, rng, uf),
        None => {
            gibbs::sweep_state(state, params, tapering, config.site_update, rng);
            gibbs::swap_state(state, params, tapering, config.swap_rule, rng);
        }
    };

    for _ in 0..config.burn_in {
        step(&mut state, &mut rng);
    }
    let mut stats = Vec::with_capacity(draws);
    let mut grids = Vec::new();
    for _ in 0..draws {
        for _ in 0..config.thinning {
            step(&mut state, &mut rng);
        }
        stats.push(state.stats());
        if config.keep_grids {
            grids.push(state.grid.clone());
        }
    }
    Ok((stats, grids))
}
