use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{sample, ChainConfig, ChainState, Model, SampleBatch, SamplerKind, SiteUpdate, SwapRule};
use crate::error::Result;
use crate::lattice::{delta_s_unchecked, Lattice, PottsParams, TaperingSpec};

/// Change of the tapering term when one cell moves from color `from` to `to`.
#[inline]
fn tapering_delta(tap: &TaperingSpec, counts: &[u64], from: usize, to: usize) -> f64 {
    let mut d = 0.0;
    if let (Some(tau), Some(m)) = (tap.tau.get(to), tap.center.get(to)) {
        d += tau * (2.0 * (counts[to] as f64 - m) + 1.0);
    }
    if let (Some(tau), Some(m)) = (tap.tau.get(from), tap.center.get(from)) {
        d += tau * (-2.0 * (counts[from] as f64 - m) + 1.0);
    }
    d
}

/// One raster-order pass of single-site updates.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    state: &mut ChainState,
    params: &PottsParams,
    tapering: Option<&TaperingSpec>,
    update: SiteUpdate,
    rng: &mut R,
) {
    sweep_state(state, params, tapering, update, rng)
}

pub(super) fn sweep_state<R: Rng + ?Sized>(
    state: &mut ChainState,
    params: &PottsParams,
    tapering: Option<&TaperingSpec>,
    update: SiteUpdate,
    rng: &mut R,
) {
    match update {
        SiteUpdate::HeatBath => heat_bath_sweep(state, params, tapering, rng),
        SiteUpdate::Metropolis => metropolis_sweep(state, params, tapering, rng),
    }
}

fn set_site(state: &mut ChainState, site: usize, cur: usize, new: usize, ds: i64) {
    state.grid.set_color(site, new);
    state.counts[cur] -= 1;
    state.counts[new] += 1;
    state.s = (state.s as i64 + ds) as u64;
}

fn heat_bath_sweep<R: Rng + ?Sized>(
    state: &mut ChainState,
    params: &PottsParams,
    tapering: Option<&TaperingSpec>,
    rng: &mut R,
) {
    let k = state.grid.num_colors();
    let mut same = vec![0i64; k];
    let mut logw = vec![0.0f64; k];
    for site in 0..state.grid.num_cells() {
        let cur = state.grid.color(site);
        same.iter_mut().for_each(|v| *v = 0);
        for j in state.grid.lattice().neighbors(site) {
            same[state.grid.color(j)] += 1;
        }
        let mut max = f64::NEG_INFINITY;
        for l in 0..k {
            let mut w = params.alpha_of(l) + params.beta * (same[l] - same[cur]) as f64;
            if l != cur {
                if let Some(tap) = tapering {
                    w -= tapering_delta(tap, &state.counts, cur, l);
                }
            }
            logw[l] = w;
            max = max.max(w);
        }
        let total: f64 = logw.iter_mut().map(|w| {
            *w = (*w - max).exp();
            *w
        }).sum();
        let mut u = rng.random::<f64>() * total;
        let mut new = k - 1;
        for (l, &w) in logw.iter().enumerate() {
            if u < w {
                new = l;
                break;
            }
            u -= w;
        }
        if new != cur {
            set_site(state, site, cur, new, same[new] - same[cur]);
        }
    }
}

fn metropolis_sweep<R: Rng + ?Sized>(
    state: &mut ChainState,
    params: &PottsParams,
    tapering: Option<&TaperingSpec>,
    rng: &mut R,
) {
    let k = state.grid.num_colors();
    for site in 0..state.grid.num_cells() {
        let cur = state.grid.color(site);
        let mut new = rng.random_range(0..k - 1);
        if new >= cur {
            new += 1;
        }
        let ds = delta_s_unchecked(&state.grid, site, new);
        let mut log_r = params.alpha_of(new) - params.alpha_of(cur) + params.beta * ds as f64;
        if let Some(tap) = tapering {
            log_r -= tapering_delta(tap, &state.counts, cur, new);
        }
        if log_r >= 0.0 || rng.random::<f64>() < log_r.exp() {
            set_site(state, site, cur, new, ds);
        }
    }
}

/// Proposes relabeling every color `k` as `r_k` for a uniform random
/// permutation `r`. `S` is unchanged by construction. Returns whether the
/// relabeling was accepted.
pub fn symmetric_swap<R: Rng + ?Sized>(
    state: &mut ChainState,
    params: &PottsParams,
    tapering: Option<&TaperingSpec>,
    rule: SwapRule,
    rng: &mut R,
) -> bool {
    swap_state(state, params, tapering, rule, rng)
}

pub(super) fn swap_state<R: Rng + ?Sized>(
    state: &mut ChainState,
    params: &PottsParams,
    tapering: Option<&TaperingSpec>,
    rule: SwapRule,
    rng: &mut R,
) -> bool {
    let k = state.grid.num_colors();
    let mut perm: Vec<u8> = (0..k as u8).collect();
    perm.shuffle(rng);

    let mut proposed = vec![0u64; k];
    for (c, &r) in perm.iter().enumerate() {
        proposed[r as usize] = state.counts[c];
    }
    let mut log_odds: f64 = params
        .alpha
        .iter()
        .enumerate()
        .map(|(j, a)| a * (proposed[j] as f64 - state.counts[j] as f64))
        .sum();
    if let Some(tap) = tapering {
        log_odds -= tap.penalty(&proposed) - tap.penalty(&state.counts);
    }
    let accept = match rule {
        SwapRule::Greedy => log_odds >= 0.0,
        SwapRule::Metropolis => log_odds >= 0.0 || rng.random::<f64>() < log_odds.exp(),
    };
    if accept {
        for c in state.grid.cells_mut() {
            *c = perm[*c as usize];
        }
        state.counts = proposed;
    }
    accept
}

/// Classical Potts draws: sweep then swap per iteration, started from a
/// uniformly chosen monochrome configuration.
pub fn gibbs_sample(
    lattice: Arc<Lattice>,
    num_colors: usize,
    params: &PottsParams,
    config: &ChainConfig,
) -> Result<SampleBatch> {
    sample(lattice, num_colors, &Model::Classical, params, config, SamplerKind::Gibbs)
}

/// Tapered Potts draws with the same loop structure as [`gibbs_sample`].
pub fn tapered_gibbs_sample(
    lattice: Arc<Lattice>,
    num_colors: usize,
    params: &PottsParams,
    tapering: &TaperingSpec,
    config: &ChainConfig,
) -> Result<SampleBatch> {
    sample(
        lattice,
        num_colors,
        &Model::Tapered(tapering.clone()),
        params,
        config,
        SamplerKind::Gibbs,
    )
}
