use std::sync::Arc;

use rand::Rng;

use super::{sample, ChainConfig, ChainState, Model, SampleBatch, SamplerKind, UnionFind};
use crate::error::Result;
use crate::lattice::{Lattice, PottsParams};

/// One Swendsen-Wang update.
///
/// Every concordant edge is bonded with probability `1 - exp(-beta)`. Each
/// bond cluster `C` then takes color `k` with probability proportional to
/// `exp(alpha_k |C|)`, which is the exact conditional under an external field.
pub fn swendsen_wang_step<R: Rng + ?Sized>(
    state: &mut ChainState,
    params: &PottsParams,
    rng: &mut R,
) {
    let mut uf = UnionFind::new(state.grid.num_cells());
    step_state(state, params, rng, &mut uf);
}

pub(super) fn step_state<R: Rng + ?Sized>(
    state: &mut ChainState,
    params: &PottsParams,
    rng: &mut R,
    uf: &mut UnionFind,
) {
    uf.reset();
    let p_bond = 1.0 - (-params.beta).exp();
    let lattice = state.grid.lattice().clone();
    for &(i, j) in lattice.edges() {
        let (i, j) = (i as usize, j as usize);
        if state.grid.color(i) == state.grid.color(j) && rng.random::<f64>() < p_bond {
            uf.union(i, j);
        }
    }

    let k = state.grid.num_colors();
    let n = state.grid.num_cells();
    let no_field = params.alpha.iter().all(|&a| a == 0.0);
    // Colors are drawn per root in site order, so the update is deterministic
    // given the stream.
    let mut assigned: Vec<u8> = vec![u8::MAX; n];
    let mut logw = vec![0.0; k];
    for site in 0..n {
        let root = uf.find(site);
        if assigned[root] == u8::MAX {
            let color = if no_field {
                rng.random_range(0..k)
            } else {
                let size = uf.set_size(root) as f64;
                for (c, w) in logw.iter_mut().enumerate() {
                    *w = params.alpha_of(c) * size;
                }
                draw_log_weighted(&logw, rng)
            };
            assigned[root] = color as u8;
        }
        state.grid.set_color(site, assigned[root] as usize);
    }
    state.recount();
}

fn draw_log_weighted<R: Rng + ?Sized>(logw: &[f64], rng: &mut R) -> usize {
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logw.iter().map(|w| (w - max).exp()).sum();
    let mut u = rng.random::<f64>() * total;
    for (c, w) in logw.iter().enumerate() {
        u -= (w - max).exp();
        if u < 0.0 {
            return c;
        }
    }
    logw.len() - 1
}

/// Classical Potts draws using Swendsen-Wang updates.
pub fn swendsen_wang_sample(
    lattice: Arc<Lattice>,
    num_colors: usize,
    params: &PottsParams,
    config: &ChainConfig,
) -> Result<SampleBatch> {
    sample(
        lattice,
        num_colors,
        &Model::Classical,
        params,
        config,
        SamplerKind::SwendsenWang,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{suff_stats, Boundary, Grid};
    use crate::sampler::chain_rng;

    #[test]
    fn zero_beta_recolors_independently() {
        // With no bonds every site is its own cluster: color frequencies are
        // uniform and neighbors are uncorrelated.
        let l = Arc::new(Lattice::new(20, 20, Boundary::Periodic).unwrap());
        let mut st = ChainState::new(Grid::uniform(l, 3, 0).unwrap());
        let p = PottsParams::zero(3);
        let mut rng = chain_rng(1, 0);
        let mut counts = [0u64; 3];
        let mut s_total = 0u64;
        let reps = 200;
        for _ in 0..reps {
            swendsen_wang_step(&mut st, &p, &mut rng);
            let stats = suff_stats(st.grid());
            for (total, t) in counts.iter_mut().zip(&stats.t) {
                *total += t;
            }
            s_total += stats.s;
        }
        let n = (400 * reps) as f64;
        for c in counts {
            assert!((c as f64 / n - 1.0 / 3.0).abs() < 0.01);
        }
        // E[S] = |E| / K = 800 / 3.
        let mean_s = s_total as f64 / reps as f64;
        assert!((mean_s - 800.0 / 3.0).abs() < 5.0, "{mean_s}");
    }

    #[test]
    fn single_cluster_color_uniform() {
        // beta huge: every concordant edge bonds, so a monochrome grid stays
        // one cluster and its new color is uniform.
        let l = Arc::new(Lattice::new(4, 4, Boundary::Free).unwrap());
        let p = PottsParams::new(vec![0.0, 0.0, 0.0], 60.0).unwrap();
        let mut rng = chain_rng(2, 0);
        let mut hits = [0u32; 4];
        for _ in 0..4000 {
            let mut st = ChainState::new(Grid::uniform(l.clone(), 4, 0).unwrap());
            swendsen_wang_step(&mut st, &p, &mut rng);
            let c = st.grid().color(0);
            assert!(st.grid().cells().iter().all(|&x| x as usize == c));
            hits[c] += 1;
        }
        for h in hits {
            assert!((h as f64 - 1000.0).abs() < 4.0 * (4000.0f64 * 0.25 * 0.75).sqrt());
        }
    }

    #[test]
    fn field_weights_cluster_size() {
        let l = Arc::new(Lattice::new(3, 3, Boundary::Free).unwrap());
        let p = PottsParams::new(vec![0.2], 60.0).unwrap();
        let mut rng = chain_rng(3, 0);
        let mut ones = 0;
        let reps = 4000;
        for _ in 0..reps {
            let mut st = ChainState::new(Grid::uniform(l.clone(), 2, 1).unwrap());
            swendsen_wang_step(&mut st, &p, &mut rng);
            if st.grid().color(0) == 0 {
                ones += 1;
            }
        }
        // P(color 1) = e^{1.8} / (e^{1.8} + 1).
        let expected = 1.8f64.exp() / (1.8f64.exp() + 1.0);
        let freq = ones as f64 / reps as f64;
        assert!((freq - expected).abs() < 4.0 * (expected * (1.0 - expected) / reps as f64).sqrt());
    }
}
