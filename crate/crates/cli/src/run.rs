//! Command execution. Every command writes `manifest.json` (a replayable
//! [`RunConfig`]) and `timings.json` next to its outputs; all other files
//! depend only on the manifest.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use pottslab::exact::exact_distribution;
use pottslab::inference::{fit_pseudolikelihood, mcmcmle_full, FitReport};
use pottslab::io::{read_grid_file, write_batch_csv, write_grid_file};
use pottslab::sampler::{derive_seed, sample, Model, SampleBatch};
use pottslab::scenario::generate_scenario;
use pottslab::stats::{mcse, mean, StatsSummary};
use pottslab::tapering::{bimodality_coefficient, choose_tau, diagnose};
use pottslab::{suff_stats, Grid, Lattice, PottsParams, SuffStats, TaperingSpec};
use serde::Serialize;
use serde_json::json;

use crate::config::*;

/// How a successful run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A fit was written but its stepping did not converge.
    NotConverged,
}

pub const HISTOGRAM_BINS: usize = 20;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn out_dir(out: Option<&Path>, command: &str) -> Result<PathBuf> {
    let Some(dir) = out else {
        bail!("{command} needs --out <dir>");
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.to_path_buf())
}

fn params(colors: usize, alpha: &[f64], beta: f64) -> Result<PottsParams> {
    let alpha = if alpha.is_empty() {
        vec![0.0; colors.saturating_sub(1)]
    } else {
        alpha.to_vec()
    };
    let p = PottsParams::new(alpha, beta)?;
    p.check_colors(colors)?;
    Ok(p)
}

fn model_for(spec: &ModelSpec, colors: usize, default_center: Vec<f64>) -> Result<Model> {
    Ok(match spec {
        ModelSpec::Classical => Model::Classical,
        ModelSpec::Tapered { tau, center } => {
            let center = center.clone().unwrap_or(default_center);
            Model::Tapered(TaperingSpec::new(vec![*tau; colors - 1], center)?)
        }
    })
}

/// Runs `config`, writing outputs under `out`.
pub fn execute(config: RunConfig, out: Option<&Path>) -> Result<Status> {
    let config = config.normalized();
    let started = Instant::now();
    let status = match &config.command {
        Command::Stats(spec) => {
            let grid = read_grid_file(&spec.grid)?;
            let st = suff_stats(&grid);
            println!("{}", serde_json::to_string(&st)?);
            if let Some(dir) = out {
                fs::create_dir_all(dir)?;
                write_json(&dir.join("stats.json"), &st)?;
                write_json(&dir.join("manifest.json"), &config)?;
            }
            return Ok(Status::Ok);
        }
        Command::Sample(spec) => run_sample(spec, &out_dir(out, "sample")?)?,
        Command::Fit(spec) => run_fit(spec, &out_dir(out, "fit")?)?,
        Command::Diagnose(spec) => run_diagnose(spec, &out_dir(out, "diagnose")?)?,
        Command::ChooseTau(spec) => run_choose_tau(spec, &out_dir(out, "choose-tau")?)?,
        Command::Scenario(spec) => run_scenario(spec, &out_dir(out, "scenario")?)?,
        Command::Exact(spec) => run_exact(spec, &out_dir(out, "exact")?)?,
    };
    let dir = out.expect("checked by out_dir");
    write_json(&dir.join("manifest.json"), &config)?;
    write_json(
        &dir.join("timings.json"),
        &json!({ "command": config.command.name(), "wall_time_secs": started.elapsed().as_secs_f64() }),
    )?;
    Ok(status)
}

fn batch_summary(batch: &SampleBatch, beta: f64) -> Result<serde_json::Value> {
    let k = batch.params.num_colors();
    let summary = StatsSummary::from_vectors(&batch.g_vectors())?;
    let counts: Vec<Vec<f64>> = (0..k).map(|c| batch.counts_of(c)).collect();
    let s = batch.concordance();
    Ok(json!({
        "beta": beta,
        "draws": batch.len(),
        "mean_t": counts.iter().map(|c| mean(c)).collect::<Vec<_>>(),
        "mcse_t": counts.iter().map(|c| mcse(c)).collect::<Vec<_>>(),
        "mean_s": mean(&s),
        "mcse_s": mcse(&s),
        "bimodality_t": counts.iter().map(|c| bimodality_coefficient(c).ok()).collect::<Vec<_>>(),
        "summary": summary,
    }))
}

fn run_sample(spec: &SampleSpec, dir: &Path) -> Result<Status> {
    let lattice = Arc::new(Lattice::new(spec.width, spec.height, spec.boundary)?);
    let k = spec.colors;
    let m = lattice.num_cells();
    let model = model_for(&spec.model, k, vec![m as f64 / k as f64; k.saturating_sub(1)])?;
    let betas = spec.betas.clone().unwrap_or_else(|| vec![spec.beta]);
    let single = betas.len() == 1;

    let mut boxplot = BufWriter::new(fs::File::create(dir.join("boxplot.csv"))?);
    writeln!(boxplot, "beta,draw,color,count")?;
    let mut hist = BufWriter::new(fs::File::create(dir.join("histogram.csv"))?);
    writeln!(hist, "beta,color,bin_lo,bin_hi,count")?;
    let mut summaries = Vec::new();

    for (i, &beta) in betas.iter().enumerate() {
        let p = params(k, &spec.alpha, beta)?;
        let mut chain = spec.chain.clone();
        if !single {
            chain.seed = derive_seed(spec.chain.seed, 0x5eed, i as u64);
        }
        let batch = sample(lattice.clone(), k, &model, &p, &chain, spec.sampler)?;
        let name = if single { "stats.csv".to_string() } else { format!("stats_{i}.csv") };
        write_batch_csv(BufWriter::new(fs::File::create(dir.join(name))?), &batch)?;

        for (d, st) in batch.stats.iter().enumerate() {
            for (c, t) in st.t.iter().enumerate() {
                writeln!(boxplot, "{beta},{},{},{t}", d + 1, c + 1)?;
            }
        }
        let width = m as f64 / HISTOGRAM_BINS as f64;
        for c in 0..k {
            let mut bins = [0usize; HISTOGRAM_BINS];
            for st in &batch.stats {
                let b = ((st.t[c] as f64 / width) as usize).min(HISTOGRAM_BINS - 1);
                bins[b] += 1;
            }
            for (b, n) in bins.iter().enumerate() {
                writeln!(hist, "{beta},{},{},{},{n}", c + 1, b as f64 * width, (b + 1) as f64 * width)?;
            }
        }
        summaries.push(batch_summary(&batch, beta)?);

        if let Some(grids) = &batch.grids {
            let gdir = dir.join("grids");
            fs::create_dir_all(&gdir)?;
            for (d, g) in grids.iter().enumerate() {
                write_grid_file(gdir.join(format!("beta{i}_draw{:05}.csv", d + 1)), g)?;
            }
        }
    }
    boxplot.flush()?;
    hist.flush()?;
    write_json(&dir.join("summary.json"), &summaries)?;
    Ok(Status::Ok)
}

fn pl_fit(grid: &Grid, dir: &Path) -> Result<FitReport> {
    let mut pl = fit_pseudolikelihood(grid)?;
    pl.wall_time_secs = None;
    write_json(&dir.join("pl.json"), &pl)?;
    Ok(pl)
}

fn observed_center(st: &SuffStats) -> Vec<f64> {
    st.t[..st.t.len() - 1].iter().map(|&v| v as f64).collect()
}

fn run_fit(spec: &FitSpec, dir: &Path) -> Result<Status> {
    let grid = read_grid_file(&spec.grid)?;
    let pl = pl_fit(&grid, dir)?;
    let st = suff_stats(&grid);
    let model = model_for(&spec.model, grid.num_colors(), observed_center(&st))?;
    let outcome = mcmcmle_full(&grid, &model, &pl.estimates.theta(), &spec.stepping)?;
    let mut report = outcome.report;
    report.wall_time_secs = None;
    if matches!(model, Model::Classical) {
        let trace = report.trace.as_ref().expect("mcmcmle records a trace");
        let batch = report.converged.then_some(&outcome.batch);
        report.diagnosis = Some(diagnose(&grid, &pl, trace, batch, spec.proportion_ratio_threshold));
    }
    write_json(&dir.join("report.json"), &report)?;
    Ok(if report.converged { Status::Ok } else { Status::NotConverged })
}

fn run_diagnose(spec: &DiagnoseSpec, dir: &Path) -> Result<Status> {
    let grid = read_grid_file(&spec.grid)?;
    let pl = pl_fit(&grid, dir)?;
    let outcome = mcmcmle_full(&grid, &Model::Classical, &pl.estimates.theta(), &spec.stepping)?;
    let mut report = outcome.report;
    report.wall_time_secs = None;
    let trace = report.trace.as_ref().expect("mcmcmle records a trace");
    let batch = report.converged.then_some(&outcome.batch);
    let diagnosis = diagnose(&grid, &pl, trace, batch, spec.proportion_ratio_threshold);
    write_json(&dir.join("diagnosis.json"), &diagnosis)?;
    report.diagnosis = Some(diagnosis);
    write_json(&dir.join("report.json"), &report)?;
    Ok(Status::Ok)
}

fn run_choose_tau(spec: &ChooseTauSpec, dir: &Path) -> Result<Status> {
    let grid = read_grid_file(&spec.grid)?;
    let pl = pl_fit(&grid, dir)?;
    let choice = choose_tau(&grid, &pl.estimates.theta(), &spec.search, &spec.stepping)?;
    let mut report = choice.report;
    report.wall_time_secs = None;
    write_json(&dir.join("report.json"), &report)?;
    if let Some(trace) = &report.tau_search {
        write_json(&dir.join("tau_search.json"), trace)?;
    }
    Ok(Status::Ok)
}

fn run_scenario(spec: &ScenarioSpec, dir: &Path) -> Result<Status> {
    let grid = generate_scenario(&spec.config)?;
    write_grid_file(dir.join("grid.csv"), &grid)?;
    write_json(&dir.join("stats.json"), &suff_stats(&grid))?;
    Ok(Status::Ok)
}

/// Per-state listing is only written for lattices this small.
pub const MAX_LISTED_STATES: u64 = 1 << 16;

fn run_exact(spec: &ExactSpec, dir: &Path) -> Result<Status> {
    let lattice = Arc::new(Lattice::new(spec.width, spec.height, spec.boundary)?);
    let k = spec.colors;
    let m = lattice.num_cells();
    let p = params(k, &spec.alpha, spec.beta)?;
    let model = model_for(&spec.model, k, vec![m as f64 / k as f64; k.saturating_sub(1)])?;
    let dist = exact_distribution(lattice.clone(), k, &p, model.tapering(), spec.cap)?;
    let table: Vec<_> = dist
        .table
        .iter()
        .map(|(st, prob)| json!({ "t": st.t, "s": st.s, "probability": prob }))
        .collect();
    write_json(
        &dir.join("exact.json"),
        &json!({
            "num_states": dist.num_states,
            "log_normalizer": dist.log_normalizer,
            "mean": dist.mean,
            "covariance": dist.covariance,
            "table": table,
        }),
    )?;

    if dist.num_states <= MAX_LISTED_STATES {
        let mut w = BufWriter::new(fs::File::create(dir.join("states.csv"))?);
        let header: Vec<String> = (1..=m).map(|i| format!("c_{i}")).collect();
        writeln!(w, "state,{},probability", header.join(","))?;
        let mut cells = vec![0u8; m];
        for state in 0..dist.num_states {
            let grid = Grid::new(lattice.clone(), k, cells.clone())?;
            let labels: Vec<String> = cells.iter().map(|c| (c + 1).to_string()).collect();
            writeln!(w, "{},{},{}", state + 1, labels.join(","), dist.state_probability(&grid))?;
            for c in cells.iter_mut() {
                if (*c as usize) + 1 < k {
                    *c += 1;
                    break;
                }
                *c = 0;
            }
        }
        w.flush()?;
    }
    Ok(Status::Ok)
}
