//! Grid CSV and sample-batch CSV formats.
//!
//! A grid file is an optional header line
//!
//! ```text
//! # potts-grid width=30 height=30 K=4 boundary=periodic
//! ```
//!
//! followed by `height` rows of `width` comma-separated 1-based labels. Without
//! the header the dimensions come from the rows, `K` is the largest label
//! (at least 2) and the boundary is periodic.

use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{PottsError, Result};
use crate::lattice::{Boundary, Grid, Lattice};
use crate::sampler::SampleBatch;

const HEADER_TAG: &str = "# potts-grid";

#[derive(Default)]
struct Header {
    width: Option<usize>,
    height: Option<usize>,
    colors: Option<usize>,
    boundary: Option<Boundary>,
}

fn parse_header(line: &str, lineno: usize) -> Result<Header> {
    let mut h = Header::default();
    let err = |msg: String| PottsError::Parse { line: lineno, msg };
    for field in line[HEADER_TAG.len()..].split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| err(format!("malformed header field `{field}`")))?;
        let int = || {
            value
                .parse::<usize>()
                .map_err(|_| err(format!("bad integer `{value}` for {key}")))
        };
        match key {
            "width" => h.width = Some(int()?),
            "height" => h.height = Some(int()?),
            "K" => h.colors = Some(int()?),
            "boundary" => h.boundary = Some(value.parse().map_err(|_| err(format!("bad boundary `{value}`")))?),
            other => return Err(err(format!("unknown header key `{other}`"))),
        }
    }
    Ok(h)
}

pub fn read_grid<R: BufRead>(reader: R) -> Result<Grid> {
    let mut header = Header::default();
    let mut rows: Vec<Vec<u32>> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with(HEADER_TAG) {
            header = parse_header(trimmed, lineno)?;
            continue;
        }
        if trimmed.starts_with('#') {
            continue;
        }
        let row = trimmed
            .split(',')
            .map(|v| {
                v.trim().parse::<u32>().map_err(|_| PottsError::Parse {
                    line: lineno,
                    msg: format!("bad label `{}`", v.trim()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let height = rows.len();
    if height == 0 {
        return Err(PottsError::InvalidGrid("no rows".into()));
    }
    let width = rows[0].len();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
        return Err(PottsError::Parse {
            line: i + 1,
            msg: format!("row has {} labels, expected {width}", r.len()),
        });
    }
    if header.width.is_some_and(|w| w != width) || header.height.is_some_and(|h| h != height) {
        return Err(PottsError::InvalidGrid(format!(
            "header says {}x{}, data is {width}x{height}",
            header.width.unwrap_or(width),
            header.height.unwrap_or(height)
        )));
    }
    let labels: Vec<u32> = rows.into_iter().flatten().collect();
    let max_label = labels.iter().copied().max().unwrap_or(1) as usize;
    let colors = header.colors.unwrap_or(max_label.max(2));
    let boundary = header.boundary.unwrap_or_default();
    let lattice = Arc::new(Lattice::new(width, height, boundary)?);
    Grid::from_labels(lattice, colors, &labels)
}

pub fn write_grid<W: Write>(mut w: W, grid: &Grid) -> Result<()> {
    let l = grid.lattice();
    writeln!(
        w,
        "{HEADER_TAG} width={} height={} K={} boundary={}",
        l.width(),
        l.height(),
        grid.num_colors(),
        l.boundary()
    )?;
    for row in grid.cells().chunks(l.width()) {
        let line: Vec<String> = row.iter().map(|&c| (c as u32 + 1).to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_grid_file(path: impl AsRef<Path>) -> Result<Grid> {
    let f = std::fs::File::open(path)?;
    read_grid(std::io::BufReader::new(f))
}

pub fn write_grid_file(path: impl AsRef<Path>, grid: &Grid) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_grid(&mut w, grid)?;
    w.flush()?;
    Ok(())
}

/// Writes `draw,t_1..t_K,s`, one row per retained draw (draws numbered from 1).
pub fn write_batch_csv<W: Write>(mut w: W, batch: &SampleBatch) -> Result<()> {
    let k = batch.stats.first().map_or(0, |s| s.t.len());
    let mut header = vec!["draw".to_string()];
    header.extend((1..=k).map(|c| format!("t_{c}")));
    header.push("s".into());
    writeln!(w, "{}", header.join(","))?;
    for (i, st) in batch.stats.iter().enumerate() {
        let mut row = vec![(i + 1).to_string()];
        row.extend(st.t.iter().map(u64::to_string));
        row.push(st.s.to_string());
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
