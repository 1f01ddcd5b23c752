//! CSV and TOML writers for experiment results.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a file back yields the exact values that were computed.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use faulty_ris_core::faulty::grid_coords;
use faulty_ris_core::channel::ChannelSet;
use faulty_ris_core::linalg::watts_to_dbm;

use crate::config::SimConfig;
use crate::harness::{AggregateRecord, ExperimentOutput, HeatmapOutput, TrialRecord};

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("csv error on {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

pub type Result<T> = std::result::Result<T, OutputError>;

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|source| OutputError::Csv { path: path.to_path_buf(), source })
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let wrap = |source| OutputError::Csv { path: path.to_path_buf(), source };
    let mut w = writer(path)?;
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|source| OutputError::Io { path: path.to_path_buf(), source })
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| OutputError::Io { path: dir.to_path_buf(), source })
}

fn aggregate_cells(a: &AggregateRecord) -> Vec<String> {
    vec![
        a.method.name().to_string(),
        a.mean_slnr_db.to_string(),
        a.std_slnr_db.to_string(),
        a.mean_snr_db.to_string(),
        a.std_snr_db.to_string(),
        a.trials.to_string(),
        a.failures.to_string(),
    ]
}

const AGG_HEADER: [&str; 7] = ["method", "mean_slnr_db", "std_slnr_db", "mean_snr_db", "std_snr_db", "trials", "failures"];

pub fn write_sweep(path: &Path, out: &ExperimentOutput) -> Result<()> {
    let mut header = vec!["fault_count"];
    header.extend(AGG_HEADER);
    write_rows(
        path,
        &header,
        out.aggregates.iter().map(|a| {
            let mut row = vec![a.case.fault_count.to_string()];
            row.extend(aggregate_cells(a));
            row
        }),
    )
}

pub fn write_patterns(path: &Path, out: &ExperimentOutput) -> Result<()> {
    let mut header = vec!["pattern", "fault_count"];
    header.extend(AGG_HEADER);
    write_rows(
        path,
        &header,
        out.aggregates.iter().map(|a| {
            let mut row = vec![a.case.pattern.name().to_string(), a.case.fault_count.to_string()];
            row.extend(aggregate_cells(a));
            row
        }),
    )
}

pub fn write_trials(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let header = [
        "trial",
        "pattern",
        "fault_count",
        "method",
        "slnr",
        "snr",
        "gamma",
        "ipm_iterations",
        "bisection_steps",
        "fallback",
        "optimal_solves",
        "certified_solves",
        "max_gap",
        "checksum",
        "error",
    ];
    write_rows(
        path,
        &header,
        records.iter().map(|r| {
            vec![
                r.trial.to_string(),
                r.case.pattern.name().to_string(),
                r.case.fault_count.to_string(),
                r.method.name().to_string(),
                opt(r.slnr),
                opt(r.snr),
                opt(r.gamma),
                r.ipm_iterations.to_string(),
                r.bisection_steps.to_string(),
                r.fallback.to_string(),
                r.optimal_solves.to_string(),
                r.certified_solves.to_string(),
                r.max_gap.to_string(),
                r.checksum.clone(),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )
}

/// Writes `heatmap_<method>.csv` per method and `mask.csv` into `dir`.
pub fn write_heatmaps(dir: &Path, out: &HeatmapOutput) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for m in &out.maps {
        let path = dir.join(format!("heatmap_{}.csv", m.method.name()));
        let grid = &m.map.grid;
        let rows = (0..grid.ny).flat_map(|iy| (0..grid.nx).map(move |ix| (ix, iy))).map(|(ix, iy)| {
            let c = grid.cell_center(ix, iy);
            let p = m.map.power_w[ix + grid.nx * iy];
            vec![c[0].to_string(), c[1].to_string(), watts_to_dbm(p).to_string()]
        });
        write_rows(&path, &["x_m", "y_m", "power_dbm"], rows)?;
        written.push(path);
    }
    let path = dir.join("mask.csv");
    write_rows(
        &path,
        &["ix", "iy", "faulty"],
        out.mask.iter().enumerate().map(|(n, &f)| {
            let (ix, iy) = grid_coords(n, out.nx);
            vec![ix.to_string(), iy.to_string(), u8::from(f).to_string()]
        }),
    )?;
    written.push(path);
    Ok(written)
}

/// `metadata.csv`: crate version, subcommand and every resolved config key.
pub fn write_metadata(path: &Path, subcommand: &str, cfg: &SimConfig) -> Result<()> {
    let mut rows = vec![
        vec!["version".to_string(), env!("CARGO_PKG_VERSION").to_string()],
        vec!["subcommand".to_string(), subcommand.to_string()],
    ];
    for (key, value) in cfg.entries() {
        rows.push(vec![key.to_string(), value.to_string()]);
    }
    write_rows(path, &["key", "value"], rows)
}

pub fn write_config(path: &Path, cfg: &SimConfig) -> Result<()> {
    fs::write(path, cfg.to_toml()).map_err(|source| OutputError::Io { path: path.to_path_buf(), source })
}

/// Debug dump of a channel set: one row per complex entry of `G` and of every
/// RIS-point channel `h_t`.
pub fn write_channels(path: &Path, ch: &ChannelSet) -> Result<()> {
    let g = (0..ch.g.nrows()).flat_map(|i| (0..ch.g.ncols()).map(move |j| (i, j))).map(|(i, j)| {
        let z = ch.g[(i, j)];
        vec!["g".into(), String::new(), i.to_string(), j.to_string(), z.re.to_string(), z.im.to_string()]
    });
    let h = ch.h.iter().enumerate().flat_map(|(t, h)| {
        h.iter().enumerate().map(move |(i, z)| {
            vec!["h".into(), t.to_string(), i.to_string(), "0".into(), z.re.to_string(), z.im.to_string()]
        })
    });
    write_rows(path, &["kind", "point", "row", "col", "re", "im"], g.chain(h))
}
