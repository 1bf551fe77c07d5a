//! Sweep tables and their CSV/JSON serialization.
//!
//! CSV schema (fixed column order):
//!
//! | column | meaning |
//! |---|---|
//! | `axis` | sweep value (N, κ or δθ) |
//! | `var_tau` | per-shot delay bound |
//! | `var_omega` | per-shot frequency bound |
//! | `product` | `var_tau × var_omega` |
//! | `cl_het_product` | classical heterodyne product |
//! | `cl_ultimate_product` | classical quantum-limited product |
//! | `f_sq` | squeezing fraction actually used |
//! | `r` | squeezing magnitude per mode |
//! | `delta_theta` | LO phase detuning |
//! | `threshold` | `1/(N_sq+1)`, empty when not computed |
//! | `status` | `ok`, `singular`, `pseudo` or `boundary` |
//!
//! Floats are written with 17 significant digits so they parse back to the
//! same bits.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::SweepConfig;

pub const COLUMNS: [&str; 11] = [
    "axis",
    "var_tau",
    "var_omega",
    "product",
    "cl_het_product",
    "cl_ultimate_product",
    "f_sq",
    "r",
    "delta_theta",
    "threshold",
    "status",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: f64,
    pub var_tau: f64,
    pub var_omega: f64,
    pub product: f64,
    pub cl_het_product: f64,
    pub cl_ultimate_product: f64,
    pub f_sq: f64,
    pub r: f64,
    pub delta_theta: f64,
    pub threshold: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub experiment: String,
    pub axis_name: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Rows whose `delta_theta` equals `dth`, in axis order.
    pub fn series(&self, dth: f64) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.delta_theta == dth).collect()
    }
}

/// Sidecar metadata written next to every table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub experiment: String,
    pub axis_name: String,
    pub axis: Vec<f64>,
    pub seed: u64,
    pub version: String,
    pub columns: Vec<String>,
    pub config: SweepConfig,
    pub notes: Vec<String>,
}

impl Metadata {
    pub fn new(table: &SweepTable, cfg: &SweepConfig, notes: Vec<String>) -> Self {
        let mut axis: Vec<f64> = Vec::new();
        for r in &table.rows {
            if !axis.contains(&r.axis) {
                axis.push(r.axis);
            }
        }
        Self {
            experiment: table.experiment.clone(),
            axis_name: table.axis_name.clone(),
            axis,
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            columns: COLUMNS.iter().map(|c| c.to_string()).collect(),
            config: cfg.clone(),
            notes,
        }
    }
}

/// Round-trippable float formatting.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Path of the metadata file for `csv_path`.
pub fn metadata_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    csv_path.with_file_name(name)
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

/// Writes the CSV at `path` and the metadata sidecar next to it.
pub fn emit(table: &SweepTable, path: &Path, meta: &Metadata) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    w.write_record(COLUMNS).map_err(csv_error(path))?;
    for r in &table.rows {
        w.write_record([
            fmt_f64(r.axis),
            fmt_f64(r.var_tau),
            fmt_f64(r.var_omega),
            fmt_f64(r.product),
            fmt_f64(r.cl_het_product),
            fmt_f64(r.cl_ultimate_product),
            fmt_f64(r.f_sq),
            fmt_f64(r.r),
            fmt_f64(r.delta_theta),
            r.threshold.map(fmt_f64).unwrap_or_default(),
            r.status.clone(),
        ])
        .map_err(csv_error(path))?;
    }
    w.flush().map_err(io_error(path))?;
    let meta_path = metadata_path(path);
    let mut text = serde_json::to_string_pretty(meta)?;
    text.push('\n');
    std::fs::write(&meta_path, text).map_err(io_error(&meta_path))?;
    Ok(())
}

/// Reads a table written by [`emit`].
pub fn read_table(path: &Path) -> Result<SweepTable> {
    let meta_path = metadata_path(path);
    let meta_text = std::fs::read_to_string(&meta_path).map_err(io_error(&meta_path))?;
    let meta: Metadata = serde_json::from_str(&meta_text)?;
    let mut rd = csv::Reader::from_path(path).map_err(csv_error(path))?;
    let header: Vec<String> = rd.headers().map_err(csv_error(path))?.iter().map(String::from).collect();
    if header != COLUMNS {
        return Err(Error::Config(format!("unexpected CSV header in {}: {header:?}", path.display())));
    }
    let parse = |s: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|e| Error::Config(format!("bad number {s:?} in {}: {e}", path.display())))
    };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_error(path))?;
        rows.push(SweepRow {
            axis: parse(&rec[0])?,
            var_tau: parse(&rec[1])?,
            var_omega: parse(&rec[2])?,
            product: parse(&rec[3])?,
            cl_het_product: parse(&rec[4])?,
            cl_ultimate_product: parse(&rec[5])?,
            f_sq: parse(&rec[6])?,
            r: parse(&rec[7])?,
            delta_theta: parse(&rec[8])?,
            threshold: if rec[9].is_empty() { None } else { Some(parse(&rec[9])?) },
            status: rec[10].to_string(),
        });
    }
    Ok(SweepTable { experiment: meta.experiment, axis_name: meta.axis_name, rows })
}
