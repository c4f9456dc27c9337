//! CSV + JSON sidecar persistence.
//!
//! Each result is written as `<base>.csv` (long format, fixed column order)
//! and `<base>.json` holding the kind tag, format and crate versions, the
//! column list, the config echo and the full result. Reading parses the
//! sidecar and checks the CSV against it cell by cell.
//!
//! | kind | columns |
//! |------|---------|
//! | `tail` | epsilon, hits, trials, estimate, ci_low, ci_high |
//! | `events` | event, epsilon, hits, trials, estimate, ci_low, ci_high |
//! | `example1` | quantity, hits, trials, estimate, ci_low, ci_high, exact |
//! | `compressible` | trial, infimum |
//! | `opnorm` | n, d, trial, value |
//! | `concentration` | epsilon_or_delta, estimate, ci_low, ci_high, trials |

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{CompressibleResult, EventEstimates, Example1Result, TailCurve};
use crate::diophantine::TableRow;
use crate::error::{Error, Result};
use crate::opnorm::ScalingRow;
use crate::stats::Proportion;

pub const FORMAT_VERSION: u32 = 1;

/// A result with a fixed CSV layout.
pub trait Artifact: Serialize + DeserializeOwned {
    const KIND: &'static str;
    fn columns() -> &'static [&'static str];
    fn rows(&self) -> Vec<Vec<String>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar<R> {
    pub kind: String,
    pub format_version: u32,
    pub crate_version: String,
    pub columns: Vec<String>,
    pub config: Option<serde_json::Value>,
    pub result: R,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub json: PathBuf,
}

impl OutputPaths {
    pub fn for_base(base: impl AsRef<Path>) -> Self {
        let base = base.as_ref();
        Self { csv: base.with_extension("csv"), json: base.with_extension("json") }
    }
}

/// Writes `<base>.csv` and `<base>.json`, creating parent directories.
pub fn write_outputs<R: Artifact>(result: &R, config: Option<serde_json::Value>, base: impl AsRef<Path>) -> Result<OutputPaths> {
    let paths = OutputPaths::for_base(base);
    if let Some(dir) = paths.csv.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(&paths.csv)?;
    w.write_record(R::columns())?;
    for row in result.rows() {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(&paths.csv, e))?;
    let sidecar = Sidecar {
        kind: R::KIND.to_string(),
        format_version: FORMAT_VERSION,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        columns: R::columns().iter().map(|c| c.to_string()).collect(),
        config,
        result,
    };
    let file = File::create(&paths.json).map_err(|e| Error::io(&paths.json, e))?;
    serde_json::to_writer_pretty(file, &sidecar)?;
    Ok(paths)
}

/// Reads a result back and checks that its CSV matches the sidecar.
pub fn read_outputs<R: Artifact>(base: impl AsRef<Path>) -> Result<Sidecar<R>> {
    let paths = OutputPaths::for_base(base);
    let file = File::open(&paths.json).map_err(|e| Error::io(&paths.json, e))?;
    let sidecar: Sidecar<R> = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::format(&paths.json, e.to_string()))?;
    if sidecar.kind != R::KIND {
        return Err(Error::format(&paths.json, format!("kind {:?}, expected {:?}", sidecar.kind, R::KIND)));
    }
    if sidecar.format_version != FORMAT_VERSION {
        return Err(Error::format(&paths.json, format!("unsupported format version {}", sidecar.format_version)));
    }
    let mut r = csv::Reader::from_path(&paths.csv)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != R::columns() {
        let bad = R::columns()
            .iter()
            .zip(header.iter().map(String::as_str).chain(std::iter::repeat("<missing>")))
            .find(|(a, b)| *a != b)
            .map(|(a, b)| format!("expected column {a:?}, found {b:?}"))
            .unwrap_or_else(|| format!("unexpected extra columns {:?}", &header[R::columns().len()..]));
        return Err(Error::format(&paths.csv, bad));
    }
    let expected = sidecar.result.rows();
    let mut count = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let want = expected
            .get(i)
            .ok_or_else(|| Error::format(&paths.csv, format!("row {} not present in the sidecar", i + 1)))?;
        for (c, (got, want)) in rec.iter().zip(want).enumerate() {
            if got != want {
                return Err(Error::format(
                    &paths.csv,
                    format!("row {}, column {:?}: {got:?} differs from sidecar value {want:?}", i + 1, R::columns()[c]),
                ));
            }
        }
        count += 1;
    }
    if count != expected.len() {
        return Err(Error::format(&paths.csv, format!("{count} rows, sidecar has {}", expected.len())));
    }
    Ok(sidecar)
}

fn prop_cells(p: &Proportion) -> [String; 5] {
    [p.hits.to_string(), p.trials.to_string(), p.estimate.to_string(), p.ci_low.to_string(), p.ci_high.to_string()]
}

impl Artifact for TailCurve {
    const KIND: &'static str = "tail";
    fn columns() -> &'static [&'static str] {
        &["epsilon", "hits", "trials", "estimate", "ci_low", "ci_high"]
    }
    fn rows(&self) -> Vec<Vec<String>> {
        (0..self.eps_grid.len())
            .map(|k| {
                vec![
                    self.eps_grid[k].to_string(),
                    self.hits[k].to_string(),
                    self.trials.to_string(),
                    self.estimate[k].to_string(),
                    self.ci_low[k].to_string(),
                    self.ci_high[k].to_string(),
                ]
            })
            .collect()
    }
}

impl Artifact for EventEstimates {
    const KIND: &'static str = "events";
    fn columns() -> &'static [&'static str] {
        &["event", "epsilon", "hits", "trials", "estimate", "ci_low", "ci_high"]
    }
    fn rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        let mut push = |name: &str, eps: String, p: &Proportion| {
            let mut row = vec![name.to_string(), eps];
            row.extend(prop_cells(p));
            rows.push(row);
        };
        push("double_root", String::new(), &self.double_root);
        for (name, curve) in [
            ("regular_root", &self.regular_root),
            ("critical_value", &self.critical_value),
            ("simultaneous", &self.simultaneous),
        ] {
            for (e, p) in self.eps_grid.iter().zip(curve) {
                push(name, e.to_string(), p);
            }
        }
        rows
    }
}

impl Artifact for Example1Result {
    const KIND: &'static str = "example1";
    fn columns() -> &'static [&'static str] {
        &["quantity", "hits", "trials", "estimate", "ci_low", "ci_high", "exact"]
    }
    fn rows(&self) -> Vec<Vec<String>> {
        let row = |name: &str, p: &Proportion, exact: String| {
            let mut r = vec![name.to_string()];
            r.extend(prop_cells(p));
            r.push(exact);
            r
        };
        vec![
            row("p_f_zero", &self.p_f_zero, self.exact_p_f_zero.to_string()),
            row("p_form_zero", &self.p_form_zero, self.exact_p_form_zero.to_string()),
            row("p_joint", &self.p_joint, String::new()),
        ]
    }
}

impl Artifact for CompressibleResult {
    const KIND: &'static str = "compressible";
    fn columns() -> &'static [&'static str] {
        &["trial", "infimum"]
    }
    fn rows(&self) -> Vec<Vec<String>> {
        self.infimum.iter().enumerate().map(|(t, v)| vec![t.to_string(), v.to_string()]).collect()
    }
}

/// Opnorm scaling rows, persisted one line per `(n, trial)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpnormTable {
    pub rows: Vec<ScalingRow>,
}

impl Artifact for OpnormTable {
    const KIND: &'static str = "opnorm";
    fn columns() -> &'static [&'static str] {
        &["n", "d", "trial", "value"]
    }
    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .flat_map(|r| {
                r.values
                    .iter()
                    .enumerate()
                    .map(move |(t, v)| vec![r.n.to_string(), r.d.to_string(), t.to_string(), v.to_string()])
            })
            .collect()
    }
}

/// Small-ball or tensorization table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationTable {
    /// `"small_ball"` or `"tensorization"`.
    pub quantity: String,
    pub rows: Vec<TableRow>,
    pub fitted_c1: Option<f64>,
}

impl Artifact for ConcentrationTable {
    const KIND: &'static str = "concentration";
    fn columns() -> &'static [&'static str] {
        &["epsilon_or_delta", "estimate", "ci_low", "ci_high", "trials"]
    }
    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.epsilon_or_delta.to_string(),
                    r.estimate.to_string(),
                    r.ci_low.to_string(),
                    r.ci_high.to_string(),
                    r.trials.to_string(),
                ]
            })
            .collect()
    }
}
