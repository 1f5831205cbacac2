//! Run artifacts: metric CSVs, summary and manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::config_hash;
use crate::simulator::{mean, Method, MetricsRecord, ScenarioConfig, Timing};
use crate::{Error, Result};

/// Scientific notation with 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub horizon: usize,
    pub iterations: usize,
    pub gps_mean_lmse: f64,
    pub mean_lmse: BTreeMap<String, f64>,
    pub reduction: BTreeMap<String, f64>,
    pub final_amsd: BTreeMap<String, f64>,
    pub timings: BTreeMap<String, Timing>,
    pub connectivity: ConnectivityStats,
    pub mean_vehicles: f64,
    pub skipped: Vec<String>,
}

impl Summary {
    pub fn new(cfg: &ScenarioConfig, record: &MetricsRecord) -> Self {
        let by_name = |f: &dyn Fn(Method) -> Option<f64>| {
            record
                .methods
                .iter()
                .filter_map(|&m| f(m).map(|v| (m.name().to_owned(), v)))
                .collect()
        };
        let lambda2 = &record.connectivity;
        Self {
            seed: cfg.seed,
            horizon: record.gps_lmse.len(),
            iterations: cfg.iterations,
            gps_mean_lmse: record.mean_gps_lmse(),
            mean_lmse: by_name(&|m| record.mean_lmse(m)),
            reduction: by_name(&|m| record.reduction.get(&m).copied()),
            final_amsd: by_name(&|m| record.amsd.get(&m).and_then(|v| v.last().copied())),
            timings: record
                .timings
                .iter()
                .map(|(m, t)| (m.name().to_owned(), *t))
                .collect(),
            connectivity: ConnectivityStats {
                mean: mean(lambda2),
                min: lambda2.iter().copied().fold(f64::INFINITY, f64::min),
                max: lambda2.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            },
            mean_vehicles: mean(&record.vehicle_counts.iter().map(|&n| n as f64).collect::<Vec<_>>()),
            skipped: record.skipped.iter().map(|m| m.name().to_owned()).collect(),
        }
    }
}

/// Create `dir`, refusing to reuse a non-empty one unless `force` is set.
pub fn prepare_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let occupied = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?.next().is_some();
        if occupied && !force {
            return Err(Error::Config(format!(
                "output directory {} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("{other:?}"),
        },
    }
}

fn write_rows(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<usize> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    let mut count = 0;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
        count += 1;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(count)
}

pub fn write_amsd(path: &Path, record: &MetricsRecord) -> Result<usize> {
    let mut header = vec!["k".to_owned()];
    header.extend(record.methods.iter().map(|m| m.name().to_owned()));
    let k_max = record.amsd.values().map(Vec::len).max().unwrap_or(0);
    write_rows(
        path,
        &header,
        (0..k_max).map(|k| {
            let mut row = vec![(k + 1).to_string()];
            row.extend(record.methods.iter().map(|m| fmt_f64(record.amsd[m][k])));
            row
        }),
    )
}

pub fn write_lmse(path: &Path, record: &MetricsRecord) -> Result<usize> {
    let mut header = vec!["t".to_owned(), "gps".to_owned()];
    header.extend(record.methods.iter().map(|m| m.name().to_owned()));
    write_rows(
        path,
        &header,
        record.gps_lmse.iter().enumerate().map(|(t, gps)| {
            let mut row = vec![t.to_string(), fmt_f64(*gps)];
            row.extend(record.methods.iter().map(|m| fmt_f64(record.lmse[m][t])));
            row
        }),
    )
}

pub fn write_cdf(path: &Path, record: &MetricsRecord) -> Result<usize> {
    let mut rows = Vec::new();
    let mut push = |name: &str, steps: Vec<(f64, f64)>| {
        rows.extend(steps.into_iter().map(|(v, q)| vec![fmt_f64(v), fmt_f64(q), name.to_owned()]));
    };
    push("gps", record.gps_cdf());
    for &m in &record.methods {
        push(m.name(), record.cdf(m).unwrap_or_default());
    }
    write_rows(path, &["value".into(), "quantile".into(), "algorithm".into()], rows)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes to JSON");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Write every artifact of one run into `dir`.
pub fn write_run(dir: &Path, cfg: &ScenarioConfig, record: &MetricsRecord, force: bool) -> Result<RunManifest> {
    prepare_dir(dir, force)?;
    let files = vec![
        FileEntry {
            name: "amsd.csv".into(),
            rows: write_amsd(&dir.join("amsd.csv"), record)?,
        },
        FileEntry {
            name: "lmse.csv".into(),
            rows: write_lmse(&dir.join("lmse.csv"), record)?,
        },
        FileEntry {
            name: "cdf.csv".into(),
            rows: write_cdf(&dir.join("cdf.csv"), record)?,
        },
        FileEntry {
            name: "summary.json".into(),
            rows: 1,
        },
    ];
    write_json(&dir.join("summary.json"), &Summary::new(cfg, record))?;
    let manifest = RunManifest {
        config_hash: config_hash(cfg),
        seed: cfg.seed,
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        files,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Directory name for one sweep value, e.g. `n=13`.
pub fn sweep_dir_name(axis: &str, value: &str) -> String {
    let clean: String = value
        .trim()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || ".-_".contains(c) { c } else { '_' })
        .collect();
    format!("{axis}={clean}")
}

/// Write one run directory per value plus `sweep_summary.csv`.
pub fn write_sweep(
    dir: &Path,
    axis: &str,
    values: &[String],
    runs: &[(ScenarioConfig, MetricsRecord)],
    force: bool,
) -> Result<Vec<PathBuf>> {
    prepare_dir(dir, force)?;
    let mut dirs = Vec::with_capacity(runs.len());
    let mut rows = Vec::new();
    for (value, (cfg, record)) in values.iter().zip(runs) {
        let sub = dir.join(sweep_dir_name(axis, value));
        write_run(&sub, cfg, record, force)?;
        for &m in &record.methods {
            rows.push(vec![
                value.trim().to_owned(),
                m.name().to_owned(),
                fmt_f64(record.reduction[&m]),
                fmt_f64(record.mean_lmse(m).unwrap_or(f64::NAN)),
                fmt_f64(record.amsd[&m].last().copied().unwrap_or(f64::NAN)),
            ]);
        }
        dirs.push(sub);
    }
    write_rows(
        &dir.join("sweep_summary.csv"),
        &[axis.into(), "algorithm".into(), "reduction".into(), "mean_lmse".into(), "final_amsd".into()],
        rows,
    )?;
    Ok(dirs)
}

/// A numeric table read back from one of the metric CSVs.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

/// Read an all-numeric CSV such as `amsd.csv` or `lmse.csv`.
pub fn read_table(path: &Path) -> Result<Table> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .iter()
            .map(|v| {
                v.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("not a number: {v:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Read `cdf.csv` into per-algorithm step lists.
pub fn read_cdf(path: &Path) -> Result<BTreeMap<String, Vec<(f64, f64)>>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut out: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |msg: &str| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: msg.to_owned(),
        };
        let value = record.get(0).and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad value"))?;
        let quantile = record.get(1).and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad quantile"))?;
        let name = record.get(2).ok_or_else(|| bad("missing algorithm"))?;
        out.entry(name.to_owned()).or_default().push((value, quantile));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn numbers_round_trip(x in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
            prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn special_values_round_trip() {
        for x in [0.0, -0.0, f64::MIN_POSITIVE, f64::MAX, 0.1 + 0.2] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn sweep_names() {
        assert_eq!(sweep_dir_name("n", "13"), "n=13");
        assert_eq!(sweep_dir_name("range_noise", "4:7"), "range_noise=4_7");
    }

    #[test]
    fn refuses_to_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("x"), "1").unwrap();
        assert!(prepare_dir(dir.path(), false).is_err());
        assert!(prepare_dir(dir.path(), true).is_ok());
        assert!(prepare_dir(&dir.path().join("fresh"), false).is_ok());
    }
}
