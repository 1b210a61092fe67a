//! CSV / JSON persistence of experiment results.
//!
//! Files written into the output directory:
//! `results.csv`, `power.csv`, `capacity.csv`, `costs.csv`, `cdf_se.csv`,
//! `cdf_capacity.csv` and `manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::cdf::compute_cdf;
use super::{
    sum_capacity, CapacityRecord, ExperimentConfig, PowerPolicy, ResultRecord, ResultSet,
    SkipRecord,
};
use crate::combining::CombinerKind;
use crate::costmodel::CostRecord;
use crate::error::{Error, Result};

pub const RESULTS_HEADER: [&str; 6] = ["setup", "user", "combiner", "policy", "se", "sinr"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub records: usize,
    pub skipped: Vec<SkipRecord>,
    pub notes: Vec<String>,
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_results(path: &Path, records: &[ResultRecord]) -> Result<()> {
    write_rows(
        path,
        &RESULTS_HEADER,
        records.iter().map(|r| {
            vec![
                r.setup.to_string(),
                r.user.to_string(),
                r.combiner.to_string(),
                r.policy.to_string(),
                r.se.to_string(),
                r.sinr.to_string(),
            ]
        }),
    )
}

pub fn write_power(path: &Path, records: &[ResultRecord]) -> Result<()> {
    write_rows(
        path,
        &["setup", "user", "combiner", "policy", "eta"],
        records.iter().map(|r| {
            vec![
                r.setup.to_string(),
                r.user.to_string(),
                r.combiner.to_string(),
                r.policy.to_string(),
                r.eta.to_string(),
            ]
        }),
    )
}

pub fn write_capacity(path: &Path, caps: &[CapacityRecord]) -> Result<()> {
    write_rows(
        path,
        &["setup", "combiner", "policy", "capacity_mbps"],
        caps.iter().map(|c| {
            vec![
                c.setup.to_string(),
                c.combiner.to_string(),
                c.policy.to_string(),
                c.capacity_mbps.to_string(),
            ]
        }),
    )
}

pub fn write_costs(path: &Path, costs: &[CostRecord]) -> Result<()> {
    write_rows(
        path,
        &[
            "combiner",
            "processing",
            "complexity",
            "complexity_exact",
            "fronthaul",
        ],
        costs.iter().map(|c| {
            let processing = if c.combiner.is_centralized() {
                "centralized"
            } else {
                "distributed"
            };
            vec![
                c.combiner.to_string(),
                processing.to_string(),
                c.complexity.to_string(),
                c.complexity_exact.clone(),
                c.fronthaul.to_string(),
            ]
        }),
    )
}

/// Writes one CDF per (combiner, policy) series in `series` order.
pub fn write_cdf(path: &Path, series: &[((CombinerKind, PowerPolicy), Vec<f64>)]) -> Result<()> {
    let mut rows = Vec::new();
    for ((combiner, policy), values) in series {
        if values.is_empty() {
            continue;
        }
        for (v, p) in compute_cdf(values)? {
            rows.push(vec![
                combiner.to_string(),
                policy.to_string(),
                v.to_string(),
                p.to_string(),
            ]);
        }
    }
    write_rows(path, &["combiner", "policy", "value", "probability"], rows)
}

fn series_order(cfg: &ExperimentConfig) -> Vec<(CombinerKind, PowerPolicy)> {
    cfg.combiners
        .iter()
        .flat_map(|&c| cfg.power_policies.iter().map(move |&p| (c, p)))
        .collect()
}

fn write_cdfs(
    dir: &Path,
    cfg: &ExperimentConfig,
    records: &[ResultRecord],
    caps: &[CapacityRecord],
) -> Result<()> {
    let mut se: BTreeMap<(CombinerKind, PowerPolicy), Vec<f64>> = BTreeMap::new();
    for r in records {
        se.entry((r.combiner, r.policy)).or_default().push(r.se);
    }
    let mut cap: BTreeMap<(CombinerKind, PowerPolicy), Vec<f64>> = BTreeMap::new();
    for c in caps {
        cap.entry((c.combiner, c.policy))
            .or_default()
            .push(c.capacity_mbps);
    }
    let order = series_order(cfg);
    let collect = |m: &mut BTreeMap<_, Vec<f64>>| -> Vec<_> {
        order
            .iter()
            .map(|key| (*key, m.remove(key).unwrap_or_default()))
            .collect()
    };
    write_cdf(&dir.join("cdf_se.csv"), &collect(&mut se))?;
    write_cdf(&dir.join("cdf_capacity.csv"), &collect(&mut cap))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Persists a complete result set into `dir`.
pub fn write_all(dir: &Path, results: &ResultSet) -> Result<()> {
    ensure_dir(dir)?;
    let caps = results.capacity()?;
    write_results(&dir.join("results.csv"), &results.records)?;
    write_power(&dir.join("power.csv"), &results.records)?;
    write_capacity(&dir.join("capacity.csv"), &caps)?;
    write_costs(&dir.join("costs.csv"), &results.costs)?;
    write_cdfs(dir, &results.config, &results.records, &caps)?;
    let manifest = Manifest {
        config: results.config.clone(),
        master_seed: results.config.master_seed,
        records: results.records.len(),
        skipped: results.skipped.clone(),
        notes: vec!["complexity counts exclude channel estimation".into()],
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path,
        message: e.to_string(),
    })
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != RESULTS_HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("unexpected header {:?}", headers),
        });
    }
    let bad = |line: usize, what: &str| Error::Parse {
        path: PathBuf::from(path),
        message: format!("row {line}: bad {what}"),
    };
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let field = |j: usize| row.get(j).unwrap_or("");
        out.push(ResultRecord {
            setup: field(0).parse().map_err(|_| bad(i + 2, "setup"))?,
            user: field(1).parse().map_err(|_| bad(i + 2, "user"))?,
            combiner: field(2).parse().map_err(|_| bad(i + 2, "combiner"))?,
            policy: field(3).parse().map_err(|_| bad(i + 2, "policy"))?,
            se: field(4).parse().map_err(|_| bad(i + 2, "se"))?,
            sinr: field(5).parse().map_err(|_| bad(i + 2, "sinr"))?,
            eta: f64::NAN,
        });
    }
    Ok(out)
}

/// Recomputes `capacity.csv` and the CDF files from an existing `results.csv`.
pub fn postprocess(dir: &Path) -> Result<()> {
    let manifest = read_manifest(dir)?;
    let records = read_results(&dir.join("results.csv"))?;
    let net = &manifest.config.network;
    let caps = sum_capacity(&records, net.bandwidth_hz, net.users)?;
    write_capacity(&dir.join("capacity.csv"), &caps)?;
    write_cdfs(dir, &manifest.config, &records, &caps)
}
