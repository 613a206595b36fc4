use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::run::{RegionInfo, RootRecord, RunMetrics};
use super::sweep::SweepRow;
use crate::dynamics::Phase;
use crate::error::{Error, Result};
use crate::policy::PolicyKind;
use crate::storage::PageEvent;

pub const RESULTS_HEADER: [&str; 10] = [
    "protocol",
    "dependency",
    "policy",
    "h",
    "seed",
    "txns",
    "transaction_io",
    "clustering_io",
    "total_io",
    "hit_rate",
];

fn fmt_rate(x: f64) -> String {
    format!("{x:.6}")
}

/// Writes `results.csv` and one `plot_<protocol>_<dependency>.csv` per
/// protocol combination, with `h` and one total-I/O column per policy
/// (averaged over seeds). Returns the written paths.
pub fn emit_results(rows: &[SweepRow], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::Argument("result table is empty".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let results = out_dir.join("results.csv");
    let mut w = csv::Writer::from_path(&results)?;
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        let m = &r.metrics;
        w.write_record([
            r.protocol.name().to_string(),
            r.dependency.name().to_string(),
            r.policy.name().to_string(),
            r.h.to_string(),
            r.seed.to_string(),
            r.txns.to_string(),
            m.transaction_io.to_string(),
            m.clustering_io.to_string(),
            m.total_io.to_string(),
            fmt_rate(m.hit_rate),
        ])?;
    }
    w.flush()?;
    let mut written = vec![results];

    // (protocol, dependency) -> h bits -> policy -> (summed total I/O, runs)
    type ByPolicy = BTreeMap<PolicyKind, (u64, u64)>;
    let mut groups: BTreeMap<(&str, &str), BTreeMap<u64, ByPolicy>> = BTreeMap::new();
    for r in rows {
        let cell = groups
            .entry((r.protocol.name(), r.dependency.name()))
            .or_default()
            .entry(r.h.to_bits())
            .or_default()
            .entry(r.policy)
            .or_default();
        cell.0 += r.metrics.total_io;
        cell.1 += 1;
    }
    for ((protocol, dependency), by_h) in groups {
        let mut policies: Vec<PolicyKind> = by_h.values().flat_map(|m| m.keys().copied()).collect();
        policies.sort();
        policies.dedup();
        let path = out_dir.join(format!("plot_{protocol}_{dependency}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = vec!["h".to_string()];
        header.extend(policies.iter().map(|p| p.name().to_string()));
        w.write_record(&header)?;
        let mut hs: Vec<f64> = by_h.keys().map(|&b| f64::from_bits(b)).collect();
        hs.sort_by(f64::total_cmp);
        for h in hs {
            let cells = &by_h[&h.to_bits()];
            let mut line = vec![h.to_string()];
            for p in &policies {
                line.push(match cells.get(p) {
                    Some(&(sum, n)) => (sum as f64 / n as f64).to_string(),
                    None => String::new(),
                });
            }
            w.write_record(&line)?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

/// Per-interval I/O of one run: `start_txn,transaction_io,clustering_io`.
pub fn write_series(metrics: &RunMetrics, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["start_txn", "transaction_io", "clustering_io"])?;
    for i in &metrics.series {
        w.write_record([
            i.start_txn.to_string(),
            i.transaction_io.to_string(),
            i.clustering_io.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_root_trace(records: &[RootRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["txn_id", "root_id", "phase", "region_of_root"])?;
    for r in records {
        w.write_record([
            r.txn_id.to_string(),
            r.root.to_string(),
            r.phase_label().to_string(),
            r.region.map(|i| i.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line() as usize);
    let raw = rec.get(idx).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing column {name}"),
    })?;
    raw.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad {name} value {raw:?}"),
    })
}

pub fn read_root_trace(path: &Path) -> Result<Vec<RootRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let (phase, fallback) = match rec.get(2).map(str::trim) {
            Some("randomisation") => (Phase::Randomisation, false),
            Some("fallback") => (Phase::Randomisation, true),
            Some("dependency") => (Phase::Dependency, false),
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("bad phase {other:?}"),
                })
            }
        };
        let region = match rec.get(3).map(str::trim) {
            None | Some("") => None,
            Some(_) => Some(field(&rec, 3, "region_of_root")?),
        };
        out.push(RootRecord {
            txn_id: field(&rec, 0, "txn_id")?,
            root: field(&rec, 1, "root_id")?,
            phase,
            fallback,
            region,
        });
    }
    Ok(out)
}

/// Region set of a root trace: `region,size,weight`.
pub fn write_regions(regions: &[RegionInfo], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["region", "size", "weight"])?;
    for (i, r) in regions.iter().enumerate() {
        w.write_record([i.to_string(), r.size.to_string(), r.weight.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_regions(path: &Path) -> Result<Vec<RegionInfo>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let idx: usize = field(&rec, 0, "region")?;
        if idx != out.len() {
            return Err(Error::Parse {
                line: rec.position().map_or(0, |p| p.line() as usize),
                message: format!("expected region {}, found {idx}", out.len()),
            });
        }
        out.push(RegionInfo {
            size: field(&rec, 1, "size")?,
            weight: field(&rec, 2, "weight")?,
        });
    }
    Ok(out)
}

pub fn write_page_trace(events: &[PageEvent], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["txn_id", "page_id", "event"])?;
    for e in events {
        w.write_record([
            e.txn_id.to_string(),
            e.page_id.to_string(),
            e.kind.name().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
