//! Many runs combined into one long-format CSV plus an index.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

use crate::config::RunConfig;
use crate::runner::{exit_code, run};

/// A bundle file: a list of `[[run]]` tables.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleFile {
    pub run: Vec<RunConfig>,
}

pub fn load_bundle(path: &Path) -> Result<Vec<RunConfig>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: BundleFile = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(file.run)
}

/// One child run as recorded in the index.
#[derive(Debug, Clone)]
pub struct BundleEntry {
    pub run_id: String,
    pub config_hash: String,
    pub experiment: String,
    pub verdict: String,
    pub exit: i32,
    pub rows: usize,
    pub error: String,
}

/// Runs every config in config-hash order (ties keep input order) and writes rows as
/// `run_id,experiment,row,column,value`. Returns the index and the bundle exit code,
/// the largest child exit code.
pub fn bundle<W: Write, I: Write>(configs: &[RunConfig], threads: Option<usize>, rows_out: W, index_out: I) -> Result<(Vec<BundleEntry>, i32)> {
    anyhow::ensure!(!configs.is_empty(), "a bundle needs at least one run");
    let mut order: Vec<(String, usize)> = configs.iter().enumerate().map(|(i, c)| (c.hash(), i)).collect();
    order.sort();
    let mut rows = csv::Writer::from_writer(rows_out);
    rows.write_record(["run_id", "experiment", "row", "column", "value"])?;
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut entries = Vec::new();
    for (hash, i) in order {
        let mut cfg = configs[i].clone();
        cfg.out = None;
        cfg.svg = None;
        if threads.is_some() {
            cfg.threads = threads;
        }
        let k = seen.entry(hash.clone()).or_insert(0);
        let run_id = format!("{}-{}", &hash[..12], k);
        *k += 1;
        let entry = match run(&cfg) {
            Ok(out) => {
                let rep = &out.report;
                for (r, row) in rep.rows.iter().enumerate() {
                    for (col, cell) in rep.columns.iter().zip(row) {
                        rows.write_record([run_id.as_str(), rep.name.as_str(), &r.to_string(), col, &cell.to_string()])?;
                    }
                }
                BundleEntry {
                    run_id,
                    config_hash: hash,
                    experiment: rep.name.clone(),
                    verdict: rep.verdict.name().into(),
                    exit: exit_code(rep.verdict),
                    rows: rep.rows.len(),
                    error: String::new(),
                }
            }
            Err(e) => BundleEntry {
                run_id,
                config_hash: hash,
                experiment: cfg.experiment.clone(),
                verdict: "error".into(),
                exit: 2,
                rows: 0,
                error: format!("{e:#}"),
            },
        };
        entries.push(entry);
    }
    rows.flush()?;
    let mut idx = csv::Writer::from_writer(index_out);
    idx.write_record(["run_id", "config_hash", "experiment", "verdict", "exit", "rows", "error"])?;
    for e in &entries {
        idx.write_record([&e.run_id, &e.config_hash, &e.experiment, &e.verdict, &e.exit.to_string(), &e.rows.to_string(), &e.error])?;
    }
    idx.flush()?;
    let code = entries.iter().map(|e| e.exit).max().unwrap_or(0);
    Ok((entries, code))
}
