use std::path::{Path, PathBuf};
use std::time::Instant;

use krpool::data::{save_descriptor, DESCRIPTOR_EXTENSION};
use krpool::pooling::order_violation_rate;
use krpool::{DatasetManifest, ManifestEntry, Scheme};
use serde::Serialize;

use super::write_json;
use crate::config::RunConfig;
use crate::dataset::{pool_all, Dataset};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct PoolEntry {
    pub path: String,
    pub label: String,
    pub split: u32,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<f64>,
    pub iterations: usize,
    pub seconds: f64,
    #[serde(skip)]
    numeric_failure: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoolReport {
    pub config: RunConfig,
    pub sigma: Option<f64>,
    pub entries: Vec<PoolEntry>,
    pub failed: usize,
    pub seconds: f64,
    /// Manifest of the written descriptors, for `classify --descriptors`.
    pub descriptor_manifest: String,
}

impl PoolReport {
    /// `Err` when any sequence failed; numeric when every failure was.
    pub fn outcome(&self) -> Result<()> {
        if self.failed == 0 {
            return Ok(());
        }
        let numeric = self.entries.iter().filter(|e| !e.ok).all(|e| e.numeric_failure);
        Err(CliError::Unsuccessful { message: format!("{} of {} sequences failed to pool", self.failed, self.entries.len()), numeric })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("path,label,split,ok,objective,violation_rate,feasibility,iterations,seconds\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                e.path,
                e.label,
                e.split,
                e.ok,
                opt(e.objective),
                opt(e.violation_rate),
                opt(e.feasibility),
                e.iterations,
                e.seconds
            ));
        }
        out
    }
}

/// Pools every manifest entry, writing one descriptor per sequence plus
/// `pool_report.json`, `pool_summary.csv` and `descriptors.jsonl` into `out`.
/// Failures are recorded and the run continues.
pub fn run(manifest: &Path, out: &Path, cfg: &RunConfig) -> Result<PoolReport> {
    cfg.validate()?;
    let started = Instant::now();
    let data = Dataset::load(manifest, cfg)?;
    let sigma = data.sigma(cfg)?;
    let pooled = pool_all(&data.sequences, cfg, sigma);
    std::fs::create_dir_all(out)?;

    let mut entries = Vec::with_capacity(data.len());
    let mut written = Vec::new();
    for (i, (entry, timed)) in data.manifest.entries.iter().zip(pooled).enumerate() {
        let mut report = PoolEntry {
            path: entry.path.clone(),
            label: entry.label.clone(),
            split: entry.split,
            ok: false,
            error: None,
            descriptor: None,
            objective: None,
            initial_objective: None,
            violation_rate: None,
            feasibility: None,
            iterations: 0,
            seconds: timed.seconds,
            numeric_failure: false,
        };
        match timed.result {
            Ok(p) => {
                let file = descriptor_name(&entry.path, i);
                save_descriptor(&p.descriptor, out.join(&file))?;
                report.violation_rate = match cfg.scheme {
                    Scheme::Avg => None,
                    _ => Some(order_violation_rate(&p.descriptor, &data.sequences[i])?),
                };
                report.ok = true;
                report.objective = p.stats.objective;
                report.initial_objective = p.stats.initial_objective;
                report.feasibility = p.stats.feasibility;
                report.iterations = p.stats.iterations;
                report.descriptor = Some(file.clone());
                written.push(ManifestEntry { path: file, label: entry.label.clone(), split: entry.split });
            }
            Err(e) => {
                report.numeric_failure = e.is_numeric();
                report.error = Some(e.to_string());
            }
        }
        entries.push(report);
    }
    let descriptor_manifest = out.join("descriptors.jsonl");
    if !written.is_empty() {
        DatasetManifest::new(written, out)?.write(&descriptor_manifest)?;
    }
    let failed = entries.iter().filter(|e| !e.ok).count();
    let report = PoolReport {
        config: cfg.clone(),
        sigma: sigma.map(|s| s.sigma()),
        entries,
        failed,
        seconds: started.elapsed().as_secs_f64(),
        descriptor_manifest: descriptor_manifest.display().to_string(),
    };
    write_json(out.join("pool_report.json"), &report)?;
    std::fs::write(out.join("pool_summary.csv"), report.to_csv())?;
    Ok(report)
}

fn descriptor_name(source: &str, index: usize) -> String {
    let stem = Path::new(source).file_stem().and_then(|s| s.to_str()).unwrap_or("sequence");
    format!("{index:05}_{stem}.{DESCRIPTOR_EXTENSION}")
}

/// Paths of the descriptors listed in a descriptor manifest.
pub fn descriptor_paths(manifest: &DatasetManifest) -> Vec<PathBuf> {
    manifest.entries.iter().map(|e| manifest.resolve(e)).collect()
}
