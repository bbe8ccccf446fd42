use std::path::Path;
use std::time::Instant;

use krpool::classify::{evaluate_descriptors, resolve_dataset_sigma, Metrics};
use krpool::data::load_descriptor;
use krpool::{DatasetManifest, Descriptor, FeatureSequence, RbfParams};
use serde::Serialize;

use super::write_json;
use crate::config::RunConfig;
use crate::dataset::{pool_all, Dataset};
use crate::error::{invalid, CliError, Result};

/// Where the descriptors come from.
#[derive(Debug, Clone)]
pub enum Source<'a> {
    /// Sequence manifest; descriptors are pooled on the fly.
    Sequences(&'a Path),
    /// Descriptor manifest written by `pool`.
    Descriptors(&'a Path),
}

/// Descriptors with labels and splits, ready for evaluation.
pub struct Pooled {
    pub classes: Vec<String>,
    pub labels: Vec<usize>,
    pub splits: Vec<u32>,
    pub descriptors: Vec<Descriptor<f64>>,
    /// Frame bandwidth shared by pooling and the sequence kernel.
    pub sigma: Option<RbfParams<f64>>,
    pub pool_seconds: f64,
}

/// Pools the dataset once; any failing sequence aborts the run.
pub fn pool_dataset(data: &Dataset, cfg: &RunConfig) -> Result<Pooled> {
    let started = Instant::now();
    let sigma = data.sigma(cfg)?;
    let mut descriptors = Vec::with_capacity(data.len());
    for (entry, timed) in data.manifest.entries.iter().zip(pool_all(&data.sequences, cfg, sigma)) {
        match timed.result {
            Ok(p) => descriptors.push(p.descriptor),
            Err(e) => {
                let numeric = e.is_numeric();
                return Err(CliError::Unsuccessful { message: format!("{}: {e}", entry.path), numeric });
            }
        }
    }
    Ok(Pooled {
        classes: data.classes.clone(),
        labels: data.labels.clone(),
        splits: data.splits.clone(),
        descriptors,
        sigma,
        pool_seconds: started.elapsed().as_secs_f64(),
    })
}

pub fn load_descriptors(manifest_path: &Path) -> Result<Pooled> {
    let manifest = DatasetManifest::read(manifest_path)?;
    if manifest.entries.is_empty() {
        return Err(invalid("descriptor manifest has no entries"));
    }
    let classes = manifest.classes();
    let mut out = Pooled { classes, labels: vec![], splits: vec![], descriptors: vec![], sigma: None, pool_seconds: 0.0 };
    for entry in &manifest.entries {
        out.descriptors.push(load_descriptor(manifest.resolve(entry))?);
        out.labels.push(out.classes.iter().position(|c| *c == entry.label).expect("class list built from entries"));
        out.splits.push(entry.split);
    }
    let sources: Vec<&FeatureSequence<f64>> = out
        .descriptors
        .iter()
        .filter_map(|d| match d {
            Descriptor::Subspace(s) => Some(&s.source),
            _ => None,
        })
        .collect();
    if let Some(Descriptor::Subspace(s)) = out.descriptors.first() {
        // Subspace descriptors carry the bandwidth they were pooled with.
        out.sigma = Some(s.sigma);
    } else if !sources.is_empty() {
        out.sigma = Some(resolve_dataset_sigma(&sources)?);
    }
    Ok(out)
}

pub fn acquire(source: &Source, cfg: &RunConfig) -> Result<Pooled> {
    match source {
        Source::Sequences(path) => pool_dataset(&Dataset::load(path, cfg)?, cfg),
        Source::Descriptors(path) => load_descriptors(path),
    }
}

pub fn evaluate(pooled: &Pooled, cfg: &RunConfig) -> Result<Metrics> {
    let sigma = cfg.sigma.map(RbfParams::new).transpose()?.or(pooled.sigma);
    let mut m = evaluate_descriptors(&pooled.descriptors, &pooled.labels, &pooled.splits, &pooled.classes, &cfg.eval(sigma))?;
    m.timings.pool_seconds = pooled.pool_seconds;
    Ok(m)
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaPoint {
    pub eta: f64,
    pub mean_accuracy: f64,
    pub split_accuracy: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub config: RunConfig,
    pub sigma: Option<f64>,
    pub metrics: Metrics,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub eta_sweep: Vec<EtaPoint>,
}

pub fn eta_sweep_csv(points: &[EtaPoint]) -> String {
    let mut out = String::from("eta,mean_accuracy\n");
    for p in points {
        out.push_str(&format!("{},{}\n", p.eta, p.mean_accuracy));
    }
    out
}

/// Runs split-wise classification. With a non-empty `eta_sweep` and a
/// sequence source, every listed margin is pooled and evaluated too.
pub fn run(source: &Source, cfg: &RunConfig, eta_sweep: &[f64], out: Option<&Path>) -> Result<ClassifyReport> {
    cfg.validate()?;
    let pooled = acquire(source, cfg)?;
    let metrics = evaluate(&pooled, cfg)?;
    let mut sweep = Vec::with_capacity(eta_sweep.len());
    if !eta_sweep.is_empty() {
        let Source::Sequences(path) = source else {
            return Err(invalid("an eta sweep needs a sequence manifest, not pooled descriptors"));
        };
        let data = Dataset::load(path, cfg)?;
        for &eta in eta_sweep {
            let swept = RunConfig { eta: Some(eta), ..cfg.clone() };
            swept.validate()?;
            let m = evaluate(&pool_dataset(&data, &swept)?, &swept)?;
            sweep.push(EtaPoint { eta, mean_accuracy: m.mean_accuracy, split_accuracy: m.split_accuracy });
        }
    }
    let report = ClassifyReport { config: cfg.clone(), sigma: pooled.sigma.map(|s| s.sigma()), metrics, eta_sweep: sweep };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        write_json(dir.join("metrics.json"), &report)?;
        std::fs::write(dir.join("metrics.csv"), report.metrics.to_csv())?;
        if !report.eta_sweep.is_empty() {
            std::fs::write(dir.join("eta_sweep.csv"), eta_sweep_csv(&report.eta_sweep))?;
        }
    }
    Ok(report)
}
