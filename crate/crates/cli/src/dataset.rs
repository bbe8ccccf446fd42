use std::path::Path;
use std::time::Instant;

use krpool::classify::resolve_dataset_sigma;
use krpool::data::preprocess;
use krpool::pooling::Pooled;
use krpool::{pool, DatasetManifest, Descriptor, FeatureSequence, RbfParams};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{invalid, Result};

/// A manifest loaded into memory and preprocessed.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    /// Sorted class names; labels index into this.
    pub classes: Vec<String>,
    pub labels: Vec<usize>,
    pub splits: Vec<u32>,
    pub sequences: Vec<FeatureSequence<f64>>,
}

impl Dataset {
    pub fn load(manifest_path: impl AsRef<Path>, cfg: &RunConfig) -> Result<Self> {
        let manifest = DatasetManifest::read(manifest_path)?;
        if manifest.entries.is_empty() {
            return Err(invalid("manifest has no entries"));
        }
        let classes = manifest.classes();
        let mut labels = Vec::with_capacity(manifest.entries.len());
        let mut splits = Vec::with_capacity(manifest.entries.len());
        let mut sequences = Vec::with_capacity(manifest.entries.len());
        for entry in &manifest.entries {
            let raw = manifest.load(entry)?;
            let x = if cfg.ma_window > 1 || cfg.ssr { preprocess(&raw, cfg.ma_window, cfg.ssr)? } else { raw };
            labels.push(classes.iter().position(|c| *c == entry.label).expect("class list built from entries"));
            splits.push(entry.split);
            sequences.push(x);
        }
        Ok(Self { manifest, classes, labels, splits, sequences })
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// The configured σ, or the dataset median heuristic when the scheme
    /// needs a frame kernel.
    pub fn sigma(&self, cfg: &RunConfig) -> Result<Option<RbfParams<f64>>> {
        match cfg.sigma {
            Some(s) => Ok(Some(RbfParams::new(s)?)),
            None if cfg.scheme.uses_frame_kernel() => {
                let refs: Vec<&FeatureSequence<f64>> = self.sequences.iter().collect();
                Ok(Some(resolve_dataset_sigma(&refs)?))
            }
            None => Ok(None),
        }
    }
}

/// One pooling outcome with its wall-clock time.
pub struct Timed {
    pub result: krpool::Result<Pooled<Descriptor<f64>>>,
    pub seconds: f64,
}

/// Pools every sequence on the current rayon pool, preserving input order.
pub fn pool_all(sequences: &[FeatureSequence<f64>], cfg: &RunConfig, sigma: Option<RbfParams<f64>>) -> Vec<Timed> {
    let pooler = cfg.pooler(sigma);
    sequences
        .par_iter()
        .map(|x| {
            let t = Instant::now();
            let result = pool(x, &pooler);
            Timed { result, seconds: t.elapsed().as_secs_f64() }
        })
        .collect()
}

/// Runs `f` on a pool of `jobs` workers (`0` lets rayon decide).
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}
