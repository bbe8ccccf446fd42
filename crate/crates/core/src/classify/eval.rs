use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::seqkernel::{SequenceGram, SequenceKernel, SequenceKernelParams};
use super::svm::{svm_predict, svm_train, SvmOptions};
use crate::data::FeatureSequence;
use crate::error::{Error, Result};
use crate::kernel::{median_bandwidth, RbfParams};
use crate::pooling::{pool, Descriptor, PoolerConfig};
use crate::scalar::Scalar;

/// A labelled sequence assigned to an evaluation split.
#[derive(Debug, Clone)]
pub struct Sample<T: Scalar> {
    pub sequence: FeatureSequence<T>,
    /// Index into the class-name list.
    pub label: usize,
    pub split: u32,
}

#[derive(Debug, Clone)]
pub struct EvalConfig<T: Scalar> {
    pub nu: Option<T>,
    /// Frame bandwidth for the sequence kernel; `None` uses the pooling
    /// bandwidth, or the dataset median when that is also unset.
    pub sigma: Option<RbfParams<T>>,
    pub nystrom_fraction: Option<f64>,
    pub svm: SvmOptions,
    pub seed: u64,
    /// Floor for the training Gram's spectrum after repair.
    pub psd_epsilon: T,
}

impl<T: Scalar> Default for EvalConfig<T> {
    fn default() -> Self {
        Self { nu: None, sigma: None, nystrom_fraction: None, svm: SvmOptions::default(), seed: 0, psd_epsilon: T::zero() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub pool_seconds: f64,
    pub gram_seconds: f64,
    pub train_seconds: f64,
    pub predict_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub classes: Vec<String>,
    pub splits: Vec<u32>,
    pub split_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// Recall per class over all test folds.
    pub per_class_accuracy: Vec<f64>,
    /// `confusion[true][predicted]`, summed over folds.
    pub confusion: Vec<Vec<usize>>,
    /// Largest eigenvalue lift applied when repairing a training Gram.
    pub max_psd_clip: f64,
    /// Set when the repair moved some eigenvalue by more than `1e-8`.
    pub psd_repaired: bool,
    pub timings: Timings,
}

impl Metrics {
    /// One row per split plus a trailing `mean` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("split,accuracy\n");
        for (s, a) in self.splits.iter().zip(&self.split_accuracy) {
            out.push_str(&format!("{s},{a}\n"));
        }
        out.push_str(&format!("mean,{}\n", self.mean_accuracy));
        out
    }
}

/// Dataset-wide bandwidth: the median of the per-sequence median heuristics.
/// Sequences too degenerate for the heuristic are skipped.
pub fn resolve_dataset_sigma<T: Scalar>(sequences: &[&FeatureSequence<T>]) -> Result<RbfParams<T>> {
    let first = sequences.first().ok_or(Error::Empty("no sequences"))?;
    let mut medians = Vec::with_capacity(sequences.len());
    for s in sequences {
        if s.dim() != first.dim() {
            return Err(Error::DimensionMismatch { expected: first.dim(), got: s.dim() });
        }
        if let Ok(p) = median_bandwidth(s) {
            medians.push(p.sigma());
        }
    }
    if medians.is_empty() {
        return Err(Error::DegenerateSequence);
    }
    medians.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let m = medians.len();
    let mid = if m % 2 == 1 { medians[m / 2] } else { (medians[m / 2 - 1] + medians[m / 2]) * T::lit(0.5) };
    RbfParams::new(mid)
}

/// Pools every sample once, then evaluates split by split.
pub fn cross_validate<T: Scalar>(
    samples: &[Sample<T>],
    classes: &[String],
    pooler: &PoolerConfig<T>,
    eval: &EvalConfig<T>,
) -> Result<Metrics> {
    if samples.is_empty() {
        return Err(Error::Empty("no samples"));
    }
    let mut pooler = pooler.clone();
    if pooler.sigma.is_none() && pooler.scheme.uses_frame_kernel() {
        let seqs: Vec<&FeatureSequence<T>> = samples.iter().map(|s| &s.sequence).collect();
        pooler.sigma = Some(resolve_dataset_sigma(&seqs)?);
    }
    let started = Instant::now();
    let descs = samples.iter().map(|s| pool(&s.sequence, &pooler).map(|p| p.descriptor)).collect::<Result<Vec<_>>>()?;
    let pool_seconds = started.elapsed().as_secs_f64();

    let mut eval = eval.clone();
    if eval.sigma.is_none() {
        eval.sigma = pooler.sigma;
    }
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    let splits: Vec<u32> = samples.iter().map(|s| s.split).collect();
    let mut metrics = evaluate_descriptors(&descs, &labels, &splits, classes, &eval)?;
    metrics.timings.pool_seconds = pool_seconds;
    Ok(metrics)
}

/// Split-wise evaluation of already pooled descriptors. Fold `s` tests the
/// items whose split id is `s` and trains on all others.
pub fn evaluate_descriptors<T: Scalar>(
    descs: &[Descriptor<T>],
    labels: &[usize],
    splits: &[u32],
    classes: &[String],
    eval: &EvalConfig<T>,
) -> Result<Metrics> {
    let n = descs.len();
    if n == 0 {
        return Err(Error::Empty("no descriptors"));
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
    }
    if splits.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: splits.len() });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes.len()) {
        return Err(Error::InvalidParameter(format!("label index {bad} out of range for {} classes", classes.len())));
    }
    let split_ids: Vec<u32> = splits.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if split_ids.len() < 2 {
        return Err(Error::InvalidParameter("evaluation needs at least two distinct splits".into()));
    }
    let sigma = match eval.sigma {
        Some(s) => s,
        None if descs.iter().any(|d| matches!(d, Descriptor::Subspace(_))) => {
            let sources: Vec<&FeatureSequence<T>> = descs
                .iter()
                .filter_map(|d| match d {
                    Descriptor::Subspace(s) => Some(&s.source),
                    _ => None,
                })
                .collect();
            resolve_dataset_sigma(&sources)?
        }
        None => RbfParams::new(T::one())?,
    };
    let params = SequenceKernelParams { nu: eval.nu, sigma, vector_sigma: None, nystrom_fraction: eval.nystrom_fraction };

    let k = classes.len();
    let mut confusion = vec![vec![0usize; k]; k];
    let mut split_accuracy = Vec::with_capacity(split_ids.len());
    let mut timings = Timings::default();
    let mut max_psd_clip = 0.0f64;
    for &s in &split_ids {
        let train: Vec<usize> = (0..n).filter(|&i| splits[i] != s).collect();
        let test: Vec<usize> = (0..n).filter(|&i| splits[i] == s).collect();
        let train_d: Vec<&Descriptor<T>> = train.iter().map(|&i| &descs[i]).collect();
        let test_d: Vec<&Descriptor<T>> = test.iter().map(|&i| &descs[i]).collect();
        let train_y: Vec<usize> = train.iter().map(|&i| labels[i]).collect();

        let t = Instant::now();
        let kernel = SequenceKernel::fit(&train_d, &params)?;
        let gram = SequenceGram::build(&kernel, &train_d, params.nystrom_fraction, eval.seed, eval.psd_epsilon)?;
        let rows = gram.test_rows(&kernel, &train_d, &test_d)?;
        timings.gram_seconds += t.elapsed().as_secs_f64();
        max_psd_clip = max_psd_clip.max(gram.max_clip.as_f64());

        let t = Instant::now();
        let model = svm_train(&gram.matrix, &train_y, &eval.svm)?;
        timings.train_seconds += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let pred = svm_predict(&model, &rows)?;
        timings.predict_seconds += t.elapsed().as_secs_f64();

        let mut correct = 0;
        for (&i, &p) in test.iter().zip(&pred.labels) {
            confusion[labels[i]][p] += 1;
            if p == labels[i] {
                correct += 1;
            }
        }
        split_accuracy.push(correct as f64 / test.len() as f64);
    }
    let per_class_accuracy = confusion
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let total: usize = row.iter().sum();
            if total == 0 { f64::NAN } else { row[c] as f64 / total as f64 }
        })
        .collect();
    let mean_accuracy = split_accuracy.iter().sum::<f64>() / split_accuracy.len() as f64;
    Ok(Metrics {
        classes: classes.to_vec(),
        splits: split_ids,
        split_accuracy,
        mean_accuracy,
        per_class_accuracy,
        confusion,
        max_psd_clip,
        psd_repaired: max_psd_clip > 1e-8,
        timings,
    })
}
