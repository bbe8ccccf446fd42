//! Seeded synthetic sequences.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{save_sequence, DatasetManifest, FeatureSequence, ManifestEntry, SEQUENCE_EXTENSION};
use crate::error::{Error, Result};

/// Seed of the linear map inside the output nonlinearity, shared by every
/// generated sequence.
const MAP_SEED: u64 = 0x5eed_f00d;
/// Step scale of the order benchmark's random walks.
const BENCHMARK_SMOOTHNESS: f64 = 0.1;
/// Per-step latent drift shared by every benchmark trajectory.
const BENCHMARK_DRIFT: f64 = 0.1;
/// Standard deviation of the per-instance observation noise.
const BENCHMARK_NOISE: f64 = 0.02;

/// Class labels of the order benchmark: `forward` and its time reversal.
pub const ORDER_CLASSES: [&str; 2] = ["forward", "reverse"];

fn output_map(d: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(MAP_SEED ^ (d as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let scale = 1.0 / (d as f64).sqrt();
    DMatrix::from_fn(d, d, |_, _| {
        let v: f64 = StandardNormal.sample(&mut rng);
        v * scale
    })
}

/// `x_t = tanh(W s_t)` where `s_t` is a cumulative sum of `N(0, smoothness²)`
/// steps and `W` is a fixed random map.
pub fn synth_smooth(n: usize, d: usize, seed: u64, smoothness: f64) -> Result<FeatureSequence<f64>> {
    walk(n, d, seed, smoothness, 0.0)
}

/// As [`synth_smooth`], with every latent step also moving `drift` along the
/// diagonal direction.
fn walk(n: usize, d: usize, seed: u64, smoothness: f64, drift: f64) -> Result<FeatureSequence<f64>> {
    if n < 2 || d == 0 {
        return Err(Error::InvalidParameter(format!("synth_smooth needs n >= 2 and d >= 1, got n={n}, d={d}")));
    }
    if !(smoothness.is_finite() && smoothness >= 0.0) {
        return Err(Error::InvalidParameter(format!("smoothness must be >= 0, got {smoothness}")));
    }
    let w = output_map(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bias = drift / (d as f64).sqrt();
    let mut state = DVector::<f64>::zeros(d);
    let mut data = DMatrix::zeros(n, d);
    for t in 0..n {
        for k in 0..d {
            let step: f64 = StandardNormal.sample(&mut rng);
            state[k] += smoothness * step + bias;
        }
        let y = &w * &state;
        for k in 0..d {
            data[(t, k)] = y[k].tanh();
        }
    }
    FeatureSequence::new(data)
}

/// A generated sequence with its class label and split id.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequence {
    pub name: String,
    pub label: String,
    pub split: u32,
    pub sequence: FeatureSequence<f64>,
}

/// Two classes that differ only in temporal order: each drifting trajectory
/// appears once forward and once reversed, each copy with its own observation noise.
/// Both copies of a trajectory share a split; splits alternate 1, 2 so every
/// split is class-balanced.
pub fn order_benchmark(num_per_class: usize, n: usize, d: usize, seed: u64) -> Result<Vec<LabeledSequence>> {
    if num_per_class < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 sequences per class, got {num_per_class}")));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, BENCHMARK_NOISE).expect("valid noise scale");
    let mut out = Vec::with_capacity(2 * num_per_class);
    for i in 0..num_per_class {
        let base = walk(n, d, master.next_u64(), BENCHMARK_SMOOTHNESS, BENCHMARK_DRIFT)?;
        let split = (i % 2) as u32 + 1;
        for (c, label) in ORDER_CLASSES.iter().enumerate() {
            let mut noise_rng = ChaCha8Rng::seed_from_u64(master.next_u64());
            let noisy = base.data().map(|v| v + noise.sample(&mut noise_rng));
            let mut seq = FeatureSequence::new(noisy)?;
            if c == 1 {
                seq = seq.reversed();
            }
            let name = format!("{label}_{i:04}");
            out.push(LabeledSequence { name: name.clone(), label: label.to_string(), split, sequence: seq.with_id(name) });
        }
    }
    Ok(out)
}

/// Writes [`order_benchmark`] to `out_dir` as `.seqf` files plus
/// `manifest.jsonl`; returns the manifest.
pub fn synth_order_benchmark(
    num_per_class: usize,
    n: usize,
    d: usize,
    seed: u64,
    out_dir: impl AsRef<Path>,
) -> Result<DatasetManifest> {
    let dir = out_dir.as_ref();
    let items = order_benchmark(num_per_class, n, d, seed)?;
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(items.len());
    for item in &items {
        let file = format!("{}.{SEQUENCE_EXTENSION}", item.name);
        save_sequence(&item.sequence, dir.join(&file))?;
        entries.push(ManifestEntry { path: file, label: item.label.clone(), split: item.split });
    }
    let manifest = DatasetManifest::new(entries, dir)?;
    manifest.write(dir.join("manifest.jsonl"))?;
    Ok(manifest)
}
