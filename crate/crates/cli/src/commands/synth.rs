use std::path::{Path, PathBuf};

use krpool::data::{save_sequence, synth_order_benchmark, synth_smooth, SEQUENCE_EXTENSION};
use krpool::{DatasetManifest, ManifestEntry};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Forward trajectories against their time reversals.
    Order,
    /// Unlabelled smooth trajectories (label `smooth`, alternating splits).
    Smooth,
}

impl std::str::FromStr for SynthKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "order" => Ok(SynthKind::Order),
            "smooth" => Ok(SynthKind::Smooth),
            _ => Err(format!("unknown synthetic dataset {s:?} (expected order or smooth)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthArgs {
    pub kind: SynthKind,
    pub per_class: usize,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub smoothness: f64,
    pub out: PathBuf,
}

/// Writes the sequences and `manifest.jsonl`; returns the manifest path.
pub fn run(args: &SynthArgs) -> Result<PathBuf> {
    if args.per_class < 2 {
        return Err(invalid(format!("--per-class must be at least 2, got {}", args.per_class)));
    }
    let manifest_path = args.out.join("manifest.jsonl");
    match args.kind {
        SynthKind::Order => {
            synth_order_benchmark(args.per_class, args.n, args.d, args.seed, &args.out)?;
        }
        SynthKind::Smooth => write_smooth(args, &manifest_path)?,
    }
    Ok(manifest_path)
}

fn write_smooth(args: &SynthArgs, manifest_path: &Path) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let mut entries = Vec::with_capacity(args.per_class);
    for i in 0..args.per_class {
        let x = synth_smooth(args.n, args.d, args.seed.wrapping_add(i as u64), args.smoothness)?;
        let file = format!("smooth_{i:04}.{SEQUENCE_EXTENSION}");
        save_sequence(&x, args.out.join(&file))?;
        entries.push(ManifestEntry { path: file, label: "smooth".into(), split: (i % 2) as u32 + 1 });
    }
    DatasetManifest::new(entries, &args.out)?.write(manifest_path)?;
    Ok(())
}
