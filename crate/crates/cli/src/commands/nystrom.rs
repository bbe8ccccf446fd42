use std::path::Path;

use serde::Serialize;

use super::classify::{acquire, evaluate, Source};
use super::write_json;
use crate::config::RunConfig;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Serialize)]
pub struct FractionPoint {
    pub fraction: f64,
    pub mean_accuracy: f64,
    /// Accuracy change against the dense Gram, in percentage points.
    pub delta_points: f64,
    pub gram_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NystromReport {
    pub config: RunConfig,
    pub dense_accuracy: f64,
    pub dense_gram_seconds: f64,
    pub fractions: Vec<FractionPoint>,
}

impl NystromReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fraction,mean_accuracy,delta_points,gram_seconds\n");
        for f in &self.fractions {
            out.push_str(&format!("{},{},{},{}\n", f.fraction, f.mean_accuracy, f.delta_points, f.gram_seconds));
        }
        out
    }
}

/// Pools once, then compares classifier-Gram Nyström fractions with the
/// dense Gram.
pub fn run(source: &Source, cfg: &RunConfig, fractions: &[f64], out: Option<&Path>) -> Result<NystromReport> {
    cfg.validate()?;
    if fractions.is_empty() {
        return Err(invalid("no Nyström fractions given"));
    }
    let pooled = acquire(source, cfg)?;
    let dense_cfg = RunConfig { nystrom_fraction: None, ..cfg.clone() };
    let dense = evaluate(&pooled, &dense_cfg)?;
    let mut points = Vec::with_capacity(fractions.len());
    for &f in fractions {
        let run_cfg = RunConfig { nystrom_fraction: Some(f), ..cfg.clone() };
        run_cfg.validate()?;
        let m = evaluate(&pooled, &run_cfg)?;
        points.push(FractionPoint {
            fraction: f,
            mean_accuracy: m.mean_accuracy,
            delta_points: 100.0 * (m.mean_accuracy - dense.mean_accuracy),
            gram_seconds: m.timings.gram_seconds,
        });
    }
    let report = NystromReport {
        config: cfg.clone(),
        dense_accuracy: dense.mean_accuracy,
        dense_gram_seconds: dense.timings.gram_seconds,
        fractions: points,
    };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        write_json(dir.join("nystrom.json"), &report)?;
        std::fs::write(dir.join("nystrom.csv"), report.to_csv())?;
    }
    Ok(report)
}
