use std::time::Instant;

use krpool::data::synth_smooth;
use krpool::grassmann::GeneralizedGrassmann;
use krpool::pooling::{krpfs_euclidean_grad, krpfs_objective};
use krpool::{gram, median_bandwidth};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Serialize)]
pub struct BenchArgs {
    pub sizes: Vec<usize>,
    pub p: usize,
    pub d: usize,
    /// Evaluations per timing sample.
    pub iters: usize,
    /// Timing samples per size; the fastest is reported.
    pub repeats: usize,
}

impl Default for BenchArgs {
    fn default() -> Self {
        Self { sizes: vec![100, 200], p: 3, d: 16, iters: 5, repeats: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub p: usize,
    pub d: usize,
    pub seconds_per_iter: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub config: RunConfig,
    pub args: BenchArgs,
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of log time against log n; absent for one size.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

pub const CSV_HEADER: &str = "n,p,d,seconds_per_iter";

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{:e}\n", r.n, r.p, r.d, r.seconds_per_iter));
        }
        out
    }
}

/// Parses the CSV written by [`BenchReport::to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(invalid("bench CSV header mismatch"));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let bad = || invalid(format!("malformed bench row {l:?}"));
            if f.len() != 4 {
                return Err(bad());
            }
            Ok(BenchRow {
                n: f[0].parse().map_err(|_| bad())?,
                p: f[1].parse().map_err(|_| bad())?,
                d: f[2].parse().map_err(|_| bad())?,
                seconds_per_iter: f[3].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

fn log_log_slope(rows: &[BenchRow]) -> Option<f64> {
    if rows.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.n as f64).ln(), r.seconds_per_iter.ln())).collect();
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Times one KRP-FS objective plus gradient evaluation per size.
pub fn run(cfg: &RunConfig, args: &BenchArgs) -> Result<BenchReport> {
    cfg.validate()?;
    if args.sizes.is_empty() || args.iters == 0 || args.repeats == 0 {
        return Err(invalid("bench needs at least one size, iteration and repeat"));
    }
    if let Some(&n) = args.sizes.iter().find(|&&n| n < args.p.max(2)) {
        return Err(invalid(format!("size {n} is smaller than p = {}", args.p)));
    }
    let hp = cfg.hinge();
    let mut problems = Vec::with_capacity(args.sizes.len());
    for &n in &args.sizes {
        let x = synth_smooth(n, args.d, cfg.seed, 0.15)?;
        let k = gram(&x, &median_bandwidth(&x)?);
        let manifold = GeneralizedGrassmann::new(k.values().clone(), args.p)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ n as u64);
        let y = DMatrix::from_fn(n, args.p, |_, _| StandardNormal.sample(&mut rng));
        let a = manifold.k_orthonormalize(&y)?.into_matrix();
        // Warm-up.
        std::hint::black_box(krpfs_euclidean_grad(&a, &k, &hp)?);
        problems.push((k, a));
    }
    // Sizes are interleaved within each repeat so that clock ramp-up and
    // background load hit every size alike; the minimum is kept.
    let mut best = vec![f64::INFINITY; problems.len()];
    for _ in 0..args.repeats {
        for ((k, a), best) in problems.iter().zip(best.iter_mut()) {
            let t = Instant::now();
            for _ in 0..args.iters {
                std::hint::black_box(krpfs_objective(a, k, &hp)?);
                std::hint::black_box(krpfs_euclidean_grad(a, k, &hp)?);
            }
            *best = best.min(t.elapsed().as_secs_f64() / args.iters as f64);
        }
    }
    let rows: Vec<BenchRow> = args
        .sizes
        .iter()
        .zip(best)
        .map(|(&n, seconds_per_iter)| BenchRow { n, p: args.p, d: args.d, seconds_per_iter })
        .collect();
    Ok(BenchReport { config: cfg.clone(), args: args.clone(), slope: log_log_slope(&rows), rows })
}
