use std::time::Instant;

use krpool::data::synth_smooth;
use krpool::grassmann::GeneralizedGrassmann;
use krpool::pooling::{krpfs_euclidean_grad, krpfs_objective, projection_lengths};
use krpool::{gram, median_bandwidth, HingeParams, KernelMatrix, Scheme};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{invalid, CliError, Result};

/// Residual bound for feasibility and (relative) tangency.
const MANIFOLD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckArgs {
    pub instances: usize,
    pub tol: f64,
    pub n_range: (usize, usize),
    pub p_range: (usize, usize),
    pub d: usize,
    pub step: f64,
}

impl Default for GradcheckArgs {
    fn default() -> Self {
        Self { instances: 20, tol: 1e-5, n_range: (10, 30), p_range: (2, 5), d: 4, step: 1e-6 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceReport {
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub sigma: f64,
    pub rel_error: f64,
    pub checked_entries: usize,
    /// Entries whose perturbation changed the violating-pair set.
    pub skipped_entries: usize,
    pub feasibility: f64,
    pub tangency: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckReport {
    pub config: RunConfig,
    pub args: GradcheckArgs,
    pub instances: Vec<InstanceReport>,
    pub max_rel_error: f64,
    pub max_feasibility: f64,
    pub max_tangency: f64,
    pub passed: bool,
    pub seconds: f64,
}

impl GradcheckReport {
    pub fn outcome(&self) -> Result<()> {
        if self.passed {
            Ok(())
        } else {
            Err(CliError::Unsuccessful {
                message: format!(
                    "gradient check failed: max relative error {:e} (tolerance {:e}), feasibility {:e}, tangency {:e}",
                    self.max_rel_error, self.args.tol, self.max_feasibility, self.max_tangency
                ),
                numeric: true,
            })
        }
    }
}

fn violating(a: &DMatrix<f64>, k: &KernelMatrix<f64>, eta: f64) -> Result<Vec<bool>> {
    let q = projection_lengths(a, k)?;
    let n = q.len();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(eta + q[i] - q[j] > 0.0);
        }
    }
    Ok(out)
}

fn check_instance(seed: u64, args: &GradcheckArgs, hp: &HingeParams<f64>) -> Result<InstanceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(args.n_range.0..=args.n_range.1);
    let p = rng.random_range(args.p_range.0..=args.p_range.1);
    let x = synth_smooth(n, args.d, rng.random(), 0.3)?;
    let sigma = median_bandwidth(&x)?;
    let k = gram(&x, &sigma);
    let manifold = GeneralizedGrassmann::new(k.values().clone(), p)?;
    let y = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let point = manifold.k_orthonormalize(&y)?;
    let a = point.matrix();

    let grad = krpfs_euclidean_grad(a, &k, hp)?;
    let active = violating(a, &k, hp.eta)?;
    let h = args.step;
    let (mut diff2, mut norm2) = (0.0, 0.0);
    let (mut checked, mut skipped) = (0, 0);
    for i in 0..n {
        for j in 0..p {
            let mut plus = a.clone();
            plus[(i, j)] += h;
            let mut minus = a.clone();
            minus[(i, j)] -= h;
            if violating(&plus, &k, hp.eta)? != active || violating(&minus, &k, hp.eta)? != active {
                skipped += 1;
                continue;
            }
            let fd = (krpfs_objective(&plus, &k, hp)? - krpfs_objective(&minus, &k, hp)?) / (2.0 * h);
            diff2 += (fd - grad[(i, j)]).powi(2);
            norm2 += grad[(i, j)].powi(2);
            checked += 1;
        }
    }
    if checked == 0 {
        return Err(CliError::Unsuccessful { message: format!("instance {seed}: every entry straddles a hinge kink"), numeric: true });
    }
    let rgrad = manifold.riemannian_grad(&point, &grad)?;
    let tangency = manifold.horizontality_residual(&point, &rgrad) / manifold.norm(&rgrad).max(1.0);
    Ok(InstanceReport {
        seed,
        n,
        p,
        sigma: sigma.sigma(),
        rel_error: diff2.sqrt() / norm2.sqrt().max(1e-300),
        checked_entries: checked,
        skipped_entries: skipped,
        feasibility: manifold.feasibility_residual(a),
        tangency,
    })
}

/// Compares the analytic KRP-FS gradient with central differences on
/// seeded random instances.
pub fn run(cfg: &RunConfig, args: &GradcheckArgs) -> Result<GradcheckReport> {
    cfg.validate()?;
    if cfg.scheme != Scheme::Krpfs {
        return Err(invalid(format!("gradcheck applies to krpfs, not {}", cfg.scheme)));
    }
    if args.instances == 0 {
        return Err(invalid("--instances must be at least 1"));
    }
    if !(args.tol > 0.0) {
        return Err(invalid(format!("--tol must be positive, got {}", args.tol)));
    }
    if args.n_range.0 < 2 || args.n_range.0 > args.n_range.1 || args.p_range.0 == 0 || args.p_range.0 > args.p_range.1 {
        return Err(invalid("instance size ranges must be non-empty with n >= 2 and p >= 1"));
    }
    if args.p_range.1 > args.n_range.0 {
        return Err(invalid("largest p must not exceed smallest n"));
    }
    let started = Instant::now();
    let hp = cfg.hinge();
    let instances = (0..args.instances as u64)
        .map(|i| check_instance(cfg.seed.wrapping_mul(1_000_003).wrapping_add(i), args, &hp))
        .collect::<Result<Vec<_>>>()?;
    let max = |f: fn(&InstanceReport) -> f64| instances.iter().map(f).fold(0.0, f64::max);
    let max_rel_error = max(|r| r.rel_error);
    let max_feasibility = max(|r| r.feasibility);
    let max_tangency = max(|r| r.tangency);
    Ok(GradcheckReport {
        config: cfg.clone(),
        args: args.clone(),
        passed: max_rel_error < args.tol && max_feasibility < MANIFOLD_TOL && max_tangency < MANIFOLD_TOL,
        instances,
        max_rel_error,
        max_feasibility,
        max_tangency,
        seconds: started.elapsed().as_secs_f64(),
    })
}
