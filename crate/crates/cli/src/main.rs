use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use krpool_cli::commands::classify::Source;
use krpool_cli::commands::{bench, classify, gradcheck, nystrom, pool, synth};
use krpool_cli::dataset::with_jobs;
use krpool_cli::error::{CliError, Result};
use krpool_cli::RunConfig;

#[derive(Parser)]
#[command(name = "krpool", version, about = "Kernelized rank pooling of feature sequences")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,

    /// Worker threads for corpus pooling (0 = all cores).
    #[arg(long, global = true, env = "KRP_JOBS", default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

/// Run configuration: an optional `key = value` file, then flag overrides.
#[derive(Args)]
struct ConfigArgs {
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// avg, rp, grp, bkrp, ibkrp or krpfs.
    #[arg(long, global = true)]
    scheme: Option<String>,
    /// Frame-kernel bandwidth or `median`.
    #[arg(long, global = true)]
    sigma: Option<String>,
    #[arg(long, global = true)]
    eta: Option<String>,
    #[arg(long, global = true)]
    lambda: Option<String>,
    /// Slack weight C.
    #[arg(long = "c", global = true)]
    c: Option<String>,
    #[arg(long, global = true)]
    p: Option<String>,
    #[arg(long, global = true)]
    nu: Option<String>,
    #[arg(long, global = true)]
    c_svm: Option<String>,
    #[arg(long, global = true)]
    nystrom_fraction: Option<String>,
    #[arg(long, global = true)]
    psd_epsilon: Option<String>,
    #[arg(long, global = true)]
    ma_window: Option<String>,
    #[arg(long, global = true)]
    ssr: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    max_iters: Option<String>,
    /// Any other config key, as `key=value`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let flags = [
            ("scheme", &self.scheme),
            ("sigma", &self.sigma),
            ("eta", &self.eta),
            ("lambda", &self.lambda),
            ("c", &self.c),
            ("p", &self.p),
            ("nu", &self.nu),
            ("c_svm", &self.c_svm),
            ("nystrom_fraction", &self.nystrom_fraction),
            ("psd_epsilon", &self.psd_epsilon),
            ("ma_window", &self.ma_window),
            ("ssr", &self.ssr),
            ("seed", &self.seed),
            ("max_iters", &self.max_iters),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Invalid(format!("--set expects key=value, got {kv:?}")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset and its manifest.
    Synth {
        /// `order` (forward vs reversed) or `smooth`.
        #[arg(long, default_value = "order")]
        classes: synth::SynthKind,
        #[arg(long, default_value_t = 50)]
        per_class: usize,
        #[arg(long, default_value_t = 40)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        d: usize,
        /// Step scale for `smooth` trajectories.
        #[arg(long, default_value_t = 0.15)]
        smoothness: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pool every sequence of a manifest into a descriptor file.
    Pool {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the analytic KRP-FS gradient against finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split-wise SVM classification of pooled sequences.
    Classify {
        /// Sequence manifest; sequences are pooled on the fly.
        #[arg(long, conflicts_with = "descriptors", required_unless_present = "descriptors")]
        manifest: Option<PathBuf>,
        /// Descriptor manifest written by `pool`.
        #[arg(long)]
        descriptors: Option<PathBuf>,
        /// Also evaluate these ordering margins (comma separated).
        #[arg(long, value_delimiter = ',')]
        eta_sweep: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time one objective plus gradient evaluation per sequence length.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "100,200")]
        sizes: Vec<usize>,
        #[arg(long = "bench-p", default_value_t = 3)]
        bench_p: usize,
        #[arg(long, default_value_t = 16)]
        d: usize,
        #[arg(long, default_value_t = 5)]
        iters: usize,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare Nyström classifier Grams with the dense one.
    NystromEval {
        #[arg(long, conflicts_with = "descriptors", required_unless_present = "descriptors")]
        manifest: Option<PathBuf>,
        #[arg(long)]
        descriptors: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0.125,0.25,0.5,1")]
        fractions: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn source<'a>(manifest: &'a Option<PathBuf>, descriptors: &'a Option<PathBuf>) -> Source<'a> {
    match (manifest, descriptors) {
        (Some(m), _) => Source::Sequences(m),
        (None, Some(d)) => Source::Descriptors(d),
        (None, None) => unreachable!("clap requires one input"),
    }
}

fn write_report(out: &Option<PathBuf>, name: &str, json: &impl serde::Serialize, csv: Option<(&str, String)>) -> Result<()> {
    let Some(dir) = out else { return Ok(()) };
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(json)? + "\n")?;
    println!("{}", path.display());
    if let Some((csv_name, text)) = csv {
        let path = dir.join(csv_name);
        std::fs::write(&path, text)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn print_paths(dir: &Path, names: &[&str]) {
    for name in names {
        let path = dir.join(name);
        if path.exists() {
            println!("{}", path.display());
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = cli.config.resolve()?;
    match cli.command {
        Command::Synth { classes, per_class, n, d, smoothness, out } => {
            let args = synth::SynthArgs { kind: classes, per_class, n, d, seed: cfg.seed, smoothness, out };
            println!("{}", synth::run(&args)?.display());
        }
        Command::Pool { manifest, out } => {
            let report = with_jobs(cli.jobs, || pool::run(&manifest, &out, &cfg))??;
            print_paths(&out, &["pool_report.json", "pool_summary.csv", "descriptors.jsonl"]);
            report.outcome()?;
        }
        Command::Gradcheck { instances, tol, out } => {
            let args = gradcheck::GradcheckArgs { instances, tol, ..Default::default() };
            let report = gradcheck::run(&cfg, &args)?;
            write_report(&out, "gradcheck.json", &report, None)?;
            if out.is_none() {
                println!("{}", serde_json::to_string_pretty(&report)?);
            }
            if !report.passed {
                return Err(CliError::Unsuccessful {
                    message: format!(
                        "gradient check failed: rel. error {:.3e} (tol {:.1e}), feasibility {:.3e}, tangency {:.3e}",
                        report.max_rel_error, tol, report.max_feasibility, report.max_tangency
                    ),
                    numeric: true,
                });
            }
        }
        Command::Classify { manifest, descriptors, eta_sweep, out } => {
            let src = source(&manifest, &descriptors);
            let report = with_jobs(cli.jobs, || classify::run(&src, &cfg, &eta_sweep, out.as_deref()))??;
            match &out {
                Some(dir) => print_paths(dir, &["metrics.json", "metrics.csv", "eta_sweep.csv"]),
                None => print!("{}", report.metrics.to_csv()),
            }
        }
        Command::Bench { sizes, bench_p, d, iters, repeats, out } => {
            let args = bench::BenchArgs { sizes, p: bench_p, d, iters, repeats };
            let report = bench::run(&cfg, &args)?;
            write_report(&out, "bench.json", &report, Some(("bench.csv", report.to_csv())))?;
            if out.is_none() {
                print!("{}", report.to_csv());
            }
        }
        Command::NystromEval { manifest, descriptors, fractions, out } => {
            let src = source(&manifest, &descriptors);
            let report = with_jobs(cli.jobs, || nystrom::run(&src, &cfg, &fractions, out.as_deref()))??;
            match &out {
                Some(dir) => print_paths(dir, &["nystrom.json", "nystrom.csv"]),
                None => print!("{}", report.to_csv()),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
