//! Flat `key = value` run configuration shared by every subcommand.

use std::path::Path;

use krpool::classify::{EvalConfig, SvmOptions};
use krpool::grassmann::{BetaRule, RcgOptions};
use krpool::pooling::DescentOptions;
use krpool::{HingeParams, PoolerConfig, RbfParams, Scheme};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scheme: Scheme,
    /// Frame-kernel bandwidth; `None` is the median heuristic.
    pub sigma: Option<f64>,
    /// Ordering margin; `None` is the scheme default.
    pub eta: Option<f64>,
    pub lambda: f64,
    pub c: f64,
    pub p: usize,
    /// Sequence-kernel temperature; `None` is `1/p`.
    pub nu: Option<f64>,
    pub c_svm: f64,
    pub nystrom_fraction: Option<f64>,
    pub psd_epsilon: f64,
    pub ma_window: usize,
    pub ssr: bool,
    pub seed: u64,
    pub solver: RcgOptions,
    pub descent: DescentOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Krpfs,
            sigma: None,
            eta: None,
            lambda: 1.0,
            c: 1.0,
            p: 10,
            nu: None,
            c_svm: 10.0,
            nystrom_fraction: None,
            psd_epsilon: 0.0,
            ma_window: 1,
            ssr: false,
            seed: 0,
            solver: RcgOptions::default(),
            descent: DescentOptions::default(),
        }
    }
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| invalid(format!("{key}: cannot parse {value:?}")))
}

fn optional(key: &str, value: &str, unset: &[&str]) -> Result<Option<f64>> {
    if unset.iter().any(|u| value.eq_ignore_ascii_case(u)) {
        Ok(None)
    } else {
        number(key, value).map(Some)
    }
}

impl RunConfig {
    /// Reads `key = value` lines; `#` starts a comment.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("{}:{}: expected `key = value`", path.display(), lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.replace('-', "_").as_str() {
            "scheme" => self.scheme = value.parse().map_err(|e: krpool::Error| invalid(e.to_string()))?,
            "sigma" => self.sigma = optional(key, value, &["median"])?,
            "eta" => self.eta = optional(key, value, &["default"])?,
            "lambda" => self.lambda = number(key, value)?,
            "c" => self.c = number(key, value)?,
            "p" => self.p = number(key, value)?,
            "nu" => self.nu = optional(key, value, &["default"])?,
            "c_svm" => self.c_svm = number(key, value)?,
            "nystrom_fraction" => self.nystrom_fraction = optional(key, value, &["none", "dense"])?,
            "psd_epsilon" => self.psd_epsilon = number(key, value)?,
            "ma_window" => self.ma_window = number(key, value)?,
            "ssr" => {
                self.ssr = match value.to_ascii_lowercase().as_str() {
                    "true" | "on" | "yes" | "1" => true,
                    "false" | "off" | "no" | "0" => false,
                    _ => return Err(invalid(format!("ssr: expected on/off, got {value:?}"))),
                }
            }
            "seed" => self.seed = number(key, value)?,
            "max_iters" => self.solver.max_iters = number(key, value)?,
            "grad_tol" => self.solver.grad_tol = number(key, value)?,
            "armijo_c" => {
                self.solver.armijo_c = number(key, value)?;
                self.descent.armijo_c = self.solver.armijo_c;
            }
            "backtrack_factor" => {
                self.solver.backtrack_factor = number(key, value)?;
                self.descent.backtrack_factor = self.solver.backtrack_factor;
            }
            "beta_rule" => {
                self.solver.beta_rule = match value.to_ascii_lowercase().as_str() {
                    "pr+" | "polak-ribiere-plus" | "polak_ribiere_plus" => BetaRule::PolakRibierePlus,
                    "fr" | "fletcher-reeves" | "fletcher_reeves" => BetaRule::FletcherReeves,
                    _ => return Err(invalid(format!("beta_rule: expected pr+ or fr, got {value:?}"))),
                }
            }
            "restart_period" => {
                self.solver.restart_period = optional(key, value, &["default"])?.map(|v| v as usize);
            }
            "descent_max_iters" => self.descent.max_iters = number(key, value)?,
            "descent_grad_tol" => self.descent.grad_tol = number(key, value)?,
            other => return Err(invalid(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn eta(&self) -> f64 {
        self.eta.unwrap_or_else(|| self.scheme.default_eta())
    }

    pub fn hinge(&self) -> HingeParams<f64> {
        HingeParams { eta: self.eta(), lambda: self.lambda, slack_weight: self.c }
    }

    pub fn validate(&self) -> Result<()> {
        self.hinge().validate()?;
        self.solver.validate()?;
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive, got {v}")))
            }
        };
        if let Some(s) = self.sigma {
            positive("sigma", s)?;
        }
        if let Some(nu) = self.nu {
            positive("nu", nu)?;
        }
        positive("c_svm", self.c_svm)?;
        if let Some(f) = self.nystrom_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(invalid(format!("nystrom_fraction must lie in (0, 1], got {f}")));
            }
        }
        if !(self.psd_epsilon.is_finite() && self.psd_epsilon >= 0.0) {
            return Err(invalid(format!("psd_epsilon must be >= 0, got {}", self.psd_epsilon)));
        }
        if self.ma_window == 0 {
            return Err(invalid("ma_window must be at least 1"));
        }
        if self.descent.max_iters == 0 || !(self.descent.grad_tol >= 0.0) {
            return Err(invalid("descent options must have max_iters >= 1 and grad_tol >= 0"));
        }
        if self.scheme.is_subspace() && self.p == 0 {
            return Err(invalid(format!("{} needs p >= 1", self.scheme)));
        }
        if self.scheme == Scheme::Avg && self.eta.is_some() {
            return Err(invalid("avg pooling takes no ordering margin"));
        }
        Ok(())
    }

    pub fn pooler(&self, sigma: Option<RbfParams<f64>>) -> PoolerConfig<f64> {
        PoolerConfig {
            scheme: self.scheme,
            sigma,
            hinge: self.hinge(),
            p: self.p,
            rcg: self.solver,
            descent: self.descent,
        }
    }

    pub fn eval(&self, sigma: Option<RbfParams<f64>>) -> EvalConfig<f64> {
        EvalConfig {
            nu: self.nu,
            sigma,
            nystrom_fraction: self.nystrom_fraction,
            svm: SvmOptions { c: self.c_svm, ..SvmOptions::default() },
            seed: self.seed,
            psd_epsilon: self.psd_epsilon,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_with_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# order run\nscheme = ibkrp\nsigma = median\neta = 0.05 # margin\np=3\nssr = on\nbeta_rule = fr\n").unwrap();
        let cfg = RunConfig::from_file(&path).unwrap();
        assert_eq!(cfg.scheme, Scheme::Ibkrp);
        assert_eq!(cfg.sigma, None);
        assert_eq!(cfg.eta(), 0.05);
        assert_eq!(cfg.p, 3);
        assert!(cfg.ssr);
        assert_eq!(cfg.solver.beta_rule, BetaRule::FletcherReeves);
    }

    #[test]
    fn rejects_bad_entries() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set("bogus", "1").is_err());
        assert!(cfg.set("p", "three").is_err());
        cfg.set("nystrom_fraction", "1.5").unwrap();
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.set("eta", "-1").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn scheme_defaults_for_eta() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.eta(), 1e-4);
        cfg.set("scheme", "ibkrp").unwrap();
        assert_eq!(cfg.eta(), 0.1);
    }

    #[test]
    fn json_round_trip() {
        let cfg = RunConfig { sigma: Some(0.7), nystrom_fraction: Some(0.125), ..RunConfig::default() };
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
