use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use spcp_core::{CertificateSchedule, FwConfig, InitStrategy, PowerParams, ProxConfig, RankGrowth, SolverConfig};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Split,
    Prox,
    Fw,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Split => "split",
            Self::Prox => "prox",
            Self::Fw => "fw",
        })
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "split" => Ok(Self::Split),
            "prox" => Ok(Self::Prox),
            "fw" => Ok(Self::Fw),
            other => Err(format!("unknown solver {other:?} (split, prox, fw)")),
        }
    }
}

/// Everything a single solve needs. Unset fields fall back to library defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub solver: SolverKind,
    pub lambda_l: Option<f64>,
    pub lambda_s: Option<f64>,
    /// Rank bound for the factored solver.
    pub k: Option<usize>,
    pub init: InitStrategy,
    pub memory: usize,
    pub grad_tol: f64,
    pub max_iter: Option<usize>,
    /// Relative tolerance for the prox and Frank-Wolfe solvers.
    pub tol: Option<f64>,
    pub step: f64,
    pub accel: bool,
    pub rank_growth: bool,
    pub max_k: Option<usize>,
    pub time_budget_s: Option<f64>,
    pub seed: u64,
    pub certificate: CertificateSchedule,
    /// Warn when the final gap bound exceeds this fraction of the objective.
    pub gap_warn_rel: f64,
    pub input: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub out_l: Option<PathBuf>,
    pub out_s: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub cert_out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let split = SolverConfig::default();
        let prox = ProxConfig::default();
        Self {
            solver: SolverKind::Split,
            lambda_l: None,
            lambda_s: None,
            k: None,
            init: split.init,
            memory: split.memory,
            grad_tol: split.grad_tol,
            max_iter: None,
            tol: None,
            step: prox.step,
            accel: prox.accel,
            rank_growth: false,
            max_k: None,
            time_budget_s: None,
            seed: 0,
            certificate: CertificateSchedule::Off,
            gap_warn_rel: 1e-3,
            input: None,
            mask: None,
            out_l: None,
            out_s: None,
            trace: None,
            cert_out: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg: Self =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        // relative paths in a config file are relative to the file
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.input, &mut cfg.mask, &mut cfg.out_l, &mut cfg.out_s, &mut cfg.trace, &mut cfg.cert_out]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn lambdas(&self) -> Result<(f64, f64), CliError> {
        match (self.lambda_l, self.lambda_s) {
            (Some(l), Some(s)) => Ok((l, s)),
            _ => Err(CliError::Usage("lambda_l and lambda_s are required".into())),
        }
    }

    pub fn split_config(&self) -> Result<(usize, SolverConfig), CliError> {
        let k = self.k.ok_or_else(|| CliError::Usage("the split solver needs a rank bound k".into()))?;
        let mut cfg = SolverConfig {
            memory: self.memory,
            grad_tol: self.grad_tol,
            init: self.init,
            seed: self.seed,
            certificate: self.certificate,
            ..SolverConfig::default()
        };
        if let Some(it) = self.max_iter {
            cfg.max_iter = it;
        }
        if self.rank_growth {
            cfg.rank_growth = Some(RankGrowth { max_k: self.max_k.unwrap_or(usize::MAX), ..RankGrowth::default() });
        }
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok((k, cfg))
    }

    pub fn prox_config(&self) -> ProxConfig {
        let d = ProxConfig::default();
        ProxConfig {
            step: self.step,
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            tol: self.tol.unwrap_or(d.tol),
            accel: self.accel,
            certificate: self.certificate,
        }
    }

    pub fn fw_config(&self) -> FwConfig {
        let d = FwConfig::default();
        FwConfig {
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            tol: self.tol.unwrap_or(d.tol),
            lmo: PowerParams::default(),
            seed: self.seed,
            time_budget_s: self.time_budget_s,
            fixed_step: false,
            certificate: self.certificate,
        }
    }

    /// Checks everything that can be checked before reading data.
    pub fn validate(&self) -> Result<(), CliError> {
        let (l, s) = self.lambdas()?;
        if !(l > 0.0 && s > 0.0 && l.is_finite() && s.is_finite()) {
            return Err(CliError::Usage(format!("lambdas must be positive and finite, got {l} and {s}")));
        }
        match self.solver {
            SolverKind::Split => {
                self.split_config()?;
            }
            SolverKind::Prox => {
                if !(self.step > 0.0 && self.step <= 1.0) {
                    return Err(CliError::Usage(format!("prox step must be in (0, 1], got {}", self.step)));
                }
            }
            SolverKind::Fw => {}
        }
        if let Some(t) = self.time_budget_s {
            if !(t > 0.0) {
                return Err(CliError::Usage(format!("time budget must be positive, got {t}")));
            }
        }
        Ok(())
    }
}
