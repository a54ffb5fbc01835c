//! Solver traces shared by every solver.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::certificate::CertificateReport;
use crate::linalg::DenseMatrix;
use crate::split::FactorPair;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    Converged,
    MaxIterations,
    LineSearchFailed,
    TimeBudget,
    NumericalFailure,
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Converged => "converged",
            Self::MaxIterations => "max_iterations",
            Self::LineSearchFailed => "line_search_failed",
            Self::TimeBudget => "time_budget",
            Self::NumericalFailure => "numerical_failure",
        };
        f.write_str(s)
    }
}

/// Certificate values attached to a trace record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertSummary {
    pub e_norm: f64,
    pub gap_bound: f64,
    /// Convex objective `λ_L‖L‖_* + φ(L)` at the iterate.
    pub objective: f64,
}

impl From<&CertificateReport> for CertSummary {
    fn from(c: &CertificateReport) -> Self {
        Self { e_norm: c.e_norm, gap_bound: c.gap_bound, objective: c.objective }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub objective: f64,
    pub grad_norm: f64,
    /// Solver time so far, excluding certificate and reporting work.
    pub elapsed_s: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cert: Option<CertSummary>,
}

/// When to evaluate the optimality certificate during a solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CertificateSchedule {
    #[default]
    Off,
    Final,
    Every(usize),
}

impl CertificateSchedule {
    pub(crate) fn due(&self, iter: usize) -> bool {
        matches!(self, Self::Every(n) if *n > 0 && iter % n == 0)
    }

    pub(crate) fn wants_final(&self) -> bool {
        !matches!(self, Self::Off)
    }
}

impl FromStr for CertificateSchedule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(Self::Off),
            "final" => Ok(Self::Final),
            other => other
                .strip_prefix("every:")
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n > 0)
                .map(Self::Every)
                .ok_or_else(|| format!("expected off, final or every:N (N >= 1), got {other:?}")),
        }
    }
}

impl TryFrom<String> for CertificateSchedule {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<CertificateSchedule> for String {
    fn from(c: CertificateSchedule) -> String {
        c.to_string()
    }
}

impl fmt::Display for CertificateSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Off => f.write_str("off"),
            Self::Final => f.write_str("final"),
            Self::Every(n) => write!(f, "every:{n}"),
        }
    }
}

/// Outcome of a solve: trace plus the final decomposition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: String,
    pub reason: TerminationReason,
    pub iterations: usize,
    /// Final value of the objective the solver tracks.
    pub objective: f64,
    /// Final rank bound (factored solver) or numerical rank of `L`.
    pub rank: usize,
    pub elapsed_s: f64,
    pub records: Vec<IterRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<CertificateReport>,
    #[serde(skip)]
    pub l: DenseMatrix,
    #[serde(skip)]
    pub s: DenseMatrix,
    #[serde(skip)]
    pub factors: Option<FactorPair>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.reason == TerminationReason::Converged
    }
}
