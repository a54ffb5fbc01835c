//! Low-rank plus sparse decomposition through the factorized objective
//! `(λ_L/2)(‖U‖_F² + ‖V‖_F²) + φ(UVᵀ)`, where `φ` is the sparse part
//! minimized out in closed form (a Huber loss on the residual).
//!
//! The main entry point is [`solve_split_spcp`]. [`certificate`] bounds the
//! distance of any `UVᵀ` to the convex optimum, and the two SVD-based solvers
//! in [`baselines`] serve as references.
//!
//! ```
//! use spcp_core::{gen_low_rank_plus_sparse, solve_split_spcp, ProblemSpec, SolverConfig};
//!
//! let p = gen_low_rank_plus_sparse(30, 20, 2, 0.1, 0.0, 7).unwrap();
//! let spec = ProblemSpec::new(p.x, 1.0, 0.3).unwrap();
//! let report = solve_split_spcp(&spec, 4, &SolverConfig::default()).unwrap();
//! assert!(report.converged());
//! ```

pub mod baselines;
pub mod certificate;
mod error;
pub mod io;
pub mod linalg;
pub mod marginal;
pub mod metrics;
pub mod report;
pub mod split;
pub mod synth;

pub use baselines::{solve_convex_prox, solve_frank_wolfe, svt, FwConfig, FwState, ProxConfig};
pub use certificate::{certificate, certificate_dense, factor_svd, CertificateReport};
pub use error::{Error, Result};
pub use io::{read_matrix, write_matrix, MatrixFileError, MatrixFormat};
pub use linalg::{leading_triple, rand_svd, svd_small, DenseMatrix, LeadingTriple, PowerParams, RsvdParams, SvdTriplet};
pub use marginal::{huber, phi_value_grad, shrink, Mask, MarginalEval, ProblemSpec};
pub use metrics::{aicc, degrees_of_freedom, AiccReport};
pub use report::{CertificateSchedule, IterRecord, SolveReport, TerminationReason};
pub use split::{
    init_factors, solve_split_from, solve_split_spcp, split_objective, FactorPair, InitStrategy, RankGrowth, SolverConfig,
    SplitEval,
};
pub use synth::{gen_low_rank_plus_sparse, gen_mask, SyntheticProblem};
