//! The factored (Burer–Monteiro) solver.
//!
//! `L` is replaced by `U·Vᵀ` and `‖L‖_*` by `½(‖U‖_F² + ‖V‖_F²)`, which agree
//! at the optimum whenever `k >= rank(L*)`. Combined with the smooth marginal
//! loss the objective is differentiable and needs no SVD per iteration.

mod factors;
mod init;
mod lbfgs;
mod objective;
mod solver;

pub use factors::FactorPair;
pub use init::{init_factors, InitStrategy};
pub use lbfgs::{lbfgs_minimize, IterationInfo, LbfgsConfig, Minimum};
pub use objective::{split_objective, SplitEval};
pub use solver::{solve_split_from, solve_split_spcp, RankGrowth, SolverConfig};
