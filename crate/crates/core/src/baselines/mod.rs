//! SVD-based reference solvers for the convex problem
//! `min_L λ_L‖L‖_* + φ(L)`.

mod frank_wolfe;
mod prox;

pub use frank_wolfe::{fw_step, solve_frank_wolfe, FwConfig, FwState, FwStep};
pub use prox::{solve_convex_prox, svt, svt_svd, ProxConfig};
