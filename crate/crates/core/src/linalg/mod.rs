//! Dense matrices and the factorizations the solvers are built on.

mod matrix;
mod power;
mod qr;
mod rsvd;
mod svd;

pub use matrix::DenseMatrix;
pub use power::{leading_triple, LeadingTriple, LinearOperator, PowerParams};
pub use qr::thin_qr;
pub use rsvd::{rand_svd, RsvdParams};
pub use svd::{singular_values, svd_small, SvdTriplet};

pub(crate) use matrix::{axpy_slice, dot, norm};
pub(crate) use svd::numerical_rank;
