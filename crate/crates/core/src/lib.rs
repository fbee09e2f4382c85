//! Three-variable Mahler measures and the weight-3 CM newform and Dirichlet
//! L-values they evaluate to.
//!
//! The crate computes each side of these identities by independent routes
//! (nome series, hypergeometric series, lattice sums, smoothed L-series,
//! torus integration) and certifies how many digits they share.

pub mod error;
pub mod hyper;
pub mod numkernel;
pub mod lattice;
pub mod lseries;
pub mod mahler;
pub mod qseries;
pub mod verify;

pub use error::{Error, Result};
pub use numkernel::{PrecisionContext, Real};
