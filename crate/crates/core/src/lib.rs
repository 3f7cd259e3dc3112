//! Distributed sparse matrix power kernels over an in-process rank runtime.
//!
//! Three algorithms compute `y_p = A^p x` for `p = 1..=p_m` on a row-wise
//! distributed matrix: back-to-back SpMVs with one halo exchange per power
//! ([`mpk::trad_mpk`]), a communication-avoiding variant that replicates
//! remote rows and recomputes them ([`mpk::ca_mpk`]), and the level-blocked
//! kernel ([`mpk::dlb_mpk`]) that cache-blocks the rank-local bulk with a
//! BFS-level wavefront while exchanging exactly the same halos as the
//! traditional kernel.

pub mod bsp;
pub mod chebyshev;
pub mod error;
pub mod leveling;
pub mod mpk;
pub mod partition;
pub mod perf;
pub mod scalar;
pub mod sparse;

pub use error::{MpkError, Result};
pub use scalar::{Complex64, Scalar};
pub use sparse::CrsMatrix;
