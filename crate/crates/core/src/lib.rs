//! Dense-tensor CP decomposition toolkit built around parallel rank-one
//! updates (PARO), with four best rank-1 tensor approximation solvers:
//! ALS/HOOI, a Levenberg-Marquardt variant with a polynomial-optimal step
//! (R1LM), a rotational algorithm (RORO), and closed forms for tensors of
//! size 2x2x2 and 2x2x2x2.
//!
//! All tensors are dense, double precision, and stored column-major
//! (first index fastest), so that `vec` / Khatri-Rao identities hold
//! entrywise.

pub mod error;
pub mod exec;
pub mod experiments;
pub mod generators;
pub mod kruskal;
pub mod linalg;
pub mod paro;
pub mod poly;
pub mod quant;
pub mod rank1;
pub mod rng;
pub mod roro;
pub mod tensor;

pub use error::{Error, Result};
pub use exec::Execution;
pub use kruskal::KruskalModel;
pub use rank1::Rank1Model;
pub use tensor::{DenseTensor, Matrix};
