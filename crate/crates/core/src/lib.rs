//! Numerical laboratory for the pluriclosed flow.
//!
//! Metrics live either on periodic grids over flat complex tori
//! (`torus`) or as single matrices on Lie algebras with a complex structure
//! (`homogeneous`). `geometry` holds the Chern connection kernels shared by
//! both, `flow` integrates the evolution, and `monitors` checks evolution
//! identities and maximum-principle monotonicity along trajectories.

pub mod error;
pub mod flow;
pub mod geometry;
pub mod homogeneous;
pub mod linalg;
pub mod metric;
pub mod monitors;
pub mod tensor;
pub mod torus;

pub use error::{Error, Result};
pub use linalg::SmallMat;
pub use metric::HermitianMetricField;
pub use num_complex::Complex64 as C64;
pub use tensor::{ComplexTensorField, Signature, Slot};
