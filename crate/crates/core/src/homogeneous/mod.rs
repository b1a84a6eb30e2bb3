//! Left-invariant Hermitian metrics on Lie groups.
//!
//! An invariant metric is a single Hermitian matrix in a frame of `(1,0)`
//! vectors, so the flow reduces to an ODE and all geometry is algebraic.

pub mod algebra;
pub mod catalog;
pub mod forms;
pub mod geometry;
pub mod ode;
pub mod scan;

pub use algebra::{ComplexBrackets, ComplexFrame, LieAlgebraSpec};
pub use forms::{skt_residual, torsion_from_forms, SktQuadraticForm};
pub use geometry::{invariant_geometry, real_metric, HomogeneousSpace, InvariantGeometry};
pub use ode::{ode_flow, OdeConfig, OdeSample, OdeTrajectory};
pub use scan::{skt_residual_scan, ScanConfig, ScanResult};
