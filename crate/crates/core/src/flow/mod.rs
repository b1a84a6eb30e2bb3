//! Time integration of the flow `dg/dt = -S + Q` jointly with its reduced potential.

pub mod existence;
pub mod integrator;
pub mod rhs;

pub use existence::{formal_existence_time, Background, DegenerationEvent, ExistenceRecord, ExistenceTime};
pub use integrator::{run, FlowState, FlowSystem, FlowVars, IntegratorConfig, Observer, RunOutcome, RunStatus};
pub use rhs::{alpha_rhs, calibrate_adjoint_sign, pcf_rhs, pcf_rhs_hodge, pcf_rhs_hodge_with, ADJOINT_SIGN};
