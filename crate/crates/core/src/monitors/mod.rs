//! Evolution-identity residuals and maximum-principle monitors.

pub mod identities;
pub mod quantities;
pub mod runs;
pub mod series;
pub mod suite;
pub mod upsilon;

pub use identities::{
    identity_terms, richardson, IdentityKind, IdentityRecorder, IdentityResidual, IdentitySpec, IdentityTerms,
    RichardsonOutcome,
};
pub use quantities::{ProbeValue, Trend};
pub use runs::{
    kahler_invariance, monitored_run, monitored_run_stepwise_gap, KahlerInvarianceConfig, KahlerInvarianceReport,
    MonitoredRun, StepwiseGap,
};
pub use series::{MonitorSeries, Verdict};
pub use suite::{maximum_principle_suite, MaxPrincipleRecorder, MonitorOptions};
pub use upsilon::{upsilon_norms, UpsilonNorms};
