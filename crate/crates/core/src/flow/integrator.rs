//! Classical RK4 over the joint system (metric, potential, auxiliary fields).

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::existence::{DegenerationEvent, ExistenceRecord};
use super::rhs::alpha_rhs;
use crate::error::{Error, Result};
use crate::geometry::{chern_laplacian, FieldGeometry};
use crate::metric::HermitianMetricField;
use crate::monitors::quantities::{monotone_probe, ProbeValue};
use crate::tensor::ComplexTensorField;
use crate::torus::initial::metric_from_potential;
use crate::torus::{DerivativeOperator, SpectralDiff};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    /// Requested step.
    pub dt: f64,
    /// Safety factor `c` in `dt <= c h^2 / max lambda_max(g^{-1})`.
    pub c_safety: f64,
    /// Clamp the step to the parabolic bound above.
    pub enforce_cfl: bool,
    pub t_max: f64,
    /// Stop once `sup |-S + Q|` drops below this value.
    pub stop_tol: Option<f64>,
    pub max_steps: usize,
    /// Halve and retry steps that lose positivity or regress a monotone quantity.
    pub step_rejection: bool,
    pub max_halvings: u32,
    /// Observer cadence in accepted steps.
    pub sample_every: usize,
    /// Monotonicity slack per step, multiplied by `1 + sup |-S + Q|`.
    pub slack_per_step: f64,
    /// Tensor power of the sections used by the monotone probe.
    pub section_power: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            c_safety: 0.2,
            enforce_cfl: true,
            t_max: 1.0,
            stop_tol: None,
            max_steps: usize::MAX,
            step_rejection: true,
            max_halvings: 6,
            sample_every: 10,
            slack_per_step: 1e-7,
            section_power: 1,
        }
    }
}

/// Fixed data of one flow problem.
pub struct FlowSystem {
    pub d: SpectralDiff,
    /// Background form (the initial metric); the potential is measured from it.
    pub background: HermitianMetricField,
    /// `(2,0)`-form with `d omega_0 = dbar eta`.
    pub eta: ComplexTensorField,
    /// Constant forcing of each auxiliary field.
    pub forcing: Vec<ComplexTensorField>,
}

/// Evolving variables.
#[derive(Clone, Debug)]
pub struct FlowVars {
    pub g: ComplexTensorField,
    pub alpha: ComplexTensorField,
    pub aux: Vec<ComplexTensorField>,
}

impl FlowVars {
    fn axpy(&self, k: &FlowVars, h: f64) -> Result<FlowVars> {
        let s = C64::new(h, 0.0);
        let mut out = self.clone();
        out.g.add_scaled(&k.g, s)?;
        out.alpha.add_scaled(&k.alpha, s)?;
        for (a, b) in out.aux.iter_mut().zip(&k.aux) {
            a.add_scaled(b, s)?;
        }
        Ok(out)
    }

    fn is_finite(&self) -> bool {
        self.g.is_finite() && self.alpha.is_finite() && self.aux.iter().all(|a| a.is_finite())
    }
}

/// Time, variables and the cached right side at the current variables.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub steps: usize,
    pub vars: FlowVars,
    pub metric: HermitianMetricField,
    pub geometry: FieldGeometry,
    rate: FlowVars,
    pub last_dt: f64,
    /// Accumulated monotonicity slack.
    pub slack: f64,
    pub rejections: usize,
}

impl FlowState {
    pub fn g(&self) -> &HermitianMetricField {
        &self.metric
    }

    pub fn alpha(&self) -> &ComplexTensorField {
        &self.vars.alpha
    }

    pub fn aux(&self) -> &[ComplexTensorField] {
        &self.vars.aux
    }

    /// Time derivative of the variables at the current state.
    pub fn rate(&self) -> &FlowVars {
        &self.rate
    }

    /// `sup |-S + Q|`.
    pub fn rhs_norm(&self) -> f64 {
        self.rate.g.max_abs()
    }
}

fn dealias_field(d: &dyn DerivativeOperator, f: &mut ComplexTensorField) {
    for c in 0..f.ncomp() {
        d.dealias(f.component_mut(c));
    }
}

impl FlowSystem {
    pub fn new(d: SpectralDiff, background: HermitianMetricField, eta: ComplexTensorField) -> Self {
        Self { d, background, eta, forcing: vec![] }
    }

    pub fn with_forcing(mut self, forcing: Vec<ComplexTensorField>) -> Self {
        self.forcing = forcing;
        self
    }

    /// Metric of the reduced flow, `background + dbar alpha + d alphabar`.
    pub fn potential_metric(&self, alpha: &ComplexTensorField) -> Result<HermitianMetricField> {
        metric_from_potential(&self.background, alpha, &self.d)
    }

    /// Joint right side and the geometry of the metric it was evaluated at.
    pub fn rhs(&self, vars: &FlowVars) -> Result<(FlowVars, HermitianMetricField, FieldGeometry)> {
        let g = HermitianMetricField::from_tensor(vars.g.clone())?;
        let geo = FieldGeometry::compute(&g, &self.d, false)?;
        let mut gdot = geo.flow_rhs();
        dealias_field(&self.d, &mut gdot);
        let ga = self.potential_metric(&vars.alpha)?;
        let mut adot = alpha_rhs(&ga, &self.d)?;
        dealias_field(&self.d, &mut adot);
        let mut aux = Vec::with_capacity(vars.aux.len());
        for (b, mu) in vars.aux.iter().zip(&self.forcing) {
            let mut r = chern_laplacian(b, &geo.connection.gamma, &geo.ginv, &self.d)?;
            r.add_scaled(mu, C64::new(1.0, 0.0))?;
            dealias_field(&self.d, &mut r);
            aux.push(r);
        }
        Ok((FlowVars { g: gdot, alpha: adot, aux }, g, geo))
    }

    /// State at `t = 0` with zero potential and the given auxiliary fields.
    pub fn initial_state(&self, aux: Vec<ComplexTensorField>) -> Result<FlowState> {
        if aux.len() != self.forcing.len() {
            return Err(Error::Invalid(format!("{} auxiliary fields but {} forcings", aux.len(), self.forcing.len())));
        }
        let alpha = crate::torus::PotentialForm::zero(self.d.grid()).into_field();
        let vars = FlowVars { g: self.background.as_tensor().clone(), alpha, aux };
        let (rate, metric, geometry) = self.rhs(&vars)?;
        Ok(FlowState { t: 0.0, steps: 0, vars, metric, geometry, rate, last_dt: 0.0, slack: 0.0, rejections: 0 })
    }

    /// Largest step allowed by the parabolic bound at the current metric.
    pub fn cfl_bound(&self, state: &FlowState, c_safety: f64) -> f64 {
        let h = self.d.grid().spacing();
        c_safety * h * h * state.metric.min_eigenvalue().0
    }

    /// One RK4 step of size `dt` without any acceptance logic.
    pub fn rk4(&self, state: &FlowState, dt: f64) -> Result<FlowState> {
        let y = &state.vars;
        let k1 = &state.rate;
        let (k2, _, _) = self.rhs(&y.axpy(k1, dt / 2.0)?)?;
        let (k3, _, _) = self.rhs(&y.axpy(&k2, dt / 2.0)?)?;
        let (k4, _, _) = self.rhs(&y.axpy(&k3, dt)?)?;
        let mut next = y.axpy(k1, dt / 6.0)?;
        next = next.axpy(&k2, dt / 3.0)?;
        next = next.axpy(&k3, dt / 3.0)?;
        next = next.axpy(&k4, dt / 6.0)?;
        if !next.is_finite() {
            return Err(Error::NonFinite { t: state.t + dt });
        }
        let (rate, metric, geometry) = self.rhs(&next)?;
        Ok(FlowState {
            t: state.t + dt,
            steps: state.steps + 1,
            vars: next,
            metric,
            geometry,
            rate,
            last_dt: dt,
            slack: state.slack,
            rejections: state.rejections,
        })
    }

    pub fn probe(&self, state: &FlowState, section_power: usize) -> Result<Vec<ProbeValue>> {
        monotone_probe(self, state, section_power)
    }
}

/// Receives the state at every sample time.
pub trait Observer {
    fn observe(&mut self, sys: &FlowSystem, state: &FlowState) -> Result<()>;
}

impl<F: FnMut(&FlowSystem, &FlowState) -> Result<()>> Observer for F {
    fn observe(&mut self, sys: &FlowSystem, state: &FlowState) -> Result<()> {
        self(sys, state)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    ReachedTimeLimit,
    ReachedStepLimit,
    Degenerated,
    NonFinite,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub final_state: FlowState,
    pub existence: ExistenceRecord,
    pub steps: usize,
    pub rejections: usize,
}

fn regressed(before: &[ProbeValue], after: &[ProbeValue], slack: f64) -> bool {
    before.iter().zip(after).any(|(b, a)| b.regression_to(a) > slack)
}

/// Integrates until the time limit, step limit, or convergence criterion.
///
/// The observer sees the initial state, every `sample_every`-th accepted
/// state and the final state.
pub fn run(sys: &FlowSystem, initial: FlowState, cfg: &IntegratorConfig, obs: &mut dyn Observer) -> Result<RunOutcome> {
    if !(cfg.dt > 0.0) || cfg.sample_every == 0 {
        return Err(Error::Invalid("dt must be positive and sample_every at least 1".into()));
    }
    let mut existence = ExistenceRecord::torus();
    let mut state = initial;
    obs.observe(sys, &state)?;
    let mut last_observed = state.steps;
    let mut probe = sys.probe(&state, cfg.section_power)?;
    let status = loop {
        if let Some(tol) = cfg.stop_tol {
            if state.rhs_norm() < tol {
                break RunStatus::Converged;
            }
        }
        let remaining = cfg.t_max - state.t;
        if remaining <= 1e-9 * cfg.dt {
            break RunStatus::ReachedTimeLimit;
        }
        if state.steps >= cfg.max_steps {
            break RunStatus::ReachedStepLimit;
        }
        let mut dt = cfg.dt.min(remaining);
        if cfg.enforce_cfl {
            dt = dt.min(sys.cfl_bound(&state, cfg.c_safety));
        }
        let slack = cfg.slack_per_step * (1.0 + state.rhs_norm());
        let mut halvings = 0;
        let accepted = loop {
            let attempt = sys.rk4(&state, dt).and_then(|s| {
                let p = sys.probe(&s, cfg.section_power)?;
                Ok((s, p))
            });
            let retry = halvings < cfg.max_halvings && cfg.step_rejection;
            match attempt {
                Ok((s, p)) => {
                    if retry && regressed(&probe, &p, slack) {
                        state.rejections += 1;
                        halvings += 1;
                        dt /= 2.0;
                        continue;
                    }
                    break Ok((s, p));
                }
                Err(e @ (Error::DegenerateMetric { .. } | Error::NonFinite { .. })) => {
                    if retry {
                        state.rejections += 1;
                        halvings += 1;
                        dt /= 2.0;
                        continue;
                    }
                    break Err(e);
                }
                Err(e) => return Err(e),
            }
        };
        match accepted {
            Ok((mut s, p)) => {
                s.slack = state.slack + slack;
                s.rejections = state.rejections;
                state = s;
                probe = p;
                if state.steps % cfg.sample_every == 0 {
                    obs.observe(sys, &state)?;
                    last_observed = state.steps;
                }
            }
            Err(Error::DegenerateMetric { point, min_eigenvalue }) => {
                existence.events.push(DegenerationEvent { t: state.t + dt, point: Some(point), min_eigenvalue });
                break RunStatus::Degenerated;
            }
            Err(Error::NonFinite { t }) => {
                existence.events.push(DegenerationEvent { t, point: None, min_eigenvalue: f64::NAN });
                break RunStatus::NonFinite;
            }
            Err(e) => return Err(e),
        }
    };
    if last_observed != state.steps {
        obs.observe(sys, &state)?;
    }
    let steps = state.steps;
    let rejections = state.rejections;
    Ok(RunOutcome { status, final_state: state, existence, steps, rejections })
}
