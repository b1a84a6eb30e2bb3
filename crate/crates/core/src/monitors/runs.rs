//! Monitored flow runs: the standard non-Kähler run and the Kähler invariance run.

use serde::{Deserialize, Serialize};

use super::series::{MonitorSeries, Verdict};
use super::suite::{cyclic_system, torsion_decay_rate, violated_series, MaxPrincipleRecorder, MonitorOptions};
use crate::error::{Error, Result};
use crate::flow::rhs::formulation_gap;
use crate::flow::{run, FlowState, FlowSystem, IntegratorConfig, Observer, RunOutcome, ADJOINT_SIGN};
use crate::tensor::{ComplexTensorField, Slot};
use crate::torus::{make_kahler_initial, GridSpec, RealTerm, SpectralDiff};

/// Outcome of a run observed by a [`MaxPrincipleRecorder`].
#[derive(Clone, Debug)]
pub struct MonitoredRun {
    pub outcome: RunOutcome,
    pub series: Vec<MonitorSeries>,
    pub violations: Vec<(String, Verdict)>,
    pub torsion_rate: Option<f64>,
}

impl MonitoredRun {
    pub fn series(&self, name: &str) -> Option<&MonitorSeries> {
        self.series.iter().find(|s| s.name == name)
    }

    /// Last sample of a series.
    pub fn last(&self, name: &str) -> Option<f64> {
        self.series(name)?.last()
    }
}

/// Runs the flow with the maximum-principle recorder and an optional extra observer.
pub fn monitored_run(
    sys: &FlowSystem,
    init: FlowState,
    cfg: &IntegratorConfig,
    opts: MonitorOptions,
    extra: Option<&mut dyn Observer>,
) -> Result<MonitoredRun> {
    let mut rec = MaxPrincipleRecorder::new(opts);
    let outcome = match extra {
        Some(o) => {
            let mut both = |s: &FlowSystem, st: &FlowState| {
                rec.observe(s, st)?;
                o.observe(s, st)
            };
            run(sys, init, cfg, &mut both)?
        }
        None => run(sys, init, cfg, &mut rec)?,
    };
    let series = rec.finish();
    let violations = violated_series(&series);
    let torsion_rate = torsion_decay_rate(&series);
    Ok(MonitoredRun { outcome, series, violations, torsion_rate })
}

/// Largest formulation gap over the accepted steps of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepwiseGap {
    pub worst: f64,
    pub steps_checked: usize,
}

/// [`monitored_run`] that also evaluates the formulation gap after every
/// accepted step; the other series are recorded every `cfg.sample_every` steps.
pub fn monitored_run_stepwise_gap(
    sys: &FlowSystem,
    init: FlowState,
    cfg: &IntegratorConfig,
    opts: MonitorOptions,
) -> Result<(MonitoredRun, StepwiseGap)> {
    let every = cfg.sample_every.max(1);
    let mut rec = MaxPrincipleRecorder::new(opts);
    let mut gap = StepwiseGap::default();
    let mut recorded = None;
    let mut obs = |s: &FlowSystem, st: &FlowState| {
        gap.worst = gap.worst.max(formulation_gap(st.g(), &s.d, ADJOINT_SIGN)?);
        gap.steps_checked += 1;
        if st.steps % every == 0 {
            rec.observe(s, st)?;
            recorded = Some(st.steps);
        }
        Ok(())
    };
    let outcome = run(sys, init, &IntegratorConfig { sample_every: 1, ..cfg.clone() }, &mut obs)?;
    if recorded != Some(outcome.final_state.steps) {
        rec.observe(sys, &outcome.final_state)?;
    }
    let series = rec.finish();
    let violations = violated_series(&series);
    let torsion_rate = torsion_decay_rate(&series);
    Ok((MonitoredRun { outcome, series, violations, torsion_rate }, gap))
}

/// `n = 2`, `N = 12`, `eps = 0.05` cyclic potential, dealiased.
pub fn standard_system() -> Result<FlowSystem> {
    cyclic_system(2, 12, 0.05, true)
}

/// CFL-limited RK4 with step rejection, stopping at `sup |-S + Q| < 1e-6`.
pub fn standard_integrator() -> IntegratorConfig {
    IntegratorConfig { dt: 1e-2, t_max: 3.0, stop_tol: Some(1e-6), sample_every: 20, ..IntegratorConfig::default() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KahlerInvarianceConfig {
    pub points: usize,
    pub dealias: bool,
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
    /// Kähler potential `f` with `g = flat + i d dbar f`.
    pub potential: Vec<RealTerm>,
}

impl Default for KahlerInvarianceConfig {
    fn default() -> Self {
        let term = |k: [i64; 4], cos: f64, sin: f64| RealTerm { wavevector: k.to_vec(), cos, sin };
        Self {
            points: 12,
            dealias: true,
            dt: 1e-3,
            t_end: 0.1,
            sample_every: 20,
            potential: vec![term([1, 0, 0, 0], 0.01, 0.0), term([0, 0, 1, 1], 0.0, 0.008), term([1, 0, 1, 0], 0.005, 0.0)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KahlerInvarianceReport {
    pub times: Vec<f64>,
    /// `sup |T|` at each sample.
    pub torsion_sup: Vec<f64>,
    /// `sup |g_dt - g_{dt/2}|`.
    pub time_error: Vec<f64>,
    /// Largest spectral tail amplitude over the metric components.
    pub space_error: Vec<f64>,
    /// `max_t sup|T| / (time_error + space_error)`.
    pub worst_ratio: f64,
    pub passed: bool,
}

/// Ratio bound between torsion and the integration-error estimate.
pub const KAHLER_ERROR_FACTOR: f64 = 10.0;

fn kahler_system(cfg: &KahlerInvarianceConfig) -> Result<FlowSystem> {
    let grid = GridSpec::new(2, cfg.points)?;
    let d = SpectralDiff::new(&grid).with_dealias(cfg.dealias);
    let g0 = make_kahler_initial(&cfg.potential, &d)?;
    let eta = ComplexTensorField::zeros(2, grid.len(), vec![Slot::Down, Slot::Down])?;
    Ok(FlowSystem::new(d, g0, eta))
}

/// Runs Kähler initial data at `dt` and `dt / 2` and compares `sup |T|` with
/// the error estimate at every sample of the coarse run.
pub fn kahler_invariance(cfg: &KahlerInvarianceConfig) -> Result<KahlerInvarianceReport> {
    let sys = kahler_system(cfg)?;
    let icfg = |dt: f64, every: usize| IntegratorConfig {
        dt,
        t_max: cfg.t_end,
        sample_every: every,
        enforce_cfl: false,
        step_rejection: false,
        ..IntegratorConfig::default()
    };
    let init = sys.initial_state(vec![])?;
    if cfg.dt > sys.cfl_bound(&init, 0.5) {
        return Err(Error::Invalid(format!("Kähler run step {} exceeds the stability bound", cfg.dt)));
    }
    let mut fine = Vec::new();
    let mut keep = |_: &FlowSystem, s: &FlowState| {
        fine.push((s.t, s.g().as_tensor().clone()));
        Ok(())
    };
    run(&sys, init.clone(), &icfg(cfg.dt / 2.0, 2 * cfg.sample_every), &mut keep)?;
    let mut rep = KahlerInvarianceReport {
        times: vec![],
        torsion_sup: vec![],
        time_error: vec![],
        space_error: vec![],
        worst_ratio: 0.0,
        passed: true,
    };
    let n2 = 4;
    let mut compare = |sy: &FlowSystem, s: &FlowState| {
        let gf = fine
            .iter()
            .find(|(t, _)| (t - s.t).abs() < 1e-9)
            .map(|(_, g)| g)
            .ok_or_else(|| Error::Invalid(format!("no companion sample at t = {}", s.t)))?;
        let tsup = s.geometry.torsion_norm_sq().iter().copied().fold(0.0, f64::max).sqrt();
        let e_time = s.g().as_tensor().max_abs_diff(gf)?;
        let e_space = (0..n2).map(|c| sy.d.tail_amplitude(s.g().as_tensor().component(c))).fold(0.0, f64::max);
        rep.times.push(s.t);
        rep.torsion_sup.push(tsup);
        rep.time_error.push(e_time);
        rep.space_error.push(e_space);
        Ok(())
    };
    run(&sys, init, &icfg(cfg.dt, cfg.sample_every), &mut compare)?;
    for k in 0..rep.times.len() {
        let e = rep.time_error[k] + rep.space_error[k];
        let ratio = if e > 0.0 { rep.torsion_sup[k] / e } else if rep.torsion_sup[k] == 0.0 { 0.0 } else { f64::INFINITY };
        rep.worst_ratio = rep.worst_ratio.max(ratio);
    }
    rep.passed = rep.worst_ratio < KAHLER_ERROR_FACTOR;
    Ok(rep)
}
