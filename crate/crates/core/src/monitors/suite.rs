//! Standard torus runs: the identity suite and the maximum-principle monitors.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::identities::{richardson, IdentityKind, IdentityRecorder, IdentityResidual, IdentitySpec, RichardsonOutcome};
use super::quantities::{det_ratio, phi_norm_sq, Trend, SECTION_FLOOR};
use super::series::{MonitorSeries, Verdict};
use super::upsilon::upsilon_norms;
use crate::error::{Error, Result};
use crate::flow::rhs::formulation_gap;
use crate::flow::{run, FlowState, FlowSystem, IntegratorConfig, Observer, RunStatus, ADJOINT_SIGN};
use crate::geometry::{pluriclosed_residual, tensor_norm_sq};
use crate::linalg::SmallMat;
use crate::metric::HermitianMetricField;
use crate::tensor::{ComplexTensorField, Slot};
use crate::torus::{
    holomorphic_frame_sections, make_pluriclosed_initial, sup_inf_scan, DerivativeOperator, FourierTerm, GridSpec,
    PotentialForm, SpectralDiff, Variance,
};

/// `alpha_i = eps * exp(2 pi i x^{i+1})` (indices mod `n`, `x^j` the real part of `z^j`).
///
/// Its perturbation is non-Kähler for `n >= 2`.
pub fn cyclic_potential(grid: &GridSpec, eps: f64) -> Result<PotentialForm> {
    let n = grid.n();
    let terms = (0..n)
        .map(|i| {
            let mut k = vec![0; 2 * n];
            k[2 * ((i + 1) % n)] = 1;
            FourierTerm { component: i, wavevector: k, amplitude: [eps, 0.0] }
        })
        .collect();
    PotentialForm::from_terms(grid, terms)
}

/// Flow system started from [`cyclic_potential`].
pub fn cyclic_system(n: usize, points: usize, eps: f64, dealias: bool) -> Result<FlowSystem> {
    let grid = GridSpec::new(n, points)?;
    let d = SpectralDiff::new(&grid).with_dealias(dealias);
    let alpha0 = cyclic_potential(&grid, eps)?;
    let (g0, eta) = make_pluriclosed_initial(&alpha0, &d)?;
    Ok(FlowSystem::new(d, g0, eta))
}

/// Which section identity gets its `Q` term reversed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipTarget {
    Covariant,
    Contravariant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitySuiteConfig {
    pub n: usize,
    pub points: usize,
    pub epsilon: f64,
    /// Coarse step; the fine run uses half of it.
    pub dt: f64,
    /// Steps between samples in both runs.
    pub sample_every: usize,
    pub t_end: f64,
    pub dealias: bool,
    /// Admissible negative margin for the accompanying inequalities.
    pub margin_tol: f64,
    pub flip: Option<FlipTarget>,
    /// Also evaluate `Q`-flipped copies of the covariant and contravariant
    /// checks, with ids suffixed by [`FLIPPED_SUFFIX`].
    pub mutants: bool,
}

pub const FLIPPED_SUFFIX: &str = "_q_flipped";

impl Default for IdentitySuiteConfig {
    fn default() -> Self {
        Self {
            n: 2,
            points: 12,
            epsilon: 0.05,
            dt: 1e-3,
            sample_every: 4,
            t_end: 0.1,
            dealias: true,
            margin_tol: 1e-8,
            flip: None,
            mutants: false,
        }
    }
}

fn constant(n: usize, npts: usize, slot: Slot, comps: &[C64]) -> Result<ComplexTensorField> {
    ComplexTensorField::constant(n, npts, vec![slot], comps)
}

/// Non-holomorphic start `e_1 + 0.1 exp(2 pi i x^1) e_2` for the forced fields.
fn forced_start(grid: &GridSpec, slot: Slot) -> Result<ComplexTensorField> {
    let n = grid.n();
    let mut f = ComplexTensorField::zeros(n, grid.len(), vec![slot])?;
    let wave = grid.sample(|x| C64::from_polar(0.1, 2.0 * std::f64::consts::PI * x[0]));
    for (p, w) in wave.into_iter().enumerate() {
        f.component_mut(0)[p] = C64::new(1.0, 0.0);
        if n > 1 {
            f.component_mut(1)[p] = w;
        }
    }
    Ok(f)
}

/// Identity checks run by the suite, and the auxiliary fields and forcings they need.
pub fn standard_identity_specs(
    grid: &GridSpec,
    flip: Option<FlipTarget>,
) -> Result<(Vec<IdentitySpec>, Vec<ComplexTensorField>, Vec<ComplexTensorField>)> {
    let n = grid.n();
    let npts = grid.len();
    let co1 = holomorphic_frame_sections(grid, Variance::Co, 1)?.remove(0);
    let co2 = holomorphic_frame_sections(grid, Variance::Co, 2)?.remove(if n > 1 { 1 } else { 0 });
    let contra1 = holomorphic_frame_sections(grid, Variance::Contra, 1)?.remove(0);
    let cov = flip == Some(FlipTarget::Covariant);
    let con = flip == Some(FlipTarget::Contravariant);
    let mut specs = vec![
        IdentitySpec::new("covariant_section_p1", IdentityKind::CovariantSection, Some(co1)),
        IdentitySpec::new("covariant_section_p2", IdentityKind::CovariantSection, Some(co2)),
        IdentitySpec::new("contravariant_tensor", IdentityKind::ContravariantTensor, Some(contra1.clone())),
        IdentitySpec::new("contravariant_log", IdentityKind::ContravariantLog, Some(contra1)),
        IdentitySpec::new("forced_covariant", IdentityKind::ForcedParabolic { aux: 0 }, None),
        IdentitySpec::new("forced_contravariant", IdentityKind::ForcedParabolic { aux: 1 }, None),
        IdentitySpec::new("log_det", IdentityKind::LogDet, None),
        IdentitySpec::new("phi", IdentityKind::Phi, None),
    ];
    for s in &mut specs {
        s.flip_q_sign = match s.kind {
            IdentityKind::CovariantSection => cov,
            IdentityKind::ContravariantTensor => con,
            _ => false,
        };
    }
    let aux = vec![forced_start(grid, Slot::Down)?, forced_start(grid, Slot::Up)?];
    let mut mu = vec![C64::new(0.0, 0.0); n];
    mu[0] = C64::new(0.3, 0.2);
    let forcing = vec![constant(n, npts, Slot::Down, &mu)?, constant(n, npts, Slot::Up, &mu)?];
    Ok((specs, aux, forcing))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentitySuiteReport {
    pub outcomes: Vec<RichardsonOutcome>,
    pub coarse: Vec<IdentityResidual>,
    pub fine: Vec<IdentityResidual>,
}

impl IdentitySuiteReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn outcome(&self, id: &str) -> Option<&RichardsonOutcome> {
        self.outcomes.iter().find(|o| o.id == id)
    }
}

fn identity_run(cfg: &IdentitySuiteConfig, dt: f64) -> Result<Vec<IdentityResidual>> {
    let sys = cyclic_system(cfg.n, cfg.points, cfg.epsilon, cfg.dealias)?;
    let (mut specs, aux, forcing) = standard_identity_specs(sys.d.grid(), cfg.flip)?;
    if cfg.mutants {
        let flipped: Vec<IdentitySpec> = specs
            .iter()
            .filter(|s| matches!(s.kind, IdentityKind::CovariantSection | IdentityKind::ContravariantTensor))
            .map(|s| {
                let mut m = s.clone();
                m.id = format!("{}{FLIPPED_SUFFIX}", s.id);
                m.flip_q_sign = !s.flip_q_sign;
                m
            })
            .collect();
        specs.extend(flipped);
    }
    let sys = sys.with_forcing(forcing);
    let init = sys.initial_state(aux)?;
    let icfg = IntegratorConfig {
        dt,
        enforce_cfl: false,
        t_max: cfg.t_end,
        step_rejection: false,
        sample_every: cfg.sample_every,
        ..IntegratorConfig::default()
    };
    if dt > sys.cfl_bound(&init, 0.5) {
        return Err(Error::Invalid(format!("identity step {dt} exceeds the stability bound")));
    }
    let mut rec = IdentityRecorder::new(specs);
    let out = run(&sys, init, &icfg, &mut rec)?;
    if out.status != RunStatus::ReachedTimeLimit {
        return Err(Error::Invalid(format!("identity run ended with {:?}", out.status)));
    }
    Ok(rec.finish())
}

/// Runs the standard flow at `dt` and `dt / 2` and compares identity residuals.
pub fn run_identity_suite(cfg: &IdentitySuiteConfig) -> Result<IdentitySuiteReport> {
    let coarse = identity_run(cfg, cfg.dt)?;
    let fine = identity_run(cfg, cfg.dt / 2.0)?;
    let outcomes = coarse.iter().zip(&fine).map(|(c, f)| richardson(c, f, cfg.margin_tol)).collect();
    Ok(IdentitySuiteReport { outcomes, coarse, fine })
}

/// What the maximum-principle recorder evaluates besides the monotone quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorOptions {
    /// Tensor power `p` of the section bundles.
    pub section_power: usize,
    /// Gap between the tensor and form right sides.
    pub formulation_gap: bool,
    pub pluriclosed_residual: bool,
    /// Connection difference to the flat background.
    pub upsilon: bool,
}

impl Default for MonitorOptions {
    fn default() -> Self {
        Self { section_power: 1, formulation_gap: true, pluriclosed_residual: true, upsilon: true }
    }
}

/// Relative violation of the eigenvalue bounds reconstructed from section norms:
/// `1 / sum_i |dz^i|^2 <= lambda_min <= 1 / max_i |dz^i|^2` and
/// `max_i |d/dz^i|^2 <= lambda_max <= sum_i |d/dz^i|^2`.
pub fn sandwich_defect(g: &HermitianMetricField, ginv: &[SmallMat]) -> f64 {
    let n = g.n();
    let mut worst = 0.0f64;
    for (p, gi) in ginv.iter().enumerate() {
        let m = g.at(p);
        let ev = m.hermitian_eigenvalues();
        let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let co: Vec<f64> = (0..n).map(|i| gi[(i, i)].re).collect();
        let contra: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum = |v: &[f64]| v.iter().sum::<f64>();
        let checks = [
            (1.0 / sum(&co) - lo) / lo,
            (lo - 1.0 / max(&co)) / lo,
            (max(&contra) - hi) / hi,
            (hi - sum(&contra)) / hi,
        ];
        worst = checks.iter().copied().fold(worst, f64::max);
    }
    worst
}

fn section_label(mut c: usize, n: usize, p: usize) -> String {
    let mut idx = vec![0; p];
    for k in (0..p).rev() {
        idx[k] = c % n + 1;
        c /= n;
    }
    idx.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("")
}

/// Observer recording every maximum-principle quantity at each sample.
pub struct MaxPrincipleRecorder {
    opts: MonitorOptions,
    series: Vec<MonitorSeries>,
    flat: Option<HermitianMetricField>,
}

impl MaxPrincipleRecorder {
    pub fn new(opts: MonitorOptions) -> Self {
        Self { opts, series: vec![], flat: None }
    }

    pub fn series(&self) -> &[MonitorSeries] {
        &self.series
    }

    pub fn finish(self) -> Vec<MonitorSeries> {
        self.series
    }

    fn push(&mut self, k: &mut usize, name: impl Into<String>, trend: Trend, t: f64, v: f64, slack: f64) {
        if self.series.len() == *k {
            self.series.push(MonitorSeries::new(name, trend));
        }
        self.series[*k].push(t, v, slack);
        *k += 1;
    }
}

impl Observer for MaxPrincipleRecorder {
    fn observe(&mut self, sys: &FlowSystem, state: &FlowState) -> Result<()> {
        let n = state.g().n();
        let p = self.opts.section_power;
        let (t, sl) = (state.t, state.slack);
        let geo = &state.geometry;
        let sup = |v: &[f64]| sup_inf_scan(v).0;
        let mut k = 0;
        let phi_sq = phi_norm_sq(sys, state)?;
        for (c, sec) in holomorphic_frame_sections(sys.d.grid(), Variance::Co, p)?.iter().enumerate() {
            let v = sup(&tensor_norm_sq(sec, state.g(), &geo.ginv)?);
            self.push(&mut k, format!("sup_coframe_norm_{}", section_label(c, n, p)), Trend::NonIncreasing, t, v, sl);
        }
        for (c, sec) in holomorphic_frame_sections(sys.d.grid(), Variance::Contra, p)?.iter().enumerate() {
            let norm = tensor_norm_sq(sec, state.g(), &geo.ginv)?;
            let phi: Vec<f64> = norm
                .iter()
                .zip(&phi_sq)
                .map(|(&s, &f)| if s > SECTION_FLOOR { s.ln() + p as f64 * f } else { f64::NEG_INFINITY })
                .collect();
            self.push(&mut k, format!("sup_Phi_{}", section_label(c, n, p)), Trend::NonIncreasing, t, sup(&phi), sl);
        }
        self.push(&mut k, "inf_det_ratio", Trend::NonDecreasing, t, sup_inf_scan(&det_ratio(state)).2, sl);
        self.push(&mut k, "sup_phi_sq", Trend::NonIncreasing, t, sup(&phi_sq), sl);
        self.push(&mut k, "sup_torsion_sq", Trend::Free, t, sup(&geo.torsion_norm_sq()), sl);
        self.push(&mut k, "rhs_norm", Trend::Free, t, state.rhs_norm(), sl);
        self.push(&mut k, "rho_norm", Trend::Free, t, geo.rho.max_abs(), sl);
        let ga = sys.potential_metric(state.alpha())?;
        let cons = state.g().as_tensor().max_abs_diff(ga.as_tensor())?;
        self.push(&mut k, "consistency_residual", Trend::Free, t, cons, sl);
        self.push(&mut k, "min_eigenvalue", Trend::Free, t, state.metric.min_eigenvalue().0, sl);
        self.push(&mut k, "max_eigenvalue", Trend::Free, t, state.metric.max_eigenvalue(), sl);
        self.push(&mut k, "sandwich_defect", Trend::Free, t, sandwich_defect(state.g(), &geo.ginv), sl);
        if self.opts.formulation_gap {
            let v = formulation_gap(state.g(), &sys.d, ADJOINT_SIGN)?;
            self.push(&mut k, "formulation_gap", Trend::Free, t, v, sl);
        }
        if self.opts.pluriclosed_residual {
            let v = pluriclosed_residual(state.g(), &sys.d)?;
            self.push(&mut k, "pluriclosed_residual", Trend::Free, t, v, sl);
        }
        if self.opts.upsilon {
            let flat = self.flat.get_or_insert_with(|| HermitianMetricField::flat(n, state.g().npts())).clone();
            let u = upsilon_norms(state.g(), &flat, &sys.d)?;
            self.push(&mut k, "upsilon_norm", Trend::Free, t, u.upsilon, sl);
            self.push(&mut k, "upsilon_gradient_norm", Trend::Free, t, u.gradient, sl);
        }
        Ok(())
    }
}

/// Maximum-principle series over stored states.
pub fn maximum_principle_suite(
    sys: &FlowSystem,
    trajectory: &[FlowState],
    opts: MonitorOptions,
) -> Result<Vec<MonitorSeries>> {
    let mut rec = MaxPrincipleRecorder::new(opts);
    for s in trajectory {
        rec.observe(sys, s)?;
    }
    Ok(rec.finish())
}

/// Names of the series that carry a monotonicity claim and whose violation fails a run.
pub fn violated_series(series: &[MonitorSeries]) -> Vec<(String, Verdict)> {
    series.iter().map(|s| (s.name.clone(), s.verdict())).filter(|(_, v)| v.is_violation()).collect()
}

/// Fitted exponential rate of `sup |T|^2` (negative for decay).
pub fn torsion_decay_rate(series: &[MonitorSeries]) -> Option<f64> {
    series.iter().find(|s| s.name == "sup_torsion_sq")?.fitted_log_slope()
}
