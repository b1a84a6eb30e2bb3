//! Pointwise evolution identities checked against finite-difference time derivatives.
//!
//! Each identity tracks a scalar field `q` and an analytic right side
//! `R` with `dq/dt = R`. At every sample the recorder stores `q` and `R`; the
//! time derivative is a centered difference over neighbouring samples, so it
//! shares no arithmetic with the integrator stages.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::quantities::{phi_form, SECTION_FLOOR};
use crate::error::{Error, Result};
use crate::flow::{FlowState, FlowSystem, Observer};
use crate::geometry::{
    chern_laplacian, conj_chern_laplacian, covariant_derivative, ricci_action, inner_product, q_trace_sum, scalar_gradient_norm_sq, scalar_laplacian, tensor_norm_sq,
    Direction,
};
use crate::tensor::{ComplexTensorField, Slot};
use crate::torus::{Deriv, DerivativeOperator};

/// Both residuals below this count as exact (no convergence order defined).
pub const EXACT_FLOOR: f64 = 1e-12;

/// Minimum observed Richardson order for a passing identity.
pub const MIN_ORDER: f64 = 1.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityKind {
    /// `d|b|^2/dt = Delta|b|^2 - |nabla b|^2 - p<Q, tr(b (x) bbar)>` for holomorphic covariant `b`.
    CovariantSection,
    /// `d|A|^2/dt = Delta|A|^2 - |nabla A|^2 + p<Q, tr(A (x) Abar)>` for holomorphic contravariant `A`.
    ContravariantTensor,
    /// The same identity for `log|A|^2`. The margin is the smallest slack among
    /// `d log|A|^2/dt <= Delta log|A|^2 + p|T|^2`, `|d|A|^2|^2 <= |nabla A|^2 |A|^2`
    /// and `<Q, tr(A (x) Abar)> <= |T|^2 |A|^2`, taken where `|A|^2` exceeds the floor.
    ContravariantLog,
    /// `d|b|^2/dt = Delta|b|^2 - |nabla b|^2 - |nablabar b|^2 -+ p<Q, tr> + 2 Re<b, mu>`
    /// for the auxiliary field `aux` solving `db/dt = Delta b + mu`.
    ForcedParabolic { aux: usize },
    /// `d log det g/dt = Delta log det g + |T|^2` (flat reference metric).
    LogDet,
    /// `d|phi|^2/dt = Delta|phi|^2 - |nabla phi|^2 - |T|^2 - 2<Q, phi (x) phibar>`, `phi = d alpha - eta`.
    Phi,
}

#[derive(Clone, Debug)]
pub struct IdentitySpec {
    pub id: String,
    pub kind: IdentityKind,
    /// Holomorphic section for the section identities.
    pub section: Option<ComplexTensorField>,
    /// Test hook: reverses the sign of the `Q` term.
    pub flip_q_sign: bool,
}

impl IdentitySpec {
    pub fn new(id: impl Into<String>, kind: IdentityKind, section: Option<ComplexTensorField>) -> Self {
        Self { id: id.into(), kind, section, flip_q_sign: false }
    }
}

/// Tracked field and right side at one instant.
#[derive(Clone, Debug)]
pub struct IdentityTerms {
    pub tracked: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Pointwise slack of the accompanying inequalities (should be `>= 0`).
    pub margin: Option<Vec<f64>>,
}

fn check_holomorphic(s: &ComplexTensorField, d: &dyn DerivativeOperator) -> Result<()> {
    let n = s.n();
    let ops: Vec<Deriv> = (0..n).map(Deriv::Zbar).collect();
    let scale = 1.0 + s.max_abs();
    for c in 0..s.ncomp() {
        for v in d.apply_many(s.component(c), &ops) {
            let m = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if m > 1e-9 * scale {
                return Err(Error::Invalid(format!("section is not holomorphic (|dbar s| = {m:.3e})")));
            }
        }
    }
    Ok(())
}

fn require_pure(s: &ComplexTensorField, slot: Slot) -> Result<()> {
    if s.rank() == 0 || s.slots().iter().any(|&x| x != slot) {
        return Err(Error::Signature(format!("expected a tensor power of {slot:?}, got {:?}", s.slots())));
    }
    Ok(())
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn add_scaled(a: &mut [f64], b: &[f64], s: f64) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += s * y;
    }
}

/// `|nabla s|^2` and, if requested, `|nablabar s|^2`.
fn gradient_norms(
    sys: &FlowSystem,
    state: &FlowState,
    s: &ComplexTensorField,
    with_bar: bool,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let geo = &state.geometry;
    let g = state.g();
    let hol = covariant_derivative(s, &geo.connection.gamma, &sys.d, Direction::Holomorphic)?;
    let a = tensor_norm_sq(&hol, g, &geo.ginv)?;
    let b = if with_bar {
        let anti = covariant_derivative(s, &geo.connection.gamma, &sys.d, Direction::Antiholomorphic)?;
        Some(tensor_norm_sq(&anti, g, &geo.ginv)?)
    } else {
        None
    };
    Ok((a, b))
}

/// Evaluates the tracked field and the right side of one identity.
pub fn identity_terms(sys: &FlowSystem, state: &FlowState, spec: &IdentitySpec) -> Result<IdentityTerms> {
    let geo = &state.geometry;
    let g = state.g();
    let d = &sys.d;
    let qs = if spec.flip_q_sign { -1.0 } else { 1.0 };
    let section = || spec.section.as_ref().ok_or_else(|| Error::Invalid(format!("identity {} needs a section", spec.id)));
    match &spec.kind {
        IdentityKind::CovariantSection | IdentityKind::ContravariantTensor | IdentityKind::ContravariantLog => {
            let s = section()?;
            let covariant = spec.kind == IdentityKind::CovariantSection;
            require_pure(s, if covariant { Slot::Down } else { Slot::Up })?;
            check_holomorphic(s, d)?;
            let q = tensor_norm_sq(s, g, &geo.ginv)?;
            let (grad, _) = gradient_norms(sys, state, s, false)?;
            let qsum = q_trace_sum(s, &geo.q, g, &geo.ginv)?;
            let sign = if covariant { -1.0 } else { 1.0 };
            if spec.kind != IdentityKind::ContravariantLog {
                let mut rhs = sub(&scalar_laplacian(&q, &geo.ginv, d), &grad);
                add_scaled(&mut rhs, &qsum, sign * qs);
                return Ok(IdentityTerms { tracked: q, rhs, margin: None });
            }
            let logq: Vec<f64> = q.iter().map(|v| v.ln()).collect();
            let lap_log = scalar_laplacian(&logq, &geo.ginv, d);
            let dq = scalar_gradient_norm_sq(&q, &geo.ginv, d);
            let tsq = geo.torsion_norm_sq();
            let p = s.rank() as f64;
            let mut rhs = Vec::with_capacity(q.len());
            let mut margin = Vec::with_capacity(q.len());
            for k in 0..q.len() {
                let r = lap_log[k] + dq[k] / (q[k] * q[k]) - grad[k] / q[k] + qs * qsum[k] / q[k];
                rhs.push(r);
                if q[k] > SECTION_FLOOR {
                    let log_form = lap_log[k] + p * tsq[k] - r;
                    let kato = grad[k] * q[k] - dq[k];
                    let q_bound = tsq[k] * q[k] - qsum[k] / p;
                    margin.push(log_form.min(kato).min(q_bound));
                }
            }
            Ok(IdentityTerms { tracked: logq, rhs, margin: Some(margin) })
        }
        IdentityKind::ForcedParabolic { aux } => {
            let b = state.aux().get(*aux).ok_or_else(|| Error::Invalid(format!("no auxiliary field {aux}")))?;
            let mu = &sys.forcing[*aux];
            let covariant = b.slots().first() == Some(&Slot::Down);
            require_pure(b, if covariant { Slot::Down } else { Slot::Up })?;
            if mu.slots() != b.slots() {
                return Err(Error::Signature(format!("forcing {:?} does not match field {:?}", mu.slots(), b.slots())));
            }
            let q = tensor_norm_sq(b, g, &geo.ginv)?;
            let (grad, bar) = gradient_norms(sys, state, b, true)?;
            let qsum = q_trace_sum(b, &geo.q, g, &geo.ginv)?;
            let cross = inner_product(b, mu, g, &geo.ginv)?;
            let mut rhs = sub(&scalar_laplacian(&q, &geo.ginv, d), &grad);
            add_scaled(&mut rhs, &bar.unwrap(), -1.0);
            add_scaled(&mut rhs, &qsum, if covariant { -qs } else { qs });
            for (r, c) in rhs.iter_mut().zip(cross) {
                *r += 2.0 * c.re;
            }
            Ok(IdentityTerms { tracked: q, rhs, margin: None })
        }
        IdentityKind::LogDet => {
            let q = geo.log_det.clone();
            let mut rhs = scalar_laplacian(&q, &geo.ginv, d);
            add_scaled(&mut rhs, &geo.torsion_norm_sq(), 1.0);
            Ok(IdentityTerms { tracked: q, rhs, margin: None })
        }
        IdentityKind::Phi => {
            let phi = phi_form(sys, state.alpha())?;
            let q = tensor_norm_sq(&phi, g, &geo.ginv)?;
            let (grad, _) = gradient_norms(sys, state, &phi, false)?;
            let qsum = q_trace_sum(&phi, &geo.q, g, &geo.ginv)?;
            let tsq = geo.torsion_norm_sq();
            let mut reaction = vec![0.0; q.len()];
            add_scaled(&mut reaction, &grad, -1.0);
            add_scaled(&mut reaction, &tsq, -1.0);
            add_scaled(&mut reaction, &qsum, -qs);
            let mut rhs = scalar_laplacian(&q, &geo.ginv, d);
            add_scaled(&mut rhs, &reaction, 1.0);
            let margin = reaction.iter().map(|r| -r).collect();
            Ok(IdentityTerms { tracked: q, rhs, margin: Some(margin) })
        }
    }
}

/// Residual history of one identity along one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub id: String,
    /// Interior sample times where the centered difference is defined.
    pub times: Vec<f64>,
    /// `sup_x |lhs - rhs|` at each time.
    pub residual: Vec<f64>,
    pub lhs_sup: Vec<f64>,
    pub rhs_sup: Vec<f64>,
    /// Smallest inequality margin over all samples, if the identity has one.
    pub min_margin: Option<f64>,
}

impl IdentityResidual {
    pub fn sup_residual(&self) -> f64 {
        self.residual.iter().copied().fold(0.0, f64::max)
    }

    fn at(&self, t: f64) -> Option<f64> {
        let tol = 1e-9 * (1.0 + t.abs());
        self.times.iter().position(|&s| (s - t).abs() <= tol).map(|i| self.residual[i])
    }
}

/// Streams identity terms along a run, keeping only three samples in memory.
pub struct IdentityRecorder {
    specs: Vec<IdentitySpec>,
    window: Vec<Vec<(f64, IdentityTerms)>>,
    out: Vec<IdentityResidual>,
}

impl IdentityRecorder {
    pub fn new(specs: Vec<IdentitySpec>) -> Self {
        let out = specs
            .iter()
            .map(|s| IdentityResidual {
                id: s.id.clone(),
                times: vec![],
                residual: vec![],
                lhs_sup: vec![],
                rhs_sup: vec![],
                min_margin: None,
            })
            .collect();
        let window = specs.iter().map(|_| Vec::new()).collect();
        Self { specs, window, out }
    }

    pub fn finish(self) -> Vec<IdentityResidual> {
        self.out
    }
}

impl Observer for IdentityRecorder {
    fn observe(&mut self, sys: &FlowSystem, state: &FlowState) -> Result<()> {
        for (k, spec) in self.specs.iter().enumerate() {
            let terms = identity_terms(sys, state, spec)?;
            let res = &mut self.out[k];
            if let Some(m) = &terms.margin {
                let lo = m.iter().copied().fold(f64::INFINITY, f64::min);
                res.min_margin = Some(res.min_margin.map_or(lo, |x: f64| x.min(lo)));
            }
            let w = &mut self.window[k];
            w.push((state.t, terms));
            if w.len() == 3 {
                let (t0, a) = &w[0];
                let (t1, mid) = &w[1];
                let (t2, b) = &w[2];
                let h = t2 - t0;
                let mut worst = 0.0f64;
                let mut lhs_sup = 0.0f64;
                let mut rhs_sup = 0.0f64;
                for x in 0..mid.rhs.len() {
                    let lhs = (b.tracked[x] - a.tracked[x]) / h;
                    worst = worst.max((lhs - mid.rhs[x]).abs());
                    lhs_sup = lhs_sup.max(lhs.abs());
                    rhs_sup = rhs_sup.max(mid.rhs[x].abs());
                }
                res.times.push(*t1);
                res.residual.push(worst);
                res.lhs_sup.push(lhs_sup);
                res.rhs_sup.push(rhs_sup);
                w.remove(0);
            }
        }
        Ok(())
    }
}

fn record(sys: &FlowSystem, trajectory: &[FlowState], spec: IdentitySpec) -> Result<IdentityResidual> {
    let mut rec = IdentityRecorder::new(vec![spec]);
    for s in trajectory {
        rec.observe(sys, s)?;
    }
    Ok(rec.finish().pop().unwrap())
}

/// Holomorphic covariant section identity along stored states.
pub fn check_covariant_section_identity(
    sys: &FlowSystem,
    trajectory: &[FlowState],
    beta: &ComplexTensorField,
) -> Result<IdentityResidual> {
    record(sys, trajectory, IdentitySpec::new("covariant_section", IdentityKind::CovariantSection, Some(beta.clone())))
}

/// Holomorphic contravariant tensor identity (equality form) along stored states.
pub fn check_contravariant_tensor_identity(
    sys: &FlowSystem,
    trajectory: &[FlowState],
    a: &ComplexTensorField,
) -> Result<IdentityResidual> {
    record(sys, trajectory, IdentitySpec::new("contravariant_tensor", IdentityKind::ContravariantTensor, Some(a.clone())))
}

/// Forced parabolic identity for auxiliary field `aux`.
pub fn check_general_parabolic_identity(sys: &FlowSystem, trajectory: &[FlowState], aux: usize) -> Result<IdentityResidual> {
    record(sys, trajectory, IdentitySpec::new("forced_parabolic", IdentityKind::ForcedParabolic { aux }, None))
}

pub fn check_logdet_identity(sys: &FlowSystem, trajectory: &[FlowState]) -> Result<IdentityResidual> {
    record(sys, trajectory, IdentitySpec::new("log_det", IdentityKind::LogDet, None))
}

pub fn check_phi_identity(sys: &FlowSystem, trajectory: &[FlowState]) -> Result<IdentityResidual> {
    record(sys, trajectory, IdentitySpec::new("phi", IdentityKind::Phi, None))
}

/// Observed convergence of one identity under halving of the step (and of
/// the sample spacing with it).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RichardsonOutcome {
    pub id: String,
    pub coarse_residual: f64,
    pub fine_residual: f64,
    /// `None` when both residuals are below [`EXACT_FLOOR`].
    pub order: Option<f64>,
    pub min_margin: Option<f64>,
    pub passed: bool,
}

/// Compares residuals at the sample times shared by both runs.
pub fn richardson(coarse: &IdentityResidual, fine: &IdentityResidual, margin_tol: f64) -> RichardsonOutcome {
    let mut rc = 0.0f64;
    let mut rf = 0.0f64;
    for (i, &t) in coarse.times.iter().enumerate() {
        if let Some(f) = fine.at(t) {
            rc = rc.max(coarse.residual[i]);
            rf = rf.max(f);
        }
    }
    let order = if rc < EXACT_FLOOR && rf < EXACT_FLOOR { None } else { Some((rc / rf).log2()) };
    let min_margin = match (coarse.min_margin, fine.min_margin) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let margin_ok = min_margin.map_or(true, |m| m >= -margin_tol);
    let order_ok = order.map_or(true, |o| o >= MIN_ORDER);
    RichardsonOutcome { id: coarse.id.clone(), coarse_residual: rc, fine_residual: rf, order, min_margin, passed: order_ok && margin_ok }
}

/// Sign in the commutation formula `Deltabar A = Delta A + COMMUTATOR_SIGN * S(A)`
/// for contravariant `A`, where `S(A)` is [`ricci_action`]. The defect with this
/// sign converges spectrally under grid refinement; the other sign leaves an
/// `O(1)` remainder.
pub const COMMUTATOR_SIGN: f64 = -1.0;

/// `sup |Deltabar A - Delta A - COMMUTATOR_SIGN * S(A)|` for a contravariant field.
pub fn commutator_defect(sys: &FlowSystem, state: &FlowState, a: &ComplexTensorField) -> Result<f64> {
    commutator_defect_with(sys, state, a, COMMUTATOR_SIGN)
}

pub fn commutator_defect_with(sys: &FlowSystem, state: &FlowState, a: &ComplexTensorField, sign: f64) -> Result<f64> {
    let geo = &state.geometry;
    let mut diff = conj_chern_laplacian(a, &geo.connection.gamma, &geo.ginv, &sys.d)?;
    diff.add_scaled(&chern_laplacian(a, &geo.connection.gamma, &geo.ginv, &sys.d)?, C64::new(-1.0, 0.0))?;
    diff.add_scaled(&ricci_action(a, &geo.s, &geo.ginv)?, C64::new(-sign, 0.0))?;
    Ok(diff.max_abs())
}
