//! Scalar fields tracked along a flow.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flow::{FlowState, FlowSystem};
use crate::geometry::tensor_norm_sq;
use crate::tensor::ComplexTensorField;
use crate::torus::initial::holomorphic_exterior_derivative;
use crate::torus::sup_inf_scan;

/// Points where a section norm falls below this are excluded from `Phi`.
pub const SECTION_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    NonIncreasing,
    NonDecreasing,
    /// Recorded without a monotonicity claim.
    Free,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeValue {
    pub name: &'static str,
    pub value: f64,
    pub trend: Trend,
}

impl ProbeValue {
    /// Amount by which `after` moved against the expected trend (0 if none).
    pub fn regression_to(&self, after: &ProbeValue) -> f64 {
        match self.trend {
            Trend::NonIncreasing => (after.value - self.value).max(0.0),
            Trend::NonDecreasing => (self.value - after.value).max(0.0),
            Trend::Free => 0.0,
        }
    }
}

/// `phi = d alpha - eta` with full (unsymmetrized) components.
pub fn phi_form(sys: &FlowSystem, alpha: &ComplexTensorField) -> Result<ComplexTensorField> {
    let mut phi = holomorphic_exterior_derivative(alpha, &sys.d);
    phi.add_scaled(&sys.eta, C64::new(-1.0, 0.0))?;
    Ok(phi)
}

/// Pointwise `|phi|^2_g`.
pub fn phi_norm_sq(sys: &FlowSystem, state: &FlowState) -> Result<Vec<f64>> {
    let phi = phi_form(sys, state.alpha())?;
    tensor_norm_sq(&phi, state.g(), &state.geometry.ginv)
}

/// Pointwise `max_i |dz^i|^2 = max_i g^{ibar i}`, raised to the power `p`:
/// the largest norm among the constant coframe sections of `(T*_{1,0})^{(x)p}`.
pub fn max_coframe_norm(state: &FlowState, p: usize) -> Vec<f64> {
    let n = state.g().n();
    state.geometry.ginv.iter().map(|gi| (0..n).map(|i| gi[(i, i)].re).fold(f64::NEG_INFINITY, f64::max).powi(p as i32)).collect()
}

/// Pointwise `max_i |d/dz^i|^2 = max_i g_{i ibar}`, raised to the power `p`.
pub fn max_frame_norm(state: &FlowState, p: usize) -> Vec<f64> {
    let g = state.g();
    let n = g.n();
    (0..g.npts()).map(|q| {
        let m = g.at(q);
        (0..n).map(|i| m[(i, i)].re).fold(f64::NEG_INFINITY, f64::max).powi(p as i32)
    })
    .collect()
}

/// `Phi = log |sigma|^2 + p |phi|^2` maximized over the contravariant frame,
/// with floor-excluded points set to `-inf`.
pub fn phi_potential(state: &FlowState, phi_sq: &[f64], p: usize) -> Vec<f64> {
    max_frame_norm(state, p)
        .into_iter()
        .zip(phi_sq)
        .map(|(s, &f)| if s > SECTION_FLOOR { s.ln() + p as f64 * f } else { f64::NEG_INFINITY })
        .collect()
}

/// `det g / det h` with the flat reference `h`.
pub fn det_ratio(state: &FlowState) -> Vec<f64> {
    state.geometry.log_det.iter().map(|l| l.exp()).collect()
}

/// The monotone quantities checked after every step.
pub fn monotone_probe(sys: &FlowSystem, state: &FlowState, p: usize) -> Result<Vec<ProbeValue>> {
    let phi_sq = phi_norm_sq(sys, state)?;
    let sup = |v: &[f64]| sup_inf_scan(v).0;
    let inf = |v: &[f64]| sup_inf_scan(v).2;
    Ok(vec![
        ProbeValue { name: "sup_coframe_norm", value: sup(&max_coframe_norm(state, p)), trend: Trend::NonIncreasing },
        ProbeValue { name: "sup_Phi", value: sup(&phi_potential(state, &phi_sq, p)), trend: Trend::NonIncreasing },
        ProbeValue { name: "inf_det_ratio", value: inf(&det_ratio(state)), trend: Trend::NonDecreasing },
        ProbeValue { name: "sup_phi_sq", value: sup(&phi_sq), trend: Trend::NonIncreasing },
    ])
}
