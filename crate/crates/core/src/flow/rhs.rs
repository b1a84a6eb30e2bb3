//! Right-hand sides of the flow in tensor, form and potential formulations.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::{chern_connection, kernels, log_det, ConnectionCache, FieldGeometry};
use crate::linalg::SmallMat;
use crate::metric::HermitianMetricField;
use crate::tensor::{ComplexTensorField, Slot};
use crate::torus::initial::potential_perturbation;
use crate::torus::{Deriv, DerivativeOperator};

/// Sign in `dbar^* omega = -i * ADJOINT_SIGN * theta`, fixed by
/// [`calibrate_adjoint_sign`] against the tensor formulation.
pub const ADJOINT_SIGN: f64 = 1.0;

/// `-S + Q` in tensor form.
pub fn pcf_rhs(g: &HermitianMetricField, d: &dyn DerivativeOperator) -> Result<ComplexTensorField> {
    Ok(FieldGeometry::compute(g, d, false)?.flow_rhs())
}

/// Torsion one-form `theta_i = g^{lbar k} T_{k i lbar}` from a connection cache.
pub fn torsion_one_form(conn: &ConnectionCache, ginv: &[SmallMat]) -> ComplexTensorField {
    let n = conn.torsion.n();
    let mut th = ComplexTensorField::zeros(n, ginv.len(), vec![Slot::Down]).expect("canonical");
    for (p, gi) in ginv.iter().enumerate() {
        th.set_at(p, &kernels::torsion_trace(&conn.torsion_at(p), gi));
    }
    th
}

/// `dbar^*_g omega` as a `(1,0)`-form, realized as `-i * sign * theta`.
pub fn dbar_adjoint_with(conn: &ConnectionCache, ginv: &[SmallMat], sign: f64) -> ComplexTensorField {
    torsion_one_form(conn, ginv).scaled(C64::new(0.0, -sign))
}

/// Form-level right side `d d^* omega + dbar dbar^* omega + i d dbar log det g`,
/// returned as metric coefficients.
pub fn pcf_rhs_hodge(g: &HermitianMetricField, d: &dyn DerivativeOperator) -> Result<ComplexTensorField> {
    pcf_rhs_hodge_with(g, d, ADJOINT_SIGN)
}

pub fn pcf_rhs_hodge_with(g: &HermitianMetricField, d: &dyn DerivativeOperator, sign: f64) -> Result<ComplexTensorField> {
    let conn = chern_connection(g, d)?;
    let ginv = g.inverse()?;
    let xi = dbar_adjoint_with(&conn, &ginv, sign);
    let mut out = potential_perturbation(&xi, d);
    out.add_scaled(&ddbar_real(&log_det(g), d), C64::new(1.0, 0.0))?;
    Ok(out)
}

/// `d_i d_jbar f` as a `[Down, BarDown]` field.
pub fn ddbar_real(f: &[f64], d: &dyn DerivativeOperator) -> ComplexTensorField {
    crate::geometry::minus_ddbar(f, d).scaled(C64::new(-1.0, 0.0))
}

/// Reduced-flow velocity of the potential with flat reference `h` and no
/// forcing: `dbar^*_g omega - (i/2) d log det g`.
pub fn alpha_rhs(g_alpha: &HermitianMetricField, d: &dyn DerivativeOperator) -> Result<ComplexTensorField> {
    let conn = chern_connection(g_alpha, d)?;
    let ginv = g_alpha.inverse()?;
    alpha_rhs_from(&conn, &ginv, &log_det(g_alpha), d)
}

pub fn alpha_rhs_from(
    conn: &ConnectionCache,
    ginv: &[SmallMat],
    log_det_g: &[f64],
    d: &dyn DerivativeOperator,
) -> Result<ComplexTensorField> {
    let n = d.grid().n();
    let mut out = dbar_adjoint_with(conn, ginv, ADJOINT_SIGN);
    let ld: Vec<C64> = log_det_g.iter().map(|&v| C64::new(v, 0.0)).collect();
    let ops: Vec<Deriv> = (0..n).map(Deriv::Z).collect();
    for (i, dl) in d.apply_many(&ld, &ops).into_iter().enumerate() {
        for (o, v) in out.component_mut(i).iter_mut().zip(dl) {
            *o += v * C64::new(0.0, -0.5);
        }
    }
    Ok(out)
}

/// `sup |pcf_rhs - pcf_rhs_hodge_with(sign)|`.
pub fn formulation_gap(g: &HermitianMetricField, d: &dyn DerivativeOperator, sign: f64) -> Result<f64> {
    let a = pcf_rhs(g, d)?;
    let b = pcf_rhs_hodge_with(g, d, sign)?;
    a.max_abs_diff(&b)
}

/// Picks the adjoint sign for which the two formulations agree on every
/// sample to within `tol`; errors if neither or both candidates pass.
pub fn calibrate_adjoint_sign(samples: &[HermitianMetricField], d: &dyn DerivativeOperator, tol: f64) -> Result<f64> {
    let mut passing = Vec::new();
    for sign in [1.0, -1.0] {
        let mut worst = 0.0f64;
        for g in samples {
            worst = worst.max(formulation_gap(g, d, sign)?);
        }
        if worst < tol {
            passing.push(sign);
        }
    }
    match passing.as_slice() {
        [s] => Ok(*s),
        [] => Err(Error::Calibration(format!("no adjoint sign reconciles the two flow formulations within {tol:e}"))),
        _ => Err(Error::Calibration("samples are too degenerate to distinguish the adjoint sign".into())),
    }
}
