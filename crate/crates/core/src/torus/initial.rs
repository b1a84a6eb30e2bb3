//! Constructors for pluriclosed and Kähler initial metrics on the torus.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Deriv, DerivativeOperator, GridSpec};
use crate::error::{Error, Result};
use crate::linalg::SmallMat;
use crate::metric::HermitianMetricField;
use crate::tensor::{ComplexTensorField, Slot};

/// One Fourier term `amplitude * exp(2 pi i <wavevector, x>)` of a form component.
///
/// `wavevector` is indexed by real axis `(x^1, y^1, ..., x^n, y^n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub component: usize,
    pub wavevector: Vec<i64>,
    pub amplitude: [f64; 2],
}

impl FourierTerm {
    fn eval(&self, x: &[f64]) -> C64 {
        let phase: f64 = self.wavevector.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum();
        C64::new(self.amplitude[0], self.amplitude[1]) * C64::from_polar(1.0, 2.0 * PI * phase)
    }
}

/// A `(1,0)`-form `alpha = alpha_i dz^i` sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialForm {
    field: ComplexTensorField,
    terms: Vec<FourierTerm>,
}

impl PotentialForm {
    pub fn zero(grid: &GridSpec) -> Self {
        let field = ComplexTensorField::zeros(grid.n(), grid.len(), vec![Slot::Down]).expect("canonical");
        Self { field, terms: vec![] }
    }

    pub fn from_terms(grid: &GridSpec, terms: Vec<FourierTerm>) -> Result<Self> {
        let mut f = Self::zero(grid);
        for t in &terms {
            if t.component >= grid.n() || t.wavevector.len() != grid.axes() {
                return Err(Error::Invalid(format!(
                    "Fourier term {t:?} does not fit n = {} ({} real axes)",
                    grid.n(),
                    grid.axes()
                )));
            }
            let vals = grid.sample(|x| t.eval(x));
            for (o, v) in f.field.component_mut(t.component).iter_mut().zip(vals) {
                *o += v;
            }
        }
        f.terms = terms;
        Ok(f)
    }

    pub fn from_field(field: ComplexTensorField) -> Result<Self> {
        if field.slots() != [Slot::Down] {
            return Err(Error::Signature(format!("a (1,0)-form needs slots [Down], got {:?}", field.slots())));
        }
        Ok(Self { field, terms: vec![] })
    }

    /// Random trigonometric form with every wavevector entry in `-kmax..=kmax`.
    ///
    /// Amplitudes are uniform in the unit square; callers
    /// normally rescale with [`PotentialForm::scaled_to_perturbation`].
    pub fn random(grid: &GridSpec, kmax: i64, terms_per_component: usize, rng: &mut impl Rng) -> Result<Self> {
        let mut terms = Vec::new();
        for c in 0..grid.n() {
            for _ in 0..terms_per_component {
                let wavevector: Vec<i64> = (0..grid.axes()).map(|_| rng.gen_range(-kmax..=kmax)).collect();
                let amplitude = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                terms.push(FourierTerm { component: c, wavevector, amplitude });
            }
        }
        Self::from_terms(grid, terms)
    }

    pub fn field(&self) -> &ComplexTensorField {
        &self.field
    }

    pub fn into_field(self) -> ComplexTensorField {
        self.field
    }

    pub fn terms(&self) -> &[FourierTerm] {
        &self.terms
    }

    pub fn scaled(&self, s: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| FourierTerm { amplitude: [t.amplitude[0] * s, t.amplitude[1] * s], ..t.clone() })
            .collect();
        Self { field: self.field.scaled(C64::new(s, 0.0)), terms }
    }

    /// Sup over points and entries of `|dbar alpha + d alphabar|`.
    pub fn perturbation_sup(&self, d: &dyn DerivativeOperator) -> f64 {
        potential_perturbation(&self.field, d).max_abs()
    }

    /// Rescales so that the metric perturbation has entrywise sup `target`.
    pub fn scaled_to_perturbation(&self, d: &dyn DerivativeOperator, target: f64) -> Self {
        let s = self.perturbation_sup(d);
        if s == 0.0 {
            return self.clone();
        }
        self.scaled(target / s)
    }
}

/// `i d_jbar alpha_i - i d_i conj(alpha_j)`, the `(1,1)` part added by a potential.
pub fn potential_perturbation(alpha: &ComplexTensorField, d: &dyn DerivativeOperator) -> ComplexTensorField {
    let n = alpha.n();
    let npts = alpha.npts();
    let ops: Vec<Deriv> = (0..n).map(Deriv::Zbar).collect();
    // x[i][j] = i d_jbar alpha_i
    let x: Vec<Vec<Vec<C64>>> = (0..n)
        .map(|i| d.apply_many(alpha.component(i), &ops).into_iter().map(|v| v.into_iter().map(|z| z * C64::i()).collect()).collect())
        .collect();
    let mut out = ComplexTensorField::zeros(n, npts, vec![Slot::Down, Slot::BarDown]).expect("canonical");
    for i in 0..n {
        for j in 0..n {
            let o = out.component_mut(i * n + j);
            for p in 0..npts {
                o[p] = x[i][j][p] + x[j][i][p].conj();
            }
        }
    }
    out
}

/// `base + dbar alpha + d alphabar` as a metric.
pub fn metric_from_potential(
    base: &HermitianMetricField,
    alpha: &ComplexTensorField,
    d: &dyn DerivativeOperator,
) -> Result<HermitianMetricField> {
    let mut t = potential_perturbation(alpha, d);
    t.add_scaled(base.as_tensor(), C64::new(1.0, 0.0))?;
    HermitianMetricField::from_tensor(t)
}

/// The `(2,0)`-form `d a` as an antisymmetric `[Down, Down]` field, `(d a)_{ki} = d_k a_i - d_i a_k`.
pub fn holomorphic_exterior_derivative(a: &ComplexTensorField, d: &dyn DerivativeOperator) -> ComplexTensorField {
    let n = a.n();
    let ops: Vec<Deriv> = (0..n).map(Deriv::Z).collect();
    let da: Vec<Vec<Vec<C64>>> = (0..n).map(|i| d.apply_many(a.component(i), &ops)).collect();
    let mut out = ComplexTensorField::zeros(n, a.npts(), vec![Slot::Down, Slot::Down]).expect("canonical");
    for k in 0..n {
        for i in 0..n {
            let o = out.component_mut(k * n + i);
            for (p, v) in o.iter_mut().enumerate() {
                *v = da[i][k][p] - da[k][i][p];
            }
        }
    }
    out
}

/// Pluriclosed initial data `omega_0 = flat + dbar alpha_0 + d alphabar_0` and
/// `eta = -d alpha_0`, which satisfies `d omega_0 = dbar eta`.
///
/// Rejects potentials whose perturbation reaches half the flat eigenvalue.
pub fn make_pluriclosed_initial(
    alpha0: &PotentialForm,
    d: &dyn DerivativeOperator,
) -> Result<(HermitianMetricField, ComplexTensorField)> {
    let grid = d.grid();
    let pert = potential_perturbation(alpha0.field(), d);
    let flat = HermitianMetricField::flat(grid.n(), grid.len());
    let g = metric_from_potential(&flat, alpha0.field(), d)?;
    let mut worst = (0.0f64, 0usize);
    for p in 0..grid.len() {
        let m = pert.matrix_at(p).hermitian_part();
        let ev = m.hermitian_eigenvalues();
        let spec = ev.iter().fold(0.0f64, |a, e| a.max(e.abs()));
        if spec > worst.0 {
            worst = (spec, p);
        }
    }
    let (min_ev, at) = g.min_eigenvalue();
    if worst.0 >= 0.5 || !(min_ev > 0.0) {
        let point = if min_ev > 0.0 { worst.1 } else { at };
        return Err(Error::Positivity { point, min_eigenvalue: g.at(point).min_eigenvalue() });
    }
    let eta = holomorphic_exterior_derivative(alpha0.field(), d).scaled(C64::new(-1.0, 0.0));
    Ok((g, eta))
}

/// Real trigonometric polynomial `sum a_m cos(2 pi <k_m, x>) + b_m sin(2 pi <k_m, x>)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealTerm {
    pub wavevector: Vec<i64>,
    pub cos: f64,
    pub sin: f64,
}

/// Kähler metric `flat + i d dbar f`, i.e. `g_{i jbar} = delta_ij + d_i d_jbar f`.
pub fn make_kahler_initial(terms: &[RealTerm], d: &dyn DerivativeOperator) -> Result<HermitianMetricField> {
    let grid = d.grid();
    let n = grid.n();
    let f: Vec<C64> = grid.sample(|x| {
        terms
            .iter()
            .map(|t| {
                let ph = 2.0 * PI * t.wavevector.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum::<f64>();
                C64::new(t.cos * ph.cos() + t.sin * ph.sin(), 0.0)
            })
            .sum()
    });
    if terms.iter().any(|t| t.wavevector.len() != grid.axes()) {
        return Err(Error::Invalid("Kähler potential wavevector length differs from the real dimension".into()));
    }
    let ops: Vec<Deriv> = (0..n * n).map(|c| Deriv::ZZbar(c / n, c % n)).collect();
    let dd = d.apply_many(&f, &ops);
    let g = HermitianMetricField::from_fn(n, grid.len(), |p| {
        SmallMat::from_fn(n, |i, j| dd[i * n + j][p] + if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    })?;
    g.check_positive()
        .map_err(|e| match e {
            Error::DegenerateMetric { point, min_eigenvalue } => Error::Positivity { point, min_eigenvalue },
            other => other,
        })?;
    Ok(g)
}

/// Random pluriclosed metric with low-frequency potential (`|k_a| <= 1`) scaled so
/// that `sup |g - flat| = amplitude`.
pub fn random_pluriclosed(
    d: &dyn DerivativeOperator,
    amplitude: f64,
    rng: &mut impl Rng,
) -> Result<(HermitianMetricField, PotentialForm)> {
    let alpha = PotentialForm::random(d.grid(), 1, 3, rng)?.scaled_to_perturbation(d, amplitude);
    let (g, _) = make_pluriclosed_initial(&alpha, d)?;
    Ok((g, alpha))
}
