//! Field-level Chern geometry of a Hermitian metric on a periodic grid.

pub mod calculus;
pub mod kernels;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{SmallMat, MAX_N};
use crate::metric::HermitianMetricField;
use crate::tensor::{ComplexTensorField, Slot};
use crate::torus::{Deriv, DerivativeOperator};

pub use calculus::{
    chern_laplacian, conj_chern_laplacian, contract_metric, covariant_derivative, inner_product, ip_q_trace,
    q_trace_sum, ricci_action, scalar_gradient_norm_sq, scalar_laplacian, tensor_norm_sq, Direction,
};
pub use kernels::{Arr3, Arr4};

/// Chern connection data on a grid.
#[derive(Clone, Debug)]
pub struct ConnectionCache {
    /// `Gamma^l_{ij}`, slots `[Up, Down, Down]`, multi-index `[l, i, j]`.
    pub gamma: ComplexTensorField,
    /// `T_{ij kbar}`, slots `[Down, Down, BarDown]`.
    pub torsion: ComplexTensorField,
    /// `Omega_{i jbar k lbar}`, slots `[Down, Down, BarDown, BarDown]`, multi-index `[i, k, j, l]`.
    pub curvature: Option<ComplexTensorField>,
}

impl ConnectionCache {
    pub fn gamma_at(&self, p: usize) -> Arr3 {
        let n = self.gamma.n();
        let mut a = Arr3::zeros(n);
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    a.set(l, i, j, self.gamma.get(&[l, i, j], p));
                }
            }
        }
        a
    }

    pub fn torsion_at(&self, p: usize) -> Arr3 {
        let n = self.torsion.n();
        let mut a = Arr3::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    a.set(i, j, k, self.torsion.get(&[i, j, k], p));
                }
            }
        }
        a
    }
}

/// First and second coordinate derivatives of every metric component.
pub struct MetricDerivatives {
    n: usize,
    npts: usize,
    /// `first[k][c]` is `d_k` of component `c = i*n + j`.
    first: Vec<Vec<Vec<C64>>>,
    /// `second[k][l][c]` is `d_k d_lbar` of component `c`.
    second: Option<Vec<Vec<Vec<Vec<C64>>>>>,
}

impl MetricDerivatives {
    pub fn compute(g: &HermitianMetricField, d: &dyn DerivativeOperator, second: bool) -> Result<Self> {
        let n = g.n();
        if d.grid().n() != n || d.grid().len() != g.npts() {
            return Err(Error::Shape(format!(
                "metric (n={}, {} points) does not match grid (n={}, {} points)",
                n,
                g.npts(),
                d.grid().n(),
                d.grid().len()
            )));
        }
        let mut ops: Vec<Deriv> = (0..n).map(Deriv::Z).collect();
        if second {
            for k in 0..n {
                for l in 0..n {
                    ops.push(Deriv::ZZbar(k, l));
                }
            }
        }
        let mut first = vec![Vec::with_capacity(n * n); n];
        let mut sec = if second { Some(vec![vec![Vec::with_capacity(n * n); n]; n]) } else { None };
        for c in 0..n * n {
            let mut out = d.apply_many(g.as_tensor().component(c), &ops).into_iter();
            for f in first.iter_mut() {
                f.push(out.next().unwrap());
            }
            if let Some(s) = sec.as_mut() {
                for row in s.iter_mut() {
                    for f in row.iter_mut() {
                        f.push(out.next().unwrap());
                    }
                }
            }
        }
        Ok(Self { n, npts: g.npts(), first, second: sec })
    }

    /// `d_k g` at a point, for `k < n`.
    pub fn dz_at(&self, p: usize) -> [SmallMat; MAX_N] {
        let n = self.n;
        let mut out = [SmallMat::zeros(n); MAX_N];
        for (k, o) in out.iter_mut().enumerate().take(n) {
            *o = SmallMat::from_fn(n, |i, j| self.first[k][i * n + j][p]);
        }
        out
    }

    /// `d_kbar g` at a point, via `d_kbar g_{i jbar} = conj(d_k g_{j ibar})`.
    pub fn dzbar_at(&self, p: usize) -> [SmallMat; MAX_N] {
        let n = self.n;
        let mut out = [SmallMat::zeros(n); MAX_N];
        for (k, o) in out.iter_mut().enumerate().take(n) {
            *o = SmallMat::from_fn(n, |i, j| self.first[k][j * n + i][p].conj());
        }
        out
    }

    /// `d_k d_lbar g` at a point.
    pub fn dzdzbar_at(&self, p: usize) -> Option<[[SmallMat; MAX_N]; MAX_N]> {
        let n = self.n;
        let s = self.second.as_ref()?;
        let mut out = [[SmallMat::zeros(n); MAX_N]; MAX_N];
        for k in 0..n {
            for l in 0..n {
                out[k][l] = SmallMat::from_fn(n, |i, j| s[k][l][i * n + j][p]);
            }
        }
        Some(out)
    }

    pub fn npts(&self) -> usize {
        self.npts
    }
}

/// Every derived quantity of a metric field needed by the flow and monitors.
#[derive(Clone, Debug)]
pub struct FieldGeometry {
    pub ginv: Vec<SmallMat>,
    pub connection: ConnectionCache,
    pub s: ComplexTensorField,
    pub rho: ComplexTensorField,
    pub q: ComplexTensorField,
    pub log_det: Vec<f64>,
}

fn two_tensor(n: usize, npts: usize) -> ComplexTensorField {
    ComplexTensorField::zeros(n, npts, vec![Slot::Down, Slot::BarDown]).expect("canonical")
}

impl FieldGeometry {
    /// Full evaluation; `keep_curvature` retains the four-index curvature.
    pub fn compute(g: &HermitianMetricField, d: &dyn DerivativeOperator, keep_curvature: bool) -> Result<Self> {
        let n = g.n();
        let npts = g.npts();
        let ginv = g.inverse()?;
        let ders = MetricDerivatives::compute(g, d, true)?;
        let mut gamma = ComplexTensorField::zeros(n, npts, vec![Slot::Up, Slot::Down, Slot::Down])?;
        let mut tors = ComplexTensorField::zeros(n, npts, vec![Slot::Down, Slot::Down, Slot::BarDown])?;
        let mut curv = if keep_curvature {
            Some(ComplexTensorField::zeros(n, npts, vec![Slot::Down, Slot::Down, Slot::BarDown, Slot::BarDown])?)
        } else {
            None
        };
        let (mut s, mut rho, mut q) = (two_tensor(n, npts), two_tensor(n, npts), two_tensor(n, npts));
        let mut log_det = Vec::with_capacity(npts);
        let mut gbuf = vec![C64::new(0.0, 0.0); n * n * n];
        for p in 0..npts {
            let gi = &ginv[p];
            let dg = ders.dz_at(p);
            let dbg = ders.dzbar_at(p);
            let ddg = ders.dzdzbar_at(p).expect("second derivatives requested");
            let gam = kernels::christoffel(&dg[..n], gi);
            let t = kernels::torsion(&dg[..n]);
            let om = kernels::curvature(&dg[..n], &dbg[..n], &ddg[..n], gi);
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        gbuf[(l * n + i) * n + j] = gam.get(l, i, j);
                    }
                }
            }
            gamma.set_at(p, &gbuf);
            tors.set_at(p, &t.to_vec());
            if let Some(cf) = curv.as_mut() {
                let mut buf = Vec::with_capacity(n.pow(4));
                for i in 0..n {
                    for k in 0..n {
                        for j in 0..n {
                            for l in 0..n {
                                buf.push(om.get(i, j, k, l));
                            }
                        }
                    }
                }
                cf.set_at(p, &buf);
            }
            s.set_matrix_at(p, &kernels::s_from_curvature(&om, gi));
            rho.set_matrix_at(p, &kernels::rho_from_curvature(&om, gi));
            q.set_matrix_at(p, &kernels::torsion_quadratic(&t, gi));
            log_det.push(g.at(p).det().re.ln());
        }
        Ok(Self { ginv, connection: ConnectionCache { gamma, torsion: tors, curvature: curv }, s, rho, q, log_det })
    }

    pub fn n(&self) -> usize {
        self.s.n()
    }

    pub fn npts(&self) -> usize {
        self.s.npts()
    }

    /// `-S + Q` at every point.
    pub fn flow_rhs(&self) -> ComplexTensorField {
        let mut r = self.q.clone();
        r.add_scaled(&self.s, C64::new(-1.0, 0.0)).expect("same shape");
        r
    }

    /// Pointwise `|T|^2`.
    pub fn torsion_norm_sq(&self) -> Vec<f64> {
        (0..self.npts()).map(|p| kernels::torsion_norm_sq(&self.connection.torsion_at(p), &self.ginv[p])).collect()
    }

    /// Torsion one-form `theta_i = g^{lbar k} T_{k i lbar}`, slots `[Down]`.
    pub fn torsion_trace(&self) -> ComplexTensorField {
        let n = self.n();
        let mut th = ComplexTensorField::zeros(n, self.npts(), vec![Slot::Down]).expect("canonical");
        for p in 0..self.npts() {
            th.set_at(p, &kernels::torsion_trace(&self.connection.torsion_at(p), &self.ginv[p]));
        }
        th
    }
}

/// Chern connection coefficients and torsion (no curvature).
pub fn chern_connection(g: &HermitianMetricField, d: &dyn DerivativeOperator) -> Result<ConnectionCache> {
    let n = g.n();
    let npts = g.npts();
    let ginv = g.inverse()?;
    let ders = MetricDerivatives::compute(g, d, false)?;
    let mut gamma = ComplexTensorField::zeros(n, npts, vec![Slot::Up, Slot::Down, Slot::Down])?;
    let mut tors = ComplexTensorField::zeros(n, npts, vec![Slot::Down, Slot::Down, Slot::BarDown])?;
    let mut gbuf = vec![C64::new(0.0, 0.0); n * n * n];
    for p in 0..npts {
        let dg = ders.dz_at(p);
        let gam = kernels::christoffel(&dg[..n], &ginv[p]);
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    gbuf[(l * n + i) * n + j] = gam.get(l, i, j);
                }
            }
        }
        gamma.set_at(p, &gbuf);
        tors.set_at(p, &kernels::torsion(&dg[..n]).to_vec());
    }
    Ok(ConnectionCache { gamma, torsion: tors, curvature: None })
}

/// `T_{ij kbar}`; the degeneracy guard still applies.
pub fn torsion(g: &HermitianMetricField, d: &dyn DerivativeOperator) -> Result<ComplexTensorField> {
    Ok(chern_connection(g, d)?.torsion)
}

pub fn ricci_rho(g: &HermitianMetricField, d: &dyn DerivativeOperator) -> Result<ComplexTensorField> {
    Ok(FieldGeometry::compute(g, d, false)?.rho)
}

pub fn ricci_s(g: &HermitianMetricField, d: &dyn DerivativeOperator) -> Result<ComplexTensorField> {
    Ok(FieldGeometry::compute(g, d, false)?.s)
}

/// `Q_{i jbar}` from a metric and its torsion.
pub fn torsion_quadratic_q(g: &HermitianMetricField, t: &ComplexTensorField) -> Result<ComplexTensorField> {
    if t.slots() != [Slot::Down, Slot::Down, Slot::BarDown] || t.n() != g.n() || t.npts() != g.npts() {
        return Err(Error::Signature(format!("torsion must be [Down, Down, BarDown] on the metric's grid, got {:?}", t.slots())));
    }
    let n = g.n();
    let ginv = g.inverse()?;
    let mut q = two_tensor(n, g.npts());
    for (p, gi) in ginv.iter().enumerate() {
        let mut a = Arr3::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    a.set(i, j, k, t.get(&[i, j, k], p));
                }
            }
        }
        q.set_matrix_at(p, &kernels::torsion_quadratic(&a, gi));
    }
    Ok(q)
}

/// `sup |d_i g_{j kbar} - Gamma^l_{ij} g_{l kbar}|`.
pub fn compatibility_residual(g: &HermitianMetricField, cache: &ConnectionCache, d: &dyn DerivativeOperator) -> Result<f64> {
    let n = g.n();
    let ders = MetricDerivatives::compute(g, d, false)?;
    let mut worst = 0.0f64;
    for p in 0..g.npts() {
        let dg = ders.dz_at(p);
        let gm = g.at(p);
        let gam = cache.gamma_at(p);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut r = dg[i][(j, k)];
                    for l in 0..n {
                        r -= gam.get(l, i, j) * gm[(l, k)];
                    }
                    worst = worst.max(r.norm());
                }
            }
        }
    }
    Ok(worst)
}

/// `sup |i d dbar omega|` over all components
/// `d_k d_lbar g_{i jbar} - d_i d_lbar g_{k jbar} - d_k d_jbar g_{i lbar} + d_i d_jbar g_{k lbar}`.
pub fn pluriclosed_residual(g: &HermitianMetricField, d: &dyn DerivativeOperator) -> Result<f64> {
    let n = g.n();
    let ders = MetricDerivatives::compute(g, d, true)?;
    let mut worst = 0.0f64;
    for p in 0..g.npts() {
        let dd = ders.dzdzbar_at(p).expect("second derivatives requested");
        for k in 0..n {
            for i in 0..n {
                for l in 0..n {
                    for j in 0..n {
                        let r = dd[k][l][(i, j)] - dd[i][l][(k, j)] - dd[k][j][(i, l)] + dd[i][j][(k, l)];
                        worst = worst.max(r.norm());
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// Pointwise `log det g`.
pub fn log_det(g: &HermitianMetricField) -> Vec<f64> {
    g.det().into_iter().map(f64::ln).collect()
}

/// `-d_i d_jbar f` for a real scalar field, slots `[Down, BarDown]`.
pub fn minus_ddbar(f: &[f64], d: &dyn DerivativeOperator) -> ComplexTensorField {
    let n = d.grid().n();
    let fc: Vec<C64> = f.iter().map(|&v| C64::new(v, 0.0)).collect();
    let ops: Vec<Deriv> = (0..n * n).map(|c| Deriv::ZZbar(c / n, c % n)).collect();
    let data: Vec<C64> = d.apply_many(&fc, &ops).into_iter().flatten().map(|v| -v).collect();
    ComplexTensorField::from_data(n, f.len(), vec![Slot::Down, Slot::BarDown], data).expect("shape")
}
