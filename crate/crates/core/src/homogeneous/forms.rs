//! Left-invariant forms, the Chevalley-Eilenberg differential and the SKT residual.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::geometry::{real_metric, HomogeneousSpace};
use super::algebra::LieAlgebraSpec;
use crate::geometry::kernels::Arr3;
use crate::linalg::SmallMat;

/// A real `k`-form on `R^d` stored densely over all index tuples.
#[derive(Clone, Debug, PartialEq)]
pub struct Form {
    pub k: usize,
    pub d: usize,
    pub v: Vec<f64>,
}

impl Form {
    pub fn zeros(k: usize, d: usize) -> Self {
        Self { k, d, v: vec![0.0; d.pow(k as u32)] }
    }

    fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.d + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.v[self.offset(idx)]
    }

    fn unflatten(&self, mut flat: usize, idx: &mut [usize]) {
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.d;
            flat /= self.d;
        }
    }

    /// Multilinear evaluation on complex vectors.
    pub fn eval(&self, vs: &[&[C64]]) -> C64 {
        let mut idx = vec![0; self.k];
        let mut acc = C64::new(0.0, 0.0);
        for (flat, &a) in self.v.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            self.unflatten(flat, &mut idx);
            acc += idx.iter().zip(vs).fold(C64::new(a, 0.0), |p, (&i, v)| p * v[i]);
        }
        acc
    }

    /// `alpha(J., ..., J.)`.
    pub fn pull_back_j(&self, spec: &LieAlgebraSpec) -> Self {
        let mut out = Self::zeros(self.k, self.d);
        let mut idx = vec![0; self.k];
        let cols: Vec<Vec<f64>> = (0..self.d).map(|i| (0..self.d).map(|p| spec.j(p, i)).collect()).collect();
        for flat in 0..out.v.len() {
            out.unflatten(flat, &mut idx);
            let vs: Vec<Vec<C64>> = idx.iter().map(|&i| cols[i].iter().map(|&x| C64::new(x, 0.0)).collect()).collect();
            let refs: Vec<&[C64]> = vs.iter().map(|v| v.as_slice()).collect();
            out.v[flat] = self.eval(&refs).re;
        }
        out
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.v.iter_mut().for_each(|x| *x *= s);
        self
    }

    /// Components with strictly increasing indices.
    pub fn independent_components(&self) -> Vec<f64> {
        let mut idx = vec![0; self.k];
        let mut out = Vec::new();
        for flat in 0..self.v.len() {
            self.unflatten(flat, &mut idx);
            if idx.windows(2).all(|w| w[0] < w[1]) {
                out.push(self.v[flat]);
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `d alpha(X_0, ..., X_k) = sum_{p<q} (-1)^{p+q} alpha([X_p, X_q], X_0, ..^p..^q.., X_k)`.
pub fn ce_differential(spec: &LieAlgebraSpec, alpha: &Form) -> Form {
    let d = alpha.d;
    let k1 = alpha.k + 1;
    let mut out = Form::zeros(k1, d);
    let mut idx = vec![0; k1];
    let mut args = vec![0; alpha.k];
    for flat in 0..out.v.len() {
        out.unflatten(flat, &mut idx);
        let mut acc = 0.0;
        for p in 0..k1 {
            for q in (p + 1)..k1 {
                let sign = if (p + q) % 2 == 0 { 1.0 } else { -1.0 };
                let rest: Vec<usize> = (0..k1).filter(|&r| r != p && r != q).map(|r| idx[r]).collect();
                args[1..].copy_from_slice(&rest);
                for m in 0..d {
                    let c = spec.c(m, idx[p], idx[q]);
                    if c != 0.0 {
                        args[0] = m;
                        acc += sign * c * alpha.get(&args);
                    }
                }
            }
        }
        out.v[flat] = acc;
    }
    out
}

/// Fundamental form `omega(X, Y) = g(JX, Y)`.
pub fn fundamental_form(space: &HomogeneousSpace, g: &SmallMat) -> Form {
    let d = space.spec.dim();
    let gr = real_metric(space, g);
    let mut w = Form::zeros(2, d);
    for i in 0..d {
        for j in 0..d {
            w.v[i * d + j] = (0..d).map(|p| space.spec.j(p, i) * gr[p * d + j]).sum();
        }
    }
    w
}

/// Torsion recovered from `d omega(Z_a, Z_b, Zbar_c) = i T_{ab cbar}`.
pub fn torsion_from_forms(space: &HomogeneousSpace, g: &SmallMat) -> Arr3 {
    let n = space.n();
    let dw = ce_differential(&space.spec, &fundamental_form(space, g));
    let mut t = Arr3::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let zc = space.frame.zbar(c);
                let v = dw.eval(&[&space.frame.z[a], &space.frame.z[b], &zc]);
                t.set(a, b, c, v * C64::new(0.0, -1.0));
            }
        }
    }
    t
}

/// `i dd-bar omega = (1/2) d d^c omega` with `d^c omega = -d omega(J., J., J.)`.
pub fn ddc_omega(space: &HomogeneousSpace, g: &SmallMat) -> Form {
    let dw = ce_differential(&space.spec, &fundamental_form(space, g));
    let dc = dw.pull_back_j(&space.spec).scale(-1.0);
    ce_differential(&space.spec, &dc).scale(0.5)
}

/// Squared flat norm of `i dd-bar omega` over increasing index quadruples.
pub fn skt_residual(space: &HomogeneousSpace, g: &SmallMat) -> f64 {
    ddc_omega(space, g).independent_components().iter().map(|x| x * x).sum()
}

/// Frobenius-orthonormal basis of Hermitian `n x n` matrices.
pub fn hermitian_basis(n: usize) -> Vec<SmallMat> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut m = SmallMat::zeros(n);
        m[(i, i)] = C64::new(1.0, 0.0);
        out.push(m);
        for j in (i + 1)..n {
            let mut re = SmallMat::zeros(n);
            re[(i, j)] = C64::new(s, 0.0);
            re[(j, i)] = C64::new(s, 0.0);
            out.push(re);
            let mut im = SmallMat::zeros(n);
            im[(i, j)] = C64::new(0.0, s);
            im[(j, i)] = C64::new(0.0, -s);
            out.push(im);
        }
    }
    out
}

/// Real coordinates of a Hermitian matrix in [`hermitian_basis`].
pub fn hermitian_coordinates(g: &SmallMat) -> Vec<f64> {
    hermitian_basis(g.dim())
        .iter()
        .map(|b| {
            let mut acc = 0.0;
            for i in 0..g.dim() {
                for j in 0..g.dim() {
                    acc += (b[(i, j)].conj() * g[(i, j)]).re;
                }
            }
            acc
        })
        .collect()
}

/// The residual as a quadratic form: `r(g) = |A c(g)|^2`.
#[derive(Clone, Debug)]
pub struct SktQuadraticForm {
    pub n: usize,
    pub a: DMatrix<f64>,
    /// `A^T A`.
    pub gram: DMatrix<f64>,
}

impl SktQuadraticForm {
    pub fn new(space: &HomogeneousSpace) -> Self {
        let n = space.n();
        let cols: Vec<Vec<f64>> = hermitian_basis(n).iter().map(|b| ddc_omega(space, b).independent_components()).collect();
        let rows = cols[0].len();
        let a = DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r]);
        let gram = a.transpose() * &a;
        Self { n, a, gram }
    }

    pub fn eval(&self, g: &SmallMat) -> f64 {
        let c = nalgebra::DVector::from_vec(hermitian_coordinates(g));
        (&self.a * c).norm_squared()
    }

    /// Gradient with respect to the Hermitian coordinates.
    pub fn gradient(&self, c: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_column_slice(c);
        (2.0 * &self.gram * v).as_slice().to_vec()
    }

    /// Lower bound `n lambda_min(A^T A)` for `r` over metrics with `det g = 1`.
    pub fn unit_det_lower_bound(&self) -> f64 {
        let lo = self.gram.clone().symmetric_eigen().eigenvalues.min();
        self.n as f64 * lo.max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneous::catalog;
    use crate::homogeneous::geometry::invariant_geometry;

    fn sample_metric(n: usize) -> SmallMat {
        let mut g = SmallMat::identity(n);
        for i in 0..n {
            g[(i, i)] = C64::new(1.0 + 0.3 * i as f64, 0.0);
            for j in (i + 1)..n {
                let z = C64::new(0.1 * (i + 2 * j) as f64, 0.07 * (j as f64 - i as f64));
                g[(i, j)] = z;
                g[(j, i)] = z.conj();
            }
        }
        g
    }

    #[test]
    fn d_squared_vanishes() {
        for name in catalog::NAMES {
            let spec = catalog::builtin(name).unwrap();
            let d = spec.dim();
            let mut a = Form::zeros(2, d);
            for i in 0..d {
                for j in 0..d {
                    a.v[i * d + j] = ((i * 7 + j * 3) % 5) as f64 - ((j * 7 + i * 3) % 5) as f64;
                }
            }
            let dd = ce_differential(&spec, &ce_differential(&spec, &a));
            assert!(dd.max_abs() < 1e-12, "{name}");
        }
    }

    #[test]
    fn torsion_matches_exterior_derivative_of_fundamental_form() {
        for name in catalog::NAMES {
            let sp = HomogeneousSpace::new(catalog::builtin(name).unwrap()).unwrap();
            let g = sample_metric(sp.n());
            let geo = invariant_geometry(&sp, &g).unwrap();
            let t = torsion_from_forms(&sp, &g);
            let n = sp.n();
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        assert!((geo.torsion.get(a, b, c) - t.get(a, b, c)).norm() < 1e-12, "{name}");
                    }
                }
            }
        }
    }

    #[test]
    fn quadratic_form_reproduces_residual() {
        for name in catalog::NAMES {
            let sp = HomogeneousSpace::new(catalog::builtin(name).unwrap()).unwrap();
            let g = sample_metric(sp.n());
            let qf = SktQuadraticForm::new(&sp);
            let r = skt_residual(&sp, &g);
            assert!((qf.eval(&g) - r).abs() <= 1e-12 * (1.0 + r), "{name}");
        }
    }

    #[test]
    fn known_skt_metrics() {
        let u2 = HomogeneousSpace::new(catalog::builtin("u2").unwrap()).unwrap();
        assert!(skt_residual(&u2, &SmallMat::identity(2)) < 1e-28);
        let h8 = HomogeneousSpace::new(catalog::builtin("h8").unwrap()).unwrap();
        assert!(skt_residual(&h8, &sample_metric(3)) < 1e-28);
        let sl = HomogeneousSpace::new(catalog::builtin("sl2c").unwrap()).unwrap();
        assert!(skt_residual(&sl, &SmallMat::identity(3)) > 1e-3);
    }
}
