//! Chern geometry of left-invariant Hermitian metrics.
//!
//! With a left-invariant frame `Z_a` of `(1,0)` vectors and constant
//! `g_{a bbar} = g(Z_a, Zbar_b)`, the Chern connection is
//!
//! ```text
//! nabla_{Zbar_b} Z_a = [Zbar_b, Z_a]^{1,0} = -D^d_{ab} Z_d
//! g(nabla_{Z_b} Z_a, Zbar_c) = -g(Z_a, [Z_b, Zbar_c]^{0,1}) = -E^d_{bc} g_{a dbar}
//! ```
//!
//! The first line is the vanishing of the `(1,1)` torsion and the second is
//! metric compatibility with constant coefficients. Torsion and curvature
//! then follow from `T(X, Y) = nabla_X Y - nabla_Y X - [X, Y]` and
//! `R(X, Y) = [nabla_X, nabla_Y] - nabla_{[X, Y]}`, lowered with `g` as in
//! the coordinate formulas.

use num_complex::Complex64 as C64;

use super::algebra::{ComplexBrackets, ComplexFrame, LieAlgebraSpec};
use crate::error::{Error, Result};
use crate::geometry::kernels::{self, Arr3, Arr4};
use crate::linalg::SmallMat;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// An algebra together with its complex frame and bracket constants.
#[derive(Clone, Debug)]
pub struct HomogeneousSpace {
    pub spec: LieAlgebraSpec,
    pub frame: ComplexFrame,
    pub brackets: ComplexBrackets,
}

impl HomogeneousSpace {
    pub fn new(spec: LieAlgebraSpec) -> Result<Self> {
        let frame = ComplexFrame::new(&spec)?;
        let brackets = ComplexBrackets::new(&spec, &frame)?;
        Ok(Self { spec, frame, brackets })
    }

    pub fn n(&self) -> usize {
        self.frame.n
    }
}

#[derive(Clone, Debug)]
pub struct InvariantGeometry {
    /// `nabla_{Z_i} Z_j = Gamma^l_{ij} Z_l`, stored at `(l, i, j)`.
    pub gamma: Arr3,
    /// `T_{ij kbar}`.
    pub torsion: Arr3,
    /// `Omega_{i jbar k lbar}`.
    pub curvature: Arr4,
    pub s: SmallMat,
    pub rho: SmallMat,
    pub q: SmallMat,
    pub torsion_norm_sq: f64,
}

impl InvariantGeometry {
    /// `-S + Q`.
    pub fn flow_rhs(&self) -> SmallMat {
        self.q.sub(&self.s)
    }
}

pub fn check_metric(g: &SmallMat) -> Result<SmallMat> {
    let ev = g.hermitian_eigenvalues();
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    if g.hermitian_defect() > 1e-12 * (1.0 + g.max_abs()) || !(lo > 0.0) {
        return Err(Error::DegenerateMetric { point: 0, min_eigenvalue: lo });
    }
    g.inverse().ok_or(Error::DegenerateMetric { point: 0, min_eigenvalue: lo })
}

/// Connection, torsion, curvature, `S`, `rho` and `Q` of an invariant metric.
pub fn invariant_geometry(space: &HomogeneousSpace, g: &SmallMat) -> Result<InvariantGeometry> {
    let n = space.n();
    if g.dim() != n {
        return Err(Error::Shape(format!("metric is {}x{}, algebra has complex dimension {n}", g.dim(), g.dim())));
    }
    let gi = check_metric(g)?;
    let br = &space.brackets;
    // nabla_{Zbar_b} Z_a = B^d_{ba} Z_d.
    let bcoef = |d: usize, b: usize, a: usize| -br.d(d, a, b);
    let mut gamma = Arr3::zeros(n);
    for b in 0..n {
        for a in 0..n {
            for f in 0..n {
                let mut v = ZERO;
                for c in 0..n {
                    let x: C64 = (0..n).map(|e| -br.e(e, b, c) * g[(a, e)]).sum();
                    v += x * gi[(c, f)];
                }
                gamma.set(f, b, a, v);
            }
        }
    }
    let mut torsion = Arr3::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let v = (0..n).map(|d| (gamma.get(d, a, b) - gamma.get(d, b, a) - br.c(d, a, b)) * g[(d, c)]).sum();
                torsion.set(a, b, c, v);
            }
        }
    }
    let mut curvature = Arr4::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                // (R(Z_a, Zbar_b) Z_c)^e
                let r: Vec<C64> = (0..n)
                    .map(|e| {
                        let mut v = ZERO;
                        for d in 0..n {
                            v += bcoef(d, b, c) * gamma.get(e, a, d);
                            v -= gamma.get(d, a, c) * bcoef(e, b, d);
                            v -= br.d(d, a, b) * gamma.get(e, d, c);
                            v -= br.e(d, a, b) * bcoef(e, d, c);
                        }
                        v
                    })
                    .collect();
                for l in 0..n {
                    curvature.set(a, b, c, l, (0..n).map(|e| r[e] * g[(e, l)]).sum());
                }
            }
        }
    }
    Ok(InvariantGeometry {
        s: kernels::s_from_curvature(&curvature, &gi),
        rho: kernels::rho_from_curvature(&curvature, &gi),
        q: kernels::torsion_quadratic(&torsion, &gi),
        torsion_norm_sq: kernels::torsion_norm_sq(&torsion, &gi),
        gamma,
        torsion,
        curvature,
    })
}

/// Real inner product `G_{ij} = g(e_i, e_j)` on the algebra induced by `g_{a bbar}`.
pub fn real_metric(space: &HomogeneousSpace, g: &SmallMat) -> Vec<f64> {
    let d = space.spec.dim();
    let n = space.n();
    let parts: Vec<Vec<C64>> = (0..d)
        .map(|i| {
            let mut e = vec![ZERO; d];
            e[i] = C64::new(1.0, 0.0);
            space.frame.split(&e).0
        })
        .collect();
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let mut v = ZERO;
            for a in 0..n {
                for b in 0..n {
                    v += parts[i][a] * g[(a, b)] * parts[j][b].conj();
                }
            }
            out[i * d + j] = 2.0 * v.re;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneous::catalog;

    #[test]
    fn abelian_geometry_vanishes() {
        let sp = HomogeneousSpace::new(catalog::builtin("abelian4").unwrap()).unwrap();
        let g = SmallMat::from_row_slice(2, &[C64::new(2.0, 0.0), C64::new(0.3, 0.4), C64::new(0.3, -0.4), C64::new(1.0, 0.0)]);
        let geo = invariant_geometry(&sp, &g).unwrap();
        assert_eq!(geo.torsion.max_abs(), 0.0);
        assert_eq!(geo.s.max_abs() + geo.q.max_abs() + geo.rho.max_abs(), 0.0);
    }

    #[test]
    fn real_metric_is_j_invariant_and_positive() {
        let sp = HomogeneousSpace::new(catalog::builtin("sl2c").unwrap()).unwrap();
        let g = SmallMat::identity(3);
        let gr = real_metric(&sp, &g);
        let d = 6;
        for i in 0..d {
            for k in 0..d {
                let mut v = 0.0;
                for p in 0..d {
                    for q in 0..d {
                        v += sp.spec.j(p, i) * sp.spec.j(q, k) * gr[p * d + q];
                    }
                }
                assert!((v - gr[i * d + k]).abs() < 1e-12);
            }
        }
        let m = nalgebra::DMatrix::from_row_slice(d, d, &gr);
        assert!(m.symmetric_eigen().eigenvalues.min() > 0.0);
    }
}
