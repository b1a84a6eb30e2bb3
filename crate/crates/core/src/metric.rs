use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::SmallMat;
use crate::tensor::{ComplexTensorField, Slot};

/// Minimum eigenvalue below which a metric is treated as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Positive-definite Hermitian matrix `g_{i jbar}` at every grid point.
///
/// The same storage is the Kähler form `omega = i g_{i jbar} dz^i ^ dzbar^j`.
/// A field with a single point represents an invariant (constant) metric.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMetricField {
    inner: ComplexTensorField,
}

impl HermitianMetricField {
    /// Wraps a `[Down, BarDown]` field, replacing each matrix by its
    /// Hermitian part.
    pub fn from_tensor(t: ComplexTensorField) -> Result<Self> {
        if t.slots() != [Slot::Down, Slot::BarDown] {
            return Err(Error::Signature(format!("metric needs slots [Down, BarDown], got {:?}", t.slots())));
        }
        let mut inner = t;
        for p in 0..inner.npts() {
            let m = inner.matrix_at(p).hermitian_part();
            inner.set_matrix_at(p, &m);
        }
        Ok(Self { inner })
    }

    pub fn from_fn(n: usize, npts: usize, mut f: impl FnMut(usize) -> SmallMat) -> Result<Self> {
        let mut t = ComplexTensorField::zeros(n, npts, vec![Slot::Down, Slot::BarDown])?;
        for p in 0..npts {
            t.set_matrix_at(p, &f(p));
        }
        Self::from_tensor(t)
    }

    pub fn flat(n: usize, npts: usize) -> Self {
        Self::constant(&SmallMat::identity(n), npts)
    }

    pub fn constant(m: &SmallMat, npts: usize) -> Self {
        Self::from_fn(m.dim(), npts, |_| *m).expect("constant metric")
    }

    pub fn n(&self) -> usize {
        self.inner.n()
    }

    pub fn npts(&self) -> usize {
        self.inner.npts()
    }

    pub fn at(&self, p: usize) -> SmallMat {
        self.inner.matrix_at(p)
    }

    pub fn component(&self, i: usize, j: usize) -> &[C64] {
        self.inner.component(i * self.n() + j)
    }

    pub fn as_tensor(&self) -> &ComplexTensorField {
        &self.inner
    }

    pub fn into_tensor(self) -> ComplexTensorField {
        self.inner
    }

    /// Smallest eigenvalue over the field and the first point attaining it.
    pub fn min_eigenvalue(&self) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for p in 0..self.npts() {
            let e = self.at(p).min_eigenvalue();
            if e < best.0 || e.is_nan() {
                best = (e, p);
                if e.is_nan() {
                    break;
                }
            }
        }
        best
    }

    pub fn max_eigenvalue(&self) -> f64 {
        (0..self.npts()).map(|p| *self.at(p).hermitian_eigenvalues().last().unwrap()).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Fails with the location of the worst point if any matrix is not
    /// positive definite above the degeneracy threshold.
    pub fn check_positive(&self) -> Result<()> {
        let (e, p) = self.min_eigenvalue();
        if !(e > DEGENERACY_THRESHOLD) {
            return Err(Error::DegenerateMetric { point: p, min_eigenvalue: e });
        }
        Ok(())
    }

    /// Pointwise inverse matrices with the degeneracy guard.
    pub fn inverse(&self) -> Result<Vec<SmallMat>> {
        (0..self.npts())
            .map(|p| {
                let m = self.at(p);
                let e = m.min_eigenvalue();
                if !(e > DEGENERACY_THRESHOLD) {
                    return Err(Error::DegenerateMetric { point: p, min_eigenvalue: e });
                }
                m.inverse().ok_or(Error::DegenerateMetric { point: p, min_eigenvalue: e })
            })
            .collect()
    }

    /// `det g` at every point (real for Hermitian data).
    pub fn det(&self) -> Vec<f64> {
        (0..self.npts()).map(|p| self.at(p).det().re).collect()
    }

    pub fn hermitian_defect(&self) -> f64 {
        (0..self.npts()).map(|p| self.at(p).hermitian_defect()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { inner: self.inner.scaled(C64::new(c, 0.0)) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_metric_reports_location() {
        let mut m = SmallMat::identity(2);
        let g = HermitianMetricField::from_fn(2, 5, |p| {
            if p == 3 {
                m[(1, 1)] = C64::new(1e-14, 0.0);
                m
            } else {
                SmallMat::identity(2)
            }
        })
        .unwrap();
        match g.check_positive() {
            Err(Error::DegenerateMetric { point, .. }) => assert_eq!(point, 3),
            other => panic!("expected degeneracy, got {other:?}"),
        }
        assert!(g.inverse().is_err());
    }

    #[test]
    fn construction_symmetrizes() {
        let g = HermitianMetricField::from_fn(2, 1, |_| {
            SmallMat::from_row_slice(2, &[C64::new(2.0, 0.3), C64::new(0.1, 0.2), C64::new(0.3, 0.0), C64::new(1.0, 0.0)])
        })
        .unwrap();
        assert_eq!(g.hermitian_defect(), 0.0);
        assert_eq!(g.at(0)[(0, 0)].im, 0.0);
    }
}
