//! Constant holomorphic frames of tensor powers of `T_{1,0}` and its dual.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::GridSpec;
use crate::error::{Error, Result};
use crate::tensor::{ComplexTensorField, Slot};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    /// `dz^{i_1} (x) ... (x) dz^{i_p}`
    Co,
    /// `d/dz^{i_1} (x) ... (x) d/dz^{i_p}`
    Contra,
}

/// The `n^p` constant sections spanning `(T*_{1,0})^{(x)p}` or `(T_{1,0})^{(x)p}`,
/// ordered by the row-major multi-index `(i_1, ..., i_p)`.
pub fn holomorphic_frame_sections(grid: &GridSpec, variance: Variance, p: usize) -> Result<Vec<ComplexTensorField>> {
    if p == 0 {
        return Err(Error::Invalid("tensor power must be at least 1".into()));
    }
    let slot = match variance {
        Variance::Co => Slot::Down,
        Variance::Contra => Slot::Up,
    };
    let n = grid.n();
    let ncomp = n.pow(p as u32);
    (0..ncomp)
        .map(|c| {
            let mut comps = vec![C64::new(0.0, 0.0); ncomp];
            comps[c] = C64::new(1.0, 0.0);
            ComplexTensorField::constant(n, grid.len(), vec![slot; p], &comps)
        })
        .collect()
}

/// Rank of the evaluation map `(s_1, ..., s_m) -> fiber` at one point.
pub fn evaluation_rank(sections: &[ComplexTensorField], point: usize) -> usize {
    let rows: Vec<Vec<C64>> = sections.iter().map(|s| s.at(point)).collect();
    let cols = rows.first().map_or(0, |r| r.len());
    let m = nalgebra::DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    m.rank(1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::tensor_norm_sq;
    use crate::linalg::SmallMat;
    use crate::metric::HermitianMetricField;
    use crate::torus::{DerivativeOperator, SpectralDiff};

    #[test]
    fn coframe_spans_every_fiber() {
        let grid = GridSpec::new(2, 8).unwrap();
        let s = holomorphic_frame_sections(&grid, Variance::Co, 1).unwrap();
        assert_eq!(s.len(), 2);
        for p in [0, 17, grid.len() - 1] {
            assert_eq!(evaluation_rank(&s, p), 2);
        }
        let s2 = holomorphic_frame_sections(&grid, Variance::Contra, 2).unwrap();
        assert_eq!(evaluation_rank(&s2, 5), 4);
    }

    #[test]
    fn coframe_norm_is_inverse_metric_entry() {
        let grid = GridSpec::new(2, 8).unwrap();
        let g = HermitianMetricField::from_fn(2, grid.len(), |p| {
            let a = 0.1 * (p as f64 * 0.37).sin();
            SmallMat::from_row_slice(2, &[C64::new(1.5, 0.0), C64::new(a, 0.2), C64::new(a, -0.2), C64::new(1.0, 0.0)])
        })
        .unwrap();
        let gi = g.inverse().unwrap();
        let s = holomorphic_frame_sections(&grid, Variance::Co, 1).unwrap();
        let nrm = tensor_norm_sq(&s[0], &g, &gi).unwrap();
        for p in 0..grid.len() {
            assert!((nrm[p] - gi[p][(0, 0)].re).abs() < 1e-14);
        }
    }

    #[test]
    fn sections_are_antiholomorphically_constant() {
        let grid = GridSpec::new(2, 8).unwrap();
        let d = SpectralDiff::new(&grid);
        for s in holomorphic_frame_sections(&grid, Variance::Contra, 2).unwrap() {
            for c in 0..s.ncomp() {
                for j in 0..2 {
                    let v = d.dzbar(s.component(c), j);
                    assert!(v.iter().all(|z| z.norm() < 1e-14));
                }
            }
        }
    }
}
