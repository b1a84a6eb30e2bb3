//! Size of the difference of two Chern connections.

use crate::error::Result;
use crate::geometry::{chern_connection, covariant_derivative, tensor_norm_sq, Direction};
use crate::metric::HermitianMetricField;
use crate::torus::DerivativeOperator;

/// `sup |Upsilon|_h` and `sup |nabla_h Upsilon|_h` for `Upsilon = Gamma_g - Gamma_h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpsilonNorms {
    pub upsilon: f64,
    pub gradient: f64,
}

pub fn upsilon_norms(g: &HermitianMetricField, h: &HermitianMetricField, d: &dyn DerivativeOperator) -> Result<UpsilonNorms> {
    let cg = chern_connection(g, d)?;
    let ch = chern_connection(h, d)?;
    let hinv = h.inverse()?;
    let mut ups = cg.gamma.clone();
    ups.add_scaled(&ch.gamma, num_complex::Complex64::new(-1.0, 0.0))?;
    let sup = |v: Vec<f64>| v.into_iter().fold(0.0f64, f64::max).sqrt();
    let upsilon = sup(tensor_norm_sq(&ups, h, &hinv)?);
    let hol = tensor_norm_sq(&covariant_derivative(&ups, &ch.gamma, d, Direction::Holomorphic)?, h, &hinv)?;
    let anti = tensor_norm_sq(&covariant_derivative(&ups, &ch.gamma, d, Direction::Antiholomorphic)?, h, &hinv)?;
    let gradient = sup(hol.iter().zip(&anti).map(|(a, b)| a + b).collect());
    Ok(UpsilonNorms { upsilon, gradient })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SmallMat;
    use crate::torus::{GridSpec, SpectralDiff};
    use num_complex::Complex64 as C64;
    use std::f64::consts::PI;

    fn bumped(grid: &GridSpec, scale: f64) -> HermitianMetricField {
        let w: Vec<f64> = grid.sample(|x| 1.0 + 0.1 * (2.0 * PI * x[0]).cos() + 0.05 * (2.0 * PI * x[3]).sin());
        HermitianMetricField::from_fn(2, grid.len(), |p| {
            SmallMat::from_fn(2, |i, j| {
                let base = if i == j { C64::new(w[p] * (1.0 + i as f64), 0.0) } else { C64::new(0.0, 0.0) };
                base * scale
            })
        })
        .unwrap()
    }

    #[test]
    fn identical_and_rescaled_metrics_share_a_connection() {
        let grid = GridSpec::new(2, 8).unwrap();
        let d = SpectralDiff::new(&grid);
        let g = bumped(&grid, 1.0);
        let same = upsilon_norms(&g, &g, &d).unwrap();
        assert_eq!(same, UpsilonNorms { upsilon: 0.0, gradient: 0.0 });
        let scaled = upsilon_norms(&bumped(&grid, 3.5), &g, &d).unwrap();
        assert!(scaled.upsilon < 1e-12 && scaled.gradient < 1e-10, "{scaled:?}");
        let flat = HermitianMetricField::flat(2, grid.len());
        let diff = upsilon_norms(&g, &flat, &d).unwrap();
        assert!(diff.upsilon > 0.1);
    }
}
