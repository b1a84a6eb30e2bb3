//! Flat complex tori `C^n / Z^{2n}` sampled on uniform periodic grids.

pub mod frames;
pub mod grid;
pub mod initial;
pub mod snapshot;
pub mod spectral;

pub use frames::{holomorphic_frame_sections, Variance};
pub use grid::GridSpec;
pub use initial::{make_kahler_initial, make_pluriclosed_initial, FourierTerm, PotentialForm, RealTerm};
pub use spectral::{Deriv, DerivativeOperator, FiniteDiff, SpectralDiff};

/// Extremes of a real field: `(sup, argmax, inf, argmin)`.
///
/// Ties resolve to the lowest linear index. NaN entries win both extremes so
/// that corrupted data is never hidden.
pub fn sup_inf_scan(values: &[f64]) -> (f64, usize, f64, usize) {
    let mut sup = (f64::NEG_INFINITY, 0);
    let mut inf = (f64::INFINITY, 0);
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            return (v, i, v, i);
        }
        if v > sup.0 {
            sup = (v, i);
        }
        if v < inf.0 {
            inf = (v, i);
        }
    }
    (sup.0, sup.1, inf.0, inf.1)
}
