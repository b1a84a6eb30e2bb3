use std::f64::consts::PI;

use pcflab_core::geometry::{
    chern_connection, compatibility_residual, log_det, minus_ddbar, pluriclosed_residual, ricci_rho, ricci_s, torsion,
    FieldGeometry,
};
use pcflab_core::torus::initial::random_pluriclosed;
use pcflab_core::torus::{make_kahler_initial, DerivativeOperator, FiniteDiff, GridSpec, RealTerm, SpectralDiff};
use pcflab_core::{HermitianMetricField, SmallMat, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `g_{1 1bar} = g_{2 2bar} = 1`, `g_{1 2bar} = eps exp(2 pi i x^1)`.
fn twisted_metric(grid: &GridSpec, eps: f64) -> HermitianMetricField {
    let w = grid.sample(|x| C64::from_polar(eps, 2.0 * PI * x[0]));
    HermitianMetricField::from_fn(2, grid.len(), |p| {
        SmallMat::from_row_slice(2, &[C64::new(1.0, 0.0), w[p], w[p].conj(), C64::new(1.0, 0.0)])
    })
    .unwrap()
}

/// Closed form: only `T_{1 2 1bar} = -T_{2 1 1bar} = -i pi eps exp(-2 pi i x^1)` survives.
fn twisted_torsion(grid: &GridSpec, eps: f64) -> Vec<[C64; 8]> {
    grid.sample(|x| {
        let v = C64::new(0.0, -PI * eps) * C64::from_polar(1.0, -2.0 * PI * x[0]);
        let mut t = [C64::new(0.0, 0.0); 8];
        t[2] = v; // (1, 2, 1bar)
        t[4] = -v; // (2, 1, 1bar)
        t
    })
}

fn torsion_error(d: &dyn DerivativeOperator, eps: f64) -> f64 {
    let grid = d.grid().clone();
    let g = twisted_metric(&grid, eps);
    let t = torsion(&g, d).unwrap();
    let exact = twisted_torsion(&grid, eps);
    let mut worst = 0.0f64;
    for (p, ex) in exact.iter().enumerate() {
        for (c, e) in ex.iter().enumerate() {
            worst = worst.max((t.component(c)[p] - e).norm());
        }
    }
    worst
}

#[test]
fn spectral_torsion_matches_closed_form() {
    let grid = GridSpec::new(2, 8).unwrap();
    assert!(torsion_error(&SpectralDiff::new(&grid), 0.3) < 1e-12);
}

#[test]
fn finite_difference_torsion_converges_at_second_order() {
    let coarse = torsion_error(&FiniteDiff::new(&GridSpec::new(2, 8).unwrap()), 0.3);
    let fine = torsion_error(&FiniteDiff::new(&GridSpec::new(2, 16).unwrap()), 0.3);
    let order = (coarse / fine).log2();
    assert!((order - 2.0).abs() < 0.15, "observed order {order}");
}

#[test]
fn chern_ricci_form_is_minus_ddbar_log_det() {
    let grid = GridSpec::new(2, 12).unwrap();
    let d = SpectralDiff::new(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // log det g is not band-limited, so the amplitude is kept small enough
    // for its aliased tail to sit below the tolerance.
    let (g, _) = random_pluriclosed(&d, 0.05, &mut rng).unwrap();
    let rho = ricci_rho(&g, &d).unwrap();
    let oracle = minus_ddbar(&log_det(&g), &d);
    let diff = rho.max_abs_diff(&oracle).unwrap();
    assert!(rho.max_abs() > 0.1);
    assert!(diff < 1e-8 * rho.max_abs(), "{diff:e}");
}

#[test]
fn kahler_metrics_have_equal_ricci_forms_and_no_torsion() {
    let grid = GridSpec::new(2, 12).unwrap();
    let d = SpectralDiff::new(&grid);
    let terms = [
        RealTerm { wavevector: vec![1, 0, 0, 1], cos: 0.01, sin: 0.004 },
        RealTerm { wavevector: vec![0, 1, 1, 0], cos: -0.006, sin: 0.0 },
    ];
    let g = make_kahler_initial(&terms, &d).unwrap();
    let s = ricci_s(&g, &d).unwrap();
    let rho = ricci_rho(&g, &d).unwrap();
    assert!(rho.max_abs() > 1e-3);
    assert!(s.max_abs_diff(&rho).unwrap() < 1e-8 * rho.max_abs());
    assert!(torsion(&g, &d).unwrap().max_abs() < 1e-12);
}

#[test]
fn connection_is_metric_compatible() {
    let grid = GridSpec::new(2, 12).unwrap();
    let d = SpectralDiff::new(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (g, _) = random_pluriclosed(&d, 0.3, &mut rng).unwrap();
    let cache = chern_connection(&g, &d).unwrap();
    assert!(compatibility_residual(&g, &cache, &d).unwrap() < 1e-10);
}

#[test]
fn pluriclosed_residual_separates_pluriclosed_data() {
    let grid = GridSpec::new(2, 12).unwrap();
    let d = SpectralDiff::new(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (g, _) = random_pluriclosed(&d, 0.3, &mut rng).unwrap();
    assert!(pluriclosed_residual(&g, &d).unwrap() < 1e-10);
    // g_{1 1bar} = 1 + eps cos(2 pi x^2) is not pluriclosed.
    let w = grid.sample(|x| 0.1 * (2.0 * PI * x[2]).cos());
    let bad = HermitianMetricField::from_fn(2, grid.len(), |p| {
        let mut m = SmallMat::identity(2);
        m[(0, 0)] = C64::new(1.0 + w[p], 0.0);
        m
    })
    .unwrap();
    assert!(pluriclosed_residual(&bad, &d).unwrap() > 1e-2);
}

#[test]
fn flow_rhs_of_flat_metric_vanishes() {
    let grid = GridSpec::new(2, 8).unwrap();
    let d = SpectralDiff::new(&grid);
    let geo = FieldGeometry::compute(&HermitianMetricField::flat(2, grid.len()), &d, false).unwrap();
    assert_eq!(geo.flow_rhs().max_abs(), 0.0);
}
