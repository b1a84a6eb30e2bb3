use pcflab_core::geometry::FieldGeometry;
use pcflab_core::homogeneous::{
    catalog, invariant_geometry, ode_flow, skt_residual, skt_residual_scan, HomogeneousSpace, OdeConfig, ScanConfig,
};
use pcflab_core::torus::{GridSpec, SpectralDiff};
use pcflab_core::{HermitianMetricField, SmallMat, C64};

fn space(name: &str) -> HomogeneousSpace {
    HomogeneousSpace::new(catalog::builtin(name).unwrap()).unwrap()
}

fn sample_metric() -> SmallMat {
    SmallMat::from_row_slice(
        2,
        &[C64::new(1.5, 0.0), C64::new(0.3, -0.2), C64::new(0.3, 0.2), C64::new(0.8, 0.0)],
    )
}

#[test]
fn abelian_algebra_agrees_with_constant_torus_metric() {
    let g = sample_metric();
    let inv = invariant_geometry(&space("abelian4"), &g).unwrap();
    let grid = GridSpec::new(2, 8).unwrap();
    let field = FieldGeometry::compute(&HermitianMetricField::constant(&g, grid.len()), &SpectralDiff::new(&grid), false)
        .unwrap();
    assert!(field.flow_rhs().max_abs() < 1e-14);
    assert_eq!(inv.flow_rhs().max_abs(), 0.0);
    assert_eq!(inv.torsion_norm_sq, 0.0);
}

#[test]
fn abelian_algebra_is_an_exact_fixed_point() {
    let g = sample_metric();
    let traj = ode_flow(&space("abelian4"), &g, &OdeConfig { t_end: 0.5, ..Default::default() }).unwrap();
    assert!(traj.degenerated.is_none());
    assert_eq!(traj.final_metric(), &g);
}

#[test]
fn unitary_group_identity_metric_is_a_fixed_point() {
    let sp = space("u2");
    let geo = invariant_geometry(&sp, &SmallMat::identity(2)).unwrap();
    assert!(geo.flow_rhs().max_abs() < 1e-14);
    assert!(geo.torsion_norm_sq > 0.1);
}

#[test]
fn nilpotent_control_is_skt() {
    let sp = space("h8");
    let res = skt_residual_scan(&sp, &ScanConfig { starts: 10, ..Default::default() });
    assert!(res.min_residual < 1e-8);
    assert!(skt_residual(&sp, &SmallMat::identity(3)) < 1e-20);
}

#[test]
fn complex_simple_algebra_has_no_skt_metric() {
    let res = skt_residual_scan(&space("sl2c"), &ScanConfig::default());
    assert!(res.residuals.len() >= 100);
    assert!(res.lower_bound > 0.0);
    assert!(res.min_residual >= res.lower_bound);
}

#[test]
fn complex_simple_algebra_flow_expands_volume() {
    let sp = space("sl2c");
    let traj = ode_flow(&sp, &SmallMat::identity(3), &OdeConfig { t_end: 0.2, ..Default::default() }).unwrap();
    assert!(traj.degenerated.is_none());
    let dets: Vec<f64> = traj.samples.iter().map(|s| s.det).collect();
    assert!(dets.windows(2).all(|w| w[1] > w[0]));
}
