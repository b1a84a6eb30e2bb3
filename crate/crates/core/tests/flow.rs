use pcflab_core::flow::{calibrate_adjoint_sign, run, FlowState, FlowSystem, IntegratorConfig, RunStatus, ADJOINT_SIGN};
use pcflab_core::monitors::runs::monitored_run;
use pcflab_core::monitors::suite::cyclic_system;
use pcflab_core::monitors::{MonitorOptions, Verdict};
use pcflab_core::tensor::{ComplexTensorField, Slot};
use pcflab_core::torus::initial::random_pluriclosed;
use pcflab_core::torus::{GridSpec, SpectralDiff};
use pcflab_core::HermitianMetricField;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn final_state(sys: &FlowSystem, dt: f64, t_max: f64) -> FlowState {
    let cfg = IntegratorConfig { dt, t_max, enforce_cfl: false, step_rejection: false, sample_every: 1000, ..Default::default() };
    let init = sys.initial_state(vec![]).unwrap();
    let mut ignore = |_: &FlowSystem, _: &FlowState| Ok(());
    run(sys, init, &cfg, &mut ignore).unwrap().final_state
}

#[test]
fn flat_metric_is_stationary() {
    let grid = GridSpec::new(2, 8).unwrap();
    let flat = HermitianMetricField::flat(2, grid.len());
    let eta = ComplexTensorField::zeros(2, grid.len(), vec![Slot::Down, Slot::Down]).unwrap();
    let sys = FlowSystem::new(SpectralDiff::new(&grid), flat.clone(), eta);
    let cfg = IntegratorConfig { dt: 1e-3, t_max: 1.0, enforce_cfl: false, sample_every: 100, ..Default::default() };
    let mut ignore = |_: &FlowSystem, _: &FlowState| Ok(());
    let out = run(&sys, sys.initial_state(vec![]).unwrap(), &cfg, &mut ignore).unwrap();
    assert_eq!(out.steps, 1000);
    assert!(out.final_state.g().as_tensor().max_abs_diff(flat.as_tensor()).unwrap() <= 1e-15);
    assert!(out.final_state.alpha().max_abs() <= 1e-15);
}

#[test]
fn rk4_converges_at_fourth_order() {
    let sys = cyclic_system(2, 8, 0.05, false).unwrap();
    let t = 0.02;
    let g1 = final_state(&sys, 2e-3, t);
    let g2 = final_state(&sys, 1e-3, t);
    let g3 = final_state(&sys, 5e-4, t);
    let e1 = g1.g().as_tensor().max_abs_diff(g2.g().as_tensor()).unwrap();
    let e2 = g2.g().as_tensor().max_abs_diff(g3.g().as_tensor()).unwrap();
    let order = (e1 / e2).log2();
    assert!((order - 4.0).abs() < 0.3, "observed order {order} ({e1:e}, {e2:e})");
}

#[test]
fn adjoint_sign_calibrates_on_random_pluriclosed_metrics() {
    let grid = GridSpec::new(2, 12).unwrap();
    let d = SpectralDiff::new(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let samples: Vec<_> = (0..4).map(|_| random_pluriclosed(&d, 0.05, &mut rng).unwrap().0).collect();
    assert_eq!(calibrate_adjoint_sign(&samples, &d, 1e-6).unwrap(), ADJOINT_SIGN);
}

#[test]
fn short_run_tracks_consistency_and_formulation_gap() {
    let sys = cyclic_system(2, 12, 0.05, true).unwrap();
    let cfg = IntegratorConfig { dt: 1e-3, t_max: 0.01, sample_every: 5, ..Default::default() };
    let res = monitored_run(&sys, sys.initial_state(vec![]).unwrap(), &cfg, MonitorOptions::default(), None).unwrap();
    assert_eq!(res.outcome.status, RunStatus::ReachedTimeLimit);
    assert!(res.violations.is_empty(), "{:?}", res.violations);
    let worst = |name: &str| res.series(name).unwrap().values().fold(0.0, f64::max);
    assert!(worst("consistency_residual") < 1e-8);
    assert!(worst("formulation_gap") < 1e-6);
    assert!(worst("pluriclosed_residual") < 1e-8);
    assert!(worst("sandwich_defect") < 1e-12);
}

#[test]
fn oversized_step_is_flagged() {
    let sys = cyclic_system(2, 8, 0.05, true).unwrap();
    let init = sys.initial_state(vec![]).unwrap();
    let dt = 5.0 * sys.cfl_bound(&init, 1.0);
    let cfg = IntegratorConfig {
        dt,
        t_max: 40.0 * dt,
        enforce_cfl: false,
        step_rejection: false,
        sample_every: 1,
        ..Default::default()
    };
    let opts = MonitorOptions { formulation_gap: false, pluriclosed_residual: false, upsilon: false, ..Default::default() };
    let res = monitored_run(&sys, init, &cfg, opts, None).unwrap();
    assert!(
        res.violations.iter().any(|(_, v)| matches!(v, Verdict::Violated { .. })),
        "status {:?}, no violated verdict",
        res.outcome.status
    );
}
