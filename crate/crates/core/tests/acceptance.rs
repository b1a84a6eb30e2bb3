//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest harness.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use pcflab_core::flow::rhs::formulation_gap;
use pcflab_core::flow::{RunStatus, ADJOINT_SIGN};
use pcflab_core::geometry::pluriclosed_residual;
use pcflab_core::homogeneous::{
    catalog, invariant_geometry, ode_flow, skt_residual_scan, HomogeneousSpace, OdeConfig, ScanConfig,
};
use pcflab_core::monitors::runs::{standard_integrator, standard_system};
use pcflab_core::monitors::suite::{run_identity_suite, IdentitySuiteConfig, IdentitySuiteReport, FLIPPED_SUFFIX};
use pcflab_core::monitors::{kahler_invariance, monitored_run_stepwise_gap, KahlerInvarianceConfig, MonitorOptions};
use pcflab_core::torus::initial::random_pluriclosed;
use pcflab_core::torus::{GridSpec, SpectralDiff};
use pcflab_core::{SmallMat, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FORMULATION_TOL: f64 = 1e-6;
const CALIBRATION_SAMPLES: usize = 20;
const CALIBRATION_AMPLITUDE: f64 = 0.05;
const MIN_ORDER: f64 = 1.9;
const STOP_TOL: f64 = 1e-6;
const FINAL_TORSION_TOL: f64 = 1e-5;
const FINAL_RHO_TOL: f64 = 1e-5;
const SKT_TOL: f64 = 1e-8;
const MIN_STARTS: usize = 100;

const MONOTONE_FAMILIES: [&str; 4] = ["sup_coframe_norm_", "sup_Phi_", "inf_det_ratio", "sup_phi_sq"];

struct Line {
    criterion: &'static str,
    passed: bool,
    detail: String,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn formulations_agree() -> Line {
    let (res, took) = timed(|| -> pcflab_core::Result<(f64, f64)> {
        let grid = GridSpec::new(2, 12)?;
        let d = SpectralDiff::new(&grid);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let (mut worst_gap, mut worst_plc) = (0.0f64, 0.0f64);
        for _ in 0..CALIBRATION_SAMPLES {
            let (g, _) = random_pluriclosed(&d, CALIBRATION_AMPLITUDE, &mut rng)?;
            worst_plc = worst_plc.max(pluriclosed_residual(&g, &d)?);
            worst_gap = worst_gap.max(formulation_gap(&g, &d, ADJOINT_SIGN)?);
        }
        Ok((worst_gap, worst_plc))
    });
    match res {
        Ok((gap, plc)) => Line {
            criterion: "1 formulation agreement",
            passed: gap < FORMULATION_TOL && plc < 1e-10 && took < Duration::from_secs(60),
            detail: format!("max gap {gap:.2e} over {CALIBRATION_SAMPLES} metrics, pluriclosed residual {plc:.2e}, {took:.1?}"),
        },
        Err(e) => Line { criterion: "1 formulation agreement", passed: false, detail: e.to_string() },
    }
}

fn identity_orders(report: &IdentitySuiteReport, took: Duration) -> Line {
    let mut worst = f64::INFINITY;
    let mut passed = took < Duration::from_secs(600);
    let mut parts = vec![];
    for o in report.outcomes.iter().filter(|o| !o.id.ends_with(FLIPPED_SUFFIX)) {
        let ok = o.passed && o.order.is_none_or(|p| p >= MIN_ORDER);
        passed &= ok;
        if let Some(p) = o.order {
            worst = worst.min(p);
        }
        parts.push(format!("{}={}", o.id, o.order.map_or("exact".into(), |p| format!("{p:.3}"))));
    }
    Line {
        criterion: "2 identity orders",
        passed,
        detail: format!("worst order {worst:.3}; {}; {took:.1?}", parts.join(", ")),
    }
}

fn mutation_detected(report: &IdentitySuiteReport) -> Line {
    let mut passed = true;
    let mut parts = vec![];
    for m in report.outcomes.iter().filter(|o| o.id.ends_with(FLIPPED_SUFFIX)) {
        let base = m.id.trim_end_matches(FLIPPED_SUFFIX);
        let original = report.outcome(base).map(|o| o.passed).unwrap_or(false);
        passed &= original && !m.passed;
        parts.push(format!("{} fails={} (order {})", m.id, !m.passed, m.order.map_or("exact".into(), |p| format!("{p:.2}"))));
    }
    passed &= parts.len() == 3;
    Line { criterion: "7 Q-sign mutation", passed, detail: parts.join(", ") }
}

fn standard_run() -> (Line, Line) {
    let (res, took) = timed(|| {
        let sys = standard_system()?;
        let init = sys.initial_state(vec![])?;
        monitored_run_stepwise_gap(&sys, init, &standard_integrator(), MonitorOptions::default())
    });
    let (run, gap) = match res {
        Ok(r) => r,
        Err(e) => {
            let fail = |c| Line { criterion: c, passed: false, detail: e.to_string() };
            return (fail("3 maximum principles"), fail("4 convergence"));
        }
    };
    let mut monotone = true;
    let mut parts = vec![];
    for fam in MONOTONE_FAMILIES {
        let members: Vec<_> = run.series.iter().filter(|s| s.name.starts_with(fam)).collect();
        let bad = members.iter().filter(|s| s.verdict().is_violation()).count();
        monotone &= !members.is_empty() && bad == 0;
        parts.push(format!("{fam}*: {} series, {bad} violated", members.len()));
    }
    let mp = Line {
        criterion: "3 maximum principles",
        passed: monotone && took < Duration::from_secs(1800),
        detail: format!("{}; {} steps, {took:.1?}", parts.join("; "), run.outcome.steps),
    };
    let rhs = run.outcome.final_state.rhs_norm();
    let t_sup = run.last("sup_torsion_sq").unwrap_or(f64::NAN).sqrt();
    let rho = run.last("rho_norm").unwrap_or(f64::NAN);
    let rate = run.torsion_rate.unwrap_or(f64::NAN);
    let converged = run.outcome.status == RunStatus::Converged;
    let conv = Line {
        criterion: "4 convergence",
        passed: converged
            && rhs < STOP_TOL
            && t_sup < FINAL_TORSION_TOL
            && rho < FINAL_RHO_TOL
            && rate < 0.0
            && gap.worst < FORMULATION_TOL,
        detail: format!(
            "{:?} at t={:.3}, |-S+Q|={rhs:.2e}, |T|={t_sup:.2e}, |rho|={rho:.2e}, log sup|T|^2 slope {rate:.3}, \
             formulation gap {:.2e} over {} accepted steps",
            run.outcome.status, run.outcome.final_state.t, gap.worst, gap.steps_checked
        ),
    };
    (mp, conv)
}

fn kahler() -> Line {
    let cfg = KahlerInvarianceConfig::default();
    let (res, took) = timed(|| kahler_invariance(&cfg));
    match res {
        Ok(r) => Line {
            criterion: "5 Kähler invariance",
            passed: r.passed,
            detail: format!(
                "max sup|T|/E = {:.3} over {} samples to t={}, max sup|T| {:.2e}, {took:.1?}",
                r.worst_ratio,
                r.times.len(),
                cfg.t_end,
                r.torsion_sup.iter().copied().fold(0.0, f64::max)
            ),
        },
        Err(e) => Line { criterion: "5 Kähler invariance", passed: false, detail: e.to_string() },
    }
}

fn homogeneous_controls() -> Line {
    let (res, took) = timed(|| -> pcflab_core::Result<(bool, String)> {
        let space = |name| -> pcflab_core::Result<HomogeneousSpace> { HomogeneousSpace::new(catalog::builtin(name)?) };
        let abelian = space("abelian4")?;
        let g = SmallMat::from_row_slice(
            2,
            &[C64::new(1.5, 0.0), C64::new(0.3, -0.2), C64::new(0.3, 0.2), C64::new(0.8, 0.0)],
        );
        let rhs = invariant_geometry(&abelian, &g)?.flow_rhs().max_abs();
        let traj = ode_flow(&abelian, &g, &OdeConfig { t_end: 1.0, ..Default::default() })?;
        let fixed = rhs == 0.0 && traj.degenerated.is_none() && traj.final_metric() == &g;
        let h8 = skt_residual_scan(&space("h8")?, &ScanConfig::default());
        let sl = skt_residual_scan(&space("sl2c")?, &ScanConfig { starts: MIN_STARTS, ..Default::default() });
        let ok = fixed && h8.min_residual < SKT_TOL && sl.residuals.len() >= MIN_STARTS && sl.min_residual > 0.0;
        Ok((
            ok,
            format!(
                "abelian fixed point {fixed}, h8 min residual {:.2e}, sl2c min residual {:.4} over {} starts (certified bound {:.2})",
                h8.min_residual,
                sl.min_residual,
                sl.residuals.len(),
                sl.lower_bound
            ),
        ))
    });
    match res {
        Ok((ok, detail)) => Line {
            criterion: "6 homogeneous controls",
            passed: ok && took < Duration::from_secs(300),
            detail: format!("{detail}, {took:.1?}"),
        },
        Err(e) => Line { criterion: "6 homogeneous controls", passed: false, detail: e.to_string() },
    }
}

fn main() -> ExitCode {
    let mut lines = vec![formulations_agree()];
    let cfg = IdentitySuiteConfig { mutants: true, ..Default::default() };
    let (suite, took) = timed(|| run_identity_suite(&cfg));
    match suite {
        Ok(report) => {
            lines.push(identity_orders(&report, took));
            lines.push(mutation_detected(&report));
        }
        Err(e) => {
            lines.push(Line { criterion: "2 identity orders", passed: false, detail: e.to_string() });
            lines.push(Line { criterion: "7 Q-sign mutation", passed: false, detail: e.to_string() });
        }
    }
    let (mp, conv) = standard_run();
    lines.push(mp);
    lines.push(conv);
    lines.push(kahler());
    lines.push(homogeneous_controls());
    lines.sort_by_key(|l| l.criterion);
    for l in &lines {
        println!("{} criterion {}: {}", if l.passed { "PASS" } else { "FAIL" }, l.criterion, l.detail);
    }
    if lines.iter().all(|l| l.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
