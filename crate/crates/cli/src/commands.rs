//! Command implementations. Each returns the run status; errors map to exit codes in `main`.

use pcflab_core::flow::{calibrate_adjoint_sign, ExistenceRecord, FlowState, FlowSystem, RunStatus, ADJOINT_SIGN};
use pcflab_core::homogeneous::{ode_flow, real_metric, skt_residual_scan, HomogeneousSpace};
use pcflab_core::monitors::suite::{cyclic_potential, run_identity_suite, IdentitySuiteConfig};
use pcflab_core::monitors::{monitored_run, monitored_run_stepwise_gap, MonitorSeries, MonitoredRun, StepwiseGap, Trend, Verdict};
use pcflab_core::tensor::{ComplexTensorField, Slot};
use pcflab_core::torus::initial::{random_pluriclosed, PotentialForm};
use pcflab_core::torus::snapshot::{Precision, Snapshot};
use pcflab_core::torus::{make_kahler_initial, make_pluriclosed_initial, DerivativeOperator, GridSpec, SpectralDiff};
use pcflab_core::{Error, HermitianMetricField, SmallMat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::config::{ExperimentConfig, InitialData, LoadedConfig, SnapshotPrecision};
use crate::output::{sha256_hex, OutputDir};
use crate::{Context, Failure, Status};

fn core_err(e: Error) -> Failure {
    match e {
        Error::Positivity { .. } | Error::Grid(_) | Error::Catalog { .. } | Error::Algebra(_) => {
            Failure::Config(e.to_string())
        }
        other => Failure::Run(other.to_string()),
    }
}

fn progress(ctx: &Context, msg: impl AsRef<str>) {
    if !ctx.quiet {
        eprintln!("{}", msg.as_ref());
    }
}

#[derive(Serialize)]
struct Header<'a> {
    command: &'a str,
    config_sha256: String,
    seed: u64,
    config: &'a ExperimentConfig,
}

fn header<'a>(command: &'a str, cfg: &'a LoadedConfig, ctx: &Context) -> Header<'a> {
    Header { command, config_sha256: sha256_hex(cfg.text.as_bytes()), seed: ctx.seed, config: &cfg.config }
}

/// Flow system for a torus config.
pub fn torus_system(cfg: &LoadedConfig, seed: u64) -> Result<FlowSystem, Failure> {
    let (n, points, dealias) = cfg.torus()?;
    let grid = GridSpec::new(n, points).map_err(core_err)?;
    let d = SpectralDiff::new(&grid).with_dealias(dealias);
    let flat = || HermitianMetricField::flat(n, grid.len());
    let no_eta = || ComplexTensorField::zeros(n, grid.len(), vec![Slot::Down, Slot::Down]).map_err(core_err);
    let pluriclosed = |alpha: PotentialForm, d: SpectralDiff| -> Result<FlowSystem, Failure> {
        let (g0, eta) = make_pluriclosed_initial(&alpha, &d).map_err(core_err)?;
        Ok(FlowSystem::new(d, g0, eta))
    };
    match &cfg.config.initial {
        InitialData::Flat => Ok(FlowSystem::new(d, flat(), no_eta()?)),
        InitialData::Cyclic { epsilon } => pluriclosed(cyclic_potential(&grid, *epsilon).map_err(core_err)?, d),
        InitialData::Modes { terms } => {
            pluriclosed(PotentialForm::from_terms(&grid, terms.clone()).map_err(|e| Failure::Config(e.to_string()))?, d)
        }
        InitialData::Random { amplitude } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (_, alpha) = random_pluriclosed(&d, *amplitude, &mut rng).map_err(core_err)?;
            pluriclosed(alpha, d)
        }
        InitialData::Kahler { terms } => {
            let g0 = make_kahler_initial(terms, &d).map_err(|e| Failure::Config(e.to_string()))?;
            Ok(FlowSystem::new(d, g0, no_eta()?))
        }
        InitialData::Metric { .. } => Err(Failure::Config("`metric` initial data applies to algebras only".into())),
    }
}

#[derive(Serialize)]
struct SeriesVerdict {
    name: String,
    trend: Trend,
    verdict: Verdict,
    samples: usize,
    first: Option<f64>,
    last: Option<f64>,
}

#[derive(Serialize)]
struct GapReport {
    worst: f64,
    steps_checked: usize,
    tol: f64,
    passed: bool,
}

#[derive(Serialize)]
struct FlowRunSummary<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    status: RunStatus,
    exit: Status,
    t_final: f64,
    steps: usize,
    rejections: usize,
    final_rhs_norm: f64,
    final_torsion_sup: Option<f64>,
    final_rho_norm: Option<f64>,
    violated: Vec<String>,
    verdicts: Vec<SeriesVerdict>,
    fitted_rates: Value,
    stepwise_formulation_gap: Option<GapReport>,
    existence: ExistenceRecord,
}

fn series_csv(out: &mut OutputDir, s: &MonitorSeries) -> Result<(), Failure> {
    let rows: Vec<Vec<f64>> = s.samples.iter().zip(&s.slack).map(|(&(t, v), &sl)| vec![t, v, sl]).collect();
    out.write_csv(&format!("series/{}.csv", s.name), &["t", "value", "slack"], &rows)
}

fn snapshot(out: &mut OutputDir, precision: SnapshotPrecision, grid: &GridSpec, state: &FlowState) -> Result<(), Failure> {
    let precision = match precision {
        SnapshotPrecision::None => return Ok(()),
        SnapshotPrecision::Complex64 => Precision::Complex64,
        SnapshotPrecision::Complex128 => Precision::Complex128,
    };
    let snap = Snapshot {
        grid: grid.clone(),
        t: state.t,
        fields: vec![("g".into(), state.g().as_tensor().clone()), ("alpha".into(), state.alpha().clone())],
    };
    let mut bytes = Vec::new();
    snap.write_to(&mut bytes, precision).map_err(|e| Failure::Run(e.to_string()))?;
    out.write_bytes("final.snap", &bytes)
}

/// `pcflab flow run`.
pub fn flow_run(cfg: &LoadedConfig, ctx: &Context) -> Result<Status, Failure> {
    let c = &cfg.config;
    let sys = torus_system(cfg, ctx.seed)?;
    let init = sys.initial_state(vec![]).map_err(core_err)?;
    let opts = c.monitors.options();
    progress(ctx, format!("flow run: grid {} points, dt {:e}, t_max {}", sys.d.grid().len(), c.integrator.dt, c.integrator.t_max));
    let (run, gap): (MonitoredRun, Option<StepwiseGap>) = if c.monitors.stepwise_gap {
        let (r, g) = monitored_run_stepwise_gap(&sys, init, &c.integrator, opts).map_err(core_err)?;
        (r, Some(g))
    } else {
        let quiet = ctx.quiet;
        let mut report = |_: &FlowSystem, s: &FlowState| {
            if !quiet {
                eprintln!("  t = {:.5}  steps {}  sup|-S+Q| = {:.3e}", s.t, s.steps, s.rhs_norm());
            }
            Ok(())
        };
        (monitored_run(&sys, init, &c.integrator, opts, Some(&mut report)).map_err(core_err)?, None)
    };
    let mut out = OutputDir::create(&ctx.out)?;
    for s in &run.series {
        series_csv(&mut out, s)?;
    }
    snapshot(&mut out, c.output.snapshot, sys.d.grid(), &run.outcome.final_state)?;
    if c.output.plot_script {
        out.write_plot_script()?;
    }
    let gap = gap.map(|g| GapReport {
        worst: g.worst,
        steps_checked: g.steps_checked,
        tol: c.monitors.gap_tol,
        passed: g.worst < c.monitors.gap_tol,
    });
    let mut violated: Vec<String> = run.violations.iter().map(|(n, _)| n.clone()).collect();
    if gap.as_ref().is_some_and(|g| !g.passed) {
        violated.push("stepwise_formulation_gap".into());
    }
    let degenerated = matches!(run.outcome.status, RunStatus::Degenerated | RunStatus::NonFinite);
    let exit = if !violated.is_empty() {
        Status::Violation
    } else if degenerated {
        Status::Degeneration
    } else {
        Status::Ok
    };
    let fs = &run.outcome.final_state;
    let summary = FlowRunSummary {
        header: header("flow run", cfg, ctx),
        status: run.outcome.status,
        exit,
        t_final: fs.t,
        steps: run.outcome.steps,
        rejections: run.outcome.rejections,
        final_rhs_norm: fs.rhs_norm(),
        final_torsion_sup: run.last("sup_torsion_sq").map(f64::sqrt),
        final_rho_norm: run.last("rho_norm"),
        verdicts: run
            .series
            .iter()
            .map(|s| SeriesVerdict {
                name: s.name.clone(),
                trend: s.trend,
                verdict: s.verdict(),
                samples: s.samples.len(),
                first: s.samples.first().map(|x| x.1),
                last: s.last(),
            })
            .collect(),
        violated: violated.clone(),
        fitted_rates: serde_json::json!({ "log_sup_torsion_sq": run.torsion_rate }),
        stepwise_formulation_gap: gap,
        existence: run.outcome.existence.clone(),
    };
    let path = out.finish(summary)?;
    progress(ctx, format!("{:?} at t = {:.4} after {} steps; summary in {}", run.outcome.status, fs.t, run.outcome.steps, path.display()));
    for v in &violated {
        eprintln!("violated: {v}");
    }
    Ok(exit)
}

#[derive(Serialize)]
struct IdentityLine {
    id: String,
    coarse_residual: f64,
    fine_residual: f64,
    /// Observed order, or `"exact"` when both residuals are at rounding level.
    order: Value,
    min_margin: Option<f64>,
    passed: bool,
}

#[derive(Serialize)]
struct Calibration {
    samples: usize,
    amplitude: f64,
    tol: f64,
    expected_sign: f64,
    calibrated_sign: Option<f64>,
    error: Option<String>,
    passed: bool,
}

#[derive(Serialize)]
struct IdentitySummary<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    exit: Status,
    min_order: f64,
    identities: Vec<IdentityLine>,
    calibration: Calibration,
}

/// `pcflab flow check-identities`.
pub fn check_identities(cfg: &LoadedConfig, ctx: &Context) -> Result<Status, Failure> {
    let c = &cfg.config;
    let (n, points, dealias) = cfg.torus()?;
    let epsilon = match c.initial {
        InitialData::Flat => 0.0,
        InitialData::Cyclic { epsilon } => epsilon,
        _ => return Err(Failure::Config("check-identities needs `flat` or `cyclic` initial data".into())),
    };
    let s = &c.identities;
    let suite_cfg = IdentitySuiteConfig {
        n,
        points,
        epsilon,
        dt: s.dt,
        sample_every: s.sample_every,
        t_end: s.t_end,
        dealias,
        margin_tol: s.margin_tol,
        flip: s.flip,
        mutants: false,
    };
    progress(ctx, format!("identity suite: N = {points}, dt = {:e} and {:e}, t_end = {}", s.dt, s.dt / 2.0, s.t_end));
    let report = run_identity_suite(&suite_cfg).map_err(core_err)?;

    progress(ctx, format!("calibrating the adjoint sign on {} random metrics", s.calibration_samples));
    let grid = GridSpec::new(n, points).map_err(core_err)?;
    let d = SpectralDiff::new(&grid).with_dealias(dealias);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut samples = Vec::with_capacity(s.calibration_samples);
    for _ in 0..s.calibration_samples {
        samples.push(random_pluriclosed(&d, s.calibration_amplitude, &mut rng).map_err(core_err)?.0);
    }
    let cal = calibrate_adjoint_sign(&samples, &d, s.calibration_tol);
    let calibration = Calibration {
        samples: s.calibration_samples,
        amplitude: s.calibration_amplitude,
        tol: s.calibration_tol,
        expected_sign: ADJOINT_SIGN,
        calibrated_sign: cal.as_ref().ok().copied(),
        error: cal.as_ref().err().map(|e| e.to_string()),
        passed: cal.as_ref().is_ok_and(|&sg| sg == ADJOINT_SIGN),
    };

    let mut out = OutputDir::create(&ctx.out)?;
    for (label, runs) in [("coarse", &report.coarse), ("fine", &report.fine)] {
        for r in runs.iter() {
            let rows: Vec<Vec<f64>> =
                (0..r.times.len()).map(|k| vec![r.times[k], r.residual[k], r.lhs_sup[k], r.rhs_sup[k]]).collect();
            out.write_csv(&format!("identities/{}_{label}.csv", r.id), &["t", "residual", "lhs_sup", "rhs_sup"], &rows)?;
        }
    }
    if c.output.plot_script {
        out.write_plot_script()?;
    }
    let identities: Vec<IdentityLine> = report
        .outcomes
        .iter()
        .map(|o| IdentityLine {
            id: o.id.clone(),
            coarse_residual: o.coarse_residual,
            fine_residual: o.fine_residual,
            order: o.order.map_or(Value::from("exact"), Value::from),
            min_margin: o.min_margin,
            passed: o.passed && o.order.is_none_or(|p| p >= s.min_order),
        })
        .collect();
    let ok = identities.iter().all(|l| l.passed) && calibration.passed;
    for l in &identities {
        let order = l.order.as_f64().map_or("exact".to_string(), |p| format!("{p:.3}"));
        progress(ctx, format!("  {:<28} order {order:<8} {}", l.id, if l.passed { "ok" } else { "FAILED" }));
    }
    let exit = if ok { Status::Ok } else { Status::Violation };
    let summary = IdentitySummary { header: header("flow check-identities", cfg, ctx), exit, min_order: s.min_order, identities, calibration };
    out.finish(summary)?;
    Ok(exit)
}

fn matrix_parts(m: &SmallMat) -> Value {
    let n = m.dim();
    let real: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect();
    let imag: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect();
    serde_json::json!({ "real": real, "imag": imag })
}

fn space(cfg: &LoadedConfig) -> Result<HomogeneousSpace, Failure> {
    HomogeneousSpace::new(cfg.algebra()?).map_err(core_err)
}

/// `pcflab homog run`.
pub fn homog_run(cfg: &LoadedConfig, ctx: &Context) -> Result<Status, Failure> {
    let sp = space(cfg)?;
    let g0 = cfg.algebra_metric(sp.n())?;
    progress(ctx, format!("invariant flow on {}: dt {:e}, t_end {}", sp.spec.id, cfg.config.ode.dt, cfg.config.ode.t_end));
    let traj = ode_flow(&sp, &g0, &cfg.config.ode).map_err(core_err)?;
    let mut out = OutputDir::create(&ctx.out)?;
    let rows: Vec<Vec<f64>> =
        traj.samples.iter().map(|s| vec![s.t, s.torsion_norm_sq, s.det, s.eigen_spread, s.logdet_rate]).collect();
    out.write_csv("trajectory.csv", &["t", "torsion_norm_sq", "det", "eigen_spread", "logdet_rate"], &rows)?;
    if cfg.config.output.plot_script {
        out.write_plot_script()?;
    }
    let gf = traj.final_metric();
    let exit = if traj.degenerated.is_some() { Status::Degeneration } else { Status::Ok };
    let summary = serde_json::json!({
        "algebra": sp.spec.id,
        "t_final": traj.samples.last().map(|s| s.t),
        "samples": traj.samples.len(),
        "final_metric": matrix_parts(gf),
        "final_real_metric": real_metric(&sp, gf),
        "max_change": gf.sub(&g0).max_abs(),
        "logdet_residual": traj.logdet_residual,
        "degenerated": traj.degenerated,
        "exit": exit,
    });
    out.finish(merge(header("homog run", cfg, ctx), summary))?;
    if let Some(why) = &traj.degenerated {
        eprintln!("degenerated: {why}");
    }
    Ok(exit)
}

/// `pcflab homog skt-scan`.
pub fn homog_skt_scan(cfg: &LoadedConfig, ctx: &Context) -> Result<Status, Failure> {
    let sp = space(cfg)?;
    let scan_cfg = cfg.config.scan.with_seed(ctx.seed);
    progress(ctx, format!("SKT scan on {}: {} starts", sp.spec.id, scan_cfg.starts));
    let res = skt_residual_scan(&sp, &scan_cfg);
    let mut out = OutputDir::create(&ctx.out)?;
    let rows: Vec<Vec<f64>> = res.residuals.iter().enumerate().map(|(k, &r)| vec![k as f64, r]).collect();
    out.write_csv("residuals.csv", &["start", "residual"], &rows)?;
    if cfg.config.output.plot_script {
        out.write_plot_script()?;
    }
    let summary = serde_json::json!({
        "algebra": sp.spec.id,
        "starts": res.residuals.len(),
        "min_residual": res.min_residual,
        "witness": matrix_parts(&res.witness),
        "lower_bound": res.lower_bound,
        "exit": Status::Ok,
    });
    out.finish(merge(header("homog skt-scan", cfg, ctx), summary))?;
    progress(ctx, format!("min residual {:.6e} (certified lower bound {:.6e})", res.min_residual, res.lower_bound));
    Ok(Status::Ok)
}

fn merge(head: Header<'_>, rest: Value) -> Value {
    let mut v = serde_json::to_value(head).expect("header serializes");
    if let (Some(a), Value::Object(b)) = (v.as_object_mut(), rest) {
        a.extend(b);
    }
    v
}
