//! The flow restricted to left-invariant metrics: `dg/dt = -S + Q`, integrated with RK4.

use serde::{Deserialize, Serialize};

use super::geometry::{check_metric, invariant_geometry, HomogeneousSpace};
use crate::error::{Error, Result};
use crate::geometry::kernels;
use crate::linalg::SmallMat;
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeConfig {
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
    /// Stop when `lambda_max / lambda_min` exceeds this.
    pub max_spread: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 1.0, sample_every: 10, max_spread: 1e10 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OdeSample {
    pub t: f64,
    pub torsion_norm_sq: f64,
    pub det: f64,
    pub eigen_spread: f64,
    /// `|T|^2 - tr_g rho(g_0)`, the predicted rate of `log det g`.
    pub logdet_rate: f64,
}

#[derive(Clone, Debug)]
pub struct OdeTrajectory {
    pub samples: Vec<OdeSample>,
    pub metrics: Vec<SmallMat>,
    /// Largest gap between centered differences of `log det g` and `logdet_rate`.
    pub logdet_residual: f64,
    /// Set when the run stopped before `t_end`.
    pub degenerated: Option<String>,
}

impl OdeTrajectory {
    pub fn final_metric(&self) -> &SmallMat {
        self.metrics.last().expect("trajectory has at least the initial sample")
    }
}

fn rhs(space: &HomogeneousSpace, g: &SmallMat) -> Result<SmallMat> {
    Ok(invariant_geometry(space, g)?.flow_rhs())
}

fn axpy(g: &SmallMat, k: &SmallMat, h: f64) -> SmallMat {
    g.add(&k.scale(C64::new(h, 0.0)))
}

/// One classical RK4 step.
pub fn rk4_step(space: &HomogeneousSpace, g: &SmallMat, dt: f64) -> Result<SmallMat> {
    let k1 = rhs(space, g)?;
    let k2 = rhs(space, &axpy(g, &k1, 0.5 * dt))?;
    let k3 = rhs(space, &axpy(g, &k2, 0.5 * dt))?;
    let k4 = rhs(space, &axpy(g, &k3, dt))?;
    let sum = k1.add(&k2.scale(C64::new(2.0, 0.0))).add(&k3.scale(C64::new(2.0, 0.0))).add(&k4);
    Ok(axpy(g, &sum, dt / 6.0).hermitian_part())
}

fn spread(g: &SmallMat) -> f64 {
    let ev = g.hermitian_eigenvalues();
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi / lo
}

pub fn ode_flow(space: &HomogeneousSpace, g0: &SmallMat, cfg: &OdeConfig) -> Result<OdeTrajectory> {
    if !(cfg.dt > 0.0) || !(cfg.t_end >= 0.0) || cfg.sample_every == 0 {
        return Err(Error::Invalid("ode flow needs dt > 0, t_end >= 0 and sample_every >= 1".into()));
    }
    check_metric(g0)?;
    let rho0 = invariant_geometry(space, g0)?.rho;
    let sample = |t: f64, g: &SmallMat| -> Result<OdeSample> {
        let gi = check_metric(g)?;
        let geo = invariant_geometry(space, g)?;
        Ok(OdeSample {
            t,
            torsion_norm_sq: geo.torsion_norm_sq,
            det: g.det().re,
            eigen_spread: spread(g),
            logdet_rate: geo.torsion_norm_sq - kernels::metric_trace(&rho0, &gi).re,
        })
    };
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut g = g0.clone();
    let mut samples = vec![sample(0.0, &g)?];
    let mut metrics = vec![g.clone()];
    let mut degenerated = None;
    for step in 1..=steps {
        let t = step as f64 * cfg.dt;
        let next = match rk4_step(space, &g, cfg.dt) {
            Ok(m) => m,
            Err(e) => {
                degenerated = Some(format!("t = {t}: {e}"));
                break;
            }
        };
        if next.as_row_vec().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            degenerated = Some(format!("t = {t}: non-finite metric"));
            break;
        }
        if next.min_eigenvalue() <= 0.0 || spread(&next) > cfg.max_spread {
            degenerated = Some(format!("t = {t}: eigenvalue spread {:e}", spread(&next)));
            break;
        }
        g = next;
        if step % cfg.sample_every == 0 || step == steps {
            samples.push(sample(t, &g)?);
            metrics.push(g.clone());
        }
    }
    let mut logdet_residual: f64 = 0.0;
    for w in samples.windows(3) {
        let rate = (w[2].det.ln() - w[0].det.ln()) / (w[2].t - w[0].t);
        logdet_residual = logdet_residual.max((rate - w[1].logdet_rate).abs());
    }
    Ok(OdeTrajectory { samples, metrics, logdet_residual, degenerated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneous::catalog;

    #[test]
    fn abelian_metric_is_a_fixed_point() {
        let sp = HomogeneousSpace::new(catalog::builtin("abelian4").unwrap()).unwrap();
        let mut g0 = SmallMat::identity(2);
        g0[(0, 1)] = C64::new(0.2, 0.1);
        g0[(1, 0)] = C64::new(0.2, -0.1);
        let tr = ode_flow(&sp, &g0, &OdeConfig { dt: 0.01, t_end: 1.0, ..Default::default() }).unwrap();
        assert_eq!(tr.final_metric(), &g0);
        assert!(tr.degenerated.is_none());
    }

    #[test]
    fn log_det_rate_matches_on_sl2c() {
        let sp = HomogeneousSpace::new(catalog::builtin("sl2c").unwrap()).unwrap();
        let mut g0 = SmallMat::identity(3);
        g0[(0, 2)] = C64::new(0.1, 0.2);
        g0[(2, 0)] = C64::new(0.1, -0.2);
        let cfg = OdeConfig { dt: 1e-3, t_end: 0.2, sample_every: 1, ..Default::default() };
        let tr = ode_flow(&sp, &g0, &cfg).unwrap();
        let coarse = ode_flow(&sp, &g0, &OdeConfig { dt: 2e-3, ..cfg.clone() }).unwrap();
        // The residual is the truncation error of the centered difference.
        let order = (coarse.logdet_residual / tr.logdet_residual).log2();
        assert!((order - 2.0).abs() < 0.1, "{order}");
        assert!(tr.logdet_residual < 1e-3);
        assert!(tr.samples[0].torsion_norm_sq > 0.1);
    }

    #[test]
    fn chern_ricci_form_is_metric_independent() {
        for name in catalog::NAMES {
            let sp = HomogeneousSpace::new(catalog::builtin(name).unwrap()).unwrap();
            let n = sp.n();
            let a = invariant_geometry(&sp, &SmallMat::identity(n)).unwrap().rho;
            let mut g = SmallMat::identity(n);
            g[(0, 0)] = C64::new(3.0, 0.0);
            g[(0, n - 1)] = C64::new(0.4, -0.7);
            g[(n - 1, 0)] = C64::new(0.4, 0.7);
            let b = invariant_geometry(&sp, &g).unwrap().rho;
            assert!(a.sub(&b).max_abs() < 1e-12, "{name}");
        }
    }
}
