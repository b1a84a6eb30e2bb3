//! Multi-start search for SKT metrics.
//!
//! Metrics are written `g = L L^*` with `L` lower triangular and
//! `L_aa = exp(theta_a)`. The objective `r(g) / det(g)^{2/n}` is scale
//! invariant, so after every descent step the diagonal logs are shifted to
//! sum to zero, which projects back onto `det g = 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forms::{hermitian_coordinates, SktQuadraticForm};
use super::geometry::HomogeneousSpace;
use crate::linalg::SmallMat;
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub starts: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { starts: 100, tol: 1e-10, max_iter: 5000, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct ScanResult {
    pub min_residual: f64,
    /// Minimizing metric, normalized to `det = 1`.
    pub witness: SmallMat,
    pub residuals: Vec<f64>,
    /// `n lambda_min(A^T A)`; no unit-determinant metric has a smaller residual.
    pub lower_bound: f64,
}

struct Chol {
    n: usize,
    /// `theta_a` then `(Re, Im)` of the strictly lower entries, row by row.
    p: Vec<f64>,
}

impl Chol {
    fn len(n: usize) -> usize {
        n * n
    }

    fn factor(&self) -> SmallMat {
        let n = self.n;
        let mut l = SmallMat::zeros(n);
        let mut k = n;
        for a in 0..n {
            l[(a, a)] = C64::new(self.p[a].exp(), 0.0);
            for b in 0..a {
                l[(a, b)] = C64::new(self.p[k], self.p[k + 1]);
                k += 2;
            }
        }
        l
    }

    /// `dL / dp_m`.
    fn factor_derivative(&self, l: &SmallMat, m: usize) -> SmallMat {
        let n = self.n;
        let mut d = SmallMat::zeros(n);
        if m < n {
            d[(m, m)] = l[(m, m)];
            return d;
        }
        let mut k = n;
        for a in 0..n {
            for b in 0..a {
                if m == k {
                    d[(a, b)] = C64::new(1.0, 0.0);
                } else if m == k + 1 {
                    d[(a, b)] = C64::new(0.0, 1.0);
                }
                k += 2;
            }
        }
        d
    }

    fn project(&mut self) {
        let mean = self.p[..self.n].iter().sum::<f64>() / self.n as f64;
        self.p[..self.n].iter_mut().for_each(|x| *x -= mean);
    }

    fn metric(&self) -> SmallMat {
        let l = self.factor();
        l.mul(&l.adjoint())
    }
}

/// Objective and its gradient at unit determinant.
fn objective(qf: &SktQuadraticForm, x: &Chol) -> (f64, Vec<f64>) {
    let l = x.factor();
    let g = l.mul(&l.adjoint());
    let c = hermitian_coordinates(&g);
    let r = qf.eval(&g);
    let dr = qf.gradient(&c);
    let n = x.n as f64;
    let logdet = 2.0 * x.p[..x.n].iter().sum::<f64>();
    let w = (-2.0 / n * logdet).exp();
    let grad = (0..x.p.len())
        .map(|m| {
            let dl = x.factor_derivative(&l, m);
            let dg = dl.mul(&l.adjoint()).add(&l.mul(&dl.adjoint()));
            let dc = hermitian_coordinates(&dg);
            let mut v: f64 = dr.iter().zip(&dc).map(|(a, b)| a * b).sum();
            if m < x.n {
                v -= 4.0 / n * r;
            }
            w * v
        })
        .collect();
    (w * r, grad)
}

fn descend(qf: &SktQuadraticForm, mut x: Chol, cfg: &ScanConfig) -> (f64, SmallMat) {
    x.project();
    let (mut f, mut grad) = objective(qf, &x);
    let mut step = 1.0;
    for _ in 0..cfg.max_iter {
        if f < cfg.tol {
            break;
        }
        let gn2: f64 = grad.iter().map(|v| v * v).sum();
        if gn2.sqrt() < cfg.tol {
            break;
        }
        let mut accepted = false;
        step *= 2.0;
        while step > 1e-16 {
            let mut trial = Chol { n: x.n, p: x.p.iter().zip(&grad).map(|(p, g)| p - step * g).collect() };
            trial.project();
            let (ft, gt) = objective(qf, &trial);
            if ft <= f - 1e-4 * step * gn2 {
                let stalled = f - ft <= 1e-15 * f;
                x = trial;
                f = ft;
                grad = gt;
                accepted = !stalled;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (f, x.metric())
}

/// Minimizes the SKT residual over unit-determinant invariant metrics from seeded random starts.
pub fn skt_residual_scan(space: &HomogeneousSpace, cfg: &ScanConfig) -> ScanResult {
    let n = space.n();
    let qf = SktQuadraticForm::new(space);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut residuals = Vec::with_capacity(cfg.starts);
    let mut best = (f64::INFINITY, SmallMat::identity(n));
    for _ in 0..cfg.starts.max(1) {
        let p = (0..Chol::len(n)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (f, g) = descend(&qf, Chol { n, p }, cfg);
        residuals.push(f);
        if f < best.0 {
            best = (f, g);
        }
    }
    ScanResult { min_residual: best.0, witness: best.1, residuals, lower_bound: qf.unit_det_lower_bound() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneous::catalog;

    #[test]
    fn objective_gradient_matches_finite_differences() {
        let sp = HomogeneousSpace::new(catalog::builtin("sl2c").unwrap()).unwrap();
        let qf = SktQuadraticForm::new(&sp);
        let x = Chol { n: 3, p: vec![0.1, -0.3, 0.2, 0.4, -0.1, 0.3, 0.2, -0.5, 0.1] };
        let (_, grad) = objective(&qf, &x);
        let h = 1e-6;
        for m in 0..x.p.len() {
            let mut xp = Chol { n: 3, p: x.p.clone() };
            let mut xm = Chol { n: 3, p: x.p.clone() };
            xp.p[m] += h;
            xm.p[m] -= h;
            let fd = (objective(&qf, &xp).0 - objective(&qf, &xm).0) / (2.0 * h);
            assert!((fd - grad[m]).abs() < 1e-6 * (1.0 + fd.abs()), "{m}: {fd} vs {}", grad[m]);
        }
    }

    #[test]
    fn witness_has_unit_determinant() {
        let sp = HomogeneousSpace::new(catalog::builtin("u2").unwrap()).unwrap();
        let res = skt_residual_scan(&sp, &ScanConfig { starts: 5, ..Default::default() });
        assert!((res.witness.det().re - 1.0).abs() < 1e-10);
        assert_eq!(res.residuals.len(), 5);
    }
}
