//! Pointwise Chern-geometry kernels on one Hermitian matrix and its jets.
//!
//! Index conventions used throughout:
//! * `g[(i, j)] = g_{i jbar}`, `ginv = g^{-1}` so `g^{abar b} = ginv[(a, b)]`.
//! * `gamma.get(l, i, j) = Gamma^l_{ij}`.
//! * `torsion.get(i, j, k) = T_{i j kbar}`.
//! * `omega.get(i, j, k, l) = Omega_{i jbar k lbar}`.

use num_complex::Complex64 as C64;

use crate::linalg::{SmallMat, MAX_N};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Dense rank-3 array with extent `n` per slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arr3 {
    n: usize,
    a: [C64; MAX_N * MAX_N * MAX_N],
}

impl Arr3 {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_N);
        Self { n, a: [ZERO; MAX_N * MAX_N * MAX_N] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> C64 {
        self.a[(i * MAX_N + j) * MAX_N + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: C64) {
        self.a[(i * MAX_N + j) * MAX_N + k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.n;
        let mut m = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    m = m.max(self.get(i, j, k).norm());
                }
            }
        }
        m
    }

    /// Components in row-major order over `n^3` entries.
    pub fn to_vec(&self) -> Vec<C64> {
        let n = self.n;
        let mut v = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    v.push(self.get(i, j, k));
                }
            }
        }
        v
    }
}

/// Dense rank-4 array with extent `n` per slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arr4 {
    n: usize,
    a: [C64; MAX_N * MAX_N * MAX_N * MAX_N],
}

impl Arr4 {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_N);
        Self { n, a: [ZERO; MAX_N * MAX_N * MAX_N * MAX_N] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.a[((i * MAX_N + j) * MAX_N + k) * MAX_N + l]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: C64) {
        self.a[((i * MAX_N + j) * MAX_N + k) * MAX_N + l] = v;
    }
}

/// `Gamma^l_{ij} = g^{kbar l} d_i g_{j kbar}`, from `dg[i] = d_i g`.
pub fn christoffel(dg: &[SmallMat], ginv: &SmallMat) -> Arr3 {
    let n = ginv.dim();
    let mut gam = Arr3::zeros(n);
    for (i, dgi) in dg.iter().enumerate().take(n) {
        let m = dgi.mul(ginv);
        for j in 0..n {
            for l in 0..n {
                gam.set(l, i, j, m[(j, l)]);
            }
        }
    }
    gam
}

/// `T_{ij kbar} = d_i g_{j kbar} - d_j g_{i kbar}`.
pub fn torsion(dg: &[SmallMat]) -> Arr3 {
    let n = dg[0].dim();
    let mut t = Arr3::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                t.set(i, j, k, dg[i][(j, k)] - dg[j][(i, k)]);
            }
        }
    }
    t
}

/// Chern curvature `Omega_{i jbar k lbar} = -d_i d_jbar g_{k lbar} + (d_i g . g^{-1} . d_jbar g)_{kl}`.
///
/// `dbg[j] = d_jbar g` and `ddg[i][j] = d_i d_jbar g`.
pub fn curvature(dg: &[SmallMat], dbg: &[SmallMat], ddg: &[[SmallMat; MAX_N]], ginv: &SmallMat) -> Arr4 {
    let n = ginv.dim();
    let mut om = Arr4::zeros(n);
    for i in 0..n {
        let left = dg[i].mul(ginv);
        for j in 0..n {
            let quad = left.mul(&dbg[j]);
            for k in 0..n {
                for l in 0..n {
                    om.set(i, j, k, l, quad[(k, l)] - ddg[i][j][(k, l)]);
                }
            }
        }
    }
    om
}

/// First Chern-Ricci form `rho_{i jbar} = g^{lbar k} Omega_{i jbar k lbar}`.
pub fn rho_from_curvature(om: &Arr4, ginv: &SmallMat) -> SmallMat {
    let n = ginv.dim();
    SmallMat::from_fn(n, |i, j| {
        let mut s = ZERO;
        for k in 0..n {
            for l in 0..n {
                s += ginv[(l, k)] * om.get(i, j, k, l);
            }
        }
        s
    })
    .hermitian_part()
}

/// Second Chern-Ricci form `S_{i jbar} = g^{lbar k} Omega_{k lbar i jbar}`.
pub fn s_from_curvature(om: &Arr4, ginv: &SmallMat) -> SmallMat {
    let n = ginv.dim();
    SmallMat::from_fn(n, |i, j| {
        let mut s = ZERO;
        for k in 0..n {
            for l in 0..n {
                s += ginv[(l, k)] * om.get(k, l, i, j);
            }
        }
        s
    })
    .hermitian_part()
}

/// Torsion quadratic `Q_{i jbar} = g^{lbar k} g^{nbar m} T_{i k nbar} conj(T_{j l mbar})`.
///
/// Evaluated as `sum_{k,n} T_i[k,n] conj((g^{-1} T_j g^{-1})[k,n])`, a Gram
/// matrix of the slices `T_i` under a positive inner product.
pub fn torsion_quadratic(t: &Arr3, ginv: &SmallMat) -> SmallMat {
    let n = ginv.dim();
    let slices: Vec<SmallMat> = (0..n).map(|i| SmallMat::from_fn(n, |k, m| t.get(i, k, m))).collect();
    let raised: Vec<SmallMat> = slices.iter().map(|s| ginv.mul(s).mul(ginv)).collect();
    SmallMat::from_fn(n, |i, j| {
        let mut s = ZERO;
        for k in 0..n {
            for m in 0..n {
                s += slices[i][(k, m)] * raised[j][(k, m)].conj();
            }
        }
        s
    })
    .hermitian_part()
}

/// Torsion one-form `theta_i = g^{lbar k} T_{k i lbar}`.
pub fn torsion_trace(t: &Arr3, ginv: &SmallMat) -> Vec<C64> {
    let n = ginv.dim();
    (0..n)
        .map(|i| {
            let mut s = ZERO;
            for k in 0..n {
                for l in 0..n {
                    s += ginv[(l, k)] * t.get(k, i, l);
                }
            }
            s
        })
        .collect()
}

/// Full tensor norm `|T|^2 = T_{ij kbar} conj(T_{ab cbar}) g^{abar i} g^{bbar j} g^{kbar c}`
/// (equal to `tr_g Q`).
pub fn torsion_norm_sq(t: &Arr3, ginv: &SmallMat) -> f64 {
    let n = ginv.dim();
    let mut s = ZERO;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let tv = t.get(i, j, k);
                if tv == ZERO {
                    continue;
                }
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            s += tv * t.get(a, b, c).conj() * ginv[(a, i)] * ginv[(b, j)] * ginv[(k, c)];
                        }
                    }
                }
            }
        }
    }
    s.re
}

/// `tr_g A = g^{jbar i} A_{i jbar}` for a (1,1)-tensor.
pub fn metric_trace(a: &SmallMat, ginv: &SmallMat) -> C64 {
    let n = a.dim();
    let mut s = ZERO;
    for i in 0..n {
        for j in 0..n {
            s += ginv[(j, i)] * a[(i, j)];
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample_metric() -> SmallMat {
        SmallMat::from_row_slice(2, &[c(1.3, 0.0), c(0.2, -0.1), c(0.2, 0.1), c(0.9, 0.0)])
    }

    fn sample_torsion() -> Arr3 {
        let mut t = Arr3::zeros(2);
        let vals = [c(0.3, 0.1), c(-0.2, 0.4)];
        for k in 0..2 {
            t.set(0, 1, k, vals[k]);
            t.set(1, 0, k, -vals[k]);
        }
        t
    }

    #[test]
    fn torsion_quadratic_matches_naive_contraction() {
        let g = sample_metric();
        let gi = g.inverse().unwrap();
        let t = sample_torsion();
        let q = torsion_quadratic(&t, &gi);
        for i in 0..2 {
            for j in 0..2 {
                let mut s = ZERO;
                for k in 0..2 {
                    for l in 0..2 {
                        for m in 0..2 {
                            for nn in 0..2 {
                                s += gi[(l, k)] * gi[(nn, m)] * t.get(i, k, nn) * t.get(j, l, m).conj();
                            }
                        }
                    }
                }
                assert!((q[(i, j)] - s).norm() < 1e-14);
            }
        }
        assert!(q.min_eigenvalue() >= -1e-14);
        assert!((metric_trace(&q, &gi).re - torsion_norm_sq(&t, &gi)).abs() < 1e-14);
    }
}
