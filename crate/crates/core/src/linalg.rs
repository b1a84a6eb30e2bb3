//! Small dense complex matrices used by the pointwise kernels.
//!
//! Every grid point carries an `n x n` Hermitian matrix with `n <= MAX_N`, so
//! the kernels work on stack-allocated storage instead of heap matrices.

use num_complex::Complex64 as C64;

pub const MAX_N: usize = 4;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Row-major `n x n` complex matrix with fixed backing storage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallMat {
    n: usize,
    a: [C64; MAX_N * MAX_N],
}

impl SmallMat {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1 && n <= MAX_N, "matrix size {n} out of range");
        Self { n, a: [ZERO; MAX_N * MAX_N] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_row_slice(n: usize, v: &[C64]) -> Self {
        assert_eq!(v.len(), n * n);
        Self::from_fn(n, |i, j| v[i * n + j])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(i, j)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_fn(self.n, |i, j| self[(i, j)] * s)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::from_fn(self.n, |i, j| self[(i, j)] + o[(i, j)])
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::from_fn(self.n, |i, j| self[(i, j)] - o[(i, j)])
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                for j in 0..n {
                    m[(i, j)] += a * o[(k, j)];
                }
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// `(M + M^*) / 2`, exact Hermitian by construction.
    pub fn hermitian_part(&self) -> Self {
        let n = self.n;
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(self[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let v = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.a[..].iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                d = d.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        d
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut a = *self;
        let mut inv = Self::identity(n);
        for col in 0..n {
            let piv = (col..n).max_by(|&r, &s| a[(r, col)].norm().total_cmp(&a[(s, col)].norm()))?;
            if a[(piv, col)].norm() == 0.0 {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    a.a.swap(piv * MAX_N + j, col * MAX_N + j);
                    inv.a.swap(piv * MAX_N + j, col * MAX_N + j);
                }
            }
            let p = a[(col, col)].inv();
            for j in 0..n {
                a[(col, j)] *= p;
                inv[(col, j)] *= p;
            }
            for r in 0..n {
                if r != col {
                    let f = a[(r, col)];
                    if f != ZERO {
                        for j in 0..n {
                            let (ac, ic) = (a[(col, j)], inv[(col, j)]);
                            a[(r, j)] -= f * ac;
                            inv[(r, j)] -= f * ic;
                        }
                    }
                }
            }
        }
        Some(inv)
    }

    /// Determinant by LU elimination.
    pub fn det(&self) -> C64 {
        let n = self.n;
        let mut a = *self;
        let mut det = C64::new(1.0, 0.0);
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&r, &s| a[(r, col)].norm().total_cmp(&a[(s, col)].norm()))
                .unwrap();
            if a[(piv, col)].norm() == 0.0 {
                return ZERO;
            }
            if piv != col {
                for j in 0..n {
                    a.a.swap(piv * MAX_N + j, col * MAX_N + j);
                }
                det = -det;
            }
            let p = a[(col, col)];
            det *= p;
            for r in (col + 1)..n {
                let f = a[(r, col)] / p;
                for j in col..n {
                    let v = a[(col, j)];
                    a[(r, j)] -= f * v;
                }
            }
        }
        det
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        match n {
            1 => vec![self[(0, 0)].re],
            2 => {
                let a = self[(0, 0)].re;
                let d = self[(1, 1)].re;
                let b = (self[(0, 1)] + self[(1, 0)].conj()) * 0.5;
                let m = 0.5 * (a + d);
                let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
                vec![m - r, m + r]
            }
            _ => {
                let h = self.hermitian_part();
                let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| h[(i, j)]);
                let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(dm).eigenvalues.iter().copied().collect();
                ev.sort_by(f64::total_cmp);
                ev
            }
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.hermitian_eigenvalues()[0]
    }

    pub fn as_row_vec(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                v.push(self[(i, j)]);
            }
        }
        v
    }
}

impl std::ops::Index<(usize, usize)> for SmallMat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.n && j < self.n);
        &self.a[i * MAX_N + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for SmallMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.n && j < self.n);
        &mut self.a[i * MAX_N + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> SmallMat {
        let mut m = SmallMat::from_fn(n, |i, j| {
            C64::new(0.3 * (i as f64 + 1.0) - 0.2 * j as f64, 0.1 * (i as f64 - j as f64))
        });
        m = m.mul(&m.adjoint());
        for i in 0..n {
            m[(i, i)] += C64::new(1.0, 0.0);
        }
        m
    }

    #[test]
    fn inverse_roundtrip() {
        for n in 1..=MAX_N {
            let m = sample(n);
            let p = m.mul(&m.inverse().unwrap());
            assert!(p.sub(&SmallMat::identity(n)).max_abs() < 1e-13);
        }
    }

    #[test]
    fn det_matches_eigenvalue_product() {
        for n in 1..=MAX_N {
            let m = sample(n);
            let prod: f64 = m.hermitian_eigenvalues().iter().product();
            assert!((m.det().re - prod).abs() < 1e-12 * prod.abs().max(1.0));
            assert!(m.det().im.abs() < 1e-12);
        }
    }

    #[test]
    fn singular_has_no_inverse() {
        let m = SmallMat::zeros(2);
        assert!(m.inverse().is_none());
    }
}
