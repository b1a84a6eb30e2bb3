use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the number of grid points of a single field.
pub const MAX_GRID_POINTS: usize = 1 << 24;

/// Uniform periodic grid on the standard torus `C^n / Z^{2n}`.
///
/// Real coordinates are ordered `(x^1, y^1, ..., x^n, y^n)` with
/// `z^j = x^j + i y^j` and unit periods. The linear index of a point is
/// row-major in that axis order (last axis fastest).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    points: usize,
}

impl GridSpec {
    pub fn new(n: usize, points: usize) -> Result<Self> {
        if n == 0 || n > crate::linalg::MAX_N {
            return Err(Error::Grid(format!("complex dimension {n} not in 1..={}", crate::linalg::MAX_N)));
        }
        if points < 8 || points % 2 != 0 {
            return Err(Error::Grid(format!("points per axis must be even and >= 8, got {points}")));
        }
        let total = (points as u128).pow(2 * n as u32);
        if total > MAX_GRID_POINTS as u128 {
            return Err(Error::Grid(format!(
                "{points}^{} = {total} points exceeds the budget of {MAX_GRID_POINTS}",
                2 * n
            )));
        }
        Ok(Self { n, points })
    }

    /// Complex dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Points per real axis.
    pub fn points(&self) -> usize {
        self.points
    }

    pub fn axes(&self) -> usize {
        2 * self.n
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.axes() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.points as f64
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.points.pow((self.axes() - 1 - axis) as u32)
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.axes()];
        for a in (0..self.axes()).rev() {
            out[a] = idx % self.points;
            idx /= self.points;
        }
        out
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &m| acc * self.points + (m % self.points))
    }

    /// Real coordinates `(x^1, y^1, ...)` of a grid point.
    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let h = self.spacing();
        self.multi_index(idx).into_iter().map(|m| m as f64 * h).collect()
    }

    /// Samples `f(coords)` at every grid point.
    pub fn sample<T>(&self, mut f: impl FnMut(&[f64]) -> T) -> Vec<T> {
        (0..self.len()).map(|p| f(&self.coords(p))).collect()
    }

    /// Signed integer wavenumber of FFT bin `m` along one axis.
    pub fn wavenumber(&self, m: usize) -> i64 {
        let n = self.points as i64;
        let m = m as i64;
        if m <= n / 2 {
            m
        } else {
            m - n
        }
    }
}
